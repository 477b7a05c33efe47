import itertools

import numpy as np
import pytest

from wpcsma import (InvalidParameterError, backoff_energy,
                    collision_transmit_energy, constraint_slack, cycle_energy,
                    data_energy, energy_coefficients, evaluate,
                    success_transmit_energy, tau_from_alpha)
from wpcsma.mac import window_from_alpha
from wpcsma.timing import frame_times

from conftest import PROTO, make_node, make_scenario, random_point, random_scenario


def test_backoff_energy_minimum_window():
    node = make_node()
    assert backoff_energy(PROTO, node.power, 1) == pytest.approx(0.34e-6,
                                                                 rel=1e-12)


def test_backoff_energy_linear_in_w():
    node = make_node()
    vals = [backoff_energy(PROTO, node.power, w) for w in range(1, 40)]
    diffs = np.diff(vals)
    assert diffs == pytest.approx(np.full(38, PROTO.sigma * 10e-3 / 2),
                                  rel=1e-12)


def test_backoff_energy_alpha_form():
    # E_bo == B/alpha - m*sigma*P_L + T_difs*P_L with W recovered from alpha
    node = make_node()
    b = PROTO.sigma * node.power.p_listen
    rng = np.random.default_rng(0)
    for _ in range(30):
        m = float(rng.integers(2, 200))
        alpha = float(rng.uniform(0.001, 0.5))
        w = window_from_alpha(alpha, m)
        direct = (PROTO.t_difs + (w - 1) / 2 * PROTO.sigma) * node.power.p_listen
        via_alpha = (b / alpha - m * PROTO.sigma * node.power.p_listen
                     + PROTO.t_difs * node.power.p_listen)
        assert direct == pytest.approx(via_alpha, rel=1e-9)


def test_backoff_energy_rejects_bad_window():
    with pytest.raises(InvalidParameterError):
        backoff_energy(PROTO, make_node().power, 0.5)


def test_data_energy_no_peers_is_success_energy():
    node = make_node()
    times = frame_times(PROTO, node.link)
    expect = success_transmit_energy(PROTO, node.power, times, 10)
    assert data_energy(PROTO, node.power, times, 10, []) == pytest.approx(
        expect, rel=1e-12)


def test_data_energy_all_peers_certain_is_collision_energy():
    node = make_node()
    times = frame_times(PROTO, node.link)
    got = data_energy(PROTO, node.power, times, 10, [1 - 1e-12, 1 - 1e-12])
    assert got == pytest.approx(
        collision_transmit_energy(PROTO, node.power, times), rel=1e-9)


def test_data_energy_matches_peer_enumeration():
    # expectation over every pattern of the peers transmitting or not
    node = make_node()
    times = frame_times(PROTO, node.link)
    taus = [0.1, 0.1]
    eps_s = success_transmit_energy(PROTO, node.power, times, 10)
    eps_c = collision_transmit_energy(PROTO, node.power, times)
    expect = 0.0
    for pattern in itertools.product((0, 1), repeat=2):
        pr = np.prod([taus[j] if b else 1 - taus[j]
                      for j, b in enumerate(pattern)])
        expect += pr * (eps_s if sum(pattern) == 0 else eps_c)
    got = data_energy(PROTO, node.power, times, 10, taus)
    assert got == pytest.approx(expect, rel=1e-12)


def test_data_energy_between_extremes():
    rng = np.random.default_rng(1)
    node = make_node()
    times = frame_times(PROTO, node.link)
    for _ in range(30):
        n = float(rng.uniform(1, 40))
        taus = rng.uniform(0.01, 0.6, int(rng.integers(1, 6)))
        val = data_energy(PROTO, node.power, times, n, taus)
        eps_s = success_transmit_energy(PROTO, node.power, times, n)
        eps_c = collision_transmit_energy(PROTO, node.power, times)
        assert min(eps_s, eps_c) - 1e-18 <= val <= max(eps_s, eps_c) + 1e-18


def test_cycle_energy_acquisition_and_processing():
    scn = make_scenario([make_node()])
    br = cycle_energy(scn, 0, [10.0], [0.03])
    assert br.e_acq == pytest.approx(0.45e-6, rel=1e-12)
    assert br.e_proc == pytest.approx(10 * 0.108e-6, rel=1e-12)
    assert br.e_total == pytest.approx(
        br.e_acq + br.e_proc + br.e_tx_total + br.e_bg, rel=1e-12)
    assert br.budget == pytest.approx(15e-3 * 32 * 9e-6, rel=1e-12)


def test_cycle_components_nonnegative_in_physical_regime():
    # windows >= 1 keep every component nonnegative
    rng = np.random.default_rng(2)
    for _ in range(30):
        scn = random_scenario(rng)
        n = np.array([float(rng.integers(1, node.duty.n_max + 1))
                      for node in scn.nodes])
        m = np.array([node.duty.sleep_slots(v)
                      for node, v in zip(scn.nodes, n)])
        w = rng.integers(1, 64, scn.n_nodes).astype(float)
        tau = 2 / (w + 2 * m + 1)
        alpha = tau / (1 - tau)
        for i in range(scn.n_nodes):
            br = cycle_energy(scn, i, n, alpha)
            assert br.e_acq >= 0 and br.e_proc >= 0
            assert br.e_backoff >= 0 and br.e_data >= 0
            assert br.e_total >= 0


def test_coefficients_match_hand_values():
    scn = make_scenario([make_node()])
    co = energy_coefficients(scn, 0)
    assert co.b == pytest.approx(9e-8, rel=1e-12)
    assert co.c == pytest.approx(((400 + 112) / 11e6) * 15e-3, rel=1e-12)
    assert co.a < 0  # each extra sample is net energy-positive at Table values
    assert co.per_sample_acq == pytest.approx(5e-3 * 9e-6, rel=1e-12)
    assert co.per_sample_proc == pytest.approx(6e-3 * 2 * 9e-6, rel=1e-12)


def test_coefficient_form_equals_direct_energy():
    # master identity: budget - e_total == slack, for random scenarios/points
    rng = np.random.default_rng(3)
    for _ in range(200):
        scn = random_scenario(rng)
        n, alpha = random_point(rng, scn)
        i = int(rng.integers(0, scn.n_nodes))
        br = cycle_energy(scn, i, n, alpha)
        slack = constraint_slack(scn, i, n, alpha)
        direct = br.budget - br.e_total
        scale = max(abs(direct), abs(slack), br.budget)
        assert abs(direct - slack) <= 1e-12 * scale


def test_energies_scale_linearly_with_power():
    scn = make_scenario([make_node(), make_node(n_max=20)])
    k = 3.7
    scaled_nodes = []
    for node in scn.nodes:
        scaled_nodes.append(make_node(
            n_max=node.duty.n_max,
            p_tx=node.power.p_tx * k, p_rx=node.power.p_rx * k,
            p_listen=node.power.p_listen * k, p_acq=node.power.p_acq * k,
            p_proc=node.power.p_proc * k, e_bg=node.power.e_bg * k,
            phi=node.power.phi * k))
    scn2 = make_scenario(scaled_nodes)
    n = np.array([3.0, 7.0])
    alpha = np.array([0.1, 0.2])
    for i in range(2):
        b1 = cycle_energy(scn, i, n, alpha)
        b2 = cycle_energy(scn2, i, n, alpha)
        assert b2.e_total == pytest.approx(k * b1.e_total, rel=1e-12)
        assert b2.budget == pytest.approx(k * b1.budget, rel=1e-12)


def test_slack_sign_detects_violation():
    # blow up the transmit power until the constraint must break
    scn = make_scenario([make_node(p_tx=500e-3), make_node()])
    slack = constraint_slack(scn, 0, [10.0, 10.0], [0.4, 0.01])
    br = cycle_energy(scn, 0, [10.0, 10.0], [0.4, 0.01])
    assert (slack >= 0) == (br.e_total <= br.budget)
    assert slack < 0


def test_example1_optimum_slacks(solved_example1):
    budgets = np.array([b.budget for b in solved_example1.energy])
    rel = solved_example1.slacks / budgets
    assert abs(rel[0]) <= 1e-6
    assert np.all(rel[1:] >= 1e-3)
