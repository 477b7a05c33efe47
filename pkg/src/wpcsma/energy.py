"""Per-cycle energy model and the coefficient form of energy neutrality.

A cycle consumes energy for sample acquisition, processing, DCF backoff
listening, the data exchange itself (success or collision) and background
tasks; it harvests phi * m * sigma while the radio sleeps. The constraint
"consumed <= harvested" rearranges exactly into

    a*n + b/alpha + (c*n + d) * prod_{j != i} 1/(1+alpha_j) <= f

which is the form the optimizer consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mac import tau_from_alpha, window_from_alpha
from .params import PowerProfile, ProtocolParams, Scenario, require
from .timing import FrameTimes, frame_times


def backoff_energy(p: ProtocolParams, power: PowerProfile, w: float) -> float:
    """Expected listening energy of one backoff: DIFS plus (w-1)/2 slots.

    Countdown deferred behind others' transmissions is carrier-sensed
    virtually and costs nothing. Negative for w < 1 - 2*DIFS/sigma, which can
    only be reached through the alpha-extrapolated window.
    """
    require(w >= 1, "contention window must be >= 1")
    return (p.t_difs + (w - 1.0) / 2.0 * p.sigma) * power.p_listen


def _backoff_energy_extrapolated(p, power, w):
    # same formula without the w >= 1 guard, for the alpha-parametrized model
    return (p.t_difs + (w - 1.0) / 2.0 * p.sigma) * power.p_listen


def success_transmit_energy(p: ProtocolParams, power: PowerProfile,
                            times: FrameTimes, n: float) -> float:
    """Energy of a successful exchange: RTS+data at TX, CTS+ACK at RX, 2 SIFS."""
    return ((p.t_rts + times.amsdu(n)) * power.p_tx
            + (p.t_cts + p.t_ack) * power.p_rx
            + 2.0 * p.t_sifs * power.p_listen)


def collision_transmit_energy(p: ProtocolParams, power: PowerProfile,
                              times: FrameTimes) -> float:
    """Energy of a collided attempt: the RTS plus listening out the timeout."""
    return p.t_rts * power.p_tx + times.timeout * power.p_listen


def data_energy(p: ProtocolParams, power: PowerProfile, times: FrameTimes,
                n: float, taus_others) -> float:
    """Expected exchange energy: success if every other node stays quiet."""
    taus_others = np.asarray(taus_others, dtype=float)
    require(np.all((taus_others > 0.0) & (taus_others < 1.0)) or taus_others.size == 0,
            "each tau must be in (0, 1)")
    p_quiet = float(np.prod(1.0 - taus_others)) if taus_others.size else 1.0
    eps_succ = success_transmit_energy(p, power, times, n)
    eps_col = collision_transmit_energy(p, power, times)
    return p_quiet * eps_succ + (1.0 - p_quiet) * eps_col


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-cycle energy components of one node, plus its harvest budget.

    e_backoff (and with it e_tx_total / e_total) extrapolates below zero when
    the recovered window is far under one slot; see `backoff_energy`.
    """

    e_acq: float
    e_proc: float
    e_backoff: float
    e_data: float
    e_tx_total: float
    e_bg: float
    e_total: float
    budget: float

    @property
    def slack(self) -> float:
        return self.budget - self.e_total


def cycle_energy(scenario: Scenario, i: int, n, alpha) -> EnergyBreakdown:
    """Full per-cycle energy breakdown for node i at a decision point."""
    n = np.asarray(n, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    require(np.all(n >= 1.0), "each n must be >= 1")
    require(np.all(alpha > 0.0), "each alpha must be > 0")
    p = scenario.protocol
    node = scenario.nodes[i]
    times = frame_times(p, node.link)

    m = node.duty.sleep_slots(float(n[i]))
    w = window_from_alpha(float(alpha[i]), m)
    taus_others = tau_from_alpha(np.delete(alpha, i))

    e_acq = float(n[i]) * node.power.p_acq * p.sigma
    e_proc = float(n[i]) * node.power.p_proc * node.duty.g * p.sigma
    e_bo = _backoff_energy_extrapolated(p, node.power, w)
    e_data = data_energy(p, node.power, times, float(n[i]), taus_others)
    e_tx = e_bo + e_data
    e_total = e_acq + e_proc + e_tx + node.power.e_bg
    budget = node.power.phi * m * p.sigma
    return EnergyBreakdown(e_acq=e_acq, e_proc=e_proc, e_backoff=e_bo,
                           e_data=e_data, e_tx_total=e_tx,
                           e_bg=node.power.e_bg, e_total=e_total,
                           budget=budget)


@dataclass(frozen=True)
class EnergyCoefficients:
    """Coefficients of the rearranged energy-neutrality constraint.

    slack = f - a*n - b/alpha - (c*n + d) * prod_{j != i} 1/(1+alpha_j).
    a folds the per-sample costs against the per-sample harvest and listening
    credit; b is the backoff listening per unit of 1/alpha; c and d split the
    success-minus-collision energy gap into its n-proportional and fixed
    parts; f collects every decision-independent term.
    """

    a: float
    b: float
    c: float
    d: float
    f: float
    per_sample_acq: float
    per_sample_proc: float


def energy_coefficients(scenario: Scenario, i: int) -> EnergyCoefficients:
    """Constraint coefficients of node i (decision-independent)."""
    p = scenario.protocol
    node = scenario.nodes[i]
    times = frame_times(p, node.link)
    pw = node.power
    eps_acq = pw.p_acq * p.sigma
    eps_proc = pw.p_proc * node.duty.g * p.sigma
    a = eps_acq + eps_proc - (pw.phi + pw.p_listen) * node.duty.h * p.sigma
    b = p.sigma * pw.p_listen
    c = times.per_sample * pw.p_tx
    d = ((p.t_cts + p.t_ack) * pw.p_rx
         + (2.0 * p.t_sifs - times.timeout) * pw.p_listen
         + times.overhead * pw.p_tx)
    f = (pw.phi * node.duty.g * p.sigma - pw.e_bg
         - (p.t_difs + times.timeout - node.duty.g * p.sigma) * pw.p_listen
         - p.t_rts * pw.p_tx)
    return EnergyCoefficients(a=a, b=b, c=c, d=d, f=f,
                              per_sample_acq=eps_acq,
                              per_sample_proc=eps_proc)


def constraint_slack(scenario: Scenario, i: int, n, alpha) -> float:
    """Energy-neutrality slack of node i; >= 0 iff the constraint holds.

    Equals budget minus total cycle energy, computed through the coefficient
    form.
    """
    n = np.asarray(n, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    require(float(alpha[i]) > 0.0, "alpha must be > 0")
    co = energy_coefficients(scenario, i)
    prod_inv = float(np.prod(1.0 + np.delete(alpha, i))) ** -1
    return (co.f - co.a * float(n[i]) - co.b / float(alpha[i])
            - (co.c * float(n[i]) + co.d) * prod_inv)
