"""Proportional-fair allocation of samples per cycle and attempt rates.

Maximizes the sum of log throughputs over (n, alpha) subject to the box
constraints 1 <= n_i <= n_max_i, 0 < alpha_i <= 0.5 and per-node energy
neutrality. The objective is a difference of concave functions along each
block, so each block is solved by iterating a linearized surrogate whose
per-coordinate maximizer (of log x - gamma*x over an interval) is closed
form; block coordinate descent alternates a full n update with a
Gauss-Seidel sweep over the alpha coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import energy, mac
from .params import InfeasibleError, InvalidStateError, Scenario, require
from .timing import frame_times


@dataclass(frozen=True)
class DecisionVector:
    """The optimization variables: per-node sample counts and attempt odds."""

    n: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n", np.asarray(self.n, dtype=float))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        require(self.n.shape == self.alpha.shape, "n and alpha lengths differ")
        require(np.all(self.n >= 1.0), "each n must be >= 1")
        require(np.all(self.alpha > 0.0), "each alpha must be > 0")
        require(np.all(self.alpha <= 0.5), "each alpha must be <= 0.5")


@dataclass(frozen=True)
class OptimizerConfig:
    outer_tol: float = 1e-8       # relative utility change across outer iters
    inner_tol: float = 1e-10      # relative objective change inside a block
    max_outer_iters: int = 200
    max_inner_iters: int = 100
    alpha_floor: float = 1e-6     # numerical guard at the open alpha > 0 end
    move_tol: float = 1e-9        # max coordinate move across outer iters

    def __post_init__(self):
        require(self.outer_tol > 0 and self.inner_tol > 0, "tolerances must be > 0")
        require(self.max_outer_iters >= 1 and self.max_inner_iters >= 1,
                "iteration caps must be >= 1")


@dataclass
class _Model:
    """Scenario constants flattened into arrays for the solver hot path."""

    n: int
    sigma_ratio: float      # sigma / t_col
    t_col: float
    per_ratio: np.ndarray   # per-sample duration / t_col
    ovh_ratio: np.ndarray   # success overhead / t_col - 1
    payload: np.ndarray
    n_max: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    f: np.ndarray


def _model(scenario: Scenario) -> _Model:
    p = scenario.protocol
    times = [frame_times(p, node.link) for node in scenario.nodes]
    t_col = times[0].collision
    coeffs = [energy.energy_coefficients(scenario, i)
              for i in range(scenario.n_nodes)]
    return _Model(
        n=scenario.n_nodes,
        sigma_ratio=p.sigma / t_col,
        t_col=t_col,
        per_ratio=np.array([t.per_sample / t_col for t in times]),
        ovh_ratio=np.array([t.success_overhead / t_col - 1.0 for t in times]),
        payload=np.array([node.link.l for node in scenario.nodes]),
        n_max=np.array([float(node.duty.n_max) for node in scenario.nodes]),
        a=np.array([co.a for co in coeffs]),
        b=np.array([co.b for co in coeffs]),
        c=np.array([co.c for co in coeffs]),
        d=np.array([co.d for co in coeffs]),
        f=np.array([co.f for co in coeffs]),
    )


def _load(md: _Model, n, alpha) -> float:
    # channel-load factor X, the shared throughput denominator
    return (md.sigma_ratio
            + float(np.sum(md.per_ratio * n * alpha))
            + float(np.sum(md.ovh_ratio * alpha))
            + float(np.prod(1.0 + alpha)) - 1.0)


def _utility_raw(md: _Model, n, alpha) -> float:
    x = _load(md, n, alpha)
    s = alpha * n * md.payload / (x * md.t_col)
    if np.any(s <= 0.0) or not np.isfinite(x):
        raise InvalidStateError("throughput must be positive")
    return float(np.sum(np.log(s)))


def utility(scenario: Scenario, dv: DecisionVector) -> float:
    """Sum of natural-log node throughputs at a decision point."""
    md = _model(scenario)
    require(np.all(dv.n <= md.n_max + 1e-12), "n exceeds a node's n_max")
    return _utility_raw(md, dv.n, dv.alpha)


def argmax_log_minus_linear(gamma: float, lo: float, hi: float) -> float:
    """Maximizer of log(x) - gamma*x over [lo, hi] (closed form)."""
    require(lo <= hi and lo > 0, "interval must satisfy 0 < lo <= hi")
    if gamma <= 0.0:
        return hi
    return min(max(1.0 / gamma, lo), hi)


def sample_intervals(scenario: Scenario, alpha):
    """Feasible per-node sample intervals [lo, hi] at fixed attempt odds.

    Intersects the 1..n_max box with each node's energy-neutrality constraint,
    which is linear in that node's own n once alpha is fixed. Depending on the
    sign of the linear coefficient the energy constraint caps n from above
    (extra samples cost net energy) or from below (extra samples harvest net
    energy). Raises with a per-node diagnosis when any interval is empty.
    """
    md = _model(scenario)
    alpha = np.asarray(alpha, dtype=float)
    lo = np.ones(md.n)
    hi = md.n_max.copy()
    problems = []
    prod_all = float(np.prod(1.0 + alpha))
    for i in range(md.n):
        prod_inv = (1.0 + alpha[i]) / prod_all
        k = md.a[i] + md.c[i] * prod_inv
        r = md.f[i] - md.b[i] / alpha[i] - md.d[i] * prod_inv
        if k > 0.0:
            hi[i] = min(hi[i], r / k)
        elif k < 0.0:
            lo[i] = max(lo[i], r / k)
        elif r < 0.0:
            problems.append(f"node {i}: energy constraint unsatisfiable at any "
                            f"sample count (deficit {-r:.3e} J)")
            continue
        if lo[i] > hi[i]:
            # a constraint active to rounding error collapses the interval
            if lo[i] - hi[i] <= 1e-9 * max(1.0, abs(hi[i])):
                lo[i] = hi[i]
            else:
                problems.append(f"node {i}: feasible sample range is empty "
                                f"(needs n in [{lo[i]:.4g}, {hi[i]:.4g}], "
                                f"box is [1, {md.n_max[i]:.0f}])")
    if problems:
        raise InfeasibleError("energy budget admits no sample count", problems)
    return lo, hi


def solve_n_block(scenario: Scenario, alpha, n0, cfg: OptimizerConfig | None = None):
    """Best sample counts at fixed attempt odds (iterated linearization).

    Each iteration replaces the concave log-load term by its tangent at the
    current point; the surrogate separates per node and is maximized in
    closed form over the feasible box. The true block objective is
    non-decreasing along the iterates.
    """
    cfg = cfg or OptimizerConfig()
    md = _model(scenario)
    alpha = np.asarray(alpha, dtype=float)
    n = np.clip(np.asarray(n0, dtype=float), 1.0, md.n_max)
    lo, hi = sample_intervals(scenario, alpha)
    slope = md.per_ratio * alpha  # dX/dn_i, constant
    f_prev = None
    for _ in range(cfg.max_inner_iters):
        x = _load(md, n, alpha)
        n = np.array([argmax_log_minus_linear(md.n * slope[i] / x, lo[i], hi[i])
                      for i in range(md.n)])
        f_cur = float(np.sum(np.log(n))) - md.n * np.log(_load(md, n, alpha))
        if f_prev is not None and abs(f_cur - f_prev) <= cfg.inner_tol * max(1.0, abs(f_cur)):
            break
        f_prev = f_cur
    return n


def attempt_interval(scenario: Scenario, n, alpha, i: int,
                     floor: float = 1e-6):
    """Feasible interval for node i's attempt odds, all else fixed.

    The lower end comes from node i's own energy constraint (backoff
    listening grows like 1/alpha) and from every other node's constraint
    (node i attempting more often makes the others' transmissions collide,
    which costs them less than a full exchange). Raises when empty.
    """
    md = _model(scenario)
    n = np.asarray(n, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    prod_all = float(np.prod(1.0 + alpha))
    lo = floor
    hi = 0.5
    prod_inv_i = (1.0 + alpha[i]) / prod_all
    rhs_own = md.f[i] - md.a[i] * n[i] - (md.c[i] * n[i] + md.d[i]) * prod_inv_i
    if rhs_own <= 0.0:
        raise InfeasibleError(
            "energy budget admits no attempt rate",
            [f"node {i}: backoff listening exceeds the remaining budget by "
             f"{-rhs_own:.3e} J even before the 1/alpha term"])
    lo = max(lo, md.b[i] / rhs_own)
    for j in range(md.n):
        if j == i:
            continue
        # node j's constraint as a function of alpha_i
        prod_k = prod_all / ((1.0 + alpha[i]) * (1.0 + alpha[j]))
        k_j = (md.c[j] * n[j] + md.d[j]) / prod_k
        r_j = md.f[j] - md.a[j] * n[j] - md.b[j] / alpha[j]
        if k_j > 0.0:
            if r_j <= 0.0:
                raise InfeasibleError(
                    "energy budget admits no attempt rate",
                    [f"node {j}: constraint unsatisfiable for any alpha of "
                     f"node {i} (deficit {-r_j:.3e} J)"])
            lo = max(lo, k_j / r_j - 1.0)
        elif k_j < 0.0 and r_j < 0.0:
            hi = min(hi, k_j / r_j - 1.0)
        elif k_j == 0.0 and r_j < 0.0:
            raise InfeasibleError(
                "energy budget admits no attempt rate",
                [f"node {j}: constraint unsatisfiable (deficit {-r_j:.3e} J)"])
    if lo > hi:
        if lo - hi <= 1e-9:
            lo = hi
        else:
            raise InfeasibleError(
                "energy budget admits no attempt rate",
                [f"node {i}: attempt odds must be >= {lo:.4g} for energy "
                 f"neutrality but <= {hi:.4g} is required"])
    return lo, hi


def solve_alpha_block(scenario: Scenario, n, alpha, i: int,
                      cfg: OptimizerConfig | None = None) -> float:
    """Best attempt odds for node i, all else fixed (iterated linearization).

    The load factor is affine in alpha_i, so the concave log-load term is
    linearized at the current iterate and log(alpha) - gamma*alpha is
    maximized in closed form on the feasible interval.
    """
    cfg = cfg or OptimizerConfig()
    md = _model(scenario)
    n = np.asarray(n, dtype=float)
    alpha = np.asarray(alpha, dtype=float).copy()
    lo, hi = attempt_interval(scenario, n, alpha, i, cfg.alpha_floor)
    prod_others = float(np.prod(1.0 + alpha)) / (1.0 + alpha[i])
    slope = md.per_ratio[i] * n[i] + md.ovh_ratio[i] + prod_others
    alpha[i] = min(max(alpha[i], lo), hi)
    f_prev = None
    for _ in range(cfg.max_inner_iters):
        x = _load(md, n, alpha)
        alpha[i] = argmax_log_minus_linear(md.n * slope / x, lo, hi)
        f_cur = np.log(alpha[i]) - md.n * np.log(_load(md, n, alpha))
        if f_prev is not None and abs(f_cur - f_prev) <= cfg.inner_tol * max(1.0, abs(f_cur)):
            break
        f_prev = f_cur
    return float(alpha[i])


def _slack_one(md: _Model, n, alpha, i: int) -> float:
    prod_inv = (1.0 + alpha[i]) / float(np.prod(1.0 + alpha))
    return (md.f[i] - md.a[i] * n[i] - md.b[i] / alpha[i]
            - (md.c[i] * n[i] + md.d[i]) * prod_inv)


def _any_energy_bound_active(md: _Model, n, alpha, rel: float = 1e-7) -> bool:
    # pair moves only help when an energy constraint pins coordinates;
    # an alpha pinned by (17)/(18) leaves that node's slack at exactly 0
    budgets = np.abs(md.f) + np.abs(md.a) * n + md.b / alpha
    return any(_slack_one(md, n, alpha, i) <= rel * max(budgets[i], 1e-30)
               for i in range(md.n))


def _pair_sweep(md: _Model, n, alpha, floor: float) -> float:
    """One pass of two-coordinate attempt-odds moves; returns the max move.

    A shared active energy constraint pins several alpha coordinates at once
    (it depends on them only through the product of 1 + alpha), and no single
    coordinate can then move without breaking feasibility. Scaling
    (1 + alpha_i) by e^d and (1 + alpha_j) by e^-d leaves every constraint of
    the other nodes exactly invariant, so a line search along d redistributes
    attempt odds within the pinned set. Only the pair's own constraints and
    boxes bound d; each is convex along the line, so its feasible set is an
    interval around 0 found by bisection.
    """
    nn = md.n
    moved = 0.0
    u_cur = _utility_raw(md, n, alpha)
    for i in range(nn):
        for j in range(i + 1, nn):
            bi, bj = 1.0 + alpha[i], 1.0 + alpha[j]
            d_hi = min(np.log(1.5 / bi), np.log(bj / (1.0 + floor)))
            d_lo = max(np.log((1.0 + floor) / bi), np.log(bj / 1.5))
            if d_hi <= 0.0 or d_lo >= 0.0 or d_hi - d_lo < 1e-12:
                continue

            def shifted(d):
                trial = alpha.copy()
                trial[i] = bi * np.exp(d) - 1.0
                trial[j] = bj * np.exp(-d) - 1.0
                return trial

            def feasible(d):
                trial = shifted(d)
                return (_slack_one(md, n, trial, i) >= -1e-18
                        and _slack_one(md, n, trial, j) >= -1e-18)

            d_hi = _feasible_end(feasible, d_hi)
            d_lo = -_feasible_end(lambda d: feasible(-d), -d_lo)

            def u_of(d):
                return _utility_raw(md, n, shifted(d))

            d_best = _line_max(u_of, d_lo, d_hi)
            u_new = u_of(d_best)
            if u_new > u_cur + 1e-14 * max(1.0, abs(u_cur)):
                alpha[:] = shifted(d_best)
                moved = max(moved, abs(alpha[i] - (bi - 1.0)),
                            abs(alpha[j] - (bj - 1.0)))
                u_cur = u_new
    return moved


def _feasible_end(feasible, d_end: float, iters: int = 60) -> float:
    """Largest feasible step in [0, d_end]; feasibility holds at 0."""
    if d_end <= 0.0 or feasible(d_end):
        return max(d_end, 0.0)
    lo, hi = 0.0, d_end
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _line_max(fun, lo: float, hi: float, coarse: int = 17,
              tol: float = 1e-12) -> float:
    """Deterministic 1-D maximizer: coarse grid then golden-section refine."""
    grid = np.linspace(lo, hi, coarse)
    vals = [fun(g) for g in grid]
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, coarse - 1)]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


@dataclass
class OptResult:
    """Solver output: the decision, its audit trail and derived reports."""

    decision: DecisionVector
    utility: float
    utility_trace: list[float]
    perf: mac.PerfReport
    energy: tuple[energy.EnergyBreakdown, ...]
    slacks: np.ndarray
    recovered_w: np.ndarray
    integer_n: np.ndarray
    integer_w: np.ndarray
    integer_feasible: bool
    status: str            # "converged" or "iteration-cap"
    outer_iters: int


def solve_bcd(scenario: Scenario, cfg: OptimizerConfig | None = None,
              init: DecisionVector | None = None) -> OptResult:
    """Block coordinate descent over (n, alpha).

    Starts from n = 1, alpha = 0.5 (alpha at the top of its box puts the
    least coupling pressure on the energy constraints); each outer iteration
    runs the n block, one ascending Gauss-Seidel sweep of the alpha
    coordinates, and a pass of two-coordinate alpha moves that redistribute
    attempt odds pinned together by a shared active energy constraint (single
    coordinates cannot move along such a constraint). Stops when the utility
    change and the largest coordinate move both fall under their tolerances.
    Raises InfeasibleError with per-node details when no feasible decision
    exists.
    """
    cfg = cfg or OptimizerConfig()
    md = _model(scenario)
    if init is not None:
        n = init.n.copy()
        alpha = init.alpha.copy()
    else:
        n = np.ones(md.n)
        alpha = np.full(md.n, 0.5)

    trace: list[float] = []
    status = "iteration-cap"
    u_prev = None
    outer = 0
    for outer in range(1, cfg.max_outer_iters + 1):
        n_before, alpha_before = n.copy(), alpha.copy()
        n = solve_n_block(scenario, alpha, n, cfg)
        for i in range(md.n):
            alpha[i] = solve_alpha_block(scenario, n, alpha, i, cfg)
        if md.n > 1 and _any_energy_bound_active(md, n, alpha):
            _pair_sweep(md, n, alpha, cfg.alpha_floor)
        u = _utility_raw(md, n, alpha)
        trace.append(u)
        if u_prev is not None:
            du = abs(u - u_prev) / max(1.0, abs(u))
            move = max(float(np.max(np.abs(n - n_before) / np.maximum(1.0, n_before))),
                       float(np.max(np.abs(alpha - alpha_before))))
            if du <= cfg.outer_tol and move <= cfg.move_tol:
                status = "converged"
                break
        u_prev = u

    dv = DecisionVector(n=n, alpha=np.minimum(alpha, 0.5))
    perf = mac.evaluate(scenario, n, alpha)
    breakdowns = tuple(energy.cycle_energy(scenario, i, n, alpha)
                       for i in range(md.n))
    slacks = np.array([energy.constraint_slack(scenario, i, n, alpha)
                       for i in range(md.n)])
    if np.any(perf.window < 1.0):
        bad = np.nonzero(perf.window < 1.0)[0]
        warnings.warn(
            f"recovered contention window below one slot for nodes "
            f"{bad.tolist()}; the alpha box ignores the window floor",
            RuntimeWarning, stacklevel=2)
    int_n, int_w, int_feasible = round_decision(scenario, dv)
    return OptResult(decision=dv, utility=trace[-1], utility_trace=trace,
                     perf=perf, energy=breakdowns, slacks=slacks,
                     recovered_w=perf.window, integer_n=int_n,
                     integer_w=int_w, integer_feasible=int_feasible,
                     status=status, outer_iters=outer)


def round_decision(scenario: Scenario, dv: DecisionVector):
    """Nearest feasible integer operating point below/around a decision.

    Floors the sample counts, lifts any node whose energy constraint bounds
    n from below, then greedily increments while feasible and utility
    improves. The window is the recovered one rounded to an integer >= 1.
    """
    md = _model(scenario)
    lo, hi = sample_intervals(scenario, dv.alpha)
    n_int = np.floor(dv.n + 1e-9)
    n_int = np.maximum(n_int, np.ceil(lo - 1e-9))
    n_int = np.minimum(n_int, np.maximum(np.floor(hi + 1e-9), 1.0))
    n_int = np.clip(n_int, 1.0, md.n_max)
    feasible = bool(np.all(n_int >= lo - 1e-9) and np.all(n_int <= hi + 1e-9))
    if feasible:
        u_cur = _utility_raw(md, n_int, dv.alpha)
        improved = True
        while improved:
            improved = False
            best_gain, best_i = 0.0, -1
            for i in range(md.n):
                if n_int[i] + 1.0 > min(md.n_max[i], np.floor(hi[i] + 1e-9)):
                    continue
                trial = n_int.copy()
                trial[i] += 1.0
                gain = _utility_raw(md, trial, dv.alpha) - u_cur
                if gain > best_gain:
                    best_gain, best_i = gain, i
            if best_i >= 0:
                n_int[best_i] += 1.0
                u_cur += best_gain
                improved = True
    m_int = np.array([node.duty.sleep_slots(ni)
                      for node, ni in zip(scenario.nodes, n_int)])
    w_real = mac.window_from_alpha(dv.alpha, m_int)
    w_int = np.maximum(1.0, np.rint(w_real))
    return n_int.astype(int), w_int.astype(int), feasible


@dataclass
class KktEntry:
    name: str
    value: float
    lo: float
    hi: float
    position: str      # "interior", "lower", "upper" or "pinned"
    derivative: float
    ok: bool


@dataclass
class KktReport:
    entries: list[KktEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)


def check_kkt(scenario: Scenario, dv: DecisionVector, tol: float = 1e-4,
              fd_step: float = 1e-6) -> KktReport:
    """First-order optimality diagnostics at a feasible decision.

    For every coordinate, computes the feasible interval with all other
    coordinates fixed and a central finite-difference utility derivative:
    interior coordinates need a near-zero derivative, coordinates at the
    interval ends need the correctly signed one.
    """
    md = _model(scenario)
    report = KktReport()

    def central(fun, x):
        # both coordinate kinds are positive; keep x - h on the open side
        h = min(fd_step * max(1.0, abs(x)), 0.5 * x)
        return (fun(x + h) - fun(x - h)) / (2.0 * h)

    n_lo, n_hi = sample_intervals(scenario, dv.alpha)
    n_hi = np.minimum(n_hi, md.n_max)
    for i in range(md.n):
        def u_of_n(v, i=i):
            trial = dv.n.copy()
            trial[i] = v
            return _utility_raw(md, trial, dv.alpha)

        report.entries.append(_classify(f"n[{i}]", float(dv.n[i]),
                                        float(max(1.0, n_lo[i])), float(n_hi[i]),
                                        central(u_of_n, float(dv.n[i])), tol))
    for i in range(md.n):
        lo, hi = attempt_interval(scenario, dv.n, dv.alpha, i)

        def u_of_a(v, i=i):
            trial = dv.alpha.copy()
            trial[i] = v
            return _utility_raw(md, dv.n, trial)

        report.entries.append(_classify(f"alpha[{i}]", float(dv.alpha[i]),
                                        lo, hi,
                                        central(u_of_a, float(dv.alpha[i])), tol))
    return report


def _classify(name, value, lo, hi, deriv, tol) -> KktEntry:
    span = max(hi - lo, 0.0)
    at_tol = 1e-6 * max(1.0, abs(value))
    if span <= 2 * at_tol:
        position, ok = "pinned", True
    elif value - lo <= at_tol:
        position, ok = "lower", deriv <= tol
    elif hi - value <= at_tol:
        position, ok = "upper", deriv >= -tol
    else:
        position, ok = "interior", abs(deriv) <= tol
    return KktEntry(name=name, value=value, lo=lo, hi=hi, position=position,
                    derivative=deriv, ok=ok)
