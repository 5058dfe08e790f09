"""Joint bandwidth and power allocation for a fixed MU selection.

Outer loop: Dinkelbach on the system EE. Inner loop: the partial Lagrangian
of the subtractive problem is maximized in closed form (common water level
for all power densities, a Lambert-W / bisection root for each MU's kept
bandwidth) and the multipliers of the power budget (``lam``) and of the
minimum-rate constraint (``mu``) are found with the ellipsoid method.

Units: ``q`` and ``lam`` are in bit/J, ``mu`` is dimensionless. The
ellipsoid works on ``(lam / S, mu)`` with ``S`` the total bandwidth in Hz,
so both coordinates are O(1) to O(100) on typical drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import numerics
from .linkmath import (LN2, MAX_SPECTRAL_EFFICIENCY, Allocation, EeBreakdown, check_feasibility,
                       evaluate, mu_power_for_rate)
from .scenario import Scenario

ENERGY_EFFICIENCY = "energy-efficiency"
THROUGHPUT = "throughput"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_CAP = "iteration-cap"

W_METHODS = ("lambert", "bisect", "unscaled-price")


@dataclass(frozen=True)
class SolveOptions:
    enforce_c1: bool = True
    enforce_c4: bool = True
    objective: str = ENERGY_EFFICIENCY
    dinkelbach_eps: float = 1e-6
    ellipsoid_tol: float = 1e-10
    max_outer: int = 50
    max_inner: int = 3000
    w_method: str = "lambert"
    w_bisect_tol: float = 1e-7  # Hz
    q0: float = 1.0
    initial_center: tuple[float, float] = (1.0, 1.0)
    initial_radius: float = 100.0
    max_restarts: int = 8
    feas_rel_tol: float = 1e-9

    def __post_init__(self):
        if self.objective not in (ENERGY_EFFICIENCY, THROUGHPUT):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.w_method not in W_METHODS:
            raise ValueError(f"unknown w_method {self.w_method!r}")
        for name in ("dinkelbach_eps", "ellipsoid_tol", "w_bisect_tol", "initial_radius",
                     "feas_rel_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")

    def replace(self, **changes) -> "SolveOptions":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Closed-form primal recovery
# ---------------------------------------------------------------------------

def water_level(q: float, lam: float, mu: float, xi: float) -> float:
    """Common power-density threshold ``(1+mu) xi / ((q + lam xi) ln 2)`` in W/Hz."""
    denom = q + lam * xi
    if denom <= 0.0:
        raise ValueError("water level is unbounded for q = lam = 0")
    return (1.0 + mu) * xi / (denom * LN2)


def _kept_band_gain(C: float, price: float, r: float, h: float, n0: float) -> float:
    """Right-hand side scaled so the root solves ``(t-1) e^t + 1 = D h / N0``, ``t = r ln2 / w``."""
    return C / price * h / n0


def _w_from_lambert(z: float, r: float, w_max: float) -> float:
    # (t-1) e^(t-1) = (z - 1)/e  =>  t = 1 + W0((z - 1)/e)
    t = 1.0 + numerics.lambert_w0((z - 1.0) / math.e)
    if t <= 0.0:
        return w_max
    return min(r * LN2 / t, w_max)


def _eq31_lhs(w: float, r: float, h: float, n0: float) -> float:
    t = r * LN2 / w
    try:
        return n0 / h * ((t - 1.0) * math.exp(t) + 1.0)
    except OverflowError:
        return math.inf


def _w_from_bisection(D: float, r: float, h: float, n0: float, w_max: float, tol: float) -> float:
    if _eq31_lhs(w_max, r, h, n0) >= D:
        return w_max
    lo = w_max
    while _eq31_lhs(lo, r, h, n0) < D:
        lo *= 0.5
        if lo < r / (4.0 * MAX_SPECTRAL_EFFICIENCY):
            break
    return numerics.bisect(lambda w: _eq31_lhs(w, r, h, n0) - D, lo, w_max, tol=tol)


def _kept_bandwidth(C: float, q: float, lam: float, xi: float, r: float, h: float, n0: float,
                    w_max: float, method: str, tol: float) -> float:
    if C <= 0.0 or r <= 0.0:
        return w_max if r > 0.0 else 0.0
    if method == "unscaled-price":
        z = C * h / ((q + lam) * n0)
        return _w_from_lambert(z, r, w_max)
    price = q / xi + lam
    if method == "bisect":
        return _w_from_bisection(C / price, r, h, n0, w_max, tol)
    return _w_from_lambert(_kept_band_gain(C, price, r, h, n0), r, w_max)


def _shared_density_and_C(level: float, mu: float, price: float, g_pair: float, n0: float):
    a = n0 / g_pair
    if level <= a:
        return 0.0, 0.0
    pt = level - a
    return pt, (1.0 + mu) * math.log2(level / a) - price * pt


def primal_w(k: int, q: float, lam: float, mu: float, s: Scenario, method: str = "bisect",
             tol: float = 1e-7) -> float:
    """Bandwidth MU ``k`` keeps at the Lagrangian maximizer for ``(q, lam, mu)``.

    ``method='bisect'`` solves the stationarity equation of the kept
    bandwidth by bisection (the left side is decreasing in ``w``),
    ``'lambert'`` uses its Lambert-W closed form and ``'unscaled-price'`` the
    closed form with the price written as ``q + lam`` instead of
    ``q/xi + lam`` (kept for comparison only). The root is clamped to
    ``W_MC[k]``.
    """
    level = water_level(q, lam, mu, s.xi)
    price = q / s.xi + lam
    g_pair = s.g_cross[k, s.best_su[k]]
    _, C = _shared_density_and_C(level, mu, price, g_pair, s.n0)
    return _kept_bandwidth(C, q, lam, s.xi, s.r_mc[k], s.h[k], s.n0, s.w_mc[k], method, tol)


def primal_powers(q: float, lam: float, mu: float, s: Scenario,
                  w: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """SU powers on the traded bands (per MU) and on their own bands (per SU)."""
    level = water_level(q, lam, mu, s.xi)
    w = np.asarray(w, dtype=float)
    g_pair = s.g_cross[np.arange(s.K), s.best_su] if s.K else np.zeros(0)
    p_share = (s.w_mc - w) * np.maximum(level - s.n0 / g_pair, 0.0)
    p = s.b_sc * np.maximum(level - s.n0 / s.g, 0.0)
    return p_share, p


# ---------------------------------------------------------------------------
# Lagrangian (for diagnostics and tests)
# ---------------------------------------------------------------------------

def lagrangian(s: Scenario, psi: Sequence[int], q: float, lam: float, mu: float,
               w: Sequence[float], p_share: Sequence[float], p: Sequence[float]) -> float:
    """Partial Lagrangian of the subtractive problem; ``w``/``p_share`` follow ``psi`` order."""
    r_total, raw, mu_raw = _rate_and_power(s, psi, w, p_share, p)
    p_total = (raw + mu_raw) / s.xi + s.p_c
    return (r_total - q * p_total + lam * (s.p_max - raw - mu_raw)
            + mu * (r_total - s.r_sc_min))


def _rate_and_power(s, psi, w, p_share, p):
    r_total = 0.0
    for n in range(s.N):
        r_total += s.b_sc[n] * math.log2(1.0 + p[n] * s.g[n] / (s.b_sc[n] * s.n0))
    raw = float(np.sum(p)) + float(np.sum(p_share))
    mu_raw = 0.0
    for i, k in enumerate(psi):
        b = s.w_mc[k] - w[i]
        gk = s.g_cross[k, s.best_su[k]]
        if b > 0:
            r_total += b * math.log2(1.0 + p_share[i] * gk / (b * s.n0))
        mu_raw += mu_power_for_rate(w[i], s.r_mc[k], s.h[k], s.n0)
    return r_total, raw, mu_raw


def lagrangian_gradient(s: Scenario, psi: Sequence[int], q: float, lam: float, mu: float,
                        w: Sequence[float], p_share: Sequence[float],
                        p: Sequence[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic partial derivatives of :func:`lagrangian`.

    Returns ``(dL/dp, dL/dp_share, dL/dw)`` with the latter two in ``psi`` order.
    """
    price = q / s.xi + lam
    n0 = s.n0
    d_p = np.array([(1 + mu) * s.b_sc[n] * s.g[n] / ((s.b_sc[n] * n0 + p[n] * s.g[n]) * LN2) - price
                    for n in range(s.N)])
    d_ps = np.zeros(len(psi))
    d_w = np.zeros(len(psi))
    for i, k in enumerate(psi):
        b = s.w_mc[k] - w[i]
        gk = s.g_cross[k, s.best_su[k]]
        two = 2.0 ** (s.r_mc[k] / w[i])
        d_w[i] = -price * ((two - 1.0) * n0 / s.h[k] - two * s.r_mc[k] * n0 / (w[i] * s.h[k]) * LN2)
        d_ps[i] = -price
        if b <= 0:
            continue  # nothing shared: the shared-rate terms vanish
        snr_den = b * n0 + p_share[i] * gk
        d_ps[i] += (1 + mu) * b * gk / (snr_den * LN2)
        d_w[i] += (-(1 + mu) * math.log2(1.0 + p_share[i] * gk / (b * n0))
                   + (1 + mu) * p_share[i] * gk / (snr_den * LN2))
    return d_p, d_ps, d_w


# ---------------------------------------------------------------------------
# Inner problem
# ---------------------------------------------------------------------------

@dataclass
class _Point:
    lam: float
    mu: float
    w: list
    p_share: list
    q_mu: list
    p: list
    r_total: float
    raw_power: float

    def slack_c1(self, s: Scenario) -> float:
        return s.p_max - self.raw_power

    def slack_c4(self, s: Scenario) -> float:
        return self.r_total - s.r_sc_min


class _PrimalOracle:
    """Closed-form Lagrangian maximizer for a fixed selection, on plain floats."""

    def __init__(self, s: Scenario, psi: Sequence[int], opts: SolveOptions):
        self.s = s
        self.psi = tuple(psi)
        self.opts = opts
        n0 = s.n0
        self.su = [(float(s.b_sc[n]), n0 / float(s.g[n])) for n in range(s.N)]
        self.mus = [(float(s.w_mc[k]), float(s.r_mc[k]), float(s.h[k]),
                     n0 / float(s.g_cross[k, s.best_su[k]])) for k in self.psi]
        self.evaluations = 0

    def __call__(self, q: float, lam: float, mu: float) -> _Point:
        self.evaluations += 1
        s, opts = self.s, self.opts
        xi, n0 = s.xi, s.n0
        price = q / xi + lam
        level = (1.0 + mu) / (price * LN2)
        r_total = 0.0
        p = []
        for B, a in self.su:
            if level > a:
                p.append(B * (level - a))
                r_total += B * math.log2(level / a)
            else:
                p.append(0.0)
        w_l, ps_l, qm_l = [], [], []
        for W, R, h, a in self.mus:
            if level > a:
                pt = level - a
                C = (1.0 + mu) * math.log2(level / a) - price * pt
            else:
                pt = C = 0.0
            w = _kept_bandwidth(C, q, lam, xi, R, h, n0, W, opts.w_method, opts.w_bisect_tol)
            b = W - w
            w_l.append(w)
            ps_l.append(b * pt)
            qm_l.append(mu_power_for_rate(w, R, h, n0))
            if pt > 0.0 and b > 0.0:
                r_total += b * math.log2(level / a)
        raw = sum(p) + sum(ps_l) + sum(qm_l)
        return _Point(lam, mu, w_l, ps_l, qm_l, p, r_total, raw)

    def allocation(self, pt: _Point) -> Allocation:
        s = self.s
        K = s.K
        w = np.zeros(K)
        q = np.zeros(K)
        b = np.zeros(K)
        ps = np.zeros(K)
        for i, k in enumerate(self.psi):
            w[k] = pt.w[i]
            q[k] = pt.q_mu[i]
            b[k] = s.w_mc[k] - pt.w[i]
            ps[k] = pt.p_share[i]
        return Allocation(tuple(sorted(self.psi)), w, q, b, ps, s.best_su, np.array(pt.p))


@dataclass
class InnerResult:
    allocation: Allocation
    lam: float
    mu: float
    r_total: float
    p_total: float
    iterations: int
    restarts: int
    converged: bool
    point: _Point = field(repr=False)

    @property
    def objective(self) -> float:
        return self.r_total


def _violations(pt: _Point, s: Scenario, use_c1: bool, use_c4: bool, rel: float) -> list[str]:
    out = []
    if use_c1 and pt.slack_c1(s) < -rel * s.p_max:
        out.append("C1")
    if use_c4 and pt.slack_c4(s) < -rel * max(s.r_sc_min, 1.0):
        out.append("C4")
    return out


def _exhausted_point(oracle: _PrimalOracle, psi: Sequence[int], s: Scenario) -> _Point:
    qm = [mu_power_for_rate(s.w_mc[k], s.r_mc[k], s.h[k], s.n0) for k in psi]
    return _Point(math.inf, 0.0, [float(s.w_mc[k]) for k in psi], [0.0] * len(psi), qm,
                  [0.0] * s.N, 0.0, sum(qm))


def _tighten(oracle: _PrimalOracle, q: float, pt: _Point, which: str) -> tuple[_Point, int]:
    """Move one multiplier so its constraint is tight, ending on the feasible side.

    C1 slack increases with ``lam`` and C4 slack with ``mu``. A violated
    constraint raises the multiplier until a feasible bracket is found; a
    slack one with a positive multiplier lowers it towards zero. Bisection
    then keeps the feasible end.
    """
    s = oracle.s
    if which == "lam":
        at = lambda v: oracle(q, v, pt.mu)
        slack = lambda p: p.slack_c1(s) / max(s.p_max, 1e-300)
        v = pt.lam
    else:
        at = lambda v: oracle(q, pt.lam, v)
        slack = lambda p: p.slack_c4(s) / max(s.r_sc_min, 1.0)
        v = pt.mu
    sl = slack(pt)
    calls = 0
    if sl < 0.0:
        lo, hi = v, max(2.0 * v, 1.0)
        best = at(hi)
        calls += 1
        while slack(best) < 0.0:
            if calls > 200:
                return pt, calls
            lo, hi = hi, 2.0 * hi
            best = at(hi)
            calls += 1
    elif v > 0.0 and sl > 1e-13:
        lo, hi, best = 0.0, v, pt
        if which == "lam" and q <= 0.0:
            lo = v * 1e-12  # the water level is unbounded at q = lam = 0
        low_pt = at(lo)
        calls += 1
        if slack(low_pt) >= 0.0:
            return low_pt, calls
    else:
        return pt, 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        cand = at(mid)
        calls += 1
        if slack(cand) >= 0.0:
            hi, best = mid, cand
            if slack(cand) <= 1e-13:
                break
        else:
            lo = mid
    return best, calls


def _polish(oracle: _PrimalOracle, q: float, pt: _Point, use_c1: bool,
            use_c4: bool) -> tuple[_Point, int]:
    calls = 0
    for _ in range(4 if use_c1 and use_c4 else 1):
        for which, on in (("lam", use_c1), ("mu", use_c4)):
            if on:
                pt, n = _tighten(oracle, q, pt, which)
                calls += n
    return pt, calls


def _dual_search(oracle: _PrimalOracle, q: float, dims: tuple[str, ...], opts: SolveOptions,
                 scale: float):
    """Ellipsoid method on the enabled multipliers; returns (point, steps, restarts, converged)."""
    s = oracle.s
    use_c1 = "lam" in dims
    use_c4 = "mu" in dims
    n = len(dims)
    i_lam = dims.index("lam") if use_c1 else None
    i_mu = dims.index("mu") if use_c4 else None
    center = [float(x) for x in opts.initial_center[:n]]
    radius = opts.initial_radius
    tol2 = opts.ellipsoid_tol ** 2
    steps = 0
    restarts = 0
    while True:
        c = list(center)
        P = [[radius * radius if i == j else 0.0 for j in range(n)] for i in range(n)]
        pt = None
        converged = False
        for _ in range(opts.max_inner):
            steps += 1
            lam = c[i_lam] * scale if use_c1 else 0.0
            mu = c[i_mu] if use_c4 else 0.0
            neg = next((i for i in range(n) if c[i] < 0.0), None)
            if neg is None and q + lam * s.xi <= 0.0:
                neg = i_lam
            if neg is not None:
                # feasibility cut towards the nonnegative orthant
                g = [0.0] * n
                g[neg] = -1.0
                c, P = numerics.central_cut(c, P, g)
                continue
            pt = oracle(q, lam, mu)
            g = [pt.slack_c1(s) if d == "lam" else pt.slack_c4(s) / scale for d in dims]
            gPg = sum(g[i] * P[i][j] * g[j] for i in range(n) for j in range(n))
            if gPg <= tol2 or not any(g):
                converged = True
                break
            c, P = numerics.central_cut(c, P, g)
        if pt is None:
            c = [max(x, 0.0) for x in c]
            lam = c[i_lam] * scale if use_c1 else 0.0
            mu = c[i_mu] if use_c4 else 0.0
            pt = oracle(q, lam, mu)
        if converged:
            pt, extra = _polish(oracle, q, pt, use_c1, use_c4)
            steps += extra
        bad = _violations(pt, s, use_c1, use_c4, opts.feas_rel_tol)
        if converged and not bad:
            return pt, steps, restarts, True
        if restarts >= opts.max_restarts:
            return pt, steps, restarts, False
        # optimum likely outside the initial sphere: widen around the last center
        restarts += 1
        center = [max(x, 0.0) for x in c]
        radius *= 10.0


def inner_solve(q: float, psi: Sequence[int], s: Scenario, opts: SolveOptions = SolveOptions(),
                _oracle: _PrimalOracle | None = None) -> InnerResult:
    """Maximize the subtractive objective ``R - q P`` for selection ``psi``.

    ``objective='throughput'`` maximizes the rate alone (``q`` is ignored
    and treated as 0) under the power budget.
    """
    oracle = _oracle or _PrimalOracle(s, psi, opts)
    scale = float(s.w_mc[list(psi)].sum() + s.b_sc.sum()) if psi else float(s.b_sc.sum())
    if opts.objective == THROUGHPUT:
        q = 0.0
        dims: tuple[str, ...] = ("lam",)
    else:
        dims = tuple(d for d, on in (("lam", opts.enforce_c1), ("mu", opts.enforce_c4)) if on)
    steps = restarts = 0
    converged = True
    pt = None
    if "lam" in dims and s.p_max - min_mu_power(s, psi) <= 1e-12 * s.p_max:
        # budget used up by the MUs (or zero): SUs stay silent, MUs keep whole bands
        pt = _exhausted_point(oracle, psi, s)
        converged = not ("mu" in dims and pt.slack_c4(s) < 0.0)
    if pt is None and q > 0.0:
        pt = oracle(q, 0.0, 0.0)
        if _violations(pt, s, "lam" in dims, "mu" in dims, 0.0):
            pt = None
    if pt is None:
        if not dims:
            raise ValueError("unbounded inner problem: q = 0 with no power budget")
        pt, steps, restarts, converged = _dual_search(oracle, q, dims, opts, scale)
    alloc = oracle.allocation(pt)
    p_total = pt.raw_power / s.xi + s.p_c
    return InnerResult(alloc, pt.lam, pt.mu, pt.r_total, p_total, steps, restarts, converged, pt)


# ---------------------------------------------------------------------------
# Full solve for a fixed selection
# ---------------------------------------------------------------------------

@dataclass
class SolveResult:
    selected: tuple[int, ...]
    status: str
    allocation: Allocation | None = None
    breakdown: EeBreakdown | None = None
    q_final: float = 0.0
    duals: tuple[float, float] = (0.0, 0.0)
    outer_iters: int = 0
    inner_iters: int = 0
    q_history: list[float] = field(default_factory=list)
    violated: str | None = None
    q_inner: float = 0.0  # parameter of the subtractive problem the allocation solves

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE

    @property
    def ee(self) -> float:
        """System EE, or ``-inf`` for an infeasible selection."""
        return self.breakdown.ee if self.breakdown is not None and self.feasible else -math.inf

    @property
    def r_total(self) -> float:
        return self.breakdown.r_total if self.breakdown is not None and self.feasible else 0.0


def min_mu_power(s: Scenario, psi: Iterable[int]) -> float:
    """Power needed by the selected MUs when each keeps its whole band."""
    return sum(mu_power_for_rate(s.w_mc[k], s.r_mc[k], s.h[k], s.n0) for k in psi)


def _degenerate(s: Scenario, psi: tuple[int, ...], opts: SolveOptions) -> SolveResult | None:
    """Selections whose power budget leaves nothing for the SUs."""
    if not opts.enforce_c1 and opts.objective != THROUGHPUT:
        return None
    spare = s.p_max - min_mu_power(s, psi)
    if spare > 1e-12 * max(s.p_max, 1e-300):
        return None
    if spare < -1e-12 * max(s.p_max, 1e-300):
        return SolveResult(psi, INFEASIBLE, violated="C1")
    # exactly exhausted: MUs keep their bands, SUs get no power
    oracle = _PrimalOracle(s, psi, opts)
    pt = _exhausted_point(oracle, psi, s)
    alloc = oracle.allocation(pt)
    bd = evaluate(s, alloc)
    if opts.enforce_c4 and bd.r_total < s.r_sc_min:
        return SolveResult(psi, INFEASIBLE, violated="C4")
    return SolveResult(psi, OPTIMAL, alloc, bd, bd.ee, (math.inf, 0.0))


def solve(psi: Iterable[int], s: Scenario, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Optimal allocation for the MU set ``psi`` (EE or throughput objective).

    Infeasible selections return ``status='infeasible'`` with the violated
    constraint in ``violated``.
    """
    psi = tuple(sorted(set(int(k) for k in psi)))
    if any(k < 0 or k >= s.K for k in psi):
        raise ValueError(f"MU indices {psi} out of range for K={s.K}")
    deg = _degenerate(s, psi, opts)
    if deg is not None:
        return deg
    oracle = _PrimalOracle(s, psi, opts)

    if opts.objective == THROUGHPUT:
        inner = inner_solve(0.0, psi, s, opts, oracle)
        bd = evaluate(s, inner.allocation)
        res = SolveResult(psi, OPTIMAL if inner.converged else ITERATION_CAP, inner.allocation, bd,
                          bd.ee, (inner.lam, 0.0), 1, inner.iterations)
        if opts.enforce_c4 and bd.r_total < s.r_sc_min * (1 - opts.feas_rel_tol):
            res.status, res.violated = INFEASIBLE, "C4"
        return res

    if opts.enforce_c4 and opts.enforce_c1:
        # cheap witness first: spare power spread evenly over the SU bands
        spare = s.p_max - min_mu_power(s, psi)
        density = spare / float(s.b_sc.sum())
        witness = float(np.sum(s.b_sc * np.log2(1.0 + density * s.g / s.n0)))
        if witness < s.r_sc_min:
            max_rate = inner_solve(0.0, psi, s, opts.replace(objective=THROUGHPUT), oracle).r_total
            if max_rate < s.r_sc_min:
                return SolveResult(psi, INFEASIBLE, violated="C4")

    runs: list[InnerResult] = []

    def step(q: float):
        res = inner_solve(q, psi, s, opts, oracle)
        runs.append(res)
        return res.r_total - q * res.p_total, res.r_total, res.p_total

    try:
        state = numerics.dinkelbach_solve(step, opts.q0, opts.dinkelbach_eps, opts.max_outer)
        inner = runs[state.best_iteration - 1]
        q_inner = state.history[state.best_iteration - 1]
        status = OPTIMAL if inner.converged else ITERATION_CAP
        outer, history = state.iteration, state.history
    except numerics.DinkelbachError:
        inner, q_inner = runs[-1], math.nan
        status, outer, history = ITERATION_CAP, opts.max_outer, []
    total_inner = sum(r.iterations for r in runs)
    bd = evaluate(s, inner.allocation)
    result = SolveResult(psi, status, inner.allocation, bd, bd.ee, (inner.lam, inner.mu), outer,
                         total_inner, history, q_inner=q_inner)
    rep = check_feasibility(s, inner.allocation, opts.enforce_c1, opts.enforce_c4,
                            rel_tol=max(opts.feas_rel_tol, 1e-9))
    if not rep.feasible and status == OPTIMAL:
        result.status = ITERATION_CAP
        result.violated = ",".join(rep.violated)
    return result
