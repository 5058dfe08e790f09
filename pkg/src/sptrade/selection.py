"""MU selection: trading EE, greedy trading-EE order, exhaustive search, baselines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from . import numerics
from .allocator import (ENERGY_EFFICIENCY, INFEASIBLE, THROUGHPUT, SolveOptions, SolveResult,
                        solve)
from .linkmath import MAX_SPECTRAL_EFFICIENCY, mu_power_for_rate
from .scenario import Scenario

SPT_ORDER = "spt-order"
EXHAUSTIVE = "exhaustive"
NON_SPT = "non-spt"
THROUGHPUT_SCHEME = "throughput"
SCHEMES = (EXHAUSTIVE, SPT_ORDER, NON_SPT, THROUGHPUT_SCHEME)

IMPROVEMENT_RTOL = 1e-9
MAX_EXHAUSTIVE_K = 20


@dataclass(frozen=True)
class TradingEeResult:
    mu: int
    ee: float
    w_opt: float
    p_opt: float
    iterations: int


def trading_ee_value(s: Scenario, k: int, p: float, w: float) -> float:
    """Rate the traded band yields for the strongest SU over the power spent on the trade."""
    W = s.w_mc[k]
    b = W - w
    gk = s.g_cross[k, s.best_su[k]]
    num = b * math.log2(1.0 + p * gk / (b * s.n0)) if b > 0 else 0.0
    den = (p + mu_power_for_rate(w, s.r_mc[k], s.h[k], s.n0)) / s.xi
    if den <= 0.0 or math.isinf(den):
        return 0.0
    return num / den


def _best_power(s: Scenario, k: int, w: float) -> float:
    """Zero of d(trading EE)/dp for fixed ``w``.

    With ``x = 1 + p a`` (``a = g/(b N0)``) stationarity reads
    ``x (ln x - 1) = a Q - 1`` where ``Q`` is the MU's power, so
    ``x = exp(1 + W0((a Q - 1)/e))``.
    """
    b = s.w_mc[k] - w
    if b <= 0.0:
        return 0.0
    a = s.g_cross[k, s.best_su[k]] / (b * s.n0)
    Q = mu_power_for_rate(w, s.r_mc[k], s.h[k], s.n0)
    if math.isinf(Q):
        return 0.0
    y = numerics.lambert_w0((a * Q - 1.0) / math.e)
    return math.expm1(1.0 + y) / a if y > -1.0 else 0.0


def trading_ee(k: int, s: Scenario, rtol: float = 1e-8, max_iter: int = 500) -> TradingEeResult:
    """Maximize the trading EE of MU ``k`` by alternating 1-D maximizations.

    The power step is the exact stationary point for the current ``w``; the
    bandwidth step is a golden-section search over ``w`` for the current
    power. Stops when the relative EE change drops below ``rtol``.
    """
    W = float(s.w_mc[k])
    w_lo = min(s.r_mc[k] / MAX_SPECTRAL_EFFICIENCY, W) if s.r_mc[k] > 0 else 0.0
    w = 0.5 * (w_lo + W)
    p = _best_power(s, k, w)
    ee = trading_ee_value(s, k, p, w)
    it = 0
    for it in range(1, max_iter + 1):
        w, _ = numerics.golden_section_max(lambda x: trading_ee_value(s, k, p, x), w_lo, W,
                                           tol=1e-12 * W)
        p = _best_power(s, k, w)
        new = trading_ee_value(s, k, p, w)
        if abs(new - ee) <= rtol * max(abs(new), 1e-300):
            ee = max(ee, new)
            break
        ee = new
    return TradingEeResult(k, ee, w, p, it)


@dataclass
class SelectionResult:
    scheme: str
    chosen: tuple[int, ...]
    final: SolveResult
    trace: list[float] = field(default_factory=list)
    order: tuple[int, ...] = ()
    trading: dict[int, TradingEeResult] = field(default_factory=dict)
    skipped_infeasible: tuple[int, ...] = ()

    @property
    def ee(self) -> float:
        return self.final.ee

    @property
    def feasible(self) -> bool:
        return self.final.feasible


def _improves(new: SolveResult, old: SolveResult, key) -> bool:
    if not new.feasible:
        return False
    if not old.feasible:
        return True
    a, b = key(new), key(old)
    return a > b + IMPROVEMENT_RTOL * abs(b)


def trading_order(s: Scenario) -> tuple[tuple[int, ...], dict[int, TradingEeResult]]:
    """MUs sorted by descending trading EE (lowest index first on ties)."""
    te = {k: trading_ee(k, s) for k in range(s.K)}
    order = tuple(sorted(range(s.K), key=lambda k: (-te[k].ee, k)))
    return order, te


def _greedy(s: Scenario, opts: SolveOptions, scheme: str, key) -> SelectionResult:
    order, te = trading_order(s)
    psi: tuple[int, ...] = ()
    best = solve(psi, s, opts)
    trace = [best.ee if scheme == SPT_ORDER else best.r_total]
    skipped = []
    for k in order:
        cand = solve(psi + (k,), s, opts)
        if cand.status == INFEASIBLE:
            skipped.append(k)
            continue
        if _improves(cand, best, key):
            psi = tuple(sorted(psi + (k,)))
            best = cand
            trace.append(key(best))
    return SelectionResult(scheme, psi, best, trace, order, te, tuple(skipped))


def select_spt_order(s: Scenario, opts: SolveOptions = SolveOptions()) -> SelectionResult:
    """Add MUs in descending trading-EE order, keeping each only if system EE improves."""
    return _greedy(s, opts.replace(objective=ENERGY_EFFICIENCY), SPT_ORDER, lambda r: r.ee)


def select_exhaustive(s: Scenario, opts: SolveOptions = SolveOptions()) -> SelectionResult:
    """Best feasible subset over all ``2**K`` selections.

    Ties go to the smaller subset, then the lexicographically smaller one.
    """
    if s.K > MAX_EXHAUSTIVE_K:
        raise ValueError(f"exhaustive search limited to K <= {MAX_EXHAUSTIVE_K}, got {s.K}")
    opts = opts.replace(objective=ENERGY_EFFICIENCY)
    best: SolveResult | None = None
    for size in range(s.K + 1):
        for psi in itertools.combinations(range(s.K), size):
            res = solve(psi, s, opts)
            if best is None or (res.feasible and (not best.feasible or res.ee > best.ee)):
                best = res
    return SelectionResult(EXHAUSTIVE, best.selected, best, [best.ee])


def select_baseline(s: Scenario, scheme: str, opts: SolveOptions = SolveOptions()) -> SelectionResult:
    """``non-spt``: no trading. ``throughput``: rate-greedy selection with rate-optimal allocation."""
    if scheme == NON_SPT:
        res = solve((), s, opts.replace(objective=ENERGY_EFFICIENCY))
        return SelectionResult(NON_SPT, (), res, [res.ee])
    if scheme == THROUGHPUT_SCHEME:
        return _greedy(s, opts.replace(objective=THROUGHPUT), THROUGHPUT_SCHEME, lambda r: r.r_total)
    raise ValueError(f"unknown baseline scheme {scheme!r}")


def run_scheme(s: Scenario, scheme: str, opts: SolveOptions = SolveOptions()) -> SelectionResult:
    if scheme == SPT_ORDER:
        return select_spt_order(s, opts)
    if scheme == EXHAUSTIVE:
        return select_exhaustive(s, opts)
    return select_baseline(s, scheme, opts)
