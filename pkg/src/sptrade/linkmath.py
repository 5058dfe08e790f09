"""Rate, power and energy-efficiency expressions for a candidate allocation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

LN2 = math.log(2.0)
# 2**60 ~ 1e18: beyond this the MU band is treated as unusable
MAX_SPECTRAL_EFFICIENCY = 60.0


class AllocationError(ValueError):
    pass


def rate(bandwidth: float, power: float, gain: float, n0: float) -> float:
    """Shannon rate ``B log2(1 + P g / (B N0))`` in bit/s; zero for ``B = 0``."""
    if bandwidth <= 0.0:
        return 0.0
    return bandwidth * math.log2(1.0 + power * gain / (bandwidth * n0))


def rates(bandwidth, power, gain, n0: float) -> np.ndarray:
    """Vectorized :func:`rate`."""
    bw = np.asarray(bandwidth, dtype=float)
    out = np.zeros(np.broadcast(bw, power, gain).shape)
    pos = np.broadcast_to(bw > 0, out.shape)
    bw_b = np.broadcast_to(bw, out.shape)
    pw_b = np.broadcast_to(np.asarray(power, dtype=float), out.shape)
    g_b = np.broadcast_to(np.asarray(gain, dtype=float), out.shape)
    out[pos] = bw_b[pos] * np.log2(1.0 + pw_b[pos] * g_b[pos] / (bw_b[pos] * n0))
    return out


def mu_power_for_rate(w: float, r: float, h: float, n0: float) -> float:
    """Power making ``rate(w, q, h, n0) == r``: ``(2**(r/w) - 1) w N0 / h``.

    Returns ``inf`` when ``r/w`` exceeds :data:`MAX_SPECTRAL_EFFICIENCY`
    (bandwidth too small to be usable).
    """
    if r <= 0.0:
        return 0.0
    if w <= 0.0 or r / w > MAX_SPECTRAL_EFFICIENCY:
        return math.inf
    return math.expm1(LN2 * r / w) * w * n0 / h


@dataclass(frozen=True)
class Allocation:
    """A complete decision for one drop.

    Per-MU arrays have length K and are zero for unselected MUs; ``b[k]``
    and ``p_share[k]`` belong to SU ``su_of_mu[k]`` on MU k's band.
    """

    selected: tuple[int, ...]
    w: np.ndarray
    q: np.ndarray
    b: np.ndarray
    p_share: np.ndarray
    su_of_mu: np.ndarray
    p: np.ndarray

    @property
    def total_transmit_power(self) -> float:
        return float(self.p.sum() + self.p_share.sum() + self.q.sum())

    def validate(self, s: Scenario, rel_tol: float = 1e-9) -> None:
        K, N = s.K, s.N
        for name, size in (("w", K), ("q", K), ("b", K), ("p_share", K), ("su_of_mu", K), ("p", N)):
            if np.asarray(getattr(self, name)).shape != (size,):
                raise AllocationError(f"{name}: expected shape ({size},)")
        sel = set(self.selected)
        if not sel <= set(range(K)):
            raise AllocationError(f"selected MUs {sorted(sel)} out of range 0..{K - 1}")
        for name in ("w", "q", "b", "p_share", "p"):
            arr = getattr(self, name)
            if np.any(~np.isfinite(arr)) or np.any(arr < 0):
                raise AllocationError(f"{name}: entries must be finite and >= 0")
        if not np.array_equal(self.su_of_mu, s.best_su):
            raise AllocationError("su_of_mu must pair each MU with its strongest SU")
        for k in range(K):
            if k in sel:
                if not (0.0 < self.w[k] <= s.w_mc[k] * (1 + rel_tol)):
                    raise AllocationError(f"w[{k}] must lie in (0, W_MC]")
                if abs(self.b[k] + self.w[k] - s.w_mc[k]) > rel_tol * s.w_mc[k]:
                    raise AllocationError(f"b[{k}] + w[{k}] must equal W_MC[{k}]")
                if self.b[k] <= 0.0 and self.p_share[k] > 0.0:
                    raise AllocationError(f"p_share[{k}] > 0 on zero shared bandwidth")
            elif self.w[k] or self.q[k] or self.b[k] or self.p_share[k]:
                raise AllocationError(f"MU {k} is not selected but has resources")


def empty_allocation(s: Scenario) -> Allocation:
    z = np.zeros(s.K)
    return Allocation((), z, z.copy(), z.copy(), z.copy(), s.best_su, np.zeros(s.N))


@dataclass(frozen=True)
class EeBreakdown:
    r_total: float
    p_total: float
    ee: float
    su_rates: np.ndarray
    mu_rates: np.ndarray
    shared_rates: np.ndarray = field(repr=False)


def evaluate(s: Scenario, a: Allocation) -> EeBreakdown:
    """Total SU rate, total SC power and their ratio for ``a``."""
    a.validate(s)
    own = rates(s.b_sc, a.p, s.g, s.n0)
    g_pair = s.g_cross[np.arange(s.K), a.su_of_mu] if s.K else np.zeros(0)
    shared = rates(a.b, a.p_share, g_pair, s.n0)
    su_rates = own.copy()
    np.add.at(su_rates, a.su_of_mu, shared)
    mu_rates = rates(a.w, a.q, s.h, s.n0)
    r_total = float(own.sum() + shared.sum())
    p_total = a.total_transmit_power / s.xi + s.p_c
    return EeBreakdown(r_total, p_total, r_total / p_total, su_rates, mu_rates, shared)


@dataclass(frozen=True)
class FeasibilityReport:
    """Slack of each constraint; ``None`` marks a constraint that is not enforced."""

    c1_slack: float | None
    c3_residuals: dict[int, float]
    c4_slack: float | None
    violated: tuple[str, ...]

    @property
    def feasible(self) -> bool:
        return not self.violated

    def describe(self) -> dict[str, object]:
        return {
            "C1": "not enforced" if self.c1_slack is None else self.c1_slack,
            "C3": dict(self.c3_residuals),
            "C4": "not enforced" if self.c4_slack is None else self.c4_slack,
        }


def check_feasibility(s: Scenario, a: Allocation, enforce_c1: bool = True,
                      enforce_c4: bool = True, rel_tol: float = 1e-9) -> FeasibilityReport:
    """Constraint slacks of ``a``; violations beyond ``rel_tol`` of each
    constraint's own scale are listed in ``violated``."""
    violated = []
    try:
        a.validate(s)
    except AllocationError as exc:
        violated.append(f"structure ({exc})")
    c1 = s.p_max - a.total_transmit_power
    c3 = {k: rate(a.w[k], a.q[k], s.h[k], s.n0) - s.r_mc[k] for k in a.selected}
    r_total = evaluate(s, a).r_total if not violated else 0.0
    c4 = r_total - s.r_sc_min
    if enforce_c1 and c1 < -rel_tol * s.p_max:
        violated.append("C1")
    for k, res in c3.items():
        if res < -rel_tol * s.r_mc[k]:
            violated.append(f"C3[{k}]")
    if enforce_c4 and c4 < -rel_tol * max(s.r_sc_min, 1.0):
        violated.append("C4")
    return FeasibilityReport(c1 if enforce_c1 else None, c3, c4 if enforce_c4 else None,
                             tuple(violated))
