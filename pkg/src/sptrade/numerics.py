"""Scalar numerical kernels shared by the solvers.

Lambert-W (principal branch), bracketing bisection, golden-section search
for quasi-concave functions, a small ellipsoid-method engine (one or two
dual variables) and a generic Dinkelbach driver for ratio maximization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

INV_E = math.exp(-1.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoSignChangeError(ValueError):
    """Raised when a bisection bracket does not straddle a root."""


class DegenerateGradientError(ValueError):
    """Raised when an ellipsoid cut is requested with a (near) zero gradient."""


class DinkelbachError(RuntimeError):
    """Raised when the Dinkelbach iteration does not converge."""


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

def _lambert_guess(x: float) -> float:
    if x < -0.25:
        # branch-point series around -1/e
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if x < 3.0:
        return math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def _lambert_bisect(x: float) -> float:
    lo, hi = -1.0, max(1.0, math.log(x + 1.0) + 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Halley iteration from a log-based asymptotic guess, with a bisection
    fallback on ``w*exp(w) - x`` if Halley fails to settle in 50 steps.

    Raises
    ------
    ValueError
        If ``x < -1/e`` (outside the real principal-branch domain).
    """
    x = float(x)
    if math.isnan(x) or x < -INV_E - 1e-15:
        raise ValueError(f"lambert_w0 domain error: x={x!r} < -1/e")
    if x <= -INV_E:
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = _lambert_guess(x)
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            return w
    return _lambert_bisect(x)


# ---------------------------------------------------------------------------
# 1-D search
# ---------------------------------------------------------------------------

def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
           max_iter: int = 500) -> float:
    """Root of a sign-changing function on ``[lo, hi]`` by interval halving.

    Stops when the bracketing interval is no wider than ``tol``.
    """
    if not lo < hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoSignChangeError(f"f({lo})={flo} and f({hi})={fhi} have the same sign")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-9) -> tuple[float, float]:
    """Maximize a quasi-concave ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))``; the endpoints are compared at the end so a
    boundary maximizer is returned exactly.
    """
    if not lo <= hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = (x, f(x))
    for xe in (lo, hi):
        fe = f(xe)
        if fe > best[1]:
            best = (xe, fe)
    return best


# ---------------------------------------------------------------------------
# Ellipsoid method
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid ``{x : (x-c)^T P^{-1} (x-c) <= 1}`` in one or two dimensions."""

    center: np.ndarray
    shape: np.ndarray

    @classmethod
    def sphere(cls, center: Sequence[float], radius: float) -> "Ellipsoid":
        c = np.asarray(center, dtype=float).reshape(-1)
        if c.size not in (1, 2):
            raise ValueError("only 1- and 2-dimensional ellipsoids are supported")
        return cls(c, np.eye(c.size) * radius ** 2)

    @property
    def dim(self) -> int:
        return self.center.size

    def volume_measure(self) -> float:
        """det(shape); proportional to squared volume."""
        return float(np.linalg.det(self.shape))


def ellipsoid_step(e: Ellipsoid, subgradient: Sequence[float], project: bool = True) -> Ellipsoid:
    """Central-cut update keeping the half-space ``g^T (x - c) <= 0``.

    With ``project`` the new center is clamped to the nonnegative orthant
    (dual feasibility of inequality multipliers).
    """
    g = np.asarray(subgradient, dtype=float).reshape(-1)
    if g.size != e.dim:
        raise ValueError("subgradient dimension mismatch")
    if not np.all(np.isfinite(g)):
        raise DegenerateGradientError("subgradient is not finite")
    if float(np.linalg.norm(g)) < 1e-300:
        raise DegenerateGradientError("subgradient norm below 1e-300")
    c, P_new = central_cut(e.center.tolist(), e.shape.tolist(), g.tolist())
    c = np.array(c)
    if project:
        c = np.maximum(c, 0.0)
    return Ellipsoid(c, np.array(P_new))


def central_cut(center: list[float], shape: list[list[float]],
                g: list[float]) -> tuple[list[float], np.ndarray | list[list[float]]]:
    """Central-cut update on plain floats (n = 1 or 2); returns ``(center, shape)``.

    For n = 2 with ``Pg = P g / sqrt(g^T P g)``: ``c - Pg/3`` and
    ``4/3 (P - 2/3 Pg Pg^T)``. For n = 1 the interval is halved.
    """
    if len(center) == 1:
        r = math.sqrt(shape[0][0])
        step = 0.5 * r if g[0] > 0 else -0.5 * r
        return [center[0] - step], [[shape[0][0] / 4.0]]
    (a, b), (_, d) = shape
    g0, g1 = g
    u0 = a * g0 + b * g1
    u1 = b * g0 + d * g1
    gPg = g0 * u0 + g1 * u1
    if not gPg > 0.0:
        raise DegenerateGradientError("shape matrix lost positive definiteness")
    s = math.sqrt(gPg)
    u0 /= s
    u1 /= s
    k = 4.0 / 3.0
    off = k * (b - 2.0 / 3.0 * u0 * u1)
    return ([center[0] - u0 / 3.0, center[1] - u1 / 3.0],
            [[k * (a - 2.0 / 3.0 * u0 * u0), off], [off, k * (d - 2.0 / 3.0 * u1 * u1)]])


def ellipsoid_converged(e: Ellipsoid, subgradient: Sequence[float], tol: float) -> bool:
    """True iff ``sqrt(g^T P g) <= tol`` (bound on remaining dual suboptimality)."""
    g = np.asarray(subgradient, dtype=float).reshape(-1)
    return math.sqrt(max(float(g @ e.shape @ g), 0.0)) <= tol


# ---------------------------------------------------------------------------
# Dinkelbach
# ---------------------------------------------------------------------------

@dataclass
class DinkelbachState:
    q: float
    iteration: int
    residual: float
    history: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    best_iteration: int = 0  # 1-based inner call whose solution attains q


def dinkelbach_solve(inner: Callable[[float], tuple[float, float, float]], q0: float = 1.0,
                     epsilon: float = 1e-6, max_iter: int = 50) -> DinkelbachState:
    """Maximize ``R/P`` given an oracle for ``max R - q P``.

    ``inner(q)`` must return ``(R - q*P, R, P)`` at the maximizer for that
    ``q``. Convergence is declared when ``|R - q P| <= epsilon * q * P``;
    the returned ``q`` is ``R/P`` of the last inner solution. ``history``
    holds every ``q`` at which ``inner`` was called, followed by the final
    ratio. Starting below the optimum the sequence is nondecreasing; a
    start above it drops once, then climbs.

    If rounding in the last inner solve yields a ratio below the previous
    one, the previous solution is kept as the incumbent (``best_iteration``
    points at it), so the reported ratio never falls at the final step.
    """
    q = float(q0)
    history: list[float] = []
    residuals: list[float] = []
    for it in range(1, max_iter + 1):
        history.append(q)
        _, R, P = inner(q)
        if P <= 0.0:
            raise DinkelbachError(f"nonpositive denominator {P!r}")
        residual = R - q * P
        residuals.append(residual)
        q_next = R / P
        if abs(residual) <= epsilon * abs(q) * P:
            if it > 1 and q_next < q:
                history.append(q)
                return DinkelbachState(q, it, residual, history, residuals, it - 1)
            history.append(q_next)
            return DinkelbachState(q_next, it, residual, history, residuals, it)
        q = q_next
    raise DinkelbachError(f"no convergence in {max_iter} iterations (q={q!r})")
