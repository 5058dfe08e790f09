import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from sptrade.linkmath import (Allocation, AllocationError, check_feasibility, empty_allocation,
                              evaluate, mu_power_for_rate, rate, rates)
from sptrade.scenario import Scenario, generate_drop

N0 = 10 ** -20.4
getcontext().prec = 50


def _hp_rate(b, p, g, n0):
    b, p, g, n0 = (Decimal(repr(x)) for x in (b, p, g, n0))
    return float(b * (1 + p * g / (b * n0)).ln() / Decimal(2).ln())


def test_rate_examples():
    assert rate(1e6, N0 * 1e6, 1.0, N0) == pytest.approx(1e6, rel=1e-15)
    assert rate(180e3, 0.0, 1e-9, N0) == 0.0
    assert rate(0.0, 1.0, 1e-9, N0) == 0.0
    assert rate(180e3, 0.1, 1e-10, N0) == pytest.approx(_hp_rate(180e3, 0.1, 1e-10, N0), rel=1e-13)


def test_rates_vectorized_matches_scalar():
    b = np.array([0.0, 1e5, 2e5])
    p = np.array([0.3, 0.0, 0.2])
    g = np.array([1e-9, 1e-9, 3e-10])
    assert rates(b, p, g, N0).tolist() == [rate(*x, N0) for x in zip(b, p, g)]


def test_rate_jointly_concave():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        b1, b2 = rng.uniform(1e3, 1e6, 2)
        p1, p2 = rng.uniform(0.0, 1.0, 2)
        g = 10 ** rng.uniform(-12, -7)
        mid = rate(0.5 * (b1 + b2), 0.5 * (p1 + p2), g, N0)
        avg = 0.5 * (rate(b1, p1, g, N0) + rate(b2, p2, g, N0))
        assert mid >= avg - 1e-9 * max(avg, 1.0)


def test_mu_power_examples():
    assert mu_power_for_rate(2e5, 2e5, 1e-9, N0) == pytest.approx(2e5 * N0 / 1e-9, rel=1e-14)
    assert mu_power_for_rate(2e5, 0.0, 1e-9, N0) == 0.0
    assert mu_power_for_rate(1e3, 1e6, 1e-9, N0) == math.inf
    assert mu_power_for_rate(0.0, 1e6, 1e-9, N0) == math.inf
    q = mu_power_for_rate(360e3, 700e3, 1e-9, N0)
    ref = (Decimal(2) ** (Decimal(700) / Decimal(360)) - 1) * Decimal(360e3) * Decimal(repr(N0)) / Decimal("1e-9")
    assert q == pytest.approx(float(ref), rel=1e-13)
    assert rate(360e3, q, 1e-9, N0) == pytest.approx(700e3, rel=1e-9)


def test_mu_power_is_rate_inverse_and_monotone():
    rng = np.random.default_rng(1)
    for _ in range(500):
        w = rng.uniform(1e4, 1e6)
        r = rng.uniform(1e3, 20 * w)
        h = 10 ** rng.uniform(-13, -7)
        assert rate(w, mu_power_for_rate(w, r, h, N0), h, N0) == pytest.approx(r, rel=1e-9)
    ws = np.linspace(2e4, 1e6, 200)
    qs = [mu_power_for_rate(w, 700e3, 1e-10, N0) for w in ws]
    assert all(np.diff(qs) < 0)
    hs = np.logspace(-13, -7, 200)
    qs = [mu_power_for_rate(360e3, 700e3, h, N0) for h in hs]
    assert all(np.diff(qs) < 0)


def _random_allocation(s, rng, psi):
    K, N = s.K, s.N
    w, q, b, ps = np.zeros(K), np.zeros(K), np.zeros(K), np.zeros(K)
    for k in psi:
        w[k] = rng.uniform(0.2, 1.0) * s.w_mc[k]
        b[k] = s.w_mc[k] - w[k]
        q[k] = mu_power_for_rate(w[k], s.r_mc[k], s.h[k], s.n0)
        ps[k] = rng.uniform(0, 0.05)
    return Allocation(tuple(psi), w, q, b, ps, s.best_su, rng.uniform(0, 0.05, N))


def _reference_ee(s, a):
    # written straight from the definitions, no shared helpers
    r = 0.0
    for n in range(s.N):
        r += s.b_sc[n] * math.log2(1 + a.p[n] * s.g[n] / (s.b_sc[n] * s.n0))
    for k in a.selected:
        gk = max(s.g_cross[k])
        if a.b[k] > 0:
            r += a.b[k] * math.log2(1 + a.p_share[k] * gk / (a.b[k] * s.n0))
    p = (sum(a.p) + sum(a.p_share) + sum(a.q)) / s.xi + s.p_c
    return r, p, r / p


def test_evaluate_against_reference():
    rng = np.random.default_rng(2)
    for seed in range(20):
        s = generate_drop(seed=seed)
        psi = tuple(k for k in range(s.K) if rng.random() < 0.5)
        a = _random_allocation(s, rng, psi)
        bd = evaluate(s, a)
        r, p, ee = _reference_ee(s, a)
        assert bd.r_total == pytest.approx(r, rel=1e-12)
        assert bd.p_total == pytest.approx(p, rel=1e-12)
        assert bd.ee == pytest.approx(ee, rel=1e-12)
        assert bd.ee * bd.p_total == pytest.approx(bd.r_total, rel=1e-9)
        assert bd.p_total >= s.p_c
        assert bd.su_rates.sum() == pytest.approx(bd.r_total, rel=1e-12)


def test_evaluate_idle_system():
    s = generate_drop(seed=0)
    bd = evaluate(s, empty_allocation(s))
    assert bd.r_total == 0.0 and bd.p_total == s.p_c and bd.ee == 0.0


def test_evaluate_single_su_arithmetic():
    xi, B = 0.38, 1e6
    g = N0 * B / xi  # p g / (B N0) = 1 at p = xi
    s = Scenario(w_mc=[], b_sc=[B], r_mc=[], r_sc_min=0.0, p_max=1.0, p_c=2.0, xi=xi, n0=N0,
                 h=[], g=[g], g_cross=np.zeros((0, 1)))
    a = Allocation((), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), s.best_su, np.array([xi]))
    assert evaluate(s, a).ee == pytest.approx(1e6 / (1.0 + 2.0), rel=1e-12)


def test_allocation_validation():
    s = generate_drop(seed=1)
    good = _random_allocation(s, np.random.default_rng(0), (0, 2))
    good.validate(s)
    bad_sum = Allocation(good.selected, good.w, good.q, good.b * 0.5, good.p_share, good.su_of_mu, good.p)
    with pytest.raises(AllocationError):
        evaluate(s, bad_sum)
    w = good.w.copy()
    w[1] = 10.0
    with pytest.raises(AllocationError):
        Allocation(good.selected, w, good.q, good.b, good.p_share, good.su_of_mu, good.p).validate(s)
    p = good.p.copy()
    p[0] = -1.0
    with pytest.raises(AllocationError):
        Allocation(good.selected, good.w, good.q, good.b, good.p_share, good.su_of_mu, p).validate(s)
    wrong_su = (good.su_of_mu + 1) % s.N
    with pytest.raises(AllocationError):
        Allocation(good.selected, good.w, good.q, good.b, good.p_share, wrong_su, good.p).validate(s)


def test_feasibility_examples():
    s = generate_drop(seed=0)
    rep = check_feasibility(s, empty_allocation(s))
    assert "C4" in rep.violated and rep.c4_slack == -s.r_sc_min
    rep = check_feasibility(s, empty_allocation(s), enforce_c4=False)
    assert rep.feasible and rep.c4_slack is None
    assert rep.describe()["C4"] == "not enforced"
    # budget used exactly
    p = np.full(s.N, s.p_max / s.N)
    a = Allocation((), *(np.zeros(s.K) for _ in range(4)), s.best_su, p)
    rep = check_feasibility(s, a, enforce_c4=False)
    assert rep.feasible and abs(rep.c1_slack) < 1e-15
    a = Allocation((), *(np.zeros(s.K) for _ in range(4)), s.best_su, p * 1.01)
    assert "C1" in check_feasibility(s, a, enforce_c4=False).violated
    assert check_feasibility(s, a, enforce_c1=False, enforce_c4=False).feasible


def test_feasibility_c3():
    s = generate_drop(seed=4)
    a = _random_allocation(s, np.random.default_rng(5), (1,))
    rep = check_feasibility(s, a, enforce_c1=False, enforce_c4=False)
    assert rep.c3_residuals[1] == pytest.approx(0.0, abs=1e-6)
    q = a.q.copy()
    q[1] *= 0.9
    a2 = Allocation(a.selected, a.w, q, a.b, a.p_share, a.su_of_mu, a.p)
    assert "C3[1]" in check_feasibility(s, a2, enforce_c1=False, enforce_c4=False).violated
