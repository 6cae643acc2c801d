import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ammil import (
    AmmSpec,
    ErliProbes,
    SolverError,
    SpecError,
    Verdict,
    erli_test,
    il_cpmm_closed,
    il_from_w,
    il_weighted_closed,
    impermanent_loss,
    ratio_vector,
    recover_g3m,
    same_level_surfaces,
)
from ammil import il as il_mod

from conftest import FAMILY_CASES, FAMILY_IDS

# IL(m1: 1 -> 2) - IL(m1: 2 -> 4) on the amp=1, D=1 StableSwap curve. Computed
# with 40-digit mpmath from the quadratic-formula x2(x1) and a 1-D stationarity
# solve, independent of this package; matched by the Newton path to ~1e-16.
SS_IL_1_TO_2 = -0.13469108230691464
SS_IL_2_TO_4 = -0.06738691238812839
SS_SPREAD = 0.06730416991878625

rates = st.floats(min_value=0.05, max_value=20.0)


def test_ratio_vector_examples():
    np.testing.assert_array_equal(ratio_vector([6, 2], [12, 2]), [2, 1])
    np.testing.assert_array_equal(ratio_vector([3, 5, 7], [3, 5, 7]), [1, 1, 1])
    np.testing.assert_allclose(ratio_vector([1, 1, 1], [2, 8, 2]), [1, 4, 1])
    with pytest.raises(SpecError):
        ratio_vector([1, 1], [1, 1, 1])
    with pytest.raises(SpecError):
        ratio_vector([1, 0], [1, 1])


@given(st.lists(rates, min_size=2, max_size=5), st.data())
def test_ratio_vector_scale_free(p_i, data):
    p_f = data.draw(st.lists(rates, min_size=len(p_i), max_size=len(p_i)))
    c, d = data.draw(rates), data.draw(rates)
    t = ratio_vector(p_i, p_f)
    assert t[-1] == 1.0
    np.testing.assert_allclose(ratio_vector(np.multiply(c, p_i), np.multiply(d, p_f)), t, rtol=1e-12)


def test_il_examples(cp):
    assert impermanent_loss(cp, 12, [1, 1], [4, 1]).il == pytest.approx(-0.2, abs=1e-12)
    rep = impermanent_loss(AmmSpec.constant_product(3), 8, [1, 1, 1], [1, 2, 4])
    assert rep.il == pytest.approx(-1 / 7, abs=1e-12)
    np.testing.assert_allclose(rep.t, [0.25, 0.5, 1.0])


@pytest.mark.parametrize("spec,level", FAMILY_CASES, ids=FAMILY_IDS)
def test_il_zero_at_identity(spec, level, rng):
    for _ in range(5):
        p = np.exp(rng.uniform(-1, 1, size=spec.n))
        rep = impermanent_loss(spec, level, p, p, method="newton")
        assert rep.il == 0.0
        assert rep.v_hold == rep.v_pool


def test_il_report_fields(cp):
    rep = impermanent_loss(cp, 12, [6, 2], [12, 2])
    np.testing.assert_allclose(rep.x_initial.x, [2, 6])
    # values in numeraire units: p_f / p_f[-1] = (6, 1)
    assert rep.v_hold == pytest.approx(6 * 2 + 6)
    assert rep.v_pool == pytest.approx(2 * math.sqrt(12 * 6))
    assert rep.il == pytest.approx(rep.v_pool / rep.v_hold - 1, abs=0)


def test_il_from_w_examples(cp, ss):
    assert il_from_w(cp, 12, [1], [1]) == 0.0
    assert il_from_w(cp, 12, [1], [4]) == pytest.approx(-0.2, abs=1e-12)
    assert il_from_w(ss, None, [1], [2]) == pytest.approx(impermanent_loss(ss, None, [1, 1], [2, 1]).il, rel=1e-8)


@pytest.mark.parametrize("spec,level", FAMILY_CASES, ids=FAMILY_IDS)
def test_route_equivalence(spec, level, rng):
    for _ in range(20):
        m_i = np.exp(rng.uniform(np.log(0.2), np.log(5), size=spec.n - 1))
        m_f = np.exp(rng.uniform(np.log(0.2), np.log(5), size=spec.n - 1))
        direct = impermanent_loss(spec, level, np.append(m_i, 1), np.append(m_f, 1))
        assert il_from_w(spec, level, m_i, m_f, method="newton") == pytest.approx(direct.il, rel=1e-8, abs=1e-12)
        if spec.family.value == "constant-product":
            assert il_cpmm_closed(direct.t) == pytest.approx(direct.il, abs=1e-9)


def test_cpmm_closed_examples():
    assert il_cpmm_closed([1, 1]) == 0.0
    assert il_cpmm_closed([4, 1]) == pytest.approx(2 * math.sqrt(4) / 5 - 1, abs=1e-15)
    assert il_cpmm_closed([4, 1]) == pytest.approx(-0.2, abs=1e-15)
    assert il_cpmm_closed([1, 2, 4]) == pytest.approx(-1 / 7, abs=1e-15)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_cpmm_closed_matches_two_token_formula(t):
    assert il_cpmm_closed([t, 1]) == pytest.approx(2 * math.sqrt(t) / (t + 1) - 1, abs=1e-14)


def test_weighted_closed_examples():
    assert il_weighted_closed([0.2, 0.8], [4, 1]) == pytest.approx(4**0.2 / 1.6 - 1, abs=1e-15)
    # -0.17530756 from the formula; a commonly quoted truncation "-0.1753074" is off in the 7th digit
    assert il_weighted_closed([0.2, 0.8], [4, 1]) == pytest.approx(-0.17530756, abs=1e-8)
    assert il_weighted_closed([0.8, 0.2], [4, 1]) == pytest.approx(4**0.8 / 3.4 - 1, abs=1e-15)
    assert il_weighted_closed([0.8, 0.2], [4, 1]) == pytest.approx(-0.1084, abs=1e-4)
    with pytest.raises(SpecError):
        il_weighted_closed([0.5, 0.6], [4, 1])


@given(st.lists(rates, min_size=2, max_size=6))
def test_weighted_closed_reduces_to_cpmm(t):
    n = len(t)
    assert il_weighted_closed([1 / n] * n, t) == pytest.approx(il_cpmm_closed(t), abs=1e-12)
    assert il_cpmm_closed(t) <= 1e-15


@pytest.mark.parametrize("weights", [[0.8, 0.2], [0.2, 0.8], [0.5, 0.3, 0.2], [0.1, 0.2, 0.3, 0.4]])
def test_weighted_closed_validated_against_solver(weights, rng):
    spec = AmmSpec.weighted_g3m(weights)
    for _ in range(100):
        p_i = np.exp(rng.uniform(np.log(0.1), np.log(10), size=spec.n))
        p_f = np.exp(rng.uniform(np.log(0.1), np.log(10), size=spec.n))
        numeric = impermanent_loss(spec, 1.3, p_i, p_f, method="newton").il
        assert il_weighted_closed(weights, ratio_vector(p_i, p_f)) == pytest.approx(numeric, abs=1e-8)


@pytest.mark.parametrize("spec,level", FAMILY_CASES, ids=FAMILY_IDS)
def test_il_non_positive(spec, level, rng):
    for _ in range(200):
        p_i = np.exp(rng.uniform(np.log(0.1), np.log(10), size=spec.n))
        p_f = np.exp(rng.uniform(np.log(0.1), np.log(10), size=spec.n))
        assert impermanent_loss(spec, level, p_i, p_f).il <= 1e-9


@pytest.mark.parametrize("spec,level", FAMILY_CASES, ids=FAMILY_IDS)
@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_price_level_independence(spec, level, data):
    p_i = np.array(data.draw(st.lists(rates, min_size=spec.n, max_size=spec.n)))
    p_f = np.array(data.draw(st.lists(rates, min_size=spec.n, max_size=spec.n)))
    c = data.draw(st.floats(min_value=0.01, max_value=100.0))
    d = data.draw(st.floats(min_value=0.01, max_value=100.0))
    a = impermanent_loss(spec, level, p_i, p_f).il
    b = impermanent_loss(spec, level, c * p_i, d * p_f).il
    assert abs(a - b) <= 1e-9


@pytest.mark.parametrize("spec,level", [c for c in FAMILY_CASES if c[0].is_geometric],
                         ids=[i for i, c in zip(FAMILY_IDS, FAMILY_CASES) if c[0].is_geometric])
def test_erli_invariance_for_geometric_pools(spec, level, rng):
    q = spec.n - 1
    levels = ErliProbes().rate_levels(q)
    for _ in range(5):
        t = np.exp(rng.uniform(np.log(0.1), np.log(10), size=q))
        assert il_mod.direct_spread(spec, level, t, levels) <= 1e-7
        ils = [impermanent_loss(spec, level, np.append(m, 1), np.append(m * t, 1), method="newton").il
               for m in levels]
        assert np.ptp(ils) <= 1e-7


def test_stableswap_erli_violation_golden(ss):
    a = impermanent_loss(ss, None, [1, 1], [2, 1]).il
    b = impermanent_loss(ss, None, [2, 1], [4, 1]).il
    assert a == pytest.approx(SS_IL_1_TO_2, abs=1e-12)
    assert b == pytest.approx(SS_IL_2_TO_4, abs=1e-12)
    assert abs(a - b) == pytest.approx(SS_SPREAD, abs=1e-12)
    assert abs(a - b) >= 10 * 1e-6


def test_erli_verdicts(cp, g82, ss):
    for spec, level in [(cp, 12.0), (cp, 0.3), (g82, 1.0), (AmmSpec.constant_product(3), 8.0)]:
        rep = erli_test(spec, level)
        assert rep.verdict is Verdict.ERLI
        assert rep.direct_spread <= 1e-7
        assert all(e.max_log_deviation <= 1e-6 for e in rep.f_degrees)
    rep = erli_test(ss, None)
    assert rep.verdict is Verdict.NOT_ERLI
    assert rep.direct_spread >= 10 * rep.tolerance
    assert erli_test(AmmSpec.stableswap(3, amp=5.0, d=3.0), None).verdict is Verdict.NOT_ERLI


def test_erli_degrees_reported(g82):
    rep = erli_test(g82, 1.0)
    assert rep.f_degrees[0].degree == pytest.approx(-4.0, abs=1e-9)
    assert rep.w_degrees[0].degree == pytest.approx(0.8, abs=1e-9)


def test_erli_hysteresis_band(cp, monkeypatch):
    monkeypatch.setattr(il_mod, "direct_spread", lambda *a, **k: 3e-6)
    rep = erli_test(cp, 12.0)
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert rep.diagnostics


def test_erli_failures_are_inconclusive(cp, monkeypatch):
    def boom(*a, **k):
        raise SolverError("no convergence")

    monkeypatch.setattr(il_mod, "direct_spread", boom)
    rep = erli_test(cp, 12.0)
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert "no convergence" in rep.diagnostics[0]


def test_erli_custom_probes(cp):
    probes = ErliProbes(t_values=[[3.0]], base_rates=(0.5, 1.0, 4.0))
    assert erli_test(cp, 12.0, probes=probes).verdict is Verdict.ERLI


def test_recover_g3m(cp, g82, ss):
    rep = recover_g3m(cp, 12.0)
    np.testing.assert_allclose(rep.exponents, [1, 1], atol=1e-9)
    assert rep.fit_residual <= 1e-12
    rep = recover_g3m(g82, 1.0)
    np.testing.assert_allclose(rep.exponents, [4, 1], atol=1e-9)
    assert rep.fit_residual <= 1e-10
    rep = recover_g3m(AmmSpec.weighted_g3m([0.5, 0.3, 0.2]), 2.0)
    np.testing.assert_allclose(rep.exponents, [2.5, 1.5, 1.0], atol=1e-9)
    assert recover_g3m(ss, None).fit_residual > 0.1


def test_same_level_surfaces(cp, ss):
    res = same_level_surfaces(cp, 12.0, AmmSpec.weighted_g3m([0.5, 0.5]), math.sqrt(12.0))
    assert res.same and res.max_defect <= 1e-12
    assert not same_level_surfaces(cp, 12.0, cp, 13.0).same
    assert not same_level_surfaces(cp, 0.25, ss, None).same
    with pytest.raises(SpecError):
        same_level_surfaces(cp, 12.0, AmmSpec.constant_product(3), 12.0)


def test_same_surfaces_give_same_il(cp, rng):
    g = AmmSpec.weighted_g3m([0.5, 0.5])
    for _ in range(10):
        p_i, p_f = np.exp(rng.uniform(-2, 2, size=(2, 2)))
        a = impermanent_loss(cp, 12.0, p_i, p_f, method="newton").il
        b = impermanent_loss(g, math.sqrt(12.0), p_i, p_f, method="newton").il
        assert a == pytest.approx(b, abs=1e-10)


def test_stableswap_golden_against_high_precision_oracle():
    mpmath = pytest.importorskip("mpmath")
    mp = mpmath.mp
    mp.dps = 40

    def f(x1):
        # x2 on the amp=1, D=1 curve by the quadratic formula
        return (12 * x1 - 16 * x1**2 + mp.sqrt(256 * x1**4 - 384 * x1**3 + 144 * x1**2 + 64 * x1)) / (32 * x1)

    def stable_x1(m):
        # f is convex, so f' + m is monotone and a bracket pins the root
        return mp.findroot(lambda x: mp.diff(f, x) + m, (mp.mpf("1e-3"), mp.mpf(5)), solver="anderson")

    def il(m_i, m_f):
        a, b = stable_x1(m_i), stable_x1(m_f)
        return (m_f * b + f(b)) / (m_f * a + f(a)) - 1

    a, b = il(1, 2), il(2, 4)
    assert float(a) == pytest.approx(SS_IL_1_TO_2, abs=1e-15)
    assert float(b) == pytest.approx(SS_IL_2_TO_4, abs=1e-15)
    assert float(abs(a - b)) == pytest.approx(SS_SPREAD, abs=1e-15)
