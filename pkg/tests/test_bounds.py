import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from dispersion_lab.bounds import (
    CURVE_HEADER,
    build_rate_curve,
    find_alpha,
    parse_eps_grid,
    strassen_rate,
    thm1_f,
    thm1_finite_n_gamma_bound,
    thm1_rate,
    thm2_rate,
    thm3_rate,
    thm4_rate,
)
from dispersion_lab.channel import analyze, bsc, compound_example
from dispersion_lab.controllers import r_of_eps
from dispersion_lab.errors import DomainError, NotFound, NotSimpleDispersion

AN = analyze(compound_example())
BSC = analyze(bsc(0.1))
GRID = parse_eps_grid("0.01:0.01:0.99")


def test_strassen_examples():
    assert strassen_rate(0.5, AN) == 0.0
    v = 0.09 * math.log(9) ** 2
    assert strassen_rate(0.1, BSC) == pytest.approx(math.sqrt(v) * norm.ppf(0.1), rel=1e-9)
    assert strassen_rate(0.1, BSC) == pytest.approx(-0.8448, abs=1e-4)
    assert strassen_rate(0.9, AN) == pytest.approx(math.sqrt(AN.v_max) * norm.ppf(0.9))
    with pytest.raises(DomainError):
        strassen_rate(1.0, AN)


def test_thm1_f_examples():
    assert thm1_f(1.0, 0.1, AN.beta) < 0
    for a in (1.0, 1.5, 3.0):
        assert thm1_f(a, 0.1, 1.0) == pytest.approx(0.1 * (a - 1))
    alphas = np.linspace(1, 5 - 1e-9, 4001)
    vals = np.array([thm1_f(a, 0.1, AN.beta) for a in alphas])
    assert np.all(np.isfinite(vals))
    assert np.max(np.abs(np.diff(vals))) < 1e-3
    with pytest.raises(DomainError):
        thm1_f(5.0, 0.1, 0.5)
    with pytest.raises(DomainError):
        thm1_f(0.99, 0.1, 0.5)


@given(st.floats(0.005, 0.45), st.floats(0.05, 0.95))
def test_find_alpha_self_consistent(eps, beta):
    a = find_alpha(eps, beta)
    assert 1 < a < 1 / (2 * eps)
    f1 = thm1_f(1.0, eps, beta)
    assert thm1_f(a, eps, beta) <= -min(1e-12, 1e-3 * abs(f1))


def test_find_alpha_vanishes_as_beta_to_one():
    alphas = [find_alpha(0.1, b) for b in (0.9, 0.99, 0.999)]
    assert alphas[0] > alphas[1] > alphas[2] > 1
    assert alphas[2] - 1 < 1e-5


def test_find_alpha_not_found_on_misuse():
    with pytest.raises(NotFound):
        find_alpha(0.1, 0.5, tol=1.0)


def test_thm1_beats_strassen():
    a = find_alpha(0.1, AN.beta)
    assert norm.ppf(a * 0.1) > norm.ppf(0.1)
    assert thm1_rate(0.1, AN, a) > strassen_rate(0.1, AN)


def test_finite_n_gamma_bound():
    a = 1.0005
    f = thm1_f(a, 0.1, AN.beta)
    res = thm1_finite_n_gamma_bound(a, 0.1, AN, 10_000)
    c = 4 * res.kappa_lo + res.kappa_hi
    assert res.bound == pytest.approx(f + 0.1 + c / math.sqrt(20_000))
    assert res.kappa_lo > 1 and res.kappa_hi > 1
    n0 = res.n0
    assert n0 % 2 == 0
    assert f + c / math.sqrt(2 * n0) < 0 <= f + c / math.sqrt(2 * (n0 - 2))
    far = thm1_finite_n_gamma_bound(a, 0.1, AN, 10 ** 20)
    assert far.bound == pytest.approx(f + 0.1, abs=1e-8)
    with pytest.raises(DomainError):
        thm1_finite_n_gamma_bound(a, 0.1, AN, 101)


def test_finite_n_gamma_bound_symmetric_channel():
    res = thm1_finite_n_gamma_bound(1.1, 0.1, BSC, 1000)
    assert res.kappa_lo == pytest.approx(res.kappa_hi)
    assert res.bound == pytest.approx(0.01 + 0.1 + 5 * res.kappa_lo / math.sqrt(2000))
    assert res.n0 == -1


@given(st.floats(0.01, 0.99))
def test_thm2_is_r_of_eps(eps):
    assert thm2_rate(eps, AN) == r_of_eps(eps, AN.v_min, AN.v_max)


def test_thm3():
    assert thm3_rate(0.3, BSC) == pytest.approx(math.sqrt(BSC.v_min) * norm.ppf(0.3))
    assert thm3_rate(0.5, BSC) == 0.0
    with pytest.raises(NotSimpleDispersion):
        thm3_rate(0.3, AN)


def test_thm4():
    for e in GRID:
        assert thm4_rate(e, AN) == pytest.approx(thm2_rate(e, AN), abs=1e-12)
    assert thm4_rate(AN.lam / (1 + AN.lam), AN) == pytest.approx(0.0, abs=1e-12)
    for e in (0.2, 0.7):
        assert thm4_rate(e, BSC) == pytest.approx(strassen_rate(e, BSC), abs=1e-12)


def test_all_rates_nondecreasing():
    curve = build_rate_curve(AN, GRID)
    for col in (curve.no_feedback, curve.fb_lower, curve.fb_upper):
        assert np.all(np.diff(col) >= -1e-12)
    t1 = curve.thm1_lower[~np.isnan(curve.thm1_lower)]
    assert np.all(np.diff(t1) >= -1e-12)


def test_curve_remark_channel():
    curve = build_rate_curve(AN, GRID)
    np.testing.assert_allclose(curve.fb_lower, curve.fb_upper, atol=1e-12, rtol=0)
    assert np.all(curve.fb_lower > curve.no_feedback)
    assert curve.positive_range_enlarged()
    ok = ~np.isnan(curve.thm1_lower)
    assert ok.sum() == np.sum(GRID < 0.5)
    assert np.all(curve.thm1_lower[ok] <= curve.fb_lower[ok])
    assert np.all(curve.thm1_lower[ok] > curve.no_feedback[ok])


def test_curve_symmetric_channel():
    curve = build_rate_curve(BSC, GRID)
    np.testing.assert_allclose(curve.fb_lower, curve.no_feedback, atol=1e-12, rtol=0)
    assert not curve.positive_range_enlarged()
    assert np.all(np.isnan(curve.thm1_lower))


def test_branch_continuity():
    b = AN.beta
    bp = b / (1 + b)
    assert thm2_rate(bp, AN) == pytest.approx(0.0, abs=1e-12)
    assert abs(thm2_rate(bp * (1 + 1e-13), AN)) < 1e-11
    assert abs(thm2_rate(bp * (1 - 1e-13), AN)) < 1e-11


def test_curve_csv_and_grid_parsing():
    curve = build_rate_curve(AN, parse_eps_grid("0.5"))
    lines = curve.to_csv().splitlines()
    assert lines[0] == CURVE_HEADER
    assert lines[1].split(",")[1] == "0"
    assert len(parse_eps_grid("0.01:0.01:0.99")) == 99
    np.testing.assert_allclose(parse_eps_grid("0.1,0.2"), [0.1, 0.2])
    with pytest.raises(DomainError):
        build_rate_curve(AN, [0.5, 0.2])
    with pytest.raises(DomainError):
        build_rate_curve(AN, [0.0, 0.5])
