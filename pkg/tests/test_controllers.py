import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from dispersion_lab.channel import analyze, bsc, compound_example
from dispersion_lab.controllers import (
    CoarseController,
    ConstantController,
    ControllerState,
    alpha_delta,
    coarse_controller,
    coarse_next_input,
    controller_from_dict,
    default_kappa,
    next_input,
    policy_parameters,
    r_of_eps,
    refined_controller,
    refined_next_input,
    s_of_eps,
    sigma_delta,
)
from dispersion_lab.errors import DomainError, HorizonExceeded, IncompatibleController

AN = analyze(compound_example())
BETAS = st.floats(0.05, 1.0)
EPSS = st.floats(0.001, 0.999)


# shape functions --------------------------------------------------------------

@given(BETAS)
def test_s_zero_at_breakpoint(beta):
    assert s_of_eps(beta / (1 + beta), beta) == pytest.approx(0.0, abs=1e-12)


def test_s_examples():
    assert s_of_eps(0.3, 1.0) == pytest.approx(-norm.ppf(0.3), abs=1e-12)
    assert s_of_eps(0.3, 1.0) == pytest.approx(0.52440, abs=1e-5)
    assert s_of_eps(0.2, 0.5) == pytest.approx(-0.5 * norm.ppf(0.3), abs=1e-12)
    assert s_of_eps(0.2, 0.5) == pytest.approx(0.26220, abs=1e-5)


@given(st.floats(0.01, 0.99), st.floats(0.01, 1.0))
def test_s_domain(eps, beta):
    s_of_eps(eps, beta)
    with pytest.raises(DomainError):
        s_of_eps(0.0, beta)
    with pytest.raises(DomainError):
        s_of_eps(1.0, beta)


def test_r_examples():
    v = 0.7
    assert r_of_eps(0.3, v, v) == pytest.approx(math.sqrt(v) * norm.ppf(0.3), abs=1e-12)
    b = AN.beta
    expected = math.sqrt(AN.v_min) * norm.ppf(0.1 * (1 + b) / (2 * b))
    assert r_of_eps(0.1, AN.v_min, AN.v_max) == pytest.approx(expected, abs=1e-12)
    assert r_of_eps(b / (1 + b), AN.v_min, AN.v_max) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        r_of_eps(0.5, 0.0, 1.0)


@given(st.floats(0.01, 1.0), st.floats(0.05, 2.0))
def test_r_nondecreasing_and_continuous(beta, v_max):
    v_min = beta * beta * v_max
    grid = np.linspace(0.001, 0.999, 400)
    vals = [r_of_eps(a, v_min, v_max) for a in grid]
    assert np.all(np.diff(vals) >= -1e-12)
    bp = beta / (1 + beta)
    if 0.001 < bp < 0.999:
        assert r_of_eps(bp, v_min, v_max) == pytest.approx(0.0, abs=1e-12)
        assert r_of_eps(bp + 1e-12, v_min, v_max) == pytest.approx(0.0, abs=1e-9)


def test_alpha_delta_examples():
    assert alpha_delta(0.0, 0.3, 0.5) == pytest.approx(1.0)
    assert alpha_delta(0.3, 0.3, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert alpha_delta(0.5, 1.0, 0.5) == pytest.approx(0.41667, abs=1e-5)
    with pytest.raises(DomainError):
        alpha_delta(0.4, 0.3, 0.5)
    with pytest.raises(DomainError):
        alpha_delta(-0.1, 0.3, 0.5)


@given(st.floats(0.01, 0.99), st.floats(0.01, 1.0))
def test_alpha_sigma_identity_and_monotone(beta, delta):
    xs = np.linspace(0, delta, 101)
    a = np.array([alpha_delta(x, delta, beta) for x in xs])
    assert np.all((a >= 0) & (a <= 1))
    assert np.all(np.diff(a) <= 1e-15)
    s = sigma_delta(xs, delta, beta)
    np.testing.assert_allclose(s ** 2, beta ** 2 + (1 - beta ** 2) * a, atol=1e-12)


def test_sigma_delta_examples():
    assert sigma_delta(0.0, 0.1, 0.5) == 1.0
    assert sigma_delta(-3.0, 0.1, 0.5) == 1.0
    assert sigma_delta(0.1, 0.1, 0.5) == pytest.approx(0.5)
    assert sigma_delta(7.0, 0.1, 0.5) == 0.5
    assert sigma_delta(0.05, 0.1, 0.5) == pytest.approx(0.75)


@given(st.floats(0.01, 0.99), st.floats(0.01, 1.0), st.floats(-2, 2), st.floats(-2, 2))
def test_sigma_delta_lipschitz(beta, delta, x, y):
    lhs = abs(sigma_delta(x, delta, beta) - sigma_delta(y, delta, beta))
    assert lhs <= (1 - beta) / delta * abs(x - y) + 1e-12


# controller specs ---------------------------------------------------------------

def test_coarse_requires_even_n_and_alpha_range():
    with pytest.raises(IncompatibleController):
        CoarseController(101, 1.01, 0.1, AN.q_min, AN.q_max)
    with pytest.raises(IncompatibleController):
        CoarseController(100, 1.0, 0.1, AN.q_min, AN.q_max)
    with pytest.raises(IncompatibleController):
        CoarseController(100, 5.0, 0.1, AN.q_min, AN.q_max)


def test_refined_kappa_rules():
    b = AN.beta
    bp = b / (1 + b)
    assert default_kappa(0.1, b) == pytest.approx(0.025)
    assert default_kappa(0.5, b) == pytest.approx((0.5 - bp) / 4)
    with pytest.raises(IncompatibleController):
        refined_controller(AN, 0.1, kappa=0.06)
    with pytest.raises(IncompatibleController):
        refined_controller(AN, 0.5, kappa=(0.5 - bp) / 4 + 0.01)
    refined_controller(AN, 0.5, kappa=(0.5 - bp) / 4)


def test_controller_json():
    c = controller_from_dict({"variant": "refined", "ell": 20, "eps": 0.1, "kappa": 0.02}, AN, 100)
    assert (c.ell, c.eps, c.kappa) == (20, 0.1, 0.02)
    c = controller_from_dict({"variant": "constant", "which": "max"}, AN, 100)
    np.testing.assert_array_equal(c.q, AN.q_max)
    c = controller_from_dict({"variant": "coarse", "eps": 0.1, "alpha": 1.001}, AN, 100)
    assert c.alpha == 1.001
    with pytest.raises(IncompatibleController):
        controller_from_dict({"variant": "nope"}, AN, 100)


# policies -----------------------------------------------------------------------

def test_coarse_policy():
    n = 100
    ctrl = coarse_controller(AN, n, 0.1, alpha=1.001)
    _, thr, _, _, _ = policy_parameters(ctrl, AN, n)
    nu = math.sqrt(2) * norm.ppf(1.001 * 0.1)
    assert thr == pytest.approx(nu * math.sqrt(n * AN.v_min / 2))
    np.testing.assert_array_equal(coarse_next_input(ctrl, ControllerState(), AN), AN.q_min)
    np.testing.assert_array_equal(coarse_next_input(ctrl, ControllerState(0, -1e9), AN), AN.q_min)
    win = ControllerState(n // 2, 1e9, 1e9)
    lose = ControllerState(n // 2, -1e9, -1e9)
    np.testing.assert_array_equal(coarse_next_input(ctrl, win, AN), AN.q_min)
    np.testing.assert_array_equal(coarse_next_input(ctrl, lose, AN), AN.q_max)
    # the decision is latched: later changes in the running sum do not matter
    late = ControllerState(n - 1, 1e9, -1e9)
    np.testing.assert_array_equal(coarse_next_input(ctrl, late, AN), AN.q_max)
    tie = ControllerState(n // 2, thr, thr)
    np.testing.assert_array_equal(coarse_next_input(ctrl, tie, AN), AN.q_max)
    with pytest.raises(HorizonExceeded):
        coarse_next_input(ctrl, ControllerState(n, 0.0), AN)


def test_state_latches_at_half():
    st_ = ControllerState()
    for inc in [1.0, 2.0, 3.0, 4.0]:
        st_ = st_.advance(inc, 4)
        if st_.step == 2:
            assert st_.latched_sum == 3.0
    assert st_.drift_sum == 10.0 and st_.latched_sum == 3.0


def test_refined_policy_band():
    n = 10_000
    ctrl = refined_controller(AN, 0.1)
    _, lo, width, scale, _ = policy_parameters(ctrl, AN, n)
    assert lo == pytest.approx(math.sqrt(n) * r_of_eps(0.1 - ctrl.kappa, AN.v_min, AN.v_max))
    assert width == pytest.approx(math.sqrt(n * AN.v_max) / ctrl.ell)
    at = lambda s: refined_next_input(ctrl, ControllerState(5, s), AN, n)
    np.testing.assert_allclose(at(lo - 100), AN.q_max)
    np.testing.assert_allclose(at(lo + width + 100), AN.q_min)
    np.testing.assert_allclose(at(lo), AN.q_max)
    np.testing.assert_allclose(at(lo + width), AN.q_min, atol=1e-12)
    weights = []
    for s in np.linspace(lo - 5, lo + width + 5, 300):
        q = at(s)
        assert q.min() >= 0 and q.sum() == pytest.approx(1.0)
        # weight on the bold law, read off a coordinate only it charges
        weights.append(q[0] / AN.q_max[0])
    assert np.all(np.diff(weights) <= 1e-12)
    with pytest.raises(HorizonExceeded):
        refined_next_input(ctrl, ControllerState(n, 0.0), AN, n)


def test_emitted_laws_have_zero_drift():
    from dispersion_lab.channel import info_density_matrix

    dens = info_density_matrix(AN.channel, AN.q_star)
    w = AN.channel.w
    drift = (w * np.where(w > 0, dens - AN.capacity_nats, 0.0)).sum(axis=1)
    ctrl = refined_controller(AN, 0.1)
    for s in np.linspace(-100, 100, 41):
        q = next_input(ctrl, ControllerState(3, s), AN, 10_000)
        assert abs(q @ drift) < 1e-9
        assert set(np.flatnonzero(q)) <= set(AN.x_star)


def test_beta_one_reduces_to_constant():
    an = analyze(bsc(0.1))
    ctrl = refined_controller(an, 0.1)
    const = ConstantController(an.q_min)
    for s in (-50.0, 0.0, 50.0):
        np.testing.assert_allclose(next_input(ctrl, ControllerState(1, s), an, 100),
                                   next_input(const, ControllerState(1, s), an, 100))


def test_policies_are_deterministic():
    ctrl = refined_controller(AN, 0.3)
    a = refined_next_input(ctrl, ControllerState(7, 1.25), AN, 400)
    b = refined_next_input(ctrl, ControllerState(7, 1.25), AN, 400)
    np.testing.assert_array_equal(a, b)
