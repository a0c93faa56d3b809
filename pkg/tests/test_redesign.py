import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptdiff.families import FixedTimeFamily, LevantFamily, LinearFamily
from ptdiff.redesign import (
    RedesignParams, beta_lower_bound, build_structure, compute_eta, f_vec, g_terminal,
    h_correction, h_vector, kappa, kappa_max, levant_gains, signed_power, unit_lower_inverse,
)


def bare_params(n=1, alpha=3.0, T_c=1.0, T_f=1.0, L=1.0, gains=None, rho=0.0, mu=1e-3,
                beta_factor=1.0):
    eta = compute_eta(alpha, T_f)
    return RedesignParams(n=n, alpha=alpha, T_c=T_c, T_f=T_f,
                          beta=beta_factor * beta_lower_bound(n, alpha, T_c, eta, rho), L=L,
                          terminal_gains=gains or levant_gains(n), rho=rho, mu=mu)


# -- signed power ---------------------------------------------------------

@pytest.mark.parametrize("x, a, expected", [(-4, 0.5, -2.0), (3, 0, 1.0), (-2, 2, -4.0),
                                            (0, 0, 0.0), (0, 1.5, 0.0), (-7, 0, -1.0)])
def test_signed_power_values(x, a, expected):
    assert signed_power(x, a) == expected


@given(st.floats(-1e6, 1e6), st.floats(0, 4))
def test_signed_power_is_odd(x, a):
    assert signed_power(-x, a) == -signed_power(x, a)


# -- eta, kappa, kappa_max ------------------------------------------------

def test_eta_values():
    assert compute_eta(3, 1) == pytest.approx(0.950213, abs=5e-7)
    assert compute_eta(5, 1) == pytest.approx(0.993262, abs=5e-7)
    assert compute_eta(2.0, math.inf) == 1.0
    assert compute_eta(0.0, math.inf) == 1.0


@pytest.mark.parametrize("alpha, T_f", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0), (0.0, 1.0)])
def test_eta_rejects(alpha, T_f):
    with pytest.raises(ValueError):
        compute_eta(alpha, T_f)


def test_kappa_max_values():
    assert kappa_max(3, 1, 1) == pytest.approx(6.362, abs=1e-3)
    assert kappa_max(5, 1, 1) == pytest.approx(29.49, abs=1e-2)
    assert kappa_max(1e-9, 1, 1) == pytest.approx(1.0, rel=1e-6)
    assert kappa_max(0.0, 1, 1) == 1.0
    with pytest.raises(ValueError, match="unbounded"):
        kappa_max(3, 1, math.inf)


def test_kappa_examples():
    p = bare_params()
    assert kappa(0.0, p) == pytest.approx(0.316738, abs=5e-7)
    assert kappa(1.0, p) == 1.0
    assert kappa(5.0, p) == 1.0
    # left limit equals kappa_max and is never exceeded
    assert kappa(1.0 - 1e-12, p) == pytest.approx(kappa_max(3, 1, 1), rel=1e-9)
    assert kappa(np.nextafter(1.0, 0), p) <= kappa_max(3, 1, 1)
    with pytest.raises(ValueError):
        kappa(-0.1, p)


def test_kappa_unbounded_for_infinite_Tf():
    p = bare_params(T_f=math.inf)
    assert kappa(1.0 - 1e-9, p) > 1e7


@pytest.mark.parametrize("T_f", [1.0, 2.0, math.inf])
def test_kappa_monotone_and_bounded(T_f):
    p = bare_params(T_f=T_f)
    ts = np.linspace(0, 0.999999, 2001)
    ks = np.array([kappa(t, p) for t in ts])
    assert np.all(np.diff(ks) >= 0)
    if math.isfinite(T_f):
        assert ks.max() <= kappa_max(p.alpha, p.T_c, T_f)


def test_kappa_log_derivative_identity():
    # kappa'/kappa = alpha * kappa
    p = bare_params()
    h = 1e-6
    for t in np.linspace(0.01, 0.95, 12):
        dk = (kappa(t + h, p) - kappa(t - h, p)) / (2 * h)
        assert dk / kappa(t, p) == pytest.approx(p.alpha * kappa(t, p), rel=1e-6)


# -- params ---------------------------------------------------------------

def test_build_defaults():
    p = RedesignParams.build(1, 3.0, 1.0, 1.0, 1.0)
    assert p.beta == pytest.approx(2 * (3.0 / compute_eta(3, 1)) ** 2)
    assert p.mu == 1e-3
    assert p.terminal_gains == (1.5, 1.1)
    assert RedesignParams.build(1, 3.0, 1.0, 1.0, 20.0).mu == pytest.approx(0.02)


def test_beta_bound_enforced():
    bmin = beta_lower_bound(1, 3.0, 1.0, compute_eta(3, 1))
    RedesignParams(1, 3.0, 1.0, 1.0, bmin, 1.0, (1.5, 1.1))
    with pytest.raises(ValueError, match="below lower bound"):
        RedesignParams(1, 3.0, 1.0, 1.0, 0.99 * bmin, 1.0, (1.5, 1.1))


def test_rho_changes_beta_bound():
    eta = compute_eta(3, 1)
    assert beta_lower_bound(1, 3.0, 1.0, eta, rho=2.0) == 1.0
    assert beta_lower_bound(1, 3.0, 1.0, eta, rho=1.0) == pytest.approx(3.0 / eta)


@pytest.mark.parametrize("kw", [dict(mu=0.0), dict(rho=-0.5), dict(rho=2.5), dict(T_c=0.0),
                                dict(gains=(1.0,))])
def test_params_reject(kw):
    with pytest.raises(ValueError):
        bare_params(**kw)


def test_alpha_must_lie_in_I_phi():
    with pytest.raises(ValueError, match="I_phi"):
        RedesignParams.build(1, 3.0, 1.0, math.inf, 1.0, family=LinearFamily.default(1, r=1.0))
    RedesignParams.build(1, 0.5, 1.0, math.inf, 1.0, family=LinearFamily.default(1, r=1.0))
    with pytest.raises(ValueError, match="order"):
        RedesignParams.build(2, 3.0, 1.0, 1.0, 1.0, family=FixedTimeFamily(1, 1.0, 1.0))


# -- structure matrices ---------------------------------------------------

@pytest.mark.parametrize("alpha", [3.0, 5.0])
def test_Q_first_order(alpha):
    S = build_structure(1, alpha, 0.0)
    assert np.array_equal(S.Q_rho, np.array([[1.0, 0.0], [-alpha, 1.0]]))
    assert np.array_equal(S.M_power, np.array([-alpha, alpha ** 2]))


def test_Q_second_order_and_trivial():
    a = 1.7
    S = build_structure(2, a, 0.0)
    assert np.allclose(S.Q_rho, [[1, 0, 0], [-3 * a, 1, 0], [4 * a * a, -2 * a, 1]], rtol=0, atol=1e-14)
    assert np.array_equal(build_structure(0, a, 0.5).Q_rho, np.eye(1))
    U = S.U
    assert np.array_equal(U, np.eye(3, k=1))
    assert np.array_equal(np.diag(build_structure(2, a, 1.0).D_rho), [-1.0, 0.0, 1.0])


@pytest.mark.parametrize("n", range(9))
@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0, 5.0])
def test_Q_unit_lower_triangular(n, alpha):
    for rho in (0.0, 1.0, n + 1.0):
        Q = build_structure(n, alpha, rho).Q_rho
        assert np.all(np.diag(Q) == 1.0)
        assert np.all(np.triu(Q, 1) == 0.0)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_unit_lower_inverse(n):
    Q = build_structure(n, 2.0, 0.0).Q_rho
    assert np.allclose(unit_lower_inverse(Q) @ Q, np.eye(n + 1), atol=1e-9)


# -- f, g, h --------------------------------------------------------------

def test_f_zero_at_origin(linear1):
    p, fam = linear1
    assert np.all(f_vec(0.0, p, fam) == 0)
    prho = RedesignParams.build(1, 3.0, 1.0, fam.T_f, 1.0, rho=1.0, family=fam)
    assert np.all(f_vec(0.0, prho, fam, t=0.3) == 0)


def test_f_second_term_hand_oracle():
    # with phi = 0 only (U - alpha D)^2 B_2 e0 = [-alpha e0, alpha^2 e0] remains
    class Zero(LinearFamily):
        def phi(self, i, w):
            return 0.0
    fam = Zero(n=1, r=1.0, gains=(4.0, 4.0))
    p = bare_params()
    assert np.allclose(f_vec(2.0, p, fam), [-3.0 * 2.0, 9.0 * 2.0])


def test_f_needs_time_for_rho():
    fam = LevantFamily(1, 1.0)
    p = bare_params(rho=1.0)
    with pytest.raises(ValueError):
        f_vec(1.0, p, fam)


@given(st.floats(-50, 50), st.floats(0, 0.99))
@settings(max_examples=60, deadline=None)
def test_f_odd_for_odd_families(e0, t):
    for fam in (LinearFamily.default(1, r=5.0), LevantFamily(1, 1.0), FixedTimeFamily(1, 1.0, 1.0)):
        p = bare_params(T_f=fam.T_f, beta_factor=2.0)
        assert np.allclose(f_vec(-e0, p, fam, t), -f_vec(e0, p, fam, t), rtol=1e-14, atol=0)


def test_rho_zero_paths_agree_bitwise(rng):
    from ptdiff.redesign import _f_rho
    fam = FixedTimeFamily(1, 1.0, 1.0)
    p = bare_params(beta_factor=2.0)
    S = build_structure(1, p.alpha, 0.0)
    for _ in range(50):
        e0 = rng.normal() * 10
        t = rng.uniform(0, 0.999)
        assert np.array_equal(f_vec(e0, p, fam, t), _f_rho(e0, t, p, fam, S, 0.0))


def test_g_examples():
    p = bare_params(gains=(1.5, 1.1))
    assert g_terminal(0, 4.0, p) == pytest.approx(3.0)
    assert g_terminal(1, -0.5, p) == pytest.approx(-1.1)
    p0 = bare_params(L=0.0, mu=0.01, gains=(1.5, 1.1))
    assert g_terminal(1, 2.0, p0) == pytest.approx(0.011)


@given(st.floats(-1e3, 1e3).filter(lambda x: x != 0))
def test_g_last_row_magnitude(e0):
    p = bare_params(gains=(1.5, 1.1), L=2.0)
    assert abs(g_terminal(1, e0, p)) == pytest.approx(1.1 * 2.0)


def test_h_example():
    fam = LinearFamily(n=1, r=1.0, gains=(4.0, 4.0))
    p = bare_params()  # beta = beta_min; plain params skip the I_phi check on purpose
    assert h_correction(0, 1.0, 0.0, p, fam) == pytest.approx(0.316738, abs=5e-7)


def test_h_switches_at_Tc(example1):
    p, fam = example1
    for e0 in (-3.0, 0.2, 5.0):
        assert h_correction(0, e0, 1.0, p, fam) == g_terminal(0, e0, p)
        assert h_correction(1, e0, 1.7, p, fam) == g_terminal(1, e0, p)
        assert h_correction(1, e0, 0.2, p, fam, switched=True) == g_terminal(1, e0, p)
        assert h_correction(0, 0.0, 0.4, p, fam) == 0.0


def test_h_vector_matches_components(example1):
    p, fam = example1
    for t in (0.0, 0.5, 0.99, 1.2):
        hv = h_vector(2.5, t, p, fam)
        assert np.allclose(hv, [h_correction(i, 2.5, t, p, fam) for i in range(2)], rtol=1e-14)


def test_levant_gain_defaults():
    assert levant_gains(0) == (1.1,)
    assert levant_gains(1) == pytest.approx((1.5, 1.1))
    assert levant_gains(2) == pytest.approx((2.0, 2.12, 1.1), abs=5e-3)
    assert levant_gains(3) == pytest.approx((3.0, 4.16, 3.06, 1.1), abs=5e-3)
    with pytest.raises(ValueError):
        levant_gains(4)
