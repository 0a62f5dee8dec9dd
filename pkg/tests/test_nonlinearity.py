import numpy as np
import pytest

from interface_lab.nonlinearity import (
    Nonlinearity,
    allen_cahn,
    apply_T,
    build_profile,
    project_off_kernel,
    quadratic_form,
    _fd_derivative,
)


@pytest.fixture(scope="module")
def profile():
    return build_profile(allen_cahn(), half_width=12.0, n=4096)


def test_nonlinearity_validation_rejects_unbalanced_well():
    with pytest.raises(ValueError):
        Nonlinearity(
            W=lambda u: 0.25 * (1 - np.asarray(u) ** 2) ** 2 + 0.1 * np.asarray(u),
            f=lambda u: np.asarray(u) - np.asarray(u) ** 3 - 0.1,
            fp=lambda u: 1 - 3 * np.asarray(u) ** 2,
            fpp=lambda u: -6 * np.asarray(u),
            a=2.0,
        )


def test_allen_cahn_constants():
    nl = allen_cahn()
    assert nl.a == 2.0
    assert nl.sigma == 2.0
    assert nl.decay_rate == pytest.approx(np.sqrt(2.0))
    assert nl.f(0.5) == pytest.approx(0.5 - 0.125)


def test_profile_matches_closed_form(profile):
    # Allen-Cahn heteroclinic has the closed form tanh(zeta / sqrt(2)).
    exact = np.tanh(profile.zeta / np.sqrt(2.0))
    assert np.max(np.abs(profile.w - exact)) <= 1e-12


def test_profile_odd_and_monotone(profile):
    assert profile.w[len(profile.w) // 2] == pytest.approx(0.0, abs=1e-14)
    assert np.max(np.abs(profile.w + profile.w[::-1])) <= 1e-13
    assert np.all(np.diff(profile.w) > 0)
    assert np.all(profile.wp > 0)


def test_profile_ode_residual_via_finite_differences(profile):
    dz = profile.zeta[1] - profile.zeta[0]
    d2 = (profile.w[:-2] - 2 * profile.w[1:-1] + profile.w[2:]) / dz**2
    # second-order FD of the exact samples agrees with -f(w) at O(dz^2)
    resid = d2 + allen_cahn().f(profile.w[1:-1])
    assert np.max(np.abs(resid)) <= 5e-5


def test_profile_tail_bound(profile):
    # |w - 1| <= c exp(-sqrt(2) zeta) with c close to the exact value 2
    z = np.array([8.0, 10.0, 11.5])
    w = profile.w_at(z)
    assert np.all(np.abs(w - 1.0) <= 2.0 * np.exp(-np.sqrt(2.0) * z) * (1 + 1e-6))
    assert profile.tail_c_plus == pytest.approx(2.0, rel=1e-6)
    assert profile.tail_c_minus == pytest.approx(2.0, rel=1e-6)


def test_xi_closed_form(profile):
    # int (w')^2 = 2 sqrt(2) / 3 for Allen-Cahn
    assert profile.xi == pytest.approx(2.0 * np.sqrt(2.0) / 3.0, abs=1e-12)


def test_w_at_matches_grid_and_tails(profile):
    idx = np.array([13, 407, 2048, 3501])
    assert profile.w_at(profile.zeta[idx]) == pytest.approx(profile.w[idx], abs=1e-14)
    z = np.array([12.7, 14.0, -13.2])
    assert profile.w_at(z) == pytest.approx(np.tanh(z / np.sqrt(2.0)), abs=1e-9)


def test_apply_T_solves_ode(profile):
    m = np.abs(profile.zeta) <= 10.0 + 1e-12
    z = profile.zeta[m]
    dz = z[1] - z[0]
    q = z * profile.wp[m]
    res = apply_T(profile, z, q)
    d2 = _fd_derivative(_fd_derivative(res.p, dz), dz)
    w = profile.w_at(z)
    assert np.max(np.abs(d2 + allen_cahn().fp(w) * res.p + q)) <= 1e-6
    assert np.max(np.abs(d2 - res.pzz)) <= 1e-6
    assert np.max(np.abs(_fd_derivative(res.p, dz) - res.dp)) <= 1e-7
    assert res.orthogonal


def test_apply_T_linearity(profile):
    m = np.abs(profile.zeta) <= 10.0 + 1e-12
    z = profile.zeta[m]
    wp = profile.wp[m]
    q1 = z * wp
    q2 = project_off_kernel(profile, z, np.sin(z) * np.exp(-(z / 3.0) ** 2))
    rng = np.random.default_rng(7)
    for _ in range(5):
        al, be = rng.normal(size=2)
        combo = apply_T(profile, z, al * q1 + be * q2).p
        parts = al * apply_T(profile, z, q1).p + be * apply_T(profile, z, q2).p
        scale = max(np.max(np.abs(combo)), 1e-30)
        assert np.max(np.abs(combo - parts)) / scale <= 1e-9


def test_apply_T_envelope_decay(profile):
    # orthogonal polynomial-times-w' sources produce decaying outputs
    m = np.abs(profile.zeta) <= 10.0 + 1e-12
    z = profile.zeta[m]
    q = z * profile.wp[m]
    res = apply_T(profile, z, q)
    edge = np.abs(res.p[np.abs(z) >= 9.0])
    assert np.max(edge) <= 1e-3 * np.max(np.abs(res.p))
    assert res.envelope_constant < 100.0


def test_apply_T_flags_nonorthogonal_source(profile):
    m = np.abs(profile.zeta) <= 10.0 + 1e-12
    z = profile.zeta[m]
    res = apply_T(profile, z, profile.wp[m])
    assert not res.orthogonal


def test_quadratic_form_kernel_and_identity(profile):
    z = profile.zeta
    assert abs(quadratic_form(profile, z, profile.wp, profile.wpp)) <= 1e-8
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b, c = rng.uniform(0.3, 2.0, 3)
        tau = rng.uniform(3.0, 6.0)
        env = np.exp(-((z / tau) ** 2))
        rho = a * np.sin(b * z + c) * env + 0.5
        drho = (a * b * np.cos(b * z + c) - 2.0 * a * np.sin(b * z + c) * z / tau**2) * env
        psi = rho * profile.wp
        dpsi = drho * profile.wp + rho * profile.wpp
        lhs = quadratic_form(profile, z, psi, dpsi)
        rhs = np.trapezoid(profile.wp**2 * drho**2, z)
        assert abs(lhs - rhs) <= 1e-6 * abs(rhs)


def test_quadratic_form_coercive_off_kernel(profile):
    z = profile.zeta
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(100):
        coef = rng.normal(size=6)
        psi = sum(
            c * np.sin((j + 1) * 0.3 * z + j) * np.exp(-((z / 5.0) ** 2))
            for j, c in enumerate(coef)
        )
        psi = project_off_kernel(profile, z, psi)
        dpsi = _fd_derivative(psi, z[1] - z[0])
        ratios.append(
            quadratic_form(profile, z, psi, dpsi)
            / np.trapezoid(dpsi**2 + psi**2, z)
        )
    assert min(ratios) > 0.0
