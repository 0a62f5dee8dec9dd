"""Tests for the inductive layered-ansatz construction and the glued field."""

import numpy as np
import pytest
from scipy.integrate import simpson

from interface_lab.ansatz import (
    AnsatzOrderK,
    build_ansatz,
    glue,
    induct,
    residual,
    residual_scan,
    residual_terms,
    zeta_window,
)
from interface_lab.geometry import (
    TubeMetric,
    boosted_plane,
    evolve_radial_minimal,
)
from interface_lab.nonlinearity import allen_cahn, apply_T, build_profile


@pytest.fixture(scope="module")
def profile():
    return build_profile(allen_cahn())


@pytest.fixture(scope="module")
def circle():
    return evolve_radial_minimal(2.0, 0.8, nt=129, ntheta=16)


def _raw_ansatz(profile, surface, eps):
    """Order -1 state: v = w, h = 0 on the standard window."""
    zeta = zeta_window(eps, surface.delta)
    shape = surface.Y.shape[:2]
    zero = np.zeros(shape + zeta.shape)
    return AnsatzOrderK(-1, eps, profile, surface, zeta,
                        np.zeros(shape), zero.copy(), zero.copy(), zero.copy())


def test_zeta_window_shape_and_cap(profile):
    z = zeta_window(0.01, 1.0)
    assert z[0] == -z[-1]
    assert z[-1] == pytest.approx(14.0)
    assert np.allclose(np.diff(z), 0.05)
    z2 = zeta_window(0.1, 0.6)
    assert z2[-1] == pytest.approx(3.0)


def test_plane_kink_is_exact(profile):
    surf = boosted_plane(v=0.3, T=1.0, nt=65, n=1)
    raw = _raw_ansatz(profile, surf, 0.05)
    assert np.max(np.abs(residual(raw))) <= 1e-8


def test_plane_is_fixed_point_of_induction(profile):
    surf = boosted_plane(v=0.3, T=1.0, nt=65, n=1)
    ans = build_ansatz(profile, surf, 0.05, 2)
    assert np.max(np.abs(ans.h)) <= 1e-10
    assert np.max(np.abs(ans.phi)) <= 1e-8
    assert np.max(np.abs(residual(ans))) <= 1e-8


def test_order_zero_residual_matches_curvature_expansion(profile, circle):
    eps = 0.05
    raw = _raw_ansatz(profile, circle, eps)
    S = residual(raw)
    tube = TubeMetric(circle)
    a_G, b_G = tube.curvature_expansion()
    zeta = raw.zeta
    _, wp, _ = profile.tabulate(zeta)
    z = eps * zeta
    pred = -eps**2 * (a_G[:, :, None] + b_G(z)) * zeta * wp
    # the prediction truncates bn at second order in z, so the defect is the
    # cubic tail ~ eps^4 zeta^3 w'
    assert np.max(np.abs(S - pred)) <= 10.0 * eps**4
    assert np.max(np.abs(S - pred)) <= 0.05 * np.max(np.abs(pred))


def test_first_correction_field(profile, circle):
    eps = 0.05
    ans = build_ansatz(profile, circle, eps, 0)
    tube = TubeMetric(circle)
    a_G, _ = tube.curvature_expansion()
    zeta = ans.zeta
    _, wp, _ = profile.tabulate(zeta)
    tr = apply_T(profile, zeta, zeta * wp)
    pred = -eps**2 * a_G[:, :, None] * tr.p
    # the b_Gamma part of the source contributes at the next epsilon order
    tol = 30.0 * eps**3
    assert np.max(np.abs(ans.phi - pred)) <= tol
    assert np.max(np.abs(ans.h)) == 0.0


def test_residual_quadratic_remainder(profile, circle):
    """S(v + dphi) + S(v - dphi) - 2 S(v) shrinks quadratically in dphi."""
    eps = 0.05
    base = build_ansatz(profile, circle, eps, 0)
    zeta = base.zeta
    y0 = circle.y0[:, None, None]
    g = np.exp(-0.5 * zeta**2)
    A = 1.0 + 0.3 * np.cos(3.0 * y0)
    psi = A * g
    psi_z = A * (-zeta * g)
    psi_zz = A * (zeta**2 - 1.0) * g

    def perturbed(delta):
        return AnsatzOrderK(base.k, eps, profile, circle, zeta, base.h,
                            base.phi + delta * psi, base.phi_z + delta * psi_z,
                            base.phi_zz + delta * psi_zz)

    defects = []
    for delta in (1e-3, 5e-4):
        n = residual(perturbed(delta)) + residual(perturbed(-delta)) \
            - 2.0 * residual(base)
        defects.append(np.max(np.abs(n)))
    ratio = defects[0] / defects[1]
    assert 3.5 <= ratio <= 4.5
    assert defects[0] <= 10.0 * (1e-3) ** 2


def test_induction_reduces_projection(profile, circle):
    eps = 0.04
    ans = build_ansatz(profile, circle, eps, 0)
    zeta = ans.zeta
    _, wp, _ = profile.tabulate(zeta)

    def proj_sup(a):
        return float(np.max(np.abs(simpson(residual(a) * wp, x=zeta))))

    p0 = proj_sup(ans)
    ans = induct(ans)
    p1 = proj_sup(ans)
    assert p1 <= eps * p0 * 5.0
    assert p1 < p0


def test_phi_envelope_scales_as_eps_squared(profile, circle):
    sups = []
    eps_list = (0.08, 0.04, 0.02)
    for eps in eps_list:
        ans = build_ansatz(profile, circle, eps, 0)
        rep = ans.envelope_report()
        assert np.isfinite(rep["C_phi"])
        sups.append(rep["sup_phi"])
    slope = np.polyfit(np.log(eps_list), np.log(sups), 1)[0]
    assert slope >= 1.8


def test_residual_scan_slopes(profile, circle):
    out = residual_scan(profile, circle, ks=(0, 1), eps_list=(0.08, 0.04, 0.02))
    assert out["slopes"][0] >= 2.7
    assert out["slopes"][1] >= 3.7
    assert len(out["rows"]) == 6


def test_orthogonality_defect_recorded(profile, circle):
    ans = build_ansatz(profile, circle, 0.05, 1)
    for rec in ans.history:
        assert rec["orthogonality_defect"] <= 1e-8


def test_glue_far_field_and_interface(profile, circle):
    eps = 0.05
    ans = build_ansatz(profile, circle, eps, 1)
    g = glue(ans)
    t = np.full(3, 0.3)
    R = circle.aux["R"](0.3)
    u_far, ut_far = g.u_and_ut(np.array([R + 1.5, R + 2.0, 0.05]), t)
    assert np.allclose(u_far[:2], 1.0)
    assert u_far[2] == -1.0
    assert np.allclose(ut_far, 0.0)
    u_on, _ = g.u_and_ut(np.array([R]), np.array([0.3]))
    assert abs(u_on[0]) <= 10.0 * eps


def test_glue_continuity_across_band(profile, circle):
    eps = 0.05
    ans = build_ansatz(profile, circle, eps, 1)
    g = glue(ans)
    R = circle.aux["R"](0.4)
    x = np.linspace(R - 3.0 * g.r_glue, R + 3.0 * g.r_glue, 4001)
    u, _ = g.u_and_ut(x, np.full_like(x, 0.4))
    jumps = np.abs(np.diff(u))
    dx = x[1] - x[0]
    # steepest slope is the kink core ~ |w'|/eps
    assert np.max(jumps) <= 2.0 * dx / eps


def test_glue_time_derivative_consistency(profile, circle):
    eps = 0.05
    ans = build_ansatz(profile, circle, eps, 1)
    g = glue(ans)
    R = circle.aux["R"](0.4)
    x = np.linspace(R - 0.1, R + 0.1, 21)
    t = np.full_like(x, 0.4)
    dt = 1e-6
    _, ut = g.u_and_ut(x, t)
    up, _ = g.u_and_ut(x, t + dt)
    um, _ = g.u_and_ut(x, t - dt)
    fd = (up - um) / (2.0 * dt)
    assert np.max(np.abs(ut - fd)) <= 1e-5 * max(1.0, np.max(np.abs(ut)))


def test_glue_radius_guard(profile, circle):
    ans = build_ansatz(profile, circle, 0.05, 0)
    with pytest.raises(ValueError):
        glue(ans, r=circle.delta)


def test_window_escape_warns(profile):
    surf = evolve_radial_minimal(1.0, 0.8, nt=65, ntheta=8)
    raw = _raw_ansatz(profile, surf, 0.05)
    raw.h[:] = surf.delta / 0.05  # push the leaves far outside the tube
    with pytest.warns(UserWarning):
        residual(raw)
