"""Tests for the Fermi tube chart and its time-blended modification."""

import numpy as np
import pytest

from interface_lab.fermi import (
    ModifiedFermiChart,
    build_fermi_chart,
    build_modified_chart,
    chi_blend,
    chi_blend_derivative,
)
from interface_lab.geometry import (
    boosted_plane,
    evolve_radial_minimal,
    static_cylinder,
)

R1 = 0.1
R2 = R1 * R1 / (1.0 + R1)


@pytest.fixture(scope="module")
def radial_chart():
    return build_modified_chart(evolve_radial_minimal(R0=1.0, T=0.8))


@pytest.fixture(scope="module")
def plane_chart():
    return build_modified_chart(boosted_plane(v=0.4, T=1.0), delta1=0.5)


# ---------------------------------------------------------------------------
# cutoff


def test_chi_plateaus_and_support():
    assert chi_blend(0.0, R1) == 1.0
    assert chi_blend(R2 * 0.98, R1) == 1.0
    assert chi_blend(-R2 * 0.5, R1) == 1.0
    assert chi_blend(R1, R1) == 0.0
    assert chi_blend(R1 * 1.02, R1) == 0.0
    assert chi_blend(5 * R1, R1) == 0.0


def test_chi_even_monotone_bounded():
    z = np.linspace(-0.2, 0.2, 4001)
    c = chi_blend(z, R1)
    assert np.all((0.0 <= c) & (c <= 1.0))
    assert np.max(np.abs(c - c[::-1])) < 1e-12
    half = chi_blend(np.linspace(0.0, 0.15, 3000), R1)
    assert np.all(np.diff(half) <= 1e-14)


def test_chi_matches_profile_between_radii():
    # away from the mollified corners the cutoff is exactly r1 (r1/z - 1)
    mid = np.sqrt(R1 * R2)
    assert abs(chi_blend(mid, R1) - R1 * (R1 / mid - 1.0)) <= 0.05
    z = np.linspace(R2 * 1.1, R1 * 0.9, 200)
    assert np.max(np.abs(chi_blend(z, R1) - R1 * (R1 / z - 1.0))) < 1e-14


def test_chi_derivative_consistent_and_c2():
    z = np.linspace(1e-3, 0.15, 6000)
    for h, tol in ((1e-6, 1e-2), (1e-7, 1e-4)):
        fd = (chi_blend(z + h, R1) - chi_blend(z - h, R1)) / (2 * h)
        assert np.max(np.abs(fd - chi_blend_derivative(z, R1))) < tol
    # second derivative continuous across every bridge joint (C^2)
    h = 1e-9  # the third derivative is ~1e10 near the joints, so h must be tiny
    for zj in (R2, R2 * 1.04, R1 * 0.96, R1):
        left = (chi_blend_derivative(zj, R1) - chi_blend_derivative(zj - h, R1)) / h
        right = (chi_blend_derivative(zj + h, R1) - chi_blend_derivative(zj, R1)) / h
        assert abs(left - right) < 0.02 * (abs(left) + abs(right)) + 1.0
    # derivative is odd
    zz = np.linspace(-0.15, 0.15, 1001)
    d = chi_blend_derivative(zz, R1)
    assert np.max(np.abs(d + d[::-1])) < 1e-10


# ---------------------------------------------------------------------------
# Fermi chart


def test_fermi_chart_rejects_degenerate_tube():
    surf = static_cylinder(R0=1.0, T=0.5)
    object.__setattr__(surf, "delta", 1.5)  # beyond the focal radius
    with pytest.raises(ValueError):
        build_fermi_chart(surf)


def test_fermi_chart_injective_on_all_surfaces():
    for surf in (evolve_radial_minimal(), boosted_plane(v=0.4),
                 static_cylinder(T=0.5)):
        rep = build_fermi_chart(surf).injectivity_report()
        assert rep["fold_pairs"] == 0
        assert rep["min_image_to_label_ratio"] > 0.05


# ---------------------------------------------------------------------------
# implicit time relabeling


def test_plane_eta0_closed_form(plane_chart):
    # t = y0 + z*gamma*v, so eta0 = Y0 - z*gamma*v exactly
    v = 0.4
    gamma = 1.0 / np.sqrt(1.0 - v * v)
    y = np.linspace(0.0, plane_chart.T1, 13)
    z = np.linspace(-0.5, 0.5, 11)
    Y, Z = np.meshgrid(y, z, indexing="ij")
    eta = plane_chart.solve_eta0(Y, 0, Z)
    assert np.max(np.abs(eta - (Y - Z * gamma * v))) < 1e-11


def test_eta0_pinned_at_z_zero_and_t_zero(radial_chart):
    rep = radial_chart.identity_reports()
    assert rep["eta0_at_z0"] < 1e-12
    assert rep["eta0_at_t0"] < 1e-12  # initial radial velocity vanishes


def test_eta0_linear_bound(radial_chart):
    surf = radial_chart.surface
    M = float(np.max(np.abs(surf.nu[..., 0])))
    rep = radial_chart.identity_reports()
    assert rep["C_eta_minus_y0"] <= 1.1 * M + 1e-9


# ---------------------------------------------------------------------------
# modified metric


def test_modified_reduces_to_fermi_inside_r2(radial_chart, plane_chart):
    for chart in (radial_chart, plane_chart):
        assert chart.identity_reports()["fermi_identity_defect"] == 0.0


def test_coordinate_time_is_lab_time_outside_r1(radial_chart, plane_chart):
    for chart in (radial_chart, plane_chart):
        assert chart.identity_reports()["lab_time_defect"] < 1e-12


def test_signature_and_inverse(radial_chart, plane_chart):
    for chart in (radial_chart, plane_chart):
        rep = chart.signature_report()
        assert rep["g00_max"] < 0.0
        assert rep["ginv00_max"] < 0.0
        assert rep["spatial_min_eig"] > 0.0
        assert rep["spatial_inv_min_eig"] > 0.0
        assert rep["block_inverse_defect"] < 1e-10
        assert rep["gnn_min"] > 0.0


def test_plane_modified_metric_closed_form(plane_chart):
    v, chart = 0.4, plane_chart
    gamma = 1.0 / np.sqrt(1.0 - v * v)
    y = np.linspace(0.0, chart.T1, 9)
    zout = np.full_like(y, chart.r1 * 1.5)
    g = chart.modified_metric(y, 0, zout)
    # tolerance reflects spline-extrapolation roundoff in the eta0 data
    assert np.max(np.abs(g[..., 0, 0] + 1.0 / gamma**2)) < 1e-9
    assert np.max(np.abs(g[..., 0, 1] - v / gamma)) < 1e-9
    assert np.max(np.abs(g[..., 1, 1] - (1.0 - v * v))) < 1e-9
    zin = np.full_like(y, chart.r2 * 0.5)
    g = chart.modified_metric(y, 0, zin)
    assert np.max(np.abs(g[..., 0, 1])) == 0.0
    assert np.max(np.abs(g[..., 1, 1] - 1.0)) == 0.0


def test_block_inverse_matches_dense():
    rng = np.random.default_rng(11)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        g = A @ A.T + np.eye(3)  # positive definite
        g[0, 0] = -abs(g[0, 0]) - 2.0 * np.abs(g[0, 1:]).sum()  # Lorentzian
        inv = ModifiedFermiChart.block_inverse(g[None])[0]
        assert np.max(np.abs(inv - np.linalg.inv(g))) < 1e-10


# ---------------------------------------------------------------------------
# construction guards


def test_delta1_must_fit_in_tube():
    surf = evolve_radial_minimal()
    with pytest.raises(ValueError):
        build_modified_chart(surf, delta1=2.0 * surf.delta)


def test_r1_bound_enforced():
    surf = evolve_radial_minimal()
    with pytest.raises(ValueError):
        build_modified_chart(surf, r1=surf.delta)


def test_time_window_shrinks():
    chart = build_modified_chart(evolve_radial_minimal(R0=1.0, T=0.8))
    surf = chart.surface
    M = float(np.max(np.abs(surf.nu[..., 0])))
    assert chart.T1 == pytest.approx(0.8 - chart.delta1 * M)
    assert 0.0 < chart.T1 < 0.8
