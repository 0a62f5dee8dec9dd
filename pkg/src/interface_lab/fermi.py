"""Fermi coordinates of the normal tube and their time-blended modification.

The Fermi chart is (x, t) = Y(y) + z nu(y).  Away from the surface it is
convenient for energy estimates to label time slices by lab time instead of
the Fermi coordinate y0; the modified chart replaces

    y0(Y, z) = chi(z) * Y0 + (1 - chi(z)) * eta0(Y, z)

where eta0 solves t(eta0, Y', z) = Y0 and the even cutoff chi equals 1 inside
|z| <= r2 and 0 outside |z| >= r1, with r2 = r1^2 / (1 + r1).  The modified
metric follows from the pullback relations

    G_00 = (dy0/dY0)^2 g_00,   G_0i = (dy0/dY0)(dy0/dYi) g_00,
    G_ij = (dy0/dYi)(dy0/dYj) g_00 + g_ij,

so in particular G_nn = 1 + (dy0/dz)^2 g_00.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import TimelikeSurface, TubeMetric, canonical_coordinates

__all__ = [
    "FermiChart",
    "ModifiedFermiChart",
    "build_fermi_chart",
    "build_modified_chart",
    "chi_blend",
    "chi_blend_derivative",
]


def _smoothstep(x):
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 flat at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def _dsmoothstep(x):
    inside = (x > 0.0) & (x < 1.0)
    x = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * x**2 * (1.0 - x) ** 2, 0.0)


def _blend_pieces(s, r1, sm):
    r2 = r1 * r1 / (1.0 + r1)
    lo2, hi2 = r2, r2 * (1.0 + 2.0 * sm)
    lo1, hi1 = r1 * (1.0 - 2.0 * sm), r1
    return r2, lo2, hi2, lo1, hi1


def chi_blend(z, r1: float, sm: float = 0.02):
    """Even C^2 cutoff: 1 for |z| <= r2, the profile r1(r1/|z| - 1) in the
    middle, 0 for |z| >= r1; quintic-smoothstep bridges of relative width
    ``sm`` remove the corners at r2 and r1."""
    s = np.abs(np.asarray(z, dtype=float))
    r2, lo2, hi2, lo1, hi1 = _blend_pieces(s, r1, sm)
    base = r1 * (r1 / np.maximum(s, 0.5 * r2) - 1.0)
    tau = (s - lo2) / (hi2 - lo2)
    upper = (1.0 - _smoothstep(tau)) + _smoothstep(tau) * base
    sig = (s - lo1) / (hi1 - lo1)
    lower = (1.0 - _smoothstep(sig)) * base
    out = np.where(s <= lo2, 1.0,
          np.where(s < hi2, upper,
          np.where(s <= lo1, base,
          np.where(s < hi1, lower, 0.0))))
    return out if out.ndim else float(out)


def chi_blend_derivative(z, r1: float, sm: float = 0.02):
    """d/dz of chi_blend (odd in z)."""
    zz = np.asarray(z, dtype=float)
    s = np.abs(zz)
    r2, lo2, hi2, lo1, hi1 = _blend_pieces(s, r1, sm)
    ssafe = np.maximum(s, 0.5 * r2)
    base = r1 * (r1 / ssafe - 1.0)
    dbase = -r1 * r1 / ssafe**2
    tau = (s - lo2) / (hi2 - lo2)
    dtau = 1.0 / (hi2 - lo2)
    dupper = _dsmoothstep(tau) * dtau * (base - 1.0) + _smoothstep(tau) * dbase
    sig = (s - lo1) / (hi1 - lo1)
    dsig = 1.0 / (hi1 - lo1)
    dlower = -_dsmoothstep(sig) * dsig * base + (1.0 - _smoothstep(sig)) * dbase
    dmag = np.where(s <= lo2, 0.0,
           np.where(s < hi2, dupper,
           np.where(s <= lo1, dbase,
           np.where(s < hi1, dlower, 0.0))))
    out = dmag * np.sign(zz)
    return out if out.ndim else float(out)


@dataclass
class FermiChart:
    """The map Phi(y, z) = Y(y) + z nu(y) on the tube |z| < delta."""

    surface: TimelikeSurface
    tube: TubeMetric
    delta: float

    def map(self, z) -> np.ndarray:
        """Sampled Phi on the surface grid for each z, shape (Nt, Nth, M, d)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return self.surface.Y[..., None, :] + z[..., :, None] * self.surface.nu[..., None, :]

    def metric(self, z) -> np.ndarray:
        return self.tube.full(z)

    def injectivity_report(self, nz: int = 7, stride: int = 8,
                           ratio: float = 0.05) -> dict:
        """Fold detection: the image distance of any two sample labels must
        stay above ``ratio`` times their label distance (the chart is a
        near-isometry, so a much smaller image distance means a fold)."""
        surf = self.surface
        z = np.linspace(-self.delta, self.delta, nz)
        pts = self.map(z)[::stride, ::stride]
        nt, nth = pts.shape[0], pts.shape[1]
        y = surf.y0[::stride]
        th = surf.theta[::stride] if surf.periodic else np.zeros(nth)
        scale = float(np.min(np.linalg.norm(surf.Y[..., 1:], axis=-1))) if surf.periodic else 1.0
        Yl, Tl, Zl = np.meshgrid(y, th, z, indexing="ij")
        lbl = np.stack([Yl, Tl, Zl], axis=-1).reshape(-1, 3)
        pts = pts.reshape(-1, surf.Y.shape[-1])
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        dth = np.abs(lbl[:, None, 1] - lbl[None, :, 1])
        if surf.periodic:
            dth = np.minimum(dth, 2.0 * np.pi - dth)
        l2 = ((lbl[:, None, 0] - lbl[None, :, 0]) ** 2
              + (scale * dth) ** 2
              + (lbl[:, None, 2] - lbl[None, :, 2]) ** 2)
        np.fill_diagonal(l2, 1.0)
        np.fill_diagonal(d2, 1.0)
        worst = float(np.min(np.sqrt(d2 / l2)))
        return {"min_image_to_label_ratio": worst, "fold_pairs":
                int(np.sum(d2 < (ratio**2) * l2) // 2)}


def build_fermi_chart(surface: TimelikeSurface) -> FermiChart:
    tube = TubeMetric(surface)
    z = np.linspace(-surface.delta, surface.delta, 101)
    floor = 1e-3 * float(np.median(np.abs(tube.det(0.0))))
    if np.max(tube.det(z)) >= -floor:
        raise ValueError("tube metric degenerates inside |z| < delta; shrink delta")
    return FermiChart(surface, tube, surface.delta)


def _solve_bracketed(fun, lo, hi, tol=1e-14, max_iter=200):
    """Vectorized bracketed root finder: bisection refined by secant steps."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = fun(lo)
    fhi = fun(hi)
    if np.any(flo * fhi > 0):
        raise ValueError("root not bracketed; chart radii too large for this surface")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = fun(x)
        left = flo * fx <= 0
        hi = np.where(left, x, hi)
        fhi = np.where(left, fx, fhi)
        lo = np.where(left, lo, x)
        flo = np.where(left, flo, fx)
        if np.max(hi - lo) < tol and np.max(np.abs(fx)) < tol:
            break
        denom = fhi - flo
        sec = np.where(np.abs(denom) > 1e-300, lo - flo * (hi - lo) / np.where(denom == 0, 1.0, denom), 0.5 * (lo + hi))
        inside = (sec > lo) & (sec < hi)
        x = np.where(inside, sec, 0.5 * (lo + hi))
        # alternate with pure bisection to guarantee bracket shrinkage
        x = np.where((hi - lo) < 1e-9, 0.5 * (lo + hi), x)
    return 0.5 * (lo + hi)


@dataclass
class ModifiedFermiChart:
    """Fermi chart re-labeled so coordinate time is lab time away from Gamma."""

    fermi: FermiChart
    delta1: float
    r1: float
    r2: float
    sm: float
    T1: float
    retries: int
    _nu_t: CubicSpline = field(repr=False, default=None)
    _coef_splines: dict = field(repr=False, default_factory=dict)

    @property
    def surface(self) -> TimelikeSurface:
        return self.fermi.surface

    # -- the time function t(y0, y', z) and its implicit inverse -----------

    def lab_time(self, y0, jtheta, z):
        """t = Y_t(y0, theta_j) + z nu_t(y0, theta_j); canonical Y_t = y0."""
        nu_t = self._nu_t(y0)
        if np.ndim(nu_t) > np.ndim(np.asarray(y0)):
            nu_t = np.take(nu_t, jtheta, axis=-1)
        return np.asarray(y0) + np.asarray(z) * nu_t

    def _dlab_time(self, y0, jtheta, z):
        dnu = self._nu_t.derivative()(y0)
        nu_t = self._nu_t(y0)
        if np.ndim(nu_t) > np.ndim(np.asarray(y0)):
            nu_t = np.take(nu_t, jtheta, axis=-1)
            dnu = np.take(dnu, jtheta, axis=-1)
        return 1.0 + np.asarray(z) * dnu, nu_t  # (dt/dy0, dt/dz)

    def solve_eta0(self, ybar0, jtheta, z, tol: float = 1e-14):
        """eta0 with t(eta0, y', z) = ybar0 (vectorized, bracketed)."""
        ybar0 = np.asarray(ybar0, dtype=float)
        z = np.asarray(z, dtype=float)
        M = float(np.max(np.abs(self._nu_t(self.surface.y0)))) + 1.0
        pad = np.abs(z) * M + 1e-6
        eta = _solve_bracketed(
            lambda e: self.lab_time(e, jtheta, z) - ybar0,
            ybar0 - pad, ybar0 + pad, tol=tol,
        )
        return eta

    def y0_map(self, ybar0, jtheta, z):
        """(y0, dy0/dY0, dy0/dtheta, dy0/dz) of the blended time relabeling."""
        ybar0 = np.asarray(ybar0, dtype=float)
        z = np.asarray(z, dtype=float)
        chi = chi_blend(z, self.r1, self.sm)
        dchi = chi_blend_derivative(z, self.r1, self.sm)
        eta = self.solve_eta0(ybar0, jtheta, z)
        dt_dy0, nu_t = self._dlab_time(eta, jtheta, z)
        deta_dy0 = 1.0 / dt_dy0
        deta_dz = -nu_t / dt_dy0
        # transverse label derivative of eta0 (theta direction), from the
        # theta-dependence of nu_t; in-scope surfaces are rotation/translation
        # symmetric so this vanishes identically, but keep the general form.
        deta_dth = np.zeros(np.broadcast_shapes(np.shape(ybar0), np.shape(z)))
        y0 = chi * ybar0 + (1.0 - chi) * eta
        dy0_dY0 = chi + (1.0 - chi) * deta_dy0
        dy0_dth = (1.0 - chi) * deta_dth
        dy0_dz = dchi * (ybar0 - eta) + (1.0 - chi) * deta_dz
        # inside |z| <= r2 the relabeling is exactly the identity
        inner = np.abs(z) <= self.r2
        y0 = np.where(inner, ybar0, y0)
        dy0_dY0 = np.where(inner, 1.0, dy0_dY0)
        dy0_dth = np.where(inner, 0.0, dy0_dth)
        dy0_dz = np.where(inner, 0.0, dy0_dz)
        return y0, dy0_dY0, dy0_dth, dy0_dz

    # -- metric -------------------------------------------------------------

    def _fermi_block_at(self, y0, jtheta, z):
        """Fermi metric entries (g_00, g_0th, g_thth) at off-grid y0."""
        tm = self.fermi.tube
        out = {}
        for (i, j) in ((0, 0), (0, 1), (1, 1)) if tm.P == 2 else ((0, 0),):
            vals = []
            for k, c in enumerate(tm._coef(i, j)):
                key = (i, j, k)
                if key not in self._coef_splines:
                    self._coef_splines[key] = CubicSpline(self.surface.y0, c, axis=0)
                v = self._coef_splines[key](y0)
                if np.ndim(v) > np.ndim(np.asarray(y0)):
                    v = np.take(v, jtheta, axis=-1)
                vals.append(v)
            out[(i, j)] = vals[0] + vals[1] * z + vals[2] * z * z
        return out

    def modified_metric(self, ybar0, jtheta, z) -> np.ndarray:
        """Full modified metric at (ybar0, theta_j, z), shape (..., d, d).

        Coordinates ordered (Y0, theta..., z); reduces bit-for-bit to the
        Fermi metric where chi = 1.
        """
        ybar0 = np.asarray(ybar0, dtype=float)
        z = np.asarray(z, dtype=float)
        y0, dY0, dth, dz_ = self.y0_map(ybar0, jtheta, z)
        blk = self._fermi_block_at(y0, jtheta, z)
        P = self.fermi.tube.P
        d = P + 1
        shape = np.broadcast_shapes(np.shape(ybar0), np.shape(z))
        g = np.zeros(shape + (d, d))
        g00 = blk[(0, 0)]
        if P == 2:
            g0t = blk[(0, 1)]
            gtt = blk[(1, 1)]
            g[..., 0, 0] = dY0**2 * g00
            g[..., 0, 1] = dY0 * (dth * g00 + g0t)
            g[..., 1, 0] = g[..., 0, 1]
            g[..., 0, 2] = dY0 * dz_ * g00
            g[..., 2, 0] = g[..., 0, 2]
            g[..., 1, 1] = dth**2 * g00 + 2.0 * dth * g0t + gtt
            g[..., 1, 2] = dth * dz_ * g00 + dz_ * g0t
            g[..., 2, 1] = g[..., 1, 2]
            g[..., 2, 2] = 1.0 + dz_**2 * g00
        else:
            g[..., 0, 0] = dY0**2 * g00
            g[..., 0, 1] = dY0 * dz_ * g00
            g[..., 1, 0] = g[..., 0, 1]
            g[..., 1, 1] = 1.0 + dz_**2 * g00
        return g

    @staticmethod
    def block_inverse(g: np.ndarray) -> np.ndarray:
        """Inverse through the time/space block decomposition (Schur form)."""
        g00 = g[..., 0, 0]
        b = g[..., 0, 1:]
        G = g[..., 1:, 1:]
        Ginv = np.linalg.inv(G)
        Gb = np.einsum("...ij,...j->...i", Ginv, b)
        schur = g00 - np.einsum("...i,...i->...", b, Gb)
        inv = np.zeros_like(g)
        inv[..., 0, 0] = 1.0 / schur
        inv[..., 0, 1:] = -Gb / schur[..., None]
        inv[..., 1:, 0] = inv[..., 0, 1:]
        inv[..., 1:, 1:] = Ginv + np.einsum("...i,...j->...ij", Gb, Gb) / schur[..., None, None]
        return inv

    # -- invariant sweeps ---------------------------------------------------

    def _sample_points(self, nz: int = 21, ny: int = 17):
        y = np.linspace(0.0, self.T1, ny)
        z = np.linspace(-self.delta1, self.delta1, nz)
        Y, Z = np.meshgrid(y, z, indexing="ij")
        return Y, Z

    def signature_report(self, jtheta: int = 0) -> dict:
        Y, Z = self._sample_points()
        g = self.modified_metric(Y, jtheta, Z)
        ginv = self.block_inverse(g)
        prod = np.einsum("...ij,...jk->...ik", g, ginv)
        eye = np.eye(g.shape[-1])
        spatial = g[..., 1:, 1:]
        spatial_inv = ginv[..., 1:, 1:]
        band = (np.abs(Z) > self.r2) & (np.abs(Z) < self.r1)
        gnn = g[..., -1, -1]
        return {
            "g00_max": float(np.max(g[..., 0, 0])),
            "ginv00_max": float(np.max(ginv[..., 0, 0])),
            "spatial_min_eig": float(np.min(np.linalg.eigvalsh(spatial))),
            "spatial_inv_min_eig": float(np.min(np.linalg.eigvalsh(spatial_inv))),
            "block_inverse_defect": float(np.max(np.abs(prod - eye))),
            "gnn_min": float(np.min(gnn)),
            "gnn_min_band": float(np.min(np.where(band, gnn, np.inf))),
        }

    def identity_reports(self, jtheta: int = 0) -> dict:
        """Checks of the defining identities of the relabeled time."""
        ny, nz = 13, 9
        y = np.linspace(0.0, self.T1, ny)
        # inside r2: modified metric must equal the Fermi metric bit-for-bit
        zin = np.linspace(-self.r2 * 0.98, self.r2 * 0.98, nz)
        Y, Z = np.meshgrid(y, zin, indexing="ij")
        g = self.modified_metric(Y, jtheta, Z)
        iy = np.searchsorted(self.surface.y0, y)
        iy = np.clip(iy, 0, len(self.surface.y0) - 1)
        exact = np.all(np.abs(self.surface.y0[iy] - y) < 1e-12)
        fermi_defect = 0.0
        if exact:
            gf = self.fermi.tube.full(zin)[iy, jtheta]
            fermi_defect = float(np.max(np.abs(g - gf)))
        # outside r1: coordinate time is lab time
        zout = np.array([self.r1 * 1.02, -self.r1 * 1.02, self.delta1 * 0.99])
        Y2, Z2 = np.meshgrid(y, zout, indexing="ij")
        y0o, _, _, _ = self.y0_map(Y2, jtheta, Z2)
        t_defect = float(np.max(np.abs(self.lab_time(y0o, jtheta, Z2) - Y2)))
        # eta0 pinning
        eta_zero = float(np.max(np.abs(self.solve_eta0(y, jtheta, np.zeros_like(y)) - y)))
        eta_origin = float(np.max(np.abs(self.solve_eta0(
            np.zeros(nz), jtheta, np.linspace(-self.delta1, self.delta1, nz)))))
        # linear bounds with fitted constants
        Y3, Z3 = self._sample_points()
        eta = self.solve_eta0(Y3, jtheta, Z3)
        zmag = np.maximum(np.abs(Z3), 1e-12)
        C_eta = float(np.max(np.abs(eta - Y3) / zmag))
        return {
            "fermi_identity_defect": fermi_defect,
            "lab_time_defect": t_defect,
            "eta0_at_z0": eta_zero,
            "eta0_at_t0": eta_origin,
            "C_eta_minus_y0": C_eta,
        }


def build_modified_chart(surface: TimelikeSurface, delta1: float | None = None,
                         r1: float | None = None, sm: float = 0.02,
                         max_retries: int = 4) -> ModifiedFermiChart:
    """Construct the blended chart, halving r1 when signature checks fail.

    The usable time window shrinks to T1 = T - delta1 * max|nu_t| so the
    implicit time relabeling never queries the surface beyond its samples.
    """
    fermi = build_fermi_chart(surface)
    if delta1 is None:
        delta1 = surface.delta
    if delta1 > surface.delta:
        raise ValueError("delta1 must not exceed the tube half-width delta")
    nu_t_spl = CubicSpline(surface.y0, surface.nu[..., 0], axis=0)
    M = float(np.max(np.abs(surface.nu[..., 0])))
    T = float(surface.y0[-1])
    T1 = T - delta1 * M
    if T1 <= 0:
        raise ValueError("delta1 too large: no usable time window remains")
    # eta0 at t=0 requires (near-)vanishing initial velocity unless the time
    # relation is globally affine (planes); allow both.
    r1 = delta1 / 4.0 if r1 is None else r1
    if not 0.0 < r1 <= delta1 / 2.0:
        raise ValueError("need 0 < r1 <= delta1 / 2")
    last_exc = None
    for attempt in range(max_retries + 1):
        chart = ModifiedFermiChart(fermi, delta1, r1, r1 * r1 / (1.0 + r1), sm,
                                   T1, attempt, nu_t_spl)
        rep = chart.signature_report()
        ok = (rep["g00_max"] < 0.0 and rep["ginv00_max"] < 0.0
              and rep["spatial_min_eig"] > 0.0 and rep["gnn_min"] > 0.0)
        if ok:
            return chart
        last_exc = ValueError(f"signature checks failed at r1 = {r1}: {rep}")
        r1 *= 0.5
    raise last_exc
