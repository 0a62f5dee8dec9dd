"""Inductive construction of the layered approximate solution near the surface.

An order-k ansatz is a pair (h, phi): a normal displacement h(y) of the
surface and a correction phi(y, zeta) to the heteroclinic profile, with

    u(x, t) = w(zeta) + phi(y, zeta),    zeta = z / eps - h(y),

on the Fermi tube.  The equation residual in stretched coordinates is

    S(v, h) = d_zz v + f(v)
            + eps^2 Box_{Gamma_z} v
            - eps^2 (Box_{Gamma_z} h) d_z v
            + eps b^n(y, z) d_z v
            + eps^2 <grad h, grad h> d_zz v
            - 2 eps^2 g^{ab} d_a h d_b d_z v,

all metric quantities evaluated on the leaf z = eps (zeta + h(y)).  Each
induction round projects the residual onto the translation mode w', feeds
the projection to the Jacobi solver (updating h), and inverts the remaining
orthogonal part with the one-dimensional right inverse T (updating phi),
lowering the residual by one order of eps.

The zeta bookkeeping is exact: phi, d_z phi and d_zz phi are accumulated
from the analytic derivative pair returned by the T-solver and w'' = -f(w),
so no finite differencing in zeta ever enters the residual.  The y stencils
here are the same second-order differences used by the Jacobi stepper, which
makes the projection/solve cancellation discrete rather than asymptotic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline, RectBivariateSpline

from . import jacobi as _jacobi
from .fermi import _smoothstep, _solve_bracketed
from .geometry import TimelikeSurface, TubeMetric
from .nonlinearity import HeteroclinicProfile, apply_T

__all__ = [
    "AnsatzOrderK",
    "GlobalApproximation",
    "build_ansatz",
    "residual",
    "residual_terms",
    "induct",
    "glue",
    "residual_scan",
    "zeta_window",
]

ZETA_SPACING = 0.05
ZETA_MAX = 14.0


def zeta_window(eps: float, delta: float) -> np.ndarray:
    """Uniform symmetric zeta grid covering min(delta/(2 eps), 14)."""
    R = min(delta / (2.0 * eps), ZETA_MAX)
    m = max(int(round(R / ZETA_SPACING)), 8)
    return np.linspace(-m * ZETA_SPACING, m * ZETA_SPACING, 2 * m + 1)


# -- second-order y-stencils (identical to the Jacobi stepper's) -------------


def _d_t(F: np.ndarray, h0: float) -> np.ndarray:
    # centered interior; 4th-order one-sided end rows (the end rows seed the
    # induction feedback, so their truncation error must sit well below the
    # interior's)
    d = np.empty_like(F)
    d[1:-1] = (F[2:] - F[:-2]) / (2.0 * h0)
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    d[0] = sum(ci * F[i] for i, ci in enumerate(c)) / h0
    d[-1] = -sum(ci * F[-1 - i] for i, ci in enumerate(c)) / h0
    return d


def _d_tt(F: np.ndarray, h0: float) -> np.ndarray:
    d = np.empty_like(F)
    d[1:-1] = (F[2:] - 2.0 * F[1:-1] + F[:-2]) / h0**2
    c = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
    d[0] = sum(ci * F[i] for i, ci in enumerate(c)) / h0**2
    d[-1] = sum(ci * F[-1 - i] for i, ci in enumerate(c)) / h0**2
    return d


def _d_th(F: np.ndarray, dth: float) -> np.ndarray:
    return (np.roll(F, -1, axis=1) - np.roll(F, 1, axis=1)) / (2.0 * dth)


def _d_thth(F: np.ndarray, dth: float) -> np.ndarray:
    return (np.roll(F, -1, axis=1) - 2.0 * F + np.roll(F, 1, axis=1)) / dth**2


@dataclass
class AnsatzOrderK:
    """Order-k layered approximation on the (y, zeta) grid."""

    k: int
    eps: float
    profile: HeteroclinicProfile
    surface: TimelikeSurface
    zeta: np.ndarray
    h: np.ndarray        # (Nt, Nth)
    phi: np.ndarray      # (Nt, Nth, Nz)
    phi_z: np.ndarray
    phi_zz: np.ndarray
    history: list = field(default_factory=list)

    _tube: TubeMetric = field(default=None, repr=False)
    _problem: object = field(default=None, repr=False)

    def tube(self) -> TubeMetric:
        if self._tube is None:
            self._tube = TubeMetric(self.surface)
        return self._tube

    def jacobi_problem(self):
        if self._problem is None:
            self._problem = _jacobi.assemble(self.surface)
        return self._problem

    def envelope_report(self) -> dict:
        """Fitted constants of the decay bounds on h and phi."""
        rate = self.profile.decay_rate
        env = (1.0 + np.abs(self.zeta)) * np.exp(-rate * np.abs(self.zeta))
        c_phi = float(np.max(np.abs(self.phi) / (self.eps**2 * env)))
        return {
            "C_phi": c_phi,
            "C_h": float(np.max(np.abs(self.h)) / self.eps),
            "sup_phi": float(np.max(np.abs(self.phi))),
            "sup_h": float(np.max(np.abs(self.h))),
        }


def residual_terms(ansatz: AnsatzOrderK) -> dict:
    """All addends of S(v, h) as separate fields, plus their sum."""
    prof, surf, eps = ansatz.profile, ansatz.surface, ansatz.eps
    nl = prof.nonlinearity
    zeta = ansatz.zeta
    w, wp, _ = prof.tabulate(zeta)
    phi, phi_z, phi_zz = ansatz.phi, ansatz.phi_z, ansatz.phi_zz
    h = ansatz.h
    v_z = wp + phi_z
    v_zz = -nl.f(w) + phi_zz
    core = phi_zz + nl.f(w + phi) - nl.f(w)

    z = eps * (zeta[None, None, :] + h[:, :, None])
    if np.max(np.abs(z)) > surf.delta:
        warnings.warn("stretched window leaves the tube; clamping |z| to delta",
                      stacklevel=2)
        z = np.clip(z, -surf.delta, surf.delta)

    tube = ansatz.tube()
    ginv = tube.inverse_block(z)
    cco = tube.first_order_coeffs(z)
    bn = tube.bn(z)

    dt0 = float(surf.y0[1] - surf.y0[0])
    periodic = surf.periodic
    dth = float(surf.theta[1] - surf.theta[0]) if periodic else 1.0

    def box(F):
        """g^{ab} d_ab F + c^a d_a F for F on (Nt, Nth) or (Nt, Nth, Nz)."""
        f_t, f_tt = _d_t(F, dt0), _d_tt(F, dt0)
        if F.ndim == 2:
            f_t, f_tt = f_t[:, :, None], f_tt[:, :, None]
        out = ginv[..., 0, 0] * f_tt + cco[..., 0] * f_t
        if periodic and ginv.shape[-1] > 1:
            f_h, f_hh = _d_th(F, dth), _d_thth(F, dth)
            f_th = _d_th(_d_t(F, dt0), dth)
            if F.ndim == 2:
                f_h, f_hh, f_th = (x[:, :, None] for x in (f_h, f_hh, f_th))
            out = out + (ginv[..., 1, 1] * f_hh
                         + 2.0 * ginv[..., 0, 1] * f_th
                         + cco[..., 1] * f_h)
        return out

    terms = {
        "core": core,
        "box_v": eps**2 * box(phi),
        "box_h": -eps**2 * box(h) * v_z,
        "curvature": eps * bn * v_z,
    }
    h_t = _d_t(h, dt0)[:, :, None]
    pz_t = _d_t(phi_z, dt0)
    grad2 = ginv[..., 0, 0] * h_t * h_t
    cross = ginv[..., 0, 0] * h_t * pz_t
    if periodic and ginv.shape[-1] > 1:
        h_h = _d_th(h, dth)[:, :, None]
        pz_h = _d_th(phi_z, dth)
        grad2 = grad2 + ginv[..., 1, 1] * h_h * h_h + 2.0 * ginv[..., 0, 1] * h_t * h_h
        cross = cross + ginv[..., 1, 1] * h_h * pz_h \
            + ginv[..., 0, 1] * (h_t * pz_h + h_h * pz_t)
    terms["grad_h"] = eps**2 * grad2 * v_zz
    terms["cross"] = -2.0 * eps**2 * cross
    terms["S"] = sum(terms[name] for name in
                     ("core", "box_v", "box_h", "curvature", "grad_h", "cross"))
    return terms


def residual(ansatz: AnsatzOrderK) -> np.ndarray:
    """S(v, h) on the (Nt, Nth, Nz) grid."""
    return residual_terms(ansatz)["S"]


def _round(ansatz: AnsatzOrderK, with_jacobi: bool) -> AnsatzOrderK:
    """One induction round: project, (optionally) move h, invert with T."""
    prof, eps, zeta = ansatz.profile, ansatz.eps, ansatz.zeta
    _, wp, _ = prof.tabulate(zeta)
    S = residual(ansatz)
    xi = float(simpson(wp * wp, x=zeta))
    proj = simpson(S * wp, x=zeta)            # (Nt, Nth)
    h_new = ansatz.h
    record = {"proj_sup": float(np.max(np.abs(proj)))}
    if with_jacobi:
        problem = ansatz.jacobi_problem()
        g = proj / (eps**2 * xi)
        src = CubicSpline(ansatz.surface.y0, g, axis=0)
        sol = _jacobi.solve(problem, source=lambda t: src(t))
        h_new = ansatz.h + sol.h
        record["jacobi_sup"] = float(np.max(np.abs(sol.h)))
    # the T source must be orthogonal in the same quadrature T itself checks
    E = S - (proj / xi)[:, :, None] * wp
    tr = apply_T(prof, zeta, E)
    record["orthogonality_defect"] = tr.orthogonality_defect
    out = AnsatzOrderK(
        ansatz.k + 1 if with_jacobi or ansatz.k >= 0 else 0, eps, prof,
        ansatz.surface, zeta,
        h_new, ansatz.phi + tr.p, ansatz.phi_z + tr.dp, ansatz.phi_zz + tr.pzz,
        ansatz.history + [record], ansatz._tube, ansatz._problem)
    return out


def build_ansatz(profile: HeteroclinicProfile, surface: TimelikeSurface,
                 eps: float, k: int) -> AnsatzOrderK:
    """Run the induction up to order k (k+1 correction rounds, h^0 = 0).

    The first round keeps h = 0 (the displacement equation only enters once
    the projected residual carries a solvable right-hand side); every later
    round updates h through the Jacobi solve with zero initial data.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if k < 0:
        raise ValueError("order k must be >= 0")
    zeta = zeta_window(eps, surface.delta)
    shape = surface.Y.shape[:2]
    ansatz = AnsatzOrderK(-1, eps, profile, surface, zeta,
                          np.zeros(shape), np.zeros(shape + zeta.shape),
                          np.zeros(shape + zeta.shape),
                          np.zeros(shape + zeta.shape))
    ansatz = _round(ansatz, with_jacobi=False)
    for _ in range(k):
        ansatz = _round(ansatz, with_jacobi=True)
    return ansatz


def induct(ansatz: AnsatzOrderK) -> AnsatzOrderK:
    """One more order: order k in, order k+1 out."""
    return _round(ansatz, with_jacobi=True)


def residual_scan(profile: HeteroclinicProfile, surface: TimelikeSurface,
                  ks=(0, 1, 2), eps_list=(0.16, 0.08, 0.04, 0.02)) -> dict:
    """Sup-residual table over (k, eps) with log-log slope fits per k."""
    rows = []
    for eps in eps_list:
        ans_k = build_ansatz(profile, surface, eps, 0)
        sups = {0: float(np.max(np.abs(residual(ans_k))))}
        for k in range(1, max(ks) + 1):
            ans_k = induct(ans_k)
            sups[k] = float(np.max(np.abs(residual(ans_k))))
        for k in ks:
            rows.append({"k": k, "eps": eps, "sup_residual": sups[k]})
    slopes = {}
    for k in ks:
        pts = [(np.log(r["eps"]), np.log(r["sup_residual"]))
               for r in rows if r["k"] == k]
        x, y = np.array(pts).T
        slopes[k] = float(np.polyfit(x, y, 1)[0])
    return {"rows": rows, "slopes": slopes}


# ---------------------------------------------------------------------------
# gluing into a globally defined field


def _eta_glue(s):
    """C^2 cutoff: 1 for s <= 1, 0 for s >= 2 (quintic ramp between)."""
    return 1.0 - _smoothstep(np.asarray(s, dtype=float) - 1.0)


def _eta_glue_prime(s):
    s = np.asarray(s, dtype=float)
    x = np.clip(s - 1.0, 0.0, 1.0)
    inside = (s > 1.0) & (s < 2.0)
    return np.where(inside, -30.0 * x**2 * (1.0 - x) ** 2, 0.0)


@dataclass
class GlobalApproximation:
    """The ansatz glued to the limit phase: a field defined for all (x, t).

    Supports the two rotationally reducible geometries: the planar worldsheet
    (coordinate x is the 1-D spatial position) and the radial worldsheet
    (coordinate x is the radius).  Evaluation returns u and, through the
    chart chain rule, the exact time derivative of the interpolated ansatz.
    """

    ansatz: AnsatzOrderK
    r_glue: float
    kind: str                         # "planar" | "radial"
    _phi_spl: RectBivariateSpline = field(repr=False, default=None)
    _h_spl: CubicSpline = field(repr=False, default=None)

    @property
    def eps(self) -> float:
        return self.ansatz.eps

    def _invert_chart(self, x, t):
        """(x, t) -> (y0, z, dy0/dt, dz/dt) at fixed x."""
        surf = self.ansatz.surface
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "planar":
            v = surf.params["v"]
            gamma = 1.0 / np.sqrt(1.0 - v * v)
            x0 = surf.params.get("x0", 0.0)
            z = gamma * (x - x0 - v * t)
            y0 = t - z * gamma * v
            dz_dt = np.full_like(z, -gamma * v)
            dy0_dt = np.full_like(z, 1.0 + (gamma * v) ** 2)
            return y0, z, dy0_dt, dz_dt
        R_spl, V_spl = surf.aux["R"], surf.aux["Rdot"]

        def F(y):
            return y + V_spl(y) * (x - R_spl(y)) - t

        pad = np.abs(x - R_spl(np.clip(t, surf.y0[0], surf.y0[-1]))) + 0.05
        y0 = _solve_bracketed(F, t - pad, t + pad)
        R, V = R_spl(y0), V_spl(y0)
        gamma = 1.0 / np.sqrt(1.0 - V**2)
        z = (x - R) / gamma
        # differentiate t = y0 + z gamma V and x = R + z gamma at fixed x
        dgV = V_spl(y0, 1) * gamma**3          # d(gamma V)/dy0
        dg = gamma**3 * V * V_spl(y0, 1)       # d(gamma)/dy0
        a11 = 1.0 + z * dgV                    # dt/dy0
        a12 = gamma * V                        # dt/dz
        a21 = V + z * dg                       # dx/dy0 (R' = V)
        a22 = gamma                            # dx/dz
        det = a11 * a22 - a12 * a21
        dy0_dt = a22 / det
        dz_dt = -a21 / det
        return y0, z, dy0_dt, dz_dt

    def _fields(self, y0, zeta):
        """phi and partials at scattered (y0, zeta), zero beyond the window."""
        zw = self.ansatz.zeta
        zc = np.clip(zeta, zw[0], zw[-1])
        inside = np.abs(zeta) <= zw[-1]
        p = self._phi_spl.ev(y0, zc) * inside
        p_y = self._phi_spl.ev(y0, zc, dx=1) * inside
        p_z = self._phi_spl.ev(y0, zc, dy=1) * inside
        return p, p_y, p_z

    def phase(self, z):
        out = np.sign(z)
        return np.where(out == 0.0, 1.0, out)

    def __call__(self, x, t):
        return self.u_and_ut(x, t)[0]

    def u_and_ut(self, x, t):
        """(u*, d_t u*) by the chart chain rule (no time differencing)."""
        surf = self.ansatz.surface
        eps, prof = self.eps, self.ansatz.profile
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        t = np.broadcast_to(t, x.shape).astype(float) if t.shape != x.shape else t

        if self.kind == "radial":
            z_est = x - surf.aux["R"](np.clip(t, surf.y0[0], surf.y0[-1]))
            gmax = surf.aux.get("gamma_max", 2.0)
            near = np.abs(z_est) <= (gmax + 1.0) * 2.0 * self.r_glue
        else:
            z_est = x - surf.params.get("x0", 0.0) - surf.params["v"] * t
            near = np.ones_like(x, dtype=bool)

        u = self.phase(z_est)
        ut = np.zeros_like(u)
        if not np.any(near):
            return u, ut

        xn, tn = x[near], t[near]
        y0, z, dy0_dt, dz_dt = self._invert_chart(xn, tn)
        h = self._h_spl(y0)
        h_y = self._h_spl(y0, 1)
        zeta = z / eps - h
        w = prof.w_at(zeta)
        wp = prof.wp_at(zeta)
        p, p_y, p_z = self._fields(y0, zeta)
        v = w + p
        v_z = wp + p_z
        zeta_t = dz_dt / eps - h_y * dy0_dt
        chi = _eta_glue(np.abs(z) / self.r_glue)
        dchi = _eta_glue_prime(np.abs(z) / self.r_glue) * np.sign(z) / self.r_glue
        phase = self.phase(z)
        un = chi * v + (1.0 - chi) * phase
        utn = (dchi * dz_dt * (v - phase)
               + chi * (p_y * dy0_dt + v_z * zeta_t))
        u[near] = un
        ut[near] = utn
        return u, ut


def glue(ansatz: AnsatzOrderK, r: float | None = None) -> GlobalApproximation:
    """Blend the tube ansatz into the limit phase outside |z| > 2r."""
    surf = ansatz.surface
    if r is None:
        r = 0.35 * surf.delta
    if not 0.0 < 2.0 * r < surf.delta:
        raise ValueError("need 0 < 2r < delta")
    if surf.kind == "boosted-plane" and surf.params.get("n", 1) == 1:
        kind = "planar"
    elif surf.kind == "radial-minimal":
        kind = "radial"
    else:
        raise ValueError("gluing supports planar (n=1) and radial surfaces")
    phi2 = ansatz.phi[:, 0, :]
    spl = RectBivariateSpline(surf.y0, ansatz.zeta, phi2, kx=3, ky=3)
    h_spl = CubicSpline(surf.y0, ansatz.h[:, 0])
    return GlobalApproximation(ansatz, float(r), kind, spl, h_spl)
