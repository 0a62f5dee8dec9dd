"""Timelike surfaces in Minkowski space and the metric of their normal tubes.

Surfaces are stored as structured sample grids of a parametrization
``Y(y0, theta)`` (``theta`` absent for plane worldlines in 1+1 dimensions)
together with the Minkowski unit normal ``nu``.  Tangents come from
fourth-order centered finite differences so analytic and ODE-generated
surfaces are treated uniformly.  The tube metric

    g_ab(y, z) = <d_a Y + z d_a nu, d_b Y + z d_b nu>_m,   g_an = 0, g_nn = 1

is an explicit matrix polynomial in the signed normal distance ``z``; its
determinant, mean curvature ``H = -1/2 d_z log |det g|`` and the curvature
expansion ``H = z a_G + z^2 b_G`` are therefore evaluated analytically in
``z`` (no finite differencing across the tube).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "minkowski_dot",
    "minkowski_normal",
    "TimelikeSurface",
    "TubeMetric",
    "metric_tube",
    "mean_curvature",
    "curvature_expansion",
    "CanonicalChart",
    "canonical_coordinates",
    "boosted_plane",
    "static_cylinder",
    "evolve_radial_minimal",
    "surface_from_dict",
]


def _J(dim: int) -> np.ndarray:
    J = np.eye(dim)
    J[0, 0] = -1.0
    return J


def minkowski_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<a,b>_m = a . J b with J = diag(-1, 1, ..., 1), index 0 = time."""
    a = np.asarray(a)
    b = np.asarray(b)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def _fd1(F: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` of a sampled array."""
    F = np.moveaxis(F, axis, 0)
    d = np.empty_like(F)
    if periodic:
        d[:] = (np.roll(F, 2, axis=0) - 8 * np.roll(F, 1, axis=0)
                + 8 * np.roll(F, -1, axis=0) - np.roll(F, -2, axis=0)) / (12 * h)
    else:
        d[2:-2] = (F[:-4] - 8 * F[1:-3] + 8 * F[3:-1] - F[4:]) / (12 * h)
        for i in (0, 1):
            d[i] = (-25 * F[i] + 48 * F[i + 1] - 36 * F[i + 2]
                    + 16 * F[i + 3] - 3 * F[i + 4]) / (12 * h)
            d[-1 - i] = (25 * F[-1 - i] - 48 * F[-2 - i] + 36 * F[-3 - i]
                         - 16 * F[-4 - i] + 3 * F[-5 - i]) / (12 * h)
    return np.moveaxis(d, 0, axis)


def _fd1_2nd(F: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    """Second-order first derivative (matches the solver stencils)."""
    F = np.moveaxis(F, axis, 0)
    d = np.empty_like(F)
    if periodic:
        d[:] = (np.roll(F, -1, axis=0) - np.roll(F, 1, axis=0)) / (2 * h)
    else:
        d[1:-1] = (F[2:] - F[:-2]) / (2 * h)
        d[0] = (-3 * F[0] + 4 * F[1] - F[2]) / (2 * h)
        d[-1] = (3 * F[-1] - 4 * F[-2] + F[-3]) / (2 * h)
    return np.moveaxis(d, 0, axis)


def minkowski_normal(tangents: np.ndarray, outward: np.ndarray) -> np.ndarray:
    """Minkowski unit normal of a codimension-one tangent frame.

    ``tangents`` has shape (..., P, d) with d = P + 1; the Euclidean normal
    nbar of the frame is converted through nu = J nbar and normalized with
    the Minkowski form (<nu, nu>_m = 1 requires a timelike tangent plane).
    ``outward`` fixes the sign through its spatial components.
    """
    tan = np.asarray(tangents, dtype=float)
    P, d = tan.shape[-2], tan.shape[-1]
    if d != P + 1:
        raise ValueError("normal defined for codimension one only")
    if P == 1:
        t0 = tan[..., 0, :]
        nbar = np.stack([-t0[..., 1], t0[..., 0]], axis=-1)
    elif P == 2:
        nbar = np.cross(tan[..., 0, :], tan[..., 1, :])
    else:
        raise ValueError("only worldvolume dimensions 1 and 2 are supported")
    nu = nbar @ _J(d)
    norm2 = minkowski_dot(nu, nu)
    if np.any(norm2 <= 0):
        raise ValueError("tangent plane is not timelike: <nu,nu>_m <= 0")
    nu = nu / np.sqrt(norm2)[..., None]
    sgn = np.sign(np.sum(nu[..., 1:] * np.asarray(outward)[..., 1:], axis=-1))
    return nu * np.where(sgn == 0, 1.0, sgn)[..., None]


@dataclass
class TimelikeSurface:
    """Sampled timelike surface of codimension one with its unit normal.

    ``Y`` has shape (Nt, Nth, n+1); plane worldlines in 1+1 use Nth = 1 and
    ``theta = None``.  ``delta`` is the half-width of the normal tube on
    which the Fermi map stays injective, with margin.
    """

    n: int
    y0: np.ndarray
    theta: np.ndarray | None
    Y: np.ndarray
    dY: np.ndarray
    nu: np.ndarray
    dnu: np.ndarray
    minimal: bool
    delta: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict, repr=False)

    @property
    def nparams(self) -> int:
        return self.dY.shape[-2]

    @property
    def periodic(self) -> bool:
        return self.theta is not None

    def invariant_report(self) -> dict:
        """Max deviations of the pointwise normal/tangent identities."""
        unit = np.max(np.abs(minkowski_dot(self.nu, self.nu) - 1.0))
        orth = 0.0
        for a in range(self.nparams):
            orth = max(orth, float(np.max(np.abs(minkowski_dot(self.nu, self.dY[..., a, :])))))
        return {"unit_normal": float(unit), "normal_tangency": orth}

    def to_dict(self) -> dict:
        rep = self.invariant_report()
        return {
            "kind": self.kind,
            "params": self.params,
            "n": self.n,
            "minimal": self.minimal,
            "delta": self.delta,
            "y0": self.y0.tolist(),
            "theta": None if self.theta is None else self.theta.tolist(),
            "Y": self.Y.tolist(),
            "nu": self.nu.tolist(),
            "invariants": rep,
        }


def _build_surface(y0, theta, Y, outward, minimal, delta, kind, params, aux=None):
    h0 = float(y0[1] - y0[0])
    tangents = [_fd1(Y, h0, 0, periodic=False)]
    if theta is not None:
        ht = float(theta[1] - theta[0])
        tangents.append(_fd1(Y, ht, 1, periodic=True))
    dY = np.stack(tangents, axis=-2)
    nu = minkowski_normal(dY, outward)
    dnu_list = [_fd1(nu, h0, 0, periodic=False)]
    if theta is not None:
        dnu_list.append(_fd1(nu, ht, 1, periodic=True))
    dnu = np.stack(dnu_list, axis=-2)
    return TimelikeSurface(
        n=Y.shape[-1] - 1, y0=np.asarray(y0, dtype=float),
        theta=None if theta is None else np.asarray(theta, dtype=float),
        Y=Y, dY=dY, nu=nu, dnu=dnu, minimal=minimal, delta=float(delta),
        kind=kind, params=params, aux=aux or {},
    )


# ---------------------------------------------------------------------------
# factories


def boosted_plane(v: float = 0.0, T: float = 1.0, nt: int = 129, n: int = 1,
                  ntheta: int = 32, width: float = 2.0 * np.pi, x0: float = 0.0,
                  delta: float = 2.0, t0: float = 0.0) -> TimelikeSurface:
    """Plane worldsheet x1 = x0 + v t; periodified in y' when n = 2."""
    if abs(v) >= 1.0:
        raise ValueError("plane must be timelike: |v| < 1")
    if t0 >= T:
        raise ValueError("need t0 < T")
    y0 = np.linspace(t0, T, nt)
    if n == 1:
        Y = np.stack([y0, x0 + v * y0], axis=-1)[:, None, :]
        theta = None
        outward = np.broadcast_to(np.array([0.0, 1.0]), Y.shape).copy()
    elif n == 2:
        theta = np.linspace(0.0, width, ntheta, endpoint=False)
        tt, th = np.meshgrid(y0, theta, indexing="ij")
        Y = np.stack([tt, x0 + v * tt, th], axis=-1)
        outward = np.broadcast_to(np.array([0.0, 1.0, 0.0]), Y.shape).copy()
    else:
        raise ValueError("n must be 1 or 2")
    return _build_surface(y0, theta, Y, outward, True, delta, "boosted-plane",
                          {"v": v, "T": T, "nt": nt, "n": n, "ntheta": ntheta,
                           "width": width, "x0": x0, "delta": delta, "t0": t0})


def static_cylinder(R0: float = 1.0, T: float = 1.0, nt: int = 129,
                    ntheta: int = 256) -> TimelikeSurface:
    """Static circle worldsheet of radius R0 (not minimal: H = -1/R0)."""
    y0 = np.linspace(0.0, T, nt)
    theta = np.linspace(0.0, 2.0 * np.pi, ntheta, endpoint=False)
    tt, th = np.meshgrid(y0, theta, indexing="ij")
    Y = np.stack([tt, R0 * np.cos(th), R0 * np.sin(th)], axis=-1)
    outward = np.stack([np.zeros_like(tt), np.cos(th), np.sin(th)], axis=-1)
    return _build_surface(y0, theta, Y, outward, False, 0.4 * R0, "static-cylinder",
                          {"R0": R0, "T": T, "nt": nt, "ntheta": ntheta})


def evolve_radial_minimal(R0: float = 1.0, T: float = 0.8, nt: int = 257,
                          ntheta: int = 256, ode_steps: int = 2048,
                          margin: float = 0.8, t0: float = 0.0) -> TimelikeSurface:
    """Radially symmetric minimal worldsheet: R'' = -(1 - R'^2)/R, R(0)=R0, R'(0)=0.

    Integrated with fixed-step RK4 (step T/ode_steps); the closed form is
    R = R0 cos(t/R0).  Requires T < margin * (pi/2) R0 so the surface stays
    timelike and away from collapse.  A negative start time ``t0`` extends the
    worldsheet backwards using the even symmetry of R about t = 0.
    """
    if not 0.0 < T <= margin * 0.5 * np.pi * R0 + 1e-12:
        raise ValueError(f"need 0 < T < {margin * 0.5 * np.pi * R0:.6g} to stay pre-collapse")
    if not -margin * 0.5 * np.pi * R0 - 1e-12 <= t0 < T:
        raise ValueError("need -margin*(pi/2)*R0 <= t0 < T")

    def rhs(state):
        R, V = state
        return np.array([V, -(1.0 - V * V) / R])

    t_max = max(T, -t0)
    h = t_max / ode_steps
    ts = np.linspace(0.0, t_max, ode_steps + 1)
    states = np.empty((ode_steps + 1, 2))
    states[0] = (R0, 0.0)
    s = states[0].copy()
    for i in range(ode_steps):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h * k2)
        k4 = rhs(s + h * k3)
        s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[i + 1] = s
    R, V = states[:, 0], states[:, 1]
    if np.any(R <= 0) or np.any(np.abs(V) >= 1.0):
        raise ValueError("radial surface left the timelike regime before T")
    if t0 < 0.0:
        # R is even and Rdot odd about t = 0
        ts = np.concatenate([-ts[:0:-1], ts])
        R = np.concatenate([R[:0:-1], R])
        V = np.concatenate([-V[:0:-1], V])
    R_spl = CubicSpline(ts, R)
    V_spl = CubicSpline(ts, V)

    y0 = np.linspace(t0, T, nt)
    theta = np.linspace(0.0, 2.0 * np.pi, ntheta, endpoint=False)
    tt, th = np.meshgrid(y0, theta, indexing="ij")
    Rg = R_spl(tt)
    Y = np.stack([tt, Rg * np.cos(th), Rg * np.sin(th)], axis=-1)
    outward = np.stack([np.zeros_like(tt), np.cos(th), np.sin(th)], axis=-1)
    gamma = 1.0 / np.sqrt(1.0 - V**2)
    delta = float(min(0.4 * np.min(R), 0.5 * np.min(R * np.sqrt(1.0 - V**2))))
    aux = {"R": R_spl, "Rdot": V_spl, "ode_t": ts, "ode_R": R, "ode_V": V,
           "gamma_max": float(np.max(gamma))}
    return _build_surface(y0, theta, Y, outward, True, delta, "radial-minimal",
                          {"R0": R0, "T": T, "nt": nt, "ntheta": ntheta,
                           "ode_steps": ode_steps, "t0": t0}, aux=aux)


_FACTORIES: dict[str, Callable] = {
    "boosted-plane": boosted_plane,
    "static-cylinder": static_cylinder,
    "radial-minimal": evolve_radial_minimal,
}


def surface_from_dict(d: dict) -> TimelikeSurface:
    """Rebuild a surface deterministically from its kind and parameters."""
    kind = d["kind"]
    if kind not in _FACTORIES:
        raise ValueError(f"unknown surface kind {kind!r}")
    return _FACTORIES[kind](**d["params"])


# ---------------------------------------------------------------------------
# tube metric


class TubeMetric:
    """Metric of the normal tube, polynomial in the normal distance z.

    The tangential block is G0 + z G1 + z^2 G2 with sampled coefficient
    matrices; dets, inverses, mean curvature and the first-order y-derivative
    data needed by wave operators on the leaves are evaluated from these
    polynomials (vectorized over grid points and z arrays).
    """

    def __init__(self, surface: TimelikeSurface):
        self.surface = surface
        dY, dnu = surface.dY, surface.dnu
        dot = lambda u, v: minkowski_dot(u[..., :, None, :], v[..., None, :, :])
        self.G0 = dot(dY, dY)
        self.G1 = dot(dY, dnu) + dot(dnu, dY)
        self.G2 = dot(dnu, dnu)
        P = surface.nparams
        h0 = float(surface.y0[1] - surface.y0[0])
        steps = [(h0, False)]
        if surface.periodic:
            steps.append((float(surface.theta[1] - surface.theta[0]), True))
        # second-order y-derivatives of the coefficient matrices (solver stencils)
        self.dG = [
            [_fd1_2nd(G, h, a, per) for a, (h, per) in enumerate(steps)]
            for G in (self.G0, self.G1, self.G2)
        ]
        self.P = P

    # -- polynomial block helpers ------------------------------------------

    def _coef(self, i: int, j: int):
        return self.G0[..., i, j], self.G1[..., i, j], self.G2[..., i, j]

    def _entry(self, i: int, j: int, z: np.ndarray) -> np.ndarray:
        c0, c1, c2 = self._coef(i, j)
        return c0[..., None] + c1[..., None] * z + c2[..., None] * z * z

    def _dentry(self, a: int, i: int, j: int, z: np.ndarray) -> np.ndarray:
        """y-derivative along direction a of the (i,j) block entry at fixed z."""
        d0, d1, d2 = (self.dG[k][a][..., i, j] for k in range(3))
        return d0[..., None] + d1[..., None] * z + d2[..., None] * z * z

    def block(self, z) -> np.ndarray:
        """Tangential metric block, shape (Nt, Nth, M, P, P) for z of shape M-ish."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty(self.G0.shape[:-2] + z.shape[-1:] + (self.P, self.P))
        for i in range(self.P):
            for j in range(self.P):
                out[..., i, j] = self._entry(i, j, z)
        return out

    def full(self, z) -> np.ndarray:
        """Full (P+1)x(P+1) tube metric: block plus g_an = 0, g_nn = 1."""
        blk = self.block(z)
        out = np.zeros(blk.shape[:-2] + (self.P + 1, self.P + 1))
        out[..., : self.P, : self.P] = blk
        out[..., self.P, self.P] = 1.0
        return out

    def _det_and_ddz(self, z: np.ndarray):
        if self.P == 1:
            A = self._entry(0, 0, z)
            c0, c1, c2 = self._coef(0, 0)
            dA = c1[..., None] + 2.0 * c2[..., None] * z
            return A, dA
        A = self._entry(0, 0, z)
        B = self._entry(0, 1, z)
        C = self._entry(1, 1, z)
        a1, a2 = self._coef(0, 0)[1][..., None], self._coef(0, 0)[2][..., None]
        b1, b2 = self._coef(0, 1)[1][..., None], self._coef(0, 1)[2][..., None]
        c1_, c2_ = self._coef(1, 1)[1][..., None], self._coef(1, 1)[2][..., None]
        dA = a1 + 2 * a2 * z
        dB = b1 + 2 * b2 * z
        dC = c1_ + 2 * c2_ * z
        det = A * C - B * B
        ddet = dA * C + A * dC - 2 * B * dB
        return det, ddet

    def det(self, z) -> np.ndarray:
        """det g(y, z) (equals the tangential block determinant)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return self._det_and_ddz(z)[0]

    def sqrt_det(self, z) -> np.ndarray:
        return np.sqrt(-self.det(z))

    def mean_curvature(self, z) -> np.ndarray:
        """H_{Gamma_z}(y) = -1/2 d_z log |det g(y, z)|."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        det, ddet = self._det_and_ddz(z)
        if np.any(det >= 0):
            raise ValueError("tube metric lost its timelike signature (det g >= 0)")
        return -0.5 * ddet / det

    def bn(self, z) -> np.ndarray:
        """b^n = d_z sqrt|det g| / sqrt|det g| = -H_{Gamma_z}."""
        return -self.mean_curvature(z)

    def curvature_expansion(self, tol_minimal: float = 1e-4, dz: float = 1e-3):
        """Coefficients of H = z a_G(y) + z^2 b_G(y, z) for minimal surfaces.

        a_G is d_z H at z = 0 by centered differences of the analytic-in-z
        mean curvature; b_G(y, z) is returned as a callable with a Taylor
        fallback near z = 0.
        """
        if not self.surface.minimal:
            raise ValueError("curvature expansion requires a minimal surface")
        H0 = self.mean_curvature(np.array([0.0]))[..., 0]
        if np.max(np.abs(H0)) > tol_minimal:
            raise ValueError("surface flagged minimal but |H(y,0)| exceeds tolerance")
        zs = dz * np.array([-2.0, -1.0, 1.0, 2.0])
        Hs = self.mean_curvature(zs)
        a_G = (Hs[..., 0] - 8 * Hs[..., 1] + 8 * Hs[..., 2] - Hs[..., 3]) / (12 * dz)
        # cubic Taylor data for the small-z branch of b_G
        d2 = (Hs[..., 2] + Hs[..., 1] - 2 * H0) / dz**2
        d3 = (Hs[..., 3] - 2 * Hs[..., 2] + 2 * Hs[..., 1] - Hs[..., 0]) / (2 * dz**3)

        def b_G(z):
            z = np.atleast_1d(np.asarray(z, dtype=float))
            small = np.abs(z) < 10 * dz
            zsafe = np.where(small, 1.0, z)
            H = self.mean_curvature(z)
            direct = (H - zsafe * a_G[..., None]) / zsafe**2
            taylor = 0.5 * d2[..., None] + (d3[..., None] / 6.0) * z
            return np.where(small, taylor, direct)

        return a_G, b_G

    # -- inverse block and first-order coefficients ------------------------

    def inverse_block(self, z) -> np.ndarray:
        """g^{ab}(y, z) on the tangential block (g^{nn} = 1, g^{an} = 0)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if self.P == 1:
            A = self._entry(0, 0, z)
            return (1.0 / A)[..., None, None]
        A = self._entry(0, 0, z)
        B = self._entry(0, 1, z)
        C = self._entry(1, 1, z)
        D = A * C - B * B
        out = np.empty(A.shape + (2, 2))
        out[..., 0, 0] = C / D
        out[..., 0, 1] = -B / D
        out[..., 1, 0] = -B / D
        out[..., 1, 1] = A / D
        return out

    def first_order_coeffs(self, z) -> np.ndarray:
        """c^a(y, z) = |det g|^{-1/2} d_b ( |det g|^{1/2} g^{ba} ) at fixed z.

        Together with g^{ab}, this gives the wave operator on the leaf
        Gamma_z:  box_{Gamma_z} f = g^{ab} d_a d_b f + c^a d_a f.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if self.P == 1:
            A = self._entry(0, 0, z)
            dA = self._dentry(0, 0, 0, z)
            return (-0.5 * dA / (A * A))[..., None]
        A = self._entry(0, 0, z)
        B = self._entry(0, 1, z)
        C = self._entry(1, 1, z)
        D = A * C - B * B
        adj = {(0, 0): C, (0, 1): -B, (1, 0): -B, (1, 1): A}
        dent = {(a, i, j): self._dentry(a, i, j, z)
                for a in range(2) for i in range(2) for j in range(2)}
        dadj = {
            (0, (0, 0)): dent[(0, 1, 1)], (1, (0, 0)): dent[(1, 1, 1)],
            (0, (0, 1)): -dent[(0, 0, 1)], (1, (0, 1)): -dent[(1, 0, 1)],
            (0, (1, 0)): -dent[(0, 0, 1)], (1, (1, 0)): -dent[(1, 0, 1)],
            (0, (1, 1)): dent[(0, 0, 0)], (1, (1, 1)): dent[(1, 0, 0)],
        }
        dD = [
            dent[(a, 0, 0)] * C + A * dent[(a, 1, 1)] - 2.0 * B * dent[(a, 0, 1)]
            for a in range(2)
        ]
        out = np.empty(A.shape + (2,))
        for a in range(2):
            acc = np.zeros_like(A)
            for b in range(2):
                acc += dadj[(b, (b, a))] / (-D) + adj[(b, a)] * dD[b] / (2.0 * D * D)
            out[..., a] = acc
        return out


def metric_tube(surface: TimelikeSurface) -> TubeMetric:
    """Assemble the tube-metric evaluator of a sampled surface."""
    return TubeMetric(surface)


def mean_curvature(surface: TimelikeSurface, z=0.0) -> np.ndarray:
    """Mean curvature of the z-offset leaves of ``surface``."""
    return TubeMetric(surface).mean_curvature(z)


def curvature_expansion(surface: TimelikeSurface, **kw):
    """(a_G, b_G) with H_{Gamma_z} = z a_G(y) + z^2 b_G(y, z)."""
    return TubeMetric(surface).curvature_expansion(**kw)


# ---------------------------------------------------------------------------
# canonical coordinates


@dataclass
class CanonicalChart:
    """Canonical coordinates on Gamma: time slices labeled by lab time.

    The flow of the field E (unit time component, orthogonal to the time
    slices within Gamma) carries Gamma^0 to Gamma^t; in these coordinates
    the surface metric has no time-space cross terms, negative g0_00, and a
    positive-definite spatial block.
    """

    surface: TimelikeSurface
    g0_00: np.ndarray
    g0_0i: np.ndarray
    g0_spatial: np.ndarray
    flow: np.ndarray
    flow_defect: float

    def invariant_report(self) -> dict:
        rep = {
            "cross_terms": float(np.max(np.abs(self.g0_0i))) if self.g0_0i.size else 0.0,
            "g0_00_max": float(np.max(self.g0_00)),
            "flow_defect": self.flow_defect,
        }
        if self.g0_spatial.size:
            eigs = np.linalg.eigvalsh(self.g0_spatial)
            rep["spatial_min_eig"] = float(np.min(eigs))
        else:
            rep["spatial_min_eig"] = float("nan")
        return rep


def canonical_coordinates(surface: TimelikeSurface) -> CanonicalChart:
    """Verify and package the canonical parametrization of ``surface``.

    The sampled parametrizations produced by the factories already label
    points by (lab time, flow line); this checks the defining properties:
    E = d_0 Y has unit time component, the slice metric splits into a block
    structure, and RK4 re-integration of the flow returns the stored samples.
    """
    tm = TubeMetric(surface)
    g0 = tm.block(np.array([0.0]))[..., 0, :, :]
    g000 = g0[..., 0, 0]
    g00i = g0[..., 0, 1:]
    gbar = g0[..., 1:, 1:]
    if np.max(g000) >= 0:
        raise ValueError("canonical chart requires g0_00 < 0 (timelike slicing)")
    E_time = surface.dY[..., 0, 0]
    if np.max(np.abs(E_time - 1.0)) > 1e-8:
        raise ValueError("parametrization is not canonical: E . e0 != 1")

    # re-integrate the E-flow from the initial slice and compare
    y0 = surface.y0
    vel = surface.dY[..., 0, 1:]  # spatial velocity of the flow, (Nt, Nth, n)
    spl = CubicSpline(y0, vel, axis=0)
    nsteps = 4 * (len(y0) - 1)
    h = (y0[-1] - y0[0]) / nsteps
    X = surface.Y[0, :, 1:].copy()
    # the flow holds the transverse label fixed: velocity sampled on the
    # flow line's own column of the grid
    t = y0[0]
    for _ in range(nsteps):
        k1 = spl(t)
        k2 = spl(t + 0.5 * h)
        k3 = k2
        k4 = spl(t + h)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    defect = float(np.max(np.abs(X - surface.Y[-1, :, 1:])))
    return CanonicalChart(surface, g000, g00i, gbar, X, defect)
