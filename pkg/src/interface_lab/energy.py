"""Energy bookkeeping for linearized runs around a layered background.

The central objects are the translation-mode decomposition of a localized
field phi,

    phi_bar = chi1 * phi,      gamma = (eps/Xi) int phi_bar d_z(w_eps) dz,
    phi_perp = phi_bar - gamma d_z(w_eps),

and the weighted slice energy

    E(s) = E_nr(s) + E_far(s) + (C/eps) * gamma(s)^2 * |omega0|,

whose Gronwall structure dE/ds <= C E + source is verified empirically: the
report fits the smallest nonnegative constant C making the integrated
inequality hold along a run.

Slice integrals are evaluated on lab-time slices with the flat quadratic
form (exact for the planar frozen background; for the moving radial
background this amounts to choosing the lab-time slicing of the tube, and
reports flag it).  The chart-level tensor facts — positivity of the
time-gauged form a and the completing-the-square identity that defines it —
are checked against the actual modified-chart metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TimelikeSurface, TubeMetric
from .nonlinearity import HeteroclinicProfile

__all__ = [
    "EnergyFrame",
    "ModeSplit",
    "chi_near",
    "chi_far",
    "chi_one",
    "decompose",
    "energy",
    "gronwall_constant",
    "gronwall_check",
    "sobolev_norms",
    "a_from_inverse_metric",
    "quadratic_identity_defect",
    "frame_positivity_report",
    "bn_linearity_constant",
]


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def chi_near(z, r1: float):
    """Even weight: 1 for |z| <= r1, 0 for |z| >= 2 r1, nonincreasing."""
    return 1.0 - _smoothstep((np.abs(z) - r1) / r1)


def chi_far(z, r1: float):
    """Complementary far-region weight."""
    return _smoothstep((np.abs(z) - r1) / r1)


def chi_one(z, r2: float):
    """Localization weight: 1 for |z| <= r2/2, 0 for |z| >= r2."""
    return 1.0 - _smoothstep(2.0 * (np.abs(z) - 0.5 * r2) / r2)


# ---------------------------------------------------------------------------
# frame and mode decomposition


@dataclass
class EnergyFrame:
    """Weights, background data and constants shared by all slices of a run.

    ``interface(t)`` gives the layer position on the 1-D grid (a constant for
    the frozen planar background); ``omega0_mass`` is the total mass of the
    reference measure on the interface cross-section (1 for a point, 2*pi
    for the unit-angle circle measure).
    """

    eps: float
    profile: HeteroclinicProfile
    r1: float
    r2: float
    C_gamma: float = 10.0
    omega0_mass: float = 1.0
    interface: object = None

    def __post_init__(self):
        if not (0.0 < self.r2 <= self.r1):
            raise ValueError("need 0 < r2 <= r1")
        if self.C_gamma < 0:
            raise ValueError("C_gamma must be nonnegative")
        self.sigma = self.profile.nonlinearity.a

    def layer_position(self, t: float) -> float:
        return 0.0 if self.interface is None else float(self.interface(t))

    def wz(self, z):
        """d_z of the scaled profile w(z/eps)."""
        return self.profile.wp_at(np.asarray(z) / self.eps) / self.eps

    def background(self, z):
        return self.profile.w_at(np.asarray(z) / self.eps)


@dataclass
class ModeSplit:
    """phi_bar = phi_perp + gamma * d_z w_eps on one slice."""

    z: np.ndarray
    phi_bar: np.ndarray
    phi_perp: np.ndarray
    gamma: float
    Xi: float            # eps * grid quadrature of (d_z w_eps)^2
    eps: float

    def reassembled(self, wz: np.ndarray) -> np.ndarray:
        return self.phi_perp + self.gamma * wz

    def orthogonality_defect(self, wz: np.ndarray) -> float:
        dz = self.z[1] - self.z[0]
        num = abs(np.trapezoid(self.phi_perp * wz, dx=dz))
        den = np.sqrt(np.trapezoid(self.phi_bar**2, dx=dz))
        return float(num / max(den, 1e-300))

    def split_identity_defect(self) -> float:
        dz = self.z[1] - self.z[0]
        lhs = np.trapezoid(self.phi_bar**2, dx=dz)
        rhs = (np.trapezoid(self.phi_perp**2, dx=dz)
               + (self.Xi / self.eps) * self.gamma**2)
        return float(abs(lhs - rhs) / max(lhs, 1e-300))


def decompose(frame: EnergyFrame, z: np.ndarray, phi: np.ndarray) -> ModeSplit:
    """Project the localized field onto the translation mode and its complement.

    The projection uses the grid quadrature of (d_z w_eps)^2 as normalization
    so orthogonality holds to round-off on the given grid; on any grid wide
    enough to contain the layer this agrees with the analytic Xi/eps up to
    exponentially small tails.
    """
    z = np.asarray(z, dtype=float)
    dz = z[1] - z[0]
    wz = frame.wz(z)
    phi_bar = chi_one(z, frame.r2) * np.asarray(phi, dtype=float)
    denom = np.trapezoid(wz * wz, dx=dz)
    gamma = float(np.trapezoid(phi_bar * wz, dx=dz) / denom)
    phi_perp = phi_bar - gamma * wz
    return ModeSplit(z, phi_bar, phi_perp, gamma, float(frame.eps * denom),
                     frame.eps)


# ---------------------------------------------------------------------------
# slice energy


def energy(frame: EnergyFrame, z: np.ndarray, phi: np.ndarray,
           phit: np.ndarray, measure=None, with_gamma: bool = True) -> dict:
    """E(s) and its three addends on one slice.

    ``measure`` is the radial Jacobian r on radial grids (defaults to 1).
    The near density is (phit^2 + phiz^2)/2 - f'(u*) phi^2 / (2 eps^2); the
    far density replaces the indefinite potential term by sigma = -f'(+-1).
    """
    z = np.asarray(z, dtype=float)
    phi = np.asarray(phi, dtype=float)
    phit = np.asarray(phit, dtype=float)
    dz = z[1] - z[0]
    mu = np.ones_like(z) if measure is None else np.asarray(measure, dtype=float)
    phiz = np.gradient(phi, dz)
    fpu = frame.profile.nonlinearity.fp(frame.background(z))
    e_nr = 0.5 * (phit**2 + phiz**2) - fpu * phi**2 / (2.0 * frame.eps**2)
    e_fr = 0.5 * (phit**2 + phiz**2 + frame.sigma * phi**2 / frame.eps**2)
    E_nr = float(np.trapezoid(e_nr * chi_near(z, frame.r1) * mu, dx=dz))
    E_far = float(np.trapezoid(e_fr * chi_far(z, frame.r1) * mu, dx=dz))
    split = decompose(frame, z, phi)
    E_gam = (frame.C_gamma / frame.eps) * split.gamma**2 * frame.omega0_mass
    if not with_gamma:
        E_gam = 0.0
    total = E_nr + E_far + E_gam

    # coercivity: E >= c [ gamma^2/eps + far part of phi + layer part of
    # phi_perp ], both parts measured with one spatial derivative
    chi1 = chi_one(z, frame.r2)
    perp_z = np.gradient(split.phi_perp, dz)
    bracket = (split.gamma**2 / frame.eps * frame.omega0_mass
               + float(np.trapezoid((1.0 - chi1**2) * mu *
                                    (phit**2 + phiz**2 + phi**2 / frame.eps**2),
                                    dx=dz))
               + float(np.trapezoid(mu * (perp_z**2
                                          + split.phi_perp**2 / frame.eps**2),
                                    dx=dz)))
    coercivity = total / bracket if bracket > 0 else np.inf
    return {
        "E": total, "E_nr": E_nr, "E_far": E_far, "E_gamma": E_gam,
        "gamma": split.gamma, "coercivity": coercivity, "split": split,
    }


# ---------------------------------------------------------------------------
# Gronwall fit


def _gronwall_holds(C, s, E, Q, rtol):
    # integrated inequality E(s) <= e^{Cs} E(0) + C int_0^s e^{C(s-t)} Q dt
    rhs = np.empty_like(E)
    rhs[0] = E[0]
    for i in range(1, len(s)):
        grow = np.exp(np.minimum(C * (s[i] - s[:i + 1]), 700.0))
        rhs[i] = grow[0] * E[0] + C * np.trapezoid(grow * Q[:i + 1], x=s[:i + 1])
    return np.all(E <= rhs * (1.0 + rtol) + 1e-14)


def gronwall_constant(s, E, Q=None, cap: float = 1e3,
                      rtol: float = 1e-9) -> float:
    """Smallest C >= 0 with E(s) <= e^{Cs}E(0) + C int e^{C(s-t)}Q dt.

    Returns ``inf`` when no C below ``cap`` works (flagging a violation,
    usually a discretization artifact).  The right side is monotone in C, so
    the fit is a bisection.
    """
    s = np.asarray(s, dtype=float)
    E = np.asarray(E, dtype=float)
    Q = np.zeros_like(E) if Q is None else np.asarray(Q, dtype=float)
    if _gronwall_holds(0.0, s, E, Q, rtol):
        return 0.0
    if not _gronwall_holds(cap, s, E, Q, rtol):
        return np.inf
    lo, hi = 0.0, cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _gronwall_holds(mid, s, E, Q, rtol):
            hi = mid
        else:
            lo = mid
    return hi


def gronwall_check(frame: EnergyFrame, snaps, eta=None, measure=None,
                   with_gamma: bool = True) -> dict:
    """Energy series over a linearized run plus the fitted Gronwall constant.

    ``snaps`` is a list of simulator field states carrying (x, u=phi, ut,
    t); ``eta(x, t)`` is the source used in the run, entering the fit through
    its slice-integrated square.
    """
    rows = []
    s_arr = np.array([st.t for st in snaps])
    for st in snaps:
        z = st.x - frame.layer_position(st.t)
        mu = st.x if (measure == "radial" or st.mode == "radial") else None
        rows.append(energy(frame, z, st.u, st.ut, measure=mu,
                           with_gamma=with_gamma))
    E = np.array([r["E"] for r in rows])
    if eta is None:
        Q = np.zeros_like(E)
    else:
        Q = np.array([
            float(np.trapezoid(np.asarray(eta(st.x, st.t))**2, dx=st.dx))
            for st in snaps])
    C = gronwall_constant(s_arr, E, Q)
    return {
        "s": s_arr, "E": E, "Q": Q, "rows": rows, "C": C,
        "coercivity_min": float(min(r["coercivity"] for r in rows)),
        "violation": not np.isfinite(C),
    }


# ---------------------------------------------------------------------------
# Sobolev tables


def sobolev_norms(snaps, m: int) -> dict:
    """Per-slice discrete L2 and H^m norms and their time suprema."""
    if m not in (0, 2):
        raise ValueError("m must be 0 or 2")
    t, l2, hm = [], [], []
    for st in snaps:
        t.append(st.t)
        sq = float(np.trapezoid(st.u**2, dx=st.dx))
        acc = sq
        d = st.u
        for _ in range(m):
            d = np.gradient(d, st.dx)
            acc += float(np.trapezoid(d**2, dx=st.dx))
        l2.append(np.sqrt(sq))
        hm.append(np.sqrt(acc))
    return {
        "t": np.array(t), "L2": np.array(l2), "Hm": np.array(hm), "m": m,
        "LinfL2": float(np.max(l2)), "LinfHm": float(np.max(hm)),
    }


# ---------------------------------------------------------------------------
# chart-level tensor facts


def a_from_inverse_metric(ginv: np.ndarray) -> np.ndarray:
    """Time-gauged quadratic form: a^00 = -g^00, a^0i = 0, a^ij = g^ij."""
    a = np.array(ginv, dtype=float, copy=True)
    a[..., 0, 0] = -ginv[..., 0, 0]
    a[..., 0, 1:] = 0.0
    a[..., 1:, 0] = 0.0
    return a


def quadratic_identity_defect(ginv: np.ndarray, xi: np.ndarray) -> float:
    """| -g^{0b} xi_0 xi_b + g^{ab} xi_a xi_b / 2 - a^{ab} xi_a xi_b / 2 |."""
    a = a_from_inverse_metric(ginv)
    lhs = (-xi[..., 0] * np.einsum("...b,...b->...", ginv[..., 0, :], xi)
           + 0.5 * np.einsum("...a,...ab,...b->...", xi, ginv, xi))
    rhs = 0.5 * np.einsum("...a,...ab,...b->...", xi, a, xi)
    return float(np.max(np.abs(lhs - rhs)))


def frame_positivity_report(chart, nz: int = 9, ny: int = 9,
                            rng=None) -> dict:
    """a^00 > 0 and spatial positive definiteness over chart sample points,
    plus the randomized completing-the-square identity defect."""
    rng = np.random.default_rng(0) if rng is None else rng
    surf = chart.surface
    zs = np.linspace(-0.9 * chart.r2, 0.9 * chart.r2, nz)
    ys = np.linspace(surf.y0[2], chart.T1 * 0.95, ny)
    a00_min, eig_min, defect = np.inf, np.inf, 0.0
    for zv in zs:
        for yv in ys:
            g = chart.modified_metric(np.array([yv]), 0, np.array([zv]))[0]
            ginv = np.linalg.inv(g)
            a = a_from_inverse_metric(ginv)
            a00_min = min(a00_min, a[0, 0])
            eig_min = min(eig_min, float(np.min(np.linalg.eigvalsh(a[1:, 1:]))))
            xi = rng.standard_normal((4, g.shape[0]))
            defect = max(defect, quadratic_identity_defect(ginv, xi))
    return {"a00_min": float(a00_min), "spatial_eig_min": float(eig_min),
            "identity_defect": float(defect)}


def bn_linearity_constant(surface: TimelikeSurface, r2: float,
                          nz: int = 21) -> float:
    """Fitted C with |b^n(y, z)| <= C |z| on the support of chi_one."""
    tm = TubeMetric(surface)
    zs = np.linspace(-r2, r2, nz)
    zs = zs[np.abs(zs) > 1e-8]
    ratios = [np.max(np.abs(tm.bn(np.array([zv])))) / abs(zv) for zv in zs]
    return float(max(ratios))
