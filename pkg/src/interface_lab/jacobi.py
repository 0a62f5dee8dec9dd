"""Linearized motion of the interface: the Jacobi equation on the surface.

Restricting the wave operator of the ambient Minkowski metric to normal
graphs over a timelike minimal surface gives, at linear order,

    J[h] = Box_Gamma h + a_Gamma h = g,

with Box_Gamma the wave operator of the induced metric and a_Gamma the
squared norm of the second fundamental form (Lorentzian signature included).
In canonical coordinates g_0i = 0 and g_00 < 0, so multiplying by -g_00
turns this into an explicit evolution equation with positive-definite
spatial principal part:

    h_tt = abar h_thth + bbar0 h_t + bbarth h_th + abar_Gamma h + g00 g,

where abar = -g00 g^{thth},  bbar^a = -g00 c^a,  abar_Gamma = -g00 a_Gamma.

The time stepper is an explicit two-level central scheme (leapfrog with the
first-order term averaged across levels, still solvable node by node) at
Courant number 0.5, second order in both time and theta.  The theta stencils
are the same second-order central differences used by the residual
evaluation of the matched approximation, so solving here and differentiating
there cancels to roundoff rather than to truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import (
    TimelikeSurface,
    TubeMetric,
    canonical_coordinates,
    curvature_expansion,
)

__all__ = ["JacobiProblem", "JacobiSolution", "assemble", "solve", "theta_laplacian"]


def theta_laplacian(h: np.ndarray, dth: float) -> np.ndarray:
    """Periodic second-order central second difference along the last axis."""
    return (np.roll(h, -1, axis=-1) - 2.0 * h + np.roll(h, 1, axis=-1)) / dth**2


def theta_gradient(h: np.ndarray, dth: float) -> np.ndarray:
    return (np.roll(h, -1, axis=-1) - np.roll(h, 1, axis=-1)) / (2.0 * dth)


@dataclass
class JacobiProblem:
    """Coefficient fields of the Jacobi evolution on the surface grid.

    All arrays are sampled on (t, theta); splines along t provide the values
    at interior sub-steps of the solver.
    """

    surface: TimelikeSurface
    t: np.ndarray
    theta: np.ndarray | None
    g00: np.ndarray          # induced g_00 < 0
    abar: np.ndarray         # -g00 g^{thth}  (absent for planes: zeros)
    bbar0: np.ndarray        # -g00 c^0
    bbarth: np.ndarray       # -g00 c^theta
    abar_gamma: np.ndarray   # -g00 a_Gamma > 0
    a_gamma: np.ndarray

    def __post_init__(self):
        self._splines = {
            name: CubicSpline(self.t, getattr(self, name), axis=0)
            for name in ("g00", "abar", "bbar0", "bbarth", "abar_gamma")
        }

    def at(self, name: str, t) -> np.ndarray:
        return self._splines[name](t)

    @property
    def periodic(self) -> bool:
        return self.theta is not None

    def sign_report(self) -> dict:
        return {
            "g00_max": float(np.max(self.g00)),
            "abar_min": float(np.min(self.abar)) if self.periodic else 1.0,
            "g00_times_a_gamma_max": float(np.max(self.g00 * self.a_gamma)),
            "abar_gamma_min": float(np.min(self.abar_gamma)),
        }

    def max_wave_speed(self) -> float:
        return float(np.sqrt(np.max(self.abar))) if self.periodic else 0.0


def assemble(surface: TimelikeSurface) -> JacobiProblem:
    """Build the Jacobi coefficients; refuses non-minimal surfaces."""
    chart = canonical_coordinates(surface)
    rep = chart.invariant_report()
    if rep["cross_terms"] > 1e-10:
        raise ValueError("canonical chart has nonzero lapse-shift coupling")
    tube = TubeMetric(surface)
    a_gamma, _ = tube.curvature_expansion()
    g00 = tube._entry(0, 0, np.zeros(1))[..., 0]
    if surface.periodic:
        ginv = tube.inverse_block(np.zeros(1))[..., 0, :, :]
        gthth = ginv[..., 1, 1]
        c = tube.first_order_coeffs(np.zeros(1))[..., 0, :]
        c0, cth = c[..., 0], c[..., 1]
    else:
        gthth = np.zeros_like(g00)
        ginv = tube.inverse_block(np.zeros(1))[..., 0, :, :]
        c = tube.first_order_coeffs(np.zeros(1))[..., 0, :]
        c0, cth = c[..., 0], np.zeros_like(g00)
    m = -g00
    theta = surface.theta if surface.periodic else None
    return JacobiProblem(surface, surface.y0.copy(), theta, g00,
                         m * gthth, m * c0, m * cth, m * a_gamma, a_gamma)


@dataclass
class JacobiSolution:
    t: np.ndarray
    h: np.ndarray        # (Nt, Ntheta) on the surface sample times
    ht: np.ndarray
    dt: float
    substeps: int
    courant: float


def _rhs(problem: JacobiProblem, t: float, h: np.ndarray, source) -> np.ndarray:
    """Everything except the h_t term of the evolution right-hand side."""
    out = problem.at("abar_gamma", t) * h
    if problem.periodic:
        dth = float(problem.theta[1] - problem.theta[0])
        out = out + problem.at("abar", t) * theta_laplacian(h, dth)
        out = out + problem.at("bbarth", t) * theta_gradient(h, dth)
    if source is not None:
        out = out + problem.at("g00", t) * source(t)
    return out


def solve(problem: JacobiProblem, source=None, h0=None, v0=None,
          courant: float = 0.5) -> JacobiSolution:
    """March J[h] = source over the full sampled time window.

    ``source`` is a callable t -> array over theta (the right-hand side g of
    the Jacobi equation itself, not of the normalized evolution form).
    Initial data default to zero.  The step divides the surface sampling
    interval so the solution lands exactly on the sample times.
    """
    t = problem.t
    dt_surf = float(t[1] - t[0])
    nth = len(problem.theta) if problem.periodic else 1
    if problem.periodic:
        dth = float(problem.theta[1] - problem.theta[0])
        speed = problem.max_wave_speed()
        limit = courant * dth / max(speed, 1e-12)
    else:
        limit = dt_surf
    m = max(1, int(np.ceil(dt_surf / limit)))
    dt = dt_surf / m
    shape = problem.g00.shape[1:] if problem.g00.ndim > 1 else (nth,)
    h = np.zeros(shape) if h0 is None else np.array(h0, dtype=float)
    v = np.zeros(shape) if v0 is None else np.array(v0, dtype=float)

    H = np.empty((len(t),) + h.shape)
    Ht = np.empty_like(H)
    H[0], Ht[0] = h, v
    # first step: Taylor expansion keeps second-order accuracy
    acc0 = _rhs(problem, t[0], h, source) + problem.at("bbar0", t[0]) * v
    prev = h.copy()
    h = h + dt * v + 0.5 * dt * dt * acc0
    k = 1
    n_total = m * (len(t) - 1)
    for step in range(1, n_total):
        tc = t[0] + step * dt
        if step % m == 0:
            H[k] = h
            Ht[k] = (h - prev) / dt + 0.5 * dt * (
                _rhs(problem, tc, h, source) + problem.at("bbar0", tc) * (h - prev) / dt)
            k += 1
        b = problem.at("bbar0", tc)
        rhs = _rhs(problem, tc, h, source)
        lam = 0.5 * dt * b
        prev, h = h, (2.0 * h - (1.0 + lam) * prev + dt * dt * rhs) / (1.0 - lam)
    tc = t[-1]
    H[-1] = h
    Ht[-1] = (h - prev) / dt + 0.5 * dt * (
        _rhs(problem, tc, h, source) + problem.at("bbar0", tc) * (h - prev) / dt)
    return JacobiSolution(t.copy(), H, Ht, dt, m, courant)
