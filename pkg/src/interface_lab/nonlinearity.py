"""Double-well nonlinearities and the one-dimensional heteroclinic layer profile.

The scalar model is ``w'' + f(w) = 0`` with ``f = -W'`` for a balanced
double-well potential ``W`` vanishing exactly at ``u = -1, +1``.  The
heteroclinic connection is recovered from the first-integral identity

    zeta = int_0^{w(zeta)} ds / sqrt(2 W(s)),

inverted by vectorized Newton iteration with a guarded bisection fallback.
The module also provides the right inverse ``T`` of the linearized operator
``p -> p'' + f'(w) p`` (variation-of-parameters double integral) and the
quadratic form underlying its coercivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

__all__ = [
    "Nonlinearity",
    "allen_cahn",
    "HeteroclinicProfile",
    "build_profile",
    "TResult",
    "apply_T",
    "quadratic_form",
    "project_off_kernel",
]


@dataclass(frozen=True)
class Nonlinearity:
    """A balanced double-well potential and its derived reaction term.

    ``W`` has non-degenerate minima at exactly ``u = -1, +1`` with
    ``W(±1) = 0``, ``f = -W'``, and ``a = W''(±1) > 0`` (so that
    ``f'(±1) = -a``).
    """

    W: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    fp: Callable[[np.ndarray], np.ndarray]
    fpp: Callable[[np.ndarray], np.ndarray]
    a: float
    name: str = "double-well"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("well curvature a must be positive")
        for u in (-1.0, 1.0):
            if abs(float(self.W(u))) > 1e-12:
                raise ValueError("W must vanish at u = +-1")
            if abs(float(self.f(u))) > 1e-12:
                raise ValueError("f must vanish at u = +-1")
            if abs(float(self.fp(u)) + self.a) > 1e-9:
                raise ValueError("f'(+-1) must equal -a")
        interior = np.linspace(-0.999, 0.999, 257)
        if np.min(self.W(interior)) <= 0.0:
            raise ValueError("W must be positive strictly between the wells")
        # consistency of f with -W' on a sample (central differences)
        u = np.linspace(-0.95, 0.95, 41)
        h = 1e-6
        dW = (self.W(u + h) - self.W(u - h)) / (2 * h)
        if np.max(np.abs(self.f(u) + dW)) > 1e-6:
            raise ValueError("f must equal -W'")

    @property
    def sigma(self) -> float:
        """Curvature of the linearization in the pure phases, -f'(+-1)."""
        return self.a

    @property
    def decay_rate(self) -> float:
        """Exponential rate sqrt(W''(+-1)) of the profile tails."""
        return float(np.sqrt(self.a))


def allen_cahn() -> Nonlinearity:
    """The cubic double well W = (1 - u^2)^2 / 4, f(u) = u - u^3."""
    return Nonlinearity(
        W=lambda u: 0.25 * (1.0 - np.asarray(u) ** 2) ** 2,
        f=lambda u: np.asarray(u) - np.asarray(u) ** 3,
        fp=lambda u: 1.0 - 3.0 * np.asarray(u) ** 2,
        fpp=lambda u: -6.0 * np.asarray(u),
        a=2.0,
        name="allen-cahn",
    )


def _gl_nodes(order: int = 48):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _quadrature_F(nl: Nonlinearity, m: np.ndarray, sign: float, order: int = 48):
    """F(m) = int_0^m dt / sqrt(2 W(sign * t)) for m in [0, 1).

    Uses the substitution t = 1 - exp(-x), which removes the exponential
    pile-up of the integrand near the well and leaves a smooth integrand
    tending to 1/sqrt(a); fixed-order Gauss-Legendre is then spectrally
    accurate.  Vectorized over m.
    """
    m = np.asarray(m, dtype=float)
    X = -np.log1p(-m)  # upper limit in x
    xg, wg = _gl_nodes(order)
    # map [-1,1] -> [0, X] per node
    xx = 0.5 * X[..., None] * (xg + 1.0)
    tt = -np.expm1(-xx)
    integrand = np.exp(-xx) / np.sqrt(2.0 * nl.W(sign * tt))
    return 0.5 * X * np.sum(wg * integrand, axis=-1)


def _invert_branch(nl: Nonlinearity, zeta_abs: np.ndarray, sign: float,
                   tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Solve F(m) = zeta_abs for m in [0, 1) by Newton with bisection guard."""
    z = np.asarray(zeta_abs, dtype=float)
    sq = np.sqrt(nl.a)
    m = np.clip(np.tanh(0.5 * sq * z), 0.0, 1.0 - 1e-16)
    lo = np.zeros_like(z)
    hi = np.full_like(z, 1.0 - 1e-16)
    for _ in range(max_iter):
        r = _quadrature_F(nl, m, sign) - z
        done = np.abs(r) <= tol * (1.0 + z)
        if np.all(done):
            break
        hi = np.where(r > 0, np.minimum(hi, m), hi)
        lo = np.where(r < 0, np.maximum(lo, m), lo)
        step = r * np.sqrt(2.0 * nl.W(sign * m))  # Newton: F'(m) = 1/sqrt(2W)
        m_new = m - step
        bad = (m_new <= lo) | (m_new >= hi) | ~np.isfinite(m_new)
        m_new = np.where(bad, 0.5 * (lo + hi), m_new)
        m = np.where(done, m, m_new)
    return m


@dataclass
class HeteroclinicProfile:
    """Sampled heteroclinic layer profile with exact derivative relations.

    ``w`` solves w'' + f(w) = 0, w(0) = 0, w(+-inf) = +-1; derivatives are
    stored through the first integral (w' = sqrt(2W(w)), w'' = -f(w)) so no
    finite differencing enters the samples.
    """

    nonlinearity: Nonlinearity
    zeta: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    wpp: np.ndarray
    tail_c_plus: float
    tail_c_minus: float
    xi: float  # int (w')^2 dzeta over the grid
    _tab_cache: dict = field(default_factory=dict, repr=False)

    @property
    def decay_rate(self) -> float:
        return self.nonlinearity.decay_rate

    @property
    def half_width(self) -> float:
        return float(self.zeta[-1])

    def w_at(self, zeta):
        """Evaluate w at arbitrary points by re-inverting the quadrature identity."""
        z = np.asarray(zeta, dtype=float)
        out = np.empty_like(z)
        rate = self.decay_rate
        R = self.half_width
        for sign, c_tail in ((1.0, self.tail_c_plus), (-1.0, self.tail_c_minus)):
            sel = (z >= 0) if sign > 0 else (z < 0)
            if not np.any(sel):
                continue
            za = np.abs(z[sel])
            vals = np.empty_like(za)
            far = za > R
            if np.any(~far):
                vals[~far] = sign * _invert_branch(self.nonlinearity, za[~far], sign)
            if np.any(far):
                vals[far] = sign * (1.0 - c_tail * np.exp(-rate * za[far]))
            out[sel] = vals
        return out if out.ndim else float(out)

    def wp_at(self, zeta):
        w = self.w_at(zeta)
        return np.sqrt(np.maximum(2.0 * self.nonlinearity.W(w), 0.0))

    def wpp_at(self, zeta):
        return -self.nonlinearity.f(self.w_at(zeta))

    def tabulate(self, zeta: np.ndarray):
        """Cached (w, w', w'') samples on a one-dimensional grid."""
        zeta = np.asarray(zeta, dtype=float)
        key = (float(zeta[0]), float(zeta[-1]), len(zeta))
        hit = self._tab_cache.get(key)
        if hit is not None and np.array_equal(hit[0], zeta):
            return hit[1], hit[2], hit[3]
        w = self.w_at(zeta)
        wp = np.sqrt(np.maximum(2.0 * self.nonlinearity.W(w), 0.0))
        wpp = -self.nonlinearity.f(w)
        if len(self._tab_cache) > 16:
            self._tab_cache.clear()
        self._tab_cache[key] = (zeta.copy(), w, wp, wpp)
        return w, wp, wpp


def build_profile(nl: Nonlinearity, half_width: float = 12.0, n: int = 4096) -> HeteroclinicProfile:
    """Construct the heteroclinic profile on a symmetric uniform grid.

    ``n`` is the number of grid intervals on [-half_width, half_width]; the
    node count is n + 1 and the grid always contains zeta = 0.
    """
    if n % 2:
        n += 1  # keep the grid symmetric about zero
    zeta = np.linspace(-half_width, half_width, n + 1)
    w = np.empty_like(zeta)
    half = n // 2
    w[half:] = _invert_branch(nl, zeta[half:], 1.0)
    w[:half] = -_invert_branch(nl, np.abs(zeta[:half]), -1.0)
    wp = np.sqrt(np.maximum(2.0 * nl.W(w), 0.0))
    wpp = -nl.f(w)
    rate = nl.decay_rate
    c_plus = float((1.0 - w[-1]) * np.exp(rate * half_width))
    c_minus = float((1.0 + w[0]) * np.exp(rate * half_width))
    xi = float(np.trapezoid(wp**2, zeta))
    return HeteroclinicProfile(nl, zeta, w, wp, wpp, c_plus, c_minus, xi)


@dataclass
class TResult:
    """Output of the right inverse T of p -> p'' + f'(w) p acting on -q."""

    zeta: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    pzz: np.ndarray  # exact second derivative -f'(w) p - q
    orthogonality_defect: float
    envelope_constant: float
    orthogonal: bool


def _two_sided_cumulative(y: np.ndarray, x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Cumulative Simpson integral from x[0], stitched from both ends.

    For integrands whose running integral nearly cancels (orthogonal sources)
    the right half is computed as total minus a right-anchored cumulative, so
    the small tail values are not lost to cancellation against O(1) partial
    sums.
    """
    y = np.moveaxis(y, axis, -1)
    n = y.shape[-1]
    left = cumulative_simpson(y, x=x, initial=0.0)
    right = cumulative_simpson(y[..., ::-1], x=-x[::-1], initial=0.0)[..., ::-1]
    total = left[..., -1:]
    mid = n // 2
    out = np.concatenate([left[..., :mid], (total - right)[..., mid:]], axis=-1)
    return np.moveaxis(out, -1, axis)


def apply_T(profile: HeteroclinicProfile, zeta: np.ndarray, q: np.ndarray,
            envelope_power: int = 1, orth_tol: float = 1e-8) -> TResult:
    """Variation-of-parameters solve of p'' + f'(w) p + q = 0 on a window.

        p(zeta) = w'(zeta) int_{-R}^zeta w'(s)^{-2} ( int_{-R}^s q w' ) ds

    ``zeta`` must be a uniform grid symmetric about 0; ``q`` may carry leading
    batch axes with the window along the last axis.  The derivative pair
    (p', p'') is produced analytically from the same integrals, so residual
    checks are limited only by quadrature accuracy.  The orthogonality defect
    int q w' (which controls the decaying envelope of p) is reported.
    """
    zeta = np.asarray(zeta, dtype=float)
    q = np.asarray(q, dtype=float)
    w, wp, wpp = profile.tabulate(zeta)
    inner = _two_sided_cumulative(q * wp, zeta)  # I(s) = int_{-R}^s q w'
    jint = cumulative_simpson(inner / wp**2, x=zeta, initial=0.0)
    p = -wp * jint
    dp = -(wpp * jint + inner / wp)
    # normalize the kernel freedom: the anchored double integral carries a
    # w'-component that grows ~ R^2 with the window; remove it so T is the
    # right inverse onto the orthogonal complement of the translation mode
    xi = simpson(wp * wp, x=zeta)
    coef = np.asarray(simpson(p * wp, x=zeta) / xi)
    p = p - coef[..., None] * wp
    dp = dp - coef[..., None] * wpp
    pzz = -profile.nonlinearity.fp(w) * p - q
    orth = simpson(q * wp, x=zeta)
    scale = np.sqrt(simpson(q * q, x=zeta) * simpson(wp * wp, x=zeta))
    defect = float(np.max(np.abs(orth) / np.maximum(scale, 1e-300)))
    rate = profile.decay_rate
    env = (1.0 + np.abs(zeta) ** (envelope_power + 1)) * np.exp(-rate * np.abs(zeta))
    c_env = float(np.max(np.abs(p) / env))
    return TResult(zeta, p, dp, pzz, defect, c_env, defect <= orth_tol)


def _fd_derivative(psi: np.ndarray, dz: float) -> np.ndarray:
    """Fourth-order centered first derivative with one-sided closures."""
    d = np.empty_like(psi)
    d[..., 2:-2] = (psi[..., :-4] - 8 * psi[..., 1:-3] + 8 * psi[..., 3:-1] - psi[..., 4:]) / (12 * dz)
    for i in (0, 1):
        d[..., i] = (-25 * psi[..., i] + 48 * psi[..., i + 1] - 36 * psi[..., i + 2]
                     + 16 * psi[..., i + 3] - 3 * psi[..., i + 4]) / (12 * dz)
        d[..., -1 - i] = (25 * psi[..., -1 - i] - 48 * psi[..., -2 - i] + 36 * psi[..., -3 - i]
                          - 16 * psi[..., -4 - i] + 3 * psi[..., -5 - i]) / (12 * dz)
    return d


def quadratic_form(profile: HeteroclinicProfile, zeta: np.ndarray, psi: np.ndarray,
                   dpsi: np.ndarray | None = None) -> float:
    """Q(psi) = int |psi'|^2 - f'(w) psi^2 over the window.

    Q vanishes on the translation mode w' and satisfies the weighted identity
    Q(rho w') = int (w')^2 |rho'|^2; it is coercive on the complement of w'.
    """
    zeta = np.asarray(zeta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if dpsi is None:
        dpsi = _fd_derivative(psi, float(zeta[1] - zeta[0]))
    w, _, _ = profile.tabulate(zeta)
    fpw = profile.nonlinearity.fp(w)
    return float(np.trapezoid(dpsi**2 - fpw * psi**2, zeta))


def project_off_kernel(profile: HeteroclinicProfile, zeta: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Remove the w'-component: psi - (<psi, w'> / <w', w'>) w'."""
    _, wp, _ = profile.tabulate(zeta)
    coef = np.trapezoid(psi * wp, zeta) / np.trapezoid(wp * wp, zeta)
    return psi - coef * wp
