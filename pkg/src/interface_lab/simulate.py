"""Leapfrog solvers for the scaled wave equation and its linearization.

The nonlinear model is eps^2 box u + f(u) = 0 with box = -d_tt + Lap, solved
in two reduced geometries: a 1-D interval (planar fronts) and a radial grid
for rotationally symmetric fields in 2 + 1 dimensions, where the Laplacian is
u_rr + u_r / r.  The linearized solver advances box phi + f'(u*) phi / eps^2
= eta on a frozen or evaluated background u*.

Boundary policy: the far ends are clamped to the pure phases (the layer tail
is exponentially small there); the radial axis end uses a symmetric-ghost
Neumann closure at r_min.  Both solvers are plain velocity-Verlet leapfrog,
second order in time, with a CFL bound dt <= 0.5 dx and a reaction-stiffness
bound dt <= 0.2 eps / sqrt(max |f'|).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .nonlinearity import Nonlinearity

__all__ = [
    "FieldState",
    "InterfaceTrack",
    "make_planar_state",
    "make_radial_state",
    "step_nonlinear",
    "step_linearized",
    "run_nonlinear",
    "run_linearized",
    "track_interface",
    "discrete_energy",
    "write_snapshot",
    "read_snapshot",
]

SNAPSHOT_MAGIC = b"ILW1"


@dataclass
class FieldState:
    """Field and velocity samples on a uniform spatial grid at one time."""

    x: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    t: float
    eps: float
    mode: str                      # "planar" | "radial"
    clamp: tuple = (-1.0, 1.0)     # phase values held at the two ends

    def __post_init__(self):
        if self.mode not in ("planar", "radial"):
            raise ValueError("mode must be 'planar' or 'radial'")
        if self.x.ndim != 1 or len(self.x) < 5:
            raise ValueError("need a 1-D grid with at least 5 nodes")
        self.dx = float(self.x[1] - self.x[0])
        if self.mode == "radial" and self.x[0] <= 0:
            raise ValueError("radial grid must start at r > 0")

    def check_resolution(self):
        if self.dx > self.eps / 8.0 + 1e-12:
            raise ValueError("grid does not resolve the layer: need dx <= eps/8")

    def sentinel(self):
        if np.max(np.abs(self.u)) > 1.1:
            raise RuntimeError(f"blow-up sentinel tripped at t = {self.t:.6g}")


def make_planar_state(eps: float, x_lo: float, x_hi: float,
                      u0, u1, t0: float = 0.0,
                      dx_per_eps: float = 8.0) -> FieldState:
    """Uniform interval grid with +-1 phases clamped at the ends."""
    dx = eps / dx_per_eps
    n = int(np.ceil((x_hi - x_lo) / dx)) + 1
    x = x_lo + dx * np.arange(n)
    u = np.asarray(u0(x), dtype=float)
    ut = np.asarray(u1(x), dtype=float)
    clamp = (float(np.sign(u[0])), float(np.sign(u[-1])))
    return FieldState(x, u, ut, float(t0), eps, "planar", clamp)


def make_radial_state(eps: float, r_max: float, u0, u1, t0: float = 0.0,
                      dx_per_eps: float = 8.0) -> FieldState:
    """Radial grid [10 dx, r_max]; Neumann at the axis, clamp at r_max."""
    dx = eps / dx_per_eps
    r_min = 10.0 * dx
    n = int(np.ceil((r_max - r_min) / dx)) + 1
    r = r_min + dx * np.arange(n)
    u = np.asarray(u0(r), dtype=float)
    ut = np.asarray(u1(r), dtype=float)
    clamp = (float(np.sign(u[0])), float(np.sign(u[-1])))
    return FieldState(r, u, ut, float(t0), eps, "radial", clamp)


def _laplacian(state: FieldState, u: np.ndarray) -> np.ndarray:
    """Centered Laplacian: fourth order inside, second order next to the ends.

    The near-end downgrade is harmless by construction: the ends live in the
    clamped pure phase (or, radially, on the axis side far from the layer),
    where the field is exponentially flat.
    """
    dx, dx2 = state.dx, state.dx * state.dx
    lap = np.zeros_like(u)
    lap[2:-2] = (-u[4:] + 16.0 * u[3:-1] - 30.0 * u[2:-2]
                 + 16.0 * u[1:-3] - u[:-4]) / (12.0 * dx2)
    lap[1] = (u[2] - 2.0 * u[1] + u[0]) / dx2
    lap[-2] = (u[-1] - 2.0 * u[-2] + u[-3]) / dx2
    if state.mode == "radial":
        ur = np.zeros_like(u)
        ur[2:-2] = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * dx)
        ur[1] = (u[2] - u[0]) / (2.0 * dx)
        ur[-2] = (u[-1] - u[-3]) / (2.0 * dx)
        lap[1:-1] += ur[1:-1] / state.x[1:-1]
        # symmetric ghost node: du/dr = 0 at r_min
        lap[0] = 2.0 * (u[1] - u[0]) / dx2
    return lap


def _check_dt(state: FieldState, dt: float, fp_max: float):
    if dt > 0.5 * state.dx + 1e-15:
        raise ValueError("CFL violation: need dt <= 0.5 dx")
    if dt > 0.2 * state.eps / np.sqrt(max(fp_max, 1e-300)) + 1e-15:
        raise ValueError("stiffness violation: need dt <= 0.2 eps / sqrt(max|f'|)")


def step_nonlinear(state: FieldState, dt: float, nl: Nonlinearity) -> FieldState:
    """One velocity-Verlet step of u_tt = Lap u + f(u) / eps^2."""
    fp_max = float(np.max(np.abs(nl.fp(np.clip(state.u, -1.1, 1.1)))))
    _check_dt(state, dt, fp_max)
    inv_e2 = 1.0 / (state.eps * state.eps)

    def accel(u):
        return _laplacian(state, u) + nl.f(u) * inv_e2

    a0 = accel(state.u)
    u = state.u + dt * state.ut + 0.5 * dt * dt * a0
    u[-1] = state.clamp[1]
    if state.mode == "planar":
        u[0] = state.clamp[0]
    ut = state.ut + 0.5 * dt * (a0 + accel(u))
    ut[-1] = 0.0
    if state.mode == "planar":
        ut[0] = 0.0
    out = replace(state, u=u, ut=ut, t=state.t + dt)
    out.sentinel()
    return out


def step_linearized(state: FieldState, dt: float, nl: Nonlinearity,
                    ustar, eta=None) -> FieldState:
    """One step of phi_tt = Lap phi + f'(u*) phi / eps^2 - eta.

    ``ustar(x, t)`` evaluates the background; ``eta(x, t)`` the source.  The
    far ends are held at zero (the homogeneous analogue of the phase clamp).
    """
    inv_e2 = 1.0 / (state.eps * state.eps)
    fp0 = nl.fp(np.asarray(ustar(state.x, state.t), dtype=float))
    _check_dt(state, dt, float(np.max(np.abs(fp0))))

    def accel(u, t, fp):
        src = 0.0 if eta is None else np.asarray(eta(state.x, t), dtype=float)
        return _laplacian(state, u) + fp * inv_e2 * u - src

    a0 = accel(state.u, state.t, fp0)
    u = state.u + dt * state.ut + 0.5 * dt * dt * a0
    u[-1] = 0.0
    if state.mode == "planar":
        u[0] = 0.0
    t1 = state.t + dt
    fp1 = nl.fp(np.asarray(ustar(state.x, t1), dtype=float))
    ut = state.ut + 0.5 * dt * (a0 + accel(u, t1, fp1))
    ut[-1] = 0.0
    if state.mode == "planar":
        ut[0] = 0.0
    return replace(state, u=u, ut=ut, t=t1)


def _n_steps(T: float, t0: float, dt_max: float):
    n = max(int(np.ceil((T - t0) / dt_max - 1e-12)), 1)
    return n, (T - t0) / n


def run_nonlinear(state: FieldState, nl: Nonlinearity, T: float,
                  snap_every: float = 0.05, courant: float = 0.5):
    """Advance to time T; return the list of snapshot states (incl. both ends)."""
    state.check_resolution()
    fp_max = float(np.max(np.abs(nl.fp(np.clip(state.u, -1.1, 1.1)))))
    dt_max = min(courant * state.dx, 0.2 * state.eps / np.sqrt(max(fp_max, 1e-300)))
    snaps = [state]
    t_marks = np.arange(state.t, T + 1e-12, snap_every)
    if t_marks[-1] < T - 1e-12:
        t_marks = np.append(t_marks, T)
    for t_next in t_marks[1:]:
        n, dt = _n_steps(t_next, state.t, dt_max)
        for _ in range(n):
            state = step_nonlinear(state, dt, nl)
        snaps.append(state)
    return snaps


def run_linearized(state: FieldState, nl: Nonlinearity, ustar, T: float,
                   eta=None, snap_every: float = 0.05, courant: float = 0.5):
    state.check_resolution()
    fp_max = float(np.max(np.abs(nl.fp(np.asarray(
        ustar(state.x, state.t), dtype=float)))))
    dt_max = min(courant * state.dx, 0.2 * state.eps / np.sqrt(max(fp_max, 1e-300)))
    snaps = [state]
    t_marks = np.arange(state.t, T + 1e-12, snap_every)
    if t_marks[-1] < T - 1e-12:
        t_marks = np.append(t_marks, T)
    for t_next in t_marks[1:]:
        n, dt = _n_steps(t_next, state.t, dt_max)
        for _ in range(n):
            state = step_linearized(state, dt, nl, ustar, eta)
        snaps.append(state)
    return snaps


def discrete_energy(state: FieldState, nl: Nonlinearity) -> float:
    """int eps^2 (u_t^2 + |grad u|^2)/2 + W(u) over the grid measure."""
    ux = np.gradient(state.u, state.dx)
    dens = 0.5 * state.eps**2 * (state.ut**2 + ux**2) + nl.W(state.u)
    if state.mode == "radial":
        dens = dens * state.x
    return float(np.trapezoid(dens, dx=state.dx))


# ---------------------------------------------------------------------------
# interface extraction


@dataclass
class InterfaceTrack:
    """Zero-crossing history of a trajectory with reference deviations."""

    t: np.ndarray
    crossings: list                     # list of arrays, one per snapshot
    expected_count: int
    breakdown: bool
    positions: np.ndarray | None = None  # first crossing per snapshot, if clean
    reference: np.ndarray | None = None
    deviation: float | None = None

    def max_deviation(self) -> float:
        if self.deviation is None:
            raise ValueError("no reference supplied")
        return self.deviation


def _zero_crossings(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    s = np.sign(u)
    idx = np.where(s[:-1] * s[1:] < 0)[0]
    frac = u[idx] / (u[idx] - u[idx + 1])
    roots = x[idx] + frac * (x[idx + 1] - x[idx])
    exact = x[np.where(s == 0)[0]]
    return np.sort(np.concatenate([roots, exact]))


def track_interface(snaps, expected_count: int = 1,
                    reference=None) -> InterfaceTrack:
    """Per-snapshot zero crossings by linear interpolation.

    ``reference(t)`` maps time to the predicted interface location; the track
    is flagged as broken when any snapshot's crossing count disagrees with
    ``expected_count`` (a count of zero everywhere is reported as an empty,
    unbroken track: the field never leaves one phase).
    """
    times = np.array([s.t for s in snaps])
    crossings = [_zero_crossings(s.x, s.u) for s in snaps]
    counts = np.array([len(c) for c in crossings])
    if np.all(counts == 0):
        return InterfaceTrack(times, crossings, expected_count, False)
    breakdown = bool(np.any(counts != expected_count))
    positions = ref = dev = None
    if not breakdown:
        positions = np.array([c[0] for c in crossings])
        if reference is not None:
            ref = np.asarray(reference(times), dtype=float)
            dev = float(np.max(np.abs(positions - ref)))
    return InterfaceTrack(times, crossings, expected_count, breakdown,
                          positions, ref, dev)


# ---------------------------------------------------------------------------
# snapshot files: magic, version-free fixed header, row-major float64 payload


def write_snapshot(path, state: FieldState):
    """Flat binary: magic, mode flag, n, t, eps, x0, dx, then u and ut."""
    mode_flag = 0 if state.mode == "planar" else 1
    header = SNAPSHOT_MAGIC + struct.pack(
        "<iq4d", mode_flag, len(state.x), state.t, state.eps,
        float(state.x[0]), state.dx)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.ut, dtype="<f8").tobytes())


def read_snapshot(path) -> FieldState:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"not a snapshot file: bad magic {magic!r}")
        mode_flag, n, t, eps, x0, dx = struct.unpack("<iq4d", fh.read(44))
        u = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
        ut = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
    x = x0 + dx * np.arange(n)
    mode = "planar" if mode_flag == 0 else "radial"
    return FieldState(x, u, ut, t, eps, mode)
