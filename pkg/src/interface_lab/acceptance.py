"""Quantitative acceptance gates for the whole laboratory.

Each criterion function runs a self-contained experiment against a frozen
oracle (closed forms, manufactured solutions, or scaling laws), returning a
:class:`CriterionResult` with the measured values, the gate, and a verdict.
``run_all`` executes the suite; ``quick=True`` shrinks sweeps and resolutions
for a fast smoke pass while keeping every gate's logic identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import ansatz as az
from . import energy as en
from . import jacobi as jb
from . import simulate as sim
from .fermi import build_modified_chart
from .geometry import (
    boosted_plane,
    canonical_coordinates,
    evolve_radial_minimal,
    mean_curvature,
    static_cylinder,
)
from .nonlinearity import (
    _fd_derivative,
    allen_cahn,
    apply_T,
    build_profile,
    project_off_kernel,
    quadratic_form,
)

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.details.items())
        return f"[{tag}] criterion {self.cid}: {self.title} ({info}) [{self.runtime:.1f}s]"


def _result(cid, title, passed, details, t0):
    return CriterionResult(cid, title, bool(passed), details, time.time() - t0)


def _profile():
    return build_profile(allen_cahn(), half_width=12.0, n=4096)


def criterion_1(quick: bool = False) -> CriterionResult:
    """Heteroclinic profile against the closed form tanh(zeta/sqrt(2))."""
    t0 = time.time()
    prof = _profile()
    err = float(np.max(np.abs(prof.w - np.tanh(prof.zeta / np.sqrt(2.0)))))
    return _result(1, "profile vs tanh closed form",
                   err <= 1e-8, {"sup_error": err, "gate": 1e-8}, t0)


def criterion_2(quick: bool = False) -> CriterionResult:
    """Right-inverse residual of the layer ODE solver for q = zeta w'."""
    t0 = time.time()
    prof = _profile()
    m = np.abs(prof.zeta) <= 10.0 + 1e-12
    z = prof.zeta[m]
    dz = z[1] - z[0]
    q = z * prof.wp[m]
    res = apply_T(prof, z, q)
    d2 = _fd_derivative(_fd_derivative(res.p, dz), dz)
    defect = float(np.max(np.abs(
        d2 + allen_cahn().fp(prof.w_at(z)) * res.p + q)))
    return _result(2, "T-operator ODE residual for q = zeta w'",
                   defect <= 1e-6, {"residual": defect, "gate": 1e-6}, t0)


def criterion_3(quick: bool = False) -> CriterionResult:
    """Quadratic-form facts: kernel nullity, rho-identity, coercivity."""
    t0 = time.time()
    prof = _profile()
    m = np.abs(prof.zeta) <= 10.0 + 1e-12
    z = prof.zeta[m]
    wp = prof.wp[m]
    wpp = prof.wpp[m]
    q_kernel = quadratic_form(prof, z, wp, wpp)
    rng = np.random.default_rng(11)
    rel = 0.0
    for _ in range(20):
        a, b, c = rng.uniform(0.3, 2.0, 3)
        tau = rng.uniform(3.0, 6.0)
        env = np.exp(-((z / tau) ** 2))
        rho = a * np.sin(b * z + c) * env + 0.5
        drho = (a * b * np.cos(b * z + c)
                - 2.0 * a * np.sin(b * z + c) * z / tau**2) * env
        lhs = quadratic_form(prof, z, rho * wp, drho * wp + rho * wpp)
        rhs = float(np.trapezoid(wp**2 * drho**2, x=z))
        rel = max(rel, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    draws = 20 if quick else 100
    cmin = np.inf
    for _ in range(draws):
        coef = rng.normal(size=6)
        p = sum(ck * np.sin((j + 1) * 0.3 * z + j) * np.exp(-((z / 5.0) ** 2))
                for j, ck in enumerate(coef))
        p = project_off_kernel(prof, z, p)
        norm = float(np.trapezoid(p**2, x=z))
        cmin = min(cmin, quadratic_form(prof, z, p) / norm)
    ok = q_kernel <= 1e-8 and rel <= 1e-6 and cmin > 0.0
    return _result(3, "quadratic form: nullity, identity, coercivity", ok,
                   {"Q_kernel": float(q_kernel), "identity_rel": rel,
                    "coercivity": float(cmin)}, t0)


def criterion_4(quick: bool = False) -> CriterionResult:
    """Mean-curvature gates for the three reference surfaces."""
    t0 = time.time()
    plane = boosted_plane(v=0.3, T=1.0, nt=65)
    zp = np.linspace(-0.3, 0.3, 7)
    h_plane = float(np.max(np.abs(mean_curvature(plane, zp))))
    cyl = static_cylinder(R0=1.0, T=1.0, nt=65, ntheta=32)
    h_cyl = float(np.max(np.abs(mean_curvature(cyl, 0.0) + 1.0)))
    R0 = 1.0
    circ = evolve_radial_minimal(R0, T=0.8 * R0 * np.pi / 2.0,
                                 nt=129 if quick else 257, ntheta=32)
    h_circ = float(np.max(np.abs(mean_curvature(circ, 0.0))))
    ok = h_plane <= 1e-10 and h_cyl <= 1e-6 and h_circ <= 1e-4
    return _result(4, "mean curvature of plane / cylinder / collapsing circle",
                   ok, {"plane": h_plane, "cylinder_defect": h_cyl,
                        "circle": h_circ}, t0)


def criterion_5(quick: bool = False) -> CriterionResult:
    """Modified-chart invariants on both desk surfaces."""
    t0 = time.time()
    details = {}
    ok = True
    for name, surf in (("plane", boosted_plane(v=0.3, T=1.0, nt=65)),
                       ("circle", evolve_radial_minimal(
                           1.0, T=0.8, nt=129, ntheta=16))):
        cross = canonical_coordinates(surf).invariant_report()["cross_terms"]
        chart = build_modified_chart(surf)
        sig = chart.signature_report()
        idr = chart.identity_reports()
        ok = ok and sig["g00_max"] < 0.0 and sig["spatial_min_eig"] > 0.0
        ok = ok and cross <= 1e-8
        ok = ok and idr["fermi_identity_defect"] <= 1e-10
        ok = ok and idr["lab_time_defect"] <= 1e-10
        details[f"{name}_cross"] = cross
        details[f"{name}_eig"] = sig["spatial_min_eig"]
    return _result(5, "chart invariants (gauge, blending, signature)", ok,
                   details, t0)


def criterion_6(quick: bool = False) -> CriterionResult:
    """Displacement-equation solver order via a manufactured solution."""
    t0 = time.time()
    res = [(61, 48), (121, 96)] if quick else [(81, 64), (161, 128), (321, 256)]
    errs = []
    for nt, nth in res:
        s = evolve_radial_minimal(R0=1.0, T=0.6, nt=nt, ntheta=nth)
        p = jb.assemble(s)
        th = s.theta
        hm = lambda t: np.sin(2 * th) * t**2
        hm_t = lambda t: np.sin(2 * th) * 2 * t

        def src(t):
            return (np.sin(2 * th) * 2.0
                    + 4 * p.at("abar", t) * np.sin(2 * th) * t**2
                    - p.at("bbar0", t) * hm_t(t)
                    - p.at("bbarth", t) * 2 * np.cos(2 * th) * t**2
                    - p.at("abar_gamma", t) * hm(t)) / p.at("g00", t)

        sol = jb.solve(p, source=src, h0=hm(0.0), v0=hm_t(0.0))
        errs.append(float(np.max(np.abs(sol.h[-1] - hm(s.y0[-1])))))
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1)]
    ok = all(o >= 1.9 for o in orders)
    return _result(6, "displacement solver manufactured-solution order", ok,
                   {"orders": [round(o, 3) for o in orders]}, t0)


def criterion_7(quick: bool = False) -> CriterionResult:
    """Residual scaling of the corrected ansatz on the collapsing circle."""
    t0 = time.time()
    prof = _profile()
    surf = evolve_radial_minimal(2.0, T=0.8, nt=129, ntheta=8 if quick else 16)
    eps_list = (0.16, 0.08, 0.04) if quick else (0.16, 0.08, 0.04, 0.02)
    scan = az.residual_scan(prof, surf, ks=(0, 1, 2), eps_list=eps_list)
    gates = {k: k + 2.7 for k in (0, 1, 2)}
    ok = all(scan["slopes"][k] >= gates[k] for k in gates)
    return _result(7, "residual-order scaling on the collapsing circle", ok,
                   {f"slope_k{k}": round(scan["slopes"][k], 3) for k in gates},
                   t0)


def criterion_8(quick: bool = False) -> CriterionResult:
    """Nonlinear solver against the exact boosted kink."""
    t0 = time.time()
    nl = allen_cahn()
    prof = _profile()
    eps, v = 0.05, 0.4
    g = 1.0 / np.sqrt(1.0 - v * v)
    exact = lambda x, t: prof.w_at(g * (x - v * t) / eps)
    errs = []
    for per in (8.0, 16.0, 32.0):
        st = sim.make_planar_state(
            eps, -1.5, 2.0, lambda x: exact(x, 0.0),
            lambda x: -g * v * prof.wp_at(g * x / eps) / eps, dx_per_eps=per)
        end = sim.run_nonlinear(st, nl, T=1.0, snap_every=1.0)[-1]
        errs.append(float(np.max(np.abs(end.u - exact(end.x, end.t)))))
    # refinement order from the asymptotic pair (the coarsest level sees
    # partial cancellation between the h^2 time and h^4 space error terms)
    order = float(np.log2(errs[-2] / errs[-1]))
    ok = errs[0] <= 5e-3 and order >= 1.9
    return _result(8, "boosted-kink oracle: accuracy and order", ok,
                   {"sup_error": errs[0], "gate": 5e-3,
                    "order": round(order, 3)}, t0)


def criterion_9(quick: bool = False) -> CriterionResult:
    """Interface-deviation scaling and far-field decay for radial runs."""
    t0 = time.time()
    nl = allen_cahn()
    prof = _profile()
    surf = evolve_radial_minimal(1.0, T=0.8, nt=129, ntheta=16)
    eps_list = (0.1, 0.05) if quick else (0.1, 0.05, 0.025)
    devs, rates = {}, {}
    for eps in eps_list:
        approx = az.glue(az.build_ansatz(prof, surf, eps, 2),
                         r=0.45 * surf.delta)
        st = sim.make_radial_state(
            eps, 2.5, lambda r: approx.u_and_ut(r, 0.0)[0],
            lambda r: approx.u_and_ut(r, 0.0)[1], dx_per_eps=16.0)
        snaps = sim.run_nonlinear(st, nl, T=0.8, snap_every=0.05)
        track = sim.track_interface(snaps, 1, reference=lambda t: np.cos(t))
        devs[eps] = track.max_deviation()
        end = snaps[-1]
        s = (end.x - np.cos(end.t)) / eps
        sel = (s >= 1.0) & (s <= 2.0)
        rates[eps] = float(-np.polyfit(
            s[sel], np.log(np.abs(end.u[sel] - 1.0) + 1e-300), 1)[0])
    p = float(np.polyfit(np.log(list(devs)), np.log(list(devs.values())), 1)[0])
    dev_mid = devs[0.05]
    ok = (dev_mid <= 0.12 and all(r > 0 for r in rates.values())
          and 0.7 <= p <= 1.3)
    return _result(9, "radial interface deviation scaling and tail decay", ok,
                   {"p": round(p, 3), "p_gate": "[0.7, 1.3]",
                    "dev_eps_0.05": dev_mid,
                    "min_tail_rate": round(min(rates.values()), 3)}, t0)


def criterion_10(quick: bool = False) -> CriterionResult:
    """Energy diagnostics on the planar linearized run."""
    t0 = time.time()
    nl = allen_cahn()
    prof = _profile()
    T = 0.5
    Cs, ortho_max, split_max, coerc_min = {}, 0.0, 0.0, np.inf
    for eps in (0.1, 0.05):
        st = sim.make_planar_state(eps, -1.5, 1.5,
                                   lambda x: np.zeros_like(x),
                                   lambda x: np.zeros_like(x))
        ustar = lambda x, t: prof.w_at(x / eps)
        eta = lambda x, t: np.exp(-((x - 0.6) / 0.15) ** 2)
        snaps = sim.run_linearized(st, nl, ustar, T=T, eta=eta,
                                   snap_every=0.05)
        fr = en.EnergyFrame(eps, prof, r1=0.4, r2=0.2)
        rep = en.gronwall_check(fr, snaps, eta=eta)
        Cs[eps] = rep["C"]
        coerc_min = min(coerc_min, rep["coercivity_min"])
        for st_i, row in zip(snaps, rep["rows"]):
            split = row["split"]
            wz = fr.wz(st_i.x)
            ortho_max = max(ortho_max, split.orthogonality_defect(wz))
            split_max = max(split_max, split.split_identity_defect())
    ratio = max(Cs.values()) / max(min(Cs.values()), 1e-12)
    ok = (ortho_max <= 1e-10 and split_max <= 1e-8 and coerc_min > 0.0
          and all(np.isfinite(c) for c in Cs.values()) and ratio <= 2.0)
    return _result(10, "energy split, coercivity, and Gronwall stability", ok,
                   {"orthogonality": ortho_max, "split_defect": split_max,
                    "coercivity_min": coerc_min,
                    "C_ratio": round(ratio, 3)}, t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(quick: bool = False, only=None):
    results = []
    for fn in CRITERIA:
        cid = int(fn.__name__.split("_")[1])
        if only is not None and cid not in only:
            continue
        results.append(fn(quick))
    return results
