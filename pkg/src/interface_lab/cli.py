"""Command-line harness: one entry point wiring all modules together.

Configuration is plain ``key = value`` text.  Keys may carry the subcommand
name as a section prefix (``simulate.eps = 0.05``); unprefixed keys apply to
the invoked subcommand.  Values from a ``--config`` file are overridden by
repeated ``--set key=value`` pairs, which are in turn overridden by the
dedicated flags.  Every run validates its full configuration before touching
the filesystem (exit code 2 on any malformed value, with no artifacts), then
writes the resolved configuration verbatim into the output directory next to
the artifacts and a ``manifest.json`` with a SHA-256 per file.  Identical
configurations reproduce identical hashes.

``INTERFACE_LAB_THREADS`` caps the fan-out over independent runs (the
residual scan's epsilon sweep); each individual run is single-threaded and
deterministic.  ``--plot`` on reporting subcommands additionally renders
matplotlib figures next to the delimited output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ansatz as az
from . import energy as en
from . import jacobi as jb
from . import simulate as sim
from .acceptance import run_all
from .fermi import build_modified_chart
from .geometry import (
    boosted_plane,
    evolve_radial_minimal,
    static_cylinder,
)
from .nonlinearity import allen_cahn, build_profile

FLOAT_FMT = "%.17g"


class ConfigError(Exception):
    """A malformed or out-of-range configuration value."""


# ---------------------------------------------------------------------------
# configuration plumbing


def _positive(x):
    if not x > 0:
        raise ConfigError(f"must be positive, got {x}")
    return x


def _nonneg_int(x):
    if x < 0:
        raise ConfigError(f"must be >= 0, got {x}")
    return x


def _speed(x):
    if not -1.0 < x < 1.0:
        raise ConfigError(f"speed must satisfy |v| < 1, got {x}")
    return x


def _courant(x):
    if not 0.0 < x <= 0.5:
        raise ConfigError(f"courant ratio must lie in (0, 0.5], got {x}")
    return x


def _resolution(x):
    if x < 8.0:
        raise ConfigError(f"grid must resolve the layer: dx_per_eps >= 8, got {x}")
    return x


def _choice(*options):
    def check(x):
        if x not in options:
            raise ConfigError(f"must be one of {options}, got {x!r}")
        return x
    return check


def _float_list(s):
    try:
        vals = [float(v) for v in str(s).replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not vals:
        raise ConfigError("empty list")
    return vals


def _int_list(s):
    return [int(v) for v in _float_list(s)]


# per-subcommand schema: key -> (caster, validator-or-None, default)
SCHEMAS = {
    "profile": {
        "half_width": (float, _positive, 12.0),
        "n": (int, _positive, 4096),
    },
    "surface": {
        "kind": (str, _choice("plane", "cylinder", "circle"), "circle"),
        "R0": (float, _positive, 1.0),
        "v": (float, _speed, 0.0),
        "T": (float, _positive, 0.8),
        "nt": (int, _positive, 129),
        "ntheta": (int, _positive, 16),
    },
    "fermi-check": {
        "kind": (str, _choice("plane", "cylinder", "circle"), "circle"),
        "R0": (float, _positive, 1.0),
        "v": (float, _speed, 0.0),
        "T": (float, _positive, 0.8),
        "nt": (int, _positive, 129),
        "ntheta": (int, _positive, 16),
    },
    "jacobi": {
        "R0": (float, _positive, 1.0),
        "T": (float, _positive, 0.6),
        "nt": (int, _positive, 81),
        "ntheta": (int, _positive, 64),
        "levels": (int, _positive, 3),
    },
    "ansatz": {
        "eps": (float, _positive, 0.05),
        "k": (int, _nonneg_int, 2),
        "R0": (float, _positive, 1.0),
        "T": (float, _positive, 0.8),
        "nt": (int, _positive, 129),
        "ntheta": (int, _positive, 16),
    },
    "residual-scan": {
        "ks": (_int_list, None, [0, 1, 2]),
        "eps_list": (_float_list, None, [0.16, 0.08, 0.04, 0.02]),
        "R0": (float, _positive, 2.0),
        "T": (float, _positive, 0.8),
        "nt": (int, _positive, 129),
        "ntheta": (int, _positive, 16),
    },
    "simulate": {
        "mode": (str, _choice("planar", "radial"), "planar"),
        "solver": (str, _choice("nonlinear", "linearized"), "nonlinear"),
        "eps": (float, _positive, 0.05),
        "k": (int, _nonneg_int, 2),
        "T": (float, _positive, 1.0),
        "dx_per_eps": (float, _resolution, 8.0),
        "snap_every": (float, _positive, 0.05),
        "courant": (float, _courant, 0.5),
        "v": (float, _speed, 0.4),
        "R0": (float, _positive, 1.0),
        "r_glue_frac": (float, _positive, 0.45),
        "phi0": (str, _choice("zero", "mode"), "zero"),
        "eta_amp": (float, None, 1.0),
        "eta_center": (float, None, 0.6),
        "eta_width": (float, _positive, 0.15),
    },
    "energy-check": {
        "run": (str, None, ""),
        "C_gamma": (float, None, 10.0),
        "r1": (float, _positive, 0.4),
        "r2": (float, _positive, 0.2),
    },
    "acceptance": {},
}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def resolve_config(command: str, file_path, sets, flag_values) -> dict:
    """Layer defaults < config file < --set pairs < dedicated flags."""
    schema = SCHEMAS[command]
    raw = {}
    if file_path:
        try:
            raw.update(parse_config_text(Path(file_path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for pair in sets or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = (part.strip() for part in pair.split("=", 1))
        raw[key] = value

    cfg = {}
    for key, (caster, check, default) in schema.items():
        value = raw.get(f"{command}.{key}", raw.get(key, None))
        if flag_values.get(key) is not None:
            value = flag_values[key]
        if value is None:
            cfg[key] = default
            continue
        try:
            cast = caster(value)
            cfg[key] = check(cast) if check else cast
        except (TypeError, ValueError, ConfigError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    known = set(schema) | {f"{command}.{k}" for k in schema}
    foreign = [k for k in raw
               if k not in known and ("." not in k or
                                      k.split(".", 1)[0] == command)]
    if foreign:
        raise ConfigError(f"unknown configuration keys: {sorted(foreign)}")
    return cfg


def _fmt(v):
    if isinstance(v, float):
        return FLOAT_FMT % v
    if isinstance(v, list):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def write_config(outdir: Path, command: str, cfg: dict):
    lines = [f"{command}.{k} = {_fmt(v)}" for k, v in sorted(cfg.items())]
    (outdir / "config.cfg").write_text("\n".join(lines) + "\n")


def write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(outdir: Path, command: str):
    files = {}
    for p in sorted(outdir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[str(p.relative_to(outdir))] = hashlib.sha256(
                p.read_bytes()).hexdigest()
    write_json(outdir / "manifest.json", {"command": command, "files": files})


def max_workers() -> int:
    raw = os.environ.get("INTERFACE_LAB_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _make_surface(cfg):
    if cfg["kind"] == "plane":
        return boosted_plane(v=cfg["v"], T=cfg["T"], nt=cfg["nt"])
    if cfg["kind"] == "cylinder":
        return static_cylinder(R0=cfg["R0"], T=cfg["T"], nt=cfg["nt"],
                               ntheta=cfg["ntheta"])
    return evolve_radial_minimal(R0=cfg["R0"], T=cfg["T"], nt=cfg["nt"],
                                 ntheta=cfg["ntheta"])


def _plot(outdir: Path, name: str, draw):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(outdir / name, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands


def cmd_profile(cfg, outdir, plot):
    prof = build_profile(allen_cahn(), half_width=cfg["half_width"],
                         n=cfg["n"])
    write_csv(outdir / "profile.csv", ["zeta", "w", "wp", "wpp"],
              zip(prof.zeta, prof.w, prof.wp, prof.wpp))
    err = float(np.max(np.abs(prof.w - np.tanh(prof.zeta / np.sqrt(2.0)))))
    write_json(outdir / "profile_report.json", {
        "sup_error_vs_tanh": err, "xi": prof.xi,
        "decay_rate": prof.decay_rate,
        "tail_c_plus": prof.tail_c_plus, "tail_c_minus": prof.tail_c_minus,
    })
    if plot:
        _plot(outdir, "profile.png", lambda ax: (
            ax.plot(prof.zeta, prof.w, label="w"),
            ax.plot(prof.zeta, prof.wp, label="w'"),
            ax.set_xlabel("zeta"), ax.legend()))
    return 0


def cmd_surface(cfg, outdir, plot):
    surf = _make_surface(cfg)
    if cfg["kind"] == "circle":
        R, V = surf.aux["R"](surf.y0), surf.aux["Rdot"](surf.y0)
        write_csv(outdir / "surface.csv", ["y0", "R", "Rdot"],
                  zip(surf.y0, R, V))
    else:
        write_csv(outdir / "surface.csv", ["y0"], [(t,) for t in surf.y0])
    write_json(outdir / "surface_report.json", {
        "kind": surf.kind, "minimal": surf.minimal, "delta": surf.delta,
        "invariants": surf.invariant_report(), "params": surf.params,
    })
    if plot and cfg["kind"] == "circle":
        _plot(outdir, "surface.png", lambda ax: (
            ax.plot(surf.y0, surf.aux["R"](surf.y0)),
            ax.set_xlabel("t"), ax.set_ylabel("R(t)")))
    return 0


def cmd_fermi_check(cfg, outdir, plot):
    surf = _make_surface(cfg)
    chart = build_modified_chart(surf)
    sig = chart.signature_report()
    idr = chart.identity_reports()
    ok = (sig["g00_max"] < 0.0 and sig["spatial_min_eig"] > 0.0
          and sig["gnn_min"] > 0.0)
    write_json(outdir / "fermi_report.json", {
        "signature": sig, "identities": idr,
        "radii": {"r1": chart.r1, "r2": chart.r2, "delta1": chart.delta1},
        "passed": ok,
    })
    return 0 if ok else 1


def cmd_jacobi(cfg, outdir, plot):
    rows = []
    nt, nth = cfg["nt"], cfg["ntheta"]
    for _ in range(cfg["levels"]):
        surf = evolve_radial_minimal(R0=cfg["R0"], T=cfg["T"], nt=nt,
                                     ntheta=nth)
        problem = jb.assemble(surf)
        th = surf.theta
        hm = lambda t: np.sin(2 * th) * t**2
        hm_t = lambda t: np.sin(2 * th) * 2 * t

        def src(t):
            return (np.sin(2 * th) * 2.0
                    + 4 * problem.at("abar", t) * np.sin(2 * th) * t**2
                    - problem.at("bbar0", t) * hm_t(t)
                    - problem.at("bbarth", t) * 2 * np.cos(2 * th) * t**2
                    - problem.at("abar_gamma", t) * hm(t)) / problem.at("g00", t)

        sol = jb.solve(problem, source=src, h0=hm(0.0), v0=hm_t(0.0))
        err = float(np.max(np.abs(sol.h[-1] - hm(surf.y0[-1]))))
        rows.append((nt, nth, err))
        nt, nth = 2 * nt - 1, 2 * nth
    write_csv(outdir / "jacobi.csv", ["nt", "ntheta", "err_h"], rows)
    orders = [float(np.log2(rows[i][2] / rows[i + 1][2]))
              for i in range(len(rows) - 1)]
    ok = all(o >= 1.9 for o in orders)
    write_json(outdir / "jacobi_report.json", {"orders": orders, "passed": ok})
    if plot:
        _plot(outdir, "jacobi.png", lambda ax: (
            ax.loglog([r[0] for r in rows], [r[2] for r in rows], "o-"),
            ax.set_xlabel("nt"), ax.set_ylabel("sup error")))
    return 0 if ok else 1


def cmd_ansatz(cfg, outdir, plot):
    prof = build_profile(allen_cahn())
    surf = evolve_radial_minimal(R0=cfg["R0"], T=cfg["T"], nt=cfg["nt"],
                                 ntheta=cfg["ntheta"])
    ans = az.build_ansatz(prof, surf, cfg["eps"], cfg["k"])
    rows = [(i, rec["proj_sup"], rec.get("jacobi_sup", 0.0),
             rec["orthogonality_defect"])
            for i, rec in enumerate(ans.history)]
    write_csv(outdir / "ansatz_history.csv",
              ["round", "proj_sup", "jacobi_sup", "orthogonality_defect"],
              rows)
    write_json(outdir / "ansatz_report.json", {
        "residual_sup": float(np.max(np.abs(az.residual(ans)))),
        "h_sup": float(np.max(np.abs(ans.h))),
        "phi_sup": float(np.max(np.abs(ans.phi))),
        "delta": surf.delta, "zeta_max": float(ans.zeta[-1]),
    })
    return 0


def cmd_residual_scan(cfg, outdir, plot):
    prof = build_profile(allen_cahn())
    surf = evolve_radial_minimal(R0=cfg["R0"], T=cfg["T"], nt=cfg["nt"],
                                 ntheta=cfg["ntheta"])
    ks = tuple(cfg["ks"])

    def one(eps):
        return [{"k": k, "eps": eps,
                 "sup_residual": float(np.max(np.abs(
                     az.residual(az.build_ansatz(prof, surf, eps, k)))))}
                for k in ks]

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        chunks = list(pool.map(one, cfg["eps_list"]))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["k"], -r["eps"]))
    write_csv(outdir / "scan.csv", ["k", "eps", "sup_residual"],
              [(r["k"], r["eps"], r["sup_residual"]) for r in rows])
    slopes, ok = {}, True
    for k in ks:
        pts = [(np.log(r["eps"]), np.log(r["sup_residual"]))
               for r in rows if r["k"] == k]
        x, y = np.array(pts).T
        slopes[str(k)] = float(np.polyfit(x, y, 1)[0])
        ok = ok and slopes[str(k)] >= k + 2.7
    write_json(outdir / "scan_report.json", {
        "slopes": slopes, "gates": {str(k): k + 2.7 for k in ks},
        "passed": ok,
    })
    if plot:
        def draw(ax):
            for k in ks:
                pts = [(r["eps"], r["sup_residual"])
                       for r in rows if r["k"] == k]
                ax.loglog(*zip(*pts), "o-", label=f"k={k}")
            ax.set_xlabel("eps")
            ax.set_ylabel("sup |S|")
            ax.legend()
        _plot(outdir, "scan.png", draw)
    return 0 if ok else 1


def cmd_simulate(cfg, outdir, plot):
    nl = allen_cahn()
    prof = build_profile(nl)
    eps = cfg["eps"]
    if cfg["solver"] == "nonlinear" and cfg["mode"] == "planar":
        v = cfg["v"]
        g = 1.0 / np.sqrt(1.0 - v * v)
        st = sim.make_planar_state(
            eps, -1.5, max(2.0, v * cfg["T"] + 1.5),
            lambda x: prof.w_at(g * x / eps),
            lambda x: -g * v * prof.wp_at(g * x / eps) / eps,
            dx_per_eps=cfg["dx_per_eps"])
        snaps = sim.run_nonlinear(st, nl, T=cfg["T"],
                                  snap_every=cfg["snap_every"],
                                  courant=cfg["courant"])
        reference = lambda t: v * t
    elif cfg["solver"] == "nonlinear":
        surf = evolve_radial_minimal(R0=cfg["R0"], T=cfg["T"], nt=129,
                                     ntheta=16)
        approx = az.glue(az.build_ansatz(prof, surf, eps, cfg["k"]),
                         r=cfg["r_glue_frac"] * surf.delta)
        st = sim.make_radial_state(
            eps, cfg["R0"] + 1.5,
            lambda r: approx.u_and_ut(r, 0.0)[0],
            lambda r: approx.u_and_ut(r, 0.0)[1],
            dx_per_eps=cfg["dx_per_eps"])
        snaps = sim.run_nonlinear(st, nl, T=cfg["T"],
                                  snap_every=cfg["snap_every"],
                                  courant=cfg["courant"])
        Rspl = surf.aux["R"]
        reference = lambda t: Rspl(t)
    else:
        if cfg["phi0"] == "mode":
            u0 = lambda x: prof.wp_at(x / eps)
        else:
            u0 = lambda x: np.zeros_like(x)
        st = sim.make_planar_state(eps, -1.5, 1.5, u0,
                                   lambda x: np.zeros_like(x),
                                   dx_per_eps=cfg["dx_per_eps"])
        ustar = lambda x, t: prof.w_at(x / eps)
        amp, ctr, wid = cfg["eta_amp"], cfg["eta_center"], cfg["eta_width"]
        eta = ((lambda x, t: amp * np.exp(-((x - ctr) / wid) ** 2))
               if amp != 0.0 else None)
        snaps = sim.run_linearized(st, nl, ustar, T=cfg["T"], eta=eta,
                                   snap_every=cfg["snap_every"],
                                   courant=cfg["courant"])
        reference = None

    for i, s in enumerate(snaps):
        sim.write_snapshot(outdir / f"snap_{i:04d}.bin", s)
    track = sim.track_interface(snaps, expected_count=1, reference=reference)
    rows = [(s.t, c[0] if len(c) == 1 else float("nan"))
            for s, c in zip(snaps, track.crossings)]
    write_csv(outdir / "track.csv", ["t", "crossing"], rows)
    energies = [sim.discrete_energy(s, nl) for s in snaps]
    drift = (max(abs(e - energies[0]) for e in energies)
             / max(abs(energies[0]), 1e-300))
    write_json(outdir / "run_summary.json", {
        "mode": cfg["mode"], "solver": cfg["solver"], "eps": eps,
        "T": cfg["T"], "snapshots": len(snaps),
        "energy_drift": drift, "breakdown": track.breakdown,
        "max_deviation": track.deviation,
        "eta": ({"amp": cfg["eta_amp"], "center": cfg["eta_center"],
                 "width": cfg["eta_width"]}
                if cfg["solver"] == "linearized" else None),
    })
    if plot:
        def draw(ax):
            ts = [r[0] for r in rows]
            ax.plot(ts, [r[1] for r in rows], label="tracked")
            if reference is not None:
                ax.plot(ts, [reference(t) for t in ts], "--", label="reference")
            ax.set_xlabel("t")
            ax.legend()
        _plot(outdir, "track.png", draw)
    return 0


def cmd_energy_check(cfg, outdir, plot):
    run_dir = Path(cfg["run"])
    summary_path = run_dir / "run_summary.json"
    if not cfg["run"] or not summary_path.is_file():
        raise ConfigError("run: expected a simulate output directory "
                          "(run_summary.json not found)")
    if not (0.0 < cfg["r2"] <= cfg["r1"]):
        raise ConfigError("need 0 < r2 <= r1")
    summary = json.loads(summary_path.read_text())
    snaps = [sim.read_snapshot(p) for p in sorted(run_dir.glob("snap_*.bin"))]
    if not snaps:
        raise ConfigError("run: no snapshots found")
    prof = build_profile(allen_cahn())
    frame = en.EnergyFrame(summary["eps"], prof, r1=cfg["r1"], r2=cfg["r2"],
                           C_gamma=cfg["C_gamma"])
    eta_cfg = summary.get("eta")
    eta = None
    if eta_cfg and eta_cfg["amp"] != 0.0:
        eta = lambda x, t: eta_cfg["amp"] * np.exp(
            -((x - eta_cfg["center"]) / eta_cfg["width"]) ** 2)
    rep = en.gronwall_check(frame, snaps, eta=eta)
    rows = [(s, r["E"], r["E_nr"], r["E_far"], r["E_gamma"], r["gamma"],
             r["coercivity"]) for s, r in zip(rep["s"], rep["rows"])]
    write_csv(outdir / "energy.csv",
              ["s", "E", "E_nr", "E_far", "E_gamma", "gamma", "coercivity"],
              rows)
    write_json(outdir / "energy_report.json", {
        "gronwall_C": rep["C"] if np.isfinite(rep["C"]) else None,
        "violation": rep["violation"],
        "coercivity_min": rep["coercivity_min"],
        "C_gamma": cfg["C_gamma"],
    })
    if plot:
        _plot(outdir, "energy.png", lambda ax: (
            ax.plot(rep["s"], rep["E"]),
            ax.set_xlabel("s"), ax.set_ylabel("E(s)")))
    return 0 if not rep["violation"] and rep["coercivity_min"] > 0 else 1


# ---------------------------------------------------------------------------
# driver


COMMANDS = {
    "profile": cmd_profile,
    "surface": cmd_surface,
    "fermi-check": cmd_fermi_check,
    "jacobi": cmd_jacobi,
    "ansatz": cmd_ansatz,
    "residual-scan": cmd_residual_scan,
    "simulate": cmd_simulate,
    "energy-check": cmd_energy_check,
}

PLOTTABLE = {"profile", "surface", "jacobi", "residual-scan", "simulate",
             "energy-check"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interface-lab",
        description="Numerical laboratory for wave-driven phase interfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], dest="sets",
                       metavar="KEY=VALUE", help="override one config key")
        if name != "acceptance":
            p.add_argument("--out", required=True,
                           help="output directory for artifacts")
        if name in PLOTTABLE:
            p.add_argument("--plot", action="store_true",
                           help="also render figures next to the CSV output")
        for key in schema:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, default=None, dest=key)
        if name == "acceptance":
            p.add_argument("--quick", action="store_true",
                           help="smaller sweeps, same gates")
            p.add_argument("--only", default=None,
                           help="comma-separated criterion numbers")
            p.add_argument("--out", default=None,
                           help="optional directory for acceptance.json")
    return parser


def _run_acceptance(args) -> int:
    only = None
    if args.only:
        try:
            only = {int(v) for v in args.only.replace(",", " ").split()}
        except ValueError:
            print("error: --only expects criterion numbers", file=sys.stderr)
            return 2
    results = run_all(quick=args.quick, only=only)
    for r in results:
        print(r.line())
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        write_json(outdir / "acceptance.json", [
            {"criterion": r.cid, "title": r.title, "passed": r.passed,
             "details": r.details, "runtime_s": round(r.runtime, 2)}
            for r in results])
        write_manifest(outdir, "acceptance")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "acceptance":
        return _run_acceptance(args)

    schema_keys = SCHEMAS[args.command]
    flag_values = {k: getattr(args, k) for k in schema_keys}
    try:
        cfg = resolve_config(args.command, args.config, args.sets, flag_values)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    # the energy-check run directory is validated pre-artifact as well
    outdir = Path(args.out)
    if args.command == "energy-check":
        try:
            if not cfg["run"] or not (Path(cfg["run"]) / "run_summary.json").is_file():
                raise ConfigError("run: expected a simulate output directory")
            if not (0.0 < cfg["r2"] <= cfg["r1"]):
                raise ConfigError("need 0 < r2 <= r1")
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    outdir.mkdir(parents=True, exist_ok=True)
    write_config(outdir, args.command, cfg)
    status = COMMANDS[args.command](cfg, outdir,
                                    getattr(args, "plot", False))
    write_manifest(outdir, args.command)
    return status


if __name__ == "__main__":
    sys.exit(main())
