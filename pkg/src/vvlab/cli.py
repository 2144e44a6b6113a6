"""Command-line interface: ``vvlab <subcommand> ...``."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .decomposition import MODES, decompose_field, effective_fluxes
from .errors import VVLabError
from .experiments import (
    bv_check,
    diagnose_run,
    eps_sweep,
    functional_report,
    l1_continuity_fit,
    load_run,
    run_simulation,
    smoothing_check,
)
from .io import read_manifest, read_snapshot, write_csv
from .solver import GridField, compute_ut
from .systems import BUILTIN_NAMES, builtin_system, check_hypotheses, scaled_viscosity
from .travelling import profile_conservative, verify_profile


def _floats(text: str):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _add_run_options(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--system", help=f"builtin system ({', '.join(BUILTIN_NAMES)})")
    p.add_argument("--ic", help="initial condition, e.g. 'riemann(1;-1)'")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--eps", type=_floats, help="comma-separated, strictly decreasing")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--conservative", action="store_true", default=None)
    p.add_argument("--force", action="store_true", default=None, help="run even if the preflight fails")


def _config_from(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k, None) for k in
                 ("system", "ic", "xmin", "xmax", "M", "eps", "t_end", "seed", "mode", "conservative", "force")}
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    config = base.updated(**overrides)
    if getattr(args, "snapshots", None) is not None:
        config = replace(config, snapshots=None, snapshot_count=args.snapshots)
    return config


def cmd_check(args) -> int:
    names = [args.system] if args.system else list(BUILTIN_NAMES)
    ok = True
    for name in names:
        report = check_hypotheses(builtin_system(name), args.samples)
        print("\n".join(report.lines()))
        print("PASS" if report.passed else "FAIL", name)
        ok &= report.passed
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    config = _config_from(args)
    out = run_simulation(config, report=not args.no_report)
    print(f"wrote {out}")
    return 0


def _snapshot_context(args):
    path = Path(args.snapshot)
    manifest_path = Path(args.run) / "manifest.json" if args.run else path.parent.parent / "manifest.json"
    if manifest_path.exists():
        manifest = read_manifest(manifest_path)
        config = ExperimentConfig.from_dict(manifest["config"])
        eps = next((m["epsilon"] for m in manifest["members"] if m["dir"] == path.parent.name), config.eps[0])
        for m in manifest["members"]:
            for entry in m["snapshots"]:
                if m["dir"] == path.parent.name and entry["file"] == path.name:
                    return config, config.model(), eps, float(entry["time"])
        return config, config.model(), eps, 0.0
    if not args.system:
        raise VVLabError("no manifest found next to the snapshot; pass --system")
    config = ExperimentConfig(system=args.system)
    return config, config.model(), 1.0, 0.0


def cmd_decompose(args) -> int:
    config, model, eps, time = _snapshot_context(args)
    if args.eps is not None:
        eps = args.eps
    mode = args.mode or config.mode
    x, values = read_snapshot(args.snapshot)
    h = float(x[1] - x[0])
    field = GridField(float(x[0] - 0.5 * h), h, values, config.boundary, time)
    ut = compute_ut(model, field, eps, config.conservative)
    comp = decompose_field(scaled_viscosity(model, eps), field, ut, config.cutoffs, mode,
                           check_size=not args.no_size_check)
    effective_fluxes(comp, config.cutoffs)
    n = model.n
    header, cols = ["x"], [x]
    for name in ("v", "w", "sigma", "ratio", "z", "zhat"):
        arr = getattr(comp, name)
        header += [f"{name}{i + 1}" for i in range(n)]
        cols += [arr[:, i] for i in range(n)]
    header.append("recon_residual")
    cols.append(comp.recon_residual)
    write_csv(args.out, header, cols)
    print(f"mode {mode}, max reconstruction residual {float(np.max(comp.recon_residual)):.3e}")
    return 0


def cmd_diagnose(args) -> int:
    if args.out is None:
        for path in diagnose_run(args.run):
            print(f"wrote {path}")
        return 0
    run = load_run(args.run)
    out = Path(args.out)
    for m, (eps, snaps) in enumerate(run.members):
        header, rows = functional_report(run.model, snaps, eps, run.config.cutoffs, run.config.mode,
                                         run.config.conservative)
        target = out if len(run.members) == 1 else out.with_name(f"{out.stem}_eps_{m:02d}{out.suffix}")
        write_csv(target, header, rows.T)
        print(f"wrote {target}")
    return 0


def cmd_tw(args) -> int:
    model = builtin_system(args.system)
    profile = profile_conservative(model, np.array(args.uminus), np.array(args.uplus), args.sigma, M=args.M)
    n = model.n
    header = ["xi"] + [f"u{i + 1}" for i in range(n)] + [f"du{i + 1}" for i in range(n)]
    cols = [profile.xi] + [profile.U[:, i] for i in range(n)] + [profile.Uprime[:, i] for i in range(n)]
    write_csv(args.out, header, cols)
    print(f"sigma             {profile.sigma:.17g}")
    print("\n".join(verify_profile(model, profile).lines()))
    return 0


def cmd_smoothing(args) -> int:
    run = load_run(args.run)
    eps, snaps = run.members[args.member]
    for k in args.k:
        fit = smoothing_check(snaps, k, args.ta, args.tb)
        print(f"k={k} slope {fit.slope:.6f} expected {fit.expected:.3f} deviation {fit.deviation:+.6f} "
              f"({len(fit.times)} snapshots, eps={eps:g})")
    return 0


def cmd_sweep(args) -> int:
    config = _config_from(args)
    result = eps_sweep(config)
    rows = result.rows()
    write_csv(args.out, ["eps_a", "eps_b", "distance", "ratio"], list(zip(*rows)))
    for ea, eb, d, r in rows:
        print(f"eps {ea:g} -> {eb:g}: d = {d:.6e}  ratio = {r:.4f}")
    if result.profile_distance is not None:
        print(f"profile L1 distance {result.profile_distance:.6e} (shift {result.profile_shift:.3e})")
    if result.rarefaction_sup is not None:
        print(f"rarefaction sup distance {result.rarefaction_sup:.6e}")
    return 0


def cmd_report(args) -> int:
    run = load_run(args.run)
    header = ["epsilon", "bv_max_ratio", "L2a", "L2b", "slope_k1", "slope_k2"]
    rows = []
    for eps, snaps in run.members:
        bv = bv_check(snaps)
        try:
            fit = l1_continuity_fit(snaps, eps)
            l2a, l2b = fit.L2a, fit.L2b
        except VVLabError:
            l2a = l2b = math.nan
        slopes = []
        for k in (1, 2):
            try:
                slopes.append(smoothing_check(snaps, k).slope)
            except VVLabError:
                slopes.append(math.nan)
        rows.append((eps, bv.max_ratio, l2a, l2b, *slopes))
        flag = " FLAG" if bv.flagged else ""
        print(f"eps {eps:g}: TV ratio {bv.max_ratio:.6f}{flag}  L2a {l2a:.4g}  L2b {l2b:.4g}  "
              f"slopes {slopes[0]:.4f} {slopes[1]:.4f}")
    if args.out:
        write_csv(args.out, header, list(zip(*rows)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vvlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify structural hypotheses of builtin systems")
    p.add_argument("--system", choices=BUILTIN_NAMES)
    p.add_argument("--samples", type=int, default=100, help="samples per axis (default 100)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a configuration and write snapshots and reports")
    _add_run_options(p)
    p.add_argument("--snapshots", type=int, help="number of equally spaced snapshot intervals")
    p.add_argument("--no-report", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="decompose one snapshot into wave components")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--run", help="run directory holding the manifest")
    p.add_argument("--system", choices=BUILTIN_NAMES)
    p.add_argument("--eps", type=float)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--no-size-check", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("diagnose", help="recompute functional reports of a run")
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("tw", help="compute a viscous travelling-wave profile")
    p.add_argument("--system", required=True, choices=BUILTIN_NAMES)
    p.add_argument("--uminus", type=_floats, required=True)
    p.add_argument("--uplus", type=_floats, required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--M", type=int, default=20001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tw)

    p = sub.add_parser("smoothing", help="fit smoothing slopes on a stored run")
    p.add_argument("--run", required=True)
    p.add_argument("--k", type=int, nargs="+", default=[1, 2], choices=(1, 2, 3))
    p.add_argument("--ta", type=float)
    p.add_argument("--tb", type=float)
    p.add_argument("--member", type=int, default=0, help="index of the viscosity member")
    p.set_defaults(func=cmd_smoothing)

    p = sub.add_parser("sweep-eps", help="vanishing-viscosity convergence table")
    _add_run_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarise bounds and fits of a stored run")
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VVLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
