"""Config-driven command line front door.

Verbs: simulate | fit | verify | grid | control.  Exit codes: 0 success,
1 theorem violation, 2 config error, 3 runtime error.  Errors are emitted as
machine-readable JSON on stderr; all output files carry the config hash and
are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import integrate
from .artifacts import (
    artifact_dictionary,
    artifact_eigenpairs,
    artifact_json,
    load_artifact,
    model_artifact,
)
from .checks import CHECK_REGISTRY, SuiteContext, aggregate_verdict, run_all_checks
from .config import config_hash, load_config
from .control import ControlDictionary, ControlSchedule, basin_crossing_experiment, \
    fit_control_model, sample_control_data
from .dictionaries import build_monomial_dictionary
from .errors import ConfigError, KoopcheckError
from .fields import make_system
from .reports import VIOLATED, atomic_write_text, canonical_json
from .systems import simulate_trajectory

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(canonical_json({"error": kind, "message": message}) + "\n")
    return code


def _out_dir(args, config) -> str:
    return args.out if args.out else config["output_dir"]


def _csv_with_hash(header: str, rows: list[str], chash: str) -> str:
    return "\n".join([f"# config_hash={chash}", header, *rows]) + "\n"


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    config = load_config(args.config, args.seed)
    chash = config_hash(config)
    try:
        spec = make_system(args.system, _system_params(config, args.system))
    except KoopcheckError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    x0 = np.array(_parse_floats(args.x0))
    if x0.shape != (spec.dimension,):
        return _fail(EXIT_CONFIG, "config", f"x0 must have {spec.dimension} components")
    traj = simulate_trajectory(spec, x0, args.t, n_samples=args.samples,
                               tol=config["integrator"]["tol"])
    lines = traj.to_csv().splitlines()
    text = _csv_with_hash(lines[0], lines[1:], chash)
    path = os.path.join(_out_dir(args, config), f"trajectory_{args.system}.csv")
    atomic_write_text(path, text)
    print(path)
    return EXIT_OK


def _system_params(config, name: str) -> dict:
    if name == "duffing":
        return {"delta": config["systems"]["duffing_delta"]}
    if name == "linear2d":
        a1, a2 = config["systems"]["linear2d_rates"]
        return {"a1": a1, "a2": a2}
    return {}


def cmd_fit(args) -> int:
    config = load_config(args.config, args.seed)
    chash = config_hash(config)
    ctx = SuiteContext(config)
    names = [args.fit] if args.fit else sorted(config["fits"])
    if args.fit and args.fit not in config["fits"]:
        return _fail(EXIT_CONFIG, "config", f"unknown fit {args.fit!r}")
    out = _out_dir(args, config)
    summaries = []
    for name in names:
        model = ctx.model(name)
        artifact = model_artifact(name, model, chash)
        path = os.path.join(out, f"model_{name}.json")
        atomic_write_text(path, artifact_json(artifact) + "\n")
        rows = []
        for entry in artifact["eigenpairs"]:
            lam = complex(entry["lam"]["re"], entry["lam"]["im"])
            mod = (
                abs(complex(entry["lam_discrete"]["re"], entry["lam_discrete"]["im"]))
                if entry["lam_discrete"]
                else float("nan")
            )
            rows.append((lam, mod))
        summaries.append({"fit": name, "path": path, "residual": model.residual,
                          "n_pairs": len(rows)})
        if not args.json:
            print(f"fit {name}: residual={model.residual:.3e} gamma={model.gamma:.3e}")
            print(f"  {'Re lam':>12} {'Im lam':>12} {'|lam_d|':>10}")
            for lam, mod in rows:
                print(f"  {lam.real:>12.6f} {lam.imag:>12.6f} {mod:>10.6f}")
            print(f"  -> {path}")
    if args.json:
        print(canonical_json({"config_hash": chash, "fits": summaries}))
    return EXIT_OK


def cmd_verify(args) -> int:
    config = load_config(args.config, args.seed)
    chash = config_hash(config)
    known = [cid for cid, _ in CHECK_REGISTRY]
    if args.only and args.only not in known:
        return _fail(EXIT_CONFIG, "config", f"unknown check id {args.only!r}; known: {known}")
    reports = run_all_checks(config, only=args.only)
    aggregate = aggregate_verdict(reports)
    doc = {
        "schema_version": 1,
        "config_hash": chash,
        "aggregate_verdict": aggregate,
        "reports": [r.to_dict() for r in reports],
    }
    out = _out_dir(args, config)
    report_path = os.path.join(out, "theorem_reports.json")
    atomic_write_text(report_path, canonical_json(doc) + "\n")
    for report in reports:
        csv_path = os.path.join(out, f"counterexamples_{report.theorem_id}.csv")
        lines = report.counterexample_csv().splitlines()
        atomic_write_text(csv_path, _csv_with_hash(lines[0], lines[1:], chash))
    if args.json:
        print(canonical_json({"config_hash": chash, "aggregate_verdict": aggregate,
                              "verdicts": {r.theorem_id: r.verdict for r in reports},
                              "report_path": report_path}))
    else:
        print(f"theorem reports -> {report_path}")
        for report in reports:
            print(f"  {report.theorem_id:14s} {report.verdict}")
        print(f"aggregate: {aggregate}")
    return EXIT_VIOLATION if any(r.verdict == VIOLATED for r in reports) else EXIT_OK


def _select_pair(artifact: dict, pair_id: str):
    pairs = artifact_eigenpairs(artifact)
    dictionary = artifact_dictionary(artifact)
    if pair_id == "invariant":
        ind_cols = [i for i, e in enumerate(dictionary.entries) if e.kind == "indicator"]
        best, weight = None, -1.0
        for pair in pairs:
            near_unit = (
                abs(pair.lam_discrete - 1.0) <= 1e-3
                if pair.lam_discrete is not None
                else abs(pair.lam) <= 1e-3
            )
            if not near_unit:
                continue
            score = float(np.sum(np.abs(pair.w[ind_cols]))) if ind_cols else 0.0
            if score > weight:
                best, weight = pair, score
        if best is None:
            raise KoopcheckError("artifact has no rate-zero eigenpair")
        return best, dictionary
    try:
        index = int(pair_id)
    except ValueError:
        raise KoopcheckError(f"pair id must be an integer or 'invariant', got {pair_id!r}")
    if not 0 <= index < len(pairs):
        raise KoopcheckError(f"pair id {index} out of range 0..{len(pairs) - 1}")
    return pairs[index], dictionary


def cmd_grid(args) -> int:
    config = load_config(args.config, args.seed)
    chash = config_hash(config)
    try:
        artifact = load_artifact(args.model)
    except FileNotFoundError:
        return _fail(EXIT_CONFIG, "config", f"model artifact not found: {args.model}")
    try:
        pair, dictionary = _select_pair(artifact, args.pair)
    except KoopcheckError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    bounds = _parse_floats(args.region)
    if len(bounds) != 2 * dictionary.dimension:
        return _fail(EXIT_CONFIG, "config",
                     f"region needs {2 * dictionary.dimension} numbers (lo,hi per axis)")
    region = np.array(bounds).reshape(-1, 2)
    resolution = [int(v) for v in _parse_floats(args.resolution)]
    if len(resolution) != dictionary.dimension or any(r < 1 for r in resolution):
        return _fail(EXIT_CONFIG, "config", "resolution needs one positive count per axis")
    axes = [np.linspace(region[j, 0], region[j, 1], resolution[j])
            for j in range(dictionary.dimension)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    values = pair.eval_many(dictionary, pts)
    train = np.array(artifact["training_region"], dtype=float)
    extrapolated = ~np.all((pts >= train[:, 0]) & (pts <= train[:, 1]), axis=1)
    d = dictionary.dimension
    header = ",".join([f"x{i + 1}" for i in range(d)] + ["re_phi", "im_phi", "abs_phi",
                                                         "extrapolated"])
    rows = []
    for k in range(len(pts)):
        coords = ",".join(repr(float(v)) for v in pts[k])
        z = complex(values[k])
        rows.append(
            f"{coords},{z.real!r},{z.imag!r},{abs(z)!r},{int(extrapolated[k])}"
        )
    out = _out_dir(args, config)
    path = os.path.join(out, f"grid_{args.pair}.csv")
    atomic_write_text(path, _csv_with_hash(header, rows, chash))
    print(path)
    return EXIT_OK


def cmd_control(args) -> int:
    config = load_config(args.config, args.seed)
    chash = config_hash(config)
    ctrl = config["control"]
    ctx = SuiteContext(config)
    spec = make_system("bistable_controlled")
    psi_x = ctx.dictionary("bistable")
    xi = build_monomial_dictionary(1, ctrl["psi_xu_degree"])
    psi_xu = ControlDictionary(xi=xi, u_degree=1)
    region = ctx.region("bistable")
    rng_seed = int(config["master_seed"])
    samples = sample_control_data(
        spec, region, tuple(ctrl["u_box"]), ctrl["n_samples"], seed=rng_seed
    )
    model = fit_control_model(samples, spec, psi_x, psi_xu, ctrl["gamma"], region=region)
    if args.schedule is not None:
        levels = _parse_floats(args.schedule)
        if len(levels) == 0:
            return _fail(EXIT_CONFIG, "config", "schedule must list at least one level")
        times = np.linspace(0.0, ctrl["horizon"], len(levels), endpoint=False)
        schedule = ControlSchedule(times=times, values=np.array(levels))
    else:
        schedule = ControlSchedule.constant(ctrl["u_level"])
    report = basin_crossing_experiment(
        spec,
        model,
        schedule,
        horizon=ctrl["horizon"],
        u_box=tuple(ctrl["u_box"]),
        x0=np.array([ctrl["x0"]]),
        seed=rng_seed,
        null_threshold=ctrl["null_threshold"],
        time_step=ctrl["time_step"],
    )
    out = _out_dir(args, config)
    series_path = os.path.join(out, "control_error_series.csv")
    rows = [
        f"{float(t)!r},{float(e)!r}"
        for t, e in zip(report.time_grid, report.indicator_error_series)
    ]
    atomic_write_text(series_path, _csv_with_hash("t,indicator_error", rows, chash))
    doc = {
        "schema_version": 1,
        "config_hash": chash,
        "fit_residual": model.residual,
        "error_series_csv": os.path.basename(series_path),
        **report.to_dict(),
    }
    report_path = os.path.join(out, "control_report.json")
    atomic_write_text(report_path, canonical_json(doc) + "\n")
    if args.json:
        print(canonical_json(doc))
    else:
        print(f"control report -> {report_path}")
        if report.crossing_time is not None:
            print(f"  crossing at t_c={report.crossing_time:.4f};"
                  f" certified rate bound {report.rate_bound:.6g}")
            print(f"  null-coordinate change {report.null_change:.6g}"
                  f" <= bound * t_c = {report.rate_bound * report.crossing_time:.6g}")
            print(f"  indicator prediction error at t_c: "
                  f"{report.indicator_error_at_crossing:.4f}")
        else:
            print("  no basin crossing within the horizon")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopcheck",
        description="Spectral analysis toolkit for benchmark dynamical systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="experiment config JSON path")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--json", action="store_true", help="machine summary to stdout")

    p_sim = sub.add_parser("simulate", help="integrate a trajectory and write CSV")
    common(p_sim)
    p_sim.add_argument("--system", required=True)
    p_sim.add_argument("--x0", required=True, help="comma-separated initial state")
    p_sim.add_argument("--t", type=float, required=True,
                       help="duration; negative integrates backward")
    p_sim.add_argument("--samples", type=int, default=201)

    p_fit = sub.add_parser("fit", help="fit configured models and write artifacts")
    common(p_fit)
    p_fit.add_argument("--fit", default=None, help="single fit name (default: all)")

    p_ver = sub.add_parser("verify", help="run the theorem check suite")
    common(p_ver)
    p_ver.add_argument("--only", default=None, help="run a single check id")

    p_grid = sub.add_parser("grid", help="evaluate an eigenfunction on a grid")
    common(p_grid)
    p_grid.add_argument("--model", required=True, help="model artifact JSON path")
    p_grid.add_argument("--pair", required=True, help="eigenpair index or 'invariant'")
    p_grid.add_argument("--region", required=True, help="lo,hi per axis, comma-separated")
    p_grid.add_argument("--resolution", required=True, help="points per axis")

    p_ctl = sub.add_parser("control", help="run the basin-crossing experiment")
    common(p_ctl)
    p_ctl.add_argument("--schedule", default=None,
                       help="comma-separated input levels over the horizon")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "fit": cmd_fit,
        "verify": cmd_verify,
        "grid": cmd_grid,
        "control": cmd_control,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except KoopcheckError as exc:
        return _fail(EXIT_RUNTIME, "runtime", str(exc))
    except BrokenPipeError:
        return EXIT_OK
    except OSError as exc:
        return _fail(EXIT_RUNTIME, "io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
