"""Command-line front end: sample, explore, encode, curve, validate.

Every run writes a manifest next to its artifacts; artifacts themselves are
deterministic functions of (config, seed), so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .curve import build_curve, composed_processes, encode_components, verify_encoding
from .field import (
    Field,
    build_field,
    field_exploration,
    field_from_jumps,
    hitting_process,
    sample_clocks,
    solver_jump,
)
from .instances import (
    random_block_model,
    random_monotone_path,
    random_probe_direction,
    staircase_counterexample,
)
from .model import BlockModel, connected_components, graph_exploration, sample_graph, scaled_mass
from .paths import (
    generalized_inverse,
    identity,
    probe_times,
    smooth_compose,
    sup_distance,
)
from .stats import ExperimentConfig, calibrate, compare_component_laws, compare_encoding_laws

OUTPUT_ROOT_ENV = "BLOCKWALK_OUT"
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: BlockModel | None
    field_spec: dict | None
    rho: tuple[float, ...]
    seed: int

    def realize_field(self) -> Field:
        if self.field_spec is not None:
            return field_from_jumps(self.field_spec["columns"], self.field_spec["R"])
        return build_field(self.model, sample_clocks(self.model, self.seed))


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    _require_keys(raw, {"schema_version", "rho"}, {"model", "field", "seed"}, "config")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw['schema_version']}")
    if ("model" in raw) == ("field" in raw):
        raise ConfigError("config must contain exactly one of 'model' or 'field'")
    model = None
    field_spec = None
    if "model" in raw:
        _require_keys(raw["model"], {"m", "weights", "Q"}, set(), "config.model")
        spec = raw["model"]
        if len(spec["weights"]) != spec["m"]:
            raise ConfigError("config.model: m does not match the number of weight vectors")
        try:
            model = BlockModel(
                tuple(tuple(map(float, w)) for w in spec["weights"]),
                tuple(tuple(map(float, row)) for row in spec["Q"]),
            )
        except ValueError as exc:
            raise ConfigError(f"config.model: {exc}") from exc
    else:
        _require_keys(raw["field"], {"m", "R", "columns"}, set(), "config.field")
        spec = raw["field"]
        if len(spec["columns"]) != spec["m"] or len(spec["R"]) != spec["m"]:
            raise ConfigError("config.field: m does not match columns/R")
        for j, col in enumerate(spec["columns"]):
            for k, rec in enumerate(col):
                _require_keys(rec, {"t", "w"}, set(), f"config.field.columns[{j}][{k}]")
        field_spec = {
            "columns": [[(float(c["t"]), float(c["w"])) for c in col] for col in spec["columns"]],
            "R": [[float(x) for x in row] for row in spec["R"]],
        }
    rho = tuple(float(r) for r in raw["rho"])
    seed = int(raw.get("seed", 0))
    return RunConfig(model, field_spec, rho, seed)


def _require_keys(obj: dict, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)} (schema is closed)")


# -- output helpers ------------------------------------------------------------


def _out_dir(args, command: str) -> Path:
    if args.out:
        root = Path(args.out)
    else:
        root = Path(os.environ.get(OUTPUT_ROOT_ENV, "blockwalk-out")) / command
    root.mkdir(parents=True, exist_ok=True)
    return root


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, args, started: float) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": command,
            "config": str(args.config) if getattr(args, "config", None) else None,
            "seed": getattr(args, "seed", None),
            "out_dir": str(out),
            "artifact_version": __version__,
            "wall_clock_seconds": round(time.time() - started, 6),
        },
    )


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = RunConfig(cfg.model, cfg.field_spec, cfg.rho, args.seed)
    return cfg


# -- subcommands ---------------------------------------------------------------


def cmd_sample(args) -> int:
    started = time.time()
    cfg = _effective_config(args)
    if cfg.model is None:
        raise ConfigError("sample needs a model config, not a deterministic field")
    out = _out_dir(args, "sample")
    graph = sample_graph(cfg.model, cfg.seed)
    with (out / "graph.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v"])
        for e in sorted((sorted(e) for e in graph.edges)):
            (lu, iu), (lv, iv) = e
            writer.writerow([f"{lu}:{iu}", f"{lv}:{iv}"])
    comps = connected_components(graph)
    _write_json(
        out / "components.json",
        [
            {
                "vertices": [list(v) for v in c.vertices],
                "weight_by_type": list(c.weight_by_type),
                "scaled_mass": scaled_mass(c.weight_by_type, cfg.rho, cfg.model.Q),
            }
            for c in comps
        ],
    )
    _write_manifest(out, "sample", args, started)
    print(f"sample: {len(graph.edges)} edges, {len(comps)} components -> {out}")
    return 0


def cmd_explore(args) -> int:
    started = time.time()
    cfg = _effective_config(args)
    out = _out_dir(args, "explore")
    if args.mode == "graph":
        if cfg.model is None:
            raise ConfigError("graph exploration needs a model config")
        graph = sample_graph(cfg.model, cfg.seed)
        trace = graph_exploration(graph, cfg.rho, cfg.seed + 1)
    else:
        fld = cfg.realize_field()
        _write_json(out / "field.json", fld.columns_json_obj())
        trace = field_exploration(fld, cfg.rho)
    _write_json(out / "trace.json", trace.to_json_obj())
    _write_manifest(out, "explore", args, started)
    print(f"explore[{args.mode}]: {len(trace.steps)} steps, {trace.zeta_final} components -> {out}")
    return 0


def cmd_encode(args) -> int:
    started = time.time()
    cfg = _effective_config(args)
    out = _out_dir(args, "encode")
    fld = cfg.realize_field()
    process = hitting_process(fld, cfg.rho)
    checks = []
    ok = True
    for level, delta in zip(process.levels, process.deltas):
        solver_delta = solver_jump(fld, cfg.rho, process.levels, level)
        gap = max(abs(a - b) for a, b in zip(solver_delta, delta))
        checks.append({"y": level, "solver_gap": gap, "pass": gap <= 1e-12})
        ok = ok and gap <= 1e-12
    obj = process.to_json_obj()
    obj["solver_check"] = {"pass": ok, "jumps": checks}
    _write_json(out / "encoding.json", obj)
    _write_manifest(out, "encode", args, started)
    print(f"encode: {len(process.levels)} jumps, solver check {'pass' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_curve(args) -> int:
    started = time.time()
    cfg = _effective_config(args)
    out = _out_dir(args, "curve")
    fld = cfg.realize_field()
    bundle = build_curve(fld, cfg.rho)
    processes = composed_processes(fld, bundle)
    report = verify_encoding(fld, bundle)
    identity_gap = _curve_identity_gap(fld, bundle)
    report["checks"].append(
        {"name": "curve passes through hitting times", "pass": identity_gap <= 1e-9, "gap": identity_gap}
    )
    report["pass"] = report["pass"] and identity_gap <= 1e-9

    grid = _curve_grid(bundle, processes)
    with (out / "curve.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s"] + [f"curve_{i}" for i in range(fld.m)] + ["process_0"])
        for s in grid:
            writer.writerow(
                [repr(s)]
                + [repr(g.eval(s)) for g in bundle.curve]
                + [repr(processes[0].eval(s))]
            )
    _write_json(
        out / "excursions.json",
        [e.to_json_obj() for e in encode_components(fld, bundle)],
    )
    _write_json(out / "pathwise_report.json", report)
    _write_manifest(out, "curve", args, started)
    print(f"curve: pathwise report {'pass' if report['pass'] else 'FAIL'} -> {out}")
    return 0 if report["pass"] else 1


def _curve_grid(bundle, processes) -> list[float]:
    return probe_times(*bundle.curve, *processes)


def _curve_identity_gap(fld, bundle) -> float:
    process = hitting_process(fld, bundle.rho)
    ys = {0.0}
    for level in process.levels:
        ys.update((level, level + 1e-6, max(level - 1e-6, 0.0)))
    ys.add(max(process.levels, default=0.0) + 1.0)
    worst = 0.0
    for y in sorted(ys):
        t = process.evaluate(y)
        s = sum(t)
        point = bundle.curve_point(s)
        worst = max(worst, max(abs(a - b) for a, b in zip(point, t)))
    return worst


def cmd_validate(args) -> int:
    started = time.time()
    out = _out_dir(args, "validate")
    suite = {
        "functions": _validate_functions,
        "pathwise": _validate_pathwise,
        "distributional": _validate_distributional,
    }[args.suite]
    checks = suite(args)
    experiments = None
    if checks and isinstance(checks[-1], dict) and checks[-1].get("_experiments"):
        experiments = checks.pop()["_experiments"]
    ok = all(c["pass"] for c in checks)
    for c in checks:
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}{_detail(c)}")
    payload = {"suite": args.suite, "pass": ok, "checks": checks}
    if experiments is not None:
        payload["experiments"] = experiments
    _write_json(out / f"validate_{args.suite}.json", payload)
    _write_manifest(out, "validate", args, started)
    print(f"validate[{args.suite}]: {'pass' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def _detail(check: dict) -> str:
    extras = {k: v for k, v in check.items() if k not in ("name", "pass")}
    return f"  {extras}" if extras else ""


def _validate_functions(args) -> list[dict]:
    rng = np.random.default_rng(args.seed or 0)
    n = max(50, args.reps // 1000)
    worst_id = 0.0
    worst_double = True
    for _ in range(n):
        g = random_monotone_path(rng)
        gi = generalized_inverse(g)
        worst_id = max(worst_id, sup_distance(smooth_compose(g, gi), identity()))
        worst_id = max(worst_id, sup_distance(smooth_compose(gi, g), identity()))
        worst_double = worst_double and generalized_inverse(gi) == g
    ge = staircase_counterexample()
    gei = generalized_inverse(ge)
    ordinary = ge.eval(gei.eval(1.0))
    smooth = smooth_compose(ge, gei).eval(1.0)
    return [
        {"name": f"smooth composition with inverse is the identity ({n} draws)", "pass": worst_id <= 1e-9, "gap": worst_id},
        {"name": "double inverse returns the same representation", "pass": worst_double},
        {"name": "staircase: ordinary composition overshoots (= 2)", "pass": abs(ordinary - 2.0) <= 1e-12},
        {"name": "staircase: smooth composition restores (= 1)", "pass": abs(smooth - 1.0) <= 1e-12},
    ]


def _validate_pathwise(args) -> list[dict]:
    rng = np.random.default_rng(args.seed or 0)
    n = max(20, args.reps // 5000)
    worst = 0.0
    count = 0
    for _ in range(n):
        model = random_block_model(rng)
        rho = random_probe_direction(rng, model)
        fld = build_field(model, sample_clocks(model, rng))
        bundle = build_curve(fld, rho)
        report = verify_encoding(fld, bundle)
        if not report["pass"]:
            return [{"name": "pathwise encoding equivalence", "pass": False, "instance": count}]
        worst = max(worst, _curve_identity_gap(fld, bundle))
        count += 1
    return [
        {"name": f"pathwise encoding equivalence ({count} instances)", "pass": True},
        {"name": "curve passes through hitting times", "pass": worst <= 1e-9, "gap": worst},
    ]


def _validate_distributional(args) -> list[dict]:
    model = BlockModel(((1.0,), (1.0,)), ((1.0, 0.5), (0.5, 1.0)))
    rho = (1.0, 1.0)
    cfg = ExperimentConfig(model, rho, n_reps=args.reps, seed=args.seed or 0)
    comp = compare_component_laws(cfg)
    enc = compare_encoding_laws(cfg)
    checks = [
        {"name": "graph components vs exact oracle", "pass": not comp["graph_vs_exact"].reject(cfg.alpha), "p": comp["graph_vs_exact"].p_value},
        {"name": "field exploration vs exact oracle", "pass": not comp["field_vs_exact"].reject(cfg.alpha), "p": comp["field_vs_exact"].p_value},
        {"name": "first jump law vs size-biased components", "pass": enc["pass"], "p": enc["sequence_two_sample"].p_value},
    ]
    experiments = {
        "config": {
            "model": model.to_json_obj(),
            "rho": list(rho),
            "n_reps": cfg.n_reps,
            "seed": cfg.seed,
            "alpha": cfg.alpha,
        },
        "counts": {repr(k): v for k, v in sorted(comp["counts"]["graph"].items(), key=repr)},
        "expected": {repr(k): p for k, p in sorted(comp["expected"].items(), key=repr)},
        "tests": {
            "graph_vs_exact": comp["graph_vs_exact"].to_json_obj(),
            "field_vs_exact": comp["field_vs_exact"].to_json_obj(),
            "graph_vs_field": comp["graph_vs_field"].to_json_obj(),
            "field_first_vs_exact": enc["field_first_vs_exact"].to_json_obj(),
            "graph_first_vs_exact": enc["graph_first_vs_exact"].to_json_obj(),
            "sequence_two_sample": enc["sequence_two_sample"].to_json_obj(),
            "first_gap_ks": enc["first_gap_ks"].to_json_obj(),
        },
        "pass": comp["pass"] and enc["pass"],
    }
    if args.calibration_seeds:
        from functools import partial

        from .stats import component_law_p_value

        p_of = partial(component_law_p_value, model, rho, 2000)
        cal = calibrate(p_of, args.calibration_seeds, cfg.alpha, jobs=args.jobs)
        checks.append(
            {
                "name": f"calibration over {cal.n_seeds} seeds",
                "pass": cal.rejections <= max(2, int(3 * cal.alpha * cal.n_seeds)),
                "rejections": cal.rejections,
            }
        )
        experiments["calibration"] = {
            "n_seeds": cal.n_seeds,
            "rejections": cal.rejections,
            "alpha": cal.alpha,
        }
    checks.append({"_experiments": experiments, "pass": True, "name": ""})
    return checks


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockwalk",
        description="Sample block-model graphs, explore them, and verify their hitting-time encodings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("sample", help="sample a graph and its components")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("explore", help="run an exploration and dump its trace")
    common(p)
    p.add_argument("--mode", choices=("field", "graph"), default="field")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("encode", help="hitting-process jumps with solver cross-check")
    common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("curve", help="curve, composed process and excursion encoding")
    common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("validate", help="run a verification suite")
    p.add_argument("suite", choices=("functions", "pathwise", "distributional"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--reps", type=int, default=100_000, help="Monte Carlo replications")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for replications")
    p.add_argument("--calibration-seeds", type=int, default=0, help="re-run count for calibration")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
