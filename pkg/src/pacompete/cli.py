"""Command-line front end.

Every run is driven by one JSON document (``--config``) plus a few common
flags; a flag wins over the config, which wins over the built-in default.
A ``manifest.json`` is written next to the outputs and can itself be passed
back as ``--config`` to regenerate them.

Example config::

    {
      "model": "multiplicative",
      "m": 3,
      "p": [0, "1/2", "1/2", 1],
      "multiplicative": {"phi": "7/6", "alpha": 0},
      "simulate": {"steps": 20000, "record_every": 100},
      "ensemble": {"runs": 500, "steps": 20000},
      "scan": {"vary": "phi", "start": 1.0, "stop": 1.6, "step": 0.01}
    }

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import datetime as dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    Additive,
    Multiplicative,
    Plain,
    TypeAssignment,
    UnresolvedRoot,
    analysis_report,
    as_number,
)
from .experiments import (
    SUITES,
    DominationRule,
    phase_scan,
    plot_competition,
    run_ensemble,
    simulate,
)
from .sim import RNG_ALGORITHM, InitialGraph, SimConfig

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3
MODELS = ("plain", "multiplicative", "additive")
DEFAULTS = {"seed": 0, "threads": 1, "format": "json", "out": "out"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    # a manifest carries the resolved config it was produced from
    if "manifest_version" in doc:
        doc = doc["config"]
    return doc


def resolve(args: argparse.Namespace, config: dict) -> dict:
    """Merge flags over config over defaults for the common settings."""
    out = copy.deepcopy(config)
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key, default)
    if not isinstance(out["seed"], int) or out["seed"] < 0 or out["seed"] >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not isinstance(out["threads"], int) or out["threads"] < 1:
        raise ConfigError("threads must be a positive integer")
    if out["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return out


def _num(value, name):
    try:
        return as_number(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: cannot parse {value!r} as a number") from None


def build_model(config: dict):
    """``(TypeAssignment, FitnessModel)`` from the ``model`` tag and its block."""
    kind = config.get("model")
    if kind not in MODELS:
        raise ConfigError(f"model must be one of {', '.join(MODELS)}")
    block = {**{k: v for k, v in config.items() if k in ("m", "p", "phi", "alpha", "alpha1", "alpha2")}, **config.get(kind, {})}
    try:
        m = int(block["m"])
        p = block.get("p", "linear")
        ta = TypeAssignment.linear(m) if p == "linear" else TypeAssignment(m, [_num(v, "p") for v in p])
        if kind == "plain":
            fm = Plain(_num(block.get("alpha", 0), "alpha"))
        elif kind == "multiplicative":
            fm = Multiplicative(_num(block["phi"], "phi"), _num(block.get("alpha", 0), "alpha"))
        else:
            fm = Additive(_num(block["alpha1"], "alpha1"), _num(block["alpha2"], "alpha2"))
        SimConfig(ta, fm)  # validates alpha > -m and the default start graph
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r} for the {kind} model") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return ta, fm


def _initial_graph(config: dict, m: int):
    graph_cfg = config.get("initial_graph")
    if graph_cfg is None:
        return None
    try:
        if "edges_list" in graph_cfg:
            return InitialGraph.from_edges(graph_cfg["types"], [tuple(e) for e in graph_cfg["edges_list"]])
        return InitialGraph.pair(m, graph_cfg.get("edges"))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"initial_graph: {exc}") from None


def _positive_int(block: dict, key: str, default=None, allow_zero=False):
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"missing {key}")
    if not isinstance(value, int) or value < (0 if allow_zero else 1):
        raise ConfigError(f"{key} must be a {'non-negative' if allow_zero else 'positive'} integer")
    return value


# ---------------------------------------------------------------------------
# outputs


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def config_digest(config: dict) -> str:
    canon = {k: v for k, v in config.items() if k not in ("out", "threads", "format")}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(out: Path, command: str, config: dict, outputs: list[Path], started: str) -> Path:
    manifest = {
        "manifest_version": 1,
        "tool": "pacompete",
        "version": __version__,
        "command": command,
        "config": config,
        "config_digest": config_digest(config),
        "master_seed": config["seed"],
        "rng": RNG_ALGORITHM,
        "started": started,
        "finished": _now(),
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    return _write_json(out / "manifest.json", manifest)


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


def _out_dir(config: dict) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(config: dict) -> int:
    started = _now()
    ta, fm = build_model(config)
    opts = config.get("analyze", {})
    try:
        report = analysis_report(ta, fm, grid_n=opts.get("grid_n", 4096))
    except UnresolvedRoot as exc:
        print(f"error: {exc}; retry with a larger analyze.grid_n", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(config)
    outputs = []
    if config["format"] == "json":
        outputs.append(_write_json(out / "report.json", report))
    else:
        path = out / "zeros.csv"
        lines = ["location,class,derivative"] + [f"{z['location']!r},{z['class']},{z['derivative']!r}" for z in report["zeros"]]
        path.write_text("\n".join(lines) + "\n")
        outputs.append(path)
    if opts.get("plot", True):
        label = ", ".join(f"{k}={v}" for k, v in report["params"].items() if k not in ("m", "p"))
        outputs.append(Path(plot_competition([(label or fm.kind, ta, fm)], out / "competition.svg", title=f"{fm.kind} m={ta.m}")))
    write_manifest(out, "analyze", config, outputs, started)
    print(json.dumps({"degenerate": report["degenerate"], "zeros": report["zeros"]}))
    return EXIT_OK


def _sim_config(config: dict, block: dict, steps: int) -> SimConfig:
    ta, fm = build_model(config)
    try:
        return SimConfig(
            ta, fm, _initial_graph(config, ta.m), seed=config["seed"], steps=steps,
            record_every=block.get("record_every"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(config: dict) -> int:
    started = _now()
    block = config.get("simulate", {})
    steps = _positive_int(block, "steps", 10_000, allow_zero=True)
    cfg = _sim_config(config, block, steps)
    traj = simulate(cfg, block.get("path", "auto"), check=block.get("check", True))
    out = _out_dir(config)
    if config["format"] == "csv":
        path = out / "trajectory.csv"
        traj.to_csv(path)
    else:
        rows = [dict(zip(("n", "q", "x", "y", "red_fraction"), r)) for r in traj.rows()]
        path = _write_json(out / "trajectory.json", {"model": traj.model, "final": traj.final, "meta": traj.meta, "rows": rows})
    write_manifest(out, "simulate", config, [path], started)
    print(json.dumps({"final": traj.final, "red_statistic": float(traj.red_statistic[-1])}))
    return EXIT_OK


def cmd_ensemble(config: dict) -> int:
    started = _now()
    block = config.get("ensemble", {})
    runs = _positive_int(block, "runs", 100)
    steps = _positive_int(block, "steps", 20_000)
    cfg = _sim_config(config, block, steps)
    try:
        rule = DominationRule(steps, block.get("early_step"), block.get("threshold", 0.5))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = run_ensemble(cfg, runs, rule, config["seed"], config["threads"], block.get("path", "auto"))
    out = _out_dir(config)
    if config["format"] == "json":
        doc = {"config_digest": config_digest(config), **res.to_dict(block.get("per_run_terminals", False))}
        path = _write_json(out / "ensemble.json", doc)
    else:
        path = out / "ensemble.csv"
        lines = ["run,outcome,terminal"] + [f"{i},{o.value},{t!r}" for i, (o, t) in enumerate(zip(res.outcomes, res.terminals.tolist()))]
        path.write_text("\n".join(lines) + "\n")
    write_manifest(out, "ensemble", config, [path], started)
    print(json.dumps({"counts": res.counts, "red_interval": res.interval("red")}))
    return EXIT_OK


def _scan_grid(block: dict):
    if "values" in block:
        values = [float(_num(v, "scan.values")) for v in block["values"]]
    else:
        try:
            start, stop, step = (float(_num(block[k], f"scan.{k}")) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError(f"scan needs values or start/stop/step (missing {exc.args[0]})") from None
        if step <= 0 or stop < start:
            raise ConfigError("scan needs step > 0 and stop >= start")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    if not values:
        raise ConfigError("scan grid is empty")
    return values


def cmd_scan(config: dict) -> int:
    started = _now()
    ta, fm = build_model(config)
    block = config.get("scan", {})
    vary = block.get("vary")
    if vary is None:
        raise ConfigError("scan.vary is required")
    grid = _scan_grid(block)
    try:
        res = phase_scan(ta, fm, vary, grid, refine=block.get("refine", True))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(config)
    if config["format"] == "csv":
        path = out / "bifurcation.csv"
        res.to_csv(path)
    else:
        rows = [dict(zip(("param", "root", "class", "derivative"), r)) for r in res.rows]
        transitions = [{**t, "before": list(t["before"]), "after": list(t["after"])} for t in res.transitions]
        path = _write_json(out / "scan.json", {"parameter": vary, "rows": rows, "transitions": transitions})
    write_manifest(out, "scan", config, [path], started)
    print(json.dumps({"transitions": [t["value"] for t in res.transitions]}))
    return EXIT_OK


def cmd_verify(config: dict) -> int:
    started = _now()
    names = config.get("verify", {}).get("suites") or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites: {', '.join(unknown)}")
    results = [SUITES[name]() for name in names]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
    out = _out_dir(config)
    doc = {"passed": [r.name for r in results if r.passed], "failed": [r.name for r in results if not r.passed],
           "suites": [r.to_dict() for r in results]}
    path = _write_json(out / "verify.json", doc)
    write_manifest(out, "verify", config, [path], started)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "scan": cmd_scan,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pacompete", description="Two-type preferential attachment: analysis and simulation.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads for ensembles")
    common.add_argument("--format", choices=("csv", "json"), help="main output format")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("--suite", action="append", choices=list(SUITES), help="run only this suite (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve(args, load_config(args.config))
        if getattr(args, "suite", None):
            config.setdefault("verify", {})["suites"] = args.suite
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
