"""Command-line front end: ``treepark {analytic,simulate,oracle,verify}``.

Settings come from an optional JSON config (``--config``) overridden by
flags. Data is written as CSV, the verification report as JSON.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 failed checks.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import verify
from .analytic import AlphaSolver
from .degree_dist import from_dict
from .dynamics import estimate_root_occupancy_curve
from .oracle import MAX_ORACLE_VERTICES, MasterEquationSystem
from .tree_gen import DEFAULT_MAX_VERTICES, GrowthCapError, read_edge_list

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

DEFAULT_SAMPLES = {"simulate": 10_000, "verify": 20_000}

DEFAULTS = {
    "times": ["inf"],
    "radius": 10,
    "n_samples": None,
    "master_seed": 0,
    "threads": 1,
    "method": "local",
    "max_vertices": DEFAULT_MAX_VERTICES,
    "output_path": None,
}

ANALYTIC_COLUMNS = ["t", "u", "alpha", "occupancy", "derivative"]
SIMULATE_COLUMNS = ["command", "distribution", "t", "analytic_value", "mc_mean", "mc_stderr",
                    "n_samples", "radius", "seed", "z_score"]
ORACLE_COLUMNS = ["vertex", "t", "occupancy_prob"]


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    return f"{x:.12g}"


def parse_time(x) -> float:
    if isinstance(x, str):
        x = x.strip().lower()
        if x in ("inf", "infinity", "+inf"):
            return math.inf
    try:
        t = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid time {x!r}") from None
    if math.isnan(t) or t < 0:
        raise ConfigError(f"times must be >= 0, got {x!r}")
    return t


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--dist", help='degree law as JSON, e.g. \'{"kind":"regular","D":3}\'')
    common.add_argument("--t", dest="times", help="comma-separated times; 'inf' allowed")
    common.add_argument("--radius", type=int)
    common.add_argument("--samples", dest="n_samples", type=int)
    common.add_argument("--seed", dest="master_seed", type=int)
    common.add_argument("--out", dest="output_path")
    common.add_argument("--threads", type=int)

    parser = argparse.ArgumentParser(prog="treepark", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="exact occupancy curve (CSV)")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo vs exact (CSV)")
    sim.add_argument("--method", choices=["local", "ball"])
    sim.add_argument("--max-vertices", dest="max_vertices", type=int)
    orc = sub.add_parser("oracle", parents=[common], help="exact per-vertex occupancy on a small tree (CSV)")
    orc.add_argument("--edges", dest="edges_path", help="edge-list file ('u v' per line)")
    orc.add_argument("edges_file", nargs="?", help="edge-list file (alternative to --edges)")
    ver = sub.add_parser("verify", parents=[common], help="run the check battery (JSON)")
    ver.add_argument("--checks", help=f"comma-separated subset of: {','.join(verify.CHECKS)}")
    ver.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                     help="override one check tolerance; repeatable")
    return parser


def load_config(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg["n_samples"] = DEFAULT_SAMPLES.get(args.command, 1)
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        aliases = {"distribution": "dist", "samples": "n_samples", "seed": "master_seed",
                   "out": "output_path", "t": "times"}
        for key, value in file_cfg.items():
            cfg[aliases.get(key, key)] = value
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        if key == "dist":
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid --dist JSON: {exc}") from None
        elif key == "times":
            value = [x for x in value.split(",") if x.strip()]
        elif key == "checks":
            value = [x.strip() for x in value.split(",") if x.strip()]
        elif key == "tolerance":
            if not value:
                continue
            tol = dict(cfg.get("tolerances") or {})
            for item in value:
                name, sep, num = item.partition("=")
                if not sep:
                    raise ConfigError(f"--tolerance expects NAME=VALUE, got {item!r}")
                try:
                    tol[name.strip()] = float(num)
                except ValueError:
                    raise ConfigError(f"invalid tolerance value in {item!r}") from None
            cfg["tolerances"] = tol
            continue
        cfg[key] = value
    return validate(cfg)


def validate(cfg: dict) -> dict:
    times = cfg.get("times")
    if not isinstance(times, list) or not times:
        raise ConfigError("times must be a non-empty list")
    cfg["times"] = [parse_time(t) for t in times]
    for key, lo in (("radius", 1), ("n_samples", 1), ("threads", 1), ("max_vertices", 1)):
        v = cfg.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < lo:
            raise ConfigError(f"{key} must be an integer >= {lo}, got {v!r}")
    if not isinstance(cfg.get("master_seed"), int) or cfg["master_seed"] < 0:
        raise ConfigError(f"master_seed must be a nonnegative integer, got {cfg.get('master_seed')!r}")
    if "dist" in cfg and cfg["dist"] is not None:
        try:
            cfg["dist"] = from_dict(cfg["dist"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def _require_dist(cfg):
    if cfg.get("dist") is None:
        raise ConfigError("a degree distribution is required (--dist or 'dist' in config)")
    return cfg["dist"]


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def cmd_analytic(cfg) -> tuple[str, int]:
    solver = AlphaSolver(_require_dist(cfg))
    return _csv(ANALYTIC_COLUMNS, solver.curve(cfg["times"])), EXIT_OK


def cmd_simulate(cfg) -> tuple[str, int]:
    dist = _require_dist(cfg)
    solver = AlphaSolver(dist)
    ests = estimate_root_occupancy_curve(
        dist, cfg["times"], cfg["radius"], cfg["n_samples"], cfg["master_seed"],
        method=cfg["method"], max_vertices=cfg["max_vertices"], threads=cfg["threads"])
    rows = []
    for t, e in zip(cfg["times"], ests):
        exact = solver.occupancy(t)
        rows.append({"command": "simulate", "distribution": dist.describe(), "t": t,
                     "analytic_value": exact, "mc_mean": e.mean, "mc_stderr": e.std_err,
                     "n_samples": e.n_samples, "radius": cfg["radius"], "seed": cfg["master_seed"],
                     "z_score": e.z_score(exact)})
    return _csv(SIMULATE_COLUMNS, rows), EXIT_OK


def cmd_oracle(cfg) -> tuple[str, int]:
    path = cfg.get("edges_path") or cfg.get("edges_file") or cfg.get("edges")
    if not path:
        raise ConfigError("oracle needs an edge-list file (--edges PATH)")
    try:
        tree, labels = read_edge_list(path)
    except OSError as exc:
        raise ConfigError(f"cannot read edge list: {exc}") from None
    if tree.n_vertices > MAX_ORACLE_VERTICES:
        raise ConfigError(f"oracle handles at most {MAX_ORACLE_VERTICES} vertices, "
                          f"edge list has {tree.n_vertices}")
    occ = MasterEquationSystem(tree).occupancy(cfg["times"])
    rows = []
    for order in sorted(range(tree.n_vertices), key=lambda i: labels[i]):
        for i, t in enumerate(cfg["times"]):
            rows.append({"vertex": int(labels[order]), "t": t, "occupancy_prob": float(occ[i, order])})
    return _csv(ORACLE_COLUMNS, rows), EXIT_OK


def cmd_verify(cfg) -> tuple[str, int]:
    checks = cfg.get("checks")
    if checks is not None and not checks:
        raise ConfigError("empty check list")
    n = cfg["n_samples"]
    try:
        results = verify.run_checks(checks, cfg.get("tolerances"), n_samples=n,
                                    seed=cfg["master_seed"], threads=cfg["threads"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    passed = all(r.passed for r in results)
    report = {"passed": passed, "n_samples": n, "seed": cfg["master_seed"],
              "checks": [r.to_dict() for r in results]}
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    return text, EXIT_OK if passed else EXIT_VERIFY


def _json_default(x):
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate, "oracle": cmd_oracle,
            "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        text, code = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"treepark: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        # malformed edge lists, non-tree input and other bad data
        print(f"treepark: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (GrowthCapError, RuntimeError, OverflowError) as exc:
        print(f"treepark: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if cfg.get("output_path"):
        with open(cfg["output_path"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
