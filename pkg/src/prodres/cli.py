"""Command-line experiment driver.

``prodres <experiment> --config run.toml [--out DIR] [--tol T] [--seed N] [--threads K]``

Exit status: 0 when every check passes, 1 on a tolerance breach (failed
checks are printed to stderr as JSON), 2 for a malformed configuration, in
which case no artifacts are written.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import json
import math
import os
from pathlib import Path
import platform
import re
import shutil
import sys
import tempfile
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, ProdresError
from .experiments import MODES, RunContext, run_experiment

__all__ = ["EXPERIMENTS", "ExperimentConfig", "load_config", "run", "main"]

EXPERIMENTS = ("kernel", "product", "asymptotics", "regions", "transition", "martin", "continuation")
_TOP_KEYS = {"experiment", "name", "mode", "seed", "tol", "output", "params", "thresholds"}
_NAME = re.compile(r"^[A-Za-z0-9_.-]+$")


class ExperimentConfig:
    """Validated experiment configuration."""

    def __init__(self, raw):
        errors = []
        for k in sorted(set(raw) - _TOP_KEYS):
            errors.append(f"{k}: unknown field")
        exp = raw.get("experiment")
        if exp not in EXPERIMENTS:
            errors.append(f"experiment: expected one of {list(EXPERIMENTS)}, got {exp!r}")
        name = raw.get("name")
        if not isinstance(name, str) or not _NAME.match(name):
            errors.append(f"name: expected a non-empty identifier of [A-Za-z0-9_.-], got {name!r}")
        mode = raw.get("mode")
        if not isinstance(mode, str):
            errors.append(f"mode: expected a string, got {mode!r}")
        elif exp in EXPERIMENTS and (exp, mode) not in MODES:
            known = sorted(m for e, m in MODES if e == exp)
            errors.append(f"mode: unknown mode {mode!r} for {exp}; expected one of {known}")
        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            errors.append(f"seed: expected a non-negative integer, got {seed!r}")
        tol = raw.get("tol", 1e-10)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not (tol > 0 and math.isfinite(tol)):
            errors.append(f"tol: expected a positive number, got {tol!r}")
        out = raw.get("output")
        if out is not None and not isinstance(out, str):
            errors.append(f"output: expected a path string, got {out!r}")
        for tab in ("params", "thresholds"):
            if not isinstance(raw.get(tab, {}), dict):
                errors.append(f"{tab}: expected a table")
        if not errors and (exp, mode) in MODES:
            _, dp, dt = MODES[(exp, mode)]
            for k in sorted(set(raw.get("params", {})) - set(dp)):
                errors.append(f"params.{k}: unknown parameter for {exp}/{mode}")
            for k, v in sorted(raw.get("thresholds", {}).items()):
                if k not in dt:
                    errors.append(f"thresholds.{k}: unknown threshold for {exp}/{mode}")
                elif isinstance(v, bool) or not isinstance(v, (int, float)):
                    errors.append(f"thresholds.{k}: expected a number, got {v!r}")
                elif k.startswith(("max_", "min_")) and not v > 0:
                    errors.append(f"thresholds.{k}: tolerances must be positive, got {v!r}")
        if errors:
            raise ConfigError("; ".join(errors))
        self.raw = raw
        self.experiment = exp
        self.name = name
        self.mode = mode
        self.seed = seed
        self.tol = float(tol)
        self.output = out
        self.params = dict(raw.get("params", {}))
        self.thresholds = dict(raw.get("thresholds", {}))


def load_config(path):
    """Parse and validate a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: invalid TOML in {path}: {exc}") from None
    return ExperimentConfig(raw)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, table):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])


def _versions():
    import numpy
    import scipy
    return {"prodres": __version__, "python": platform.python_version(),
            "numpy": numpy.__version__, "scipy": scipy.__version__}


def _publish(tmp, out):
    """Move finished artifacts from ``tmp`` into ``out``."""
    if not out.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
        os.replace(tmp, out)
        return
    for f in sorted(tmp.iterdir()):
        os.replace(f, out / f.name)
    tmp.rmdir()


def run(cfg, out, threads=1):
    """Run ``cfg``, write its artifacts to ``out`` and return ``(outcome, manifest)``.

    Artifacts are assembled in a temporary sibling directory and moved into
    place only after the experiment finished, so a failing run leaves
    nothing behind.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        ctx = RunContext(cfg.tol, cfg.seed, pool.map)
        outcome = run_experiment(cfg.experiment, cfg.mode, cfg.params, cfg.thresholds, ctx)
    elapsed = time.perf_counter() - t0
    manifest = {
        "name": cfg.name,
        "experiment": cfg.experiment,
        "mode": cfg.mode,
        "config": cfg.raw,
        "effective": {"seed": cfg.seed, "tol": cfg.tol},
        "versions": _versions(),
        "artifacts": sorted([f"{t.name}.csv" for t in outcome.tables] + ["manifest.json", "timings.json"]),
        "checks": [c.to_dict() for c in outcome.checks],
        "passed": bool(outcome.passed),
    }
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        for t in outcome.tables:
            _write_csv(tmp / f"{t.name}.csv", t)
        with open(tmp / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        # wall-clock data lives apart from the manifest so that stays byte-identical
        with open(tmp / "timings.json", "w", encoding="utf-8") as fh:
            json.dump({"elapsed_seconds": elapsed, "threads": int(threads)}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _publish(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return outcome, manifest


def _parser():
    ap = argparse.ArgumentParser(prog="prodres", description="Product-resolvent experiment driver.")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for e in EXPERIMENTS:
        p = sub.add_parser(e, help=f"run a {e} experiment")
        p.add_argument("--config", required=True, help="TOML experiment configuration")
        p.add_argument("--out", help="output directory (default: config 'output' or runs/<name>)")
        p.add_argument("--tol", type=float, help="quadrature tolerance (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for batch evaluation")
    return ap


def _usage_error(msg):
    print(json.dumps({"status": "config_error", "errors": msg.split("; ")}, indent=2), file=sys.stderr)
    return 2


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"experiment: config declares {cfg.experiment!r} but the "
                              f"{args.experiment!r} subcommand was used")
        if args.tol is not None:
            if not (args.tol > 0 and math.isfinite(args.tol)):
                raise ConfigError(f"--tol: expected a positive number, got {args.tol!r}")
            cfg.tol = args.tol
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed: expected a non-negative integer, got {args.seed!r}")
            cfg.seed = args.seed
        if args.threads < 1:
            raise ConfigError(f"--threads: expected a positive integer, got {args.threads!r}")
    except ConfigError as exc:
        return _usage_error(str(exc))
    out = args.out or cfg.output or os.path.join("runs", cfg.name)
    try:
        outcome, manifest = run(cfg, out, args.threads)
    except (ConfigError, ProdresError, TypeError, ValueError, KeyError, IndexError) as exc:
        # parameter values that validate structurally but not semantically
        return _usage_error(f"params: {type(exc).__name__}: {exc}")
    for c in manifest["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {cfg.name}:{c['name']} value={c['value']!r} "
              f"{c['op']} {c['threshold']!r}")
    if not outcome.passed:
        failed = [c for c in manifest["checks"] if not c["passed"]]
        print(json.dumps({"status": "breach", "name": cfg.name, "failed": failed}, indent=2), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
