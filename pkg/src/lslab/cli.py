"""Command-line entry point.

Every subcommand takes its settings from built-in defaults, then an optional
TOML file (``--config``), then explicit flags, in that order of precedence.
Outputs go to ``--output-dir``, else ``$LSLAB_OUTPUT_DIR``, else the
``output_dir`` setting, else ``./lslab-out``.  Each run also writes
``manifest.json`` with the resolved settings and a sha256 digest per output.

Exit codes: 0 success, 2 invalid configuration, 3 a run aborted on its cell
budget, 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import lslab
from lslab import bounds, geometry, harness, moments
from lslab.errors import BudgetExceededError, ConfigError, PreconditionError
from lslab.field import DISTRIBUTIONS, FieldSpec
from lslab.harness import ExperimentConfig, format_float
from lslab.lattice import count_table

ENV_OUTPUT_DIR = "LSLAB_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_USAGE = 0, 2, 3, 64

# aliases accepted by ``simulate --kind``
KIND_ALIASES = {"lsl": "lsl_full", "subsequence": "lsl_subsequence", "diagonal": "lsl_diagonal"}

DEFAULTS = {
    "lattice": {"d": 2, "j_only": None, "j_min": 1, "j_max": 100},
    "geometry": {"alpha": 0.5, "beta": 1.0, "i_min": 3, "i_max": 1000},
    "bounds": {
        "sigma": 1.0,
        "delta": 0.1,
        "epsilon": 1.0,
        "gamma": 0.1,
        "alpha": 0.5,
        "beta": 1.0,
        "d": 2,
        "size": 10**6,
        "form": "displayed",
    },
    "moments": {"distribution": "normal", "param": None, "alpha": 0.5, "kappa": 0.0, "d": 2, "j_max": 10_000},
    "simulate": {},
    "delta": {
        "mode": "lsl",
        "transform": "exp",
        "mu": 0.0,
        "coeffs": [],
        "d": 1,
        "alpha": 0.5,
        "budget": 10**6,
        "replications": 1,
        "seed": 0,
        "distribution": "normal",
        "param": None,
    },
}
COMMON = {"threads": 1, "output_dir": None}


# ---------------------------------------------------------------- parser


def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="TOML file with settings; flags override it")
    p.add_argument("--output-dir", dest="output_dir", help=f"output directory (env {ENV_OUTPUT_DIR})")
    p.add_argument("--threads", type=int, help="worker threads for replications")
    return p


def _experiment_flags(p: argparse.ArgumentParser, skip=()) -> None:
    """One flag per ExperimentConfig field, typed after its default."""
    list_types = {"budgets": int, "cells": int, "coeffs": float}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in skip or f.name in ("threads", "output_dir"):
            continue
        flag = "--" + f.name.replace("_", "-")
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if f.name in list_types:
            p.add_argument(flag, dest=f.name, type=list_types[f.name], nargs="+")
        elif isinstance(default, bool):
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction)
        elif isinstance(default, int):
            p.add_argument(flag, dest=f.name, type=int)
        elif isinstance(default, str):
            p.add_argument(flag, dest=f.name)
        else:  # floats, and the optional sigma / param
            p.add_argument(flag, dest=f.name, type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lslab", description="Window-sum experiments on i.i.d. lattice fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {lslab.__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(DEFAULTS) + "}")
    common = _common_parent()

    p = sub.add_parser("lattice", parents=[common], argument_default=argparse.SUPPRESS, help="equisized counts d(j) and M(j) as CSV")
    p.add_argument("--d", type=int)
    p.add_argument("--j", dest="j_only", type=int, help="a single j (overrides the range)")
    p.add_argument("--j-min", dest="j_min", type=int)
    p.add_argument("--j-max", dest="j_max", type=int)

    p = sub.add_parser("geometry", parents=[common], argument_default=argparse.SUPPRESS, help="lambda-term gaps and the two window inequalities")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, help="exponent for the disjointness set (1 selects A)")
    p.add_argument("--i-min", dest="i_min", type=int)
    p.add_argument("--i-max", dest="i_max", type=int)

    p = sub.add_parser("bounds", parents=[common], argument_default=argparse.SUPPRESS, help="truncation levels, exponents and series verdicts")
    for name in ("sigma", "delta", "epsilon", "gamma", "alpha", "beta"):
        p.add_argument("--" + name, type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--size", type=int, help="|n| at which the levels are evaluated")
    p.add_argument("--form", choices=bounds.FORMS)

    p = sub.add_parser("moments", parents=[common], argument_default=argparse.SUPPRESS, help="tail series against the moment condition")
    p.add_argument("--distribution", choices=DISTRIBUTIONS)
    p.add_argument("--param", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--j-max", dest="j_max", type=int)

    p = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="run a Monte Carlo experiment")
    _experiment_flags(p)

    p = sub.add_parser("delta", parents=[common], argument_default=argparse.SUPPRESS, help="delta-method transform of a normalized statistic")
    _experiment_flags(p, skip=("kind",))
    return parser


# ---------------------------------------------------------------- settings


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def resolve_settings(command: str, ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags."""
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    settings = {**COMMON, **DEFAULTS[command]}
    if getattr(ns, "config", None):
        data = _load_config(ns.config)
        # a [command] table takes the place of top-level keys when present
        data = data.get(command, data) if isinstance(data.get(command), dict) else data
        if command not in ("simulate", "delta"):
            unknown = set(data) - set(settings)
            if unknown:
                raise ConfigError(f"unknown {command} settings: {sorted(unknown)}")
        settings.update(data)
    settings.update(flags)
    return settings


def _output_dir(settings: dict) -> Path:
    explicit = settings.get("_flag_output_dir")
    env = os.environ.get(ENV_OUTPUT_DIR)
    return Path(explicit or env or settings.get("output_dir") or "lslab-out")


def _experiment_config(settings: dict, kind: str | None = None) -> ExperimentConfig:
    data = {k: v for k, v in settings.items() if not k.startswith("_")}
    if kind is not None:
        data["kind"] = kind
    data["kind"] = KIND_ALIASES.get(data.get("kind", "lsl_full"), data.get("kind", "lsl_full"))
    data.pop("output_dir", None)
    try:
        return ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands


def _write_lines(path: Path, lines) -> Path:
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def cmd_lattice(s: dict, out: Path) -> list[Path]:
    d = int(s["d"])
    lo, hi = (s["j_only"], s["j_only"]) if s.get("j_only") else (int(s["j_min"]), int(s["j_max"]))
    if not 1 <= lo <= hi:
        raise ConfigError("need 1 <= j_min <= j_max")
    if d < 1:
        raise ConfigError("d must be >= 1")
    table = count_table(d, hi)
    fact = math.factorial(d - 1)
    rows = ["j,dj,Mj,ratio"]
    for j in range(lo, hi + 1):
        m = table.cumulative(j)
        denom = j * math.log(j) ** (d - 1) / fact
        ratio = m / denom if denom > 0 else math.inf
        rows.append(f"{j},{table.equisized(j)},{m},{format_float(ratio)}")
    return [_write_lines(out / "lattice.csv", rows)]


def cmd_geometry(s: dict, out: Path) -> list[Path]:
    a, beta = float(s["alpha"]), float(s["beta"])
    lo, hi = int(s["i_min"]), int(s["i_max"])
    if not 3 <= lo <= hi:
        raise ConfigError("need 3 <= i_min <= i_max")
    try:
        lam = geometry.SubsequenceSpec("lambda", a)
        disj = geometry.SubsequenceSpec("a" if beta == 1 else "a_star", a, beta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    stats = geometry.gap_stats(lam, (lo, hi))
    t = geometry.terms_real(lam, stats.i)
    overlap = t + t**a > t + stats.gap
    u, u_next = geometry.terms_real(disj, stats.i), geometry.terms_real(disj, stats.i + 1)
    disjoint = u + u**a < u_next
    rows = ["i,term,gap,predicted_gap,ratio,overlap_ok,disjoint_ok"]
    for i, ti, g, pg, r, ok1, ok2 in zip(
        stats.i.tolist(), t.tolist(), stats.gap.tolist(), stats.predicted_gap.tolist(),
        stats.ratio.tolist(), overlap.tolist(), disjoint.tolist(),
    ):
        rows.append(
            f"{i},{format_float(ti)},{format_float(g)},{format_float(pg)},{format_float(r)},"
            f"{str(ok1).lower()},{str(ok2).lower()}"
        )
    return [_write_lines(out / "geometry.csv", rows)]


def bounds_table(s: dict) -> list[tuple[str, str]]:
    try:
        params = bounds.BoundParams(s["sigma"], s["delta"], s["epsilon"], s["gamma"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    a, beta, size, form = float(s["alpha"]), float(s["beta"]), int(s["size"]), s["form"]
    if not 0 < a < 1 or beta < 1 or size < 2:
        raise ConfigError("need 0 < alpha < 1, beta >= 1 and size >= 2")
    other = "alternative" if form == "displayed" else "displayed"
    field = FieldSpec.normal(params.sigma)
    vt = bounds.variance_threshold(field, params, a, form)
    up, low = bounds.upper_exponent(params, beta), bounds.lower_exponent(params, beta)
    rows = [
        ("d", str(int(s["d"]))),
        ("|n|", str(size)),
        (f"b_n ({form})", format_float(bounds.truncation_level(params, size, a, form))),
        (f"b_n ({other})", format_float(bounds.truncation_level(params, size, a, other))),
        ("delta sqrt(|n|^a log|n|)", format_float(bounds.truncation_ceiling(params, size, a))),
        ("ordering threshold", str(bounds.ordering_threshold(params, a, form))),
        ("variance threshold (normal)", "none" if vt is None else format_float(vt)),
        ("upper exponent", format_float(up)),
        ("lower exponent", format_float(low)),
    ]
    kinds = ("lambda", "a") + (("lambda_star", "a_star") if beta != 1 else ())
    for kind in kinds:
        for side, e in (("upper", up), ("lower", low)):
            rows.append((f"{side} series over {kind}", bounds.series_verdict(e, kind, a, beta)))
    rows.append(("critical epsilon (upper)", format_float(bounds.critical_epsilon(params, a, beta, "upper"))))
    rows.append(("critical epsilon (lower)", format_float(bounds.critical_epsilon(params, a, beta, "lower"))))
    return rows


def cmd_bounds(s: dict, out: Path) -> list[Path]:
    rows = bounds_table(s)
    width = max(len(k) for k, _ in rows)
    lines = [f"{k:<{width}}  {v}" for k, v in rows]
    print("\n".join(lines))
    return [_write_lines(out / "bounds.txt", lines)]


def cmd_moments(s: dict, out: Path) -> list[Path]:
    try:
        field = FieldSpec(s["distribution"], s.get("param"))
        spec = moments.TailSeriesSpec(int(s["d"]), float(s["alpha"]), float(s["kappa"]), field, int(s["j_max"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = moments.tail_series(spec)
    rows = ["j,dj,term,partial_sum"]
    for j, dj, t, ps in zip(res.j.tolist(), res.dj.tolist(), res.terms.tolist(), res.partial_sums.tolist()):
        rows.append(f"{j},{dj},{format_float(t)},{format_float(ps)}")
    print(f"verdict: {res.verdict}  growth: {format_float(res.growth)}")
    return [_write_lines(out / "moments.csv", rows)]


def _run_experiment(cfg: ExperimentConfig, out: Path) -> list[Path]:
    result = harness.run(cfg)
    tm = result.terminal_max()
    print(f"{cfg.kind}: {len(tm)} replication(s), median terminal max {format_float(float(np.median(tm)))}")
    return harness.write_outputs(result, out)


def _record(s: dict, cfg: ExperimentConfig) -> None:
    # the manifest records every resolved field; the output directory stays as resolved
    s.update({k: v for k, v in cfg.to_dict().items() if k != "output_dir"})


def cmd_simulate(s: dict, out: Path) -> list[Path]:
    cfg = _experiment_config(s)
    _record(s, cfg)
    return _run_experiment(cfg, out)


def cmd_delta(s: dict, out: Path) -> list[Path]:
    cfg = _experiment_config(s, kind="delta")
    _record(s, cfg)
    return _run_experiment(cfg, out)


COMMANDS = {
    "lattice": cmd_lattice,
    "geometry": cmd_geometry,
    "bounds": cmd_bounds,
    "moments": cmd_moments,
    "simulate": cmd_simulate,
    "delta": cmd_delta,
}


# ---------------------------------------------------------------- manifest


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, settings: dict, outputs, started: str) -> Path:
    manifest = {
        "command": command,
        "config": {k: v for k, v in settings.items() if not k.startswith("_")},
        "version": lslab.__version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {p.name: sha256(p) for p in outputs},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- main


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = argv[0] if argv else None
    if first not in COMMANDS and first not in ("-h", "--help", "--version"):
        parser.print_usage(sys.stderr)
        print(f"lslab: unknown or missing subcommand {first!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    started = datetime.now(timezone.utc).isoformat()
    try:
        flag_dir = getattr(ns, "output_dir", None)
        settings = resolve_settings(ns.command, ns)
        settings["_flag_output_dir"] = flag_dir
        out = _output_dir(settings)
        settings["output_dir"] = str(out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[ns.command](settings, out)
    except ConfigError as exc:
        print(f"lslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"lslab: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"lslab: run aborted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    write_manifest(out, ns.command, settings, outputs, started)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
