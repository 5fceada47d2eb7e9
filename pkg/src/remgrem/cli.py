"""Command-line front end.

Subcommands ``pressure``, ``bound``, ``cascade``, ``verify``, ``sumrule`` and
``concentration``. Settings come from a flat ``key = value`` config file
(values are JSON literals, bare strings allowed) and are overridden by flags.

Exit codes: 0 success, 1 a check failed or a non-finite number was produced,
2 bad configuration, 3 capacity exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__, bounds, verify
from .exact import mean_stderr, replica_observables
from .model import CapacityError, GremParams, ParameterError
from .rng import default_threads

CSV_SCHEMA = 1
COMMANDS = ("pressure", "bound", "cascade", "verify", "sumrule", "concentration")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    a: list[float] = field(default_factory=lambda: [1.0])
    kappa: list[float] = field(default_factory=lambda: [1.0])
    n: int | None = None
    N: int | None = 16
    N_list: list[int] | None = None
    beta_min: float = 0.0
    beta_max: float = 2 * bounds.BETA_C
    beta_points: int = 33
    replicas: int = 200
    seed: int = 0
    threads: int | None = None
    out: str | None = None
    format: str | None = None  # csv for tables, json for check reports
    only: list[str] | None = None
    # check-specific settings
    check_betas: list[float] | None = None
    t: list[float] = field(default_factory=lambda: [0.2, 0.5])
    concentration_replicas: int = 2000
    m: list[float] = field(default_factory=lambda: [0.3, 0.5, 0.8])
    trials: int = 10_000
    K: int = 1024

    def validate(self) -> None:
        if self.n is not None and self.n != len(self.a):
            raise ConfigError(f"n={self.n} but a has {len(self.a)} entries")
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.beta_points < 1:
            raise ConfigError(f"beta_points must be >= 1, got {self.beta_points}")
        if self.beta_points > 1 and not self.beta_max > self.beta_min:
            raise ConfigError("beta grid must be strictly increasing (beta_max > beta_min)")
        if self.beta_min < 0:
            raise ConfigError(f"beta_min must be >= 0, got {self.beta_min}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        try:
            for N in self.sizes():
                GremParams(tuple(self.a), tuple(self.kappa), N)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def sizes(self) -> list[int]:
        if self.N_list:
            return sorted(int(n) for n in self.N_list)
        if self.N is None:
            raise ConfigError("need N or N_list")
        return [int(self.N)]

    def params(self, N: int) -> GremParams:
        return GremParams(tuple(self.a), tuple(self.kappa), N)

    def betas(self) -> np.ndarray:
        if self.beta_points == 1:
            return np.array([self.beta_min])
        return np.linspace(self.beta_min, self.beta_max, self.beta_points)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip().strip('"')


def load_config(path: str | Path) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text()
        parser.read_string("[config]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {k: _parse_value(v) for k, v in parser["config"].items()}


def build_config(values: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for name in ("a", "kappa", "m", "t", "N_list", "check_betas", "only"):
        v = getattr(cfg, name)
        if v is not None and not isinstance(v, list):
            setattr(cfg, name, [v])
    try:
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="unsigned 64-bit base seed")
    common.add_argument("--threads", type=int, help="worker threads (default: $REMGREM_THREADS or 1)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--only", type=_names, metavar="NAMES", help="comma-separated check names")
    common.add_argument("--a", type=_floats, metavar="A1,A2,..", help="level variances")
    common.add_argument("--kappa", type=_floats, metavar="K1,K2,..", help="level proportions")
    common.add_argument("--N", type=int, help="system size")
    common.add_argument("--N-list", dest="N_list", type=_ints, metavar="N1,N2,..")
    common.add_argument("--beta-min", dest="beta_min", type=float)
    common.add_argument("--beta-max", dest="beta_max", type=float)
    common.add_argument("--beta-points", dest="beta_points", type=int)
    common.add_argument("--replicas", "-R", type=int)
    common.add_argument("--check-betas", dest="check_betas", type=_floats, metavar="B1,B2,..")
    common.add_argument("--t", type=_floats, metavar="T1,T2,..", help="deviation levels for concentration")
    common.add_argument("--concentration-replicas", dest="concentration_replicas", type=int)
    common.add_argument("--m", type=_floats, metavar="M1,M2,..", help="m values for the cascade test")
    common.add_argument("--trials", type=int)
    common.add_argument("--K", type=int, help="point-process truncation for the cascade test")

    parser = argparse.ArgumentParser(prog="remgrem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"remgrem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "pressure": "quenched pressure, bound and overlap on a beta grid",
        "bound": "optimal variational point, bound and critical temperatures",
        "cascade": "KS test of the point-process invariance property",
        "verify": "run the verification suite",
        "sumrule": "integrated overlap vs direct pressure",
        "concentration": "deviation frequency vs the Gaussian concentration bound",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if "N_list" in values and "N" not in values:
        values["N"] = None
    return build_config(values)


def _check_finite(row: dict) -> None:
    for k, v in row.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise FloatingPointError(f"non-finite value in column {k!r}: {v}")


def pressure_rows(cfg: ExperimentConfig) -> Iterable[dict]:
    betas = cfg.betas()
    for N in cfg.sizes():
        p = cfg.params(N)
        press, ov = replica_observables(p, betas, cfg.replicas, cfg.seed, cfg.threads)
        for j, b in enumerate(betas):
            pm, pse = mean_stderr(press[:, j])
            om, ose = mean_stderr(ov[:, j])
            yield {
                "beta": float(b),
                "pressure_mean": pm,
                "pressure_stderr": pse,
                "q_bound": _bound_value(float(b), p),
                "overlap_mean": om,
                "overlap_stderr": ose,
                "N": N,
                "R": cfg.replicas,
                "seed": cfg.seed,
            }


def _bound_value(beta: float, p: GremParams) -> float:
    if p.n == 1:
        return bounds.q_rem(beta)
    if p.nondegenerate:
        return bounds.q_grem(beta, p)
    return bounds.numeric_optimize(beta, p)[1]


def bound_rows(cfg: ExperimentConfig) -> Iterable[dict]:
    p = cfg.params(cfg.sizes()[0])
    temps = bounds.critical_temperatures(p)
    if not p.nondegenerate:
        print("warning: kappa/a not strictly increasing; bound from numeric search, no decomposition", file=sys.stderr)
    for b in cfg.betas():
        b = float(b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", bounds.DegenerateParamsWarning)
            point, value = bounds.optimize(b, p)
        row = {"beta": b}
        row.update({f"m_{i}": mi for i, mi in enumerate(point.m, start=1)})
        row["bound"] = value
        if p.nondegenerate:
            row["decomposition"] = bounds.grem_decomposition(b, p)
        row["beta_c"] = temps.beta_c
        row.update({f"beta_star_{i}": s for i, s in enumerate(temps.beta_star, start=1)})
        yield row


def _report_row(r: verify.CheckReport) -> dict:
    return r.to_dict()


def cascade_reports(cfg: ExperimentConfig) -> list[verify.CheckReport]:
    return verify.cascade_checks(cfg.m, cfg.trials, cfg.K, cfg.seed)


def sumrule_reports(cfg: ExperimentConfig) -> list[verify.CheckReport]:
    betas = cfg.check_betas or [0.5, 1.0, 1.5]
    return [
        verify.sum_rule_check(b, N, cfg.replicas, max(cfg.beta_points, 16) | 1, cfg.seed, cfg.threads)
        for N in cfg.sizes()
        for b in betas
    ]


def concentration_reports(cfg: ExperimentConfig) -> list[verify.CheckReport]:
    betas = cfg.check_betas or [0.5, 1.0, 2.0]
    return [
        verify.concentration_check(N, b, t, cfg.concentration_replicas, cfg.seed, cfg.threads)
        for N in cfg.sizes()
        for b in betas
        for t in cfg.t
    ]


def verify_reports(cfg: ExperimentConfig) -> list[verify.CheckReport]:
    return verify.run_suite(cfg.only, cfg.seed, cfg.threads, cfg.sizes()[0], cfg.replicas)


def write_rows(rows: list[dict], fmt: str, stream, command: str, seed: int) -> None:
    for row in rows:
        _check_finite(row)
    if fmt == "json":
        for row in rows:
            stream.write(json.dumps(row) + "\n")
        return
    stream.write(f"# remgrem {__version__} schema={CSV_SCHEMA} command={command} seed={seed}\n")
    if not rows:
        return
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in row.items()})


def run(cfg: ExperimentConfig, command: str) -> tuple[list[dict], int]:
    if command == "pressure":
        return list(pressure_rows(cfg)), 0
    if command == "bound":
        return list(bound_rows(cfg)), 0
    reports = {
        "cascade": cascade_reports,
        "sumrule": sumrule_reports,
        "concentration": concentration_reports,
        "verify": verify_reports,
    }[command](cfg)
    for r in reports:
        if not all(math.isfinite(x) for x in (r.lhs, r.rhs, r.tolerance)):
            raise FloatingPointError(f"non-finite value in report {r.name}")
    # failing reports go last
    reports = [r for r in reports if r.passed] + [r for r in reports if not r.passed]
    code = 0 if all(r.passed for r in reports) else 1
    return [_report_row(r) for r in reports], code


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.threads is None:
            cfg.threads = default_threads()
    except (ConfigError, ValueError) as exc:
        print(f"remgrem: config error: {exc}", file=sys.stderr)
        return 2
    fmt = cfg.format or ("csv" if args.command in ("pressure", "bound") else "json")
    try:
        rows, code = run(cfg, args.command)
    except CapacityError as exc:
        print(f"remgrem: capacity error: {exc}", file=sys.stderr)
        return 3
    except ParameterError as exc:
        print(f"remgrem: config error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"remgrem: {exc}", file=sys.stderr)
        return 1
    try:
        for row in rows:
            _check_finite(row)
    except FloatingPointError as exc:
        print(f"remgrem: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            write_rows(rows, fmt, fh, args.command, cfg.seed)
    else:
        buf = io.StringIO()
        write_rows(rows, fmt, buf, args.command, cfg.seed)
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
