"""
Command-line interface.

Every option may also be given in a TOML file passed with ``--config``;
file keys use the long option names with dashes replaced by underscores.
Command-line values override file values.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from . import __version__
from .classical_opt import minimize_on_ball
from .eigensolve import assemble_spectrum
from .errors import ConfigError, MFSpinError
from .model import BUILTINS, NcPolynomial, builtin
from .semiclassic import oscillator, oscillator_spectrum, predict, predict_interior
from .thermo import pressure_csv, pressure_scan
from .verify import run_all

COMMANDS = ("spectrum", "predict", "gap", "pressure", "oscillator", "verify", "sweep")
MODEL_PARAMS = ("gamma", "alpha", "beta_c", "p", "lambda")


@dataclass
class RunConfig:
    command: str = "spectrum"
    model: str | None = None
    terms: list | None = None
    gamma: float | None = None
    alpha: float | None = None
    beta_c: float | None = None
    p: int | None = None
    lambda_: float | None = None
    n: list[int] | None = None
    beta: list[float] | None = None
    window: float = 8.0
    kmax: int = 2
    mmax: int = 2
    omega: float = 1.0
    kcut: int = 200
    count: int = 10
    j_window: int | None = None
    threads: int | None = None
    output: str | None = None
    format: str = "json"
    with_exact: bool = False
    sweep_param: str | None = None
    sweep_values: list[float] | None = None

    # -- (de)serialization ----------------------------------------------------

    @staticmethod
    def _key(name: str) -> str:
        return "lambda" if name == "lambda_" else name

    def to_mapping(self) -> dict:
        return {self._key(k): v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_mapping(cls, data: dict) -> RunConfig:
        known = {cls._key(f.name): f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        cfg = cls(**{known[k]: v for k, v in data.items()})
        cfg.validate()
        return cfg

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_mapping())

    @classmethod
    def from_toml(cls, text: str) -> RunConfig:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid config file: {exc}") from None
        return cls.from_mapping(data)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be 'json' or 'csv'")
        for key in ("gamma", "alpha", "beta_c", "lambda_", "window", "omega"):
            val = getattr(self, key)
            if val is not None and (isinstance(val, bool) or not isinstance(val, (int, float))):
                raise ConfigError(f"{self._key(key)} must be a number, got {val!r}")
        for key in ("kmax", "mmax", "kcut", "count"):
            val = getattr(self, key)
            if isinstance(val, bool) or not isinstance(val, int) or val < 0:
                raise ConfigError(f"{key} must be a non-negative integer, got {val!r}")
        if self.p is not None and (isinstance(self.p, bool) or not isinstance(self.p, int)):
            raise ConfigError(f"p must be an integer, got {self.p!r}")
        if self.n is not None:
            if isinstance(self.n, int):
                self.n = [self.n]
            if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in self.n):
                raise ConfigError(f"n must be positive integers, got {self.n!r}")
        if self.beta is not None:
            if isinstance(self.beta, (int, float)):
                self.beta = [float(self.beta)]
            if not all(isinstance(x, (int, float)) and x > 0 for x in self.beta):
                raise ConfigError(f"beta must be positive numbers, got {self.beta!r}")
        if self.window <= 0:
            raise ConfigError("window must be positive")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            raise ConfigError("threads must be a positive integer")
        if self.model is not None and self.terms is not None:
            raise ConfigError("give either model or terms, not both")

    # -- model construction ---------------------------------------------------

    def model_params(self) -> dict:
        return {self._key(k): getattr(self, k) for k in ("gamma", "alpha", "beta_c", "p", "lambda_")
                if getattr(self, k) is not None}

    def polynomial(self, overrides: dict | None = None) -> tuple[NcPolynomial, str]:
        params = {**self.model_params(), **(overrides or {})}
        if self.terms is not None:
            return NcPolynomial.from_list(self.terms), "terms"
        if self.model is None:
            raise ConfigError("a model (--model) or explicit terms (--terms) is required")
        name = self.model.removeprefix("builtin:")
        return builtin(name, params), name

    def sizes(self) -> list[int]:
        if not self.n:
            raise ConfigError("n is required for this command")
        return list(self.n)


# -- output formatting ----------------------------------------------------------

def fmt_float(x: float) -> str:
    return f"{x:.16e}"


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written as 17 significant digits; NaN/inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj)) if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(obj)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- commands -------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> str:
    P, name = cfg.polynomial()
    results = [assemble_spectrum(P, n, cfg.window, j_window=cfg.j_window, threads=cfg.threads, model_name=name)
               for n in cfg.sizes()]
    if cfg.format == "csv":
        rows = [(r.n_sites, lv.energy, lv.twice_j, lv.multiplicity.log_value, lv.index)
                for r in results for lv in r.levels]
        return _rows_csv(["n", "e", "twoJ", "lnMult", "idx"], rows)
    out = [r.to_dict() for r in results]
    return to_json(out[0] if len(out) == 1 else out)


def _prediction(P, n, kmax, mmax):
    """(predicted gap, predicted e0, payload) for whatever minimum type P has."""
    report = minimize_on_ball(P)
    if all(m.location == "interior" for m in report.minima):
        ip = predict_interior(P, report.minima[0].m0, n)
        return ip.gap, ip.e0, {"report": report.to_dict(), "interior": ip.to_dict()}, None
    pred = predict(P, report, n, kmax, mmax)
    return pred.predicted_gap, pred.predicted_e0, {"report": report.to_dict()}, pred


def cmd_predict(cfg: RunConfig) -> str:
    P, _ = cfg.polynomial()
    out = []
    for n in cfg.sizes():
        _, _, payload, pred = _prediction(P, n, cfg.kmax, cfg.mmax)
        if pred is not None:
            exact = assemble_spectrum(P, n, cfg.window, threads=cfg.threads) if cfg.with_exact else None
            payload["prediction"] = pred.to_dict(exact)
        out.append(payload)
    return to_json(out[0] if len(out) == 1 else out)


def _gap_rows(P, sizes, cfg):
    rows = []
    for n in sizes:
        exact = assemble_spectrum(P, n, cfg.window, j_window=cfg.j_window, threads=cfg.threads)
        try:
            gap_p, e0_p, _, _ = _prediction(P, n, cfg.kmax, cfg.mmax)
        except MFSpinError:
            gap_p = e0_p = math.nan
        rows.append((n, exact.gap, gap_p, exact.e0, e0_p))
    return rows


def cmd_gap(cfg: RunConfig) -> str:
    P, _ = cfg.polynomial()
    rows = _gap_rows(P, cfg.sizes(), cfg)
    header = ["n", "gap_exact", "gap_predicted", "e0_exact", "e0_predicted"]
    if cfg.format == "csv":
        return _rows_csv(header, rows)
    return to_json([dict(zip(header, r)) for r in rows])


def cmd_pressure(cfg: RunConfig) -> str:
    if not cfg.beta:
        raise ConfigError("beta is required for the pressure command")
    P, _ = cfg.polynomial()
    n = cfg.n[0] if cfg.n else None
    results = pressure_scan(P, cfg.beta, n_sites=n)
    if cfg.format == "csv":
        return pressure_csv(results)
    return to_json([r.to_dict() for r in results])


def cmd_oscillator(cfg: RunConfig) -> str:
    if cfg.omega < 1:
        raise ConfigError("omega must be >= 1")
    if cfg.kcut < 2:
        raise ConfigError("kcut must be >= 2")
    ev = oscillator_spectrum(oscillator(cfg.omega, cfg.kcut), cfg.count)
    rows = [(k, float(e), (2 * k + 1) * cfg.omega) for k, e in enumerate(ev)]
    if cfg.format == "csv":
        return _rows_csv(["k", "eigenvalue", "limit"], rows)
    return to_json({"omega": cfg.omega, "K": cfg.kcut,
                    "levels": [{"k": k, "eigenvalue": e, "limit": lim} for k, e, lim in rows]})


def cmd_verify(cfg: RunConfig) -> tuple[str, bool]:
    checks = run_all()
    ok = all(c.passed for c in checks)
    if cfg.format == "csv":
        text = _rows_csv(["suite", "check", "passed", "detail"],
                         [(c.suite, c.name, "pass" if c.passed else "FAIL", c.detail) for c in checks])
    else:
        text = to_json({"passed": ok, "checks": [asdict(c) for c in checks]})
    return text, ok


def cmd_sweep(cfg: RunConfig) -> str:
    if cfg.sweep_param is None or not cfg.sweep_values:
        raise ConfigError("sweep needs sweep_param and sweep_values")
    if cfg.sweep_param not in MODEL_PARAMS:
        raise ConfigError(f"sweep_param must be one of {MODEL_PARAMS}")
    rows = []
    for value in cfg.sweep_values:
        P, _ = cfg.polynomial({cfg.sweep_param: value})
        for row in _gap_rows(P, cfg.sizes(), cfg):
            rows.append((float(value), *row))
    header = ["param", "n", "gap_exact", "gap_predicted", "e0_exact", "e0_predicted"]
    if cfg.format == "json":
        return to_json([dict(zip(header, r)) for r in rows])
    return _rows_csv(header, rows)


# -- argument parsing --------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    """Comma-separated numbers, or start:stop:count for an evenly spaced range."""
    try:
        if ":" in text:
            a, b, c = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(c))]
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None


def _json_terms(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"invalid terms {text!r}; expected JSON [[c, a, b, c], ...]") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfspin", description="Spectra and pressure of mean-field spin Hamiltonians.")
    parser.add_argument("--version", action="version", version=f"mfspin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with run options")
    common.add_argument("--model", choices=sorted(BUILTINS) + [f"builtin:{k}" for k in sorted(BUILTINS)])
    common.add_argument("--terms", type=_json_terms, help="explicit polynomial as JSON [[coeff, a, b, c], ...]")
    common.add_argument("--gamma", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta-c", dest="beta_c", type=float, help="coupling beta of the lmg and pspin models")
    common.add_argument("--p", type=int)
    common.add_argument("--lambda", dest="lambda_", metavar="LAMBDA", type=float)
    common.add_argument("--n", type=int, nargs="+")
    common.add_argument("--beta", type=float, nargs="+", help="inverse temperature(s)")
    common.add_argument("--window", type=float)
    common.add_argument("--kmax", type=int)
    common.add_argument("--mmax", type=int)
    common.add_argument("--omega", type=float)
    common.add_argument("--kcut", type=int, help="oscillator truncation size K")
    common.add_argument("--count", type=int)
    common.add_argument("--j-window", dest="j_window", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--output", help="write to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--with-exact", dest="with_exact", action="store_const", const=True)
    common.add_argument("--sweep-param", dest="sweep_param", choices=MODEL_PARAMS)
    common.add_argument("--sweep-values", dest="sweep_values", type=_float_list)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = RunConfig.from_toml(args.config.read_text()).to_mapping()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        val = getattr(args, f.name, None)
        if val is not None:
            data[RunConfig._key(f.name)] = val
    data["command"] = args.command
    return RunConfig.from_mapping(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ok = True
    try:
        cfg = config_from_args(args)
        if cfg.command == "verify":
            text, ok = cmd_verify(cfg)
        else:
            text = {
                "spectrum": cmd_spectrum,
                "predict": cmd_predict,
                "gap": cmd_gap,
                "pressure": cmd_pressure,
                "oscillator": cmd_oscillator,
                "sweep": cmd_sweep,
            }[cfg.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (MFSpinError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    if not text.endswith("\n"):
        text += "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
