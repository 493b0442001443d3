"""Command-line interface: integrate, shoot, classify, sweep, verify-bp.

Exit codes: 0 success, 2 invalid input, 3 numerical or search failure.
Settings are resolved as command-line flags, then the flat ``key = value``
file named by $VORTEXLAB_CONFIG, then built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from . import __version__
from .analyze import cumulative_energy, energy, pohozaev_residual, tail_report
from .integrate import SolverConfig, TerminalKind, integrate
from .model import CaseLabel, ModelParams, Parity, classify_params
from .shoot import NoBracketFound, bp_exact, find_a

# output schema version, written under the "spec_version" key
FORMAT_VERSION = "1.0"
CONFIG_ENV = "VORTEXLAB_CONFIG"
CSV_HEADER = ("r", "h", "dh", "energy_cum", "pohozaev_residual")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class InputError(Exception):
    """Invalid user input; reported with exit code 2."""


@dataclass
class RunConfig:
    lam: Optional[float] = None
    omega: Optional[float] = None
    m: Optional[int] = None
    a: Optional[float] = None
    a_range: tuple[float, float] = (0.1, 10.0)
    k: Optional[int] = None
    r_max: float = 200.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    conv_tol: float = 1e-8
    series_tol: float = 1e-12
    shoot_tol: float = 1e-6
    output: Optional[str] = None
    format: Optional[str] = None
    jobs: int = 1

    def solver(self, **overrides) -> SolverConfig:
        cfg = SolverConfig(
            r_max=self.r_max,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            conv_tol=self.conv_tol,
            series_tol=self.series_tol,
            shoot_tol=self.shoot_tol,
        )
        if overrides:
            cfg = replace(cfg, **overrides)
        try:
            cfg.validate()
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return cfg

    def params(self) -> ModelParams:
        missing = [n for n, v in (("lambda", self.lam), ("omega", self.omega), ("m", self.m)) if v is None]
        if missing:
            raise InputError(f"missing required setting(s): {', '.join(missing)}")
        try:
            return ModelParams(self.lam, self.omega, self.m)
        except ValueError as exc:
            raise InputError(str(exc)) from exc


# --------------------------------------------------------------------------
# parsing


def parse_range(text: str) -> tuple[float, float]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise InputError(f"range must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise InputError(f"range must look like lo:hi, got {text!r}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InputError(f"range bounds must be finite, got {text!r}")
    return lo, hi


def _parse_int(text) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


_CONVERTERS = {
    "lambda": ("lam", float),
    "lam": ("lam", float),
    "omega": ("omega", float),
    "m": ("m", _parse_int),
    "a": ("a", float),
    "a_range": ("a_range", parse_range),
    "k": ("k", _parse_int),
    "r_max": ("r_max", float),
    "rel_tol": ("rel_tol", float),
    "abs_tol": ("abs_tol", float),
    "conv_tol": ("conv_tol", float),
    "series_tol": ("series_tol", float),
    "shoot_tol": ("shoot_tol", float),
    "output": ("output", str),
    "format": ("format", str.lower),
    "jobs": ("jobs", _parse_int),
}


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file into RunConfig field values."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for key, raw in parser["run"].items():
        norm = key.strip().lower().replace("-", "_")
        if norm not in _CONVERTERS:
            raise InputError(f"unknown key {key!r} in config file {path}")
        name, conv = _CONVERTERS[norm]
        try:
            out[name] = conv(raw.strip())
        except ValueError as exc:
            raise InputError(f"bad value for {key!r} in config file: {exc}") from exc
    return out


def resolve_config(args: argparse.Namespace, env=None) -> RunConfig:
    """Merge flags over the config file over defaults."""
    env = os.environ if env is None else env
    values = {}
    path = env.get(CONFIG_ENV)
    if path:
        values.update(read_config_file(path))
    names = {f.name for f in fields(RunConfig)}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if "a_range" in values and isinstance(values["a_range"], str):
        values["a_range"] = parse_range(values["a_range"])
    cfg = RunConfig(**values)
    if cfg.format is not None and cfg.format not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.jobs < 1:
        raise InputError("jobs must be >= 1")
    return cfg


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--format", choices=("csv", "json"), default=default, help="output format")
    p.add_argument("--output", default=default, metavar="PATH", help="write here instead of stdout")
    p.add_argument("--jobs", type=int, default=default, metavar="N", help="parallel sweep cells")


def _add_model(p: argparse.ArgumentParser, m: bool = True) -> None:
    p.add_argument("--lambda", dest="lam", type=float, help="anisotropy strength")
    p.add_argument("--omega", type=float, help="angular velocity")
    if m:
        p.add_argument("--m", type=int, help="vortex degree (nonzero)")


def _add_tolerances(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r-max", dest="r_max", type=float)
    for name in ("rel_tol", "abs_tol", "conv_tol", "series_tol", "shoot_tol"):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vortexlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate one profile from the origin")
    _add_globals(p, suppress=True)
    _add_model(p)
    p.add_argument("--a", type=float, help="initial slope h^(m)(0)")
    p.add_argument("--k", type=int, help="level for the Pohozaev column (default: terminal level)")
    _add_tolerances(p)

    p = sub.add_parser("shoot", help="search a for a profile with h -> k pi")
    _add_globals(p, suppress=True)
    _add_model(p)
    p.add_argument("--k", type=int)
    p.add_argument("--a-range", dest="a_range", type=str, metavar="LO:HI")
    _add_tolerances(p)

    p = sub.add_parser("classify", help="case label of a (lambda, omega) pair")
    _add_globals(p, suppress=True)
    _add_model(p, m=False)
    p.add_argument("--line-tol", dest="line_tol", type=float, default=0.0)

    p = sub.add_parser("sweep", help="case labels over a (lambda, omega) grid")
    _add_globals(p, suppress=True)
    p.add_argument("--lambda-range", dest="lambda_range", required=True, metavar="LO:HI")
    p.add_argument("--omega-range", dest="omega_range", required=True, metavar="LO:HI")
    p.add_argument("--n", type=int, default=5, help="points per axis")
    p.add_argument("--line-tol", dest="line_tol", type=float, default=0.0)
    p.add_argument("--empirical", action="store_true", help="run a shooting search per cell")
    p.add_argument("--m", type=int)
    p.add_argument("--a-range", dest="a_range", type=str, metavar="LO:HI")
    _add_tolerances(p)

    p = sub.add_parser("verify-bp", help="compare against the closed-form instanton")
    _add_globals(p, suppress=True)
    p.add_argument("--m-list", dest="m_list", default="1,2,3")
    p.add_argument("--a", type=float, help="initial slope (default 2 m! per degree)")
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--profile-r-max", dest="profile_r_max", type=float, default=20.0,
                   help="radius over which the pointwise error is measured")
    p.add_argument("--sup-tol", dest="sup_tol", type=float, default=1e-8)
    p.add_argument("--energy-tol", dest="energy_tol", type=float, default=1e-3)
    for name in ("rel_tol", "abs_tol", "series_tol"):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    return parser


# --------------------------------------------------------------------------
# output


def fmt_float(x) -> str:
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def to_json(payload: dict) -> str:
    body = {"spec_version": FORMAT_VERSION}
    body.update(payload)
    # json writes floats with repr, which round-trips exactly
    return json.dumps(_jsonable(body), indent=2, allow_nan=False) + "\n"


def profile_csv(profile, k: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    cum = cumulative_energy(profile)
    res = pohozaev_residual(profile.params, profile, k).residual
    for row in zip(profile.r, profile.h, profile.dh, cum, res):
        w.writerow([fmt_float(v) for v in row])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def terminal_dict(term) -> dict:
    return {"kind": term.kind.value, "k": term.k, "r_final": term.r_final, "diagnostic": term.diagnostic}


def label_dict(label: CaseLabel) -> dict:
    return {
        "tag": label.tag.value,
        "admissible_limit_parity": label.admissible_limit_parity.value,
        "exponential_tail_guaranteed": label.exponential_tail_guaranteed,
    }


def _profile_level(profile, k: Optional[int]) -> int:
    if k is not None:
        return k
    if profile.terminal.k is not None:
        return profile.terminal.k
    return int(round(profile.h[-1] / math.pi))


def profile_payload(profile, k: int) -> dict:
    ledger = pohozaev_residual(profile.params, profile, k)
    return {
        "params": {"lambda": profile.params.lam, "omega": profile.params.omega, "m": profile.params.m_input},
        "a": profile.a,
        "terminal": terminal_dict(profile.terminal),
        "energy": energy(profile),
        "pohozaev_sup_relative_residual": ledger.sup_relative_residual,
        "samples": {
            "r": profile.r,
            "h": profile.h,
            "dh": profile.dh,
            "energy_cum": cumulative_energy(profile),
            "pohozaev_residual": ledger.residual,
        },
    }


# --------------------------------------------------------------------------
# commands


def cmd_integrate(cfg: RunConfig) -> int:
    p = cfg.params()
    if cfg.a is None:
        raise InputError("missing required setting: a")
    if not math.isfinite(cfg.a):
        raise InputError("a must be finite")
    solver = cfg.solver()
    profile = integrate(p, cfg.a, solver)
    term = profile.terminal
    failed = term.kind is TerminalKind.DIVERGED and (
        term.diagnostic.startswith("integrator failure") or term.diagnostic == "non-finite state"
    )
    k = _profile_level(profile, cfg.k)
    if (cfg.format or "csv") == "csv":
        emit(profile_csv(profile, k), cfg)
    else:
        emit(to_json(profile_payload(profile, k)), cfg)
    if failed:
        print(f"error: {term.diagnostic}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_shoot(cfg: RunConfig) -> int:
    p = cfg.params()
    if cfg.k is None:
        raise InputError("missing required setting: k")
    lo, hi = cfg.a_range
    if lo > hi:
        raise InputError("a-range must satisfy lo <= hi")
    if lo <= 0.0 <= hi and lo != hi:
        raise InputError("a-range must not contain 0")
    solver = cfg.solver()
    fmt = cfg.format or "json"
    try:
        res = find_a(p, cfg.k, (lo, hi), solver)
    except NoBracketFound as exc:
        payload = {"status": "failed", "error": "NoBracketFound", "reason": exc.reason, "detail": exc.detail}
        if fmt == "json":
            emit(to_json(payload), cfg)
        print(f"error: {exc.reason}: {exc.detail}", file=sys.stderr)
        return EXIT_NUMERIC
    if fmt == "csv":
        emit(profile_csv(res.profile, cfg.k), cfg)
        return EXIT_OK
    tail = None
    try:
        tr = tail_report(p, res.profile, cfg.k)
        tail = {"fitted_rate": tr.fitted_rate, "rate_bound": tr.rate_bound,
                "linearized_rate": tr.linearized_rate, "direction": tr.direction.value,
                "monotone_from": tr.monotone_from}
    except ValueError:
        pass
    emit(to_json({
        "status": "ok",
        "params": {"lambda": p.lam, "omega": p.omega, "m": p.m_input},
        "k": res.k,
        "a_lo": res.a_lo,
        "a_hi": res.a_hi,
        "a_star": res.a_star,
        "residual": res.residual,
        "slope_residual": res.slope_residual,
        "r_final": res.r_final,
        "iterations": res.iterations,
        "terminal": terminal_dict(res.profile.terminal),
        "tail": tail,
    }), cfg)
    return EXIT_OK


def cmd_classify(cfg: RunConfig, line_tol: float) -> int:
    if cfg.lam is None or cfg.omega is None:
        raise InputError("classify needs --lambda and --omega")
    if not (math.isfinite(cfg.lam) and math.isfinite(cfg.omega)):
        raise InputError("lambda and omega must be finite")
    label = classify_params(cfg.lam, cfg.omega, line_tol)
    if cfg.format == "csv":
        emit(table_csv(("lambda", "omega", "tag", "admissible_limit_parity", "exponential_tail_guaranteed"),
                       [(cfg.lam, cfg.omega, *label_dict(label).values())]), cfg)
    else:
        emit(to_json({"lambda": cfg.lam, "omega": cfg.omega, **label_dict(label)}), cfg)
    return EXIT_OK


def empirical_level(label: CaseLabel) -> int:
    """Target level for a per-cell search: 0 for even-parity labels, else pi."""
    return 0 if label.admissible_limit_parity is Parity.EVEN else 1


def _empirical_cell(task) -> dict:
    lam, omega, m, a_range, solver, line_tol = task
    label = classify_params(lam, omega, line_tol)
    p = ModelParams(lam, omega, m)
    k = empirical_level(label)
    lo, hi = a_range
    if k == 0:
        # a trajectory returning to 0 starts in either direction; search a > 0
        lo, hi = abs(lo), abs(hi)
    out = {"k": k, "bracket_found": False, "a_star": None, "tail_rate": None, "reason": None}
    try:
        res = find_a(p, k, (lo, hi), solver)
    except NoBracketFound as exc:
        out["reason"] = exc.reason
    else:
        out["bracket_found"] = True
        out["a_star"] = res.a_star
        try:
            out["tail_rate"] = tail_report(p, res.profile, k).fitted_rate
        except ValueError:
            pass
    out["agrees"] = out["bracket_found"] == label.admits_vortex
    return out


def sweep_grid(lam_range, omega_range, n: int) -> list[tuple[float, float]]:
    lams = np.linspace(lam_range[0], lam_range[1], n)
    omegas = np.linspace(omega_range[0], omega_range[1], n)
    return [(float(lam), float(om)) for lam in lams for om in omegas]


def cmd_sweep(cfg: RunConfig, args) -> int:
    lam_range = parse_range(args.lambda_range)
    om_range = parse_range(args.omega_range)
    if args.n < 2:
        raise InputError("--n must be at least 2")
    for name, (lo, hi) in (("lambda", lam_range), ("omega", om_range)):
        if not lo < hi:
            raise InputError(f"degenerate {name} range {lo}:{hi}")
    if args.line_tol < 0:
        raise InputError("--line-tol must be nonnegative")
    grid = sweep_grid(lam_range, om_range, args.n)
    labels = [classify_params(lam, om, args.line_tol) for lam, om in grid]
    empirical = None
    if args.empirical:
        m = cfg.m if cfg.m is not None else 1
        if m == 0:
            raise InputError("m must be nonzero")
        solver = cfg.solver()
        tasks = [(lam, om, m, cfg.a_range, solver, args.line_tol) for lam, om in grid]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                empirical = list(pool.map(_empirical_cell, tasks))
        else:
            empirical = [_empirical_cell(t) for t in tasks]

    if cfg.format == "csv":
        header = ["lambda", "omega", "tag", "admissible_limit_parity", "exponential_tail_guaranteed"]
        if empirical is not None:
            header += ["k", "bracket_found", "a_star", "tail_rate", "agrees"]
        rows = []
        for i, ((lam, om), label) in enumerate(zip(grid, labels)):
            row = [lam, om, *label_dict(label).values()]
            if empirical is not None:
                e = empirical[i]
                row += [e["k"], e["bracket_found"], e["a_star"], e["tail_rate"], e["agrees"]]
            rows.append(row)
        emit(table_csv(header, rows), cfg)
    else:
        payload = {"grid": [list(g) for g in grid], "labels": [label_dict(lb) for lb in labels]}
        if empirical is not None:
            payload["empirical"] = empirical
        emit(to_json(payload), cfg)
    return EXIT_OK


def bp_truncated_energy(m: int, a: float, r: float) -> float:
    """Energy of the instanton over [0, r]: 4 m X^2 / (1 + X^2), X = a r^m / (2 m!)."""
    x = a * r**m / (2.0 * math.factorial(m))
    return 4.0 * m * x * x / (1.0 + x * x)


def cmd_verify_bp(cfg: RunConfig, args) -> int:
    try:
        m_list = [_parse_int(s) for s in str(args.m_list).split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad --m-list: {exc}") from exc
    if not m_list:
        raise InputError("--m-list is empty")
    r_max = args.r_max if args.r_max is not None else 1e4
    results = []
    for m in m_list:
        p = RunConfig(lam=0.0, omega=0.0, m=m).params()
        a = args.a if args.a is not None else 2.0 * math.factorial(p.m)
        if not math.isfinite(a):
            raise InputError("a must be finite")
        near_cfg = cfg.solver(r_max=min(args.profile_r_max, r_max))
        near = integrate(p, a, near_cfg)
        sup = float(np.max(np.abs(near.h - bp_exact(p.m, a, near.r))))
        far = integrate(p, a, cfg.solver(r_max=r_max))
        j = energy(far)
        j_exact = bp_truncated_energy(p.m, a, far.r[-1])
        ok = sup < args.sup_tol and abs(j - j_exact) < args.energy_tol
        results.append({
            "m": p.m_input, "a": a, "r_max": float(far.r[-1]),
            "sup_error": sup, "energy": j, "energy_exact": j_exact,
            "energy_error": abs(j - j_exact), "energy_limit": 4.0 * p.m if a else 0.0,
            "passed": ok,
        })
    passed = all(r["passed"] for r in results)
    if cfg.format == "csv":
        keys = list(results[0])
        emit(table_csv(keys, [[r[k] for k in keys] for r in results]), cfg)
    else:
        emit(to_json({"results": results, "passed": passed}), cfg)
    return EXIT_OK if passed else EXIT_NUMERIC


_RANGE_FLAGS = ("--a-range", "--lambda-range", "--omega-range")


def _join_ranges(argv: list[str]) -> list[str]:
    # "--lambda-range -1:1" would read -1:1 as an option; bind it explicitly
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None, env=None) -> int:
    parser = build_parser()
    argv = _join_ranges(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args, env)
        if args.command == "integrate":
            return cmd_integrate(cfg)
        if args.command == "shoot":
            return cmd_shoot(cfg)
        if args.command == "classify":
            return cmd_classify(cfg, args.line_tol)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        if args.command == "verify-bp":
            return cmd_verify_bp(cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    parser.error(f"unknown command {args.command!r}")
    return EXIT_INPUT
