"""Command-line interface: ``spiralsheet solve|export|field|check``.

Exit codes: 0 success, 1 usage or input error, 2 the solver or a check
failed.  Configuration is an INI file (or the same structure as JSON):

    [params]   mu, alpha, m, series_cap, tol_inner, tol_outer, tol_quad,
               max_iter_inner, max_iter_outer, ball_radius, threads
    [grid]     theta_min, theta_max, n_nodes, head_exponent, tail_exponent
               (exponents accept "none")
    [outputs]  dir, archive, curve_formats, curve_times
    [checks]   suites
    [run]      seed

Every key is optional; omitted keys take the library defaults.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import DOMAIN, FieldPair, GridSpec, Params, PowerLaw, SampledField
from .errors import ConfigError, ContractError, ContractionFailure, DomainError, SpiralSheetError
from .geometry import SpiralSolution, asymptotics, export_curve
from .solver import SolveReport, solve

__all__ = ["RunConfig", "load_config", "write_archive", "load_archive", "main"]

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

_PARAM_TYPES = {
    "mu": float, "alpha": float, "m": int, "series_cap": int, "tol_inner": float,
    "tol_outer": float, "tol_quad": float, "max_iter_inner": int, "max_iter_outer": int,
    "ball_radius": float, "threads": int,
}
_GRID_TYPES = {"theta_min": float, "theta_max": float, "n_nodes": int,
               "head_exponent": "opt", "tail_exponent": "opt"}
_OUTPUT_KEYS = ("dir", "archive", "curve_formats", "curve_times")
_SECTIONS = ("params", "grid", "outputs", "checks", "run")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; ``to_text`` and ``load_config`` round-trip it."""

    params: Params = field(default_factory=Params)
    out_dir: str = "out"
    archive: str = "solution.json"
    curve_formats: tuple = ()
    curve_times: tuple = (1.0,)
    suites: tuple = ("all",)
    seed: int = 0

    def to_dict(self) -> dict:
        p = self.params.to_dict()
        grid = p.pop("grid")
        return {"params": p, "grid": grid,
                "outputs": {"dir": self.out_dir, "archive": self.archive,
                            "curve_formats": list(self.curve_formats),
                            "curve_times": list(self.curve_times)},
                "checks": {"suites": list(self.suites)},
                "run": {"seed": self.seed}}

    def to_text(self) -> str:
        """INI rendering with a fixed key order."""
        d = self.to_dict()
        lines = []
        for sec in _SECTIONS:
            lines.append(f"[{sec}]")
            for key, val in d[sec].items():
                lines.append(f"{key} = {_render(val)}")
            lines.append("")
        return "\n".join(lines)


def _render(val) -> str:
    if val is None:
        return "none"
    if isinstance(val, list):
        return ", ".join(_render(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _convert(key, raw, kind):
    if isinstance(raw, str):
        text = raw.strip()
        if kind == "opt":
            if text.lower() in ("none", ""):
                return None
            kind = float
        try:
            if kind is int:
                val = float(text)
                if val != int(val):
                    raise ValueError
                return int(val)
            return kind(text)
        except ValueError:
            raise ConfigError(key, f"cannot read {raw!r} as {kind.__name__}") from None
    if kind == "opt":
        if raw is None:
            return None
        kind = float
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(key, f"expected a number, got {raw!r}")
    if kind is int and raw != int(raw):
        raise ConfigError(key, f"expected an integer, got {raw!r}")
    return kind(raw)


def _list(key, raw, kind):
    if isinstance(raw, str):
        items = [s.strip() for s in raw.split(",") if s.strip()]
    elif isinstance(raw, list):
        items = raw
    else:
        raise ConfigError(key, f"expected a list, got {raw!r}")
    if kind is str:
        return tuple(str(s) for s in items)
    return tuple(_convert(key, s, kind) for s in items)


def config_from_dict(data: dict) -> RunConfig:
    """Validate a nested mapping; errors name the offending key."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping of sections")
    for sec in data:
        if sec not in _SECTIONS:
            raise ConfigError(sec, "unknown section")
    sections = {s: data.get(s) or {} for s in _SECTIONS}
    for sec, table in (("params", _PARAM_TYPES), ("grid", _GRID_TYPES)):
        for key in sections[sec]:
            if key not in table:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    p = {k: _convert(f"params.{k}", v, _PARAM_TYPES[k]) for k, v in sections["params"].items()}
    g = {k: _convert(f"grid.{k}", v, _GRID_TYPES[k]) for k, v in sections["grid"].items()}
    try:
        grid = GridSpec(**g)
    except DomainError as err:
        raise ConfigError("grid", str(err)) from None
    try:
        params = Params(grid=grid, **p)
    except DomainError as err:
        key = next((k for k in _PARAM_TYPES if str(err).startswith(k)), "params")
        raise ConfigError(f"params.{key}" if key != "params" else key, str(err)) from None
    out = sections["outputs"]
    for key in out:
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"outputs.{key}", "unknown key")
    formats = _list("outputs.curve_formats", out.get("curve_formats", []), str)
    for f in formats:
        if f not in ("csv", "svg", "json"):
            raise ConfigError("outputs.curve_formats", f"unknown format {f!r}")
    times = _list("outputs.curve_times", out.get("curve_times", [1.0]), float)
    if any(t < 0 for t in times):
        raise ConfigError("outputs.curve_times", "times must be non-negative")
    for key in sections["checks"]:
        if key != "suites":
            raise ConfigError(f"checks.{key}", "unknown key")
    for key in sections["run"]:
        if key != "seed":
            raise ConfigError(f"run.{key}", "unknown key")
    return RunConfig(params=params, out_dir=str(out.get("dir", "out")),
                     archive=str(out.get("archive", "solution.json")),
                     curve_formats=formats, curve_times=times,
                     suites=_list("checks.suites", sections["checks"].get("suites", ["all"]), str),
                     seed=_convert("run.seed", sections["run"].get("seed", 0), int))


def load_config(path) -> RunConfig:
    """Read an INI or JSON configuration file."""
    text = Path(path).read_text()
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError("<json>", str(err)) from None
        return config_from_dict(data)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError("<ini>", str(err).splitlines()[0]) from None
    return config_from_dict({s: dict(parser[s]) for s in parser.sections()})


# --------------------------------------------------------------------------
# archives

def _field_dict(f: SampledField) -> dict:
    return {"values": [float(v) for v in f.values], "derivs": [float(v) for v in f.derivs],
            "head": [float(f.head.coef), float(f.head.exponent)],
            "tail": [float(f.tail.coef), float(f.tail.exponent)]}


def _field_from(grid, d) -> SampledField:
    return SampledField(grid, np.array(d["values"]), np.array(d["derivs"]),
                        PowerLaw(*d["head"]), PowerLaw(*d["tail"]))


def archive_dict(report: SolveReport, seed: int = 0) -> dict:
    params = report.params.to_dict(threads=False)
    x = report.x
    doc = {
        "kind": "spiralsheet-solution",
        "params": params,
        "seed": seed,
        "theta": [float(t) for t in report.params.grid.nodes],
        "perturbation": {"r": _field_dict(x.first), "gamma": _field_dict(x.second)},
        "report": {"converged": bool(report.converged),
                   "iterates": [float(v) for v in report.iterates],
                   "residual": float(report.residual), "ratio": float(report.ratio),
                   "norm": float(report.norm), "series_terms": [int(v) for v in report.series_terms],
                   "tail_uncertainty": float(report.tail_uncertainty),
                   "inner_iterations": [int(v) for v in report.inner_iterations],
                   "message": report.message},
    }
    if report.converged:
        doc["asymptotics"] = asymptotics(SpiralSolution(report.params, x))
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n"


def write_archive(report: SolveReport, path, seed: int = 0) -> None:
    Path(path).write_text(_dump(archive_dict(report, seed)))


def load_archive(path) -> SpiralSolution:
    """Rebuild the solution stored by ``solve``."""
    try:
        doc = json.loads(Path(path).read_text())
        params = Params.from_dict(doc["params"])
        grid = params.grid
        pert = doc["perturbation"]
        x = FieldPair(_field_from(grid, pert["r"]), _field_from(grid, pert["gamma"]), DOMAIN)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(str(path), f"not a solution archive ({err})") from None
    return SpiralSolution(params, x)


# --------------------------------------------------------------------------
# commands

def _threads(flag):
    env = os.environ.get("SPIRALSHEET_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError("SPIRALSHEET_THREADS", f"not an integer: {env!r}") from None
    elif flag is not None:
        n = flag
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("threads", "must be at least 1")
    return n


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _err(msg):
    print(f"spiralsheet: {msg}", file=sys.stderr)


def cmd_solve(args) -> int:
    cfg = _config(args)
    params = cfg.params.with_(threads=_threads(args.threads))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = solve(params)
    except (ContractError, ContractionFailure) as err:
        _err(f"{type(err).__name__}: {err}")
        print(f"status: contraction failure (m={params.m}): {err}")
        return EXIT_FAILED
    path = out / cfg.archive
    write_archive(report, path, cfg.seed)
    if not report.converged:
        print(f"status: not converged after {len(report.iterates)} steps; archive {path}")
        return EXIT_FAILED
    print(f"status: converged in {len(report.iterates)} steps, |x|_X = {report.norm:.6g}, "
          f"ratio = {report.ratio:.3g}; archive {path}")
    s = SpiralSolution(report.params, report.x)
    for t in cfg.curve_times:
        for fmt in cfg.curve_formats:
            export_curve(s, t, format=fmt, path=out / f"curve_t{t:g}.{fmt}")
    return EXIT_OK


def _archive_path(args) -> Path:
    if args.archive:
        return Path(args.archive)
    cfg = _config(args)
    return Path(cfg.out_dir) / cfg.archive


def cmd_export(args) -> int:
    src = _archive_path(args)
    if not src.is_file():
        _err(f"archive not found: {src}")
        return EXIT_USAGE
    s = load_archive(src)
    out = Path(args.out or src.parent)
    out.mkdir(parents=True, exist_ok=True)
    if args.t < 0:
        raise DomainError("--t must be non-negative")
    path = out / f"curve_t{args.t:g}.{args.format}"
    export_curve(s, args.t, format=args.format, n_gamma=args.n_gamma, path=path)
    print(path)
    return EXIT_OK


def cmd_field(args) -> int:
    from .velocity import export_field
    src = _archive_path(args)
    if not src.is_file():
        _err(f"archive not found: {src}")
        return EXIT_USAGE
    s = load_archive(src)
    out = Path(args.out or src.parent)
    out.mkdir(parents=True, exist_ok=True)
    fmt = args.format if args.format in ("csv", "json") else "csv"
    path = out / f"field.{fmt}"
    export_field(s, tuple(args.window), args.resolution, fmt, path=path,
                 threads=_threads(args.threads))
    print(path)
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import SUITES, CheckContext, run_suite
    cfg = _config(args)
    params = cfg.params.with_(threads=_threads(args.threads))
    names = [args.suite] if args.suite else list(cfg.suites)
    for n in names:
        if n != "all" and n not in SUITES:
            _err(f"unknown suite {n!r}; choose from all, {', '.join(SUITES)}")
            return EXIT_USAGE
    ctx = CheckContext(params, seed=cfg.seed)
    if args.archive:
        if not Path(args.archive).is_file():
            _err(f"archive not found: {args.archive}")
            return EXIT_USAGE
        ctx._solution = load_archive(args.archive)
        ctx.params = ctx._solution.params
    rows = []
    try:
        for n in names:
            rows += [(n, r) for r in run_suite(n, ctx)]
    except (ContractError, ContractionFailure) as err:
        _err(f"{type(err).__name__}: {err}")
        return EXIT_FAILED
    width = max(len(r.name) for _, r in rows)
    for suite, r in rows:
        verdict = "PASS" if r.passed else "FAIL"
        print(f"{verdict}  {suite:<10} {r.name:<{width}}  {r.measured:.3e} {r.relation} {r.bound:.1e}")
    return EXIT_OK if all(r.passed for _, r in rows) else EXIT_FAILED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err(message)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spiralsheet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, archive=False):
        p.add_argument("--config", metavar="PATH", help="INI or JSON run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--threads", type=int, metavar="N",
                       help="worker threads (SPIRALSHEET_THREADS overrides)")
        if archive:
            p.add_argument("--archive", metavar="PATH", help="solution archive from 'solve'")

    p = sub.add_parser("solve", help="solve for the spiral and write an archive")
    common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("export", help="export sheet curves")
    common(p, archive=True)
    p.add_argument("--t", type=float, default=1.0, help="physical time")
    p.add_argument("--format", choices=("csv", "svg", "json"), default="csv")
    p.add_argument("--n-gamma", type=int, default=400, help="samples per branch")
    p.set_defaults(func=cmd_export)
    p = sub.add_parser("field", help="export the velocity field on a grid")
    common(p, archive=True)
    p.add_argument("--window", nargs=4, type=float, default=[-1.0, 1.0, -1.0, 1.0],
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_field)
    p = sub.add_parser("check", help="run invariant suites")
    common(p, archive=True)
    p.add_argument("--suite", help="suite name or 'all'")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as err:
        _err(str(err))
        return EXIT_USAGE
    except OSError as err:
        _err(str(err))
        return EXIT_USAGE
    except SpiralSheetError as err:
        _err(f"{type(err).__name__}: {err}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
