"""Command-line front end.

Every output carries its resolved run configuration, so a file parses back
into the :class:`RunConfig` that produced it. CSV files put it on a leading
``#`` line; JSON files under ``"metadata"``.

Exit statuses: 0 success, 1 usage, 2 domain error, 3 resource or solver
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import asymptotics, hvpt, potential, resummation, scan, variational
from .errors import DomainError, SexticError

OUTPUT_DIR_ENV = "SEXTIC_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_RESOURCE = 3
EXIT_IO = 4

COMMANDS = (
    "potential-info",
    "series",
    "sum",
    "fit-large-order",
    "fit-splitting",
    "solve",
    "scan",
    "crossings",
    "deltax",
    "figure",
)
FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig7", "fig8")


class UsageError(SexticError):
    exit_code = EXIT_USAGE


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    """One resolved invocation: command name plus its parameters."""

    command: str
    parameters: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        allowed = set(_DEFAULTS[self.command])
        unknown = sorted(set(self.parameters) - allowed)
        if unknown:
            raise UsageError(f"unknown parameter {unknown[0]!r} for {self.command}")
        self.parameters = {**_DEFAULTS[self.command], **self.parameters}

    def as_dict(self) -> dict:
        return {"command": self.command, "parameters": dict(self.parameters)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["command"], dict(d.get("parameters", {})))

    @classmethod
    def from_output(cls, text: str) -> "RunConfig":
        """Recover the configuration from a CSV or JSON output file."""
        stripped = text.lstrip()
        if stripped.startswith("{"):
            meta = json.loads(stripped)["metadata"]
        else:
            meta = scan.read_metadata(text)
        return cls.from_dict(meta["config"])


_GRID_FIG1 = list(asymptotics.SPLITTING_WINDOW) + [10]
_GRID_SCAN = list(scan.SCAN_WINDOW) + [scan.SCAN_POINTS]

_DEFAULTS: Dict[str, Dict[str, object]] = {
    "potential-info": {"lam": None},
    "series": {"state": 0, "order": 20, "quantity": "energy", "power": 1},
    "sum": {
        "state": 0,
        "quantity": "moment",
        "power": 1,
        "lam": [0.01, 0.02, 0.05, 0.1],
        "pade": [6, 6],
        "dim": variational.DEFAULT_DIM,
    },
    "fit-large-order": {"state": 0, "order": 300, "window": [100, 300], "terms": 4},
    "fit-splitting": {"grid": _GRID_FIG1, "dim": 500, "fix_exponent": False},
    "solve": {"lam": 0.0, "levels": 3, "dim": variational.DEFAULT_DIM},
    "scan": {"grid": _GRID_SCAN, "levels": 10, "dim": variational.SCAN_DIM},
    "crossings": {"grid": _GRID_SCAN, "levels": 10, "dim": variational.SCAN_DIM},
    "deltax": {
        "grid": _GRID_SCAN,
        "level": 4,
        "levels": 10,
        "dim": variational.SCAN_DIM,
        "threshold": scan.JUMP_THRESHOLD,
    },
    "figure": {"tag": "fig3"},
}


# --------------------------------------------------------------------------
# results and writers
# --------------------------------------------------------------------------


@dataclass
class Table:
    columns: List[str]
    rows: List[list]
    summary: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render(result, meta: dict, fmt: str) -> str:
    """Serialise a :class:`Table` or a plain dict."""
    meta = _jsonable(meta)
    if fmt == "json":
        if isinstance(result, Table):
            body = {"columns": result.columns, "rows": _jsonable(result.rows)}
            if result.summary:
                body["summary"] = _jsonable(result.summary)
        else:
            body = _jsonable(result)
        return json.dumps({"metadata": meta, **body}, indent=2, sort_keys=False) + "\n"
    if fmt != "csv":
        raise UsageError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(result, Table):
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([_fmt(v) for v in row])
    else:
        w.writerow(["key", "value"])
        for k, v in _flatten(_jsonable(result)):
            w.writerow([k, _fmt(v)])
    return buf.getvalue()


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, json.dumps(v)
        else:
            yield key, v


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _grid(spec, log=True):
    lo, hi, pts = float(spec[0]), float(spec[1]), int(spec[2])
    if pts < 1:
        raise DomainError("grid needs at least one point")
    if pts == 1:
        return np.array([lo])
    if log and lo * hi > 0:
        return scan.log_grid(lo, hi, pts)
    return np.linspace(lo, hi, pts)


def _series_for(p) -> hvpt.PerturbationSeries:
    if p["quantity"] == "energy":
        return hvpt.generate_series(p["state"], p["order"])[0]
    return hvpt.moment_series(p["state"], p["power"], p["order"])


def cmd_potential_info(p):
    if p["lam"] is None:
        raise UsageError("potential-info needs --lambda")
    shape = potential.classify_potential(float(p["lam"]))
    out = {k: v for k, v in vars(shape).items() if k != "regime"}
    out["regime"] = shape.regime.name.lower()
    return out


def cmd_series(p):
    s = _series_for(p)
    rows = [[j, str(c)] for j, c in enumerate(s.coefficients)]
    return Table(["order", "coefficient"], rows, {"label": s.label})


def _reference(p, lam):
    """Variational value of the summed quantity (x^(2N) moments only for N = 1)."""
    levels = variational.solve_levels(lam, p["state"] + 1, p["dim"])
    pair = levels[p["state"]]
    if p["quantity"] == "energy":
        return pair.energy
    if p["power"] == 1:
        return pair.x2_expectation
    return math.nan


def cmd_sum(p):
    M, N = map(int, p["pade"])
    order = M + N
    s = _series_for({**p, "order": order})
    c = [hvpt.to_float(x) for x in s.coefficients]
    approx = resummation.pade(c, M, N)
    rows = []
    for lam in map(float, p["lam"]):
        bp = resummation.borel_pade_sum(s.coefficients, M, N, lam)
        rows.append([lam, float(approx(lam)), bp.value_real, _reference(p, lam)])
    return Table(["lambda", "pade", "borel_pade", "reference"], rows)


def cmd_fit_large_order(p):
    s = _series_for({**p, "quantity": "moment", "power": 1})
    lo, hi = map(int, p["window"])
    return asymptotics.fit_large_order_moments(s, lo, hi, int(p["terms"])).as_dict()


def _splitting_fit(p):
    samples = scan.splitting_samples(_grid(p["grid"]), int(p["dim"]))
    res = asymptotics.fit_splitting(
        samples.lambdas, samples.deltas, bool(p["fix_exponent"]), samples.noise_floor
    )
    return samples, res


def cmd_fit_splitting(p):
    samples, res = _splitting_fit(p)
    out = res.as_dict()
    out["noise_floor"] = samples.noise_floor
    out["dropped"] = [list(d) for d in samples.dropped]
    return out


def cmd_solve(p):
    levels = variational.solve_levels(float(p["lam"]), int(p["levels"]), int(p["dim"]))
    rows = [[float(p["lam"]), e.level, e.parity.tag, e.energy, e.x2_expectation] for e in levels]
    return Table(["lambda", "n", "parity", "energy", "x2"], rows)


def _scan(p):
    return scan.scan_spectrum(_grid(p["grid"]), int(p["levels"]), int(p["dim"]))


def cmd_scan(p):
    table = _scan(p)
    return Table(list(scan.CSV_COLUMNS), [list(r) for r in table.rows()], {})


def cmd_crossings(p):
    found = scan.detect_avoided_crossings(_scan(p))
    return {"crossings": [c.as_dict() for c in found]}


def cmd_deltax(p):
    trace = scan.track_delta_x(_scan(p), int(p["level"]), float(p["threshold"]))
    jump_at = {j.index: j for j in trace.jumps}
    rows = []
    for i, (lam, dx) in enumerate(zip(trace.lambdas, trace.delta_x)):
        j = jump_at.get(i)
        rows.append([float(lam), float(dx), trace.localization[i] or "", j.direction if j else ""])
    summary = {"jumps": trace.as_dict()["jumps"], "threshold": trace.threshold}
    return Table(["lambda", "delta_x", "localization", "jump_after"], rows, summary)


def _fig1():
    p = _DEFAULTS["fit-splitting"]
    samples, res = _splitting_fit(p)
    model = asymptotics.splitting_model(samples.lambdas, *res.parameters)
    rows = [[float(l), float(d), float(m)] for l, d, m in zip(samples.lambdas, samples.deltas, model)]
    return Table(["lambda", "E0_minus_1", "fitted_model"], rows, res.as_dict())


def _fig2():
    rows = []
    for lam in np.linspace(-0.1, -0.005, 96):
        r = resummation.leading_borel_closed_form(float(lam))
        rows.append([float(lam), r.value_real, r.value_imag])
    return Table(["lambda", "re_SB", "im_SB"], rows, {"f0": resummation.F0})


def _fig3():
    s = hvpt.moment_series(0, 1, 12)
    c = [hvpt.to_float(x) for x in s.coefficients]
    approx = resummation.pade(c, 6, 6)
    rows = []
    for lam in np.linspace(0.005, 0.1, 20):
        lam = float(lam)
        exact = variational.solve_levels(lam, 1, variational.DEFAULT_DIM)[0].x2_expectation
        bp = resummation.borel_pade_sum(s.coefficients, 6, 6, lam).value_real
        rows.append([lam, exact, float(approx(lam)), bp])
    return Table(["lambda", "x2_exact", "pade66", "borel_pade66"], rows)


def _fig4():
    return cmd_scan(_DEFAULTS["scan"])


def _dx_figure(levels):
    p = _DEFAULTS["scan"]
    table = _scan(p)
    rows = [[float(l)] + [float(table.delta_x[i, n]) for n in levels] for i, l in enumerate(table.lambdas)]
    summary = {
        f"jumps_n{n}": scan.track_delta_x(table, n).as_dict()["jumps"] for n in levels
    }
    return Table(["lambda"] + [f"delta_x_{n}" for n in levels], rows, summary)


_FIGURE_BUILDERS: Dict[str, Callable[[], object]] = {
    "fig1": _fig1,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig7": lambda: _dx_figure((0, 2, 4)),
    "fig8": lambda: _dx_figure((6,)),
}


def cmd_figure(p):
    tag = p["tag"]
    if tag not in _FIGURE_BUILDERS:
        raise UsageError(f"unknown figure {tag!r}; choose from {', '.join(FIGURES)}")
    return _FIGURE_BUILDERS[tag]()


_HANDLERS = {
    "potential-info": cmd_potential_info,
    "series": cmd_series,
    "sum": cmd_sum,
    "fit-large-order": cmd_fit_large_order,
    "fit-splitting": cmd_fit_splitting,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "crossings": cmd_crossings,
    "deltax": cmd_deltax,
    "figure": cmd_figure,
}


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------


def execute(config: RunConfig, fmt: str = "csv", timestamp: bool = True) -> str:
    """Run one command and return the serialised output."""
    result = _HANDLERS[config.command](config.parameters)
    meta = {"config": config.as_dict(), "format": fmt, "version": __version__}
    if timestamp:
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return render(result, meta, fmt)


def resolve_output(path: Optional[str], default_name: Optional[str] = None) -> Optional[Path]:
    """Relative paths land in ``$SEXTIC_OUTPUT_DIR`` when it is set."""
    name = path or default_name
    if name is None:
        return None
    out = Path(name)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not out.is_absolute():
        out = Path(base) / out
    return out


def run(config: RunConfig, fmt: str = "csv", output: Optional[str] = None, timestamp: bool = True) -> int:
    """Execute ``config``; write to ``output`` (or stdout). Returns the exit status."""
    try:
        text = execute(config, fmt, timestamp)
        default = f"{config.parameters['tag']}.{fmt}" if config.command == "figure" else None
        target = resolve_output(output, default)
        if target is None:
            sys.stdout.write(text)
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SexticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sextic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--output", help=f"output file (relative to ${OUTPUT_DIR_ENV} if set)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-identical reruns")
    common.add_argument("--config", help="rerun the configuration stored in a previous output file")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def grid(sp):
        sp.add_argument("--grid", nargs=3, metavar=("LO", "HI", "POINTS"), type=float, default=argparse.SUPPRESS)

    def opt(sp, *flags, **kw):
        sp.add_argument(*flags, default=argparse.SUPPRESS, **kw)

    sp = add("potential-info", "regime and stationary points of V(lam, x)")
    opt(sp, "--lambda", dest="lam", type=float)

    sp = add("series", "exact perturbation coefficients")
    opt(sp, "--state", type=int)
    opt(sp, "--order", type=int)
    opt(sp, "--quantity", choices=("energy", "moment"))
    opt(sp, "--power", type=int, help="N in <x^(2N)> for --quantity moment")

    sp = add("sum", "Padé and Borel-Padé sums against the variational value")
    opt(sp, "--state", type=int)
    opt(sp, "--quantity", choices=("energy", "moment"))
    opt(sp, "--power", type=int)
    opt(sp, "--lambda", dest="lam", type=float, nargs="+")
    opt(sp, "--pade", type=int, nargs=2, metavar=("M", "N"))
    opt(sp, "--dim", type=int)

    sp = add("fit-large-order", "large-order fit of the <x^2> coefficients")
    opt(sp, "--state", type=int)
    opt(sp, "--order", type=int)
    opt(sp, "--window", type=int, nargs=2, metavar=("JMIN", "JMAX"))
    opt(sp, "--terms", type=int)

    sp = add("fit-splitting", "fit E0 - 1 = A |lam|^B exp(-C/|lam|)")
    grid(sp)
    opt(sp, "--dim", type=int)
    opt(sp, "--fix-exponent", action="store_true")

    sp = add("solve", "lowest levels at one lam")
    opt(sp, "--lambda", dest="lam", type=float)
    opt(sp, "--levels", type=int)
    opt(sp, "--dim", type=int)

    for name, help_ in (
        ("scan", "spectrum over a lam grid"),
        ("crossings", "avoided crossings over a lam grid"),
        ("deltax", "sqrt(<x^2>) trace of one level with jump annotations"),
    ):
        sp = add(name, help_)
        grid(sp)
        opt(sp, "--levels", type=int)
        opt(sp, "--dim", type=int)
        if name == "deltax":
            opt(sp, "--level", type=int)
            opt(sp, "--threshold", type=float)

    sp = add("figure", "plot-ready data for one figure")
    sp.add_argument("tag", choices=FIGURES)
    return parser


_RUN_FLAGS = ("command", "format", "output", "no_timestamp", "config")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.config:
        try:
            text = Path(ns.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        base = RunConfig.from_output(text)
        if base.command != ns.command:
            raise UsageError(f"config file holds a {base.command!r} run, not {ns.command!r}")
        params = dict(base.parameters)
    else:
        params = {}
    for k, v in vars(ns).items():
        if k in _RUN_FLAGS:
            continue
        if k == "grid":
            v = [v[0], v[1], int(v[2])]
        params[k] = v
    return RunConfig(ns.command, params)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        config = config_from_args(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config, ns.format, ns.output, not ns.no_timestamp)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
