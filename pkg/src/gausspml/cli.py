"""Command-line surface.

One command per process: parse a JSON config plus flags into a
RunConfig, run the requested computation, and emit a CSV or JSON
table. Exit status 0 on success (for verify: all checks passed),
1 on failing checks, 2 on invalid configuration, 3 on numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .envelope import envelope_bruteforce_lower_bound, envelope_curve
from .errors import DomainError, GaussPmlError, ModelError, NumericalError
from .leakage import (
    Interval,
    event_mass,
    interval_leakage,
    partition_to_json,
    set_leakage_oracle,
)
from .mechanism import Mechanism
from .numerics import QuadratureConfig
from .priors import GaussianPrior, prior_from_json
from .verify import _SUITE, run_suite

_COMMANDS = ("envelope", "leakage", "posterior", "verify", "search")


class ConfigError(GaussPmlError):
    """Configuration rejected before any computation started."""


@dataclass(frozen=True)
class RunConfig:
    """Fully validated description of one CLI run."""

    prior: object
    sigma_n: float
    quadrature: QuadratureConfig
    command: str | None
    command_args: dict
    output_path: str | None
    format: str
    seed: int


# -- config parsing ----------------------------------------------------------


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _real(value, pointer, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{pointer}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{pointer}: must be finite")
    if positive and v <= 0.0:
        raise ConfigError(f"{pointer}: must be positive")
    return v


def _mechanism_fields(obj, pointer):
    _require(isinstance(obj, dict), f"{pointer or '/'}: expected an object")
    allowed = {"prior", "sigma_n", "quadrature"}
    for key in obj:
        _require(key in allowed, f"{pointer}/{key}: unknown field")
    _require("prior" in obj, f"{pointer}/prior: missing required field")
    _require("sigma_n" in obj, f"{pointer}/sigma_n: missing required field")
    try:
        prior = prior_from_json(obj["prior"], pointer=f"{pointer}/prior")
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    sigma_n = _real(obj["sigma_n"], f"{pointer}/sigma_n", positive=True)
    quad_obj = obj.get("quadrature", {})
    _require(isinstance(quad_obj, dict), f"{pointer}/quadrature: expected an object")
    quad_allowed = {"truncation_halfwidth", "panel_count", "abs_tol"}
    for key in quad_obj:
        _require(key in quad_allowed, f"{pointer}/quadrature/{key}: unknown field")
    try:
        quadrature = QuadratureConfig(**quad_obj)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"{pointer}/quadrature: {exc}") from exc
    return prior, sigma_n, quadrature


def parse_config(path):
    """Read and validate a JSON run configuration.

    The mechanism may sit under a "mechanism" key or flat at the top
    level (prior/sigma_n/quadrature). Unknown fields are rejected with
    their JSON-pointer path; defaults are truncation_halfwidth 10,
    panel_count 2048, format csv, seed 0.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    _require(isinstance(obj, dict), "/: expected a JSON object")

    flat = not ("mechanism" in obj)
    mech_allowed = {"prior", "sigma_n", "quadrature"} if flat else set()
    allowed = {"mechanism", "command", "command_args", "output_path", "format", "seed"}
    for key in obj:
        _require(key in allowed or key in mech_allowed, f"/{key}: unknown field")
    if flat:
        prior, sigma_n, quadrature = _mechanism_fields(
            {k: obj[k] for k in mech_allowed if k in obj}, ""
        )
    else:
        prior, sigma_n, quadrature = _mechanism_fields(obj["mechanism"], "/mechanism")

    command = obj.get("command")
    if command is not None:
        _require(
            command in _COMMANDS,
            f"/command: must be one of {', '.join(_COMMANDS)}; got {command!r}",
        )
    args = obj.get("command_args", {})
    _require(isinstance(args, dict), "/command_args: expected an object")
    output_path = obj.get("output_path")
    if output_path is not None:
        _require(isinstance(output_path, str) and output_path, "/output_path: expected a non-empty string")
    fmt = obj.get("format", "csv")
    _require(fmt in ("csv", "json"), f"/format: must be csv or json; got {fmt!r}")
    seed = obj.get("seed", 0)
    _require(
        isinstance(seed, int) and not isinstance(seed, bool),
        "/seed: expected an integer",
    )
    return RunConfig(
        prior=prior,
        sigma_n=sigma_n,
        quadrature=quadrature,
        command=command,
        command_args=dict(args),
        output_path=output_path,
        format=fmt,
        seed=seed,
    )


# -- flag parsing ------------------------------------------------------------


def _parse_grid(spec, name):
    """Accept "lo:hi:step" or a comma list of numbers."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        _require(len(parts) == 3, f"--{name}: expected lo:hi:step, got {spec!r}")
        try:
            lo, hi, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"--{name}: non-numeric component in {spec!r}") from None
        _require(step > 0.0, f"--{name}: step must be positive")
        _require(hi >= lo, f"--{name}: needs hi >= lo")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + k * step for k in range(n)]
    try:
        values = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"--{name}: non-numeric entry in {spec!r}") from None
    _require(bool(values), f"--{name}: empty grid")
    return values


def _parse_endpoint(token, name):
    t = token.strip().lower()
    if t in ("-inf", "-infinity"):
        return -math.inf
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"--{name}: bad endpoint {token!r}") from None


def _parse_interval_flag(spec):
    parts = spec.split(",")
    _require(len(parts) == 2, f"--interval: expected lo,hi; got {spec!r}")
    return [_parse_endpoint(parts[0], "interval"), _parse_endpoint(parts[1], "interval")]


def _endpoint_json(v):
    if v == -math.inf:
        return "-inf"
    if v == math.inf:
        return "inf"
    return float(v)


def _coerce_endpoint(value, pointer):
    if isinstance(value, str):
        if value == "-inf":
            return -math.inf
        if value == "inf":
            return math.inf
        raise ConfigError(f"{pointer}: bad endpoint {value!r}")
    return _real_or_inf(value, pointer)


def _real_or_inf(value, pointer):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{pointer}: expected a number, got {value!r}")
    return float(value)


def _validate_args(command, args):
    """Per-command validation of command_args, before any computation."""
    known = {
        "envelope": {"deltas", "max_cells"},
        "search": {"deltas", "max_cells"},
        "leakage": {"interval", "union"},
        "posterior": {"y_grid"},
        "verify": {"suite"},
    }[command]
    for key in args:
        _require(key in known, f"/command_args/{key}: unknown field for {command}")

    if command in ("envelope", "search"):
        _require("deltas" in args, "/command_args/deltas: missing (or pass --deltas)")
        deltas = args["deltas"]
        _require(
            isinstance(deltas, (list, tuple)) and deltas,
            "/command_args/deltas: expected a non-empty list",
        )
        for i, d in enumerate(deltas):
            v = _real(d, f"/command_args/deltas/{i}")
            _require(0.0 < v < 1.0, f"/command_args/deltas/{i}: must lie in (0, 1)")
        mc = args.get("max_cells", 4)
        _require(
            isinstance(mc, int) and not isinstance(mc, bool) and 1 <= mc <= 6,
            "/command_args/max_cells: expected an integer in [1, 6]",
        )
        args["deltas"] = [float(d) for d in deltas]
        args["max_cells"] = mc
    elif command == "leakage":
        has_iv, has_un = "interval" in args, "union" in args
        _require(
            has_iv != has_un,
            "/command_args: leakage needs exactly one of interval or union",
        )
        if has_iv:
            iv = args["interval"]
            _require(
                isinstance(iv, (list, tuple)) and len(iv) == 2,
                "/command_args/interval: expected [lo, hi]",
            )
            lo = _coerce_endpoint(iv[0], "/command_args/interval/0")
            hi = _coerce_endpoint(iv[1], "/command_args/interval/1")
            _require(lo < hi, "/command_args/interval: needs lo < hi")
            args["interval"] = [lo, hi]
        else:
            un = args["union"]
            _require(
                isinstance(un, (list, tuple)) and un,
                "/command_args/union: expected a non-empty list of [lo, hi] pairs",
            )
            cells = []
            for i, pair in enumerate(un):
                _require(
                    isinstance(pair, (list, tuple)) and len(pair) == 2,
                    f"/command_args/union/{i}: expected [lo, hi]",
                )
                lo = _coerce_endpoint(pair[0], f"/command_args/union/{i}/0")
                hi = _coerce_endpoint(pair[1], f"/command_args/union/{i}/1")
                _require(lo < hi, f"/command_args/union/{i}: needs lo < hi")
                cells.append([lo, hi])
            args["union"] = cells
    elif command == "posterior":
        _require("y_grid" in args, "/command_args/y_grid: missing (or pass --y-grid)")
        ys = args["y_grid"]
        _require(
            isinstance(ys, (list, tuple)) and ys,
            "/command_args/y_grid: expected a non-empty list",
        )
        args["y_grid"] = [_real(y, f"/command_args/y_grid/{i}") for i, y in enumerate(ys)]
    elif command == "verify":
        suite = args.get("suite", "all")
        _require(isinstance(suite, str) and suite, "/command_args/suite: expected a string")
        if suite != "all":
            for name in suite.split(","):
                _require(
                    name.strip() in _SUITE,
                    f"/command_args/suite: unknown check {name.strip()!r}",
                )
        args["suite"] = suite
    return args


def _resolve(ns):
    """Merge config file and flags into a validated RunConfig."""
    if ns.config is not None:
        rc = parse_config(ns.config)
    else:
        rc = RunConfig(
            prior=GaussianPrior(1.0),
            sigma_n=1.0,
            quadrature=QuadratureConfig(),
            command=None,
            command_args={},
            output_path=None,
            format="csv",
            seed=0,
        )
    command = ns.command or rc.command
    _require(command is not None, "no command: give a subcommand or a config 'command' field")

    # config command_args belong to the config's own command; drop them
    # when the subcommand overrides it
    args = dict(rc.command_args) if rc.command in (None, command) else {}
    if getattr(ns, "deltas", None) is not None:
        args["deltas"] = _parse_grid(ns.deltas, "deltas")
    if getattr(ns, "interval", None) is not None:
        args.pop("union", None)
        args["interval"] = _parse_interval_flag(ns.interval)
    if getattr(ns, "y_grid", None) is not None:
        args["y_grid"] = _parse_grid(ns.y_grid, "y-grid")
    if getattr(ns, "suite", None) is not None:
        args["suite"] = ns.suite
    if getattr(ns, "max_cells", None) is not None:
        args["max_cells"] = ns.max_cells
    args = _validate_args(command, args)

    return RunConfig(
        prior=rc.prior,
        sigma_n=rc.sigma_n,
        quadrature=rc.quadrature,
        command=command,
        command_args=args,
        output_path=ns.out if ns.out is not None else rc.output_path,
        format=ns.format if ns.format is not None else rc.format,
        seed=ns.seed if ns.seed is not None else rc.seed,
    )


# -- output rendering --------------------------------------------------------


def _fmt(x):
    """10 significant digits; scientific for |x| >= 1e6 or 0 < |x| < 1e-4."""
    x = float(x)
    a = abs(x)
    if a >= 1e6 or 0.0 < a < 1e-4:
        return f"{x:.9e}"
    return f"{x:.10g}"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _json_text(records):
    return json.dumps(records, indent=2) + "\n"


def _cell_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt(v)
    if isinstance(v, (dict, list, tuple)) or v is None:
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def _render(header, records, fmt):
    if fmt == "json":
        return _json_text(records)
    rows = [[_cell_value(rec[col]) for col in header] for rec in records]
    return _csv_text(header, rows)


# -- command execution -------------------------------------------------------


def _run_envelope(m, rc):
    points = envelope_curve(m, rc.command_args["deltas"], max_cells=rc.command_args["max_cells"])
    records = [
        {
            "delta": p.delta,
            "epsilon_d_nats": float(p.epsilon_d),
            "regime": p.regime,
            "witness_json": partition_to_json(p.witness),
        }
        for p in points
    ]
    return _render(("delta", "epsilon_d_nats", "regime", "witness_json"), records, rc.format), True


def _run_search(m, rc):
    records = []
    for d in rc.command_args["deltas"]:
        value, witness = envelope_bruteforce_lower_bound(m, d, rc.command_args["max_cells"])
        records.append(
            {
                "delta": d,
                "max_cells": rc.command_args["max_cells"],
                "epsilon_lb_nats": float(value),
                "witness_json": partition_to_json(witness),
            }
        )
    return _render(("delta", "max_cells", "epsilon_lb_nats", "witness_json"), records, rc.format), True


def _run_leakage(m, rc):
    args = rc.command_args
    if "interval" in args:
        cells = [Interval(*args["interval"])]
        leak = interval_leakage(m, cells[0])
    else:
        cells = [Interval(lo, hi) for lo, hi in args["union"]]
        leak = set_leakage_oracle(m, cells)
    event = [{"lo": _endpoint_json(c.lo), "hi": _endpoint_json(c.hi)} for c in cells]
    records = [
        {
            "event_json": event,
            "mass": float(event_mass(m, cells)),
            "leakage_nats": float(leak),
        }
    ]
    return _render(("event_json", "mass", "leakage_nats"), records, rc.format), True


def _run_posterior(m, rc):
    ys = np.asarray(rc.command_args["y_grid"], dtype=float)
    means = m.posterior_mean(ys)
    variances = m.posterior_variance(ys)
    records = [
        {
            "y": float(y),
            "posterior_mean": float(mu),
            "posterior_variance": float(v),
        }
        for y, mu, v in zip(ys, means, variances)
    ]
    return _render(("y", "posterior_mean", "posterior_variance"), records, rc.format), True


def _run_verify(m, rc):
    results = run_suite(m, suite=rc.command_args.get("suite", "all"), seed=rc.seed)
    records = [
        {
            "name": r.name,
            "passed": r.passed,
            "worst_violation": r.worst_violation,
            "location": list(r.location) if isinstance(r.location, tuple) else r.location,
            "tolerance": r.tolerance,
            "details": r.details,
        }
        for r in results
    ]
    header = ("name", "passed", "worst_violation", "location", "tolerance", "details")
    return _render(header, records, rc.format), all(r.passed for r in results)


_RUNNERS = {
    "envelope": _run_envelope,
    "search": _run_search,
    "leakage": _run_leakage,
    "posterior": _run_posterior,
    "verify": _run_verify,
}


def run(rc):
    """Execute a validated RunConfig; returns (output text, success)."""
    _validate_args(rc.command, dict(rc.command_args))
    m = Mechanism(rc.prior, rc.sigma_n, rc.quadrature)
    return _RUNNERS[rc.command](m, rc)


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pml-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# -- entry point -------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pml",
        description=(
            "Pointwise maximal leakage for the additive Gaussian noise channel: "
            "envelope curves, event leakage, posterior statistics, verification "
            "checks, and brute-force witness search."
        ),
    )
    parser.add_argument("--config", help="JSON run configuration", default=None)
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON run configuration", default=None)
    shared.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    shared.add_argument("--out", default=None, help="output file (default: stdout)")
    shared.add_argument("--format", choices=("csv", "json"), default=None)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("envelope", parents=[shared], help="deterministic-leakage envelope over a delta grid")
    p.add_argument("--deltas", default=None, help="delta grid: lo:hi:step or comma list")
    p.add_argument("--max-cells", dest="max_cells", type=int, default=None, help="fallback search budget per side")

    p = sub.add_parser("search", parents=[shared], help="brute-force lower-bound witness search")
    p.add_argument("--deltas", default=None, help="delta grid: lo:hi:step or comma list")
    p.add_argument("--max-cells", dest="max_cells", type=int, default=None, help="interval budget")

    p = sub.add_parser("leakage", parents=[shared], help="leakage of an interval or finite union")
    p.add_argument("--interval", default=None, help="event endpoints lo,hi (-inf/inf allowed)")

    p = sub.add_parser("posterior", parents=[shared], help="posterior mean and variance table")
    p.add_argument("--y-grid", dest="y_grid", default=None, help="observation grid: lo:hi:step or comma list")

    p = sub.add_parser("verify", parents=[shared], help="run numerical verification checks")
    p.add_argument("--suite", default=None, help='"all" or a comma list of check names')
    return parser


_VALUE_FLAGS = ("--deltas", "--interval", "--y-grid")


def _fuse_leading_dash_values(argv):
    """Turn ["--y-grid", "-4:4:0.5"] into ["--y-grid=-4:4:0.5"].

    argparse otherwise mistakes grid values with a leading minus for
    option strings.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok in _VALUE_FLAGS
            and nxt is not None
            and nxt.startswith("-")
            and not nxt.startswith("--")
            and len(nxt) > 1
        ):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    ns = _build_parser().parse_args(_fuse_leading_dash_values(list(argv)))
    for field in ("deltas", "interval", "y_grid", "suite", "max_cells", "seed", "out", "format"):
        if not hasattr(ns, field):
            setattr(ns, field, None)
    try:
        rc = _resolve(ns)
        text, ok = run(rc)
        if rc.output_path is not None:
            _write_atomic(rc.output_path, text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"pml: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        op = exc.operation or "computation"
        print(f"pml: numerical failure in {op}: {exc}", file=sys.stderr)
        return 3
    except (DomainError, ModelError) as exc:
        print(f"pml: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pml: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
