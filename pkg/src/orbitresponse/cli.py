"""Command-line front end.

Every flag can also be set through an environment variable named
``ORBITRESPONSE_<FLAG>`` (``ORBITRESPONSE_NMAX``, ``ORBITRESPONSE_THREADS``, ...);
an explicit flag wins over the environment, which wins over the config file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import mpmath
import numpy as np

from . import anosov as an
from .config import ConfigError, ExperimentConfig, load
from .determinant import DetCoeffs, coefficients, decay_fit
from .orbits import enumerate_fixed_points
from .response import circle_response
from .traces import TraceSet, compute_traces
from .validation import Settings, report_json, run_all

ENV_PREFIX = "ORBITRESPONSE_"
COMMANDS = ("dump-orbits", "traces", "coeffs", "response", "validate", "anosov-response")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, 17, min_fixed=-np.inf, max_fixed=np.inf) if v else "0"
    return f"{float(v) + 0.0:.17g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None, name: str | None = None) -> None:
    """Write to ``out`` (a file, or a directory when ``name`` is given) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if name is not None:
        path.mkdir(parents=True, exist_ok=True)
        path = path / name
    path.write_text(text)


TRACE_HEADER = ("n", "b", "db_du", "db_dt", "d2b_dudt")
COEFF_HEADER = ("n", "a", "da_du", "da_dt", "d2a_dudt")


def _traces(cfg: ExperimentConfig) -> TraceSet:
    if cfg.mode == "circle":
        return compute_traces(cfg.family, cfg.observable, cfg.n_max, cfg.scalar)
    return an.anosov_traces(cfg.family, cfg.observable, cfg.n_max, cfg.h)


def cmd_dump_orbits(cfg: ExperimentConfig, args) -> None:
    if cfg.mode == "circle":
        header = ("n", "branch", "x", "multiplier", "curvature", "xn", "xn_prime", "gsum")
        rows = []
        for n in range(1, cfg.n_max + 1):
            fps = enumerate_fixed_points(cfg.family, n, cfg.observable, scalar=cfg.scalar)
            for i in range(len(fps)):
                rows.append((n, fps.branch[i], fps.x[i], fps.multiplier[i], fps.curvature[i],
                             fps.xn[i], fps.xn_prime[i], fps.gsum[i]))
    else:
        header = ("n", "x1", "x2", "det_shift", "gsum")
        rows = []
        for n in range(1, cfg.n_max + 1):
            fps = an.lattice_fixed_points(cfg.family, n)
            gs = fps.gsum(cfg.observable)
            rows.extend((n, fps.x[i, 0], fps.x[i, 1], fps.det_shift[i], gs[i]) for i in range(len(fps)))
    _emit(_csv(header, rows), args.out)


def cmd_traces(cfg: ExperimentConfig, args) -> None:
    _emit(_csv(TRACE_HEADER, _traces(cfg).rows()), args.out)


def cmd_coeffs(cfg: ExperimentConfig, args) -> None:
    coeffs: DetCoeffs = coefficients(_traces(cfg))
    text = _csv(COEFF_HEADER, coeffs.rows())
    if args.fit:
        fit = decay_fit(coeffs, cfg.mode)
        text += _json(asdict(fit))
    _emit(text, args.out)


def cmd_response(cfg: ExperimentConfig, args) -> None:
    if cfg.mode != "circle":
        raise ConfigError("'response' needs mode = \"circle\"; use 'anosov-response' for torus configs")
    report = circle_response(cfg.family, cfg.observable, cfg.n_max, cfg.scalar, abel=cfg.abel)
    _emit(report.to_json() + "\n", args.out)


def cmd_anosov_response(cfg: ExperimentConfig, args) -> None:
    if cfg.mode != "torus":
        raise ConfigError("'anosov-response' needs mode = \"torus\"")
    report, traces = an.anosov_response(cfg.family, cfg.observable, cfg.n_max, cfg.h)
    js, table = report.to_json() + "\n", _csv(TRACE_HEADER, traces.rows())
    if args.out is None:
        sys.stdout.write(js + "\n" + table)
    else:
        _emit(js, args.out, "response.json")
        _emit(table, args.out, "traces.csv")


def cmd_validate(cfg: ExperimentConfig | None, args) -> int:
    settings = cfg.validation if cfg is not None else Settings()
    settings.threads = args.threads
    if args.seed is not None:
        settings.seed = args.seed
    results = run_all(settings)
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit(report_json(results) + "\n", args.out)
    return 0 if all(r.passed for r in results) else 1


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="orbitresponse",
        description="Linear response of expanding circle maps and perturbed cat maps from periodic orbits.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", default=_env("CONFIG"), help="TOML experiment config")
    p.add_argument("--nmax", type=int, default=_env("NMAX"), help="truncation order (overrides config)")
    p.add_argument("--out", default=_env("OUT"), help="output file (directory for anosov-response)")
    p.add_argument("--threads", type=int, default=int(_env("THREADS", 1)), help="worker cap")
    p.add_argument("--fit", action="store_true", default=_env("FIT", "") not in ("", "0"),
                   help="append the coefficient decay fit (coeffs)")
    p.add_argument("--seed", type=int, default=_env("SEED"), help="Monte Carlo seed")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load(args.config) if args.config else None
        if cfg is not None and args.nmax is not None:
            if args.nmax < 1:
                raise ConfigError("--nmax must be >= 1")
            cfg.n_max = args.nmax
        if args.command == "validate":
            return cmd_validate(cfg, args)
        if cfg is None:
            raise ConfigError(f"'{args.command}' requires --config")
        if cfg.family is None:
            raise ConfigError("missing required field 'map'")
        handler = {
            "dump-orbits": cmd_dump_orbits,
            "traces": cmd_traces,
            "coeffs": cmd_coeffs,
            "response": cmd_response,
            "anosov-response": cmd_anosov_response,
        }[args.command]
        handler(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OverflowError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
