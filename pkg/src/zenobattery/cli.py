"""Command-line front end: ``simulate``, ``scan``, ``peaks`` and ``verify``.

Every CSV starts with a ``#`` block echoing the resolved configuration.
Stripping one leading ``# `` from each header line yields a config file
(summary lines stay comments) that reproduces the run.

Exit status: 0 success, 1 failed verification, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import math
import os
import sys
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import __version__, analysis, config, engine
from .errors import (
    ConfigError,
    ParameterError,
    RegimeMismatchError,
    ScheduleError,
    ZenoBatteryError,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
_CONFIG_ERRORS = (ConfigError, ParameterError, ScheduleError, RegimeMismatchError)


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def fmt(x) -> str:
    """12 significant digits, locale independent."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.12g" % float(x)


def _option_parser() -> _Parser:
    parser = _Parser(add_help=False)
    parser.add_argument("--scenario")
    parser.add_argument("--config")
    parser.add_argument("--out")
    parser.add_argument("--jobs")
    parser.add_argument("--window")
    parser.add_argument("--fit", action="store_true", default=None)
    return parser


def build_config(options: Sequence[str]) -> config.RunConfig:
    """Resolve a configuration from command-line options (without the subcommand).

    Besides the named flags, any schema key may be overridden with
    ``--key value`` (dashes and underscores are interchangeable).

    Raises:
        ConfigError: unknown key, missing value or invalid value.
    """
    try:
        known, extra = _option_parser().parse_known_args(list(options))
    except _ArgumentError as exc:
        raise ConfigError(str(exc)) from None
    overrides: dict = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        key, _, inline = token[2:].partition("=")
        key = key.replace("-", "_")
        if key not in config.SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        if inline:
            text = inline
        elif i + 1 < len(extra):
            i += 1
            text = extra[i]
        else:
            raise ConfigError(f"key {key!r}: missing value")
        overrides[key] = config.coerce(key, text, "command line")
        i += 1
    for key in ("out", "jobs", "window"):
        value = getattr(known, key)
        if value is not None:
            overrides[key] = config.coerce(key, value, "command line")
    if known.fit:
        overrides["fit"] = True
    file_values = config.load_file(known.config) if known.config else {}
    return config.resolve(known.scenario, file_values, overrides)


def _header(stream: TextIO, cfg: config.RunConfig, extra: Iterable[str] = ()) -> None:
    stream.write(f"## zenobattery {__version__}\n")
    for line in cfg.echo():
        stream.write(f"# {line}\n")
    for line in extra:
        stream.write(f"## {line}\n")


def _rows(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(fmt(x) for x in row) + "\n")


def simulate(cfg: config.RunConfig) -> tuple[engine.SimulationRun, analysis.FitResult | None]:
    p = cfg.params()
    run = engine.run_schedule(
        p,
        cfg.schedule(),
        pulse_stride=cfg["pulse_stride"],
        free_dt=cfg["free_dt"] * math.pi / p.g,
    )
    fit = analysis.fit_charging_curve(run.series, p) if cfg["fit"] else None
    return run, fit


def fit_summary(cfg: config.RunConfig, fit: analysis.FitResult) -> list[str]:
    g = cfg["g"]
    return [
        f"fit A={fmt(fit.a)} A/capacity={fmt(fit.a / cfg.params().capacity)}",
        f"fit T={fmt(fit.t_charge)} gT/pi={fmt(g * fit.t_charge / math.pi)} "
        f"T/(pi/2g)={fmt(fit.t_charge * 2 * g / math.pi)}",
        f"fit residual={fmt(fit.residual)} resolved={fmt(fit.resolved)}",
    ]


def write_simulation(stream: TextIO, cfg: config.RunConfig) -> analysis.FitResult | None:
    """Run the configured schedule and write its CSV to ``stream``."""
    run, fit = simulate(cfg)
    s = run.series
    _header(stream, cfg, fit_summary(cfg, fit) if fit is not None else ())
    _rows(stream, ("t", "gt_over_pi", "E_c", "E_b", "phase_index"),
          zip(s.times, s.gt_over_pi, s.ec, s.eb, s.phase_index))
    return fit


def scan(cfg: config.RunConfig) -> analysis.ScanResult:
    p = cfg.params()
    taus, coarse = analysis.tau_grid(
        p, cfg["grid_start"], cfg["grid_stop"], cfg["grid_step"], cfg["grid_refine"]
    )
    jobs = cfg["jobs"] or os.cpu_count() or 1
    return analysis.scan_tau(p, taus, window=cfg["window"] * math.pi / p.g, parallel=jobs, coarse=coarse)


def scan_summary(result: analysis.ScanResult) -> list[str]:
    scaled = lambda xs: " ".join(fmt(x) for x in analysis.tau_scaled(np.asarray(xs, dtype=float), result.g))
    lines = [
        f"predicted_peaks_tau_scaled={scaled(result.predicted_peaks)}",
        f"detected_peaks_tau_scaled={scaled(result.taus[list(result.detected_peaks)])}",
    ]
    if result.valley_slope is None:
        lines.append("valley_slope=none")
    else:
        lines.append(f"valley_slope={fmt(result.valley_slope)} valley_residual={fmt(result.valley_residual)}")
    return lines


def write_scan(stream: TextIO, cfg: config.RunConfig, result: analysis.ScanResult) -> None:
    predicted = result.predicted_peaks
    detected = set(result.detected_peaks)
    _header(stream, cfg, scan_summary(result))
    rows = []
    for i, (tau, fit) in enumerate(zip(result.taus, result.fits)):
        nearest = predicted[np.argmin(np.abs(predicted - tau))]
        rows.append((tau, analysis.tau_scaled(tau, result.g), fit.a, fit.t_charge, fit.residual,
                     fit.resolved, i in detected, analysis.tau_scaled(nearest, result.g)))
    _rows(stream, ("tau", "tau_scaled", "A", "T", "residual", "resolved",
                   "is_detected_peak", "nearest_predicted_peak"), rows)


def write_peaks(stream: TextIO, cfg: config.RunConfig) -> None:
    p = cfg.params()
    taus = analysis.predict_peaks(p, cfg["n_max"])
    _header(stream, cfg)
    _rows(stream, ("n", "tau", "tau_scaled"),
          ((n, tau, analysis.tau_scaled(tau, p.g)) for n, tau in enumerate(taus, start=1)))


@contextlib.contextmanager
def _output(path: str):
    """Buffer the CSV and only touch ``path`` once everything succeeded."""
    buf = io.StringIO()
    yield buf
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _cmd_simulate(cfg: config.RunConfig) -> int:
    with _output(cfg["out"]) as buf:
        fit = write_simulation(buf, cfg)
    if fit is not None:
        target = sys.stdout if cfg["out"] else sys.stderr
        for line in fit_summary(cfg, fit):
            print(line, file=target)
    return EXIT_OK


def _cmd_scan(cfg: config.RunConfig) -> int:
    result = scan(cfg)
    with _output(cfg["out"]) as buf:
        write_scan(buf, cfg, result)
    target = sys.stdout if cfg["out"] else sys.stderr
    for line in scan_summary(result):
        print(line, file=target)
    return EXIT_OK


def _cmd_peaks(cfg: config.RunConfig) -> int:
    with _output(cfg["out"]) as buf:
        write_peaks(buf, cfg)
    return EXIT_OK


def _cmd_verify(level: str) -> int:
    from . import verify

    failures = 0
    total = 0.0
    for res in verify.run_checks(level):
        status = "PASS" if res.ok else "FAIL"
        failures += not res.ok
        total += res.seconds
        print(f"{status} {res.name} ({res.seconds:.2f} s): {res.detail}", flush=True)
    print(f"{'all checks passed' if not failures else f'{failures} check(s) failed'} in {total:.2f} s")
    return EXIT_VERIFY if failures else EXIT_OK


_COMMANDS = {"simulate": _cmd_simulate, "scan": _cmd_scan, "peaks": _cmd_peaks}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    usage = (
        "zenobattery {simulate,scan,peaks} [--scenario NAME] [--config PATH] [--out PATH]\n"
        "                   [--jobs N] [--window W] [--fit] [--KEY VALUE ...]\n"
        "       zenobattery verify [fast|full]"
    )
    if not argv or argv[0] in ("-h", "--help"):
        print(f"usage: {usage}")
        print("scenarios: " + ", ".join(config.PRESETS))
        print("keys: " + ", ".join(config.SCHEMA))
        return EXIT_OK if argv else EXIT_CONFIG
    if argv[0] == "--version":
        print(__version__)
        return EXIT_OK
    command, options = argv[0], argv[1:]
    try:
        if command == "verify":
            if len(options) > 1 or (options and options[0] not in ("fast", "full")):
                raise ConfigError("verify takes one optional level: fast or full")
            return _cmd_verify(options[0] if options else "fast")
        if command not in _COMMANDS:
            raise ConfigError(f"unknown command {command!r}; choose simulate, scan, peaks or verify")
        return _COMMANDS[command](build_config(options))
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ZenoBatteryError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
