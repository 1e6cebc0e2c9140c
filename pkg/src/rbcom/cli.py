"""Command-line front end: single points, sweeps, thresholds and demos.

Every command writes CSV (or ``key = value`` lines) to stdout. Exit codes:
0 success, 1 numerical failure, 2 usage or configuration error.

A config argument is either a file path or ``preset:NAME`` for one of the
bundled recipes (``rbcom presets`` lists them).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import chain, echo, gain
from .config import (
    SWEEP_VARIABLES,
    ConfigError,
    SystemConfig,
    ValidatedConfig,
    load_sweep_recipe,
    loads_config,
    validate,
    with_value,
)
from .metrics import led_budget, rbcom_budget
from .spectral import prbs_bandlimited
from .steady import NoSignChange, carrier_amplitude, find_threshold

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

# validity domain of each sweep variable: (low, high, low_inclusive, high_inclusive)
SWEEP_DOMAINS = {
    "depth_m": (0.0, 0.5, True, True),
    "r_s": (0.0, 1.0, True, False),
    "eta_d": (0.0, 1.0, False, True),
    "distance_d": (0.0, math.inf, False, False),
    "power_Pin": (0.0, math.inf, True, False),
}

SWEEP_COLUMNS = ("Ac", "capacity", "I_sig", "snr", "lasing")

# time-domain demos at desk scale: frequencies times 1e-6, delays times 1e6
DEMO_SCALE = 1e-6


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """Fixed notation for ``1e-3 <= |v| <= 1e4``, scientific otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    v = float(value)
    if not math.isfinite(v):
        return repr(v)
    if 1e-3 <= abs(v) <= 1e4:
        return f"{v:.10g}"
    return f"{v:.9e}"


# ---------------------------------------------------------------------------
# configuration handling


def _preset_names():
    root = resources.files("rbcom") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def _config_text(ref: str):
    """Return ``(text, label)`` for a path or ``preset:NAME``."""
    if ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        res = resources.files("rbcom") / "presets" / f"{name}.cfg"
        if not res.is_file():
            raise FileNotFoundError(f"config not found: unknown preset {name!r} (have {', '.join(_preset_names())})")
        return res.read_text(), ref
    path = Path(ref)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    return path.read_text(), str(path)


def _recipe(ref: str) -> dict:
    if ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        with resources.as_file(resources.files("rbcom") / "presets" / f"{name}.cfg") as p:
            return load_sweep_recipe(p)
    return load_sweep_recipe(ref)


def apply_overrides(config: SystemConfig, assignments) -> SystemConfig:
    """Apply ``--set`` items: ``section.key=value`` or a sweep variable name."""
    for item in assignments or ():
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = float(raw)
        except ValueError:
            raise UsageError(f"--set {key}: not a number ({raw!r})") from None
        if key in SWEEP_VARIABLES:
            config = with_value(config, key, value)
            continue
        section, dot, name = key.partition(".")
        group = getattr(config, section, None) if dot else None
        if group is None or name not in {f.name for f in fields(group)}:
            raise UsageError(f"--set: unknown parameter {key!r}")
        config = replace(config, **{section: replace(group, **{name: value})})
    return config


def _load(args) -> ValidatedConfig:
    text, label = _config_text(args.config)
    config = apply_overrides(loads_config(text, source=label), getattr(args, "set", None))
    return validate(config)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRequest:
    config: SystemConfig
    variable: str
    start: float
    stop: float
    num_points: int
    led: bool = False

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise UsageError(f"unknown sweep variable {self.variable!r}; expected one of {', '.join(SWEEP_VARIABLES)}")
        if self.num_points < 2:
            raise UsageError("num_points must be >= 2")
        if not self.start < self.stop:
            raise UsageError("range start must be < stop")
        lo, hi, lo_in, hi_in = SWEEP_DOMAINS[self.variable]
        ok_lo = self.start >= lo if lo_in else self.start > lo
        ok_hi = self.stop <= hi if hi_in else self.stop < hi
        if not (ok_lo and ok_hi):
            raise UsageError(f"range outside the validity domain of {self.variable}")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num_points)

    @property
    def columns(self):
        cols = (self.variable,) + SWEEP_COLUMNS
        return cols + ("led_capacity",) if self.led else cols


@dataclass(frozen=True)
class SweepRecord:
    value: float
    carrier_amplitude_Ac: float
    capacity: float
    I_sig: float
    snr: float
    lasing: bool
    led_capacity: float | None = None

    def row(self):
        out = [self.value, self.carrier_amplitude_Ac, self.capacity, self.I_sig, self.snr, self.lasing]
        if self.led_capacity is not None:
            out.append(self.led_capacity)
        return [fmt(v) for v in out]


def evaluate_point(config: SystemConfig, variable: str, value: float, led: bool = False) -> SweepRecord:
    """One sweep record; an invalid point yields ``lasing=false`` and zeros."""
    cfg = with_value(config, variable, value)
    led_cap = None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vcfg = validate(cfg)
            ss = carrier_amplitude(vcfg)
            budget = rbcom_budget(vcfg)
    except (ConfigError, ValueError, ZeroDivisionError, OverflowError):
        rec = SweepRecord(value, 0.0, 0.0, 0.0, 0.0, False)
    else:
        if ss.lasing:
            rec = SweepRecord(value, ss.carrier_amplitude_Ac, budget.capacity, budget.mean_current, budget.snr, True)
        else:
            rec = SweepRecord(value, 0.0, 0.0, 0.0, 0.0, False)
    if led:
        try:
            led_cap = led_budget(
                cfg.led, cfg.detector, cfg.cavity.alpha_air, cfg.cavity.distance_d,
                cfg.modulation.bandwidth_Bx, cfg.constants,
            ).capacity
        except ValueError:
            led_cap = 0.0
        rec = replace(rec, led_capacity=led_cap)
    return rec


def _evaluate_star(args):
    return evaluate_point(*args)


def worker_count() -> int:
    raw = os.environ.get("RBCOM_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"RBCOM_WORKERS must be a positive integer (got {raw!r})") from None
    if n < 1:
        raise UsageError(f"RBCOM_WORKERS must be a positive integer (got {raw!r})")
    return n


def run_sweep(request: SweepRequest, workers: int = 1):
    """Evaluate every grid point; results come back in grid order."""
    jobs = [(request.config, request.variable, float(v), request.led) for v in request.grid()]
    if workers <= 1:
        return [_evaluate_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def write_sweep_csv(request: SweepRequest, records, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(request.columns)
    for rec in records:
        writer.writerow(rec.row())


def parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--range expects START:STOP:N, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--range expects START:STOP:N, got {text!r}") from None


# ---------------------------------------------------------------------------
# commands


def _print_kv(pairs, out):
    width = max(len(k) for k, _, _ in pairs)
    for key, value, unit in pairs:
        suffix = f" {unit}" if unit else ""
        print(f"{key:<{width}} = {fmt(value)}{suffix}", file=out)


def cmd_point(args, out) -> int:
    vcfg = _load(args)
    ss = carrier_amplitude(vcfg)
    b = rbcom_budget(vcfg)
    _print_kv(
        [
            ("lasing", ss.lasing, ""),
            ("carrier_amplitude_Ac", ss.carrier_amplitude_Ac, "V/m"),
            ("carrier_intensity_Ic", ss.carrier_intensity_Ic, "W/m^2"),
            ("equivalent_reflectivity_R", ss.equivalent_reflectivity_R, ""),
            ("g0_l", ss.g0_l, ""),
            ("mean_current_Isig", b.mean_current, "A"),
            ("signal_power", b.signal_power, "A^2"),
            ("shot_power", b.shot_power, "A^2"),
            ("thermal_power", b.thermal_power, "A^2"),
            ("snr", b.snr, ""),
            ("capacity", b.capacity, "bit/s/Hz"),
        ],
        out,
    )
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    text, label = _config_text(args.config)
    config = apply_overrides(loads_config(text, source=label), args.set)
    recipe = _recipe(args.config)
    variable = args.var or recipe.get("variable")
    if variable is None:
        raise UsageError("sweep needs --var (or a [sweep] section in the config)")
    if args.range:
        start, stop, num = parse_range(args.range)
    else:
        try:
            start, stop, num = recipe["start"], recipe["stop"], recipe["num_points"]
        except KeyError:
            raise UsageError("sweep needs --range (or start/stop/num_points in [sweep])") from None
    led = args.led or recipe.get("led", False)
    # the base point itself must be a valid configuration
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        validate(config)
    request = SweepRequest(config, variable, start, stop, num, led)
    write_sweep_csv(request, run_sweep(request, worker_count()), out)
    return EXIT_OK


def cmd_threshold(args, out) -> int:
    vcfg = _load(args)
    value = find_threshold(vcfg, args.var)
    print(f"{value:.9f}", file=out)
    return EXIT_OK


def _open_out(path, out):
    if path in (None, "-"):
        return contextlib.nullcontext(out)
    return open(path, "w", newline="")


def cmd_dynamics(args, out) -> int:
    vcfg = _load(args)
    params = gain.rate_params_from_config(vcfg)
    max_time = None if args.max_time is None else float(args.max_time)
    sol = gain.integrate_to_steady(gain.GainState(0.0, 0.0), params, rel_tol=args.rel_tol, max_time=max_time)
    med = vcfg.medium
    with _open_out(args.out, out) as fh:
        gain.write_trajectory_csv(sol, med.sigma, med.length_l, fh)
    report = sys.stderr if args.out in (None, "-") else out
    g_dyn = gain.gain_from_n2(sol.state.n2, med.sigma, med.length_l)
    g_closed = gain.steady_state_gain(vcfg.cavity, vcfg.bias_p, vcfg.eta_d)
    lasing = carrier_amplitude(vcfg).lasing
    pairs = [
        ("converged", sol.converged, ""),
        ("final_time", sol.state.time_t, "s"),
        ("final_n2", sol.state.n2, "1/m^3"),
        ("final_phi", sol.state.phi, "1/m^3"),
        ("G_dynamic", g_dyn, ""),
    ]
    if lasing:
        pairs += [("G_closed_form", g_closed, ""), ("relative_difference", abs(g_dyn - g_closed) / g_closed, "")]
    else:
        pairs += [("G_closed_form", 1.0, "(below threshold)")]
    _print_kv(pairs, report)
    if not sol.converged:
        print("error: rate equations did not reach steady state; last state reported above", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


@dataclass(frozen=True, eq=False)
class EchoDemo:
    trace: echo.EchoTrace
    clean_output: np.ndarray
    x: np.ndarray
    raw_metric: float | None
    clean_metric: float | None
    scale: float


def run_echo_demo(vcfg: ValidatedConfig, seed=0, scaled=False, signal="prbs") -> EchoDemo:
    """Raw echo channel and the interference-free chain driven by the same ``x``.

    The raw channel's modulator transparency is ``p + m x(t)`` and its gain
    balances the carrier-only loop, so any drift of ``ye`` is echo
    interference. Metrics are ``None`` when the correlation is undefined.
    """
    mod, cav = vcfg.modulation, vcfg.cavity
    p, m = vcfg.bias_p, mod.depth_m
    scale = DEMO_SCALE if scaled else 1.0
    f_o, B_x = mod.f_offset * scale, mod.bandwidth_Bx * scale
    tau_p, tau_a = vcfg.tau_p / scale, vcfg.tau_a / scale

    # the record lasts 1 / bin_width and must hold 10 round trips
    round_trip = 2.0 * (tau_p + tau_a)
    bins_per_Bx = 64
    while B_x / bins_per_Bx * 10.0 * round_trip > 1.0:
        bins_per_Bx *= 2
    n, fs = chain.sampling_grid(f_o, B_x, bins_per_Bx=bins_per_Bx)

    if signal == "prbs":
        x = prbs_bandlimited(n, fs, B_x, np.random.default_rng(seed))
    elif signal == "constant":
        x = np.ones(n)
    else:
        raise UsageError(f"unknown signal {signal!r}")

    ss = carrier_amplitude(vcfg)
    if not ss.lasing:
        raise UsageError("configuration is below threshold: no carrier to demonstrate")

    g_bal = 1.0 / (p * vcfg.eta_d * math.sqrt(cav.r1 * cav.r2))
    ecfg = echo.EchoChannelConfig(tau_p, tau_a, 1.0 / fs, cav.r1, cav.r2, vcfg.eta_d, 1.0, n / fs)
    trace = echo.simulate_echo(p + m * x, g_bal, ecfg)

    drive = chain.preprocess_source(x, m, p, f_o, fs)
    field = chain.propagate(chain.modulate(ss.carrier_amplitude_Ac, drive, fs), vcfg.eta_d)
    to_pd, _ = chain.split(field, cav.r_s)
    det = vcfg.detector
    current = chain.photodetect(to_pd, det, vcfg.medium.cross_section_Ab, vcfg.constants.free_space_impedance_Z0)
    clean = chain.coherent_demodulate(current, f_o, B_x)

    def metric(series, lag):
        try:
            return echo.interference_metric(series, x, lag=lag)
        except ValueError:
            return None

    return EchoDemo(trace, clean, x, metric(trace.ye_samples, trace.delay_p), metric(clean, 0), scale)


def cmd_echo_demo(args, out) -> int:
    vcfg = _load(args)
    demo = run_echo_demo(vcfg, seed=args.seed, scaled=args.scaled, signal=args.signal)
    tr = demo.trace
    with _open_out(args.out, out) as fh:
        chain.write_series_csv(
            {"t": tr.time, "x": demo.x, "G": tr.G_samples, "Ac": tr.Ac_samples,
             "ye": tr.ye_samples, "y_clean": demo.clean_output},
            fh,
        )
    report = sys.stderr if args.out in (None, "-") else out
    if demo.raw_metric is None or demo.clean_metric is None:
        print("warning: undefined correlation (constant source signal); metrics not reported", file=report)
        return EXIT_OK
    _print_kv(
        [
            ("interference_metric_raw", demo.raw_metric, ""),
            ("interference_metric_clean", demo.clean_metric, ""),
            ("raw_exceeds_clean", demo.raw_metric > demo.clean_metric, ""),
        ],
        report,
    )
    return EXIT_OK


def cmd_presets(args, out) -> int:
    for name in _preset_names():
        print(f"preset:{name}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbcom", description="Resonant beam communication link simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="config file path or preset:NAME")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a parameter (section.key or a sweep variable); repeatable")
        return p

    with_config("point", "evaluate one operating point").set_defaults(func=cmd_point)

    p = with_config("sweep", "1-D parameter sweep as CSV")
    p.add_argument("--var", choices=SWEEP_VARIABLES)
    p.add_argument("--range", metavar="START:STOP:N")
    p.add_argument("--led", action="store_true", help="add the LED reference capacity column")
    p.set_defaults(func=cmd_sweep)

    p = with_config("threshold", "lasing threshold of one variable")
    p.add_argument("--var", required=True, choices=SWEEP_VARIABLES)
    p.set_defaults(func=cmd_threshold)

    p = with_config("echo-demo", "raw echo channel vs interference-free chain")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scaled", action="store_true", help="run at desk-scale frequencies")
    p.add_argument("--signal", choices=("prbs", "constant"), default="prbs")
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_echo_demo)

    p = with_config("dynamics", "rate-equation trajectory from cold start")
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.add_argument("--max-time", type=float, help="integration limit in seconds")
    p.set_defaults(func=cmd_dynamics)

    sub.add_parser("presets", help="list bundled configs").set_defaults(func=cmd_presets)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print("error: invalid configuration:", file=sys.stderr)
        for problem in exc.violations:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoSignChange, echo.EchoInstability, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
