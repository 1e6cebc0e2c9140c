"""The raw echo-interfered cavity channel as a discrete delay-line recursion.

Amplitudes only: with the modulator transparency ``x``, the gain ``G`` and
the delays snapped to whole samples,

    A_c[n] = r1 r2 eta_d ye[n - Dp - 2Da] x[n - 2Da] G[n - 2Da] G[n]
    ye[n]  = eta_d x[n - Dp] A_c[n - Dp]

Before sample 0 the loop holds an unmodulated carrier: ``ye = seed``,
``x = 1`` and ``G = G[0]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "EchoChannelConfig",
    "EchoTrace",
    "EchoInstability",
    "simulate_echo",
    "round_trip_coefficient",
    "interference_metric",
    "write_trace_csv",
]

BLOWUP_FACTOR = 1e6


class EchoInstability(RuntimeError):
    pass


@dataclass(frozen=True)
class EchoChannelConfig:
    tau_p: float
    tau_a: float
    sample_interval: float
    r1: float = 1.0
    r2: float = 1.0
    eta_d: float = 1.0
    eta_m: float = 1.0
    duration: float | None = None  # default: 10 round trips

    def __post_init__(self):
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.tau_p < 0 or self.tau_a < 0:
            raise ValueError("delays must be non-negative")
        if self.round_trip_samples < 1:
            raise ValueError("round trip must span at least one sample")
        if self.duration is not None and self.n_samples < 10 * self.round_trip_samples:
            raise ValueError("duration must cover at least 10 round trips")

    @property
    def delay_p(self) -> int:
        return int(round(self.tau_p / self.sample_interval))

    @property
    def delay_a(self) -> int:
        return int(round(self.tau_a / self.sample_interval))

    @property
    def rounding_error(self):
        """Residual ``(tau_p, tau_a)`` error in seconds after snapping to the grid."""
        dt = self.sample_interval
        return self.delay_p * dt - self.tau_p, self.delay_a * dt - self.tau_a

    @property
    def round_trip_samples(self) -> int:
        return 2 * self.delay_p + 2 * self.delay_a

    @property
    def n_samples(self) -> int:
        if self.duration is None:
            return 10 * self.round_trip_samples
        return int(round(self.duration / self.sample_interval))


@dataclass(frozen=True, eq=False)
class EchoTrace:
    time: np.ndarray
    x_samples: np.ndarray
    G_samples: np.ndarray
    Ac_samples: np.ndarray
    ye_samples: np.ndarray
    delay_p: int
    delay_a: int


def simulate_echo(x, G, cfg: EchoChannelConfig, seed_amplitude=1.0, backend=None) -> EchoTrace:
    """Run the echo recursion over ``x`` (one value per sample, ``|x| <= 1``).

    ``G`` is a constant or a series aligned with ``x``. Raises
    :class:`EchoInstability` once ``|ye|`` exceeds ``1e6 * seed_amplitude``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a non-empty 1-D series")
    if np.any(np.abs(x) > 1 + 1e-12):
        raise ValueError("source signal must satisfy |x| <= 1")
    g = np.broadcast_to(np.asarray(G, dtype=float), x.shape).copy()
    if np.any(g <= 0):
        raise ValueError("gain must be positive")
    if not seed_amplitude > 0:
        raise ValueError("seed_amplitude must be positive")

    impl = kernels if backend is None else kernels.BACKENDS[backend]
    ac, ye, status = impl.echo_recursion(
        x, g, cfg.delay_p, cfg.delay_a, cfg.r1 * cfg.r2, cfg.eta_d, cfg.eta_m,
        float(seed_amplitude), BLOWUP_FACTOR * seed_amplitude,
    )
    if status >= 0:
        raise EchoInstability(
            f"loop gain exceeds unity with modulated signal (|ye| blew up at sample {status})"
        )
    t = np.arange(x.size) * cfg.sample_interval
    return EchoTrace(t, x, g, ac, ye, cfg.delay_p, cfg.delay_a)


def round_trip_coefficient(r1, r2, eta_m, eta_d, G, t_s=1.0):
    """Round-trip amplitude factor ``r1 r2 t_s eta_m^2 eta_d^2 G^2``; resonance needs >= 1.

    ``t_s`` is the splitter transmission of the filtered link (1 for the raw channel).
    """
    return r1 * r2 * t_s * eta_m**2 * eta_d**2 * G**2


def interference_metric(received, x, lag=None) -> float:
    """``1 - |corr(received[n], x[n - lag])|``: 0 for a clean copy of ``x``, near 1
    when echo products dominate.

    ``received`` may be an :class:`EchoTrace`, in which case its ``ye`` series
    and single-pass delay are used.
    """
    if isinstance(received, EchoTrace):
        if lag is None:
            lag = received.delay_p
        received = received.ye_samples
    lag = 0 if lag is None else int(lag)
    y = np.asarray(received, dtype=float)
    x = np.asarray(x, dtype=float)
    n = min(y.size, x.size)
    y, x = y[lag:n], x[: n - lag]
    if y.size < 2:
        raise ValueError("undefined correlation: series too short")
    yc, xc = y - y.mean(), x - x.mean()
    den = math.sqrt(float(np.dot(yc, yc)) * float(np.dot(xc, xc)))
    if den == 0.0 or not np.isfinite(den):
        raise ValueError("undefined correlation: constant series")
    return 1.0 - abs(float(np.dot(yc, xc)) / den)


def write_trace_csv(trace: EchoTrace, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "x", "G", "Ac", "ye"])
    for row in zip(trace.time, trace.x_samples, trace.G_samples, trace.Ac_samples, trace.ye_samples):
        writer.writerow([f"{v:.9e}" for v in row])
