"""Time-domain transmit/receive chain of the interference-free link.

Fields are complex envelopes relative to the carrier; the carrier phase is
fixed at zero so all amplitudes are real in practice. Filtering is done with
ideal (brick-wall) masks on the DFT of the whole record, so signals are
treated as periodic over the record length.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import DetectorParams
from .spectral import ObpfSpec, Spectrum, echo_purify

__all__ = [
    "FieldEnvelope",
    "PhotocurrentTrace",
    "NoiseConfig",
    "BandOverlapError",
    "preprocess_source",
    "modulate",
    "propagate",
    "split",
    "photodetect",
    "coherent_demodulate",
    "echo_field",
    "brickwall",
    "sampling_grid",
    "write_series_csv",
]


class BandOverlapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FieldEnvelope:
    samples: np.ndarray
    sample_rate: float
    carrier_ref: float = 282e12

    def check_sampling(self, f_offset, bandwidth_Bx):
        """The ``2 f_o`` detector harmonic must be representable."""
        if self.sample_rate < 4 * (f_offset + bandwidth_Bx):
            raise ValueError("sample_rate must be at least 4 (f_offset + bandwidth_Bx)")

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def scaled(self, factor) -> "FieldEnvelope":
        return FieldEnvelope(self.samples * factor, self.sample_rate, self.carrier_ref)


@dataclass(frozen=True, eq=False)
class PhotocurrentTrace:
    samples: np.ndarray
    sample_rate: float
    mean_current: float


@dataclass(frozen=True)
class NoiseConfig:
    """Additive white Gaussian detector noise; ``variance`` in A^2 per sample."""

    enabled: bool = False
    seed: int = 0
    variance: float = 1e-12


def sampling_grid(f_offset, bandwidth_Bx, bins_per_Bx=64, min_samples=0):
    """Power-of-two record length and sample rate with ``f_offset`` on a DFT bin.

    The bin width is ``bandwidth_Bx / bins_per_Bx`` and the rate is at least
    ``4 (f_offset + bandwidth_Bx)``.
    """
    bin_width = bandwidth_Bx / bins_per_Bx
    k = f_offset / bin_width
    if abs(k - round(k)) > 1e-9 * k:
        raise ValueError("f_offset must be a multiple of bandwidth_Bx / bins_per_Bx")
    need = max(4 * (f_offset + bandwidth_Bx) / bin_width, min_samples)
    n = 1 << max(int(math.ceil(math.log2(need))), 1)
    return n, n * bin_width


def brickwall(samples, sample_rate, lo, hi):
    """Keep spectral content with ``lo <= |f| <= hi`` (ideal filter, both signs)."""
    spec = np.fft.fft(samples)
    f = np.abs(np.fft.fftfreq(len(samples), d=1.0 / sample_rate))
    tol = 1e-9 * max(hi, sample_rate / len(samples))
    spec[(f < lo - tol) | (f > hi + tol)] = 0.0
    out = np.fft.ifft(spec)
    return out.real if np.isrealobj(samples) else out


def preprocess_source(x, depth_m, bias_p, f_offset, sample_rate):
    """Modulator drive ``m x(t) cos(2 pi f_o t) + p``."""
    if bias_p - depth_m < 0 or bias_p + depth_m > 1 + 1e-12:
        raise ValueError("drive must stay within [0, 1]: need p - m >= 0 and p + m <= 1")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-12):
        raise ValueError("source signal must satisfy |x| <= 1")
    t = np.arange(x.size) / sample_rate
    return depth_m * x * np.cos(2 * np.pi * f_offset * t) + bias_p


def modulate(carrier_Ac, drive, sample_rate, carrier_ref=282e12) -> FieldEnvelope:
    return FieldEnvelope(np.asarray(drive, dtype=complex) * carrier_Ac, sample_rate, carrier_ref)


def propagate(field: FieldEnvelope, eta_d) -> FieldEnvelope:
    return field.scaled(eta_d)


def split(field: FieldEnvelope, r_s):
    """Return ``(to_detector, to_retro)`` with amplitude ratios ``r_s`` and ``sqrt(1 - r_s^2)``."""
    return field.scaled(r_s), field.scaled(math.sqrt(1.0 - r_s**2))


def photodetect(field: FieldEnvelope, det: DetectorParams, beam_area_Ab, Z0, noise: NoiseConfig | None = None):
    """Square-law detection ``k |E|^2 + n(t)``; ``mean_current`` excludes the noise."""
    k = det.detect_efficiency * det.responsivity_rho * beam_area_Ab / Z0
    clean = k * np.abs(field.samples) ** 2
    current = clean
    if noise is not None and noise.enabled:
        rng = np.random.default_rng(noise.seed)
        current = clean + rng.normal(0.0, math.sqrt(noise.variance), clean.size)
    return PhotocurrentTrace(current, field.sample_rate, float(np.mean(clean)))


def coherent_demodulate(trace: PhotocurrentTrace, f_offset, bandwidth_Bx):
    """Band-pass around ``f_o``, mix with ``cos(2 pi f_o t)``, low-pass to ``B_x``.

    For a noiseless trace the output is ``k r_s^2 eta_d^2 A_c^2 p m x(t)``.
    """
    if not f_offset > 3 * bandwidth_Bx:
        raise BandOverlapError("detector bands overlap: f_offset must exceed 3*bandwidth_Bx")
    fs = trace.sample_rate
    band = brickwall(trace.samples, fs, f_offset - bandwidth_Bx, f_offset + bandwidth_Bx)
    t = np.arange(band.size) / fs
    mixed = band * np.cos(2 * np.pi * f_offset * t)
    return brickwall(mixed, fs, 0.0, bandwidth_Bx)


def echo_field(to_retro: FieldEnvelope, r2, eta_d, filt: ObpfSpec, *, f_offset=None, bandwidth_Bx=None) -> FieldEnvelope:
    """Echo returned to the modulator after the receiver's double OBPF pass.

    ``to_retro`` already carries the splitter transmission, so only ``r2``
    and the return-path ``eta_d`` are applied here.
    """
    spec = Spectrum.from_envelope(to_retro.samples, to_retro.sample_rate)
    purified = echo_purify(spec, r2, 1.0, eta_d, filt, f_offset=f_offset, bandwidth_Bx=bandwidth_Bx)
    return FieldEnvelope(purified.to_envelope(), to_retro.sample_rate, to_retro.carrier_ref)


def write_series_csv(columns: dict, fh) -> None:
    """Write equal-length named columns as CSV with a single header row."""
    writer = csv.writer(fh, lineterminator="\n")
    names = list(columns)
    writer.writerow(names)
    arrays = [np.real_if_close(np.asarray(columns[n])) for n in names]
    for row in zip(*arrays):
        writer.writerow([f"{float(np.real(v)):.9e}" for v in row])
