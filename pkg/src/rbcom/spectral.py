"""Spectra of the optical field referenced to the carrier frequency.

A :class:`Spectrum` holds DFT coefficients of the complex field envelope,
normalised so that a constant envelope ``c`` appears as a single bin of
value ``c`` at offset 0. Offsets are in Hz relative to ``f_c``; with this
normalisation Parseval reads ``sum |values|^2 == mean |envelope|^2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Spectrum",
    "ObpfSpec",
    "SpectralContentError",
    "modulated_spectrum",
    "apply_obpf",
    "echo_purify",
    "residual_information_energy",
    "band_energy",
    "random_bandlimited",
    "prbs_bandlimited",
    "write_spectrum_csv",
]

# passband edges are inclusive; this absorbs round-off in offset arithmetic
_EDGE_TOL = 1e-9
# relative energy a shift may drop off the grid edge
_LOST_ENERGY_TOL = 1e-20


class SpectralContentError(ValueError):
    """Energy found outside the bands a modulated field may occupy."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    freq_offsets: np.ndarray
    values: np.ndarray
    bin_width: float

    @classmethod
    def zeros(cls, n_bins: int, bin_width: float) -> "Spectrum":
        offsets = np.fft.fftshift(np.fft.fftfreq(n_bins, d=1.0 / (n_bins * bin_width)))
        return cls(offsets, np.zeros(n_bins, dtype=complex), float(bin_width))

    @classmethod
    def from_envelope(cls, samples, sample_rate: float) -> "Spectrum":
        samples = np.asarray(samples)
        n = samples.size
        values = np.fft.fftshift(np.fft.fft(samples)) / n
        offsets = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / sample_rate))
        return cls(offsets, values, sample_rate / n)

    def to_envelope(self) -> np.ndarray:
        return np.fft.ifft(np.fft.ifftshift(self.values)) * self.values.size

    @property
    def n_bins(self) -> int:
        return self.values.size

    @property
    def sample_rate(self) -> float:
        return self.bin_width * self.values.size

    @property
    def zero_index(self) -> int:
        return self.values.size // 2

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def with_values(self, values) -> "Spectrum":
        return Spectrum(self.freq_offsets, np.asarray(values, dtype=complex), self.bin_width)

    def __add__(self, other: "Spectrum") -> "Spectrum":
        if self.n_bins != other.n_bins or self.bin_width != other.bin_width:
            raise ValueError("spectra live on different grids")
        return self.with_values(self.values + other.values)

    def __mul__(self, scale) -> "Spectrum":
        return self.with_values(self.values * scale)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ObpfSpec:
    """Ideal rectangular optical band-pass filter."""

    bandwidth_Bf: float
    center_offset: float = 0.0

    def __post_init__(self):
        if not self.bandwidth_Bf > 0:
            raise ValueError("filter bandwidth must be positive")


def _shift_bins(values, k):
    """Shift by ``k`` bins without wrap-around; fails if energy would fall off the grid."""
    out = np.zeros_like(values)
    n = values.size
    if k >= 0:
        lost = values[n - k:] if k else values[:0]
        out[k:] = values[: n - k]
    else:
        lost = values[: -k]
        out[: n + k] = values[-k:]
    # transform round-off leaves ~1e-17 in empty bins; only real content counts
    total = float(np.sum(np.abs(values) ** 2))
    if float(np.sum(np.abs(lost) ** 2)) > _LOST_ENERGY_TOL * total:
        raise ValueError("grid too narrow: sideband falls off the frequency grid")
    return out


def modulated_spectrum(x_baseband: Spectrum, depth_m, bias_p, f_offset) -> Spectrum:
    """Spectrum of the envelope ``(m x(t) cos(2 pi f_o t) + p)``.

    The carrier lands in the offset-0 bin with amplitude ``p``; each copy of
    ``X`` sits at ``+-f_o`` with weight ``m/2``.
    """
    k = f_offset / x_baseband.bin_width
    kr = int(round(k))
    if abs(k - kr) > 1e-9 * max(1.0, abs(k)):
        raise ValueError("f_offset is not on the frequency grid")
    sidebands = 0.5 * depth_m * (_shift_bins(x_baseband.values, kr) + _shift_bins(x_baseband.values, -kr))
    values = sidebands.astype(complex)
    values[x_baseband.zero_index] += bias_p
    return x_baseband.with_values(values)


def _passband(s: Spectrum, filt: ObpfSpec) -> np.ndarray:
    half = 0.5 * filt.bandwidth_Bf
    return np.abs(s.freq_offsets - filt.center_offset) <= half + _EDGE_TOL * max(half, s.bin_width)


def apply_obpf(s: Spectrum, filt: ObpfSpec) -> Spectrum:
    return s.with_values(np.where(_passband(s, filt), s.values, 0.0))


def band_energy(s: Spectrum, lo, hi) -> float:
    """Energy in bins with ``lo <= |offset| <= hi``."""
    mag = np.abs(s.freq_offsets)
    tol = _EDGE_TOL * max(abs(hi), s.bin_width)
    mask = (mag >= lo - tol) & (mag <= hi + tol)
    return float(np.sum(np.abs(s.values[mask]) ** 2))


def _check_pattern(s: Spectrum, f_offset, bandwidth_Bx):
    offs = s.freq_offsets
    tol = _EDGE_TOL * max(bandwidth_Bx, s.bin_width)
    allowed = np.abs(offs) <= tol
    allowed |= np.abs(np.abs(offs) - f_offset) <= bandwidth_Bx + tol
    total = s.energy()
    stray = float(np.sum(np.abs(s.values[~allowed]) ** 2))
    if total > 0 and stray > 1e-9 * total:
        raise SpectralContentError("unexpected spectral content outside carrier and sideband bands")


def echo_purify(received: Spectrum, r2, t_s, eta_d, filt: ObpfSpec, *, f_offset=None, bandwidth_Bx=None) -> Spectrum:
    """Echo sent back towards the modulator after two passes through the OBPF.

    The result is scaled by ``r2 * t_s * eta_d``. When ``f_offset`` and
    ``bandwidth_Bx`` are given, ``received`` must only occupy the carrier
    bin and the two sideband bands.
    """
    if f_offset is not None and bandwidth_Bx is not None:
        _check_pattern(received, f_offset, bandwidth_Bx)
    twice = apply_obpf(apply_obpf(received, filt), filt)
    return twice * (r2 * t_s * eta_d)


def residual_information_energy(s: Spectrum) -> float:
    """Fraction of the energy outside the carrier bin (0 for an empty spectrum)."""
    total = s.energy()
    if total == 0.0:
        return 0.0
    carrier = abs(s.values[s.zero_index]) ** 2
    return float(max(total - carrier, 0.0) / total)


def random_bandlimited(n, sample_rate, bandwidth, rng, peak=1.0):
    """Real periodic signal with random spectrum confined to ``|f| <= bandwidth``,
    scaled to the given peak magnitude."""
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    band = (freqs <= bandwidth * (1 + _EDGE_TOL)) & (freqs > 0)
    coeffs = np.zeros(freqs.size, dtype=complex)
    coeffs[band] = rng.normal(size=band.sum()) + 1j * rng.normal(size=band.sum())
    if n % 2 == 0:
        coeffs[-1] = coeffs[-1].real
    x = np.fft.irfft(coeffs, n)
    return peak * x / np.max(np.abs(x))


def prbs_bandlimited(n, sample_rate, bandwidth, rng, symbol_rate=None, peak=1.0):
    """Pseudo-random binary sequence band-limited to ``bandwidth`` by an ideal LPF."""
    if symbol_rate is None:
        symbol_rate = bandwidth
    sps = max(int(round(sample_rate / symbol_rate)), 1)
    bits = rng.integers(0, 2, size=-(-n // sps)) * 2.0 - 1.0
    raw = np.repeat(bits, sps)[:n]
    spec = np.fft.rfft(raw)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spec[freqs > bandwidth * (1 + _EDGE_TOL)] = 0.0
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    return peak * x / np.max(np.abs(x))


def write_spectrum_csv(s: Spectrum, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["offset_hz", "re", "im", "magnitude"])
    for f, v in zip(s.freq_offsets, s.values):
        writer.writerow([f"{f:.9e}", f"{v.real:.9e}", f"{v.imag:.9e}", f"{abs(v):.9e}"])
