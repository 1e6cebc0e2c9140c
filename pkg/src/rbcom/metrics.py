"""Photodetector noise, SNR and Shannon capacity for RBCom and an LED reference."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import DetectorParams, LedParams, PhysicalConstants, ValidatedConfig
from .steady import carrier_amplitude

__all__ = [
    "NoiseBudget",
    "detector_constant",
    "signal_power",
    "mean_photocurrent",
    "shot_noise",
    "thermal_noise",
    "capacity",
    "rbcom_budget",
    "lambertian_order",
    "led_photocurrent",
    "led_budget",
]


@dataclass(frozen=True)
class NoiseBudget:
    """Powers in A^2, capacity in bit/s/Hz.

    ``snr = signal_power / ((shot_power + thermal_power) / noise_divisor)``;
    the coherent RBCom receiver uses a divisor of 4, the LED reference 1.
    """

    shot_power: float
    thermal_power: float
    signal_power: float
    snr: float
    capacity: float
    mean_current: float = 0.0
    noise_divisor: float = 4.0

    @classmethod
    def from_powers(cls, signal, shot, thermal, mean_current=0.0, noise_divisor=4.0):
        noise = (shot + thermal) / noise_divisor
        snr = signal / noise if noise > 0 else (math.inf if signal > 0 else 0.0)
        return cls(shot, thermal, signal, snr, capacity(snr), mean_current, noise_divisor)


def detector_constant(det: DetectorParams, beam_area_Ab, Z0):
    """Field-squared to current factor ``k = eta_det rho A_b / Z0`` (A m^2/V^2)."""
    return det.detect_efficiency * det.responsivity_rho * beam_area_Ab / Z0


def signal_power(k, r_s, eta_d, bias_p, depth_m, Ac, mean_sq_x):
    """Mean power of the demodulated information current."""
    return k**2 * r_s**4 * eta_d**4 * Ac**4 * bias_p**2 * depth_m**2 * mean_sq_x


def mean_photocurrent(k, r_s, eta_d, bias_p, depth_m, Ac, mean_sq_x):
    """Average detector current (carrier DC plus the mean of the ``x^2`` term)."""
    return k * r_s**2 * eta_d**2 * Ac**2 * (bias_p**2 + 0.5 * depth_m**2 * mean_sq_x)


def shot_noise(I_sig, I_bk, bandwidth_Bx, q):
    """Shot-noise power over the ``2 B_x`` detector bandwidth."""
    return 2.0 * q * (I_sig + I_bk) * 2.0 * bandwidth_Bx


def thermal_noise(T, R_L, bandwidth_Bx, K_boltzmann):
    """Johnson noise of the load over the ``2 B_x`` detector bandwidth."""
    return 4.0 * K_boltzmann * T / R_L * 2.0 * bandwidth_Bx


def capacity(snr):
    return math.log2(1.0 + snr)


def rbcom_budget(vcfg: ValidatedConfig) -> NoiseBudget:
    """Full noise budget of the interference-free link; zero capacity below threshold."""
    ss = carrier_amplitude(vcfg)
    const, det, mod = vcfg.constants, vcfg.detector, vcfg.modulation
    k = detector_constant(det, vcfg.medium.cross_section_Ab, const.free_space_impedance_Z0)
    args = (k, vcfg.cavity.r_s, vcfg.eta_d, vcfg.bias_p, mod.depth_m, ss.carrier_amplitude_Ac, mod.mean_sq_x)
    I_sig = mean_photocurrent(*args)
    sig = signal_power(*args)
    shot = shot_noise(I_sig, det.background_current_Ibk, mod.bandwidth_Bx, const.electron_charge_q)
    thermal = thermal_noise(det.temperature_T, det.load_R_L, mod.bandwidth_Bx, const.boltzmann_K)
    return NoiseBudget.from_powers(sig, shot, thermal, I_sig, 4.0)


def lambertian_order(semi_angle_phi_half):
    return -math.log(2.0) / math.log(math.cos(semi_angle_phi_half))


def led_photocurrent(led: LedParams, det: DetectorParams, alpha_air, distance_d):
    """On-axis LED photocurrent with a concentrator lens and an air-loss factor."""
    if distance_d <= 0:
        raise ValueError("distance_d must be positive (1/d^2 singularity at d = 0)")
    order = lambertian_order(led.semi_angle_phi_half)
    geometric = det.responsivity_rho * led.receive_area_Ar * (order + 1) / (2 * math.pi * distance_d**2)
    concentrator = led.lens_index_n**2 / math.sin(led.fov_psi_c) ** 2
    return geometric * concentrator * led.filter_gain_Ts * math.exp(-alpha_air * distance_d) * led.transmit_power_Pt


def led_budget(
    led: LedParams,
    det: DetectorParams,
    alpha_air,
    distance_d,
    bandwidth_Bx,
    constants: PhysicalConstants = PhysicalConstants(),
) -> NoiseBudget:
    """LED noise budget. Noise bandwidth here is ``B_x``, not ``2 B_x``."""
    current = led_photocurrent(led, det, alpha_air, distance_d)
    shot = 2.0 * constants.electron_charge_q * (current + det.background_current_Ibk) * bandwidth_Bx
    thermal = 4.0 * constants.boltzmann_K * det.temperature_T * bandwidth_Bx / det.load_R_L
    return NoiseBudget.from_powers(current**2, shot, thermal, current, 1.0)
