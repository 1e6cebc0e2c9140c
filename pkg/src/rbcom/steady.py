"""Closed-form steady-state carrier of the interference-free cavity.

Everything right of the gain medium (modulator, air path, splitter,
receiver retroreflector) is folded into one partially reflecting mirror of
intensity reflectivity ``R``; the carrier intensity then follows from the
classic output-coupled laser result.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .config import ValidatedConfig, with_value

__all__ = [
    "SteadyStateResult",
    "NoSignChange",
    "equivalent_reflectivity",
    "saturation_intensity",
    "small_signal_gain_length",
    "output_power",
    "carrier_amplitude",
    "lasing_margin",
    "find_threshold",
    "bisect",
    "THRESHOLD_VARIABLES",
]


class NoSignChange(ValueError):
    """The lasing margin keeps one sign over the whole search range."""


@dataclass(frozen=True)
class SteadyStateResult:
    carrier_amplitude_Ac: float
    carrier_intensity_Ic: float
    equivalent_reflectivity_R: float
    g0_l: float
    lasing: bool


def equivalent_reflectivity(t_s, bias_p, eta_d):
    """``R = t_s^2 p^4 eta_d^4``: two passes through modulator and air, one splitter pass."""
    return t_s**2 * bias_p**4 * eta_d**4


def saturation_intensity(f_carrier, sigma, tau_f, planck_h):
    return planck_h * f_carrier / (sigma * tau_f)


def small_signal_gain_length(power_Pin, eta_pump, I_s, cross_section_Ab):
    """Small-signal gain-length product ``eta P_in / (I_s A_b)``."""
    return eta_pump * power_Pin / (I_s * cross_section_Ab)


def output_power(g0_l, R, I_s, cross_section_Ab, alpha0_l=0.0):
    """Output power through the equivalent reflector.

    General form with medium loss ``alpha0 * l``; reduces to
    ``A_b I_s (g0 l + ln sqrt R)`` when ``alpha0_l == 0``.
    """
    ln_sqrt_r = 0.5 * math.log(R)
    bracket = g0_l - alpha0_l + ln_sqrt_r
    if alpha0_l == 0.0:
        return cross_section_Ab * I_s * bracket
    if ln_sqrt_r == 0.0:
        raise ZeroDivisionError("R = 1 makes the medium-loss correction singular")
    return cross_section_Ab * I_s * bracket / (1.0 - alpha0_l / ln_sqrt_r)


def _parts(vcfg: ValidatedConfig):
    med, const = vcfg.medium, vcfg.constants
    I_s = saturation_intensity(med.f_carrier, med.sigma, med.tau_f, const.planck_h)
    g0_l = small_signal_gain_length(vcfg.pump.power_Pin, med.eta_pump, I_s, med.cross_section_Ab)
    R = equivalent_reflectivity(vcfg.t_s, vcfg.bias_p, vcfg.eta_d)
    return I_s, g0_l, R


def lasing_margin(vcfg: ValidatedConfig) -> float:
    """Net round-trip log gain ``(g0 - alpha0) l + ln sqrt(R)``; positive means lasing."""
    _, g0_l, R = _parts(vcfg)
    if R <= 0.0:
        return -math.inf
    return g0_l - vcfg.medium.alpha0 * vcfg.medium.length_l + 0.5 * math.log(R)


def carrier_amplitude(vcfg: ValidatedConfig) -> SteadyStateResult:
    """Steady-state carrier field amplitude ``A_c`` (V/m) at the modulator.

    Below threshold the cavity does not resonate and ``A_c = 0``.
    """
    if vcfg.cavity.r1 != 1.0 or vcfg.cavity.r2 != 1.0:
        warnings.warn(
            "closed-form carrier amplitude assumes unity retroreflectors (r1 = r2 = 1)",
            stacklevel=2,
        )
    I_s, g0_l, R = _parts(vcfg)
    if R >= 1.0:
        raise ValueError("no output coupling: amplitude undefined (R >= 1)")
    margin = lasing_margin(vcfg)
    if not margin > 0:
        return SteadyStateResult(0.0, 0.0, R, g0_l, False)
    alpha0_l = vcfg.medium.alpha0 * vcfg.medium.length_l
    A_b = vcfg.medium.cross_section_Ab
    I_c = output_power(g0_l, R, I_s, A_b, alpha0_l) / (A_b * (1.0 - R))
    Z0 = vcfg.constants.free_space_impedance_Z0
    A_c = math.sqrt(Z0 * I_c)
    return SteadyStateResult(A_c, A_c * A_c / Z0, R, g0_l, True)


def bisect(func, lo, hi, xtol=1e-9, max_iter=200):
    """Root of ``func`` on ``[lo, hi]`` by bisection; the ends must bracket a sign change."""
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoSignChange(f"no sign change in range [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid in (lo, hi):
            break
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# admissible search ranges; distance is open-ended so it is capped generously
THRESHOLD_VARIABLES = {
    "depth_m": (0.0, 0.5),
    "r_s": (0.0, 0.999),
    "eta_d": (1e-6, 1.0),
    "distance_d": (1e-6, 1e7),
    "power_Pin": (0.0, 1e6),
}


def find_threshold(vcfg: ValidatedConfig, variable: str, xtol: float = 1e-9, bounds=None) -> float:
    """Value of ``variable`` at which the lasing margin crosses zero.

    All other parameters stay fixed; ``depth_m`` moves the operating point
    along ``p = 1 - m``. Raises :class:`NoSignChange` when the link is above
    (or below) threshold over the whole range.
    """
    if variable not in THRESHOLD_VARIABLES:
        raise ValueError(f"unknown threshold variable {variable!r}")
    lo, hi = THRESHOLD_VARIABLES[variable] if bounds is None else bounds
    base = vcfg.config if isinstance(vcfg, ValidatedConfig) else vcfg

    if variable == "distance_d" and base.cavity.alpha_air == 0.0:
        raise NoSignChange("no sign change in range: distance has no effect when alpha_air = 0")

    def margin(x):
        return lasing_margin(ValidatedConfig(with_value(base, variable, x)))

    return bisect(margin, lo, hi, xtol=xtol)
