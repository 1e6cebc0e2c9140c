"""Four-level gain medium: rate equations, amplitude gain and loop balance."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import CavityParams, MediumParams, PhysicalConstants, ValidatedConfig

__all__ = [
    "GainState",
    "RateEquationParams",
    "RateSolution",
    "rate_derivatives",
    "integrate_to_steady",
    "gain_from_n2",
    "steady_state_gain",
    "pump_rate_from_power",
    "photon_lifetime_from_losses",
    "loop_survival",
    "medium_round_trip_time",
    "rate_params_from_config",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class GainState:
    """Upper-level population density ``n2`` and photon density ``phi`` (1/m^3)."""

    n2: float
    phi: float
    time_t: float = 0.0

    def __post_init__(self):
        if self.n2 < 0 or self.phi < 0:
            raise ValueError("population and photon densities must be non-negative")


@dataclass(frozen=True)
class RateEquationParams:
    pump_rate_Rp: float
    photon_lifetime_tau_c: float
    spont_seed_S: float
    sigma: float
    light_speed_v: float
    tau_f: float

    def __post_init__(self):
        if not self.photon_lifetime_tau_c > 0:
            raise ValueError("photon lifetime must be positive")
        if not self.tau_f > 0:
            raise ValueError("fluorescence lifetime must be positive")
        for name in ("pump_rate_Rp", "spont_seed_S", "sigma", "light_speed_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def threshold_n2(self) -> float:
        """Inversion at which stimulated emission exactly replaces cavity loss."""
        return 1.0 / (self.sigma * self.light_speed_v * self.photon_lifetime_tau_c)

    @property
    def steady_phi_estimate(self) -> float:
        """Photon density at the fixed point with the seed term neglected."""
        excess = self.pump_rate_Rp - self.threshold_n2 / self.tau_f
        return max(excess, 0.0) * self.photon_lifetime_tau_c


@dataclass
class RateSolution:
    state: GainState
    converged: bool
    accepted_steps: int
    rejected_steps: int
    t: np.ndarray = field(repr=False)
    n2: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)


def rate_derivatives(state: GainState, params: RateEquationParams):
    """Return ``(dn2/dt, dphi/dt)``."""
    stim = state.n2 * state.phi * params.sigma * params.light_speed_v
    dn2 = -stim - state.n2 / params.tau_f + params.pump_rate_Rp
    dphi = stim - state.phi / params.photon_lifetime_tau_c + params.spont_seed_S
    return dn2, dphi


def integrate_to_steady(
    init: GainState,
    params: RateEquationParams,
    rel_tol: float = 1e-7,
    max_time: float | None = None,
    *,
    record_interval: float | None = None,
    max_step: float | None = None,
    hold_steps: int = 20,
    backend=None,
) -> RateSolution:
    """Integrate the rate equations until both densities are stationary.

    Stationarity means ``|dn2/dt| tau_f / n2 < rel_tol`` and
    ``|dphi/dt| tau_c / phi < rel_tol`` for ``hold_steps`` consecutive
    accepted steps; a density that has decayed to the absolute floor also
    counts as stationary. If ``max_time`` elapses first the last state is
    returned with ``converged=False``.

    ``record_interval`` sets the spacing of the stored trajectory
    (default ``tau_f / 200``).
    """
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    impl = kernels if backend is None else kernels.BACKENDS[backend]

    tau_f = params.tau_f
    tau_c = params.photon_lifetime_tau_c
    if max_time is None:
        max_time = 100.0 * tau_f
    if record_interval is None:
        record_interval = tau_f / 200.0
    if max_step is None:
        max_step = tau_f / 20.0

    scale_n2 = max(params.threshold_n2, params.pump_rate_Rp * tau_f, init.n2)
    scale_phi = max(params.steady_phi_estimate, params.spont_seed_S * tau_c, init.phi)
    if scale_phi == 0.0:
        scale_phi = scale_n2
    atol_n2 = 1e-14 * scale_n2
    atol_phi = 1e-14 * scale_phi
    rtol = min(1e-11, rel_tol * 1e-4)
    sigma_v = params.sigma * params.light_speed_v

    n2, phi, t = float(init.n2), float(init.phi), float(init.time_t)
    t_stop = t + max_time
    h = min(tau_c, tau_f) * 1e-3
    hold = 0
    accepted = rejected = 0
    converged = False
    ts, n2s, phis = [t], [n2], [phi]
    while t < t_stop and not converged:
        t_next = min(t + record_interval, t_stop)
        n2, phi, t, h, acc, rej, hold, converged = impl.integrate_rate(
            n2, phi, t, t_next, h,
            params.pump_rate_Rp, tau_f, tau_c, params.spont_seed_S, sigma_v,
            rtol, atol_n2, atol_phi, max_step,
            rel_tol, hold_steps, hold, 10_000_000,
        )
        accepted += acc
        rejected += rej
        if h <= 0.0:
            h = min(tau_c, tau_f) * 1e-3
        ts.append(t)
        n2s.append(n2)
        phis.append(phi)

    return RateSolution(
        state=GainState(n2, phi, t),
        converged=bool(converged),
        accepted_steps=accepted,
        rejected_steps=rejected,
        t=np.asarray(ts),
        n2=np.asarray(n2s),
        phi=np.asarray(phis),
    )


def gain_from_n2(n2, sigma, length_l):
    """Single-pass amplitude gain ``sqrt(exp(n2 * sigma * l))``."""
    if np.ndim(n2):
        return np.exp(0.5 * np.asarray(n2) * sigma * length_l)
    return math.exp(0.5 * n2 * sigma * length_l)


def loop_survival(cavity: CavityParams, bias_p, eta_d):
    """Round-trip amplitude survival ``r1 r2 t_s p^2 eta_d^2`` excluding gain."""
    t_s = math.sqrt(1.0 - cavity.r_s**2)
    return cavity.r1 * cavity.r2 * t_s * bias_p**2 * eta_d**2


def steady_state_gain(cavity: CavityParams, bias_p, eta_d):
    """Gain that balances the filtered loop: ``1 / (p eta_d sqrt(r1 r2 t_s))``."""
    denom = bias_p * eta_d
    if denom == 0:
        raise ZeroDivisionError("bias_p * eta_d is zero: no carrier survives the loop")
    t_s = math.sqrt(1.0 - cavity.r_s**2)
    return 1.0 / (denom * math.sqrt(cavity.r1 * cavity.r2 * t_s))


def pump_rate_from_power(power_Pin, medium: MediumParams, constants: PhysicalConstants):
    """Volumetric pump rate ``eta P_in / (h f_p V)`` with ``V = A_b l``."""
    volume = medium.cross_section_Ab * medium.length_l
    return medium.eta_pump * power_Pin / (constants.planck_h * medium.f_pump * volume)


def photon_lifetime_from_losses(cavity: CavityParams, bias_p, eta_d, round_trip_time):
    """Cavity decay time from the round-trip intensity survival ``s^2``."""
    s = loop_survival(cavity, bias_p, eta_d)
    if not 0 < s < 1:
        raise ValueError(f"loop survival must lie in (0, 1) for a finite lifetime (got {s})")
    return round_trip_time / (-math.log(s * s))


def medium_round_trip_time(medium: MediumParams, constants: PhysicalConstants):
    """Double transit time of the gain medium, ``2 l / v``.

    The rate equations carry no filling factor, so this is the round trip
    for which the dynamic steady state reproduces the loop-balance gain.
    """
    return 2.0 * medium.length_l / constants.light_speed_v


def rate_params_from_config(vcfg: ValidatedConfig, spont_seed_S=None) -> RateEquationParams:
    """Rate-equation parameters for the interference-free link of ``vcfg``.

    The default seed keeps ``S * tau_c`` at 1e-9 of the steady photon density.
    """
    med, const = vcfg.medium, vcfg.constants
    tau_c = photon_lifetime_from_losses(
        vcfg.cavity, vcfg.bias_p, vcfg.eta_d, medium_round_trip_time(med, const)
    )
    rp = pump_rate_from_power(vcfg.pump.power_Pin, med, const)
    params = RateEquationParams(rp, tau_c, 0.0, med.sigma, const.light_speed_v, med.tau_f)
    if spont_seed_S is None:
        phi_ref = params.steady_phi_estimate
        if phi_ref == 0.0:
            # below threshold: seed relative to the unsaturated inversion
            phi_ref = rp * med.tau_f
        spont_seed_S = 1e-9 * phi_ref / tau_c
    return RateEquationParams(rp, tau_c, spont_seed_S, med.sigma, const.light_speed_v, med.tau_f)


def write_trajectory_csv(solution: RateSolution, sigma, length_l, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "n2", "phi", "G"])
    g = np.exp(0.5 * solution.n2 * sigma * length_l)
    for row in zip(solution.t, solution.n2, solution.phi, g):
        writer.writerow([f"{v:.9e}" for v in row])
