"""Physical constants, link parameters and run-configuration files.

All quantities are SI. A configuration file is INI-style text with one
section per parameter group::

    [medium]
    sigma = 2.8e-23
    tau_f = 230e-6
    ...

Unknown sections or keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

__all__ = [
    "PhysicalConstants",
    "MediumParams",
    "CavityParams",
    "ModulationParams",
    "DetectorParams",
    "PumpParams",
    "LedParams",
    "SystemConfig",
    "ValidatedConfig",
    "ConfigError",
    "SWEEP_VARIABLES",
    "violations",
    "validate",
    "transmission_coefficient",
    "with_value",
    "load_config",
    "loads_config",
    "dumps_config",
    "save_config",
    "load_sweep_recipe",
]

# distance from the transmitter retroreflector to the modulator
TRANSMITTER_INTERNAL_LENGTH = 0.1

SWEEP_VARIABLES = ("depth_m", "r_s", "eta_d", "distance_d", "power_Pin")


class ConfigError(ValueError):
    """Raised when a configuration violates one or more constraints."""

    def __init__(self, problems):
        self.violations = list(problems)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class PhysicalConstants:
    # CODATA 2018 exact/recommended values
    planck_h: float = 6.62607015e-34
    electron_charge_q: float = 1.602176634e-19
    boltzmann_K: float = 1.380649e-23
    free_space_impedance_Z0: float = 376.730313668
    light_speed_v: float = 299792458.0


@dataclass(frozen=True)
class MediumParams:
    """Nd:YAG rod pumped at 808 nm, lasing at 1064 nm."""

    sigma: float = 2.8e-23
    tau_f: float = 230e-6
    eta_pump: float = 0.65
    cross_section_Ab: float = 7.854e-7
    length_l: float = 0.01
    f_carrier: float = 282e12
    f_pump: float = 371e12
    alpha0: float = 0.0


@dataclass(frozen=True)
class CavityParams:
    """Retroreflectors, splitter and the air path.

    ``tau_p`` and ``tau_a`` default to the light travel time over
    ``distance_d`` and over a 0.1 m transmitter-internal path. ``eta_d``
    overrides the diffraction/air-loss product when set.
    """

    r1: float = 1.0
    r2: float = 1.0
    r_s: float = 0.1
    eta_diff: float = 0.949
    alpha_air: float = 0.0
    distance_d: float = 5.0
    tau_p: Optional[float] = None
    tau_a: Optional[float] = None
    eta_d: Optional[float] = None


@dataclass(frozen=True)
class ModulationParams:
    depth_m: float = 0.1
    bias_p: Optional[float] = None  # None means 1 - depth_m
    f_offset: float = 20e9
    bandwidth_Bx: float = 5e9
    obpf_bandwidth_Bf: float = 10e9
    mean_sq_x: float = 0.3

    @property
    def operating_point(self) -> float:
        return 1.0 - self.depth_m if self.bias_p is None else self.bias_p


@dataclass(frozen=True)
class DetectorParams:
    responsivity_rho: float = 0.6
    detect_efficiency: float = 1.0
    load_R_L: float = 10e3
    temperature_T: float = 298.0
    background_current_Ibk: float = 5100e-6
    pd_area: float = 1e-4


@dataclass(frozen=True)
class PumpParams:
    power_Pin: float = 30.0


@dataclass(frozen=True)
class LedParams:
    """Lambertian LED reference link, evaluated at zero radiation/incidence angle."""

    transmit_power_Pt: float = 30.0
    receive_area_Ar: float = 1e-4
    lens_index_n: float = 1.5
    filter_gain_Ts: float = 1.0
    semi_angle_phi_half: float = math.radians(70.0)
    fov_psi_c: float = math.radians(60.0)


@dataclass(frozen=True)
class SystemConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    medium: MediumParams = field(default_factory=MediumParams)
    cavity: CavityParams = field(default_factory=CavityParams)
    modulation: ModulationParams = field(default_factory=ModulationParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    pump: PumpParams = field(default_factory=PumpParams)
    led: LedParams = field(default_factory=LedParams)


def transmission_coefficient(eta_diff, alpha_air, distance_d):
    """Amplitude transmission over the air path: ``eta_diff * exp(-alpha*d/2)``."""
    return eta_diff * math.exp(-alpha_air * distance_d / 2.0)


def _positive(problems, name, value):
    if not value > 0:
        problems.append(f"{name} must be > 0 (got {value!r})")


def violations(config: SystemConfig) -> list[str]:
    """Return every violated constraint of ``config`` (empty when valid)."""
    problems: list[str] = []

    if config.constants != PhysicalConstants():
        problems.append("constants are fixed at CODATA values and cannot be edited")

    med = config.medium
    for name in ("sigma", "tau_f", "cross_section_Ab", "length_l", "f_carrier", "f_pump"):
        _positive(problems, f"medium.{name}", getattr(med, name))
    if not 0 < med.eta_pump <= 1:
        problems.append(f"medium.eta_pump must lie in (0, 1] (got {med.eta_pump!r})")
    if not med.alpha0 >= 0:
        problems.append(f"medium.alpha0 must be >= 0 (got {med.alpha0!r})")
    if not med.f_pump > med.f_carrier:
        problems.append("medium.f_pump must exceed f_carrier (Stokes shift)")

    cav = config.cavity
    for name in ("r1", "r2"):
        v = getattr(cav, name)
        if not 0 < v <= 1:
            problems.append(f"cavity.{name} must lie in (0, 1] (got {v!r})")
    if not 0 <= cav.r_s < 1:
        problems.append(f"cavity.r_s must lie in [0, 1) (got {cav.r_s!r})")
    if not 0 < cav.eta_diff <= 1:
        problems.append(f"cavity.eta_diff must lie in (0, 1] (got {cav.eta_diff!r})")
    if not cav.alpha_air >= 0:
        problems.append(f"cavity.alpha_air must be >= 0 (got {cav.alpha_air!r})")
    _positive(problems, "cavity.distance_d", cav.distance_d)
    for name in ("tau_p", "tau_a"):
        v = getattr(cav, name)
        if v is not None and not v >= 0:
            problems.append(f"cavity.{name} must be >= 0 (got {v!r})")
    if cav.eta_d is not None and not 0 < cav.eta_d <= 1:
        problems.append(f"cavity.eta_d must lie in (0, 1] (got {cav.eta_d!r})")

    mod = config.modulation
    m, p = mod.depth_m, mod.operating_point
    if not m >= 0:
        problems.append(f"modulation.depth_m must be >= 0 (got {m!r})")
    if not p > m:
        problems.append(f"modulation: bias_p > depth_m required (got p={p!r}, m={m!r})")
    if not p + m <= 1 + 1e-12:
        problems.append(f"modulation: bias_p + depth_m <= 1 required (got {p + m!r})")
    _positive(problems, "modulation.bandwidth_Bx", mod.bandwidth_Bx)
    if not mod.f_offset > 3 * mod.bandwidth_Bx:
        problems.append("modulation: f_offset must exceed 3*bandwidth_Bx")
    if not 0 < mod.obpf_bandwidth_Bf < 2 * mod.f_offset - 2 * mod.bandwidth_Bx:
        problems.append(
            "modulation: obpf_bandwidth_Bf must satisfy 0 < B_f < 2*f_offset - 2*bandwidth_Bx"
        )
    if not 0 <= mod.mean_sq_x <= 1:
        problems.append(f"modulation.mean_sq_x must lie in [0, 1] (got {mod.mean_sq_x!r})")

    det = config.detector
    for name in ("responsivity_rho", "load_R_L", "temperature_T", "background_current_Ibk", "pd_area"):
        _positive(problems, f"detector.{name}", getattr(det, name))
    if not 0 < det.detect_efficiency <= 1:
        problems.append(
            f"detector.detect_efficiency must lie in (0, 1] (got {det.detect_efficiency!r})"
        )

    if not det.pd_area >= med.cross_section_Ab:
        problems.append("detector.pd_area must be >= medium.cross_section_Ab (beam focused onto the PD)")

    if not config.pump.power_Pin >= 0:
        problems.append(f"pump.power_Pin must be >= 0 (got {config.pump.power_Pin!r})")

    led = config.led
    if not led.transmit_power_Pt >= 0:
        problems.append("led.transmit_power_Pt must be >= 0")
    for name in ("receive_area_Ar", "lens_index_n", "filter_gain_Ts"):
        _positive(problems, f"led.{name}", getattr(led, name))
    for name in ("semi_angle_phi_half", "fov_psi_c"):
        v = getattr(led, name)
        if not 0 < v < math.pi / 2:
            problems.append(f"led.{name} must lie in (0, pi/2) rad (got {v!r})")
    return problems


@dataclass(frozen=True)
class ValidatedConfig:
    """A configuration known to satisfy every constraint, plus derived values.

    Build through :func:`validate`; constructing one directly skips the checks.
    """

    config: SystemConfig

    @property
    def constants(self) -> PhysicalConstants:
        return self.config.constants

    @property
    def medium(self) -> MediumParams:
        return self.config.medium

    @property
    def cavity(self) -> CavityParams:
        return self.config.cavity

    @property
    def modulation(self) -> ModulationParams:
        return self.config.modulation

    @property
    def detector(self) -> DetectorParams:
        return self.config.detector

    @property
    def pump(self) -> PumpParams:
        return self.config.pump

    @property
    def led(self) -> LedParams:
        return self.config.led

    @property
    def bias_p(self) -> float:
        return self.modulation.operating_point

    @property
    def t_s(self) -> float:
        return math.sqrt(1.0 - self.cavity.r_s**2)

    @property
    def eta_d(self) -> float:
        cav = self.cavity
        if cav.eta_d is not None:
            return cav.eta_d
        return transmission_coefficient(cav.eta_diff, cav.alpha_air, cav.distance_d)

    @property
    def tau_p(self) -> float:
        cav = self.cavity
        if cav.tau_p is not None:
            return cav.tau_p
        return cav.distance_d / self.constants.light_speed_v

    @property
    def tau_a(self) -> float:
        cav = self.cavity
        if cav.tau_a is not None:
            return cav.tau_a
        return TRANSMITTER_INTERNAL_LENGTH / self.constants.light_speed_v


def validate(config: SystemConfig | ValidatedConfig) -> ValidatedConfig:
    """Check every constraint and wrap the config, or raise :class:`ConfigError`
    listing all violations at once."""
    if isinstance(config, ValidatedConfig):
        config = config.config
    problems = violations(config)
    if problems:
        raise ConfigError(problems)
    if config.cavity.r1 != 1.0 or config.cavity.r2 != 1.0:
        warnings.warn(
            "closed-form carrier amplitude assumes unity retroreflectors (r1 = r2 = 1)",
            stacklevel=2,
        )
    return ValidatedConfig(config)


def with_value(config: SystemConfig | ValidatedConfig, variable: str, value: float) -> SystemConfig:
    """Return a copy of ``config`` with one sweepable quantity replaced.

    ``depth_m`` keeps the modulator at ``bias_p = 1 - depth_m``; ``eta_d``
    pins the end-to-end transmission directly, bypassing diffraction and air
    loss.
    """
    if isinstance(config, ValidatedConfig):
        config = config.config
    value = float(value)
    if variable == "depth_m":
        return replace(config, modulation=replace(config.modulation, depth_m=value, bias_p=1.0 - value))
    if variable == "r_s":
        return replace(config, cavity=replace(config.cavity, r_s=value))
    if variable == "eta_d":
        return replace(config, cavity=replace(config.cavity, eta_d=value))
    if variable == "distance_d":
        return replace(config, cavity=replace(config.cavity, distance_d=value, eta_d=None))
    if variable == "power_Pin":
        return replace(config, pump=replace(config.pump, power_Pin=value))
    raise ValueError(f"unknown variable {variable!r}; expected one of {SWEEP_VARIABLES}")


_SECTIONS = {
    "constants": PhysicalConstants,
    "medium": MediumParams,
    "cavity": CavityParams,
    "modulation": ModulationParams,
    "detector": DetectorParams,
    "pump": PumpParams,
    "led": LedParams,
}


def loads_config(text: str, source: str = "<string>") -> SystemConfig:
    """Parse configuration text. Missing keys take the baseline defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc

    problems = []
    groups = {}
    for section in parser.sections():
        if section == "sweep":
            continue
        cls = _SECTIONS.get(section)
        if cls is None:
            problems.append(f"unknown section [{section}]")
            continue
        known = {f.name for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in known:
                problems.append(f"unknown key {section}.{key}")
                continue
            raw = raw.strip()
            if raw.lower() in ("", "auto", "none"):
                values[key] = None
                continue
            try:
                values[key] = float(raw)
            except ValueError:
                problems.append(f"{section}.{key}: not a number ({raw!r})")
        groups[section] = values
    if problems:
        raise ConfigError(problems)

    kwargs = {}
    for section, cls in _SECTIONS.items():
        values = groups.get(section, {})
        defaults = cls()
        for key, val in list(values.items()):
            if val is None and getattr(defaults, key) is not None:
                problems.append(f"{section}.{key}: a value is required")
        kwargs[section] = replace(defaults, **values)
    if problems:
        raise ConfigError(problems)
    return SystemConfig(**kwargs)


_SWEEP_KEYS = {"variable", "start", "stop", "num_points", "led"}


def load_sweep_recipe(path) -> dict:
    """Read the optional ``[sweep]`` section of a config file.

    Keys: ``variable``, ``start``, ``stop``, ``num_points`` and ``led``
    (true/false). Returns an empty dict when the section is absent.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(Path(path).read_text(), source=str(path))
    if not parser.has_section("sweep"):
        return {}
    items = dict(parser.items("sweep"))
    unknown = sorted(set(items) - _SWEEP_KEYS)
    if unknown:
        raise ConfigError([f"unknown key sweep.{k}" for k in unknown])
    recipe = {}
    if "variable" in items:
        recipe["variable"] = items["variable"].strip()
    for key in ("start", "stop"):
        if key in items:
            recipe[key] = float(items[key])
    if "num_points" in items:
        recipe["num_points"] = int(items["num_points"])
    if "led" in items:
        recipe["led"] = parser.getboolean("sweep", "led")
    return recipe


def load_config(path) -> SystemConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    return loads_config(path.read_text(), source=str(path))


def dumps_config(config: SystemConfig | ValidatedConfig) -> str:
    if isinstance(config, ValidatedConfig):
        config = config.config
    lines = []
    for section in _SECTIONS:
        group = getattr(config, section)
        lines.append(f"[{section}]")
        for f in fields(group):
            val = getattr(group, f.name)
            lines.append(f"{f.name} = {'auto' if val is None else repr(val)}")
        lines.append("")
    return "\n".join(lines)


def save_config(config, path) -> None:
    Path(path).write_text(dumps_config(config))
