"""Physical parameters of the MR-clutch + hydrostatic actuation line.

All quantities are SI, expressed as reflected linear quantities at the master
cylinder: the clutch torque path and the hydraulic column are folded into
equivalent masses, dampers and springs acting along one translation axis.
Pressure is carried internally as a force-equivalent (N at the master piston);
conversion to Pa (divide by ``A_master``) is left to presentation code.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields


class ConfigError(Exception):
    """Config file is missing, unreadable, or malformed."""


class UnknownKeyError(ConfigError):
    """Config file contains a key that is not part of the schema."""


class ValidationError(ValueError):
    """A physical parameter violates its sign/range invariant."""


@dataclass(frozen=True)
class ActuationLineParams:
    """Lumped parameters of one actuation line (drive side through fluid)."""

    m1: float = 1.0        # kg, reflected clutch output rotor + master piston
    b1: float = 210.0      # N*s/m, clutch-side viscous friction
    k1: float = 2.76e5     # N/m, power-unit transmission stiffness
    m2: float = 9.65       # kg, reflected hydraulic fluid mass
    b2: float = 98.0       # N*s/m, hydraulic viscous damping
    k2: float = 2.76e5     # N/m, hydraulic stiffness
    tau: float = 0.010     # s, time constant of the clutch magnetic circuit
    K_I: float = 1.0       # N/A, clutch current-to-force gain at the master piston
    A_master: float = 826e-6   # m^2, master cylinder effective area
    A_slave: float = 671e-6    # m^2, slave cylinder effective area
    I_min: float = 0.0     # A, lower current clamp (one-way clutch: >= 0)
    I_max: float = 3.5     # A, upper current clamp

    def __post_init__(self):
        for name in ("m1", "m2", "k1", "k2", "tau", "K_I", "A_master", "A_slave"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("b1", "b2"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not 0.0 <= self.I_min < self.I_max:
            raise ValidationError(
                f"require 0 <= I_min < I_max, got I_min={self.I_min!r}, I_max={self.I_max!r}"
            )


@dataclass(frozen=True)
class BlockedLoad:
    """Output rigidly held: the load displacement is identically zero."""


@dataclass(frozen=True)
class CompliantLoad:
    """Mass-spring-damper load attached to the line output."""

    m3: float = 1.87       # kg
    b3: float = 20.0       # N*s/m
    k3: float = 12000.0    # N/m

    def __post_init__(self):
        if self.m3 <= 0.0:
            raise ValidationError(f"m3 must be > 0, got {self.m3!r}")
        if self.b3 < 0.0 or self.k3 < 0.0:
            raise ValidationError("b3 and k3 must be >= 0")


LoadImpedance = BlockedLoad | CompliantLoad


@dataclass(frozen=True)
class HardwareGeometry:
    """Geometry needed for derived quantities (reflected fluid mass, torque)."""

    hose_length: float = 1.0            # m
    hose_inner_diameter: float = 0.0095  # m
    fluid_density: float = 1000.0       # kg/m^3
    cylinder_area: float = 826e-6       # m^2, area whose motion reflects the fluid
    pulley_radius: float = 0.006        # m, clutch cable pulley
    clutch_torque_rating: float = 4.0   # N*m

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise ValidationError(f"{f.name} must be > 0, got {getattr(self, f.name)!r}")


@dataclass(frozen=True)
class JointSpec:
    """Torque capacity and range of motion of one arm joint."""

    torque_capacity: float  # N*m
    rom_min: float          # deg
    rom_max: float          # deg

    def __post_init__(self):
        if self.torque_capacity <= 0.0:
            raise ValidationError("torque_capacity must be > 0")
        if not self.rom_min < self.rom_max:
            raise ValidationError("require rom_min < rom_max")

    def exceeds_capacity(self, torque: float) -> bool:
        """Rating check only; callers decide what to do, nothing is clamped."""
        return abs(torque) > self.torque_capacity


# Config file schema: flat `key = value` lines, `#` comments, SI units.
_PARAM_KEYS = ("m1", "b1", "k1", "m2", "b2", "k2", "tau", "K_I",
               "A_master", "A_slave", "I_min", "I_max")
_LOAD_KEYS = ("load.kind", "load.m3", "load.b3", "load.k3")
_GEOM_KEYS = ("hose.length", "hose.diameter", "fluid.density", "pulley.radius")
CONFIG_KEYS = _PARAM_KEYS + _LOAD_KEYS + _GEOM_KEYS

_GEOM_FIELD = {"hose.length": "hose_length", "hose.diameter": "hose_inner_diameter",
               "fluid.density": "fluid_density", "pulley.radius": "pulley_radius"}


def parse_config(text: str) -> tuple[ActuationLineParams, LoadImpedance, HardwareGeometry]:
    """Parse config text into validated parameter structures.

    Unspecified keys take the documented defaults (a fully default line with a
    compliant load). Unknown keys are errors, not warnings: silent typos
    corrupt physics.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        raw[key] = value

    def as_float(key: str) -> float:
        try:
            return float(raw[key])
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not a number: {raw[key]!r}") from exc

    params_kwargs = {k: as_float(k) for k in _PARAM_KEYS if k in raw}
    params = ActuationLineParams(**params_kwargs)

    kind = raw.get("load.kind", "compliant").lower()
    if kind == "blocked":
        for k in ("load.m3", "load.b3", "load.k3"):
            if k in raw:
                raise ConfigError(f"{k} given but load.kind is 'blocked'")
        load: LoadImpedance = BlockedLoad()
    elif kind == "compliant":
        load_kwargs = {k.split(".")[1]: as_float(k) for k in ("load.m3", "load.b3", "load.k3")
                       if k in raw}
        load = CompliantLoad(**load_kwargs)
    else:
        raise ConfigError(f"load.kind must be 'blocked' or 'compliant', got {kind!r}")

    geom_kwargs = {_GEOM_FIELD[k]: as_float(k) for k in _GEOM_KEYS if k in raw}
    geom = HardwareGeometry(**geom_kwargs)
    return params, load, geom


def load_config(path) -> tuple[ActuationLineParams, LoadImpedance, HardwareGeometry]:
    """Read and parse a config file; see `parse_config` for the format."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def config_text(params: ActuationLineParams, load: LoadImpedance,
                geom: HardwareGeometry | None = None) -> str:
    """Canonical config text: fixed key order, shortest round-trip floats."""
    lines = [f"{k} = {getattr(params, k)!r}" for k in _PARAM_KEYS]
    if isinstance(load, BlockedLoad):
        lines.append("load.kind = blocked")
    else:
        lines.append("load.kind = compliant")
        lines += [f"load.{k} = {getattr(load, k)!r}" for k in ("m3", "b3", "k3")]
    if geom is not None:
        lines += [f"{key} = {getattr(geom, field)!r}" for key, field in _GEOM_FIELD.items()]
    return "\n".join(lines) + "\n"


def save_config(path, params: ActuationLineParams, load: LoadImpedance,
                geom: HardwareGeometry | None = None) -> None:
    """Write the canonical config; load_config(save_config(...)) round-trips."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_text(params, load, geom))


def config_digest(params: ActuationLineParams, load: LoadImpedance,
                  geom: HardwareGeometry | None = None) -> str:
    """Stable hash of the resolved configuration (for output provenance)."""
    return hashlib.sha256(config_text(params, load, geom).encode()).hexdigest()[:16]


def derive_hydraulic_mass(geom: HardwareGeometry) -> float:
    """Reflected mass of the hose fluid column as seen by the cylinder.

    A cylinder displacement x moves fluid volume A_cyl*x through the hose, so
    the fluid velocity is scaled by A_cyl/A_hose and the kinetic energy by its
    square: m = rho*L*A_hose*(A_cyl/A_hose)^2 = rho*L*A_cyl^2/A_hose. The
    result grows linearly with hose length and with the inverse square of the
    hose diameter.
    """
    a_hose = math.pi * geom.hose_inner_diameter**2 / 4.0
    return geom.fluid_density * geom.hose_length * geom.cylinder_area**2 / a_hose


def joint_torque(f_a: float, f_b: float, radius: float) -> float:
    """Net torque of an antagonist cylinder pair pulling on a joint pulley.

    Cables only pull: negative cable forces are rejected. Capacity checks are
    reported by `JointSpec.exceeds_capacity`, never applied silently.
    """
    if f_a < 0.0 or f_b < 0.0:
        raise ValidationError(f"cable forces must be >= 0, got ({f_a!r}, {f_b!r})")
    if radius <= 0.0:
        raise ValidationError(f"pulley radius must be > 0, got {radius!r}")
    return (f_a - f_b) * radius
