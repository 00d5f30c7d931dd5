"""Run configurations: YAML documents with flat sections, validated into RunConfig."""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import yaml

from .exceptions import ConfigError, GuardError
from .geom import EUCLIDEAN, HYPERBOLIC, Geometry
from .solver import NONLINEARITIES, DataGenerator, EquationSpec, PotentialSpec

logger = logging.getLogger(__name__)

EXPERIMENT_NAMES = (
    "heat_kernel",
    "spectral_gap",
    "littlewood_paley",
    "refined_sobolev",
    "dispersive_decay",
    "strichartz_admissible",
    "energy_conservation",
    "morawetz",
    "identities",
    "local_energy_decay",
    "euclidean_approx",
    "traveling_forcing",
    "pythagorean",
    "profile_extraction",
    "scattering",
)

TOLERANCE_DEFAULTS: Dict[str, float] = {
    "heat_kernel_error": 1e-2,
    "heat_kernel_order": 1.5,
    "spectral_gap_slack": 1e-3,
    "lp_agreement": 0.02,
    "reconstruction_defect": 0.05,
    "sobolev_spread": 2.0,
    "decay_exponent_tol": 0.15,
    "energy_drift": 1e-5,
    "energy_order": 1.9,
    "round_trip": 1e-6,
    "morawetz_residual": 5e-3,
    "morawetz_order": 1.0,
    "morawetz_constant": 4.0,
    "multiplier_identity": 1e-4,
    "spot_value": 1e-5,
    "led_saturation": 0.02,
    "led_ratio": 10.0,
    "led_potential_factor": 3.0,
    "forcing_ratio": 0.1,
    "pythagorean_orthogonal": 0.05,
    "pythagorean_colliding": 0.2,
    "extraction_factor": 2.0,
    "scattering_ratio_min": 0.4,
    "scattering_ratio_max": 0.6,
    "strichartz_saturation": 0.01,
    "large_data_drift": 1e-4,
}

DATA_KINDS = ("zero", "gaussian_bump", "smooth_cutoff_polynomial")
POTENTIAL_KINDS = ("none", "bump")
WORKERS_ENV = "HYPWAVE_WORKERS"


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = HYPERBOLIC
    dimension: int = 3
    mass_shift: float = 0.0


@dataclass(frozen=True)
class PotentialConfig:
    kind: str = "none"
    amplitude: float = 1.0
    radius: float = 1.0


@dataclass(frozen=True)
class EquationConfig:
    nonlinearity: str = "none"
    potential: PotentialConfig = field(default_factory=PotentialConfig)


@dataclass(frozen=True)
class GridConfig:
    h: float = 0.005
    r_max: Optional[float] = None


@dataclass(frozen=True)
class TimeConfig:
    T: Optional[float] = None
    cfl: float = 0.9
    snapshot_stride: int = 20


@dataclass(frozen=True)
class DataConfig:
    kind: str = "gaussian_bump"
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    velocity_amplitude: float = 0.0


@dataclass(frozen=True)
class SweepConfig:
    over: Optional[str] = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration.

    Sections the experiment does not use are carried along unchanged; they
    still enter the provenance hash. `time.T = None` selects the experiment's
    own horizon, and `grid.r_max = None` auto-sizes the domain.
    """
    experiment: str
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    equation: EquationConfig = field(default_factory=EquationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    data: DataConfig = field(default_factory=DataConfig)
    schedules: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)

    def geometry_spec(self) -> Geometry:
        g = self.geometry
        return Geometry(g.kind, g.dimension, g.mass_shift)

    def potential_spec(self) -> Optional[PotentialSpec]:
        p = self.equation.potential
        if p.kind == "none":
            return None
        return PotentialSpec.bump(p.amplitude, p.radius)

    def equation_spec(self) -> EquationSpec:
        return EquationSpec(self.geometry_spec(), self.potential_spec(), self.equation.nonlinearity)

    def data_generator(self) -> DataGenerator:
        d = self.data
        return DataGenerator(d.kind, d.amplitude, d.width, d.center, d.velocity_amplitude)

    def horizon(self, default: float) -> float:
        return default if self.time.T is None else self.time.T

    def schedule(self, name: str, default: Sequence[float]) -> Tuple[float, ...]:
        return tuple(self.schedules.get(name, tuple(float(v) for v in default)))

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, TOLERANCE_DEFAULTS[name])

    def for_schedule_value(self, name: str, value: float) -> "RunConfig":
        """The same run restricted to one entry of a schedule."""
        schedules = dict(self.schedules)
        schedules[name] = (float(value),)
        return replace(self, schedules=schedules, sweep=SweepConfig())

    def canonical(self) -> Dict[str, Any]:
        data = asdict(self)
        data["schedules"] = {k: list(v) for k, v in sorted(self.schedules.items())}
        data["tolerances"] = dict(sorted(self.tolerances.items()))
        return data

    def config_hash(self) -> str:
        return config_hash(self)


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form; the provenance key of every report."""
    return hashlib.sha256(canonical_json(config.canonical()).encode("utf-8")).hexdigest()


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return value


def _positive(value: Any, key: str) -> float:
    value = _number(value, key)
    if value <= 0:
        raise ConfigError(key, f"must be positive, got {value:g}")
    return value


def _integer(value: Any, key: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {value}")
    return value


def _choice(value: Any, key: str, allowed: Sequence[str]) -> str:
    if value not in allowed:
        raise ConfigError(key, f"expected one of {', '.join(allowed)}, got {value!r}")
    return value


def _section(mapping: Mapping[str, Any], name: str, allowed: Sequence[str]) -> Dict[str, Any]:
    section = mapping.get(name) or {}
    if not isinstance(section, Mapping):
        raise ConfigError(name, "expected a mapping")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return dict(section)


def _geometry(mapping: Mapping[str, Any]) -> GeometryConfig:
    section = _section(mapping, "geometry", ("kind", "dimension", "mass_shift"))
    config = GeometryConfig(
        kind=_choice(section.get("kind", HYPERBOLIC), "geometry.kind", (HYPERBOLIC, EUCLIDEAN)),
        dimension=_integer(section.get("dimension", 3), "geometry.dimension", 2),
        mass_shift=_number(section.get("mass_shift", 0.0), "geometry.mass_shift"),
    )
    try:
        Geometry(config.kind, config.dimension, config.mass_shift)
    except GuardError as e:
        raise ConfigError("geometry.mass_shift", str(e)) from e
    return config


def _equation(mapping: Mapping[str, Any]) -> EquationConfig:
    section = _section(mapping, "equation", ("nonlinearity", "potential"))
    raw = section.get("potential") or {}
    if not isinstance(raw, Mapping):
        raise ConfigError("equation.potential", "expected a mapping")
    for key in raw:
        if key not in ("kind", "amplitude", "radius"):
            raise ConfigError(f"equation.potential.{key}", "unknown key")
    amplitude = _number(raw.get("amplitude", 1.0), "equation.potential.amplitude")
    if amplitude < 0:
        raise ConfigError("equation.potential.amplitude", f"must be nonnegative, got {amplitude:g}")
    potential = PotentialConfig(
        kind=_choice(raw.get("kind", "none"), "equation.potential.kind", POTENTIAL_KINDS),
        amplitude=amplitude,
        radius=_positive(raw.get("radius", 1.0), "equation.potential.radius"),
    )
    nonlinearity = _choice(section.get("nonlinearity", "none"), "equation.nonlinearity", NONLINEARITIES)
    return EquationConfig(nonlinearity, potential)


def _grid(mapping: Mapping[str, Any]) -> GridConfig:
    section = _section(mapping, "grid", ("h", "r_max"))
    r_max = section.get("r_max")
    return GridConfig(
        h=_positive(section.get("h", 0.005), "grid.h"),
        r_max=None if r_max is None else _positive(r_max, "grid.r_max"),
    )


def _time(mapping: Mapping[str, Any]) -> TimeConfig:
    section = _section(mapping, "time", ("T", "cfl", "snapshot_stride"))
    T = section.get("T")
    cfl = _number(section.get("cfl", 0.9), "time.cfl")
    if not 0 < cfl <= 1:
        raise ConfigError("time.cfl", f"must lie in (0, 1], got {cfl:g}")
    return TimeConfig(
        T=None if T is None else _positive(T, "time.T"),
        cfl=cfl,
        snapshot_stride=_integer(section.get("snapshot_stride", 20), "time.snapshot_stride", 1),
    )


def _data(mapping: Mapping[str, Any]) -> DataConfig:
    section = _section(mapping, "data", ("kind", "amplitude", "width", "center", "velocity_amplitude"))
    center = _number(section.get("center", 0.0), "data.center")
    if center < 0:
        raise ConfigError("data.center", f"must be nonnegative, got {center:g}")
    return DataConfig(
        kind=_choice(section.get("kind", "gaussian_bump"), "data.kind", DATA_KINDS),
        amplitude=_number(section.get("amplitude", 1.0), "data.amplitude"),
        width=_positive(section.get("width", 1.0), "data.width"),
        center=center,
        velocity_amplitude=_number(section.get("velocity_amplitude", 0.0), "data.velocity_amplitude"),
    )


def _schedule(value: Any, key: str) -> Tuple[float, ...]:
    """A list of numbers, or {start, factor, count} for a geometric schedule."""
    if isinstance(value, Mapping):
        for name in value:
            if name not in ("start", "factor", "count"):
                raise ConfigError(f"{key}.{name}", "unknown key")
        start = _number(value.get("start"), f"{key}.start")
        factor = _positive(value.get("factor", 2.0), f"{key}.factor")
        count = _integer(value.get("count"), f"{key}.count", 0)
        return tuple(start * factor**i for i in range(count))
    if not isinstance(value, (list, tuple)):
        raise ConfigError(key, "expected a list of numbers or {start, factor, count}")
    return tuple(_number(v, f"{key}[{i}]") for i, v in enumerate(value))


def _schedules(mapping: Mapping[str, Any]) -> Dict[str, Tuple[float, ...]]:
    section = mapping.get("schedules") or {}
    if not isinstance(section, Mapping):
        raise ConfigError("schedules", "expected a mapping")
    return {str(name): _schedule(value, f"schedules.{name}") for name, value in section.items()}


def _tolerances(mapping: Mapping[str, Any]) -> Dict[str, float]:
    section = _section(mapping, "tolerances", tuple(TOLERANCE_DEFAULTS))
    return {name: _positive(value, f"tolerances.{name}") for name, value in section.items()}


SECTIONS = (
    "experiment",
    "geometry",
    "equation",
    "grid",
    "time",
    "data",
    "schedules",
    "sweep",
    "output",
    "seed",
    "tolerances",
)


def config_from_mapping(mapping: Mapping[str, Any]) -> RunConfig:
    """Validate a parsed document and apply defaults.

    Raises:
        ConfigError: naming the dotted key of the first offending entry
    """
    if not isinstance(mapping, Mapping):
        raise ConfigError("<root>", "a configuration must be a mapping")
    for key in mapping:
        if key not in SECTIONS:
            raise ConfigError(str(key), "unknown section")
    if "experiment" not in mapping:
        raise ConfigError("experiment", "missing")
    experiment = _choice(mapping["experiment"], "experiment", EXPERIMENT_NAMES)

    schedules = _schedules(mapping)
    sweep_section = _section(mapping, "sweep", ("over",))
    over = sweep_section.get("over")
    if over is not None and over not in schedules:
        raise ConfigError("sweep.over", f"names no schedule: {over!r}")
    output = _section(mapping, "output", ("directory",))
    directory = output.get("directory", "results")
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory", "expected a nonempty path")

    config = RunConfig(
        experiment=experiment,
        geometry=_geometry(mapping),
        equation=_equation(mapping),
        grid=_grid(mapping),
        time=_time(mapping),
        data=_data(mapping),
        schedules=schedules,
        sweep=SweepConfig(over),
        output=OutputConfig(directory),
        seed=_integer(mapping.get("seed", 0), "seed", 0),
        tolerances=_tolerances(mapping),
    )
    if config.geometry.dimension != 3:
        raise ConfigError("geometry.dimension", "time-dependent experiments need dimension 3")
    logger.debug("config %s validated (%s)", experiment, config_hash(config)[:12])
    return config


def parse_config(path: Union[str, Path]) -> RunConfig:
    """Read a YAML run configuration.

    Raises:
        ConfigError: for unreadable files, malformed YAML, unknown keys and guard violations
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("<file>", f"cannot read {path}: {e}") from e
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<file>", f"malformed YAML in {path}: {e}") from e
    return config_from_mapping(document if document is not None else {})


def worker_count() -> int:
    """Sweep pool size: HYPWAVE_WORKERS, or min(4, cpu count)."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}") from None
    if value <= 0:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}")
    return value
