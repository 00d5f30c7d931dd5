"""Radial linear and defocusing quintic waves on hyperbolic and flat 3-space.

The solver evolves w = S(r)·u, which turns the radial wave operator into the
constant-coefficient one-dimensional operator

    w_tt = w_rr − (c₀ + μ + V)w − w⁵/S⁴,   c₀ = 1 (ℍ³) or 0 (ℝ³),

with Dirichlet conditions at r = 0 and r = r_max. Time stepping is velocity
Verlet (kick–drift–kick). The discrete energy below is exactly the
Hamiltonian of the semi-discrete system, so its drift measures time
discretization error only.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .diagnostics import grid_multipliers
from .exceptions import DomainTooSmallError, GuardError, SolverAbort
from .geom import (
    PHYSICAL,
    Geometry,
    RadialField,
    RadialGrid,
    physical_from_substituted,
    support_radius,
)

logger = logging.getLogger(__name__)

LINEAR = "none"
DEFOCUSING_QUINTIC = "defocusing_quintic"
NONLINEARITIES = (LINEAR, DEFOCUSING_QUINTIC)

DEFAULT_CFL = 0.9
FLAG_SLACK = 1e-12
DATA_SUPPORT_TOL = 1e-14

CHANNELS = (
    "t",
    "energy_EV",
    "energy_nl",
    "shadow_energy",
    "l2",
    "l6",
    "l10",
    "strichartz_accum_5_10",
    "morawetz_accum",
    "led_accum",
    "morawetz_flux",
    "bulk_arr_ur2",
    "bulk_potential",
    "bulk_sextic",
    "bulk_angular",
    "weighted_grad",
    "tanh_potential",
    "nl_l2",
)


class SupportedFunction:
    """Vectorized radial function carrying the radius beyond which it vanishes."""

    def __init__(self, fn, support_radius: float):
        self.fn = fn
        self.support_radius = support_radius

    def __call__(self, r):
        return self.fn(np.asarray(r, dtype=float))


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Radial potential V(r) with a finite support radius.

    Attributes:
        kind: "bump" (A(1 − (r/a)²)³ on r < a) or "sampled"
        amplitude: A for bumps
        support_radius: a; V vanishes for r ≥ a
        decay_rate: recorded exponential decay rate α₁ (compactly supported data use 0)
        nonnegative: V ≥ 0 is asserted on every grid it is used on
        repulsive: ∂_rV ≤ 0 is asserted on every grid it is used on
        samples: (r, V) nodes for sampled potentials
    """
    kind: str
    amplitude: float = 0.0
    support_radius: float = 0.0
    decay_rate: float = 0.0
    nonnegative: bool = False
    repulsive: bool = False
    samples: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("bump", "sampled"):
            raise GuardError(f"unknown potential kind {self.kind!r}")
        if self.support_radius <= 0:
            raise GuardError("potentials need a positive support radius")
        if self.kind == "sampled":
            if self.samples is None:
                raise GuardError("sampled potentials need samples")
            spline = CubicSpline(np.asarray(self.samples[0], float), np.asarray(self.samples[1], float))
            object.__setattr__(self, "_spline", spline)

    @classmethod
    def bump(cls, amplitude: float, radius: float) -> "PotentialSpec":
        """Nonnegative, repulsive C² bump A(1 − (r/a)²)³."""
        if amplitude < 0:
            raise GuardError(f"bump amplitude must be nonnegative, got {amplitude}")
        return cls("bump", amplitude, radius, nonnegative=True, repulsive=True)

    @classmethod
    def sampled(cls, r: Sequence[float], values: Sequence[float], *, nonnegative=False, repulsive=False) -> "PotentialSpec":
        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=float)
        nonzero = np.nonzero(values)[0]
        extent = float(r[nonzero[-1] + 1]) if nonzero.size and nonzero[-1] + 1 < r.size else float(r[-1])
        return cls("sampled", support_radius=extent, nonnegative=nonnegative, repulsive=repulsive, samples=(r, values))

    @staticmethod
    def none() -> None:
        return None

    def values(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = r < self.support_radius
        if self.kind == "bump":
            x = np.where(inside, r / self.support_radius, 1.0)
            return np.where(inside, self.amplitude * (1.0 - x**2) ** 3, 0.0)
        return np.where(inside, self._spline(np.clip(r, self.samples[0][0], None)), 0.0)

    def radial_derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = r < self.support_radius
        if self.kind == "bump":
            a = self.support_radius
            x = np.where(inside, r / a, 1.0)
            return np.where(inside, -6.0 * self.amplitude * x * (1.0 - x**2) ** 2 / a, 0.0)
        return np.where(inside, self._spline(np.clip(r, self.samples[0][0], None), 1), 0.0)

    def as_weight(self, power: int = 1) -> SupportedFunction:
        return SupportedFunction(lambda r: self.values(r) ** power, self.support_radius)

    def validate_on(self, grid: RadialGrid) -> None:
        """Assert the nonnegative and repulsive flags on the grid nodes."""
        v = self.values(grid.nodes)
        if self.nonnegative and v.min() < -FLAG_SLACK:
            raise GuardError(f"potential flagged nonnegative has minimum {v.min():.3e}")
        if self.repulsive:
            increments = np.diff(v) / grid.spacing
            if increments.max() > FLAG_SLACK:
                raise GuardError(f"potential flagged repulsive increases by {increments.max():.3e}")


@dataclass(frozen=True, eq=False)
class EquationSpec:
    """u_tt − Δu + μu + Vu = −u⁵ (quintic) or 0 (linear); μ is the geometry's mass shift."""
    geometry: Geometry = field(default_factory=Geometry)
    potential: Optional[PotentialSpec] = None
    nonlinearity: str = LINEAR

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise GuardError(f"unknown nonlinearity {self.nonlinearity!r}")
        self.geometry.require_solver_dimension()

    @property
    def mass_shift(self) -> float:
        return self.geometry.mass_shift

    @property
    def linear(self) -> bool:
        return self.nonlinearity == LINEAR

    @property
    def free(self) -> bool:
        return self.linear and self.potential is None

    def without_potential(self) -> "EquationSpec":
        return replace(self, potential=None)

    def linearized(self) -> "EquationSpec":
        return replace(self, nonlinearity=LINEAR)

    def free_equation(self) -> "EquationSpec":
        return replace(self, potential=None, nonlinearity=LINEAR)


@dataclass(frozen=True)
class DataGenerator:
    """Initial data recipe; the velocity has the same shape times velocity_amplitude.

    Kinds:
        zero
        gaussian_bump: A(e^{−((r−c)/w)²} + e^{−((r+c)/w)²})/2, even in r
        smooth_cutoff_polynomial: A(1 − (r/w)²)⁴ on r < w
        sampled: A times the cubic interpolation of (r, u) samples, zero beyond the last sample
    """
    kind: str = "gaussian_bump"
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    velocity_amplitude: float = 0.0
    samples: Optional[Tuple[Sequence[float], Sequence[float]]] = None

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian_bump", "smooth_cutoff_polynomial", "sampled"):
            raise GuardError(f"unknown data generator {self.kind!r}")
        if self.kind != "zero" and self.kind != "sampled" and self.width <= 0:
            raise GuardError(f"data width must be positive, got {self.width}")
        if self.kind == "sampled" and self.samples is None:
            raise GuardError("sampled data need samples")

    def shape(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "gaussian_bump":
            w, c = self.width, self.center
            return 0.5 * (np.exp(-(((r - c) / w) ** 2)) + np.exp(-(((r + c) / w) ** 2)))
        if self.kind == "smooth_cutoff_polynomial":
            x = r / self.width
            return np.where(x < 1.0, (1.0 - np.minimum(x, 1.0) ** 2) ** 4, 0.0)
        nodes = np.asarray(self.samples[0], dtype=float)
        spline = CubicSpline(nodes, np.asarray(self.samples[1], dtype=float), bc_type="clamped")
        return np.where(r <= nodes[-1], spline(np.clip(r, nodes[0], nodes[-1])), 0.0)

    def position(self, r) -> np.ndarray:
        return self.amplitude * self.shape(r)

    def velocity(self, r) -> np.ndarray:
        return self.velocity_amplitude * self.shape(r)

    def support_radius(self) -> float:
        """Radius beyond which the shape is below 1e-14 of its peak."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "smooth_cutoff_polynomial":
            return self.width
        if self.kind == "gaussian_bump":
            return self.center + self.width * math.sqrt(-math.log(DATA_SUPPORT_TOL))
        return float(np.asarray(self.samples[0])[-1])


@dataclass(frozen=True, eq=False)
class State:
    """Data (u, u_t) at one time."""
    u: RadialField
    ut: RadialField
    time: float
    equation: EquationSpec

    def __post_init__(self):
        if not self.u.grid.same_as(self.ut.grid):
            raise GuardError("u and u_t must share one grid")

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    def with_fields(self, u: RadialField, ut: RadialField, time: Optional[float] = None) -> "State":
        return State(u, ut, self.time if time is None else time, self.equation)

    def reversed(self) -> "State":
        return self.with_fields(self.u, -self.ut)


@dataclass(frozen=True, eq=False)
class DataPair:
    """Equation-free data (u, u_t), e.g. a flat-space pair before concentration."""
    u: RadialField
    ut: RadialField

    def __post_init__(self):
        if not self.u.grid.same_as(self.ut.grid):
            raise GuardError("u and u_t must share one grid")

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    def as_state(self, equation: EquationSpec, time: float = 0.0) -> State:
        return State(self.u, self.ut, time, equation)


def _tail_vanishes(values: np.ndarray) -> bool:
    count = max(8, int(math.ceil(0.05 * values.size)))
    peak = float(np.max(np.abs(values)))
    return peak == 0.0 or float(np.max(np.abs(values[-count:]))) <= 1e-10 * peak


def make_state(generator: DataGenerator, equation: EquationSpec, grid: RadialGrid) -> State:
    """Sample a data generator on a grid at time 0.

    Raises:
        GuardError: if the grid does not match the equation's geometry, the
            bump centre lies outside the grid or the data do not vanish near r_max
    """
    geometry = grid.geometry
    if geometry.kind != equation.geometry.kind or geometry.dimension != equation.geometry.dimension:
        raise GuardError("grid geometry does not match the equation")
    if generator.kind == "gaussian_bump" and generator.center >= grid.r_max:
        raise GuardError(f"bump centre {generator.center} lies beyond r_max = {grid.r_max}")
    u = generator.position(grid.nodes)
    ut = generator.velocity(grid.nodes)
    if not (_tail_vanishes(u) and _tail_vanishes(ut)):
        raise GuardError("initial data do not vanish near r_max; enlarge the grid")
    if equation.potential is not None:
        equation.potential.validate_on(grid)
    return State(RadialField(grid, u), RadialField(grid, ut), 0.0, equation)


def zero_state(equation: EquationSpec, grid: RadialGrid) -> State:
    return State(grid.zeros(), grid.zeros(), 0.0, equation)


def required_r_max(data_support: float, potential: Optional[PotentialSpec], T: float, margin: float = 2.0) -> float:
    """supp(data) + supp(V) + T + margin."""
    extent = potential.support_radius if potential is not None else 0.0
    return data_support + extent + T + margin


def check_domain(state: State, T: float) -> None:
    """Raise DomainTooSmallError unless r_max ≥ supp(data) + supp(V) + T + 3h."""
    grid = state.grid
    extent = max(support_radius(state.u), support_radius(state.ut))
    potential = state.equation.potential
    reach = potential.support_radius if potential is not None else 0.0
    needed = extent + reach + abs(T) + 3.0 * grid.spacing
    if grid.r_max < needed:
        raise DomainTooSmallError(
            f"r_max = {grid.r_max:g} cannot hold data of support {extent:g} with a potential "
            f"of support {reach:g} for T = {T:g}; need {needed:g}"
        )


class _Discretization:
    """Per-grid arrays of the semi-discrete w-system."""

    def __init__(self, equation: EquationSpec, grid: RadialGrid):
        if grid.geometry.kind != equation.geometry.kind:
            raise GuardError("state grid does not match the equation geometry")
        self.grid = grid
        self.h = grid.spacing
        self.quintic = equation.nonlinearity == DEFOCUSING_QUINTIC
        r = grid.nodes
        s = grid.radius
        potential = equation.potential
        self.v = potential.values(r) if potential is not None else np.zeros_like(r)
        self.v_r = potential.radial_derivative(r) if potential is not None else np.zeros_like(r)
        self.zeroth = grid.geometry.curvature_shift() + equation.mass_shift + self.v
        self.inv_s4 = np.zeros_like(r)
        self.inv_s4[1:] = 1.0 / s[1:] ** 4
        self.quad = 4.0 * math.pi * self.h

        table = grid_multipliers(grid)
        self.a_r = table.a_r
        self.c2 = table.c2
        self.tanh = np.tanh(r)
        self.sech2 = 1.0 / np.cosh(np.minimum(r, 350.0)) ** 2
        self.weights = grid.weights

    def acceleration(self, w: np.ndarray) -> np.ndarray:
        a = np.zeros_like(w)
        a[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / self.h**2
        a -= self.zeroth * w
        if self.quintic:
            a -= w**5 * self.inv_s4
        a[0] = 0.0
        a[-1] = 0.0
        return a

    def energy(self, w: np.ndarray, v: np.ndarray) -> Dict[str, float]:
        dw = np.diff(w) / self.h
        half = 0.5 * self.quad
        kinetic = half * float(np.dot(v, v))
        curvature = self.grid.geometry.curvature_shift()
        gradient = half * (float(np.dot(dw, dw)) + curvature * float(np.dot(w, w)))
        w2 = w * w
        potential_term = half * float(np.dot(self.v, w2))
        mass_term = half * self.grid.geometry.mass_shift * float(np.dot(w2, np.ones_like(w)))
        sextic = self.quad / 6.0 * float(np.dot(w2**3, self.inv_s4)) if self.quintic else 0.0
        e_v = kinetic + gradient + potential_term + mass_term
        return {
            "E_V": e_v,
            "E_nl": e_v + sextic,
            "kinetic": kinetic,
            "gradient": gradient,
            "potential_term": potential_term,
            "mass_term": mass_term,
            "sextic": sextic,
        }

    def shadow(self, w: np.ndarray, v: np.ndarray, a: np.ndarray, dt: float, e_nl: float) -> float:
        """Modified energy of velocity Verlet, conserved to O(dt⁴)."""
        dv = np.diff(v) / self.h
        stiffness = self.zeroth * v * v
        if self.quintic:
            stiffness = stiffness + 5.0 * w**4 * self.inv_s4 * v * v
        hessian = float(np.dot(dv, dv)) + float(np.sum(stiffness))
        force = float(np.dot(a, a))
        return e_nl + dt**2 * self.quad * (hessian / 12.0 - force / 24.0)

    def physical(self, w: np.ndarray) -> np.ndarray:
        return physical_from_substituted(w, self.grid)

    def norm(self, u: np.ndarray, q: float) -> float:
        return float(np.dot(self.weights, np.abs(u) ** q)) ** (1.0 / q)

    def radial_derivative(self, u: np.ndarray) -> np.ndarray:
        ur = np.gradient(u, self.h, edge_order=2)
        ur[0] = 0.0
        return ur

    def channels(self, w: np.ndarray, v: np.ndarray, a: np.ndarray, dt: float) -> Dict[str, float]:
        """Instantaneous values of every dense channel."""
        parts = self.energy(w, v)
        u = self.physical(w)
        ut = self.physical(v)
        ur = self.radial_derivative(u)
        weights = self.weights
        u2 = u * u
        sixth = u2**3
        grad_weighted = float(np.dot(weights, self.c2 * ur * ur))
        return {
            "energy_EV": parts["E_V"],
            "energy_nl": parts["E_nl"],
            "shadow_energy": self.shadow(w, v, a, dt, parts["E_nl"]),
            "l2": self.norm(u, 2),
            "l6": self.norm(u, 6),
            "l10": self.norm(u, 10),
            "morawetz_flux": float(np.dot(weights, self.a_r * ut * ur + 0.5 * u * ut)),
            "bulk_arr_ur2": grad_weighted,
            "bulk_potential": float(np.dot(weights, 0.5 * self.a_r * (-self.v_r) * u2)),
            "bulk_sextic": float(np.dot(weights, sixth)) / 3.0 if self.quintic else 0.0,
            "bulk_angular": 0.0,
            "weighted_grad": grad_weighted,
            "tanh_potential": float(np.dot(weights, self.tanh * (-self.v_r) * u2)),
            "nl_l2": math.sqrt(float(np.dot(weights, sixth * sixth * u2 * u2))) if self.quintic else 0.0,
            "led_density": float(np.dot(weights, self.sech2 * (ut * ut + ur * ur))),
        }


def _substituted(state: State) -> Tuple[np.ndarray, np.ndarray]:
    w = state.u.to_substituted().values.copy()
    v = state.ut.to_substituted().values.copy()
    return w, v


def _to_state(state: State, disc: _Discretization, w: np.ndarray, v: np.ndarray, time: float) -> State:
    grid = disc.grid
    return state.with_fields(
        RadialField(grid, disc.physical(w), PHYSICAL),
        RadialField(grid, disc.physical(v), PHYSICAL),
        time,
    )


def _check_cfl(dt: float, grid: RadialGrid, cfl: float) -> None:
    if not 0 < cfl <= 1:
        raise GuardError(f"cfl must lie in (0, 1], got {cfl}")
    if dt <= 0:
        raise GuardError(f"time step must be positive, got {dt}")
    if dt > cfl * grid.spacing * (1 + 1e-12):
        raise GuardError(f"dt = {dt:g} violates the CFL bound {cfl:g}·h = {cfl * grid.spacing:g}")


def step(state: State, dt: float, cfl: float = DEFAULT_CFL) -> State:
    """One kick–drift–kick step of size dt."""
    _check_cfl(abs(dt), state.grid, cfl)
    disc = _Discretization(state.equation, state.grid)
    w, v = _substituted(state)
    v += 0.5 * dt * disc.acceleration(w)
    w += dt * v
    v += 0.5 * dt * disc.acceleration(w)
    return _to_state(state, disc, w, v, state.time + dt)


@dataclass(frozen=True)
class EnergyBreakdown:
    E_V: float
    E_nl: float
    kinetic: float
    gradient: float
    potential_term: float
    mass_term: float
    sextic: float


def energy(state: State) -> EnergyBreakdown:
    """E_V = ½∫u_t² + u_r² + (V + μ)u² and E_nl = E_V + ⅙∫u⁶ (quintic only)."""
    disc = _Discretization(state.equation, state.grid)
    w, v = _substituted(state)
    return EnergyBreakdown(**disc.energy(w, v))


def shadow_energy(state: State, dt: float) -> float:
    disc = _Discretization(state.equation, state.grid)
    w, v = _substituted(state)
    a = disc.acceleration(w)
    return disc.shadow(w, v, a, dt, disc.energy(w, v)["E_nl"])


def energy_norm(data) -> float:
    """‖(u, u_t)‖_𝓗 = (∫ u_t² + u_r² dμ)^{1/2} for a State or DataPair."""
    grid = data.u.grid
    w = data.u.to_substituted().values
    v = data.ut.to_substituted().values
    dw = np.diff(w) / grid.spacing
    total = float(np.dot(v, v) + np.dot(dw, dw) + grid.geometry.curvature_shift() * np.dot(w, w))
    return math.sqrt(4.0 * math.pi * grid.spacing * total)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Strided snapshots plus dense per-step diagnostic channels."""
    times: np.ndarray
    states: List[State]
    steps: List[int]
    series: Dict[str, np.ndarray]
    equation: EquationSpec
    dt: float
    stride: int

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise GuardError("snapshot times must increase strictly")

    @property
    def final(self) -> State:
        return self.states[-1]

    def snapshot_index(self, t: float) -> int:
        matches = np.nonzero(np.abs(self.times - t) <= 1e-9 * max(1.0, abs(t)))[0]
        if matches.size == 0:
            raise GuardError(f"no snapshot at t = {t}")
        return int(matches[0])

    def snapshot_at(self, t: float) -> State:
        return self.states[self.snapshot_index(t)]

    def channel(self, name: str) -> np.ndarray:
        if name not in self.series:
            raise GuardError(f"trajectory has no {name!r} channel")
        return self.series[name]


def _resolve_steps(T: float, grid: RadialGrid, cfl: float, dt: Optional[float]) -> Tuple[float, int]:
    if T <= 0:
        raise GuardError(f"evolution time must be positive, got {T}")
    if dt is None:
        n_steps = int(math.ceil(T / (cfl * grid.spacing) - 1e-9))
        return T / n_steps, n_steps
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-6 * dt:
        raise GuardError(f"T = {T:g} is not a whole number of steps of size {dt:g}")
    return dt, n_steps


def evolve(
    state: State,
    T: float,
    snapshot_stride: int = 20,
    diagnostics: Optional[Iterable[str]] = None,
    *,
    cfl: float = DEFAULT_CFL,
    dt: Optional[float] = None,
    strict_domain: bool = True,
) -> Trajectory:
    """Evolve a state forward by T.

    Args:
        state: initial state
        T: duration, T > 0
        snapshot_stride: keep a snapshot every this many steps (the first and
            last steps are always kept)
        diagnostics: channel names to keep; all of CHANNELS by default
        cfl: Courant number bound for dt/h
        dt: explicit step; T must be a whole number of steps
        strict_domain: check r_max ≥ supp(data) + T + 3h before starting

    Returns:
        Trajectory with snapshots and dense channels

    Raises:
        DomainTooSmallError: if the domain cannot contain the propagation
        SolverAbort: if the solution becomes non-finite
    """
    grid = state.grid
    grid.geometry.require_solver_dimension()
    if snapshot_stride < 1:
        raise GuardError(f"snapshot stride must be positive, got {snapshot_stride}")
    keep = tuple(CHANNELS) if diagnostics is None else ("t",) + tuple(n for n in diagnostics if n != "t")
    unknown = [n for n in keep if n not in CHANNELS]
    if unknown:
        raise GuardError(f"unknown diagnostic channels {unknown}")
    dt, n_steps = _resolve_steps(T, grid, cfl, dt)
    _check_cfl(dt, grid, cfl)
    if strict_domain:
        check_domain(state, T)

    disc = _Discretization(state.equation, grid)
    w, v = _substituted(state)
    a = disc.acceleration(w)
    t0 = state.time
    records: Dict[str, List[float]] = {name: [] for name in CHANNELS}
    running = {"strichartz_accum_5_10": 0.0, "morawetz_accum": 0.0, "led_accum": 0.0}
    previous: Optional[Dict[str, float]] = None
    snapshots, snapshot_steps, snapshot_times = [state], [0], [t0]

    for n in range(n_steps + 1):
        if n > 0:
            v += 0.5 * dt * a
            w += dt * v
            a = disc.acceleration(w)
            v += 0.5 * dt * a
        time = t0 + n * dt
        values = disc.channels(w, v, a, dt)
        if not math.isfinite(values["energy_nl"]):
            raise SolverAbort("non-finite solution", time, n)
        if previous is not None:
            running["strichartz_accum_5_10"] += 0.5 * dt * (previous["l10"] ** 5 + values["l10"] ** 5)
            running["morawetz_accum"] += 0.5 * dt * (previous["bulk_sextic"] + values["bulk_sextic"])
            running["led_accum"] += 0.5 * dt * (previous["led_density"] + values["led_density"])
        previous = values
        values.update(running)
        values["t"] = time
        for name in CHANNELS:
            records[name].append(values[name])
        if n > 0 and (n % snapshot_stride == 0 or n == n_steps):
            snapshots.append(_to_state(state, disc, w, v, time))
            snapshot_steps.append(n)
            snapshot_times.append(time)

    logger.debug("evolve T=%g dt=%g steps=%d snapshots=%d", T, dt, n_steps, len(snapshots))
    series = {name: np.asarray(records[name]) for name in keep}
    return Trajectory(
        times=np.asarray(snapshot_times),
        states=snapshots,
        steps=snapshot_steps,
        series=series,
        equation=state.equation,
        dt=dt,
        stride=snapshot_stride,
    )


def free_evolve(state: State, t: float, *, dt: Optional[float] = None, cfl: float = DEFAULT_CFL) -> State:
    """Linear potential-free evolution by t; negative t reverses the velocity."""
    if not state.equation.free:
        raise GuardError("free_evolve needs an equation without potential or nonlinearity")
    if t == 0:
        return state
    if t > 0:
        return evolve(state, t, snapshot_stride=10**9, diagnostics=(), cfl=cfl, dt=dt, strict_domain=False).final
    backward = evolve(state.reversed(), -t, snapshot_stride=10**9, diagnostics=(), cfl=cfl, dt=dt, strict_domain=False).final
    return State(backward.u, -backward.ut, state.time + t, state.equation)


def _energy_norm_difference(a: State, b: State) -> float:
    return energy_norm(DataPair(a.u - b.u, a.ut - b.ut))


def scattering_defect(traj: Trajectory, t: float) -> float:
    """sup over later snapshots of ‖u(t') − S(t' − t)u(t)‖_𝓗 with S the free flow.

    The comparison wave is the potential-free linear evolution of the snapshot
    at t, run with the trajectory's own step and stride so snapshots coincide.

    Raises:
        GuardError: if t is not a snapshot or fewer than 2 snapshots follow it
    """
    index = traj.snapshot_index(t)
    later = len(traj.states) - index - 1
    if later < 2:
        raise GuardError(f"scattering defect needs 2 snapshots after t = {t}, found {later}")
    start = traj.states[index]
    free_state = State(start.u, start.ut, start.time, traj.equation.free_equation())
    duration = (traj.steps[-1] - traj.steps[index]) * traj.dt
    comparison = evolve(
        free_state, duration, traj.stride, diagnostics=(), dt=traj.dt, strict_domain=False
    )
    offset = traj.steps[index]
    by_step = dict(zip(comparison.steps, comparison.states))
    defect = 0.0
    for step_index, state in zip(traj.steps[index + 1:], traj.states[index + 1:]):
        match = by_step.get(step_index - offset)
        if match is None:
            continue
        defect = max(defect, _energy_norm_difference(state, match))
    return defect


@dataclass(frozen=True)
class TrajectoryComparison:
    sup_H_diff: float
    S_diff: float
    eq_residual_b: float


def equation_residual(traj: Trajectory, equation: EquationSpec) -> float:
    """L¹_tL² norm of v_tt − Δv + μv + Vv + v⁵ over the snapshots of traj.

    v_tt comes from centered differences of the snapshot velocities, Δv from
    the substituted second difference; the integral is a trapezoid over the
    interior snapshots.
    """
    times = traj.times
    if times.size < 3:
        raise GuardError("equation residual needs at least 3 snapshots")
    disc = _Discretization(equation, traj.states[0].grid)
    norms = []
    for k in range(1, times.size - 1):
        previous, current, following = traj.states[k - 1], traj.states[k], traj.states[k + 1]
        v_tt = (following.ut.values - previous.ut.values) / (times[k + 1] - times[k - 1])
        w = current.u.to_substituted().values
        residual = v_tt - disc.physical(disc.acceleration(w))
        norms.append(disc.norm(residual, 2))
    return float(integrate.trapezoid(norms, times[1:-1]))


def trajectory_compare(a: Trajectory, b: Trajectory) -> TrajectoryComparison:
    """Compare two trajectories on one grid and one snapshot schedule.

    Returns the sup over snapshots of the 𝓗 difference, the L⁵_tL¹⁰ norm of
    the difference (trapezoid over snapshots) and the residual of b under
    a's equation.
    """
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-9):
        raise GuardError("trajectories have different snapshot schedules")
    if not a.states[0].grid.same_as(b.states[0].grid):
        raise GuardError("trajectories live on different grids")
    disc = _Discretization(a.equation, a.states[0].grid)
    sup_h = 0.0
    l10 = []
    for sa, sb in zip(a.states, b.states):
        sup_h = max(sup_h, _energy_norm_difference(sa, sb))
        l10.append(disc.norm(sa.u.values - sb.u.values, 10) ** 5)
    s_diff = float(integrate.trapezoid(l10, a.times)) ** 0.2
    residual = equation_residual(b, a.equation) if len(b.times) >= 3 else 0.0
    return TrajectoryComparison(sup_H_diff=sup_h, S_diff=s_diff, eq_residual_b=residual)


def _channel_for(q: float) -> str:
    name = f"l{int(q)}" if float(q).is_integer() else ""
    if name not in ("l2", "l6", "l10"):
        raise GuardError(f"no dense L^{q} channel; recorded exponents are 2, 6 and 10")
    return name


def strichartz_accumulate(traj: Trajectory, p: float, q: float, t_from: Optional[float] = None) -> float:
    """(∫ ‖u(t)‖_q^p dt)^{1/p} by the trapezoid rule over the recorded steps; p = ∞ takes the max."""
    t = traj.channel("t")
    values = traj.channel(_channel_for(q))
    if t_from is not None:
        keep = t >= t_from
        if not np.any(keep):
            return 0.0
        start = np.interp(t_from, t, values)
        t = np.concatenate([[t_from], t[keep]])
        values = np.concatenate([[start], values[keep]])
    if math.isinf(p):
        return float(values.max())
    return float(integrate.trapezoid(values**p, t)) ** (1.0 / p)


def strichartz_tail(traj: Trajectory, t_from: float, p: float = 5.0, q: float = 10.0) -> float:
    """S-norm over [t_from, end of trajectory]."""
    return strichartz_accumulate(traj, p, q, t_from=t_from)


def n_norm(traj: Trajectory, t_from: Optional[float] = None) -> float:
    """∫ ‖u⁵‖₂ dt, the L¹_tL² norm of the nonlinearity."""
    t = traj.channel("t")
    values = traj.channel("nl_l2")
    if t_from is not None:
        keep = t >= t_from
        if not np.any(keep):
            return 0.0
        t = np.concatenate([[t_from], t[keep]])
        values = np.concatenate([[np.interp(t_from, traj.channel("t"), traj.channel("nl_l2"))], values[keep]])
    return float(integrate.trapezoid(values, t))


@dataclass(frozen=True)
class Admissibility:
    gamma: float
    branch: str


def admissible_gamma(p: float, q: float, d: int = 3) -> Admissibility:
    """Regularity loss γ of a hyperbolic-admissible pair (p, q).

    γ = (d+1)/2·(1/2 − 1/q) when 2/p + (d−1)/q ≥ (d−1)/2 and
    γ = d(1/2 − 1/q) − 1/p otherwise; (∞, 2) is the energy pair with γ = 0.

    Raises:
        GuardError: if q = ∞, p < 2 or q ≤ 2 outside the energy pair
    """
    if d < 2:
        raise GuardError(f"dimension must be at least 2, got {d}")
    if math.isinf(p) and q == 2:
        return Admissibility(0.0, "energy")
    if math.isinf(q):
        raise GuardError("q = ∞ is not admissible")
    if p < 2 or q <= 2:
        raise GuardError(f"({p}, {q}) is not admissible: need p ≥ 2 and q > 2")
    # both sides multiplied by 4pq so integer pairs are compared exactly
    if math.isinf(p):
        return Admissibility(d * (q - 2) / (2.0 * q), "wave_like")
    if 4.0 * q + 2.0 * (d - 1) * p >= (d - 1) * p * q:
        return Admissibility((d + 1) * (q - 2) / (4.0 * q), "schrodinger_like")
    return Admissibility((d * p * (q - 2) - 2.0 * q) / (2.0 * p * q), "wave_like")
