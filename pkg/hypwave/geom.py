"""Radial grids, measures, distances and translated quadrature on hyperbolic and flat 3-space.

All fields are radial. The angular variable is integrated out analytically
(total solid angle 4π), and translations enter only through evaluation along
a fixed axis with the hyperbolic law of cosines.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import GuardError, ResolutionError

logger = logging.getLogger(__name__)

HYPERBOLIC = "hyperbolic"
EUCLIDEAN = "euclidean"
PHYSICAL = "physical"
SUBSTITUTED = "substituted"

MIN_INTERVALS = 16
GAUSS_ORDER = 32

ArrayLike = Union[float, np.ndarray]
Weight = Union[None, Callable[[np.ndarray], np.ndarray], "RadialField"]


@dataclass(frozen=True)
class Geometry:
    """Ambient space of a radial problem.

    Attributes:
        kind: "hyperbolic" or "euclidean"
        dimension: ambient dimension d; time-dependent solvers require d = 3
        mass_shift: constant μ subtracted from the Laplacian when requested
    """
    kind: str = HYPERBOLIC
    dimension: int = 3
    mass_shift: float = 0.0

    def __post_init__(self):
        if self.kind not in (HYPERBOLIC, EUCLIDEAN):
            raise GuardError(f"unknown geometry kind {self.kind!r}")
        if self.dimension < 2:
            raise GuardError(f"dimension must be at least 2, got {self.dimension}")
        if self.kind == HYPERBOLIC:
            floor = -((self.dimension - 1) ** 2) / 4.0
            if self.mass_shift <= floor:
                raise GuardError(
                    f"mass_shift must exceed {floor:g} on hyperbolic space, got {self.mass_shift:g}"
                )

    @property
    def is_hyperbolic(self) -> bool:
        return self.kind == HYPERBOLIC

    def require_solver_dimension(self) -> None:
        if self.dimension != 3:
            raise GuardError(f"time-dependent solvers need dimension 3, got {self.dimension}")

    def radius_function(self, r: ArrayLike) -> ArrayLike:
        """sinh r on hyperbolic space, r on flat space."""
        return np.sinh(r) if self.is_hyperbolic else np.asarray(r, dtype=float) * 1.0

    def radius_derivative(self, r: ArrayLike) -> ArrayLike:
        return np.cosh(r) if self.is_hyperbolic else np.ones_like(np.asarray(r, dtype=float))

    def curvature_shift(self) -> float:
        """Zeroth-order term produced by the substitution w = S(r)·u (d = 3)."""
        return 1.0 if self.is_hyperbolic else 0.0


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial grid r_j = j·h, j = 0..N."""
    r_max: float
    spacing: float
    geometry: Geometry
    nodes: np.ndarray = field(repr=False)

    @property
    def n_intervals(self) -> int:
        return len(self.nodes) - 1

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def radius(self) -> np.ndarray:
        """S(r_j): sinh r_j or r_j."""
        return self.geometry.radius_function(self.nodes)

    @cached_property
    def volume(self) -> np.ndarray:
        """Volume density at every node."""
        return volume_density(self.nodes, self.geometry)

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights times the volume density."""
        trapezoid = np.full(self.size, self.spacing)
        trapezoid[0] *= 0.5
        trapezoid[-1] *= 0.5
        return trapezoid * self.volume

    def same_as(self, other: "RadialGrid") -> bool:
        return (
            self is other
            or (
                self.size == other.size
                and self.geometry == other.geometry
                and math.isclose(self.spacing, other.spacing, rel_tol=1e-12)
            )
        )

    def zeros(self, representation: str = PHYSICAL) -> "RadialField":
        return RadialField(self, np.zeros(self.size), representation)


def make_radial_grid(r_max: float, spacing: float, geometry: Optional[Geometry] = None) -> RadialGrid:
    """Build a uniform radial grid with N = round(R/h) intervals.

    Args:
        r_max: outer radius R > 0
        spacing: node spacing h > 0; R/h must be integral within rounding
        geometry: ambient geometry, hyperbolic d = 3 by default

    Raises:
        GuardError: for non-positive sizes, non-integral R/h or fewer than 16 intervals
    """
    geometry = geometry or Geometry()
    if r_max <= 0 or spacing <= 0:
        raise GuardError(f"r_max and spacing must be positive, got R={r_max}, h={spacing}")
    ratio = r_max / spacing
    n = int(round(ratio))
    if abs(ratio - n) > 1e-6 * max(1.0, ratio):
        raise GuardError(f"r_max/spacing = {ratio:.9g} is not an integer")
    if n < MIN_INTERVALS:
        raise GuardError(f"grid needs at least {MIN_INTERVALS} intervals, got {n}")
    nodes = np.arange(n + 1, dtype=float) * spacing
    return RadialGrid(r_max=n * spacing, spacing=spacing, geometry=geometry, nodes=nodes)


def grid_covering(r_max: float, spacing: float, geometry: Optional[Geometry] = None) -> RadialGrid:
    """Smallest grid with the given spacing whose outer radius is at least r_max."""
    n = max(MIN_INTERVALS, int(math.ceil(r_max / spacing - 1e-9)))
    return make_radial_grid(n * spacing, spacing, geometry)


def volume_density(r: ArrayLike, geometry: Geometry) -> ArrayLike:
    """4π·S(r)² in dimension 3, S(r)^{d-1} otherwise."""
    s = geometry.radius_function(r)
    if geometry.dimension == 3:
        return 4.0 * math.pi * s**2
    return s ** (geometry.dimension - 1)


def volume_weight(grid: RadialGrid, j: int) -> float:
    """Volume density at node j (without the trapezoid factor)."""
    if not 0 <= j < grid.size:
        raise GuardError(f"node index {j} outside 0..{grid.n_intervals}")
    return float(grid.volume[j])


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values of a radial function on a grid.

    The physical representation stores u; the substituted representation
    stores w = S(r)·u, which vanishes at the origin.
    """
    grid: RadialGrid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise GuardError(f"expected {self.grid.size} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GuardError("field values must be finite")
        if self.representation not in (PHYSICAL, SUBSTITUTED):
            raise GuardError(f"unknown representation {self.representation!r}")
        if self.representation == SUBSTITUTED:
            scale = max(1.0, float(np.max(np.abs(values))))
            if abs(values[0]) > 1e-12 * scale:
                raise GuardError("substituted field must vanish at r = 0")
            values[0] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values, self.representation)

    def to_substituted(self) -> "RadialField":
        if self.representation == SUBSTITUTED:
            return self
        w = self.values * self.grid.radius
        w[0] = 0.0
        return RadialField(self.grid, w, SUBSTITUTED)

    def to_physical(self) -> "RadialField":
        if self.representation == PHYSICAL:
            return self
        return RadialField(self.grid, physical_from_substituted(self.values, self.grid), PHYSICAL)

    def _combine(self, other: "RadialField", sign: float) -> "RadialField":
        if not self.grid.same_as(other.grid):
            raise GuardError("fields live on different grids")
        if other.representation != self.representation:
            other = other.to_physical() if self.representation == PHYSICAL else other.to_substituted()
        return self.with_values(self.values + sign * other.values)

    def __add__(self, other: "RadialField") -> "RadialField":
        return self._combine(other, 1.0)

    def __sub__(self, other: "RadialField") -> "RadialField":
        return self._combine(other, -1.0)

    def __mul__(self, scalar: float) -> "RadialField":
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "RadialField":
        return self * -1.0


def physical_from_substituted(w: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """u = w/S(r) with u(0) from the even extension, (4u₁ − u₂)/3."""
    u = np.empty_like(w, dtype=float)
    u[1:] = w[1:] / grid.radius[1:]
    u[0] = (4.0 * u[1] - u[2]) / 3.0
    return u


def field_from_function(
    grid: RadialGrid,
    fn: Callable[[np.ndarray], np.ndarray],
    representation: str = PHYSICAL,
) -> RadialField:
    """Sample a vectorized function of r on the grid nodes."""
    values = np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.size)
    return RadialField(grid, values, representation)


def cutoff(x: ArrayLike) -> ArrayLike:
    """Even C² cutoff equal to 1 on |x| ≤ 1 and 0 on |x| ≥ 2."""
    t = np.clip(np.abs(np.asarray(x, dtype=float)) - 1.0, 0.0, 1.0)
    out = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    return float(out) if np.ndim(out) == 0 else out


def support_radius(f: RadialField, tol: float = 1e-10) -> float:
    """Smallest node radius beyond which |f| ≤ tol·max|f|; 0 for the zero field."""
    values = np.abs(f.to_physical().values)
    peak = float(values.max())
    if peak == 0.0:
        return 0.0
    above = np.nonzero(values > tol * peak)[0]
    return float(f.grid.nodes[min(above[-1] + 1, f.grid.n_intervals)])


def lp_norm(f: RadialField, q: float) -> float:
    """L^q(μ) norm by the weighted trapezoid rule; q = ∞ returns max |f_j|.

    Raises:
        GuardError: if q < 1
    """
    if q < 1:
        raise GuardError(f"lp_norm needs q >= 1, got {q}")
    values = np.abs(f.to_physical().values)
    if math.isinf(q):
        return float(values.max())
    total = float(np.dot(f.grid.weights, values**q))
    return total ** (1.0 / q)


def inner_product(a: RadialField, b: RadialField) -> float:
    """⟨a, b⟩ in L²(μ)."""
    if not a.grid.same_as(b.grid):
        raise GuardError("fields live on different grids")
    return float(np.dot(a.grid.weights, a.to_physical().values * b.to_physical().values))


def geodesic_distance(r1: ArrayLike, r2: ArrayLike, cos_theta: ArrayLike) -> ArrayLike:
    """Hyperbolic distance between points at radii r1, r2 separated by angle θ.

    Uses arccosh(1 + X) = 2·asinh(√(X/2)) with
    X = 2sinh²((r1 − r2)/2) + sinh r1·sinh r2·(1 − cosθ) clamped at 0,
    which equals cosh r1·cosh r2 − sinh r1·sinh r2·cosθ − 1 without cancellation.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    c = np.clip(np.asarray(cos_theta, dtype=float), -1.0, 1.0)
    x = 2.0 * np.sinh(0.5 * (r1 - r2)) ** 2 + np.sinh(r1) * np.sinh(r2) * (1.0 - c)
    s = 2.0 * np.arcsinh(np.sqrt(0.5 * np.maximum(x, 0.0)))
    return float(s) if np.ndim(s) == 0 else s


def translate_eval(f: RadialField, rho: float, r: ArrayLike, cos_theta: ArrayLike) -> ArrayLike:
    """Evaluate τ_ρ f at the point (r, θ): f at its distance from ρ along the axis.

    Off-node values are linearly interpolated; beyond r_max the field is 0.
    """
    if rho < 0:
        raise GuardError(f"translation distance must be nonnegative, got {rho}")
    if f.representation != PHYSICAL:
        raise GuardError("translate_eval needs the physical representation")
    if rho == 0:
        s = np.asarray(r, dtype=float) * np.ones_like(np.asarray(cos_theta, dtype=float))
    else:
        s = geodesic_distance(r, rho, cos_theta)
    out = np.interp(s, f.grid.nodes, f.values, right=0.0)
    return float(out) if np.ndim(out) == 0 else out


def radial_laplacian(f: RadialField, subtract_mass: bool = False) -> RadialField:
    """Second-order finite-difference Laplace–Beltrami operator on radial functions.

    Interior nodes use centered differences for ∂_r² + (d−1)·S'/S·∂_r. The origin
    uses the regularized limit d·f''(0) and the outer node one-sided stencils.
    With `subtract_mass`, μ·f is subtracted for the grid's mass shift μ.
    """
    grid = f.grid
    if grid.n_intervals < MIN_INTERVALS:
        raise GuardError("grid too coarse for the Laplacian")
    u = f.to_physical().values
    h = grid.spacing
    d = grid.geometry.dimension
    r = grid.nodes
    out = np.empty_like(u)

    second = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    first = (u[2:] - u[:-2]) / (2.0 * h)
    if grid.geometry.is_hyperbolic:
        coefficient = (d - 1) / np.tanh(r[1:-1])
    else:
        coefficient = (d - 1) / r[1:-1]
    out[1:-1] = second + coefficient * first

    out[0] = d * 2.0 * (u[1] - u[0]) / h**2

    second_end = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
    first_end = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    end_coefficient = (d - 1) / (np.tanh(r[-1]) if grid.geometry.is_hyperbolic else r[-1])
    out[-1] = second_end + end_coefficient * first_end

    if subtract_mass and grid.geometry.mass_shift != 0.0:
        out -= grid.geometry.mass_shift * u
    return RadialField(grid, out, PHYSICAL)


def radial_gradient(f: RadialField) -> RadialField:
    """∂_r f with second-order stencils; zero at the origin by evenness."""
    u = f.to_physical().values
    du = np.gradient(u, f.grid.spacing, edge_order=2)
    du[0] = 0.0
    return RadialField(f.grid, du, PHYSICAL)


def gauss_panels(a: float, b: float, panels: int, order: int = GAUSS_ORDER):
    """Composite Gauss–Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _weight_values(weight: Weight, r: np.ndarray) -> np.ndarray:
    if weight is None:
        return np.ones_like(r)
    if isinstance(weight, RadialField):
        return np.interp(r, weight.grid.nodes, weight.to_physical().values, right=0.0)
    return np.asarray(weight(r), dtype=float) * np.ones_like(r)


def _weight_extent(weight: Weight, default: float) -> float:
    if isinstance(weight, RadialField):
        return min(weight.grid.r_max, default)
    extent = getattr(weight, "support_radius", None)
    if extent:
        return min(float(extent), default)
    return default


def translated_integral(
    f: RadialField,
    rho: float,
    weight: Weight = None,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    *,
    method: str = "shell",
    panels: Optional[int] = None,
) -> float:
    """∫ G(r)·F(d(x, ρe)) dμ(x) for a radial weight G and F = transform(f).

    The "shell" method changes variables to (r, s) with s the distance to the
    translation centre, so that the inner integral is a cumulative trapezoid of
    F(s)·sinh s on the grid of f. The "angular" method integrates in (r, cosθ)
    through translate_eval. Both use Gauss–Legendre panels of order 32 in r.

    Args:
        f: physical radial field on a hyperbolic grid
        rho: translation distance ρ ≥ 0
        weight: None (≡ 1), a callable of r (optionally with `support_radius`), or a RadialField
        transform: pointwise map applied to the values of f, e.g. np.square
        method: "shell" or "angular"
        panels: number of Gauss panels in r; chosen from the grid spacing when omitted

    Raises:
        GuardError: for ρ < 0, a flat grid or an unknown method
        ResolutionError: when explicit panels are coarser than two grid spacings
    """
    if rho < 0:
        raise GuardError(f"translation distance must be nonnegative, got {rho}")
    grid = f.grid
    if not grid.geometry.is_hyperbolic:
        raise GuardError("translated integrals are defined on hyperbolic grids")
    values = f.to_physical().values
    values = transform(values) if transform is not None else values
    extent_f = grid.r_max

    if rho == 0:
        g = _weight_values(weight, grid.nodes)
        return float(np.dot(grid.weights, g * values))

    r_lo = max(0.0, rho - extent_f)
    r_hi = min(rho + extent_f, _weight_extent(weight, rho + extent_f))
    if r_hi <= r_lo:
        return 0.0
    if panels is None:
        panels = max(1, int(math.ceil((r_hi - r_lo) / (8.0 * grid.spacing))))
    elif (r_hi - r_lo) / (panels * GAUSS_ORDER) > 2.0 * grid.spacing:
        raise ResolutionError("Gauss panels are coarser than two grid spacings")
    r, wr = gauss_panels(r_lo, r_hi, panels)
    g = _weight_values(weight, r)

    if method == "shell":
        cumulative = cumulative_trapezoid(values * np.sinh(grid.nodes), grid.nodes, initial=0.0)
        upper = np.interp(r + rho, grid.nodes, cumulative)
        lower = np.interp(np.abs(r - rho), grid.nodes, cumulative)
        # 2π/sinh ρ · sinh r written with exponentials to stay finite for large radii
        ratio = np.exp(r - rho) * np.expm1(-2.0 * r) / np.expm1(-2.0 * rho)
        total = 2.0 * math.pi * np.dot(wr, g * ratio * (upper - lower))
    elif method == "angular":
        c_panels = max(2, int(math.ceil(2.0 * rho / (16.0 * grid.spacing))))
        c_panels = min(c_panels, 64)
        c, wc = gauss_panels(-1.0, 1.0, c_panels)
        inner = np.empty_like(r)
        for i, radius in enumerate(r):
            sample = translate_eval(f, rho, radius, c)
            if transform is not None:
                sample = transform(sample)
            inner[i] = np.dot(wc, sample)
        total = 2.0 * math.pi * np.dot(wr, g * np.sinh(r) ** 2 * inner)
    else:
        raise GuardError(f"unknown quadrature method {method!r}")
    logger.debug("translated_integral rho=%g method=%s points=%d", rho, method, r.size)
    return float(total)


def translated_inner(a: RadialField, b: RadialField, rho: float) -> float:
    """⟨a, τ_ρ b⟩ in L²(ℍ³)."""
    if rho == 0:
        return inner_product(a, b)
    return translated_integral(b, rho, weight=a.to_physical())


def translated_product_integral(
    weight: Callable[[np.ndarray], np.ndarray],
    a: RadialField,
    rho_a: float,
    b: RadialField,
    rho_b: float,
    *,
    support: float,
    panels: Optional[int] = None,
) -> float:
    """∫ G(r)·a(d(x, ρ_a e))·b(d(x, ρ_b e)) dμ(x) for two translations along one axis.

    Integrates in (r, cosθ) with Gauss–Legendre panels; G must vanish beyond `support`.
    """
    if support <= 0:
        return 0.0
    h = min(a.grid.spacing, b.grid.spacing)
    if panels is None:
        panels = max(1, int(math.ceil(support / (8.0 * h))))
    r, wr = gauss_panels(0.0, support, panels)
    c_panels = max(2, min(64, int(math.ceil(2.0 * (support + 1.0) / (16.0 * h)))))
    c, wc = gauss_panels(-1.0, 1.0, c_panels)
    g = np.asarray(weight(r), dtype=float)
    inner = np.empty_like(r)
    a_phys = a.to_physical()
    b_phys = b.to_physical()
    for i, radius in enumerate(r):
        inner[i] = np.dot(wc, translate_eval(a_phys, rho_a, radius, c) * translate_eval(b_phys, rho_b, radius, c))
    return float(2.0 * math.pi * np.dot(wr, g * np.sinh(r) ** 2 * inner))
