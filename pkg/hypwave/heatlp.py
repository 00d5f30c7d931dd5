"""Heat flow on radial functions, closed-form heat kernels and Littlewood–Paley projections.

The frequency projection is P_λ = 2λ⁻⁴Δ²e^{λ⁻²Δ}. It is computed along two
independent paths: semigroup-then-Laplacian, and convolution against the
closed-form kernel 2s²∂²_s p_s at s = λ⁻².
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import integrate, sparse, stats
from scipy.sparse.linalg import factorized

from .exceptions import GuardError
from .geom import (
    PHYSICAL,
    RadialField,
    RadialGrid,
    cutoff,
    grid_covering,
    lp_norm,
    physical_from_substituted,
    radial_gradient,
    radial_laplacian,
)

logger = logging.getLogger(__name__)

# below this value of 2s²e^{-s} a projection at heat time s is treated as zero
NEGLIGIBLE_PROJECTION = 1e-14
DYADIC_CEILING = 2**10


@dataclass(frozen=True)
class HeatParams:
    """Heat time and step count of one Crank–Nicolson solve."""
    s: float
    steps: int
    scheme: str = "crank_nicolson"

    def __post_init__(self):
        if self.s <= 0:
            raise GuardError(f"heat time must be positive, got {self.s}")
        if self.steps < 8:
            raise GuardError(f"heat solves need at least 8 steps, got {self.steps}")
        if self.scheme != "crank_nicolson":
            raise GuardError(f"unknown heat scheme {self.scheme!r}")

    @classmethod
    def for_grid(cls, s: float, grid: RadialGrid, steps: Optional[int] = None) -> "HeatParams":
        return cls(s=s, steps=steps or max(8, int(math.ceil(s / grid.spacing))))


@dataclass(frozen=True)
class LPKernelSpec:
    """Selects the kernel 2(s^k ∂_s^k p_s) at s = λ⁻²."""
    k: int
    lam: float
    d: int = 3

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise GuardError(f"kernel order must be 0, 1 or 2, got {self.k}")
        if self.lam < 1:
            raise GuardError(f"λ must be at least 1, got {self.lam}")
        if self.d < 2:
            raise GuardError(f"dimension must be at least 2, got {self.d}")


def _heat_operators(grid: RadialGrid, ds: float):
    """Factorized Crank–Nicolson and backward-Euler systems on interior nodes."""
    n = grid.n_intervals - 1
    h2 = grid.spacing**2
    shift = grid.geometry.curvature_shift()
    main = np.full(n, -2.0 / h2 - shift)
    off = np.full(n - 1, 1.0 / h2)
    operator = sparse.diags([off, main, off], [-1, 0, 1], format="csc")
    identity = sparse.identity(n, format="csc")
    cn_solve = factorized((identity - 0.5 * ds * operator).tocsc())
    cn_rhs = (identity + 0.5 * ds * operator).tocsr()
    be_solve = factorized((identity - ds * operator).tocsc())
    return cn_solve, cn_rhs, be_solve


def heat_evolve(
    f: RadialField,
    s: float,
    *,
    steps: Optional[int] = None,
    startup: int = 2,
) -> RadialField:
    """Apply e^{sΔ} to a radial field.

    Works on W = S(r)·f, which satisfies ∂_s W = W_rr − W on hyperbolic space and
    ∂_s W = W_rr on flat space, with Dirichlet conditions at both ends. The first
    `startup` steps are backward Euler so that rough data do not excite the
    undamped Crank–Nicolson mode; pass startup=0 when continuing a uniform chain.

    Args:
        f: radial field on a grid of dimension 3
        s: heat time, s ≥ 0
        steps: number of time steps, at least max(8, s/h) by default

    Returns:
        e^{sΔ}f in the physical representation; s = 0 returns f.
    """
    if s < 0:
        raise GuardError(f"heat time must be nonnegative, got {s}")
    if s == 0:
        return f.to_physical()
    grid = f.grid
    grid.geometry.require_solver_dimension()
    params = HeatParams.for_grid(s, grid, steps)
    ds = params.s / params.steps
    cn_solve, cn_rhs, be_solve = _heat_operators(grid, ds)

    w = f.to_substituted().values[1:-1].copy()
    smoothing = min(startup, params.steps)
    for _ in range(smoothing):
        w = be_solve(w)
    for _ in range(params.steps - smoothing):
        w = cn_solve(cn_rhs @ w)
    logger.debug("heat_evolve s=%g steps=%d nodes=%d", s, params.steps, grid.size)

    full = np.zeros(grid.size)
    full[1:-1] = w
    return RadialField(grid, physical_from_substituted(full, grid), PHYSICAL)


def heat_semigroup_profile(f: RadialField, s_values: Sequence[float]) -> List[RadialField]:
    """e^{sΔ}f for each s, computed incrementally along increasing heat times.

    The result is ordered like `s_values`.
    """
    order = np.argsort(s_values)
    results: List[Optional[RadialField]] = [None] * len(s_values)
    current = f.to_physical()
    elapsed = 0.0
    for index in order:
        target = float(s_values[index])
        if target < 0:
            raise GuardError(f"heat time must be nonnegative, got {target}")
        if target > elapsed:
            current = heat_evolve(current, target - elapsed)
            elapsed = target
        results[index] = current
    return results


def heat_kernel_closed_form_d3(r, s: float):
    """p_s(r) = (4πs)^{-3/2}·(r/sinh r)·e^{-s - r²/(4s)} on ℍ³.

    r/sinh r uses its series below r = 1e-4 and the form 2r·e^{-r}/(1 - e^{-2r})
    elsewhere so that large radii do not overflow.
    """
    if s <= 0:
        raise GuardError(f"heat time must be positive, got {s}")
    r = np.asarray(r, dtype=float)
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    log_ratio = np.where(
        small,
        np.log1p(-(r**2) / 6.0 + 7.0 * r**4 / 360.0),
        np.log(2.0 * safe) - safe - np.log(-np.expm1(-2.0 * safe)),
    )
    value = (4.0 * math.pi * s) ** -1.5 * np.exp(log_ratio - s - r**2 / (4.0 * s))
    return float(value) if value.ndim == 0 else value


def heat_kernel_bound_dm(r, s: float, d: int):
    """s^{-d/2}·e^{-(d-1)²s/4 - r²/4s - (d-1)r/2}·(1+r+s)^{(d-3)/2}·(1+r) with constant 1."""
    if s <= 0:
        raise GuardError(f"heat time must be positive, got {s}")
    r = np.asarray(r, dtype=float)
    exponent = -((d - 1) ** 2) * s / 4.0 - r**2 / (4.0 * s) - (d - 1) * r / 2.0
    value = s ** (-d / 2.0) * np.exp(exponent) * (1.0 + r + s) ** ((d - 3) / 2.0) * (1.0 + r)
    return float(value) if value.ndim == 0 else value


def heat_l1_mass(s: float, r_max: float = 40.0) -> float:
    """∫ p_s dμ over r ≤ r_max; equals 1 up to the truncated tail."""
    def density(r):
        return 4.0 * math.pi * (4.0 * math.pi * s) ** -1.5 * r * math.sinh(r) * math.exp(-s - r * r / (4.0 * s))

    peak = min(r_max, 2.0 * s + 2.0 * math.sqrt(s))
    first, _ = integrate.quad(density, 0.0, peak, epsabs=1e-13, epsrel=1e-12, limit=200)
    second, _ = integrate.quad(density, peak, r_max, epsabs=1e-13, epsrel=1e-12, limit=200)
    return first + second


def lp_kernel(spec: LPKernelSpec, r):
    """Kernel 2(s^k ∂_s^k p_s)(r) at s = λ⁻²; k = 2 is the convolution kernel of P_λ."""
    if spec.d != 3:
        raise GuardError("closed-form Littlewood–Paley kernels exist only for d = 3")
    s = spec.lam**-2
    r = np.asarray(r, dtype=float)
    p = np.asarray(heat_kernel_closed_form_d3(r, s))
    log_derivative = -1.5 / s - 1.0 + r**2 / (4.0 * s**2)
    if spec.k == 0:
        value = 2.0 * p
    elif spec.k == 1:
        value = 2.0 * s * p * log_derivative
    else:
        second = 1.5 / s**2 - r**2 / (2.0 * s**3)
        value = 2.0 * s**2 * p * (log_derivative**2 + second)
    return float(value) if value.ndim == 0 else value


def _projection_from_heat(heated: RadialField, lam: float) -> RadialField:
    twice = radial_laplacian(radial_laplacian(heated))
    return twice * (2.0 * lam**-4)


def lp_project(f: RadialField, lam: float) -> RadialField:
    """P_λ f = 2λ⁻⁴Δ²e^{λ⁻²Δ}f for λ ≥ 1."""
    if lam < 1:
        raise GuardError(f"λ must be at least 1, got {lam}")
    return _projection_from_heat(heat_evolve(f, lam**-2), lam)


def lp_project_by_kernel(f: RadialField, lam: float, *, refine: int = 4) -> RadialField:
    """P_λ f by convolution with lp_kernel(k=2, λ).

    For radial f the convolution reduces to
    (2π/sinh r)∫ f(ρ) sinh ρ [Φ(r+ρ) − Φ(|r−ρ|)] dρ with Φ(s) = ∫₀^s K(σ) sinh σ dσ,
    and to 4π∫ f K sinh² at the origin.
    """
    grid = f.grid
    if not grid.geometry.is_hyperbolic or grid.geometry.dimension != 3:
        raise GuardError("kernel convolution needs a hyperbolic grid of dimension 3")
    spec = LPKernelSpec(k=2, lam=lam)
    u = f.to_physical().values
    rho = grid.nodes

    fine_step = min(grid.spacing, 1.0 / (32.0 * lam)) / refine
    sigma = np.arange(0.0, 2.0 * grid.r_max + 2.0 * fine_step, fine_step)
    kernel = lp_kernel(spec, sigma)
    phi = integrate.cumulative_trapezoid(kernel * np.sinh(sigma), sigma, initial=0.0)

    trapezoid = np.full(grid.size, grid.spacing)
    trapezoid[[0, -1]] *= 0.5
    source = trapezoid * u * np.sinh(rho)

    out = np.empty(grid.size)
    for j, radius in enumerate(rho[1:], start=1):
        bracket = np.interp(radius + rho, sigma, phi) - np.interp(np.abs(radius - rho), sigma, phi)
        out[j] = 2.0 * math.pi / math.sinh(radius) * np.dot(source, bracket)
    out[0] = 4.0 * math.pi * np.dot(trapezoid * u * np.sinh(rho) ** 2, lp_kernel(spec, rho))
    return RadialField(grid, out, PHYSICAL)


def _log_quadrature(lam_min: float, lam_max: float, n_lam: int):
    if not (0 < lam_min < lam_max):
        raise GuardError(f"malformed λ window [{lam_min}, {lam_max}]")
    if n_lam < 16:
        raise GuardError(f"λ quadrature needs at least 16 points, got {n_lam}")
    log_lam = np.linspace(math.log(lam_min), math.log(lam_max), n_lam)
    weights = np.full(n_lam, log_lam[1] - log_lam[0])
    weights[[0, -1]] *= 0.5
    return np.exp(log_lam), weights


def lp_band(f: RadialField, lam_lo: float, lam_hi: float, n_lam: int = 32) -> RadialField:
    """∫_{λ_lo}^{λ_hi} P_λ f dλ/λ by the trapezoid rule in log λ.

    The projection formula is applied uniformly in λ, also below 1. Heat times
    at which 2s²e^{-s} is negligible (spectral gap on ℍ³) are skipped.
    """
    lams, weights = _log_quadrature(lam_lo, lam_hi, n_lam)
    heat_times = lams**-2
    total = np.zeros(f.grid.size)
    if not np.any(f.values):
        return RadialField(f.grid, total, PHYSICAL)
    keep = [
        i for i in range(n_lam)
        if not (f.grid.geometry.is_hyperbolic and 2.0 * heat_times[i] ** 2 * math.exp(-heat_times[i]) < NEGLIGIBLE_PROJECTION)
    ]
    if keep:
        heated = heat_semigroup_profile(f, [heat_times[i] for i in keep])
        for i, field in zip(keep, heated):
            total += weights[i] * _projection_from_heat(field, lams[i]).values
    logger.debug("lp_band [%g, %g] used %d of %d scales", lam_lo, lam_hi, len(keep), n_lam)
    return RadialField(f.grid, total, PHYSICAL)


def lp_reconstruct(f: RadialField, lam_min: float, lam_max: float, n_lam: int) -> RadialField:
    """Approximate f = ∫₀^∞ P_λ f dλ/λ over the window [λ_min, λ_max]."""
    return lp_band(f, lam_min, lam_max, n_lam)


def reconstruction_defect(f: RadialField, lam_min: float, lam_max: float, n_lam: int = 64) -> float:
    """Relative L² defect of lp_reconstruct; 0 for the zero field."""
    norm = lp_norm(f, 2)
    if norm == 0:
        return 0.0
    return lp_norm(lp_reconstruct(f, lam_min, lam_max, n_lam) - f, 2) / norm


def dyadic_grid(spacing: float, ceiling: float = DYADIC_CEILING, floor: float = 1.0) -> List[float]:
    """Dyadic λ values from `floor` up to min(ceiling, 1/(4h))."""
    top = min(ceiling, 1.0 / (4.0 * spacing))
    lams = []
    lam = floor
    while lam <= top * (1 + 1e-12):
        lams.append(lam)
        lam *= 2.0
    return lams or [floor]


def projection_family(f: RadialField, lam_grid: Iterable[float]) -> Dict[float, RadialField]:
    """P_λ f for every λ in the grid, sharing one incremental heat flow."""
    lams = sorted(set(float(lam) for lam in lam_grid))
    if not lams:
        raise GuardError("λ grid is empty")
    if lams[0] < 1:
        raise GuardError(f"λ must be at least 1, got {lams[0]}")
    heated = heat_semigroup_profile(f, [lam**-2 for lam in lams])
    return {lam: _projection_from_heat(field, lam) for lam, field in zip(lams, heated)}


def refined_sobolev_B(f: RadialField, lam_grid: Iterable[float]) -> float:
    """B = max over λ in the grid and nodes r of λ^{-1/2}·|P_λ f(r)|."""
    if f.grid.geometry.dimension != 3 or not f.grid.geometry.is_hyperbolic:
        raise GuardError("refined Sobolev functional is defined on hyperbolic d = 3 grids")
    family = projection_family(f, lam_grid)
    return max(lam**-0.5 * float(np.max(np.abs(p.values))) for lam, p in family.items())


@dataclass(frozen=True)
class RefinedSobolev:
    l6: float
    grad_l2: float
    B: float
    ratio: float


def refined_sobolev_check(f: RadialField, lam_grid: Optional[Iterable[float]] = None) -> RefinedSobolev:
    """‖f‖₆ against ‖∇f‖₂^{1/3}·B^{2/3}.

    Raises:
        GuardError: if B vanishes for a nonzero f (λ grid too coarse)
    """
    l6 = lp_norm(f, 6)
    grad = lp_norm(radial_gradient(f), 2)
    if l6 == 0 and grad == 0:
        return RefinedSobolev(0.0, 0.0, 0.0, 0.0)
    lam_grid = list(lam_grid) if lam_grid is not None else dyadic_grid(f.grid.spacing)
    b = refined_sobolev_B(f, lam_grid)
    if b == 0:
        raise GuardError("B vanishes for a nonzero field; refine the λ grid")
    return RefinedSobolev(l6=l6, grad_l2=grad, B=b, ratio=l6 / (grad ** (1.0 / 3.0) * b ** (2.0 / 3.0)))


@dataclass(frozen=True)
class ConcentrationNorms:
    h0: float
    h1: float
    h2: float
    tail_h1: float


def concpp_norms(lam: float, R: float) -> ConcentrationNorms:
    """Scaled Sobolev norms of the kernel 2s∂_s p_s at s = λ⁻² and its cutoff tail.

    Returns λ^{-3/2}‖K‖₂, λ^{-5/2}‖K‖_{H¹}, λ^{-7/2}‖(1−Δ)K‖₂ and
    λ^{-5/2}‖(1 − η(λr/R))K‖_{H¹}.
    """
    if lam < 1:
        raise GuardError(f"λ must be at least 1, got {lam}")
    spacing = 1.0 / (40.0 * lam)
    grid = grid_covering((max(2.0 * R, 12.0) + 4.0) / lam, spacing)
    kernel = RadialField(grid, lp_kernel(LPKernelSpec(k=1, lam=lam), grid.nodes))

    def h1(field: RadialField) -> float:
        return math.sqrt(lp_norm(field, 2) ** 2 + lp_norm(radial_gradient(field), 2) ** 2)

    tail = kernel.with_values(kernel.values * (1.0 - cutoff(lam * grid.nodes / R)))
    smoothed = kernel - radial_laplacian(kernel)
    return ConcentrationNorms(
        h0=lam**-1.5 * lp_norm(kernel, 2),
        h1=lam**-2.5 * h1(kernel),
        h2=lam**-3.5 * lp_norm(smoothed, 2),
        tail_h1=lam**-2.5 * h1(tail),
    )


@dataclass(frozen=True)
class KernelEnvelope:
    k: int
    exponent: float
    constant: float


def fit_kernel_envelope(k: int, lam_grid: Sequence[float], r_grid: Sequence[float]) -> KernelEnvelope:
    """Fit |kernel_k| ≤ C·λ³(1+λ²r²)^N·e^{-λ²r²/4} on a (λ, r) sample grid.

    N comes from a least-squares fit of the logarithms over samples that are not
    near a zero of the kernel; C is then the smallest constant making the bound hold.
    """
    xs, ys = [], []
    for lam in lam_grid:
        r = np.asarray(r_grid, dtype=float)
        value = np.abs(lp_kernel(LPKernelSpec(k=k, lam=lam), r))
        x = lam * r
        ys.append(value / (lam**3 * np.exp(-(x**2) / 4.0)))
        xs.append(1.0 + x**2)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    usable = y > 1e-3 * y.max()
    fit = stats.linregress(np.log(x[usable]), np.log(y[usable]))
    exponent = max(0.0, float(fit.slope))
    constant = float(np.max(y / x**exponent))
    return KernelEnvelope(k=k, exponent=exponent, constant=constant)


def near_delta(grid: RadialGrid, s0: float) -> RadialField:
    """Unit-mass datum p_{s0} used as a resolved stand-in for the delta at the origin."""
    return RadialField(grid, heat_kernel_closed_form_d3(grid.nodes, s0))

