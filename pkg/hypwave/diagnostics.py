"""Morawetz and local-energy multipliers, identity residuals and decay fits.

The multipliers are the radial functions

    a_r = S^{1-d}(r) ∫₀^r S^{d-1},   b_r = S^{1-d}(r) ∫₀^r S^{d-1}/C²,
    c²  = (C/S)·b_r,                 M   = S^{d-1}·b_r,

with S = sinh, C = cosh on hyperbolic space and S = r, C = 1 on flat space.
Each integral is evaluated in the scaled variable x = ρ/r ∈ [0, 1] so that
only ratios S(rx)/S(r) ≤ 1 appear.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, signal, stats

from .exceptions import GuardError
from .geom import EUCLIDEAN, HYPERBOLIC, RadialGrid

logger = logging.getLogger(__name__)

MORAWETZ_BULK_CHANNELS = ("bulk_arr_ur2", "bulk_potential", "bulk_sextic", "bulk_angular")


@dataclass(frozen=True)
class MultiplierTable:
    """Multiplier values on a set of radii."""
    r: np.ndarray
    a_r: np.ndarray
    b_r: np.ndarray
    c2: np.ndarray
    M: np.ndarray
    d: int
    kind: str = HYPERBOLIC

    def bounds(self) -> Dict[str, bool]:
        """Pointwise bounds at every node with r > 0."""
        positive = self.r > 0
        r = self.r[positive]
        a_r = self.a_r[positive]
        c2 = self.c2[positive]
        tanh = np.tanh(r) if self.kind == HYPERBOLIC else np.ones_like(r)
        cosh2 = np.cosh(r) ** 2 if self.kind == HYPERBOLIC else np.ones_like(r)
        coth = 1.0 / np.tanh(r) if self.kind == HYPERBOLIC else 1.0 / r
        slack = 1e-12
        return {
            "a_positive": bool(np.all(a_r > 0)),
            "a_upper": self.kind == EUCLIDEAN or bool(np.all(a_r <= tanh * (1 + slack))),
            "a_lower": self.kind == EUCLIDEAN or bool(np.all(a_r >= tanh / self.d * (1 - slack))),
            "c2_lower": bool(np.all(c2 >= 1.0 / (self.d * cosh2) * (1 - slack))),
            "c2_upper": bool(np.all(c2 <= 1.0 + slack)),
            "c2_coth_b": bool(np.allclose(c2, coth * self.b_r[positive], rtol=1e-10, atol=0.0)),
        }


def _ratio(r: np.ndarray, x: float, kind: str) -> np.ndarray:
    """S(rx)/S(r) for r > 0."""
    if kind == EUCLIDEAN:
        return np.full_like(r, x)
    return np.exp(r * (x - 1.0)) * np.expm1(-2.0 * r * x) / np.expm1(-2.0 * r)


def _sech2(y: np.ndarray) -> np.ndarray:
    e = np.exp(-2.0 * np.abs(y))
    return 4.0 * e / (1.0 + e) ** 2


def _scaled_integrals(r: np.ndarray, d: int, kind: str) -> Tuple[np.ndarray, np.ndarray]:
    """r·∫₀¹ (S(rx)/S(r))^{d-1} dx and the same with the extra factor 1/C(rx)²."""
    inner = np.where(r > 0, r, 1.0)

    def integrand(x: float) -> np.ndarray:
        ratio = _ratio(inner, x, kind) ** (d - 1)
        weight = _sech2(inner * x) if kind == HYPERBOLIC else np.ones_like(inner)
        return np.concatenate([ratio, ratio * weight])

    values, error = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, norm="max", limit=400)
    logger.debug("multiplier quadrature d=%d points=%d error=%.2e", d, r.size, error)
    n = r.size
    first = np.where(r > 0, r * values[:n], 0.0)
    second = np.where(r > 0, r * values[n:], 0.0)
    return first, second


def multiplier_table(r: Iterable[float], d: int = 3, kind: str = HYPERBOLIC) -> MultiplierTable:
    """Tabulate a_r, b_r, c² and M on the given radii.

    Raises:
        GuardError: if d < 2 or some radius is negative
    """
    if d < 2:
        raise GuardError(f"multipliers need d >= 2, got {d}")
    if kind not in (HYPERBOLIC, EUCLIDEAN):
        raise GuardError(f"unknown geometry kind {kind!r}")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise GuardError("multiplier radii must be nonnegative")
    a_r, b_r = _scaled_integrals(r, d, kind)
    safe = np.where(r > 0, r, 1.0)
    if kind == HYPERBOLIC:
        c_over_s = 1.0 / np.tanh(safe)
        s_power = np.sinh(r) ** (d - 1)
    else:
        c_over_s = 1.0 / safe
        s_power = r ** (d - 1)
    c2 = np.where(r > 0, c_over_s * b_r, 1.0 / d)
    return MultiplierTable(r=r, a_r=a_r, b_r=b_r, c2=c2, M=s_power * b_r, d=d, kind=kind)


def _scalar_or_array(values: np.ndarray, like) -> object:
    return float(values[0]) if np.ndim(like) == 0 else values


def multiplier_a_r(r, d: int = 3, kind: str = HYPERBOLIC):
    """a_r = S^{1-d}∫₀^r S^{d-1}; 0 at the origin with slope 1/d."""
    return _scalar_or_array(multiplier_table(r, d, kind).a_r, r)


def multiplier_b_r(r, d: int = 3, kind: str = HYPERBOLIC):
    return _scalar_or_array(multiplier_table(r, d, kind).b_r, r)


def multiplier_c2(r, d: int = 3, kind: str = HYPERBOLIC):
    """c² = (C/S^d)∫₀^r S^{d-1}/C², which coincides with a_rr."""
    return _scalar_or_array(multiplier_table(r, d, kind).c2, r)


def multiplier_M(r, d: int = 3, kind: str = HYPERBOLIC):
    """M(r) = ∫₀^r S^{d-1}/C²."""
    return _scalar_or_array(multiplier_table(r, d, kind).M, r)


@lru_cache(maxsize=32)
def _cached_grid_table(kind: str, spacing: float, size: int) -> MultiplierTable:
    return multiplier_table(np.arange(size) * spacing, 3, kind)


def grid_multipliers(grid: RadialGrid) -> MultiplierTable:
    """d = 3 multipliers on the nodes of a grid, cached per grid shape."""
    return _cached_grid_table(grid.geometry.kind, grid.spacing, grid.size)


def multiplier_bounds_report(
    d_values: Sequence[int] = (3, 4, 5),
    r_max: float = 30.0,
    spacing: float = 0.005,
    identity_window: Tuple[float, float] = (0.1, 10.0),
    rtol: float = 1e-4,
    atol: float = 1e-10,
) -> Dict[int, Dict[str, bool]]:
    """Check every multiplier bound and c² = a_rr for each dimension.

    a_rr comes from second-order finite differences of a_r. Where c² has
    decayed below the roundoff floor of that difference, the comparison falls
    back to the absolute tolerance.
    """
    r = np.arange(0.0, r_max + 0.5 * spacing, spacing)
    report = {}
    for d in d_values:
        table = multiplier_table(r, d)
        flags = table.bounds()
        a_rr = np.gradient(table.a_r, spacing, edge_order=2)
        lo, hi = identity_window
        window = (r >= lo) & (r <= hi)
        diff = np.abs(a_rr[window] - table.c2[window])
        flags["c2_equals_a_rr"] = bool(np.all(diff <= np.maximum(rtol * table.c2[window], atol)))
        report[d] = flags
        logger.debug("multiplier bounds d=%d: %s", d, flags)
    return report


def _channel(traj, name: str) -> np.ndarray:
    series = getattr(traj, "series", {})
    if name not in series:
        raise GuardError(f"trajectory has no {name!r} channel")
    return np.asarray(series[name])


@dataclass(frozen=True)
class MorawetzTotals:
    sextic_sixth: float
    grad_weighted: float
    potential_term: float


def morawetz_accumulate(traj) -> MorawetzTotals:
    """Time integrals of ⅓∫u⁶, ∫c²u_r² and ∫tanh r·(−∂_rV)u² along a trajectory."""
    t = _channel(traj, "t")
    return MorawetzTotals(
        sextic_sixth=float(integrate.trapezoid(_channel(traj, "bulk_sextic"), t)),
        grad_weighted=float(integrate.trapezoid(_channel(traj, "weighted_grad"), t)),
        potential_term=float(integrate.trapezoid(_channel(traj, "tanh_potential"), t)),
    )


def morawetz_flux(state, table: Optional[MultiplierTable] = None) -> float:
    """∫(a_r u_t u_r + ½u u_t) dμ for a state."""
    grid = state.u.grid
    table = table or grid_multipliers(grid)
    u = state.u.to_physical().values
    ut = state.ut.to_physical().values
    ur = np.gradient(u, grid.spacing, edge_order=2)
    ur[0] = 0.0
    return float(np.dot(grid.weights, table.a_r * ut * ur + 0.5 * u * ut))


def morawetz_identity_residual(traj) -> float:
    """Normalized defect of the integrated Morawetz identity.

    Compares −[M(T) − M(0)] from the endpoint snapshots with the time integral
    of the bulk channels a_rr·u_r², ½a_r(−∂_rV)u², ⅓u⁶ and the angular term,
    divided by energy times duration. A zero solution gives 0.
    """
    t = _channel(traj, "t")
    bulk = sum(_channel(traj, name) for name in MORAWETZ_BULK_CHANNELS)
    if np.any(_channel(traj, "bulk_angular") != 0.0):
        raise GuardError("angular Morawetz term must vanish for radial data")
    first, last = traj.states[0], traj.states[-1]
    boundary = -(morawetz_flux(last) - morawetz_flux(first))
    bulk_integral = float(integrate.trapezoid(bulk, t))
    energy = float(_channel(traj, "energy_nl")[0])
    duration = float(t[-1] - t[0])
    if energy == 0.0 or duration == 0.0:
        return 0.0
    residual = abs(boundary - bulk_integral) / (energy * duration)
    logger.debug("morawetz residual %.3e (boundary %.6e, bulk %.6e)", residual, boundary, bulk_integral)
    return residual


def led_weighted_norm(traj) -> float:
    """∬ (u_t² + u_r²)/cosh²r dμ dt over the whole trajectory.

    Raises:
        GuardError: for nonlinear trajectories
    """
    if traj.equation.nonlinearity != "none":
        raise GuardError("local energy decay is measured on linear runs only")
    return float(_channel(traj, "led_accum")[-1])


def saturation_increment(t: np.ndarray, accumulated: np.ndarray, fraction: float = 0.1) -> float:
    """Relative growth of an accumulated quantity over [fraction·T, T]."""
    t = np.asarray(t, dtype=float)
    accumulated = np.asarray(accumulated, dtype=float)
    total = accumulated[-1]
    if total == 0.0:
        return 0.0
    earlier = np.interp(t[0] + fraction * (t[-1] - t[0]), t, accumulated)
    return float((total - earlier) / total)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    r2: float
    samples: int


def decay_fit(
    t: Sequence[float],
    values: Sequence[float],
    window: Tuple[float, float],
    envelope: bool = False,
) -> DecayFit:
    """Least-squares slope of log values against log t inside a window.

    With `envelope`, only local maxima enter the fit, which carries the rate of
    oscillating tails.

    Raises:
        GuardError: for fewer than 10 samples (3 peaks with `envelope`) or
            nonpositive values in the window
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    inside = (t >= lo) & (t <= hi)
    t_in, v_in = t[inside], values[inside]
    if t_in.size < 10:
        raise GuardError(f"decay fit needs at least 10 samples in [{lo}, {hi}], got {t_in.size}")
    if np.any(v_in <= 0) or np.any(t_in <= 0):
        raise GuardError("decay fit needs positive times and values")
    if envelope:
        peaks, _ = signal.find_peaks(v_in)
        if peaks.size < 3:
            raise GuardError(f"envelope fit needs at least 3 peaks, found {peaks.size}")
        t_in, v_in = t_in[peaks], v_in[peaks]
    fit = stats.linregress(np.log(t_in), np.log(v_in))
    return DecayFit(exponent=float(fit.slope), r2=float(fit.rvalue**2), samples=int(t_in.size))


def expected_short_time_exponent(q: float, d: int = 3) -> float:
    """−(d−1)(1/2 − 1/q)."""
    return -(d - 1) * (0.5 - 1.0 / q)


LONG_TIME_EXPONENT = -1.5
