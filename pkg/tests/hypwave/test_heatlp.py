import math

import numpy as np
import pytest
import sympy

from hypwave.exceptions import GuardError
from hypwave.geom import EUCLIDEAN, Geometry, RadialField, field_from_function, grid_covering, lp_norm, make_radial_grid
from hypwave.heatlp import (
    HeatParams,
    LPKernelSpec,
    concpp_norms,
    dyadic_grid,
    fit_kernel_envelope,
    heat_evolve,
    heat_kernel_bound_dm,
    heat_kernel_closed_form_d3,
    heat_l1_mass,
    heat_semigroup_profile,
    lp_band,
    lp_kernel,
    lp_project,
    lp_project_by_kernel,
    lp_reconstruct,
    near_delta,
    reconstruction_defect,
    refined_sobolev_B,
    refined_sobolev_check,
)


@pytest.fixture
def symbolic_kernel():
    r, s = sympy.symbols("r s", positive=True)
    p = (4 * sympy.pi * s) ** sympy.Rational(-3, 2) * r / sympy.sinh(r) * sympy.exp(-s - r**2 / (4 * s))
    return r, s, p


@pytest.fixture
def gaussian_field():
    grid = make_radial_grid(20.0, 0.01)
    return RadialField(grid, np.exp(-grid.nodes**2))


def test_closed_form_matches_symbolic_kernel(symbolic_kernel):
    r, s, p = symbolic_kernel
    for radius in (1e-5, 0.3, 2.0, 9.0):
        expected = float(p.subs({r: radius, s: 0.4}).evalf(30))
        assert heat_kernel_closed_form_d3(radius, 0.4) == pytest.approx(expected, rel=1e-10)


def test_closed_form_solves_heat_equation(symbolic_kernel):
    """∂_s p = p_rr + 2coth r·p_r at sample points"""
    r, s, p = symbolic_kernel
    residual = sympy.diff(p, s) - sympy.diff(p, r, 2) - 2 * sympy.cosh(r) / sympy.sinh(r) * sympy.diff(p, r)
    for radius, time in ((0.7, 0.3), (2.5, 1.0)):
        point = {r: radius, s: time}
        scale = abs(float(p.evalf(30, subs=point)))
        assert abs(float(residual.evalf(30, subs=point))) <= 1e-12 * scale


def test_closed_form_no_overflow_at_large_radius():
    values = heat_kernel_closed_form_d3(np.array([0.0, 400.0, 800.0]), 1.0)
    assert np.all(np.isfinite(values))
    assert values[0] == pytest.approx((4.0 * math.pi) ** -1.5 * math.exp(-1.0))


def test_lp_kernels_match_symbolic_derivatives(symbolic_kernel):
    r, s, p = symbolic_kernel
    lam = 2.0
    heat_time = lam**-2
    first = 2 * s * sympy.diff(p, s)
    second = 2 * s**2 * sympy.diff(p, s, 2)
    for radius in (0.1, 0.5, 1.5):
        point = {r: radius, s: heat_time}
        assert lp_kernel(LPKernelSpec(k=0, lam=lam), radius) == pytest.approx(float((2 * p).subs(point)), rel=1e-10)
        assert lp_kernel(LPKernelSpec(k=1, lam=lam), radius) == pytest.approx(float(first.subs(point)), rel=1e-9)
        assert lp_kernel(LPKernelSpec(k=2, lam=lam), radius) == pytest.approx(float(second.subs(point)), rel=1e-9)


def test_kernel_spec_guards():
    with pytest.raises(GuardError):
        LPKernelSpec(k=3, lam=2.0)
    with pytest.raises(GuardError):
        LPKernelSpec(k=1, lam=0.5)
    with pytest.raises(GuardError):
        lp_kernel(LPKernelSpec(k=1, lam=2.0, d=4), 0.5)


def test_heat_params_guards():
    with pytest.raises(GuardError):
        HeatParams(s=0.0, steps=10)
    with pytest.raises(GuardError):
        HeatParams(s=1.0, steps=4)
    with pytest.raises(GuardError):
        HeatParams(s=1.0, steps=10, scheme="explicit")
    grid = make_radial_grid(4.0, 0.01)
    assert HeatParams.for_grid(0.05, grid).steps == 8
    assert HeatParams.for_grid(0.5, grid, steps=12).steps == 12


def test_heat_l1_mass_is_one():
    assert heat_l1_mass(0.5) == pytest.approx(1.0, abs=1e-8)
    assert heat_l1_mass(2.0) == pytest.approx(1.0, abs=1e-8)


def test_bound_dominates_kernel_in_three_dimensions():
    r = np.linspace(0.0, 10.0, 101)
    ratio = heat_kernel_closed_form_d3(r, 0.5) / heat_kernel_bound_dm(r, 0.5, 3)
    assert np.all(ratio <= 1.0)


def test_heat_flow_of_kernel_advances_time():
    """e^{sΔ}p_{s0} = p_{s0+s}"""
    grid = make_radial_grid(8.0, 0.005)
    start = RadialField(grid, heat_kernel_closed_form_d3(grid.nodes, 0.05))
    evolved = heat_evolve(start, 0.25, steps=400)
    exact = RadialField(grid, heat_kernel_closed_form_d3(grid.nodes, 0.3))
    assert lp_norm(evolved - exact, 2) / lp_norm(exact, 2) < 5e-3


def test_heat_evolve_zero_time_and_guards(gaussian_field):
    assert np.array_equal(heat_evolve(gaussian_field, 0.0).values, gaussian_field.values)
    with pytest.raises(GuardError):
        heat_evolve(gaussian_field, -1.0)


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_spectral_gap_decay(gaussian_field, s):
    ratio = lp_norm(heat_evolve(gaussian_field, s), 2) / lp_norm(gaussian_field, 2)
    assert ratio <= math.exp(-s) * (1.0 + 1e-3)


def test_semigroup_profile_order(gaussian_field):
    profile = heat_semigroup_profile(gaussian_field, [0.2, 0.1, 0.0])
    assert np.array_equal(profile[1].values, heat_evolve(gaussian_field, 0.1).values)
    assert profile[2] is not None
    assert np.array_equal(profile[2].values, gaussian_field.values)
    assert lp_norm(profile[0], 2) < lp_norm(profile[1], 2)
    with pytest.raises(GuardError):
        heat_semigroup_profile(gaussian_field, [-0.1])


def test_projection_paths_agree():
    lam = 2.0
    grid = grid_covering(16.0 / lam, 1.0 / (40.0 * lam))
    f = RadialField(grid, np.exp(-((lam * grid.nodes / 2.0) ** 2)))
    by_heat = lp_project(f, lam)
    by_kernel = lp_project_by_kernel(f, lam)
    assert lp_norm(by_heat - by_kernel, 2) / lp_norm(by_kernel, 2) <= 0.02


def test_projection_guards(gaussian_field):
    with pytest.raises(GuardError):
        lp_project(gaussian_field, 0.5)
    with pytest.raises(GuardError):
        lp_band(gaussian_field, 2.0, 1.0)
    with pytest.raises(GuardError):
        lp_band(gaussian_field, 1.0, 2.0, n_lam=8)


def test_zero_field_band_and_defect():
    grid = make_radial_grid(4.0, 0.01)
    zero = grid.zeros()
    assert not np.any(lp_band(zero, 0.5, 4.0).values)
    assert reconstruction_defect(zero, 0.0625, 256.0) == 0.0


def test_dyadic_grid():
    assert dyadic_grid(0.01) == [1.0, 2.0, 4.0, 8.0, 16.0]
    assert dyadic_grid(0.5) == [1.0]


def test_envelope_fit_exponents():
    r = np.linspace(0.0, 3.0, 61)
    heat = fit_kernel_envelope(0, (4.0, 8.0), r)
    assert heat.exponent == 0.0
    assert heat.constant <= 2.0 * (4.0 * math.pi) ** -1.5 * (1.0 + 1e-9)
    first = fit_kernel_envelope(1, (4.0, 8.0), r)
    second = fit_kernel_envelope(2, (4.0, 8.0), r)
    assert 1.0 < second.exponent < 3.0
    assert second.exponent > first.exponent
    assert second.constant > 0


def test_refined_sobolev_zero_and_gaussian():
    grid = make_radial_grid(6.0, 0.01)
    assert refined_sobolev_check(grid.zeros()).ratio == 0.0
    result = refined_sobolev_check(field_from_function(grid, lambda r: np.exp(-(r**2))), [1.0, 2.0, 4.0, 8.0])
    assert math.isfinite(result.ratio) and result.ratio > 0
    assert result.B > 0


def test_concentration_norms_are_positive():
    norms = concpp_norms(2.0, 1.0)
    for value in (norms.h0, norms.h1, norms.h2, norms.tail_h1):
        assert math.isfinite(value) and value > 0


def test_near_delta_has_unit_mass():
    grid = make_radial_grid(4.0, 0.001)
    assert lp_norm(near_delta(grid, 0.01), 1) == pytest.approx(1.0, rel=1e-3)


def test_reconstruction_is_the_band_over_the_window(gaussian_field):
    np.testing.assert_array_equal(
        lp_reconstruct(gaussian_field, 0.5, 8.0, 16).values,
        lp_band(gaussian_field, 0.5, 8.0, 16).values,
    )
    assert not np.any(lp_reconstruct(gaussian_field.grid.zeros(), 0.5, 8.0, 16).values)


def test_refined_sobolev_functional():
    grid = make_radial_grid(6.0, 0.01)
    f = field_from_function(grid, lambda r: np.exp(-(r**2)))
    lams = [1.0, 2.0, 4.0, 8.0]
    assert refined_sobolev_B(f, lams) == pytest.approx(refined_sobolev_check(f, lams).B)
    assert refined_sobolev_B(grid.zeros(), lams) == 0.0
    with pytest.raises(GuardError):
        refined_sobolev_B(f, [])
    flat = make_radial_grid(6.0, 0.01, Geometry(EUCLIDEAN))
    with pytest.raises(GuardError):
        refined_sobolev_B(field_from_function(flat, lambda r: np.exp(-(r**2))), lams)
