import math

import numpy as np
import pytest
import sympy

from hypwave.exceptions import GuardError, ResolutionError
from hypwave.geom import (
    EUCLIDEAN,
    SUBSTITUTED,
    Geometry,
    RadialField,
    cutoff,
    field_from_function,
    geodesic_distance,
    grid_covering,
    inner_product,
    lp_norm,
    make_radial_grid,
    radial_gradient,
    radial_laplacian,
    support_radius,
    translate_eval,
    translated_inner,
    translated_integral,
    translated_product_integral,
    volume_weight,
)


def gaussian(width=1.0):
    return lambda r: np.exp(-((r / width) ** 2))


@pytest.fixture
def hyperbolic_grid():
    return make_radial_grid(6.0, 0.005)


def sympy_laplacian(expression, r, kind="hyperbolic"):
    """Symbolic radial Laplacian in dimension 3."""
    if kind == "hyperbolic":
        return sympy.diff(expression, r, 2) + 2 * sympy.cosh(r) / sympy.sinh(r) * sympy.diff(expression, r)
    return sympy.diff(expression, r, 2) + 2 / r * sympy.diff(expression, r)


def test_grid_guards():
    """Non-integral ratios, too few intervals and non-positive sizes are rejected"""
    with pytest.raises(GuardError):
        make_radial_grid(1.0, 0.3)
    with pytest.raises(GuardError):
        make_radial_grid(1.0, 0.1)
    with pytest.raises(GuardError):
        make_radial_grid(-1.0, 0.01)
    with pytest.raises(GuardError):
        make_radial_grid(1.0, 0.0)


def test_grid_covering_rounds_up():
    grid = grid_covering(1.01, 0.05)
    assert grid.n_intervals == 21
    assert grid.r_max == pytest.approx(1.05)
    assert grid_covering(0.1, 0.05).n_intervals == 16


def test_geometry_guards():
    with pytest.raises(GuardError):
        Geometry("spherical")
    with pytest.raises(GuardError):
        Geometry(mass_shift=-1.0)
    assert Geometry(mass_shift=-0.5).mass_shift == -0.5
    assert Geometry(EUCLIDEAN, mass_shift=-3.0).kind == EUCLIDEAN


def test_ball_volume():
    """L¹ norm of the constant 1 is the volume of the ball"""
    hyperbolic = make_radial_grid(1.0, 0.001)
    ones = RadialField(hyperbolic, np.ones(hyperbolic.size))
    assert lp_norm(ones, 1) == pytest.approx(math.pi * (math.sinh(2.0) - 2.0), rel=1e-5)

    flat = make_radial_grid(1.0, 0.001, Geometry(EUCLIDEAN))
    ones = RadialField(flat, np.ones(flat.size))
    assert lp_norm(ones, 1) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-5)


def test_volume_weight_guard(hyperbolic_grid):
    assert volume_weight(hyperbolic_grid, 0) == 0.0
    assert volume_weight(hyperbolic_grid, 200) == pytest.approx(4.0 * math.pi * math.sinh(1.0) ** 2)
    with pytest.raises(GuardError):
        volume_weight(hyperbolic_grid, hyperbolic_grid.size)


def test_lp_norm_guard_and_sup(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian())
    with pytest.raises(GuardError):
        lp_norm(f, 0.5)
    assert lp_norm(f, math.inf) == 1.0
    assert inner_product(f, f) == pytest.approx(lp_norm(f, 2) ** 2)


def test_laplacian_matches_symbolic_oracle():
    """Interior values agree with the symbolic Laplace–Beltrami operator"""
    r = sympy.symbols("r", positive=True)
    expression = sympy.exp(-(r**2))
    exact = sympy.lambdify(r, sympy_laplacian(expression, r), "numpy")
    grid = make_radial_grid(4.0, 0.001)
    f = field_from_function(grid, gaussian())
    lap = radial_laplacian(f)
    interior = slice(1, -1)
    assert np.max(np.abs(lap.values[interior] - exact(grid.nodes[interior]))) < 1e-4
    # origin: d·f''(0) = 3·(−2)
    assert lap.values[0] == pytest.approx(-6.0, abs=1e-3)


def test_laplacian_flat_oracle():
    r = sympy.symbols("r", positive=True)
    expression = sympy.exp(-(r**2))
    exact = sympy.lambdify(r, sympy_laplacian(expression, r, "euclidean"), "numpy")
    grid = make_radial_grid(4.0, 0.001, Geometry(EUCLIDEAN))
    lap = radial_laplacian(field_from_function(grid, gaussian()))
    assert np.max(np.abs(lap.values[1:-1] - exact(grid.nodes[1:-1]))) < 1e-4


def test_laplacian_second_order():
    """Observed order from two spacings on shared nodes"""
    errors = []
    for h in (0.01, 0.005):
        grid = make_radial_grid(4.0, h)
        f = field_from_function(grid, gaussian())
        nodes = grid.nodes
        exact = np.exp(-nodes**2) * (4.0 * nodes**2 - 2.0) + 2.0 / np.tanh(np.where(nodes > 0, nodes, 1.0)) * (
            -2.0 * nodes * np.exp(-nodes**2)
        )
        window = (nodes >= 0.5) & (nodes <= 3.0)
        errors.append(np.max(np.abs(radial_laplacian(f).values[window] - exact[window])))
    assert math.log2(errors[0] / errors[1]) > 1.8


def test_spherical_eigenfunction():
    """sin(kr)/sinh r satisfies Δu = −(1 + k²)u on hyperbolic space"""
    k = 2.0
    grid = make_radial_grid(5.0, 0.001)
    nodes = grid.nodes
    values = np.where(nodes > 0, np.sin(k * nodes) / np.sinh(np.where(nodes > 0, nodes, 1.0)), k)
    f = RadialField(grid, values)
    lap = radial_laplacian(f)
    window = (nodes >= 0.1) & (nodes <= 4.5)
    np.testing.assert_allclose(lap.values[window], -(1.0 + k**2) * values[window], atol=1e-4)


def test_mass_shift_subtracted():
    grid = make_radial_grid(4.0, 0.01, Geometry(mass_shift=0.5))
    f = field_from_function(grid, gaussian())
    plain = radial_laplacian(f)
    shifted = radial_laplacian(f, subtract_mass=True)
    np.testing.assert_allclose(plain.values - shifted.values, 0.5 * f.values)


def test_gradient_exact_for_quadratics(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, lambda r: r**2)
    np.testing.assert_allclose(radial_gradient(f).values, 2.0 * hyperbolic_grid.nodes, atol=1e-9)


def test_cutoff_values():
    assert cutoff(0.5) == 1.0
    assert cutoff(2.5) == 0.0
    assert cutoff(1.5) == pytest.approx(0.5)
    assert cutoff(-1.5) == pytest.approx(0.5)
    np.testing.assert_allclose(cutoff(np.array([0.0, 1.0, 2.0])), [1.0, 1.0, 0.0])


def test_representation_round_trip(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian())
    w = f.to_substituted()
    assert w.representation == SUBSTITUTED
    assert w.values[0] == 0.0
    np.testing.assert_allclose(w.to_physical().values, f.values, atol=1e-9)


def test_substituted_must_vanish_at_origin(hyperbolic_grid):
    with pytest.raises(GuardError):
        RadialField(hyperbolic_grid, np.ones(hyperbolic_grid.size), SUBSTITUTED)


def test_fields_must_share_grid(hyperbolic_grid):
    other = make_radial_grid(6.0, 0.01)
    with pytest.raises(GuardError):
        hyperbolic_grid.zeros() + other.zeros()


def test_support_radius(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, lambda r: np.where(r < 1.0, 1.0 - r, 0.0))
    assert support_radius(f) == pytest.approx(1.0, abs=0.01)
    assert support_radius(hyperbolic_grid.zeros()) == 0.0


def test_geodesic_distance_limits():
    assert geodesic_distance(1.3, 0.4, 1.0) == pytest.approx(0.9, abs=1e-12)
    assert geodesic_distance(1.3, 0.4, -1.0) == pytest.approx(1.7, abs=1e-12)
    expected = math.acosh(math.cosh(1.3) * math.cosh(0.4) - math.sinh(1.3) * math.sinh(0.4) * 0.3)
    assert geodesic_distance(1.3, 0.4, 0.3) == pytest.approx(expected, rel=1e-12)


def random_points(rng, count):
    radii = rng.uniform(0.0, 4.0, count)
    directions = rng.normal(size=(count, 3))
    return radii, directions / np.linalg.norm(directions, axis=1, keepdims=True)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_geodesic_distance_is_a_metric(seed):
    """Symmetry and the triangle inequality on random triples of points."""
    rng = np.random.default_rng(seed)
    (ra, na), (rb, nb), (rc, nc) = (random_points(rng, 200) for _ in range(3))

    def distance(r1, n1, r2, n2):
        return geodesic_distance(r1, r2, np.sum(n1 * n2, axis=1))

    ab = distance(ra, na, rb, nb)
    assert np.array_equal(ab, distance(rb, nb, ra, na))
    assert np.array_equal(geodesic_distance(rb, ra, np.sum(na * nb, axis=1)), ab)
    assert np.all(ab >= 0.0)
    assert np.all(distance(ra, na, rc, nc) <= ab + distance(rb, nb, rc, nc) + 1e-9)
    np.testing.assert_array_equal(geodesic_distance(ra, ra, 1.0), 0.0)


def test_translate_eval(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian())
    assert translate_eval(f, 0.0, 0.5, 0.2) == pytest.approx(math.exp(-0.25), rel=1e-5)
    # the translated centre sits at distance 0 from itself
    assert translate_eval(f, 1.0, 1.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(GuardError):
        translate_eval(f, -1.0, 0.5, 0.0)


def test_translation_preserves_integrals(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian(0.5))
    centred = translated_integral(f, 0.0)
    assert translated_integral(f, 1.5) == pytest.approx(centred, rel=1e-3)
    assert translated_integral(f, 1.5, transform=np.square) == pytest.approx(lp_norm(f, 2) ** 2, rel=1e-3)


def test_shell_and_angular_quadrature_agree(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian(0.5))
    g = field_from_function(hyperbolic_grid, gaussian(0.7))
    shell = translated_integral(f, 1.5, weight=g)
    angular = translated_integral(f, 1.5, weight=g, method="angular")
    assert shell > 0
    assert angular == pytest.approx(shell, rel=2e-3)
    assert translated_inner(g, f, 1.5) == pytest.approx(shell)


def test_translated_integral_guards(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian())
    with pytest.raises(GuardError):
        translated_integral(f, -0.1)
    with pytest.raises(GuardError):
        translated_integral(f, 1.0, method="spectral")
    with pytest.raises(ResolutionError):
        translated_integral(f, 1.0, panels=1)
    flat = make_radial_grid(6.0, 0.005, Geometry(EUCLIDEAN))
    with pytest.raises(GuardError):
        translated_integral(field_from_function(flat, gaussian()), 1.0)


def test_product_of_two_translations(hyperbolic_grid):
    f = field_from_function(hyperbolic_grid, gaussian(0.5))
    g = field_from_function(hyperbolic_grid, gaussian(0.7))
    ones = np.ones_like
    assert translated_product_integral(ones, g, 0.0, f, 1.5, support=5.0) == pytest.approx(
        translated_inner(g, f, 1.5), rel=2e-3
    )
    # moving both factors by the same distance is an isometry
    assert translated_product_integral(ones, g, 1.0, f, 1.0, support=5.5) == pytest.approx(
        inner_product(g, f), rel=5e-3
    )
    assert translated_product_integral(ones, g, 0.0, f, 1.5, support=0.0) == 0.0
