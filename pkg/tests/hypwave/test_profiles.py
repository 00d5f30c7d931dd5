import math

import numpy as np
import pytest

from hypwave.exceptions import GuardError, ResolutionError
from hypwave.geom import grid_covering
from hypwave.profiles import (
    CONCENTRATING,
    FLAT,
    STATIONARY,
    TRAVELING,
    PlacedState,
    ProfileSequence,
    ProfileSpec,
    build_profile,
    data_at_energy,
    evaluate_euclidean_approx,
    evaluate_small_data_scattering,
    evaluate_traveling_forcing,
    extract_profiles,
    flat_pair,
    nu_functional,
    orthogonal_superposition,
    orthogonality,
    placed_energy,
    pythagorean_check,
    q_m_regularize,
    scaled_to_energy_norm,
    superpose,
    superposition_energy,
    t_lambda,
)
from hypwave.report import FAILED, PASSED, ExperimentReport
from hypwave.solver import (
    DEFOCUSING_QUINTIC,
    DataGenerator,
    EquationSpec,
    State,
    energy,
    energy_norm,
    evolve,
    make_state,
    zero_state,
)

INNER = DataGenerator("smooth_cutoff_polynomial", width=1.0)
OUTER = DataGenerator("gaussian_bump", width=0.3, center=4.0)


@pytest.fixture
def grid():
    return grid_covering(6.0, 0.01)


def test_orthogonality_alternatives():
    base = ProfileSpec(STATIONARY)
    assert orthogonality(ProfileSpec(CONCENTRATING, scale=8.0), ProfileSpec(CONCENTRATING, scale=2.0)) == "scale"
    assert orthogonality(ProfileSpec(TRAVELING, translation=3.0), base) == "spacetime"
    assert orthogonality(ProfileSpec(TRAVELING, translation=1.0), ProfileSpec(TRAVELING, translation=1.5)) is None
    assert orthogonality(base, ProfileSpec(STATIONARY, t_shift=-2.5)) == "spacetime"


def test_orthogonality_along_a_sequence():
    travelers = ProfileSequence.from_schedule(TRAVELING, DataGenerator(), [1, 2, 3], translation=lambda n: 0.75 * n)
    assert orthogonality(travelers, ProfileSpec(STATIONARY), n=1) is None
    assert orthogonality(travelers, ProfileSpec(STATIONARY), n=3) == "spacetime"
    with pytest.raises(GuardError):
        travelers.at(7)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "solitary"},
        {"kind": CONCENTRATING, "scale": 0.5},
        {"kind": TRAVELING, "translation": 0.0},
        {"kind": CONCENTRATING, "scale": 1.0},
        {"kind": STATIONARY, "translation": 1.0},
        {"kind": STATIONARY, "translation": -1.0},
    ],
)
def test_profile_spec_guards(kwargs):
    with pytest.raises(GuardError):
        ProfileSpec(**kwargs)


def test_profile_sequence_guards():
    spec = ProfileSpec(STATIONARY)
    with pytest.raises(GuardError):
        ProfileSequence((), ())
    with pytest.raises(GuardError):
        ProfileSequence((2, 1), (spec, spec))
    with pytest.raises(GuardError):
        ProfileSequence((1, 2), (ProfileSpec(CONCENTRATING, scale=4.0), ProfileSpec(CONCENTRATING, scale=2.0)))


def test_regularization_guards(grid):
    pair = make_state(OUTER, EquationSpec(), grid)
    with pytest.raises(GuardError):
        q_m_regularize(pair, 2.0)
    flat = flat_pair(DataGenerator(), 0.02)
    with pytest.raises(GuardError):
        q_m_regularize(flat, 0.5)


def test_concentration(grid):
    flat = flat_pair(DataGenerator(), 0.02)
    assert flat.grid.geometry == FLAT
    pair = t_lambda(flat, 2.0, grid)
    assert 0 < pair.u.values[0] < math.sqrt(2.0)
    assert not np.any(pair.ut.values)
    with pytest.raises(GuardError):
        t_lambda(flat, 0.5, grid)
    with pytest.raises(GuardError):
        t_lambda(flat, 2.0, flat.grid)
    with pytest.raises(ResolutionError):
        t_lambda(flat, 16.0, grid)


def test_pythagorean_disjoint_supports(grid):
    equation = EquationSpec()
    inner = make_state(INNER, equation, grid)
    outer = make_state(OUTER, equation, grid)
    total = State(inner.u + outer.u, inner.ut + outer.ut, 0.0, equation)
    assert pythagorean_check(total, [inner, outer]) == pytest.approx(0.0, abs=1e-12)
    # doubling a state quadruples its energy
    doubled = State(inner.u * 2.0, inner.ut * 2.0, 0.0, equation)
    assert pythagorean_check(doubled, [inner, inner]) == pytest.approx(1.0)
    with pytest.raises(GuardError):
        pythagorean_check(total, [])


def test_superposition(grid):
    equation = EquationSpec()
    inner = make_state(INNER, equation, grid)
    outer = make_state(OUTER, equation, grid)
    sup = superpose([PlacedState(inner), PlacedState(outer)], equation)
    np.testing.assert_array_equal(sup.to_state().u.values, inner.u.values + outer.u.values)
    with pytest.raises(GuardError):
        superpose([PlacedState(inner), PlacedState(outer, translation=1.0)], equation).to_state()
    with pytest.raises(GuardError):
        superpose([], equation)
    assert placed_energy(PlacedState(inner), equation) == energy(inner).E_V


def test_build_untranslated_profiles(grid):
    equation = EquationSpec()
    stationary = build_profile(ProfileSpec(STATIONARY, base=OUTER), grid, equation)
    assert stationary.translation == 0.0
    np.testing.assert_array_equal(stationary.state.u.values, make_state(OUTER, equation, grid).u.values)
    traveling = build_profile(ProfileSpec(TRAVELING, translation=2.0, base=OUTER), grid, equation)
    assert traveling.translation == 2.0


def test_nu_of_zero_field(grid):
    result = nu_functional({0.0: zero_state(EquationSpec(), grid)}, [2.0, 1.0], [0.0])
    assert (result.nu, result.lam, result.t, result.r) == (0.0, 1.0, 0.0, 0.0)
    with pytest.raises(GuardError):
        nu_functional({0.0: zero_state(EquationSpec(), grid)}, [], [0.0])


def test_evaluate_euclidean_approx():
    report = ExperimentReport("euclidean_approx")
    for lam in (2.0, 4.0, 8.0):
        report.add_row(lam, sup_H_error=lam**-0.5)
    evaluate_euclidean_approx(report)
    assert report.status == PASSED
    assert report.fits["lambda_order"] == pytest.approx(-0.5)

    rising = ExperimentReport("euclidean_approx")
    for lam, error in ((2.0, 0.1), (4.0, 0.2)):
        rising.add_row(lam, sup_H_error=error)
    assert evaluate_euclidean_approx(rising).status == FAILED
    assert rising.checks["sup_H_error_decreasing"] is False


def test_evaluate_traveling_forcing():
    report = ExperimentReport("traveling_forcing")
    for rho, value in ((1.0, 1.0), (2.0, 0.3), (3.0, 0.05)):
        report.add_row(rho, F=value)
    assert evaluate_traveling_forcing(report).status == PASSED
    assert report.fits["tail_ratio"] == pytest.approx(0.05)

    slow = ExperimentReport("traveling_forcing")
    for rho, value in ((1.0, 1.0), (2.0, 0.5), (3.0, 0.2)):
        slow.add_row(rho, F=value)
    evaluate_traveling_forcing(slow)
    assert slow.checks == {"F_strictly_decreasing": True, "F_tail_ratio": False}


def small_data_row(report, delta, total, saturated=True):
    report.add_row(delta, S_total=total, saturated=saturated, defects_nonincreasing=True)


def test_evaluate_small_data_scattering():
    report = ExperimentReport("scattering")
    for delta in (0.1, 0.4, 0.2):
        small_data_row(report, delta, delta)
    evaluate_small_data_scattering(report)
    assert report.status == PASSED
    assert report.fits["S_ratios"] == pytest.approx([0.5, 0.5])

    unsaturated = ExperimentReport("scattering")
    small_data_row(unsaturated, 0.2, 0.2)
    small_data_row(unsaturated, 0.1, 0.1, saturated=False)
    assert evaluate_small_data_scattering(unsaturated).checks["S_saturated"] is False


def test_scaled_to_energy_norm(grid):
    state = scaled_to_energy_norm(DataGenerator(width=0.8), EquationSpec(), grid, 0.25)
    assert energy_norm(state) == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(GuardError):
        scaled_to_energy_norm(DataGenerator("zero"), EquationSpec(), grid, 0.25)


def test_data_at_energy():
    equation = EquationSpec(nonlinearity=DEFOCUSING_QUINTIC)
    state = data_at_energy(DataGenerator(), equation, grid_covering(8.0, 0.02), 0.5)
    assert energy(state).E_nl == pytest.approx(0.5, rel=1e-9)


def test_superposition_energy_of_disjoint_parts(grid):
    equation = EquationSpec()
    inner = make_state(INNER, equation, grid)
    outer = make_state(OUTER, equation, grid)
    single = superpose([PlacedState(inner)], equation)
    assert superposition_energy(single) == placed_energy(PlacedState(inner), equation)
    both = superpose([PlacedState(inner), PlacedState(outer)], equation)
    assert superposition_energy(both) == pytest.approx(energy(both.to_state()).E_V, rel=1e-9)


def test_orthogonal_superposition_refuses_colliding_profiles(grid):
    colliding = ProfileSequence.from_schedule(TRAVELING, INNER, [1, 2], translation=lambda n: 1.0)
    with pytest.raises(GuardError):
        orthogonal_superposition(colliding, colliding, 2, grid, EquationSpec())


def test_extraction_stops_on_a_zero_trajectory(grid):
    traj = evolve(zero_state(EquationSpec(), grid), 0.5, snapshot_stride=10, diagnostics=())
    found = extract_profiles(traj, [1.0, 2.0], [0.0])
    assert len(found) == 1
    assert found[0].nu == 0.0
    with pytest.raises(GuardError):
        extract_profiles(traj, [1.0], [0.0], depth=0)
