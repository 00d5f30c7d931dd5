from fractions import Fraction

import pytest

from hypwave.config import EXPERIMENT_NAMES, config_from_mapping
from hypwave.diagnostics import multiplier_a_r, multiplier_c2
from hypwave.exceptions import ConfigError
from hypwave.experiments import (
    REGISTRY,
    closed_form_a_r,
    closed_form_c2,
    get_experiment,
    half_octave_grid,
    reference_gamma,
)
from hypwave.report import FAILED, PASSED, ExperimentReport


def test_registry_covers_every_criterion():
    assert set(REGISTRY) == set(EXPERIMENT_NAMES)
    assert sorted(e.criterion for e in REGISTRY.values()) == list(range(1, 16))
    assert all(e.summary for e in REGISTRY.values())


@pytest.mark.parametrize("key", [6, "6", " 6 ", "strichartz_admissible"])
def test_lookup_by_number_or_name(key):
    assert get_experiment(key) is REGISTRY["strichartz_admissible"]


@pytest.mark.parametrize("key", [0, 16, "heat", ""])
def test_unknown_experiments(key):
    with pytest.raises(ConfigError):
        get_experiment(key)


def test_reference_gamma_is_exact():
    assert reference_gamma(5, 10) == Fraction(1)
    assert reference_gamma(2, 6) == Fraction(2, 3)
    assert reference_gamma(4, 4) == Fraction(1, 2)


def test_admissibility_experiment_passes():
    config = config_from_mapping({"experiment": "strichartz_admissible", "seed": 3})
    report = get_experiment(6).run(config)
    assert report.status == PASSED
    assert report.checks == {"reference_triples": True, "randomized_pairs": True}
    assert len(report.rows) == 23


def test_closed_form_multipliers():
    assert closed_form_a_r(1.0) == pytest.approx(0.294487, abs=1e-6)
    assert closed_form_c2(1.0) == pytest.approx(0.226659, abs=1e-6)
    assert multiplier_a_r(2.0) == pytest.approx(closed_form_a_r(2.0), rel=1e-10)
    assert multiplier_c2(2.0) == pytest.approx(closed_form_c2(2.0), rel=1e-10)


def test_half_octave_grid():
    lams = half_octave_grid(1.0 / 64.0)
    assert len(lams) == 9
    assert lams[0] == 1.0
    assert lams[-1] == pytest.approx(16.0)
    assert lams[1] == pytest.approx(2**0.5)
    assert half_octave_grid(0.001, ceiling=4.0)[-1] == pytest.approx(4.0)


def energy_report(linear_drift, quintic_drift, order):
    report = ExperimentReport("energy_conservation")
    report.add_row("linear", raw_drift=linear_drift, shadow_drift=1e-12)
    report.add_row("defocusing_quintic", raw_drift=quintic_drift, shadow_drift=1e-12)
    report.add_row("round_trip", round_trip_error=1e-13)
    if order is not None:
        report.fits["raw_energy_order"] = order
    return report


def test_energy_conservation_checks_raw_drift():
    """The actual energy drift is checked, not the shadow energy."""
    config = config_from_mapping({"experiment": "energy_conservation"})
    evaluate = get_experiment(7).evaluate

    report = evaluate(energy_report(5e-6, 5.4e-6, 2.0), config)
    assert report.status == PASSED
    assert report.thresholds["drift_linear"] == 1e-5

    report = evaluate(energy_report(2.09e-5, 2.16e-5, 2.0), config)
    assert report.checks["drift_linear"] is False
    assert report.checks["drift_defocusing_quintic"] is False
    assert report.status == FAILED


@pytest.mark.parametrize("order", [1.2, None])
def test_energy_conservation_needs_second_order(order):
    config = config_from_mapping({"experiment": "energy_conservation"})
    report = get_experiment(7).evaluate(energy_report(5e-6, 5e-6, order), config)
    assert report.checks["drift_order"] is False
    assert report.status == FAILED


@pytest.mark.parametrize("name", ["heat_kernel", "refined_sobolev", "local_energy_decay"])
def test_empty_experiments_fail(name):
    config = config_from_mapping({"experiment": name})
    report = get_experiment(name).evaluate(ExperimentReport(name), config)
    assert report.checks == {"has_rows": False}
    assert report.status == FAILED
