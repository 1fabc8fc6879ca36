"""Run-config validation and the scenario runners behind the CLI."""

import json
import math

import pytest

from vlab.scenarios import (CSV_COLUMNS, SCENARIO_KINDS, SEEDED_KINDS,
                            ConfigError, ScenarioOutcome, ScenarioSpec,
                            run_scenario, validate_config)

# Minimal valid parameter sets, one per kind, sized for sub-second runs.
PARAMS = {
    "geometry_identities": {
        "draws": 40, "max_particles": 4, "max_dim": 2,
        "mass_range": [0.25, 4.0], "tolerance": 1e-12,
    },
    "cone_separation": {
        "masses": [1.0, 1.0, 1.0], "dim": 3, "max_order": 2, "samples": 2000,
        "shell_checks": [{"partition": [[1, 2], [3]], "cluster": [1, 3]}],
        "pairs": [[[[1, 2], [3]], [[1, 3], [2]]]],
    },
    "ims_verify": {
        "epsilons": [0.1, 0.01],
        "radial": {"inner_radius": 1.0, "dimension": 3, "grid_points": 1500},
        "cone": {"masses": [1.0, 1.0, 1.0], "dim": 3,
                 "partition": [[1, 2], [3]], "aperture": 1.0, "samples": 1000},
    },
    "fermion_hardy": {
        "rho0": 1.0, "rho1": 10000.0, "points": 800, "modes": 6,
        "tolerance": 0.02,
    },
    "virtual_level": {
        "d": 3, "shape": {"kind": "square_well"}, "r_max": 40.0,
        "points": 1500, "oracle": 2.4674011002723395, "oracle_rtol": 0.05,
        "sweep": {"defect_denominators": [2, 3, 4]},
    },
    "decay_fit": {
        "d": 3, "shape": {"kind": "square_well"}, "r_max": 40.0,
        "points": 1500, "integration_radius": 400.0,
        "fit_window": [20.0, 200.0], "expected_exponent": 1.0,
        "exponent_tol": 0.05, "expected_classification": "resonance",
    },
    "efimov_count": {
        "subcritical": {"strength": 0.16, "box_sizes": [1000.0, 10000.0]},
        "supercritical": {"strength": 1.0, "slope_rtol": 0.25,
                          "box_sizes": [100.0, 1000.0, 10000.0, 100000.0,
                                        1000000.0]},
        "threshold": {"strength_low": 0.2, "strength_high": 0.3,
                      "box_small": 10000.0, "box_large": 100000000.0},
    },
}


def _scenario(kind="geometry_identities", **overrides):
    base = {"name": "case", "kind": kind, "parameters": PARAMS.get(kind, {})}
    if kind in SEEDED_KINDS:
        base["seed"] = 7
    base.update(overrides)
    return base


def _config(*scenarios):
    return {"version": 1, "scenarios": list(scenarios)}


def _params(kind, **overrides):
    merged = dict(PARAMS[kind])
    merged.update(overrides)
    return merged


def _spec(kind, parameters=None, seed=7, expect_fail=False, name="case"):
    return ScenarioSpec(name=name, kind=kind, seed=seed,
                        expect_fail=expect_fail, output=name,
                        parameters=PARAMS[kind] if parameters is None
                        else parameters)


# ---------------------------------------------------------------------------
# Registry shape
# ---------------------------------------------------------------------------


def test_registry_kinds():
    assert set(SCENARIO_KINDS) == {
        "geometry_identities", "cone_separation", "ims_verify",
        "fermion_hardy", "virtual_level", "decay_fit", "efimov_count"}
    assert SEEDED_KINDS == {"geometry_identities", "cone_separation",
                            "ims_verify"}
    assert SEEDED_KINDS <= set(SCENARIO_KINDS)


def test_csv_columns_pinned():
    # Downstream consumers parse the combined summary by these exact names.
    assert CSV_COLUMNS == ("scenario", "d", "shape", "lambda", "epsilon",
                           "ground_energy", "negative_count", "fitted_s",
                           "classification")


# ---------------------------------------------------------------------------
# Config validation: happy paths and defaults
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", sorted(SCENARIO_KINDS))
def test_validate_accepts_each_kind(kind):
    specs = validate_config(_config(_scenario(kind)))
    assert len(specs) == 1
    assert specs[0].kind == kind
    assert specs[0].name == "case"
    assert specs[0].output == "case"
    assert specs[0].expect_fail is False


def test_validate_defaults_seed_to_zero_for_unseeded_kinds():
    specs = validate_config(_config(_scenario("fermion_hardy")))
    assert specs[0].seed == 0


def test_validate_keeps_explicit_seed_and_output():
    specs = validate_config(_config(
        _scenario(seed=123, output="custom-file", expect_fail=True)))
    assert specs[0].seed == 123
    assert specs[0].output == "custom-file"
    assert specs[0].expect_fail is True


def test_validate_accepts_empty_scenario_list():
    assert validate_config({"version": 1, "scenarios": []}) == []


# ---------------------------------------------------------------------------
# Config validation: top-level and scenario-level rejections
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("config,fragment", [
    ([], "config: expected an object"),
    ({"version": 1}, "missing required keys"),
    ({"version": 1, "scenarios": [], "extra": 1}, "unknown keys"),
    ({"version": 2, "scenarios": []}, "only version 1"),
    ({"version": 1, "scenarios": {}}, "config.scenarios: expected a list"),
])
def test_validate_rejects_bad_top_level(config, fragment):
    with pytest.raises(ConfigError) as err:
        validate_config(config)
    assert fragment in str(err.value)


@pytest.mark.parametrize("scenario,fragment", [
    ("not-an-object", "config.scenarios[0]: expected an object"),
    ({"name": "x", "kind": "fermion_hardy"}, "missing required keys"),
    (_scenario(bogus=1), "unknown keys"),
    (_scenario(name=""), "non-empty name"),
    (_scenario(name="has space"), "non-empty name"),
    (_scenario(name=17), "non-empty name"),
    (_scenario(kind="unknown_kind"), "unknown kind"),
    (_scenario(seed=1.5), "expected an integer"),
    (_scenario(seed=True), "expected an integer"),
    (_scenario(seed=-1), "seed must be >= 0"),
    (_scenario(expect_fail="yes"), "expect_fail must be a boolean"),
    (_scenario(output="bad/name"), "filename-safe"),
])
def test_validate_rejects_bad_scenario_fields(scenario, fragment):
    with pytest.raises(ConfigError) as err:
        validate_config(_config(scenario))
    assert fragment in str(err.value)


def test_validate_rejects_duplicate_names():
    with pytest.raises(ConfigError) as err:
        validate_config(_config(_scenario(), _scenario()))
    assert "duplicate scenario name" in str(err.value)
    assert "config.scenarios[1]" in str(err.value)


@pytest.mark.parametrize("kind", sorted(SEEDED_KINDS))
def test_validate_requires_seed_for_sampling_kinds(kind):
    scenario = _scenario(kind)
    del scenario["seed"]
    with pytest.raises(ConfigError) as err:
        validate_config(_config(scenario))
    assert "requires an explicit seed" in str(err.value)


def test_validate_error_names_the_offending_scenario():
    bad = _scenario(kind="fermion_hardy", name="second",
                    parameters=_params("fermion_hardy", rho0=5.0, rho1=1.0))
    with pytest.raises(ConfigError) as err:
        validate_config(_config(_scenario(name="first"), bad))
    assert "config.scenarios[1].parameters" in str(err.value)


# ---------------------------------------------------------------------------
# Config validation: per-kind parameter rejections
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind,overrides,fragment", [
    ("geometry_identities", {"bogus": 1}, "unknown keys"),
    ("geometry_identities", {"max_particles": 9}, "must lie in [2, 8]"),
    ("geometry_identities", {"max_dim": 0}, "must lie in [1, 4]"),
    ("geometry_identities", {"draws": 0}, "draws must be positive"),
    ("geometry_identities", {"mass_range": [4.0, 0.25]}, "increasing positive"),
    ("geometry_identities", {"mass_range": [0.25]}, "at least 2 numbers"),
    ("geometry_identities", {"tolerance": "tight"}, "expected a number"),
    ("cone_separation", {"max_order": 1}, "max_order must lie in [2, 2]"),
    ("cone_separation", {"max_order": 3}, "max_order must lie in [2, 2]"),
    ("cone_separation", {"samples": 0}, "samples must be positive"),
    ("cone_separation", {"shell_checks": "none"}, "expected a list"),
    ("cone_separation", {"shell_checks": [{"partition": [[1, 2], [3]]}]},
     "missing required keys ['cluster']"),
    ("cone_separation", {"pairs": [[[[1, 2], [3]]]]}, "two-element list"),
    ("cone_separation", {"pairs": [[[[1, 2], [2, 3]], [[1, 3], [2]]]]},
     "pairs[0][0]"),
    ("cone_separation", {"corrupt": {"order": 2, "spin": 1.0}}, "unknown keys"),
    ("cone_separation", {"corrupt": {"aperture_factor": 2.0}},
     "missing required keys ['order']"),
    ("ims_verify", {"epsilons": [1.5]}, "must lie in (0, 1)"),
    ("ims_verify", {"epsilons": []}, "at least 1 numbers"),
    ("ims_verify", {"radial": {"inner_radius": 0.0, "dimension": 3,
                               "grid_points": 100}},
     "inner_radius must be positive"),
    ("ims_verify", {"cone": {"masses": [1.0, 1.0], "dim": 3,
                             "partition": [[1], [2]], "aperture": 0.0,
                             "samples": 10}}, "aperture must be positive"),
    ("fermion_hardy", {"rho0": 5.0, "rho1": 1.0}, "need 0 < rho0 < rho1"),
    ("fermion_hardy", {"points": 99.5}, "expected an integer"),
    ("virtual_level", {"oracle_rtol": None, "oracle": 2.0},
     "expected a number"),
    ("virtual_level", {"shape": {"kind": "no_such_shape"}}, "shape"),
    ("virtual_level", {"shape": {"radius": 2.0}}, "'kind' key"),
    ("virtual_level", {"sweep": {"defect_denominators": []}},
     "non-empty list"),
    ("virtual_level", {"sweep": {"defect_denominators": [2, 1]}},
     "must be >= 2"),
    ("decay_fit", {"expected_classification": "bound"},
     "'eigenvalue', 'resonance' or 'marginal'"),
    ("decay_fit", {"fit_window": [200.0, 20.0]}, "increasing positive"),
    ("decay_fit", {"fit_window": [30.0]}, "at least 2 numbers"),
    ("decay_fit", {"probe_radius": 0.0}, "probe_radius must be positive"),
    ("efimov_count", {"supercritical": {"strength": 0.2, "slope_rtol": 0.2,
                                        "box_sizes": [10.0, 100.0]}},
     "strength must exceed 1/4"),
    ("efimov_count", {"subcritical": {"strength": 0.16, "box_sizes": [10.0]}},
     "at least 2 numbers"),
    ("efimov_count", {"threshold": {"strength_low": 0.2, "strength_high": 0.3,
                                    "box_small": 100.0}},
     "missing required keys ['box_large']"),
])
def test_validate_rejects_bad_parameters(kind, overrides, fragment):
    scenario = _scenario(kind, parameters=_params(kind, **overrides))
    with pytest.raises(ConfigError) as err:
        validate_config(_config(scenario))
    assert fragment in str(err.value)
    assert "parameters" in str(err.value)


def test_virtual_level_oracle_requires_rtol():
    params = _params("virtual_level")
    del params["oracle_rtol"]
    with pytest.raises(ConfigError) as err:
        validate_config(_config(_scenario("virtual_level", parameters=params)))
    assert "oracle needs oracle_rtol" in str(err.value)


# ---------------------------------------------------------------------------
# Outcome semantics
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("checks_passed,expect_fail,passed", [
    (True, False, True),
    (False, False, False),
    (True, True, False),   # a negative control that fails to fail is bad
    (False, True, True),
])
def test_outcome_passed_flips_on_expect_fail(checks_passed, expect_fail, passed):
    spec = _spec("fermion_hardy", expect_fail=expect_fail)
    outcome = ScenarioOutcome(spec=spec, results={},
                              checks_passed=checks_passed)
    assert outcome.passed is passed


def test_outcome_record_structure():
    spec = _spec("fermion_hardy", seed=3, name="ferm")
    outcome = ScenarioOutcome(spec=spec, results={"x": 1}, checks_passed=True)
    record = outcome.record()
    assert record == {"schema": 1, "name": "ferm", "kind": "fermion_hardy",
                      "seed": 3, "expect_fail": False,
                      "parameters": PARAMS["fermion_hardy"],
                      "results": {"x": 1}, "checks_passed": True,
                      "passed": True}


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def test_run_geometry_identities_quick():
    outcome = run_scenario(_spec("geometry_identities"))
    assert outcome.checks_passed
    results = outcome.results
    # sizes 2..4 crossed with dims 1..2
    assert results["combos"] == 6
    assert results["checks"] > 100
    assert 0.0 < results["max_relative_deviation"] <= 1e-13
    assert outcome.spectral_rows == []


def test_run_geometry_identities_is_deterministic():
    first = json.dumps(run_scenario(_spec("geometry_identities")).record(),
                       sort_keys=True)
    second = json.dumps(run_scenario(_spec("geometry_identities")).record(),
                        sort_keys=True)
    assert first == second


def test_run_geometry_identities_seed_changes_draws():
    base = run_scenario(_spec("geometry_identities", seed=7))
    other = run_scenario(_spec("geometry_identities", seed=8))
    assert (base.results["max_relative_deviation"]
            != other.results["max_relative_deviation"])


def test_run_geometry_identities_impossible_tolerance_fails():
    params = _params("geometry_identities", tolerance=1e-300)
    outcome = run_scenario(_spec("geometry_identities", parameters=params))
    assert not outcome.checks_passed
    assert not outcome.passed
    flipped = run_scenario(_spec("geometry_identities", parameters=params,
                                 expect_fail=True))
    assert not flipped.checks_passed
    assert flipped.passed


def test_run_cone_separation_quick():
    outcome = run_scenario(_spec("cone_separation", seed=11))
    assert outcome.checks_passed
    results = outcome.results
    assert [m["order"] for m in results["margins"]] == [2]
    assert results["margins"][0]["left_margin"] > 0.0
    assert results["margins"][0]["right_margin"] > 0.0
    shell = results["shell_checks"][0]
    assert shell["violations"] == 0
    assert shell["samples_used"] == shell["samples_requested"] == 2000
    pair = results["pairs"][0]
    assert pair["violations"] == 0
    assert len(results["ladder"]) == 2


def test_run_cone_separation_derived_seeds_differ():
    base = run_scenario(_spec("cone_separation", seed=11))
    other = run_scenario(_spec("cone_separation", seed=12))
    assert (base.results["shell_checks"][0]["worst_ratio"]
            != other.results["shell_checks"][0]["worst_ratio"])


def test_run_cone_separation_corrupt_aperture_fails():
    params = _params("cone_separation",
                     corrupt={"order": 2, "aperture_factor": 50.0})
    outcome = run_scenario(_spec("cone_separation", parameters=params,
                                 seed=11, expect_fail=True))
    assert not outcome.checks_passed
    assert outcome.passed


def test_run_cone_separation_corrupt_separation_fails():
    params = _params("cone_separation",
                     corrupt={"order": 2, "separation_factor": 1000.0})
    outcome = run_scenario(_spec("cone_separation", parameters=params,
                                 seed=11))
    assert not outcome.checks_passed


def test_run_ims_verify_quick():
    outcome = run_scenario(_spec("ims_verify", seed=41))
    assert outcome.checks_passed
    radial = outcome.results["radial"]
    assert [entry["epsilon"] for entry in radial] == [0.1, 0.01]
    for entry in radial:
        assert entry["max_ratio"] <= 1.0 + 1e-9
        assert entry["unity_defect"] <= 1e-14
    # tighter budgets push the support outward
    assert radial[1]["outer_radius"] > radial[0]["outer_radius"]
    for entry in outcome.results["cone"]:
        assert entry["max_defect"] <= 1.0 + 1e-9
        assert entry["unity_defect"] <= 1e-14
        assert entry["plateau_inequality_value"] <= entry["epsilon"]
        assert entry["configuration_max_mismatch"] <= 1e-6


def test_run_fermion_hardy_quick():
    outcome = run_scenario(_spec("fermion_hardy", seed=0))
    assert outcome.checks_passed
    natural = outcome.results["natural"]
    assert natural["min_rayleigh"] == pytest.approx(9.0, rel=0.02)
    assert natural["minimizing_mode"] == 1
    dirichlet = outcome.results["dirichlet"]
    assert dirichlet["min_rayleigh"] >= natural["min_rayleigh"]


def test_run_fermion_hardy_unreachable_tolerance_fails():
    params = _params("fermion_hardy", tolerance=1e-300)
    outcome = run_scenario(_spec("fermion_hardy", parameters=params, seed=0))
    assert not outcome.checks_passed


def test_run_virtual_level_quick():
    outcome = run_scenario(_spec("virtual_level", seed=0))
    assert outcome.checks_passed
    crit = outcome.results["critical"]
    assert crit["coupling"] == pytest.approx(2.4674011002723395, rel=0.05)
    assert outcome.results["oracle_relative_gap"] <= 0.05
    sweep = outcome.results["sweep"]
    assert [entry["epsilon"] for entry in sweep] == [0.5, 1 / 3, 0.25]
    energies = [entry["ground_energy"] for entry in sweep]
    assert all(e < 0.0 for e in energies)
    assert energies == sorted(energies)  # rising toward zero
    # one CSV row for the critical operator plus one per sweep point
    assert len(outcome.spectral_rows) == 4
    head = outcome.spectral_rows[0]
    assert set(head) == set(CSV_COLUMNS)
    assert head["d"] == 3
    assert head["epsilon"] == 0.0
    assert head["fitted_s"] == ""
    assert head["classification"] == ""
    assert outcome.spectral_rows[1]["epsilon"] == 0.5


def test_run_virtual_level_tight_oracle_fails():
    # The finite-box coupling sits about 2% above the continuum value, so a
    # 1% oracle band must flag it.
    params = _params("virtual_level", oracle_rtol=0.01)
    outcome = run_scenario(_spec("virtual_level", parameters=params, seed=0))
    assert not outcome.checks_passed
    assert outcome.results["oracle_relative_gap"] > 0.01


def test_run_decay_fit_quick():
    outcome = run_scenario(_spec("decay_fit", seed=0))
    assert outcome.checks_passed
    fit = outcome.results["fit"]
    assert fit["decay_exponent"] == pytest.approx(1.0, abs=0.05)
    assert fit["classification"]["label"] == "resonance"
    assert not fit["classification"]["marginal"]
    assert not fit["rejected"]
    row = outcome.spectral_rows[0]
    assert row["fitted_s"] == fit["decay_exponent"]
    assert row["classification"] == "resonance"
    profile = outcome.results["profile"]
    assert len(profile["r"]) == len(profile["log_abs_psi"])
    assert 100 <= len(profile["r"]) <= 500  # downsampled for the report


def test_run_decay_fit_wrong_expectation_fails():
    params = _params("decay_fit", expected_classification="eigenvalue")
    outcome = run_scenario(_spec("decay_fit", parameters=params, seed=0))
    assert not outcome.checks_passed


def test_run_efimov_count_quick():
    outcome = run_scenario(_spec("efimov_count", seed=0))
    assert outcome.checks_passed
    sub = outcome.results["subcritical"]
    assert [entry["count"] for entry in sub["counts"]] == [0, 0]
    assert sub["saturated"]
    sup = outcome.results["supercritical"]
    counts = [entry["count"] for entry in sup["counts"]]
    assert counts == sorted(counts) and counts[-1] > counts[0]
    assert sup["slope"] == pytest.approx(sup["predicted_slope"], rel=0.25)
    assert sup["predicted_slope"] == pytest.approx(math.sqrt(0.75) / math.pi)
    thresh = outcome.results["threshold"]
    assert thresh["low_saturated"] and thresh["high_grows"]


def test_run_scenario_propagates_crashes():
    # Runners do not swallow errors; the CLI layer turns them into failures.
    params = _params("virtual_level", points=3)
    with pytest.raises(ValueError):
        run_scenario(_spec("virtual_level", parameters=params, seed=0))
