"""Partition-of-unity pairs: budgets, profiles, negative controls.

The constructions spend a fixed fraction (0.96) of the gradient budget, so
the verified worst-case ratios have exact expected values; corrupting a
stored regime boundary by halving its logarithmic width must quadruple the
worst ratio, which the verifiers are required to detect.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from vlab.cutoffs import (build_cone_cutoff, build_radial_cutoff,
                          verify_cone_bound, verify_radial_bound)
from vlab.geometry import MassSystem
from vlab.hardy import hardy_constant
from vlab.partitions import all_singletons, one_cluster, partition_of

EPSILONS = (0.1, 0.01, 0.001)

THREE_EQUAL = MassSystem(dim=3, masses=(1.0, 1.0, 1.0))
PAIR_SPLIT = partition_of(3, [[1, 2], [3]])


# ---------------------------------------------------------------------------
# Radial pair
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_radial_regime_widths_match_closed_forms(epsilon):
    # The smoothstep regime peaks at slope 3/2, so its log-width solves
    # (1.5 * cap / w)^2 = 0.96 * epsilon; the decay regime starts at ratio
    # cot(cap)^2 / (w^2 epsilon), giving the second width.  cap = pi/3.
    pair = build_radial_cutoff(epsilon, 1.0)
    cap = pair.transition_angle
    budget = math.sqrt(0.96 * epsilon)
    assert pair.transition_width == pytest.approx(1.5 * cap / budget, rel=1e-10)
    assert pair.decay_width == pytest.approx(
        math.cos(cap) / math.sin(cap) / budget, rel=1e-10)
    assert pair.outer_radius == pytest.approx(
        pair.transition_radius * math.exp(pair.decay_width), rel=1e-12)


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_radial_partition_of_unity_and_budget(epsilon):
    pair = build_radial_cutoff(epsilon, 1.0)
    report = verify_radial_bound(pair, grid_points=4000)
    assert report.unity_defect <= 1e-14
    assert report.max_ratio <= 1.0 + 1e-9
    # The construction spends exactly 96% of the budget at the worst point.
    assert report.max_ratio == pytest.approx(0.96, abs=1e-7)
    assert pair.inner_radius < report.argmax_radius < pair.outer_radius


def test_radial_profile_plateaus():
    pair = build_radial_cutoff(0.1, 2.0)
    inside = np.array([1e-8, 0.5, 1.9999, 2.0])
    outside = np.array([pair.outer_radius, pair.outer_radius * 10.0, 1e200])
    assert pair.first(inside) == pytest.approx(np.ones(4), abs=1e-15)
    assert pair.second(inside) == pytest.approx(np.zeros(4), abs=1e-15)
    assert pair.first(outside) == pytest.approx(np.zeros(3), abs=1e-15)
    assert pair.second(outside) == pytest.approx(np.ones(3), abs=1e-15)
    assert np.all(pair.gradient_sum(inside) == 0.0)
    assert np.all(pair.gradient_sum(outside) == 0.0)
    # first decreases monotonically across the whole support.
    grid = np.geomspace(pair.inner_radius, pair.outer_radius, 500)
    assert np.all(np.diff(pair.first(grid)) <= 1e-15)


def test_radial_outer_radius_grows_as_epsilon_shrinks():
    radii = [build_radial_cutoff(e, 1.0).outer_radius for e in EPSILONS]
    assert radii[0] < radii[1] < radii[2]


@pytest.mark.parametrize("epsilon", (0.1, 0.01))
def test_radial_gradient_matches_finite_differences(epsilon):
    pair = build_radial_cutoff(epsilon, 1.0)
    r = np.concatenate([
        np.geomspace(pair.inner_radius * 1.3, pair.transition_radius / 1.3, 7),
        np.geomspace(pair.transition_radius * 1.3, pair.outer_radius / 1.3, 7)])
    h = r * 1e-6
    fd = ((pair.first(r + h) - pair.first(r - h)) / (2 * h)) ** 2 \
        + ((pair.second(r + h) - pair.second(r - h)) / (2 * h)) ** 2
    analytic = pair.gradient_sum(r)
    assert fd == pytest.approx(analytic, rel=1e-5)


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_radial_negative_control_halved_decay_width(epsilon):
    # Halving the logarithmic decay width doubles the slope, so the worst
    # ratio must quadruple: 4 * 0.96 = 3.84 exactly.
    pair = build_radial_cutoff(epsilon, 1.0)
    shrunk = pair.transition_radius * math.sqrt(
        pair.outer_radius / pair.transition_radius)
    bad = replace(pair, outer_radius=shrunk)
    report = verify_radial_bound(bad, grid_points=4000)
    assert report.max_ratio == pytest.approx(3.84, rel=1e-6)
    assert report.max_ratio > 1.0 + 1e-9


def test_radial_negative_control_halved_transition_width():
    pair = build_radial_cutoff(0.1, 1.0)  # inner radius 1, so log(b) = 0
    bad = replace(pair, transition_radius=math.sqrt(pair.transition_radius))
    report = verify_radial_bound(bad, grid_points=4000)
    assert report.max_ratio == pytest.approx(3.84, rel=1e-6)


def test_radial_build_validation():
    with pytest.raises(ValueError):
        build_radial_cutoff(0.0, 1.0)
    with pytest.raises(ValueError):
        build_radial_cutoff(1.5, 1.0)
    with pytest.raises(ValueError):
        build_radial_cutoff(0.1, -1.0)
    with pytest.raises(ValueError):
        build_radial_cutoff(0.1, 1.0, d=2)
    # The far radius grows like exp(c / sqrt(epsilon)) and leaves double
    # precision near epsilon ~ 1e-5.
    with pytest.raises(ValueError):
        build_radial_cutoff(1e-5, 1.0)
    ok = build_radial_cutoff(2e-5, 1.0)
    assert verify_radial_bound(ok).max_ratio <= 1.0 + 1e-9


def test_radial_localization_error_controlled_by_hardy():
    # The certified bound grad_sum <= eps / r^2 combines with the radial
    # Hardy inequality in d=3: for any smooth radial psi,
    # int grad_sum psi^2 r^2 dr <= eps int psi^2 dr <= (eps / C_H) int psi'^2 r^2 dr.
    epsilon = 0.1
    pair = build_radial_cutoff(epsilon, 1.0)
    factor = epsilon / hardy_constant(3)
    r = np.geomspace(1e-6, 30.0 * pair.outer_radius, 60001)
    for width in (0.5, 1.0, pair.transition_radius,
                  math.sqrt(pair.transition_radius * pair.outer_radius),
                  pair.outer_radius / 3.0):
        psi = np.exp(-r ** 2 / (2.0 * width ** 2))
        dpsi = -(r / width ** 2) * psi
        lhs = np.trapezoid(pair.gradient_sum(r) * psi ** 2 * r ** 2, r)
        rhs = np.trapezoid(dpsi ** 2 * r ** 2, r)
        assert 0.0 < lhs <= factor * rhs * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# Cone pair
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_cone_partition_of_unity_and_budget(epsilon):
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, epsilon, 1.0)
    report = verify_cone_bound(THREE_EQUAL, pair, samples=3000, seed=5)
    assert report.unity_defect <= 1e-14
    assert report.max_defect <= 1.0 + 1e-9
    assert report.max_defect > 0.9  # most of the budget is actually used
    assert pair.plateau_ratio <= report.argmax_ratio <= pair.aperture * (1 + 1e-12)
    assert report.configuration_checks > 0
    assert report.configuration_max_mismatch <= 1e-6


def test_cone_stored_fields_satisfy_design_relations():
    epsilon = 0.1
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, epsilon, 1.0)
    budget = math.sqrt(0.96 * epsilon)
    # Head angle solves theta = (2/3) * budget * arc * cos(theta).
    theta = pair.head_angle
    assert theta == pytest.approx(
        (2.0 / 3.0) * budget * pair.head_arc * math.cos(theta), rel=1e-12)
    # Descent rate is the largest the budget admits below the transition.
    assert pair.descent_rate == pytest.approx(
        budget / math.sqrt(1.0 + pair.transition_ratio ** 2), rel=1e-10)
    assert pair.transition_ratio == 0.5 * pair.aperture


def test_cone_profile_plateaus():
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 0.1, 1.0)
    deep = np.log(np.array([pair.plateau_ratio * 0.999, pair.plateau_ratio * 1e-3]))
    outside = np.log(np.array([pair.aperture, pair.aperture * 10.0]))
    assert pair.first_from_log_ratio(deep) == pytest.approx(np.ones(2), abs=1e-15)
    assert pair.second_from_log_ratio(deep) == pytest.approx(np.zeros(2), abs=1e-15)
    assert pair.first_from_log_ratio(outside) == pytest.approx(np.zeros(2), abs=1e-15)
    assert pair.second_from_log_ratio(outside) == pytest.approx(np.ones(2), abs=1e-15)
    assert np.all(pair.defect_from_log_ratio(deep) == 0.0)
    # Angle decreases monotonically from pi/2 to 0 through the active range.
    grid = np.linspace(math.log(pair.plateau_ratio), math.log(pair.aperture), 800)
    angles = pair.angle_from_log_ratio(grid)
    assert np.all(np.diff(angles) <= 1e-15)
    assert angles[0] == pytest.approx(math.pi / 2, rel=1e-12)
    assert angles[-1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("epsilon", (0.1, 0.01))
def test_cone_angle_rate_matches_finite_differences(epsilon):
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, epsilon, 1.0)
    lt = np.concatenate([
        np.linspace(math.log(pair.transition_ratio) + 0.05,
                    math.log(pair.aperture) - 0.05, 7),
        np.linspace(math.log(pair.plateau_ratio) + 0.5,
                    math.log(pair.transition_ratio) - 0.5, 7)])
    h = 1e-6
    fd = (pair.angle_from_log_ratio(lt + h) - pair.angle_from_log_ratio(lt - h)) / (2 * h)
    assert fd == pytest.approx(pair.angle_rate_from_log_ratio(lt), rel=1e-5)


def test_cone_defect_recomputed_from_angle_and_rate():
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 0.01, 1.0)
    lt = np.linspace(math.log(pair.plateau_ratio) + 0.1,
                     math.log(pair.aperture) - 1e-6, 500)
    t = np.exp(lt)
    phi = pair.angle_from_log_ratio(lt)
    rate = pair.angle_rate_from_log_ratio(lt)
    grad = rate ** 2 * (1.0 + t * t) / t ** 2
    budget = pair.epsilon * (np.cos(phi) ** 2 / (1.0 + t * t)
                             + np.sin(phi) ** 2 / t ** 2)
    assert pair.defect_from_log_ratio(lt) == pytest.approx(grad / budget, rel=1e-12)


def test_cone_bound_holds_on_explicit_configurations():
    system = MassSystem(dim=3, masses=(1.0, 2.0, 3.0, 4.0))
    part = partition_of(4, [[1, 3], [2], [4]])
    pair = build_cone_cutoff(system, part, 0.1, 0.5)
    from vlab.geometry import unit_centroid_directions, unit_internal_directions
    rng = np.random.default_rng(17)
    t = np.exp(rng.uniform(math.log(1e-5), math.log(pair.aperture), 300))
    qhat = unit_internal_directions(system, part, rng, 300)
    xihat = unit_centroid_directions(system, part, rng, 300)
    x = qhat * t[:, None, None] + xihat
    out = pair.evaluate(x)
    assert out["ratio"] == pytest.approx(t, rel=1e-9)
    assert np.abs(out["first"] ** 2 + out["second"] ** 2 - 1.0).max() <= 1e-14
    # |x|^2 = (1 + t^2), |internal|^2 = t^2 for unit centroid directions.
    budget = pair.epsilon * (out["second"] ** 2 / (1.0 + t * t)
                             + out["first"] ** 2 / t ** 2)
    assert np.all(out["gradient_sum"] <= budget * (1.0 + 1e-9))


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_cone_negative_control_halved_descent_span(epsilon):
    # Raising the plateau ratio to the geometric midpoint halves the descent
    # log-span, doubling the rate and quadrupling the defect there.
    pair = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, epsilon, 1.0)
    bad = replace(pair, plateau_ratio=math.sqrt(
        pair.transition_ratio * pair.plateau_ratio))
    report = verify_cone_bound(THREE_EQUAL, bad, samples=3000, seed=5)
    assert report.max_defect > 1.5
    assert report.max_defect == pytest.approx(4.0 * 0.96 / 1.25, rel=1e-2)


def test_cone_build_validation():
    with pytest.raises(ValueError):
        build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 0.0, 1.0)
    with pytest.raises(ValueError):
        build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 0.1, 0.0)
    with pytest.raises(ValueError):
        build_cone_cutoff(THREE_EQUAL, one_cluster(3), 0.1, 1.0)
    with pytest.raises(ValueError):
        build_cone_cutoff(THREE_EQUAL, all_singletons(3), 0.1, 1.0)
    # The plateau ratio falls out of double precision near epsilon ~ 1e-4.
    with pytest.raises(ValueError):
        build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 1e-4, 1.0)


def test_verify_argument_validation():
    pair = build_radial_cutoff(0.1, 1.0)
    with pytest.raises(ValueError):
        verify_radial_bound(pair, grid_points=1)
    cone = build_cone_cutoff(THREE_EQUAL, PAIR_SPLIT, 0.1, 1.0)
    with pytest.raises(ValueError):
        verify_cone_bound(THREE_EQUAL, cone, samples=1, seed=0)
