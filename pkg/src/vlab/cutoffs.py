"""Smooth partition-of-unity pairs with certified gradient bounds.

Two constructions are provided.  The *radial* pair splits space into an inner
ball and its complement: ``first(r)^2 + second(r)^2 = 1`` with ``first = 1``
inside radius ``b`` and ``0`` beyond a far radius, and the localization error
obeys ``first'(r)^2 + second'(r)^2 <= epsilon / r^2`` everywhere.  The *cone*
pair does the same for a collision cone of a cluster partition: ``first = 1``
deep inside the cone and ``0`` outside a slightly wider cone, with the error
controlled by ``epsilon * (second^2 / |x|^2 + first^2 / |internal|^2)``.

Both pairs write the profiles through a single angle: with
``first = cos(phi)`` and ``second = sin(phi)`` the gradient sum collapses to
``phi'(t)^2 * |grad t|^2``, so certifying the bound reduces to bounding the
angle rate.  Each regime uses a closed-form angle profile whose rate bound is
known exactly; the construction picks the regime boundaries so the certified
supremum stays strictly below the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    MassSystem,
    _batch_norm,
    _partition_parts_batch,
    unit_centroid_directions,
    unit_internal_directions,
)
from .partitions import Partition

__all__ = [
    "RadialCutoffPair",
    "RadialBoundReport",
    "build_radial_cutoff",
    "verify_radial_bound",
    "ConeCutoffPair",
    "ConeBoundReport",
    "build_cone_cutoff",
    "verify_cone_bound",
]

# Fraction of the gradient budget the constructions actually spend; the
# remaining headroom absorbs floating-point noise in verification.
_BUDGET_USE = 0.96

# Plateau angle at the end of the smooth transition.  The closer to pi/2, the
# shorter the outer logarithmic regime but the longer the transition; a third
# of the quarter-turn balances the two and keeps the far radius representable
# down to epsilon ~ 1e-4.
_TRANSITION_ANGLE = math.pi / 3.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_rate(t: np.ndarray) -> np.ndarray:
    return 6.0 * t * (1.0 - t)


def _bisect_decreasing(f, lo: float, hi: float, iterations: int = 200) -> float:
    """Root of a decreasing function by plain bisection on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo < 0.0 or fhi > 0.0:
        raise ValueError("bisection bracket does not straddle the root")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Radial pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialCutoffPair:
    """Radial partition of unity with a certified ``epsilon / r^2`` bound.

    ``first`` equals 1 on ``[0, inner_radius]``, turns by the transition
    angle along a smoothstep in ``log r`` up to ``transition_radius``, then
    decays linearly in ``log r`` and vanishes at ``outer_radius``.  All
    profile evaluations derive from the stored radii, so a pair with
    overridden fields reports its (possibly violated) bound honestly.
    """

    epsilon: float
    dimension: int
    inner_radius: float
    transition_radius: float
    outer_radius: float
    transition_angle: float = _TRANSITION_ANGLE

    @property
    def transition_width(self) -> float:
        return math.log(self.transition_radius / self.inner_radius)

    @property
    def decay_width(self) -> float:
        return math.log(self.outer_radius / self.transition_radius)

    def angle(self, r: np.ndarray) -> np.ndarray:
        """Mixing angle of the pair: 0 inside, pi/2 beyond ``outer_radius``."""
        r = np.asarray(r, dtype=float)
        cap = self.transition_angle
        with np.errstate(divide="ignore"):
            lr = np.log(np.maximum(r, 1e-300))
        tau = (lr - math.log(self.inner_radius)) / self.transition_width
        head = cap * _smoothstep(np.clip(tau, 0.0, 1.0))
        # Outside the transition the first profile is linear in log r:
        # first = cos(cap) * log(outer/r) / log(outer/transition).
        u = math.cos(cap) * (math.log(self.outer_radius) - lr) / self.decay_width
        tail = np.arccos(np.clip(u, -1.0, 1.0))
        return np.where(r < self.transition_radius, head,
                        np.where(r < self.outer_radius, tail, 0.5 * math.pi))

    def first(self, r: np.ndarray) -> np.ndarray:
        return np.cos(self.angle(r))

    def second(self, r: np.ndarray) -> np.ndarray:
        return np.sin(self.angle(r))

    def _log_rate_squared(self, r: np.ndarray) -> np.ndarray:
        """Squared angle rate in log radius, ``(r phi'(r))^2`` (one-sided at joints)."""
        r = np.asarray(r, dtype=float)
        cap = self.transition_angle
        with np.errstate(divide="ignore"):
            lr = np.log(np.maximum(r, 1e-300))
        tau = (lr - math.log(self.inner_radius)) / self.transition_width
        head_rate = cap * _smoothstep_rate(np.clip(tau, 0.0, 1.0)) / self.transition_width
        # In the decay regime first = u(log r) is linear, so the squared rate
        # is u'^2 / (1 - u^2) evaluated in log radius.
        u = math.cos(cap) * (math.log(self.outer_radius) - lr) / self.decay_width
        u = np.clip(u, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            tail_rate_sq = (math.cos(cap) / self.decay_width) ** 2 / np.maximum(1.0 - u * u, 1e-300)
        inside = (r > self.inner_radius) & (r < self.transition_radius)
        decay = (r >= self.transition_radius) & (r < self.outer_radius)
        out = np.zeros_like(r)
        out[inside] = head_rate[inside] ** 2
        out[decay] = tail_rate_sq[decay]
        return out

    def gradient_sum(self, r: np.ndarray) -> np.ndarray:
        """``first'(r)^2 + second'(r)^2`` (one-sided at regime joints)."""
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return self._log_rate_squared(r) / np.maximum(r, 1e-300) ** 2

    def bound_ratio(self, r: np.ndarray) -> np.ndarray:
        """Gradient sum divided by the certified budget ``epsilon / r^2``.

        The radius factors cancel analytically, so the ratio stays finite
        even at radii whose square would overflow.
        """
        return self._log_rate_squared(r) / self.epsilon


def build_radial_cutoff(epsilon: float, b: float, d: int = 3) -> RadialCutoffPair:
    """Construct a radial pair whose gradient bound holds with strict margin.

    The transition width (in log radius) is found by bisection so the
    smoothstep regime spends at most ``_BUDGET_USE`` of the budget; the decay
    width is then fixed by spending the same fraction at the start of the
    logarithmic regime, where that regime's error is largest.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if b <= 0.0 or not math.isfinite(b):
        raise ValueError(f"inner radius must be positive, got {b}")
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    cap = _TRANSITION_ANGLE
    budget = epsilon * _BUDGET_USE
    # Peak smoothstep rate is 3/2, so the transition ratio is
    # (1.5 cap / width)^2 / epsilon; solve for the width.
    peak = 1.5 * cap
    width = _bisect_decreasing(lambda w: (peak / w) ** 2 / budget - 1.0,
                               1e-8, 1e8)
    # Logarithmic regime: ratio at its start is cot(cap)^2 / (decay_width^2
    # epsilon); solve for the decay width the same way.
    cot = math.cos(cap) / math.sin(cap)
    decay_width = _bisect_decreasing(lambda w: (cot / w) ** 2 / budget - 1.0,
                                     1e-8, 1e8)
    log_outer = math.log(b) + width + decay_width
    if log_outer > math.log(1e300):
        raise ValueError(
            f"epsilon={epsilon} pushes the outer radius beyond double precision")
    return RadialCutoffPair(epsilon=float(epsilon), dimension=int(d),
                            inner_radius=float(b),
                            transition_radius=float(b * math.exp(width)),
                            outer_radius=float(b * math.exp(width + decay_width)),
                            transition_angle=cap)


@dataclass(frozen=True)
class RadialBoundReport:
    max_ratio: float
    argmax_radius: float
    grid_points: int
    unity_defect: float

    def to_record(self) -> dict:
        return {"max_ratio": self.max_ratio, "argmax_radius": self.argmax_radius,
                "grid_points": self.grid_points, "unity_defect": self.unity_defect}


def verify_radial_bound(pair: RadialCutoffPair, grid_points: int = 1000) -> RadialBoundReport:
    """Evaluate the bound ratio on a geometric grid spanning all regimes.

    The grid covers ``[inner*(1-1e-6), outer*(1+1e-6)]`` and always includes
    the three regime joints; the report carries the worst ratio of gradient
    sum to budget and the worst partition-of-unity defect ``|f^2 + s^2 - 1|``.
    """
    if grid_points < 2:
        raise ValueError("grid needs at least two points")
    grid = np.geomspace(pair.inner_radius * (1.0 - 1e-6),
                        pair.outer_radius * (1.0 + 1e-6), grid_points)
    grid = np.unique(np.concatenate([
        grid, [pair.inner_radius, pair.transition_radius, pair.outer_radius]]))
    ratio = pair.bound_ratio(grid)
    worst = int(np.argmax(ratio))
    unity = np.abs(pair.first(grid) ** 2 + pair.second(grid) ** 2 - 1.0)
    return RadialBoundReport(max_ratio=float(ratio[worst]),
                             argmax_radius=float(grid[worst]),
                             grid_points=int(grid.size),
                             unity_defect=float(unity.max()))


# ---------------------------------------------------------------------------
# Cone pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeCutoffPair:
    """Cone partition of unity with a certified localization bound.

    Profiles depend on a configuration only through the internal-to-centroid
    ratio ``t`` of the partition.  ``first = 1`` for ``t <= plateau_ratio``
    (deep inside the cone), ``first = 0`` for ``t >= aperture``; in between
    the mixing angle descends from ``pi/2`` along an exact power-law-in-``t``
    solution of the bounded-rate equation and finishes with a smoothstep turn
    (the *head*) between ``transition_ratio`` and ``aperture``.  The bound

        ``first'^2 + second'^2 <= epsilon * (second^2/|x|^2 + first^2/|q|^2)``

    holds pointwise for the gradients in the mass metric, where ``q`` is the
    internal part.
    """

    system: MassSystem
    partition: Partition
    epsilon: float
    aperture: float
    transition_ratio: float
    plateau_ratio: float
    head_angle: float

    @property
    def head_arc(self) -> float:
        """Arctangent span of the head regime."""
        return math.atan(self.aperture) - math.atan(self.transition_ratio)

    @property
    def descent_rate(self) -> float:
        """Log-ratio rate of the descent regime, fixed by its endpoints."""
        w = math.log(self.transition_ratio / self.plateau_ratio)
        return math.log(1.0 / math.tan(0.5 * self.head_angle)) / w

    def angle_from_log_ratio(self, log_t: np.ndarray) -> np.ndarray:
        """Mixing angle as a function of ``log t``: pi/2 deep inside, 0 outside."""
        lt = np.asarray(log_t, dtype=float)
        lk, lks, lkp = (math.log(self.aperture), math.log(self.transition_ratio),
                        math.log(self.plateau_ratio))
        t = np.exp(np.clip(lt, lkp - 1.0, lk + 1.0))
        tau = (math.atan(self.aperture) - np.arctan(t)) / self.head_arc
        head = self.head_angle * _smoothstep(np.clip(tau, 0.0, 1.0))
        half = np.exp(np.clip(math.log(math.tan(0.5 * self.head_angle))
                              + self.descent_rate * (lks - lt), -700.0, 700.0))
        descent = 2.0 * np.arctan(half)
        return np.where(lt >= lks, head, np.where(lt > lkp, descent, 0.5 * math.pi))

    def angle_rate_from_log_ratio(self, log_t: np.ndarray) -> np.ndarray:
        """``t * d(angle)/dt`` as a function of ``log t`` (one-sided at joints)."""
        lt = np.asarray(log_t, dtype=float)
        lk, lks, lkp = (math.log(self.aperture), math.log(self.transition_ratio),
                        math.log(self.plateau_ratio))
        t = np.exp(np.clip(lt, lkp - 1.0, lk + 1.0))
        tau = (math.atan(self.aperture) - np.arctan(t)) / self.head_arc
        head = -self.head_angle * _smoothstep_rate(np.clip(tau, 0.0, 1.0)) \
            * t / ((1.0 + t * t) * self.head_arc)
        angle = self.angle_from_log_ratio(lt)
        descent = -self.descent_rate * np.sin(angle)
        out = np.where(lt >= lks, head, np.where(lt > lkp, descent, 0.0))
        return np.where(lt >= lk, 0.0, out)

    def first_from_log_ratio(self, log_t: np.ndarray) -> np.ndarray:
        return np.sin(self.angle_from_log_ratio(log_t))

    def second_from_log_ratio(self, log_t: np.ndarray) -> np.ndarray:
        return np.cos(self.angle_from_log_ratio(log_t))

    def defect_from_log_ratio(self, log_t: np.ndarray) -> np.ndarray:
        """Gradient sum over budget, as a function of the log ratio alone.

        With the angle profile ``phi(t)``, the mass-metric gradient sum is
        ``phi'(t)^2 (1+t^2) / |centroid|^2`` and the budget is
        ``epsilon (cos^2 phi / |x|^2 + sin^2 phi / |q|^2)``; both scale the
        same way with the configuration, so the quotient depends on ``t``
        only.
        """
        lt = np.asarray(log_t, dtype=float)
        t = np.exp(lt)
        phi = self.angle_from_log_ratio(lt)
        rate = self.angle_rate_from_log_ratio(lt)  # t * phi'
        one_pt2 = 1.0 + t * t
        grad = rate ** 2 * one_pt2 / t ** 2
        with np.errstate(divide="ignore"):
            budget = self.epsilon * (np.cos(phi) ** 2 / one_pt2
                                     + np.sin(phi) ** 2 / t ** 2)
        return np.where(rate == 0.0, 0.0, grad / budget)

    def evaluate(self, x: np.ndarray) -> dict:
        """Profiles and certified quantities on explicit configurations."""
        internal, centroid = _partition_parts_batch(self.system, self.partition,
                                                    np.asarray(x, dtype=float))
        qn = _batch_norm(self.system, internal)
        cn = _batch_norm(self.system, centroid)
        with np.errstate(divide="ignore"):
            log_t = np.log(qn) - np.log(cn)
        phi = self.angle_from_log_ratio(log_t)
        rate = self.angle_rate_from_log_ratio(log_t)
        t = qn / cn
        grad = np.where(rate == 0.0, 0.0, rate ** 2 * (1.0 + t * t) / (t * cn) ** 2)
        return {"ratio": t, "first": np.sin(phi), "second": np.cos(phi),
                "gradient_sum": grad}


def build_cone_cutoff(system: MassSystem, partition: Partition, epsilon: float,
                      kappa: float) -> ConeCutoffPair:
    """Construct a cone pair for a partition at outer aperture ``kappa``.

    The transition ratio is half the aperture.  The head angle solves the
    fixed-point relation ``theta = (2/3) sqrt(epsilon * use) * arc * cos(theta)``
    so the smoothstep head stays within the budget fraction ``use``; the
    descent rate is ``sqrt(epsilon * use) / sqrt(1 + transition^2)``, the
    largest rate the budget admits below the transition, which fixes the
    plateau ratio in closed form.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if kappa <= 0.0:
        raise ValueError(f"aperture must be positive, got {kappa}")
    if not 2 <= partition.order <= system.size - 1:
        raise ValueError("cone pair needs a partition with 1 < order < N")
    transition = 0.5 * kappa
    arc = math.atan(kappa) - math.atan(transition)
    budget = math.sqrt(epsilon * _BUDGET_USE)
    theta = (2.0 / 3.0) * budget * arc
    for _ in range(50):
        theta = (2.0 / 3.0) * budget * arc * math.cos(theta)
    rate = budget / math.sqrt(1.0 + transition ** 2)
    log_plateau = math.log(transition) + math.log(math.tan(0.5 * theta)) / rate
    if log_plateau < math.log(1e-300):
        raise ValueError(
            f"epsilon={epsilon} pushes the plateau ratio beyond double precision")
    return ConeCutoffPair(system=system, partition=partition,
                          epsilon=float(epsilon), aperture=float(kappa),
                          transition_ratio=float(transition),
                          plateau_ratio=float(math.exp(log_plateau)),
                          head_angle=float(theta))


@dataclass(frozen=True)
class ConeBoundReport:
    max_defect: float
    argmax_ratio: float
    samples: int
    unity_defect: float
    configuration_checks: int
    configuration_max_mismatch: float

    def to_record(self) -> dict:
        return {"max_defect": self.max_defect, "argmax_ratio": self.argmax_ratio,
                "samples": self.samples, "unity_defect": self.unity_defect,
                "configuration_checks": self.configuration_checks,
                "configuration_max_mismatch": self.configuration_max_mismatch}


def verify_cone_bound(system: MassSystem, pair: ConeCutoffPair, samples: int,
                      seed: int) -> ConeBoundReport:
    """Sample internal-to-centroid ratios and certify the localization bound.

    Ratios are drawn log-uniformly across the full active range
    ``(plateau_ratio, aperture)``, plus an extra batch concentrated around
    the head and upper descent where the defect peaks.  The defect is
    evaluated through the angle profile.  For ratios large enough that both
    parts survive floating-point addition, explicit configurations are
    assembled from unit internal and centroid directions and the projected
    ratio is cross-checked against the prescribed one.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    lo = math.log(pair.plateau_ratio)
    hi = math.log(pair.aperture)
    n_wide = samples - samples // 3
    wide = rng.uniform(lo, hi, n_wide)
    focus = rng.uniform(math.log(pair.transition_ratio) - 3.0, hi, samples - n_wide)
    log_t = np.concatenate([wide, focus])
    defect = pair.defect_from_log_ratio(log_t)
    worst = int(np.argmax(defect))
    angles = pair.angle_from_log_ratio(log_t)
    unity = float(np.abs(np.sin(angles) ** 2 + np.cos(angles) ** 2 - 1.0).max())

    usable = log_t > math.log(1e-6)
    n_cfg = min(256, int(usable.sum()))
    mismatch = 0.0
    if n_cfg:
        sel = np.flatnonzero(usable)[:n_cfg]
        t_sel = np.exp(log_t[sel])
        qhat = unit_internal_directions(system, pair.partition, rng, n_cfg)
        xihat = unit_centroid_directions(system, pair.partition, rng, n_cfg)
        x = qhat * t_sel[:, None, None] + xihat
        recovered = pair.evaluate(x)["ratio"]
        mismatch = float(np.max(np.abs(recovered - t_sel) / t_sel))
    return ConeBoundReport(max_defect=float(defect[worst]),
                           argmax_ratio=float(math.exp(log_t[worst])),
                           samples=int(log_t.size), unity_defect=unity,
                           configuration_checks=int(n_cfg),
                           configuration_max_mismatch=mismatch)
