"""Mass-weighted configuration-space geometry for N-particle systems.

A configuration is an ``(N, dim)`` array whose rows are particle positions.
All inner products are mass-weighted, ``<x, y> = sum_i m_i <x_i, y_i>``, and
the *relative* space consists of configurations whose mass-weighted centre of
mass vanishes.  A partition of the particles splits every relative
configuration orthogonally into an *internal* part (positions relative to the
centre of mass of the own cluster) and a *centroid* part (cluster centres of
mass).  Collision cones, their inductively constructed aperture ladders, and
seeded sampling checks of the resulting separation bounds live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .partitions import (
    Partition,
    all_singletons,
    canonical_cluster,
    join,
    merged_pair,
    partition_of,
)

__all__ = [
    "MassSystem",
    "Configuration",
    "as_configuration",
    "center_of_mass",
    "to_relative",
    "is_relative",
    "mass_inner",
    "mass_norm",
    "cluster_center_of_mass",
    "project_cluster_internal",
    "project_cluster_centroid",
    "project_partition",
    "gram_identity_internal",
    "gram_identity_internal_batch",
    "gram_identity_cm",
    "gram_identity_cm_batch",
    "merge_difference",
    "merge_difference_batch",
    "in_cone",
    "cone_ratio",
    "LadderRung",
    "ApertureLadder",
    "LadderError",
    "build_aperture_ladder",
    "isotropic_relative",
    "unit_internal_directions",
    "unit_centroid_directions",
    "sample_cone_configurations",
    "ShellBoundReport",
    "SeparationReport",
    "check_internal_lower_bound",
    "check_cone_separation",
]

Configuration = np.ndarray

_RELATIVE_TOL = 1e-12


@dataclass(frozen=True)
class MassSystem:
    """Particle count, common per-particle dimension and positive masses."""

    dim: int
    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if self.dim < 1:
            raise ValueError(f"per-particle dimension must be >= 1, got {self.dim}")
        if len(self.masses) < 1:
            raise ValueError("at least one particle is required")
        if any(not math.isfinite(m) or m <= 0.0 for m in self.masses):
            raise ValueError(f"masses must be positive and finite, got {self.masses}")

    @property
    def size(self) -> int:
        """Number of particles."""
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def min_mass(self) -> float:
        return float(min(self.masses))

    @property
    def mass_array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    def cluster_mass(self, cluster: Sequence[int]) -> float:
        members = canonical_cluster(cluster)
        self._check_labels(members)
        return float(sum(self.masses[i - 1] for i in members))

    def _check_labels(self, members: Sequence[int]) -> None:
        if members and (members[0] < 1 or members[-1] > self.size):
            raise ValueError(
                f"cluster {tuple(members)} not within particle labels 1..{self.size}")


def as_configuration(system: MassSystem, rows: Sequence[Sequence[float]] | np.ndarray) -> Configuration:
    """Validate and convert ``rows`` to an ``(N, dim)`` float configuration."""
    x = np.asarray(rows, dtype=float)
    if x.shape != (system.size, system.dim):
        raise ValueError(
            f"configuration shape {x.shape} does not match ({system.size}, {system.dim})")
    return x


def _as_batch(system: MassSystem, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.shape == (system.size, system.dim):
        return x[None, :, :], True
    if x.ndim == 3 and x.shape[1:] == (system.size, system.dim):
        return x, False
    raise ValueError(
        f"expected shape ({system.size}, {system.dim}) or batch thereof, got {x.shape}")


def _batch_inner(system: MassSystem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("i,...ik,...ik->...", system.mass_array, x, y)


def _batch_norm(system: MassSystem, x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(_batch_inner(system, x, x), 0.0))


def mass_inner(system: MassSystem, x: Configuration, y: Configuration) -> float:
    """Mass-weighted inner product of two configurations."""
    xb, _ = _as_batch(system, x)
    yb, _ = _as_batch(system, y)
    if xb.shape[0] != 1 or yb.shape[0] != 1:
        raise ValueError("mass_inner expects single configurations")
    return float(_batch_inner(system, xb, yb)[0])


def mass_norm(system: MassSystem, x: Configuration) -> float:
    """Mass-weighted norm of a configuration."""
    return math.sqrt(max(mass_inner(system, x, x), 0.0))


def center_of_mass(system: MassSystem, x: Configuration) -> np.ndarray:
    """Mass-weighted centre of mass of the whole system, a ``dim``-vector."""
    xb, _ = _as_batch(system, x)
    m = system.mass_array
    return np.asarray(np.tensordot(xb[0], m, axes=([0], [0])) / system.total_mass)


def to_relative(system: MassSystem, x: Configuration) -> Configuration:
    """Shift a configuration so that its centre of mass vanishes."""
    xb, _ = _as_batch(system, x)
    return np.asarray(xb[0] - center_of_mass(system, x)[None, :])


def is_relative(system: MassSystem, x: Configuration, tol: float = _RELATIVE_TOL) -> bool:
    """True when the mass-weighted centre of mass vanishes up to ``tol``."""
    cm = center_of_mass(system, x)
    scale = mass_norm(system, x)
    return bool(np.linalg.norm(cm) * math.sqrt(system.total_mass) <= tol * max(scale, 1.0))


def _require_relative(system: MassSystem, x: Configuration, what: str) -> None:
    if not is_relative(system, x):
        raise ValueError(f"{what} must have vanishing mass-weighted centre of mass")


def _cluster_indices(system: MassSystem, cluster: Sequence[int]) -> np.ndarray:
    members = canonical_cluster(cluster)
    system._check_labels(members)
    return np.asarray(members, dtype=int) - 1


def cluster_center_of_mass(system: MassSystem, cluster: Sequence[int], x: Configuration) -> np.ndarray:
    """Centre of mass of one cluster, a ``dim``-vector."""
    xb, _ = _as_batch(system, x)
    idx = _cluster_indices(system, cluster)
    m = system.mass_array[idx]
    return np.asarray(np.tensordot(xb[0, idx, :], m, axes=([0], [0])) / m.sum())


def _cluster_centroid_batch(system: MassSystem, idx: np.ndarray, xb: np.ndarray) -> np.ndarray:
    m = system.mass_array[idx]
    return np.tensordot(xb[:, idx, :], m, axes=([1], [0])) / m.sum()


def project_cluster_internal(system: MassSystem, cluster: Sequence[int], x: Configuration) -> Configuration:
    """Positions relative to the own-cluster centre of mass; zero off-cluster."""
    xb, single = _as_batch(system, x)
    idx = _cluster_indices(system, cluster)
    out = np.zeros_like(xb)
    out[:, idx, :] = xb[:, idx, :] - _cluster_centroid_batch(system, idx, xb)[:, None, :]
    return out[0] if single else out

def project_cluster_centroid(system: MassSystem, cluster: Sequence[int], x: Configuration) -> Configuration:
    """Own-cluster centre of mass repeated on the cluster; zero off-cluster."""
    xb, single = _as_batch(system, x)
    idx = _cluster_indices(system, cluster)
    out = np.zeros_like(xb)
    out[:, idx, :] = _cluster_centroid_batch(system, idx, xb)[:, None, :]
    return out[0] if single else out


def _partition_parts_batch(system: MassSystem, partition: Partition, xb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = np.empty_like(xb)
    for cluster in partition.clusters:
        idx = np.asarray(cluster, dtype=int) - 1
        centroid[:, idx, :] = _cluster_centroid_batch(system, idx, xb)[:, None, :]
    return xb - centroid, centroid


def project_partition(system: MassSystem, partition: Partition, x: Configuration) -> tuple[Configuration, Configuration]:
    """Split a relative configuration into internal and centroid parts.

    Returns ``(internal, centroid)``: the internal part collects positions
    relative to the own-cluster centres of mass, the centroid part repeats
    each cluster's centre of mass across the cluster.  The two parts are
    orthogonal in the mass-weighted inner product and sum back to ``x``.
    """
    if partition.size != system.size:
        raise ValueError("partition size does not match the particle count")
    xb, single = _as_batch(system, x)
    if single:
        _require_relative(system, x, "configuration")
    internal, centroid = _partition_parts_batch(system, partition, xb)
    if single:
        return internal[0], centroid[0]
    return internal, centroid


def gram_identity_internal_batch(system: MassSystem, cluster: Sequence[int],
                                 xb: np.ndarray, yb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched version of :func:`gram_identity_internal`; see there."""
    idx = _cluster_indices(system, cluster)
    m = system.mass_array[idx]
    px = np.zeros_like(xb)
    py = np.zeros_like(yb)
    px[:, idx, :] = xb[:, idx, :] - _cluster_centroid_batch(system, idx, xb)[:, None, :]
    py[:, idx, :] = yb[:, idx, :] - _cluster_centroid_batch(system, idx, yb)[:, None, :]
    lhs = _batch_inner(system, px, py)
    dx = xb[:, idx, None, :] - xb[:, None, idx, :]
    dy = yb[:, idx, None, :] - yb[:, None, idx, :]
    rhs = np.einsum("i,j,bijk,bijk->b", m, m, dx, dy) / (2.0 * m.sum())
    return lhs, rhs


def gram_identity_internal(system: MassSystem, cluster: Sequence[int],
                           x: Configuration, y: Configuration) -> tuple[float, float]:
    """Two closed forms of the internal-part inner product for one cluster.

    The left value is the mass inner product of the internal projections.
    The right value is the equivalent pair-difference double sum
    ``(1/2M_C) * sum_{i,j in C} m_i m_j <x_i - x_j, y_i - y_j>``; the two are
    used as mutual cross-checks.
    """
    xb, _ = _as_batch(system, x)
    yb, _ = _as_batch(system, y)
    lhs, rhs = gram_identity_internal_batch(system, cluster, xb, yb)
    return float(lhs[0]), float(rhs[0])


def _cluster_cm_stack(system: MassSystem, partition: Partition, xb: np.ndarray) -> np.ndarray:
    return np.stack([_cluster_centroid_batch(system, np.asarray(c, dtype=int) - 1, xb)
                     for c in partition.clusters], axis=1)  # (B, order, dim)


def gram_identity_cm_batch(system: MassSystem, partition: Partition,
                           xb: np.ndarray, yb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched version of :func:`gram_identity_cm`; see there."""
    _, cx = _partition_parts_batch(system, partition, xb)
    _, cy = _partition_parts_batch(system, partition, yb)
    lhs = _batch_inner(system, cx, cy)
    cm_x = _cluster_cm_stack(system, partition, xb)
    cm_y = _cluster_cm_stack(system, partition, yb)
    w = np.asarray([system.cluster_mass(c) for c in partition.clusters])
    dx = cm_x[:, :, None, :] - cm_x[:, None, :, :]
    dy = cm_y[:, :, None, :] - cm_y[:, None, :, :]
    rhs = np.einsum("i,j,bijk,bijk->b", w, w, dx, dy) / (2.0 * system.total_mass)
    return lhs, rhs


def gram_identity_cm(system: MassSystem, partition: Partition,
                     x: Configuration, y: Configuration) -> tuple[float, float]:
    """Two closed forms of the centroid-part inner product for a partition.

    The left value projects both relative configurations onto the centroid
    space.  The right value is the double sum over ordered cluster pairs,
    ``(1/2M) * sum_{C', C''} M_C' M_C'' <x_c[C'] - x_c[C''], y_c[C'] - y_c[C'']>``.
    """
    _require_relative(system, x, "x")
    _require_relative(system, y, "y")
    xb, _ = _as_batch(system, x)
    yb, _ = _as_batch(system, y)
    lhs, rhs = gram_identity_cm_batch(system, partition, xb, yb)
    return float(lhs[0]), float(rhs[0])


def merge_difference_batch(system: MassSystem, fine: Partition, coarse: Partition,
                           xb: np.ndarray, yb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched version of :func:`merge_difference`; see there."""
    c1, c2 = merged_pair(fine, coarse)
    _, cx_f = _partition_parts_batch(system, fine, xb)
    _, cy_f = _partition_parts_batch(system, fine, yb)
    _, cx_c = _partition_parts_batch(system, coarse, xb)
    _, cy_c = _partition_parts_batch(system, coarse, yb)
    lhs = _batch_inner(system, cx_f, cy_f) - _batch_inner(system, cx_c, cy_c)
    i1 = np.asarray(c1, dtype=int) - 1
    i2 = np.asarray(c2, dtype=int) - 1
    m1, m2 = system.cluster_mass(c1), system.cluster_mass(c2)
    dx = _cluster_centroid_batch(system, i1, xb) - _cluster_centroid_batch(system, i2, xb)
    dy = _cluster_centroid_batch(system, i1, yb) - _cluster_centroid_batch(system, i2, yb)
    rhs = m1 * m2 / (m1 + m2) * np.einsum("bk,bk->b", dx, dy)
    return lhs, rhs


def merge_difference(system: MassSystem, fine: Partition, coarse: Partition,
                     x: Configuration, y: Configuration) -> tuple[float, float]:
    """Centroid-energy drop under one cluster merge, in two closed forms.

    ``coarse`` must arise from ``fine`` by uniting exactly two clusters.  The
    left value is the difference of centroid-part inner products; the right
    value is the reduced-mass expression
    ``M_C1 M_C2 / (M_C1 + M_C2) * <x_c[C1] - x_c[C2], y_c[C1] - y_c[C2]>``.
    """
    _require_relative(system, x, "x")
    _require_relative(system, y, "y")
    xb, _ = _as_batch(system, x)
    yb, _ = _as_batch(system, y)
    lhs, rhs = merge_difference_batch(system, fine, coarse, xb, yb)
    return float(lhs[0]), float(rhs[0])


def cone_ratio(system: MassSystem, partition: Partition, x: Configuration) -> float:
    """Internal-to-centroid size ratio ``|internal| / |centroid|``.

    Returns ``inf`` when the centroid part vanishes but the internal part does
    not, and ``0`` when both vanish.  For the all-singleton partition the
    internal part is identically zero, so the ratio is ``0``.
    """
    internal, centroid = project_partition(system, partition, x)
    qn = mass_norm(system, internal)
    cn = mass_norm(system, centroid)
    if cn == 0.0:
        return 0.0 if qn == 0.0 else math.inf
    return qn / cn


def in_cone(system: MassSystem, partition: Partition, aperture: float, x: Configuration) -> bool:
    """Membership in the collision cone of a partition.

    For a partition with at least two clusters the cone collects relative
    configurations whose internal part is small against the centroid part:
    ``|internal| <= aperture * |centroid|``.  For the one-cluster partition
    the "cone" is the centred ball ``|x| <= aperture``; for the all-singleton
    partition the internal part vanishes identically and every relative
    configuration belongs to the cone.
    """
    if aperture <= 0.0:
        raise ValueError(f"aperture must be positive, got {aperture}")
    _require_relative(system, x, "configuration")
    if partition.order == 1:
        return mass_norm(system, x) <= aperture
    internal, centroid = project_partition(system, partition, x)
    return mass_norm(system, internal) <= aperture * mass_norm(system, centroid)


# ---------------------------------------------------------------------------
# Aperture ladder
# ---------------------------------------------------------------------------


class LadderError(RuntimeError):
    """Raised when no strictly feasible aperture exists at some rung."""


@dataclass(frozen=True)
class LadderRung:
    """Apertures and separation margin attached to one cluster order.

    ``aperture`` bounds the internal/centroid ratio of the cone kept at this
    order, ``strict_aperture`` is the tighter ratio removed from all
    higher-order shells, and ``separation`` is the guaranteed lower bound on
    cross-cluster internal sizes inside this order's shell (zero at order 1,
    where no previous rung constrains it).
    """

    order: int
    aperture: float
    strict_aperture: float
    separation: float

    def to_record(self) -> dict:
        return {"l": self.order, "kappa": self.aperture,
                "kappa_prime": self.strict_aperture, "d": self.separation}


@dataclass(frozen=True)
class ApertureLadder:
    """Inductively constructed cone apertures for cluster orders ``1..max_order``."""

    system: MassSystem
    rungs: tuple[LadderRung, ...]

    def rung(self, order: int) -> LadderRung:
        for r in self.rungs:
            if r.order == order:
                return r
        raise KeyError(f"ladder has no rung for order {order}")

    @property
    def max_order(self) -> int:
        return max(r.order for r in self.rungs)

    def aperture(self, order: int) -> float:
        return self.rung(order).aperture

    def strict_aperture(self, order: int) -> float:
        return self.rung(order).strict_aperture

    def separation(self, order: int) -> float:
        return self.rung(order).separation

    def to_records(self) -> list[dict]:
        return [r.to_record() for r in self.rungs]

    def replace_rung(self, order: int, **changes) -> "ApertureLadder":
        """Copy of the ladder with fields of one rung overridden (for controls)."""
        new = []
        for r in self.rungs:
            if r.order == order:
                params = {"order": r.order, "aperture": r.aperture,
                          "strict_aperture": r.strict_aperture,
                          "separation": r.separation}
                params.update(changes)
                r = LadderRung(**params)
            new.append(r)
        return ApertureLadder(system=self.system, rungs=tuple(new))


def _separation_squared(system: MassSystem, strict_aperture: float) -> float:
    m, total = system.min_mass, system.total_mass
    k2 = strict_aperture ** 2
    return (m ** 3 / (2.0 * total ** 3)) * k2 / (1.0 + k2)


def build_aperture_ladder(system: MassSystem, max_order: int,
                          aperture1: float = 1.0,
                          strict_aperture1: float = 0.5) -> ApertureLadder:
    """Choose cone apertures rung by rung so the separation bounds hold strictly.

    Rung 1 is given.  For each next order ``l+1`` the separation margin is
    ``d^2 = m_min^3 / (2 M^3) * k'^2 / (1 + k'^2)`` with ``k'`` the previous
    strict aperture, and the new aperture must satisfy the two-sided
    constraint

        ``(m_min^3/M^3) (k'^2 - a^2)/(1 + k'^2) - a^2 > d^2 > a^2 (1 + a^2)``.

    The left boundary is located by bisection, the right one in closed form;
    the new aperture is half the smaller of the two (comfortably interior),
    and the new strict aperture is half the new aperture.  Both inequalities
    are re-checked with a strict margin before the rung is accepted.
    """
    if not 2 <= max_order <= system.size - 1:
        raise ValueError(
            f"max_order must lie in [2, {system.size - 1}], got {max_order}")
    if not 0.0 < strict_aperture1 < aperture1:
        raise ValueError("need 0 < strict_aperture1 < aperture1")
    rungs = [LadderRung(order=1, aperture=float(aperture1),
                        strict_aperture=float(strict_aperture1), separation=0.0)]
    ratio3 = system.min_mass ** 3 / system.total_mass ** 3
    for order in range(2, max_order + 1):
        prev = rungs[-1]
        kp2 = prev.strict_aperture ** 2
        d2 = _separation_squared(system, prev.strict_aperture)
        if not (math.isfinite(d2) and d2 > 0.0):
            raise LadderError(
                f"separation margin degenerated at order {order} (d^2={d2})")

        def left_slack(a2: float) -> float:
            return ratio3 * (kp2 - a2) / (1.0 + kp2) - a2 - d2

        lo, hi = 0.0, prev.strict_aperture ** 2
        if left_slack(hi) >= 0.0:  # pragma: no cover - cannot happen for d2 > 0
            raise LadderError(f"left constraint unbounded at order {order}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if left_slack(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        a2_left = lo
        a2_right = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * d2))
        a_max = math.sqrt(min(a2_left, a2_right))
        aperture = 0.5 * a_max
        a2 = aperture ** 2
        margin_left = left_slack(a2)
        margin_right = d2 - a2 * (1.0 + a2)
        if not (margin_left > 0.0 and margin_right > 0.0):
            raise LadderError(
                f"no strictly feasible aperture at order {order} "
                f"(left={margin_left}, right={margin_right})")
        rungs.append(LadderRung(order=order, aperture=aperture,
                                strict_aperture=0.5 * aperture,
                                separation=math.sqrt(d2)))
    return ApertureLadder(system=system, rungs=tuple(rungs))


# ---------------------------------------------------------------------------
# Seeded sampling
# ---------------------------------------------------------------------------


def isotropic_relative(system: MassSystem, rng: np.random.Generator, size: int) -> np.ndarray:
    """Batch of mass-isotropic Gaussian configurations in the relative space."""
    m = system.mass_array
    x = rng.standard_normal((size, system.size, system.dim)) / np.sqrt(m)[None, :, None]
    cm = np.tensordot(x, m, axes=([1], [0])) / system.total_mass
    return x - cm[:, None, :]


def _unit_part(system: MassSystem, part: np.ndarray, what: str) -> np.ndarray:
    norms = _batch_norm(system, part)
    if np.any(norms <= 1e-13):
        raise ValueError(f"degenerate draw while normalizing {what}")
    return part / norms[:, None, None]


def unit_internal_directions(system: MassSystem, partition: Partition,
                             rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-norm isotropic draws from the internal space of a partition."""
    if partition.order >= system.size:
        raise ValueError("internal space of the all-singleton partition is trivial")
    internal, _ = _partition_parts_batch(system, partition,
                                         isotropic_relative(system, rng, size))
    return _unit_part(system, internal, "internal directions")


def unit_centroid_directions(system: MassSystem, partition: Partition,
                             rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-norm isotropic draws from the centroid space of a partition."""
    if partition.order <= 1:
        raise ValueError("centroid space of the one-cluster partition is trivial")
    _, centroid = _partition_parts_batch(system, partition,
                                         isotropic_relative(system, rng, size))
    return _unit_part(system, centroid, "centroid directions")


def sample_cone_configurations(system: MassSystem, partition: Partition, aperture: float,
                               rng: np.random.Generator, size: int,
                               ratios: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm configurations inside a collision cone, with their ratios.

    The construction is direct: a unit internal direction scaled by a ratio
    ``t`` drawn uniformly from ``(0, aperture]`` is added to a unit centroid
    direction and the sum is normalized.  The law is not the uniform law on
    the cone section; it is a deterministic, seedable family that reaches the
    whole ratio range, which is what the sampling checks need.
    """
    if partition.order <= 1 or partition.order >= system.size:
        raise ValueError("cone sampling needs a partition with 1 < order < N")
    if aperture <= 0.0:
        raise ValueError(f"aperture must be positive, got {aperture}")
    qhat = unit_internal_directions(system, partition, rng, size)
    xihat = unit_centroid_directions(system, partition, rng, size)
    if ratios is None:
        ratios = aperture * (1.0 - rng.random(size))  # uniform on (0, aperture]
    ratios = np.asarray(ratios, dtype=float)
    x = qhat * ratios[:, None, None] + xihat
    return x / np.sqrt(1.0 + ratios ** 2)[:, None, None], ratios


@dataclass(frozen=True)
class ShellBoundReport:
    """Outcome of a sampled internal-size lower bound check on one shell."""

    partition: str
    cluster: tuple[int, ...]
    separation: float
    samples_requested: int
    samples_used: int
    violations: int
    worst_ratio: float

    def to_record(self) -> dict:
        return {"partition": self.partition, "cluster": list(self.cluster),
                "separation": self.separation,
                "samples_requested": self.samples_requested,
                "samples_used": self.samples_used,
                "violations": self.violations, "worst_ratio": self.worst_ratio}


def _lower_order_partitions(size: int, below: int) -> list[Partition]:
    from .partitions import iter_partitions

    out: list[Partition] = []
    for order in range(2, below):
        out.extend(iter_partitions(size, order))
    return out


def check_internal_lower_bound(system: MassSystem, partition: Partition,
                               cluster: Sequence[int], ladder: ApertureLadder,
                               samples: int, seed: int) -> ShellBoundReport:
    """Sample the shell of a partition and test the internal-size lower bound.

    The shell keeps the cone of ``partition`` at its ladder aperture and
    removes all lower-order cones at their strict apertures (and the central
    ball at order 1).  For any cluster ``C`` that straddles the partition —
    i.e. is contained in no single cluster — the internal size
    ``|P0[C] x|`` must stay above ``separation * |centroid part|`` on the
    shell.  Violations and the worst observed ratio are reported.
    """
    members = canonical_cluster(cluster)
    system._check_labels(members)
    if len(members) < 2:
        raise ValueError("cluster must contain at least two particles")
    if any(set(members) <= set(c) for c in partition.clusters):
        raise ValueError(
            f"cluster {members} lies inside a cluster of {partition}; "
            "the lower bound applies only to straddling clusters")
    order = partition.order
    if not 2 <= order <= ladder.max_order:
        raise ValueError(f"partition order {order} outside ladder range")
    rng = np.random.default_rng(seed)
    sep = ladder.separation(order)
    lower = _lower_order_partitions(system.size, order)
    kept_x: list[np.ndarray] = []
    kept = 0
    attempts = 0
    while kept < samples and attempts < 50:
        need = samples - kept
        x, _ = sample_cone_configurations(system, partition, ladder.aperture(order),
                                          rng, need)
        mask = np.ones(need, dtype=bool)
        norms = _batch_norm(system, x)  # unit by construction
        mask &= norms > ladder.strict_aperture(1)  # outside the central ball
        for low in lower:
            internal, centroid = _partition_parts_batch(system, low, x)
            qn = _batch_norm(system, internal)
            cn = _batch_norm(system, centroid)
            mask &= qn > ladder.strict_aperture(low.order) * cn
        kept_x.append(x[mask])
        kept += int(mask.sum())
        attempts += 1
    x = np.concatenate(kept_x, axis=0)[:samples]
    internal_c = project_cluster_internal(system, members, x)
    _, centroid = _partition_parts_batch(system, partition, x)
    lhs = _batch_norm(system, internal_c)
    rhs = sep * _batch_norm(system, centroid)
    ratio = lhs / rhs
    return ShellBoundReport(partition=str(partition), cluster=members,
                            separation=sep, samples_requested=samples,
                            samples_used=int(x.shape[0]),
                            violations=int(np.sum(ratio < 1.0)),
                            worst_ratio=float(ratio.min()))


@dataclass(frozen=True)
class SeparationReport:
    """Outcome of a sampled same-order cone separation check for one pair."""

    first: str
    second: str
    order: int
    join_order: int
    thin_intersection: bool
    samples_requested: int
    samples_achieved: int
    violations: int
    worst_margin: float
    absorbed_by: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        margin = self.worst_margin if math.isfinite(self.worst_margin) else None
        return {"first": self.first, "second": self.second, "order": self.order,
                "join_order": self.join_order,
                "thin_intersection": self.thin_intersection,
                "samples_requested": self.samples_requested,
                "samples_achieved": self.samples_achieved,
                "violations": self.violations,
                "worst_margin": margin,
                "absorbed_by": dict(self.absorbed_by)}


def check_cone_separation(system: MassSystem, first: Partition, second: Partition,
                          ladder: ApertureLadder, samples: int, seed: int) -> SeparationReport:
    """Sample the intersection of two same-order cones and check absorption.

    Two distinct partitions of the same order have cones (at the ladder
    aperture of that order) whose common points must already lie inside some
    strictly lower-order cone at its strict aperture.  Points are produced
    constructively: a unit centroid configuration of the join partition lies
    in both centroid spaces, and a relative perturbation of size
    ``t/(1+t) <= aperture/(1+aperture)`` keeps the sum in both cones.  When
    the join has a single cluster the intersection contains only the origin;
    no unit-norm point exists, which is reported as a thin intersection with
    zero achieved samples.
    """
    if first == second:
        raise ValueError("cone separation needs two distinct partitions")
    if first.order != second.order:
        raise ValueError("cone separation compares partitions of equal order")
    order = first.order
    if not 2 <= order <= ladder.max_order:
        raise ValueError(f"partition order {order} outside ladder range")
    joined = join(first, second)
    if joined.order < 2:
        return SeparationReport(first=str(first), second=str(second), order=order,
                                join_order=joined.order, thin_intersection=True,
                                samples_requested=samples, samples_achieved=0,
                                violations=0, worst_margin=math.inf)
    rng = np.random.default_rng(seed)
    aperture = ladder.aperture(order)
    core = unit_centroid_directions(system, joined, rng, samples)
    delta_hat = _unit_part(system, isotropic_relative(system, rng, samples), "perturbations")
    rho = (aperture / (1.0 + aperture)) * (1.0 - rng.random(samples))
    x = core + delta_hat * rho[:, None, None]
    x /= _batch_norm(system, x)[:, None, None]

    for part in (first, second):
        internal, centroid = _partition_parts_batch(system, part, x)
        ratio = _batch_norm(system, internal) / _batch_norm(system, centroid)
        # Absolute slack covers rounding noise in the recomputed ratio, which
        # matters when high-order apertures are themselves only ~1e-8.
        if np.any(ratio > aperture * (1.0 + 1e-9) + 1e-13):
            raise RuntimeError("constructed intersection point escaped a cone")

    absorbed = np.zeros(samples, dtype=bool)
    best_margin = np.full(samples, -math.inf)
    histogram: dict[str, int] = {}
    for low in _lower_order_partitions(system.size, order):
        strict = ladder.strict_aperture(low.order)
        internal, centroid = _partition_parts_batch(system, low, x)
        ratio = _batch_norm(system, internal) / (strict * _batch_norm(system, centroid))
        inside = ratio <= 1.0
        np.maximum(best_margin, 1.0 - ratio, out=best_margin)
        newly = inside & ~absorbed
        if np.any(newly):
            histogram[str(low)] = histogram.get(str(low), 0) + int(newly.sum())
        absorbed |= inside
    return SeparationReport(first=str(first), second=str(second), order=order,
                            join_order=joined.order, thin_intersection=False,
                            samples_requested=samples, samples_achieved=samples,
                            violations=int(np.sum(~absorbed)),
                            worst_margin=float(best_margin.min()),
                            absorbed_by=histogram)
