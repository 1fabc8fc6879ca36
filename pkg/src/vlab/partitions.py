"""Cluster decompositions of a finite particle set.

A *cluster* is a non-empty subset of the particle labels ``{1, ..., N}`` and a
*partition* is a family of pairwise disjoint clusters covering all labels.
Partitions are kept in a canonical form (members of each cluster ascending,
clusters ordered by their smallest member) so that equality, hashing and
serialization are unambiguous.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


def canonical_cluster(members: Iterable[int]) -> tuple[int, ...]:
    """Return the cluster as a sorted tuple of distinct positive labels."""
    items = sorted(set(int(i) for i in members))
    if not items:
        raise ValueError("cluster must be non-empty")
    if items[0] < 1:
        raise ValueError(f"particle labels must be >= 1, got {items[0]}")
    return tuple(items)


@dataclass(frozen=True)
class Partition:
    """A partition of the particle labels ``{1, ..., size}`` into clusters.

    ``clusters`` is stored canonically: each cluster sorted ascending and the
    clusters ordered by smallest member.  ``order`` is the number of clusters.
    """

    size: int
    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted((canonical_cluster(c) for c in self.clusters),
                             key=lambda c: c[0]))
        object.__setattr__(self, "clusters", canon)
        seen = [i for c in self.clusters for i in c]
        if sorted(seen) != list(range(1, self.size + 1)):
            raise ValueError(
                f"clusters {self.clusters} do not partition {{1..{self.size}}}")

    @property
    def order(self) -> int:
        return len(self.clusters)

    def cluster_of(self, label: int) -> tuple[int, ...]:
        for c in self.clusters:
            if label in c:
                return c
        raise KeyError(f"label {label} not in partition of size {self.size}")

    def is_refinement_of(self, other: "Partition") -> bool:
        """True when every cluster of ``self`` lies inside a cluster of ``other``."""
        if self.size != other.size:
            raise ValueError("partitions refer to different particle sets")
        owner = {i: frozenset(c) for c in other.clusters for i in c}
        return all(set(c) <= owner[c[0]] for c in self.clusters)

    def __str__(self) -> str:
        return "|".join("".join(str(i) for i in c) if self.size <= 9
                        else "+".join(str(i) for i in c)
                        for c in self.clusters)


def partition_of(size: int, clusters: Sequence[Sequence[int]]) -> Partition:
    """Build a canonical :class:`Partition` from any cluster listing."""
    return Partition(size=size, clusters=tuple(tuple(c) for c in clusters))


def one_cluster(size: int) -> Partition:
    """The coarsest partition: all particles in a single cluster."""
    return partition_of(size, [list(range(1, size + 1))])


def all_singletons(size: int) -> Partition:
    """The finest partition: every particle its own cluster."""
    return partition_of(size, [[i] for i in range(1, size + 1)])


def merge_clusters(partition: Partition, a: int, b: int) -> Partition:
    """Merge the clusters containing labels ``a`` and ``b`` into one."""
    ca, cb = partition.cluster_of(a), partition.cluster_of(b)
    if ca == cb:
        raise ValueError(f"labels {a} and {b} already share a cluster")
    rest = [c for c in partition.clusters if c not in (ca, cb)]
    return partition_of(partition.size, rest + [ca + cb])


def merged_pair(fine: Partition, coarse: Partition) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Identify the two clusters of ``fine`` whose union turns it into ``coarse``.

    Raises ``ValueError`` unless ``coarse`` arises from ``fine`` by merging
    exactly one pair of clusters.
    """
    if fine.size != coarse.size or fine.order != coarse.order + 1:
        raise ValueError("second partition must merge exactly one cluster pair")
    fine_set = set(fine.clusters)
    coarse_set = set(coarse.clusters)
    gained = coarse_set - fine_set
    lost = sorted(fine_set - coarse_set, key=lambda c: c[0])
    if len(gained) != 1 or len(lost) != 2:
        raise ValueError("second partition must merge exactly one cluster pair")
    union = canonical_cluster(lost[0] + lost[1])
    if union != next(iter(gained)):
        raise ValueError("second partition must merge exactly one cluster pair")
    return lost[0], lost[1]


def join(p: Partition, q: Partition) -> Partition:
    """Coarsest common coarsening: connect labels linked by either partition."""
    if p.size != q.size:
        raise ValueError("partitions refer to different particle sets")
    parent = list(range(p.size + 1))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for part in (p, q):
        for c in part.clusters:
            for i in c[1:]:
                union(c[0], i)
    groups: dict[int, list[int]] = {}
    for i in range(1, p.size + 1):
        groups.setdefault(find(i), []).append(i)
    return partition_of(p.size, list(groups.values()))


def iter_partitions(size: int, order: int | None = None) -> Iterator[Partition]:
    """Yield every partition of ``{1..size}``, optionally of a fixed order.

    Enumeration follows the standard restricted-growth encoding, so the
    output sequence is deterministic.
    """
    if size < 1:
        raise ValueError("size must be >= 1")

    def grow(codes: list[int], next_free: int) -> Iterator[list[int]]:
        if len(codes) == size:
            yield codes
            return
        for c in range(next_free + 1):
            yield from grow(codes + [c], max(next_free, c + 1))

    for codes in grow([0], 1):
        n_clusters = max(codes) + 1
        if order is not None and n_clusters != order:
            continue
        clusters: list[list[int]] = [[] for _ in range(n_clusters)]
        for label, code in enumerate(codes, start=1):
            clusters[code].append(label)
        yield partition_of(size, clusters)


def count_partitions(size: int, order: int | None = None) -> int:
    """Number of partitions (Bell number, or Stirling number for fixed order)."""
    return sum(1 for _ in iter_partitions(size, order))


def proper_cluster_subsets(partition: Partition) -> list[tuple[int, ...]]:
    """All clusters that sit inside some cluster of ``partition``.

    These are the subsets C with ``C`` contained in a single cluster; every
    other subset straddles at least two clusters.
    """
    out: set[tuple[int, ...]] = set()
    for c in partition.clusters:
        for k in range(1, len(c) + 1):
            out.update(itertools.combinations(c, k))
    return sorted(out, key=lambda c: (len(c), c))
