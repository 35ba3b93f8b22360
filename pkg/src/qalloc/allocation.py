"""Hypergraph allocations and the performance criteria evaluated on them.

An allocation list assigns every hyperedge the value of a resource measure
on its reduced state or measurement.  Performance criteria aggregate those
values: proportional fairness sums logarithms, reliability weights them by
failure priors, and arbitrary per-edge monotone criteria are supported
generically.  The optimal allocation reachable with two product unbiased
bases has a closed form per edge, depending only on edge size and local
dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DomainError, ShapeError


def edge_key(vertices: Iterable[str]) -> tuple:
    """Canonical edge identity: the sorted, deduplicated vertex tuple."""
    key = tuple(sorted(set(str(v) for v in vertices)))
    if not key:
        raise DomainError("an edge needs at least one vertex")
    return key


@dataclass(frozen=True)
class Hypergraph:
    vertices: tuple
    edges: tuple

    def __post_init__(self):
        vertices = tuple(str(v) for v in self.vertices)
        if len(set(vertices)) != len(vertices):
            raise DomainError("duplicate vertex labels")
        edges = tuple(edge_key(e) for e in self.edges)
        if len(set(edges)) != len(edges):
            raise DomainError("duplicate edges")
        if not edges:
            raise DomainError("a hypergraph needs at least one edge")
        known = set(vertices)
        for e in edges:
            if not set(e) <= known:
                raise DomainError(f"edge {e} uses unknown vertices")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)


def validate_hypergraph(h) -> bool:
    """True iff the fields of ``h`` satisfy the Hypergraph invariants."""
    try:
        Hypergraph(h.vertices, h.edges)
    except (DomainError, AttributeError, TypeError):
        return False
    return True


@dataclass(frozen=True)
class AllocationList:
    """Map from canonical edge to a nonnegative resource value."""

    entries: Mapping

    def __post_init__(self):
        entries = {edge_key(e): float(v) for e, v in dict(self.entries).items()}
        for e, v in entries.items():
            if v < 0:
                raise DomainError(f"allocation value for edge {e} is negative")
        object.__setattr__(self, "entries", entries)

    @property
    def edge_set(self) -> frozenset:
        return frozenset(self.entries)


@dataclass(frozen=True)
class Priors:
    """Per-vertex success probabilities."""

    probabilities: Mapping

    def __post_init__(self):
        probs = {str(v): float(p) for v, p in dict(self.probabilities).items()}
        for v, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"prior for vertex {v} is outside [0, 1]")
        object.__setattr__(self, "probabilities", probs)


def edge_prior(priors: Priors, edge: Iterable[str], vertices: Iterable[str]) -> float:
    """Probability that exactly the edge's vertices succeed.

    prod_{v in edge} p_v * prod_{v not in edge} (1 - p_v) over the given
    vertex set.
    """
    edge = set(edge_key(edge))
    out = 1.0
    seen = set()
    for v in vertices:
        v = str(v)
        if v in seen:
            continue
        seen.add(v)
        if v not in priors.probabilities:
            raise DomainError(f"no prior probability for vertex {v}")
        p = priors.probabilities[v]
        out *= p if v in edge else (1.0 - p)
    if not edge <= seen:
        raise DomainError("edge uses vertices outside the given vertex set")
    return out


def performance_fairness(alloc: AllocationList) -> float:
    """Proportional-fairness criterion: sum of natural logs of the values."""
    total = 0.0
    for e, v in alloc.entries.items():
        if v <= 0.0:
            raise DomainError(f"edge {e} has no resource; log undefined at {v}")
        total += math.log(v)
    return total


def performance_reliability(alloc: AllocationList, priors: Priors) -> float:
    """Reliability criterion: prior-weighted sum of allocation values.

    The vertex set is the priors' domain; every edge must lie inside it.
    """
    vertices = tuple(priors.probabilities)
    return sum(edge_prior(priors, e, vertices) * v for e, v in alloc.entries.items())


def performance_generic(alloc: AllocationList,
                        per_edge_fns: Mapping) -> float:
    """Sum of per-edge criterion functions applied to the allocation values."""
    fns = {edge_key(e): fn for e, fn in dict(per_edge_fns).items()}
    missing = alloc.edge_set - set(fns)
    if missing:
        raise DomainError(f"no criterion function for edges {sorted(missing)}")
    return sum(fns[e](v) for e, v in alloc.entries.items())


def fairness_dominance(alloc_star: AllocationList, alloc: AllocationList) -> float:
    """Aggregate proportional change of ``alloc`` relative to ``alloc_star``.

    sum_a (M_a - M*_a) / M_a over the common edge set.  A nonpositive value
    for every challenger certifies alloc_star as proportionally fair.
    """
    if alloc_star.edge_set != alloc.edge_set:
        raise ShapeError("allocations must cover the same edges")
    total = 0.0
    for e, v in alloc.entries.items():
        if v <= 0.0:
            raise DomainError(f"challenger value for edge {e} must be positive")
        total += (v - alloc_star.entries[e]) / v
    return total


def theorem1_value(d: int, edge_size: int) -> float:
    """Closed-form optimal edge value: (sqrt(D)-1)/(sqrt(D)+1), D = d^|edge|."""
    root = d ** (edge_size / 2.0)
    return (root - 1.0) / (root + 1.0)


def theorem1_allocation(h: Hypergraph, d: int) -> AllocationList:
    """Optimal allocation from two product unbiased bases on qudits of dim d."""
    if d < 2:
        raise DomainError("qudit dimension must be >= 2")
    return AllocationList({e: theorem1_value(d, len(e)) for e in h.edges})


def hypergraph_h1() -> Hypergraph:
    return Hypergraph(("a", "b", "c", "d"), (("a", "b", "c", "d"), ("a", "b", "c")))


def hypergraph_h2() -> Hypergraph:
    return Hypergraph(("a", "b"), (("a", "b"), ("a",), ("b",)))


def hypergraph_h3() -> Hypergraph:
    return Hypergraph(("a", "b"), (("a", "b"), ("b",)))
