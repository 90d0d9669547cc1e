"""Exact ground truth at desk scale.

All-optimum-tour enumeration by canonical permutation scan, Held-Karp
subset DP for the optimum value, the exact useless-edge set, and a
brute-force path-system optimizer.  No metric assumption anywhere: the
EUC_2D rounding is not metric and optimum tours may contain crossing
edges, so every comparison here is on exact integer lengths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .tsplib import Instance, SparseEdgeSet

MAX_ENUM_N = 12
MAX_HELD_KARP_N = 18


@dataclass(frozen=True)
class Tour:
    """A cyclic vertex permutation in canonical form and its length.

    Canonical: starts at vertex 0, second vertex smaller than last.
    """

    order: tuple
    length: int

    def edge_set(self) -> frozenset:
        n = len(self.order)
        return frozenset(
            frozenset((self.order[i], self.order[(i + 1) % n])) for i in range(n)
        )


def _check_n(n: int, bound: int, what: str):
    if n < 4:
        raise ValueError(f"{what} needs n >= 4, got {n}")
    if n > bound:
        raise ValueError(f"{what} supports n <= {bound}, got {n}")


def enumerate_optimum_tours(instance: Instance) -> list[Tour]:
    """All optimum tours, by scanning the (n-1)!/2 canonical permutations."""
    n = instance.n
    _check_n(n, MAX_ENUM_N, "tour enumeration")
    d = instance.distance_matrix()
    perms = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64)
    perms = perms[perms[:, 0] < perms[:, -1]]  # one direction per cyclic class
    lengths = d[0, perms[:, 0]] + d[perms[:, -1], 0]
    for i in range(n - 2):
        lengths = lengths + d[perms[:, i], perms[:, i + 1]]
    best = lengths.min()
    out = []
    for row in perms[lengths == best]:
        out.append(Tour(order=(0,) + tuple(int(v) for v in row), length=int(best)))
    return out


def held_karp_value(instance: Instance, edges: SparseEdgeSet | None = None) -> int:
    """Optimum tour length by subset DP, optionally restricted to an edge set.

    Raises ValueError if the restricted graph admits no tour.
    """
    n = instance.n
    _check_n(n, MAX_HELD_KARP_N, "Held-Karp")
    d = instance.distance_matrix().astype(np.float64)
    if edges is not None:
        allowed = np.zeros((n, n), dtype=bool)
        for u, v in edges.edges():
            allowed[u, v] = allowed[v, u] = True
        d[~allowed] = np.inf
    # dp[mask][v]: shortest path 0 -> v+1 visiting {0} and exactly the
    # vertices of mask (bits 0..n-2 encode vertices 1..n-1), v in mask
    m = n - 1
    full = 1 << m
    inner = d[1:, 1:]
    dp = np.full((full, m), np.inf)
    for v in range(m):
        dp[1 << v][v] = d[0, v + 1]
    for mask in range(1, full):
        row = dp[mask]
        if not np.isfinite(row).any():
            continue
        rest = (~mask) & (full - 1)
        sub = rest
        while sub:
            v = (sub & -sub).bit_length() - 1
            sub &= sub - 1
            best = (row + inner[:, v]).min()
            nm = mask | (1 << v)
            if best < dp[nm][v]:
                dp[nm][v] = best
    total = dp[full - 1] + d[1:, 0]
    best = total.min()
    if not np.isfinite(best):
        raise ValueError("no tour exists within the given edge set")
    return int(round(best))


def exact_useless_edges(instance: Instance) -> set:
    """Edges of the complete graph absent from every optimum tour."""
    n = instance.n
    _check_n(n, MAX_ENUM_N, "useless-edge computation")
    used = set()
    for t in enumerate_optimum_tours(instance):
        for e in t.edge_set():
            u, v = tuple(e)
            used.add((min(u, v), max(u, v)))
    return {
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if (u, v) not in used
    }


def brute_min_path_system(instance: Instance, endpoint_pairs, interior) -> float:
    """Minimum total length of vertex-disjoint paths with the given
    endpoint pairs, using exactly the given interior vertices.

    Exhaustive over assignments of interior vertices to paths and over
    orderings within each path; edges may be arbitrary vertex pairs.
    """
    interior = list(interior)
    if len(interior) > 8:
        raise ValueError(f"brute force supports at most 8 interior vertices, got {len(interior)}")
    pairs = list(endpoint_pairs)
    k = len(pairs)
    dist = instance.dist
    best = float("inf")
    for assign in itertools.product(range(k), repeat=len(interior)):
        groups = [[] for _ in range(k)]
        for vert, g in zip(interior, assign):
            groups[g].append(vert)
        total = 0
        for (a, b), group in zip(pairs, groups):
            sub = float("inf")
            for perm in itertools.permutations(group):
                chain = (a, *perm, b)
                cost = sum(dist(chain[i], chain[i + 1]) for i in range(len(chain) - 1))
                if cost < sub:
                    sub = cost
            total += sub
        if total < best:
            best = total
    return best
