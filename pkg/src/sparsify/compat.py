"""Pairwise edge compatibility, metric excess, and 3-incompatibility.

Two edges can only appear together in an optimum tour if no 2-opt move
across them improves; that is the compatibility test.  The metric
excess of a vertex z with respect to an edge quantifies how cheaply a
degree-4 visit of z can be shortcut, which powers the strong close
point argument: if some witness z makes the patched tour improve after
paying the worst-case shortcut, the three pattern edges cannot all be
in one optimum tour.

Everything in this module compares exact integer lengths; no margins
are needed.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import NeighborIndex
from .tsplib import Instance, SparseEdgeSet


def compatible(instance: Instance, pq, xy) -> bool:
    """True iff edges pq and xy may co-occur in an optimum tour
    (2-opt test); edges sharing a vertex are always compatible."""
    p, q = pq
    x, y = xy
    if p == x or p == y or q == x or q == y:
        return True
    d = instance.dist
    return max(d(p, x) + d(q, y), d(p, y) + d(q, x)) >= d(p, q) + d(x, y)


def _rounded_rows(instance: Instance, v: int, idx: np.ndarray) -> np.ndarray:
    diff = instance.coords[idx] - instance.coords[v]
    d = np.sqrt((diff * diff).sum(axis=1))
    if instance.mode == "EUC_2D":
        out = np.floor(d + 0.5).astype(np.int64)
    else:
        out = np.ceil(d).astype(np.int64)
    out[idx == v] = 0
    return out


def metric_excess(
    instance: Instance, edges: SparseEdgeSet, p: int, q: int, z: int
) -> float:
    """Worst-case shortcut slack m_pq(z) over possible tour-neighbor
    pairs of z, scanning neighbors in the current sparse graph.

    Returns +inf when z has fewer than two usable neighbors: z then
    cannot be visited at all in a tour committed to the pattern, so
    callers may treat the witness condition as vacuously satisfied.
    """
    if z == p or z == q:
        raise ValueError("z must differ from both edge endpoints")
    nbrs = np.array([v for v in edges.adj[z] if v != p and v != q], dtype=np.int64)
    if len(nbrs) < 2:
        return math.inf
    # per-neighbor worst single-shortcut cost; the min over pairs of
    # the pairwise max is just the second-smallest of these
    dz = _rounded_rows(instance, z, nbrs)
    h = np.maximum(
        dz + instance.dist(z, p) - _rounded_rows(instance, p, nbrs),
        dz + instance.dist(z, q) - _rounded_rows(instance, q, nbrs),
    )
    return float(np.partition(h, 1)[1])


def three_incompatible(
    instance: Instance,
    edges: SparseEdgeSet,
    p: int,
    q: int,
    r: int,
    x: int,
    index: NeighborIndex | None = None,
    witness_count: int = 10,
) -> bool:
    """True if the path pattern q-p-r-x (edges pq, pr, rx) provably
    cannot appear in any optimum tour.

    Witness candidates z are the vertices nearest the midpoint of
    segment pr; the selection is a heuristic affecting power only,
    never soundness.
    """
    if len({p, q, r, x}) != 4:
        raise ValueError("pattern vertices must be distinct")
    d = instance.dist
    rhs = d(p, q) + d(r, x)
    mid = (
        0.5 * (instance.xs[p] + instance.xs[r]),
        0.5 * (instance.ys[p] + instance.ys[r]),
    )
    if index is not None:
        cand = index.k_nearest(mid, witness_count + 4, exclude=(p, q, r, x))
    else:
        mx, my = mid
        scored = sorted(
            (
                ((instance.xs[v] - mx) ** 2 + (instance.ys[v] - my) ** 2, v)
                for v in range(instance.n)
                if v not in (p, q, r, x)
            ),
        )
        cand = [v for _, v in scored]
    for z in cand[:witness_count]:
        m = metric_excess(instance, edges, p, r, z)
        if m == math.inf:
            # z cannot be visited alongside the committed pattern
            return True
        if d(x, q) + d(r, z) + d(z, p) - m < rhs:
            return True
    return False
