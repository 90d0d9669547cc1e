"""Per-edge uselessness decisions.

Three mechanisms, in increasing cost:

* ``main_theorem_check``: two certified potential points r, s outside
  each other's cones; if both edge-exchange sums clear zero, every tour
  through pq admits an improving 3-opt, so pq is useless.
* ``close_point_check``: a single vertex r whose every possible
  neighbor pair makes the (pq, xr, yr) -> (xy, pr, qr) exchange
  improve; pq is then useless (also when r has no possible pair at
  all).
* ``direct_eliminate``: the exact Step-2 engine.  For up to two
  certifiable vertices nearest the midpoint of pq it enumerates the
  realizable neighbor pairs (pruned by the close point inequality,
  3-incompatibility, and the cone cover) and refutes every pair
  combination through the two 3-opt moves of the main theorem, with
  exact lengths.

Length comparisons on rounded distances are integer-exact; the margin
only matters for the geometric cone tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certify import (
    DEFAULT_MARGIN,
    PotentialPoint,
    certify_quadratic,
    certify_strong,
    cone_lengths,
    cover_membership,
)
from .compat import compatible, metric_excess
from .geometry import DeltaRadii, NeighborIndex
from .tsplib import Instance, SparseEdgeSet

USELESS = "useless"
KEPT = "kept"


@dataclass(frozen=True)
class Verdict:
    edge: tuple
    decision: str  # "useless" | "kept"
    method: str  # "main_fast" | "main_direct" | "close_point" | "none"
    witness: tuple | None = None


def _round_lengths(instance: Instance, d: np.ndarray) -> np.ndarray:
    if instance.mode == "EUC_2D":
        return np.floor(d + 0.5).astype(np.int64)
    return np.ceil(d).astype(np.int64)


def _dists_from(instance: Instance, v: int, idx: np.ndarray) -> np.ndarray:
    diff = instance.coords[idx] - instance.coords[v]
    return _round_lengths(instance, np.sqrt((diff * diff).sum(axis=1)))


def _pairwise(instance: Instance, idx: np.ndarray) -> np.ndarray:
    pts = instance.coords[idx]
    diff = pts[:, None, :] - pts[None, :, :]
    m = _round_lengths(instance, np.sqrt((diff * diff).sum(axis=2)))
    np.fill_diagonal(m, 0)
    return m


def main_theorem_check(
    instance: Instance,
    p: int,
    q: int,
    r_pt: PotentialPoint,
    s_pt: PotentialPoint,
    margin: float = DEFAULT_MARGIN,
) -> bool:
    """True iff the two certificates jointly prove pq useless.

    Requires each certified vertex to sit outside both cones of the
    other (otherwise the two 3-opt moves need not exist), then checks
    the two exchange inequalities on the certified lower bounds.
    """
    r, s = r_pt.vertex, s_pt.vertex
    if r == s:
        return False
    if (r_pt.cover.p, r_pt.cover.q) != (p, q) or (s_pt.cover.p, s_pt.cover.q) != (p, q):
        raise ValueError("certificates do not belong to this edge")
    if not cover_membership(instance, r_pt.cover, s, margin).neither:
        return False
    if not cover_membership(instance, s_pt.cover, r, margin).neither:
        return False
    base = instance.dist(p, q) - instance.dist(r, s)
    return (
        base + s_pt.bound_p + r_pt.bound_q > margin
        and base + r_pt.bound_p + s_pt.bound_q > margin
    )


def compatible_neighbors(
    instance: Instance, edges: SparseEdgeSet, p: int, q: int, r: int
) -> list:
    """R = neighbors x of r in the sparse graph with rx compatible to pq."""
    nbrs = np.array(edges.adj[r], dtype=np.int64)
    if len(nbrs) == 0:
        return []
    d = instance.dist
    lhs = np.maximum(
        d(p, r) + _dists_from(instance, q, nbrs),
        _dists_from(instance, p, nbrs) + d(q, r),
    )
    ok = lhs >= d(p, q) + _dists_from(instance, r, nbrs)
    ok |= (nbrs == p) | (nbrs == q)
    return nbrs[ok].tolist()


def close_point_check(
    instance: Instance,
    edges: SparseEdgeSet,
    p: int,
    q: int,
    r: int,
    margin: float = DEFAULT_MARGIN,
) -> bool:
    """True iff r proves pq useless via the close point exchange.

    Vacuously true when r has fewer than two usable neighbors: a tour
    through pq could not visit r at all.  The pair {p, q} is exempt by
    the theorem's own carve-out.
    """
    if r == p or r == q:
        raise ValueError("r must differ from both edge endpoints")
    members = compatible_neighbors(instance, edges, p, q, r)
    d = instance.dist
    l_pq = d(p, q)
    l_pr = d(p, r)
    l_qr = d(q, r)
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            x, y = members[i], members[j]
            if (x == p and y == q) or (x == q and y == p):
                continue
            if not (d(x, y) + l_pr + l_qr < l_pq + d(x, r) + d(y, r) - margin):
                return False
    return True


class _Theorem3Pruner:
    """Per-(pq, r) witness precomputation for pruning neighbor pairs
    {p, b} or {q, b} via 3-incompatibility of the committed pattern.

    The witness inequality splits into a per-witness constant plus a
    b-dependent part, so pruning a candidate pair costs O(1) after an
    O(witnesses * degree) setup.
    """

    def __init__(self, instance, edges, index, p, q, r, witness_count, shared):
        key = (p, q, r)
        hit = shared.get(key)
        if hit is not None:
            self.cz, self.vacuous = hit
            return
        d = instance.dist
        mid = (
            0.5 * (instance.xs[p] + instance.xs[r]),
            0.5 * (instance.ys[p] + instance.ys[r]),
        )
        zs = index.k_nearest(mid, witness_count + 4, exclude=(p, q, r))[:witness_count]
        cz = []
        vacuous = []
        for z in zs:
            m = metric_excess(instance, edges, p, r, z)
            if m == math.inf:
                vacuous.append(z)
            else:
                cz.append((d(r, z) + d(z, p) - m, z))
        cz.sort()
        self.cz = cz[:2]  # best two suffice: at most one z is excluded as b
        self.vacuous = vacuous[:2]
        shared[key] = (self.cz, self.vacuous)

    def prunes(self, b: int, rhs_slack: int) -> bool:
        # condition: exists witness z != b with c_z < rhs_slack, or a
        # vacuous z != b (z unvisitable alongside the pattern)
        for z in self.vacuous:
            if z != b:
                return True
        for c, z in self.cz:
            if z != b:
                return c < rhs_slack
        return False


class _DirectSide:
    """One chosen vertex r of the Step-2 engine: its compatible
    neighborhood, cone split, certification status, and the feasible
    neighbor pairs with their exchange terms."""

    def __init__(self, instance, edges, deltas, index, p, q, r, margin, witness_count, t3_shared):
        self.r = r
        d = instance.dist
        members = np.array(
            compatible_neighbors(instance, edges, p, q, r), dtype=np.int64
        )
        self.members = members
        t = len(members)
        self.l_pq = d(p, q)
        l_p, l_q, _, d_r = cone_lengths(instance, deltas, p, q, r)
        self.strong = isinstance(
            certify_strong(instance, deltas, p, q, r, margin), PotentialPoint
        )
        if t == 0:
            self.certifiable = True  # vacuously potential, r unvisitable
            self.closepoint = True
            self.pairs = np.empty((0, 2), dtype=np.int64)
            return

        l_rx = _dists_from(instance, r, members)
        l_px = _dists_from(instance, p, members)
        l_qx = _dists_from(instance, q, members)
        l_xy = _pairwise(instance, members)
        l_pr, l_qr = d(p, r), d(q, r)

        # close point inequality per pair (integer-exact), diagonal off
        cp = (l_xy + l_pr + l_qr) < (self.l_pq + l_rx[:, None] + l_rx[None, :])
        np.fill_diagonal(cp, False)
        pq_cell = (members == p)[:, None] & (members == q)[None, :]
        pq_cell |= pq_cell.T

        # close point holds with no potentiality requirement at all
        self.closepoint = bool((cp | pq_cell | ~np.triu(np.ones((t, t), bool), 1)).all())
        if self.closepoint:
            self.certifiable = True
            self.pairs = np.empty((0, 2), dtype=np.int64)
            return

        # cone memberships (inclusive with margin)
        if d_r > 0.0:
            rel = instance.coords[members] - instance.coords[r]
            dd = np.sqrt((rel * rel).sum(axis=1))
            proj = instance.coords[r] + rel * (d_r / dd)[:, None]
            dq = np.sqrt(((proj - instance.coords[q]) ** 2).sum(axis=1))
            dp = np.sqrt(((proj - instance.coords[p]) ** 2).sum(axis=1))
            in_p = dq >= l_q - margin
            in_q = dp >= l_p - margin
        else:
            in_p = np.ones(t, dtype=bool)
            in_q = np.ones(t, dtype=bool)
        self.in_p, self.in_q = in_p, in_q

        # quadratic certification: every same-cone pair (except {p, q})
        # is excluded by the exchange inequality
        same_cone = (in_p[:, None] & in_p[None, :]) | (in_q[:, None] & in_q[None, :])
        np.fill_diagonal(same_cone, False)
        quad_ok = bool((cp | pq_cell | ~same_cone).all())
        self.certifiable = self.strong or quad_ok
        if not self.certifiable:
            return

        adm = (in_p[:, None] & in_q[None, :]) | (in_p[None, :] & in_q[:, None])
        feasible = np.triu(~cp & ~pq_cell & adm, 1)

        # 3-incompatibility pruning for pairs that commit edge rp or rq
        if feasible.any():
            for anchor, other, pruner_key in ((p, q, "p"), (q, p, "q")):
                hits = np.nonzero(members == anchor)[0]
                if not len(hits):
                    continue
                i0 = int(hits[0])
                rowmask = feasible[i0, :] | feasible[:, i0]
                if not rowmask.any():
                    continue
                pruner = _Theorem3Pruner(
                    instance, edges, index, anchor, other, r, witness_count, t3_shared
                )
                for j in np.nonzero(rowmask)[0]:
                    b = int(members[j])
                    if pruner.prunes(b, self.l_pq + int(l_rx[j]) - d(b, other)):
                        feasible[min(i0, j), max(i0, j)] = False

        self.pairs = np.argwhere(feasible)
        # exchange terms: x in the p-cone slot pairs with l(rx) - l(px)
        self.term_p = (l_rx - l_px).astype(np.float64)
        self.term_q = (l_rx - l_qx).astype(np.float64)

def _combo_refuted_all(sr, ss, a_pairs, b_pairs, base, margin) -> bool:
    """True iff every (pair of r, pair of s) combination is refuted by
    the two main-theorem 3-opt moves under some neighbor labeling.

    Either labeling of each pair may be used: for any tour realizing a
    combination, one of the two moves is a valid improvement whichever
    way the neighbors are named (checked exhaustively over cyclic
    arrangements during development).
    """
    na, nb = len(a_pairs), len(b_pairs)
    ai = a_pairs[:, 0]
    aj = a_pairs[:, 1]
    bi = b_pairs[:, 0]
    bj = b_pairs[:, 1]
    # row/column blocks to keep the combination matrix bounded
    row_step = max(1, 200_000 // max(nb, 1))
    for lo in range(0, na, row_step):
        hi = min(na, lo + row_step)
        best = np.full((hi - lo, nb), -np.inf)
        for ax, ay in ((ai[lo:hi], aj[lo:hi]), (aj[lo:hi], ai[lo:hi])):
            for bz, bw in ((bi, bj), (bj, bi)):
                imp_a = base + sr.term_p[ax][:, None] + ss.term_q[bw][None, :]
                imp_b = base + sr.term_q[ay][:, None] + ss.term_p[bz][None, :]
                np.maximum(best, np.minimum(imp_a, imp_b), out=best)
        if not (best > margin).all():
            return False
    return True


def _try_pair(sr, ss, d, margin):
    """Verdict of the pairing (r, s): True (all combinations refuted),
    False (some realizable combination survives), or None when the
    pairing is structurally blocked by a realizable rs commitment."""
    r, s = sr.r, ss.r
    # a pair of r containing s commits the edge rs, which forces a pair
    # of s containing r (and vice versa); such pairs are realizable
    # only together, and jointly they block this pairing
    a_has_s = (sr.members[sr.pairs[:, 0]] == s) | (sr.members[sr.pairs[:, 1]] == s)
    b_has_r = (ss.members[ss.pairs[:, 0]] == r) | (ss.members[ss.pairs[:, 1]] == r)
    if a_has_s.any() and b_has_r.any():
        return None
    a_pairs = sr.pairs[~a_has_s]
    b_pairs = ss.pairs[~b_has_r]
    if len(a_pairs) == 0 or len(b_pairs) == 0:
        # every remaining pair on one side was an unrealizable rs commitment
        return True
    base = float(sr.l_pq - d(r, s))
    return _combo_refuted_all(sr, ss, a_pairs, b_pairs, base, margin)


def direct_eliminate(
    instance: Instance,
    edges: SparseEdgeSet,
    deltas: DeltaRadii,
    index: NeighborIndex,
    p: int,
    q: int,
    candidates,
    margin: float = DEFAULT_MARGIN,
    witness_count: int = 10,
) -> Verdict:
    """Step-2 decision for the edge pq over an ordered candidate list.

    Certifiable candidates are paired in candidate order; pq is useless
    as soon as some candidate has no feasible neighbor pair at all, or
    some pairing (r, s) refutes every combination of feasible pairs by
    the two main-theorem 3-opt moves, with exact lengths throughout.
    """
    edge = (min(p, q), max(p, q))
    d = instance.dist
    t3_shared = {}
    sides = []
    for r in candidates:
        if r == p or r == q:
            continue
        side = _DirectSide(
            instance, edges, deltas, index, p, q, r, margin, witness_count, t3_shared
        )
        if side.closepoint:
            return Verdict(edge, USELESS, "close_point", witness=(r,))
        if not side.certifiable:
            continue
        if len(side.pairs) == 0:
            return Verdict(edge, USELESS, "main_direct", witness=(r,))
        for other in sides:
            outcome = _try_pair(other, side, d, margin)
            if outcome:
                return Verdict(
                    edge, USELESS, "main_direct", witness=(other.r, side.r)
                )
        sides.append(side)
    return Verdict(edge, KEPT, "none")


def replay_verdict(
    instance: Instance,
    edges: SparseEdgeSet,
    deltas: DeltaRadii,
    index: NeighborIndex,
    verdict: Verdict,
    margin: float = DEFAULT_MARGIN,
    witness_count: int = 10,
) -> bool:
    """Re-derive a useless verdict from its stored witness."""
    if verdict.decision != USELESS or verdict.witness is None:
        return False
    p, q = verdict.edge
    if verdict.method == "main_fast":
        r, s = verdict.witness
        r_pt = certify_strong(instance, deltas, p, q, r, margin)
        s_pt = certify_strong(instance, deltas, p, q, s, margin)
        if not (isinstance(r_pt, PotentialPoint) and isinstance(s_pt, PotentialPoint)):
            return False
        return main_theorem_check(instance, p, q, r_pt, s_pt, margin)
    if verdict.method == "close_point":
        (r,) = verdict.witness
        return close_point_check(instance, edges, p, q, r, margin)
    if verdict.method == "main_direct":
        again = direct_eliminate(
            instance, edges, deltas, index, p, q, list(verdict.witness),
            margin, witness_count,
        )
        return again.decision == USELESS
    return False
