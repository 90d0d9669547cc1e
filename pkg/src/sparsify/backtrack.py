"""Bounded-depth refutation search over vertex-disjoint path systems.

To prove an edge pq useless we grow every way a tour through pq could
look locally: a collection of vertex-disjoint paths, one containing pq.
Each branch either dies (no legal continuation, an in-context
elimination fires, or the collection is not locally minimal) or
survives to the depth bound.  If every branch dies strictly before the
bound, no optimum tour contains pq.

Branching is complete by construction.  At a path endpoint we
enumerate every possible second tour edge: to an outside vertex, to
another path's endpoint (a merge), or the closing edge once a single
path spans all vertices (a finished tour, which ends the refutation
attempt).  At an outside vertex we enumerate every possible pair of
its tour edges, which may also touch path endpoints.  Filters only
remove moves that provably cannot occur in an optimum tour: a new edge
incompatible with a committed edge, a committed neighbor pair that
makes some committed edge eliminable by the close point exchange, or a
3-incompatible path window.

The per-edge budget is a deterministic node-expansion count rather
than wall time, so verdicts are reproducible and independent of the
thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .certify import DEFAULT_MARGIN
from .compat import compatible, three_incompatible
from .geometry import DeltaRadii, NeighborIndex, compute_deltas
from .tsplib import Instance, SparseEdgeSet

USELESS = "useless"
UNKNOWN = "unknown"

CLOSE = "close"


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 10
    branch_cap: int = 24
    node_budget: int = 3000  # deterministic stand-in for a per-edge time budget
    dp_interior_cap: int = 9

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


@dataclass(frozen=True)
class PathSystem:
    """Vertex-disjoint paths anchored at the edge under refutation."""

    paths: tuple  # tuple of vertex tuples, each of length >= 2
    anchor: tuple  # (p, q)
    depth: int
    length: int
    # structures created by the last extension, for incremental checks
    fresh_edges: tuple = ()
    fresh_interiors: tuple = ()

    @staticmethod
    def initial(instance: Instance, p: int, q: int) -> "PathSystem":
        e = (p, q)
        return PathSystem(
            paths=(e,), anchor=e, depth=0, length=instance.dist(p, q),
            fresh_edges=(e,),
        )

    @property
    def vertices(self) -> frozenset:
        return frozenset(v for path in self.paths for v in path)

    @property
    def interior(self) -> tuple:
        out = []
        for path in self.paths:
            out.extend(path[1:-1])
        return tuple(out)

    @property
    def endpoints(self) -> tuple:
        return tuple(end for path in self.paths for end in (path[0], path[-1]))

    def edges(self):
        for path in self.paths:
            for i in range(len(path) - 1):
                yield (path[i], path[i + 1])

    def interior_pairs(self):
        """(vertex, committed neighbor pair) for every interior vertex."""
        for path in self.paths:
            for i in range(1, len(path) - 1):
                yield path[i], (path[i - 1], path[i + 1])


class _SearchContext:
    """Frozen per-round data shared across many refute_edge calls."""

    def __init__(self, instance, edges, deltas, index, margin, witness_count):
        self.instance = instance
        self.edges = edges
        self.deltas = deltas
        self.index = index
        self.margin = margin
        self.witness_count = witness_count
        self.adj = edges.adj
        self.n = instance.n
        self.t3_cache = {}
        self.dp_cache = {}

    def t3(self, p, q, r, x) -> bool:
        key = (p, q, r, x)
        hit = self.t3_cache.get(key)
        if hit is None:
            hit = three_incompatible(
                self.instance, self.edges, p, q, r, x,
                index=self.index, witness_count=self.witness_count,
            )
            self.t3_cache[key] = hit
        return hit


def build_search_context(
    instance: Instance,
    edges: SparseEdgeSet,
    deltas: DeltaRadii | None = None,
    index: NeighborIndex | None = None,
    margin: float = DEFAULT_MARGIN,
    witness_count: int = 10,
) -> _SearchContext:
    if index is None:
        index = NeighborIndex(instance.coords)
    if deltas is None:
        deltas = compute_deltas(instance, index)
    return _SearchContext(instance, edges, deltas, index, margin, witness_count)


def is_locally_minimal(
    instance: Instance,
    state: PathSystem,
    margin: float = DEFAULT_MARGIN,
    cache: dict | None = None,
) -> bool:
    """True iff no path collection with the same endpoint pairing and
    the same interior vertex set is strictly shorter than the system.

    Held-Karp style DP over (used-interior subset, current position);
    competitor edges may be arbitrary vertex pairs, not just sparse
    ones, since dropped edges are merely useless, not forbidden.
    """
    interior = sorted(state.interior)
    pairs = sorted(
        (min(path[0], path[-1]), max(path[0], path[-1])) for path in state.paths
    )
    key = (tuple(pairs), tuple(interior))
    best = None if cache is None else cache.get(key)
    if best is None:
        best = _min_collection_length(instance, pairs, interior)
        if cache is not None:
            cache[key] = best
    return best >= state.length - margin


def _min_collection_length(instance, pairs, interior) -> float:
    d = instance.dist
    m = len(interior)
    if m == 0:
        return float(sum(d(a, b) for a, b in pairs))
    full = (1 << m) - 1
    inf = math.inf
    # dp[mask][j]: interiors of mask used, currently at interior j;
    # slot m means "at the start endpoint of the current pair"
    dp = [[inf] * (m + 1) for _ in range(full + 1)]
    dp[0][m] = 0.0
    for a, b in pairs:
        nxt = [[inf] * (m + 1) for _ in range(full + 1)]
        for mask in range(full + 1):
            row = dp[mask]
            for last in range(m + 1):
                c = row[last]
                if c == inf:
                    continue
                v = interior[last] if last < m else a
                closed = c + d(v, b)
                if closed < nxt[mask][m]:
                    nxt[mask][m] = closed
                free = full & ~mask
                while free:
                    bit = free & -free
                    free ^= bit
                    j = bit.bit_length() - 1
                    cand = c + d(v, interior[j])
                    nm = mask | bit
                    if cand < dp[nm][j]:
                        dp[nm][j] = cand
        dp = nxt
    return dp[full][m]


def _compatible_with_system(ctx, state, u, v) -> bool:
    inst = ctx.instance
    for e in state.edges():
        if not compatible(inst, e, (u, v)):
            return False
    return True


def _closepoint_blocks(ctx, v, pair, e1, e2) -> bool:
    """Close point exchange in context: interior v with committed
    neighbors makes the committed edge (e1, e2) eliminable."""
    a, b = pair
    if v == e1 or v == e2:
        return False
    if (a == e1 and b == e2) or (a == e2 and b == e1):
        return False
    d = ctx.instance.dist
    return (
        d(a, b) + d(e1, v) + d(e2, v)
        < d(e1, e2) + d(a, v) + d(b, v) - ctx.margin
    )


def _apply(ctx, state: PathSystem, added_edges) -> PathSystem | None:
    """New system with the given edges added, or None if the result is
    not a collection of simple disjoint paths."""
    adj = {}
    for path in state.paths:
        for i in range(len(path) - 1):
            adj.setdefault(path[i], []).append(path[i + 1])
            adj.setdefault(path[i + 1], []).append(path[i])
    degree_was = {v: len(a) for v, a in adj.items()}
    add_len = 0
    for u, v in added_edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
        add_len += ctx.instance.dist(u, v)
    if any(len(a) > 2 for a in adj.values()):
        return None
    # walk each component from its smaller endpoint
    starts = sorted(v for v, a in adj.items() if len(a) == 1)
    seen = set()
    paths = []
    for s in starts:
        if s in seen:
            continue
        walk = [s]
        seen.add(s)
        prev, cur = None, s
        while True:
            nxts = [w for w in adj[cur] if w != prev]
            if not nxts:
                break
            prev, cur = cur, nxts[0]
            walk.append(cur)
            seen.add(cur)
        paths.append(tuple(walk))
    if len(seen) != len(adj):
        return None  # a cycle appeared
    fresh_int = tuple(
        sorted(
            v
            for v in {x for e in added_edges for x in e}
            if len(adj[v]) == 2 and degree_was.get(v, 0) < 2
        )
    )
    paths.sort(key=lambda pth: pth[0])
    return PathSystem(
        paths=tuple(paths), anchor=state.anchor, depth=state.depth + 1,
        length=state.length + add_len,
        fresh_edges=tuple(added_edges), fresh_interiors=fresh_int,
    )


def _t3_blocks(ctx, state) -> bool:
    """3-incompatibility of any 4-vertex window using a fresh edge."""
    fresh = {frozenset(e) for e in state.fresh_edges}
    for path in state.paths:
        k = len(path)
        if k < 4:
            continue
        for j in range(k - 3):
            w = path[j:j + 4]
            if not any(
                frozenset((w[i], w[i + 1])) in fresh for i in range(3)
            ):
                continue
            if ctx.t3(w[1], w[0], w[2], w[3]) or ctx.t3(w[2], w[3], w[1], w[0]):
                return True
    return False


def _closepoint_fresh_blocks(ctx, state) -> bool:
    fresh_int = set(state.fresh_interiors)
    fresh_edges = {frozenset(e) for e in state.fresh_edges}
    all_edges = list(state.edges())
    for v, pair in state.interior_pairs():
        v_new = v in fresh_int
        for e1, e2 in all_edges:
            if v_new or frozenset((e1, e2)) in fresh_edges:
                if _closepoint_blocks(ctx, v, pair, e1, e2):
                    return True
    return False


def _main_theorem_blocks(ctx, state) -> bool:
    """Main-theorem exchange on committed adjacencies: two interior
    vertices refute some committed edge under every realizable tour,
    with exact lengths; checked on combinations involving a fresh
    structure only (older ones were checked when they appeared)."""
    inters = list(state.interior_pairs())
    fresh = set(state.fresh_interiors)
    fresh_edges = {frozenset(e) for e in state.fresh_edges}
    d = ctx.instance.dist
    margin = ctx.margin
    for i in range(len(inters)):
        v1, (a, b) = inters[i]
        for j in range(i + 1, len(inters)):
            v2, (c, cc) = inters[j]
            if v2 in (a, b) or v1 in (c, cc):
                continue  # the edge v1v2 is committed; no exchange exists
            pair_new = v1 in fresh or v2 in fresh
            for e1, e2 in state.edges():
                if v1 in (e1, e2) or v2 in (e1, e2):
                    continue
                if not (pair_new or frozenset((e1, e2)) in fresh_edges):
                    continue
                base = d(e1, e2) - d(v1, v2)
                refuted = False
                for x, y in ((a, b), (b, a)):
                    for z, w in ((c, cc), (cc, c)):
                        imp_a = base + d(v1, x) - d(e1, x) + d(v2, w) - d(e2, w)
                        imp_b = base + d(v1, y) - d(e2, y) + d(v2, z) - d(e1, z)
                        if imp_a > margin and imp_b > margin:
                            refuted = True
                            break
                    if refuted:
                        break
                if refuted:
                    return True
    return False


class _Snapshot:
    """Per-node lookup structures."""

    def __init__(self, state: PathSystem, n: int):
        self.vset = state.vertices
        self.interior = set(state.interior)
        self.single = len(state.paths) == 1
        self.full_cover = len(self.vset) == n
        self.full_cover_with_one = len(self.vset) + 1 == n
        self.end_path = {}
        for k, pth in enumerate(state.paths):
            self.end_path[pth[0]] = k
            self.end_path[pth[-1]] = k


def _count_endpoint(ctx, state, snap, pi, side) -> int:
    """Structural upper bound on the possibilities at a path endpoint."""
    path = state.paths[pi]
    u = path[0] if side == 0 else path[-1]
    count = 0
    for t in ctx.adj[u]:
        if t in snap.vset:
            k = snap.end_path.get(t)
            if k is None:
                continue
            if k == pi:
                if snap.single and snap.full_cover and len(path) > 2:
                    count += 1  # the closing edge of a finished tour
                continue
            count += 1
        else:
            count += 1
    return count


def _count_vertex(ctx, state, snap, v) -> int:
    """Structural upper bound on the tour-edge pairs at an outside vertex."""
    m = 0
    path_end_hits = {}
    for t in ctx.adj[v]:
        if t in snap.interior:
            continue
        k = snap.end_path.get(t)
        if k is not None:
            path_end_hits[k] = path_end_hits.get(k, 0) + 1
        m += 1
    count = m * (m - 1) // 2
    for hits in path_end_hits.values():
        if hits == 2:
            # both ends of one path through v close a cycle
            count -= 1
            if snap.single and snap.full_cover_with_one:
                count += 1  # legal as a finished tour
    return count


def _endpoint_moves(ctx, state, snap, pi, side):
    path = state.paths[pi]
    u = path[0] if side == 0 else path[-1]
    moves = []
    for t in ctx.adj[u]:
        if t in snap.vset:
            k = snap.end_path.get(t)
            if k is None:
                continue  # interior, both edges committed
            if k == pi:
                # second end of the same path: the closing edge of a
                # finished tour, only possible at full cover
                if snap.single and snap.full_cover and len(path) > 2:
                    if _compatible_with_system(ctx, state, u, t):
                        moves.append((CLOSE, pi))
                continue
            if _compatible_with_system(ctx, state, u, t):
                moves.append(("edge", u, t))
        else:
            if _compatible_with_system(ctx, state, u, t):
                moves.append(("edge", u, t))
    return moves


def _vertex_moves(ctx, state, snap, v):
    targets = [
        t
        for t in ctx.adj[v]
        if t not in snap.interior and _compatible_with_system(ctx, state, v, t)
    ]
    moves = []
    for i in range(len(targets)):
        for j in range(i + 1, len(targets)):
            t1, t2 = targets[i], targets[j]
            k1, k2 = snap.end_path.get(t1), snap.end_path.get(t2)
            if k1 is not None and k1 == k2:
                if snap.single and snap.full_cover_with_one:
                    moves.append((CLOSE, v))
                continue
            moves.append(("pair", v, t1, t2))
    return moves


def _expand(ctx, state, move):
    """Apply a non-closing move; None when it provably cannot occur."""
    if move[0] == "edge":
        child = _apply(ctx, state, [(move[1], move[2])])
    else:
        _, v, t1, t2 = move
        child = _apply(ctx, state, [(v, t1), (v, t2)])
    if child is None:
        return None
    if _closepoint_fresh_blocks(ctx, child):
        return None
    if _t3_blocks(ctx, child):
        return None
    return child


def _choose_branch(ctx, state, snap):
    """Branch point with the fewest structural possibilities:
    endpoints in path order, then outside vertices near the system."""
    best = None
    best_count = None
    for pi, path in enumerate(state.paths):
        for side in (0, 1):
            c = _count_endpoint(ctx, state, snap, pi, side)
            if best_count is None or c < best_count:
                best, best_count = ("endpoint", pi, side), c
                if c == 0:
                    return best, 0
    near = sorted({t for v in snap.vset for t in ctx.adj[v] if t not in snap.vset})
    for v in near:
        c = _count_vertex(ctx, state, snap, v)
        if c < best_count:
            best, best_count = ("vertex", v), c
            if c == 0:
                return best, 0
    return best, best_count


def _moves_at(ctx, state, snap, point):
    if point[0] == "endpoint":
        return _endpoint_moves(ctx, state, snap, point[1], point[2])
    return _vertex_moves(ctx, state, snap, point[1])


def extensions(
    instance: Instance,
    edges: SparseEdgeSet,
    state: PathSystem,
    deltas: DeltaRadii | None = None,
    index: NeighborIndex | None = None,
    margin: float = DEFAULT_MARGIN,
    witness_count: int = 10,
    ctx=None,
):
    """Surviving (move, successor) list at the chosen branch point.

    A ``(CLOSE, ...)`` move has successor None: the branch completes a
    tour and cannot be refuted.
    """
    if ctx is None:
        ctx = build_search_context(instance, edges, deltas, index, margin, witness_count)
    snap = _Snapshot(state, ctx.n)
    point, _ = _choose_branch(ctx, state, snap)
    out = []
    for move in _moves_at(ctx, state, snap, point):
        if move[0] == CLOSE:
            out.append((move, None))
            continue
        child = _expand(ctx, state, move)
        if child is not None:
            out.append((move, child))
    return out


def _visit(ctx, cfg, state, budget) -> bool:
    """True when every continuation of this branch is refuted."""
    budget[0] -= 1
    if budget[0] < 0:
        return False
    if _main_theorem_blocks(ctx, state):
        return True
    if len(state.interior) <= cfg.dp_interior_cap:
        if not is_locally_minimal(ctx.instance, state, ctx.margin, ctx.dp_cache):
            return True
    if state.depth >= cfg.max_depth:
        return False
    snap = _Snapshot(state, ctx.n)
    point, count = _choose_branch(ctx, state, snap)
    if count == 0:
        return True
    if count > cfg.branch_cap:
        return False
    for move in _moves_at(ctx, state, snap, point):
        if move[0] == CLOSE:
            return False  # a full tour through pq survives in the graph
        child = _expand(ctx, state, move)
        if child is None:
            continue
        if not _visit(ctx, cfg, child, budget):
            return False
    return True


def refute_edge(
    instance: Instance,
    edges: SparseEdgeSet,
    p: int,
    q: int,
    cfg: SearchConfig,
    deltas: DeltaRadii | None = None,
    index: NeighborIndex | None = None,
    margin: float = DEFAULT_MARGIN,
    witness_count: int = 10,
    ctx=None,
) -> str:
    """``useless`` when the bounded search refutes every branch, else
    ``unknown``.  Deterministic for a fixed configuration."""
    if not edges.has_edge(p, q):
        raise ValueError(f"edge ({p}, {q}) not in the sparse set")
    if ctx is None:
        ctx = build_search_context(instance, edges, deltas, index, margin, witness_count)
    state = PathSystem.initial(instance, p, q)
    budget = [cfg.node_budget]
    return USELESS if _visit(ctx, cfg, state, budget) else UNKNOWN
