"""Three-step elimination pipeline and its orchestration.

Step 1 streams the n(n-1)/2 vertex pairs in fixed-size blocks (the
complete edge list is never materialized), certifies up to a configured
number of potential points per edge ordered by distance from the edge
midpoint, and eliminates via the constant-time main-theorem bounds.
Step 2 applies the exact direct elimination per edge in snapshot
rounds until a fixpoint.  Step 3 runs the bounded backtrack search the
same way.  Removals are applied only between rounds, so verdicts are
independent of edge order, chunking, and thread count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backtrack import SearchConfig, USELESS, build_search_context, refute_edge
from .certify import DEFAULT_MARGIN
from .eliminate import direct_eliminate
from .geometry import NeighborIndex, compute_deltas
from .tsplib import Instance, SparseEdgeSet


@dataclass(frozen=True)
class PipelineConfig:
    steps: tuple = (1, 2, 3)
    max_candidates: int = 10  # potential points examined per edge
    search: SearchConfig = field(default_factory=SearchConfig)
    threads: int = 1
    margin: float = DEFAULT_MARGIN
    max_rounds: int = 25
    witness_count: int = 10
    block_size: int = 8192

    def __post_init__(self):
        if any(s not in (1, 2, 3) for s in self.steps):
            raise ValueError(f"steps must be within {{1, 2, 3}}, got {self.steps}")
        if self.max_candidates < 2:
            raise ValueError("need at least two candidate points per edge")


@dataclass
class RunStats:
    name: str
    n: int
    m_input: int
    step1_edges: int = 0
    step1_seconds: float = 0.0
    step2_edges: int = 0
    step2_seconds: float = 0.0
    step3_edges: int = 0
    step3_seconds: float = 0.0
    ratio: float = 0.0
    methods: dict = field(default_factory=dict)
    l_min_le_1: bool = False

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "m_input": self.m_input,
            "step1_edges": self.step1_edges,
            "step1_seconds": round(self.step1_seconds, 3),
            "step2_edges": self.step2_edges,
            "step2_seconds": round(self.step2_seconds, 3),
            "step3_edges": self.step3_edges,
            "step3_seconds": round(self.step3_seconds, 3),
            "ratio": round(self.ratio, 3),
            "methods": dict(sorted(self.methods.items())),
        }
        if self.l_min_le_1:
            out["l_min_le_1"] = True
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


class PipelineContext:
    """Immutable per-instance precomputation shared by all steps."""

    def __init__(self, instance: Instance, margin: float = DEFAULT_MARGIN):
        self.instance = instance
        self.index = NeighborIndex(instance.coords)
        self.deltas = compute_deltas(instance, self.index)
        self.margin = margin


def _pair_blocks(n: int, block_size: int):
    """(i_array, j_array) chunks covering all i < j pairs in order."""
    i_parts, j_parts, count = [], [], 0
    for i in range(n - 1):
        js = np.arange(i + 1, n, dtype=np.int64)
        i_parts.append(np.full(len(js), i, dtype=np.int64))
        j_parts.append(js)
        count += len(js)
        if count >= block_size:
            yield np.concatenate(i_parts), np.concatenate(j_parts)
            i_parts, j_parts, count = [], [], 0
    if count:
        yield np.concatenate(i_parts), np.concatenate(j_parts)


def _clamp_arr(x: np.ndarray) -> np.ndarray:
    return np.clip(x, -1.0, 1.0)


def _midpoint_candidates(instance, index, i_arr, j_arr, k):
    """Per pair, the k nearest vertices to the pair midpoint, excluding
    the pair's own endpoints; (candidates, validity) arrays."""
    mids = (instance.coords[i_arr] + instance.coords[j_arr]) * 0.5
    cand, cand_d2 = index.k_nearest_block(mids, min(k + 2, index.n))
    excl = (cand == i_arr[:, None]) | (cand == j_arr[:, None]) | (cand < 0)
    cand_d2 = np.where(excl, np.inf, cand_d2)
    order = np.lexsort((cand, cand_d2), axis=1)
    cand = np.take_along_axis(cand, order, axis=1)[:, :k]
    cand_d2 = np.take_along_axis(cand_d2, order, axis=1)[:, :k]
    valid = np.isfinite(cand_d2)
    return np.where(valid, cand, 0), valid


def _step1_block(instance, deltas_values, index, margin, max_cand, i_arr, j_arr):
    """Survivor mask for one block of vertex pairs.

    Vectorizes the strong certification over a (pairs x candidates)
    grid, then tries certified pairs per edge in midpoint order; the
    formulas mirror certify.certify_strong and
    eliminate.main_theorem_check.
    """
    coords = instance.coords
    euc2d = instance.mode == "EUC_2D"
    b = len(i_arr)
    pcoo = coords[i_arr]
    qcoo = coords[j_arr]
    dvec = qcoo - pcoo
    pq_e = np.sqrt((dvec * dvec).sum(axis=1))
    l_pq = np.floor(pq_e + 0.5).astype(np.int64) if euc2d else np.ceil(pq_e).astype(np.int64)

    cand, valid = _midpoint_candidates(instance, index, i_arr, j_arr, max_cand)

    rcoo = coords[cand]
    with np.errstate(invalid="ignore", divide="ignore"):
        dpr = rcoo - pcoo[:, None, :]
        rp = np.sqrt((dpr * dpr).sum(axis=2))
        dqr = rcoo - qcoo[:, None, :]
        rq = np.sqrt((dqr * dqr).sum(axis=2))
        l_pr = np.floor(rp + 0.5).astype(np.int64) if euc2d else np.ceil(rp).astype(np.int64)
        l_qr = np.floor(rq + 0.5).astype(np.int64) if euc2d else np.ceil(rq).astype(np.int64)
        delta = deltas_values[cand]
        lf = l_pq[:, None].astype(np.float64)
        l_p = delta + lf - l_qr - 1.0
        l_q = delta + lf - l_pr - 1.0

        ok = valid & (delta > 0.0) & (l_p > 0.0) & (l_q > 0.0)
        ok &= l_p + l_q >= lf - 0.5

        chord = l_p + l_q - lf + 0.5
        gam = np.arccos(_clamp_arr(1.0 - (chord * chord) / (2.0 * delta * delta)))
        alpha_p = 2.0 * np.arccos(
            _clamp_arr((l_q * l_q - delta * delta - rq * rq) / (2.0 * delta * rq))
        )
        alpha_q = 2.0 * np.arccos(
            _clamp_arr((l_p * l_p - delta * delta - rp * rp) / (2.0 * delta * rp))
        )
        ok &= gam > np.maximum(alpha_p, alpha_q) + margin

        pq2 = (pq_e * pq_e)[:, None]
        pqc = pq_e[:, None]
        cos_eps_p = _clamp_arr((pq2 + rp * rp - rq * rq) / (2.0 * pqc * rp))
        cos_eps_q = _clamp_arr((pq2 + rq * rq - rp * rp) / (2.0 * pqc * rq))
        cos_th_p = _clamp_arr((l_p * l_p + rp * rp - delta * delta) / (2.0 * l_p * rp))
        cos_th_q = _clamp_arr((l_q * l_q + rq * rq - delta * delta) / (2.0 * l_q * rq))

        lhs_q = ((rq + delta) ** 2 + pq2 - l_p * l_p) / (2.0 * (rq + delta) * pqc)
        lhs_p = ((rp + delta) ** 2 + pq2 - l_q * l_q) / (2.0 * (rp + delta) * pqc)
        ok &= (lhs_q <= cos_eps_q - margin) & (lhs_p <= cos_eps_p - margin)
        ok &= (cos_eps_p + cos_th_p >= margin) & (cos_eps_q + cos_th_q >= margin)

        sin_eps_p = np.sqrt(np.maximum(0.0, 1.0 - cos_eps_p * cos_eps_p))
        sin_eps_q = np.sqrt(np.maximum(0.0, 1.0 - cos_eps_q * cos_eps_q))
        sin_th_p = np.sqrt(np.maximum(0.0, 1.0 - cos_th_p * cos_th_p))
        sin_th_q = np.sqrt(np.maximum(0.0, 1.0 - cos_th_q * cos_th_q))
        cos_sum_q = cos_eps_q * cos_th_q - sin_eps_q * sin_th_q
        cos_sum_p = cos_eps_p * cos_th_p - sin_eps_p * sin_th_p
        max_px = np.sqrt(np.maximum(0.0, pq2 + l_q * l_q - 2.0 * pqc * l_q * cos_sum_q))
        max_qy = np.sqrt(np.maximum(0.0, pq2 + l_p * l_p - 2.0 * pqc * l_p * cos_sum_p))
        bound_p = delta - 1.0 - max_px
        bound_q = delta - 1.0 - max_qy

    survivors = np.ones(b, dtype=bool)
    xs, ys = instance.xs, instance.ys
    dist = instance.dist
    counts = ok.sum(axis=1)
    for row in np.nonzero(counts >= 2)[0]:
        cols = np.nonzero(ok[row])[0]
        p, q = int(i_arr[row]), int(j_arr[row])
        base_lpq = int(l_pq[row])
        px, py = xs[p], ys[p]
        qx, qy = xs[q], ys[q]
        accepted = []
        eliminated = False
        for col in cols:
            rv = int(cand[row, col])
            entry = (
                rv,
                float(bound_p[row, col]),
                float(bound_q[row, col]),
                float(delta[row, col]),
                float(l_p[row, col]),
                float(l_q[row, col]),
            )
            for other in accepted:
                sv, s_bp, s_bq, _, _, _ = other
                base = base_lpq - dist(rv, sv)
                if not (
                    base + entry[1] + s_bq > margin
                    and base + s_bp + entry[2] > margin
                ):
                    continue
                if _outside_cones(xs, ys, px, py, qx, qy, other, rv, margin) and (
                    _outside_cones(xs, ys, px, py, qx, qy, entry, sv, margin)
                ):
                    eliminated = True
                    break
            if eliminated:
                break
            accepted.append(entry)
        survivors[row] = not eliminated
    return survivors


def _outside_cones(xs, ys, px, py, qx, qy, cover_entry, s, margin) -> bool:
    """True iff vertex s lies strictly outside both cones of the cover."""
    rv, _, _, d_r, l_p, l_q = cover_entry
    ux = xs[s] - xs[rv]
    uy = ys[s] - ys[rv]
    d = math.sqrt(ux * ux + uy * uy)
    sx = xs[rv] + d_r * ux / d
    sy = ys[rv] + d_r * uy / d
    if math.hypot(sx - qx, sy - qy) >= l_q - margin:
        return False
    return math.hypot(sx - px, sy - py) < l_p - margin


def _step2_chunk(instance, edges, deltas, index, margin, witness_count, max_cand, chunk):
    i_arr = np.array([e[0] for e in chunk], dtype=np.int64)
    j_arr = np.array([e[1] for e in chunk], dtype=np.int64)
    cand, valid = _midpoint_candidates(instance, index, i_arr, j_arr, max_cand)
    out = []
    for row, (p, q) in enumerate(chunk):
        candidates = [int(c) for c, v in zip(cand[row], valid[row]) if v]
        verdict = direct_eliminate(
            instance, edges, deltas, index, p, q, candidates,
            margin=margin, witness_count=witness_count,
        )
        out.append((p, q, verdict.decision, verdict.method))
    return out


def _step3_chunk(instance, edges, deltas, index, margin, witness_count, search, chunk):
    sctx = build_search_context(instance, edges, deltas, index, margin, witness_count)
    return [
        (p, q, refute_edge(instance, edges, p, q, search, ctx=sctx))
        for p, q in chunk
    ]


_WORKER = {}


def _init_worker(instance, payload):
    _WORKER["instance"] = instance
    _WORKER["index"] = NeighborIndex(instance.coords)
    _WORKER["payload"] = payload


def _step1_worker(args):
    i_arr, j_arr = args
    pl = _WORKER["payload"]
    mask = _step1_block(
        _WORKER["instance"], pl["deltas_values"], _WORKER["index"],
        pl["margin"], pl["max_candidates"], i_arr, j_arr,
    )
    return i_arr[mask], j_arr[mask]


def _step2_worker(chunk):
    pl = _WORKER["payload"]
    return _step2_chunk(
        _WORKER["instance"], pl["edges"], pl["deltas"], _WORKER["index"],
        pl["margin"], pl["witness_count"], pl["max_candidates"], chunk,
    )


def _step3_worker(chunk):
    pl = _WORKER["payload"]
    return _step3_chunk(
        _WORKER["instance"], pl["edges"], pl["deltas"], _WORKER["index"],
        pl["margin"], pl["witness_count"], pl["search"], chunk,
    )


def _chunked(seq, parts):
    step = max(1, (len(seq) + parts - 1) // parts)
    return [seq[i : i + step] for i in range(0, len(seq), step)]


def step1_fast(
    instance: Instance, cfg: PipelineConfig, ctx: PipelineContext
) -> tuple[SparseEdgeSet, dict]:
    """Fast elimination over the streamed complete graph."""
    survivors_i, survivors_j = [], []
    if cfg.threads > 1:
        payload = {
            "deltas_values": ctx.deltas.values,
            "margin": cfg.margin,
            "max_candidates": cfg.max_candidates,
        }
        with ProcessPoolExecutor(
            max_workers=cfg.threads, initializer=_init_worker,
            initargs=(instance, payload),
        ) as pool:
            for si, sj in pool.map(
                _step1_worker, _pair_blocks(instance.n, cfg.block_size)
            ):
                survivors_i.append(si)
                survivors_j.append(sj)
    else:
        for i_arr, j_arr in _pair_blocks(instance.n, cfg.block_size):
            mask = _step1_block(
                instance, ctx.deltas.values, ctx.index, cfg.margin,
                cfg.max_candidates, i_arr, j_arr,
            )
            survivors_i.append(i_arr[mask])
            survivors_j.append(j_arr[mask])
    si = np.concatenate(survivors_i)
    sj = np.concatenate(survivors_j)
    edge_set = SparseEdgeSet.from_edges(instance.n, zip(si.tolist(), sj.tolist()))
    m_total = instance.n * (instance.n - 1) // 2
    return edge_set, {"main_fast": m_total - edge_set.m}


def _run_rounds(instance, edges, cfg, ctx, chunk_fn, worker_fn, payload_extra, methods_of):
    """Snapshot rounds: evaluate all edges against the frozen set,
    remove the useless ones at a barrier, repeat to fixpoint."""
    methods = {}
    for _ in range(cfg.max_rounds):
        edge_list = list(edges.edges())
        if not edge_list:
            break
        payload = {
            "edges": edges,
            "deltas": ctx.deltas,
            "margin": cfg.margin,
            "witness_count": cfg.witness_count,
            **payload_extra,
        }
        results = []
        if cfg.threads > 1:
            with ProcessPoolExecutor(
                max_workers=cfg.threads, initializer=_init_worker,
                initargs=(instance, payload),
            ) as pool:
                for part in pool.map(worker_fn, _chunked(edge_list, cfg.threads * 8)):
                    results.extend(part)
        else:
            results = chunk_fn(instance, edges, ctx.deltas, ctx.index, cfg, edge_list)
        removed = []
        for item in results:
            label = methods_of(item)
            if label is not None:
                removed.append((item[0], item[1]))
                methods[label] = methods.get(label, 0) + 1
        if not removed:
            break
        edges = edges.without(removed)
    return edges, methods


def step2_direct(
    instance: Instance,
    edges: SparseEdgeSet,
    cfg: PipelineConfig,
    ctx: PipelineContext,
) -> tuple[SparseEdgeSet, dict]:
    """Direct elimination in snapshot rounds until fixpoint."""

    def serial(instance, edges, deltas, index, cfg, edge_list):
        return _step2_chunk(
            instance, edges, deltas, index, cfg.margin,
            cfg.witness_count, cfg.max_candidates, edge_list,
        )

    def methods_of(item):
        return item[3] if item[2] == "useless" else None

    return _run_rounds(
        instance, edges, cfg, ctx, serial, _step2_worker,
        {"max_candidates": cfg.max_candidates}, methods_of,
    )


def step3_backtrack(
    instance: Instance,
    edges: SparseEdgeSet,
    cfg: PipelineConfig,
    ctx: PipelineContext,
) -> tuple[SparseEdgeSet, dict]:
    """Backtrack refutation in snapshot rounds until fixpoint."""

    def serial(instance, edges, deltas, index, cfg, edge_list):
        return _step3_chunk(
            instance, edges, deltas, index, cfg.margin,
            cfg.witness_count, cfg.search, edge_list,
        )

    def methods_of(item):
        return "backtrack" if item[2] == USELESS else None

    return _run_rounds(
        instance, edges, cfg, ctx, serial, _step3_worker,
        {"search": cfg.search}, methods_of,
    )


def run(
    instance: Instance, cfg: PipelineConfig | None = None, keep_intermediate: bool = False
):
    """Run the configured steps; returns (edge set, stats) and, when
    requested, the per-step intermediate edge sets."""
    cfg = cfg or PipelineConfig()
    ctx = PipelineContext(instance, cfg.margin)
    n = instance.n
    stats = RunStats(
        name=instance.name,
        n=n,
        m_input=n * (n - 1) // 2,
        l_min_le_1=ctx.deltas.min_rounded <= 1,
    )
    intermediates = {}
    edges = None
    methods = {}

    if 1 in cfg.steps:
        t0 = time.perf_counter()
        edges, m1 = step1_fast(instance, cfg, ctx)
        stats.step1_seconds = time.perf_counter() - t0
        for k, v in m1.items():
            methods[k] = methods.get(k, 0) + v
    if edges is None:
        edges = SparseEdgeSet.complete(n)
    stats.step1_edges = edges.m
    intermediates["step1"] = edges

    if 2 in cfg.steps:
        t0 = time.perf_counter()
        edges, m2 = step2_direct(instance, edges, cfg, ctx)
        stats.step2_seconds = time.perf_counter() - t0
        for k, v in m2.items():
            methods[k] = methods.get(k, 0) + v
    stats.step2_edges = edges.m
    intermediates["step2"] = edges

    if 3 in cfg.steps:
        t0 = time.perf_counter()
        edges, m3 = step3_backtrack(instance, edges, cfg, ctx)
        stats.step3_seconds = time.perf_counter() - t0
        for k, v in m3.items():
            methods[k] = methods.get(k, 0) + v
    stats.step3_edges = edges.m
    intermediates["step3"] = edges

    stats.methods = methods
    stats.ratio = edges.m / n
    if keep_intermediate:
        return edges, stats, intermediates
    return edges, stats
