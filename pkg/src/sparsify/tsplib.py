"""TSPLIB instance parsing and sparse edge set I/O.

Supports the NODE_COORD_SECTION subset of TSPLIB with EDGE_WEIGHT_TYPE
EUC_2D or CEIL_2D.  Vertex indices are 1-based in files and 0-based
everywhere else in this package.  The edge set format written by
:func:`write_edge_set` is a small header (NAME, DIMENSION, EDGES)
followed by one ``u v w`` line per edge with ``u < v``, sorted by
``(u, v)``; it is byte-deterministic for a given input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_MODES = ("EUC_2D", "CEIL_2D")


class ParseError(ValueError):
    """Malformed or unsupported input text.

    ``line`` is the 1-based line number the problem was detected on,
    or 0 when the problem is not tied to a single line.
    """

    def __init__(self, message: str, line: int = 0):
        self.line = line
        if line:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    """An immutable 2-D point set with a rounded distance mode."""

    name: str
    n: int
    coords: np.ndarray  # shape (n, 2), float64
    mode: str  # "EUC_2D" or "CEIL_2D"

    # plain-float coordinate lists, kept for scalar hot paths
    xs: list = field(repr=False, compare=False, default=None)
    ys: list = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.n < 4:
            raise ParseError(f"instance needs at least 4 vertices, got {self.n}")
        if coords.shape != (self.n, 2):
            raise ParseError(f"expected {self.n} coordinate pairs, got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ParseError("coordinates must be finite")
        if self.mode not in SUPPORTED_MODES:
            raise ParseError(f"unsupported distance mode {self.mode!r}")
        object.__setattr__(self, "xs", coords[:, 0].tolist())
        object.__setattr__(self, "ys", coords[:, 1].tolist())

    def dist(self, u: int, v: int) -> int:
        """Rounded length l(uv) per the TSPLIB definition of the mode."""
        if u == v:
            return 0
        dx = self.xs[u] - self.xs[v]
        dy = self.ys[u] - self.ys[v]
        d = math.sqrt(dx * dx + dy * dy)
        if self.mode == "EUC_2D":
            return int(d + 0.5)
        return math.ceil(d)

    def euclid(self, u: int, v: int) -> float:
        dx = self.xs[u] - self.xs[v]
        dy = self.ys[u] - self.ys[v]
        return math.sqrt(dx * dx + dy * dy)

    def distance_matrix(self) -> np.ndarray:
        """Full rounded distance matrix (int64).  O(n^2) memory."""
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        if self.mode == "EUC_2D":
            m = np.floor(d + 0.5).astype(np.int64)
        else:
            m = np.ceil(d).astype(np.int64)
        np.fill_diagonal(m, 0)
        return m


@dataclass(frozen=True)
class SparseEdgeSet:
    """A symmetric loop-free edge set over vertices 0..n-1."""

    n: int
    adj: tuple  # tuple of n sorted tuples of neighbor indices

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    @staticmethod
    def from_edges(n: int, edges) -> "SparseEdgeSet":
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"vertex index out of range in edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return SparseEdgeSet(n, tuple(tuple(sorted(s)) for s in nbrs))

    @staticmethod
    def complete(n: int) -> "SparseEdgeSet":
        return SparseEdgeSet(
            n, tuple(tuple(v for v in range(n) if v != u) for u in range(n))
        )

    def edges(self):
        """All edges as (u, v) with u < v, in sorted order."""
        for u in range(self.n):
            for v in self.adj[u]:
                if v > u:
                    yield (u, v)

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adj[u]
        lo, hi = 0, len(a)
        while lo < hi:
            mid = (lo + hi) // 2
            if a[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(a) and a[lo] == v

    def without(self, removed) -> "SparseEdgeSet":
        """A new set with the given (u, v) edges removed."""
        gone = set()
        for u, v in removed:
            gone.add((u, v) if u < v else (v, u))
        return SparseEdgeSet.from_edges(
            self.n, (e for e in self.edges() if e not in gone)
        )


def _header_value(line: str) -> str:
    return line.split(":", 1)[1].strip() if ":" in line else ""


def parse_instance(text: str) -> Instance:
    """Parse TSPLIB file contents into an :class:`Instance`.

    Raises :class:`ParseError` (with a line number) on unsupported
    EDGE_WEIGHT_TYPE, missing sections, DIMENSION < 4, or malformed
    coordinate lines.
    """
    name = ""
    dimension = None
    mode = None
    coords = {}
    lines = text.splitlines()
    i = 0
    saw_coord_section = False
    while i < len(lines):
        raw = lines[i]
        i += 1
        s = raw.strip()
        if not s:
            continue
        key = s.split(":", 1)[0].strip().upper()
        if key == "NAME":
            name = _header_value(s)
        elif key == "DIMENSION":
            try:
                dimension = int(_header_value(s))
            except ValueError:
                raise ParseError(f"bad DIMENSION value {_header_value(s)!r}", i)
            if dimension < 4:
                raise ParseError(f"DIMENSION must be at least 4, got {dimension}", i)
        elif key == "EDGE_WEIGHT_TYPE":
            mode = _header_value(s).upper()
            if mode not in SUPPORTED_MODES:
                raise ParseError(f"unsupported distance mode {mode!r}", i)
        elif key == "NODE_COORD_SECTION":
            if dimension is None:
                raise ParseError("DIMENSION must appear before NODE_COORD_SECTION", i)
            saw_coord_section = True
            for _ in range(dimension):
                if i >= len(lines):
                    raise ParseError("unexpected end of file in NODE_COORD_SECTION", i)
                row = lines[i].strip()
                i += 1
                parts = row.split()
                if len(parts) < 3:
                    raise ParseError(f"malformed coordinate line {row!r}", i)
                try:
                    idx = int(parts[0])
                    x = float(parts[1])
                    y = float(parts[2])
                except ValueError:
                    raise ParseError(f"malformed coordinate line {row!r}", i)
                if not (1 <= idx <= dimension):
                    raise ParseError(f"vertex index {idx} out of range 1..{dimension}", i)
                if idx in coords:
                    raise ParseError(f"duplicate vertex index {idx}", i)
                coords[idx] = (x, y)
        elif key == "EOF":
            break
        # other headers (TYPE, COMMENT, ...) are ignored

    if mode is None:
        raise ParseError("missing EDGE_WEIGHT_TYPE header")
    if dimension is None:
        raise ParseError("missing DIMENSION header")
    if not saw_coord_section:
        raise ParseError("missing NODE_COORD_SECTION")
    arr = np.array([coords[k] for k in range(1, dimension + 1)], dtype=np.float64)
    return Instance(name=name, n=dimension, coords=arr, mode=mode)


def write_edge_set(instance: Instance, edges: SparseEdgeSet) -> str:
    """Serialize an edge set; inverse of :func:`parse_edge_set`."""
    if edges.n != instance.n:
        raise ValueError(f"edge set has n={edges.n}, instance has n={instance.n}")
    out = [
        f"NAME : {instance.name}",
        f"DIMENSION : {instance.n}",
        f"EDGES : {edges.m}",
    ]
    for u, v in edges.edges():
        out.append(f"{u + 1} {v + 1} {instance.dist(u, v)}")
    out.append("")
    return "\n".join(out)


def parse_edge_set(text: str) -> SparseEdgeSet:
    """Parse the edge set format produced by :func:`write_edge_set`."""
    n = None
    m = None
    pairs = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s:
            continue
        key = s.split(":", 1)[0].strip().upper()
        if key == "NAME":
            continue
        if key == "DIMENSION":
            try:
                n = int(_header_value(s))
            except ValueError:
                raise ParseError(f"bad DIMENSION value {_header_value(s)!r}", lineno)
            continue
        if key == "EDGES":
            try:
                m = int(_header_value(s))
            except ValueError:
                raise ParseError(f"bad EDGES value {_header_value(s)!r}", lineno)
            continue
        if key == "EOF":
            break
        parts = s.split()
        if len(parts) != 3:
            raise ParseError(f"malformed edge line {s!r}", lineno)
        if n is None:
            raise ParseError("edge line before DIMENSION header", lineno)
        try:
            u, v, _w = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError(f"malformed edge line {s!r}", lineno)
        if not (1 <= u <= n and 1 <= v <= n):
            raise ParseError(f"vertex index out of range in edge {u} {v}", lineno)
        if u == v:
            raise ParseError(f"self loop {u} {v}", lineno)
        canon = (min(u, v), max(u, v))
        if canon in seen:
            raise ParseError(f"duplicate edge {u} {v}", lineno)
        seen.add(canon)
        pairs.append((u - 1, v - 1))
    if n is None:
        raise ParseError("missing DIMENSION header")
    if m is not None and m != len(pairs):
        raise ParseError(f"EDGES header says {m}, found {len(pairs)} edges")
    return SparseEdgeSet.from_edges(n, pairs)
