"""Rounded and Euclidean distances, clearance radii, and triangle angles.

The clearance radius ``delta_r`` of a vertex is the largest radius we can
certify to contain no other vertex strictly inside the circle around it,
derived from the rounded distance to the nearest other vertex:

* EUC_2D:  delta_r = min_s l(rs) - 1/2   (l = nearest-integer rounding,
  so |rs| >= l(rs) - 1/2 >= delta_r for every other vertex s)
* CEIL_2D: delta_r = min_s l(rs) - 1     (ceiling rounding only gives
  |rs| > l(rs) - 1; the half-integer radius of the EUC_2D case would
  not be interior-empty)

All arccos arguments are clamped to [-1, 1]: floating point drift at
tangency must degrade gracefully, never crash or flip a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .tsplib import Instance


class DuplicatePoint(ValueError):
    """Two vertices at rounded distance 0; certification geometry degenerates."""


def dist(instance: Instance, u: int, v: int) -> int:
    """Rounded length l(uv), bit-exact per the TSPLIB definition."""
    return instance.dist(u, v)


def euclid(instance: Instance, u: int, v: int) -> float:
    """Exact (double precision) Euclidean distance |uv|."""
    return instance.euclid(u, v)


def clamp(x: float) -> float:
    """Clamp to [-1, 1] for use as an arccos argument."""
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def triangle_angle_cos(a: float, b: float, c: float) -> float:
    """Cosine of the angle opposite side c in a triangle with sides a, b, c.

    Law of cosines, clamped; a and b must be positive.
    """
    return clamp((a * a + b * b - c * c) / (2.0 * a * b))


@dataclass(frozen=True)
class DeltaRadii:
    """Per-vertex clearance radii.

    No vertex other than r lies strictly inside the circle of radius
    ``values[r]`` around r.  ``min_rounded`` is the smallest nearest-
    neighbor rounded distance over all vertices; instances with
    min_rounded <= 1 have degenerate (<= 1/2) radii somewhere and are
    flagged in pipeline stats.
    """

    values: np.ndarray  # float64, exact (halves or integers)
    min_rounded: int

    def __getitem__(self, r: int) -> float:
        return float(self.values[r])


class NeighborIndex:
    """A 2-d tree over the point set with deterministic tie handling.

    Queries return exactly the k nearest vertices to a reference point,
    ordered by (squared distance, vertex index); verified against linear
    scan in the test suite.  Built once, then immutable; concurrent
    reads are safe.
    """

    def __init__(self, coords: np.ndarray):
        self.coords = np.asarray(coords, dtype=np.float64)
        self.n = len(self.coords)
        self.tree = cKDTree(self.coords)

    def _exact_by_ball(self, point, k: int) -> list[int]:
        px, py = float(point[0]), float(point[1])
        d, _ = self.tree.query((px, py), k=min(k, self.n))
        dk = float(np.max(d))
        r = dk * (1.0 + 1e-9) + 1e-9
        cand = self.tree.query_ball_point((px, py), r)
        while len(cand) < k and len(cand) < self.n:
            r = r * 2.0 + 1.0
            cand = self.tree.query_ball_point((px, py), r)
        dx = self.coords[cand, 0] - px
        dy = self.coords[cand, 1] - py
        d2 = dx * dx + dy * dy
        order = sorted(range(len(cand)), key=lambda i: (d2[i], cand[i]))
        return [cand[i] for i in order[:k]]

    def k_nearest(self, point, k: int, exclude=()) -> list[int]:
        """The k nearest vertices to an arbitrary point, ties by index."""
        want = min(k + len(exclude), self.n)
        got = self._exact_by_ball(point, want)
        if exclude:
            got = [v for v in got if v not in exclude]
        return got[:k]

    def k_nearest_block(self, points: np.ndarray, k: int):
        """Vectorized k-nearest for a block of reference points.

        Returns (idx, d2) arrays of shape (len(points), k), padded with
        (-1, inf) when k exceeds n.  Rows whose k-th neighbor is tied
        with an excluded candidate fall back to the exact single query.
        """
        b = len(points)
        kq = min(k + 8, self.n)
        _, idx = self.tree.query(points, k=kq)
        if kq == 1:
            idx = idx[:, None]
        dx = self.coords[idx, 0] - points[:, 0:1]
        dy = self.coords[idx, 1] - points[:, 1:2]
        d2 = dx * dx + dy * dy
        order = np.lexsort((idx, d2), axis=1)
        idx = np.take_along_axis(idx, order, axis=1)
        d2 = np.take_along_axis(d2, order, axis=1)
        if kq >= self.n:
            pad = k - min(k, self.n)
            sel_i, sel_d = idx[:, :k], d2[:, :k]
            if pad > 0:
                sel_i = np.hstack([sel_i, np.full((b, pad), -1, dtype=idx.dtype)])
                sel_d = np.hstack([sel_d, np.full((b, pad), np.inf)])
            return sel_i, sel_d
        # exact unless the k-th selected distance ties the query horizon
        unsafe = d2[:, k - 1] >= d2[:, -1]
        sel_i, sel_d = idx[:, :k].copy(), d2[:, :k].copy()
        for row in np.nonzero(unsafe)[0]:
            exact = self._exact_by_ball(points[row], k)
            sel_i[row] = exact
            ex = self.coords[exact] - points[row]
            sel_d[row] = (ex * ex).sum(axis=1)
        return sel_i, sel_d


def compute_deltas(instance: Instance, index: NeighborIndex | None = None) -> DeltaRadii:
    """Clearance radii for all vertices in O(n log n) via the 2-d tree.

    Raises :class:`DuplicatePoint` when some pair has rounded length 0.
    """
    if index is None:
        index = NeighborIndex(instance.coords)
    d, idx = index.tree.query(instance.coords, k=2)
    nearest = idx[:, 1]
    # rounding is monotone in |.|, so the Euclidean-nearest vertex also
    # minimizes the rounded distance
    lmin = np.empty(instance.n, dtype=np.int64)
    for r in range(instance.n):
        lmin[r] = instance.dist(r, int(nearest[r]))
    if (lmin == 0).any():
        r = int(np.nonzero(lmin == 0)[0][0])
        raise DuplicatePoint(
            f"vertices {r} and {int(nearest[r])} are at rounded distance 0"
        )
    off = 0.5 if instance.mode == "EUC_2D" else 1.0
    values = lmin.astype(np.float64) - off
    return DeltaRadii(values=values, min_rounded=int(lmin.min()))


def cone_half_angles(
    instance: Instance, deltas: DeltaRadii, p: int, q: int, r: int
) -> tuple[float, float]:
    """Opening angles (radians) of the two cones at r for the edge pq.

    alpha_p belongs to the cone of directions whose clearance-circle
    point is at distance >= l_q from q, alpha_q symmetrically.  Callers
    are expected to have checked the circle intersection condition; the
    clamps make tangent and disjoint configurations return 0 or 2*pi
    instead of failing.
    """
    lpq = instance.dist(p, q)
    d_r = deltas[r]
    l_p = d_r + lpq - instance.dist(q, r) - 1.0
    l_q = d_r + lpq - instance.dist(p, r) - 1.0
    rp = instance.euclid(r, p)
    rq = instance.euclid(r, q)
    alpha_p = 2.0 * math.acos(clamp((l_q * l_q - d_r * d_r - rq * rq) / (2.0 * d_r * rq)))
    alpha_q = 2.0 * math.acos(clamp((l_p * l_p - d_r * d_r - rp * rp) / (2.0 * d_r * rp)))
    return alpha_p, alpha_q


def eps_theta_cosines(
    instance: Instance,
    p: int,
    q: int,
    r: int,
    l_p: float,
    l_q: float,
    delta_r: float,
) -> tuple[float, float, float, float]:
    """Cosines of the angles at p and q in the triangles pqr, prt and qrt.

    t is the point at distance delta_r from r and l_p from p (resp. l_q
    from q); eps is the pqr angle, theta the prt/qrt angle.  Requires
    l_p, l_q > 0.
    """
    pq = instance.euclid(p, q)
    pr = instance.euclid(p, r)
    qr = instance.euclid(q, r)
    cos_eps_p = clamp((pq * pq + pr * pr - qr * qr) / (2.0 * pq * pr))
    cos_eps_q = clamp((pq * pq + qr * qr - pr * pr) / (2.0 * pq * qr))
    cos_theta_p = clamp((l_p * l_p + pr * pr - delta_r * delta_r) / (2.0 * l_p * pr))
    cos_theta_q = clamp((l_q * l_q + qr * qr - delta_r * delta_r) / (2.0 * l_q * qr))
    return cos_eps_p, cos_eps_q, cos_theta_p, cos_theta_q
