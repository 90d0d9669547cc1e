"""Constant-time certification of potential points.

For an edge pq and a third vertex r, the compatible neighbors of r all
project (at clearance radius delta_r) into two cones around r.  If the
minimum angle any tour containing pq can realize at r exceeds both cone
opening angles, r's tour neighbors cannot both fall in one cone; r is
then *strongly potential* and constant-time lower bounds on the
edge-exchange minima are available from the cone arc endpoints.  The
quadratic certifier proves the same cover property by checking one
3-opt inequality per same-cone neighbor pair instead, in O(|R|^2).

Every strict inequality that ultimately licenses an elimination is
taken with a conservative margin so floating point error can only cause
missed eliminations, never unsound ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .compat import compatible
from .geometry import DeltaRadii, clamp, eps_theta_cosines
from .tsplib import Instance, SparseEdgeSet

DEFAULT_MARGIN = 1e-6

REJECT_NO_CIRCLE_INTERSECTION = "no_circle_intersection"
REJECT_GAMMA_TOO_SMALL = "gamma_too_small"
REJECT_TILDE_FAILED = "tilde_failed"
REJECT_ANGLE_SUM_FAILED = "angle_sum_failed"
REJECT_NEITHER_CONE = "neither_cone"
REJECT_QUADRATIC_VIOLATION = "quadratic_violation"


@dataclass(frozen=True)
class Rejection:
    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True)
class ConeMembership:
    in_p: bool
    in_q: bool

    @property
    def neither(self) -> bool:
        return not (self.in_p or self.in_q)

    @property
    def both(self) -> bool:
        return self.in_p and self.in_q


@dataclass(frozen=True)
class ConeCover:
    """Geometric certificate data for a fixed (edge pq, vertex r)."""

    p: int
    q: int
    r: int
    delta_r: float
    l_p: float
    l_q: float
    alpha_p: float  # radians
    alpha_q: float
    gamma_r: float
    max_px: float  # upper bound on max |p x_r| over the p-cone
    max_qy: float
    circle_intersection_ok: bool
    tilde_ok: bool
    angle_sum_ok: bool
    strongly_potential: bool


@dataclass(frozen=True)
class PotentialPoint:
    """A certified vertex with lower bounds on the main-theorem minima.

    ``bound_p`` lower-bounds min over the p-cone of l(rx) - l(px), and
    ``bound_q`` the symmetric q-cone minimum.  ``exact`` marks bounds
    obtained by enumeration rather than the constant-time estimate.
    """

    vertex: int
    cover: ConeCover
    bound_p: float
    bound_q: float
    exact: bool = False

    def __bool__(self):
        return True


def circle_intersection_ok(l_p: float, l_q: float, l_pq: int) -> bool:
    """Existence condition for the two cones (all values exact halves)."""
    return l_p + l_q >= l_pq - 0.5


def gamma_r(l_p: float, l_q: float, l_pq: int, delta_r: float) -> float:
    """Minimum angle (radians) between the tour edges at r in any
    optimum tour containing pq, given the circle intersection condition."""
    chord = l_p + l_q - l_pq + 0.5
    return math.acos(clamp(1.0 - (chord * chord) / (2.0 * delta_r * delta_r)))


def cone_lengths(instance: Instance, deltas: DeltaRadii, p: int, q: int, r: int):
    """(l_p, l_q, l_pq, delta_r) for the cone construction at r."""
    l_pq = instance.dist(p, q)
    d_r = deltas[r]
    l_p = d_r + l_pq - instance.dist(q, r) - 1.0
    l_q = d_r + l_pq - instance.dist(p, r) - 1.0
    return l_p, l_q, l_pq, d_r


def _membership(
    instance: Instance,
    r: int,
    delta_r: float,
    l_p: float,
    l_q: float,
    p: int,
    q: int,
    s: int,
    margin: float,
) -> ConeMembership:
    xs, ys = instance.xs, instance.ys
    ux = xs[s] - xs[r]
    uy = ys[s] - ys[r]
    d = math.sqrt(ux * ux + uy * uy)
    sx = xs[r] + delta_r * ux / d
    sy = ys[r] + delta_r * uy / d
    dqs = math.hypot(sx - xs[q], sy - ys[q])
    dps = math.hypot(sx - xs[p], sy - ys[p])
    # inclusive memberships: a point within margin of a cone boundary
    # counts as inside, so "neither" stays a strict, safe verdict
    return ConeMembership(in_p=dqs >= l_q - margin, in_q=dps >= l_p - margin)


def in_cone(
    instance: Instance,
    deltas: DeltaRadii,
    p: int,
    q: int,
    r: int,
    s: int,
    margin: float = DEFAULT_MARGIN,
) -> ConeMembership:
    """Membership of s in the two cones of (pq, r).

    A ``neither`` verdict certifies that pq and rs are incompatible.
    """
    if r == p or r == q or s == r:
        raise ValueError("need r outside pq and s != r")
    l_p, l_q, _, d_r = cone_lengths(instance, deltas, p, q, r)
    return _membership(instance, r, d_r, l_p, l_q, p, q, s, margin)


def cover_membership(
    instance: Instance, cover: ConeCover, s: int, margin: float = DEFAULT_MARGIN
) -> ConeMembership:
    """Membership test reusing an existing cover's cone data."""
    return _membership(
        instance, cover.r, cover.delta_r, cover.l_p, cover.l_q,
        cover.p, cover.q, s, margin,
    )


def certify_strong(
    instance: Instance,
    deltas: DeltaRadii,
    p: int,
    q: int,
    r: int,
    margin: float = DEFAULT_MARGIN,
):
    """Constant-time strong-potentiality certificate for r w.r.t. pq.

    Returns a :class:`PotentialPoint` or a :class:`Rejection` with
    reason no_circle_intersection, gamma_too_small, tilde_failed or
    angle_sum_failed.  The closed-form arc maxima are only derived
    under the tilde and angle-sum conditions; when they fail we reject
    rather than estimate by other means (the quadratic certifier is the
    fallback).
    """
    if r == p or r == q:
        raise ValueError("r must differ from both edge endpoints")
    l_p, l_q, l_pq, d_r = cone_lengths(instance, deltas, p, q, r)
    if d_r <= 0.0 or l_p <= 0.0 or l_q <= 0.0:
        return Rejection(REJECT_NO_CIRCLE_INTERSECTION)
    if not circle_intersection_ok(l_p, l_q, l_pq):
        return Rejection(REJECT_NO_CIRCLE_INTERSECTION)

    rp = instance.euclid(r, p)
    rq = instance.euclid(r, q)
    gam = gamma_r(l_p, l_q, l_pq, d_r)
    alpha_p = 2.0 * math.acos(clamp((l_q * l_q - d_r * d_r - rq * rq) / (2.0 * d_r * rq)))
    alpha_q = 2.0 * math.acos(clamp((l_p * l_p - d_r * d_r - rp * rp) / (2.0 * d_r * rp)))
    if not gam > max(alpha_p, alpha_q) + margin:
        return Rejection(REJECT_GAMMA_TOO_SMALL)

    pq = instance.euclid(p, q)
    cos_eps_p, cos_eps_q, cos_theta_p, cos_theta_q = eps_theta_cosines(
        instance, p, q, r, l_p, l_q, d_r
    )
    # farthest circle points must stay inside the opposite cone circles
    lhs_q = ((rq + d_r) ** 2 + pq * pq - l_p * l_p) / (2.0 * (rq + d_r) * pq)
    lhs_p = ((rp + d_r) ** 2 + pq * pq - l_q * l_q) / (2.0 * (rp + d_r) * pq)
    if not (lhs_q <= cos_eps_q - margin and lhs_p <= cos_eps_p - margin):
        return Rejection(REJECT_TILDE_FAILED)
    if not (cos_eps_p + cos_theta_p >= margin and cos_eps_q + cos_theta_q >= margin):
        return Rejection(REJECT_ANGLE_SUM_FAILED)

    sin_eps_p = math.sqrt(max(0.0, 1.0 - cos_eps_p * cos_eps_p))
    sin_eps_q = math.sqrt(max(0.0, 1.0 - cos_eps_q * cos_eps_q))
    sin_theta_p = math.sqrt(max(0.0, 1.0 - cos_theta_p * cos_theta_p))
    sin_theta_q = math.sqrt(max(0.0, 1.0 - cos_theta_q * cos_theta_q))
    cos_sum_q = cos_eps_q * cos_theta_q - sin_eps_q * sin_theta_q
    cos_sum_p = cos_eps_p * cos_theta_p - sin_eps_p * sin_theta_p
    max_px = math.sqrt(max(0.0, pq * pq + l_q * l_q - 2.0 * pq * l_q * cos_sum_q))
    max_qy = math.sqrt(max(0.0, pq * pq + l_p * l_p - 2.0 * pq * l_p * cos_sum_p))

    cover = ConeCover(
        p=p, q=q, r=r, delta_r=d_r, l_p=l_p, l_q=l_q,
        alpha_p=alpha_p, alpha_q=alpha_q, gamma_r=gam,
        max_px=max_px, max_qy=max_qy,
        circle_intersection_ok=True, tilde_ok=True, angle_sum_ok=True,
        strongly_potential=True,
    )
    return PotentialPoint(
        vertex=r, cover=cover,
        bound_p=d_r - 1.0 - max_px, bound_q=d_r - 1.0 - max_qy,
    )


def certify_quadratic(
    instance: Instance,
    edges: SparseEdgeSet,
    deltas: DeltaRadii,
    p: int,
    q: int,
    r: int,
    margin: float = DEFAULT_MARGIN,
):
    """Exact potentiality certificate by enumerating the compatible
    neighbors of r and checking the 3-opt inequality within each cone.

    O(|R|^2); returns exact minima as bounds on success.  Pairs equal
    to {p, q} are exempt: they would force a 3-cycle through r and are
    unrealizable in any tour on more than three vertices.
    """
    if r == p or r == q:
        raise ValueError("r must differ from both edge endpoints")
    l_p, l_q, l_pq, d_r = cone_lengths(instance, deltas, p, q, r)
    members = [
        x for x in edges.adj[r] if compatible(instance, (p, q), (r, x))
    ]
    cover = ConeCover(
        p=p, q=q, r=r, delta_r=d_r, l_p=l_p, l_q=l_q,
        alpha_p=math.nan, alpha_q=math.nan, gamma_r=math.nan,
        max_px=math.inf, max_qy=math.inf,
        circle_intersection_ok=circle_intersection_ok(l_p, l_q, l_pq),
        tilde_ok=False, angle_sum_ok=False, strongly_potential=False,
    )
    if not members:
        return PotentialPoint(
            vertex=r, cover=cover, bound_p=math.inf, bound_q=math.inf, exact=True
        )
    if d_r <= 0.0:
        return Rejection(REJECT_NO_CIRCLE_INTERSECTION)

    dist = instance.dist
    mems = [
        _membership(instance, r, d_r, l_p, l_q, p, q, x, margin) for x in members
    ]
    if any(m.neither for m in mems):
        # cannot happen for truly compatible neighbors; reject defensively
        return Rejection(REJECT_NEITHER_CONE)
    l_pr = dist(p, r)
    l_rq = dist(r, q)
    for cone in ("p", "q"):
        grp = [x for x, m in zip(members, mems) if (m.in_p if cone == "p" else m.in_q)]
        for i in range(len(grp)):
            for j in range(i + 1, len(grp)):
                x, y = grp[i], grp[j]
                if (x == p and y == q) or (x == q and y == p):
                    continue
                if not (
                    l_pq + dist(r, x) + dist(r, y)
                    > l_pr + l_rq + dist(x, y) + margin
                ):
                    return Rejection(REJECT_QUADRATIC_VIOLATION)
    bound_p = min(
        (dist(r, x) - dist(p, x) for x, m in zip(members, mems) if m.in_p),
        default=math.inf,
    )
    bound_q = min(
        (dist(r, y) - dist(q, y) for y, m in zip(members, mems) if m.in_q),
        default=math.inf,
    )
    return PotentialPoint(
        vertex=r, cover=cover, bound_p=bound_p, bound_q=bound_q, exact=True
    )
