"""Coordination-space geometry for disc robots on fixed straight paths.

Each robot moves along a fixed 2-D ray, so its position is one curvilinear
coordinate and the joint configuration of n robots is a point in R^n.  For
every pair of robots whose paths can bring their centres closer than the
disc diameter there is a pairwise collision region: an open, bounded,
convex cross-section in the plane of that pair's coordinates.  Completing
a cross-section in one sweep direction yields the obstacle that a priority
assignment forbids; all of that machinery lives in the kernel layer, and
this module builds sections from path geometry and exposes point/segment
queries against them.

Conventions used throughout:

* a ``Configuration`` is any mapping robot id -> curvilinear position; the
  helpers in this module take explicit coordinate pairs in a section's
  stored axis order.
* local coordinates of a section are ``global - shift`` per axis, with the
  shift placing the origin at the crossing point (crossing paths) or at
  path start (shared path).
* both section kinds are symmetric under swapping their two axes, so a
  single threshold function serves either sweep direction; the constructor
  guarantees this by using equal windows on both axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Mapping, Optional, Tuple

from . import kernels as K
from .errors import InvalidGeometryError

ELLIPSE = K.ELLIPSE
BAND = K.BAND

#: Two lines are treated as parallel below this |cross product| of unit
#: headings (they are unit vectors, so this is sin of the angle).
PARALLEL_TOL = 1e-12

Configuration = Mapping[int, float]


@dataclass(frozen=True)
class PathGeometry:
    """A robot's fixed path: a ray in the plane plus control-area marks.

    ``origin`` is the point at curvilinear coordinate 0 and ``heading`` the
    ray direction in radians within [0, 2*pi).  ``entry_pos``/``exit_pos``
    mark the control area along the path (entry strictly before exit).
    """

    id: int
    origin: Tuple[float, float]
    heading: float
    entry_pos: float
    exit_pos: float

    def __post_init__(self):
        if not (0.0 <= self.heading < 2.0 * math.pi):
            raise InvalidGeometryError(
                "heading must lie in [0, 2*pi): %r" % (self.heading,))
        if not (self.entry_pos < self.exit_pos):
            raise InvalidGeometryError(
                "entry_pos must be smaller than exit_pos")

    @property
    def direction(self) -> Tuple[float, float]:
        return (math.cos(self.heading), math.sin(self.heading))

    def point_at(self, s: float) -> Tuple[float, float]:
        dx, dy = self.direction
        return (self.origin[0] + s * dx, self.origin[1] + s * dy)


@dataclass(frozen=True)
class CrossSection:
    """Pairwise collision region in the coordinate plane of two robots.

    ``pair`` stores the axis order (first axis, second axis) by robot id.
    ``params`` is the flat kernel parameter tuple (q0, q1, q2, e0, e1, e2)
    described in the kernel layer; ``shifts`` maps global coordinates to
    local ones (local = global - shift) and ``bounds`` gives the global
    open interval each axis' region projection occupies.
    """

    pair: Tuple[int, int]
    kind: int
    params: Tuple[float, float, float, float, float, float]
    shifts: Tuple[float, float]
    bounds: Tuple[Tuple[float, float], Tuple[float, float]]

    def axis_of(self, rid: int) -> int:
        if rid == self.pair[0]:
            return 0
        if rid == self.pair[1]:
            return 1
        raise KeyError("robot %r is not part of section %r" % (rid, self.pair))

    def shift_for(self, rid: int) -> float:
        return self.shifts[self.axis_of(rid)]

    def bounds_for(self, rid: int) -> Tuple[float, float]:
        return self.bounds[self.axis_of(rid)]

    def other(self, rid: int) -> int:
        return self.pair[1 - self.axis_of(rid)]

    @property
    def diameter(self) -> float:
        """Characteristic size: disc diameter (ellipse) or band width."""
        if self.kind == ELLIPSE:
            return math.sqrt(self.params[2])
        return self.params[0]

    def with_pair(self, pair: Tuple[int, int]) -> "CrossSection":
        """Same geometry rebound to different robot ids (axis order kept)."""
        return replace(self, pair=(int(pair[0]), int(pair[1])))


def build_cross_section(path_i: PathGeometry, path_j: PathGeometry,
                        diameter: float,
                        pair: Optional[Tuple[int, int]] = None,
                        ) -> Optional[CrossSection]:
    """Build the collision cross-section of two paths for disc robots.

    Returns None when the paths are parallel but not collinear (their
    robots can never collide under the fixed-path assumption).  Crossing
    paths produce an ``ELLIPSE`` section centred on the crossing point;
    a shared line with equal headings produces a ``BAND`` section whose
    window covers both control areas with a 2*diameter pad.  A shared line
    with opposing headings is rejected: one coordinate would have to
    decrease through the conflict, which the model cannot represent.
    """
    if diameter <= 0.0:
        raise InvalidGeometryError("diameter must be positive")
    if pair is None:
        pair = (path_i.id, path_j.id)
    uix, uiy = path_i.direction
    ujx, ujy = path_j.direction
    wx = path_j.origin[0] - path_i.origin[0]
    wy = path_j.origin[1] - path_i.origin[1]
    cross = uix * ujy - uiy * ujx
    dot = uix * ujx + uiy * ujy
    if abs(cross) <= PARALLEL_TOL:
        off = wx * uiy - wy * uix
        scale = 1.0 + abs(wx) + abs(wy)
        if abs(off) > PARALLEL_TOL * scale:
            return None
        if dot < 0.0:
            raise InvalidGeometryError(
                "collinear paths with opposing headings are not supported")
        # Shared line, shared heading: offset of path_j's origin along it.
        c = wx * uix + wy * uiy
        lo = min(path_i.entry_pos, path_j.entry_pos + c) - 2.0 * diameter
        hi = max(path_i.exit_pos, path_j.exit_pos + c) + 2.0 * diameter
        return CrossSection(
            pair=pair,
            kind=BAND,
            params=(diameter, lo, hi, 0.0, 0.0, 0.0),
            shifts=(0.0, -c),
            bounds=((lo, hi), (lo - c, hi - c)),
        )
    s_i = (wx * ujy - wy * ujx) / cross
    s_j = (wx * uiy - wy * uix) / cross
    sin_abs = abs(cross)
    a_max = diameter / sin_abs
    a_star = -diameter * dot / sin_abs
    return CrossSection(
        pair=pair,
        kind=ELLIPSE,
        params=(dot, cross * cross, diameter * diameter,
                a_max, a_star, -a_max),
        shifts=(s_i, s_j),
        bounds=((s_i - a_max, s_i + a_max), (s_j - a_max, s_j + a_max)),
    )


#: Window half-extent used for "unwindowed" band sections; any bound at or
#: beyond FINITE_BOUND (its conservative cut) is treated as infinite.
UNBOUNDED = 1e18
FINITE_BOUND = 1e17


def following_band(diameter: float, pair: Tuple[int, int]) -> CrossSection:
    """Collision section of two robots sharing one path (leader/follower).

    Same-path robots conflict wherever they are, so the band carries no
    window: its threshold is ``x - diameter`` everywhere and never jumps
    to +inf.  Callers treat the sentinel bounds as infinite.
    """
    if diameter <= 0.0:
        raise InvalidGeometryError("diameter must be positive")
    return CrossSection(
        pair=pair,
        kind=BAND,
        params=(diameter, -UNBOUNDED, UNBOUNDED, 0.0, 0.0, 0.0),
        shifts=(0.0, 0.0),
        bounds=((-UNBOUNDED, UNBOUNDED), (-UNBOUNDED, UNBOUNDED)),
    )


def local_point(cs: CrossSection, p: Tuple[float, float]) -> Tuple[float, float]:
    """Global (first-axis, second-axis) coordinates -> local section coords."""
    return (p[0] - cs.shifts[0], p[1] - cs.shifts[1])


def contains(cs: CrossSection, p: Tuple[float, float]) -> bool:
    """Is configuration projection ``p`` (pair axis order) in the region?"""
    a, b = local_point(cs, p)
    return K.raw_member(cs.kind, *cs.params[:3], a, b)


def in_completed(cs: CrossSection, p: Tuple[float, float], winner: int,
                 r: float = 0.0) -> bool:
    """Membership of ``p`` in the completion where ``winner`` has priority.

    The completion for winner w against loser l is the region swept by
    quadrant (-e_w, +e_l): some region point q has q_w >= p_w and
    q_l <= p_l.  ``p`` is given in the section's stored axis order and
    ``r`` inflates (r > 0) or erodes (r < 0) the completion.
    """
    a, b = local_point(cs, p)
    if cs.axis_of(winner) == 0:
        return K.completion_member(cs.kind, *cs.params, a, b, r)
    return K.completion_member(cs.kind, *cs.params, b, a, r)


def threshold_global(cs: CrossSection, winner: int, x: float,
                     r: float = 0.0) -> float:
    """Completion threshold in global coordinates.

    Given the winner's global position ``x``, returns the loser-axis global
    position strictly above which a configuration lies in the r-inflated
    completion of ``winner``; +inf when no position does.
    """
    wa = cs.axis_of(winner)
    h = K.threshold(cs.kind, *cs.params, x - cs.shifts[wa], r)
    if h == math.inf:
        return math.inf
    return h + cs.shifts[1 - wa]


def segment_enters_completion(cs: CrossSection, p0: Tuple[float, float],
                              p1: Tuple[float, float], winner: int) -> bool:
    """Does the straight segment p0 -> p1 meet the winner's completion?

    Both endpoints are in the section's axis order, and each coordinate
    must be non-decreasing from p0 to p1 (robots only move forward).
    """
    a0, b0 = local_point(cs, p0)
    a1, b1 = local_point(cs, p1)
    if cs.axis_of(winner) == 0:
        return K.segment_enters(cs.kind, *cs.params, a0, a1 - a0, b0, b1 - b0)
    return K.segment_enters(cs.kind, *cs.params, b0, b1 - b0, a0, a1 - a0)


def segment_hits_region(cs: CrossSection, p0: Tuple[float, float],
                        p1: Tuple[float, float]) -> bool:
    """Does the straight segment p0 -> p1 meet the raw collision region?"""
    a0, b0 = local_point(cs, p0)
    a1, b1 = local_point(cs, p1)
    return K.segment_hits_raw(cs.kind, *cs.params[:3], a0, a1 - a0, b0, b1 - b0)


def obstacle_bounds(sections: Iterable[CrossSection],
                    ) -> Dict[int, Tuple[float, float]]:
    """Per-robot global interval spanned by its collision regions.

    Robots not appearing in any section are simply absent; callers use
    ``bounds.get(i, (-inf, inf))`` when a sentinel is needed.
    """
    out: Dict[int, Tuple[float, float]] = {}
    for cs in sections:
        for rid in cs.pair:
            lo, hi = cs.bounds_for(rid)
            cur = out.get(rid)
            if cur is None:
                out[rid] = (lo, hi)
            else:
                out[rid] = (min(cur[0], lo), max(cur[1], hi))
    return out


def section_index(sections: Iterable[CrossSection],
                  ) -> Dict[Tuple[int, int], CrossSection]:
    """Index sections by unordered robot pair (key: sorted id tuple)."""
    idx: Dict[Tuple[int, int], CrossSection] = {}
    for cs in sections:
        a, b = cs.pair
        if a == b:
            raise InvalidGeometryError("section pairs two equal robot ids")
        key = (a, b) if a < b else (b, a)
        if key in idx:
            raise InvalidGeometryError("duplicate section for pair %r" % (key,))
        idx[key] = cs
    return idx


def pair_key(i: int, j: int) -> Tuple[int, int]:
    return (i, j) if i < j else (j, i)
