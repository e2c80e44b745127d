"""Independent test oracles.

Everything here re-derives expected values from first principles --
Euclidean distances between disc centers, brute-force grid scans, fine-step
numeric integration, literal enumeration -- and never imports the
library's kernel layer (neither the compiled extension nor its pure
fallback), so agreement between library and oracle is meaningful.

Conventions shared with the library (these are the *problem statement*,
not implementation choices): robots are discs of equal diameter D whose
centers ride straight rays; a pair collides when center distance < D; the
completion in which robot w has right of way over robot l is the
collision region swept backward along w's axis and forward along l's
axis; inflating a completion by r means dilating it with the radius-r
infinity-norm ball.

A lemma used throughout: because a completion is closed under decreasing
the winner coordinate and increasing the loser coordinate, a point p lies
in the r-dilated completion iff the shifted point (p_w - r, p_l + r) lies
in the completion itself.  (Take a completion point c within the r-box of
p; then (min(c_w, p_w), max(c_l, p_l)) is also in the completion and is
dominated by the shifted point.  The converse direction is immediate.)
Erosion is the same formula with r < 0.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

Ray = Tuple[Tuple[float, float], float]      # (origin, heading radians)


def center(ray: Ray, s: float) -> Tuple[float, float]:
    (ox, oy), h = ray
    return (ox + s * math.cos(h), oy + s * math.sin(h))


def disc_distance(ray_a: Ray, ray_b: Ray, a: float, b: float) -> float:
    pa, pb = center(ray_a, a), center(ray_b, b)
    return math.hypot(pa[0] - pb[0], pa[1] - pb[1])


def discs_collide(ray_a: Ray, ray_b: Ray, a: float, b: float,
                  diameter: float) -> bool:
    return disc_distance(ray_a, ray_b, a, b) < diameter


def crossing_coords(ray_a: Ray, ray_b: Ray) -> Optional[Tuple[float, float]]:
    """Path coordinates (a*, b*) where the two rays' lines intersect."""
    (oax, oay), ha = ray_a
    (obx, oby), hb = ray_b
    uax, uay = math.cos(ha), math.sin(ha)
    ubx, uby = math.cos(hb), math.sin(hb)
    det = uax * uby - uay * ubx
    if abs(det) < 1e-12:
        return None
    wx, wy = obx - oax, oby - oay
    return ((wx * uby - wy * ubx) / det, (wx * uay - wy * uax) / det)


class ScanTable:
    """Sampled completion threshold for one ordered pair, from distances.

    Samples the raw collision predicate (disc distance < D) on a square
    grid around the crossing of the two rays, then turns it into the
    completion's lower threshold by a suffix minimum along the winner
    axis: threshold(w) = min loser coordinate over region samples whose
    winner coordinate is >= w (+inf when there are none).

    ``member(w, l, r)`` evaluates r-dilated completion membership via the
    corner lemma from the module docstring.
    """

    def __init__(self, winner_ray: Ray, loser_ray: Ray, diameter: float,
                 samples: int = 1201, span: Optional[float] = None):
        cross = crossing_coords(winner_ray, loser_ray)
        if cross is None:
            raise ValueError("rays do not cross")
        cw, cl = cross
        if span is None:
            # Generous cover of the region: its extent along either axis
            # is at most D / |sin(angle)|; resample wider if unsure.
            (_, ha), (_, hl) = winner_ray, loser_ray
            span = 1.2 * diameter / max(abs(math.sin(ha - hl)), 1e-6)
        self.w_axis = np.linspace(cw - span, cw + span, samples)
        self.l_axis = np.linspace(cl - span, cl + span, samples)
        wox, woy = winner_ray[0]
        lox, loy = loser_ray[0]
        wdx, wdy = math.cos(winner_ray[1]), math.sin(winner_ray[1])
        ldx, ldy = math.cos(loser_ray[1]), math.sin(loser_ray[1])
        wx = wox + self.w_axis * wdx
        wy = woy + self.w_axis * wdy
        lx = lox + self.l_axis * ldx
        ly = loy + self.l_axis * ldy
        dist2 = ((wx[:, None] - lx[None, :]) ** 2
                 + (wy[:, None] - ly[None, :]) ** 2)
        mask = dist2 < diameter * diameter
        line_min = np.where(mask.any(axis=1),
                            np.where(mask, self.l_axis[None, :],
                                     np.inf).min(axis=1),
                            np.inf)
        self._suffix = np.minimum.accumulate(line_min[::-1])[::-1]
        self._region_any = bool(mask.any())

    def threshold(self, w: float) -> float:
        """Min loser coordinate of region samples at/above w; +inf if none."""
        k = int(np.searchsorted(self.w_axis, w, side="left"))
        if k >= len(self.w_axis):
            return math.inf
        return float(self._suffix[k])

    def member(self, w: float, l: float, r: float = 0.0) -> bool:
        return (l + r) > self.threshold(w - r)

    def window(self) -> Tuple[float, float]:
        """Winner-axis interval where the sampled region exists."""
        finite = np.isfinite(self._suffix)
        if not finite.any():
            return (math.inf, -math.inf)
        idx = np.nonzero(finite)[0]
        return (float(self.w_axis[idx[0]]), float(self.w_axis[idx[-1]]))


# ---------------------------------------------------------------------------
# Second-order slot dynamics by fine-step integration
# ---------------------------------------------------------------------------


def integrate_slot(x: float, v: float, u: float, v_max: float,
                   dv: float = 0.0, du: float = 0.0,
                   steps: int = 20000) -> Tuple[float, float]:
    """One unit time slot of the clamped double integrator, numerically.

    Speed integrates u + du and clamps to [0, v_max]; position integrates
    the clamped speed, plus the drift dv per unit time while the speed
    sits at the v_max clamp.  Midpoint rule on the speed keeps the
    position error O(dt^2) away from the clamp switches.
    """
    dt = 1.0 / steps
    a = u + du
    for _ in range(steps):
        v2 = min(max(v + a * dt, 0.0), v_max)
        vmid = 0.5 * (v + v2)
        x += vmid * dt
        if v2 >= v_max and a >= 0.0:
            x += dv * dt
        v = v2
    return x, v


def integrate_brake_rest(x: float, v: float, v_max: float, u_min: float,
                         dv: float = 0.0, du: float = 0.0,
                         max_slots: int = 200) -> float:
    """Rest position under constant max braking, numerically."""
    for _ in range(max_slots):
        if v <= 0.0:
            return x
        x, v = integrate_slot(x, v, u_min, v_max, dv, du, steps=4000)
    raise AssertionError("did not come to rest within %d slots" % max_slots)


# ---------------------------------------------------------------------------
# Literal enumeration of binary speed controls
# ---------------------------------------------------------------------------


def all_binary_controls(n: int, horizon: int):
    """Every per-slot 0/1 choice matrix, shape horizon x n (lists)."""
    for bits in itertools.product((0, 1), repeat=n * horizon):
        yield [list(bits[k * n:(k + 1) * n]) for k in range(horizon)]


def enumerate_admissible_counts(
        n: int, horizon: int,
        step_ok) -> List[List[Tuple[int, ...]]]:
    """Count-vector sequences of every admissible binary control.

    ``step_ok(cur, nxt)`` judges one slot's move between count vectors.
    Returns one count-sequence (length horizon+1, starting at zeros) per
    admissible control.  Exponential in n * horizon by design -- callers
    keep instances tiny.
    """
    out = []
    for ctrl in all_binary_controls(n, horizon):
        counts = [tuple([0] * n)]
        ok = True
        for move in ctrl:
            nxt = tuple(c + m for c, m in zip(counts[-1], move))
            if not step_ok(counts[-1], nxt):
                ok = False
                break
            counts.append(nxt)
        if ok:
            out.append(counts)
    return out


# ---------------------------------------------------------------------------
# Monotone staircase feasibility with inflation, from distances
# ---------------------------------------------------------------------------


def staircase_feasible(rays: Mapping[int, Ray], diameter: float,
                       edges: Iterable[Tuple[int, int]], r: float,
                       cells: int = 48) -> bool:
    """Is there a monotone grid path respecting all r-dilated completions?

    Builds a distance ScanTable per priority edge, lays a lattice over
    every robot's conflict span (padded by one region extent plus |r|),
    marks lattice points admissible when no edge's dilated completion
    contains them, and runs a vectorized monotone-reachability fixpoint
    from everybody-before to everybody-past.
    """
    ids = sorted(rays)
    edges = sorted(edges)
    tables: Dict[Tuple[int, int], ScanTable] = {}
    for (w, l) in edges:
        tables[(w, l)] = ScanTable(rays[w], rays[l], diameter)
    lo: Dict[int, float] = {}
    hi: Dict[int, float] = {}
    for i in ids:
        spans = []
        for (w, l), tab in tables.items():
            if i == w:
                win = tab.window()
            elif i == l:
                fin = tab._suffix[np.isfinite(tab._suffix)]
                win = ((float(fin.min()), float(fin.max()))
                       if len(fin) else (math.inf, -math.inf))
            else:
                continue
            if win[0] <= win[1]:
                spans.append(win)
        if not spans:
            lo[i], hi[i] = 0.0, 1.0
            continue
        pad = max(b - a for a, b in spans) + abs(r) + diameter
        lo[i] = min(a for a, _ in spans) - pad
        hi[i] = max(b for _, b in spans) + pad
    axes = {i: np.linspace(lo[i], hi[i], cells + 1) for i in ids}
    pos = {i: c for c, i in enumerate(ids)}
    shape = tuple([cells + 1] * len(ids))
    admissible = np.ones(shape, dtype=bool)
    for (w, l), tab in tables.items():
        # 2-D membership table on this pair's axes, broadcast to the lattice.
        member = np.empty((cells + 1, cells + 1), dtype=bool)
        for a, wv in enumerate(axes[w]):
            thr = tab.threshold(wv - r)
            member[a, :] = (axes[l] + r) > thr
        # Align the table's (winner, loser) axes with the lattice's axis
        # order before broadcasting.
        if pos[w] > pos[l]:
            member = member.T
        sl = [None] * len(ids)
        sl[pos[w]] = slice(None)
        sl[pos[l]] = slice(None)
        admissible &= ~member[tuple(sl)]
    reach = np.zeros(shape, dtype=bool)
    if not admissible[(0,) * len(ids)]:
        return False
    reach[(0,) * len(ids)] = True
    goal = tuple([cells] * len(ids))
    while True:
        grown = reach.copy()
        for ax in range(len(ids)):
            shifted = np.zeros(shape, dtype=bool)
            src = [slice(None)] * len(ids)
            dst = [slice(None)] * len(ids)
            src[ax] = slice(0, cells)
            dst[ax] = slice(1, cells + 1)
            shifted[tuple(dst)] = reach[tuple(src)]
            grown |= shifted
        grown &= admissible
        if grown[goal]:
            return True
        if (grown == reach).all():
            return False
        reach = grown


def margin_scan(rays: Mapping[int, Ray], diameter: float,
                edges: Iterable[Tuple[int, int]],
                lo: float = -6.0, hi: float = 6.0, tol: float = 0.05,
                cells: int = 48) -> float:
    """Signed staircase margin by bisection over the inflation radius.

    Largest r in [lo, hi] with a feasible staircase under r-dilated
    completions (negative when only erosion restores feasibility).
    Assumes feasibility is monotone decreasing in r, which it is: dilated
    completions only grow with r.
    """
    edges = sorted(edges)
    if staircase_feasible(rays, diameter, edges, hi, cells):
        return hi
    if not staircase_feasible(rays, diameter, edges, lo, cells):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if staircase_feasible(rays, diameter, edges, mid, cells):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
