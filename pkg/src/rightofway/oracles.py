"""Brute-force verification oracles.

Slow, simple, independent re-derivations of two library results, used by
the command line's ``oracle-*`` subcommands and by the test suite:

* **speed-profile optimality** -- on the first-order model every control
  is a per-slot binary choice (hold or advance at top speed), so the set
  of positions an admissible control can reach by slot k is a finite
  lattice level.  :func:`check_optimality` builds those levels by
  exhaustive breadth-first expansion -- equivalent to enumerating all
  ``2^(n*K)`` control sequences, because a step's admissibility depends
  only on the configuration it starts from -- and then asserts that the
  closed-loop speed law weakly dominates every level componentwise, as an
  exact integer comparison.  A failure is returned with a concrete
  counterexample control sequence.

* **priority-graph feasibility** -- :func:`grid_feasibility` searches for
  a monotone staircase path through a grid over the coordination space.
  Cell admissibility is decided by scanning the *raw* pairwise collision
  inequalities on a fine grid and sweeping them into completion
  thresholds numerically, sharing no code with the closed-form kernel
  thresholds the analytic :func:`~rightofway.priority.feasibility_and_margin`
  uses.  Verdict agreement between the two is the property under test.

Both oracles refuse instances beyond their exponential comfort zone with
an explicit bound message (``OracleBoundError``).
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .control import velocity_law
from .errors import RightOfWayError
from .geometry import (CrossSection, ELLIPSE, FINITE_BOUND, PathGeometry,
                       build_cross_section, pair_key,
                       segment_enters_completion)
from .priority import PriorityGraph, feasibility_and_margin, MarginReport

MAX_ORACLE_ROBOTS = 3
MAX_ORACLE_HORIZON = 12
MAX_GRID_ROBOTS = 4


class OracleBoundError(RightOfWayError):
    """An oracle instance exceeds the supported brute-force bounds."""


# ---------------------------------------------------------------------------
# Speed-profile optimality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimalityInstance:
    """A small first-order coordination problem for the optimality oracle.

    ``start`` maps robot id to its initial path coordinate, ``v_max`` to
    its top speed; over ``horizon`` slots every robot either holds or
    advances one full ``v_max`` step, and the admissible controls are the
    binary sequences whose motion never crosses a completion forbidden by
    ``graph``.
    """

    graph: PriorityGraph
    sections: Tuple[CrossSection, ...]
    start: Mapping[int, float]
    v_max: Mapping[int, float]
    horizon: int

    def __post_init__(self):
        n = len(self.graph.vertices)
        if n > MAX_ORACLE_ROBOTS:
            raise OracleBoundError(
                "optimality oracle supports at most %d robots, got %d: the "
                "enumeration is exponential in robots x horizon"
                % (MAX_ORACLE_ROBOTS, n))
        if self.horizon > MAX_ORACLE_HORIZON:
            raise OracleBoundError(
                "optimality oracle supports horizons up to %d, got %d"
                % (MAX_ORACLE_HORIZON, self.horizon))
        if sorted(self.start) != sorted(self.graph.vertices):
            raise ValueError("start must cover exactly the graph vertices")


@dataclass(frozen=True)
class OptimalityReport:
    """Outcome of one optimality check.

    ``passed`` is True when the law's counts weakly dominate every
    admissible control's counts at every slot.  On failure ``robot``,
    ``slot``, ``law_counts`` and ``counterexample`` (per-slot 0/1 moves of
    one admissible control that beats the law on that robot/slot) are
    filled in.
    """

    passed: bool
    instances: int = 1
    robot: Optional[int] = None
    slot: Optional[int] = None
    law_counts: Optional[Tuple[Tuple[int, ...], ...]] = None
    counterexample: Optional[Tuple[Tuple[int, ...], ...]] = None
    reason: str = ""


def _positions(ids: Sequence[int], counts: Sequence[int],
               start: Mapping[int, float],
               v_max: Mapping[int, float]) -> Dict[int, float]:
    return {i: start[i] + counts[c] * v_max[i] for c, i in enumerate(ids)}


def _step_admissible(inst: OptimalityInstance, ids: Sequence[int],
                     cur: Sequence[int], nxt: Sequence[int]) -> bool:
    """May an admissible control move the lattice point cur -> nxt?

    True iff for every priority edge the straight coordination-space
    segment avoids the completion the edge forbids.
    """
    p0 = _positions(ids, cur, inst.start, inst.v_max)
    p1 = _positions(ids, nxt, inst.start, inst.v_max)
    for cs in inst.sections:
        a, b = cs.pair
        if inst.graph.has_edge(a, b):
            winner = a
        elif inst.graph.has_edge(b, a):
            winner = b
        else:
            continue
        if segment_enters_completion(cs, (p0[a], p0[b]), (p1[a], p1[b]),
                                     winner):
            return False
    return True


def reachable_levels(inst: OptimalityInstance
                     ) -> List[Dict[Tuple[int, ...], Tuple[int, ...]]]:
    """Admissible step-count vectors per slot, with back-pointers.

    ``levels[k]`` maps every count vector some admissible control reaches
    at slot k to the count vector it came from (for counterexample
    reconstruction).  Level 0 contains only the all-zero vector.
    """
    ids = sorted(inst.graph.vertices)
    n = len(ids)
    moves = [tuple((m >> b) & 1 for b in range(n)) for m in range(1, 2 ** n)]
    levels: List[Dict[Tuple[int, ...], Tuple[int, ...]]] = [
        {tuple([0] * n): tuple([0] * n)}]
    for _ in range(inst.horizon):
        cur = levels[-1]
        nxt: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
        for m in cur:
            nxt.setdefault(m, m)  # the all-hold move is always admissible
            for mv in moves:
                m2 = tuple(a + b for a, b in zip(m, mv))
                if m2 in nxt:
                    continue
                if _step_admissible(inst, ids, m, m2):
                    nxt[m2] = m
        levels.append(nxt)
    return levels


def law_counts(inst: OptimalityInstance,
               law: Callable = velocity_law) -> List[Tuple[int, ...]]:
    """Closed-loop step counts of a speed law on the instance.

    The law is called with the current configuration each slot and any
    strictly positive returned speed counts as one full step (the shipped
    law only ever returns 0 or the robot's top speed).
    """
    ids = sorted(inst.graph.vertices)
    counts = [0] * len(ids)
    out = [tuple(counts)]
    for _ in range(inst.horizon):
        x = _positions(ids, counts, inst.start, inst.v_max)
        decision = law(x, inst.graph, inst.sections, inst.v_max)
        counts = [c + (1 if decision[i] > 0.0 else 0)
                  for c, i in zip(counts, ids)]
        out.append(tuple(counts))
    return out


def _reconstruct(levels, k: int, m: Tuple[int, ...]) -> Tuple[Tuple[int, ...], ...]:
    """Count-vector sequence of one admissible control reaching m at slot k."""
    seq = [m]
    for lvl in range(k, 0, -1):
        m = levels[lvl][m]
        seq.append(m)
    seq.reverse()
    return tuple(seq)


def check_optimality(inst: OptimalityInstance,
                     law: Callable = velocity_law) -> OptimalityReport:
    """Does the law componentwise dominate every admissible control?

    Exact integer comparison on step counts: for every robot i and slot k
    the law's count must be >= the count of *every* admissible control,
    equivalently >= the maximum over the slot-k reachable level.  Also
    verifies the law's own trajectory is admissible under the same
    segment test.
    """
    ids = sorted(inst.graph.vertices)
    lc = law_counts(inst, law)
    for k in range(inst.horizon):
        if not _step_admissible(inst, ids, lc[k], lc[k + 1]):
            return OptimalityReport(
                passed=False, robot=None, slot=k + 1,
                law_counts=tuple(lc),
                reason="law step %d -> %d enters a forbidden completion"
                       % (k, k + 1))
    levels = reachable_levels(inst)
    for k in range(1, inst.horizon + 1):
        for c, i in enumerate(ids):
            best = max(m[c] for m in levels[k])
            if lc[k][c] < best:
                m_best = max(levels[k], key=lambda m: m[c])
                return OptimalityReport(
                    passed=False, robot=i, slot=k, law_counts=tuple(lc),
                    counterexample=_reconstruct(levels, k, m_best),
                    reason="an admissible control reaches count %d on robot "
                           "%d at slot %d, the law only %d"
                           % (best, i, k, lc[k][c]))
    return OptimalityReport(passed=True)


def random_instance(n: int, seed: int,
                    horizon: int = MAX_ORACLE_HORIZON,
                    diameter: float = 2.0) -> OptimalityInstance:
    """A randomized n-robot crossing instance with an acyclic graph.

    All paths run through one shared focus point so every pair conflicts;
    crossing distances, headings, start offsets and the priority order are
    drawn from ``seed``.  Starts are early enough to be outside every
    completion and late enough that the conflict is reachable within the
    horizon.
    """
    if n > MAX_ORACLE_ROBOTS:
        raise OracleBoundError(
            "optimality oracle supports at most %d robots, got %d"
            % (MAX_ORACLE_ROBOTS, n))
    rng = random.Random(seed)
    focus = (rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0))
    while True:
        headings = [rng.uniform(0.0, 2.0 * math.pi) for _ in range(n)]
        ok = all(abs(math.sin(headings[a] - headings[b])) >= 0.34
                 for a in range(n) for b in range(a + 1, n))
        if ok:
            break
    cross_at = [rng.uniform(8.0, 12.0) for _ in range(n)]
    geoms = []
    for k in range(n):
        dx, dy = math.cos(headings[k]), math.sin(headings[k])
        origin = (focus[0] - cross_at[k] * dx, focus[1] - cross_at[k] * dy)
        geoms.append(PathGeometry(
            id=k + 1, origin=origin, heading=headings[k] % (2.0 * math.pi),
            entry_pos=0.0, exit_pos=2.0 * cross_at[k]))
    sections = []
    for a in range(n):
        for b in range(a + 1, n):
            cs = build_cross_section(geoms[a], geoms[b], diameter)
            assert cs is not None  # non-parallel by the heading filter
            sections.append(cs)
    order = list(range(1, n + 1))
    rng.shuffle(order)
    rank = {i: order.index(i) for i in order}
    edges = []
    for cs in sections:
        a, b = cs.pair
        edges.append((a, b) if rank[a] < rank[b] else (b, a))
    start = {k + 1: rng.uniform(0.0, 1.5) for k in range(n)}
    v_max = {k + 1: 1.0 for k in range(n)}
    return OptimalityInstance(
        graph=PriorityGraph(range(1, n + 1), edges),
        sections=tuple(sections), start=start, v_max=v_max, horizon=horizon)


def optimality_batch(two: int = 20, three: int = 10, one: int = 0,
                     horizon: int = MAX_ORACLE_HORIZON, seed: int = 0,
                     law: Callable = velocity_law) -> OptimalityReport:
    """Randomized batch: ``two`` 2-robot and ``three`` 3-robot instances.

    Stops at the first failing instance and returns its report; otherwise
    reports the total number of instances that passed.
    """
    count = 0
    for n, batch in ((1, one), (2, two), (3, three)):
        for k in range(batch):
            inst = random_instance(n, seed=seed * 100003 + n * 1009 + k,
                                   horizon=horizon)
            rep = check_optimality(inst, law)
            if not rep.passed:
                return rep
            count += 1
    return OptimalityReport(passed=True, instances=count)


# ---------------------------------------------------------------------------
# Grid feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridFeasibilityReport:
    """Verdict of the staircase search plus the analytic verdict."""

    grid_feasible: bool
    analytic: MarginReport
    cells: int
    visited: int

    @property
    def agree(self) -> bool:
        return self.grid_feasible == self.analytic.feasible


class _SweptTable:
    """Numeric completion threshold for one section, one winner axis.

    Built by scanning the raw collision inequality on a fine local grid:
    the completion of the winner is the region swept backward along the
    winner axis and forward along the loser axis, so its lower threshold
    at winner coordinate w is the minimum loser coordinate among raw
    region samples at or beyond w.  Everything here works on the sampled
    inequality only -- no closed-form threshold involved.
    """

    def __init__(self, cs: CrossSection, winner: int, samples: int = 801):
        wa = cs.axis_of(winner)
        la = 1 - wa
        if cs.kind == ELLIPSE:  # two crossing straight paths
            ext = cs.params[3]          # local half-extent of the region
            lo, hi = -ext, ext
        else:                   # band section (shared lane), finite window
            lo, hi = cs.params[1], cs.params[2]
            if not (-FINITE_BOUND < lo and hi < FINITE_BOUND):
                raise OracleBoundError(
                    "grid oracle needs a finite section window; pair %r has "
                    "an unbounded band" % (cs.pair,))
        axis = np.linspace(lo, hi, samples)
        aa, bb = np.meshgrid(axis, axis, indexing="ij")  # aa: axis 0 coord
        if cs.kind == ELLIPSE:
            q0, q2 = cs.params[0], cs.params[2]
            mask = aa * aa + bb * bb - 2.0 * q0 * aa * bb < q2
        else:
            width = cs.params[0]
            mask = (np.abs(aa - bb) < width) & (aa > lo) & (aa < hi) \
                & (bb > lo) & (bb < hi)
        l_grid = bb if wa == 0 else aa
        # Minimum loser coordinate per winner grid line (+inf where that
        # line misses the region), then suffix-minimum over ascending
        # winner coordinate: the swept completion's threshold, sampled.
        line_min = np.where(mask.any(axis=la),
                            np.where(mask, l_grid, np.inf).min(axis=la),
                            np.inf)
        self._axis = axis
        self._suffix = np.minimum.accumulate(line_min[::-1])[::-1]
        self._w_shift = cs.shifts[wa]
        self._l_shift = cs.shifts[la]

    def member(self, w_global: float, l_global: float) -> bool:
        w = w_global - self._w_shift
        k = int(np.searchsorted(self._axis, w, side="left"))
        if k >= len(self._axis):
            return False
        return (l_global - self._l_shift) > float(self._suffix[k])


def grid_feasibility(graph: PriorityGraph,
                     sections: Sequence[CrossSection],
                     cells: int = 32) -> GridFeasibilityReport:
    """Monotone staircase search versus the analytic feasibility verdict.

    Lays a ``cells+1``-point grid over every robot's coordinate range
    (section extents padded by one region size), then breadth-first
    searches monotone one-axis steps from everybody-before to
    everybody-past.  A grid point is admissible when no priority edge's
    completion (per the scanned tables) contains it.  Because every
    completion is monotone along both axes, a step between two admissible
    grid points cannot cross a completion, so reaching the goal certifies
    a feasible staircase at grid resolution; exhausting the lattice
    certifies infeasibility at that resolution.
    """
    ids = sorted(graph.vertices)
    n = len(ids)
    if n > MAX_GRID_ROBOTS:
        raise OracleBoundError(
            "grid oracle supports at most %d robots, got %d: the lattice is "
            "exponential in robots" % (MAX_GRID_ROBOTS, n))
    idx = {cs.pair: cs for cs in sections}
    lo: Dict[int, float] = {}
    hi: Dict[int, float] = {}
    for i in ids:
        los, his, pads = [], [], []
        for cs in sections:
            if i not in cs.pair:
                continue
            b = cs.bounds_for(i)
            if not (-FINITE_BOUND < b[0] and b[1] < FINITE_BOUND):
                raise OracleBoundError(
                    "grid oracle needs finite section windows; pair %r is "
                    "unbounded on robot %d's axis" % (cs.pair, i))
            los.append(b[0])
            his.append(b[1])
            pads.append(b[1] - b[0])
        if not los:   # unconstrained robot: any fixed spot will do
            los, his, pads = [0.0], [1.0], [1.0]
        pad = 0.5 * max(pads)
        lo[i], hi[i] = min(los) - pad, max(his) + pad
    axes = {i: np.linspace(lo[i], hi[i], cells + 1) for i in ids}
    tables: List[Tuple[int, int, _SweptTable]] = []
    for (a, b) in sorted(graph.edges):
        cs = idx.get(pair_key(a, b))
        if cs is not None:
            tables.append((a, b, _SweptTable(cs, winner=a)))

    pos = {i: c for c, i in enumerate(ids)}

    def admissible(pt: Tuple[int, ...]) -> bool:
        for (a, b, table) in tables:
            if table.member(axes[a][pt[pos[a]]], axes[b][pt[pos[b]]]):
                return False
        return True

    start = tuple([0] * n)
    goal = tuple([cells] * n)
    if not admissible(start):
        return GridFeasibilityReport(False, _analytic(graph, sections),
                                     cells, 0)
    seen = {start}
    queue = deque([start])
    visited = 0
    found = False
    while queue:
        pt = queue.popleft()
        visited += 1
        if pt == goal:
            found = True
            break
        for c in range(n):
            if pt[c] == cells:
                continue
            nxt = pt[:c] + (pt[c] + 1,) + pt[c + 1:]
            if nxt not in seen and admissible(nxt):
                seen.add(nxt)
                queue.append(nxt)
    return GridFeasibilityReport(found, _analytic(graph, sections),
                                 cells, visited)


def _analytic(graph: PriorityGraph,
              sections: Sequence[CrossSection]) -> MarginReport:
    return feasibility_and_margin(graph, sections)
