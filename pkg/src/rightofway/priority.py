"""Priority graphs over conflicting robot pairs, and what they permit.

A priority graph orients every conflicting robot pair: the edge (i, j)
grants i the right of way over j and forbids the completion of their
collision region in which j has effectively gone first.  This module
answers the structural questions about such graphs:

* which priorities does a given coordination-space path realize
  (:func:`induce_priority_graph`);
* is a graph feasible at all, and with how much room to spare
  (:func:`feasibility_and_margin`, via per-cycle obstruction checks);
* produce a concrete collision-free path realizing a feasible graph
  (:func:`construct_feasible_path`).

Cycle obstruction reduces to a one-dimensional fixed-point scan: the
intersection of the completions around a cycle is non-empty iff some
coordinate t on the start axis satisfies t > H(t), where H chains the
per-edge thresholds around the cycle.  H is non-decreasing and
right-continuous, which bounds the solution set to an explicit interval
and makes the margin bisections below monotone.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import inf
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from . import kernels as K
from .errors import (
    CycleBoundExceededError,
    InsufficientMarginError,
    InvalidCycleError,
    PathInfeasibleError,
    UndeterminedPriorityError,
)
from .geometry import (
    CrossSection,
    in_completed,
    obstacle_bounds,
    pair_key,
    section_index,
    segment_enters_completion,
    segment_hits_region,
    threshold_global,
)

#: Default number of scan samples per cycle axis in obstruction checks.
DEFAULT_GRID = 512

#: Default bound on the number of elementary cycles enumerated.
CYCLE_BOUND = 10000


@dataclass(frozen=True)
class PriorityGraph:
    """Directed graph of right-of-way grants; edge (i, j) means i before j.

    Antisymmetric by construction (at most one orientation per pair) with
    no self-loops.  May be partial: a conflicting pair without an edge is
    simply not yet ordered (the intersection controller grows graphs one
    accepted robot at a time).
    """

    vertices: frozenset
    edges: frozenset

    def __init__(self, vertices: Iterable[int], edges: Iterable[Tuple[int, int]]):
        vs = frozenset(int(v) for v in vertices)
        es = frozenset((int(a), int(b)) for a, b in edges)
        for a, b in es:
            if a == b:
                raise ValueError("self-loop on %r" % a)
            if a not in vs or b not in vs:
                raise ValueError("edge (%r, %r) uses unknown vertex" % (a, b))
            if (b, a) in es:
                raise ValueError("both orientations present for pair (%r, %r)" % (a, b))
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def incoming(self, j: int) -> List[int]:
        return sorted(a for a, b in self.edges if b == j)

    def outgoing(self, i: int) -> List[int]:
        return sorted(b for a, b in self.edges if a == i)

    def is_acyclic(self) -> bool:
        try:
            self.topo_order()
            return True
        except ValueError:
            return False

    def topo_order(self) -> List[int]:
        """Kahn's algorithm with ascending-id tie-breaking (deterministic)."""
        indeg = {v: 0 for v in self.vertices}
        for _, b in self.edges:
            indeg[b] += 1
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order: List[int] = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for w in self.outgoing(v):
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, w)
        if len(order) != len(self.vertices):
            raise ValueError("graph has a cycle")
        return order

    def with_edges(self, new_edges: Iterable[Tuple[int, int]],
                   new_vertices: Iterable[int] = ()) -> "PriorityGraph":
        return PriorityGraph(self.vertices | set(new_vertices),
                             self.edges | set(new_edges))

    def restricted(self, keep: Iterable[int]) -> "PriorityGraph":
        ks = set(keep)
        return PriorityGraph(self.vertices & ks,
                             {(a, b) for a, b in self.edges
                              if a in ks and b in ks})


@dataclass(frozen=True)
class MarginReport:
    """Feasibility verdict for a priority graph plus its signed margin.

    ``margin`` is the largest uniform inflation of the forbidden regions
    that keeps every cycle obstruction empty (capped at ``r_max``); for an
    infeasible graph it is the negated smallest erosion that clears every
    cycle.  ``feasible`` iff margin >= 0.  ``witness`` names one obstructed
    cycle when infeasible.
    """

    feasible: bool
    margin: float
    witness: Optional[Tuple[int, ...]]
    r_max: float
    resolution: float


@dataclass(frozen=True)
class DiscretizedPath:
    """A sampled coordination-space path, componentwise non-decreasing.

    ``ids`` names the robot per column of ``samples`` (shape K x n).
    """

    ids: Tuple[int, ...]
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(self.ids):
            raise ValueError("samples must be K x len(ids)")
        if arr.shape[0] < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(arr, axis=0) < 0.0):
            raise ValueError("samples must be componentwise non-decreasing")
        object.__setattr__(self, "samples", arr)

    def column(self, rid: int) -> int:
        return self.ids.index(rid)

    def configuration(self, k: int) -> Dict[int, float]:
        return {rid: float(self.samples[k, c]) for c, rid in enumerate(self.ids)}


def induce_priority_graph(path: DiscretizedPath,
                          sections: Iterable[CrossSection]) -> PriorityGraph:
    """Read the priorities a collision-free path realizes.

    For each conflicting pair, the path must sweep past the collision
    region on exactly one side: through the completion in which the other
    robot trails.  Hitting the raw region raises ``PathInfeasibleError``;
    a pair whose region the path never commits against raises
    ``UndeterminedPriorityError``.
    """
    idx = section_index(sections)
    cols = {rid: c for c, rid in enumerate(path.ids)}
    edges = []
    for (a, b), cs in sorted(idx.items()):
        if a not in cols or b not in cols:
            continue
        ca, cb = cols[cs.pair[0]], cols[cs.pair[1]]
        saw_first = False   # entered completion where pair[0] wins
        saw_second = False  # entered completion where pair[1] wins
        samples = path.samples
        for k in range(samples.shape[0] - 1):
            p0 = (float(samples[k, ca]), float(samples[k, cb]))
            p1 = (float(samples[k + 1, ca]), float(samples[k + 1, cb]))
            if segment_hits_region(cs, p0, p1):
                raise PathInfeasibleError(
                    "path meets the collision region of pair %r" % (cs.pair,))
            if not saw_first and segment_enters_completion(cs, p0, p1, cs.pair[0]):
                saw_first = True
            if not saw_second and segment_enters_completion(cs, p0, p1, cs.pair[1]):
                saw_second = True
            if saw_first and saw_second:
                break
        if saw_first and saw_second:
            raise PathInfeasibleError(
                "path meets both completions of pair %r" % (cs.pair,))
        if not (saw_first or saw_second):
            raise UndeterminedPriorityError(
                "path leaves pair %r unordered" % (cs.pair,))
        # Visiting the completion where w wins means the OTHER robot has
        # effectively gone first, so the other robot gets the edge.
        if saw_first:
            edges.append((cs.pair[1], cs.pair[0]))
        else:
            edges.append((cs.pair[0], cs.pair[1]))
    return PriorityGraph(path.ids, edges)


def elementary_cycles(g: PriorityGraph, bound: int = CYCLE_BOUND,
                      ) -> List[Tuple[int, ...]]:
    """All elementary cycles, each rotated to start at its smallest vertex,
    sorted by (length, vertex tuple).  Raises when more than ``bound``."""
    dg = nx.DiGraph()
    dg.add_nodes_from(g.vertices)
    dg.add_edges_from(g.edges)
    out = []
    for cyc in nx.simple_cycles(dg):
        k = cyc.index(min(cyc))
        out.append(tuple(cyc[k:] + cyc[:k]))
        if len(out) > bound:
            raise CycleBoundExceededError(
                "more than %d elementary cycles" % bound)
    out.sort(key=lambda c: (len(c), c))
    return out


def _cycle_sections(cycle: Sequence[int],
                    idx: Mapping[Tuple[int, int], CrossSection],
                    ) -> List[Tuple[int, CrossSection]]:
    """Per cycle edge (u -> next), the winner u and the pair's section."""
    n = len(cycle)
    if n < 2 or len(set(cycle)) != n:
        raise InvalidCycleError("not a simple cycle: %r" % (cycle,))
    chain = []
    for k in range(n):
        u = cycle[k]
        v = cycle[(k + 1) % n]
        cs = idx.get(pair_key(u, v))
        if cs is None:
            raise InvalidCycleError(
                "no section for cycle edge (%r, %r)" % (u, v))
        chain.append((u, cs))
    return chain


def cycle_obstruction_check(cycle: Sequence[int],
                            sections: Iterable[CrossSection],
                            r: float = 0.0,
                            grid: int = DEFAULT_GRID) -> bool:
    """Is the r-inflated obstruction of this cycle non-empty?

    The cycle (v0, ..., vk-1) lists priorities around a loop: each edge
    (u -> v) contributes the completion where u wins, whose threshold maps
    a u-coordinate to the v-coordinates inside.  Chaining thresholds around
    the loop gives H; the obstruction is non-empty iff t > H(t) for some t,
    which can only happen inside an explicit interval (above H evaluated at
    a point below all plateaus, below the first section's domain cutoff).
    The interval is grid-scanned from every rotation of the cycle, with one
    refined pass around the best gap before giving up.
    """
    idx = sections if isinstance(sections, dict) else section_index(sections)
    chain = _cycle_sections(cycle, idx)
    n = len(chain)

    def compose(start: int, t: float) -> float:
        for m in range(n):
            w, cs = chain[(start + m) % n]
            t = threshold_global(cs, w, t, r)
            if t == inf:
                return inf
        return t

    for start in range(n):
        w0, cs0 = chain[start]
        lo_b, hi_b = cs0.bounds_for(w0)
        span = (hi_b - lo_b) + abs(r) + 1.0
        probe = lo_b - 10.0 * span
        m0 = compose(start, probe)
        if m0 == inf:
            return False
        cutoff = hi_b + r
        if not (m0 < cutoff):
            return False
        ts = np.linspace(m0, cutoff, grid)
        gaps = np.array([t - compose(start, float(t)) for t in ts])
        best = int(np.argmax(gaps))
        if gaps[best] > K.EPS:
            return True
        # Refine once around the best gap.
        lo_t = ts[max(best - 1, 0)]
        hi_t = ts[min(best + 1, grid - 1)]
        for t in np.linspace(lo_t, hi_t, grid):
            if t - compose(start, float(t)) > K.EPS:
                return True
    return False


def feasibility_and_margin(g: PriorityGraph,
                           sections: Iterable[CrossSection],
                           grid: int = DEFAULT_GRID,
                           r_max: Optional[float] = None,
                           resolution: Optional[float] = None) -> MarginReport:
    """Feasibility of a priority graph and its signed uniform margin.

    Feasible (every cycle obstruction empty): margin is the largest
    inflation r in [0, r_max] under which all stay empty, found by
    bisection to ``resolution`` (default: a thousandth of the largest
    section diameter).  Infeasible: margin is minus the smallest erosion
    restoring emptiness, its search ceiling found by doubling.  Both
    predicates are monotone in r, so bisection is exact up to resolution.
    """
    idx = section_index(sections)
    d_ref = max((cs.diameter for cs in idx.values()), default=1.0)
    if r_max is None:
        r_max = 10.0 * d_ref
    if resolution is None:
        resolution = 1e-3 * d_ref
    cycles = elementary_cycles(g)
    if not cycles:
        return MarginReport(True, r_max, None, r_max, resolution)

    def all_empty(r: float) -> bool:
        return not any(cycle_obstruction_check(c, idx, r, grid) for c in cycles)

    witness = None
    for c in cycles:
        if cycle_obstruction_check(c, idx, 0.0, grid):
            witness = c
            break
    if witness is None:
        lo, hi = 0.0, r_max
        if all_empty(r_max):
            return MarginReport(True, r_max, None, r_max, resolution)
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if all_empty(mid):
                lo = mid
            else:
                hi = mid
        return MarginReport(True, lo, None, r_max, resolution)
    s_hi = resolution
    doublings = 0
    while not all_empty(-s_hi):
        s_hi *= 2.0
        doublings += 1
        if doublings > 64:
            return MarginReport(False, -s_hi, witness, r_max, resolution)
    s_lo = 0.0
    while s_hi - s_lo > resolution:
        mid = 0.5 * (s_lo + s_hi)
        if all_empty(-mid):
            s_hi = mid
        else:
            s_lo = mid
    return MarginReport(False, -s_hi, witness, r_max, resolution)


def local_priority_graph(g: PriorityGraph, x: Mapping[int, float], r: float,
                         sections: Iterable[CrossSection]) -> PriorityGraph:
    """Restriction of g to edges whose forbidden completion is within
    sup-distance r of the configuration x (edge kept iff x lies in the
    r-inflated completion)."""
    idx = sections if isinstance(sections, dict) else section_index(sections)
    kept = []
    for (i, j) in g.edges:
        cs = idx.get(pair_key(i, j))
        if cs is None:
            continue
        p = (x[cs.pair[0]], x[cs.pair[1]])
        if in_completed(cs, p, i, r):
            kept.append((i, j))
    return PriorityGraph(g.vertices, kept)


def construct_feasible_path(g: PriorityGraph,
                            sections: Iterable[CrossSection],
                            step: Optional[float] = None) -> DiscretizedPath:
    """Build a collision-free coordination-space path realizing g.

    Acyclic graphs use a staircase: robots advance one at a time in
    topological order, from a start below every collision region to a goal
    beyond all of them (parked robots sit where no completion can reach).
    Cyclic feasible graphs use a blocked-flow: every robot not currently
    inside an inflated forbidden completion advances one step, which
    terminates because local graphs stay acyclic while the step is below
    the margin.  The result is verified against every edge's completion
    before being returned.
    """
    idx = section_index(sections)
    ids = tuple(sorted(g.vertices))
    cols = {rid: c for c, rid in enumerate(ids)}
    bounds = obstacle_bounds(idx.values())
    d_ref = max((cs.diameter for cs in idx.values()), default=1.0)
    pad = 0.5 * d_ref

    acyclic = g.is_acyclic()
    if acyclic:
        eps = step if step is not None else 0.25 * d_ref
    else:
        report = feasibility_and_margin(g, idx.values())
        if not report.feasible:
            raise InsufficientMarginError(
                "graph is infeasible (margin %.6g, witness %r)"
                % (report.margin, report.witness))
        eps = step if step is not None else 0.5 * report.margin
        if not (eps < report.margin):
            raise InsufficientMarginError(
                "step %.6g needs margin > step, have %.6g"
                % (eps, report.margin))
    if eps <= 0.0:
        raise ValueError("step must be positive")

    start = np.empty(len(ids))
    goal = np.empty(len(ids))
    for rid in ids:
        lo, hi = bounds.get(rid, (0.0, 0.0))
        start[cols[rid]] = lo - pad
        goal[cols[rid]] = hi + pad

    rows = [start.copy()]
    x = start.copy()
    if acyclic:
        for rid in g.topo_order():
            c = cols[rid]
            while x[c] < goal[c]:
                x[c] = min(x[c] + eps, goal[c])
                rows.append(x.copy())
    else:
        max_iters = int(np.sum(np.ceil((goal - start) / eps))) + 1000
        it = 0
        while np.any(x < goal):
            conf = {rid: float(x[cols[rid]]) for rid in ids}
            blocked = {b for (a, b) in
                       local_priority_graph(g, conf, eps, idx).edges}
            moved = False
            for rid in ids:
                c = cols[rid]
                if rid not in blocked and x[c] < goal[c]:
                    x[c] = min(x[c] + eps, goal[c])
                    moved = True
            if not moved or it > max_iters:
                raise InsufficientMarginError(
                    "blocked flow stalled; margin too tight for step %.6g"
                    % eps)
            rows.append(x.copy())
            it += 1

    path = DiscretizedPath(ids, np.array(rows))
    for (i, j) in g.edges:
        cs = idx[pair_key(i, j)]
        ca, cb = cols[cs.pair[0]], cols[cs.pair[1]]
        for k in range(path.samples.shape[0] - 1):
            p0 = (float(path.samples[k, ca]), float(path.samples[k, cb]))
            p1 = (float(path.samples[k + 1, ca]), float(path.samples[k + 1, cb]))
            if segment_enters_completion(cs, p0, p1, i):
                raise RuntimeError(
                    "constructed path violates priority (%r, %r)" % (i, j))
    return path


def parse_graph(text: str) -> PriorityGraph:
    """Parse the line format: 'edge I J' per priority, optional 'vertex I'
    lines for isolated vertices, '#' comments and blank lines ignored."""
    vertices = set()
    edges = set()
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "edge" and len(parts) == 3:
            i, j = int(parts[1]), int(parts[2])
            vertices.update((i, j))
            edges.add((i, j))
        elif parts[0] == "vertex" and len(parts) == 2:
            vertices.add(int(parts[1]))
        else:
            raise ValueError("line %d: expected 'edge I J' or 'vertex I': %r"
                             % (ln, raw))
    return PriorityGraph(vertices, edges)


def serialize_graph(g: PriorityGraph) -> str:
    """Inverse of parse_graph (stable ordering)."""
    lines = ["vertex %d" % v for v in sorted(g.vertices)]
    lines += ["edge %d %d" % e for e in sorted(g.edges)]
    return "\n".join(lines) + "\n"
