"""Priority-preserving control laws.

Given a priority graph, each robot with an incoming edge must never let
the joint state enter the completion in which the other robot has gone
first.  The laws here are maximal within that constraint:

* :func:`velocity_law` (first-order model) -- each robot moves at top
  speed unless doing so this slot would drive some pair into a forbidden
  completion, in which case it stops.  Evaluated in topological priority
  order so a yielding robot knows the decision of every robot it yields
  to; with a feasible cyclic graph the order comes from the acyclic local
  graph at the graph's margin radius.

* :func:`acceleration_law` (second-order model) -- each robot applies max
  throttle unless the worst case (itself under impulse control, every
  robot it yields to under max brake) would enter a forbidden completion,
  in which case it applies max brake.  Braking is then always admissible
  (:func:`is_brake_safe` is invariant under the law), which is what makes
  unexpected braking safe at any time.

* :func:`nd_law` -- the same rule evaluated on state boxes: the yielding
  robot from its most advanced corner under the most helping disturbance,
  the prioritary robot from its least advanced corner under the most
  hindering one.

All pairwise checks use the staggered slot-corner test from the kernel
layer, which over-approximates the continuous within-slot motion.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional, Tuple

from . import kernels as K
from .errors import PriorityViolatedError, UnsupportedPrioritiesError
from .geometry import (
    CrossSection,
    in_completed,
    pair_key,
    section_index,
    segment_enters_completion,
)
from .motion import NDState, RobotLimits, State, stop_horizon
from .priority import PriorityGraph, feasibility_and_margin, local_priority_graph

ControlDecision = Dict[int, float]

ZERO_D = (0.0, 0.0)


def _index(sections) -> Mapping[Tuple[int, int], CrossSection]:
    return sections if isinstance(sections, dict) else section_index(sections)


def worst_pair_clear(cs: CrossSection, yielder: int, ys: State,
                     ylim: RobotLimits, winner: int, ws: State,
                     wlim: RobotLimits, impulse: bool,
                     yd: Tuple[float, float] = ZERO_D,
                     wd: Tuple[float, float] = ZERO_D) -> bool:
    """Worst-case pairwise clearance of the completion ``winner`` owns.

    The yielding robot follows impulse control (or brakes throughout when
    ``impulse`` is false), the prioritary robot brakes throughout; both
    under the given constant per-slot disturbances.  True iff the
    staggered flow never enters the completion.
    """
    ai = ys.x - cs.shift_for(yielder)
    bj = ws.x - cs.shift_for(winner)
    horizon = max(stop_horizon(ylim, yd[1]), stop_horizon(wlim, wd[1])) + 1
    return K.pair_worst_clear(
        cs.kind, *cs.params, impulse,
        ai, ys.v, ylim.v_max, ylim.u_max, ylim.u_min, yd[0], yd[1],
        bj, ws.v, wlim.v_max, wlim.u_min, wd[0], wd[1], horizon)


def _check_not_violated(x: Mapping[int, float], g: PriorityGraph,
                        idx: Mapping[Tuple[int, int], CrossSection]):
    for (i, j) in sorted(g.edges):
        cs = idx.get(pair_key(i, j))
        if cs is None or cs.pair[0] not in x or cs.pair[1] not in x:
            continue
        p = (x[cs.pair[0]], x[cs.pair[1]])
        if in_completed(cs, p, i):
            raise PriorityViolatedError(
                "configuration already inside the completion of (%r, %r)"
                % (i, j))


def velocity_law(x: Mapping[int, float], g: PriorityGraph, sections,
                 v_max: Mapping[int, float],
                 margin: Optional[float] = None) -> ControlDecision:
    """Optimal priority-preserving per-slot speeds (first-order model).

    Robot i stops this slot iff, for some robot j it yields to, the joint
    segment of this slot's motion (i at full speed, j at its own already
    decided speed) meets the completion where j wins; otherwise it runs at
    v_max[i].  Cyclic feasible graphs are served through the local graph
    at the margin radius, which is acyclic provided every speed is at most
    the margin (otherwise ``UnsupportedPrioritiesError``).
    """
    idx = _index(sections)
    _check_not_violated(x, g, idx)
    sub = g.restricted(x.keys())
    if sub.is_acyclic():
        order = sub.topo_order()
        edges = sub.edges
    else:
        if margin is None:
            report = feasibility_and_margin(g, idx.values())
            if not report.feasible:
                raise UnsupportedPrioritiesError(
                    "infeasible priority graph (margin %.6g)" % report.margin)
            margin = report.margin
        if max(v_max[i] for i in x) > margin:
            raise UnsupportedPrioritiesError(
                "cyclic graph needs top speeds at most the margin %.6g"
                % margin)
        local = local_priority_graph(sub, x, margin, idx)
        order = local.topo_order()
        edges = local.edges
    f: ControlDecision = {}
    for i in order:
        stop = False
        for j in sorted(a for (a, b) in edges if b == i):
            cs = idx[pair_key(i, j)]
            di = {i: v_max[i], j: f[j]}
            p0 = (x[cs.pair[0]], x[cs.pair[1]])
            p1 = (p0[0] + di.get(cs.pair[0], 0.0),
                  p0[1] + di.get(cs.pair[1], 0.0))
            if segment_enters_completion(cs, p0, p1, j):
                stop = True
                break
        f[i] = 0.0 if stop else v_max[i]
    return {i: f[i] for i in x}


def acceleration_law(states: Mapping[int, State], g: PriorityGraph, sections,
                     limits: Mapping[int, RobotLimits]) -> ControlDecision:
    """Bang-bang priority-preserving accelerations (second-order model).

    Robot i brakes iff for some robot j it yields to, the worst case --
    i under impulse control, j braking -- would enter the completion
    where j wins; otherwise it applies max throttle.  Decentralized: each
    robot's command depends only on current states and its incoming edges.
    """
    idx = _index(sections)
    out: ControlDecision = {}
    for i in sorted(states):
        lim_i = limits[i]
        u = lim_i.u_max
        for j in g.incoming(i):
            if j not in states:
                continue
            cs = idx.get(pair_key(i, j))
            if cs is None:
                continue
            if not worst_pair_clear(cs, i, states[i], lim_i,
                                    j, states[j], limits[j], True):
                u = lim_i.u_min
                break
        out[i] = u
    return out


def is_brake_safe(states: Mapping[int, State], g: PriorityGraph, sections,
                  limits: Mapping[int, RobotLimits]) -> bool:
    """Would simultaneous max braking of everyone preserve all priorities?

    This is the safety certificate the admission policies maintain: it
    holds initially for each accepted robot and the acceleration law keeps
    it invariant, so braking is admissible at any time.
    """
    idx = _index(sections)
    for (j, i) in sorted(g.edges):
        if i not in states or j not in states:
            continue
        cs = idx.get(pair_key(i, j))
        if cs is None:
            continue
        if not worst_pair_clear(cs, i, states[i], limits[i],
                                j, states[j], limits[j], False):
            return False
    return True


def nd_law(boxes: Mapping[int, NDState], g: PriorityGraph, sections,
           limits: Mapping[int, RobotLimits]) -> ControlDecision:
    """The acceleration law evaluated on state boxes (worst corners).

    The yielding robot is taken at its most advanced corner under its most
    helping disturbance bound; each robot it yields to at its least
    advanced corner under its most hindering bound.  Sound whenever every
    true state lies in its box.
    """
    idx = _index(sections)
    out: ControlDecision = {}
    for i in sorted(boxes):
        lim_i = limits[i]
        u = lim_i.u_max
        for j in g.incoming(i):
            if j not in boxes:
                continue
            cs = idx.get(pair_key(i, j))
            if cs is None:
                continue
            if not worst_pair_clear(cs, i, boxes[i].hi, lim_i,
                                    j, boxes[j].lo, limits[j], True,
                                    yd=lim_i.d_hi, wd=limits[j].d_lo):
                u = lim_i.u_min
                break
        out[i] = u
    return out


def is_brake_safe_nd(boxes: Mapping[int, NDState], g: PriorityGraph, sections,
                     limits: Mapping[int, RobotLimits]) -> bool:
    """Box-level brake safety under worst-case disturbances."""
    idx = _index(sections)
    for (j, i) in sorted(g.edges):
        if i not in boxes or j not in boxes:
            continue
        cs = idx.get(pair_key(i, j))
        if cs is None:
            continue
        if not worst_pair_clear(cs, i, boxes[i].hi, limits[i],
                                j, boxes[j].lo, limits[j], False,
                                yd=limits[i].d_hi, wd=limits[j].d_lo):
            return False
    return True
