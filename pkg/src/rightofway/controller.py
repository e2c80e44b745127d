"""The intersection controller: who may enter the control area, and when.

Robots request entry just before they would otherwise have to brake for
the entry line.  The controller admits each robot with lowest priority:
acceptance adds one edge from every already accepted conflicting robot to
the newcomer, so the graph stays acyclic by construction.  Two admission
policies decide whether "lowest priority" is currently livable:

* exact -- simulate the future: the requester at constant max throttle,
  the accepted robots closed-loop under the acceleration law.  Accept iff
  at every simulated slot the requester could still brake out of every
  conflict (the same worst-case impulse-vs-brake test the law uses).
  Sound and complete for that reference future, but quadratic-ish.

* heuristic -- time-of-arrival comparison: accept iff the requester (at
  max throttle) reaches each shared crossing no earlier than the last
  accepted robot of that path leaves it.  Cheap; every accept is then
  post-validated with the brake-safety certificate and demoted to a
  reject if it fails.

Two fairness/stability mechanisms sit on top and never touch the graph:
an anti-starvation lock (when a robot's waiting cost exceeds a threshold
the controller only serves it and non-conflicting paths until it gets in)
and an optional back-pressure phase (periodically restrict admission to
the path group with the longer queues when the imbalance is large).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Set, Tuple

from . import kernels as K
from .control import is_brake_safe, is_brake_safe_nd, worst_pair_clear
from .geometry import (CrossSection, ELLIPSE, FINITE_BOUND, UNBOUNDED,
                       pair_key)
from .motion import NDState, RobotLimits, State, stop_horizon
from .priority import PriorityGraph


@dataclass(frozen=True)
class ControllerConfig:
    policy: str = "exact"              # "exact" | "heuristic"
    locking: bool = True
    lock_coef: float = 1.0
    lock_power: float = 2.0
    lock_threshold: float = 2500.0
    backpressure: bool = False
    period: int = 100
    imbalance_limit: float = 30.0


@dataclass(frozen=True)
class EntryRequest:
    robot: int
    path: int
    state: State                        # point state (box mean in ND mode)
    box: Optional[NDState] = None
    slot: int = 0


@dataclass
class AdmissionContext:
    """Everything about the world the admission policies may look at."""

    states: Mapping[int, State]                       # accepted robots
    limits: Mapping[int, RobotLimits]                 # accepted + requester
    sections: Mapping[Tuple[int, int], CrossSection]  # accepted + requester
    boxes: Optional[Mapping[int, NDState]] = None     # ND mode only


@dataclass
class ControllerState:
    """Mutable controller bookkeeping across slots."""

    config: ControllerConfig
    phase_groups: Mapping[int, int] = field(default_factory=dict)
    graph: PriorityGraph = field(default_factory=lambda: PriorityGraph((), ()))
    accepted: Set[int] = field(default_factory=set)
    queues: Dict[int, int] = field(default_factory=dict)
    generated: Dict[int, int] = field(default_factory=dict)
    phase: str = "all"
    lock: Optional[Tuple[int, int]] = None            # (robot, path)
    first_request: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    robot_path: Dict[int, int] = field(default_factory=dict)
    accept_order: Dict[int, int] = field(default_factory=dict)
    _accept_counter: int = 0
    _pred_cache: Optional[List[Dict[int, State]]] = None
    _pred_key: Tuple[int, int] = (-1, -1)             # (slot, accept counter)

    def note_spawn(self, path: int, robot: Optional[int] = None):
        self.queues[path] = self.queues.get(path, 0) + 1
        self.generated[path] = self.generated.get(path, 0) + 1
        if robot is not None:
            self.robot_path[robot] = path

    def note_exit(self, robot: int):
        self.accepted.discard(robot)
        if robot in self.graph.vertices:
            self.graph = self.graph.restricted(self.accepted)
        self.accept_order.pop(robot, None)
        self.robot_path.pop(robot, None)

    def note_request(self, robot: int, path: int, slot: int):
        if robot not in self.first_request:
            self.first_request[robot] = (slot, path)
        self.robot_path.setdefault(robot, path)

    def wait_of(self, robot: int, slot: int) -> int:
        rec = self.first_request.get(robot)
        return 0 if rec is None else slot - rec[0]

    def _apply_accept(self, req: EntryRequest, edges):
        self.accepted.add(req.robot)
        self.graph = self.graph.with_edges(edges, [req.robot])
        self.queues[req.path] = self.queues.get(req.path, 0) - 1
        self.first_request.pop(req.robot, None)
        self._accept_counter += 1
        self.accept_order[req.robot] = self._accept_counter
        if self.lock is not None and self.lock[0] == req.robot:
            self.lock = None


def tick_phase_and_locks(ctrl: ControllerState, slot: int):
    """Per-slot controller upkeep (before requests are processed).

    Every ``period`` slots the back-pressure phase is recomputed from the
    queue imbalance between the two path groups (a tie keeps serving
    everyone).  Independently, the longest-waiting robot locks the
    controller once its waiting cost passes the threshold.
    """
    cfg = ctrl.config
    if cfg.backpressure and slot % cfg.period == 0:
        q1 = sum(q for p, q in ctrl.queues.items()
                 if ctrl.phase_groups.get(p, 0) == 1)
        q2 = sum(q for p, q in ctrl.queues.items()
                 if ctrl.phase_groups.get(p, 0) == 2)
        dq = q1 - q2
        if dq >= cfg.imbalance_limit:
            ctrl.phase = "p1"
        elif -dq > cfg.imbalance_limit:
            ctrl.phase = "p2"
        else:
            ctrl.phase = "all"
    if cfg.locking and ctrl.lock is None:
        best = None
        for robot, (since, path) in sorted(ctrl.first_request.items()):
            wait = slot - since
            cost = cfg.lock_coef * (float(wait) ** cfg.lock_power)
            if cost > cfg.lock_threshold and (best is None or cost > best[0]):
                best = (cost, robot, path)
        if best is not None:
            ctrl.lock = (best[1], best[2])


def request_admissible(ctrl: ControllerState, req: EntryRequest,
                       paths_conflict) -> bool:
    """Phase and lock gating; inadmissible requests are rejected outright.

    ``paths_conflict(p, q)`` tells whether two paths share a crossing.
    """
    if ctrl.config.backpressure and ctrl.phase != "all":
        want = 1 if ctrl.phase == "p1" else 2
        if ctrl.phase_groups.get(req.path, 0) != want:
            return False
    if ctrl.lock is not None and ctrl.lock[0] != req.robot:
        if req.path == ctrl.lock[1] or paths_conflict(req.path, ctrl.lock[1]):
            return False
    return True


def _conflicting_accepted(ctrl: ControllerState, req: EntryRequest,
                          env: AdmissionContext) -> List[int]:
    out = []
    for j in ctrl.accepted:
        if pair_key(req.robot, j) in env.sections:
            out.append(j)
    return sorted(out)


def _predict_accepted(ctrl: ControllerState, env: AdmissionContext,
                      n_slots: int) -> List[Dict[int, State]]:
    """Closed-loop future of the accepted set under the acceleration law,
    no disturbances.  Cached per (slot-key, accept counter) and extended
    lazily, since all requests of one slot see the same accepted states.

    Once every robot cruises at its top speed past all its windowed
    sections, the law never brakes anyone again, so further slots are
    extrapolated at constant speed without re-evaluating the law.
    """
    key = (ctrl._pred_key[0], ctrl._accept_counter)
    if ctrl._pred_cache is None or ctrl._pred_key != key:
        ctrl._pred_cache = [dict(env.states)]
        ctrl._pred_key = key
    pred = ctrl._pred_cache
    ids = sorted(pred[0])
    edges = []
    for (j, i) in sorted(ctrl.graph.edges):
        if i not in pred[0] or j not in pred[0]:
            continue
        cs = env.sections.get(pair_key(i, j))
        if cs is not None:
            edges.append((j, i, cs, cs.shift_for(i), cs.shift_for(j),
                          cs.bounds_for(j)[1]))
    done_at = {}
    for i in ids:
        his = [env.sections[pair_key(i, j)].bounds_for(i)[1]
               for j in ids if i != j and pair_key(i, j) in env.sections]
        his = [b for b in his if b < FINITE_BOUND]
        done_at[i] = max(his) if his else -UNBOUNDED
    quiet = False
    while len(pred) <= n_slots:
        cur = pred[-1]
        if quiet:
            pred.append({i: State(cur[i].x + env.limits[i].v_max, cur[i].v)
                         for i in ids})
            continue
        nxt: Dict[int, State] = {}
        blocked = set()
        # A prioritized robot past its section window can never be caught
        # again (positions only grow), so that pair is settled for good.
        edges = [e for e in edges if cur[e[0]].x <= e[5]]
        stops = {i: K.impulse_rest_x(cur[i].x, cur[i].v,
                                     env.limits[i].v_max,
                                     env.limits[i].u_max,
                                     env.limits[i].u_min, 0.0, 0.0)
                 for i in ids}
        for (j, i, cs, sh_i, sh_j, _) in edges:
            if i in blocked:
                continue
            # Even under one more throttle slot the yielder comes to rest
            # below the completion threshold at the winner's CURRENT
            # position; thresholds only rise as the winner advances, so
            # the full staggered simulation cannot fail either.
            thr = K.threshold(cs.kind, *cs.params, cur[j].x - sh_j, 0.0)
            if stops[i] - sh_i <= thr:
                continue
            if not worst_pair_clear(cs, i, cur[i], env.limits[i],
                                    j, cur[j], env.limits[j], True):
                blocked.add(i)
        # Cruising past every windowed section with no brake issued is a
        # fixed point of the law: band gaps stay frozen (equal speeds) and
        # ellipse thresholds stay +inf, so certificates cannot flip.
        quiet = (not blocked
                 and all(cur[i].v >= env.limits[i].v_max
                         and cur[i].x > done_at[i] for i in ids))
        for i in ids:
            lim = env.limits[i]
            u = lim.u_min if i in blocked else lim.u_max
            x, v = K.slot_flow(cur[i].x, cur[i].v, u, lim.v_max, 0.0, 0.0)
            nxt[i] = State(x, v)
        pred.append(nxt)
    return pred


def begin_slot(ctrl: ControllerState, slot: int):
    """Mark the slot for prediction caching (states change every slot)."""
    ctrl._pred_key = (slot, ctrl._accept_counter)
    ctrl._pred_cache = None


def process_request_exact(ctrl: ControllerState, req: EntryRequest,
                          env: AdmissionContext) -> bool:
    """Accept iff the reference future stays brake-out-able everywhere.

    The requester is simulated at constant max throttle until it has left
    every shared collision region (plus its stop horizon); the accepted
    robots follow the closed-loop law.  At every simulated slot, for every
    conflicting accepted robot, the worst-case impulse-vs-brake test from
    that slot's states must clear.  On accept, the requester yields to all
    conflicting accepted robots.
    """
    conflicts = _conflicting_accepted(ctrl, req, env)
    lim_i = env.limits[req.robot]
    if conflicts:
        his = [env.sections[pair_key(req.robot, j)].bounds_for(req.robot)[1]
               for j in conflicts]
        his = [b for b in his if b < FINITE_BOUND]
        xbar = max(his) if his else req.state.x
        # Requester trajectory under constant max throttle until past all
        # windowed sections, plus a stop horizon of slack.
        traj = [req.state]
        while traj[-1].x <= xbar and len(traj) < 100000:
            x, v = K.slot_flow(traj[-1].x, traj[-1].v, lim_i.u_max,
                               lim_i.v_max, 0.0, 0.0)
            traj.append(State(x, v))
        n_slots = len(traj) + stop_horizon(lim_i) + 1
        while len(traj) <= n_slots:
            x, v = K.slot_flow(traj[-1].x, traj[-1].v, lim_i.u_max,
                               lim_i.v_max, 0.0, 0.0)
            traj.append(State(x, v))
        pred = _predict_accepted(ctrl, env, n_slots)
        probes = []
        for j in conflicts:
            cs = env.sections[pair_key(req.robot, j)]
            probes.append((j, cs, cs.shift_for(req.robot), cs.shift_for(j),
                           cs.bounds_for(j)[1]))
        for k in range(n_slots + 1):
            if not probes:
                break
            sk = traj[k]
            stop_i = K.impulse_rest_x(sk.x, sk.v, lim_i.v_max, lim_i.u_max,
                                      lim_i.u_min, 0.0, 0.0)
            live = []
            for probe in probes:
                (j, cs, sh_i, sh_j, hi_j) = probe
                wj = pred[k][j]
                if wj.x > hi_j:
                    # Past its section window and only moving forward: this
                    # pair can never conflict again at any later slot.
                    continue
                live.append(probe)
                thr = K.threshold(cs.kind, *cs.params, wj.x - sh_j, 0.0)
                if stop_i - sh_i <= thr:
                    # Requester comes to rest below the threshold at the
                    # other robot's current position; thresholds only rise
                    # as that robot advances, so the pair test must clear.
                    continue
                if not worst_pair_clear(cs, req.robot, sk, lim_i,
                                        j, wj, env.limits[j], True):
                    return False
            probes = live
    edges = [(j, req.robot) for j in conflicts]
    if env.boxes is not None:
        if not _nd_accept_sound(ctrl, req, env, edges):
            return False
    ctrl._apply_accept(req, edges)
    return True


def _arrival_slots(s: State, lim: RobotLimits, target: float) -> int:
    """Slots under constant max throttle until position reaches target."""
    k = 0
    x, v = s.x, s.v
    while x < target and k < 1000000:
        x, v = K.slot_flow(x, v, lim.u_max, lim.v_max, 0.0, 0.0)
        k += 1
    return k


def _nd_accept_sound(ctrl: ControllerState, req: EntryRequest,
                     env: AdmissionContext, edges) -> bool:
    boxes = dict(env.boxes)
    boxes[req.robot] = req.box
    graph = ctrl.graph.with_edges(edges, [req.robot])
    return is_brake_safe_nd(boxes, graph, env.sections, env.limits)


def process_request_heuristic(ctrl: ControllerState, req: EntryRequest,
                              env: AdmissionContext) -> bool:
    """Accept iff the requester arrives at each crossing no earlier than
    the last accepted robot of that path leaves it, then post-validate.

    Arrival times are measured in whole slots under constant max throttle:
    the requester to the near edge of the shared crossing, the other robot
    to its far edge.  Same-path followers have no crossing to compare;
    their spacing (and every accept) is guarded by the brake-safety
    certificate, whose failure demotes the accept to a reject.
    """
    conflicts = _conflicting_accepted(ctrl, req, env)
    lim_i = env.limits[req.robot]
    last_by_path: Dict[int, int] = {}
    for j in conflicts:
        cs = env.sections[pair_key(req.robot, j)]
        if cs.kind != ELLIPSE:
            continue
        order = ctrl.accept_order.get(j, 0)
        path_j = ctrl.robot_path.get(j, -j)
        cur = last_by_path.get(path_j)
        if cur is None or order > ctrl.accept_order.get(cur, 0):
            last_by_path[path_j] = j
    for j in last_by_path.values():
        cs = env.sections[pair_key(req.robot, j)]
        tau_i = _arrival_slots(req.state, lim_i,
                               cs.bounds_for(req.robot)[0])
        tau_j = _arrival_slots(env.states[j], env.limits[j],
                               cs.bounds_for(j)[1])
        if tau_i < tau_j:
            return False
    edges = [(j, req.robot) for j in conflicts]
    if env.boxes is not None:
        if not _nd_accept_sound(ctrl, req, env, edges):
            return False
    else:
        states = dict(env.states)
        states[req.robot] = req.state
        graph = ctrl.graph.with_edges(edges, [req.robot])
        if not is_brake_safe(states, graph, env.sections, env.limits):
            return False
    ctrl._apply_accept(req, edges)
    return True


def process_request(ctrl: ControllerState, req: EntryRequest,
                    env: AdmissionContext) -> bool:
    if ctrl.config.policy == "heuristic":
        return process_request_heuristic(ctrl, req, env)
    return process_request_exact(ctrl, req, env)
