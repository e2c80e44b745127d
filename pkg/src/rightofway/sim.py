"""Slot-stepped intersection simulator.

A scenario is a set of straight paths through a shared area, per-path
arrival processes, robot motion limits, a controller policy, and optional
disturbance/observation noise.  Robots spawn at the back of their path,
drive toward the entry line, request admission just before they would
have to brake for it, and -- once accepted -- follow the priority-based
acceleration law through the conflict area until they leave the system.

Every slot runs the same phase order (which, together with a single
seeded RNG and a pinned draw order, makes runs bit-reproducible):

1. arrivals          (per path, ascending path id)
2. regime switches   (per live robot, ascending id)
3. controller upkeep (back-pressure phase, anti-starvation lock)
4. entry requests    (frontmost unaccepted robot per path)
5. commands          (accepted: control law; unaccepted: entry/following)
6. dynamics          (true motion plus state-box propagation under noise)
7. safety accounting (collisions, priority and box violations)
8. exits, trace rows, per-slot metrics

With any noise configured, each robot draws personal disturbance and
measurement bounds at spawn (uniform in [0, 2*avg] per configured
average), the simulator tracks a sound interval box per robot, and the
non-deterministic variants of the laws/certificates are used throughout.

The trace is a flat CSV with two row kinds (``R`` per-robot rows and
``C`` controller events); a 64-bit FNV-1a digest over the emitted rows is
always computed so separate runs can be compared without storing files.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import random
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from . import kernels as K
from .control import acceleration_law, nd_law, worst_pair_clear
from .controller import (AdmissionContext, ControllerConfig, ControllerState,
                         EntryRequest, begin_slot, process_request,
                         request_admissible, tick_phase_and_locks)
from .errors import InvalidGeometryError, ScenarioError, SimulationBreach
from .geometry import (CrossSection, FINITE_BOUND, PathGeometry,
                       build_cross_section, following_band, in_completed,
                       pair_key)
from .motion import NDState, RobotLimits, State, impulse_extent, nd_propagate, observation_box


@dataclass(frozen=True)
class NoiseConfig:
    """Average disturbance/measurement magnitudes (0 disables each).

    Each spawning robot draws its personal bound for every component
    uniformly from [0, 2*avg]; per-slot values are then uniform and
    symmetric within the personal bound.  During the optional window
    [start, stop) the position measurement bound is scaled by
    ``window_pos_factor`` (degraded localisation).
    """

    speed_drift_avg: float = 0.0   # cruise-speed drift bound (per slot)
    accel_avg: float = 0.0         # acceleration disturbance bound
    speed_obs_avg: float = 0.0     # speed measurement error bound
    pos_obs_avg: float = 0.0       # position measurement error bound
    window_start: int = -1
    window_stop: int = -1
    window_pos_factor: float = 1.0

    @property
    def enabled(self) -> bool:
        return (self.speed_drift_avg > 0.0 or self.accel_avg > 0.0
                or self.speed_obs_avg > 0.0 or self.pos_obs_avg > 0.0)


@dataclass(frozen=True)
class ScenarioPath:
    geometry: PathGeometry
    rate: float = 0.0      # per-slot arrival probability, in [0, 1]
    count: int = 0         # total arrivals (0 = unlimited)
    group: int = 1         # back-pressure group


@dataclass(frozen=True)
class Scenario:
    name: str
    diameter: float
    limits: RobotLimits
    paths: Tuple[ScenarioPath, ...]
    slots: int = 1000
    seed: int = 0
    controller: ControllerConfig = ControllerConfig()
    regime_enter: float = 0.0      # per-slot probability to start braking
    regime_exit: float = 0.0       # per-slot probability to stop braking
    noise: NoiseConfig = NoiseConfig()

    def __post_init__(self):
        if self.diameter <= 0.0:
            raise InvalidGeometryError("diameter must be positive")
        ids = [sp.geometry.id for sp in self.paths]
        if len(set(ids)) != len(ids):
            raise InvalidGeometryError("duplicate path ids in scenario")


def _require(ok: bool, field_path: str, why: str):
    if not ok:
        raise ScenarioError("%s: %s" % (field_path, why))


def parse_scenario(text: str) -> Scenario:
    """Parse the INI scenario format (see the bundled ``scenarios/``).

    Schema violations raise :class:`ScenarioError` naming the offending
    section and field.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError("not parseable as INI: %s" % exc) from exc
    _require(cp.has_section("scenario"), "scenario", "section is required")
    _require(cp.has_section("limits"), "limits", "section is required")
    sc = cp["scenario"]
    lm = cp["limits"]
    _require(sc.get("diameter") is not None, "scenario.diameter",
             "key is required")
    for key in ("v_max", "u_max", "u_min"):
        _require(lm.get(key) is not None, "limits.%s" % key,
                 "key is required")
    limits = RobotLimits(v_max=lm.getfloat("v_max"),
                         u_max=lm.getfloat("u_max"),
                         u_min=lm.getfloat("u_min"))
    pol = cp["policy"] if cp.has_section("policy") else {}
    controller = ControllerConfig(
        policy=pol.get("kind", "exact"),
        locking=_getbool(pol, "locking", True),
        lock_coef=float(pol.get("lock_coef", 1.0)),
        lock_power=float(pol.get("lock_power", 2.0)),
        lock_threshold=float(pol.get("lock_threshold", 2500.0)),
        backpressure=_getbool(pol, "backpressure", False),
        period=int(pol.get("period", 100)),
        imbalance_limit=float(pol.get("imbalance_limit", 30.0)),
    )
    reg = cp["regimes"] if cp.has_section("regimes") else {}
    nz = cp["noise"] if cp.has_section("noise") else {}
    nw = cp["noise.window"] if cp.has_section("noise.window") else {}
    noise = NoiseConfig(
        speed_drift_avg=float(nz.get("speed_drift_avg", 0.0)),
        accel_avg=float(nz.get("accel_avg", 0.0)),
        speed_obs_avg=float(nz.get("speed_obs_avg", 0.0)),
        pos_obs_avg=float(nz.get("pos_obs_avg", 0.0)),
        window_start=int(nw.get("start", -1)),
        window_stop=int(nw.get("stop", -1)),
        window_pos_factor=float(nw.get("pos_factor", 1.0)),
    )
    paths = []
    for name in cp.sections():
        if not name.startswith("path."):
            continue
        pid = int(name.split(".", 1)[1])
        ps = cp[name]
        for key in ("origin", "heading_deg", "entry", "exit"):
            _require(ps.get(key) is not None, "%s.%s" % (name, key),
                     "key is required")
        ox, oy = (float(t) for t in ps.get("origin").split(","))
        heading = math.radians(float(ps.get("heading_deg"))) % (2.0 * math.pi)
        geom = PathGeometry(pid, origin=(ox, oy), heading=heading,
                            entry_pos=ps.getfloat("entry"),
                            exit_pos=ps.getfloat("exit"))
        rate = float(ps.get("rate", 0.0))
        _require(0.0 <= rate <= 1.0, "%s.rate" % name,
                 "arrival probability must lie in [0, 1] (got %s)" % rate)
        paths.append(ScenarioPath(
            geometry=geom,
            rate=rate,
            count=int(ps.get("count", 0)),
            group=int(ps.get("group", 1)),
        ))
    paths.sort(key=lambda sp: sp.geometry.id)
    _require(paths != [], "path.*", "at least one path section is required")
    _require(controller.policy in ("exact", "heuristic"), "policy.kind",
             "unknown policy %r (expected exact or heuristic)"
             % controller.policy)
    _require(sc.getint("slots", 1000) > 0, "scenario.slots",
             "must be positive")
    for key, val in (("enter_prob", float(reg.get("enter_prob", 0.0))),
                     ("exit_prob", float(reg.get("exit_prob", 0.0)))):
        _require(0.0 <= val <= 1.0, "regimes.%s" % key,
                 "probability must lie in [0, 1] (got %s)" % val)
    return Scenario(
        name=sc.get("name", "scenario"),
        diameter=sc.getfloat("diameter"),
        limits=limits,
        paths=tuple(paths),
        slots=sc.getint("slots", 1000),
        seed=sc.getint("seed", 0),
        controller=controller,
        regime_enter=float(reg.get("enter_prob", 0.0)),
        regime_exit=float(reg.get("exit_prob", 0.0)),
        noise=noise,
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_sections(scenario: Scenario) -> List[CrossSection]:
    """Pairwise conflict sections between the scenario's PATHS (one robot
    per path, keyed by path id) -- the geometry feasibility and margin
    questions are asked about, independent of any simulation run."""
    out: List[CrossSection] = []
    geoms = [sp.geometry for sp in scenario.paths]
    for i, gi in enumerate(geoms):
        for gj in geoms[i + 1:]:
            cs = build_cross_section(gi, gj, scenario.diameter)
            if cs is not None:
                out.append(cs)
    return out


def _getbool(section, key, default):
    raw = section.get(key, None) if section else None
    if raw is None:
        return default
    return str(raw).strip().lower() in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------


@dataclass
class _Robot:
    id: int
    path: int
    spawn_slot: int
    limits: RobotLimits
    state: State
    box: Optional[NDState]
    bounds: Tuple[float, float, float, float]  # m_v, m_u, e_x, e_v
    accepted: bool = False
    regime: bool = False
    entry_slot: Optional[int] = None
    last_u: float = 0.0


@dataclass
class RunMetrics:
    """Aggregated outcome of one simulation run."""

    scenario: str
    policy: str
    seed: int
    slots: int
    nd_mode: bool
    backend: str
    digest: str = ""
    spawned: int = 0
    exited: int = 0
    requests: int = 0
    accepts: int = 0
    rejects: int = 0
    collisions: int = 0               # pair-slot flags, conservative staggered check
    collided_pairs: int = 0
    priority_violations: int = 0      # true configuration in a forbidden completion
    box_violations: int = 0           # box worst corner in a forbidden completion
    box_region_entries: int = 0       # box hulls not certifiably clear of a region
    truth_outside_box: int = 0
    halted_at: Optional[int] = None   # slot of the invariant breach that stopped us
    drain_slots: int = 0              # extra slots simulated after arrivals ceased
    ubar_slots: int = 0
    accepted_slots: int = 0
    unfinished_accepted: int = 0
    lock_events: int = 0
    spawned_by_path: Dict[int, int] = field(default_factory=dict)
    exited_by_path: Dict[int, int] = field(default_factory=dict)
    queue_total: List[int] = field(default_factory=list)
    queue_by_group: Dict[int, List[int]] = field(default_factory=dict)
    mean_age: List[float] = field(default_factory=list)
    time_in_area: List[int] = field(default_factory=list)
    time_total: List[int] = field(default_factory=list)

    @property
    def ubar_fraction(self) -> float:
        return self.ubar_slots / self.accepted_slots if self.accepted_slots else 0.0

    def summary(self) -> Dict[str, object]:
        out = {
            "scenario": self.scenario, "policy": self.policy,
            "seed": self.seed, "slots": self.slots, "nd_mode": self.nd_mode,
            "backend": self.backend, "digest": self.digest,
            "spawned": self.spawned, "exited": self.exited,
            "requests": self.requests, "accepts": self.accepts,
            "rejects": self.rejects, "collisions": self.collisions,
            "collided_pairs": self.collided_pairs,
            "priority_violations": self.priority_violations,
            "box_violations": self.box_violations,
            "box_region_entries": self.box_region_entries,
            "truth_outside_box": self.truth_outside_box,
            "halted_at": self.halted_at,
            "drain_slots": self.drain_slots,
            "ubar_fraction": self.ubar_fraction,
            "unfinished_accepted": self.unfinished_accepted,
            "lock_events": self.lock_events,
            "spawned_by_path": self.spawned_by_path,
            "exited_by_path": self.exited_by_path,
            "mean_time_in_area": (statistics.fmean(self.time_in_area)
                                  if self.time_in_area else None),
            "median_time_in_area": (statistics.median(self.time_in_area)
                                    if self.time_in_area else None),
            "mean_time_total": (statistics.fmean(self.time_total)
                                if self.time_total else None),
        }
        return out

    def to_dict(self) -> Dict[str, object]:
        out = self.summary()
        out["queue_total"] = self.queue_total
        out["queue_by_group"] = {str(g): q for g, q in self.queue_by_group.items()}
        out["mean_age"] = self.mean_age
        out["time_in_area"] = self.time_in_area
        out["time_total"] = self.time_total
        return out

    def save_json(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def save(self, path: str):
        """Per-slot queue/time series as CSV, then a key,value summary block."""
        groups = sorted(self.queue_by_group)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot", "queue_total"]
                       + ["queue_g%d" % g for g in groups]
                       + ["mean_time_in_system"])
            for k, q in enumerate(self.queue_total):
                w.writerow([k, q] + [self.queue_by_group[g][k] for g in groups]
                           + [_f(self.mean_age[k])])
            w.writerow([])
            w.writerow(["# summary"])
            for key, val in sorted(self.summary().items()):
                if isinstance(val, dict):
                    val = ";".join("%s=%s" % kv for kv in sorted(val.items()))
                elif isinstance(val, float):
                    val = _f(val)
                w.writerow([key, val])


def staggered_region_entry(cs: CrossSection,
                           lo0: float, hi0: float,
                           lo1: float, hi1: float) -> bool:
    """Conservative one-slot collision flag for one conflicting pair.

    ``lo``/``hi`` bracket each robot's position over the slot: start-of-slot
    position vs end-of-slot position for true states, or the union of the
    two state boxes' position intervals under uncertainty.  Positions only
    grow within a slot, and each side's forbidden completion only grows
    when the prioritized coordinate shrinks or the yielding coordinate
    grows, so the staggered corner (own position at the slot start, other
    position at the slot end) dominates every intermediate configuration.
    The pair can have touched the collision region -- intersection of the
    two completions -- only if BOTH staggered corners sit inside their
    completions; flagging that is never a false negative, and false
    positives vanish as the slot length shrinks.
    """
    if not in_completed(cs, (lo0, hi1), cs.pair[0], 0.0):
        return False
    return in_completed(cs, (hi0, lo1), cs.pair[1], 0.0)


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(h: int, data: bytes) -> int:
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _f(x: float) -> str:
    return "%.9g" % (x,)


class _Trace:
    def __init__(self, path: Optional[str], tail_rows: int = 60):
        self._fh = open(path, "w", encoding="utf-8") if path else None
        self.digest = _FNV_OFFSET
        self.tail: deque = deque(maxlen=tail_rows)
        self.row("V", "1", "trace")

    def row(self, *cols):
        line = ",".join(str(c) for c in cols) + "\n"
        self.digest = _fnv1a(self.digest, line.encode("utf-8"))
        self.tail.append(line.rstrip("\n"))
        if self._fh is not None:
            self._fh.write(line)

    def close(self) -> str:
        if self._fh is not None:
            self._fh.close()
        return "%016x" % self.digest


# ---------------------------------------------------------------------------


class _World:
    """Mutable per-run state: live robots, their pairwise sections."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.paths: Dict[int, ScenarioPath] = {
            sp.geometry.id: sp for sp in scenario.paths}
        self.robots: Dict[int, _Robot] = {}
        self.sections: Dict[Tuple[int, int], CrossSection] = {}
        self._next_id = 1
        # Path-pair geometry sections, computed once (axis 0 = first arg).
        self._path_cs: Dict[Tuple[int, int], Optional[CrossSection]] = {}
        pids = sorted(self.paths)
        for a in range(len(pids)):
            for b in range(a + 1, len(pids)):
                pa, pb = pids[a], pids[b]
                cs = build_cross_section(self.paths[pa].geometry,
                                         self.paths[pb].geometry,
                                         scenario.diameter)
                self._path_cs[(pa, pb)] = cs
        # Exit pruning threshold per path: past the control area and past
        # every finite conflict, with a diameter of slack.
        self.clear_x: Dict[int, float] = {}
        for pid in pids:
            hi = self.paths[pid].geometry.exit_pos
            for (pa, pb), cs in self._path_cs.items():
                if cs is None or pid not in (pa, pb):
                    continue
                b = cs.bounds[0 if pid == pa else 1][1]
                if b < FINITE_BOUND:
                    hi = max(hi, b)
            self.clear_x[pid] = hi + scenario.diameter

    def paths_conflict(self, p: int, q: int) -> bool:
        if p == q:
            return True
        key = (p, q) if p < q else (q, p)
        return self._path_cs.get(key) is not None

    def spawn(self, pid: int, slot: int, limits: RobotLimits,
              bounds: Tuple[float, float, float, float],
              nd: bool) -> _Robot:
        # Spacing off the worst-case (box-low) position of the backmost
        # robot, so that with noisy localisation the new robot's gap is a
        # full diameter for EVERY state consistent with the leader's box.
        back = min((r.box.lo.x if nd else r.state.x
                    for r in self.robots.values() if r.path == pid),
                   default=0.0)
        x0 = min(0.0, back - self.scenario.diameter)
        state = State(x0, 0.0)
        rob = _Robot(id=self._next_id, path=pid, spawn_slot=slot,
                     limits=limits, state=state,
                     box=NDState(state, state) if nd else None,
                     bounds=bounds)
        self._next_id += 1
        for other in self.robots.values():
            cs = self._section_for(rob, other)
            if cs is not None:
                self.sections[pair_key(rob.id, other.id)] = cs
        self.robots[rob.id] = rob
        return rob

    def _section_for(self, a: _Robot, b: _Robot) -> Optional[CrossSection]:
        if a.path == b.path:
            return following_band(self.scenario.diameter, (a.id, b.id))
        pa, pb = (a.path, b.path) if a.path < b.path else (b.path, a.path)
        cs = self._path_cs[(pa, pb)]
        if cs is None:
            return None
        ra, rb = (a.id, b.id) if a.path < b.path else (b.id, a.id)
        return cs.with_pair((ra, rb))

    def remove(self, rid: int):
        del self.robots[rid]
        for key in [k for k in self.sections if rid in k]:
            del self.sections[key]

    def leader_of(self, rob: _Robot) -> Optional[_Robot]:
        best = None
        for other in self.robots.values():
            if other.path != rob.path or other.id == rob.id:
                continue
            if other.state.x > rob.state.x and (
                    best is None or other.state.x < best.state.x):
                best = other
        return best


def run(scenario: Scenario, *, seed: Optional[int] = None,
        slots: Optional[int] = None, policy: Optional[str] = None,
        rate: Optional[float] = None, drain: bool = False,
        drain_cap: int = 20000, halt_on_breach: bool = True,
        trace_path: Optional[str] = None) -> RunMetrics:
    """Simulate a scenario and return its metrics.

    ``seed``/``slots``/``policy`` override the scenario's own values;
    ``rate`` overrides the arrival rate of every rate-driven path.  With
    ``drain`` the run continues past the nominal horizon with arrivals
    shut off, until the system is empty (or ``drain_cap`` extra slots
    pass), so liveness can be asserted.  A safety breach -- conservative
    collision flag, priority violation, or box-consistency failure --
    raises :class:`SimulationBreach` carrying the partial metrics and the
    trace tail, unless ``halt_on_breach`` is false (then it only counts).
    """
    seed = scenario.seed if seed is None else seed
    n_slots = scenario.slots if slots is None else slots
    if rate is not None and not 0.0 <= rate <= 1.0:
        raise ValueError("rate override must lie in [0, 1]")
    cfg = scenario.controller
    if policy is not None:
        cfg = ControllerConfig(policy=policy, locking=cfg.locking,
                               lock_coef=cfg.lock_coef,
                               lock_power=cfg.lock_power,
                               lock_threshold=cfg.lock_threshold,
                               backpressure=cfg.backpressure,
                               period=cfg.period,
                               imbalance_limit=cfg.imbalance_limit)
    nd = scenario.noise.enabled
    rng = random.Random(seed)
    world = _World(scenario)
    ctrl = ControllerState(cfg, phase_groups={
        sp.geometry.id: sp.group for sp in scenario.paths})
    trace = _Trace(trace_path)
    met = RunMetrics(scenario=scenario.name, policy=cfg.policy, seed=seed,
                     slots=n_slots, nd_mode=nd, backend=K.BACKEND)
    groups = sorted({sp.group for sp in scenario.paths})
    for g in groups:
        met.queue_by_group[g] = []
    spawned_count: Dict[int, int] = {sp.geometry.id: 0 for sp in scenario.paths}
    regimes_on = scenario.regime_enter > 0.0 or scenario.regime_exit > 0.0
    nz = scenario.noise

    slot = 0
    while slot < n_slots or (drain and world.robots
                             and slot < n_slots + drain_cap):
        # --- 1. arrivals ------------------------------------------------
        for pid in sorted(world.paths) if slot < n_slots else ():
            sp = world.paths[pid]
            if sp.count and spawned_count[pid] >= sp.count:
                continue
            p_arr = sp.rate if rate is None or sp.rate <= 0.0 else rate
            if p_arr <= 0.0:
                continue
            if p_arr < 1.0 and rng.random() >= p_arr:
                continue
            if nd:
                m_v = rng.uniform(0.0, 2.0 * nz.speed_drift_avg)
                m_u = rng.uniform(0.0, 2.0 * nz.accel_avg)
                e_x = rng.uniform(0.0, 2.0 * nz.pos_obs_avg)
                e_v = rng.uniform(0.0, 2.0 * nz.speed_obs_avg)
                lim = RobotLimits(v_max=scenario.limits.v_max,
                                  u_max=scenario.limits.u_max,
                                  u_min=scenario.limits.u_min,
                                  d_lo=(-m_v, -m_u), d_hi=(m_v, m_u),
                                  obs_precision=(2.0 * e_x, 2.0 * e_v))
                bounds = (m_v, m_u, e_x, e_v)
            else:
                lim = scenario.limits
                bounds = (0.0, 0.0, 0.0, 0.0)
            rob = world.spawn(pid, slot, lim, bounds, nd)
            spawned_count[pid] += 1
            ctrl.note_spawn(pid, robot=rob.id)
            met.spawned += 1
            met.spawned_by_path[pid] = met.spawned_by_path.get(pid, 0) + 1
            trace.row("C", slot, "spawn", rob.id, pid, _f(rob.state.x))

        # --- 2. regime switches -----------------------------------------
        if regimes_on:
            for rid in sorted(world.robots):
                rob = world.robots[rid]
                draw = rng.random()
                if rob.regime:
                    if draw < scenario.regime_exit:
                        rob.regime = False
                elif draw < scenario.regime_enter:
                    rob.regime = True

        # --- 3. controller upkeep ---------------------------------------
        phase0, lock0 = ctrl.phase, ctrl.lock
        tick_phase_and_locks(ctrl, slot)
        if ctrl.phase != phase0:
            trace.row("C", slot, "phase", "", "", ctrl.phase)
        if ctrl.lock != lock0:
            met.lock_events += ctrl.lock is not None
            trace.row("C", slot, "lock", *(ctrl.lock or ("", "")), "")

        # --- 4. entry requests ------------------------------------------
        begin_slot(ctrl, slot)
        for pid in sorted(world.paths):
            front = None
            for rob in world.robots.values():
                if rob.path != pid or rob.accepted:
                    continue
                if front is None or rob.state.x > front.state.x:
                    front = rob
            if front is None:
                continue
            if nd:
                probe, d = front.box.hi, front.limits.d_hi
            else:
                probe, d = front.state, (0.0, 0.0)
            x_stop, _ = impulse_extent(front.limits, probe, d)
            if x_stop <= world.paths[pid].geometry.entry_pos:
                continue
            met.requests += 1
            ctrl.note_request(front.id, pid, slot)
            req = EntryRequest(robot=front.id, path=pid,
                               state=front.box.mean if nd else front.state,
                               box=front.box, slot=slot)
            if not request_admissible(ctrl, req, world.paths_conflict):
                met.rejects += 1
                trace.row("C", slot, "reject", front.id, pid, "gated")
                continue
            acc = {r.id: r for r in world.robots.values() if r.accepted}
            env = AdmissionContext(
                states={j: acc[j].state for j in acc},
                limits={j: acc[j].limits for j in acc} | {front.id: front.limits},
                sections={k: cs for k, cs in world.sections.items()
                          if ((k[0] in acc or k[0] == front.id)
                              and (k[1] in acc or k[1] == front.id))},
                boxes={j: acc[j].box for j in acc} if nd else None)
            if process_request(ctrl, req, env):
                front.accepted = True
                met.accepts += 1
                trace.row("C", slot, "accept", front.id, pid, "")
            else:
                met.rejects += 1
                trace.row("C", slot, "reject", front.id, pid, "")

        # --- 5. commands --------------------------------------------------
        acc = {r.id: r for r in world.robots.values() if r.accepted}
        limits_map = {rid: rob.limits for rid, rob in acc.items()}
        if acc:
            if nd:
                cmds = nd_law({rid: rob.box for rid, rob in acc.items()},
                              ctrl.graph, world.sections, limits_map)
            else:
                cmds = acceleration_law({rid: rob.state for rid, rob in acc.items()},
                                        ctrl.graph, world.sections, limits_map)
        else:
            cmds = {}
        for rid, rob in acc.items():
            if rob.regime:
                cmds[rid] = rob.limits.u_min
        for rid in sorted(world.robots):
            rob = world.robots[rid]
            if rob.accepted:
                continue
            lim = rob.limits
            brake = rob.regime
            if not brake:
                if nd:
                    probe, d = rob.box.hi, lim.d_hi
                else:
                    probe, d = rob.state, (0.0, 0.0)
                x_stop, _ = impulse_extent(lim, probe, d)
                brake = x_stop > world.paths[rob.path].geometry.entry_pos
            if not brake:
                lead = world.leader_of(rob)
                if lead is not None:
                    cs = world.sections[pair_key(rid, lead.id)]
                    if nd:
                        clear = worst_pair_clear(
                            cs, rid, rob.box.hi, lim, lead.id, lead.box.lo,
                            lead.limits, True, yd=lim.d_hi,
                            wd=lead.limits.d_lo)
                    else:
                        clear = worst_pair_clear(
                            cs, rid, rob.state, lim, lead.id, lead.state,
                            lead.limits, True)
                    brake = not clear
            cmds[rid] = lim.u_min if brake else lim.u_max
        for rid, rob in acc.items():
            met.accepted_slots += 1
            if cmds[rid] == rob.limits.u_max:
                met.ubar_slots += 1

        # --- 6. dynamics ---------------------------------------------------
        breach: List[str] = []
        prev = {rid: rob.state for rid, rob in world.robots.items()}
        prev_box = {rid: rob.box for rid, rob in world.robots.items()} if nd else {}
        for rid in sorted(world.robots):
            rob = world.robots[rid]
            lim = rob.limits
            m_v, m_u, e_x, e_v = rob.bounds
            if nd:
                dv = rng.uniform(-m_v, m_v)
                du = rng.uniform(-m_u, m_u)
            else:
                dv = du = 0.0
            x, v = K.slot_flow(rob.state.x, rob.state.v, cmds[rid],
                               lim.v_max, dv, du)
            rob.state = State(x, v)
            rob.last_u = cmds[rid]
            if nd:
                factor = 1.0
                if nz.window_start <= slot < nz.window_stop:
                    factor = nz.window_pos_factor
                bx = e_x * factor
                ex = rng.uniform(-bx, bx)
                ev = rng.uniform(-e_v, e_v)
                obs = observation_box(rob.state, (ex, ev), lim,
                                      precision=(2.0 * bx, 2.0 * e_v))
                rob.box = nd_propagate(rob.box, cmds[rid], lim, observation=obs)
                if not (rob.box.lo.x <= x <= rob.box.hi.x
                        and rob.box.lo.v <= v <= rob.box.hi.v):
                    met.truth_outside_box += 1
                    breach.append("true state of robot %s left its box" % rid)
            if rob.entry_slot is None and x >= world.paths[rob.path].geometry.entry_pos:
                rob.entry_slot = slot

        # --- 7. safety accounting -------------------------------------------
        collided = set()
        for key in sorted(world.sections):
            cs = world.sections[key]
            r0, r1 = cs.pair
            if staggered_region_entry(
                    cs, prev[r0].x, world.robots[r0].state.x,
                    prev[r1].x, world.robots[r1].state.x):
                met.collisions += 1
                collided.add(key)
                breach.append("pair %s/%s not certifiably collision-free"
                              % (r0, r1))
            if nd and staggered_region_entry(
                    cs, prev_box[r0].lo.x, world.robots[r0].box.hi.x,
                    prev_box[r1].lo.x, world.robots[r1].box.hi.x):
                met.box_region_entries += 1
                breach.append("box hulls of pair %s/%s reach the collision "
                              "region" % (r0, r1))
        met.collided_pairs += len(collided)
        for (j, i) in sorted(ctrl.graph.edges):
            key = pair_key(i, j)
            cs = world.sections.get(key)
            if cs is None or i not in world.robots or j not in world.robots:
                continue
            p = (world.robots[cs.pair[0]].state.x,
                 world.robots[cs.pair[1]].state.x)
            if in_completed(cs, p, j, 0.0):
                met.priority_violations += 1
                breach.append("priority %s over %s violated" % (j, i))
            if nd:
                bi, bj = world.robots[i].box, world.robots[j].box
                q = [0.0, 0.0]
                q[cs.axis_of(i)] = bi.hi.x
                q[cs.axis_of(j)] = bj.lo.x
                if in_completed(cs, (q[0], q[1]), j, 0.0):
                    met.box_violations += 1
                    breach.append("priority %s over %s not certified by "
                                  "state boxes" % (j, i))

        # --- 8. exits, trace, queues ------------------------------------------
        halting = bool(breach) and halt_on_breach
        if not halting:
            for rid in sorted(world.robots):
                rob = world.robots[rid]
                if rob.state.x < world.clear_x[rob.path]:
                    continue
                world.remove(rid)
                ctrl.note_exit(rid)
                met.exited += 1
                met.exited_by_path[rob.path] = met.exited_by_path.get(rob.path, 0) + 1
                met.time_total.append(slot - rob.spawn_slot)
                if rob.entry_slot is not None:
                    met.time_in_area.append(slot - rob.entry_slot)
                trace.row("C", slot, "exit", rid, rob.path, "")
        for rid in sorted(world.robots):
            rob = world.robots[rid]
            if rob.box is not None:
                box_cols = (_f(rob.box.lo.x), _f(rob.box.lo.v),
                            _f(rob.box.hi.x), _f(rob.box.hi.v))
            else:
                box_cols = ("", "", "", "")
            trace.row("R", slot, rid, rob.path, int(rob.accepted),
                      int(rob.regime), _f(rob.last_u),
                      _f(rob.state.x), _f(rob.state.v), *box_cols)
        waiting = [rob for rob in world.robots.values() if not rob.accepted]
        met.queue_total.append(len(waiting))
        for g in groups:
            met.queue_by_group[g].append(
                sum(1 for rob in waiting
                    if world.paths[rob.path].group == g))
        trace.row("C", slot, "stat", ctrl.phase, len(waiting),
                  met.accepts, met.rejects)
        met.mean_age.append(
            statistics.fmean(slot - rob.spawn_slot
                             for rob in world.robots.values())
            if world.robots else 0.0)
        if halting:
            met.halted_at = slot
            met.unfinished_accepted = sum(
                1 for rob in world.robots.values() if rob.accepted)
            met.digest = trace.close()
            raise SimulationBreach("slot %d: %s" % (slot, "; ".join(breach)),
                                   metrics=met, tail=trace.tail)
        slot += 1

    met.drain_slots = max(0, slot - n_slots)
    met.unfinished_accepted = sum(
        1 for rob in world.robots.values() if rob.accepted)
    met.digest = trace.close()
    return met
