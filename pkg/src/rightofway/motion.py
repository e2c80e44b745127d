"""Slot-stepped longitudinal motion of a robot along its path.

Two dynamics models are used.  The velocity model moves a coordinate at a
chosen per-slot speed in {0, v_max} (piecewise-linear flow).  The
second-order model integrates commanded acceleration u in [u_min, u_max]
with the speed clamped to [0, v_max]; a bounded per-slot disturbance
(dv, du) perturbs the drift while clamped at v_max and the effective
acceleration respectively.  Within one slot the closed-form kernel update
applies (at most two motion segments), and multi-slot flows compose it.

Uncertainty is interval-based: an ``NDState`` is a box of states known to
contain the true one.  Propagating a box means flowing its lower corner
under the most hindering disturbance and its upper corner under the most
helping one (the flow is monotone in state and disturbance), then
intersecting with an observation box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from . import kernels as K
from .errors import InconsistentObservationError, InvalidControlError


@dataclass(frozen=True)
class RobotLimits:
    """Kinodynamic limits and uncertainty bounds of one robot.

    ``d_lo``/``d_hi`` bound the per-slot disturbance pair (dv, du) from
    below/above; ``obs_precision`` gives the full lengths (sx, sv) of the
    position/velocity observation intervals.  The standing assumptions
    keep worst cases sane: the drift cannot reverse top-speed motion, max
    throttle stays positive and max brake negative under any disturbance.
    """

    v_max: float
    u_max: float
    u_min: float
    d_lo: Tuple[float, float] = (0.0, 0.0)
    d_hi: Tuple[float, float] = (0.0, 0.0)
    obs_precision: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.v_max > 0.0 and self.u_max > 0.0 and self.u_min < 0.0):
            raise ValueError("need v_max > 0, u_max > 0, u_min < 0")
        if not (self.d_lo[0] <= 0.0 <= self.d_hi[0]
                and self.d_lo[1] <= 0.0 <= self.d_hi[1]):
            raise ValueError("disturbance bounds must straddle 0")
        if not (self.v_max + self.d_lo[0] > 0.0):
            raise ValueError("drift bound would reverse top-speed motion")
        if not (self.u_max + self.d_lo[1] > 0.0):
            raise ValueError("disturbed max throttle must stay positive")
        if not (self.u_min + self.d_hi[1] < 0.0):
            raise ValueError("disturbed max brake must stay negative")
        if self.obs_precision[0] < 0.0 or self.obs_precision[1] < 0.0:
            raise ValueError("observation precision must be non-negative")


@dataclass(frozen=True)
class State:
    """Curvilinear position and speed (speed clamped to [0, v_max])."""

    x: float
    v: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class NDState:
    """A box of states certain to contain the true one (lo <= hi)."""

    lo: State
    hi: State

    def __post_init__(self):
        if self.lo.x > self.hi.x or self.lo.v > self.hi.v:
            raise ValueError("box corners out of order")

    @property
    def mean(self) -> State:
        return State(0.5 * (self.lo.x + self.hi.x),
                     0.5 * (self.lo.v + self.hi.v))


def _check_command(u: float, limits: RobotLimits):
    if not (limits.u_min <= u <= limits.u_max):
        raise InvalidControlError(
            "command %r outside [%r, %r]" % (u, limits.u_min, limits.u_max))


def _check_disturbance(d: Tuple[float, float], limits: RobotLimits):
    if not (limits.d_lo[0] <= d[0] <= limits.d_hi[0]
            and limits.d_lo[1] <= d[1] <= limits.d_hi[1]):
        raise InvalidControlError("disturbance %r outside bounds" % (d,))


def flow_velocity(x0: float, controls: Union[float, Sequence[float]],
                  t: float) -> float:
    """Position at time t under per-slot speeds (velocity model).

    ``controls`` is one speed applied forever or a per-slot sequence
    (speed 0 after the sequence ends).  Piecewise-linear in t.
    """
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if isinstance(controls, (int, float)):
        return x0 + float(controls) * t
    k = 0
    x = x0
    while t > 0.0 and k < len(controls):
        dt = min(t, 1.0)
        x += float(controls[k]) * dt
        t -= dt
        k += 1
    return x


def _partial_slot(x: float, v: float, u: float, limits: RobotLimits,
                  d: Tuple[float, float], dt: float) -> Tuple[float, float]:
    """Fraction dt in [0, 1] of one slot (same segments as the kernel)."""
    dv, du = d
    a = u + du
    v_max = limits.v_max
    if a > 0.0:
        rise = v_max - v
        if rise <= 0.0:
            return x + (v_max + dv) * dt, v_max
        t1 = rise / a
        if t1 >= dt:
            return x + v * dt + 0.5 * a * dt * dt, v + a * dt
        return (x + v * t1 + 0.5 * a * t1 * t1 + (v_max + dv) * (dt - t1),
                v_max)
    if a < 0.0:
        fall = v
        if fall <= 0.0:
            return x, 0.0
        t1 = fall / (-a)
        if t1 >= dt:
            return x + v * dt + 0.5 * a * dt * dt, v + a * dt
        return x + 0.5 * v * t1, 0.0
    if v >= v_max:
        return x + (v_max + dv) * dt, v_max
    return x + v * dt, v


def flow_second_order(s0: State, u, d, t: float,
                      limits: RobotLimits) -> State:
    """State after time t under per-slot commands and disturbances.

    ``u`` is a single command or a per-slot sequence (last value held);
    ``d`` likewise a (dv, du) pair or sequence of pairs.  Whole slots use
    the closed-form kernel; a fractional final slot integrates the same
    two-segment motion partially.
    """
    if t < 0.0:
        raise ValueError("t must be non-negative")
    us = [u] if isinstance(u, (int, float)) else list(u)
    ds = [d] if (len(d) == 2 and isinstance(d[0], (int, float))) else list(d)
    x, v = s0.x, s0.v
    k = 0
    while t > 0.0:
        uk = float(us[min(k, len(us) - 1)])
        dk = ds[min(k, len(ds) - 1)]
        _check_command(uk, limits)
        _check_disturbance(dk, limits)
        if t >= 1.0:
            x, v = K.slot_flow(x, v, uk, limits.v_max, dk[0], dk[1])
            t -= 1.0
        else:
            x, v = _partial_slot(x, v, uk, limits, dk, t)
            t = 0.0
        k += 1
    return State(x, v)


def stop_horizon(limits: RobotLimits, du: float = 0.0) -> int:
    """Slots an always-braking robot needs to reach rest from any speed,
    under a constant acceleration disturbance du (must keep braking)."""
    eff = -(limits.u_min + du)
    if eff <= 0.0:
        raise InvalidControlError("disturbance defeats the brake")
    return int(math.ceil(limits.v_max / eff)) + 1


def brake_stop_x(s: State, limits: RobotLimits,
                 d: Tuple[float, float] = (0.0, 0.0)) -> float:
    """Final (maximal) position braking at u_min under constant d."""
    _check_disturbance(d, limits)
    return K.brake_rest_x(s.x, s.v, limits.v_max, limits.u_min, d[0], d[1])


def impulse_extent(limits: RobotLimits, s: Optional[State] = None,
                   d: Tuple[float, float] = (0.0, 0.0),
                   ) -> Tuple[float, int]:
    """Stop position under impulse control, and the horizon covering it.

    Impulse control is one slot of max throttle followed by max brake to
    rest; the returned position is the flow's maximum.  With ``s`` None
    the extent from rest at x=0 is returned.  The horizon (in slots) upper
    bounds when the impulse flow of any state is at rest.
    """
    _check_disturbance(d, limits)
    if s is None:
        s = State(0.0, 0.0)
    x = K.impulse_rest_x(s.x, s.v, limits.v_max, limits.u_max, limits.u_min,
                         d[0], d[1])
    return x, stop_horizon(limits, d[1]) + 1


def nd_propagate(nd: NDState, u: float, limits: RobotLimits,
                 observation: Optional[NDState] = None) -> NDState:
    """One slot of box dynamics, then fusion with an observation box.

    The lower corner flows under the most hindering disturbance d_lo and
    the upper under the most helping d_hi, so the true state stays inside.
    When an observation box is supplied the result is the intersection;
    an empty intersection means the model assumptions were violated and
    raises ``InconsistentObservationError``.
    """
    _check_command(u, limits)
    lx, lv = K.slot_flow(nd.lo.x, nd.lo.v, u, limits.v_max,
                         limits.d_lo[0], limits.d_lo[1])
    hx, hv = K.slot_flow(nd.hi.x, nd.hi.v, u, limits.v_max,
                         limits.d_hi[0], limits.d_hi[1])
    if observation is not None:
        lx = max(lx, observation.lo.x)
        lv = max(lv, observation.lo.v)
        hx = min(hx, observation.hi.x)
        hv = min(hv, observation.hi.v)
        if lx > hx or lv > hv:
            raise InconsistentObservationError(
                "observation box disjoint from propagated box")
    return NDState(State(lx, lv), State(hx, hv))


def observation_box(true: State, err: Tuple[float, float],
                    limits: RobotLimits,
                    precision: Optional[Tuple[float, float]] = None,
                    ) -> NDState:
    """Observation box from a noisy point measurement of the true state.

    The measurement is true + err with |err| at most half the precision
    interval length per component, so the returned box always contains the
    true state.  Speeds are clipped to the physical [0, v_max] range.
    """
    sx, sv = precision if precision is not None else limits.obs_precision
    if abs(err[0]) > 0.5 * sx or abs(err[1]) > 0.5 * sv:
        raise InvalidControlError("measurement error exceeds precision")
    yx = true.x + err[0]
    yv = true.v + err[1]
    return NDState(
        State(yx - 0.5 * sx, max(yv - 0.5 * sv, 0.0)),
        State(yx + 0.5 * sx, min(yv + 0.5 * sv, limits.v_max)),
    )
