"""Kernel layer: backend equivalence, threshold algebra, slot dynamics.

The compiled extension and the pure reference module must agree bit for
bit; the dynamics kernels must agree with fine-step numeric integration;
the threshold/membership algebra must satisfy the region's defining
properties (monotonicity, symmetry, the inflation shift identity).
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rightofway import _reference as ref
from rightofway import kernels as K

import oracles

try:
    from rightofway import _speedups as fast
except ImportError:  # pragma: no cover - compiled backend not built
    fast = None


# ---------------------------------------------------------------------------
# parameter strategies
# ---------------------------------------------------------------------------


@st.composite
def ellipse_params(draw):
    """Kernel parameter tuple for two paths crossing at a safe angle."""
    theta = draw(st.floats(0.15, math.pi - 0.15))
    if draw(st.booleans()):
        theta = -theta
    d = draw(st.floats(0.5, 5.0))
    sin_abs = abs(math.sin(theta))
    e0 = d / sin_abs
    return (math.cos(theta), math.sin(theta) ** 2, d * d, e0,
            -d * math.cos(theta) / sin_abs, -e0)


@st.composite
def band_params(draw):
    d = draw(st.floats(0.5, 5.0))
    if draw(st.booleans()):
        lo = draw(st.floats(-30.0, 0.0))
        hi = draw(st.floats(5.0, 50.0))
    else:
        lo, hi = -1e18, 1e18
    return (d, lo, hi, 0.0, 0.0, 0.0)


@st.composite
def any_section(draw):
    if draw(st.booleans()):
        return (ref.ELLIPSE,) + draw(ellipse_params())
    return (ref.BAND,) + draw(band_params())


def coords(span):
    return st.floats(-span, span)


@st.composite
def limits_tuple(draw):
    v_max = draw(st.floats(0.2, 3.0))
    u_max = draw(st.floats(0.01, 1.0))
    u_min = -draw(st.floats(0.01, 1.0))
    return v_max, u_max, u_min


@st.composite
def braking_limits(draw):
    """Limits whose stop times fit the numeric oracle's slot budget."""
    v_max = draw(st.floats(0.2, 2.0))
    u_max = draw(st.floats(0.02, 1.0))
    u_min = -draw(st.floats(0.05, 1.0))
    return v_max, u_max, u_min


# ---------------------------------------------------------------------------
# backend equivalence (bit-identical outputs)
# ---------------------------------------------------------------------------


needs_compiled = pytest.mark.skipif(
    fast is None, reason="compiled backend not built")


@needs_compiled
def test_backend_constants_match():
    assert fast.ELLIPSE == ref.ELLIPSE
    assert fast.BAND == ref.BAND
    assert fast.EPS == ref.EPS


@needs_compiled
@given(any_section(), coords(20.0), coords(20.0), st.floats(-5.0, 5.0))
def test_backend_threshold_and_members_match(sec, a, b, r):
    kind, params = sec[0], sec[1:]
    assert (fast.threshold(kind, *params, a, r)
            == ref.threshold(kind, *params, a, r))
    assert (fast.threshold_ext(kind, *params, a)
            == ref.threshold_ext(kind, *params, a))
    assert (fast.completion_member(kind, *params, a, b, r)
            == ref.completion_member(kind, *params, a, b, r))
    assert (fast.raw_member(kind, *params[:3], a, b)
            == ref.raw_member(kind, *params[:3], a, b))


@needs_compiled
@given(any_section(), coords(15.0), st.floats(0.0, 4.0),
       coords(15.0), st.floats(0.0, 4.0))
def test_backend_segment_queries_match(sec, a0, da, b0, db):
    kind, params = sec[0], sec[1:]
    assert (fast.segment_enters(kind, *params, a0, da, b0, db)
            == ref.segment_enters(kind, *params, a0, da, b0, db))
    assert (fast.segment_hits_raw(kind, *params[:3], a0, da, b0, db)
            == ref.segment_hits_raw(kind, *params[:3], a0, da, b0, db))


@needs_compiled
@given(coords(50.0), st.floats(0.0, 3.0), st.floats(-1.0, 1.0),
       st.floats(0.2, 3.0), st.floats(-0.1, 0.1), st.floats(-0.005, 0.005))
def test_backend_slot_flow_matches(x, v, u, v_max, dv, du):
    v = min(v, v_max)
    assert (fast.slot_flow(x, v, u, v_max, dv, du)
            == ref.slot_flow(x, v, u, v_max, dv, du))


@needs_compiled
@given(coords(50.0), st.floats(0.0, 3.0), limits_tuple(),
       st.floats(-0.05, 0.05), st.floats(-0.005, 0.005))
def test_backend_rest_positions_match(x, v, lims, dv, du):
    v_max, u_max, u_min = lims
    v = min(v, v_max)
    if u_min + du >= -1e-4:
        du = 0.0
    assert (fast.brake_rest_x(x, v, v_max, u_min, dv, du)
            == ref.brake_rest_x(x, v, v_max, u_min, dv, du))
    assert (fast.impulse_rest_x(x, v, v_max, u_max, u_min, dv, du)
            == ref.impulse_rest_x(x, v, v_max, u_max, u_min, dv, du))


@needs_compiled
@given(any_section(), st.booleans(),
       coords(12.0), st.floats(0.0, 2.0),
       coords(12.0), st.floats(0.0, 2.0),
       limits_tuple(), limits_tuple())
def test_backend_pair_worst_clear_matches(sec, impulse, ai, vi, bj, vj,
                                          lims_i, lims_j):
    kind, params = sec[0], sec[1:]
    vmax_i, umax_i, umin_i = lims_i
    vmax_j, _, umin_j = lims_j
    vi = min(vi, vmax_i)
    vj = min(vj, vmax_j)
    horizon = int(math.ceil(vmax_i / -umin_i) + math.ceil(vmax_j / -umin_j)) + 3
    args = (kind, *params, impulse,
            ai, vi, vmax_i, umax_i, umin_i, 0.0, 0.0,
            bj, vj, vmax_j, umin_j, 0.0, 0.0, horizon)
    assert fast.pair_worst_clear(*args) == ref.pair_worst_clear(*args)


def test_selected_backend_reports_name():
    assert K.BACKEND in ("compiled", "pure")
    if K.BACKEND == "pure":
        assert K.threshold is ref.threshold


# ---------------------------------------------------------------------------
# threshold algebra
# ---------------------------------------------------------------------------


@given(any_section(), coords(20.0), coords(20.0), st.floats(-4.0, 4.0))
def test_threshold_nondecreasing(sec, x1, x2, r):
    kind, params = sec[0], sec[1:]
    if x1 > x2:
        x1, x2 = x2, x1
    h1 = K.threshold(kind, *params, x1, r)
    h2 = K.threshold(kind, *params, x2, r)
    assert h1 <= h2


@given(any_section(), coords(20.0), st.floats(-4.0, 4.0))
def test_threshold_inflation_is_a_shift(sec, x, r):
    """h with inflation r equals the plain threshold shifted by (-r, -r)."""
    kind, params = sec[0], sec[1:]
    inflated = K.threshold(kind, *params, x, r)
    plain = K.threshold(kind, *params, x - r, 0.0)
    if plain == math.inf:
        assert inflated == math.inf
    else:
        assert inflated == plain - r


@given(any_section(), coords(20.0), st.floats(-4.0, 4.0))
def test_threshold_domain_jump(sec, x, r):
    kind, params = sec[0], sec[1:]
    cut = params[3] if kind == K.ELLIPSE else params[2]
    h = K.threshold(kind, *params, x, r)
    assert (h == math.inf) == (x - r >= cut)


@given(any_section(), coords(20.0), coords(20.0))
def test_raw_region_is_symmetric(sec, a, b):
    kind, params = sec[0], sec[1:]
    assert (K.raw_member(kind, *params[:3], a, b)
            == K.raw_member(kind, *params[:3], b, a))


@given(any_section(), coords(20.0), coords(20.0))
def test_region_points_belong_to_both_completions(sec, a, b):
    kind, params = sec[0], sec[1:]
    if kind == K.ELLIPSE:
        strict = a * a + b * b - 2.0 * params[0] * a * b < params[2] - 1e-6
    else:
        d, lo, hi = params[:3]
        strict = (abs(a - b) < d - 1e-6 and lo + 1e-6 < a < hi - 1e-6
                  and lo + 1e-6 < b < hi - 1e-6)
    if not strict:
        return
    assert K.completion_member(kind, *params, a, b, 0.0)
    assert K.completion_member(kind, *params, b, a, 0.0)


@given(any_section(), coords(20.0), coords(20.0), st.floats(-3.0, 3.0),
       st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_completion_membership_is_monotone(sec, a, b, r, back, up):
    """Completion grows when the first coordinate shrinks or the second
    grows (that is what 'swept by quadrant (-e_a, +e_b)' means)."""
    kind, params = sec[0], sec[1:]
    if K.completion_member(kind, *params, a, b, r):
        assert K.completion_member(kind, *params, a - back, b, r)
        assert K.completion_member(kind, *params, a, b + up, r)


@given(ellipse_params(), coords(20.0), st.floats(-3.0, 3.0))
def test_completion_member_consistent_with_threshold(params, a, r):
    h = K.threshold(K.ELLIPSE, *params, a, r)
    if h == math.inf:
        assert not K.completion_member(K.ELLIPSE, *params, a, 1e17, r)
    else:
        assert K.completion_member(K.ELLIPSE, *params, a, h + 1.0, r)
        assert not K.completion_member(K.ELLIPSE, *params, a, h - 1.0, r)


# ---------------------------------------------------------------------------
# slot dynamics against fine-step integration
# ---------------------------------------------------------------------------


@given(coords(30.0), st.floats(0.0, 3.0), st.floats(-1.0, 1.0),
       st.floats(0.2, 3.0), st.floats(-0.1, 0.1), st.floats(-0.05, 0.05))
@settings(max_examples=60)
def test_slot_flow_matches_integration(x, v, u, v_max, dv, du):
    v = min(v, v_max)
    kx, kv = K.slot_flow(x, v, u, v_max, dv, du)
    ox, ov = oracles.integrate_slot(x, v, u, v_max, dv, du)
    assert kv == pytest.approx(ov, abs=1e-9)
    assert kx == pytest.approx(ox, abs=2e-5)


@given(coords(30.0), st.floats(0.0, 2.0), braking_limits())
@settings(max_examples=40)
def test_brake_rest_matches_integration(x, v, lims):
    v_max, u_max, u_min = lims
    v = min(v, v_max)
    kx = K.brake_rest_x(x, v, v_max, u_min, 0.0, 0.0)
    ox = oracles.integrate_brake_rest(x, v, v_max, u_min)
    assert kx == pytest.approx(ox, abs=5e-4)
    # Rest position never precedes the current one.
    assert kx >= x - 1e-12


@given(coords(30.0), st.floats(0.0, 2.0), limits_tuple())
@settings(max_examples=40)
def test_impulse_rest_bounds_brake_rest(x, v, lims):
    v_max, u_max, u_min = lims
    v = min(v, v_max)
    brake = K.brake_rest_x(x, v, v_max, u_min, 0.0, 0.0)
    impulse = K.impulse_rest_x(x, v, v_max, u_max, u_min, 0.0, 0.0)
    assert impulse >= brake - 1e-12


@given(st.floats(0.1, 2.0), st.floats(0.01, 0.5))
def test_slot_flow_speed_clamps(v_max, u):
    x, v = K.slot_flow(0.0, v_max, u, v_max, 0.0, 0.0)
    assert v == v_max and x == v_max
    x, v = K.slot_flow(0.0, 0.0, -u, v_max, 0.0, 0.0)
    assert v == 0.0 and x == 0.0


# ---------------------------------------------------------------------------
# worst-case pair clearance, concrete geometry
# ---------------------------------------------------------------------------


def _perp_params(d=2.0):
    return (0.0, 1.0, d * d, d, 0.0, -d)


def test_pair_worst_clear_obvious_cases():
    params = _perp_params()
    horizon = 45
    # Winner far past the region: threshold +inf from the start.
    assert K.pair_worst_clear(K.ELLIPSE, *params, True,
                              -1.0, 1.0, 1.0, 0.05, -0.05, 0.0, 0.0,
                              5.0, 1.0, 1.0, -0.05, 0.0, 0.0, horizon)
    # Yielder crawling at rest far below the region: clear.
    assert K.pair_worst_clear(K.ELLIPSE, *params, True,
                              -15.0, 0.0, 1.0, 0.05, -0.05, 0.0, 0.0,
                              -1.0, 1.0, 1.0, -0.05, 0.0, 0.0, horizon)
    # Yielder at speed close to the region while the winner may stop
    # short of clearing it: not certifiable.
    assert not K.pair_worst_clear(K.ELLIPSE, *params, True,
                                  -3.0, 1.0, 1.0, 0.05, -0.05, 0.0, 0.0,
                                  -1.5, 0.2, 1.0, -0.05, 0.0, 0.0, horizon)


def test_pair_worst_clear_is_monotone_in_yielder_position():
    """If clear from a position, clear from any position further back."""
    params = _perp_params()
    horizon = 45
    verdicts = []
    for ai in [-15.0 + 0.5 * k for k in range(22)]:
        verdicts.append(K.pair_worst_clear(
            K.ELLIPSE, *params, True,
            ai, 1.0, 1.0, 0.05, -0.05, 0.0, 0.0,
            -1.0, 0.5, 1.0, -0.05, 0.0, 0.0, horizon))
    # One switch from clear to not-clear as the yielder starts closer.
    assert verdicts[0] is True and verdicts[-1] is False
    assert verdicts == sorted(verdicts, reverse=True)
