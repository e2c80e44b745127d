"""Pure-Python reference implementation of the numeric kernels.

``rightofway.kernels`` selects either this module or the compiled
``rightofway._speedups`` extension at import time.  The two are kept
line-for-line equivalent and restricted to +, -, *, /, sqrt, abs, min and
max with identical expression order, so their outputs are bit-identical.

All geometry here is two-dimensional and local: a pairwise cross-section
lives in the plane spanned by the curvilinear coordinates of two robots,
with the origin placed by the caller (local = global - shift).  Two kinds
of cross-section are supported:

* ``ELLIPSE`` -- two straight paths crossing at angle theta.  The collision
  region is ``a^2 + b^2 - 2ab cos(theta) < D^2`` (centre distance below the
  robot diameter, by the law of cosines).  Parameters: q0=cos(theta),
  q1=sin^2(theta), q2=D^2, and the precomputed e0=a_max=D/sin(theta),
  e1=a_star=-D cos(theta)/sin(theta), e2=h_min=-a_max.

* ``BAND`` -- two robots sharing one path (or collinear paths with the same
  heading).  The collision region is ``|a - b| < L`` intersected with the
  open window ``(lo, hi)`` on both axes.  Parameters: q0=L, q1=lo, q2=hi
  (e0..e2 unused).

Both regions are symmetric under swapping the two axes, which callers rely
on to evaluate either sweep direction with a single threshold function.

The "completion" of a region in direction *first wins* is the region swept
by quadrant (-e_a, +e_b): a point (a, b) belongs to it iff some region
point (a', b') has a' >= a and b' <= b.  For these convex symmetric regions
that membership reduces to ``b > h(a)`` where ``h`` is the lower threshold
implemented by :func:`threshold`.  ``h`` is convex and non-decreasing on
its finite domain and jumps to +inf past the region's upper bound on the
first axis.  Inflating the completion by the square [-r, r]^2 (Minkowski
sum for r > 0, erosion for r < 0) shifts the threshold to
``h(a - r) - r``, which is what the ``r`` argument computes.
"""

from math import inf, sqrt

ELLIPSE = 0
BAND = 1

# Absolute slack applied to threshold comparisons: membership must clear
# the threshold by more than this.
EPS = 1e-9


def threshold(kind, q0, q1, q2, e0, e1, e2, x, r):
    """Lower threshold h^r(x) of an r-inflated completion, local coords.

    Returns +inf when no region point lies at or beyond ``x - r`` on the
    first axis (membership is then impossible at any second coordinate).
    """
    x = x - r
    if kind == ELLIPSE:
        if x >= e0:
            return inf
        if x <= e1:
            return e2 - r
        return x * q0 - sqrt(q2 - x * x * q1) - r
    if x >= q2:
        return inf
    a = x if x > q1 else q1
    v = a - q0
    if v < q1:
        v = q1
    return v - r


def threshold_ext(kind, q0, q1, q2, e0, e1, e2, x):
    """Continuous extension of threshold(..., r=0) without the +inf jump.

    Used only by the segment maximiser, which separately caps the segment
    parameter at the jump abscissa.
    """
    if kind == ELLIPSE:
        if x <= e1:
            return e2
        d = q2 - x * x * q1
        if d < 0.0:
            d = 0.0
        return x * q0 - sqrt(d)
    a = x if x > q1 else q1
    v = a - q0
    if v < q1:
        v = q1
    return v


def completion_member(kind, q0, q1, q2, e0, e1, e2, a, b, r):
    """Is local point (a, b) inside the r-inflated (-e_a, +e_b) completion?"""
    return b > threshold(kind, q0, q1, q2, e0, e1, e2, a, r) + EPS


def raw_member(kind, q0, q1, q2, a, b):
    """Is local point (a, b) inside the open collision region itself?"""
    if kind == ELLIPSE:
        return a * a + b * b - 2.0 * q0 * a * b < q2
    return abs(a - b) < q0 and q1 < a and a < q2 and q1 < b and b < q2


_GOLDEN = 0.6180339887498949  # (sqrt(5) - 1) / 2


def segment_enters(kind, q0, q1, q2, e0, e1, e2, a0, da, b0, db):
    """Does segment (a0,b0) + t(da,db), t in [0,1], meet the completion?

    Requires da >= 0 and db >= 0 (coordinates only move forward).  The
    clearance phi(t) = b(t) - h(a(t)) is concave in t because h is convex,
    so a golden-section scan finds its maximum; the segment enters the
    (-e_a, +e_b)-swept completion iff that maximum exceeds EPS.  The scan
    runs over the continuous extension of h, with t capped where h jumps
    to +inf (beyond the cap membership is impossible).
    """
    cut = e0 if kind == ELLIPSE else q2
    if a0 >= cut:
        return False
    t_hi = 1.0
    if da > 0.0:
        tc = (cut - a0) / da
        if tc < t_hi:
            t_hi = tc
    lo = 0.0
    hi = t_hi
    best = b0 - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0)
    f_hi = (b0 + hi * db) - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + hi * da)
    if f_hi > best:
        best = f_hi
    m1 = hi - _GOLDEN * (hi - lo)
    m2 = lo + _GOLDEN * (hi - lo)
    f1 = (b0 + m1 * db) - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m1 * da)
    f2 = (b0 + m2 * db) - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m2 * da)
    n = 0
    while n < 80:
        if f1 < f2:
            lo = m1
            m1 = m2
            f1 = f2
            m2 = lo + _GOLDEN * (hi - lo)
            f2 = (b0 + m2 * db) - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m2 * da)
        else:
            hi = m2
            m2 = m1
            f2 = f1
            m1 = hi - _GOLDEN * (hi - lo)
            f1 = (b0 + m1 * db) - threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m1 * da)
        n = n + 1
    if f1 > best:
        best = f1
    if f2 > best:
        best = f2
    return best > EPS


def segment_hits_raw(kind, q0, q1, q2, a0, da, b0, db):
    """Does segment (a0,b0) + t(da,db), t in [0,1], meet the raw region?

    Exact: the ellipse case minimises a convex quadratic in t in closed
    form; the band case intersects the open linear constraint intervals.
    """
    if kind == ELLIPSE:
        qa = da * da + db * db - 2.0 * q0 * da * db
        qb = 2.0 * (a0 * da + b0 * db - q0 * (a0 * db + b0 * da))
        qc = a0 * a0 + b0 * b0 - 2.0 * q0 * a0 * b0 - q2
        m = qc
        f1 = qa + qb + qc
        if f1 < m:
            m = f1
        if qa > 0.0:
            ts = -qb / (2.0 * qa)
            if 0.0 < ts and ts < 1.0:
                fs = (qa * ts + qb) * ts + qc
                if fs < m:
                    m = fs
        return m < 0.0
    t0 = 0.0
    t1 = 1.0
    # Open constraints c0 + t*c1 < c2 for: b-a < L, a-b < L, a > lo,
    # a < hi, b > lo, b < hi.
    k = 0
    while k < 6:
        if k == 0:
            c0 = b0 - a0
            c1 = db - da
            c2 = q0
        elif k == 1:
            c0 = a0 - b0
            c1 = da - db
            c2 = q0
        elif k == 2:
            c0 = -a0
            c1 = -da
            c2 = -q1
        elif k == 3:
            c0 = a0
            c1 = da
            c2 = q2
        elif k == 4:
            c0 = -b0
            c1 = -db
            c2 = -q1
        else:
            c0 = b0
            c1 = db
            c2 = q2
        if c1 == 0.0:
            if c0 >= c2:
                return False
        elif c1 > 0.0:
            tb = (c2 - c0) / c1
            if tb < t1:
                t1 = tb
        else:
            tb = (c2 - c0) / c1
            if tb > t0:
                t0 = tb
        k = k + 1
    return t0 < t1


def slot_flow(x, v, u, v_max, dv, du):
    """One unit slot of the clamped second-order model; returns (x', v').

    Acceleration u + du applies until the speed saturates at v_max or 0 and
    stays clamped for the remainder of the slot; while clamped at v_max the
    position additionally drifts by dv per unit time.  At most two motion
    segments occur per slot, so the update is closed-form.
    """
    a = u + du
    if a > 0.0:
        rise = v_max - v
        if a < rise:
            return x + v + 0.5 * a, v + a
        if rise <= 0.0:
            return x + v_max + dv, v_max
        t1 = rise / a
        return x + (v * t1 + 0.5 * a * t1 * t1) + (v_max + dv) * (1.0 - t1), v_max
    if a < 0.0:
        fall = v
        if -a < fall:
            return x + v + 0.5 * a, v + a
        if fall <= 0.0:
            return x, 0.0
        t1 = fall / (-a)
        return x + 0.5 * v * t1, 0.0
    if v >= v_max:
        return x + v_max + dv, v_max
    return x + v, v


def brake_rest_x(x, v, v_max, u_min, dv, du):
    """Final (maximal) position when braking at u_min every slot."""
    n = 0
    while v > 0.0 and n < 1000000:
        x, v = slot_flow(x, v, u_min, v_max, dv, du)
        n = n + 1
    return x


def impulse_rest_x(x, v, v_max, u_max, u_min, dv, du):
    """Stop position: max throttle for one slot, then max brake to rest."""
    x, v = slot_flow(x, v, u_max, v_max, dv, du)
    return brake_rest_x(x, v, v_max, u_min, dv, du)


def pair_worst_clear(kind, q0, q1, q2, e0, e1, e2,
                     impulse, ai, vi, vmax_i, umax_i, umin_i, dv_i, du_i,
                     bj, vj, vmax_j, umin_j, dv_j, du_j, horizon):
    """Staggered worst-case clearance of the completion where i yields to j.

    Robot i (local coordinate ``ai``) follows the impulse control (one slot
    of max throttle, then max brake) when ``impulse`` is true, else brakes
    throughout; robot j (local coordinate ``bj``) brakes throughout.  Both
    carry their own constant per-slot disturbances.  Each slot k tests the
    staggered corner (a_i(k+1), b_j(k)) against membership a > h(b): the
    completion grows with a and shrinks with b, and within any slot
    a_i(t) <= a_i(k+1) and b_j(t) >= b_j(k), so clearing every corner
    certifies the continuous pair flow clear.  Returns False on the first
    corner inside; True once both robots are at rest (or ``horizon`` slots
    have passed, which callers size to cover both stop times).
    """
    k = 0
    while True:
        if impulse and k == 0:
            u = umax_i
        else:
            u = umin_i
        ai, vi = slot_flow(ai, vi, u, vmax_i, dv_i, du_i)
        h = threshold(kind, q0, q1, q2, e0, e1, e2, bj, 0.0)
        if ai > h + EPS:
            return False
        if h == inf:
            # j is already past the section's finite domain and only moves
            # forward, so the threshold stays +inf: clear forever.
            return True
        if vi <= 0.0 and vj <= 0.0 and k >= 1:
            return True
        bj, vj = slot_flow(bj, vj, umin_j, vmax_j, dv_j, du_j)
        k = k + 1
        if k > horizon:
            return True
