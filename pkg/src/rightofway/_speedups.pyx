# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled mirror of ``rightofway._reference``.

Every public function keeps the exact expression order of the reference
module and uses only +, -, *, /, sqrt, abs, min, max on IEEE doubles, and
the build avoids -ffast-math and contraction (-ffp-contract=off), so both
backends return bit-identical results.  See _reference.py for the full
documentation of the geometry and semantics; comments here only mark
structure.
"""

from libc.math cimport INFINITY, fabs, sqrt

ELLIPSE = 0
BAND = 1

EPS = 1e-9

cdef double C_EPS = 1e-9
cdef double GOLDEN = 0.6180339887498949


cdef inline double _threshold(int kind, double q0, double q1, double q2,
                              double e0, double e1, double e2,
                              double x, double r) noexcept nogil:
    cdef double a, v
    x = x - r
    if kind == 0:
        if x >= e0:
            return INFINITY
        if x <= e1:
            return e2 - r
        return x * q0 - sqrt(q2 - x * x * q1) - r
    if x >= q2:
        return INFINITY
    a = x if x > q1 else q1
    v = a - q0
    if v < q1:
        v = q1
    return v - r


cdef inline double _threshold_ext(int kind, double q0, double q1, double q2,
                                  double e0, double e1, double e2,
                                  double x) noexcept nogil:
    cdef double a, v, d
    if kind == 0:
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


cdef inline (double, double) _slot_flow(double x, double v, double u,
                                        double v_max, double dv,
                                        double du) noexcept nogil:
    cdef double a, rise, fall, t1
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


def threshold(int kind, double q0, double q1, double q2,
              double e0, double e1, double e2, double x, double r):
    """Lower threshold h^r(x) of an r-inflated completion, local coords."""
    return _threshold(kind, q0, q1, q2, e0, e1, e2, x, r)


def threshold_ext(int kind, double q0, double q1, double q2,
                  double e0, double e1, double e2, double x):
    """Continuous extension of threshold(..., r=0) without the +inf jump."""
    return _threshold_ext(kind, q0, q1, q2, e0, e1, e2, x)


def completion_member(int kind, double q0, double q1, double q2,
                      double e0, double e1, double e2,
                      double a, double b, double r):
    """Is local point (a, b) inside the r-inflated (-e_a, +e_b) completion?"""
    return b > _threshold(kind, q0, q1, q2, e0, e1, e2, a, r) + C_EPS


def raw_member(int kind, double q0, double q1, double q2, double a, double b):
    """Is local point (a, b) inside the open collision region itself?"""
    if kind == 0:
        return a * a + b * b - 2.0 * q0 * a * b < q2
    return fabs(a - b) < q0 and q1 < a and a < q2 and q1 < b and b < q2


def segment_enters(int kind, double q0, double q1, double q2,
                   double e0, double e1, double e2,
                   double a0, double da, double b0, double db):
    """Does segment (a0,b0) + t(da,db), t in [0,1], meet the completion?"""
    cdef double cut, t_hi, tc, lo, hi, best, f_hi, m1, m2, f1, f2
    cdef int n
    cut = e0 if kind == 0 else q2
    if a0 >= cut:
        return False
    t_hi = 1.0
    if da > 0.0:
        tc = (cut - a0) / da
        if tc < t_hi:
            t_hi = tc
    lo = 0.0
    hi = t_hi
    best = b0 - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0)
    f_hi = (b0 + hi * db) - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + hi * da)
    if f_hi > best:
        best = f_hi
    m1 = hi - GOLDEN * (hi - lo)
    m2 = lo + GOLDEN * (hi - lo)
    f1 = (b0 + m1 * db) - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m1 * da)
    f2 = (b0 + m2 * db) - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m2 * da)
    n = 0
    while n < 80:
        if f1 < f2:
            lo = m1
            m1 = m2
            f1 = f2
            m2 = lo + GOLDEN * (hi - lo)
            f2 = (b0 + m2 * db) - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m2 * da)
        else:
            hi = m2
            m2 = m1
            f2 = f1
            m1 = hi - GOLDEN * (hi - lo)
            f1 = (b0 + m1 * db) - _threshold_ext(kind, q0, q1, q2, e0, e1, e2, a0 + m1 * da)
        n = n + 1
    if f1 > best:
        best = f1
    if f2 > best:
        best = f2
    return best > C_EPS


def segment_hits_raw(int kind, double q0, double q1, double q2,
                     double a0, double da, double b0, double db):
    """Does segment (a0,b0) + t(da,db), t in [0,1], meet the raw region?"""
    cdef double qa, qb, qc, m, f1, ts, fs, t0, t1, c0, c1, c2, tb
    cdef int k
    if kind == 0:
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


def slot_flow(double x, double v, double u, double v_max, double dv, double du):
    """One unit slot of the clamped second-order model; returns (x', v')."""
    return _slot_flow(x, v, u, v_max, dv, du)


def brake_rest_x(double x, double v, double v_max, double u_min,
                 double dv, double du):
    """Final (maximal) position when braking at u_min every slot."""
    cdef int n = 0
    while v > 0.0 and n < 1000000:
        x, v = _slot_flow(x, v, u_min, v_max, dv, du)
        n = n + 1
    return x


def impulse_rest_x(double x, double v, double v_max, double u_max,
                   double u_min, double dv, double du):
    """Stop position: max throttle for one slot, then max brake to rest."""
    cdef int n = 0
    x, v = _slot_flow(x, v, u_max, v_max, dv, du)
    while v > 0.0 and n < 1000000:
        x, v = _slot_flow(x, v, u_min, v_max, dv, du)
        n = n + 1
    return x


def pair_worst_clear(int kind, double q0, double q1, double q2,
                     double e0, double e1, double e2,
                     bint impulse, double ai, double vi, double vmax_i,
                     double umax_i, double umin_i, double dv_i, double du_i,
                     double bj, double vj, double vmax_j, double umin_j,
                     double dv_j, double du_j, int horizon):
    """Staggered worst-case clearance of the completion where i yields to j."""
    cdef double u, h
    cdef int k = 0
    while True:
        if impulse and k == 0:
            u = umax_i
        else:
            u = umin_i
        ai, vi = _slot_flow(ai, vi, u, vmax_i, dv_i, du_i)
        h = _threshold(kind, q0, q1, q2, e0, e1, e2, bj, 0.0)
        if ai > h + C_EPS:
            return False
        if h == INFINITY:
            # j is already past the section's finite domain and only moves
            # forward, so the threshold stays +inf: clear forever.
            return True
        if vi <= 0.0 and vj <= 0.0 and k >= 1:
            return True
        bj, vj = _slot_flow(bj, vj, umin_j, vmax_j, dv_j, du_j)
        k = k + 1
        if k > horizon:
            return True
