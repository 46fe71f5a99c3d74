# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: radial shooting integrator and Sturm-sequence bisection.

The pure-Python twin lives in ``_pykernels.py``; both implement the same
arithmetic in the same order so the two backends agree to rounding.
"""

from libc.math cimport fabs, sqrt, fmax, fmin, pow, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

# Dormand-Prince 5(4) tableau.
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

DEF UNDECIDED = 0
DEF OVERSHOOT = 1
DEF UNDERSHOOT = -1
DEF NONFINITE = 2


cdef inline double _accel(double r, double y, double dy, int dev, double omega,
                          double g1, double g2, double g3, double g4) nogil:
    cdef double q2
    if dev:
        # y = Q - Q_eq; exact Taylor expansion of the polynomial source about Q_eq
        return y * (g1 + y * (g2 + y * (g3 + y * (g4 + y)))) - 2.0 * dy / r
    q2 = y * y
    return y * (omega - q2 + q2 * q2) - 2.0 * dy / r


def shoot(double omega, double q_eq, double delta, double r0, double r_end,
          double rtol, double atol, double threshold,
          double h_grid=0.0, cnp.ndarray[double, ndim=1] out_q=None,
          cnp.ndarray[double, ndim=1] out_dq=None):
    """Integrate the radial profile ODE from the series start at ``r0``.

    The central amplitude is ``a = q_eq - delta``. Returns
    ``(code, r_event, n_filled)`` with code 1 overshoot, -1 undershoot,
    0 undecided and 2 non-finite state.
    """
    cdef double a = q_eq - delta
    cdef double g1 = omega - 3.0 * q_eq * q_eq + 5.0 * q_eq ** 4
    cdef double g2 = -3.0 * q_eq + 10.0 * q_eq ** 3
    cdef double g3 = -1.0 + 10.0 * q_eq * q_eq
    cdef double g4 = 5.0 * q_eq
    cdef int dev = fabs(delta) < 0.1 * q_eq
    cdef double src, y, dy, r, h, h_try, hnew, err, sc, tmp
    cdef double k1y, k1d, k2y, k2d, k3y, k3d, k4y, k4d, k5y, k5d, k6y, k6d, k7y, k7d
    cdef double yn, dyn, ey, ed, q, qn, r_next, thr
    cdef double atol_y = atol
    cdef Py_ssize_t n_grid = 0, filled = 0
    cdef int landed
    cdef double r_event
    cdef double[:] oq
    cdef double[:] odq
    if out_q is not None and h_grid > 0.0:
        n_grid = out_q.shape[0]
        oq = out_q
        odq = out_dq

    if dev:
        y = -delta
        src = y * (g1 + y * (g2 + y * (g3 + y * (g4 + y))))
        atol_y = atol * fmin(1.0, fabs(delta))
    else:
        y = a
        src = a * (omega - a * a + a ** 4)
    y = y + src * r0 * r0 / 6.0
    dy = src * r0 / 3.0
    r = r0
    thr = threshold * a
    h_try = fmin(1e-3, 0.5 * r0 + 1e-4)

    q = y + q_eq if dev else y
    if dy >= 0.0 and q > thr:
        return OVERSHOOT, r, 0

    k1y = dy
    k1d = _accel(r, y, dy, dev, omega, g1, g2, g3, g4)
    while r < r_end:
        landed = 0
        h = h_try
        if n_grid > 0:
            r_next = (filled + 1) * h_grid
            if r + h >= r_next:
                h = r_next - r
                landed = 1
        if r + h > r_end:
            h = r_end - r
        k2y = dy + h * A21 * k1d
        k2d = _accel(r + C2 * h, y + h * A21 * k1y, k2y, dev, omega, g1, g2, g3, g4)
        k3y = dy + h * (A31 * k1d + A32 * k2d)
        k3d = _accel(r + C3 * h, y + h * (A31 * k1y + A32 * k2y), k3y,
                     dev, omega, g1, g2, g3, g4)
        k4y = dy + h * (A41 * k1d + A42 * k2d + A43 * k3d)
        k4d = _accel(r + C4 * h, y + h * (A41 * k1y + A42 * k2y + A43 * k3y), k4y,
                     dev, omega, g1, g2, g3, g4)
        k5y = dy + h * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d)
        k5d = _accel(r + C5 * h,
                     y + h * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y), k5y,
                     dev, omega, g1, g2, g3, g4)
        k6y = dy + h * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d)
        k6d = _accel(r + h,
                     y + h * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y + A65 * k5y),
                     k6y, dev, omega, g1, g2, g3, g4)
        yn = y + h * (B1 * k1y + B3 * k3y + B4 * k4y + B5 * k5y + B6 * k6y)
        dyn = dy + h * (B1 * k1d + B3 * k3d + B4 * k4d + B5 * k5d + B6 * k6d)
        k7y = dyn
        k7d = _accel(r + h, yn, dyn, dev, omega, g1, g2, g3, g4)
        ey = h * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y + E7 * k7y)
        ed = h * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)
        sc = atol_y + rtol * fmax(fabs(y), fabs(yn))
        tmp = ey / sc
        err = tmp * tmp
        sc = atol_y + rtol * fmax(fabs(dy), fabs(dyn))
        tmp = ed / sc
        err = sqrt(0.5 * (err + tmp * tmp))
        if not isfinite(err):
            if h < 1e-14:
                return NONFINITE, r, filled
            h_try = 0.2 * h
            continue
        if err > 1.0:
            h_try = h * fmax(0.2, 0.9 * pow(err, -0.2))
            continue

        q = y + q_eq if dev else y
        qn = yn + q_eq if dev else yn
        r = r + h
        y = yn
        dy = dyn
        k1y = k7y
        k1d = k7d
        if landed:
            oq[filled] = qn
            odq[filled] = dyn
            filled += 1
            r = filled * h_grid
            if filled >= n_grid:
                return UNDECIDED, r, filled
        if qn < 0.0:
            r_event = r - h * qn / (qn - q)
            return UNDERSHOOT, r_event, filled
        if dyn >= 0.0 and qn > thr:
            return OVERSHOOT, r, filled
        if dev and fabs(y) > 0.1 * q_eq:
            dev = 0
            y = qn
            atol_y = atol
            k1d = _accel(r, y, dy, dev, omega, g1, g2, g3, g4)
        if err < 1e-10:
            hnew = 5.0 * h
        else:
            hnew = h * fmin(5.0, 0.9 * pow(err, -0.2))
        if not landed or hnew > h_try:
            h_try = hnew
    return UNDECIDED, r, filled


def sturm_count(const double[:] diag, const double[:] off, double x):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``."""
    cdef Py_ssize_t n = diag.shape[0], i
    cdef int count = 0
    cdef double q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def bisect_eigenvalues(const double[:] diag, const double[:] off, int k, double lower,
                       double upper, double tol):
    """The ``k`` smallest eigenvalues by Sturm-sequence bisection, ascending."""
    cdef Py_ssize_t n = diag.shape[0], i
    cdef int j, count
    cdef double lo, hi, mid, q
    out = np.empty(k, dtype=np.float64)
    cdef double[:] res = out
    for j in range(k):
        lo = lower
        hi = upper
        if j > 0:
            lo = fmax(lo, res[j - 1] - tol)
        while hi - lo > tol + 4e-16 * fmax(fabs(lo), fabs(hi)):
            mid = 0.5 * (lo + hi)
            count = 0
            q = diag[0] - mid
            if q < 0.0:
                count += 1
            for i in range(1, n):
                if q == 0.0:
                    q = 1e-300
                q = diag[i] - mid - off[i - 1] * off[i - 1] / q
                if q < 0.0:
                    count += 1
            if count > j:
                hi = mid
            else:
                lo = mid
        res[j] = 0.5 * (lo + hi)
    return out
