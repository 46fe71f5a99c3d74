"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``.

Same algorithms, same operation order; only slower.
"""

import math

import numpy as np

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0
A64, A65 = 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4 = 71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0
E5, E6, E7 = -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0

UNDECIDED, OVERSHOOT, UNDERSHOOT, NONFINITE = 0, 1, -1, 2


def _accel(r, y, dy, dev, omega, g1, g2, g3, g4):
    if dev:
        return y * (g1 + y * (g2 + y * (g3 + y * (g4 + y)))) - 2.0 * dy / r
    q2 = y * y
    return y * (omega - q2 + q2 * q2) - 2.0 * dy / r


def shoot(omega, q_eq, delta, r0, r_end, rtol, atol, threshold,
          h_grid=0.0, out_q=None, out_dq=None):
    a = q_eq - delta
    g1 = omega - 3.0 * q_eq * q_eq + 5.0 * q_eq ** 4
    g2 = -3.0 * q_eq + 10.0 * q_eq ** 3
    g3 = -1.0 + 10.0 * q_eq * q_eq
    g4 = 5.0 * q_eq
    dev = abs(delta) < 0.1 * q_eq
    atol_y = atol
    n_grid = 0
    filled = 0
    if out_q is not None and h_grid > 0.0:
        n_grid = out_q.shape[0]

    if dev:
        y = -delta
        src = y * (g1 + y * (g2 + y * (g3 + y * (g4 + y))))
        atol_y = atol * min(1.0, abs(delta))
    else:
        y = a
        src = a * (omega - a * a + a ** 4)
    y = y + src * r0 * r0 / 6.0
    dy = src * r0 / 3.0
    r = r0
    thr = threshold * a
    h_try = min(1e-3, 0.5 * r0 + 1e-4)

    q = y + q_eq if dev else y
    if dy >= 0.0 and q > thr:
        return OVERSHOOT, r, 0

    k1y = dy
    k1d = _accel(r, y, dy, dev, omega, g1, g2, g3, g4)
    while r < r_end:
        landed = False
        h = h_try
        if n_grid > 0:
            r_next = (filled + 1) * h_grid
            if r + h >= r_next:
                h = r_next - r
                landed = True
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
        sc = atol_y + rtol * max(abs(y), abs(yn))
        tmp = ey / sc
        err = tmp * tmp
        sc = atol_y + rtol * max(abs(dy), abs(dyn))
        tmp = ed / sc
        err = math.sqrt(0.5 * (err + tmp * tmp))
        if not math.isfinite(err):
            if h < 1e-14:
                return NONFINITE, r, filled
            h_try = 0.2 * h
            continue
        if err > 1.0:
            h_try = h * max(0.2, 0.9 * err ** -0.2)
            continue

        q = y + q_eq if dev else y
        qn = yn + q_eq if dev else yn
        r = r + h
        y = yn
        dy = dyn
        k1y = k7y
        k1d = k7d
        if landed:
            out_q[filled] = qn
            out_dq[filled] = dyn
            filled += 1
            r = filled * h_grid
            if filled >= n_grid:
                return UNDECIDED, r, filled
        if qn < 0.0:
            return UNDERSHOOT, r - h * qn / (qn - q), filled
        if dyn >= 0.0 and qn > thr:
            return OVERSHOOT, r, filled
        if dev and abs(y) > 0.1 * q_eq:
            dev = False
            y = qn
            atol_y = atol
            k1d = _accel(r, y, dy, dev, omega, g1, g2, g3, g4)
        if err < 1e-10:
            hnew = 5.0 * h
        else:
            hnew = h * min(5.0, 0.9 * err ** -0.2)
        if not landed or hnew > h_try:
            h_try = hnew
    return UNDECIDED, r, filled


def sturm_count(diag, off, x):
    n = len(diag)
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def bisect_eigenvalues(diag, off, k, lower, upper, tol):
    diag = [float(v) for v in diag]
    off = [float(v) for v in off]
    res = np.empty(k, dtype=np.float64)
    for j in range(k):
        lo, hi = lower, upper
        if j > 0:
            lo = max(lo, res[j - 1] - tol)
        while hi - lo > tol + 4e-16 * max(abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if sturm_count(diag, off, mid) > j:
                hi = mid
            else:
                lo = mid
        res[j] = 0.5 * (lo + hi)
    return res
