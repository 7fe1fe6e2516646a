# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) kernel for the registered benchmark fields.

Mirrors the tableau and step-size controller of ``_rk45_np`` exactly; the
vector field is selected by integer id so the inner loop stays in C.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, fmax, fmin, isfinite, nextafter, pow, sqrt

cnp.import_array()

DEF MAXD = 4

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0

cdef int STATUS_RUNNING = 0
cdef int STATUS_ESCAPED = 2
cdef int STATUS_FAILED = 3

# Butcher tableau (identical constants to the numpy backend).
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


cdef inline void _rhs(int sys_id, double* p, double u, double sgn,
                      double* x, double* out) noexcept nogil:
    cdef double x0 = x[0]
    cdef double x1
    if sys_id == 0:      # scalar linear
        out[0] = p[0] * x0
    elif sys_id == 1:    # 2d diagonal linear
        out[0] = p[0] * x0
        out[1] = p[1] * x[1]
    elif sys_id == 2:    # harmonic oscillator
        out[0] = x[1]
        out[1] = -x0
    elif sys_id == 3:    # bistable scalar
        out[0] = x0 - x0 * x0 * x0
    elif sys_id == 4:    # damped duffing
        x1 = x[1]
        out[0] = x1
        out[1] = x0 - x0 * x0 * x0 - p[0] * x1
    elif sys_id == 5:    # undamped duffing
        out[0] = x[1]
        out[1] = x0 - x0 * x0 * x0
    elif sys_id == 6:    # controlled bistable
        out[0] = x0 - x0 * x0 * x0 + u
    else:                # controlled scalar linear
        out[0] = p[0] * x0 + u
    if sgn < 0:
        out[0] = -out[0]
        if sys_id == 1 or sys_id == 2 or sys_id == 4 or sys_id == 5:
            out[1] = -out[1]


cdef inline double _rms_scaled(double* v, double* scale, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef double r
    cdef int i
    for i in range(d):
        r = v[i] / scale[i]
        acc += r * r
    return sqrt(acc / d)


cdef double _initial_step(int sys_id, double* p, double u, double sgn, int d,
                          double* y0, double* f0, double t_span,
                          double rtol, double atol) noexcept nogil:
    cdef double scale[MAXD]
    cdef double tmp[MAXD]
    cdef double y1[MAXD]
    cdef double f1[MAXD]
    cdef int i
    cdef double d0, d1, d2, h0, h1, dm
    for i in range(d):
        scale[i] = atol + fabs(y0[i]) * rtol
    d0 = _rms_scaled(y0, scale, d)
    d1 = _rms_scaled(f0, scale, d)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(d):
        y1[i] = y0[i] + h0 * f0[i]
    _rhs(sys_id, p, u, sgn, y1, f1)
    for i in range(d):
        tmp[i] = f1[i] - f0[i]
    d2 = _rms_scaled(tmp, scale, d) / h0
    dm = fmax(d1, d2)
    if dm <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / dm, 0.2)
    return fmin(fmin(100.0 * h0, h1), t_span)


cdef int _path(int sys_id, double* p, double u, double sgn, int d,
               double* y, double[::1] ts, double rtol, double atol,
               double escape_bound, double[:, ::1] out, double* t_reached) noexcept nogil:
    """Integrate one trajectory through all target times; returns status."""
    cdef double K[7][MAXD]
    cdef double ys[MAXD]
    cdef double ynew[MAXD]
    cdef double err[MAXD]
    cdef double scale[MAXD]
    cdef double t = 0.0
    cdef double h_abs = 0.0
    cdef double h, t_new, t_target, min_step, err_norm, raw, grow, mx
    cdef int i, j, k, rejected = 0, inited = 0
    cdef long attempts = 0
    cdef int status = STATUS_RUNNING

    for i in range(d):
        if not isfinite(y[i]) or fabs(y[i]) > escape_bound:
            status = STATUS_ESCAPED

    _rhs(sys_id, p, u, sgn, y, K[0])

    for j in range(ts.shape[0]):
        t_target = ts[j]
        if status == STATUS_RUNNING and t_target > t:
            if not inited:
                h_abs = _initial_step(sys_id, p, u, sgn, d, y, K[0], t_target, rtol, atol)
                inited = 1
            while t < t_target:
                attempts += 1
                if attempts > 10000000:
                    status = STATUS_FAILED
                    break
                min_step = 10.0 * fabs(nextafter(t, 1e308) - t)
                if h_abs < min_step:
                    h_abs = min_step
                if h_abs >= t_target - t:
                    t_new = t_target
                else:
                    t_new = t + h_abs
                h = t_new - t

                for i in range(d):
                    ys[i] = y[i] + h * (A21 * K[0][i])
                _rhs(sys_id, p, u, sgn, ys, K[1])
                for i in range(d):
                    ys[i] = y[i] + h * (A31 * K[0][i] + A32 * K[1][i])
                _rhs(sys_id, p, u, sgn, ys, K[2])
                for i in range(d):
                    ys[i] = y[i] + h * (A41 * K[0][i] + A42 * K[1][i] + A43 * K[2][i])
                _rhs(sys_id, p, u, sgn, ys, K[3])
                for i in range(d):
                    ys[i] = y[i] + h * (A51 * K[0][i] + A52 * K[1][i] + A53 * K[2][i]
                                        + A54 * K[3][i])
                _rhs(sys_id, p, u, sgn, ys, K[4])
                for i in range(d):
                    ys[i] = y[i] + h * (A61 * K[0][i] + A62 * K[1][i] + A63 * K[2][i]
                                        + A64 * K[3][i] + A65 * K[4][i])
                _rhs(sys_id, p, u, sgn, ys, K[5])
                for i in range(d):
                    ynew[i] = y[i] + h * (B1 * K[0][i] + B3 * K[2][i] + B4 * K[3][i]
                                          + B5 * K[4][i] + B6 * K[5][i])
                _rhs(sys_id, p, u, sgn, ynew, K[6])
                for i in range(d):
                    err[i] = h * (E1 * K[0][i] + E3 * K[2][i] + E4 * K[3][i]
                                  + E5 * K[4][i] + E6 * K[5][i] + E7 * K[6][i])
                    scale[i] = atol + fmax(fabs(y[i]), fabs(ynew[i])) * rtol
                err_norm = _rms_scaled(err, scale, d)
                if not isfinite(err_norm):
                    err_norm = INFINITY

                if err_norm < 1.0:
                    if err_norm == 0.0:
                        grow = MAX_FACTOR
                    else:
                        raw = SAFETY * pow(err_norm, -0.2)
                        grow = fmin(MAX_FACTOR, raw)
                    if rejected:
                        grow = fmin(1.0, grow)
                    t = t_new
                    for i in range(d):
                        y[i] = ynew[i]
                        K[0][i] = K[6][i]
                    h_abs = h * grow
                    rejected = 0
                    mx = 0.0
                    for i in range(d):
                        if not isfinite(y[i]):
                            status = STATUS_ESCAPED
                        elif fabs(y[i]) > mx:
                            mx = fabs(y[i])
                    if mx > escape_bound:
                        status = STATUS_ESCAPED
                    if status != STATUS_RUNNING:
                        break
                else:
                    raw = SAFETY * pow(err_norm, -0.2)
                    h_abs = h * fmax(MIN_FACTOR, raw)
                    rejected = 1
                    if h_abs < min_step:
                        status = STATUS_FAILED
                        break
        for i in range(d):
            out[j, i] = y[i]
    t_reached[0] = t
    return status


def rk45_batch_path(int sys_id, double[::1] params, double u, double sgn,
                    double[:, ::1] y0, double[::1] ts,
                    double rtol, double atol, double escape_bound):
    """Sample each trajectory in ``y0`` (m, d) at the increasing times ``ts``.

    Returns (states (m, k, d), status (m,), t_reached (m,)).
    """
    cdef Py_ssize_t m = y0.shape[0]
    cdef int d = <int> y0.shape[1]
    cdef Py_ssize_t k = ts.shape[0]
    if d > MAXD:
        raise ValueError("compiled kernel supports dimension <= %d" % MAXD)
    cdef cnp.ndarray out_arr = np.empty((m, k, d), dtype=np.float64)
    cdef cnp.ndarray status_arr = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray treach_arr = np.empty(m, dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef long[::1] status = status_arr
    cdef double[::1] treach = treach_arr
    cdef double y[MAXD]
    cdef double p[MAXD]
    cdef double tr
    cdef Py_ssize_t r
    cdef int i
    for i in range(params.shape[0]):
        p[i] = params[i]
    if params.shape[0] == 0:
        p[0] = 0.0
    with nogil:
        for r in range(m):
            for i in range(d):
                y[i] = y0[r, i]
            status[r] = _path(sys_id, p, u, sgn, d, y, ts, rtol, atol,
                              escape_bound, out[r], &tr)
            treach[r] = tr
    return out_arr, status_arr, treach_arr
