# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels. Same API and semantics as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite, pow, nextafter, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    SET_BOX = 0
    SET_BALL = 1
    MODEL_DECAY = 0
    MODEL_PREDPREY = 1


cdef inline void _ball(double* v, double* center, double radius, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, dv
    for i in range(n):
        dv = v[i] - (center[i] if center != NULL else 0.0)
        s += dv * dv
    s = sqrt(s)
    if s <= radius:
        for i in range(n):
            out[i] = v[i]
    else:
        for i in range(n):
            if center != NULL:
                out[i] = center[i] + (v[i] - center[i]) * (radius / s)
            else:
                out[i] = v[i] * (radius / s)


cdef inline void _second(double* v, int kind, double* a, double* b, double radius,
                         double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double z
    if kind == SET_BOX:
        for i in range(n):
            z = v[i]
            if z < a[i]:
                z = a[i]
            if z > b[i]:
                z = b[i]
            out[i] = z
    else:
        _ball(v, a, radius, out, n)


cdef Py_ssize_t _dykstra(double* v, double delta, int kind, double* a, double* b, double radius,
                         double tol, Py_ssize_t maxit, double* x, double* work, Py_ssize_t n) noexcept nogil:
    # work holds 4n doubles: p, q, y, tmp
    cdef double* p = work
    cdef double* q = work + n
    cdef double* y = work + 2 * n
    cdef double* tmp = work + 3 * n
    cdef Py_ssize_t i, it = 0
    cdef double change, xi
    for i in range(n):
        x[i] = v[i]
        p[i] = 0.0
        q[i] = 0.0
    while it < maxit:
        it += 1
        for i in range(n):
            tmp[i] = x[i] + p[i]
        _ball(tmp, NULL, delta, y, n)
        for i in range(n):
            p[i] = tmp[i] - y[i]
            tmp[i] = y[i] + q[i]
        _second(tmp, kind, a, b, radius, tmp, n)
        change = 0.0
        for i in range(n):
            xi = tmp[i]
            q[i] = y[i] + q[i] - xi
            change += (xi - x[i]) * (xi - x[i])
            x[i] = xi
        if sqrt(change) <= tol:
            break
    return it


def dykstra(v, double delta, int kind, a, b, double radius, double tol, Py_ssize_t maxit):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    out = np.empty(n)
    cdef double[::1] oo = out
    cdef double* work = <double*> malloc(4 * n * sizeof(double))
    cdef Py_ssize_t it
    try:
        it = _dykstra(&vv[0], delta, kind, &aa[0], &bb[0], radius, tol, maxit, &oo[0], work, n)
    finally:
        free(work)
    return out, it


cdef inline double _model(double* H, double* g, double* d, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double val = 0.0, hd
    for i in range(n):
        hd = 0.0
        for j in range(n):
            hd += H[i * n + j] * d[j]
        val += g[i] * d[i] + 0.5 * d[i] * hd
    return val


def fista(H, g, d0, double delta, int kind, a, b, double radius, double step, double tol,
          Py_ssize_t maxit, double dyk_tol, Py_ssize_t dyk_maxit):
    cdef double[:, ::1] HH = np.ascontiguousarray(H, dtype=np.float64)
    cdef double[::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[::1] dd0 = np.ascontiguousarray(d0, dtype=np.float64)
    cdef double[::1] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = gg.shape[0]
    best_arr = np.empty(n)
    cdef double[::1] best = best_arr
    cdef double* buf = <double*> malloc(9 * n * sizeof(double))
    cdef double* work = buf
    cdef double* d = buf + 4 * n
    cdef double* y = buf + 5 * n
    cdef double* dn = buf + 6 * n
    cdef double* tmp = buf + 7 * n
    cdef double* diff = buf + 8 * n
    cdef double* Hp = &HH[0, 0]
    cdef Py_ssize_t i, j, it = 0, caps = 0, itd
    cdef double t = 1.0, t_new, val, best_val, gradi, ndiff, restart, mom
    with nogil:
        itd = _dykstra(&dd0[0], delta, kind, &aa[0], &bb[0], radius, dyk_tol, dyk_maxit, d, work, n)
        if itd >= dyk_maxit:
            caps += 1
        for i in range(n):
            best[i] = d[i]
            y[i] = d[i]
        best_val = _model(Hp, &gg[0], d, n)
        while it < maxit:
            it += 1
            for i in range(n):
                gradi = gg[i]
                for j in range(n):
                    gradi += Hp[i * n + j] * y[j]
                tmp[i] = y[i] - step * gradi
            itd = _dykstra(tmp, delta, kind, &aa[0], &bb[0], radius, dyk_tol, dyk_maxit, dn, work, n)
            if itd >= dyk_maxit:
                caps += 1
            val = _model(Hp, &gg[0], dn, n)
            if val < best_val:
                best_val = val
                for i in range(n):
                    best[i] = dn[i]
            restart = 0.0
            ndiff = 0.0
            for i in range(n):
                diff[i] = dn[i] - d[i]
                restart += (y[i] - dn[i]) * diff[i]
                ndiff += diff[i] * diff[i]
            if restart > 0.0:
                t_new = 1.0
                for i in range(n):
                    y[i] = dn[i]
            else:
                t_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
                mom = (t - 1.0) / t_new
                for i in range(n):
                    y[i] = dn[i] + mom * diff[i]
            for i in range(n):
                d[i] = dn[i]
            t = t_new
            if sqrt(ndiff) <= tol:
                break
    free(buf)
    return best_arr, it, caps


# Dormand-Prince 5(4) coefficients
cdef double[6][5] A_ = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656],
]
cdef double[6] B_ = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
cdef double[7] E_ = [-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920, 17253.0 / 339200, -22.0 / 525, 1.0 / 40]
cdef double[7][4] P_ = [
    [1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799],
    [0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072],
    [0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632],
    [0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844],
    [0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423],
]


cdef inline void _rhs(int model, double* p, double* y, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double sat
    if model == MODEL_DECAY:
        for i in range(n):
            out[i] = -p[0] * y[i]
    else:
        sat = y[0] * y[1] / (p[3] + y[0])
        out[0] = p[0] * y[0] * (1.0 - y[0] / p[1]) - p[2] * sat
        out[1] = p[4] * sat - p[5] * y[1]


cdef inline double _rms(double* v, double* scale, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, z
    for i in range(n):
        z = v[i] / scale[i]
        s += z * z
    return sqrt(s / n)


def dopri5(int model, params, y0, t_eval, double rtol, double atol, double max_step, Py_ssize_t max_steps):
    cdef double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] te = np.ascontiguousarray(t_eval, dtype=np.float64)
    cdef double[::1] yy0 = np.ascontiguousarray(y0, dtype=np.float64)
    cdef Py_ssize_t n = yy0.shape[0]
    cdef Py_ssize_t n_out = te.shape[0]
    out_arr = np.full((n_out, n), np.nan)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, s, m, j = 1, steps = 0
    cdef int status = 0
    cdef double t, t_end, h, t_new, err, factor, x, x2, x3, x4, d0, d1, d2, h0, h1, min_step, q
    cdef double* buf = <double*> malloc(14 * n * sizeof(double))
    cdef double* y = buf
    cdef double* ynew = buf + n
    cdef double* f = buf + 2 * n
    cdef double* tmp = buf + 3 * n
    cdef double* scale = buf + 4 * n
    cdef double* errv = buf + 5 * n
    cdef double* K = buf + 6 * n   # 7 stages, 7n doubles
    cdef double* f1 = buf + 13 * n
    for i in range(n):
        y[i] = yy0[i]
        out[0, i] = y[i]
    if n_out == 1:
        free(buf)
        return out_arr, 0
    with nogil:
        t = te[0]
        t_end = te[n_out - 1]
        _rhs(model, &p[0], y, f, n)
        # initial step selection (Hairer, Norsett & Wanner)
        for i in range(n):
            scale[i] = atol + fabs(y[i]) * rtol
        d0 = _rms(y, scale, n)
        d1 = _rms(f, scale, n)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        if h0 > t_end - t:
            h0 = t_end - t
        for i in range(n):
            tmp[i] = y[i] + h0 * f[i]
        _rhs(model, &p[0], tmp, f1, n)
        for i in range(n):
            errv[i] = f1[i] - f[i]
        d2 = _rms(errv, scale, n) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = h0 * 1e-3
            if h1 < 1e-6:
                h1 = 1e-6
        else:
            h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
        h = 100.0 * h0 if 100.0 * h0 < h1 else h1
        if h > max_step:
            h = max_step
        while j < n_out:
            if steps >= max_steps:
                status = 3
                break
            min_step = 10.0 * fabs(nextafter(t, INFINITY) - t)
            if h < min_step:
                status = 2
                break
            if h > t_end - t:
                h = t_end - t
            for i in range(n):
                K[i] = f[i]
            for s in range(1, 6):
                for i in range(n):
                    q = 0.0
                    for m in range(s):
                        q += A_[s][m] * K[m * n + i]
                    tmp[i] = y[i] + h * q
                _rhs(model, &p[0], tmp, K + s * n, n)
            for i in range(n):
                q = 0.0
                for m in range(6):
                    q += B_[m] * K[m * n + i]
                ynew[i] = y[i] + h * q
            _rhs(model, &p[0], ynew, K + 6 * n, n)
            steps += 1
            factor = 1.0
            for i in range(n):
                if not (isfinite(ynew[i]) and isfinite(K[6 * n + i])):
                    factor = 0.0
            if factor == 0.0:
                h *= 0.2
                continue
            for i in range(n):
                q = 0.0
                for m in range(7):
                    q += E_[m] * K[m * n + i]
                errv[i] = h * q
                scale[i] = atol + (fabs(y[i]) if fabs(y[i]) > fabs(ynew[i]) else fabs(ynew[i])) * rtol
            err = _rms(errv, scale, n)
            if err <= 1.0:
                t_new = t + h
                if t_new >= t_end:
                    t_new = t_end
                while j < n_out and te[j] <= t_new:
                    x = (te[j] - t) / h
                    x2 = x * x
                    x3 = x2 * x
                    x4 = x3 * x
                    for i in range(n):
                        q = 0.0
                        for m in range(7):
                            q += K[m * n + i] * (P_[m][0] * x + P_[m][1] * x2 + P_[m][2] * x3 + P_[m][3] * x4)
                        out[j, i] = y[i] + h * q
                    j += 1
                t = t_new
                for i in range(n):
                    y[i] = ynew[i]
                    f[i] = K[6 * n + i]
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = 0.9 * pow(err, -0.2)
                    if factor > 10.0:
                        factor = 10.0
            else:
                factor = 0.9 * pow(err, -0.2)
                if factor < 0.2:
                    factor = 0.2
            h = h * factor
            if h > max_step:
                h = max_step
    free(buf)
    if status == 0 and not np.all(np.isfinite(out_arr)):
        status = 1
    return out_arr, status
