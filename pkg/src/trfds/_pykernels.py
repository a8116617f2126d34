"""Pure-Python implementations of the numerical kernels.

These mirror ``_ckernels.pyx`` one to one and are used whenever the compiled
extension is unavailable (or ``TRFDS_PURE_PYTHON=1`` is set).

Set codes
---------
``SET_BOX``  : intersection of ``{d : ||d|| <= delta}`` with ``{lo <= d <= hi}``
``SET_BALL`` : intersection of ``{d : ||d|| <= delta}`` with ``{||d - a|| <= radius}``

Model codes for the integrator
------------------------------
``MODEL_DECAY``    : y' = -p[0] * y (componentwise)
``MODEL_PREDPREY`` : Rosenzweig-MacArthur predator-prey system,
                     p = (zeta, theta, lambda, mu, nu, xi)
"""
import math

import numpy as np

SET_BOX = 0
SET_BALL = 1

MODEL_DECAY = 0
MODEL_PREDPREY = 1

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_MAX_STEPS = 3


def _ball(v, center, radius):
    diff = v - center
    nrm = math.sqrt(float(diff @ diff))
    if nrm <= radius:
        return v.copy()
    return center + diff * (radius / nrm)


def _second(v, kind, a, b, radius):
    if kind == SET_BOX:
        return np.minimum(np.maximum(v, a), b)
    return _ball(v, a, radius)


def dykstra(v, delta, kind, a, b, radius, tol, maxit):
    """Project ``v`` onto the trust ball intersected with a box or ball.

    Returns ``(d, iterations)``. ``iterations == maxit`` signals the cap was hit.
    """
    v = np.asarray(v, dtype=float)
    zero = np.zeros_like(v)
    x = v.copy()
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    it = 0
    while it < maxit:
        it += 1
        y = _ball(x + p, zero, delta)
        p = x + p - y
        x_new = _second(y + q, kind, a, b, radius)
        q = y + q - x_new
        change = x_new - x
        x = x_new
        if math.sqrt(float(change @ change)) <= tol:
            break
    return x, it


def fista(H, g, d0, delta, kind, a, b, radius, step, tol, maxit, dyk_tol, dyk_maxit):
    """Accelerated projected gradient on ``<g, d> + 0.5 <H d, d>``.

    Uses gradient-based adaptive restart and keeps the best iterate seen, so
    the returned model value never exceeds that of the projected start.
    Returns ``(d, iterations, dykstra_cap_hits)``.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    caps = 0
    d, it_d = dykstra(d0, delta, kind, a, b, radius, dyk_tol, dyk_maxit)
    caps += it_d >= dyk_maxit
    best = d.copy()
    best_val = float(g @ d + 0.5 * d @ (H @ d))
    y = d.copy()
    t = 1.0
    it = 0
    while it < maxit:
        it += 1
        grad = H @ y + g
        d_new, it_d = dykstra(y - step * grad, delta, kind, a, b, radius, dyk_tol, dyk_maxit)
        caps += it_d >= dyk_maxit
        val = float(g @ d_new + 0.5 * d_new @ (H @ d_new))
        if val < best_val:
            best_val = val
            best = d_new.copy()
        diff = d_new - d
        if float((y - d_new) @ diff) > 0.0:
            t_new = 1.0
            y = d_new.copy()
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = d_new + ((t - 1.0) / t_new) * diff
        d = d_new
        t = t_new
        if math.sqrt(float(diff @ diff)) <= tol:
            break
    return best, it, caps


# Dormand-Prince 5(4) tableau with the standard 4th-order continuous extension.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _rhs(model, p, y):
    if model == MODEL_DECAY:
        return -p[0] * y
    zeta, theta, lam, mu, nu, xi = p[0], p[1], p[2], p[3], p[4], p[5]
    Y, Z = y[0], y[1]
    sat = Y * Z / (mu + Y)
    return np.array([zeta * Y * (1.0 - Y / theta) - lam * sat, nu * sat - xi * Z])


def _initial_step(model, p, t0, y0, f0, rtol, atol, direction_span):
    scale = atol + np.abs(y0) * rtol
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = _rhs(model, p, y1)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri5(model, params, y0, t_eval, rtol, atol, max_step, max_steps):
    """Adaptive Dormand-Prince 5(4) with dense output at ``t_eval``.

    ``t_eval`` must be increasing with ``t_eval[0]`` the initial time.
    Returns ``(Y, status)`` where ``Y`` has shape ``(len(t_eval), len(y0))``;
    rows after a failure are NaN.
    """
    p = np.asarray(params, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    y = np.array(y0, dtype=float)
    dim = y.shape[0]
    n_out = t_eval.shape[0]
    out = np.full((n_out, dim), np.nan)
    out[0] = y
    if n_out == 1:
        return out, STATUS_OK
    t = float(t_eval[0])
    t_end = float(t_eval[-1])
    f = _rhs(model, p, y)
    h = _initial_step(model, p, t, y, f, rtol, atol, t_end - t)
    h = min(h, max_step)
    K = np.empty((7, dim))
    j = 1
    steps = 0
    while j < n_out:
        if steps >= max_steps:
            return out, STATUS_MAX_STEPS
        min_step = 10.0 * abs(np.nextafter(t, math.inf) - t)
        if h < min_step:
            return out, STATUS_STEP_UNDERFLOW
        h = min(h, t_end - t)
        K[0] = f
        for s in range(1, 6):
            dy = np.zeros(dim)
            for m, a in enumerate(_A[s]):
                dy += a * K[m]
            K[s] = _rhs(model, p, y + h * dy)
        y_new = y + h * (_B @ K[:6])
        f_new = _rhs(model, p, y_new)
        K[6] = f_new
        steps += 1
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            h *= 0.2
            continue
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = math.sqrt(float(np.mean(((h * (_E @ K)) / scale) ** 2)))
        if err <= 1.0:
            t_new = t + h
            if t_new >= t_end:
                t_new = t_end
            Q = K.T @ _P
            while j < n_out and t_eval[j] <= t_new:
                x = (t_eval[j] - t) / h
                out[j] = y + h * (Q @ np.array([x, x * x, x ** 3, x ** 4]))
                j += 1
            t, y, f = t_new, y_new, f_new
            factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h = min(h * factor, max_step)
    if not np.all(np.isfinite(out)):
        return out, STATUS_NONFINITE
    return out, STATUS_OK
