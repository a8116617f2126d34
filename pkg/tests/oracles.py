"""Reference computations that share no code with the package.

Each routine here is a deliberately plain alternative route to a value the
package computes, used to derive expected values for the tests.
"""
import math

import numpy as np


def grid_model_min(g, H, delta, lower, upper, pitch, boundary=False):
    """Dense-grid minimum of ``<g, d> + 0.5 d^T H d`` over the disk of radius
    ``delta`` intersected with ``lower <= d <= upper`` (2-D).

    The rectangular grid includes the box edges. With ``boundary=True`` the
    arc of the circle inside the box is sampled at the same pitch and the
    circle/edge intersection points are added, so minimizers on the curved
    part of the boundary are resolved as well.
    """
    g = np.asarray(g, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lo = np.maximum(lower, -delta)
    hi = np.minimum(upper, delta)
    axes = [np.linspace(lo[i], hi[i], int(math.ceil((hi[i] - lo[i]) / pitch)) + 1) for i in range(2)]
    A, B = np.meshgrid(*axes, indexing="ij")
    S = np.stack([A.ravel(), B.ravel()], axis=1)
    if boundary:
        theta = np.linspace(0.0, 2 * math.pi, int(math.ceil(2 * math.pi * delta / pitch)) + 1)
        ring = delta * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = [ring]
        for i in range(2):
            j = 1 - i
            for c in (lower[i], upper[i]):
                if abs(c) < delta:
                    h = math.sqrt(delta * delta - c * c)
                    for sign in (-1.0, 1.0):
                        p = np.empty(2)
                        p[i], p[j] = c, sign * h
                        pts.append(p[None, :])
        extra = np.vstack(pts)
        inside = np.all(extra >= lower, axis=1) & np.all(extra <= upper, axis=1)
        S = S[np.einsum("ij,ij->i", S, S) <= delta * delta]
        # constructed on the circle; allow the rounding of cos/sin and sqrt
        S = np.vstack([S, extra[inside & (np.linalg.norm(extra, axis=1) <= delta * (1 + 1e-12))]])
    else:
        S = S[np.einsum("ij,ij->i", S, S) <= delta * delta]
    vals = S @ g + 0.5 * np.einsum("ij,jk,ik->i", S, H, S)
    return float(vals.min())


def linear_min_box_1d(g, x, lower, upper, r):
    """Closed form of ``min g*s`` over ``s in [lower-x, upper-x] & [-r, r]``."""
    lo = max(lower - x, -r)
    hi = min(upper - x, r)
    return min(g * lo, g * hi)


def scalar_trust_region(fun, grad, hess, x0, delta0=1.0, max_iter=100, tol=1e-12):
    """Exact-derivative 1-D trust region with exact subproblem solution."""
    x, delta = float(x0), delta0
    for k in range(max_iter):
        g, h = grad(x), hess(x)
        if abs(g) <= tol:
            return x, k
        step = -g / h if h > 0 and abs(g / h) <= delta else -math.copysign(delta, g)
        pred = -(g * step + 0.5 * h * step * step)
        rho = (fun(x) - fun(x + step)) / pred
        if rho >= 0.01:
            x += step
            delta *= 2.0
        else:
            delta *= 0.5
    return x, max_iter


def central_fd_projected_descent(fun, x0, lower, upper, max_evals, h=1e-6):
    """Projected gradient descent with central differences and Armijo
    backtracking; stops once ``max_evals`` function values are spent.
    Returns the lowest value seen."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    n = x.size
    evals = 0

    def f(z):
        nonlocal evals
        evals += 1
        return fun(z)

    fx = f(x)
    best = fx
    step = 1.0
    while evals + 2 * n + 1 <= max_evals:
        g = np.empty(n)
        for i in range(n):
            hi_ = min(h, upper[i] - x[i])
            lo_ = min(h, x[i] - lower[i])
            e = np.zeros(n)
            e[i] = 1.0
            g[i] = (f(x + hi_ * e) - f(x - lo_ * e)) / (hi_ + lo_)
        step = min(step * 4.0, 1e6)
        while evals < max_evals:
            xn = np.clip(x - step * g, lower, upper)
            fn = f(xn)
            if fn <= fx + 1e-4 * g @ (xn - x):
                x, fx = xn, fn
                best = min(best, fx)
                break
            step *= 0.5
            if step < 1e-20:
                return best
    return best
