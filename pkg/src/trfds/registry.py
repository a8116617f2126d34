"""Built-in test problems, addressed by name.

Smooth model problems (sphere, convex quadratics with a prescribed spectrum,
Rosenbrock, a nonconvex Cauchy-loss function) come with analytic gradients
and, where known, Lipschitz / optimal-value / PL metadata. Ten problems from
the More-Wild least-squares collection are provided in the form
``f(x) = ||F(x)||^2`` with their standard starting points; their exact
gradients are computed by complex-step differentiation.
"""
from __future__ import annotations

import numpy as np

from .problem import FeasibleSet, Problem

MW_LOWER = 0.1
MW_UPPER = 20.0


def _complex_step_gradient(fun, x):
    x = np.asarray(x, dtype=float)
    h = 1e-30
    grad = np.empty_like(x)
    for i in range(x.size):
        xc = x.astype(complex)
        xc[i] += 1j * h
        grad[i] = np.imag(fun(xc)) / h
    return grad


def _least_squares(residual, x0, name):
    def f(x):
        r = residual(x)
        return float(np.sum(r * r))

    def fc(x):
        r = residual(x)
        return np.sum(r * r)

    return Problem(f, x0, name=name, exact_gradient=lambda x: _complex_step_gradient(fc, x))


# --- More-Wild residuals -------------------------------------------------------

def _linear_full_rank(x, m=45):
    n = x.size
    s = 2.0 * np.sum(x) / m
    r = np.empty(m, dtype=x.dtype)
    r[:n] = x - s - 1.0
    r[n:] = -s - 1.0
    return r


def _rosenbrock_res(x):
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def _helical_valley(x):
    x1, x2, x3 = x
    theta = np.arctan(x2 / x1) / (2 * np.pi)
    if np.real(x1) < 0:
        theta = theta + 0.5
    return np.array([10.0 * (x3 - 10.0 * theta), 10.0 * (np.sqrt(x1 ** 2 + x2 ** 2) - 1.0), x3])


def _powell_singular(x):
    x1, x2, x3, x4 = x
    return np.array([x1 + 10 * x2, np.sqrt(5.0) * (x3 - x4), (x2 - 2 * x3) ** 2, np.sqrt(10.0) * (x1 - x4) ** 2])


def _freudenstein_roth(x):
    x1, x2 = x
    return np.array([-13 + x1 + ((5 - x2) * x2 - 2) * x2, -29 + x1 + ((x2 + 1) * x2 - 14) * x2])


_BARD_Y = np.array([0.14, 0.18, 0.22, 0.25, 0.29, 0.32, 0.35, 0.39, 0.37, 0.58, 0.73, 0.96, 1.34, 2.10, 4.39])


def _bard(x):
    u = np.arange(1, 16, dtype=float)
    v = 16.0 - u
    w = np.minimum(u, v)
    return _BARD_Y - (x[0] + u / (x[1] * v + x[2] * w))


_KO_Y = np.array([0.1957, 0.1947, 0.1735, 0.1600, 0.0844, 0.0627, 0.0456, 0.0342, 0.0323, 0.0235, 0.0246])
_KO_U = np.array([4.0, 2.0, 1.0, 0.5, 0.25, 0.167, 0.125, 0.1, 0.0833, 0.0714, 0.0625])


def _kowalik_osborne(x):
    u = _KO_U
    return _KO_Y - x[0] * (u ** 2 + u * x[1]) / (u ** 2 + u * x[2] + x[3])


def _box3d(x):
    t = 0.1 * np.arange(1, 11)
    return np.exp(-t * x[0]) - np.exp(-t * x[1]) - x[2] * (np.exp(-t) - np.exp(-10 * t))


def _brown_dennis(x):
    t = np.arange(1, 21) / 5.0
    return (x[0] + t * x[1] - np.exp(t)) ** 2 + (x[2] + x[3] * np.sin(t) - np.cos(t)) ** 2


_OSB1_Y = np.array([
    0.844, 0.908, 0.932, 0.936, 0.925, 0.908, 0.881, 0.850, 0.818, 0.784, 0.751,
    0.718, 0.685, 0.658, 0.628, 0.603, 0.580, 0.558, 0.538, 0.522, 0.506, 0.490,
    0.478, 0.467, 0.457, 0.448, 0.438, 0.431, 0.424, 0.420, 0.414, 0.411, 0.406,
])


def _osborne1(x):
    t = 10.0 * np.arange(33)
    return _OSB1_Y - (x[0] + x[1] * np.exp(-t * x[3]) + x[2] * np.exp(-t * x[4]))


MORE_WILD = {
    "mw_linear_full_rank": (_linear_full_rank, np.ones(9)),
    "mw_rosenbrock": (_rosenbrock_res, np.array([-1.2, 1.0])),
    "mw_helical_valley": (_helical_valley, np.array([-1.0, 0.0, 0.0])),
    "mw_powell_singular": (_powell_singular, np.array([3.0, -1.0, 0.0, 1.0])),
    "mw_freudenstein_roth": (_freudenstein_roth, np.array([0.5, -2.0])),
    "mw_bard": (_bard, np.ones(3)),
    "mw_kowalik_osborne": (_kowalik_osborne, np.array([0.25, 0.39, 0.415, 0.39])),
    "mw_box3d": (_box3d, np.array([0.0, 10.0, 20.0])),
    "mw_brown_dennis": (_brown_dennis, np.array([25.0, 5.0, -5.0, -1.0])),
    "mw_osborne1": (_osborne1, np.array([0.5, 1.5, -1.0, 0.01, 0.02])),
}


# --- smooth model problems ------------------------------------------------------

def sphere(n: int = 5, x0=None) -> Problem:
    x0 = np.ones(n) if x0 is None else x0
    return Problem(
        lambda x: float(x @ x), x0, name="sphere",
        exact_gradient=lambda x: 2.0 * x, lipschitz=2.0, f_star=0.0, pl_mu=2.0,
    )


def quadratic(spectrum=(1.0, 10.0), seed: int = 0, x0=None, shift=None) -> Problem:
    """Convex quadratic ``0.5 (x - c)^T A (x - c)`` with eigenvalues ``spectrum``."""
    spectrum = np.asarray(spectrum, dtype=float)
    n = spectrum.size
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * spectrum) @ Q.T
    A = 0.5 * (A + A.T)
    c = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
    x0 = np.ones(n) if x0 is None else x0

    def f(x):
        r = x - c
        return float(0.5 * r @ (A @ r))

    mu = float(spectrum.min())
    return Problem(
        f, x0, name="quadratic", exact_gradient=lambda x: A @ (x - c),
        lipschitz=float(np.abs(spectrum).max()), f_star=0.0, pl_mu=mu if mu > 0 else None,
    )


def rosenbrock(x0=(-1.2, 1.0)) -> Problem:
    def f(x):
        return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)

    def grad(x):
        return np.array([
            -400.0 * x[0] * (x[1] - x[0] ** 2) - 2.0 * (1.0 - x[0]),
            200.0 * (x[1] - x[0] ** 2),
        ])

    return Problem(f, x0, name="rosenbrock", exact_gradient=grad, f_star=0.0)


def cauchy_loss(n: int = 2, seed: int = 0, x0=None) -> Problem:
    """Nonconvex ``sum log(1 + r_i^2)``, ``r = Q x - b`` with Q orthogonal.

    The gradient is 2-Lipschitz and the minimum value is 0.
    """
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    b = rng.standard_normal(n)
    x0 = np.full(n, 4.0) if x0 is None else x0

    def f(x):
        r = Q @ x - b
        return float(np.sum(np.log1p(r * r)))

    def grad(x):
        r = Q @ x - b
        return Q.T @ (2.0 * r / (1.0 + r * r))

    return Problem(f, x0, name="cauchy_loss", exact_gradient=grad, lipschitz=2.0, f_star=0.0)


def more_wild(name: str, box=None) -> Problem:
    """One of the built-in More-Wild problems.

    ``box`` may be ``(lower, upper)`` scalars or arrays; the problem is then
    posed with unrelaxable bounds and x0 projected onto them.
    """
    residual, x0 = MORE_WILD[name]
    p = _least_squares(residual, x0, name)
    if box is not None:
        lo, hi = box
        n = p.n
        p = p.with_set(FeasibleSet.box(np.broadcast_to(lo, n), np.broadcast_to(hi, n)), unrelaxable=True)
    return p


def more_wild_subset(box=(MW_LOWER, MW_UPPER)) -> list:
    return [more_wild(name, box) for name in MORE_WILD]


_BUILDERS = {
    "sphere": sphere,
    "quadratic": quadratic,
    "rosenbrock": rosenbrock,
    "cauchy_loss": cauchy_loss,
}


def list_problems() -> list:
    return sorted(_BUILDERS) + sorted(MORE_WILD)


def get_problem(name: str, **kwargs) -> Problem:
    if name in _BUILDERS:
        return _BUILDERS[name](**kwargs)
    if name in MORE_WILD:
        return more_wild(name, **kwargs)
    raise KeyError(f"unknown problem {name!r}; available: {', '.join(list_problems())}")
