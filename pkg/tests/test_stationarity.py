import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from oracles import linear_min_box_1d
from trfds import registry
from trfds.fdgrad import forward_gradient
from trfds.problem import FeasibleSet, Problem
from trfds.stationarity import (
    MissingGradientError,
    StationarityReport,
    eta_bruteforce,
    eta_measure,
    measure_gap,
    psi_measure,
)


def slsqp_eta(g, x, omega, r):
    """Independent route: solve the linear program with SLSQP."""
    cons = [{"type": "ineq", "fun": lambda s: r * r - s @ s, "jac": lambda s: -2 * s}]
    bounds = None
    if omega.kind == "box":
        bounds = list(zip(omega.lower - x, omega.upper - x))
    else:
        cons.append({"type": "ineq", "fun": lambda s: omega.radius ** 2 - (x + s - omega.center) @ (x + s - omega.center),
                     "jac": lambda s: -2 * (x + s - omega.center)})
    res = minimize(lambda s: g @ s, np.zeros_like(g), jac=lambda s: g, bounds=bounds, constraints=cons,
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return max(0.0, -res.fun / r)


def random_box_point(rng, n=2):
    lo = -rng.uniform(0, 2, n)
    hi = lo + rng.uniform(0.2, 3, n)
    u = rng.uniform(0, 1, n)
    u = np.where(rng.uniform(size=n) < 0.3, np.round(u), u)  # some coordinates on faces
    return FeasibleSet.box(lo, hi), lo + u * (hi - lo)


class TestEta:
    @pytest.mark.parametrize("r", [1e-3, 1.0, 50.0])
    def test_all_space_is_gradient_norm(self, r):
        assert eta_measure(np.array([3.0, 4.0]), np.zeros(2), FeasibleSet.all_space(2), r) == 5.0

    def test_one_dimensional_box(self):
        box = FeasibleSet.box([0.0], [1.0])
        eta = eta_measure(np.array([2.0]), np.array([0.5]), box, 1.0)
        assert eta == pytest.approx(-linear_min_box_1d(2.0, 0.5, 0.0, 1.0, 1.0) / 1.0, abs=1e-9)
        assert eta == pytest.approx(1.0, abs=1e-9)

    def test_two_dimensional_box_matches_grid(self):
        # radius covers the box, so the minimizer is a box vertex, which lies on the grid
        rng = np.random.default_rng(11)
        for _ in range(25):
            box, x = random_box_point(rng)
            g = rng.standard_normal(2)
            r = float(np.linalg.norm(box.upper - box.lower)) * rng.uniform(1.0, 2.0)
            assert eta_measure(g, x, box, r) == pytest.approx(eta_bruteforce(g, x, box, r, pitch=r / 500), abs=1e-4)

    @pytest.mark.parametrize("use_ball", [False, True])
    def test_curved_boundary_within_grid_resolution(self, use_ball):
        rng = np.random.default_rng(12 + use_ball)
        for _ in range(25):
            if use_ball:
                c = rng.standard_normal(2)
                omega = FeasibleSet.ball(c, rng.uniform(0.3, 2))
                x = omega.project(c + rng.standard_normal(2))
            else:
                omega, x = random_box_point(rng)
            g = rng.standard_normal(2)
            r = rng.uniform(0.1, 3)
            ours = eta_measure(g, x, omega, r)
            grid = eta_bruteforce(g, x, omega, r, pitch=r / 500)
            # grid points are feasible, so the grid never beats the true value;
            # near a curved boundary it can fall short by up to ||g|| sqrt(2) pitch / r
            assert grid <= ours + 1e-9
            assert ours <= grid + np.linalg.norm(g) * math.sqrt(2) / 500 + 1e-9
            assert ours == pytest.approx(slsqp_eta(g, x, omega, r), abs=1e-6)

    def test_bruteforce_limited_to_three_dimensions(self):
        with pytest.raises(ValueError):
            eta_bruteforce(np.ones(4), np.zeros(4), FeasibleSet.all_space(4), 1.0)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
    def test_positive_homogeneity(self, seed, c):
        rng = np.random.default_rng(seed)
        box, x = random_box_point(rng, 3)
        g = rng.standard_normal(3)
        r = rng.uniform(0.1, 3)
        base = eta_measure(g, x, box, r)
        assert eta_measure(c * g, x, box, r) == pytest.approx(c * base, rel=1e-6, abs=1e-8 * c)

    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        box, x = random_box_point(rng, 3)
        assert eta_measure(rng.standard_normal(3), x, box, rng.uniform(0.1, 3)) >= 0.0

    def test_monotone_in_radius(self):
        rng = np.random.default_rng(13)
        radii = [0.1, 0.3, 1.0, 3.0, 10.0]
        for _ in range(10):
            box, x = random_box_point(rng)
            g = rng.standard_normal(2)
            ours = [eta_measure(g, x, box, r) for r in radii]
            grid = [eta_bruteforce(g, x, box, r) for r in radii]
            assert all(a >= b * (1 - 1e-7) for a, b in zip(ours, ours[1:]))
            res = np.linalg.norm(g) * math.sqrt(2) / 500
            assert all(a >= b - res for a, b in zip(grid, grid[1:]))
        g = np.array([1.0, -2.0])
        assert len({eta_measure(g, np.zeros(2), FeasibleSet.all_space(2), r) for r in radii}) == 1


class TestPsi:
    def test_interior_stationary_point(self):
        p = registry.quadratic((1.0, 5.0), seed=3)
        p = p.with_set(FeasibleSet.box([-1, -1], [1, 1]))
        assert psi_measure(p, np.zeros(2), 1.0) == 0.0

    def test_face_minimum_with_inward_gradient(self):
        # (x+1)^2 on [0, 1]: minimizer x = 0, f'(0) = 2 points into the box
        p = Problem(lambda x: float((x[0] + 1) ** 2), [0.0], FeasibleSet.box([0.0], [1.0]),
                    exact_gradient=lambda x: np.array([2 * (x[0] + 1)]))
        assert psi_measure(p, np.array([0.0]), 1.0) == 0.0

    def test_nonstationary_point(self):
        p = registry.sphere(2)
        assert psi_measure(p, np.array([0.3, 0.0]), 1.0) > 0.0

    def test_missing_gradient(self):
        with pytest.raises(MissingGradientError):
            psi_measure(Problem(lambda x: 0.0, [0.0]), np.zeros(1), 1.0)


class TestGap:
    def test_exact_gradient_has_zero_gap(self):
        p = registry.sphere(3)
        x = np.array([0.5, -1.0, 2.0])
        rep = measure_gap(p, x, p.gradient(x), 1.0, 1e-3, 2.0)
        assert rep.gap == 0.0 and rep.bound_ok

    def test_separable_equality_case(self):
        p = Problem(lambda x: 0.5 * float(x @ x), [1.0, 1.0], exact_gradient=lambda x: x.copy())
        x = np.ones(2)
        g = forward_gradient(p, x, 0.2, p.evaluate(x)).g
        rep = measure_gap(p, x, g, 1.0, 0.2, 1.0)
        assert rep.gap == pytest.approx(rep.bound, rel=1e-12)
        assert rep.bound == pytest.approx(0.1 * math.sqrt(2), rel=1e-15)
        assert rep.bound_ok

    def test_report_lines(self):
        lines = StationarityReport(r=1.0, eta=0.5).lines()
        assert lines == ["r=1.0", "eta=0.5"]

    def test_random_sweep(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            A = rng.standard_normal((n, n))
            Q = A @ A.T + 0.1 * np.eye(n)
            L = float(np.linalg.eigvalsh(Q).max())
            lo = -rng.uniform(0.5, 2, n)
            box = FeasibleSet.box(lo, lo + rng.uniform(0.5, 3, n))
            p = Problem(lambda z: 0.5 * float(z @ Q @ z), lo, box, exact_gradient=lambda z: Q @ z)
            x = lo + rng.uniform(0, 1, n) * (box.upper - lo)
            tau = 10 ** rng.uniform(-6, -1)
            g = forward_gradient(p, x, tau, p.evaluate(x)).g
            assert measure_gap(p, x, g, rng.uniform(0.1, 5), tau, L).bound_ok

    def test_eta_exceeds_half_psi_when_far_from_stationary(self):
        rng = np.random.default_rng(22)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(1, 5))
            A = rng.standard_normal((n, n))
            Q = A @ A.T + 0.1 * np.eye(n)
            L = float(np.linalg.eigvalsh(Q).max())
            lo = -rng.uniform(0.5, 2, n)
            box = FeasibleSet.box(lo, lo + rng.uniform(0.5, 3, n))
            p = Problem(lambda z: 0.5 * float(z @ Q @ z), lo, box, exact_gradient=lambda z: Q @ z)
            x = lo + rng.uniform(0, 1, n) * (box.upper - lo)
            eps = 10 ** rng.uniform(-3, 0)
            sigma = 10 ** rng.uniform(-1, 2)
            tau0 = eps / (sigma * math.sqrt(n))
            tau = tau0 * rng.uniform(0.01, 1)
            r = 1000.0
            psi = psi_measure(p, x, r)
            if not psi > L * eps / sigma:
                continue
            g = forward_gradient(p, x, tau, p.evaluate(x)).g
            assert eta_measure(g, x, box, r) > 0.5 * psi
            checked += 1
        assert checked >= 20
