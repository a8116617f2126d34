import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trfds import registry
from trfds.bench import (
    DEFAULT_SOLVERS,
    ConvergenceTest,
    DataProfile,
    SolverSpec,
    data_profile,
    read_profile_csv,
    render_profile,
    run_suite,
    write_profile_csv,
    write_summary_csv,
)
from trfds.driver import RunRecord
from trfds.problem import Problem


def record(problem, solver, n, values):
    return RunRecord(problem=problem, solver=solver, n=n, values=list(values), feasible=[True] * len(values))


def fixture_records():
    return [
        record("p1", "A", 1, [10, 8, 4, 1]),
        record("p1", "B", 1, [10, 9, 7, 6]),
        record("p2", "A", 2, [5, 5, 5, 5, 5, 5]),
        record("p2", "B", 2, [5, 4, 3, 2, 0, 0]),
        record("p3", "A", 1, [2, 1, 0]),
        record("p3", "B", 1, [2, 0]),
    ]


class TestConvergenceTest:
    def test_threshold(self):
        t = ConvergenceTest(0.1, f0=10.0, f_best=0.0)
        assert t.satisfied(1.0)
        assert not t.satisfied(1.5)

    def test_first_solved_uses_best_so_far(self):
        t = ConvergenceTest(0.5, f0=4.0, f_best=0.0)
        assert t.first_solved([4.0, 3.0, 2.0, 2.0]) == 3
        assert t.first_solved([4.0, 4.0]) is None

    @pytest.mark.parametrize("tol", [0.0, 1.0, -0.1])
    def test_tolerance_range(self, tol):
        with pytest.raises(ValueError):
            ConvergenceTest(tol)


class TestDataProfile:
    def test_hand_computed_three_problem_fixture(self):
        # tolerance 0.1 thresholds: p1 f <= 1.9, p2 f <= 0.5, p3 f <= 0.2
        # A solves p1 at eval 4 (alpha 2), p3 at eval 3 (alpha 1.5), never p2
        # B solves p2 at eval 5 (alpha 5/3), p3 at eval 2 (alpha 1), never p1
        prof = data_profile(fixture_records(), ConvergenceTest(0.1))
        np.testing.assert_array_equal(prof.alphas, [0.0, 1.0, 1.5, 5 / 3, 2.0])
        assert prof.solvers == ["A", "B"]
        np.testing.assert_array_equal(prof.fractions["A"], [0, 0, 1 / 3, 1 / 3, 2 / 3])
        np.testing.assert_array_equal(prof.fractions["B"], [0, 1 / 3, 1 / 3, 2 / 3, 2 / 3])

    def test_single_problem_step_in_simplex_units(self):
        recs = [record("p", "A", 2, [3, 3, 3, 3, 0, 0])]  # solved at evaluation 5
        prof = data_profile(recs, ConvergenceTest(0.1), alphas=[0, 1, 5 / 3 - 1e-12, 5 / 3, 2])
        np.testing.assert_array_equal(prof.fractions["A"], [0, 0, 0, 1, 1])

    def test_never_solving_is_zero(self):
        recs = [record("p", "A", 1, [1, 1, 1]), record("p", "B", 1, [1, 0])]
        prof = data_profile(recs, ConvergenceTest(0.1))
        assert not prof.fractions["A"].any()

    def test_one_of_two_solved_plateaus_at_half(self):
        recs = [record("p", "A", 1, [1, 0]), record("q", "A", 1, [1, 1]), record("q", "B", 1, [1, 0])]
        prof = data_profile(recs, ConvergenceTest(0.1))
        assert prof.fractions["A"][-1] == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            data_profile([], ConvergenceTest(0.1))

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1e-1, 1e-3, 1e-5, 1e-7]))
    def test_monotone_and_bounded(self, seed, tol):
        rng = np.random.default_rng(seed)
        recs = []
        for p in range(int(rng.integers(1, 5))):
            n = int(rng.integers(1, 4))
            for s in ("A", "B", "C"):
                recs.append(record(f"p{p}", s, n, 10 + rng.standard_normal(int(rng.integers(1, 30))).cumsum()))
        prof = data_profile(recs, ConvergenceTest(tol))
        for fr in prof.fractions.values():
            assert np.all(np.diff(fr) >= 0)
            assert fr.min() >= 0 and fr.max() <= 1


class TestRendering:
    def test_csv_round_trip(self, tmp_path):
        prof = data_profile(fixture_records(), ConvergenceTest(0.1))
        assert read_profile_csv(write_profile_csv(prof, tmp_path / "p.csv")) == prof

    def test_svg_has_one_step_path_per_solver(self, tmp_path):
        recs = [record("p", "A", 1, [1, 0]), record("p", "B", 1, [1, 0.5, 0])]
        prof = data_profile(recs, ConvergenceTest(0.1))
        csv_path, svg_path = render_profile(prof, tmp_path / "profile")
        svg = svg_path.read_text()
        assert len(re.findall(r'<path class="step"', svg)) == 2
        assert 'data-solver="A"' in svg and 'data-solver="B"' in svg
        assert csv_path.read_text().splitlines()[0] == "alpha,solver,fraction"

    def test_empty_profile_is_an_error(self, tmp_path):
        with pytest.raises(ValueError):
            render_profile(DataProfile(alphas=np.array([])), tmp_path / "x")


class TestRunSuite:
    def test_single_run_respects_cap(self):
        p = registry.rosenbrock()
        recs = run_suite([p], [SolverSpec.make("default")])
        assert len(recs) == 1
        assert recs[0].evals <= 100 * (p.n + 1)

    def test_more_wild_suite_has_ten_records(self):
        recs = run_suite(registry.more_wild_subset(), [DEFAULT_SOLVERS[0]], budget_simplex=20)
        assert len(recs) == 10
        assert [r.problem for r in recs] == [p.name for p in registry.more_wild_subset()]

    def test_deterministic_outputs(self, tmp_path):
        outs = []
        for k in range(2):
            recs = run_suite(registry.more_wild_subset(), DEFAULT_SOLVERS, budget_simplex=20, seed=3,
                             workers=4, jitter=0.1)
            d = tmp_path / str(k)
            d.mkdir()
            write_summary_csv(recs, d / "summary.csv")
            render_profile(data_profile(recs, ConvergenceTest(1e-3)), d / "profile")
            outs.append([(d / f).read_bytes() for f in ("summary.csv", "profile.csv", "profile.svg")])
        assert outs[0] == outs[1]

    def test_seed_moves_the_start(self):
        probs = [registry.rosenbrock()]
        a = run_suite(probs, DEFAULT_SOLVERS[:1], budget_simplex=5, seed=1, jitter=0.1)
        b = run_suite(probs, DEFAULT_SOLVERS[:1], budget_simplex=5, seed=2, jitter=0.1)
        assert a[0].values[0] != b[0].values[0]

    def test_failures_are_recorded(self):
        def boom(x):
            raise RuntimeError("oracle down")

        bad = Problem(boom, [0.0, 0.0], name="bad")
        recs = run_suite([bad, registry.sphere(2)], [SolverSpec.make("default")], budget_simplex=5)
        assert "RuntimeError" in recs[0].error
        assert recs[1].error is None and math.isfinite(recs[1].f_best)

    def test_unrelaxable_variant_stays_in_box(self):
        p = registry.more_wild("mw_rosenbrock", box=(0.1, 20.0))
        rel, unrel = run_suite([p], [SolverSpec.make("r", mode="relaxable"), SolverSpec.make("u", mode="unrelaxable")],
                               budget_simplex=30, workers=1)
        assert all(unrel.feasible)
        assert rel.solver == "r" and unrel.solver == "u"

    def test_empty_inputs(self):
        with pytest.raises(ValueError):
            run_suite([], DEFAULT_SOLVERS)
