import numpy as np
import pytest

from trfds.driver import default_config, solve
from trfds.oracle import (
    OracleExitedError,
    OracleProtocolError,
    OracleTimeoutError,
    subprocess_oracle,
)
from trfds.problem import Problem


class TestSubprocessOracle:
    def test_constant_response(self, oracle_script):
        with subprocess_oracle(oracle_script("constant_oracle.py")) as f:
            assert f(np.array([1.0, 2.0])) == 3.5
            assert f(np.array([-7.0])) == 3.5

    def test_sum_of_squares(self, oracle_script):
        with subprocess_oracle(oracle_script("sum_squares_oracle.py")) as f:
            assert f(np.array([1.0, 2.0])) == 5.0

    def test_round_trip_is_exact(self, oracle_script):
        x = np.array([0.1, 1 / 3, -2.5e-17])
        with subprocess_oracle(oracle_script("sum_squares_oracle.py")) as f:
            assert f(x) == sum(v * v for v in x.tolist())

    def test_nan_is_protocol_error(self, oracle_script):
        with subprocess_oracle(oracle_script("nan_oracle.py")) as f:
            with pytest.raises(OracleProtocolError):
                f(np.zeros(2))

    def test_garbage_is_protocol_error(self, oracle_script):
        with subprocess_oracle(oracle_script("garbage_oracle.py")) as f:
            with pytest.raises(OracleProtocolError):
                f(np.zeros(2))

    def test_exit_is_reported(self, oracle_script):
        with subprocess_oracle(oracle_script("dying_oracle.py")) as f:
            with pytest.raises(OracleExitedError):
                f(np.zeros(2))

    def test_timeout(self, oracle_script):
        with subprocess_oracle(oracle_script("slow_oracle.py"), timeout=0.5) as f:
            with pytest.raises(OracleTimeoutError):
                f(np.zeros(2))

    def test_solver_drives_external_oracle(self, oracle_script):
        with subprocess_oracle(oracle_script("sum_squares_oracle.py")) as f:
            p = Problem(f, [1.0, -2.0, 0.5], name="external")
            record = solve(p, default_config(3, budget_simplex_gradients=20))
        assert record.evals <= 80
        assert record.f_best < 1e-10

    def test_oracle_error_propagates_with_record(self, oracle_script):
        with subprocess_oracle(oracle_script("dying_oracle.py")) as f:
            p = Problem(f, [1.0, 1.0])
            with pytest.raises(OracleExitedError) as info:
                solve(p)
        record = info.value.run_record
        assert record.termination.value == "OracleError"
        assert "OracleExitedError" in record.error
