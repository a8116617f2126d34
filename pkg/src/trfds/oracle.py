"""External objective oracle speaking a line protocol over a pipe.

The child process reads one line of space-separated decimal coordinates on
stdin and answers with one decimal objective value per line on stdout. The
process is started lazily and kept alive across evaluations.
"""
from __future__ import annotations

import math
import os
import selectors
import shlex
import subprocess
import threading

import numpy as np


class OracleError(RuntimeError):
    pass


class OracleProtocolError(OracleError):
    pass


class OracleTimeoutError(OracleError):
    pass


class OracleExitedError(OracleError):
    pass


class SubprocessOracle:
    """Callable objective backed by a long-running child process.

    ``command`` is a shell-style string or an argv list. The child must flush
    stdout after each answer.
    """

    def __init__(self, command, timeout: float = 60.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self._proc = None
        self._buffer = b""
        self._lock = threading.Lock()

    def _start(self):
        self._proc = subprocess.Popen(
            self.argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            bufsize=0,
        )
        self._buffer = b""

    def _readline(self) -> bytes:
        sel = selectors.DefaultSelector()
        sel.register(self._proc.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in self._buffer:
                if not sel.select(self.timeout):
                    self.close()
                    raise OracleTimeoutError(f"no response within {self.timeout} s")
                chunk = os.read(self._proc.stdout.fileno(), 65536)
                if not chunk:
                    code = self._proc.wait()
                    self._proc = None
                    raise OracleExitedError(f"oracle process exited with status {code}")
                self._buffer += chunk
        finally:
            sel.close()
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        request = " ".join(repr(float(v)) for v in x) + "\n"
        with self._lock:
            if self._proc is None or self._proc.poll() is not None:
                self._start()
            try:
                self._proc.stdin.write(request.encode())
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                code = self._proc.wait()
                self._proc = None
                raise OracleExitedError(f"oracle process exited with status {code}") from exc
            line = self._readline()
        text = line.decode(errors="replace").strip()
        try:
            value = float(text)
        except ValueError:
            raise OracleProtocolError(f"non-numeric oracle response {text!r}") from None
        if not math.isfinite(value):
            raise OracleProtocolError(f"non-finite oracle response {text!r}")
        return value

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def subprocess_oracle(command, timeout: float = 60.0) -> SubprocessOracle:
    return SubprocessOracle(command, timeout=timeout)
