import math

import numpy as np
import pytest

from heavysum.distmodel import (
    CenteredLognormal,
    Exponential,
    LogWeibull,
    RegularlyVarying,
    TailModel,
)

ACCEPTANCE = []


class SawtoothPareto(TailModel):
    """Pareto(1) tail times a log-periodic factor: ``psi(t) = log t + 0.1 - 0.2 frac(log t)``.

    ``b`` jumps up by 0.2 at every ``t = e^k``, so the oscillation constant is 0.2.
    """

    family = "sawtooth"
    lower = 1.0
    eta_start = 1.0

    def __hash__(self):
        return hash(self.family)

    def __eq__(self, other):
        return type(other) is type(self)

    def _saw(self, t):
        v = np.log(np.maximum(t, 1.0))
        return 0.1 - 0.2 * (v - np.floor(v))

    def logsf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 1.0, 0.0, -(np.log(np.maximum(t, 1.0)) + self._saw(t)))

    def left_tail(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 1.0, 0.8 / np.maximum(t, 1.0) * self.sf(t), 0.0)

    def eta(self, t):
        return 1.0 / np.maximum(np.asarray(t, dtype=float), 1.0)

    def eta_integral(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 1.0, t, 1.0 + np.log(np.maximum(t, 1.0)))

    def params(self):
        return {}


@pytest.fixture
def pareto_half():
    return RegularlyVarying(0.5)


@pytest.fixture
def pareto_one():
    return RegularlyVarying(1.0)


@pytest.fixture
def lognormal():
    return CenteredLognormal(1.0)


@pytest.fixture
def exponential():
    return Exponential(1.0)


@pytest.fixture
def sawtooth():
    return SawtoothPareto()


BUILTIN = [
    RegularlyVarying(0.5),
    RegularlyVarying(1.5),
    RegularlyVarying(3.0, p=1.0),
    CenteredLognormal(1.0),
    CenteredLognormal(0.5),
    LogWeibull(2.0),
]


def pareto_pair_tail(t):
    """Closed form of P[X1 + X2 > t] for Pareto(1) on [1, inf), t >= 2."""
    return 1.0 / (t - 1.0) + 2.0 / t**2 * math.log(t - 1.0) + (t - 2.0) / (t * (t - 1.0))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {text}")
