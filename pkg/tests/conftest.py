import os
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from padic_dynamics.ring import RingConfig
from padic_dynamics.series import KScalar, TruncSeries1

settings.register_profile(
    "default", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines collected by tests/test_acceptance.py and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def series(ring, coeffs, N):
    return TruncSeries1.from_coeffs(ring, coeffs, N)


def qp(ring: RingConfig, x: Fraction) -> KScalar:
    """A rational number as an element of Q_p (unramified rings only)."""
    assert ring.e == 1
    x = Fraction(x)
    if x == 0:
        return KScalar.zero(ring)
    p, M = ring.p, ring.modulus
    num, den = x.numerator, x.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    while k and num % p == 0:
        num //= p
        k -= 1
    val = num * pow(den, -1, M) % M
    return KScalar.make(ring, ring.reduce([val] + [0] * (ring.d - 1)), k, ring.capacity)


def close(a: KScalar, b: KScalar, prec) -> bool:
    """``a`` and ``b`` agree modulo ``pi**prec``."""
    return (a - b).v >= prec


@pytest.fixture
def Z3():
    return RingConfig(p=3, n_prec=20)


@pytest.fixture
def Z5():
    return RingConfig(p=5, n_prec=20)


@pytest.fixture
def O5e3():
    return RingConfig(p=5, e=3, E=(-5, 0, 0, 1), n_prec=12)
