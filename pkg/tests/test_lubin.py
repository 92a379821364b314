import random
from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given, strategies as st

from conftest import close, qp, series
from padic_dynamics.errors import RootOfUnityLinearCoefficient
from padic_dynamics.lubin import (
    LogResult,
    associativity_residual,
    formal_group,
    limit_log,
    log_derivative_integral,
    lubin_exp,
    lubin_log,
    mult_by_m,
)
from padic_dynamics.ring import RingConfig
from padic_dynamics.series import (
    KScalar,
    TruncSeries1,
    TruncSeries2,
    compose,
    subst2_outer,
    subst2_sep,
)


def multiplicative_f(ring, N, a=None):
    a = ring.p if a is None else a
    return series(ring, {k: comb(a, k) for k in range(1, a + 1)}, N)


def assert_rational_coeffs(s, values, slack):
    ring = s.ring
    for m, x in values.items():
        assert close(s[m], qp(ring, x), ring.capacity - slack), (m, s[m], x)


# ---------------------------------------------------------------- logarithm


def test_log_of_linear_is_X(Z5):
    lr = lubin_log(series(Z5, {1: 5}, 10))
    assert lr.log.agrees(TruncSeries1.X(Z5, 10))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_log_of_multiplicative_is_log1p(p):
    ring = RingConfig(p=p, n_prec=20)
    N = 16
    lr = lubin_log(multiplicative_f(ring, N))
    harmonic = {m: Fraction((-1) ** (m + 1), m) for m in range(1, N + 1)}
    assert_rational_coeffs(lr.log, harmonic, slack=4 * ring.e)
    assert lr.log[1].agrees(KScalar.one(ring))


def test_log_for_p2_quadratic_matches_multiplicative():
    ring = RingConfig(p=2, n_prec=20)
    a = lubin_log(series(ring, {1: 2, 2: 1}, 12)).log
    b = lubin_log(multiplicative_f(ring, 12)).log
    assert a.agrees(b)


def test_functional_equation_residual(O5e3):
    rng = random.Random(3)
    N = 12
    coeffs = {1: 5, 5: 1}
    for k in range(2, N + 1):
        coeffs[k] = coeffs.get(k, 0) + 5 * rng.randrange(50)
    f = series(O5e3, coeffs, N)
    lr = lubin_log(f)
    lhs = compose(lr.log, f)
    rhs = lr.log.scale(lr.lam)
    assert lhs.agrees(rhs)
    assert all(v == 3 for v in lr.precision_loss_profile.values())


def test_root_of_unity_is_rejected(Z3):
    with pytest.raises(RootOfUnityLinearCoefficient):
        lubin_log(TruncSeries1.X(Z3, 4))
    with pytest.raises(RootOfUnityLinearCoefficient):
        lubin_log(series(Z3, {1: -1, 2: 1}, 4))
    with pytest.raises(RootOfUnityLinearCoefficient):
        lubin_log(series(Z3, {2: 1}, 4))


def test_deep_congruence_is_rejected():
    # lambda = 1 + p^(n-1): lambda^2 - lambda has valuation n - 1 >= e n - e
    ring = RingConfig(p=3, n_prec=6)
    with pytest.raises(RootOfUnityLinearCoefficient):
        lubin_log(series(ring, {1: 1 + 3**5, 2: 1}, 4))


def test_uniqueness_for_commuting_series(Z3):
    f = series(Z3, {1: 3, 3: 1}, 14)
    u = mult_by_m(f, 4)
    assert lubin_log(f).log.agrees(lubin_log(u).log)


def test_limit_formula_cross_check():
    ring = RingConfig(p=3, n_prec=30)
    f = series(ring, {1: 3, 2: 3, 3: 1}, 8)
    lr = lubin_log(f)
    approx, n = limit_log(f, target_prec=10)
    assert n > 1
    for m in range(1, 9):
        assert close(approx[m], lr.log[m], 10 - lr.log[m].shift), m


# ---------------------------------------------------------------- exp


def test_exp_examples():
    ring = RingConfig(p=5, n_prec=20)
    assert lubin_exp(lubin_log(series(ring, {1: 5}, 8))).agrees(TruncSeries1.X(ring, 8))
    N = 12
    lr = lubin_log(multiplicative_f(ring, N))
    g = lubin_exp(lr)
    assert_rational_coeffs(g, {m: Fraction(1, factorial(m)) for m in range(1, N + 1)},
                           slack=ring.e * 6)
    X = TruncSeries1.X(ring, N)
    assert compose(g, lr.log).agrees(X)
    assert compose(lr.log, g).agrees(X)


def test_exp_without_work_log(Z3):
    lr = lubin_log(series(Z3, {1: 3, 3: 1}, 10))
    bare = LogResult(lr.log, lr.lam, lr.precision_loss_profile)
    assert compose(lubin_exp(bare), lr.log).agrees(TruncSeries1.X(Z3, 10))


# ---------------------------------------------------------------- formal group


def test_formal_group_examples():
    ring = RingConfig(p=3, n_prec=20)
    N = 10
    add = TruncSeries2.from_coeffs(ring, {(1, 0): 1, (0, 1): 1}, N)
    assert formal_group(series(ring, {1: 3}, N)).agrees(add)
    F = formal_group(multiplicative_f(ring, N))
    assert F.agrees(TruncSeries2.from_coeffs(ring, {(1, 0): 1, (0, 1): 1, (1, 1): 1}, N))
    assert F.integral and F.certified_prec == ring.capacity


@given(seed=st.integers(0, 10**9), p=st.sampled_from([2, 3]))
def test_formal_group_axioms(seed, p):
    ring = RingConfig(p=p, n_prec=12)
    rng = random.Random(seed)
    N = 8
    coeffs = {1: p, p: 1}
    for k in range(2, N + 1):
        coeffs[k] = coeffs.get(k, 0) + p * rng.randrange(p**3)
    F = formal_group(series(ring, coeffs, N))
    assert F.integral
    assert F.symmetric()
    assert associativity_residual(F).is_zero()
    for k in range(2, N + 1):
        assert F[(k, 0)].is_zero() and F[(0, k)].is_zero()
    assert F[(1, 0)].agrees(KScalar.one(ring))


def test_endomorphisms_of_formal_group(Z3):
    f = series(Z3, {1: 3, 2: 6, 3: 1}, 10)
    F = formal_group(f)
    for s in (f, mult_by_m(f, 4), mult_by_m(f, -1)):
        assert (subst2_sep(F, s, s) - subst2_outer(s, F)).is_zero()


# ---------------------------------------------------------------- [m]


def test_mult_by_m_examples():
    ring = RingConfig(p=3, n_prec=20)
    N = 12
    f = multiplicative_f(ring, N)
    assert mult_by_m(f, 1).agrees(TruncSeries1.X(ring, N))
    assert mult_by_m(f, 2).agrees(series(ring, {1: 2, 2: 1}, N))
    assert mult_by_m(f, 7).agrees(multiplicative_f(ring, N, 7))
    lt = series(ring, {1: 3, 3: 1}, N)
    assert mult_by_m(lt, 3).agrees(lt)


@given(m1=st.integers(-6, 6).filter(bool), m2=st.integers(-6, 6).filter(bool))
def test_mult_by_m_composition(m1, m2):
    ring = RingConfig(p=5, n_prec=10)
    f = series(ring, {1: 5, 2: 5, 5: 1}, 10)
    a, b, ab = mult_by_m(f, m1), mult_by_m(f, m2), mult_by_m(f, m1 * m2)
    assert compose(a, b).agrees(ab)
    assert compose(a, f).agrees(compose(f, a))


# ---------------------------------------------------------------- derivative


def test_log_derivative_integral_examples():
    ring = RingConfig(p=5, n_prec=20)
    lr = lubin_log(multiplicative_f(ring, 20))
    assert log_derivative_integral(lr) == (True, None)
    lr_x = lubin_log(series(ring, {1: 5}, 6))
    assert log_derivative_integral(lr_x) == (True, None)
    bad = TruncSeries1(ring, 3, (KScalar.zero(ring), KScalar.one(ring),
                                 qp(ring, Fraction(1, 25)), KScalar.zero(ring)))
    assert log_derivative_integral(LogResult(bad, KScalar.from_int(ring, 5), {})) == (False, 2)


@given(seed=st.integers(0, 10**9), p=st.sampled_from([2, 3, 5]))
def test_m_times_b_m_integral(seed, p):
    ring = RingConfig(p=p, n_prec=12)
    rng = random.Random(seed)
    N = 14
    coeffs = {1: p, p: 1}
    for k in range(2, N + 1):
        coeffs[k] = coeffs.get(k, 0) + p * rng.randrange(p**4)
    assert log_derivative_integral(lubin_log(series(ring, coeffs, N)))[0]
