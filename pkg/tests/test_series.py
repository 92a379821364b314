import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import close, qp, series
from padic_dynamics.errors import ConfigMismatch, NotInvertible, PrecisionExhausted
from padic_dynamics.ring import RingConfig
from padic_dynamics.series import (
    NO_UNIT_COEFFICIENT,
    KScalar,
    TruncSeries1,
    TruncSeries2,
    comp_inverse,
    compose,
    derivative,
    iterate,
    subst2,
    subst2_outer,
    subst2_sep,
    weierstrass_degree,
)

RINGS = [
    RingConfig(p=3, n_prec=8),
    RingConfig(p=2, n_prec=12),
    RingConfig(p=5, e=3, n_prec=5),
    RingConfig(p=3, r=2, n_prec=6),
]


def ints(s):
    """Coefficients of an integral series over Z_p as plain ints mod p^n."""
    M = s.ring.modulus
    return [c.num[0] % M for c in s.coeffs]


def naive_compose(a, b, N, M):
    """Polynomial composition with plain integers, truncated after degree N."""
    out = [0] * (N + 1)
    power = [1] + [0] * N
    for k in range(N + 1):
        if k:
            nxt = [0] * (N + 1)
            for i, x in enumerate(power):
                if x:
                    for j, y in enumerate(b[:N + 1 - i]):
                        nxt[i + j] += x * y
            power = [x % M for x in nxt]
        if a[k]:
            out = [(o + a[k] * x) % M for o, x in zip(out, power)]
    return out


def rand_series(ring, rng, N, lead=None, start=1):
    coeffs = {}
    for i in range(start, N + 1):
        coeffs[i] = [rng.randrange(ring.modulus) for _ in range(ring.d)]
    if lead is not None:
        coeffs[1] = lead
    return series(ring, coeffs, N)


# ---------------------------------------------------------------- examples


def test_compose_examples(Z5):
    s = series(Z5, {1: 3, 2: 7, 5: 1}, 8)
    assert compose(s, TruncSeries1.X(Z5, 8)).agrees(s)
    assert compose(series(Z5, {1: 4}, 8), series(Z5, {1: 6}, 8)).agrees(series(Z5, {1: 24}, 8))
    t = series(Z5, {1: 1, 2: 1}, 8)
    assert compose(t, t).agrees(series(Z5, {1: 1, 2: 2, 3: 2, 4: 1}, 8))


def test_comp_inverse_examples(Z5):
    X = TruncSeries1.X(Z5, 6)
    assert comp_inverse(X).agrees(X)
    half = comp_inverse(series(Z5, {1: 2}, 6))
    assert close(half[1] * KScalar.from_int(Z5, 2), KScalar.one(Z5), Z5.capacity)
    with pytest.raises(NotInvertible):
        comp_inverse(series(RingConfig(p=2), {1: 2}, 6))
    catalan = comp_inverse(series(Z5, {1: 1, 2: 1}, 8))
    assert ints(catalan)[1:] == [x % Z5.modulus for x in (1, -1, 2, -5, 14, -42, 132, -429)]


def test_weierstrass_degree_examples(Z3):
    assert weierstrass_degree(series(Z3, {1: 3, 3: 1}, 10)) == 3
    assert weierstrass_degree(TruncSeries1.X(Z3, 10)) == 1
    assert weierstrass_degree(series(Z3, {1: 3}, 10)) is NO_UNIT_COEFFICIENT


def test_weierstrass_degree_unknown_coefficient(Z3):
    lost = KScalar(Z3, Z3.zero_t(), 0, 0)
    s = TruncSeries1(Z3, 3, (KScalar.zero(Z3), lost, KScalar.zero(Z3), KScalar.one(Z3)))
    with pytest.raises(PrecisionExhausted):
        weierstrass_degree(s)


def test_derivative_examples(Z5):
    assert derivative(TruncSeries1.X(Z5, 4)).agrees(series(Z5, {0: 1}, 3))
    d = derivative(series(Z5, {1: 5, 5: 1}, 6))
    assert close(d[0], KScalar.from_int(Z5, 5), Z5.capacity)
    log3 = TruncSeries1(Z5, 3, (KScalar.zero(Z5), KScalar.one(Z5), qp(Z5, Fraction(-1, 2)),
                                qp(Z5, Fraction(1, 3))))
    assert derivative(log3).agrees(series(Z5, {0: 1, 1: -1, 2: 1}, 2))


def test_subst2_examples(Z3):
    N = 6
    X, Y = TruncSeries1.X(Z3, N), TruncSeries1.X(Z3, N)
    plus = TruncSeries2.from_coeffs(Z3, {(1, 0): 1, (0, 1): 1}, N)
    s = series(Z3, {1: 2, 2: 1, 4: 5}, N)
    assert subst2(plus, s, s).agrees(s + s)
    mult = TruncSeries2.from_coeffs(Z3, {(1, 0): 1, (0, 1): 1, (1, 1): 1}, N)
    assert subst2_sep(mult, X, Y).agrees(mult)
    # (1+X)^3 - 1 applied to X+Y+XY is (1+X)^3 (1+Y)^3 - 1
    f = series(Z3, {1: 3, 2: 3, 3: 1}, N)
    out = subst2_outer(f, mult)
    expected = {}
    from math import comb
    for i in range(4):
        for j in range(4):
            if 0 < i + j <= N:
                expected[(i, j)] = comb(3, i) * comb(3, j)
    assert out.agrees(TruncSeries2.from_coeffs(Z3, expected, N))
    assert subst2_sep(mult, f, f).agrees(out)


def test_config_mismatch():
    a = TruncSeries1.X(RingConfig(p=3), 4)
    b = TruncSeries1.X(RingConfig(p=5), 4)
    with pytest.raises(ConfigMismatch):
        compose(a, b)


def test_json_round_trip(O5e3):
    rng = random.Random(4)
    s = rand_series(O5e3, rng, 7, lead=1)
    back = TruncSeries1.from_json(O5e3, json.loads(json.dumps(s.to_json())))
    assert back.agrees(s)
    inv = comp_inverse(s)
    back = TruncSeries1.from_json(O5e3, inv.to_json())
    assert back.agrees(inv) and back.certified_prec == inv.certified_prec
    F = TruncSeries2.from_coeffs(O5e3, {(1, 0): 1, (0, 1): 1, (2, 1): [0, 3, 1]}, 5)
    assert TruncSeries2.from_json(O5e3, F.to_json()).agrees(F)


def test_json_rejects_out_of_range(Z3):
    with pytest.raises(ValueError):
        TruncSeries1.from_json(Z3, {"N": 2, "coeffs": [{"i": 3, "shift": 0, "val": [1]}]})


def test_non_integral_precision_is_tracked(O5e3):
    # X + pi^-2 X^2 inverts with growing denominators and shrinking precision
    s = TruncSeries1(O5e3, 6, (KScalar.zero(O5e3), KScalar.one(O5e3),
                               KScalar.from_components(O5e3, [1], shift=2)) + (KScalar.zero(O5e3),) * 4)
    inv = comp_inverse(s)
    assert not inv.integral
    assert compose(s, inv).agrees(TruncSeries1.X(O5e3, 6))
    assert inv.certified_prec < O5e3.capacity


# ---------------------------------------------------------------- properties


@given(seed=st.integers(0, 10**9), p=st.sampled_from([2, 3, 5]), N=st.integers(1, 12))
def test_compose_matches_naive_oracle(seed, p, N):
    ring = RingConfig(p=p, n_prec=6)
    rng = random.Random(seed)
    a, b = rand_series(ring, rng, N), rand_series(ring, rng, N)
    assert ints(compose(a, b)) == naive_compose(ints(a), ints(b), N, ring.modulus)


@pytest.mark.parametrize("ring", RINGS, ids=lambda c: f"p{c.p}r{c.r}e{c.e}")
@given(seed=st.integers(0, 10**9))
def test_associativity(ring, seed):
    rng = random.Random(seed)
    a, b, c = (rand_series(ring, rng, 9) for _ in range(3))
    assert compose(compose(a, b), c).agrees(compose(a, compose(b, c)))


@pytest.mark.parametrize("ring", RINGS, ids=lambda c: f"p{c.p}r{c.r}e{c.e}")
@given(seed=st.integers(0, 10**9))
def test_inverse_round_trip(ring, seed):
    rng = random.Random(seed)
    s = rand_series(ring, rng, 9, lead=[rng.randrange(1, ring.p)])
    inv = comp_inverse(s)
    X = TruncSeries1.X(ring, 9)
    assert compose(s, inv).agrees(X)
    assert compose(inv, s).agrees(X)


@pytest.mark.parametrize("ring", RINGS, ids=lambda c: f"p{c.p}r{c.r}e{c.e}")
@given(seed=st.integers(0, 10**9))
def test_linear_coefficient_multiplicative(ring, seed):
    rng = random.Random(seed)
    a, b = rand_series(ring, rng, 5), rand_series(ring, rng, 5)
    assert compose(a, b)[1].agrees(a[1] * b[1])


@given(seed=st.integers(0, 10**9), p=st.sampled_from([2, 3, 5]),
       wa=st.integers(1, 4), wb=st.integers(1, 4))
def test_weierstrass_degree_multiplicative(seed, p, wa, wb):
    ring = RingConfig(p=p, n_prec=6)
    rng = random.Random(seed)

    def with_wdeg(w):
        coeffs = {i: p * rng.randrange(ring.modulus) for i in range(1, w)}
        coeffs[w] = rng.randrange(1, p)
        for i in range(w + 1, 17):
            coeffs[i] = rng.randrange(ring.modulus)
        return series(ring, coeffs, 16)

    a, b = with_wdeg(wa), with_wdeg(wb)
    assert weierstrass_degree(compose(a, b)) == wa * wb


def test_iterate_binary_powering(Z3):
    f = series(Z3, {1: 3, 2: 1, 3: 1}, 12)
    step = TruncSeries1.X(Z3, 12)
    for n in range(6):
        assert iterate(f, n).agrees(step)
        step = compose(f, step)
    u = series(Z3, {1: 4, 2: 6, 3: 4, 4: 1}, 12)
    assert compose(iterate(u, -2), iterate(u, 2)).agrees(TruncSeries1.X(Z3, 12))
