import json
import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from conftest import series
from padic_dynamics.dynamics import (
    DynPair,
    cell_count,
    check_hypotheses,
    conjugate_pair,
    ell,
    fixed_point_count,
    make_lubin_tate,
    multiplicative_pair,
    normalize_u,
    random_conjugator,
    stabilizer_exponent,
    tilt_valuation,
    v_of_m,
    verify_conjecture,
)
from padic_dynamics.errors import (
    HypothesisViolation,
    InvalidTemplate,
    MismatchWithTheorem,
    NotAUnit,
    NotCommuting,
    TruncationTooShallow,
)
from padic_dynamics.lubin import formal_group
from padic_dynamics.newton import new_root_data
from padic_dynamics.ring import RingConfig
from padic_dynamics.series import TruncSeries1, comp_inverse, compose, subst2_outer, subst2_sep


def vp_int(x, p):
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k


def binomial_series(ring, a, N):
    return series(ring, {k: comb(a, k) for k in range(1, min(a, N) + 1)}, N)


# ---------------------------------------------------------------- pairs


def test_commutation_checked():
    ring = RingConfig(p=3)
    f = series(ring, {1: 3, 3: 1}, 9)
    with pytest.raises(NotCommuting):
        DynPair(f, series(ring, {1: 4, 2: 1}, 9))


def test_pair_json_round_trip():
    pair = make_lubin_tate(RingConfig(p=3, n_prec=10), 9)
    back = DynPair.from_json(json.dumps(pair.to_json()))
    assert back.f.agrees(pair.f) and back.u.agrees(pair.u)


# ---------------------------------------------------------------- hypotheses


def test_hypotheses_lubin_tate_all_true():
    report = check_hypotheses(make_lubin_tate(RingConfig(p=3), 9))
    assert report.all_true


def test_hypotheses_wrong_degree():
    ring = RingConfig(p=5)
    f = series(ring, {1: 5, 2: 1}, 6)
    report = check_hypotheses(DynPair(f, TruncSeries1.X(ring, 6)))
    assert report.wdeg_is_p.value is False
    assert "wdeg_is_p" in report.failed


def test_hypotheses_coprimality():
    pair = make_lubin_tate(RingConfig(p=3, e=2, n_prec=8), 9)
    report = check_hypotheses(pair)
    assert report.coprime.value is False
    assert report.simple_roots.value is None


def test_hypotheses_torsion_unit():
    ring = RingConfig(p=3)
    pair = multiplicative_pair(ring, 9, a=-1)
    assert check_hypotheses(pair).u1_nontorsion.value is False


# ---------------------------------------------------------------- normalisation


def test_normalize_u_examples():
    ring = RingConfig(p=5, n_prec=10)
    pair = multiplicative_pair(ring, 12)
    assert normalize_u(pair) is pair
    two = multiplicative_pair(ring, 12, a=2)
    norm = normalize_u(two)
    assert norm.u.agrees(binomial_series(ring, 16, 12))
    r3 = RingConfig(p=3, n_prec=10)
    neg = multiplicative_pair(r3, 12, a=-1)
    assert normalize_u(neg).u.agrees(TruncSeries1.X(r3, 12))
    with pytest.raises(NotAUnit):
        normalize_u(DynPair(neg.f, neg.f, check=False))


def test_ell_examples():
    for p in (3, 5):
        ring = RingConfig(p=p, n_prec=12)
        assert ell(multiplicative_pair(ring, p, a=1 + p)) == 1
        assert ell(multiplicative_pair(ring, p, a=1 + p**3)) == 3
        assert ell(multiplicative_pair(ring, p, a=(1 + p) ** p)) == vp_int((1 + p) ** p - 1, p) == 2
    with pytest.raises(HypothesisViolation):
        ell(multiplicative_pair(RingConfig(p=5), 5, a=2))


@pytest.mark.parametrize("p", [3, 5])
def test_v_of_m_against_integer_oracle(p):
    ring = RingConfig(p=p, n_prec=20)
    pair = multiplicative_pair(ring, p)
    assert v_of_m(pair, 1) == ell(pair)
    for m in list(range(1, 40)) + [-1, -p, -7, p**4]:
        assert v_of_m(pair, m) == vp_int((1 + p) ** abs(m) - 1, p)


def test_v_of_m_ramified():
    ring = RingConfig(p=5, e=3, n_prec=8)
    pair = multiplicative_pair(ring, 5)
    assert [v_of_m(pair, m) for m in (1, 5, 25, 3)] == [1, 2, 3, 1]


def test_fixed_point_count_examples():
    ring = RingConfig(p=3, n_prec=20)
    lt = make_lubin_tate(ring, 27)
    assert fixed_point_count(lt, 1) == 3
    assert fixed_point_count(lt, 3) == 9
    mult = multiplicative_pair(ring, 27)
    assert fixed_point_count(mult, 2) == 3
    with pytest.raises(TruncationTooShallow):
        fixed_point_count(lt, 27)


def test_fixed_point_count_mismatch_is_reported():
    # f = 3X and u = 4X commute, but u(X) - X = 3X has no unit coefficient at all
    ring = RingConfig(p=3, n_prec=10)
    pair = DynPair(series(ring, {1: 3}, 9), series(ring, {1: 4}, 9))
    with pytest.raises(MismatchWithTheorem) as info:
        fixed_point_count(pair, 1)
    assert info.value.instance["m"] == 1 and "config" in info.value.instance


def test_stabilizer_examples():
    ring = RingConfig(p=3, n_prec=20)
    pair = multiplicative_pair(ring, 3)
    assert stabilizer_exponent(pair, 2) == 3
    assert stabilizer_exponent(pair, 4) == 27
    assert v_of_m(pair, 9) == 3 and v_of_m(pair, 3) == 2
    with pytest.raises(HypothesisViolation):
        stabilizer_exponent(pair, 1)


def test_stabilizer_p2_caveat():
    # u'(0) = 3 over Z_2: v(2) = v_2(3^2 - 1) = 3 skips a level
    pair = multiplicative_pair(RingConfig(p=2, n_prec=20), 2)
    with pytest.raises(MismatchWithTheorem):
        stabilizer_exponent(pair, 4)
    five = multiplicative_pair(RingConfig(p=2, n_prec=20), 2, a=5)
    assert [stabilizer_exponent(five, n) for n in (3, 4, 5)] == [2, 4, 8]


def test_cell_count_examples():
    assert cell_count(multiplicative_pair(RingConfig(p=3, n_prec=10), 3, a=10)) == 6
    assert cell_count(multiplicative_pair(RingConfig(p=7, n_prec=10), 7)) == 6
    lt = make_lubin_tate(RingConfig(p=5, n_prec=10), 5)
    assert cell_count(lt) == 4 == new_root_data(lt.f, lt.ell)[0]


@pytest.mark.parametrize("p,r,expected", [(3, 1, Fraction(3, 2)), (5, 2, Fraction(5, 4)),
                                          (2, 1, Fraction(2)), (7, 2, Fraction(7, 6))])
def test_tilt_valuation(p, r, expected):
    assert tilt_valuation(RingConfig(p=p, r=r)) == expected


# ---------------------------------------------------------------- generators


def test_make_lubin_tate_examples():
    ring = RingConfig(p=3, n_prec=20)
    pair = make_lubin_tate(ring, 12)
    assert pair.f.agrees(series(ring, {1: 3, 3: 1}, 12))
    assert pair.u[1].agrees(series(ring, {1: 4}, 1)[1])
    r2 = RingConfig(p=2, n_prec=20)
    assert make_lubin_tate(r2, 12).u.agrees(binomial_series(r2, 3, 12))
    r5 = RingConfig(p=5, n_prec=10)
    assert make_lubin_tate(r5, 8, middle={2: 5}).f.agrees(series(r5, {1: 5, 2: 5, 5: 1}, 8))
    with pytest.raises(InvalidTemplate):
        make_lubin_tate(r5, 8, middle={2: 1})
    with pytest.raises(InvalidTemplate):
        make_lubin_tate(r5, 8, a=10)


def test_conjugate_pair_examples(O5e3):
    N = 15
    pair = make_lubin_tate(O5e3, N)
    X = TruncSeries1.X(O5e3, N)
    same = conjugate_pair(pair, X)
    assert same.f.agrees(pair.f) and same.u.agrees(pair.u)
    w = series(O5e3, {1: 1, 2: [0, 1, 0]}, N)
    conj = conjugate_pair(pair, w)
    assert conj.f[1].agrees(pair.f[1]) and conj.u[1].agrees(pair.u[1])
    assert not conj.f.agrees(pair.f)
    assert check_hypotheses(conj).none_false
    with pytest.raises(HypothesisViolation):
        conjugate_pair(pair, series(O5e3, {1: 2}, N))


def test_formal_group_transport(O5e3):
    N = 12
    pair = make_lubin_tate(O5e3, N)
    w = random_conjugator(O5e3, N, seed=11)
    conj = conjugate_pair(pair, w)
    F0, F = formal_group(pair.f), formal_group(conj.f)
    assert F.agrees(subst2_outer(comp_inverse(w), subst2_sep(F0, w, w)))


def test_random_conjugator_is_seeded(O5e3):
    a = random_conjugator(O5e3, 8, seed=5)
    assert a.agrees(random_conjugator(O5e3, 8, seed=5))
    assert not a.agrees(random_conjugator(O5e3, 8, seed=6))
    assert a[1].is_unit() and a.integral


# ---------------------------------------------------------------- verification


def test_verify_conjecture_examples():
    ring = RingConfig(p=3, n_prec=20)
    verdict = verify_conjecture(make_lubin_tate(ring, 15))
    assert verdict.integral and verdict.endo_f and verdict.endo_u and verdict.holds
    assert verdict.certified_degree == 15 and verdict.certified_prec == 20
    json.dumps(verdict.to_json())
    mult = verify_conjecture(multiplicative_pair(RingConfig(p=2, n_prec=20), 10))
    assert set(k for k, c in mult.F.coeffs.items() if not c.is_zero()) == {(1, 0), (0, 1), (1, 1)}


def test_verify_conjecture_refuses_failed_hypotheses():
    ring = RingConfig(p=5)
    f = series(ring, {1: 5, 2: 1}, 6)
    with pytest.raises(HypothesisViolation):
        verify_conjecture(DynPair(f, TruncSeries1.X(ring, 6)))


def test_non_integral_group_is_reported():
    # f = pX + X^2 over Z_3 commutes with its own [4]; its group is not integral
    ring = RingConfig(p=3, n_prec=20)
    f = series(ring, {1: 3, 2: 1}, 8)
    F = formal_group(f)
    assert not F.integral


# ---------------------------------------------------------------- properties


@given(seed=st.integers(0, 10**9), p=st.sampled_from([3, 5, 7]), l=st.integers(1, 2))
def test_v_of_m_at_least_ell(seed, p, l):
    rng = random.Random(seed)
    a = 1 + p**l * rng.choice([t for t in range(1, p * p) if t % p])
    pair = multiplicative_pair(RingConfig(p=p, n_prec=16), 2, a=a)
    assert pair.ell == l
    for m in range(1, 30):
        v = v_of_m(pair, m)
        assert v >= l
        if m % p:
            assert v == l


@given(seed=st.integers(0, 10**9))
def test_conjugation_preserves_commutation_and_counts(seed):
    ring = RingConfig(p=3, n_prec=12)
    pair = make_lubin_tate(ring, 9)
    conj = conjugate_pair(pair, random_conjugator(ring, 9, seed))
    assert compose(conj.f, conj.u).agrees(compose(conj.u, conj.f))
    for m in (1, 2, 3):
        assert fixed_point_count(conj, m) == 3 ** v_of_m(conj, m)
