"""Lubin logarithm, its inverse, the formal group it induces, and [m]_f.

Everything that divides by a non-unit runs in a working ring carrying extra
p-adic digits and is reduced back at the end; the digits are increased until
the certified precision of the result stops improving or reaches the full
precision of the caller's ring.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from math import comb

from .errors import PrecisionExhausted, RootOfUnityLinearCoefficient
from .ring import RingConfig
from .series import (
    KScalar,
    TruncSeries1,
    TruncSeries2,
    TruncSeriesM,
    compose,
    solve_composition,
    substitute_separated,
)

log = logging.getLogger(__name__)

__all__ = [
    "LogResult",
    "lubin_log",
    "lubin_exp",
    "formal_group",
    "formal_group_from_log",
    "mult_by_m",
    "log_derivative_integral",
    "associativity_residual",
    "limit_log",
    "with_guard_digits",
]

INF = math.inf


@dataclass(frozen=True, eq=False)
class LogResult:
    """A logarithm together with the data needed to continue computing with it.

    ``precision_loss_profile[m]`` is the valuation of ``lambda**m - lambda``
    consumed when solving for the degree-``m`` coefficient.
    """

    log: TruncSeries1
    lam: KScalar
    precision_loss_profile: dict
    work_log: TruncSeries1 | None = field(default=None, repr=False)

    @property
    def certified_prec(self):
        return self.log.certified_prec

    @property
    def lambda_(self) -> KScalar:
        return self.lam


def _fully_certified(coeffs, ring: RingConfig) -> bool:
    return all(c.prec >= ring.capacity - c.shift for c in coeffs)


def with_guard_digits(ring: RingConfig, compute, reduce, attempts: int = 6):
    """Run ``compute(work_ring)`` with growing guard digits.

    ``reduce(result, ring)`` moves a result back to ``ring`` and returns the
    reduced value and the list of its coefficients. Iteration stops once every
    coefficient is known to the full precision of ``ring`` or the worst
    coefficient no longer improves. The digits lost barely depend on the
    working precision, so each retry adds at least the observed shortfall.
    """
    n = ring.n_prec
    g = n
    best, best_prec = None, -INF
    last_error = None
    for _ in range(attempts):
        work = ring.with_precision(n + g)
        try:
            raw = compute(work)
        except PrecisionExhausted as exc:
            last_error = exc
            log.debug("guard %d: %s", g, exc)
            g *= 2
            continue
        value, coeffs = reduce(raw, ring)
        worst = min((c.prec + c.shift for c in coeffs), default=INF)
        log.debug("guard %d digits: worst relative precision %s", g, worst)
        if worst <= best_prec:
            break
        best, best_prec = (raw, value), worst
        if _fully_certified(coeffs, ring):
            break
        g = max(2 * g, g + math.ceil((ring.capacity - worst) / ring.e))
    if best is None:
        raise last_error
    return best


# =========================================================================
# logarithm
# =========================================================================


def _log_core(s: TruncSeries1, slack_ring: RingConfig):
    ring = s.ring
    N = s.N
    lam = s.linear
    if lam.is_zero():
        raise RootOfUnityLinearCoefficient("linear coefficient is zero to precision")
    limit = slack_ring.capacity - slack_ring.e
    zero = KScalar.zero(ring)
    b = [zero] * (N + 1)
    b[1] = KScalar.one(ring)
    profile = {}
    powers = s.powers(N - 1) if N >= 2 else [None, s]
    lam_pow = lam
    for m in range(2, N + 1):
        lam_pow = lam_pow * lam
        denom = lam_pow - lam
        v = denom.v
        if v == INF or v >= limit:
            raise RootOfUnityLinearCoefficient(
                f"lambda^{m} - lambda has valuation >= {limit}; cannot solve for degree {m}")
        profile[m] = int(v)
        total = zero
        for k in range(1, m):
            bk = b[k]
            if bk.is_exact_zero():
                continue
            c = powers[k].coeffs[m]
            if not c.is_exact_zero():
                total = total + bk * c
        if total.is_exact_zero():
            continue
        bm = -total / denom
        if bm.prec <= 0 and bm.v == INF:
            raise PrecisionExhausted(f"no precision left for the degree-{m} coefficient")
        b[m] = bm
    return TruncSeries1(ring, N, tuple(b)), lam, profile


def _reduce_series(s: TruncSeries1, ring: RingConfig):
    out = s.to_ring(ring)
    return out, out.coeffs


def lubin_log(s: TruncSeries1) -> LogResult:
    """The series ``L`` with ``L'(0) = 1`` and ``L(s(X)) = s'(0) L(X)``.

    Solved degree by degree from the functional equation.
    """
    base = s.ring

    def compute(work):
        return _log_core(s.to_ring(work), base)

    (raw, lam, profile), reduced = with_guard_digits(
        base, compute, lambda r, ring: _reduce_series(r[0], ring))
    if reduced.certified_prec <= 0:
        raise PrecisionExhausted("logarithm has no certified digits left")
    return LogResult(reduced, s.linear, profile, raw)


def lubin_exp(lr: LogResult) -> TruncSeries1:
    """Compositional inverse of the logarithm."""
    base = lr.log.ring
    if lr.work_log is not None:
        work = lr.work_log.ring
        raw = solve_composition(lr.work_log, TruncSeries1.X(work, lr.log.N))
        out = raw.to_ring(base)
    else:
        out = solve_composition(lr.log, TruncSeries1.X(base, lr.log.N))
    if out.certified_prec <= 0:
        raise PrecisionExhausted("exponential has no certified digits left")
    return out


def log_derivative_integral(lr: LogResult):
    """``(True, None)`` if every ``m * b_m`` is integral, else ``(False, m)`` for the first bad ``m``."""
    ring = lr.log.ring
    for m, bm in enumerate(lr.log.coeffs):
        if m == 0 or bm.is_exact_zero():
            continue
        if (bm * KScalar.from_int(ring, m)).shift:
            return False, m
    return True, None


# =========================================================================
# formal group
# =========================================================================


def formal_group_from_log(L: TruncSeries1, g: TruncSeries1) -> TruncSeries2:
    """``g(L(X) + L(Y))`` for a logarithm ``L`` and its inverse ``g``."""
    ring, N = L.ring, min(L.N, g.N)
    zero = KScalar.zero(ring)
    P = L.truncate(N).powers(N)
    # M[i][j] = g_{i+j} * binom(i+j, i)
    T = [[zero] * (N + 1) for _ in range(N + 1)]
    for j in range(N + 1):
        row = T[j]
        for i in range(N + 1 - j):
            if i + j == 0:
                continue
            gij = g.coeffs[i + j]
            if gij.is_exact_zero():
                continue
            mij = gij * KScalar.from_int(ring, comb(i + j, i))
            Pi = P[i].coeffs
            for a in range(i, N + 1 - j):
                c = Pi[a]
                if not c.is_exact_zero():
                    row[a] = row[a] + mij * c
    out = {}
    for j in range(N + 1):
        Pj = P[j].coeffs
        Tj = T[j]
        for a in range(N + 1):
            t = Tj[a]
            if t.is_exact_zero():
                continue
            for b in range(j, N + 1 - a):
                c = Pj[b]
                if not c.is_exact_zero():
                    key = (a, b)
                    term = t * c
                    out[key] = out[key] + term if key in out else term
    return TruncSeries2._build(ring, 2, N, out)


def formal_group(f: TruncSeries1) -> TruncSeries2:
    """``F(X, Y) = exp(log(X) + log(Y))`` for the logarithm of ``f``."""
    base = f.ring

    def compute(work):
        L, _, _ = _log_core(f.to_ring(work), base)
        g = solve_composition(L, TruncSeries1.X(work, f.N))
        return formal_group_from_log(L, g)

    def reduce(F, ring):
        out = TruncSeries2._build(ring, 2, F.N, {k: c.to_ring(ring) for k, c in F.coeffs.items()})
        return out, list(out.coeffs.values())

    _, F = with_guard_digits(base, compute, reduce)
    if F.certified_prec <= 0:
        raise PrecisionExhausted("formal group has no certified digits left")
    return F


def associativity_residual(F: TruncSeries2) -> TruncSeriesM:
    """``F(F(X, Y), Z) - F(X, F(Y, Z))`` in three variables."""
    ring, N = F.ring, F.N
    X = TruncSeries1.X(ring, N)
    left = substitute_separated(F, F, X)
    right = substitute_separated(F, X, F)
    return left - right


# =========================================================================
# multiplication by m
# =========================================================================


def mult_by_m(f: TruncSeries1, m: int, lr: LogResult | None = None) -> TruncSeries1:
    """``[m]_f = exp(m log(X))``, solved as ``log([m](X)) = m log(X)``."""
    base = f.ring
    if m == 1:
        return TruncSeries1.X(base, f.N)

    def compute(work):
        if lr is not None and lr.work_log is not None and lr.work_log.ring == work:
            L = lr.work_log
        else:
            L, _, _ = _log_core(f.to_ring(work), base)
        return solve_composition(L, L.scale(KScalar.from_int(work, m)))

    _, out = with_guard_digits(base, compute, _reduce_series)
    if out.certified_prec <= 0:
        raise PrecisionExhausted(f"[{m}] has no certified digits left")
    return out


# =========================================================================
# cross-check oracle
# =========================================================================


def limit_log(f: TruncSeries1, target_prec: int, max_iter: int = 64):
    """Logarithm as the limit of ``f^{on}(X) / f'(0)**n``.

    Only meaningful when ``f'(0)`` is not a unit. Iterates until two
    successive normalised iterates agree modulo ``pi**target_prec``; returns
    the last iterate and the number of iterations used.
    """
    ring = f.ring
    lam = f.linear
    if lam.v == 0:
        raise ValueError("limit formula needs a non-unit linear coefficient")
    it = TruncSeries1.X(ring, f.N)
    lam_n = KScalar.one(ring)
    prev = None
    for n in range(1, max_iter + 1):
        it = compose(f, it)
        lam_n = lam_n * lam
        inv = lam_n.inverse()
        cur = it.map(lambda c: c * inv)
        if prev is not None and cur.agrees(prev, target_prec):
            return cur, n
        prev = cur
    raise PrecisionExhausted("limit formula did not stabilise")
