"""Newton polygons of truncated series and the certificates read off them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    HypothesisViolation,
    MismatchWithTheorem,
    NonIntegralSeries,
    PrecisionExhausted,
    TruncationTooShallow,
)
from .ring import RingConfig, coprimality_hypothesis
from .series import NO_UNIT_COEFFICIENT, TruncSeries1, iterate, weierstrass_degree

__all__ = [
    "NewtonPolygon",
    "Segment",
    "newton_polygon",
    "decreasing_part",
    "verify_iterate_polygon",
    "new_root_data",
    "segment_irreducible_certificate",
    "simple_roots_criterion",
    "lower_hull",
]

INF = math.inf


@dataclass(frozen=True)
class Segment:
    start: tuple
    end: tuple
    slope: Fraction

    @property
    def width(self) -> int:
        return self.end[0] - self.start[0]


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: tuple
    certified: tuple
    slopes: tuple = ()

    def __post_init__(self):
        if not self.slopes and len(self.vertices) > 1:
            slopes = tuple(Fraction(b[1] - a[1], b[0] - a[0])
                           for a, b in zip(self.vertices, self.vertices[1:]))
            object.__setattr__(self, "slopes", slopes)

    @property
    def segments(self) -> list[Segment]:
        return [Segment(a, b, s) for a, b, s in zip(self.vertices, self.vertices[1:], self.slopes)]

    @property
    def fully_certified(self) -> bool:
        return all(self.certified)

    def value_at(self, i: int) -> Fraction:
        """Height of the polygon above index ``i`` (inside its range)."""
        for (a, va), (b, vb) in zip(self.vertices, self.vertices[1:]):
            if a <= i <= b:
                return va + Fraction(vb - va, b - a) * (i - a)
        if self.vertices and i == self.vertices[0][0]:
            return Fraction(self.vertices[0][1])
        raise ValueError(f"index {i} outside the polygon")

    def to_json(self) -> dict:
        return {
            "vertices": [list(v) for v in self.vertices],
            "slopes": [str(s) for s in self.slopes],
            "certified": list(self.certified),
        }

    @classmethod
    def from_json(cls, data: dict) -> "NewtonPolygon":
        return cls(tuple(tuple(v) for v in data["vertices"]), tuple(data["certified"]))

    def to_ascii(self, width: int = 64, height: int = 16) -> str:
        return render_ascii(self, width, height)

    def to_svg(self) -> str:
        return render_svg(self)


# =========================================================================
# hull
# =========================================================================


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points) -> list:
    """Monotone-chain lower hull; collinear points are not kept as vertices."""
    hull: list = []
    for pt in sorted(points):
        if hull and hull[-1][0] == pt[0]:
            if pt[1] >= hull[-1][1]:
                continue
            hull.pop()
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return hull


def newton_polygon(s: TruncSeries1) -> NewtonPolygon:
    """Lower hull of ``(i, v(a_i))`` for ``1 <= i <= N``, cut at the first unit coefficient."""
    if not s.integral:
        bad = next(i for i, c in enumerate(s.coeffs) if c.shift)
        raise NonIntegralSeries(f"coefficient of X^{bad} is not integral")
    exact, bounded = [], []
    for i in range(1, s.N + 1):
        c = s.coeffs[i]
        v = c.v
        if v == INF:
            if c.prec != INF:
                bounded.append((i, c.prec))
            continue
        exact.append((i, int(v)))
        if v == 0:
            break
    if not exact:
        return NewtonPolygon((), ())
    hull = lower_hull(exact)
    certified = [True] * len(hull)
    last = hull[-1][0]
    first = hull[0][0]
    for i, lb in bounded:
        if i > last:
            continue
        if i < first:
            certified[0] = False
            continue
        for k in range(len(hull) - 1):
            (a, va), (b, vb) = hull[k], hull[k + 1]
            if a <= i <= b:
                if lb < va + Fraction(vb - va, b - a) * (i - a):
                    certified[k] = certified[k + 1] = False
                break
    return NewtonPolygon(tuple(hull), tuple(certified))


def decreasing_part(np_: NewtonPolygon) -> NewtonPolygon:
    """Initial run of vertices joined by strictly negative slopes."""
    if not np_.vertices:
        return np_
    k = 0
    while k < len(np_.slopes) and np_.slopes[k] < 0:
        k += 1
    return NewtonPolygon(np_.vertices[:k + 1], np_.certified[:k + 1], np_.slopes[:k])


# =========================================================================
# certificates
# =========================================================================


def _require_height_one(f: TruncSeries1) -> tuple[int, int]:
    ring = f.ring
    p, e = ring.p, ring.e
    w = weierstrass_degree(f)
    if w is NO_UNIT_COEFFICIENT or w != p:
        raise HypothesisViolation(f"Weierstrass degree of f is {w}, expected {p}")
    lin = f.linear
    if lin.shift or lin.v != e:
        raise HypothesisViolation(f"f'(0) has valuation {lin.valuation()}, expected {e}")
    return p, e


def _iterate_polygon(f: TruncSeries1, n: int) -> NewtonPolygon:
    p = f.ring.p
    top = p**n
    if f.N < top:
        raise TruncationTooShallow(f"need degree >= {top} to see the roots of the {n}-th iterate")
    fn = iterate(f.truncate(top), n)
    dp = decreasing_part(newton_polygon(fn))
    if not dp.fully_certified:
        raise PrecisionExhausted(f"polygon of the {n}-th iterate is not certified at this precision")
    return dp


def verify_iterate_polygon(f: TruncSeries1, n: int):
    """Check that the decreasing polygon of ``f^{on}`` has vertices ``(p**i, e*(n - i))``.

    Returns ``(ok, report)``; ``report`` lists expected and computed vertices.
    """
    p, e = _require_height_one(f)
    if n < 0:
        raise ValueError("iterate count must be >= 0")
    expected = [(p**i, e * (n - i)) for i in range(n + 1)]
    got = list(_iterate_polygon(f, n).vertices)
    return got == expected, {"n": n, "expected": expected, "vertices": got}


def new_root_data(f: TruncSeries1, n: int) -> tuple[int, Fraction]:
    """Count and polygon slope of the roots of ``f^{on}`` that are not roots of ``f^{o(n-1)}``."""
    if n < 1:
        raise ValueError("level must be >= 1")
    ok, report = verify_iterate_polygon(f, n)
    if not ok:
        raise MismatchWithTheorem("iterate polygon differs from the predicted vertices",
                                  {"series": f.to_json(), "config": f.ring.to_json(), **report})
    seg = Segment(tuple(report["vertices"][-2]), tuple(report["vertices"][-1]),
                  Fraction(report["vertices"][-1][1] - report["vertices"][-2][1],
                           report["vertices"][-1][0] - report["vertices"][-2][0]))
    return seg.width, seg.slope


def segment_irreducible_certificate(seg: Segment, cfg: RingConfig | None = None) -> bool:
    """Pure-slope criterion: slope ``-a/b`` in lowest terms with ``b`` equal to the width.

    Sufficient for irreducibility of the factor carrying the segment's
    roots, not necessary.
    """
    return seg.slope.denominator == seg.width


def simple_roots_criterion(f: TruncSeries1) -> bool:
    """True iff the decreasing polygon of ``f`` is the single segment ``(1, e) -> (p, 0)``.

    A Weierstrass degree other than ``p`` gives False. The criterion needs
    ``gcd(e, p**2 - p) = 1``; without it a HypothesisViolation is raised.
    """
    ring = f.ring
    if not coprimality_hypothesis(ring):
        raise HypothesisViolation("criterion needs gcd(e, p^2 - p) = 1")
    w = weierstrass_degree(f)
    if w is NO_UNIT_COEFFICIENT or w != ring.p:
        return False
    dp = decreasing_part(newton_polygon(f.truncate(min(f.N, ring.p))))
    if not dp.fully_certified:
        raise PrecisionExhausted("polygon of f is not certified at this precision")
    return list(dp.vertices) == [(1, ring.e), (ring.p, 0)]


# =========================================================================
# rendering
# =========================================================================


def render_ascii(np_: NewtonPolygon, width: int = 64, height: int = 16) -> str:
    if not np_.vertices:
        return "(empty polygon)\n"
    xs = [v[0] for v in np_.vertices]
    ys = [v[1] for v in np_.vertices]
    x0, x1 = min(xs), max(xs)
    y1 = max(max(ys), 1)
    span = max(x1 - x0, 1)
    grid = [[" "] * (width + 1) for _ in range(height + 1)]

    def col(x):
        return round((x - x0) * width / span)

    def row(y):
        return height - round(y * height / y1)

    for c in range(width + 1):
        x = x0 + Fraction(c * span, width)
        for (a, va), (b, vb) in zip(np_.vertices, np_.vertices[1:]):
            if a <= x <= b:
                grid[row(va + Fraction(vb - va, b - a) * (x - a))][c] = "."
                break
    for (x, y), ok in zip(np_.vertices, np_.certified):
        grid[row(y)][col(x)] = "o" if ok else "?"
    lines = [f"{y1:>4} |" + "".join(grid[0])]
    for r in range(1, height):
        lines.append("     |" + "".join(grid[r]))
    lines.append(f"{0:>4} |" + "".join(grid[height]))
    lines.append("     +" + "-" * (width + 1))
    lines.append(f"      {x0:<{width // 2}}{x1:>{width - width // 2 + 1}}")
    lines.append("vertices: " + " ".join(f"({x},{y})" for x, y in np_.vertices))
    return "\n".join(lines) + "\n"


def render_svg(np_: NewtonPolygon) -> str:
    W, H, pad = 480, 320, 48
    verts = list(np_.vertices) or [(1, 0)]
    x0, x1 = min(v[0] for v in verts), max(v[0] for v in verts)
    y1 = max(max(v[1] for v in verts), 1)
    xspan = max(x1 - x0, 1)

    def sx(x):
        return pad + (x - x0) * (W - 2 * pad) / xspan

    def sy(y):
        return H - pad - y * (H - 2 * pad) / y1

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" '
        f'width="{W}" height="{H}" font-family="monospace" font-size="11">',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle">index i</text>',
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {H / 2:.1f})">valuation (v_K units)</text>',
    ]
    if np_.vertices:
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in np_.vertices)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#4878A8" stroke-width="2"/>')
        for (x, y), ok in zip(np_.vertices, np_.certified):
            colour = "#4878A8" if ok else "#E57A5A"
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="4" fill="{colour}"/>')
            out.append(f'<text x="{sx(x) + 6:.1f}" y="{sy(y) - 6:.1f}">({x}, {y})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
