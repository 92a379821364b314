"""Command-line front end.

Every subcommand writes one machine-readable result to stdout and diagnostics
to stderr. Exit status: 0 success, 1 malformed input, 2 hypothesis failure,
3 disagreement with a theorem, 4 precision exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import dynamics, lubin, newton
from .errors import (
    ConfigMismatch,
    HypothesisViolation,
    InvalidConfig,
    InvalidTemplate,
    MismatchWithTheorem,
    NonIntegralSeries,
    NotAUnit,
    NotInvertible,
    PrecisionExhausted,
    TruncationTooShallow,
)
from .ring import RingConfig
from .series import TruncSeries1, iterate

log = logging.getLogger("padic_dynamics")

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_MISMATCH, EXIT_PRECISION = 0, 1, 2, 3, 4
DEFAULT_DEGREE = 20


class InputError(Exception):
    pass


# ------------------------------------------------------------------ loading


def _read_json(value: str):
    """Inline JSON, ``-`` for stdin, or a file path."""
    text = value
    if value == "-":
        text = sys.stdin.read()
    elif not value.lstrip().startswith(("{", "[")):
        try:
            text = Path(value).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {value}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc


def _config(args, data=None) -> RingConfig:
    raw = None
    if args.config:
        raw = _read_json(args.config)
    elif isinstance(data, dict) and "config" in data:
        raw = data["config"]
    if raw is None:
        raise InputError("a ring configuration is required (--config)")
    if not isinstance(raw, dict):
        raise InputError("configuration must be a JSON object")
    cfg = RingConfig.from_json(raw)
    if args.p_precision is not None:
        cfg = cfg.with_precision(args.p_precision)
    return cfg


def _input(args):
    return _read_json(args.input) if args.input else None


def _fit(s: TruncSeries1, degree) -> TruncSeries1:
    if degree is None:
        return s
    if degree > s.N:
        raise TruncationTooShallow(f"input is only known to degree {s.N}, asked for {degree}")
    return s.truncate(degree)


def _series(cfg: RingConfig, data, degree) -> TruncSeries1:
    """A series from JSON; an input without ``N`` is a polynomial, taken at ``--degree``."""
    if not isinstance(data, dict):
        raise InputError("series must be a JSON object")
    if "N" not in data:
        data = {**data, "N": degree or DEFAULT_DEGREE}
    return _fit(TruncSeries1.from_json(cfg, data), degree)


def _load_series(args) -> TruncSeries1:
    """The series ``f``: from ``--input`` (a series or a pair) or the default ``pX + X^p``."""
    data = _input(args)
    cfg = _config(args, data)
    if data is None:
        N = args.degree or DEFAULT_DEGREE
        return TruncSeries1.from_coeffs(cfg, {1: cfg.p, cfg.p: 1}, N)
    if "f" in data:
        data = data["f"]
    return _series(cfg, data, args.degree)


def _load_pair(args) -> dynamics.DynPair:
    """A pair from ``--input``, else the Lubin-Tate pair ``(pX + X^p, [1+p])``."""
    data = _input(args)
    cfg = _config(args, data)
    if data is None:
        return dynamics.make_lubin_tate(cfg, args.degree or DEFAULT_DEGREE)
    if not all(k in data for k in ("f", "u")):
        raise InputError("pair input needs keys 'f' and 'u'")
    f = _series(cfg, data["f"], args.degree)
    u = _series(cfg, data["u"], args.degree)
    return dynamics.DynPair(f, u)


# ------------------------------------------------------------------ output


def _series_tsv(s: TruncSeries1) -> str:
    rows = ["i\tshift\tval\tprec"]
    for entry in s.to_json()["coeffs"]:
        val = ",".join(str(x) for x in entry["val"])
        rows.append(f"{entry['i']}\t{entry['shift']}\t{val}\t{entry.get('prec', '')}")
    return "\n".join(rows) + "\n"


def _table_tsv(header, rows) -> str:
    lines = ["\t".join(header)] + ["\t".join(str(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(args, payload, tsv=None, polygon=None) -> None:
    fmt = args.format
    if fmt == "json":
        text = json.dumps(payload) + "\n"
    elif fmt == "tsv" and tsv is not None:
        text = tsv
    elif fmt == "ascii" and polygon is not None:
        text = polygon.to_ascii()
    elif fmt == "svg" and polygon is not None:
        text = polygon.to_svg()
    else:
        raise InputError(f"format {fmt!r} is not available for {args.command}")
    sys.stdout.write(text)


# ------------------------------------------------------------------ commands


def cmd_log(args) -> int:
    f = _load_series(args)
    lr = lubin.lubin_log(f)
    payload = {**lr.log.to_json(), "lambda": lr.lam.to_json(),
               "precision_loss_profile": {str(m): v for m, v in lr.precision_loss_profile.items()}}
    _emit(args, payload, tsv=_series_tsv(lr.log))
    return EXIT_OK


def cmd_exp(args) -> int:
    f = _load_series(args)
    g = lubin.lubin_exp(lubin.lubin_log(f))
    _emit(args, g.to_json(), tsv=_series_tsv(g))
    return EXIT_OK


def cmd_formal_group(args) -> int:
    f = _load_series(args)
    F = lubin.formal_group(f)
    rows = [(i, j, c.shift, ",".join(map(str, c.num)), "" if c.is_exact else c.prec)
            for (i, j), c in sorted(F.coeffs.items()) if not c.is_zero()]
    _emit(args, F.to_json(), tsv=_table_tsv(["i", "j", "shift", "val", "prec"], rows))
    return EXIT_OK


def cmd_mult_by_m(args) -> int:
    if args.m is None:
        raise InputError("mult-by-m needs --m")
    f = _load_series(args)
    s = lubin.mult_by_m(f, args.m)
    _emit(args, {**s.to_json(), "m": args.m}, tsv=_series_tsv(s))
    return EXIT_OK


def cmd_newton_polygon(args) -> int:
    f = _load_series(args)
    n = args.iterate or 1
    s = iterate(f, n) if n != 1 else f
    np_ = newton.newton_polygon(s)
    _emit(args, {"iterate": n, **np_.to_json()},
          tsv=_table_tsv(["index", "val", "certified"],
                         [(i, v, int(c)) for (i, v), c in zip(np_.vertices, np_.certified)]),
          polygon=np_)
    return EXIT_OK


def cmd_verify_iterates(args) -> int:
    f = _load_series(args)
    p = f.ring.p
    top = args.iterate
    if top is None:
        top = 0
        while p ** (top + 1) <= f.N:
            top += 1
    results = []
    for n in range(top + 1):
        ok, report = newton.verify_iterate_polygon(f, n)
        results.append({"n": n, "ok": ok, "expected": [list(v) for v in report["expected"]],
                        "vertices": [list(v) for v in report["vertices"]]})
    rows = [(r["n"], int(r["ok"]), " ".join(f"({a},{b})" for a, b in r["vertices"]))
            for r in results]
    _emit(args, {"results": results, "all_ok": all(r["ok"] for r in results)},
          tsv=_table_tsv(["n", "ok", "vertices"], rows))
    if not all(r["ok"] for r in results):
        bad = next(r for r in results if not r["ok"])
        raise MismatchWithTheorem("iterate polygon differs from the prediction",
                                  {"config": f.ring.to_json(), "f": f.to_json(), **bad})
    return EXIT_OK


def cmd_fixed_points(args) -> int:
    pair = _load_pair(args)
    if not pair.normalized:
        pair = dynamics.normalize_u(pair)
    p = pair.ring.p
    if args.m is not None:
        ms = [args.m]
    else:
        ms = [m for m in range(1, p * p + 1) if p ** dynamics.v_of_m(pair, m) <= pair.u.N]
    rows = []
    for m in ms:
        v = dynamics.v_of_m(pair, m)
        rows.append({"m": m, "v": v, "count": dynamics.fixed_point_count(pair, m)})
    _emit(args, {"rows": rows},
          tsv=_table_tsv(["m", "v(m)", "fixed_points"], [(r["m"], r["v"], r["count"]) for r in rows]))
    return EXIT_OK


def cmd_hypotheses(args) -> int:
    pair = _load_pair(args)
    report = dynamics.check_hypotheses(pair)
    payload = {**report.to_json(), "all_true": report.all_true}
    rows = [(name, c.value, "" if c.precision == float("inf") else c.precision)
            for name, c in report.items()]
    _emit(args, payload, tsv=_table_tsv(["hypothesis", "value", "precision"], rows))
    return EXIT_HYPOTHESIS if report.failed else EXIT_OK


def cmd_verify_conjecture(args) -> int:
    pair = _load_pair(args)
    verdict = dynamics.verify_conjecture(pair, args.degree)
    _emit(args, verdict.to_json())
    return EXIT_OK


def cmd_make_lubin_tate(args) -> int:
    cfg = _config(args)
    data = _input(args) or {}
    a = args.m if args.m is not None else data.get("a")
    pair = dynamics.make_lubin_tate(cfg, args.degree or DEFAULT_DEGREE, data.get("middle"), a)
    _emit(args, pair.to_json())
    return EXIT_OK


def cmd_conjugate(args) -> int:
    pair = _load_pair(args)
    seed = args.seed if args.seed is not None else 0
    w = dynamics.random_conjugator(pair.ring, pair.N, seed)
    out = dynamics.conjugate_pair(pair, w)
    _emit(args, {**out.to_json(), "seed": seed, "w": w.to_json()})
    return EXIT_OK


def cmd_tilt_valuation(args) -> int:
    cfg = _config(args)
    value = dynamics.tilt_valuation(cfg)
    if args.format == "json":
        sys.stdout.write(json.dumps(str(value)) + "\n")
    else:
        sys.stdout.write(f"{value}\n")
    return EXIT_OK


COMMANDS = {
    "log": (cmd_log, "Lubin logarithm of f"),
    "exp": (cmd_exp, "inverse of the logarithm of f"),
    "formal-group": (cmd_formal_group, "F(X,Y) = exp(log X + log Y)"),
    "mult-by-m": (cmd_mult_by_m, "[m]_f"),
    "newton-polygon": (cmd_newton_polygon, "Newton polygon of f or of an iterate"),
    "verify-iterates": (cmd_verify_iterates, "check iterate polygons up to --iterate"),
    "fixed-points": (cmd_fixed_points, "fixed points of iterates of u"),
    "hypotheses": (cmd_hypotheses, "hypothesis report for a pair"),
    "verify-conjecture": (cmd_verify_conjecture, "integrality and endomorphism checks for F"),
    "make-lubin-tate": (cmd_make_lubin_tate, "generate a Lubin-Tate pair"),
    "conjugate": (cmd_conjugate, "conjugate a pair by a seeded random series"),
    "tilt-valuation": (cmd_tilt_valuation, "the exact valuation p/(p-1)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="ring configuration: JSON file, inline JSON or -")
    common.add_argument("--input", help="series or pair: JSON file, inline JSON or -")
    common.add_argument("--degree", type=int, help="truncation degree N")
    common.add_argument("--p-precision", type=int, dest="p_precision",
                        help="p-adic working precision n_prec")
    common.add_argument("--format", choices=("json", "tsv", "ascii", "svg"), default="json")
    common.add_argument("--seed", type=int, help="seed for random generation")
    common.add_argument("--iterate", type=int, help="iterate count n")
    common.add_argument("--m", type=int, help="integer multiplier or iterate count")
    parser = argparse.ArgumentParser(prog="padic-dynamics", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("PADIC_DYNAMICS_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.degree is not None and args.degree < 1:
        print("error: --degree must be positive", file=sys.stderr)
        return EXIT_INPUT
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except MismatchWithTheorem as exc:
        print(f"mismatch with theorem: {exc}", file=sys.stderr)
        print(json.dumps(exc.instance), file=sys.stderr)
        return EXIT_MISMATCH
    except (HypothesisViolation, NotAUnit, NotInvertible) as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (InputError, InvalidConfig, InvalidTemplate, NonIntegralSeries, ConfigMismatch,
            TruncationTooShallow, KeyError, TypeError, ValueError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
