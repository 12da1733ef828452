"""Command-line entry point.

Exit codes: 0 success, 1 validation or mathematical failure, 2 I/O or parse failure.
Inputs are JSON files, ``-`` for stdin, or ``fixture:<name>`` for bundled examples.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import jsonio, linalg
from .approx import ApproximationError, ApproximationFailed, anick_approximate, symp_approximate
from .endo import (
    PolyEndo,
    SingularLinearPart,
    endo_from_json,
    endo_to_json,
    is_symplectic,
)
from .polycore import default_names, det_poly, poly_from_json, symplectic_names
from .tame import WordError, eval_word, invert_word, word_from_json, word_to_json
from .weyl import (
    HbarPoly,
    check_weyl_relations,
    classical_symbol,
    hbar_from_json,
    hbar_to_json,
    lift_word,
    moyal_star,
    specialize,
    weyl_endo_to_json,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2


class ParseError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    action: str | None
    input: str | None
    output: str | None
    report: str | None
    degree: int | None
    rank: int | None
    order: int
    quiet: bool

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        return cls(
            command=ns.command,
            action=getattr(ns, "action", None),
            input=ns.input,
            output=ns.output,
            report=ns.report,
            degree=ns.degree,
            rank=ns.rank,
            order=ns.order,
            quiet=ns.quiet,
        )


class Console:
    """Human-readable lines; sent to stderr when stdout carries JSON."""

    def __init__(self, cfg: RunConfig):
        self.quiet = cfg.quiet
        self.stream = sys.stderr if cfg.output in (None, "-") else sys.stdout

    def say(self, line: str = "") -> None:
        if not self.quiet:
            print(line, file=self.stream)


def _load(cfg: RunConfig):
    try:
        return jsonio.load(cfg.input)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {cfg.input or 'stdin'}: {exc}") from exc


def _parse(fn, obj, what: str):
    try:
        return fn(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed {what}: {exc}") from exc


def _names(nvars: int, n: int | None) -> list[str]:
    return symplectic_names(n) if n else default_names(nvars)


def _format_matrix(a) -> str:
    if a == linalg.identity(len(a)):
        return "identity"
    return "[" + "; ".join(" ".join(str(v) for v in row) for row in a) + "]"


def cmd_verify(cfg: RunConfig, out: Console) -> int:
    obj = _load(cfg)

    def parse(o):
        images = [poly_from_json(p) for p in o["images"]]
        if len(images) != int(o["nvars"]) or any(p.nvars != len(images) for p in images):
            raise ValueError("image count or variable count does not match nvars")
        return images, o.get("symplectic_n")

    images, declared = _parse(parse, obj, "endomorphism")
    nv = len(images)
    n = cfg.rank if cfg.rank is not None else declared
    names = _names(nv, n)
    result: dict = {"nvars": nv}
    ok = True

    origin = all(not p.constant_term() for p in images)
    result["origin_preserved"] = origin
    out.say(f"origin preserved: {'yes' if origin else 'no'}")
    ok &= origin

    jac = det_poly([[p.partial(j) for j in range(nv)] for p in images])
    const = jac.is_constant() and bool(jac)
    result["jacobian"] = jac.format(names)
    result["jacobian_constant"] = const
    out.say(f"jacobian: {jac.format(names)}")
    out.say(f"jacobian constant: {'yes' if const else 'no'}")
    ok &= const

    unit = [tuple(int(i == j) for j in range(nv)) for i in range(nv)]
    lin = tuple(tuple(images[j].coeff(unit[i]) for j in range(nv)) for i in range(nv))
    invertible = bool(linalg.det(lin)) if nv else True
    result["linear_part"] = linalg.to_json(lin)
    result["linear_part_invertible"] = invertible
    out.say(f"linear part: {_format_matrix(lin)}")
    out.say(f"linear part invertible: {'yes' if invertible else 'no'}")
    ok &= invertible

    if n is not None:
        if 2 * int(n) != nv:
            raise ParseError(f"rank {n} does not match {nv} variables")
        centered = PolyEndo(tuple(p - p.constant_term() for p in images))
        check = is_symplectic(centered, int(n))
        result["symplectic"] = check.ok
        result["violations"] = [
            {"pair": [names[u], names[v]], "height": h if isinstance(h, int) else None}
            for u, v, h in check.violations
        ]
        out.say(f"symplectic: {'yes' if check.ok else 'no'}")
        for u, v, h in check.violations:
            out.say(f"  bracket {{{names[u]}, {names[v]}}} is wrong (defect height {h})")
        ok &= check.ok

    result["ok"] = ok
    if cfg.report:
        jsonio.write(result, cfg.report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_approx(cfg: RunConfig, out: Console) -> int:
    obj = _load(cfg)
    phi = _parse(endo_from_json, obj, "endomorphism")
    k = cfg.degree if cfg.degree is not None else 8
    if k < 2:
        raise ParseError("--degree must be at least 2")
    try:
        if cfg.action == "poly":
            word, report = anick_approximate(phi, k)
        else:
            word, report = symp_approximate(phi, k, n=cfg.rank)
    except ApproximationFailed as exc:
        out.say(f"approximation failed: {exc}")
        if cfg.report:
            jsonio.write(exc.report.to_json(), cfg.report)
        return EXIT_FAIL
    except (ApproximationError, SingularLinearPart) as exc:
        out.say(f"input rejected: {exc}")
        return EXIT_FAIL
    for r in report.rounds:
        out.say(
            f"round {r.k}: height {r.height_before} -> {r.height_after}, "
            f"+{r.factors_appended} factors, {r.max_coeff_bits} coefficient bits"
        )
    out.say(f"word length {len(word)}, residual height {report.final_height} (target {k})")
    jsonio.write(word_to_json(word), cfg.output)
    if cfg.report:
        jsonio.write(report.to_json(), cfg.report)
    return EXIT_OK if report.success else EXIT_FAIL


def cmd_word(cfg: RunConfig, out: Console) -> int:
    obj = _load(cfg)
    w = _parse(word_from_json, obj, "tame word")
    if cfg.action == "eval":
        f = eval_word(w, cfg.degree, cfg.rank)
        out.say(f"evaluated {len(w)} factors" + (f" through degree {cfg.degree}" if cfg.degree else ""))
        jsonio.write(endo_to_json(f), cfg.output)
    else:
        inv = invert_word(w)
        out.say(f"inverted {len(w)} factors")
        jsonio.write(word_to_json(inv), cfg.output)
    return EXIT_OK


def cmd_lift(cfg: RunConfig, out: Console, plain: bool = False) -> int:
    obj = _load(cfg)
    w = _parse(word_from_json, obj, "tame word")
    try:
        lifted = lift_word(w)
    except WordError as exc:
        out.say(f"cannot lift: {exc}")
        return EXIT_FAIL
    emitted = specialize(lifted) if plain else lifted
    relations = check_weyl_relations(emitted)
    symbol_ok = classical_symbol(lifted) == eval_word(w)
    out.say(f"weyl relations: {'ok' if relations else 'violated'}")
    for u, v, diff in relations.violations:
        out.say(f"  commutator of images {u} and {v} off by {diff}")
    out.say(f"classical symbol matches word evaluation: {'yes' if symbol_ok else 'no'}")
    jsonio.write(weyl_endo_to_json(emitted), cfg.output)
    if cfg.report:
        jsonio.write(
            {
                "relations_ok": relations.ok,
                "violations": [{"pair": [u, v], "difference": d} for u, v, d in relations.violations],
                "symbol_ok": symbol_ok,
            },
            cfg.report,
        )
    return EXIT_OK if relations and symbol_ok else EXIT_FAIL


def cmd_star(cfg: RunConfig, out: Console) -> int:
    """Moyal product of {"f": HbarPoly, "g": HbarPoly} (a bare Poly counts as an hbar^0 series)."""
    obj = _load(cfg)

    def series(o):
        if "coeffs" in o:
            return hbar_from_json(o)
        return HbarPoly.from_poly(poly_from_json(o), cfg.order)

    f = _parse(lambda o: series(o["f"]), obj, "star-product input")
    g = _parse(lambda o: series(o["g"]), obj, "star-product input")
    if f.order != cfg.order or g.order != cfg.order:
        out.say(f"truncation mismatch: inputs carry {f.order} and {g.order}, --order is {cfg.order}")
        return EXIT_FAIL
    product = moyal_star(f, g, cfg.order)
    names = _names(f.nvars, f.nvars // 2)
    for m, c in enumerate(product.coeffs):
        if c:
            out.say(f"hbar^{m}: {c.format(names)}")
    jsonio.write(hbar_to_json(product), cfg.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="JSON file, '-' for stdin, or fixture:<name>")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--report", help="write a JSON report here")
    common.add_argument("--degree", "-K", type=int, help="target degree / truncation degree")
    common.add_argument("--rank", "-n", type=int, help="half-dimension n of a symplectic input")
    common.add_argument("--order", "-L", type=int, default=4, help="hbar truncation order (default 4)")
    common.add_argument("--quiet", "-q", action="store_true", help="suppress human-readable output")

    parser = argparse.ArgumentParser(
        prog="tamelift",
        description="Tame approximation of polynomial automorphisms and symplectomorphisms.",
        epilog="bundled fixtures: " + ", ".join(jsonio.fixture_names()),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="Jacobian, linear part and bracket checks")
    p = sub.add_parser("approx", parents=[common], help="tame approximation up to degree K")
    p.add_argument("action", choices=["poly", "symp"])
    p = sub.add_parser("word", parents=[common], help="evaluate or invert a tame word")
    p.add_argument("action", choices=["eval", "invert"])
    p = sub.add_parser("lift", parents=[common], help="lift a symplectic word to the Weyl algebra")
    p.add_argument("--plain", action="store_true", help="emit images with hbar set to 1")
    sub.add_parser("star", parents=[common], help="Moyal product of two truncated hbar-series")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig.from_args(ns)
    out = Console(cfg)
    try:
        if cfg.command == "verify":
            return cmd_verify(cfg, out)
        if cfg.command == "approx":
            return cmd_approx(cfg, out)
        if cfg.command == "word":
            return cmd_word(cfg, out)
        if cfg.command == "lift":
            return cmd_lift(cfg, out, plain=ns.plain)
        return cmd_star(cfg, out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
