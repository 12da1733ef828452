"""Normal-ordered Weyl algebra, lifting of symplectic tame words, Moyal product.

Monomials are stored as ``(ex, ep, h)``: x-hat exponents, p-hat exponents
and a power of a formal Planck constant.  Elements come in two flavours:

* plain (``formal=False``): the Weyl algebra itself, [p_i, x_j] = delta_ij,
  and ``h`` is always 0;
* formal (``formal=True``): the homogenized algebra with [p_i, x_j] =
  hbar * delta_ij.  Setting hbar = 1 recovers the plain algebra, and the
  hbar^0 part of a normal-ordered product is the commutative product, so
  the hbar^0 part of a lifted word is exactly the classical evaluation.

Lifting defaults to the formal flavour so that ``classical_symbol`` of a
lift reproduces ``eval_word`` exactly; ``specialize`` turns it into a plain
Weyl endomorphism.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .endo import PolyEndo, canonical_bracket
from .polycore import Poly, Q, Rational, format_rational, poly_from_json, poly_to_json
from .tame import SympLinear, TameWord, TransvectionP, TransvectionX, WordError

Key = tuple[tuple[int, ...], tuple[int, ...], int]


@functools.lru_cache(maxsize=None)
def _reorder(b: int, c: int) -> tuple[tuple[int, int], ...]:
    """p^b x^c = sum_j C(b,j) C(c,j) j! hbar^j x^(c-j) p^(b-j); returns (j, coefficient)."""
    return tuple((j, comb(b, j) * comb(c, j) * factorial(j)) for j in range(min(b, c) + 1))


class WeylElement:
    __slots__ = ("n", "formal", "_t")

    def __init__(self, n: int, terms: Mapping[Key, object] | None = None, formal: bool = False):
        self.n = n
        self.formal = formal
        t: dict[Key, Rational] = {}
        for (ex, ep, h), c in (terms or {}).items():
            ex, ep, h = tuple(ex), tuple(ep), int(h)
            if len(ex) != n or len(ep) != n or min(ex + ep + (h,), default=0) < 0:
                raise ValueError(f"bad Weyl monomial {(ex, ep, h)} for rank {n}")
            if h and not formal:
                raise ValueError("hbar powers only exist in formal elements")
            c = Q(c)
            if c:
                key = (ex, ep, h)
                s = t.get(key, 0) + c
                if s:
                    t[key] = s
                else:
                    t.pop(key, None)
        self._t = t

    @classmethod
    def _raw(cls, n: int, t: dict, formal: bool) -> "WeylElement":
        obj = cls.__new__(cls)
        obj.n = n
        obj.formal = formal
        obj._t = t
        return obj

    @classmethod
    def zero(cls, n: int, formal: bool = False) -> "WeylElement":
        return cls._raw(n, {}, formal)

    @classmethod
    def const(cls, c, n: int, formal: bool = False) -> "WeylElement":
        z = (0,) * n
        return cls(n, {(z, z, 0): c}, formal)

    @classmethod
    def hbar(cls, n: int) -> "WeylElement":
        z = (0,) * n
        return cls(n, {(z, z, 1): 1}, True)

    @classmethod
    def x(cls, i: int, n: int, formal: bool = False) -> "WeylElement":
        e = tuple(int(j == i) for j in range(n))
        return cls(n, {(e, (0,) * n, 0): 1}, formal)

    @classmethod
    def p(cls, i: int, n: int, formal: bool = False) -> "WeylElement":
        e = tuple(int(j == i) for j in range(n))
        return cls(n, {((0,) * n, e, 0): 1}, formal)

    @classmethod
    def gens(cls, n: int, formal: bool = False) -> list["WeylElement"]:
        return [cls.x(i, n, formal) for i in range(n)] + [cls.p(i, n, formal) for i in range(n)]

    @classmethod
    def from_poly(cls, f: Poly, formal: bool = False) -> "WeylElement":
        """Read a commutative polynomial in (x, p) as a normal-ordered element."""
        if f.nvars % 2:
            raise ValueError("expected 2n variables")
        n = f.nvars // 2
        return cls(n, {(e[:n], e[n:], 0): c for e, c in f.terms().items()}, formal)

    def terms(self) -> dict[Key, Rational]:
        return dict(sorted(self._t.items(), key=_order))

    def __bool__(self) -> bool:
        return bool(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def degree(self) -> int:
        return max((sum(ex) + sum(ep) for ex, ep, _ in self._t), default=-1)

    def height(self):
        from .polycore import INF

        return min((sum(ex) + sum(ep) for ex, ep, _ in self._t), default=INF)

    def top_component(self) -> "WeylElement":
        d = self.degree()
        return WeylElement._raw(
            self.n, {k: c for k, c in self._t.items() if sum(k[0]) + sum(k[1]) == d}, self.formal
        )

    def symbol(self) -> Poly:
        """Commutative polynomial in (x, p) read off the normal-ordered hbar^0 terms."""
        return Poly(2 * self.n, {ex + ep: c for (ex, ep, h), c in self._t.items() if h == 0})

    def _check(self, other: "WeylElement") -> None:
        if self.n != other.n:
            raise ValueError(f"rank mismatch: {self.n} vs {other.n}")
        if self.formal != other.formal:
            raise ValueError("cannot mix formal and plain Weyl elements")

    def _coerce(self, other) -> "WeylElement":
        if isinstance(other, WeylElement):
            self._check(other)
            return other
        return WeylElement.const(other, self.n, self.formal)

    def __add__(self, other) -> "WeylElement":
        other = self._coerce(other)
        t = dict(self._t)
        for k, c in other._t.items():
            s = t.get(k, 0) + c
            if s:
                t[k] = s
            else:
                t.pop(k, None)
        return WeylElement._raw(self.n, t, self.formal)

    __radd__ = __add__

    def __neg__(self) -> "WeylElement":
        return WeylElement._raw(self.n, {k: -c for k, c in self._t.items()}, self.formal)

    def __sub__(self, other) -> "WeylElement":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "WeylElement":
        return (-self) + other

    def scale(self, c) -> "WeylElement":
        c = Q(c)
        if not c:
            return WeylElement.zero(self.n, self.formal)
        return WeylElement._raw(self.n, {k: c * v for k, v in self._t.items()}, self.formal)

    def __mul__(self, other) -> "WeylElement":
        if isinstance(other, WeylElement):
            return weyl_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "WeylElement":
        return self.scale(other)

    def __pow__(self, e: int) -> "WeylElement":
        if e < 0:
            raise ValueError("negative power")
        result = WeylElement.const(1, self.n, self.formal)
        base = self
        while e:
            if e & 1:
                result = weyl_mul(result, base)
            e >>= 1
            if e:
                base = weyl_mul(base, base)
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, WeylElement):
            return self.n == other.n and self.formal == other.formal and self._t == other._t
        if isinstance(other, (int, Rational)):
            return self == WeylElement.const(other, self.n, self.formal)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.n, self.formal, frozenset(self._t.items())))

    def __repr__(self) -> str:
        return f"WeylElement({self.n}, {self})"

    def __str__(self) -> str:
        if not self._t:
            return "0"
        parts = []
        for (ex, ep, h), c in sorted(self._t.items(), key=_order):
            factors = []
            if h:
                factors.append("hbar" if h == 1 else f"hbar^{h}")
            for i, e in enumerate(ex):
                if e:
                    factors.append(f"X{i + 1}" if e == 1 else f"X{i + 1}^{e}")
            for i, e in enumerate(ep):
                if e:
                    factors.append(f"P{i + 1}" if e == 1 else f"P{i + 1}^{e}")
            mono = "*".join(factors)
            if not mono:
                s = str(c)
            elif c == 1:
                s = mono
            elif c == -1:
                s = "-" + mono
            else:
                s = f"{c}*{mono}"
            parts.append(s)
        return " + ".join(parts).replace("+ -", "- ")


def _order(item) -> tuple:
    (ex, ep, h), _ = item
    # descending total degree, then exponents descending, then hbar power
    return (-(sum(ex) + sum(ep)), tuple(-v for v in ex + ep), h)


def weyl_mul(a: WeylElement, b: WeylElement) -> WeylElement:
    """Product renormalized to x-before-p order."""
    a._check(b)
    n = a.n
    formal = a.formal
    out: dict[Key, Rational] = {}
    for (ax, ap, ah), ac in a._t.items():
        for (bx, bp, bh), bc in b._t.items():
            c0 = ac * bc
            options = []
            for i in range(n):
                if ap[i] and bx[i]:
                    options.append(_reorder(ap[i], bx[i]))
                else:
                    options.append(((0, 1),))
            for choice in itertools.product(*options):
                coef = c0
                shift = 0
                for j, m in choice:
                    coef *= m
                    shift += j
                ex = tuple(ax[i] + bx[i] - choice[i][0] for i in range(n))
                ep = tuple(ap[i] + bp[i] - choice[i][0] for i in range(n))
                key = (ex, ep, ah + bh + shift if formal else 0)
                s = out.get(key, 0) + coef
                if s:
                    out[key] = s
                else:
                    del out[key]
    return WeylElement._raw(n, out, formal)


def weyl_commutator(a: WeylElement, b: WeylElement) -> WeylElement:
    return weyl_mul(a, b) - weyl_mul(b, a)


@dataclass(frozen=True)
class WeylEndo:
    """Images of x-hat_1..x-hat_n, p-hat_1..p-hat_n."""

    images: tuple[WeylElement, ...]

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        if len(images) % 2:
            raise ValueError("a Weyl endomorphism needs 2n images")
        n = len(images) // 2
        flags = {img.formal for img in images}
        if len(flags) > 1:
            raise ValueError("mixed formal and plain images")
        if any(img.n != n for img in images):
            raise ValueError(f"images must have rank {n}")

    @property
    def n(self) -> int:
        return len(self.images) // 2

    @property
    def formal(self) -> bool:
        return bool(self.images) and self.images[0].formal

    @classmethod
    def identity(cls, n: int, formal: bool = False) -> "WeylEndo":
        return cls(tuple(WeylElement.gens(n, formal)))

    def __str__(self) -> str:
        return "(" + ", ".join(str(img) for img in self.images) + ")"


def _evaluate(f: Poly, images: Sequence[WeylElement], n: int, formal: bool) -> WeylElement:
    """Substitute pairwise-commuting Weyl images for the variables of f."""
    cache: dict[tuple[int, int], WeylElement] = {}

    def power(i: int, e: int) -> WeylElement:
        key = (i, e)
        if key not in cache:
            cache[key] = images[i] if e == 1 else weyl_mul(power(i, e - 1), images[i])
        return cache[key]

    acc = WeylElement.zero(n, formal)
    for exps, c in f.terms().items():
        term = WeylElement.const(c, n, formal)
        for i, e in enumerate(exps):
            if e:
                term = weyl_mul(term, power(i, e))
        acc = acc + term
    return acc


def _lift_act(g, cur: WeylEndo) -> WeylEndo:
    n = cur.n
    formal = cur.formal
    images = list(cur.images)
    if isinstance(g, SympLinear):
        a = g.matrix
        out = []
        for j in range(2 * n):
            acc = WeylElement.zero(n, formal)
            for i in range(2 * n):
                if a[i][j]:
                    acc = acc + images[i].scale(a[i][j])
            out.append(acc)
        return WeylEndo(tuple(out))
    if isinstance(g, (TransvectionP, TransvectionX)):
        # the gradient only involves one block, whose images commute
        moved, offset = g._moved()
        for i in moved:
            grad = g.generator.partial(i + offset)
            if grad:
                images[i] = images[i] + _evaluate(grad, cur.images, n, formal)
        return WeylEndo(tuple(images))
    raise WordError(f"cannot lift a {type(g).__name__} factor")


def lift_word(w: TameWord, formal: bool = True) -> WeylEndo:
    """Weyl endomorphism obtained by lifting each generator verbatim."""
    if w.arity % 2:
        raise WordError("symplectic words need an even arity")
    for g in w.factors:
        if not isinstance(g, (SympLinear, TransvectionX)):
            raise WordError(f"cannot lift a {type(g).__name__} factor")
    cur = WeylEndo.identity(w.arity // 2, formal)
    for g in reversed(w.factors):
        cur = _lift_act(g, cur)
    return cur


def specialize(e: WeylEndo, hbar=1) -> WeylEndo:
    """Set the formal Planck constant to a number; yields a plain endomorphism when hbar = 1."""
    if not e.formal:
        return e
    hv = Q(hbar)
    if hv != 1:
        raise ValueError("only hbar = 1 gives the standard Weyl relations")
    out = []
    for img in e.images:
        t: dict[Key, Rational] = {}
        for (ex, ep, _), c in img._t.items():
            s = t.get((ex, ep, 0), 0) + c
            if s:
                t[(ex, ep, 0)] = s
            else:
                t.pop((ex, ep, 0), None)
        out.append(WeylElement._raw(e.n, t, False))
    return WeylEndo(tuple(out))


@dataclass
class WeylRelationReport:
    ok: bool
    violations: list[tuple[int, int, str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def check_weyl_relations(e: WeylEndo) -> WeylRelationReport:
    """[P_i, X_j] = delta_ij (times hbar when formal); X's and P's commute among themselves."""
    n = e.n
    unit = WeylElement.hbar(n) if e.formal else WeylElement.const(1, n)
    violations = []
    for u in range(2 * n):
        for v in range(u + 1, 2 * n):
            got = weyl_commutator(e.images[u], e.images[v])
            want = unit.scale(canonical_bracket(u, v, n))
            if got != want:
                violations.append((u, v, str(got - want)))
    return WeylRelationReport(not violations, violations)


def classical_symbol(e: WeylEndo) -> PolyEndo:
    """Commutative symbol of the normal-ordered images (hbar^0 part when formal)."""
    return PolyEndo(tuple(img.symbol() for img in e.images), e.n)


# Moyal product on truncated hbar-series


@dataclass(frozen=True)
class HbarPoly:
    coeffs: tuple[Poly, ...]

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs:
            raise ValueError("need at least the hbar^0 coefficient")
        nv = coeffs[0].nvars
        if nv % 2 or any(c.nvars != nv for c in coeffs):
            raise ValueError("coefficients must share 2n variables")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def nvars(self) -> int:
        return self.coeffs[0].nvars

    @classmethod
    def from_poly(cls, f: Poly, order: int = 4) -> "HbarPoly":
        return cls((f,) + (Poly.zero(f.nvars),) * order)

    def __add__(self, other: "HbarPoly") -> "HbarPoly":
        _check_hbar(self, other)
        return HbarPoly(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "HbarPoly") -> "HbarPoly":
        _check_hbar(self, other)
        return HbarPoly(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def shift_down(self) -> "HbarPoly":
        """Divide by hbar; requires a zero hbar^0 coefficient.  The top slot becomes 0."""
        if self.coeffs[0]:
            raise ValueError("series is not divisible by hbar")
        return HbarPoly(self.coeffs[1:] + (Poly.zero(self.nvars),))


def _check_hbar(f: HbarPoly, g: HbarPoly) -> None:
    if f.order != g.order:
        raise ValueError(f"truncation mismatch: {f.order} vs {g.order}")
    if f.nvars != g.nvars:
        raise ValueError("rank mismatch")


def _multi_indices(n: int, total: int) -> Iterable[tuple[int, ...]]:
    if n == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _multi_indices(n - 1, total - first):
            yield (first,) + rest


def _derive(f: Poly, counts: Sequence[int]) -> Poly:
    for i, c in enumerate(counts):
        for _ in range(c):
            if not f:
                return f
            f = f.partial(i)
    return f


def moyal_term(f: Poly, g: Poly, m: int) -> Poly:
    """(1/2^m m!) Pi^m(f, g), Pi = sum_i (d/dp_i x d/dx_i - d/dx_i x d/dp_i)."""
    nv = f.nvars
    n = nv // 2
    acc = Poly.zero(nv)
    scale = Q(1) / 2**m
    for split in range(m + 1):
        # split = |alpha| for the (p on f, x on g) factor
        for alpha in _multi_indices(n, split):
            for beta in _multi_indices(n, m - split):
                fpart = _derive(f, tuple(beta) + tuple(alpha))
                if not fpart:
                    continue
                gpart = _derive(g, tuple(alpha) + tuple(beta))
                if not gpart:
                    continue
                denom = 1
                for v in alpha + beta:
                    denom *= factorial(v)
                sign = -1 if (m - split) % 2 else 1
                acc = acc + (fpart * gpart).scale(scale * sign / denom)
    return acc


def moyal_star(f: HbarPoly, g: HbarPoly, order: int | None = None) -> HbarPoly:
    """Moyal product truncated after hbar^order (the common truncation of f and g)."""
    _check_hbar(f, g)
    big_l = f.order
    if order is not None and order != big_l:
        raise ValueError(f"truncation mismatch: requested {order}, inputs carry {big_l}")
    nv = f.nvars
    out = [Poly.zero(nv) for _ in range(big_l + 1)]
    for a, fa in enumerate(f.coeffs):
        if not fa:
            continue
        for b, gb in enumerate(g.coeffs):
            if not gb or a + b > big_l:
                continue
            for m in range(big_l - a - b + 1):
                t = moyal_term(fa, gb, m)
                if t:
                    out[a + b + m] = out[a + b + m] + t
    return HbarPoly(tuple(out))


# JSON


def weyl_to_json(a: WeylElement) -> dict:
    terms = []
    for (ex, ep, h), c in sorted(a._t.items(), key=_order):
        t = {"c": format_rational(c), "ex": list(ex), "ep": list(ep)}
        if a.formal:
            t["h"] = h
        terms.append(t)
    out: dict = {"n": a.n}
    if a.formal:
        out["formal"] = True
    out["terms"] = terms
    return out


def weyl_from_json(obj) -> WeylElement:
    n = int(obj["n"])
    formal = bool(obj.get("formal", False))
    terms: dict = {}
    for t in obj["terms"]:
        key = (tuple(int(v) for v in t["ex"]), tuple(int(v) for v in t["ep"]), int(t.get("h", 0)))
        if key in terms:
            raise ValueError(f"duplicate Weyl monomial {key}")
        terms[key] = Q(str(t["c"]))
    return WeylElement(n, terms, formal)


def weyl_endo_to_json(e: WeylEndo) -> dict:
    return {"n": e.n, "formal": e.formal, "images": [weyl_to_json(img) for img in e.images]}


def weyl_endo_from_json(obj) -> WeylEndo:
    images = tuple(weyl_from_json(img) for img in obj["images"])
    e = WeylEndo(images)
    if e.n != int(obj["n"]):
        raise ValueError("rank does not match the number of images")
    return e


def hbar_to_json(f: HbarPoly) -> dict:
    return {"L": f.order, "coeffs": [poly_to_json(c) for c in f.coeffs]}


def hbar_from_json(obj) -> HbarPoly:
    coeffs = tuple(poly_from_json(c) for c in obj["coeffs"])
    f = HbarPoly(coeffs)
    if f.order != int(obj["L"]):
        raise ValueError("L does not match the number of coefficients")
    return f


def commutator_symbol(f: Poly, g: Poly, order: int = 4) -> HbarPoly:
    """(f*g - g*f)/hbar as a truncated series; its hbar^0 part is {f, g}."""
    fs, gs = HbarPoly.from_poly(f, order), HbarPoly.from_poly(g, order)
    return (moyal_star(fs, gs) - moyal_star(gs, fs)).shift_down()

