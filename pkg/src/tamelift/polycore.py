"""Sparse multivariate polynomials with exact rational coefficients.

Monomials are packed into a single integer: the total degree sits in the
top slot and the exponents follow in fixed-width slots, so that

* multiplying monomials is integer addition,
* integer order on keys is graded lexicographic order (x1 > x2 > ...),
* the degree of a key is a single shift.

Every arithmetic entry point accepts an optional ``max_degree``.  Terms of
higher degree are dropped as soon as they are produced; the retained terms
are exactly those of the untruncated result.
"""

from __future__ import annotations

import functools
from bisect import bisect_right
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpq

_SLOT = 32
_MASK = (1 << _SLOT) - 1

Rational = type(mpq(0))


def Q(value) -> Rational:
    """Coerce ints, Fractions, mpq and 'num/den' strings to an exact rational."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return mpq(int(num), int(den))
        return mpq(int(text))
    if type(value).__name__ == "mpz":
        return mpq(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


def format_rational(c: Rational) -> str:
    return f"{c.numerator}/{c.denominator}"


def coeff_bits(c: Rational) -> int:
    return max(gmpy2.bit_length(c.numerator), gmpy2.bit_length(c.denominator))


@functools.total_ordering
class _Infinity:
    """Height of the zero polynomial.  Compares above every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __hash__(self):
        return hash("tamelift-infinity")

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def _shifts(nvars: int) -> tuple[int, ...]:
    return tuple(_SLOT * (nvars - 1 - i) for i in range(nvars))


def _pack(exps: Sequence[int], nvars: int) -> int:
    key = sum(exps) << (_SLOT * nvars)
    for e, s in zip(exps, _shifts(nvars)):
        if e < 0 or e > _MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << s
    return key


@functools.lru_cache(maxsize=None)
def _unpacker(nvars: int):
    shifts = _shifts(nvars)

    def unpack(key: int) -> tuple[int, ...]:
        return tuple((key >> s) & _MASK for s in shifts)

    return unpack


def _unpack(key: int, nvars: int) -> tuple[int, ...]:
    return _unpacker(nvars)(key)


def _unit(i: int, nvars: int) -> int:
    """Packed key of the variable x_i."""
    return (1 << (_SLOT * nvars)) | (1 << (_SLOT * (nvars - 1 - i)))


class Poly:
    """Immutable polynomial in ``nvars`` commuting variables over Q."""

    __slots__ = ("nvars", "_t", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        self.nvars = nvars
        self._hash = None
        t: dict[int, Rational] = {}
        if terms:
            for exps, c in terms.items():
                if len(exps) != nvars:
                    raise ValueError(f"monomial {tuple(exps)} does not have {nvars} slots")
                c = Q(c)
                if c:
                    k = _pack(exps, nvars)
                    v = t.get(k, 0) + c
                    if v:
                        t[k] = v
                    else:
                        t.pop(k, None)
        self._t = t

    @classmethod
    def _raw(cls, nvars: int, t: dict[int, Rational]) -> "Poly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p._t = t
        p._hash = None
        return p

    # constructors

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, c, nvars: int) -> "Poly":
        c = Q(c)
        return cls._raw(nvars, {0: c} if c else {})

    @classmethod
    def var(cls, i: int, nvars: int) -> "Poly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        return cls._raw(nvars, {_unit(i, nvars): mpq(1)})

    @classmethod
    def gens(cls, nvars: int) -> list["Poly"]:
        return [cls.var(i, nvars) for i in range(nvars)]

    @classmethod
    def linear_form(cls, coeffs: Sequence, nvars: int | None = None) -> "Poly":
        nvars = len(coeffs) if nvars is None else nvars
        t = {}
        for i, c in enumerate(coeffs):
            c = Q(c)
            if c:
                t[_unit(i, nvars)] = c
        return cls._raw(nvars, t)

    # inspection

    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def terms(self) -> dict[tuple[int, ...], Rational]:
        unpack = _unpacker(self.nvars)
        return {unpack(k): c for k, c in self._t.items()}

    def items(self) -> list[tuple[tuple[int, ...], Rational]]:
        """Terms in canonical order: descending graded lexicographic."""
        unpack = _unpacker(self.nvars)
        return [(unpack(k), self._t[k]) for k in sorted(self._t, reverse=True)]

    def coeff(self, exps: Sequence[int]) -> Rational:
        return self._t.get(_pack(exps, self.nvars), mpq(0))

    def constant_term(self) -> Rational:
        return self._t.get(0, mpq(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._t:
            return -1
        return max(self._t) >> (_SLOT * self.nvars)

    def height(self):
        if not self._t:
            return INF
        return min(self._t) >> (_SLOT * self.nvars)

    def is_constant(self) -> bool:
        return all(k == 0 for k in self._t)

    def is_homogeneous(self, k: int | None = None) -> bool:
        shift = _SLOT * self.nvars
        degs = {key >> shift for key in self._t}
        if k is None:
            return len(degs) <= 1
        return degs <= {k}

    def variables(self) -> set[int]:
        used = set()
        shifts = _shifts(self.nvars)
        for k in self._t:
            for i, s in enumerate(shifts):
                if (k >> s) & _MASK:
                    used.add(i)
        return used

    def involves(self, i: int) -> bool:
        s = _SLOT * (self.nvars - 1 - i)
        return any((k >> s) & _MASK for k in self._t)

    def max_coeff_bits(self) -> int:
        return max((coeff_bits(c) for c in self._t.values()), default=0)

    # grading

    def homogeneous_component(self, k: int) -> "Poly":
        shift = _SLOT * self.nvars
        return Poly._raw(self.nvars, {key: c for key, c in self._t.items() if key >> shift == k})

    def truncate(self, max_degree: int | None) -> "Poly":
        if max_degree is None:
            return self
        shift = _SLOT * self.nvars
        return Poly._raw(self.nvars, {key: c for key, c in self._t.items() if key >> shift <= max_degree})

    def components(self) -> dict[int, "Poly"]:
        shift = _SLOT * self.nvars
        out: dict[int, dict[int, Rational]] = {}
        for key, c in self._t.items():
            out.setdefault(key >> shift, {})[key] = c
        return {d: Poly._raw(self.nvars, t) for d, t in sorted(out.items())}

    # arithmetic

    def _check(self, other: "Poly") -> None:
        if self.nvars != other.nvars:
            raise ValueError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(other, self.nvars)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        t = dict(self._t)
        for k, c in other._t.items():
            v = t.get(k, 0) + c
            if v:
                t[k] = v
            else:
                del t[k]
        return Poly._raw(self.nvars, t)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {k: -c for k, c in self._t.items()})

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        t = dict(self._t)
        for k, c in other._t.items():
            v = t.get(k, 0) - c
            if v:
                t[k] = v
            else:
                del t[k]
        return Poly._raw(self.nvars, t)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def scale(self, c) -> "Poly":
        c = Q(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {k: v * c for k, v in self._t.items()})

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return self.mul(other)
        return self.scale(other)

    def __rmul__(self, other) -> "Poly":
        return self.scale(other)

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return exact_div(self, other)
        return self.scale(1 / Q(other))

    def mul(self, other: "Poly", max_degree: int | None = None) -> "Poly":
        self._check(other)
        return Poly._raw(self.nvars, _mul_raw(self._t, other._t, _SLOT * self.nvars, max_degree))

    def __pow__(self, e: int) -> "Poly":
        return self.pow(e)

    def pow(self, e: int, max_degree: int | None = None) -> "Poly":
        if e < 0:
            raise ValueError("negative power")
        result = Poly.const(1, self.nvars)
        base = self.truncate(max_degree)
        if max_degree is not None and e > 1 and base:
            # the other e-1 factors contribute degree >= height each
            base = base.truncate(max_degree - (e - 1) * base.height())
        while e:
            if e & 1:
                result = result.mul(base, max_degree)
            e >>= 1
            if e:
                base = base.mul(base, max_degree)
        return result

    def partial(self, i: int) -> "Poly":
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        s = _SLOT * (self.nvars - 1 - i)
        step = (1 << s) | (1 << (_SLOT * self.nvars))
        t = {}
        for k, c in self._t.items():
            e = (k >> s) & _MASK
            if e:
                t[k - step] = c * e
        return Poly._raw(self.nvars, t)

    def substitute(self, images: Sequence["Poly"], max_degree: int | None = None) -> "Poly":
        if len(images) != self.nvars:
            raise ValueError(f"need {self.nvars} images, got {len(images)}")
        if not images:
            return self
        m = images[0].nvars
        for img in images:
            if img.nvars != m:
                raise ValueError("images must share a variable count")
        unpack = _unpacker(self.nvars)
        monos = [(unpack(k), c) for k, c in self._t.items()]
        imgs = [img.truncate(max_degree) for img in images]
        powers: list[dict[int, Poly]] = [{} for _ in imgs]

        def power(i: int, e: int) -> Poly:
            cache = powers[i]
            if e not in cache:
                if e == 1:
                    cache[e] = imgs[i]
                else:
                    cache[e] = power(i, e - 1).mul(imgs[i], max_degree)
            return cache[e]

        def horner(group: list, i: int) -> Poly:
            # group: monomials sharing exponents for variables < i
            if i == self.nvars:
                return Poly.const(sum(c for _, c in group), m)
            by_exp: dict[int, list] = {}
            for exps, c in group:
                by_exp.setdefault(exps[i], []).append((exps, c))
            acc: dict[int, Rational] = {}
            for e, sub in by_exp.items():
                inner = horner(sub, i + 1)
                if e:
                    inner = inner.mul(power(i, e), max_degree)
                for k, c in inner._t.items():
                    v = acc.get(k, 0) + c
                    if v:
                        acc[k] = v
                    else:
                        del acc[k]
            return Poly._raw(m, acc)

        if not monos:
            return Poly.zero(m)
        return horner(monos, 0)

    # comparison and display

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._t == other._t
        try:
            c = Q(other)
        except TypeError:
            return NotImplemented
        return self._t == ({0: c} if c else {})

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._t.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({self.nvars}, {self})"

    def format(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = default_names(self.nvars)
        if not self._t:
            return "0"
        parts = []
        for exps, c in self.items():
            mono = "*".join(
                n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __str__ = format


def default_names(nvars: int) -> list[str]:
    return [f"x{i + 1}" for i in range(nvars)]


def symplectic_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]


def _mul_raw(a: dict, b: dict, dshift: int, max_degree: int | None) -> dict:
    if len(a) > len(b):
        a, b = b, a
    out: dict[int, Rational] = {}
    get = out.get
    if max_degree is None:
        bitems = list(b.items())
        for ka, ca in a.items():
            for kb, cb in bitems:
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    else:
        bitems = sorted(b.items())
        bdeg = [k >> dshift for k, _ in bitems]
        for ka, ca in a.items():
            room = max_degree - (ka >> dshift)
            if room < 0:
                continue
            for kb, cb in bitems[: bisect_right(bdeg, room)]:
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    return {k: c for k, c in out.items() if c}


def _divides(kd: int, kn: int, nvars: int) -> bool:
    for s in _shifts(nvars):
        if (kd >> s) & _MASK > (kn >> s) & _MASK:
            return False
    return True


def exact_div(a: Poly, b: Poly) -> Poly:
    """Quotient a / b; raises ValueError unless b divides a exactly."""
    a._check(b)
    if not b._t:
        raise ZeroDivisionError("division by the zero polynomial")
    lead_b = max(b._t)
    cb = b._t[lead_b]
    rem = dict(a._t)
    quot: dict[int, Rational] = {}
    while rem:
        lead = max(rem)
        if not _divides(lead_b, lead, a.nvars):
            raise ValueError("division is not exact")
        qk = lead - lead_b
        qc = rem[lead] / cb
        quot[qk] = qc
        for kb, c in b._t.items():
            k = qk + kb
            v = rem.get(k, 0) - qc * c
            if v:
                rem[k] = v
            else:
                del rem[k]
    return Poly._raw(a.nvars, quot)


# Module-level operations


def add(a: Poly, b: Poly) -> Poly:
    return a + b


def mul(a: Poly, b: Poly, max_degree: int | None = None) -> Poly:
    return a.mul(b, max_degree)


def substitute(p: Poly, images: Sequence[Poly], max_degree: int | None = None) -> Poly:
    return p.substitute(images, max_degree)


def partial(p: Poly, i: int) -> Poly:
    return p.partial(i)


def homogeneous_component(p: Poly, k: int) -> Poly:
    if k < 0:
        raise ValueError("degree must be non-negative")
    return p.homogeneous_component(k)


def height(p: Poly):
    return p.height()


def poisson_bracket(f: Poly, g: Poly, n: int | None = None, max_degree: int | None = None) -> Poly:
    """Standard bracket on (x_1..x_n, p_1..p_n), normalized so {p_i, x_j} = delta_ij."""
    f._check(g)
    if f.nvars % 2:
        raise ValueError("the Poisson bracket needs an even number of variables")
    if n is None:
        n = f.nvars // 2
    elif 2 * n != f.nvars:
        raise ValueError(f"half-dimension {n} does not match {f.nvars} variables")
    acc = Poly.zero(f.nvars)
    for i in range(n):
        fp = f.partial(n + i)
        gx = g.partial(i)
        if fp and gx:
            acc = acc + fp.mul(gx, max_degree)
        fx = f.partial(i)
        gp = g.partial(n + i)
        if fx and gp:
            acc = acc - fx.mul(gp, max_degree)
    return acc


def _square(m: Sequence[Sequence[Poly]]) -> int:
    size = len(m)
    for row in m:
        if len(row) != size:
            raise ValueError("determinant of a non-square matrix")
    return size


def det_cofactor(m: Sequence[Sequence[Poly]], max_degree: int | None = None, nvars: int | None = None) -> Poly:
    """Laplace expansion along the first row, memoized over column subsets.

    Division-free, so it is also valid with truncation.
    """
    size = _square(m)
    if size == 0:
        if nvars is None:
            raise ValueError("nvars required for the empty determinant")
        return Poly.const(1, nvars)
    nv = m[0][0].nvars

    @functools.lru_cache(maxsize=None)
    def minor(row: int, cols: tuple[int, ...]) -> Poly:
        if row == size:
            return Poly.const(1, nv)
        acc = Poly.zero(nv)
        for pos, j in enumerate(cols):
            entry = m[row][j]
            if not entry:
                continue
            rest = minor(row + 1, cols[:pos] + cols[pos + 1:])
            term = entry.mul(rest, max_degree)
            acc = acc - term if pos % 2 else acc + term
        return acc

    return minor(0, tuple(range(size)))


def det_poly(m: Sequence[Sequence[Poly]], max_degree: int | None = None) -> Poly:
    """Exact determinant by fraction-free (Bareiss) elimination.

    With ``max_degree`` the Bareiss divisions are no longer exact, so the
    truncated determinant goes through cofactor expansion instead.
    """
    size = _square(m)
    if size == 0:
        raise ValueError("empty matrix")
    if max_degree is not None or size <= 2:
        return det_cofactor(m, max_degree)
    a = [list(row) for row in m]
    nv = a[0][0].nvars
    sign = 1
    prev = Poly.const(1, nv)
    for k in range(size - 1):
        if not a[k][k]:
            for r in range(k + 1, size):
                if a[r][k]:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return Poly.zero(nv)
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = exact_div(num, prev)
        prev = a[k][k]
    d = a[size - 1][size - 1]
    return d if sign > 0 else -d


# JSON form


def poly_to_json(p: Poly) -> dict:
    return {
        "nvars": p.nvars,
        "terms": [{"c": format_rational(c), "e": list(e)} for e, c in p.items()],
    }


def poly_from_json(obj: Mapping) -> Poly:
    nvars = int(obj["nvars"])
    terms: dict[tuple[int, ...], Rational] = {}
    for term in obj["terms"]:
        e = tuple(int(v) for v in term["e"])
        terms[e] = terms.get(e, mpq(0)) + Q(str(term["c"]))
    return Poly(nvars, terms)


def parse_poly(text: str, names: Sequence[str]) -> Poly:
    """Parse a polynomial expression such as ``x1 + 3*p1^2 - 1/2*x2*p2``.

    Uses sympy for the parsing only; coefficients must come out rational.
    """
    import sympy

    symbols = sympy.symbols(list(names))
    expr = sympy.sympify(text.replace("^", "**"), locals=dict(zip(names, symbols)))
    sp_poly = sympy.Poly(sympy.expand(expr), *symbols, domain="QQ")
    terms = {}
    for exps, c in sp_poly.terms():
        terms[tuple(exps)] = mpq(int(c.p), int(c.q))
    return Poly(len(names), terms)


def iter_monomials(nvars: int, degree: int) -> Iterable[tuple[int, ...]]:
    """All exponent vectors of the given total degree, descending lex order."""
    if nvars == 0:
        if degree == 0:
            yield ()
        return
    for first in range(degree, -1, -1):
        for rest in iter_monomials(nvars - 1, degree - first):
            yield (first,) + rest


def monomial_count(nvars: int, degree: int) -> int:
    return comb(degree + nvars - 1, nvars - 1) if nvars else int(degree == 0)


__all__ = [
    "INF",
    "Poly",
    "Q",
    "Rational",
    "add",
    "coeff_bits",
    "default_names",
    "det_cofactor",
    "det_poly",
    "exact_div",
    "format_rational",
    "height",
    "homogeneous_component",
    "iter_monomials",
    "monomial_count",
    "mul",
    "parse_poly",
    "partial",
    "poisson_bracket",
    "poly_from_json",
    "poly_to_json",
    "substitute",
    "symplectic_names",
]

