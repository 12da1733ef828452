"""Polynomial endomorphisms as tuples of generator images.

Composition convention: ``compose(f, g)`` substitutes g's images into f's
images, i.e. the point map "first g, then f".  Linear maps act on the row
vector of generators, ``(x_1..x_N) -> (x_1..x_N) A``, so the image of x_j
is ``sum_i x_i * A[i][j]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import linalg
from .linalg import Matrix
from .polycore import INF, Poly, Q, Rational, det_poly, poisson_bracket, poly_from_json, poly_to_json


@dataclass(frozen=True)
class PolyEndo:
    images: tuple[Poly, ...]
    symplectic_n: int | None = field(default=None, compare=False)

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        for img in images:
            if img.nvars != len(images):
                raise ValueError(f"image in {img.nvars} variables for an endomorphism of {len(images)}")
            if img.constant_term():
                raise ValueError("images must have zero constant term (translations are excluded)")
        if self.symplectic_n is not None and 2 * self.symplectic_n != len(images):
            raise ValueError(f"symplectic_n={self.symplectic_n} does not match {len(images)} variables")

    @property
    def nvars(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, nvars: int, symplectic_n: int | None = None) -> "PolyEndo":
        return cls(tuple(Poly.gens(nvars)), symplectic_n)

    @classmethod
    def from_matrix(cls, a: Matrix, symplectic_n: int | None = None) -> "PolyEndo":
        n = len(a)
        images = tuple(Poly.linear_form([a[i][j] for i in range(n)], n) for j in range(n))
        return cls(images, symplectic_n)

    def truncate(self, max_degree: int | None) -> "PolyEndo":
        if max_degree is None:
            return self
        return PolyEndo(tuple(img.truncate(max_degree) for img in self.images), self.symplectic_n)

    def deviation(self) -> tuple[Poly, ...]:
        """Images minus the identity."""
        return tuple(img - Poly.var(i, self.nvars) for i, img in enumerate(self.images))

    def deviation_component(self, k: int) -> tuple[Poly, ...]:
        return tuple(d.homogeneous_component(k) for d in self.deviation())

    def degree(self) -> int:
        return max((img.degree() for img in self.images), default=-1)

    def max_coeff_bits(self) -> int:
        return max((img.max_coeff_bits() for img in self.images), default=0)

    def with_symplectic_n(self, n: int | None) -> "PolyEndo":
        return PolyEndo(self.images, n)

    def __str__(self) -> str:
        from .polycore import default_names, symplectic_names

        names = symplectic_names(self.symplectic_n) if self.symplectic_n else default_names(self.nvars)
        return "(" + ", ".join(img.format(names) for img in self.images) + ")"


def _check_pair(f: PolyEndo, g: PolyEndo) -> None:
    if f.nvars != g.nvars:
        raise ValueError(f"nvars mismatch: {f.nvars} vs {g.nvars}")


def compose(f: PolyEndo, g: PolyEndo, max_degree: int | None = None) -> PolyEndo:
    _check_pair(f, g)
    images = tuple(img.substitute(g.images, max_degree) for img in f.images)
    return PolyEndo(images, f.symplectic_n if f.symplectic_n is not None else g.symplectic_n)


def jacobian_matrix(f: PolyEndo) -> list[list[Poly]]:
    return [[img.partial(j) for j in range(f.nvars)] for img in f.images]


def jacobian(f: PolyEndo, max_degree: int | None = None) -> Poly:
    if f.nvars == 0:
        return Poly.const(1, 0)
    return det_poly(jacobian_matrix(f), max_degree)


def endo_height(f: PolyEndo, g: PolyEndo):
    _check_pair(f, g)
    return min((a - b).height() for a, b in zip(f.images, g.images)) if f.nvars else INF


def height_from_identity(f: PolyEndo):
    return endo_height(f, PolyEndo.identity(f.nvars))


def metric(f: PolyEndo, g: PolyEndo) -> float:
    h = endo_height(f, g)
    return 0.0 if h is INF else math.exp(-h)


def linear_part(f: PolyEndo) -> Matrix:
    """A[i][j] = coefficient of x_i in f(x_j)."""
    n = f.nvars
    unit = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return tuple(tuple(f.images[j].coeff(unit[i]) for j in range(n)) for i in range(n))


def apply_matrix(images: Sequence[Poly], a: Matrix) -> tuple[Poly, ...]:
    """Row-vector action: the j-th output is sum_i images[i] * a[i][j]."""
    n = len(a)
    out = []
    for j in range(n):
        acc: dict = {}
        for i in range(n):
            c = a[i][j]
            if not c:
                continue
            for k, v in images[i]._t.items():
                s = acc.get(k, 0) + c * v
                if s:
                    acc[k] = s
                else:
                    del acc[k]
        out.append(Poly._raw(images[0].nvars, acc))
    return tuple(out)


class SingularLinearPart(ValueError):
    pass


def formal_inverse(f: PolyEndo, cutoff: int) -> PolyEndo:
    """Inverse of f modulo terms of degree > cutoff, by degree-wise correction."""
    a = linear_part(f)
    try:
        a_inv = linalg.inverse(a)
    except linalg.SingularMatrixError as exc:
        raise SingularLinearPart("linear part is singular") from exc
    n = f.nvars
    g = PolyEndo.from_matrix(a_inv, f.symplectic_n)
    ident = Poly.gens(n)
    for d in range(2, cutoff + 1):
        fg = compose(f, g, d)
        resid = tuple((img - x).homogeneous_component(d) for img, x in zip(fg.images, ident))
        if not any(resid):
            continue
        corr = apply_matrix(resid, a_inv)
        g = PolyEndo(tuple(gi - ci for gi, ci in zip(g.images, corr)), g.symplectic_n)
    return g


@dataclass
class SymplecticReport:
    ok: bool
    violations: list[tuple[int, int, object]]
    cutoff: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def canonical_bracket(u: int, v: int, n: int) -> Rational:
    """{z_u, z_v} for z = (x_1..x_n, p_1..p_n)."""
    if u == v + n:
        return Q(1)
    if v == u + n:
        return Q(-1)
    return Q(0)


def is_symplectic(f: PolyEndo, n: int | None = None, cutoff: int | None = None) -> SymplecticReport:
    """Check {f(u), f(v)} = {u, v} for every pair of generators.

    ``cutoff=None`` is the exact identity.  With a cutoff only the bracket
    components of degree <= cutoff are compared.
    """
    if f.nvars % 2:
        raise ValueError("symplectic check needs an even number of variables")
    if n is None:
        n = f.symplectic_n if f.symplectic_n is not None else f.nvars // 2
    if 2 * n != f.nvars:
        raise ValueError(f"half-dimension {n} does not match {f.nvars} variables")
    violations = []
    for u in range(2 * n):
        for v in range(u + 1, 2 * n):
            br = poisson_bracket(f.images[u], f.images[v], n, cutoff)
            defect = (br - canonical_bracket(u, v, n)).truncate(cutoff)
            if defect:
                violations.append((u, v, defect.height()))
    return SymplecticReport(not violations, violations, cutoff)


def endo_to_json(f: PolyEndo) -> dict:
    out = {"nvars": f.nvars}
    if f.symplectic_n is not None:
        out["symplectic_n"] = f.symplectic_n
    out["images"] = [poly_to_json(img) for img in f.images]
    return out


def endo_from_json(obj) -> PolyEndo:
    nvars = int(obj["nvars"])
    images = tuple(poly_from_json(p) for p in obj["images"])
    if len(images) != nvars:
        raise ValueError(f"expected {nvars} images, got {len(images)}")
    sn = obj.get("symplectic_n")
    return PolyEndo(images, None if sn is None else int(sn))
