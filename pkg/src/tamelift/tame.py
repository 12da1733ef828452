"""Elementary generators, tame words and symplectic linear algebra.

A word ``[g1, g2, ..., gm]`` evaluates to ``compose(g1, compose(g2, ...))``:
the point map g1 o g2 o ... o gm.  Evaluation runs right to left and
applies each generator on the left of the accumulated map, which only ever
substitutes into the (small) generator and never into the accumulated
images.

Symplectic words live in 2n variables ordered (x_1..x_n, p_1..p_n).  The
symplectic generators are linear maps in Sp(2n, Q) and the two transvection
families

    TransvectionX(F):  x_i -> x_i + dF/dp_i,   F = F(p)
    TransvectionP(G):  p_i -> p_i + dG/dx_i,   G = G(x)

both of which preserve the bracket because the Hessian of F (resp. G) is
symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from . import linalg
from .endo import PolyEndo, apply_matrix
from .linalg import Matrix
from .polycore import Poly, Q, Rational, format_rational, poly_from_json, poly_to_json


class WordError(ValueError):
    pass


def symplectic_form(n: int) -> Matrix:
    """Gram matrix of the bracket on generators: entry (u, v) is {z_u, z_v}."""
    rows = [[Q(0)] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        rows[n + i][i] = Q(1)
        rows[i][n + i] = Q(-1)
    return linalg.matrix(rows)


def is_sp_matrix(a: Matrix) -> bool:
    if not linalg.is_square(a):
        raise ValueError("symplectic test needs a square matrix")
    if len(a) % 2:
        raise ValueError("symplectic test needs an even dimension")
    omega = symplectic_form(len(a) // 2)
    return linalg.matmul(linalg.matmul(linalg.transpose(a), omega), a) == omega


def _p_only(f: Poly, n: int) -> bool:
    return all(i >= n for i in f.variables())


def _x_only(f: Poly, n: int) -> bool:
    return all(i < n for i in f.variables())


@dataclass(frozen=True)
class Linear:
    matrix: Matrix

    def __post_init__(self):
        m = linalg.matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if not linalg.is_square(m):
            raise WordError("linear generator needs a square matrix")
        if not linalg.det(m):
            raise WordError("linear generator must be invertible")

    @property
    def arity(self) -> int:
        return len(self.matrix)

    def to_endo(self) -> PolyEndo:
        return PolyEndo.from_matrix(self.matrix)

    def inverse(self) -> "Linear":
        return Linear(linalg.inverse(self.matrix))

    def act(self, target: PolyEndo, max_degree: int | None = None) -> PolyEndo:
        return PolyEndo(apply_matrix(target.images, self.matrix), target.symplectic_n)

    def to_json(self) -> dict:
        return {"kind": "linear", "matrix": linalg.to_json(self.matrix)}


@dataclass(frozen=True)
class SympLinear(Linear):
    def __post_init__(self):
        super().__post_init__()
        if len(self.matrix) % 2 or not is_sp_matrix(self.matrix):
            raise WordError("matrix is not in Sp(2n, Q)")

    def to_endo(self) -> PolyEndo:
        return PolyEndo.from_matrix(self.matrix, self.arity // 2)

    def inverse(self) -> "SympLinear":
        return SympLinear(linalg.inverse(self.matrix))

    def to_json(self) -> dict:
        return {"kind": "splinear", "matrix": linalg.to_json(self.matrix)}


@dataclass(frozen=True)
class Shift:
    """x_target -> scale * x_target + addend, with the addend free of x_target."""

    target: int
    scale: Rational
    addend: Poly

    def __post_init__(self):
        object.__setattr__(self, "scale", Q(self.scale))
        if not self.scale:
            raise WordError("shift scale must be nonzero")
        if not 0 <= self.target < self.addend.nvars:
            raise WordError(f"shift target {self.target} out of range")
        if self.addend.involves(self.target):
            raise WordError("shift addend must not involve the target variable")
        if self.addend.constant_term():
            raise WordError("shift addend must have zero constant term")

    @property
    def arity(self) -> int:
        return self.addend.nvars

    def to_endo(self) -> PolyEndo:
        images = Poly.gens(self.arity)
        images[self.target] = images[self.target].scale(self.scale) + self.addend
        return PolyEndo(tuple(images))

    def inverse(self) -> "Shift":
        inv = 1 / self.scale
        return Shift(self.target, inv, self.addend.scale(-inv))

    def act(self, target: PolyEndo, max_degree: int | None = None) -> PolyEndo:
        images = list(target.images)
        t = self.target
        images[t] = images[t].scale(self.scale) + self.addend.substitute(target.images, max_degree)
        return PolyEndo(tuple(images), target.symplectic_n)

    def to_json(self) -> dict:
        return {
            "kind": "shift",
            "target": self.target,
            "scale": format_rational(self.scale),
            "addend": poly_to_json(self.addend),
        }


@dataclass(frozen=True)
class TransvectionX:
    """x_i -> x_i + dF/dp_i for all i; F depends on the p-block only."""

    generator: Poly

    def __post_init__(self):
        g = self.generator
        if g.nvars % 2:
            raise WordError("transvection needs an even number of variables")
        if not _p_only(g, g.nvars // 2):
            raise WordError("TransvectionX generator must depend on p-variables only")
        if g.height() < 2:
            raise WordError("transvection generator must have height >= 2")

    @property
    def arity(self) -> int:
        return self.generator.nvars

    @property
    def n(self) -> int:
        return self.arity // 2

    def _moved(self) -> tuple[range, int]:
        # (indices that move, offset of the conjugate variable)
        return range(self.n), self.n

    def to_endo(self) -> PolyEndo:
        return self.act(PolyEndo.identity(self.arity, self.n))

    def inverse(self):
        return type(self)(-self.generator)

    def act(self, target: PolyEndo, max_degree: int | None = None) -> PolyEndo:
        images = list(target.images)
        moved, offset = self._moved()
        for i in moved:
            grad = self.generator.partial(i + offset)
            if grad:
                images[i] = images[i] + grad.substitute(target.images, max_degree)
        return PolyEndo(tuple(images), target.symplectic_n)

    def to_json(self) -> dict:
        return {"kind": "transvection_x", "generator": poly_to_json(self.generator)}


@dataclass(frozen=True)
class TransvectionP(TransvectionX):
    """p_i -> p_i + dG/dx_i for all i; G depends on the x-block only."""

    def __post_init__(self):
        g = self.generator
        if g.nvars % 2:
            raise WordError("transvection needs an even number of variables")
        if not _x_only(g, g.nvars // 2):
            raise WordError("TransvectionP generator must depend on x-variables only")
        if g.height() < 2:
            raise WordError("transvection generator must have height >= 2")

    def _moved(self) -> tuple[range, int]:
        return range(self.n, 2 * self.n), -self.n

    def to_json(self) -> dict:
        return {"kind": "transvection_p", "generator": poly_to_json(self.generator)}


ElementaryGen = Union[Linear, SympLinear, Shift, TransvectionX, TransvectionP]

SYMPLECTIC_KINDS = (SympLinear, TransvectionX, TransvectionP)


@dataclass(frozen=True)
class TameWord:
    factors: tuple
    arity: int

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        for g in self.factors:
            if g.arity != self.arity:
                raise WordError(f"factor of arity {g.arity} in a word of arity {self.arity}")

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    @property
    def is_symplectic(self) -> bool:
        return self.arity % 2 == 0 and all(isinstance(g, SYMPLECTIC_KINDS) for g in self.factors)

    def __add__(self, other: "TameWord") -> "TameWord":
        if other.arity != self.arity:
            raise WordError("cannot concatenate words of different arity")
        return TameWord(self.factors + other.factors, self.arity)


def eval_word(w: TameWord, max_degree: int | None = None, symplectic_n: int | None = None) -> PolyEndo:
    if symplectic_n is None and w.arity and w.is_symplectic and w.factors:
        symplectic_n = w.arity // 2
    result = PolyEndo.identity(w.arity, symplectic_n)
    for g in reversed(w.factors):
        result = g.act(result, max_degree)
    return result


def apply_word(w: TameWord, target: PolyEndo, max_degree: int | None = None) -> PolyEndo:
    """compose(eval_word(w), target) without forming eval_word(w)."""
    if w.arity != target.nvars:
        raise WordError("word and endomorphism arity differ")
    result = target.truncate(max_degree)
    for g in reversed(w.factors):
        result = g.act(result, max_degree)
    return result


def invert_word(w: TameWord) -> TameWord:
    return TameWord(tuple(g.inverse() for g in reversed(w.factors)), w.arity)


def _omega(u: Sequence[Rational], v: Sequence[Rational], n: int) -> Rational:
    # u^T Omega v with Omega[n+i][i] = 1, Omega[i][n+i] = -1
    return sum((u[n + i] * v[i] - u[i] * v[n + i] for i in range(n)), Q(0))


def symplectic_complete(ell) -> SympLinear:
    """A in Sp(2n, Q) whose change of variables turns the linear form ell into p_1.

    Builds a symplectic basis whose p_1-slot vector is the coefficient vector
    of ell (symplectic Gram-Schmidt over the standard basis) and inverts it.
    """
    if isinstance(ell, Poly):
        if not ell.is_homogeneous(1):
            raise ValueError("expected a linear form")
        nv = ell.nvars
        c = [ell.coeff(tuple(int(i == j) for j in range(nv))) for i in range(nv)]
    else:
        c = [Q(v) for v in ell]
    dim = len(c)
    if dim % 2:
        raise ValueError("linear form must live in an even number of variables")
    if not any(c):
        raise ValueError("cannot complete the zero form")
    n = dim // 2
    std = [[Q(int(i == j)) for j in range(dim)] for i in range(dim)]
    pairs: list[tuple[list, list]] = []  # (e, f) with omega(f, e) = 1

    def project(w):
        w = list(w)
        for e, f in pairs:
            a = _omega(w, f, n)
            b = _omega(w, e, n)
            if a or b:
                w = [wi + a * ei - b * fi for wi, ei, fi in zip(w, e, f)]
        return w

    f0 = list(c)
    u = next(v for v in std if _omega(f0, v, n))
    s = _omega(f0, u, n)
    pairs.append(([ui / s for ui in u], f0))
    while len(pairs) < n:
        e = next(w for w in map(project, std) if any(w))
        f = None
        for w in map(project, std):
            s = _omega(w, e, n)
            if s:
                f = [wi / s for wi in w]
                break
        pairs.append((e, f))
    cols = [e for e, _ in pairs] + [f for _, f in pairs]
    b = linalg.transpose(linalg.matrix(cols))
    a = linalg.inverse(b)
    result = SympLinear(a)
    target = tuple(Q(int(i == n)) for i in range(dim))
    if linalg.matvec(a, c) != target:
        raise AssertionError("symplectic completion failed to map the form to p_1")
    return result


# JSON form


def factor_to_json(g) -> dict:
    return g.to_json()


def factor_from_json(obj) -> ElementaryGen:
    kind = obj["kind"]
    if kind == "linear":
        return Linear(linalg.from_json(obj["matrix"]))
    if kind == "splinear":
        return SympLinear(linalg.from_json(obj["matrix"]))
    if kind == "shift":
        return Shift(int(obj["target"]), Q(str(obj["scale"])), poly_from_json(obj["addend"]))
    if kind == "transvection_x":
        return TransvectionX(poly_from_json(obj["generator"]))
    if kind == "transvection_p":
        return TransvectionP(poly_from_json(obj["generator"]))
    raise WordError(f"unknown factor kind {kind!r}")


def word_to_json(w: TameWord) -> dict:
    return {"arity": w.arity, "factors": [factor_to_json(g) for g in w.factors]}


def word_from_json(obj) -> TameWord:
    return TameWord(tuple(factor_from_json(f) for f in obj["factors"]), int(obj["arity"]))
