"""Degree-by-degree tame approximation.

Both drivers keep a residual R with  phi = eval(word) o R  and raise the
height of R - id by one per round:

* polynomial case: linear normalization, then in round k conjugated
  shears (x_a + mu x_b)^d push the degree-k deviation into a single
  image, whose remaining part is free of its own variable and is removed
  by one elementary shift;
* symplectic case: the degree-k deviation (f, g) is the Hamiltonian field
  of a homogeneous F of degree k+1, F is written as a sum of powers of
  linear forms, and each power is removed by a transvection conjugated
  by a symplectic linear map.

All work is done on the degree-``target`` jet of the input.  Heights in
reports are measured on that jet, so a reported height of ``target + 1``
means "agrees with the identity through degree target".
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from math import comb, gcd
from typing import Callable, Sequence

from . import linalg
from .endo import (
    PolyEndo,
    SingularLinearPart,
    endo_to_json,
    height_from_identity,
    is_symplectic,
    jacobian,
    linear_part,
)
from .polycore import INF, Poly, Q, Rational, iter_monomials
from .tame import (
    Linear,
    Shift,
    SympLinear,
    TameWord,
    TransvectionP,
    TransvectionX,
    is_sp_matrix,
    symplectic_complete,
)

log = logging.getLogger(__name__)


class ApproximationError(ValueError):
    """Input rejected by validation."""


class NotSymplecticError(ApproximationError):
    pass


class NonConstantJacobianError(ApproximationError):
    pass


class ClosednessError(ApproximationError):
    pass


class ApproximationFailed(ApproximationError):
    """A round broke its contract; ``report`` holds the rounds completed before it."""

    def __init__(self, message: str, report: "ApproxReport", k: int | None):
        super().__init__(message)
        self.report = report
        self.k = k


@dataclass
class RoundRecord:
    k: int
    height_before: int
    height_after: int
    factors_appended: int
    max_coeff_bits: int
    stalled_pairs: int = 0
    symplectic: bool | None = None
    generating_function: Poly | None = field(default=None, repr=False)
    deviation: tuple[Poly, ...] | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "k": self.k,
            "height_before": self.height_before,
            "height_after": self.height_after,
            "factors_appended": self.factors_appended,
            "max_coeff_bits": self.max_coeff_bits,
        }
        if self.stalled_pairs:
            out["stalled_pairs"] = self.stalled_pairs
        if self.symplectic is not None:
            out["symplectic"] = self.symplectic
        return out


@dataclass
class ApproxReport:
    kind: str
    target: int
    rounds: list[RoundRecord]
    residual: PolyEndo
    word_length: int
    failed_round: int | None = None

    @property
    def final_height(self) -> int:
        return _capped(height_from_identity(self.residual), self.target)

    @property
    def success(self) -> bool:
        return self.final_height >= self.target

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "target": self.target,
            "word_length": self.word_length,
            "final_height": self.final_height,
            "success": self.success,
            "rounds": [r.to_json() for r in self.rounds],
            "residual": endo_to_json(self.residual),
        }
        if self.failed_round is not None:
            out["failed_round"] = self.failed_round
        return out


def _capped(h, target: int) -> int:
    return target + 1 if h is INF else min(h, target + 1)


def _is_identity(a) -> bool:
    return a == linalg.identity(len(a))


# Linear normalization


def anick_normalize_linear(phi: PolyEndo) -> tuple[Linear, PolyEndo]:
    a = linear_part(phi)
    try:
        a_inv = linalg.inverse(a)
    except linalg.SingularMatrixError as exc:
        raise SingularLinearPart("linear part is singular") from exc
    return Linear(a), Linear(a_inv).act(phi)


def symp_normalize_linear(sigma: PolyEndo) -> tuple[SympLinear, PolyEndo]:
    a = linear_part(sigma)
    if not is_sp_matrix(a):
        raise AssertionError("bracket-preserving map with a non-symplectic linear part")
    return SympLinear(a), SympLinear(linalg.inverse(a)).act(sigma)


# Shear basis for binary forms


def vandermonde_power_basis(d: int) -> list[Rational]:
    """Nodes mu_1..mu_{d+1} whose powers (x + mu y)^d span binary forms of degree d."""
    if d < 1:
        raise ValueError("degree must be at least 1")
    nodes = [Q(i) for i in range(1, d + 2)]
    if not linalg.det(power_basis_matrix(nodes, d)):
        raise AssertionError("nodes do not give a basis")
    return nodes


def power_basis_matrix(nodes: Sequence, d: int) -> linalg.Matrix:
    """Row i holds the coefficients of x^(d-j) y^j in (x + nodes[i] y)^d."""
    return linalg.matrix([[comb(d, j) * Q(mu) ** j for j in range(d + 1)] for mu in nodes])


@functools.lru_cache(maxsize=None)
def _shear_solver(d: int) -> tuple[tuple[Rational, ...], linalg.Matrix]:
    nodes = tuple(vandermonde_power_basis(d))
    return nodes, linalg.inverse(linalg.transpose(power_basis_matrix(nodes, d)))


@dataclass(frozen=True)
class _Step:
    """Consecutive factors of a word together with a single-pass action of their inverse.

    ``undo(r, max_degree)`` equals applying the inverses of ``factors`` to r one
    by one; the fused form avoids three substitutions per conjugated shear.
    """

    factors: tuple
    undo: Callable[[PolyEndo, int | None], PolyEndo]


def _single(g) -> _Step:
    inv = g.inverse()
    return _Step((g,), inv.act)


def _shear_step(a: int, b: int, mu: Rational, c: Poly, d: int) -> _Step:
    """Shift(a, -mu x_b), Shift(b, c x_a^d), Shift(a, mu x_b).

    The product is z_a -> z_a - mu c l^d, z_b -> z_b + c l^d with l = z_a + mu z_b
    (l is invariant and c involves neither z_a nor z_b), so its inverse flips both signs.
    """
    nv = c.nvars
    xb = Poly.var(b, nv)
    factors = (
        Shift(a, 1, xb.scale(-mu)),
        Shift(b, 1, c * Poly.var(a, nv) ** d),
        Shift(a, 1, xb.scale(mu)),
    )

    def undo(r: PolyEndo, max_degree: int | None) -> PolyEndo:
        ell = r.images[a] + r.images[b].scale(mu)
        push = c.substitute(r.images, max_degree).mul(ell.pow(d, max_degree), max_degree)
        images = list(r.images)
        images[a] = images[a] + push.scale(mu)
        images[b] = images[b] - push
        return PolyEndo(tuple(images), r.symplectic_n)

    return _Step(factors, undo)


def _eliminate_pair(fa: Poly, a: int, b: int) -> list[_Step]:
    """Steps whose combined degree-k deviation is fa in slot a (and something in slot b)."""
    nv = fa.nvars
    # split fa by (x_a, x_b)-degree d and x_b-exponent j; coefficients live in the other variables
    by_degree: dict[int, dict[int, dict[tuple, Rational]]] = {}
    for exps, c in fa.terms().items():
        d = exps[a] + exps[b]
        rest = list(exps)
        rest[a] = rest[b] = 0
        by_degree.setdefault(d, {}).setdefault(exps[b], {})[tuple(rest)] = c
    steps = []
    for d in sorted(by_degree):
        h = by_degree[d]
        if d == 0:
            steps.append(_single(Shift(a, 1, Poly(nv, h[0]))))
            continue
        nodes, solver = _shear_solver(d)
        hj = [Poly(nv, h.get(j, {})) for j in range(d + 1)]
        for mu, row in zip(nodes, solver):
            big_c = Poly.zero(nv)
            for coef, part in zip(row, hj):
                if coef and part:
                    big_c = big_c + part.scale(coef)
            if big_c:
                steps.append(_shear_step(a, b, mu, big_c.scale(-1 / mu), d))
    return steps


def _run_steps(steps: Sequence[_Step], r: PolyEndo, max_degree: int | None) -> tuple[list, PolyEndo]:
    factors: list = []
    for step in steps:
        r = step.undo(r, max_degree)
        factors.extend(step.factors)
    return factors, r


def _nonzero_slots(parts: Sequence[Poly]) -> list[int]:
    return [i for i, p in enumerate(parts) if p]


def _eliminate_degree(phi: PolyEndo, k: int, max_degree: int | None) -> tuple[TameWord, PolyEndo, int]:
    if k < 2:
        raise ValueError("elimination starts at degree 2")
    h = height_from_identity(phi)
    if h < k:
        raise ValueError(f"residual height {h} is below the elimination degree {k}")
    r = phi
    factors: list = []
    stalled = 0
    live = _nonzero_slots(r.deviation_component(k))
    while len(live) >= 2:
        a, b = live[0], live[1]
        fa = r.deviation_component(k)[a]
        step, r = _run_steps(_eliminate_pair(fa, a, b), r, max_degree)
        factors.extend(step)
        parts = r.deviation_component(k)
        if parts[a]:
            raise AssertionError(f"degree-{k} part of image {a} survived its elimination")
        now = _nonzero_slots(parts)
        if len(now) >= len(live):
            stalled += 1
            log.warning("round %d: nonzero count did not drop (%d -> %d)", k, len(live), len(now))
        live = now
    if live:
        t = live[0]
        g = r.deviation_component(k)[t]
        if g.involves(t):
            raise AssertionError(
                f"degree-{k} remainder of image {t} depends on its own variable; "
                "the Jacobian is not constant"
            )
        last = Shift(t, 1, g)
        r = last.inverse().act(r, max_degree)
        factors.append(last)
    if height_from_identity(r) <= k:
        raise AssertionError(f"round {k} left a degree-{k} residual")
    return TameWord(tuple(factors), phi.nvars), r, stalled


def anick_eliminate_degree(phi: PolyEndo, k: int, max_degree: int | None = None) -> tuple[TameWord, PolyEndo]:
    """Remove the degree-k deviation of phi (height >= k >= 2) with elementary maps.

    Returns (w, residual) with residual = eval(w)^-1 o phi and height >= k+1.
    """
    w, r, _ = _eliminate_degree(phi, k, max_degree)
    return w, r


def _validate_jacobian(jet: PolyEndo, target: int) -> None:
    # components of degree <= target-2 are exact on the jet and are all the rounds consult
    jac = jacobian(jet, max_degree=max(target - 2, 0))
    if not jac.constant_term():
        raise SingularLinearPart("Jacobian vanishes at the origin")
    if not jac.is_constant():
        raise NonConstantJacobianError(f"Jacobian is not constant: {jac}")


def anick_approximate(phi: PolyEndo, target: int) -> tuple[TameWord, ApproxReport]:
    """Tame word w with height(eval(w)^-1 o phi - id) >= target."""
    jet = phi.truncate(target)
    _validate_jacobian(jet, target)
    lin, r = anick_normalize_linear(jet)
    factors = [] if _is_identity(lin.matrix) else [lin]
    rounds = []
    for k in range(2, target):
        before = _capped(height_from_identity(r), target)
        try:
            w, r, stalled = _eliminate_degree(r, k, target)
        except (AssertionError, ValueError) as exc:
            partial = ApproxReport("poly", target, rounds, r, len(factors), failed_round=k)
            raise ApproximationFailed(f"round {k}: {exc}", partial, k) from exc
        factors.extend(w.factors)
        rounds.append(
            RoundRecord(
                k=k,
                height_before=before,
                height_after=_capped(height_from_identity(r), target),
                factors_appended=len(w),
                max_coeff_bits=r.max_coeff_bits(),
                stalled_pairs=stalled,
            )
        )
    word = TameWord(tuple(factors), phi.nvars)
    report = ApproxReport("poly", target, rounds, r, len(word))
    if not report.success:
        raise ApproximationFailed(f"residual height {report.final_height} below target {target}", report, None)
    return word, report


# Symplectic case


def _check_block(f: Sequence[Poly], g: Sequence[Poly]) -> tuple[int, int]:
    if len(f) != len(g):
        raise ValueError("f and g must have the same length")
    n = len(f)
    polys = list(f) + list(g)
    if not polys:
        return 0, 0
    nv = polys[0].nvars
    if nv != 2 * n or any(p.nvars != nv for p in polys):
        raise ValueError(f"entries must live in {2 * n} variables")
    degrees = {p.degree() for p in polys if p}
    if any(not p.is_homogeneous() for p in polys) or len(degrees) > 1:
        raise ValueError("entries must be homogeneous of one common degree")
    return n, degrees.pop() if degrees else 0


def check_closedness(f: Sequence[Poly], g: Sequence[Poly]) -> bool:
    """Whether (f, g) is the gradient (d/dp, d/dx) of a single polynomial."""
    n, _ = _check_block(f, g)
    for i in range(n):
        for j in range(n):
            if i < j:
                if f[i].partial(n + j) != f[j].partial(n + i):
                    return False
                if g[i].partial(j) != g[j].partial(i):
                    return False
            if f[i].partial(j) != g[j].partial(n + i):
                return False
    return True


def generating_function(f: Sequence[Poly], g: Sequence[Poly], k: int) -> Poly:
    """F of degree k+1 with dF/dp_i = f_i and dF/dx_i = g_i (Euler's formula)."""
    n, deg = _check_block(f, g)
    if any(p for p in list(f) + list(g)) and deg != k:
        raise ValueError(f"entries have degree {deg}, expected {k}")
    if not check_closedness(f, g):
        raise ClosednessError("gradient data is not closed")
    if n == 0:
        raise ValueError("empty gradient data")
    nv = 2 * n
    acc = Poly.zero(nv)
    for i in range(n):
        acc = acc + Poly.var(i, nv) * g[i] + Poly.var(n + i, nv) * f[i]
    big_f = acc.scale(Q(1) / (k + 1))
    for i in range(n):
        if big_f.partial(n + i) != f[i] or big_f.partial(i) != g[i]:
            raise ClosednessError("recovered potential fails the gradient identities")
    return big_f


@functools.lru_cache(maxsize=None)
def _power_basis(d: int, nv: int) -> tuple[tuple[tuple[int, ...], ...], linalg.Matrix, tuple]:
    """Linear forms whose d-th powers are a basis of degree-d forms in nv variables.

    Forms come from the integer simplex lattice {a : |a| = d} (scaled to
    primitive vectors); the lattice is unisolvent for degree d, which by
    apolarity makes the powers independent.
    """
    monos = tuple(iter_monomials(nv, d))
    index = {m: i for i, m in enumerate(monos)}
    forms = []
    for a in monos:
        g = 0
        for v in a:
            g = gcd(g, v)
        forms.append(tuple(v // g for v in a))
    cols = []
    for a in forms:
        power = Poly.linear_form(a, nv) ** d
        col = [Q(0)] * len(monos)
        for e, c in power.terms().items():
            col[index[e]] = c
        cols.append(col)
    mat = linalg.transpose(linalg.matrix(cols))
    inv = linalg.inverse(mat)
    return tuple(forms), inv, monos


def decompose_linear_powers(big_f: Poly) -> list[tuple[Rational, Poly]]:
    """Write a homogeneous F as sum c_m * l_m^d with rational linear forms l_m.

    Only the variables F actually involves are used, which keeps the sums short.
    """
    if not big_f:
        return []
    if not big_f.is_homogeneous():
        raise ValueError("expected a homogeneous polynomial")
    d = big_f.degree()
    nv = big_f.nvars
    if d == 0:
        raise ValueError("constant input has no linear-form decomposition")
    used = sorted(big_f.variables())
    forms, inv, monos = _power_basis(d, len(used))
    vec = []
    for m in monos:
        full = [0] * nv
        for v, e in zip(used, m):
            full[v] = e
        vec.append(big_f.coeff(full))
    coeffs = linalg.matvec(inv, vec)
    out = []
    for c, a in zip(coeffs, forms):
        if c:
            full = [0] * nv
            for v, e in zip(used, a):
                full[v] = e
            out.append((c, Poly.linear_form(full, nv)))
    return out


def _flow_step(c: Rational, ell: Poly, k: int, n: int) -> _Step:
    """SympLinear(A), TransvectionX(c p_1^(k+1)), SympLinear(A^-1) with A = symplectic_complete(ell).

    The product is the time-one Hamiltonian flow of H = c ell^(k+1).  Since ell is
    constant along it, the flow is z -> z + c (k+1) ell(z)^k v with v the constant
    field of ell, v = (d ell/dp, -d ell/dx); the inverse flips the sign.
    """
    nv = 2 * n
    a = symplectic_complete(ell)
    factors = (a, TransvectionX((Poly.var(n, nv) ** (k + 1)).scale(c)), a.inverse())
    unit = [tuple(int(i == j) for j in range(nv)) for i in range(nv)]
    coeffs = [ell.coeff(unit[i]) for i in range(nv)]
    v = coeffs[n:] + [-w for w in coeffs[:n]]
    weight = c * (k + 1)

    def undo(r: PolyEndo, max_degree: int | None) -> PolyEndo:
        lr = Poly.zero(nv)
        for w, img in zip(coeffs, r.images):
            if w:
                lr = lr + img.scale(w)
        push = lr.pow(k, max_degree)
        images = tuple(img - push.scale(weight * vu) if vu else img for img, vu in zip(r.images, v))
        return PolyEndo(images, r.symplectic_n)

    return _Step(factors, undo)


def _symp_step(sigma: PolyEndo, k: int, n: int, max_degree: int | None):
    if k < 2:
        raise ValueError("elimination starts at degree 2")
    h = height_from_identity(sigma)
    if h < k:
        raise ValueError(f"residual height {h} is below the elimination degree {k}")
    dev = sigma.deviation_component(k)
    f = list(dev[:n])
    g_neg = [-g for g in dev[n:]]
    nv = 2 * n
    if not any(f) and not any(g_neg):
        return TameWord((), nv), sigma, Poly.zero(nv)
    # with {p, x} = 1 the Hamiltonian field of F is (dF/dp, -dF/dx)
    if not check_closedness(f, g_neg):
        raise NotSymplecticError(f"degree-{k} deviation is not a Hamiltonian field")
    big_f = generating_function(f, g_neg, k)
    p_part = Poly.zero(nv)
    x_part = Poly.zero(nv)
    mixed = []
    for c, ell in decompose_linear_powers(big_f):
        term = (ell ** (k + 1)).scale(c)
        vs = ell.variables()
        if all(v >= n for v in vs):
            p_part = p_part + term
        elif all(v < n for v in vs):
            x_part = x_part + term
        else:
            mixed.append((c, ell))
    steps: list[_Step] = []
    if p_part:
        steps.append(_single(TransvectionX(p_part)))
    if x_part:
        steps.append(_single(TransvectionP(-x_part)))
    for c, ell in mixed:
        steps.append(_flow_step(c, ell, k, n))
    factors, r = _run_steps(steps, sigma, max_degree)
    if height_from_identity(r) <= k:
        raise AssertionError(f"symplectic round {k} left a degree-{k} residual")
    return TameWord(tuple(factors), nv), r, big_f


def _half_dim(sigma: PolyEndo, n: int | None) -> int:
    if n is None:
        n = sigma.symplectic_n if sigma.symplectic_n is not None else sigma.nvars // 2
    if 2 * n != sigma.nvars:
        raise ValueError(f"half-dimension {n} does not match {sigma.nvars} variables")
    return n


def symp_eliminate_degree(
    sigma: PolyEndo, k: int, max_degree: int | None = None, n: int | None = None
) -> tuple[TameWord, PolyEndo]:
    """Remove the degree-k deviation of a symplectomorphism with symplectic tame factors."""
    n = _half_dim(sigma, n)
    w, r, _ = _symp_step(sigma, k, n, max_degree)
    return w, r


def symp_approximate(
    sigma: PolyEndo, target: int, n: int | None = None, check_rounds: bool = True
) -> tuple[TameWord, ApproxReport]:
    """Symplectic tame word w with height(eval(w)^-1 o sigma - id) >= target.

    ``check_rounds`` re-verifies bracket preservation of every intermediate
    residual (through degree target-1, which is exact on the jet).
    """
    n = _half_dim(sigma, n)
    jet = sigma.truncate(target).with_symplectic_n(n)
    check = is_symplectic(jet, n, cutoff=max(target - 1, 0))
    if not check:
        raise NotSymplecticError(f"input does not preserve the bracket: {check.violations}")
    lin, r = symp_normalize_linear(jet)
    factors = [] if _is_identity(lin.matrix) else [lin]
    rounds = []
    for k in range(2, target):
        before = _capped(height_from_identity(r), target)
        dev = r.deviation_component(k)
        try:
            w, r_next, big_f = _symp_step(r, k, n, target)
            ok = bool(is_symplectic(r_next, n, cutoff=target - 1)) if check_rounds else None
            if ok is False:
                raise AssertionError(f"residual after round {k} stopped preserving the bracket")
        except (AssertionError, ValueError) as exc:
            partial = ApproxReport("symp", target, rounds, r, len(factors), failed_round=k)
            raise ApproximationFailed(f"round {k}: {exc}", partial, k) from exc
        r = r_next
        factors.extend(w.factors)
        rounds.append(
            RoundRecord(
                k=k,
                height_before=before,
                height_after=_capped(height_from_identity(r), target),
                factors_appended=len(w),
                max_coeff_bits=r.max_coeff_bits(),
                symplectic=ok,
                generating_function=big_f,
                deviation=dev,
            )
        )
    word = TameWord(tuple(factors), 2 * n)
    report = ApproxReport("symp", target, rounds, r, len(word))
    if not report.success:
        raise ApproximationFailed(f"residual height {report.final_height} below target {target}", report, None)
    return word, report
