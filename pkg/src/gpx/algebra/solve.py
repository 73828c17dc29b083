"""Small-degree polynomial solving over rational functions and one radical."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import sympy
from sympy.polys.fields import FracElement
from sympy.polys.rings import PolyElement

from .field import Algebra, AlgebraError, to_fraction
from .radical import MixedRadicalError, RadicalExpr
from .region import Constraint


class SolveError(AlgebraError):
    """Degenerate equation: no solution or identically satisfied."""


def as_radical(alg: Algebra, x) -> RadicalExpr:
    if isinstance(x, RadicalExpr):
        return x
    return RadicalExpr.rational(alg.rf(x))


# --------------------------------------------------------------------------
# evaluation helpers


def poly_eval_radical(alg: Algebra, p: PolyElement, values: dict) -> RadicalExpr:
    """Evaluate a polynomial with some generators replaced by RadicalExprs."""
    if not values:
        return RadicalExpr.rational(alg.field.new(p))
    idx = list(values)
    powers: dict = {}
    total = RadicalExpr.rational(alg.zero)
    groups: dict = {}
    for monom, coeff in p.iterterms():
        key = tuple(monom[i] for i in idx)
        rest = list(monom)
        for i in idx:
            rest[i] = 0
        groups.setdefault(key, alg.ring.zero)
        groups[key] = groups[key] + alg.ring({tuple(rest): coeff})
    for key, rest in groups.items():
        term = RadicalExpr.rational(alg.field.new(rest))
        for i, e in zip(idx, key):
            if e:
                pk = powers.get((i, e))
                if pk is None:
                    pk = values[i] ** e
                    powers[(i, e)] = pk
                term = term * pk
        total = total + term
    return total


def subs_radical(alg: Algebra, f, values: dict) -> RadicalExpr:
    """Substitute RadicalExpr values (keyed by variable index) into f."""
    x = as_radical(alg, f)
    values = {(alg.index(k) if not isinstance(k, int) else k): as_radical(alg, v) for k, v in values.items()}
    if not values:
        return x

    def one(g: FracElement) -> RadicalExpr:
        if g == 0:
            return RadicalExpr.rational(alg.zero)
        num = poly_eval_radical(alg, g.numer, values)
        den = poly_eval_radical(alg, g.denom, values)
        if den.is_zero():
            raise AlgebraError("division by zero polynomial")
        return num / den

    out = one(x.a)
    if not x.is_rational:
        b = one(x.b)
        d = one(x.d)
        if not d.is_rational:
            raise MixedRadicalError("nested radical after substitution")
        out = out + b * RadicalExpr.make(alg.zero, alg.one, d.a)
    return out


def coeffs_in(alg: Algebra, x, var) -> list[RadicalExpr]:
    """Coefficients (low to high) of x as a polynomial in one variable.

    The variable must not occur in denominators or radicands.
    """
    i = var if isinstance(var, int) else alg.index(var)
    x = as_radical(alg, x)
    out: dict[int, RadicalExpr] = {}

    def split(g: FracElement, scale):
        if g == 0:
            return
        if g.denom.degree(i) > 0:
            raise AlgebraError("unknown occurs in a denominator")
        parts: dict[int, PolyElement] = {}
        for monom, coeff in g.numer.iterterms():
            k = monom[i]
            rest = list(monom)
            rest[i] = 0
            parts[k] = parts.get(k, alg.ring.zero) + alg.ring({tuple(rest): coeff})
        for k, p in parts.items():
            val = alg.field.new(p) / alg.field.new(g.denom)
            out[k] = out.get(k, RadicalExpr.rational(alg.zero)) + scale(val)

    split(x.a, RadicalExpr.rational)
    if not x.is_rational:
        if alg.free_indices(x.d) & {i}:
            raise AlgebraError("unknown occurs under a radical")
        split(x.b, lambda v: RadicalExpr.make(alg.zero, v, x.d))
    if not out:
        return [RadicalExpr.rational(alg.zero)]
    deg = max(out)
    return [out.get(k, RadicalExpr.rational(alg.zero)) for k in range(deg + 1)]


def horner(coeffs: Sequence[RadicalExpr], x: RadicalExpr) -> RadicalExpr:
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


# --------------------------------------------------------------------------
# affine


def solve_affine(alg: Algebra, expr, unknown) -> RadicalExpr:
    """Solve ``a*u + b = 0`` for u; returns ``-b/a``."""
    cs = coeffs_in(alg, expr, unknown)
    if len(cs) > 2:
        raise AlgebraError("equation is not affine in the unknown")
    b = cs[0]
    a = cs[1] if len(cs) > 1 else RadicalExpr.rational(alg.zero)
    if a.is_zero():
        if b.is_zero():
            raise SolveError("identically satisfied")
        raise SolveError("no solution")
    return -b / a


# --------------------------------------------------------------------------
# symbolic roots


@dataclass(frozen=True)
class Root:
    value: RadicalExpr
    conditions: tuple[Constraint, ...] = ()
    multiplicity: int = 1


@dataclass
class SymbolicRoots:
    roots: list[Root]
    unresolved: list[list[RadicalExpr]] = dc_field(default_factory=list)

    @property
    def flag(self) -> Optional[str]:
        return "unresolved-symbolic" if self.unresolved else None


def _trim(coeffs: list[RadicalExpr]) -> list[RadicalExpr]:
    out = list(coeffs)
    while out and out[-1].is_zero():
        out.pop()
    return out


def solve_poly_symbolic(alg: Algebra, coeffs: Sequence) -> SymbolicRoots:
    """Real-candidate roots of ``sum coeffs[k] x**k`` over the parameters.

    Coefficients may be rational functions or RadicalExprs.  Linear and
    quadratic factors are solved exactly; the discriminant of a quadratic
    factor becomes a realness condition.  Higher-degree irreducible factors
    are returned in ``unresolved``.
    """
    cs = _trim([as_radical(alg, c) for c in coeffs])
    if not cs:
        raise AlgebraError("zero polynomial")
    if len(cs) == 1:
        return SymbolicRoots([])
    if all(c.is_rational for c in cs):
        return _solve_rational(alg, [c.a for c in cs])
    return _solve_radical(alg, cs)


_X = sympy.Symbol("_x_root")


def _solve_rational(alg: Algebra, cs: list[FracElement]) -> SymbolicRoots:
    expr = sympy.Add(*[c.as_expr() * _X ** k for k, c in enumerate(cs)])
    num, _ = sympy.fraction(sympy.together(expr))
    _, factors = sympy.factor_list(sympy.expand(num))
    roots: list[Root] = []
    unresolved: list[list[RadicalExpr]] = []
    for f, mult in factors:
        poly = sympy.Poly(f, _X)
        deg = poly.degree()
        if deg <= 0:
            continue
        fc = [alg.rf(c) for c in reversed(poly.all_coeffs())]
        if deg == 1:
            roots.append(Root(RadicalExpr.rational(-fc[0] / fc[1]), (), mult))
        elif deg == 2:
            roots.extend(Root(r.value, r.conditions, mult) for r in quadratic_roots(alg, fc))
        else:
            unresolved.append([RadicalExpr.rational(c) for c in fc])
    return SymbolicRoots(_dedupe(roots), unresolved)


def quadratic_roots(alg: Algebra, fc: Sequence[FracElement]) -> list[Root]:
    c0, c1, c2 = fc
    disc = c1 * c1 - 4 * c2 * c0
    if disc == 0:
        return [Root(RadicalExpr.rational(-c1 / (2 * c2)), (), 2)]
    if alg.is_constant(disc) and alg.constant_value(disc) < 0:
        return []
    out = []
    for s in (1, -1):
        r = RadicalExpr.make(-c1 / (2 * c2), s / (2 * c2), disc)
        conds: tuple[Constraint, ...] = ()
        if not r.is_rational:
            if alg.is_constant(r.d):
                if alg.constant_value(r.d) < 0:
                    continue
            else:
                conds = (Constraint(RadicalExpr.rational(r.d), ">="),)
        out.append(Root(r, conds))
    return out


def _solve_radical(alg: Algebra, cs: list[RadicalExpr]) -> SymbolicRoots:
    if len(cs) == 2:
        return SymbolicRoots([Root(-cs[0] / cs[1])])
    # Norm trick: P * conj(P) has rational coefficients; its roots contain
    # the roots of P, which are then confirmed by exact substitution.
    conj = [c.conjugate() for c in cs]
    norm: list[RadicalExpr] = [RadicalExpr.rational(alg.zero)] * (2 * len(cs) - 1)
    for i, a in enumerate(cs):
        for j, b in enumerate(conj):
            norm[i + j] = norm[i + j] + a * b
    if not all(c.is_rational for c in norm):
        return SymbolicRoots([], [cs])
    cand = _solve_rational(alg, [c.a for c in norm])
    roots = []
    for r in cand.roots:
        try:
            if horner(cs, r.value).is_zero():
                roots.append(Root(r.value, r.conditions, 1))
        except MixedRadicalError:
            continue
    unresolved = [cs] if cand.unresolved and len(roots) < len(cs) - 1 else []
    return SymbolicRoots(_dedupe(roots), unresolved)


def _dedupe(roots: list[Root]) -> list[Root]:
    seen: dict = {}
    for r in roots:
        k = r.value.key()
        if k in seen:
            old = seen[k]
            seen[k] = Root(old.value, old.conditions, old.multiplicity + r.multiplicity)
        else:
            seen[k] = r
    return sorted(seen.values(), key=lambda r: str(r.value))


# --------------------------------------------------------------------------
# numeric roots


def solve_poly_numeric(coeffs: Sequence) -> list[float]:
    """All real roots of ``sum coeffs[k] x**k`` (low to high), ascending.

    Exact rational input goes through sympy's real root isolation; float
    input uses companion-matrix eigenvalues polished by Newton steps.
    """
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) < 2:
        raise AlgebraError("polynomial of degree 0 has no roots to find")
    if all(isinstance(c, (int, Fraction)) or isinstance(c, sympy.Rational) for c in cs):
        poly = sympy.Poly([sympy.Rational(to_fraction(c).numerator, to_fraction(c).denominator) for c in reversed(cs)], _X)
        return sorted(float(r.evalf(30)) for r in poly.real_roots())
    arr = np.array([float(c) for c in reversed(cs)], dtype=float)
    raw = np.roots(arr)
    scale = max(1.0, float(np.max(np.abs(raw)))) if raw.size else 1.0
    out = []
    deriv = np.polyder(arr)
    for z in raw:
        if abs(z.imag) > 1e-7 * scale:
            continue
        x = float(z.real)
        for _ in range(8):
            d = np.polyval(deriv, x)
            if d == 0:
                break
            step = np.polyval(arr, x) / d
            x -= step
            if abs(step) <= 1e-16 * max(1.0, abs(x)):
                break
        out.append(float(x))
    out.sort()
    merged: list[float] = []
    for x in out:
        if merged and abs(x - merged[-1]) <= 1e-10 * max(1.0, abs(x)):
            continue
        merged.append(x)
    return merged
