"""Monomial normal form of the ODE operator.

An operator is a sum of monomials ``A * y**B0 * y'**B1 * ... * y^(r)**Br``.
Only ``B0`` may be non-integer or depend on the exponent parameter (affinely);
derivative powers are nonnegative integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import sympy
from sympy.polys.fields import FracElement

from ..algebra.field import Algebra, AlgebraError, to_fraction
from ..algebra.radical import MixedRadicalError, RadicalExpr
from .parser import BinOp, Deriv, Name, Neg, Node, Num, ParseError, Sqrt, parse_ode


class OdeError(ValueError):
    """Invalid operator (normalization or validation failure)."""


@dataclass(frozen=True)
class Monomial:
    coeff: RadicalExpr
    b0: FracElement
    powers: tuple[int, ...]  # B^1 .. B^r, trailing zeros stripped

    def exps(self, order: int) -> tuple:
        return (self.b0,) + tuple(self.powers) + (0,) * (order - len(self.powers))

    def power(self, h: int) -> int:
        """Integer power of the h-th derivative (h >= 1)."""
        return self.powers[h - 1] if h - 1 < len(self.powers) else 0

    @property
    def order(self) -> int:
        return len(self.powers)

    def sort_key(self):
        return (str(self.b0.as_expr()), self.powers)


def _strip(p: Sequence[int]) -> tuple[int, ...]:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


class _Terms:
    """Intermediate polynomial: (b0, powers) -> coefficient."""

    def __init__(self, alg: Algebra, terms: Optional[dict] = None):
        self.alg = alg
        self.terms: dict = terms or {}

    @classmethod
    def scalar(cls, alg: Algebra, c: RadicalExpr) -> "_Terms":
        if c.is_zero():
            return cls(alg)
        return cls(alg, {(alg.zero, ()): c})

    @property
    def is_scalar(self) -> bool:
        return all(k == (self.alg.zero, ()) for k in self.terms)

    def scalar_value(self) -> RadicalExpr:
        return self.terms.get((self.alg.zero, ()), RadicalExpr.rational(self.alg.zero))

    def add(self, other: "_Terms", sign: int = 1) -> "_Terms":
        out = dict(self.terms)
        for k, c in other.terms.items():
            new = out[k] + c * sign if k in out else c * sign
            if new.is_zero():
                out.pop(k, None)
            else:
                out[k] = new
        return _Terms(self.alg, out)

    def mul(self, other: "_Terms") -> "_Terms":
        out: dict = {}
        for (b1, p1), c1 in self.terms.items():
            for (b2, p2), c2 in other.terms.items():
                n = max(len(p1), len(p2))
                p = _strip([(p1[i] if i < len(p1) else 0) + (p2[i] if i < len(p2) else 0) for i in range(n)])
                k = (b1 + b2, p)
                new = out[k] + c1 * c2 if k in out else c1 * c2
                if new.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = new
        return _Terms(self.alg, out)

    def inverse(self, node) -> "_Terms":
        if len(self.terms) != 1:
            raise OdeError("division by a sum containing y is not of monomial form")
        ((b0, p), c), = self.terms.items()
        if any(x > 0 for x in p):
            raise OdeError("negative integer power of a derivative")
        return _Terms(self.alg, {(-b0, p): c.inverse()})

    def power(self, e: FracElement) -> "_Terms":
        alg = self.alg
        if not self.terms:
            return self
        const = alg.is_constant(e)
        k = alg.constant_value(e) if const else None
        if const and k.denominator == 1 and k >= 0:
            out = _Terms.scalar(alg, RadicalExpr.rational(alg.one))
            for _ in range(int(k)):
                out = out.mul(self)
            return out
        if len(self.terms) != 1:
            raise OdeError("non-integer or negative power of a sum")
        ((b0, p), c), = self.terms.items()
        if any(p):
            if not const or k.denominator != 1:
                raise OdeError("derivative raised to a non-integer power")
            if k < 0:
                raise OdeError("negative integer power of a derivative")
        if const and k.denominator == 1:
            cc = c ** int(k)
        elif c == RadicalExpr.rational(alg.one):
            cc = c
        else:
            raise OdeError("non-integer power of a coefficient")
        new_p = tuple(int(x * k) for x in p) if p else ()
        return _Terms(alg, {(b0 * e, _strip(new_p)): cc})


def _eval(node: Node, alg: Algebra) -> _Terms:
    if isinstance(node, Num):
        return _Terms.scalar(alg, RadicalExpr.rational(alg.const(node.value)))
    if isinstance(node, Name):
        return _Terms.scalar(alg, RadicalExpr.rational(alg.gen(node.name)))
    if isinstance(node, Deriv):
        if node.order == 0:
            return _Terms(alg, {(alg.one, ()): RadicalExpr.rational(alg.one)})
        p = [0] * node.order
        p[-1] = 1
        return _Terms(alg, {(alg.zero, tuple(p)): RadicalExpr.rational(alg.one)})
    if isinstance(node, Neg):
        return _Terms(alg).add(_eval(node.arg, alg), -1)
    if isinstance(node, Sqrt):
        arg = _eval(node.arg, alg)
        if not arg.is_scalar:
            raise OdeError("sqrt() of an expression containing y")
        v = arg.scalar_value()
        if not v.is_rational:
            raise OdeError("nested radical in coefficient")
        return _Terms.scalar(alg, RadicalExpr.make(alg.zero, alg.one, v.a))
    if isinstance(node, BinOp):
        left = _eval(node.left, alg)
        if node.op == "^":
            ex = _eval(node.right, alg)
            if not ex.is_scalar:
                raise OdeError("exponent contains y")
            ev = ex.scalar_value()
            if not ev.is_rational:
                raise OdeError("irrational exponent")
            return left.power(ev.a)
        right = _eval(node.right, alg)
        if node.op == "+":
            return left.add(right)
        if node.op == "-":
            return left.add(right, -1)
        if node.op == "*":
            return left.mul(right)
        if node.op == "/":
            if right.is_scalar:
                v = right.scalar_value()
                if v.is_zero():
                    raise OdeError("division by zero")
                return left.mul(_Terms.scalar(alg, v.inverse()))
            return left.mul(right.inverse(node))
    raise OdeError(f"cannot normalize node {node!r}")


@dataclass
class Ode:
    """Normalized operator: monomials sorted canonically."""

    alg: Algebra
    monomials: tuple[Monomial, ...]
    exponent_param: Optional[str] = None

    @property
    def order(self) -> int:
        return max((m.order for m in self.monomials), default=0)

    @property
    def N(self) -> int:
        return len(self.monomials)

    def exponent_vectors(self) -> list[tuple]:
        r = self.order
        return [m.exps(r) for m in self.monomials]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ode):
            return NotImplemented
        return self.monomials == other.monomials and self.exponent_param == other.exponent_param

    def to_text(self) -> str:
        return print_ode(self)

    def specialize(self, values: dict) -> "Ode":
        """Substitute exact rationals for parameters and recombine."""
        alg = self.alg
        terms: dict = {}
        from ..algebra.solve import subs_radical

        for m in self.monomials:
            c = subs_radical(alg, m.coeff, {alg.index(k): RadicalExpr.rational(alg.const(v)) for k, v in values.items()})
            b0 = alg.subs(m.b0, values)
            key = (b0, m.powers)
            new = terms[key] + c if key in terms else c
            if new.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = new
        ep = self.exponent_param if self.exponent_param not in values else None
        return Ode(alg, _sorted_monomials(terms), ep)

    def scaled(self, factor) -> "Ode":
        f = RadicalExpr.rational(self.alg.rf(factor))
        return Ode(self.alg, tuple(Monomial(m.coeff * f, m.b0, m.powers) for m in self.monomials), self.exponent_param)

    def times_y_power(self, m: int) -> "Ode":
        return Ode(
            self.alg,
            tuple(Monomial(x.coeff, x.b0 + m, x.powers) for x in self.monomials),
            self.exponent_param,
        )


def _sorted_monomials(terms: dict) -> tuple[Monomial, ...]:
    mons = [Monomial(c, b0, p) for (b0, p), c in terms.items()]
    mons.sort(key=Monomial.sort_key)
    return tuple(mons)


def normalize(ast: Node, alg: Algebra, exponent_param: Optional[str] = None) -> Ode:
    """Distribute the AST into monomials and check exponent forms."""
    try:
        terms = _eval(ast, alg)
    except MixedRadicalError as exc:
        raise OdeError(f"coefficients mix different square roots: {exc}") from exc
    except AlgebraError as exc:
        raise OdeError(str(exc)) from exc
    if not terms.terms:
        raise OdeError("zero operator")
    for (b0, _), _c in terms.terms.items():
        check_exponent(alg, b0, exponent_param)
    return Ode(alg, _sorted_monomials(terms.terms), exponent_param)


def check_exponent(alg: Algebra, b0: FracElement, exponent_param: Optional[str]) -> None:
    if alg.is_constant(b0):
        return
    free = {s.name for s in alg.free_symbols(b0)}
    if exponent_param is None or free != {exponent_param} or not b0.denom.is_ground:
        raise OdeError("exponent not affine in designated parameter")
    i = alg.index(exponent_param)
    if b0.numer.degree(i) > 1:
        raise OdeError("exponent not affine in designated parameter")


def validate(ode: Ode, values: Optional[dict] = None, bounds: Optional[dict] = None) -> Ode:
    """Check invariants; ``bounds`` maps name -> Bound, ``values`` name -> Rat."""
    if ode.N < 2:
        raise OdeError(f"operator needs at least two monomials (got {ode.N})")
    if ode.order < 1:
        raise OdeError("operator contains no derivative")
    seen = set()
    for i, m in enumerate(ode.monomials):
        if m.coeff.is_zero():
            raise OdeError(f"monomial {i}: zero coefficient")
        if any(p < 0 for p in m.powers):
            raise OdeError(f"monomial {i}: negative derivative power")
        try:
            check_exponent(ode.alg, m.b0, ode.exponent_param)
        except OdeError as exc:
            raise OdeError(f"monomial {i}: {exc}") from None
        key = (m.b0, m.powers)
        if key in seen:
            raise OdeError(f"monomial {i}: duplicate exponent vector")
        seen.add(key)
    for name, val in (values or {}).items():
        b = (bounds or {}).get(name)
        if b is not None and not b.contains(val):
            raise OdeError(f"bound violation: {b.describe(name)}")
    return ode


# -- printing ----------------------------------------------------------------


def _deriv_text(h: int) -> str:
    if h == 0:
        return "y"
    if h <= 2:
        return "y" + "'" * h
    return f"D(y,{h})"


def _paren(s: str) -> str:
    return s if re_simple(s) else f"({s})"


def re_simple(s: str) -> bool:
    return all(ch.isalnum() or ch in "_." for ch in s)


def print_monomial(m: Monomial) -> str:
    parts = []
    coeff = sympy.sstr(m.coeff.to_expr(), order="grlex")
    parts.append(f"({coeff})")
    b0 = sympy.sstr(m.b0.as_expr())
    if m.b0 != 0:
        parts.append(f"y^{_paren(b0)}" if m.b0 != 1 else "y")
    for h, p in enumerate(m.powers, start=1):
        if p:
            d = _deriv_text(h)
            parts.append(d if p == 1 else f"{d}^{p}")
    return "*".join(parts)


def print_ode(ode: Ode) -> str:
    return " + ".join(print_monomial(m) for m in ode.monomials)


def parse_and_normalize(text: str, alg: Algebra, exponent_param: Optional[str] = None) -> Ode:
    names = {s.name for s in alg.symbols}
    return normalize(parse_ode(text, known=names), alg, exponent_param)
