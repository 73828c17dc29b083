"""Quadratic extensions ``a + b*sqrt(d)`` of the rational-function field."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy
from sympy import ZZ
from sympy.ntheory.factor_ import core
from sympy.polys.fields import FracElement

from .field import Algebra, AlgebraError, eval_poly, to_fraction


class MixedRadicalError(AlgebraError):
    """Two different square roots met in one expression."""


def _squarefree_rational(c: Fraction) -> tuple[int, Fraction]:
    """Write ``c = m * s**2`` with ``m`` a squarefree integer (sign kept in m)."""
    if c == 0:
        return 0, Fraction(0)
    sign = -1 if c < 0 else 1
    pq = abs(c.numerator) * c.denominator
    m = int(core(pq, 2))
    s2 = Fraction(pq, m) / (c.denominator ** 2)
    s = Fraction(math.isqrt(s2.numerator), math.isqrt(s2.denominator))
    return sign * m, s


_RADICAND_CACHE: dict = {}


def _split_radicand(d: FracElement) -> tuple[FracElement, FracElement]:
    """Return ``(scale, r)`` with ``sqrt(d) = scale*sqrt(r)`` and r squarefree."""
    hit = _RADICAND_CACHE.get(d)
    if hit is not None:
        return hit
    field = d.field
    num, den = d.numer, d.denom
    prod = num * den
    ring = prod.ring
    content, prim = prod.primitive()
    zring = ring.clone(domain=ZZ)
    coeff, factors = prim.set_ring(zring).sqf_list()
    root = ring.one
    rest = ring.one
    for f, k in factors:
        f = f.set_ring(ring)
        if k // 2:
            root *= f ** (k // 2)
        if k % 2:
            rest *= f
    m, s = _squarefree_rational(to_fraction(content) * to_fraction(coeff))
    scale = field.new(root) * field.ground_new(field.domain(s.numerator, s.denominator)) / field.new(den)
    out = (scale, field.new(rest) * m)
    _RADICAND_CACHE[d] = out
    return out


@dataclass(frozen=True)
class RadicalExpr:
    """Value ``a + b*sqrt(d)`` with a, b, d rational functions.

    ``d`` is kept squarefree (formal extraction of square factors, the
    sign of the extracted factor goes to ``b``) and is ``1`` iff ``b == 0``.
    """

    a: FracElement
    b: FracElement
    d: FracElement

    @staticmethod
    def rational(a: FracElement) -> "RadicalExpr":
        return RadicalExpr(a, a.field.zero, a.field.one)

    @staticmethod
    def make(a: FracElement, b: FracElement, d: FracElement) -> "RadicalExpr":
        field = a.field
        if b == 0:
            return RadicalExpr(a, field.zero, field.one)
        if d == 0:
            return RadicalExpr(a, field.zero, field.one)
        scale, radicand = _split_radicand(d)
        b2 = b * scale
        if radicand == 1:
            return RadicalExpr(a + b2, field.zero, field.one)
        return RadicalExpr(a, b2, radicand)

    # -- structure -----------------------------------------------------
    @property
    def field(self):
        return self.a.field

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def conjugate(self) -> "RadicalExpr":
        return RadicalExpr(self.a, -self.b, self.d)

    def norm(self) -> FracElement:
        return self.a * self.a - self.b * self.b * self.d

    def _coerce(self, other) -> "RadicalExpr":
        if isinstance(other, RadicalExpr):
            return other
        if isinstance(other, FracElement):
            return RadicalExpr.rational(other)
        if isinstance(other, (int, Fraction)):
            f = to_fraction(other)
            return RadicalExpr.rational(self.field.ground_new(self.field.domain(f.numerator, f.denominator)))
        return NotImplemented

    def _common(self, other: "RadicalExpr") -> FracElement:
        if self.b == 0:
            return other.d
        if other.b == 0 or other.d == self.d:
            return self.d
        raise MixedRadicalError(
            f"mixed radicals sqrt({self.d.as_expr()}) and sqrt({other.d.as_expr()})"
        )

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self._common(other)
        return RadicalExpr.make(self.a + other.a, self.b + other.b, d)

    __radd__ = __add__

    def __neg__(self):
        return RadicalExpr(-self.a, -self.b, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.b != 0 and other.b != 0 and self.d != other.d:
            if self.a == 0 and other.a == 0:
                # sqrt(d1)*sqrt(d2) = sqrt(d1*d2)
                return RadicalExpr.make(self.field.zero, self.b * other.b, self.d * other.d)
            raise MixedRadicalError(
                f"mixed radicals sqrt({self.d.as_expr()}) and sqrt({other.d.as_expr()})"
            )
        d = self._common(other)
        a = self.a * other.a + self.b * other.b * d
        b = self.a * other.b + self.b * other.a
        return RadicalExpr.make(a, b, d)

    __rmul__ = __mul__

    def inverse(self) -> "RadicalExpr":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if self.b == 0:
            return RadicalExpr.rational(1 / self.a)
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero divisor in quadratic extension")
        return RadicalExpr.make(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer powers only")
        if k < 0:
            return self.inverse() ** (-k)
        result = RadicalExpr.rational(self.field.one)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- conversion ----------------------------------------------------
    def to_expr(self) -> sympy.Expr:
        if self.b == 0:
            return self.a.as_expr()
        return self.a.as_expr() + self.b.as_expr() * sympy.sqrt(self.d.as_expr())

    def __str__(self) -> str:
        return str(self.to_expr())

    def key(self):
        return (self.a, self.b, self.d)

    def evalf(self, alg: Algebra, point: Sequence[float]) -> float:
        """Real float value at ``point``; nan when the radicand is negative."""
        a = _eval(self.a, point)
        if self.b == 0:
            return a
        d = _eval(self.d, point)
        if d < 0:
            return math.nan
        return a + _eval(self.b, point) * math.sqrt(d)

    def subs(self, alg: Algebra, values: dict) -> "RadicalExpr":
        return RadicalExpr.make(alg.subs(self.a, values), alg.subs(self.b, values), alg.subs(self.d, values))

    def free_symbols(self, alg: Algebra) -> set:
        out = alg.free_symbols(self.a)
        if self.b != 0:
            out |= alg.free_symbols(self.b) | alg.free_symbols(self.d)
        return out


def _eval(f: FracElement, point: Sequence[float]) -> float:
    den = eval_poly(f.denom, point)
    if den == 0:
        return math.nan
    return eval_poly(f.numer, point) / den


def radical_from_expr(alg: Algebra, expr) -> RadicalExpr:
    """Convert a sympy expression with at most one square root."""
    if isinstance(expr, RadicalExpr):
        return expr
    if isinstance(expr, FracElement):
        return RadicalExpr.rational(expr)
    expr = sympy.sympify(expr)
    if not any(
        isinstance(p, sympy.Pow) and p.exp.is_Rational and p.exp.q == 2 for p in sympy.preorder_traversal(expr)
    ):
        return RadicalExpr.rational(alg.rf(expr))
    return _walk(alg, expr)


def _walk(alg: Algebra, e) -> RadicalExpr:
    if e.is_Number or e.is_Symbol:
        return RadicalExpr.rational(alg.rf(e))
    if e.is_Add:
        out = RadicalExpr.rational(alg.zero)
        for arg in e.args:
            out = out + _walk(alg, arg)
        return out
    if e.is_Mul:
        out = RadicalExpr.rational(alg.one)
        for arg in e.args:
            out = out * _walk(alg, arg)
        return out
    if e.is_Pow:
        exp = e.exp
        if exp.is_Integer:
            return _walk(alg, e.base) ** int(exp)
        if exp.is_Rational and exp.q == 2:
            base = _walk(alg, e.base)
            if not base.is_rational:
                raise AlgebraError(f"nested radical: {e}")
            root = RadicalExpr.make(alg.zero, alg.one, base.a)
            return root ** int(exp.p)
    raise AlgebraError(f"not an element of a quadratic extension: {e}")
