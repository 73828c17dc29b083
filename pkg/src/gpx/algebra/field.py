"""Rational numbers and rational functions over the problem's symbols.

All symbolic coefficients and exponents live in one fraction field
``QQ(p_1, ..., p_Q, n, c_1, ...)`` built once per problem.  Elements of that
field (sympy ``FracElement``) are the ``RatFun`` values of this package: they
are immutable, hashable and kept in lowest terms with a positive leading
denominator coefficient under graded lexicographic order, so equal rational
functions have identical representations.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import sympy
from sympy import QQ
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement

Rat = Fraction
RatFun = FracElement
MPoly = PolyElement


class AlgebraError(ValueError):
    """Raised for malformed algebraic input (zero denominators, bad forms)."""


def to_fraction(value) -> Fraction:
    """Convert sympy / gmpy / int rationals into ``Fraction``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    num = getattr(value, "numerator", None)
    den = getattr(value, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    return Fraction(value)


class Algebra:
    """The fraction field of one problem, with conversion helpers."""

    def __init__(self, symbols: Iterable[sympy.Symbol]):
        syms = []
        for s in symbols:
            if s not in syms:
                syms.append(s)
        self.symbols: tuple[sympy.Symbol, ...] = tuple(syms)
        self.field = FracField(self.symbols, QQ, grlex)
        self.ring = self.field.ring
        self.zero = self.field.zero
        self.one = self.field.one
        self._by_name = {s.name: s for s in self.symbols}
        self._rf_cache: dict[sympy.Expr, FracElement] = {}

    def __repr__(self) -> str:
        return f"Algebra({', '.join(s.name for s in self.symbols)})"

    def symbol(self, name: str) -> sympy.Symbol:
        return self._by_name[name]

    def has_symbol(self, name: str) -> bool:
        return name in self._by_name

    def index(self, sym: sympy.Symbol | str) -> int:
        if isinstance(sym, str):
            sym = self._by_name[sym]
        return self.symbols.index(sym)

    def gen(self, sym: sympy.Symbol | str) -> FracElement:
        return self.field.gens[self.index(sym)]

    def const(self, value) -> FracElement:
        f = to_fraction(value)
        return self.field.ground_new(QQ(f.numerator, f.denominator))

    def rf(self, expr) -> FracElement:
        """Convert a rational sympy expression into a field element."""
        if isinstance(expr, FracElement):
            return expr
        if isinstance(expr, (int, Fraction)):
            return self.const(expr)
        expr = sympy.sympify(expr)
        hit = self._rf_cache.get(expr)
        if hit is not None:
            return hit
        try:
            value = self.field.from_expr(expr)
        except (ValueError, sympy.polys.polyerrors.PolynomialError, TypeError) as exc:
            raise AlgebraError(f"not a rational function over the declared symbols: {expr}") from exc
        self._rf_cache[expr] = value
        return value

    def ratfun_normalize(self, num, den) -> FracElement:
        """Canonical rational function ``num/den``."""
        n = self.rf(num) if not isinstance(num, PolyElement) else self.field.new(num)
        d = self.rf(den) if not isinstance(den, PolyElement) else self.field.new(den)
        if d == 0:
            raise AlgebraError("division by zero polynomial")
        return n / d

    def poly(self, p) -> PolyElement:
        """Polynomial ring element; rejects proper fractions."""
        f = self.rf(p)
        if f.denom != 1 and not f.denom.is_ground:
            raise AlgebraError(f"not a polynomial: {f.as_expr()}")
        return f.numer.quo_ground(f.denom.LC) if f.denom != 1 else f.numer

    def free_indices(self, f: FracElement) -> set[int]:
        out: set[int] = set()
        for p in (f.numer, f.denom):
            for monom in p.itermonoms():
                out.update(i for i, e in enumerate(monom) if e)
        return out

    def free_symbols(self, f: FracElement) -> set[sympy.Symbol]:
        return {self.symbols[i] for i in self.free_indices(f)}

    def is_constant(self, f: FracElement) -> bool:
        return f.numer.is_ground and f.denom.is_ground

    def constant_value(self, f: FracElement) -> Fraction:
        if not self.is_constant(f):
            raise AlgebraError(f"not a constant: {f.as_expr()}")
        return to_fraction(f.numer.LC) / to_fraction(f.denom.LC) if f.numer else Fraction(0)

    def subs(self, f: FracElement, values: dict) -> FracElement:
        """Substitute exact rationals for some symbols."""
        if not values:
            return f
        pairs = [(self.ring.gens[self.index(k)], to_fraction(v)) for k, v in values.items()]
        num = f.numer
        den = f.denom
        for g, v in pairs:
            num = num.subs(g, QQ(v.numerator, v.denominator))
            den = den.subs(g, QQ(v.numerator, v.denominator))
        if den == 0:
            raise AlgebraError("division by zero polynomial")
        return self.field.new(num) / self.field.new(den)

    def evalf(self, f: FracElement, point: Sequence[float]) -> float:
        """Float evaluation at a point given for every symbol (in order)."""
        den = eval_poly(f.denom, point)
        return eval_poly(f.numer, point) / den


def eval_poly(p: PolyElement, point: Sequence[float]) -> float:
    total = 0.0
    for monom, coeff in p.iterterms():
        term = float(coeff.numerator) / float(coeff.denominator) if hasattr(coeff, "numerator") else float(coeff)
        for x, e in zip(point, monom):
            if e:
                term *= x ** e
        total += term
    return total


def poly_key(p: PolyElement):
    return tuple(sorted(p.iterterms()))
