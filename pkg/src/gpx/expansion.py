"""Substitution of truncated series into the operator and term collection.

A truncation ``y_M = c_1 t^{n_1} + ... + c_{M-1} t^{n_{M-1}} + c t^{n}`` is
pushed through every monomial.  Derivatives follow ``(t^e)^{(h)} =
e(e-1)...(e-h+1) t^{e-h}``.  Integer nonnegative powers are multiplied out;
any other power is written ``L^B (1 + u)^B`` and the binomial series in ``u``
is kept up to a fixed degree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Optional, Sequence

from sympy.polys.fields import FracElement

from .algebra.field import Algebra
from .algebra.powers import PowerContext, PowerError, PowerSum
from .algebra.radical import RadicalExpr
from .algebra.solve import coeffs_in
from .frontend.ode import Ode
from .frontend.problem import N_SYMBOL

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesTerm:
    coeff: PowerSum
    exp: RadicalExpr


@dataclass
class GpSeries:
    """Ordered (coefficient, exponent) pairs of a truncation."""

    terms: list[SeriesTerm]
    direction: int = 1
    free_constants: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def exponents(self) -> list[RadicalExpr]:
        return [t.exp for t in self.terms]


@dataclass(frozen=True)
class TermContribution:
    index: int
    exp: RadicalExpr
    coeff: PowerSum
    mu: Optional[FracElement] = None


@dataclass
class Group:
    exp: RadicalExpr
    D: PowerSum
    origins: frozenset = frozenset()


@dataclass
class CollectedSum:
    groups: list[Group]
    dropped: list[RadicalExpr] = dc_field(default_factory=list)
    unknown: Optional[str] = None

    @property
    def R(self) -> int:
        return len(self.groups)

    def exponents(self) -> list[RadicalExpr]:
        return [g.exp for g in self.groups]

    def group(self, exp: RadicalExpr) -> Optional[Group]:
        for g in self.groups:
            if g.exp == exp:
                return g
        return None


def falling(alg: Algebra, e: RadicalExpr, h: int) -> RadicalExpr:
    out = RadicalExpr.rational(alg.one)
    for j in range(h):
        out = out * (e - j)
    return out


def _binom(alg: Algebra, B: FracElement, k: int) -> FracElement:
    out = alg.one
    for i in range(k):
        out = out * (B - i) / (i + 1)
    return out


# A "series" below is a dict exp -> PowerSum, keyed by RadicalExpr.


def _mul_series(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = ea + eb
            c = ca * cb
            if e in out:
                c = out[e] + c
            if c.is_zero():
                out.pop(e, None)
            else:
                out[e] = c
    return out


def _add_into(out: dict, part: dict) -> None:
    for e, c in part.items():
        if e in out:
            c = out[e] + c
        if c.is_zero():
            out.pop(e, None)
        else:
            out[e] = c


class Expander:
    """Pushes a truncation through an operator.

    ``known`` are the fixed terms; ``unknown`` names the symbolic coefficient
    of the last term whose exponent is the field variable ``n`` (None for a
    fully known series).  ``degree`` bounds the binomial expansion in u.
    """

    def __init__(self, ode: Ode, ctx: PowerContext, known: Sequence[SeriesTerm], unknown: Optional[str], degree: int):
        self.ode = ode
        self.ctx = ctx
        self.alg = ode.alg
        self.known = list(known)
        self.unknown = unknown
        self.degree = degree
        self._deriv: dict[int, list[SeriesTerm]] = {}
        self._factor_cache: dict = {}

    def derivative_series(self, h: int) -> list[SeriesTerm]:
        hit = self._deriv.get(h)
        if hit is not None:
            return hit
        alg = self.alg
        out = []
        terms = list(self.known)
        if self.unknown is not None:
            n = RadicalExpr.rational(alg.gen(N_SYMBOL))
            terms.append(SeriesTerm(self.ctx.symbol(self.unknown), n))
        for t in terms:
            ff = falling(alg, t.exp, h)
            if ff.is_zero():
                continue
            out.append(SeriesTerm(t.coeff * ff, t.exp - h))
        self._deriv[h] = out
        return out

    def factor_power(self, h: int, B) -> dict:
        key = (h, B)
        hit = self._factor_cache.get(key)
        if hit is not None:
            return hit
        alg = self.alg
        series = self.derivative_series(h)
        Bf = alg.rf(B)
        natural = alg.is_constant(Bf) and alg.constant_value(Bf).denominator == 1 and alg.constant_value(Bf) >= 0
        if not series:
            if natural and alg.constant_value(Bf) > 0:
                self._factor_cache[key] = {}
                return {}
            raise PowerError("power of an identically vanishing derivative")
        if natural:
            k = int(alg.constant_value(Bf))
            base = {t.exp: t.coeff for t in series}
            out = {RadicalExpr.rational(alg.zero): self.ctx.one()}
            for _ in range(k):
                out = _mul_series(out, base)
        else:
            lead = series[0]
            lead_pow = {lead.exp * RadicalExpr.rational(Bf): lead.coeff.pow(Bf)}
            inv = lead.coeff.inverse()
            u = {}
            for t in series[1:]:
                _add_into(u, {t.exp - lead.exp: t.coeff * inv})
            total = {RadicalExpr.rational(alg.zero): self.ctx.one()}
            upow = {RadicalExpr.rational(alg.zero): self.ctx.one()}
            for k in range(1, self.degree + 1):
                if not u:
                    break
                upow = _mul_series(upow, u)
                bk = _binom(alg, Bf, k)
                if bk == 0:
                    break
                _add_into(total, {e: c * bk for e, c in upow.items()})
            out = _mul_series(lead_pow, total)
        self._factor_cache[key] = out
        return out

    def monomial_image(self, i: int) -> dict:
        m = self.ode.monomials[i]
        out = {RadicalExpr.rational(self.alg.zero): self.ctx.const(m.coeff)}
        if m.b0 != 0:
            out = _mul_series(out, self.factor_power(0, m.b0))
        for h, p in enumerate(m.powers, start=1):
            if p:
                out = _mul_series(out, self.factor_power(h, p))
        return out

    def contributions(self) -> list[TermContribution]:
        out = []
        for i in range(len(self.ode.monomials)):
            for e, c in self.monomial_image(i).items():
                out.append(TermContribution(i, e, c))
        return out


def collect_terms(contribs: Iterable[TermContribution], unknown: Optional[str] = None) -> CollectedSum:
    """Group contributions by exact exponent equality; drop zero groups."""
    groups: dict = {}
    origins: dict = {}
    touched: list = []
    for tc in contribs:
        if tc.exp not in groups:
            touched.append(tc.exp)
            groups[tc.exp] = tc.coeff
            origins[tc.exp] = {tc.index}
        else:
            groups[tc.exp] = groups[tc.exp] + tc.coeff
            origins[tc.exp].add(tc.index)
    kept = []
    dropped = []
    for e in touched:
        if groups[e].is_zero():
            dropped.append(e)
            log.info("collected group at exponent %s vanishes identically", e)
        else:
            kept.append(Group(e, groups[e], frozenset(origins[e])))
    kept.sort(key=lambda g: str(g.exp))
    dropped.sort(key=str)
    return CollectedSum(kept, dropped, unknown)


def substitute_leading(ode: Ode, ctx: PowerContext, name: str = "c1") -> list[TermContribution]:
    """One contribution per monomial for ``y = c t^n`` (exponent g, coefficient E)."""
    ex = Expander(ode, ctx, [], name, degree=0)
    out = []
    for i, m in enumerate(ode.monomials):
        img = ex.monomial_image(i)
        ((e, c),) = img.items()
        mu = m.b0 + sum(m.powers)
        out.append(TermContribution(i, e, c, mu))
    return out


def substitute_truncation(
    ode: Ode,
    ctx: PowerContext,
    known: Sequence[SeriesTerm],
    unknown: Optional[str],
    degree: Optional[int] = None,
) -> CollectedSum:
    """Collected image of ``known + unknown * t^n``.

    Non-integer powers keep the binomial series to u-degree M-1 by default;
    relative terms are o(1), so higher powers of u sit beyond every
    exponent that can balance at this order.
    """
    M = len(known) + (1 if unknown else 0)
    if degree is None:
        degree = max(M - 1, 1)
    ex = Expander(ode, ctx, known, unknown, degree)
    return collect_terms(ex.contributions(), unknown)


def exp_parts(alg: Algebra, e: RadicalExpr) -> tuple[RadicalExpr, RadicalExpr]:
    """Split an exponent ``a + b*n`` into (a, b)."""
    cs = coeffs_in(alg, e, N_SYMBOL)
    zero = RadicalExpr.rational(alg.zero)
    if len(cs) > 2:
        raise ValueError("exponent is not affine in the unknown exponent")
    return cs[0], (cs[1] if len(cs) > 1 else zero)


def unknown_degrees(D: PowerSum, name: str) -> dict:
    """Coefficients of the unknown symbol, keyed by its exponent."""
    return D.collect_symbol(name)
