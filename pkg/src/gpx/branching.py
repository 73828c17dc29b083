"""Equality exponents, critical parameter values and case partitions.

Every collected exponent is affine in the unknown exponent ``n``; two of
them coincide at an equality exponent.  Between consecutive equality
exponents the ordering of the whole exponent set is fixed, so one sample
point per case decides which group leads.
"""
from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import sympy

from .algebra.field import Algebra, to_fraction
from .algebra.powers import PowerSum, radical_mp
from .algebra.radical import RadicalExpr
from .algebra.region import Bound, Region, Sign, make_constraint
from .algebra.solve import subs_radical
from .expansion import CollectedSum, exp_parts
from .frontend.problem import N_SYMBOL

log = logging.getLogger(__name__)

DPS = 50
_TIE = mpmath.mpf(10) ** -30


@dataclass(frozen=True)
class EqualityExponent:
    value: RadicalExpr
    origins: tuple = ()  # pairs of exponent strings

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class CriticalValue:
    kind: str
    param: Optional[str]
    value: object  # Fraction, sympy number or None for a hypersurface
    equation: str
    witness: str

    def key(self):
        return (self.kind, self.param or "", str(self.value), self.equation)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "param": self.param,
            "value": None if self.value is None else str(self.value),
            "equation": self.equation,
            "witness": self.witness,
        }


@dataclass
class SubRegion:
    """A slice of parameter space: region plus exact point values."""

    region: Region
    values: dict = dc_field(default_factory=dict)  # name -> Fraction
    label: str = "all"
    assumptions: tuple = ()

    def with_constraint(self, c, note: str) -> "SubRegion":
        return SubRegion(self.region.with_constraints(c), dict(self.values), self.label, self.assumptions + (note,))


@dataclass
class CaseCondition:
    kind: str  # "interval" or "point"
    sub: SubRegion
    lo: Optional[RadicalExpr] = None
    hi: Optional[RadicalExpr] = None
    point: Optional[RadicalExpr] = None

    def describe(self, name: str = "n") -> str:
        if self.kind == "point":
            return f"{name}={self.point}"
        lo = f"{self.lo}<" if self.lo is not None else ""
        hi = f"<{self.hi}" if self.hi is not None else ""
        return f"{lo}{name}{hi}"


@dataclass
class SortedCase:
    case: CaseCondition
    order: list  # exponents (n substituted at points) in limit order
    selected: list  # original group exponents merged at the selected rank
    exp: RadicalExpr  # selected exponent, n substituted at points
    D: PowerSum  # merged coefficient, n substituted at points

    @property
    def balance(self) -> bool:
        return len(self.selected) > 1


class IncomparableError(ValueError):
    """Raised when a case does not fix the order of two exponents."""


def _rad(alg: Algebra, x) -> RadicalExpr:
    if isinstance(x, RadicalExpr):
        return x
    return RadicalExpr.rational(alg.rf(x))


# -- equality exponents ----------------------------------------------------


def equality_exponents(
    alg: Algebra,
    csum: CollectedSum,
    region: Optional[Region] = None,
    lower: Optional[RadicalExpr] = None,
    direction: int = 1,
) -> list[EqualityExponent]:
    """Pairwise solutions of ``f_l(n) = f_m(n)``, merged and filtered.

    With ``lower`` set only values beyond it in the limit direction are kept;
    values whose side cannot be decided on ``region`` are kept (the caller
    splits on them).
    """
    parts = [(g.exp, exp_parts(alg, g.exp)) for g in csum.groups]
    found: dict = {}
    for (el, (al, bl)), (em, (am, bm)) in itertools.combinations(parts, 2):
        db = bl - bm
        if db.is_zero():
            continue
        try:
            v = (am - al) / db
        except ZeroDivisionError:
            continue
        pair = tuple(sorted((str(el), str(em))))
        found.setdefault(v, set()).add(pair)
    out = []
    for v, pairs in found.items():
        if lower is not None and region is not None:
            s = region.sign((v - lower) * direction)
            if s in (Sign.NEGATIVE, Sign.ZERO):
                continue
        out.append(EqualityExponent(v, tuple(sorted(pairs))))
    out.sort(key=lambda e: str(e.value))
    return out


# -- critical values -------------------------------------------------------


def _univariate_roots(alg: Algebra, p, param: str, bound: Optional[Bound] = None) -> list:
    """Exact real roots of a polynomial that only involves ``param``."""
    if p.is_ground:
        return []
    free = {alg.symbols[i].name for i in alg.free_indices(alg.field.new(p))}
    if free != {param}:
        return None
    x = alg.symbol(param)
    poly = sympy.Poly(p.as_expr(), x)
    roots = []
    for r in sorted(set(poly.real_roots())):
        val = to_fraction(r) if r.is_Rational else r
        if bound is not None and not bound.contains(float(val) if not isinstance(val, Fraction) else val):
            continue
        roots.append(val)
    return roots


def critical_params(
    alg: Algebra,
    eqs: Sequence[EqualityExponent],
    region: Region,
    param: Optional[str],
) -> list[CriticalValue]:
    """Collisions and divergences of equality exponents in ``param``."""
    if param is None:
        return []
    bound = region.bounds.get(alg.index(param), Bound())
    out: dict = {}

    def add(kind, val, eq, witness):
        key = (kind, str(val))
        if key in out:
            old = out[key]
            out[key] = CriticalValue(kind, param, val, old.equation, old.witness + "; " + witness)
        else:
            out[key] = CriticalValue(kind, param, val, eq, witness)

    for e in eqs:
        v = e.value
        dens = [v.a.denom] if v.is_rational else [v.a.denom, v.b.denom, v.d.numer, v.d.denom]
        for den in dens:
            roots = _univariate_roots(alg, den, param, bound)
            if roots is None:
                add("equality-exponent-divergence", None, f"{den.as_expr()} = 0", f"n={v}")
                continue
            for r in roots:
                add("equality-exponent-divergence", r, f"{param} = {r}", f"n={v}")
    for e1, e2 in itertools.combinations(eqs, 2):
        diff = e1.value - e2.value
        if not diff.is_rational:
            continue
        roots = _univariate_roots(alg, diff.a.numer, param, bound)
        if roots is None:
            add("equality-exponent-collision", None, f"{diff.a.numer.as_expr()} = 0", f"{e1.value} = {e2.value}")
            continue
        for r in roots:
            add("equality-exponent-collision", r, f"{param} = {r}", f"{e1.value} = {e2.value}")
    return sorted(out.values(), key=_critical_sort)


def _critical_sort(c: CriticalValue):
    v = c.value
    num = float(v) if v is not None else float("inf")
    return (num, c.kind, c.equation)


def param_subregions(alg: Algebra, region: Region, param: Optional[str], criticals: Sequence[CriticalValue]) -> list[SubRegion]:
    """Open intervals between rational critical values plus the points."""
    if param is None:
        return [SubRegion(region)]
    i = alg.index(param)
    base = region.bounds.get(i, Bound())
    pts = sorted({c.value for c in criticals if isinstance(c.value, Fraction) and base.contains(c.value)})
    edges = [None] + pts + [None]
    out = []
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        b = base.intersect(Bound(lo, hi, True, True))
        if not b.empty:
            out.append(SubRegion(region.with_bound(i, b), {}, b.describe(param)))
        if hi is not None:
            pb = Bound(hi, hi, False, False)
            out.append(SubRegion(region.with_bound(i, pb), {param: hi}, f"{param}={hi}"))
    return out


# -- ordering helpers ------------------------------------------------------


class Sampler:
    """Deterministic exact sample points inside a subregion."""

    def __init__(self, sub: SubRegion, seed: int = 2024):
        self.sub = sub
        self.alg = sub.region.alg
        self.rng = random.Random(seed)
        pt = sub.region.sample(self.rng)
        if pt is None:
            pt = sub.region.reference_point()
        for name, v in sub.values.items():
            pt[self.alg.index(name)] = Fraction(v)
        self.point = pt

    def value(self, x: RadicalExpr, n=None):
        pt = list(self.point)
        if n is not None:
            pt[self.alg.index(N_SYMBOL)] = n
        with mpmath.workdps(DPS):
            return radical_mp(x, pt, DPS)


def _mp_fraction(x) -> Fraction:
    return Fraction(mpmath.nstr(x, 40, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)).limit_denominator(10**30)


def compare(sub: SubRegion, a: RadicalExpr, b: RadicalExpr) -> Sign:
    """Sign of a - b on the subregion (exact, INDETERMINATE if unknown)."""
    if a == b:
        return Sign.ZERO
    return sub.region.sign(a - b)


def _sort_values(sub: SubRegion, values: list) -> tuple[list, Optional[tuple]]:
    """Sort values; return (sorted, offending pair) on indeterminacy."""
    out: list = []
    for v in values:
        pos = len(out)
        for j, w in enumerate(out):
            s = compare(sub, v, w)
            if s is Sign.INDETERMINATE:
                return out, (v, w)
            if s is Sign.NEGATIVE:
                pos = j
                break
            if s is Sign.ZERO:
                pos = None
                break
        if pos is not None:
            out.insert(pos, v)
    return out, None


def split_on(sub: SubRegion, diff: RadicalExpr) -> tuple[list[SubRegion], CriticalValue]:
    """Split a subregion on the sign of ``diff``; the zero set is critical."""
    alg = sub.region.alg
    hi = sub.with_constraint(make_constraint(alg, diff, ">"), f"{diff} > 0")
    lo = sub.with_constraint(make_constraint(alg, diff, "<"), f"{diff} < 0")
    crit = CriticalValue("equality-exponent-collision", None, None, f"{diff} = 0", "indeterminate comparison")
    parts = []
    for s in (hi, lo):
        if s.region.sample(random.Random(7)) is not None:
            parts.append(s)
    return parts, crit


def partition_cases(
    alg: Algebra,
    eqs: Sequence[EqualityExponent],
    sub: SubRegion,
    lower: Optional[RadicalExpr] = None,
    direction: int = 1,
    skip_points: Sequence = (),
    criticals: Optional[list] = None,
) -> list[CaseCondition]:
    """Open n-intervals between consecutive equality exponents plus points.

    ``lower`` (the previous exponent) bounds the admissible range in the
    limit direction.  Indeterminate comparisons split ``sub``; the zero set
    is appended to ``criticals``.
    """
    values = []
    for e in eqs:
        v = _specialize(alg, e.value, sub.values)
        if v is None:
            continue
        if v not in values:
            values.append(v)
    if lower is not None:
        kept = []
        for v in values:
            s = compare(sub, v, lower)
            s = -s if direction < 0 else s
            if s is Sign.POSITIVE:
                kept.append(v)
            elif s is Sign.INDETERMINATE:
                parts, crit = split_on(sub, (v - lower) * direction)
                if criticals is not None:
                    criticals.append(crit)
                out = []
                for p in parts:
                    out.extend(partition_cases(alg, eqs, p, lower, direction, skip_points, criticals))
                return out
        values = kept
    ordered, bad = _sort_values(sub, values)
    if bad is not None:
        parts, crit = split_on(sub, bad[0] - bad[1])
        if criticals is not None:
            criticals.append(crit)
        out = []
        for p in parts:
            out.extend(partition_cases(alg, eqs, p, lower, direction, skip_points, criticals))
        return out
    if direction < 0:
        ordered = ordered[::-1]
    cases: list[CaseCondition] = []
    # walk in the limit direction starting from the previous exponent
    prev = lower
    for v in ordered:
        lo, hi = (prev, v) if direction > 0 else (v, prev)
        cases.append(CaseCondition("interval", sub, lo, hi))
        if not any(v == s for s in skip_points):
            cases.append(CaseCondition("point", sub, point=v))
        prev = v
    lo, hi = (prev, None) if direction > 0 else (None, prev)
    cases.append(CaseCondition("interval", sub, lo, hi))
    return cases


def _specialize(alg: Algebra, v: RadicalExpr, values: dict) -> Optional[RadicalExpr]:
    if not values:
        return v
    try:
        return subs_radical(alg, v, {alg.index(k): RadicalExpr.rational(alg.const(x)) for k, x in values.items()})
    except (ZeroDivisionError, ValueError):
        return None


# -- sorting ---------------------------------------------------------------


def _interval_sample(sampler: Sampler, case: CaseCondition) -> Fraction:
    lo = None if case.lo is None else _mp_fraction(sampler.value(case.lo))
    hi = None if case.hi is None else _mp_fraction(sampler.value(case.hi))
    if lo is None and hi is None:
        return Fraction(-7, 3)
    if lo is None:
        return hi - Fraction(7, 5)
    if hi is None:
        return lo + Fraction(7, 5)
    return (lo + hi) / 2


def sort_case(alg: Algebra, csum: CollectedSum, case: CaseCondition, direction: int = 1) -> SortedCase:
    """Order the exponents on a case and merge the leading ties."""
    sampler = Sampler(case.sub)
    n_idx = alg.index(N_SYMBOL)
    if case.kind == "interval":
        n0 = _interval_sample(sampler, case)
        vals = [(sampler.value(g.exp, n0), g) for g in csum.groups]
        vals.sort(key=lambda vg: vals_key(vg[0], direction))
        lead = vals[0][0]
        tied = [g for v, g in vals if abs(v - lead) <= _TIE]
        if len(tied) > 1:
            raise IncomparableError(f"incomparable exponents {tied[0].exp} and {tied[1].exp}")
        g = tied[0]
        return SortedCase(case, [g2.exp for _, g2 in vals], [g.exp], g.exp, g.D)
    v = case.point
    subs = {n_idx: v}
    pointed = []
    for g in csum.groups:
        e = subs_radical(alg, g.exp, subs)
        pointed.append((sampler.value(e), e, g))
    pointed.sort(key=lambda t: vals_key(t[0], direction))
    lead_val, lead_exp = pointed[0][0], pointed[0][1]
    tied = [t for t in pointed if abs(t[0] - lead_val) <= _TIE]
    for t in tied:
        if t[1] != lead_exp:
            raise IncomparableError(f"incomparable exponents {lead_exp} and {t[1]}")
    D = tied[0][2].D.ctx.zero()
    for t in tied:
        D = D + t[2].D.subs(subs)
    order = []
    for _, e, _g in pointed:
        if e not in order:
            order.append(e)
    return SortedCase(case, order, [t[2].exp for t in tied], lead_exp, D)


def vals_key(v, direction: int):
    return v if direction > 0 else -v


def coalesce(sorted_cases: Sequence[SortedCase]) -> list[SortedCase]:
    """Join runs interval/point/interval that select the same single group.

    Points where two non-leading exponents cross do not change the leading
    group; they only split the interval.
    """
    out: list[SortedCase] = []
    for sc in sorted_cases:
        if out and sc.case.kind == "interval":
            prev = out[-1]
            joinable = prev.case.kind == "interval" and prev.selected == sc.selected
            if len(out) >= 2 and prev.case.kind == "point" and not prev.balance:
                before = out[-2]
                if before.case.kind == "interval" and before.selected == sc.selected == prev.selected:
                    out.pop()
                    prev = out[-1]
                    joinable = True
            if joinable:
                # cases arrive in the limit direction, which may be descending
                if prev.case.hi is not None and prev.case.hi == sc.case.lo or prev.case.lo is None:
                    lo, hi = prev.case.lo, sc.case.hi
                else:
                    lo, hi = sc.case.lo, prev.case.hi
                merged = CaseCondition("interval", sc.case.sub, lo, hi)
                out[-1] = SortedCase(merged, prev.order, prev.selected, prev.exp, prev.D)
                continue
        out.append(sc)
    return out


# -- tables ----------------------------------------------------------------


@dataclass
class TableRow:
    lo: Optional[RadicalExpr]
    hi: Optional[RadicalExpr]
    lo_closed: bool
    hi_closed: bool
    exp: RadicalExpr

    def describe(self, name: str = "n1") -> str:
        parts = []
        if self.lo is not None:
            parts.append(f"{self.lo}{'<=' if self.lo_closed else '<'}")
        parts.append(name)
        if self.hi is not None:
            parts.append(f"{'<=' if self.hi_closed else '<'}{self.hi}")
        return "".join(parts)


def table_rows(sorted_cases: Sequence[SortedCase], skipped: Sequence = ()) -> list[TableRow]:
    """Merge adjacent cases that select the same group.

    A point case joins the lower neighbour when that neighbour's group is in
    its balance, otherwise the upper one.  Skipped points (such as n = 0) are
    transparent.
    """
    rows: list[TableRow] = []
    items = list(sorted_cases)
    k = 0
    while k < len(items):
        sc = items[k]
        if sc.case.kind == "interval":
            g = sc.selected[0]
            if rows and rows[-1].exp == g and (rows[-1].hi_closed or rows[-1].hi in skipped):
                rows[-1].hi = sc.case.hi
                rows[-1].hi_closed = False
            else:
                rows.append(TableRow(sc.case.lo, sc.case.hi, False, False, g))
        else:
            if rows and rows[-1].exp in sc.selected:
                rows[-1].hi_closed = True
            else:
                nxt = items[k + 1] if k + 1 < len(items) else None
                if nxt is not None and nxt.case.kind == "interval" and nxt.selected[0] in sc.selected:
                    rows.append(TableRow(sc.case.point, nxt.case.hi, True, False, nxt.selected[0]))
                    k += 2
                    continue
                rows.append(TableRow(sc.case.point, sc.case.point, True, True, sc.selected[0]))
        k += 1
    return rows


# -- gaps and log merges ---------------------------------------------------


def gap_criticals(alg: Algebra, gap: RadicalExpr, region: Region, param: Optional[str], later_free: bool) -> list[CriticalValue]:
    """Zeros of the gap between consecutive exponents on the region closure.

    A square-root gap whose radicand vanishes where the gap does marks a
    branch point; the merge is logarithmic when the later coefficient is a
    free constant and a relabelling otherwise.
    """
    out = []
    names = [param] if param else [s.name for s in alg.symbols if s.name != N_SYMBOL]
    for name in names:
        i = alg.index(name)
        b = region.bounds.get(i, Bound())
        closure = Bound(b.lo, b.hi, False, False)
        merge = "logarithmic" if later_free else "relabel"
        if not gap.is_rational:
            roots = _univariate_roots(alg, gap.d.numer, name, closure)
            for r in roots or []:
                if not isinstance(r, Fraction):
                    continue
                at = subs_radical(alg, gap.a, {i: RadicalExpr.rational(alg.const(r))})
                if at.is_zero():
                    out.append(CriticalValue("exponent-branch-point", name, r, f"{name} = {r}", f"gap {gap}"))
                    out.append(CriticalValue("log-merge", name, r, f"{name} = {r}", f"{merge}; gap {gap}"))
            continue
        roots = _univariate_roots(alg, gap.a.numer, name, closure)
        for r in roots or []:
            kind = "log-merge" if later_free else "exponent-switch"
            out.append(CriticalValue(kind, name, r, f"{name} = {r}", f"{merge}; gap {gap}"))
    return out


def detect_log_merge(gap: RadicalExpr, alg: Algebra, param: str, value: Fraction, later_free: bool) -> list[str]:
    """Flags for a collision of consecutive exponents at ``param = value``."""
    i = alg.index(param)
    flags = []
    at = subs_radical(alg, gap.a, {i: RadicalExpr.rational(alg.const(value))})
    if not gap.is_rational:
        d = subs_radical(alg, gap.d, {i: RadicalExpr.rational(alg.const(value))})
        if d.is_zero() and at.is_zero():
            flags.append("branch-point")
    flags.append("logarithmic" if later_free else "relabel")
    return flags
