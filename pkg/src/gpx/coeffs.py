"""Leading balances, subleading coefficients and solution families."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
from sympy.polys.fields import FracElement

from .algebra.field import Algebra, AlgebraError
from .algebra.powers import PowerContext, PowerError, PowerSum, integer_part
from .algebra.radical import RadicalExpr
from .algebra.region import Constraint, Region, Sign, factor_poly, make_constraint, positivity_condition
from .algebra.solve import coeffs_in, solve_poly_symbolic, subs_radical
from .branching import CriticalValue, SortedCase, SubRegion
from .expansion import CollectedSum, SeriesTerm
from .frontend.problem import N_SYMBOL

log = logging.getLogger(__name__)


class BudgetError(RuntimeError):
    """More free constants than the order of the equation allows."""


@dataclass
class Family:
    terms: list  # SeriesTerm
    sub: SubRegion
    free: list = dc_field(default_factory=list)
    conditions: list = dc_field(default_factory=list)  # reported Constraints
    flags: list = dc_field(default_factory=list)
    provenance: list = dc_field(default_factory=list)
    status: str = "active"  # active, complete, pruned, excluded, unresolved
    notes: list = dc_field(default_factory=list)
    id: str = ""
    equation: Optional[tuple] = None  # (exponent, coefficients low -> high) when unresolved

    @property
    def region(self) -> Region:
        return self.sub.region

    @property
    def M(self) -> int:
        return len(self.terms)

    @property
    def exponents(self) -> list:
        return [t.exp for t in self.terms]

    @property
    def coefficients(self) -> list:
        return [t.coeff for t in self.terms]

    def child(self, **kw) -> "Family":
        base = dict(
            terms=list(self.terms),
            sub=self.sub,
            free=list(self.free),
            conditions=list(self.conditions),
            flags=list(self.flags),
            provenance=list(self.provenance),
            status=self.status,
            notes=list(self.notes),
            id=self.id,
            equation=self.equation,
        )
        base.update(kw)
        out = Family(**base)
        out.conditions = _dedupe_conditions(out.conditions)
        return out

    def signature(self) -> tuple:
        return tuple((str(t.exp), str(t.coeff)) for t in self.terms)


@dataclass
class SolveOutcome:
    kind: str  # determined, free, no-solution, identically-zero
    values: list = dc_field(default_factory=list)  # (PowerSum, [Constraint] region, [Constraint] reported, flags)
    note: str = ""
    polynomial: Optional[list] = None  # unresolved coefficients, low -> high


# -- helpers ---------------------------------------------------------------


def _classes(alg: Algebra, coll: dict) -> list[list]:
    """Split {exponent: coeff} into classes whose exponents differ by integers."""
    classes: list[list] = []
    for e, c in sorted(coll.items(), key=lambda ec: str(ec[0])):
        for cl in classes:
            d = e - cl[0][0]
            if alg.is_constant(d) and alg.constant_value(d).denominator == 1:
                cl.append((e, c))
                break
        else:
            classes.append([(e, c)])
    out = []
    for cl in classes:
        base = min(cl, key=lambda ec: alg.constant_value(ec[0] - cl[0][0]))[0]
        out.append(sorted(((int(alg.constant_value(e - base)), c) for e, c in cl), key=lambda kc: kc[0]) + [("base", base)])
    return out


def _poly_coeffs(cl: list) -> tuple[FracElement, list]:
    base = cl[-1][1]
    items = cl[:-1]
    deg = items[-1][0]
    coeffs = [None] * (deg + 1)
    for k, c in items:
        coeffs[k] = c
    return base, coeffs


def _as_radicals(ps: Sequence) -> Optional[list]:
    out = []
    for p in ps:
        if p is None:
            out.append(None)
            continue
        r = p.as_radical()
        if r is None:
            return None
        out.append(r)
    return out


def split_atoms(P: PowerSum) -> Optional[tuple]:
    """``P = atoms * value`` with a single atom monomial, else None."""
    alg = P.ctx.alg
    if P.is_zero():
        return P.ctx.one(), RadicalExpr.rational(alg.zero)
    if len(P.terms) != 1:
        r = P.as_radical()
        return (P.ctx.one(), r) if r is not None else None
    (key, coef), = P.terms.items()
    return PowerSum(P.ctx, {key: RadicalExpr.rational(alg.one)}), coef


def _positivity(region: Region, x) -> tuple[str, list]:
    try:
        return positivity_condition(region, x)
    except (AlgebraError, ZeroDivisionError):
        return "conditional", [Constraint(x if isinstance(x, RadicalExpr) else x, ">")]


def _numeric_roots(alg: Algebra, coeffs: list, dps: int = 60) -> list[Fraction]:
    """Real roots of a polynomial with constant coefficients as fractions."""
    vals = []
    for c in coeffs:
        if c is None:
            vals.append(mpmath.mpf(0))
            continue
        from .algebra.powers import radical_mp

        vals.append(radical_mp(c, [0] * len(alg.symbols), dps))
    with mpmath.workdps(dps):
        while vals and vals[-1] == 0:
            vals.pop()
        roots = mpmath.polyroots(list(reversed(vals)), maxsteps=200, extraprec=dps)
        out = []
        for z in roots:
            z = mpmath.mpc(z)
            if abs(z.imag) < mpmath.mpf(10) ** (-dps // 2):
                out.append(Fraction(mpmath.nstr(z.real, dps - 5, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)))
    return sorted(out)


def _region_is_numeric(alg: Algebra, region: Region, coeffs: Sequence) -> bool:
    for c in coeffs:
        if c is None:
            continue
        if c.free_symbols(alg):
            return False
    return True


def solve_coefficient(
    ctx: PowerContext,
    D: PowerSum,
    name: str,
    region: Region,
    sign: Optional[str] = None,
) -> SolveOutcome:
    """Nonzero real solutions of ``D(c) = 0`` for the named coefficient."""
    alg = ctx.alg
    coll = D.collect_symbol(name)
    if not coll:
        return SolveOutcome("identically-zero")
    if set(coll) == {alg.zero}:
        return SolveOutcome("no-solution", note=f"coefficient {D} does not involve {name}")
    classes = _classes(alg, coll)
    values = []
    if len(classes) == 1:
        base, coeffs = _poly_coeffs(classes[0])
        rads = _as_radicals(coeffs)
        if rads is None:
            return SolveOutcome("no-solution", note="coefficient of unsupported shape", values=[])
        zero = RadicalExpr.rational(alg.zero)
        rads = [r if r is not None else zero for r in rads]
        if len(rads) == 1:
            return SolveOutcome("no-solution", note=f"{name} cannot vanish")
        nz = [k for k, r in enumerate(rads) if not r.is_zero()]
        if len(nz) == 2 and nz[1] - nz[0] >= 2 and rads[nz[0]].free_symbols(alg):
            return _binomial_root(ctx, rads[nz[0]], rads[nz[1]], nz[1] - nz[0], region, sign)
        sol = solve_poly_symbolic(alg, rads)
        flags = []
        roots = [(r.value, list(r.conditions)) for r in sol.roots if not r.value.is_zero()]
        if sol.unresolved:
            if _region_is_numeric(alg, region, rads):
                for poly in sol.unresolved:
                    for fr in _numeric_roots(alg, poly):
                        if fr != 0:
                            roots.append((RadicalExpr.rational(alg.const(fr)), []))
                flags.append("numeric-root")
            else:
                flags.append("unresolved-symbolic")
        for val, conds in roots:
            reg, rep, ok = _realness(region, conds)
            if not ok:
                continue
            if sign is not None:
                target = val if sign == ">" else -val
                status, extra = _positivity(reg, target)
                if status == "refuted":
                    continue
                reg_constraints = extra
                rep = rep + extra
            else:
                reg_constraints = []
            values.append((ctx.const(val), reg_constraints + [c for c in _strict(conds)], rep, list(flags)))
        outcome = SolveOutcome("determined", values)
        if sol.unresolved and "unresolved-symbolic" in flags:
            outcome.note = "unresolved polynomial: " + " + ".join(f"({c})*{name}^{k}" for k, c in enumerate(sol.unresolved[0]))
            outcome.polynomial = list(sol.unresolved[0])
        return outcome
    if len(classes) == 2:
        (b1, c1), (b2, c2) = (_poly_coeffs(classes[0]), _poly_coeffs(classes[1]))
        if len(c1) != 1 or len(c2) != 1:
            return SolveOutcome("no-solution", note="mixed power classes with several terms", values=[])
        # A c^b1 + B c^b2 = 0  ->  c^(b1-b2) = -B/A
        A, B = c1[0], c2[0]
        delta = b1 - b2
        ratio = -(B / A)
        rr = ratio.as_radical()
        if rr is None:
            return SolveOutcome("no-solution", note="ratio of unsupported shape")
        status, extra = _positivity(region, rr)
        if status == "refuted":
            return SolveOutcome("no-solution", note=f"{rr} > 0 fails on the region")
        try:
            val = ratio.pow(alg.one / delta)
        except PowerError as exc:
            return SolveOutcome("no-solution", note=str(exc))
        rep = [Constraint(rr, ">")] if status == "conditional" else []
        return SolveOutcome("determined", [(val, extra, rep, [])])
    return SolveOutcome("no-solution", note="more than two classes of powers", values=[])


def _binomial_root(ctx: PowerContext, a: RadicalExpr, b: RadicalExpr, d: int, region: Region, sign) -> SolveOutcome:
    """Real roots of ``a + b c^d = 0`` through a symbolic d-th root."""
    alg = ctx.alg
    ratio = -(a / b)
    out = []
    for s in (1, -1):
        if d % 2 == 1:
            base = ratio if s == 1 else -ratio
            cands = [(s, base)]
        else:
            if s == -1:
                break
            cands = [(1, ratio), (-1, ratio)]
        for sgn, base in cands:
            if sign is not None and (sgn > 0) != (sign == ">"):
                continue
            status, extra = _positivity(region, base)
            if status == "refuted":
                continue
            try:
                val = ctx.const(base).pow(alg.one / d) * sgn
            except PowerError:
                continue
            rep = [Constraint(base, ">")] if status == "conditional" else []
            out.append((val, extra, rep, []))
    if not out:
        return SolveOutcome("no-solution", note=f"no real root of c^{d} = {ratio}")
    return SolveOutcome("determined", out)


def _strict(conds: Sequence[Constraint]) -> list[Constraint]:
    return [Constraint(c.expr, ">") if c.rel == ">=" else c for c in conds]


def _realness(region: Region, conds: Sequence[Constraint]) -> tuple[Region, list, bool]:
    """Drop roots whose realness condition fails everywhere on the region."""
    rep = []
    for c in conds:
        s = region.sign(c.expr)
        if s is Sign.NEGATIVE:
            return region, [], False
        if s is Sign.POSITIVE:
            continue
        rep.append(c)
    return region, rep, True


# -- leading term ----------------------------------------------------------


def _n_of(sc: SortedCase) -> Optional[RadicalExpr]:
    return sc.case.point if sc.case.kind == "point" else None


def _inside(region: Region, x: RadicalExpr, lo, hi) -> tuple[str, list]:
    """Is ``lo < x < hi`` on the region? (proved/refuted/conditional)."""
    conds = []
    status = "proved"
    for diff in ([x - lo] if lo is not None else []) + ([hi - x] if hi is not None else []):
        st, extra = _positivity(region, diff)
        if st == "refuted":
            return "refuted", []
        if st == "conditional":
            status = "conditional"
            conds.extend(extra)
    if status == "conditional" and not _satisfiable(region, conds):
        return "refuted", []
    return status, conds


def _satisfiable(region: Region, conds: Sequence[Constraint]) -> bool:
    """Some sample point of the region meets every condition."""
    reg = region.with_constraints(*conds)
    return reg.sample(random.Random(2024), tries=6000) is not None


def _n_constraints(alg: Algebra, region: Region, n: RadicalExpr, rules: Sequence) -> tuple[str, list]:
    status = "proved"
    conds = []
    for rel, val in rules:
        diff = n - RadicalExpr.rational(alg.const(val))
        if rel in ("<", "<="):
            diff = -diff
        st, extra = _positivity(region, diff)
        if st == "refuted" and not (rel in ("<=", ">=") and diff.is_zero()):
            return "refuted", []
        if st == "conditional":
            status = "conditional"
            conds.extend(extra)
    return status, conds


def coefficient_roots(alg: Algebra, Q: RadicalExpr, region: Region, where: str) -> list[CriticalValue]:
    """Parameter factors of Q with undecided sign (leading group may vanish)."""
    out = []
    if not Q.is_rational:
        return out
    n_idx = alg.index(N_SYMBOL)
    _, facs = factor_poly(Q.a.numer)
    for p, _k in facs:
        if p.degree(n_idx) > 0:
            continue
        s = region.factor_sign(p)
        if not s.definite:
            out.append(CriticalValue("coefficient-root", None, None, f"{p.as_expr()} = 0", f"{where} vanishes identically"))
    return out


def leading_solutions(
    ctx: PowerContext,
    sc: SortedCase,
    sub: SubRegion,
    order: int,
    sign: Optional[str] = None,
    exp_rules: Sequence = (),
    provenance: Sequence[str] = (),
) -> tuple[list[Family], list[CriticalValue]]:
    """Families (c1, n1) from one sorted case at M = 1."""
    alg = ctx.alg
    region = sub.region
    name = "c1"
    fams: list[Family] = []
    crit: list[CriticalValue] = []
    where = f"D({sc.exp})"
    prov = list(provenance) + [sc.case.describe("n1")]
    if sc.case.kind == "point":
        n1 = sc.case.point
        out = solve_coefficient(ctx, sc.D, name, region, sign)
        for val, reg_c, rep, flags in out.values:
            st, nconds = _n_constraints(alg, region, n1, exp_rules)
            fam_sub = SubRegion(region.with_constraints(*reg_c), dict(sub.values), sub.label, sub.assumptions)
            fam = Family([SeriesTerm(val, n1)], fam_sub, [], list(rep), list(flags), prov)
            if st == "refuted":
                fam.status = "excluded"
                fam.notes.append(f"n1 = {n1} violates the exponent assumption")
            elif st == "conditional":
                fam.conditions.extend(nconds)
                fam.sub = SubRegion(fam.sub.region.with_constraints(*nconds), dict(sub.values), sub.label, sub.assumptions)
            if "unresolved-symbolic" in flags:
                fam.status = "unresolved"
            fams.append(fam)
        if out.note and "unresolved-symbolic" in " ".join(f for v in out.values for f in v[3]):
            for f in fams:
                f.notes.append(out.note)
        if out.kind == "determined" and not out.values and out.note:
            fams.append(Family([], sub, status="unresolved", notes=[out.note], provenance=prov, equation=(n1, out.polynomial)))
        return fams, crit
    # interval case: D = sum_k c^k Q_k(n), c arbitrary needs every Q_k(n) = 0
    coll = sc.D.collect_symbol(name)
    Qs = []
    for e, part in coll.items():
        sp = split_atoms(part)
        if sp is None:
            return fams, crit
        Qs.append(sp[1])
    if not Qs:
        return fams, crit
    first = Qs[0]
    crit.extend(coefficient_roots(alg, first, region, where))
    try:
        cs = coeffs_in(alg, first, N_SYMBOL)
    except AlgebraError:
        return fams, crit
    if len(cs) < 2:
        return fams, crit
    sol = solve_poly_symbolic(alg, cs)
    n_idx = alg.index(N_SYMBOL)
    for root in sol.roots:
        n1 = root.value
        if n1.is_zero():
            continue
        if any(not subs_radical(alg, Q, {n_idx: n1}).is_zero() for Q in Qs[1:]):
            continue
        fam_sub = sub
        conds = list(root.conditions)
        status, iconds = _inside(region, n1, sc.case.lo, sc.case.hi)
        fam = Family([SeriesTerm(ctx.symbol(name), n1)], fam_sub, [name], conds, [], prov)
        fam.notes.append(f"{name} arbitrary")
        if status == "refuted":
            fam.status = "excluded"
            where = ", ".join(region.describe())
            fam.notes.append(f"n1 = {n1} lies outside {sc.case.describe('n1')}" + (f" on {where}" if where else ""))
        else:
            if status == "conditional":
                fam.conditions.extend(iconds)
            st, nconds = _n_constraints(alg, region, n1, exp_rules)
            if st == "refuted":
                fam.status = "excluded"
                fam.notes.append(f"n1 = {n1} violates the exponent assumption")
            else:
                fam.conditions.extend(nconds)
            extra = _strict(conds) + iconds + nconds
            if extra:
                fam.sub = SubRegion(region.with_constraints(*extra), dict(sub.values), sub.label, sub.assumptions)
        fams.append(fam)
    return fams, crit


# -- later terms -----------------------------------------------------------


def _affine_parts(D: PowerSum, name: str):
    coll = D.collect_symbol(name)
    alg = D.ctx.alg
    K = coll.pop(alg.zero, D.ctx.zero())
    L = coll.pop(alg.one, D.ctx.zero())
    return K, L, coll


def next_term(
    fam: Family,
    sc: SortedCase,
    M: int,
    order: int,
    sign_free: bool = True,
) -> tuple[list[Family], str]:
    """Children of ``fam`` from one sorted case at step M, plus a note."""
    ctx = sc.D.ctx
    alg = ctx.alg
    name = f"c{M}"
    prov = fam.provenance + [sc.case.describe(f"n{M}")]
    region = sc.case.sub.region
    sub = sc.case.sub
    if sc.case.kind == "point":
        nM = sc.case.point
        K, L, rest = _affine_parts(sc.D, name)
        if rest:
            flagged = fam.child(status="unresolved", flags=fam.flags + ["nonlinear-c_M"], provenance=prov)
            flagged.notes.append(f"D({sc.exp}) is nonlinear in {name}")
            return [flagged], f"nonlinear in {name} at {sc.exp}"
        if L.is_zero():
            if K.is_zero():
                return [_extend(fam, sub, ctx.symbol(name), nM, prov, free=name, order=order)], f"{name} free"
            return [], f"no solution: D({sc.exp}) = {K}"
        if K.is_zero():
            return [], f"{name} = 0"
        try:
            val = -(K / L)
        except PowerError:
            Lr = L.as_radical()
            if Lr is None:
                return [], f"cannot divide by {L}"
            val = -(K * ctx.const(Lr.inverse()))
        return [_extend(fam, sub, val, nM, prov, order=order)], f"{name} determined"
    coll = sc.D.collect_symbol(name)
    if set(coll) <= {alg.zero}:
        return [], f"no solution: D({sc.exp}) = {sc.D}"
    Qs = []
    for e, part in coll.items():
        if e == 0:
            return [], f"no solution: D({sc.exp}) has a known part"
        sp = split_atoms(part)
        if sp is None:
            return [], f"coefficient of unsupported shape in D({sc.exp})"
        Qs.append(sp[1])
    try:
        cs = coeffs_in(alg, Qs[0], N_SYMBOL)
    except AlgebraError:
        return [], "exponent equation not polynomial"
    if len(cs) < 2:
        return [], f"no solution: D({sc.exp}) = {sc.D}"
    sol = solve_poly_symbolic(alg, cs)
    n_idx = alg.index(N_SYMBOL)
    out = []
    notes = []
    for root in sol.roots:
        nM = root.value
        if any(not subs_radical(alg, Q, {n_idx: nM}).is_zero() for Q in Qs[1:]):
            continue
        status, iconds = _inside(region, nM, sc.case.lo, sc.case.hi)
        if status == "refuted":
            notes.append(f"root n{M} = {nM} outside {sc.case.describe(f'n{M}')}")
            continue
        extra = _strict(root.conditions) + iconds
        nsub = SubRegion(region.with_constraints(*extra), dict(sub.values), sub.label, sub.assumptions) if extra else sub
        child = _extend(fam, nsub, ctx.symbol(name), nM, prov, free=name, order=order)
        child.conditions = _dedupe_conditions(child.conditions + list(root.conditions) + iconds)
        out.append(child)
    if not out:
        return [], "; ".join(notes) or f"no root of D({sc.exp}) in the case"
    return out, f"{name} free"


def _extend(fam: Family, sub: SubRegion, coeff: PowerSum, exp: RadicalExpr, prov, free: Optional[str] = None, order: int = 2) -> Family:
    terms = [SeriesTerm(t.coeff.with_context(coeff.ctx), t.exp) for t in fam.terms] + [SeriesTerm(coeff, exp)]
    frees = list(fam.free) + ([free] if free else [])
    if len(frees) > max(order - 1, 0):
        raise BudgetError(f"free-constant budget exceeded: {frees} for order {order}")
    return fam.child(terms=terms, sub=sub, free=frees, provenance=list(prov), status="active")


def _dedupe_conditions(conds: Sequence[Constraint]) -> list:
    seen = set()
    out = []
    for c in conds:
        key = c.describe()
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def exact_solution_detect(csum: CollectedSum, sc: SortedCase) -> Optional[dict]:
    """All collected groups balance at once: report the single equation."""
    if sc.case.kind != "point" or len(sc.selected) != csum.R or csum.R < 2:
        return None
    return {"n": sc.case.point, "equation": sc.D, "exponent": sc.exp}


def known_residual_vanishes(csum: CollectedSum) -> bool:
    """True when a fully known truncation solves the equation exactly."""
    return csum.R == 0
