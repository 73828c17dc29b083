"""End-to-end expansion: leading balances, case branching, later terms."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

import mpmath

from .algebra.powers import PowerContext, PowerSum
from .algebra.radical import RadicalExpr
from .algebra.region import Bound, Constraint
from .algebra.solve import subs_radical
from .branching import (
    CriticalValue,
    SortedCase,
    SubRegion,
    _univariate_roots,
    critical_params,
    equality_exponents,
    gap_criticals,
    param_subregions,
    partition_cases,
    coalesce,
    sort_case,
    table_rows,
)
from .coeffs import Family, exact_solution_detect, leading_solutions, next_term
from .expansion import CollectedSum, SeriesTerm, collect_terms, substitute_leading, substitute_truncation
from .frontend.problem import Problem

log = logging.getLogger(__name__)


class InvariantError(RuntimeError):
    """Internal consistency failure (exit code 3 at the CLI)."""


@dataclass
class Block:
    """The M = 1 analysis on one slice of parameter space."""

    sub: SubRegion
    csum: CollectedSum
    equality: list
    cases: list  # SortedCase
    rows: list  # TableRow
    exact: Optional[dict] = None


@dataclass
class StepRecord:
    family: str
    M: int
    case: str
    outcome: str


@dataclass
class ExpansionResult:
    problem: Problem
    csum: CollectedSum  # M = 1, all parameters symbolic
    equality: list  # N_1e (zero excluded)
    criticals: list
    blocks: list
    families: list
    steps: list = dc_field(default_factory=list)
    table: list = dc_field(default_factory=list)  # merged blocks: (label, rows)

    def family(self, fid: str) -> Family:
        for f in self.families:
            if f.id == fid:
                return f
        raise KeyError(fid)

    def active(self) -> list:
        return [f for f in self.families if f.status in ("active", "complete")]


def _zero(alg) -> RadicalExpr:
    return RadicalExpr.rational(alg.zero)


def _label(sub: SubRegion) -> str:
    return sub.label


# -- M = 1 -----------------------------------------------------------------


def leading_analysis(problem: Problem) -> tuple:
    ode = problem.ode
    alg = problem.alg
    region = problem.region()
    param = problem.exponent_param
    direction = problem.config.direction
    ctx = PowerContext(alg, region)
    csum = collect_terms(substitute_leading(ode, ctx))
    eqs = equality_exponents(alg, csum, region)
    crits = critical_params(alg, eqs, region, param)
    zero = _zero(alg)
    blocks = []
    families = []
    extra_crit: list = []
    for sub in param_subregions(alg, region, param, crits):
        ode_s = ode.specialize(sub.values) if sub.values else ode
        ctx_s = PowerContext(alg, sub.region)
        cs = collect_terms(substitute_leading(ode_s, ctx_s))
        eq_s = equality_exponents(alg, cs, sub.region)
        cases = partition_cases(alg, eq_s, sub, direction=direction, skip_points=[zero], criticals=extra_crit)
        by_sub: dict = {}
        for c in cases:
            by_sub.setdefault(id(c.sub), []).append(c)
        for group in by_sub.values():
            csub = group[0].sub
            sorted_cases = coalesce([sort_case(alg, cs, c, direction) for c in group])
            ascending = sorted_cases if direction > 0 else sorted_cases[::-1]
            rows = table_rows(ascending, skipped=[zero])
            exact = None
            for sc in sorted_cases:
                exact = exact or exact_solution_detect(cs, sc)
            blocks.append(Block(csub, cs, eq_s, sorted_cases, rows, exact))
            ctx_c = PowerContext(alg, csub.region)
            for sc in sorted_cases:
                fams, cr = leading_solutions(
                    ctx_c,
                    sc,
                    csub,
                    ode.order,
                    problem.config.leading_sign,
                    problem.config.leading_exponent,
                    provenance=[csub.label] + list(csub.assumptions),
                )
                if exact is not None and sc.case.kind == "point" and sc.case.point == exact["n"]:
                    for f in fams:
                        f.flags.append("exact")
                        f.notes.append(f"y = c1*t^({exact['n']}) solves the equation exactly")
                families.extend(fams)
                extra_crit.extend(cr)
    reported = [e for e in eqs if not e.value.is_zero()]
    return csum, reported, crits + extra_crit, blocks, families


# -- merging across parameter slices ---------------------------------------


def _param_bound(fam: Family, idx: int) -> Bound:
    return fam.region.bounds.get(idx, Bound())


def _specialized_terms(alg, fam: Family, name: str, value: Fraction):
    idx = alg.index(name)
    val = RadicalExpr.rational(alg.const(value))
    out = []
    for t in fam.terms:
        out.append((subs_radical(alg, t.exp, {idx: val}), t.coeff.subs({name: val})))
    return out


def _same_terms(a, b, region=None) -> bool:
    """Exact match, or equal values at a few sample points of ``region``.

    Normal forms of symbolic powers are not canonical across a
    specialization (``6^(2/3)`` against ``2^(2/3) 3^(2/3)``).
    """
    if len(a) != len(b):
        return False
    if any(x[0] != y[0] for x, y in zip(a, b)):
        return False
    if all(x[1] == y[1] for x, y in zip(a, b)):
        return True
    if region is None:
        return False
    rng = random.Random(7)
    alg = region.alg
    syms = {}
    for _ in range(3):
        pt = region.sample(rng)
        if pt is None:
            return False
        point = {s.name: v for s, v in zip(alg.symbols, pt)}
        for (_, cx), (_, cy) in zip(a, b):
            for name in cx.symbols() | cy.symbols():
                syms.setdefault(name, 1)
            vx = cx.evalf(point, syms, 40)
            vy = cy.evalf(point, syms, 40)
            if abs(vx - vy) > mpmath.mpf(10) ** -30 * (1 + abs(vx)):
                return False
    return True


def _union(b1: Bound, b2: Bound) -> Optional[Bound]:
    """Union of two touching intervals, or None if there is a gap."""
    first, second = sorted((b1, b2), key=lambda b: (b.lo is not None, b.lo if b.lo is not None else 0))
    if first.hi is None:
        return first
    if second.lo is None:
        return None
    if first.hi > second.lo or (first.hi == second.lo and not (first.hi_open and second.lo_open)):
        hi, hi_open = (second.hi, second.hi_open)
        if second.hi is not None and first.hi is not None and first.hi > second.hi:
            hi, hi_open = first.hi, first.hi_open
        return Bound(first.lo, hi, first.lo_open, hi_open)
    return None


def merge_families(problem: Problem, families: list) -> list:
    """Join identical families from adjacent slices of the exponent parameter."""
    param = problem.exponent_param
    if param is None:
        return families
    alg = problem.alg
    idx = alg.index(param)
    points = [f for f in families if param in f.sub.values]
    intervals = [f for f in families if param not in f.sub.values]
    absorbed = set()
    grown: dict = {}
    for f in intervals:
        if f.status not in ("active", "excluded"):
            continue
        b = _param_bound(f, idx)
        for p in points:
            if id(p) in absorbed or p.status != f.status:
                continue
            v = Fraction(p.sub.values[param])
            if not (v == b.lo or v == b.hi):
                continue
            if p.sub.assumptions != f.sub.assumptions:
                continue
            try:
                spec_terms = _specialized_terms(alg, f, param, v)
            except Exception:  # noqa: BLE001 - a singular specialization just means no merge
                continue
            mine = [(t.exp, t.coeff) for t in p.terms]
            if _same_terms(spec_terms, mine, p.region):
                absorbed.add(id(p))
                nb = grown.get(id(f), b)
                grown[id(f)] = _union(nb, Bound(v, v, False, False)) or nb
    for f in intervals:
        if id(f) in grown:
            f.sub = SubRegion(f.region.copy(), dict(f.sub.values), f.sub.label, f.sub.assumptions)
            f.sub.region.bounds[idx] = grown[id(f)]
            f.sub.region._cache = {}
    remaining = [f for f in points if id(f) not in absorbed]
    merged: list = []
    for f in sorted(intervals, key=lambda f: _bound_key(_param_bound(f, idx))):
        for g in merged:
            if g.status != f.status or g.signature() != f.signature() or g.sub.assumptions != f.sub.assumptions:
                continue
            if [c.describe() for c in g.conditions] != [c.describe() for c in f.conditions]:
                continue
            u = _union(_param_bound(g, idx), _param_bound(f, idx))
            if u is None:
                continue
            g.sub.region.bounds[idx] = u
            g.sub.region._cache = {}
            g.sub = SubRegion(g.sub.region, g.sub.values, u.describe(param), g.sub.assumptions)
            g.provenance = [u.describe(param)] + g.provenance[1:]
            break
        else:
            g = f.child()
            g.sub = SubRegion(f.region.copy(), dict(f.sub.values), f.sub.label, f.sub.assumptions)
            b = _param_bound(g, idx)
            g.sub.label = b.describe(param)
            g.provenance = [g.sub.label] + g.provenance[1:]
            merged.append(g)
    return merged + remaining


def _bound_key(b: Bound):
    return (b.lo is not None, float(b.lo) if b.lo is not None else 0.0)


# -- later terms -------------------------------------------------------------


def _family_setup(problem: Problem, fam: Family):
    alg = problem.alg
    ode = problem.ode.specialize(fam.sub.values) if fam.sub.values else problem.ode
    ctx = PowerContext(alg, fam.region)
    known = [SeriesTerm(t.coeff.with_context(ctx), t.exp) for t in fam.terms]
    return ode, ctx, known


def _specialize_family(problem: Problem, fam: Family, sub: SubRegion) -> list:
    """Known terms with the slice's point values substituted."""
    alg = problem.alg
    ctx = PowerContext(alg, sub.region)
    if not sub.values:
        return [SeriesTerm(t.coeff.with_context(ctx), t.exp) for t in fam.terms]
    vals = {k: RadicalExpr.rational(alg.const(v)) for k, v in sub.values.items()}
    idx = {alg.index(k): v for k, v in vals.items()}
    return [SeriesTerm(t.coeff.with_context(ctx).subs(vals), subs_radical(alg, t.exp, idx)) for t in fam.terms]


def extend_family(problem: Problem, fam: Family, M: int, steps: list, crits: list) -> list:
    """All children of ``fam`` at step M; empty when none survive."""
    alg = problem.alg
    direction = problem.config.direction
    param = problem.exponent_param if problem.exponent_param not in fam.sub.values else None
    ode, ctx, known = _family_setup(problem, fam)
    done = substitute_truncation(ode, ctx, known, None, degree=M - 1)
    if done.R == 0 and "exact" not in fam.flags:
        fam.flags.append("exact")
        fam.notes.append(f"the {M - 1}-term truncation solves the equation exactly")
    name = f"c{M}"
    csum = substitute_truncation(ode, ctx, known, name)
    lower = known[-1].exp
    eqs = equality_exponents(alg, csum, fam.region, lower, direction)
    local = critical_params(alg, eqs, fam.region, param)
    crits.extend(local)
    children = []
    for sub in param_subregions(alg, fam.region, param, local):
        sub = SubRegion(sub.region, {**fam.sub.values, **sub.values}, sub.label, fam.sub.assumptions)
        if sub.values != fam.sub.values:
            known_s = _specialize_family(problem, fam, sub)
            ode_s = problem.ode.specialize(sub.values)
            ctx_s = PowerContext(alg, sub.region)
            cs = substitute_truncation(ode_s, ctx_s, known_s, name)
            eq_s = equality_exponents(alg, cs, sub.region, known_s[-1].exp, direction)
            low = known_s[-1].exp
            base = fam.child(terms=known_s, sub=sub)
        else:
            cs, eq_s, low, base = csum, eqs, lower, fam
        extra: list = []
        cases = partition_cases(alg, eq_s, sub, lower=low, direction=direction, criticals=extra)
        crits.extend(extra)
        for sc in coalesce([sort_case(alg, cs, case, direction) for case in cases]):
            case = sc.case
            cbase = base if case.sub is sub else base.child(sub=case.sub)
            kids, note = next_term(cbase, sc, M, ode.order)
            steps.append(StepRecord(fam.id, M, f"{case.sub.label}: {case.describe(f'n{M}')} -> D({sc.exp})", note))
            children.extend(kids)
    return children


def _family_key(f: Family) -> tuple:
    return (" / ".join(f.provenance), f.signature())


def run_expand(problem: Problem, order: Optional[int] = None) -> ExpansionResult:
    order = order or problem.config.order
    if problem.values:
        problem = _numeric_problem(problem)
    csum, eqs, crits, blocks, families = leading_analysis(problem)
    families = merge_families(problem, families)
    _assign_ids(families)
    crits.extend(_realness_criticals(problem, families))
    steps: list = []
    final = [f for f in families if f.status != "active"]
    current = [f for f in families if f.status == "active"]
    for M in range(2, order + 1):
        nxt = []
        for fam in current:
            kids = extend_family(problem, fam, M, steps, crits)
            if not kids:
                fam.status = "complete" if "exact" in fam.flags else "terminated"
                fam.notes.append(f"no admissible term at order {M}")
                final.append(fam)
                continue
            for k in kids:
                k.id = fam.id
            nxt.extend(k for k in kids if k.status == "active")
            final.extend(k for k in kids if k.status != "active")
        nxt = merge_families(problem, nxt)
        _assign_child_ids(nxt)
        current = nxt
    final.extend(current)
    for f in final:
        crits.extend(_gap_criticals(problem, f))
    final.sort(key=lambda f: (_id_key(f.id), _family_key(f)))
    result = ExpansionResult(problem, csum, eqs, _dedupe(crits), blocks, final, steps)
    result.table = merge_table(problem, blocks)
    return result


def _numeric_problem(problem: Problem) -> Problem:
    """Substitute every valued parameter into the operator up front."""
    from dataclasses import replace

    ode = problem.numeric_ode()
    params = tuple(replace(p, bound=Bound(p.value, p.value, False, False)) if p.value is not None else p for p in problem.params)
    return Problem(ode, problem.config, params, ode.exponent_param, problem.text, problem.source)


def _id_key(fid: str):
    parts = fid[1:].split(".") if fid.startswith("F") else [fid]
    return tuple(int(p) if p.isdigit() else 0 for p in parts)


def _assign_ids(families: list) -> None:
    families.sort(key=_family_key)
    k = 0
    for f in families:
        k += 1
        f.id = f"F{k}"


def _assign_child_ids(families: list) -> None:
    by_parent: dict = {}
    for f in families:
        by_parent.setdefault(f.id, []).append(f)
    for pid, kids in by_parent.items():
        if len(kids) == 1:
            continue
        kids.sort(key=_family_key)
        for j, f in enumerate(kids, start=1):
            f.id = f"{pid}.{j}"


def _dedupe(crits: list) -> list:
    seen = {}
    for c in crits:
        seen.setdefault(c.key(), c)
    return sorted(seen.values(), key=lambda c: (float(c.value) if isinstance(c.value, Fraction) else float("inf"), c.kind, c.equation))


def _realness_criticals(problem: Problem, families: list) -> list:
    alg = problem.alg
    base = problem.region()
    out = []
    for f in families:
        for c in f.conditions:
            if c.rel != ">=" or not c.expr.is_rational:
                continue
            num = c.expr.a.numer
            for s in alg.symbols:
                if s.name == "n":
                    continue
                roots = _univariate_roots(alg, num, s.name, base.bounds.get(alg.index(s.name)))
                for r in roots or []:
                    out.append(CriticalValue("coefficient-branch-point", s.name, r, f"{s.name} = {r}", f"{f.id}: {c.describe()} (coefficients turn complex)"))
    return out


def _gap_criticals(problem: Problem, fam: Family) -> list:
    alg = problem.alg
    out = []
    for j in range(len(fam.terms) - 1):
        gap = fam.terms[j + 1].exp - fam.terms[j].exp
        later = f"c{j + 2}"
        free = later in fam.free
        for c in gap_criticals(alg, gap, fam.region, problem.exponent_param, free):
            out.append(CriticalValue(c.kind, c.param, c.value, c.equation, f"{fam.id}: n{j + 2}-n{j + 1}; {c.witness}"))
    return out


# -- Table of leading exponents ---------------------------------------------


def _rows_key(rows) -> tuple:
    return tuple((r.describe(), str(r.exp)) for r in rows)


def merge_table(problem: Problem, blocks: list) -> list:
    """Join adjacent slices whose tables agree (points specialized)."""
    param = problem.exponent_param
    alg = problem.alg
    out: list = []
    for b in blocks:
        key = _rows_key(b.rows)
        if out and param is not None:
            label, rows, last, bound = out[-1]
            if param in b.sub.values:
                v = Fraction(b.sub.values[param])
                if _rows_match_at(alg, param, last.rows, b.rows, v) and (bound.hi == v):
                    nb = _union(bound, Bound(v, v, False, False))
                    out[-1] = (nb.describe(param), rows, last, nb)
                    continue
            elif param not in last.sub.values and key == _rows_key(last.rows):
                bb = b.sub.region.bounds.get(alg.index(param), Bound())
                nb = _union(bound, bb)
                if nb is not None:
                    out[-1] = (nb.describe(param), rows, b, nb)
                    continue
        bb = b.sub.region.bounds.get(alg.index(param), Bound()) if param else Bound()
        out.append((b.sub.label, b.rows, b, bb))
    return [(label, rows) for label, rows, _, _ in out]


def _rows_match_at(alg, param, rows, prow, v) -> bool:
    if len(rows) != len(prow):
        return False
    idx = alg.index(param)
    val = {idx: RadicalExpr.rational(alg.const(v))}
    for r, p in zip(rows, prow):
        try:
            if subs_radical(alg, r.exp, val) != p.exp:
                return False
            for a, b in ((r.lo, p.lo), (r.hi, p.hi)):
                if (a is None) != (b is None):
                    return False
                if a is not None and subs_radical(alg, a, val) != b:
                    return False
        except Exception:  # noqa: BLE001 - a pole at the point means no match
            return False
        if (r.lo_closed, r.hi_closed) != (p.lo_closed, p.hi_closed):
            return False
    return True
