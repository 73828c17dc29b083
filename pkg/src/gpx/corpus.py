"""Regression corpus: engine output against stored exact results.

Expected values live in ``data/expected.json`` as sympy-parsable strings
and are compared through the exact algebra, never numerically.
"""
from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional

import sympy

from .algebra.field import Algebra
from .algebra.powers import PowerContext, PowerSum, powersum_from_expr
from .algebra.radical import RadicalExpr, radical_from_expr
from .algebra.region import Bound, positivity_condition
from .coeffs import Family
from .expansion import SeriesTerm, substitute_truncation
from .frontend.problem import Problem, load_problem
from .pipeline import ExpansionResult, run_expand

log = logging.getLogger(__name__)


@dataclass
class CorpusRow:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def data_path(name: str):
    return resources.files("gpx") / "data" / name


def load_expected() -> dict:
    return json.loads(data_path("expected.json").read_text())


def fixture(name: str) -> Problem:
    return load_problem(str(data_path(name)))


@lru_cache(maxsize=8)
def _run(name: str, order: Optional[int] = None) -> ExpansionResult:
    return run_expand(fixture(name), order)


# -- parsing expected strings ----------------------------------------------


def parse_exact(alg: Algebra, text: str, extra: tuple = ()) -> sympy.Expr:
    """Parse with the field symbols (so ``gamma`` is a symbol, not a function)."""
    local = {s.name: s for s in alg.symbols}
    for name in extra:
        local[name] = sympy.Symbol(name)
    return sympy.parse_expr(text, local_dict=local)


def rad(alg: Algebra, text: str) -> RadicalExpr:
    return radical_from_expr(alg, parse_exact(alg, text))


def psum(ctx: PowerContext, text: str, extra: tuple = ()) -> PowerSum:
    return powersum_from_expr(ctx, parse_exact(ctx.alg, text, extra))


def same_psum(a: PowerSum, b: PowerSum) -> bool:
    return (a - b.with_context(a.ctx)).is_zero()


# -- lookups ---------------------------------------------------------------


def find_family(
    result: ExpansionResult, c1: str, n1: Optional[str] = None, statuses=("active", "complete"), n2: Optional[str] = None
) -> Optional[Family]:
    alg = result.problem.alg
    for f in result.families:
        if f.status not in statuses or not f.terms:
            continue
        if n1 is not None and f.terms[0].exp != rad(alg, n1):
            continue
        if n2 is not None and (f.M < 2 or f.terms[1].exp != rad(alg, n2)):
            continue
        try:
            want = psum(f.terms[0].coeff.ctx, c1)
        except Exception:  # noqa: BLE001 - shape outside the normal form: not this family
            continue
        if same_psum(f.terms[0].coeff, want):
            return f
    return None


def _block_of(f: Family, alg: Algebra, param: str) -> str:
    b = f.region.bounds.get(alg.index(param))
    return b.describe(param) if b is not None else f"all {param}"


# -- individual checks -------------------------------------------------------


def check_f1(exp: dict) -> CorpusRow:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    got = {g.exp for g in res.csum.groups}
    want = {rad(alg, s) for s in exp["F1"]}
    ok = got == want
    return CorpusRow("F1 exponent set", ok, "" if ok else f"got {sorted(map(str, got))}")


def check_n1e(exp: dict) -> CorpusRow:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    got = {e.value for e in res.equality}
    want = {rad(alg, s) for s in exp["N1e"]}
    ok = got == want
    return CorpusRow("N1e equality exponents", ok, "" if ok else f"got {sorted(map(str, got))}")


def check_table(exp: dict) -> list[CorpusRow]:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    blocks = dict(res.table)
    rows = []
    for label, want_rows in exp["table"].items():
        got = blocks.get(label)
        if got is None:
            rows.append(CorpusRow(f"Table block {label}", False, f"no block; have {sorted(blocks)}"))
            continue
        ok = len(got) == len(want_rows)
        for g, w in zip(got, want_rows):
            lo = None if w["lo"] is None else rad(alg, w["lo"])
            hi = None if w["hi"] is None else rad(alg, w["hi"])
            ok &= g.lo == lo and g.hi == hi and g.exp == rad(alg, w["exponent"])
            ok &= (g.hi is None) or g.hi_closed == w["hi_closed"]
        rows.append(CorpusRow(f"Table block {label}", ok, "" if ok else " | ".join(f"{r.describe()}: {r.exp}" for r in got)))
    return rows


def check_criticals(exp: dict) -> CorpusRow:
    res = _run(exp["fixture"], 1)
    ok = True
    details = []
    for kind, values in exp["criticals"].items():
        got = {c.value for c in res.criticals if c.kind == kind and c.param == res.problem.exponent_param}
        want = {Fraction(v) for v in values}
        if got != want:
            ok = False
            details.append(f"{kind}: got {sorted(map(str, got))}")
    return CorpusRow("critical values q", ok, "; ".join(details))


def check_cubic(exp: dict) -> CorpusRow:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    fams = [f for f in res.families if f.equation is not None]
    if not fams:
        return CorpusRow("q=1 cubic", False, "no unresolved leading equation")
    coeffs = fams[0].equation[1]
    want = [rad(alg, s) for s in exp["cubic"]]
    if len(coeffs) != len(want):
        return CorpusRow("q=1 cubic", False, f"degree {len(coeffs) - 1}")
    # proportional: c_i w_3 - w_i c_3 = 0
    ok = all((c * want[-1] - w * coeffs[-1]).is_zero() for c, w in zip(coeffs, want))
    flags = "exact" in fams[0].flags
    return CorpusRow("q=1 cubic (exact solution)", ok and flags, "" if ok else "coefficients not proportional")


def check_leading(exp: dict) -> list[CorpusRow]:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    param = res.problem.exponent_param
    out = []
    for item in exp["leading"]:
        f = find_family(res, item["c1"], item["n1"])
        name = f"leading c1 = {item['c1']} ({item['block']})"
        if f is None:
            out.append(CorpusRow(name, False, "family not found"))
            continue
        ok = _block_of(f, alg, param) == item["block"]
        conds = sorted(c.describe() for c in f.conditions)
        ok &= conds == sorted(item["conditions"])
        out.append(CorpusRow(name, ok, "" if ok else f"block {_block_of(f, alg, param)}, conditions {conds}"))
    return out


def check_power_family_positivity(exp: dict) -> CorpusRow:
    """The n1 = 2/(q - 3) family lives exactly where its radicand is positive."""
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    x = rad(alg, exp["power_family_positivity"])
    n1 = rad(alg, "2/(q - 3)")
    fams = [f for f in res.families if f.terms and f.terms[0].exp == n1 and f.status == "active"]
    ok = bool(fams)
    for f in fams:
        ok &= positivity_condition(f.region, x)[0] == "proved"
        b = f.region.bounds.get(alg.index("q"))
        ok &= b is not None and b.hi is not None and b.hi <= 1
    # where 2/(q-3) is selected for q > 3 the radicand is negative
    base = res.problem.region()
    for qv in (Fraction(7, 2), Fraction(5), Fraction(12)):
        ok &= positivity_condition(base.with_bound(alg.index("q"), Bound(qv, qv, False, False)), x)[0] == "refuted"
    return CorpusRow("n1 = 2/(q - 3) positivity condition", ok)


def check_arbitrary(exp: dict) -> CorpusRow:
    res = _run(exp["fixture"], 1)
    alg = res.problem.alg
    n1 = rad(alg, exp["arbitrary_exponent"])
    fams = [f for f in res.families if f.terms and f.terms[0].exp == n1 and "c1" in f.free]
    ok = bool(fams)
    status = sorted({f.status for f in fams})
    return CorpusRow("c1-arbitrary family n1 = -gamma/(gamma - 1)", ok, f"status {status}")


def check_subleading(exp: dict) -> list[CorpusRow]:
    res = _run(exp["fixture"], 2)
    alg = res.problem.alg
    out = []
    for item in exp["subleading"]:
        name = f"subleading of c1 = {item['c1'][:40]}"
        f = find_family(res, item["c1"])
        if f is None or f.M < 2:
            out.append(CorpusRow(name, False, "family not found"))
            continue
        ok = f.terms[1].exp == rad(alg, item["n2"])
        ok &= same_psum(f.terms[1].coeff, psum(f.terms[1].coeff.ctx, item["c2"]))
        detail = "" if ok else f"n2 = {f.terms[1].exp}, c2 = {f.terms[1].coeff}"
        if ok and "printed" in item:
            printed = same_psum(f.terms[1].coeff, psum(f.terms[1].coeff.ctx, item["printed"]))
            detail = "printed display " + ("matches" if printed else "differs: 2k^2 - v^2 where 2k^4 - v^2 holds")
        out.append(CorpusRow(name, ok, detail))
    return out


def _d_at(problem: Problem, fam: Family, known: list, exponent: RadicalExpr, name: str) -> PowerSum:
    ctx = fam.terms[0].coeff.ctx
    csum = substitute_truncation(problem.ode, ctx, known, name)
    g = csum.group(exponent)
    return ctx.zero() if g is None else g.D


def check_pm_pair(exp: dict) -> list[CorpusRow]:
    """C2 = 0 at the printed value: substitute into D(q - 7) and expect zero."""
    res = _run(exp["fixture"], 2)
    problem = res.problem
    alg = problem.alg
    out = []
    for s, label in ((1, "+"), (-1, "-")):
        c1 = f"2/(3*gamma*(1 + {s}*sqrt(2)*v))"
        name = f"c1 = 2/(3 gamma (1 {label} sqrt2 v)) branch, C2 = 0 at the displayed c2"
        f = find_family(res, c1, statuses=("active",), n2="q - 2")
        if f is None:
            out.append(CorpusRow(name, False, "family not found"))
            continue
        ctx = f.terms[0].coeff.ctx
        pm = exp["pm_pair"]
        shown = parse_exact(alg, f"({pm['num']})/({pm['den']})", ("s",)).subs(sympy.Symbol("s"), s)
        val = powersum_from_expr(ctx, shown)
        trial = [f.terms[0], SeriesTerm(ctx.symbol("c2"), f.terms[1].exp)]
        D = _d_at(problem, f, trial, rad(alg, "q - 7"), None)
        ok = "c2" in D.symbols() and D.substitute_symbol("c2", val).is_zero()
        detail = ""
        if not ok and D.substitute_symbol("c2", -val).is_zero():
            # the lower sign is printed with its overall sign reversed
            ok, detail = s < 0, "holds with the overall sign of the displayed expression reversed"
        ok &= same_psum(f.terms[1].coeff, val if not detail else -val)
        out.append(CorpusRow(name, ok, detail))
    return out


def check_pruned(exp: dict) -> list[CorpusRow]:
    res = _run(exp["fixture"], 2)
    problem = res.problem
    alg = problem.alg
    out = []
    for item in exp["pruned"]:
        name = f"pruned case D({item['exponent']})"
        f = find_family(res, item["c1"])
        if f is None:
            out.append(CorpusRow(name, False, "family not found"))
            continue
        D = _d_at(problem, f, [f.terms[0]], rad(alg, item["exponent"]), "c2")
        want = psum(D.ctx, item["D"], ("c2",))
        ok = same_psum(D, want)
        steps = [s for s in res.steps if s.family == f.id and s.M == 2 and f"D({rad(alg, item['exponent'])})" in s.case]
        pruned = [s for s in steps if "outside" in s.outcome or "no solution" in s.outcome]
        ok &= bool(pruned)
        out.append(CorpusRow(name, ok, "" if ok else f"D = {D}; steps {[s.outcome[:60] for s in steps]}"))
    return out


def check_painleve(exp: dict) -> list[CorpusRow]:
    res = _run(exp["fixture"])
    alg = res.problem.alg
    out = []
    realness = exp["realness"]
    for a in exp["alpha"]:
        f = find_family(res, a, "-1")
        ok = f is not None and realness in [c.describe() for c in f.conditions]
        out.append(CorpusRow(f"alpha = {a}", ok))
    # free constant at the relative exponent r(alpha)
    poly = sympy.Poly(sympy.sympify(exp["resonance"]), sympy.Symbol("alpha"))
    ok = False
    for f in res.families:
        if f.M >= 2 and "c2" in f.free:
            a = f.terms[0].coeff.as_radical()
            if a is None:
                continue
            want = rad(alg, "0")
            for (k,), c in poly.terms():
                term = rad(alg, str(c))
                for _ in range(k):
                    term = term * a
                want = want + term
            ok |= f.terms[1].exp - f.terms[0].exp == want
    out.append(CorpusRow(f"resonance at r = {exp['resonance']}", ok))
    kinds = {c.kind for c in res.criticals if c.value == Fraction(exp["branch_value"])}
    ok = set(exp["branch_kinds"]) <= kinds
    out.append(CorpusRow("beta = 1/8 branch point + log-merge", ok, f"kinds {sorted(kinds)}"))
    return out


CHECKS: dict[str, list[Callable]] = {
    "viscous_cosmology": [
        check_f1,
        check_n1e,
        check_table,
        check_criticals,
        check_cubic,
        check_leading,
        check_power_family_positivity,
        check_arbitrary,
        check_subleading,
        check_pm_pair,
        check_pruned,
    ],
    "painleve_beta": [check_painleve],
}


def corpus_regression(expected: Optional[dict] = None) -> list[CorpusRow]:
    """Run every stored comparison; a mismatch shows up as a FAIL row."""
    expected = copy.deepcopy(expected) if expected is not None else load_expected()
    rows: list[CorpusRow] = []
    for key, checks in CHECKS.items():
        exp = expected[key]
        for check in checks:
            try:
                got = check(exp)
            except Exception as exc:  # noqa: BLE001 - a broken expectation is a failed row
                got = CorpusRow(check.__name__, False, f"{type(exc).__name__}: {exc}")
            rows.extend(got if isinstance(got, list) else [got])
    return rows
