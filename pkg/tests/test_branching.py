import random
from fractions import Fraction

import pytest
import sympy

from gpx.algebra.powers import PowerContext
from gpx.algebra.radical import radical_from_expr
from gpx.algebra.region import Bound
from gpx.branching import (
    SubRegion,
    critical_params,
    detect_log_merge,
    equality_exponents,
    param_subregions,
    partition_cases,
    sort_case,
)
from gpx.expansion import SeriesTerm, collect_terms, substitute_leading, substitute_truncation

n, q, gamma, beta = sympy.symbols("n q gamma beta")


def rad(alg, e):
    return radical_from_expr(alg, sympy.sympify(e, locals={"gamma": gamma, "beta": beta}))


def _leading(problem, region=None):
    ctx = PowerContext(problem.alg, region or problem.region())
    return collect_terms(substitute_leading(problem.ode, ctx))


def test_viscous_N1e(cosmo1):
    alg = cosmo1.problem.alg
    want = {-1, 2 / (q - 3), 1 / (q - 2), 3 / (q - 4), -1 / q}
    assert {e.value for e in cosmo1.equality} == {rad(alg, e) for e in want}


def test_viscous_N2e_below_one(cosmo):
    alg = cosmo.alg
    region = cosmo.region().with_bound(alg.index("q"), Bound(None, Fraction(1), True, True))
    ctx = PowerContext(alg, region)
    lead = SeriesTerm(ctx.const(rad(alg, 2 / (3 * gamma))), rad(alg, -1))
    cs = substitute_truncation(cosmo.ode, ctx, [lead], "c2")
    eqs = equality_exponents(alg, cs, region, lower=rad(alg, -1))
    assert {e.value for e in eqs} == {rad(alg, -sympy.Rational(1, 2) - q / 2), rad(alg, -q)}


def test_painleve_N1e(painleve):
    eqs = equality_exponents(painleve.alg, _leading(painleve), painleve.region())
    assert [str(e.value) for e in eqs] == ["-1"]
    assert len(eqs[0].origins) == 3


def test_viscous_critical_values(cosmo1):
    crit = {(c.kind, c.value) for c in cosmo1.criticals if c.param == "q" and c.kind.startswith("equality")}
    assert crit == {("equality-exponent-collision", Fraction(1))} | {("equality-exponent-divergence", Fraction(x)) for x in (0, 2, 3, 4)}


def test_constant_equality_exponents_have_no_criticals(painleve):
    eqs = equality_exponents(painleve.alg, _leading(painleve), painleve.region())
    assert critical_params(painleve.alg, eqs, painleve.region(), None) == []


def test_parameter_intervals(cosmo1, cosmo):
    subs = param_subregions(cosmo.alg, cosmo.region(), "q", cosmo1.criticals)
    labels = [s.label for s in subs]
    assert labels == ["q<0", "q=0", "0<q<1", "q=1", "1<q<2", "q=2", "2<q<3", "q=3", "3<q<4", "q=4", "4<q"]


def _cases(problem, sub):
    alg = problem.alg
    ctx = PowerContext(alg, sub.region)
    ode = problem.ode.specialize(sub.values) if sub.values else problem.ode
    cs = collect_terms(substitute_leading(ode, ctx))
    eqs = equality_exponents(alg, cs, sub.region)
    return cs, partition_cases(alg, eqs, sub, skip_points=[rad(alg, 0)])


def test_painleve_three_cases(painleve):
    cs, cases = _cases(painleve, SubRegion(painleve.region()))
    assert [c.describe() for c in cases] == ["n<-1", "n=-1", "-1<n"]


def _table_block(result, label):
    return {r.describe(): str(r.exp) for r in dict(result.table)[label]}


@pytest.mark.parametrize(
    "block, row, exponent",
    [
        ("q<1", "n1<=-1", "-n*q + 7*n"),
        ("1<q<=3", "-1<n1", "3*n - 3"),
        ("3<q", "2/(q - 3)<n1", "-n*q + 6*n - 1"),
    ],
)
def test_table_rows(cosmo1, block, row, exponent):
    assert _table_block(cosmo1, block)[row] == exponent


def test_sort_case_is_consistent_with_sampling(cosmo):
    rng = random.Random(2)
    sub = SubRegion(cosmo.region().with_bound(cosmo.alg.index("q"), Bound(Fraction(1), Fraction(2), True, True)), {}, "1<q<2")
    cs, cases = _cases(cosmo, sub)
    alg = cosmo.alg
    for case in cases:
        if case.kind != "interval":
            continue
        sc = sort_case(alg, cs, case)
        for _ in range(5):
            pt = case.sub.region.sample(rng)
            qv = float(pt[alg.index("q")])
            lo = -10.0 if case.lo is None else case.lo.evalf(alg, [float(x) for x in pt])
            hi = 10.0 if case.hi is None else case.hi.evalf(alg, [float(x) for x in pt])
            nv = lo + (hi - lo) * rng.uniform(0.05, 0.95)
            vals = sorted((g.exp.evalf(alg, [qv if s.name == "q" else (nv if s.name == "n" else float(pt[i])) for i, s in enumerate(alg.symbols)]), str(g.exp)) for g in cs.groups)
            assert vals[0][1] == str(sc.selected[0])


def test_painleve_branch_point_and_log_merge(pain3):
    kinds = {c.kind for c in pain3.criticals if c.value == Fraction(1, 8)}
    assert {"exponent-branch-point", "log-merge", "coefficient-branch-point"} <= kinds


def test_detect_log_merge_flags(painleve):
    alg = painleve.alg
    # the gap between the resonance exponents of the two roots closes at 1/8
    gap = rad(alg, 4 - (1 - sympy.sqrt(1 - 8 * beta)) / (2 * beta)) - rad(alg, 4 - (1 + sympy.sqrt(1 - 8 * beta)) / (2 * beta))
    assert detect_log_merge(gap, alg, "beta", Fraction(1, 8), True) == ["branch-point", "logarithmic"]
    assert detect_log_merge(rad(alg, 1 - 8 * beta), alg, "beta", Fraction(1, 8), False) == ["relabel"]


def test_exponent_switch_at_q1_for_the_first_family(cosmo2):
    assert any(c.kind == "exponent-switch" and c.value == Fraction(1) for c in cosmo2.criticals)
