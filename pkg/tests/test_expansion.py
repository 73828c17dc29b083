import random
from fractions import Fraction

import mpmath
import pytest
import sympy

from gpx.algebra.powers import PowerContext
from gpx.algebra.radical import radical_from_expr
from gpx.algebra.region import Bound
from gpx.algebra.solve import subs_radical
from gpx.expansion import SeriesTerm, TermContribution, collect_terms, substitute_leading, substitute_truncation
from gpx.frontend.problem import parse_problem

n, q, gamma, beta = sympy.symbols("n q gamma beta")


def rad(alg, e):
    return radical_from_expr(alg, e)


def _by_exp(contribs):
    return {str(c.exp): c for c in contribs}


def test_painleve_leading_contributions(painleve):
    alg = painleve.alg
    ctx = PowerContext(alg, painleve.region())
    got = _by_exp(substitute_leading(painleve.ode, ctx))
    c1 = ctx.symbol("c1")
    N = ctx.const(rad(alg, n))
    assert (got["n - 2"].coeff - c1 * N * (N - 1)).is_zero()
    assert (got["2*n - 1"].coeff - c1 ** 2 * N).is_zero()
    assert (got["3*n"].coeff - c1 ** 3 * ctx.const(rad(alg, beta))).is_zero()


def test_leading_structure_nu_times_power(cosmo):
    # E_i = nu_i c1^mu_i with mu_i the total degree of the monomial
    ctx = PowerContext(cosmo.alg, cosmo.region())
    for tc in substitute_leading(cosmo.ode, ctx):
        degs = tc.coeff.collect_symbol("c1")
        assert list(degs) == [tc.mu]


def test_viscous_F1(cosmo1):
    alg = cosmo1.problem.alg
    want = {6 * n, 4 * n - 2, 5 * n - 1, 3 * n - 3, -n * (q - 7), 6 * n - n * q - 1}
    assert set(cosmo1.csum.exponents()) == {rad(alg, e) for e in want}
    assert cosmo1.csum.R == 6


def test_viscous_F2_for_the_two_over_three_gamma_family(cosmo):
    alg = cosmo.alg
    iq = alg.index("q")
    region = cosmo.region().with_bound(iq, Bound(None, Fraction(1), True, True))
    ctx = PowerContext(alg, region)
    lead = SeriesTerm(ctx.const(rad(alg, 2 / (3 * gamma))), rad(alg, sympy.Integer(-1)))
    cs = substitute_truncation(cosmo.ode, ctx, [lead], "c2")
    want = {-6, 4 * n - 2, q + n - 6, q + 2 * n - 5, 5 * n - 1, 3 * n - 3, 6 * n, n - 5, 2 * n - 4}
    got = set(cs.exponents())
    assert {rad(alg, sympy.sympify(e)) for e in want} <= got


def test_painleve_kowalevski_group(painleve):
    alg = painleve.alg
    ctx = PowerContext(alg, painleve.region().with_bound(alg.index("beta"), Bound(Fraction(0), Fraction(1, 8), True, True)))
    a = rad(alg, (1 - sympy.sqrt(1 - 8 * beta)) / (2 * beta))
    cs = substitute_truncation(painleve.ode, ctx, [SeriesTerm(ctx.const(a), rad(alg, sympy.Integer(-1)))], "c2")
    g = cs.group(rad(alg, n - 2))
    assert g is not None and "c2" in g.D.symbols()
    at = g.D.subs({"n": rad(alg, sympy.Integer(4) - 1) - a})
    assert at.is_zero()


def test_empty_slot_reduces_to_leading(painleve):
    ctx = PowerContext(painleve.alg, painleve.region())
    a = collect_terms(substitute_leading(painleve.ode, ctx))
    b = substitute_truncation(painleve.ode, ctx, [], "c1")
    assert a.exponents() == b.exponents()
    assert all((x.D - y.D).is_zero() for x, y in zip(a.groups, b.groups))


def test_collect_merges_equal_exponents(painleve):
    alg = painleve.alg
    ctx = PowerContext(alg, painleve.region())
    e = rad(alg, n - 2)
    one = ctx.const(rad(alg, sympy.Integer(1)))
    cs = collect_terms([TermContribution(0, e, one), TermContribution(1, e, one + one)])
    assert cs.R == 1 and (cs.groups[0].D - ctx.const(rad(alg, sympy.Integer(3)))).is_zero()
    cs = collect_terms([TermContribution(0, e, one), TermContribution(1, e, -one)])
    assert cs.R == 0 and cs.dropped == [e]


def test_distinct_exponents_stay_apart(cosmo1):
    alg = cosmo1.problem.alg
    assert cosmo1.csum.group(rad(alg, 6 * n)) is not cosmo1.csum.group(rad(alg, 6 * n - n * q - 1))


def test_group_count_bound(cosmo2, cosmo):
    N, r = cosmo.ode.N, cosmo.ode.order
    ctx = PowerContext(cosmo.alg, cosmo.region())
    for fam in cosmo2.families:
        if fam.M < 2 or fam.status == "excluded":
            continue
        cs = substitute_truncation(cosmo.ode, fam.terms[0].coeff.ctx, fam.terms[:1], "c2")
        assert cs.R <= N * 2 ** (r + 1)


def test_collected_sum_matches_direct_evaluation(pain3):
    # integer powers only: the collected image is exact
    p = pain3.problem
    fam = next(f for f in pain3.families if "c1" in f.free)
    b = Fraction(1, 20)
    vals = {"beta": b}
    alg = p.alg
    idx = {alg.index("beta"): rad(alg, sympy.Rational(1, 20))}
    ode = p.ode.specialize(vals)
    ctx = PowerContext(alg, p.region().with_bound(alg.index("beta"), Bound(b, b, False, False)))
    terms = [SeriesTerm(t.coeff.with_context(ctx).subs(vals).with_context(ctx), subs_radical(alg, t.exp, idx)) for t in fam.terms]
    cs = substitute_truncation(ode, ctx, terms, None, degree=6)
    c1 = Fraction(3, 2)
    with mpmath.workdps(40):
        for t in (mpmath.mpf("1e-3"), mpmath.mpf("1e-4")):
            ser = [(t_.coeff.evalf({"beta": b}, {"c1": c1}, 40), float(t_.exp.a.as_expr())) for t_ in terms]
            y = sum(c * t**e for c, e in ser)
            y1 = sum(c * e * t ** (e - 1) for c, e in ser)
            y2 = sum(c * e * (e - 1) * t ** (e - 2) for c, e in ser)
            direct = y2 + y * y1 + b.numerator * mpmath.mpf(1) / b.denominator * y**3
            collected = sum(g.D.evalf({"beta": b}, {"c1": c1}, 40) * t ** float(g.exp.a.as_expr()) for g in cs.groups)
            assert float(abs(collected - direct)) <= 1e-9 * float(abs(direct))


@pytest.mark.parametrize("m", [1, 2, -1])
def test_y_power_covariance(painleve, m):
    alg = painleve.alg
    ctx = PowerContext(alg, painleve.region())
    base = substitute_leading(painleve.ode, ctx)
    moved = substitute_leading(painleve.ode.times_y_power(m), ctx)
    for a, b in zip(base, moved):
        assert b.exp == a.exp + rad(alg, m * n)
        assert b.mu == a.mu + m
