import random
from fractions import Fraction

import pytest
import sympy

from gpx import corpus
from gpx.algebra.radical import radical_from_expr
from gpx.expansion import SeriesTerm
from gpx.pipeline import run_expand

n, q, gamma, alpha, v, k, beta = sympy.symbols("n q gamma alpha v k beta")


def rad(alg, e):
    return radical_from_expr(alg, sympy.sympify(e, locals={"gamma": gamma, "beta": beta}))


def test_two_over_three_gamma_below_one(cosmo1):
    f = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    assert f is not None
    assert f.region.describe()[0] == "q<1"


@pytest.mark.parametrize(
    "c1, condition",
    [
        ("2*k**2/(3*gamma*(k**2 - v**2))", "k - v > 0"),
        ("2/(3*gamma*(1 - sqrt(2)*v))", "1 - 2*v**2 > 0"),
        ("2/(3*gamma*(1 + sqrt(2)*v))", None),
    ],
)
def test_three_roots_above_one(cosmo1, c1, condition):
    f = corpus.find_family(cosmo1, c1, "-1")
    assert f is not None and f.region.describe()[0] == "1<q"
    conds = [c.describe() for c in f.conditions]
    assert conds == ([condition] if condition else [])


def test_arbitrary_c1_family(cosmo1):
    alg = cosmo1.problem.alg
    fams = [f for f in cosmo1.families if f.terms and f.terms[0].exp == rad(alg, -gamma / (gamma - 1))]
    assert len(fams) == 1 and fams[0].free == ["c1"]
    # n1 = -gamma/(gamma - 1) <= -2 on 1 < gamma <= 2 never lies in the interval that selects 3n1 - 3
    assert fams[0].status == "excluded"


def test_arbitrary_c1_family_without_gamma_bounds():
    text = corpus.data_path("viscous_cosmology.gpx").read_text().replace("param gamma [1 2]", "param gamma 1 inf")
    from gpx.frontend.problem import parse_problem

    res = run_expand(parse_problem(text), 1)
    alg = res.problem.alg
    fams = [f for f in res.families if f.terms and f.terms[0].exp == rad(alg, -gamma / (gamma - 1))]
    assert fams and fams[0].free == ["c1"]


def test_power_law_family_active(cosmo1):
    f = corpus.find_family(cosmo1, corpus.load_expected()["viscous_cosmology"]["leading"][-1]["c1"], "2/(q - 3)")
    assert f is not None and f.status == "active"


@pytest.mark.parametrize(
    "c1, n2, exponent",
    [
        ("2/(3*gamma)", "-q", "-6"),
        ("2*k**2/(3*gamma*(k**2 - v**2))", "q - 2", "q - 7"),
        ("2/(3*gamma*(1 + sqrt(2)*v))", "q - 2", "q - 7"),
        ("2/(3*gamma*(1 - sqrt(2)*v))", "q - 2", "q - 7"),
    ],
)
def test_determined_c2_annihilates_its_group(cosmo2, c1, n2, exponent):
    res = cosmo2
    f = corpus.find_family(res, c1, "-1", n2=n2)
    assert f is not None
    alg = res.problem.alg
    ctx = f.terms[0].coeff.ctx
    trial = [f.terms[0], SeriesTerm(ctx.symbol("c2"), f.terms[1].exp)]
    D = corpus._d_at(res.problem, f, trial, rad(alg, exponent), None)
    assert "c2" in D.symbols()
    assert D.substitute_symbol("c2", f.terms[1].coeff).is_zero()


def test_subleading_of_the_first_family(cosmo2):
    alg = cosmo2.problem.alg
    f = corpus.find_family(cosmo2, "2/(3*gamma)", "-1", n2="-q")
    want = corpus.psum(f.terms[1].coeff.ctx, "alpha/(gamma*(2 - q))*(2/(3*gamma))**q")
    assert corpus.same_psum(f.terms[1].coeff, want)


def test_pruned_cases_are_recorded(cosmo2):
    outcomes = [s.outcome for s in cosmo2.steps if s.family == "F5"]
    assert any(o.startswith("no solution: D(-6) = -32*v**2/(81*gamma**5)") for o in outcomes)
    assert any("root n2 = -2 outside" in o for o in outcomes)


def test_exponents_ordered_in_each_family(cosmo2, pain3):
    rng = random.Random(4)
    for res in (cosmo2, pain3):
        alg = res.problem.alg
        for f in res.families:
            if f.M < 2 or f.status == "excluded":
                continue
            for _ in range(20):
                pt = [float(x) for x in f.region.sample(rng)]
                e = [t.exp.evalf(alg, pt) for t in f.terms]
                assert all(a < b for a, b in zip(e, e[1:])), (f.id, e)


def test_free_constant_budget(cosmo2, pain3):
    for res in (cosmo2, pain3):
        r = res.problem.ode.order
        for f in res.families:
            assert len(f.free) <= r - 1


def test_painleve_families(pain3):
    alg = pain3.problem.alg
    regular = next(f for f in pain3.families if f.terms[0].exp == rad(alg, 1))
    assert regular.free == ["c1"] and [str(t.exp) for t in regular.terms] == ["1", "3", "5"]
    ctx = regular.terms[0].coeff.ctx
    assert corpus.same_psum(regular.terms[1].coeff, corpus.psum(ctx, "-c1**2/6", ("c1",)))
    assert corpus.same_psum(regular.terms[2].coeff, corpus.psum(ctx, "c1**3*(1/30 - beta/20)", ("c1",)))
    singular = [f for f in pain3.families if f.terms[0].exp == rad(alg, -1)]
    assert all("1 - 8*beta >= 0" in [c.describe() for c in f.conditions] for f in singular)


def test_exact_solution_at_q_one(cosmo1):
    fams = [f for f in cosmo1.families if f.equation is not None]
    assert len(fams) == 1
    f = fams[0]
    assert "exact" in f.flags and f.region.describe()[0] == "q=1"
    assert str(f.equation[0]) == "-1" and len(f.equation[1]) == 4


def test_generic_q_has_no_exact_report(cosmo1):
    assert all("exact" not in f.flags for f in cosmo1.families if not f.region.describe()[0].startswith("q="))


def _signature(res):
    return sorted((f.status, tuple((str(t.exp), str(t.coeff)) for t in f.terms)) for f in res.families)


@pytest.mark.parametrize("factor", [3, Fraction(-2, 7)])
def test_scaling_invariance(painleve, factor):
    from dataclasses import replace

    base = run_expand(painleve)
    scaled = run_expand(replace(painleve, ode=painleve.ode.scaled(factor)))
    assert _signature(base) == _signature(scaled)
