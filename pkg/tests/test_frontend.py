import random
from fractions import Fraction

import pytest
import sympy

from gpx.algebra.field import Algebra
from gpx.frontend.ode import OdeError, normalize, parse_and_normalize, print_ode, validate
from gpx.frontend.parser import BinOp, ParseError, parse_ode, summands
from gpx.frontend.problem import ProblemError, parse_problem

EQ5 = "D(y,2) + y*D(y,1) + beta*y^3"


def _alg(*names):
    return Algebra([sympy.Symbol(s) for s in names] + [sympy.Symbol("n")])


def test_parse_painleve_has_three_summands():
    ast = parse_ode(EQ5, known={"beta"})
    assert len(summands(ast)) == 3


def test_exponent_addition_normalizes_to_y():
    alg = _alg("q")
    ode = normalize(parse_ode("y^(q-1) * y^(2-q) * y' + y''", known={"q"}), alg, "q")
    assert {(str(m.b0.as_expr()), m.powers) for m in ode.monomials} == {("1", (1,)), ("0", (0, 1))}


@pytest.mark.parametrize(
    "text, msg",
    [
        ("y^^2", "unexpected '\\^'"),
        ("y'' + zeta*y", "unknown symbol 'zeta'"),
        ("D(x,2) + y", "derivative order mismatch"),
        ("", "empty expression"),
        ("y'' + (y", "expected"),
    ],
)
def test_parse_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_ode(text, known={"beta"})


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse_ode("y'' +\n y^^2", known=set())
    assert err.value.line == 2


def test_painleve_monomials():
    alg = _alg("beta")
    ode = parse_and_normalize(EQ5, alg)
    vecs = {tuple(int(x) if not hasattr(x, "as_expr") else int(x.as_expr()) for x in m.exps(2)): str(m.coeff) for m in ode.monomials}
    assert vecs == {(0, 0, 1): "1", (1, 1, 0): "1", (3, 0, 0): "beta"}


def test_zero_operator():
    with pytest.raises(OdeError, match="zero operator"):
        parse_and_normalize("2*y - y - y", _alg())


@pytest.mark.parametrize(
    "text, msg",
    [
        ("y'^(1/2) + y", "derivative raised to a non-integer power"),
        ("y'^(-1) + y", "negative integer power of a derivative"),
        ("y^(2-q*v) + y'", "exponent not affine in designated parameter"),
        ("y^(v) + y'", "exponent not affine in designated parameter"),
    ],
)
def test_normalize_errors(text, msg):
    alg = _alg("q", "v")
    with pytest.raises(OdeError, match=msg):
        normalize(parse_ode(text, known={"q", "v"}), alg, "q")


def test_validate_bounds(cosmo):
    ok = cosmo.with_values({"gamma": Fraction(4, 3), "v": Fraction(1, 2), "alpha": 1, "k": Fraction(1, 4)})
    assert ok.param("v").value == Fraction(1, 2)
    with pytest.raises(ProblemError, match="bound violation: 0<v<1"):
        cosmo.with_values({"v": 2})


def test_validate_numeric_bounds_in_ode():
    alg = _alg("v")
    ode = parse_and_normalize("y'' + v*y", alg)
    from gpx.algebra.region import Bound

    with pytest.raises(OdeError, match="bound violation"):
        validate(ode, {"v": Fraction(2)}, {"v": Bound(Fraction(0), Fraction(1), True, True)})


def test_viscous_operator_exponent_classes(cosmo):
    # six classes of exponents after substituting y = c t^n
    r = cosmo.ode.order
    classes = set()
    for m in cosmo.ode.monomials:
        b = m.exps(r)
        classes.add(sympy.expand(sum((sympy.Symbol("n") - h) * (b[h].as_expr() if h == 0 else b[h]) for h in range(r + 1))))
    assert len(classes) == 6


def test_print_reparse_round_trip(cosmo, painleve):
    for p in (cosmo, painleve):
        text = print_ode(p.ode)
        again = normalize(parse_ode(text, known={s.name for s in p.alg.symbols}), p.alg, p.exponent_param)
        assert again == p.ode
        # idempotence of the normal form
        assert print_ode(again) == text


def _sympy_value(text, vals):
    s = text.replace("y''", "y2").replace("y'", "y1").replace("^", "**")
    s = s.replace("D(y,2)", "y2").replace("D(y,1)", "y1")
    return complex(sympy.sympify(s, locals={k: sympy.Symbol(k) for k in vals}).subs(vals))


def _ode_value(ode, vals):
    total = 0
    for m in ode.monomials:
        c = float(sympy.sympify(m.coeff.to_expr()).subs(vals))
        t = c * vals["y"] ** float(m.b0.as_expr().subs(vals))
        for h, p in enumerate(m.powers, start=1):
            t *= vals[f"y{h}"] ** p
        total += t
    return total


@pytest.mark.parametrize(
    "text",
    [
        "(y + 2*y')*(y'' - a*y) + y^3",
        "y^2*(y' + a)^2 - (3/2)*y''*y'",
        "(a - y)^3 + y''",
        "y^(q-1)*(y + y') + q*y''",
    ],
)
def test_distribution_matches_direct_evaluation(text):
    rng = random.Random(5)
    alg = _alg("a", "q")
    ode = parse_and_normalize(text, alg, "q")
    for _ in range(10):
        vals = {"a": rng.uniform(0.5, 2), "q": rng.uniform(0.5, 2), "y": rng.uniform(0.5, 2), "y1": rng.uniform(-2, 2), "y2": rng.uniform(-2, 2)}
        assert _ode_value(ode, vals) == pytest.approx(_sympy_value(text, vals).real, rel=1e-12)


PROBLEM = """
ode D(y,2) + y*D(y,1) + beta*y^3
param beta 0 inf
limit zero
order 3
"""


def test_problem_file():
    p = parse_problem(PROBLEM)
    assert p.config.order == 3 and p.config.limit == "zero"
    assert p.param("beta").bound.describe("beta") == "0<beta"


@pytest.mark.parametrize(
    "text, msg",
    [
        ("param beta 0 1", "no ode given"),
        (PROBLEM + "order 0\n", "order must be positive"),
        (PROBLEM + "limit sideways\n", "limit must be"),
        (PROBLEM + "frobnicate\n", "unknown directive"),
        (PROBLEM + "assume c1 > 2\n", "only 'c1 > 0'"),
        (PROBLEM + "param beta 0 1\n", "duplicate parameter"),
    ],
)
def test_problem_errors(text, msg):
    with pytest.raises(ProblemError, match=msg):
        parse_problem(text)
