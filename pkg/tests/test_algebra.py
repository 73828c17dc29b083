import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from gpx.algebra.field import Algebra, AlgebraError
from gpx.algebra.radical import RadicalExpr, radical_from_expr
from gpx.algebra.region import Bound, Region, Sign, make_constraint
from gpx.algebra.solve import SolveError, solve_affine, solve_poly_numeric, solve_poly_symbolic

q, gamma, alpha, v, k, beta, n = sympy.symbols("q gamma alpha v k beta n")


def R(alg, e):
    return radical_from_expr(alg, sympy.sympify(e, locals={"gamma": gamma, "beta": beta}))


@pytest.mark.parametrize(
    "num, den, want",
    [
        (2 - 2 * q, q**2 - 4 * q + 3, -2 / (q - 3)),
        (6 * n, 3, 2 * n),
        (q**2 + v, q**2 + v, 1),
    ],
)
def test_ratfun_normalize(alg, num, den, want):
    assert alg.ratfun_normalize(num, den) == alg.rf(want)


def test_ratfun_normalize_zero_denominator(alg):
    with pytest.raises(AlgebraError, match="division by zero polynomial"):
        alg.ratfun_normalize(q, 0)


def test_ratfun_denominator_sign_is_canonical(alg):
    a = alg.ratfun_normalize(1, 3 - q)
    b = alg.ratfun_normalize(-1, q - 3)
    assert a == b and str(a.as_expr()) == str(b.as_expr())


@pytest.mark.parametrize(
    "expr, want",
    [
        ((n - 2) - (2 * n - 1), -1),
        (6 * n - (6 * n - n * q - 1), -1 / q),
        ((3 * n - 3) - 6 * n, -1),
    ],
)
def test_solve_affine(alg, expr, want):
    assert solve_affine(alg, expr, "n") == R(alg, want)


@pytest.mark.parametrize("expr, msg", [(q + 1, "no solution"), (n - n, "identically satisfied")])
def test_solve_affine_degenerate(alg, expr, msg):
    with pytest.raises(SolveError, match=msg):
        solve_affine(alg, expr, "n")


def test_quadratic_roots_of_painleve_balance(alg):
    # 2c - c^2 + beta c^3 with the zero root divided out
    out = solve_poly_symbolic(alg, [2, -1, beta])
    vals = {r.value for r in out.roots}
    s = sympy.sqrt(1 - 8 * beta)
    assert vals == {R(alg, (1 + s) / (2 * beta)), R(alg, (1 - s) / (2 * beta))}
    conds = {c.describe() for r in out.roots for c in r.conditions}
    assert conds == {"1 - 8*beta >= 0"}
    assert out.flag is None


def test_cubic_of_leading_balance_factors(alg):
    # D(-6) of the viscous model, written with the three roots as factors
    r1 = 2 * k**2 / (3 * gamma * (k**2 - v**2))
    r2 = 2 / (3 * gamma * (1 + sympy.sqrt(2) * v))
    r3 = 2 / (3 * gamma * (1 - sympy.sqrt(2) * v))
    x = sympy.Symbol("x")
    poly = sympy.Poly(sympy.expand(sympy.cancel((x - r1) * (x - r2) * (x - r3) * (k**2 - v**2) * (1 - 2 * v**2))), x)
    cs = [sympy.simplify(c) for c in reversed(poly.all_coeffs())]
    out = solve_poly_symbolic(alg, cs)
    assert {r.value for r in out.roots} == {R(alg, r1), R(alg, r2), R(alg, r3)}


def test_unit_circle_roots(alg):
    out = solve_poly_symbolic(alg, [-1, 0, 1])
    assert sorted(str(r.value) for r in out.roots) == ["-1", "1"]
    assert all(not r.conditions for r in out.roots)


def test_unresolved_cubic_is_flagged(alg):
    out = solve_poly_symbolic(alg, [q, 1, 0, 1])
    assert out.flag == "unresolved-symbolic"


def test_zero_polynomial_rejected(alg):
    with pytest.raises(AlgebraError):
        solve_poly_symbolic(alg, [0, 0])


@pytest.mark.parametrize(
    "coeffs, want",
    [
        ([0, -1, 0, 1], [-1.0, 0.0, 1.0]),
        ([2, -1, Fraction(1, 9)], [3.0, 6.0]),
        ([1, 0, 1], []),
        ([2.0, -1.0, 1 / 9], [3.0, 6.0]),
    ],
)
def test_solve_poly_numeric(coeffs, want):
    got = solve_poly_numeric(coeffs)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_solve_poly_numeric_constant():
    with pytest.raises(AlgebraError):
        solve_poly_numeric([3])


def test_sign_queries(alg):
    iv, ik, iq = alg.index("v"), alg.index("k"), alg.index("q")
    reg = Region(alg, [make_constraint(alg, k - v, ">")], {iv: Bound(Fraction(0), None, True, True)})
    assert reg.sign(R(alg, k**2 - v**2)) is Sign.POSITIVE
    reg = Region(alg, [make_constraint(alg, 1 - 2 * v**2, ">")], {iv: Bound(Fraction(0), Fraction(1), True, True)})
    assert reg.sign(R(alg, 1 - 2 * v**2)) is Sign.POSITIVE
    reg = Region(alg, bounds={iq: Bound(None, Fraction(1), True, True)})
    assert reg.sign(R(alg, q - 3)) is Sign.NEGATIVE
    assert reg.sign(R(alg, q)) is Sign.INDETERMINATE


def test_radical_arithmetic(alg):
    s2 = R(alg, sympy.sqrt(2))
    assert s2 * s2 == R(alg, 2)
    x = R(alg, 1 + sympy.sqrt(2) * v)
    assert (x * x.inverse()) == R(alg, 1)
    assert (x * x.conjugate()) == R(alg, 1 - 2 * v**2)
    assert R(alg, sympy.sqrt(8 * q**2)) == R(alg, 2 * sympy.sqrt(2) * q) or R(alg, sympy.sqrt(8 * q**2)) == R(alg, -2 * sympy.sqrt(2) * q)


# -- randomized field laws ---------------------------------------------------

_small = st.integers(min_value=-3, max_value=3)


def _poly(cs):
    a, b, c, d = cs
    return a + b * q + c * v * q + d * v**2


polys = st.tuples(_small, _small, _small, _small).map(_poly)
nonzero = polys.filter(lambda p: p != 0)

ALG = Algebra(sympy.symbols("q v"))


@settings(max_examples=60, deadline=None)
@given(polys, nonzero, nonzero)
def test_canonical_under_common_factor(a, b, g):
    assert ALG.ratfun_normalize(a * g, b * g) == ALG.ratfun_normalize(a, b)


@settings(max_examples=60, deadline=None)
@given(polys, nonzero, polys, nonzero, polys, nonzero)
def test_field_laws(a1, b1, a2, b2, a3, b3):
    x, y, z = (ALG.ratfun_normalize(a, b) for a, b in ((a1, b1), (a2, b2), (a3, b3)))
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == ALG.zero
    if x != ALG.zero:
        assert x * (1 / x) == ALG.one


def test_symbolic_roots_vanish_and_match_numeric():
    rng = random.Random(3)
    alg = Algebra([beta])
    out = solve_poly_symbolic(alg, [2, -1, beta])
    x = sympy.Symbol("x")
    for r in out.roots:
        e = sympy.simplify((2 - x + beta * x**2).subs(x, r.value.to_expr()))
        assert e == 0
    for _ in range(20):
        b = Fraction(rng.randint(1, 124), 1000)
        num = solve_poly_numeric([2, -1, b])
        sym = sorted(r.value.evalf(alg, [float(b)]) for r in out.roots)
        assert sym == pytest.approx(num, rel=1e-9)


def test_sign_query_soundness():
    rng = random.Random(11)
    alg = Algebra(sympy.symbols("q v"))
    reg = Region(alg, [make_constraint(alg, 1 - 2 * v**2, ">")], {0: Bound(Fraction(1), Fraction(3), True, False), 1: Bound(Fraction(0), Fraction(1), True, True)})
    for e in (q - 1, 1 - 2 * v**2, (q - 1) * (1 - 2 * v**2), q - 4, v - q, q * v + 1):
        s = reg.sign(R(alg, e))
        if not s.definite:
            continue
        for _ in range(100):
            pt = reg.sample(rng)
            val = float(sympy.sympify(e).subs({q: pt[0], v: pt[1]}))
            assert (val > 0) == (s is Sign.POSITIVE)
