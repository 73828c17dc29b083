import csv
from fractions import Fraction

import numpy as np
import pytest

from gpx import corpus
from gpx.pipeline import run_expand
from gpx.residual import (
    ResidualError,
    default_grid,
    pick_points,
    predicted_exponent,
    residual_order_check,
    write_checks_csv,
)

POINT = {"gamma": Fraction(4, 3), "v": Fraction(1, 2), "alpha": Fraction(1), "k": Fraction(1, 4), "q": Fraction(1, 2)}


def test_default_grid():
    g = default_grid()
    assert len(g) == 40 and g[0] == pytest.approx(1e-8) and g[-1] == pytest.approx(1e-4)
    assert all(a < b for a, b in zip(g, g[1:]))
    h = default_grid(-1)
    assert h[0] == pytest.approx(1e4) and h[-1] == pytest.approx(1e8)


def test_leading_term_only(cosmo1):
    f = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    c = residual_order_check(cosmo1.problem, f, POINT)
    # next exponent after q - 7 = -13/2 is -6
    assert c.predicted == pytest.approx(-6.0)
    assert c.passed and abs(c.slope + 6) < 0.1


def test_second_term_improves_and_control_fails(cosmo1, cosmo2):
    f1 = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    f2 = corpus.find_family(cosmo2, "2/(3*gamma)", "-1", n2="-q")
    one = residual_order_check(cosmo1.problem, f1, POINT)
    two = residual_order_check(cosmo2.problem, f2, POINT)
    assert two.passed and two.slope > one.slope
    bad = residual_order_check(cosmo2.problem, f2, POINT, perturb={1: 0.1})
    assert not bad.passed


def test_exact_family_residual_vanishes(pain3):
    f = next(f for f in pain3.families if f.status == "complete")
    c = residual_order_check(pain3.problem, f, {"beta": Fraction(1, 20)})
    assert c.exact and c.passed


def test_unresolved_cubic_roots_solve_exactly(cosmo1):
    f = next(f for f in cosmo1.families if f.equation is not None)
    c = residual_order_check(cosmo1.problem, f, dict(POINT, q=Fraction(1)))
    assert c.exact and c.passed and c.warnings[0].startswith("c1 roots")


def test_missing_parameter(cosmo1):
    f = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    with pytest.raises(ResidualError, match="no numeric value"):
        residual_order_check(cosmo1.problem, f, {"q": Fraction(1, 2)})


def test_grid_must_increase(cosmo1):
    f = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    with pytest.raises(ResidualError, match="strictly increasing"):
        residual_order_check(cosmo1.problem, f, POINT, grid=[1e-4, 1e-6, 1e-8])


def test_slope_is_least_squares(cosmo1):
    f = corpus.find_family(cosmo1, "2/(3*gamma)", "-1")
    c = residual_order_check(cosmo1.problem, f, POINT)
    x, y = np.log(c.grid), np.log(c.residuals)
    assert c.slope == pytest.approx(np.polyfit(x, y, 1)[0], abs=1e-9)


def test_csv(tmp_path, pain3):
    f = pain3.families[0]
    checks = [residual_order_check(pain3.problem, f, {"beta": Fraction(1, 3)})]
    out = tmp_path / "r.csv"
    write_checks_csv(checks, out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["family", "point", "t", "residual"] and len(rows) == 41
    checks[0].write_csv(tmp_path / "one.csv")
    assert (tmp_path / "one.csv").read_text().startswith("family,t,residual")


def test_pick_points_inside_region(cosmo2):
    for f in cosmo2.families:
        if f.status == "excluded":
            continue
        pts = pick_points(cosmo2.problem, f)
        assert len(pts) == 3
        alg = cosmo2.problem.alg
        for p in pts:
            assert f.region.contains([p.get(s.name, Fraction(0)) for s in alg.symbols])


def test_infinity_limit():
    from gpx.frontend.problem import parse_problem

    # y'' = 2 y^3 has y = 1/t; at infinity the leading balance is the same
    p = parse_problem("ode D(y,2) - 2*y^3 + y*D(y,1)^2\nlimit infinity\norder 2\n")
    res = run_expand(p)
    (label, rows), = res.table
    # rows ascend in n even though cases are walked downward
    assert [(r.describe(), str(r.exp)) for r in rows] == [("n1<=-1", "n - 2"), ("-1<n1", "3*n")]
    for f in res.families:
        if f.status in ("active", "complete") and f.terms:
            c = residual_order_check(p, f, {})
            assert c.passed, (f.id, c.slope, c.predicted)
