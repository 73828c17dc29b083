import pytest

from gpx.corpus import data_path
from gpx.estimator import NotFittedError, SeriesExpander

PAINLEVE = "ode D(y,2) + y*D(y,1) + beta*y^3\nparam beta 0 inf\norder 2\n"


def test_params_round_trip():
    est = SeriesExpander(order=2, limit="zero")
    assert est.get_params() == {"order": 2, "limit": "zero", "params": None, "tol": 0.1}
    assert est.set_params(order=3) is est and est.order == 3
    assert "order=3" in repr(est)


def test_unknown_param():
    with pytest.raises(ValueError, match="invalid parameter"):
        SeriesExpander().set_params(depth=2)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SeriesExpander().report()


@pytest.mark.parametrize("source", ["text", "path"])
def test_fit_attributes(source):
    src = PAINLEVE if source == "text" else str(data_path("painleve_beta.gpx"))
    est = SeriesExpander(order=2).fit(src)
    assert est.families_ and est.table_
    assert all(f.M <= 2 for f in est.families_)
    assert {c.kind for c in est.critical_values_} >= {"exponent-branch-point"}
    assert est.family(est.families_[0].id) is est.families_[0]


def test_params_pin_values():
    est = SeriesExpander(order=1, params={"beta": 1}).fit(PAINLEVE)
    # beta = 1 > 1/8, so the singular roots are complex and drop out
    assert all(not f.terms or str(f.terms[0].exp) != "-1" or f.status == "excluded" for f in est.families_)


def test_verify_and_score():
    est = SeriesExpander(order=2).fit(PAINLEVE)
    checks = est.verify(points=2)
    assert checks and all(len(v) <= 2 for v in checks.values())
    assert est.score() == 1.0
