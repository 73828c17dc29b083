import json

import pytest

from gpx.corpus import data_path
from gpx.estimator import SeriesExpander
from gpx.report import Report


@pytest.fixture(scope="module")
def report(pain3):
    from gpx.report import build_report

    return build_report(pain3)


def test_schema(report):
    d = json.loads(report.to_json())
    assert {"ode", "config", "critical_values", "families"} <= set(d)
    assert d["config"]["limit"] == "zero"
    for f in d["families"]:
        assert {"id", "status", "terms", "region", "free"} <= set(f)
        for t in f["terms"]:
            assert isinstance(t["exponent"], str) and isinstance(t["coefficient"], str)


def test_json_round_trip(report):
    text = report.to_json()
    again = Report.from_json(text)
    assert again == report and again.to_json() == text


def test_byte_identical_across_runs():
    path = str(data_path("painleve_beta.gpx"))
    a = SeriesExpander(order=3).fit(path).report().to_json()
    b = SeriesExpander(order=3).fit(path).report().to_json()
    assert a == b


def test_floats_are_decimal_strings():
    est = SeriesExpander(order=2, params={"beta": "1/20"}).fit(str(data_path("painleve_beta.gpx")))
    d = json.loads(est.report().to_json())
    vals = [t["exponent_value"] for f in d["families"] for t in f["terms"]]
    assert vals and all(isinstance(v, str) for v in vals)
    float(vals[0])


def test_text_lists_every_family(report):
    text = report.to_text()
    for f in report.families:
        assert f"family {f.id} ({f.status})" in text
    assert "None" not in text


def test_residual_rows_in_report(pain3):
    est = SeriesExpander(order=3).fit(str(data_path("painleve_beta.gpx")))
    checks = est.verify(points=1)
    rep = est.report(checks)
    rows = [r for f in rep.families for r in f.residual]
    assert rows and all(r["passed"] for r in rows)
    assert Report.from_json(rep.to_json()) == rep
