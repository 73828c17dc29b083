import csv
import json

import pytest

from gpx.cli import main
from gpx.corpus import data_path

PAINLEVE = str(data_path("painleve_beta.gpx"))


@pytest.fixture
def simple(tmp_path):
    p = tmp_path / "simple.gpx"
    p.write_text("ode D(y,2) - 2*y^3 + y*D(y,1)^2\norder 2\n")
    return str(p)


def test_expand_json(capsys):
    assert main(["expand", PAINLEVE, "--order", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert {"ode", "config", "critical_values", "families"} <= set(d)
    assert d["config"]["order"] == 2


def test_expand_text_and_param(capsys):
    assert main(["expand", PAINLEVE, "--order", "1", "--param", "beta=1/20", "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ode: ") and "family F1" in out


def test_expand_infinity(simple, capsys):
    assert main(["expand", simple, "--limit", "infinity"]) == 0
    assert json.loads(capsys.readouterr().out)["config"]["limit"] == "infinity"


def test_branch(capsys):
    assert main(["branch", PAINLEVE]) == 0
    kinds = {c["kind"] for c in json.loads(capsys.readouterr().out)["critical_values"]}
    assert {"exponent-branch-point", "log-merge"} <= kinds


def test_verify_writes_csv(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    assert main(["verify", PAINLEVE, "--family", "F1", "--csv", str(out), "--points", "1"]) == 0
    assert capsys.readouterr().out.startswith("PASS F1")
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["family", "point", "t", "residual"] and len(rows) == 41


def test_verify_failure_exit(capsys):
    # a tolerance far below the fit noise makes the slope checks fail
    assert main(["verify", PAINLEVE, "--family", "F2", "--tol", "1e-12", "--points", "1"]) == 1
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["expand", "/nonexistent/file.gpx"],
        ["expand", PAINLEVE, "--order", "0"],
        ["expand", PAINLEVE, "--param", "beta"],
        ["expand", PAINLEVE, "--param", "gamma=1"],
        ["expand", PAINLEVE, "--limit", "sideways"],
        ["verify", PAINLEVE, "--family", "F99"],
        ["verify", PAINLEVE, "--tol", "-1"],
        ["frobnicate"],
    ],
)
def test_input_errors(argv, capsys):
    assert main(argv) == 2


def test_bad_file_contents(tmp_path, capsys):
    p = tmp_path / "bad.gpx"
    p.write_text("ode D(y,2) + * y\n")
    assert main(["expand", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_internal_error(monkeypatch, capsys):
    from gpx import estimator

    def boom(*a, **kw):
        raise AssertionError("invariant")

    monkeypatch.setattr(estimator, "run_expand", boom)
    assert main(["expand", PAINLEVE]) == 3
    assert "internal error" in capsys.readouterr().err
