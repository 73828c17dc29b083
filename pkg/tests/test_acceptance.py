"""One PASS/FAIL line per acceptance criterion, each at its stated tolerance."""
import pytest

from gpx import acceptance, corpus


@pytest.fixture(scope="module")
def rows():
    return corpus.corpus_regression()


@pytest.fixture(scope="module")
def criteria():
    return {}


BUILDERS = {
    1: lambda rows: acceptance.leading_set(rows),
    2: lambda rows: acceptance.table(rows),
    3: lambda rows: acceptance.leading_coefficients(rows),
    4: lambda rows: acceptance.critical_values(rows),
    5: lambda rows: acceptance.subleading(rows),
    6: lambda rows: acceptance.painleve(rows),
    7: lambda rows: acceptance.property_suite(),
    8: lambda rows: acceptance.residual_suite(),
}


@pytest.mark.parametrize("number", sorted(BUILDERS))
def test_criterion(number, rows, criteria, capsys):
    c = BUILDERS[number](rows)
    criteria[number] = c
    with capsys.disabled():
        print()
        print(c.line())
        for r in c.rows:
            print("    " + r.line())
    assert c.passed, [r.line() for r in c.rows if not r.passed]


def test_summary(criteria, capsys):
    with capsys.disabled():
        print()
        for n in sorted(criteria):
            print(criteria[n].line())
    assert sorted(criteria) == sorted(BUILDERS) and all(c.passed for c in criteria.values())
