import pytest

from gpx import properties
from gpx.acceptance import property_results
from gpx.frontend.problem import parse_problem

NAMES = ["exponent ordering", "scaling invariance", "y^m multiplication invariance", "free-constant budget", "case-partition exhaustiveness"]


@pytest.mark.parametrize("name", NAMES)
def test_property(name):
    res = {p.name: p for p in property_results()}[name]
    assert res.samples >= properties.SAMPLES
    assert not res.violations, res.violations[:3]


def test_exhaustiveness_at_infinity():
    p = parse_problem("ode D(y,2) - 2*y^3 + y*D(y,1)^2\nlimit infinity\norder 1\n")
    res = properties.case_exhaustiveness([p], samples=50, seed=3)
    assert res.passed or (res.samples == 50 and not res.violations)


def test_exhaustiveness_catches_a_missing_case(monkeypatch):
    real = properties.partition_cases

    def drop_points(*a, **kw):
        return [c for c in real(*a, **kw) if c.kind != "point"]

    monkeypatch.setattr(properties, "partition_cases", drop_points)
    p = parse_problem("ode D(y,2) + y*D(y,1) + beta*y^3\nparam beta 0 inf\norder 1\n")
    assert properties.case_exhaustiveness([p], samples=60).violations


def test_scaling_detects_a_changed_family(monkeypatch):
    # pretend the scaled run lost a family
    real = properties.run_expand

    def lossy(problem, order=None):
        res = real(problem, order)
        res.families = res.families[1:]
        return res

    monkeypatch.setattr(properties, "run_expand", lossy)
    assert properties.scaling_invariance(samples=3).violations


def test_budget_flags_too_many_free_constants():
    res = properties._base_run(0)
    fam = res.families[0]
    saved = list(fam.free)
    try:
        fam.free[:] = ["c1", "c2", "c3"]
        assert properties.free_constant_budget([res]).violations
    finally:
        fam.free[:] = saved
