import copy

import pytest

from gpx import corpus


@pytest.fixture(scope="module")
def rows():
    return corpus.corpus_regression()


def test_every_row_passes(rows):
    failed = [r.line() for r in rows if not r.passed]
    assert not failed, failed
    assert len(rows) >= 20


def test_misprints_are_reported(rows):
    details = {r.name: r.detail for r in rows}
    assert any("2k^4 - v^2 holds" in d for d in details.values())
    assert any("overall sign" in d and "(1 - sqrt2 v)" in n for n, d in details.items())


def _set(d, path, value):
    for k in path[:-1]:
        d = d[k]
    d[path[-1]] = value


# each mutation must turn at least one row into a FAIL
MUTATIONS = [
    (("viscous_cosmology", "F1", 0), "7*n"),
    (("viscous_cosmology", "N1e", 1), "3/(q - 3)"),
    (("viscous_cosmology", "table", "q<1", 0, "exponent"), "6*n"),
    (("viscous_cosmology", "table", "3<q", 1, "hi_closed"), False),
    (("viscous_cosmology", "criticals", "equality-exponent-divergence"), ["0", "2", "3"]),
    (("viscous_cosmology", "cubic", 0), "2*k**2/(3*gamma**2*v**3)"),
    (("viscous_cosmology", "leading", 0, "c1"), "2/(5*gamma)"),
    (("viscous_cosmology", "leading", 1, "conditions"), []),
    (("viscous_cosmology", "power_family_positivity"), "(q - 3)**2/(gamma*q - gamma + 2)"),
    (("viscous_cosmology", "arbitrary_exponent"), "-gamma/(gamma + 1)"),
    (("viscous_cosmology", "subleading", 0, "c2"), "alpha/(gamma*(3 - q))*(2/(3*gamma))**q"),
    (("viscous_cosmology", "subleading", 2, "n2"), "(2 + q)/(q - 3)"),
    (("viscous_cosmology", "pm_pair", "num"), "9*sqrt(2)*v**4*(sqrt(2)*v - s)**2*(3*gamma/2)**q*(1 + s*sqrt(2)*v)**(q - 3)"),
    (("viscous_cosmology", "pruned", 1, "D"), "-31*v**2/(81*gamma**5)"),
    (("painleve_beta", "alpha", 0), "(1 + sqrt(1 - 4*beta))/(2*beta)"),
    (("painleve_beta", "realness"), "1 - 4*beta >= 0"),
    (("painleve_beta", "resonance"), "3 - alpha"),
    (("painleve_beta", "branch_value"), "1/4"),
]


@pytest.mark.parametrize("path, value", MUTATIONS, ids=["/".join(map(str, p)) for p, _ in MUTATIONS])
def test_perturbed_expectation_fails(path, value):
    exp = copy.deepcopy(corpus.load_expected())
    _set(exp, path, value)
    got = corpus.corpus_regression(exp)
    assert any(not r.passed for r in got)


def test_input_is_not_mutated():
    exp = corpus.load_expected()
    before = copy.deepcopy(exp)
    corpus.corpus_regression(exp)
    assert exp == before
