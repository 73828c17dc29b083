"""Acceptance run: corpus rows grouped by criterion, timing, properties, residuals.

Each criterion yields a ``Criterion`` with the sub-rows behind it; the
acceptance test prints one PASS/FAIL line per criterion.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

from . import corpus, properties
from .pipeline import run_expand
from .residual import pick_points, residual_order_check

COSMO = "viscous_cosmology.gpx"
PAINLEVE = "painleve_beta.gpx"

LEADING_LIMIT = 5.0  # seconds for the M = 1 run
RESIDUAL_LIMIT = 60.0  # seconds for the residual suite
RESIDUAL_POINTS = 3
CONTROL_PERTURBATION = 0.1


@dataclass
class Criterion:
    number: int
    title: str
    rows: list = dc_field(default_factory=list)  # CorpusRow
    notes: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        failed = [r.name for r in self.rows if not r.passed]
        tail = f"  failed: {'; '.join(failed)}" if failed else ""
        return f"{tag}  criterion {self.number}: {self.title} ({len(self.rows)} checks){tail}"


def _pick(rows: list, *prefixes: str) -> list:
    return [r for r in rows if r.name.startswith(prefixes)]


def leading_set(rows: list) -> Criterion:
    c = Criterion(1, "F1 and N1e at M=1, runtime")
    c.rows = _pick(rows, "F1 exponent set", "N1e equality exponents")
    start = time.perf_counter()
    run_expand(corpus.fixture(COSMO), 1)
    took = time.perf_counter() - start
    c.rows.append(corpus.CorpusRow(f"M=1 runtime under {LEADING_LIMIT:g} s", took < LEADING_LIMIT, f"{took:.2f} s"))
    return c


def table(rows: list) -> Criterion:
    c = Criterion(2, "leading exponent per n1-case and q-block")
    c.rows = _pick(rows, "Table block")
    return c


def leading_coefficients(rows: list) -> Criterion:
    c = Criterion(3, "leading coefficients and their conditions")
    c.rows = _pick(rows, "leading c1", "n1 = 2/(q - 3) positivity", "c1-arbitrary")
    return c


def critical_values(rows: list) -> Criterion:
    c = Criterion(4, "critical values and the q=1 cubic")
    c.rows = _pick(rows, "critical values", "q=1 cubic")
    return c


def subleading(rows: list) -> Criterion:
    c = Criterion(5, "subleading terms and pruned cases")
    c.rows = _pick(rows, "subleading", "c1 = 2/(3 gamma", "pruned case")
    c.notes = [f"{r.name}: {r.detail}" for r in c.rows if r.detail]
    return c


def painleve(rows: list) -> Criterion:
    c = Criterion(6, "Painleve-type test equation")
    c.rows = _pick(rows, "alpha =", "resonance", "beta = 1/8")
    return c


@lru_cache(maxsize=None)
def property_results() -> tuple:
    """The five invariants over both fixtures and the small pool, computed once."""
    results = [corpus._run(COSMO, 2), corpus._run(PAINLEVE, None)]
    problems = [corpus.fixture(COSMO), corpus.fixture(PAINLEVE)]
    return tuple(properties.run_all(results, problems))


def property_suite() -> Criterion:
    c = Criterion(7, f"property suite, {properties.SAMPLES} samples each")
    for p in property_results():
        c.rows.append(corpus.CorpusRow(p.name, p.passed, f"{p.samples} samples, {len(p.violations)} violations"))
    return c


def residual_checks(points: int = RESIDUAL_POINTS) -> tuple:
    """Slope checks at ``points`` parameter points per family plus c2 controls.

    Returns (rows, checks).
    """
    rows, checks = [], []
    for name, order in ((COSMO, 2), (PAINLEVE, None)):
        res = corpus._run(name, order)
        for fam in res.families:
            if fam.status == "excluded":
                continue
            pts = pick_points(res.problem, fam, count=points)
            mine = [residual_order_check(res.problem, fam, v) for v in pts]
            checks.extend(mine)
            ok = len(mine) >= points and all(chk.passed for chk in mine)
            detail = ", ".join("exact" if chk.exact else f"{chk.slope:.3f}/{chk.predicted:.3f}" for chk in mine)
            rows.append(corpus.CorpusRow(f"{name} {fam.id} slopes", ok, detail or "no point found"))
            # negative control: a wrong c2 must spoil the slope
            if fam.M >= 2 and fam.terms and "c2" not in fam.free and pts:
                bad = residual_order_check(res.problem, fam, pts[0], perturb={1: CONTROL_PERTURBATION})
                rows.append(corpus.CorpusRow(f"{name} {fam.id} perturbed c2 fails", not bad.passed, f"slope {bad.slope:.3f}"))
    return rows, checks


def residual_suite() -> Criterion:
    c = Criterion(8, "numeric residual slopes and negative controls")
    start = time.perf_counter()
    rows, _ = residual_checks()
    took = time.perf_counter() - start
    c.rows = rows
    c.rows.append(corpus.CorpusRow(f"residual suite under {RESIDUAL_LIMIT:g} s", took < RESIDUAL_LIMIT, f"{took:.1f} s"))
    return c


def run_acceptance() -> list:
    rows = corpus.corpus_regression()
    return [
        leading_set(rows),
        table(rows),
        leading_coefficients(rows),
        critical_values(rows),
        subleading(rows),
        painleve(rows),
        property_suite(),
        residual_suite(),
    ]
