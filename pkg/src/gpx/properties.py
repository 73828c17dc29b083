"""Randomized invariants of the engine.

Each check draws its samples from a seeded generator and returns a
``PropertyResult`` listing any violations, so the same code backs the unit
tests and the acceptance run.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .algebra.powers import PowerContext
from .algebra.radical import RadicalExpr
from .branching import critical_params, equality_exponents, param_subregions, partition_cases
from .expansion import collect_terms, substitute_leading
from .frontend.problem import Problem, parse_problem
from .pipeline import ExpansionResult, run_expand

SAMPLES = 100

# small problems that expand in well under a second
POOL = (
    "ode D(y,2) + y*D(y,1) + beta*y^3\nparam beta 0 inf\norder 2\n",
    "ode D(y,2) - 2*y^3 + y*D(y,1)^2\norder 2\n",
    "ode D(y,2) + y*D(y,1) - y^2\norder 2\n",
    "ode D(y,2) - 2*y^3 + y*D(y,1)^2\nlimit infinity\norder 2\n",
)


@dataclass
class PropertyResult:
    name: str
    samples: int = 0
    violations: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.samples >= SAMPLES and not self.violations

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"; first: {self.violations[0]}" if self.violations else ""
        return f"{tag}  {self.name}: {self.samples} samples, {len(self.violations)} violations{extra}"


@lru_cache(maxsize=None)
def pool_problem(k: int) -> Problem:
    return parse_problem(POOL[k])


@lru_cache(maxsize=None)
def _base_run(k: int) -> ExpansionResult:
    return run_expand(pool_problem(k))


def signature(res: ExpansionResult) -> list:
    """Order-free summary of every family: status, (n_j, c_j), free constants."""
    return sorted((f.status, tuple((str(t.exp), str(t.coeff)) for t in f.terms), tuple(f.free)) for f in res.families)


def _random_factor(rng: random.Random) -> Fraction:
    num = rng.choice([x for x in range(-9, 10) if x])
    return Fraction(num, rng.randint(1, 9))


def scaling_invariance(samples: int = SAMPLES, seed: int = 11, sink: Optional[list] = None) -> PropertyResult:
    """A_i -> lambda A_i leaves every family unchanged."""
    rng = random.Random(seed)
    out = PropertyResult("scaling invariance")
    for _ in range(samples):
        k = rng.randrange(len(POOL))
        lam = _random_factor(rng)
        p = pool_problem(k)
        res = run_expand(replace(p, ode=p.ode.scaled(lam)))
        out.samples += 1
        if sink is not None:
            sink.append(res)
        if signature(res) != signature(_base_run(k)):
            out.violations.append(f"problem {k}, factor {lam}")
    return out


def y_power_invariance(samples: int = SAMPLES, seed: int = 12, sink: Optional[list] = None) -> PropertyResult:
    """Multiplying the equation by y^m leaves every family unchanged."""
    rng = random.Random(seed)
    out = PropertyResult("y^m multiplication invariance")
    for _ in range(samples):
        k = rng.randrange(len(POOL))
        m = rng.choice([-3, -2, -1, 1, 2, 3])
        p = pool_problem(k)
        res = run_expand(replace(p, ode=p.ode.times_y_power(m)))
        out.samples += 1
        if sink is not None:
            sink.append(res)
        if signature(res) != signature(_base_run(k)):
            out.violations.append(f"problem {k}, m = {m}")
    return out


def free_constant_budget(results: list) -> PropertyResult:
    """At most r - 1 free constants per family."""
    out = PropertyResult("free-constant budget")
    for res in results:
        r = res.problem.ode.order
        for f in res.families:
            out.samples += 1
            if len(f.free) > r - 1:
                out.violations.append(f"{f.id}: {f.free}")
    return out


def exponent_ordering(results: list, samples: int = SAMPLES, seed: int = 13, tries: int = 20) -> PropertyResult:
    """n_1, n_2, ... strictly monotone in the limit direction across each region."""
    rng = random.Random(seed)
    out = PropertyResult("exponent ordering")
    fams = [(res, f) for res in results for f in res.families if f.status != "excluded" and f.M >= 2]
    if not fams:
        return out
    for _ in range(samples * tries):
        if out.samples >= samples:
            break
        res, f = rng.choice(fams)
        alg = res.problem.alg
        pt = f.region.sample(rng, tries=200)
        if pt is None:
            continue
        fl = [float(x) for x in pt]
        e = [t.exp.evalf(alg, fl) for t in f.terms]
        if res.problem.config.direction < 0:
            e = e[::-1]
        out.samples += 1
        if not all(a < b for a, b in zip(e, e[1:])):
            out.violations.append(f"{f.id} at {fl}: {e}")
    return out


def _slices(problem: Problem) -> list:
    """(subregion, raw n-cases) for the leading analysis, as the pipeline cuts it."""
    alg = problem.alg
    region = problem.region()
    ode = problem.ode
    csum = collect_terms(substitute_leading(ode, PowerContext(alg, region)))
    crits = critical_params(alg, equality_exponents(alg, csum, region), region, problem.exponent_param)
    zero = RadicalExpr.rational(alg.zero)
    out = []
    for sub in param_subregions(alg, region, problem.exponent_param, crits):
        ode_s = ode.specialize(sub.values) if sub.values else ode
        cs = collect_terms(substitute_leading(ode_s, PowerContext(alg, sub.region)))
        eq_s = equality_exponents(alg, cs, sub.region)
        cases = partition_cases(alg, eq_s, sub, direction=problem.config.direction, skip_points=[zero], criticals=[])
        out.append((sub, cases))
    return out


def _value(alg, e: Optional[RadicalExpr], pt: list) -> Optional[float]:
    return None if e is None else e.evalf(alg, pt)


def case_exhaustiveness(problems: list, samples: int = SAMPLES, seed: int = 14, eps: float = 1e-9) -> PropertyResult:
    """Every admissible (n, p) lies in exactly one emitted case.

    A quarter of the n draws land exactly on an equality exponent so the
    point cases get exercised; n = 0 is outside the admissible range.
    """
    rng = random.Random(seed)
    out = PropertyResult("case-partition exhaustiveness")
    sliced = [(p, s) for p in problems for s in _slices(p)]
    while out.samples < samples:
        problem, (sub, cases) = rng.choice(sliced)
        alg = problem.alg
        pt = sub.region.sample(rng, tries=500)
        if pt is None:
            continue
        for name, v in sub.values.items():
            pt[alg.index(name)] = Fraction(v)
        fl = [float(x) for x in pt]
        live = [c for c in cases if c.sub.region.contains(pt)]
        points = [v for c in live if c.kind == "point" for v in [_value(alg, c.point, fl)]]
        bounds = [v for c in live if c.kind == "interval" for v in (_value(alg, c.lo, fl), _value(alg, c.hi, fl)) if v is not None]
        marks = points + bounds
        if marks and rng.random() < 0.25:
            n = rng.choice(marks)
        else:
            n = rng.uniform(-12.0, 12.0)
        if abs(n) <= eps:
            continue
        hits = []
        for c in live:
            if c.kind == "point":
                ok = abs(_value(alg, c.point, fl) - n) <= eps
            else:
                lo, hi = _value(alg, c.lo, fl), _value(alg, c.hi, fl)
                ok = (lo is None or lo + eps < n) and (hi is None or n < hi - eps)
            if ok:
                hits.append(c.describe())
        out.samples += 1
        if len(hits) != 1:
            out.violations.append(f"n={n:.6g} at {fl}: {hits}")
    return out


def run_all(results: list, problems: list, samples: int = SAMPLES) -> list:
    """The five invariants; ``results`` feed ordering and budget.

    The budget is also checked on every transformed run.
    """
    pool = [_base_run(k) for k in range(len(POOL))]
    runs: list = []
    scaling = scaling_invariance(samples, sink=runs)
    ypow = y_power_invariance(samples, sink=runs)
    return [
        exponent_ordering(results + pool, samples),
        scaling,
        ypow,
        free_constant_budget(results + pool + runs),
        case_exhaustiveness(problems + [pool_problem(k) for k in range(len(POOL))], samples),
    ]
