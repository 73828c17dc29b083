"""Numeric residual checks for truncated series.

The operator is evaluated on ``y_M`` over a log-spaced grid with mpmath and
the log-log slope of ``|D[y_M](t)|`` is compared with the smallest exponent
left in the collected residual (largest, for ``t -> infinity``).
"""
from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import mpmath
import numpy as np

from .algebra.powers import PowerContext, radical_mp
from .algebra.radical import RadicalExpr
from .algebra.region import Bound, Region
from .algebra.solve import subs_radical
from .coeffs import Family
from .expansion import SeriesTerm, substitute_truncation
from .frontend.problem import Problem

log = logging.getLogger(__name__)

DEFAULT_TOL = 0.1


class ResidualError(ValueError):
    """The family cannot be evaluated at the requested point."""


@dataclass
class ResidualCheck:
    family: str
    point: dict
    grid: list  # t values, strictly monotone
    residuals: list  # |D[y_M](t)|
    slope: float
    predicted: float
    tol: float = DEFAULT_TOL
    passed: bool = False
    exact: bool = False
    warnings: list = dc_field(default_factory=list)

    def rows(self) -> list:
        return [(t, r) for t, r in zip(self.grid, self.residuals)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["family", "t", "residual"])
            for t, r in self.rows():
                w.writerow([self.family, repr(t), repr(r)])

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "point": {k: str(v) for k, v in sorted(self.point.items())},
            "slope": _dec(self.slope),
            "predicted": _dec(self.predicted),
            "tol": _dec(self.tol),
            "passed": self.passed,
            "exact": self.exact,
            "warnings": list(self.warnings),
        }


def _dec(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    return f"{x:.12g}"


def default_grid(direction: int = 1, count: int = 40) -> list:
    """40 log-spaced points on [1e-8, 1e-4], mirrored to [1e4, 1e8] at infinity."""
    lo, hi = (-8, -4) if direction > 0 else (4, 8)
    return [float(t) for t in np.logspace(lo, hi, count)]


def _point_region(problem: Problem, values: Mapping) -> Region:
    alg = problem.alg
    bounds = {alg.index(p.name): p.bound for p in problem.params}
    for name, v in values.items():
        v = Fraction(v)
        bounds[alg.index(name)] = Bound(v, v, False, False)
    return Region(alg, bounds=bounds)


def specialize_terms(problem: Problem, fam: Family, values: Mapping) -> tuple:
    """Family terms with numeric parameters substituted (free constants kept)."""
    alg = problem.alg
    region = _point_region(problem, values)
    ctx = PowerContext(alg, region)
    vals = {k: RadicalExpr.rational(alg.const(Fraction(v))) for k, v in values.items()}
    idx = {alg.index(k): v for k, v in vals.items()}
    out = []
    for t in fam.terms:
        c = t.coeff.with_context(ctx).subs(vals).with_context(ctx)
        out.append(SeriesTerm(c, subs_radical(alg, t.exp, idx)))
    return ctx, out


def _num(alg, x: RadicalExpr, dps: int):
    return radical_mp(x, [0] * len(alg.symbols), dps)


def numeric_series(problem: Problem, fam: Family, values: Mapping, free: Optional[Mapping] = None, dps: int = 60) -> list:
    """[(coefficient, exponent)] as mpmath numbers."""
    alg = problem.alg
    _, terms = specialize_terms(problem, fam, values)
    syms = _free_values(fam, free)
    point = {k: Fraction(v) for k, v in values.items()}
    out = []
    with mpmath.workdps(dps):
        for t in terms:
            out.append((t.coeff.evalf(point, syms, dps), _num(alg, t.exp, dps)))
    return out


def _free_values(fam: Family, free: Optional[Mapping]) -> dict:
    syms = {name: 1 for name in fam.free}
    syms.update(free or {})
    return syms


def _key(e) -> float:
    return round(float(e), 9)


def _add_into(acc: dict, e, c) -> None:
    k = _key(e)
    if k in acc:
        acc[k] = (acc[k][0], acc[k][1] + c)
    else:
        acc[k] = (e, c)


def _series_mul(a: dict, b: dict, cut) -> dict:
    out: dict = {}
    for ea, ca in a.values():
        for eb, cb in b.values():
            if cut is None or ea + eb <= cut:
                _add_into(out, ea + eb, ca * cb)
    return out


def _series_pow(terms: list, p, degree: int, direction: int) -> dict:
    """``(sum c t^e)^p`` as leading power times a binomial series in the rest."""
    terms = sorted(terms, key=lambda ce: direction * ce[1])
    c0, e0 = terms[0]
    lead = {_key(p * e0): (p * e0, mpmath.power(mpmath.mpc(c0), p))}
    w = {}
    for c, e in terms[1:]:
        _add_into(w, direction * (e - e0), c / c0)
    if not w:
        return lead
    integral = p == int(p) and p >= 0
    top = int(p) if integral else degree
    out: dict = {}
    wm = {0.0: (mpmath.mpf(0), mpmath.mpf(1))}
    binom = mpmath.mpf(1)
    for m in range(top + 1):
        if m:
            binom = binom * (p - m + 1) / m
            wm = _series_mul(wm, w, None)
        for e, c in wm.values():
            _add_into(out, p * e0 + direction * e, binom * c * lead[_key(p * e0)][1])
    return out


def residual_exponents_numeric(op: Sequence, series: Sequence, direction: int, degree: int, dps: int = 60) -> list:
    """Exponents of the collected residual with a nonzero coefficient, dominant first."""
    with mpmath.workdps(dps):
        derivs = {}
        for h in range(0, 1 + max(len(pw) for _, _, pw in op)):
            terms = []
            for c, e in series:
                ff = mpmath.mpf(1)
                for j in range(h):
                    ff *= e - j
                if ff * c != 0:
                    terms.append((c * ff, e - h))
            derivs[h] = terms
        total: dict = {}
        scale = mpmath.mpf(0)
        for coef, b0, powers in op:
            prod = {0.0: (mpmath.mpf(0), mpmath.mpc(coef))}
            zero = False
            for h, p in [(0, b0)] + list(enumerate(powers, start=1)):
                if not p:
                    continue
                if not derivs[h]:
                    zero = True
                    break
                prod = _series_mul(prod, _series_pow(derivs[h], p, degree, direction), None)
            if zero:
                continue
            for e, c in prod.values():
                _add_into(total, e, c)
                scale = max(scale, abs(c))
        tiny = mpmath.mpf(10) ** (-dps // 2) * (scale + 1)
        live = [float(e) for e, c in total.values() if abs(c) > tiny]
    return sorted(live, reverse=direction < 0)


def residual_exponents(problem: Problem, fam: Family, values: Mapping, free: Optional[Mapping] = None, dps: int = 60) -> list:
    """Dominant-first exponents left in the residual of the truncated series.

    The binomial expansions are cut at u-degree M+1 and M+2; the dominant
    exponent is accepted once both agree.
    """
    series = numeric_series(problem, fam, values, free, dps)
    op = numeric_operator(problem, values, dps)
    direction = problem.config.direction
    best = None
    for degree in (len(series) + 1, len(series) + 2):
        live = residual_exponents_numeric(op, series, direction, degree, dps)
        if best is not None and live[:1] == best[:1]:
            return live
        best = live
    return best


def predicted_exponent(problem: Problem, fam: Family, values: Mapping, free: Optional[Mapping] = None, dps: int = 60) -> Optional[float]:
    """Dominant exponent of the collected residual; None when it vanishes."""
    live = residual_exponents(problem, fam, values, free, dps)
    return live[0] if live else None


def equation_series(problem: Problem, fam: Family, values: Mapping, dps: int = 60) -> list:
    """Numeric one-term series for a family whose c1 solves an unresolved polynomial."""
    alg = problem.alg
    n1, coeffs = fam.equation
    pt = [Fraction(values.get(s.name, 0)) for s in alg.symbols]
    with mpmath.workdps(dps):
        cs = [radical_mp(c, pt, dps) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        roots = mpmath.polyroots(cs[::-1], maxsteps=200, extraprec=dps) if len(cs) > 1 else []
        e = radical_mp(n1, pt, dps)
        out = []
        for r in roots:
            r = mpmath.mpc(r)
            if abs(r.imag) > mpmath.mpf(10) ** (-dps // 2) * (1 + abs(r)):
                continue
            r = r.real
            sign = problem.config.leading_sign
            if (sign == ">" and r <= 0) or (sign == "<" and r >= 0):
                continue
            out.append([(r, e)])
    return out


def pick_points(problem: Problem, fam: Family, count: int = 3, min_gap: float = 0.5, seed: int = 7, tries: int = 60, fixed: Optional[Mapping] = None) -> list:
    """Parameter points inside the family's region, spread over the region.

    Points where the two leading residual exponents lie closer than
    ``min_gap`` are skipped: there the log-log slope has not settled on the
    grid.  Falls back to the best separated candidates found.
    """
    rng = random.Random(seed)
    alg = problem.alg
    idx = {alg.index(k): Fraction(v) for k, v in (fixed or {}).items()}
    names = [p.name for p in problem.params]
    good, spare = [], []
    for _ in range(tries):
        pt = fam.region.sample(rng, fixed=idx)
        if pt is None:
            break
        values = {n: pt[alg.index(n)] for n in names}
        if any(values == g for g, _ in good + spare):
            continue
        if not fam.terms:
            good.append((values, float("inf")))
        else:
            live = residual_exponents(problem, fam, values)
            gap = abs(live[1] - live[0]) if len(live) > 1 else float("inf")
            (good if gap >= min_gap else spare).append((values, gap))
        if len(good) >= count:
            break
    spare.sort(key=lambda x: -x[1])
    return [v for v, _ in (good + spare)[:count]]


def numeric_operator(problem: Problem, values: Mapping, dps: int = 60) -> list:
    """Monomials as (coefficient, power of y, derivative powers) numbers."""
    alg = problem.alg
    ode = problem.ode.specialize({k: Fraction(v) for k, v in values.items()})
    out = []
    with mpmath.workdps(dps):
        for m in ode.monomials:
            b0 = alg.constant_value(m.b0)
            out.append((_num(alg, m.coeff, dps), mpmath.mpf(b0.numerator) / b0.denominator, tuple(m.powers)))
    return out


def evaluate_residual(op: Sequence, series: Sequence, t, dps: int = 60):
    """``|D[y](t)|`` for ``y = sum c t^e``; ``op`` from :func:`numeric_operator`."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        derivs = {}

        def deriv(h):
            if h not in derivs:
                s = mpmath.mpf(0)
                for c, e in series:
                    ff = mpmath.mpf(1)
                    for j in range(h):
                        ff *= e - j
                    s += c * ff * mpmath.power(t, e - h)
                derivs[h] = s
            return derivs[h]

        total = mpmath.mpc(0)
        for coef, b0, powers in op:
            val = mpmath.mpc(coef)
            if b0:
                val *= mpmath.power(mpmath.mpc(deriv(0)), b0)
            for h, p in enumerate(powers, start=1):
                if p:
                    val *= mpmath.power(deriv(h), p)
            total += val
        return abs(total)


def _fit_slope(grid: Sequence[float], res: Sequence) -> float:
    x = np.log(np.asarray(grid, dtype=float))
    y = np.array([float(mpmath.log(r)) for r in res])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def residual_order_check(
    problem: Problem,
    fam: Family,
    values: Mapping,
    grid: Optional[Sequence[float]] = None,
    tol: float = DEFAULT_TOL,
    free: Optional[Mapping] = None,
    perturb: Optional[Mapping[int, float]] = None,
    dps: int = 60,
) -> ResidualCheck:
    """Fit the decay of ``|D[y_M]|`` and compare with the predicted exponent.

    ``perturb`` maps a term index to a relative change of its coefficient;
    the prediction always comes from the unperturbed family, so this is the
    negative control.
    """
    missing = [p.name for p in problem.params if p.name not in values]
    if missing:
        raise ResidualError(f"no numeric value for {', '.join(missing)}")
    direction = problem.config.direction
    grid = list(grid) if grid is not None else default_grid(direction)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ResidualError("grid must be strictly increasing")
    point = {k: Fraction(v) for k, v in values.items()}
    if not fam.terms:
        return _equation_check(problem, fam, values, grid, tol, dps)
    series = numeric_series(problem, fam, values, free, dps)
    for j, rel in (perturb or {}).items():
        c, e = series[j]
        series[j] = (c * (1 + mpmath.mpf(rel)), e)
    pred = predicted_exponent(problem, fam, values, free, dps)
    op = numeric_operator(problem, values, dps)
    res = [evaluate_residual(op, series, t, dps) for t in grid]
    warnings = []
    # the largest term sets the round-off floor of the sum
    floor = mpmath.mpf(10) ** (-(dps - 15))
    keep = [(t, r) for t, r in zip(grid, res) if mpmath.isfinite(r) and r > 0]
    if len(keep) < len(grid):
        warnings.append(f"grid shrunk to {len(keep)} points (non-finite or zero residuals)")
    if pred is None and not perturb:
        ok = all(r < floor * _scale(problem, series, values, t, dps) for t, r in zip(grid, res))
        return ResidualCheck(fam.id, point, grid, [float(r) for r in res], float("nan"), float("inf"), tol, ok, True, warnings)
    if len(keep) < 3:
        raise ResidualError("fewer than three usable grid points")
    slope = _fit_slope([t for t, _ in keep], [r for _, r in keep])
    target = pred if pred is not None else float("inf")
    passed = abs(slope - target) <= tol
    return ResidualCheck(fam.id, point, grid, [float(r) for r in res], slope, target, tol, passed, False, warnings)


def _equation_check(problem, fam, values, grid, tol, dps) -> ResidualCheck:
    """Every admissible numeric root of the leading polynomial gives an exact solution."""
    if fam.equation is None:
        raise ResidualError(f"family {fam.id} has no terms")
    candidates = equation_series(problem, fam, values, dps)
    point = {k: Fraction(v) for k, v in values.items()}
    if not candidates:
        return ResidualCheck(fam.id, point, grid, [], float("nan"), float("inf"), tol, False, True, ["no admissible real root"])
    op = numeric_operator(problem, values, dps)
    floor = mpmath.mpf(10) ** (-(dps - 15))
    ok, worst = True, [mpmath.mpf(0)] * len(grid)
    for series in candidates:
        res = [evaluate_residual(op, series, t, dps) for t in grid]
        ok &= all(r < floor * _scale(problem, series, values, t, dps) for t, r in zip(grid, res))
        worst = [max(a, b) for a, b in zip(worst, res)]
    roots = ", ".join(mpmath.nstr(s[0][0], 12) for s in candidates)
    return ResidualCheck(fam.id, point, grid, [float(r) for r in worst], float("nan"), float("inf"), tol, ok, True, [f"c1 roots {roots}"])


def write_checks_csv(checks: Sequence[ResidualCheck], path) -> None:
    """All grids in one file, one row per (check, t)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "point", "t", "residual"])
        for c in checks:
            label = " ".join(f"{k}={v}" for k, v in sorted(c.point.items()))
            for t, r in c.rows():
                w.writerow([c.family, label, repr(t), repr(r)])


def _scale(problem: Problem, series, values, t, dps):
    """Size of the individual monomials, for a relative zero test."""
    big = [(abs(c), e) for c, e in series]
    with mpmath.workdps(dps):
        y = sum(c * mpmath.power(t, e) for c, e in big)
        return (abs(y) + 1) ** 6 * (1 + 1 / mpmath.mpf(t)) ** 6

