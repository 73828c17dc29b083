"""Estimator-style facade over the expansion pipeline.

    est = SeriesExpander(order=2).fit("model.gpx")
    est.families_, est.critical_values_

Parameters follow the scikit-learn convention (constructor arguments only,
``get_params``/``set_params``) without depending on scikit-learn.
"""
from __future__ import annotations

import inspect
import os
from typing import Optional, Union

from .frontend.problem import Problem, load_problem, parse_problem
from .pipeline import ExpansionResult, run_expand
from .report import Report, build_report
from .residual import DEFAULT_TOL, ResidualCheck, pick_points, residual_order_check


class NotFittedError(RuntimeError):
    pass


class SeriesExpander:
    def __init__(self, order: Optional[int] = None, limit: Optional[str] = None, params: Optional[dict] = None, tol: float = DEFAULT_TOL):
        self.order = order
        self.limit = limit
        self.params = params
        self.tol = tol

    # -- parameter protocol --------------------------------------------------

    @classmethod
    def _param_names(cls) -> list:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "SeriesExpander":
        valid = self._param_names()
        for k, v in params.items():
            if k not in valid:
                raise ValueError(f"invalid parameter {k!r} for {type(self).__name__}")
            setattr(self, k, v)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    # -- fitting -------------------------------------------------------------

    def _problem(self, problem: Union[Problem, str, os.PathLike]) -> Problem:
        if isinstance(problem, Problem):
            p = problem
        elif isinstance(problem, str) and "\n" in problem:
            p = parse_problem(problem)
        else:
            p = load_problem(problem)
        if self.limit is not None:
            p = p.with_config(limit=self.limit)
        if self.params:
            p = p.with_values(self.params)
        return p

    def fit(self, problem, y=None) -> "SeriesExpander":
        """Run the expansion; ``problem`` is a Problem, a path, or file text."""
        p = self._problem(problem)
        self.result_ = run_expand(p, self.order)
        self.problem_ = self.result_.problem
        self.families_ = list(self.result_.families)
        self.critical_values_ = list(self.result_.criticals)
        self.table_ = list(self.result_.table)
        return self

    def _check(self) -> ExpansionResult:
        if not hasattr(self, "result_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")
        return self.result_

    def family(self, fid: str):
        return self._check().family(fid)

    def report(self, residuals: Optional[dict] = None) -> Report:
        return build_report(self._check(), self.order, residuals)

    def verify(self, family: Optional[str] = None, points: int = 3) -> dict:
        """Residual checks per family id; excluded families are skipped.

        Parameters fixed through ``params`` pin the sampled points.
        """
        res = self._check()
        out: dict = {}
        for fam in res.families:
            if fam.status == "excluded" or (family is not None and fam.id != family):
                continue
            pts = pick_points(res.problem, fam, count=points)
            out[fam.id] = [residual_order_check(res.problem, fam, v, tol=self.tol) for v in pts]
        return out

    def score(self, problem=None, y=None) -> float:
        """Fraction of residual checks that pass."""
        if problem is not None:
            self.fit(problem)
        checks: list[ResidualCheck] = [c for cs in self.verify().values() for c in cs]
        return sum(c.passed for c in checks) / len(checks) if checks else 1.0
