"""Problem files: the operator, parameter declarations and run options.

::

    ode      <expression>          # continuation lines start with whitespace
    param    <name> [lower] [upper] [= value]
    expparam <name>
    limit    zero | infinity
    order    <M>
    assume   n1 < 0
    assume   c1 > 0

Bounds are open unless bracketed: ``param gamma [1 2]`` is 1 <= gamma <= 2,
``param v 0 1`` is 0 < v < 1, ``param alpha 0`` is alpha > 0; ``inf`` and
``-inf`` stand for a missing side.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Optional

import sympy

from ..algebra.field import Algebra
from ..algebra.region import Bound, Region
from .ode import Ode, OdeError, normalize, validate
from .parser import ParseError, parse_ode

RESERVED = {"y", "D", "n", "t", "sqrt", "inf"}
N_SYMBOL = "n"


class ProblemError(ValueError):
    """Malformed problem file (exit code 2 at the CLI)."""


@dataclass(frozen=True)
class ParamDecl:
    name: str
    bound: Bound = Bound()
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class ProblemConfig:
    limit: str = "zero"
    order: int = 1
    leading_sign: Optional[str] = None  # ">" or "<" for c1
    leading_exponent: tuple = ()  # tuple of (rel, Fraction) on n1

    def __post_init__(self):
        if self.order < 1:
            raise ProblemError("order must be a positive integer")
        if self.limit not in ("zero", "infinity"):
            raise ProblemError("limit must be 'zero' or 'infinity'")

    @property
    def direction(self) -> int:
        """+1 when exponents increase along the series (t -> 0+)."""
        return 1 if self.limit == "zero" else -1


@dataclass
class Problem:
    ode: Ode
    config: ProblemConfig
    params: tuple[ParamDecl, ...]
    exponent_param: Optional[str]
    text: str = ""
    source: str = ""

    @property
    def alg(self) -> Algebra:
        return self.ode.alg

    @property
    def n_index(self) -> int:
        return self.alg.index(N_SYMBOL)

    def param(self, name: str) -> ParamDecl:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def values(self) -> dict:
        return {p.name: p.value for p in self.params if p.value is not None}

    def bounds(self) -> dict[str, Bound]:
        return {p.name: p.bound for p in self.params}

    def region(self) -> Region:
        alg = self.alg
        return Region(alg, bounds={alg.index(p.name): p.bound for p in self.params})

    def with_values(self, values: dict) -> "Problem":
        """Attach numeric parameter values (checked against bounds)."""
        params = []
        for p in self.params:
            if p.name in values:
                v = Fraction(values[p.name])
                if not p.bound.contains(v):
                    raise ProblemError(f"bound violation: {p.bound.describe(p.name)}")
                params.append(replace(p, value=v))
            else:
                params.append(p)
        unknown = set(values) - {p.name for p in self.params}
        if unknown:
            raise ProblemError(f"unknown parameter {sorted(unknown)[0]!r}")
        return Problem(self.ode, self.config, tuple(params), self.exponent_param, self.text, self.source)

    def with_config(self, **kw) -> "Problem":
        return Problem(self.ode, replace(self.config, **kw), self.params, self.exponent_param, self.text, self.source)

    def numeric_ode(self) -> Ode:
        """The operator with every valued parameter substituted."""
        return self.ode.specialize(self.values) if self.values else self.ode


def _logical_lines(text: str):
    """Yield (line number, column offset, content) with continuations joined."""
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if line[0] in " \t" and current is not None:
            current[2] += "\n" + line
            continue
        if current is not None:
            yield tuple(current)
        current = [no, 1, line.rstrip()]
    if current is not None:
        yield tuple(current)


_BOUND_TOKEN = re.compile(r"^(\[?)(-?inf|[-+]?\d+(?:/\d+)?(?:\.\d+)?)(\]?)$")


def _parse_param(args: list[str], lineno: int) -> ParamDecl:
    if not args:
        raise ProblemError(f"line {lineno}: param needs a name")
    name = args[0]
    rest = args[1:]
    value = None
    if "=" in rest:
        i = rest.index("=")
        if i != len(rest) - 2:
            raise ProblemError(f"line {lineno}: expected '= value' at the end of param")
        value = _frac(rest[-1], lineno)
        rest = rest[:i]
    if len(rest) > 2:
        raise ProblemError(f"line {lineno}: too many bounds for {name}")
    lo = hi = None
    lo_open = hi_open = True
    ends = []
    for tok in rest:
        m = _BOUND_TOKEN.match(tok)
        if m is None:
            raise ProblemError(f"line {lineno}: bad bound {tok!r}")
        ends.append(m)
    if ends:
        m = ends[0]
        if m.group(2) != "-inf":
            lo = _frac(m.group(2), lineno)
            lo_open = m.group(1) != "["
    if len(ends) == 2:
        m = ends[1]
        if m.group(2) != "inf":
            hi = _frac(m.group(2), lineno)
            hi_open = m.group(3) != "]"
    b = Bound(lo, hi, lo_open, hi_open)
    if b.empty:
        raise ProblemError(f"line {lineno}: empty range for {name}")
    if value is not None and not b.contains(value):
        raise ProblemError(f"bound violation: {b.describe(name)}")
    return ParamDecl(name, b, value)


def _frac(s: str, lineno: int) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ProblemError(f"line {lineno}: not a rational number: {s!r}") from None


_ASSUME = re.compile(r"^(n1|c1)\s*(<=|>=|<|>)\s*(\S+)$")


def parse_problem(text: str, source: str = "<string>") -> Problem:
    ode_text = None
    ode_pos = (1, 1)
    params: list[ParamDecl] = []
    exp_param = None
    limit = "zero"
    order = 1
    lead_sign = None
    lead_exp: list = []
    for lineno, _, line in _logical_lines(text):
        parts = re.split(r"\s+", line.strip(), maxsplit=1)
        head = parts[0]
        body = parts[1].strip() if len(parts) > 1 else ""
        if head == "ode":
            if ode_text is not None:
                raise ProblemError(f"line {lineno}: more than one ode line")
            ode_text = body
            ode_pos = (lineno, line.index("ode") + 4)
        elif head == "param":
            p = _parse_param(body.split(), lineno)
            if p.name in RESERVED or not p.name.isidentifier():
                raise ProblemError(f"line {lineno}: reserved or invalid parameter name {p.name!r}")
            if any(x.name == p.name for x in params):
                raise ProblemError(f"line {lineno}: duplicate parameter {p.name!r}")
            params.append(p)
        elif head == "expparam":
            if exp_param is not None:
                raise ProblemError(f"line {lineno}: only one exponent parameter is allowed")
            exp_param = body
            if not exp_param.isidentifier() or exp_param in RESERVED:
                raise ProblemError(f"line {lineno}: invalid exponent parameter {exp_param!r}")
        elif head == "limit":
            if body not in ("zero", "infinity"):
                raise ProblemError(f"line {lineno}: limit must be 'zero' or 'infinity'")
            limit = body
        elif head == "order":
            try:
                order = int(body)
            except ValueError:
                raise ProblemError(f"line {lineno}: order must be an integer") from None
            if order < 1:
                raise ProblemError(f"line {lineno}: order must be positive")
        elif head == "assume":
            m = _ASSUME.match(re.sub(r"\s+", " ", body))
            if m is None:
                raise ProblemError(f"line {lineno}: unsupported assumption {body!r}")
            what, rel, val = m.groups()
            v = _frac(val, lineno)
            if what == "c1":
                if v != 0 or rel not in (">", "<"):
                    raise ProblemError(f"line {lineno}: only 'c1 > 0' or 'c1 < 0' are supported")
                lead_sign = rel
            else:
                lead_exp.append((rel, v))
        else:
            raise ProblemError(f"line {lineno}: unknown directive {head!r}")
    if ode_text is None or not ode_text.strip():
        raise ProblemError("no ode given")
    if exp_param is not None and not any(p.name == exp_param for p in params):
        params.insert(0, ParamDecl(exp_param))
    names = [p.name for p in params]
    alg = Algebra([sympy.Symbol(x) for x in names] + [sympy.Symbol(N_SYMBOL)])
    try:
        ast = parse_ode(ode_text, known=set(names), line0=ode_pos[0], col0=ode_pos[1])
        ode = normalize(ast, alg, exp_param)
        validate(ode, {p.name: p.value for p in params if p.value is not None}, {p.name: p.bound for p in params})
    except ParseError as exc:
        raise ProblemError(str(exc)) from exc
    except OdeError as exc:
        raise ProblemError(str(exc)) from exc
    config = ProblemConfig(limit, order, lead_sign, tuple(lead_exp))
    return Problem(ode, config, tuple(params), exp_param, text, source)


def load_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), str(path))
