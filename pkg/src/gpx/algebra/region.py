"""Parameter regions and a sound (incomplete) sign oracle.

A sign is only reported when it follows from the region: matching
constraints, exact root isolation for univariate factors, and interval
arithmetic over the bounding box for the rest.  Anything else is
``Sign.INDETERMINATE``; callers split cases instead of guessing.
"""
from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

import sympy
from sympy import ZZ
from sympy.polys.fields import FracElement
from sympy.polys.rings import PolyElement

from .field import Algebra, eval_poly, to_fraction
from .radical import RadicalExpr


class Sign(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    ZERO = 0
    INDETERMINATE = None

    def __str__(self) -> str:
        return self.name.lower()

    def __mul__(self, other: "Sign") -> "Sign":
        if self is Sign.ZERO or other is Sign.ZERO:
            return Sign.ZERO
        if self is Sign.INDETERMINATE or other is Sign.INDETERMINATE:
            return Sign.INDETERMINATE
        return Sign(self.value * other.value)

    def __neg__(self) -> "Sign":
        if self.value in (1, -1):
            return Sign(-self.value)
        return self

    @property
    def definite(self) -> bool:
        return self.value is not None


def _sign_of(x) -> Sign:
    if x > 0:
        return Sign.POSITIVE
    if x < 0:
        return Sign.NEGATIVE
    return Sign.ZERO


RELATIONS = (">", ">=", "=", "!=")


# --------------------------------------------------------------------------
# bounds and interval arithmetic


@dataclass(frozen=True)
class Bound:
    """Interval for one variable; ``None`` endpoints mean infinite."""

    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, x) -> bool:
        if self.lo is not None and (x < self.lo or (self.lo_open and x == self.lo)):
            return False
        if self.hi is not None and (x > self.hi or (self.hi_open and x == self.hi)):
            return False
        return True

    def intersect(self, other: "Bound") -> "Bound":
        lo, lo_open = self.lo, self.lo_open
        if other.lo is not None and (lo is None or other.lo > lo or (other.lo == lo and other.lo_open)):
            lo, lo_open = other.lo, other.lo_open
        hi, hi_open = self.hi, self.hi_open
        if other.hi is not None and (hi is None or other.hi < hi or (other.hi == hi and other.hi_open)):
            hi, hi_open = other.hi, other.hi_open
        return Bound(lo, hi, lo_open, hi_open)

    @property
    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        return self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open))

    @property
    def is_point(self) -> bool:
        return self.lo is not None and self.lo == self.hi and not self.lo_open and not self.hi_open

    def sample(self, rng: random.Random) -> Fraction:
        """A random rational strictly inside (or the point itself)."""
        if self.is_point:
            return self.lo
        lo, hi = self.lo, self.hi
        if lo is None and hi is None:
            lo, hi = Fraction(-3), Fraction(3)
        elif lo is None:
            lo = hi - 3
        elif hi is None:
            hi = lo + 3
        u = Fraction(rng.randint(1, 998), 999)
        return lo + (hi - lo) * u

    def midpoint(self) -> Fraction:
        if self.is_point:
            return self.lo
        if self.lo is None and self.hi is None:
            return Fraction(1, 3)
        if self.lo is None:
            return self.hi - 1
        if self.hi is None:
            return self.lo + 1
        return (self.lo + self.hi) / 2

    def describe(self, name: str) -> str:
        if self.is_point:
            return f"{name}={self.lo}"
        if self.lo is None and self.hi is None:
            return f"all {name}"
        parts = []
        if self.lo is not None:
            parts.append(f"{self.lo}{'<' if self.lo_open else '<='}")
        parts.append(name)
        if self.hi is not None:
            parts.append(f"{'<' if self.hi_open else '<='}{self.hi}")
        return "".join(parts)


# Extended-real endpoints: (value or +-inf as float, open flag).
_INF = math.inf


def _ep_mul(a, b):
    (x, xo), (y, yo) = a, b
    if (x == 0 and not xo) or (y == 0 and not yo):
        return (0, False)
    if x == 0 or y == 0:
        return (0, True)
    if isinstance(x, float) or isinstance(y, float):
        s = (1 if x > 0 else -1) * (1 if y > 0 else -1)
        if math.isinf(x) or math.isinf(y):
            return (s * _INF, True)
    return (x * y, xo or yo)


def _ep_add(a, b):
    (x, xo), (y, yo) = a, b
    if isinstance(x, float) and math.isinf(x):
        return (x, True)
    if isinstance(y, float) and math.isinf(y):
        return (y, True)
    return (x + y, xo or yo)


def _ep_key(e):
    return e[0]


@dataclass(frozen=True)
class Interval:
    lo: tuple
    hi: tuple

    @staticmethod
    def of(bound: Bound) -> "Interval":
        lo = (bound.lo, bound.lo_open) if bound.lo is not None else (-_INF, True)
        hi = (bound.hi, bound.hi_open) if bound.hi is not None else (_INF, True)
        return Interval(lo, hi)

    @staticmethod
    def point(x) -> "Interval":
        return Interval((x, False), (x, False))

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(_ep_add(self.lo, other.lo), _ep_add(self.hi, other.hi))

    def __mul__(self, other: "Interval") -> "Interval":
        cands = [_ep_mul(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        lo = min(cands, key=lambda e: (e[0], e[1]))
        hi = max(cands, key=lambda e: (e[0], not e[1]))
        return Interval(lo, hi)

    def power(self, k: int) -> "Interval":
        if k == 0:
            return Interval.point(1)
        if k % 2 == 1:
            out = self
            for _ in range(k - 1):
                out = out * self
            return out if k > 1 else self
        lo, hi = self.lo, self.hi
        if lo[0] >= 0:
            base = Interval(lo, hi)
        elif hi[0] <= 0:
            base = Interval((-hi[0], hi[1]), (-lo[0], lo[1]))
        else:
            top = max([(-lo[0], lo[1]), hi], key=lambda e: (e[0], not e[1]))
            base = Interval((0, False), top)
        out = base
        for _ in range(k - 1):
            out = out * base
        return out

    def sign(self) -> Sign:
        lo, hi = self.lo, self.hi
        if lo[0] > 0 or (lo[0] == 0 and lo[1]):
            return Sign.POSITIVE
        if hi[0] < 0 or (hi[0] == 0 and hi[1]):
            return Sign.NEGATIVE
        if lo[0] == 0 and hi[0] == 0:
            return Sign.ZERO
        return Sign.INDETERMINATE


def interval_eval(p: PolyElement, box: list[Bound]) -> Interval:
    total = Interval.point(0)
    for monom, coeff in p.iterterms():
        term = Interval.point(to_fraction(coeff))
        for i, e in enumerate(monom):
            if e:
                term = term * Interval.of(box[i]).power(e)
        total = total + term
    return total


# --------------------------------------------------------------------------
# constraints and regions


def normalize_factor(p: PolyElement) -> tuple[Fraction, PolyElement]:
    """Write ``p = c * f`` with f primitive over Z and positive leading coefficient."""
    content, prim = p.primitive()
    c = to_fraction(content)
    if prim.LC < 0:
        prim = -prim
        c = -c
    zf = prim.set_ring(prim.ring.clone(domain=ZZ))
    zc, zprim = zf.primitive()
    return c * to_fraction(zc), zprim.set_ring(p.ring)


def factor_poly(p: PolyElement) -> tuple[Fraction, list[tuple[PolyElement, int]]]:
    """Irreducible factorization over Q with normalized factors."""
    return _factor_cached(p)


@lru_cache(maxsize=8192)
def _factor_cached(p: PolyElement):
    if p.is_ground:
        return to_fraction(p.LC) if p else Fraction(0), []
    coeff, facs = p.factor_list()
    c = to_fraction(coeff)
    out = []
    for f, k in facs:
        fc, ff = normalize_factor(f)
        c *= fc ** k
        out.append((ff, k))
    out.sort(key=lambda fk: str(fk[0]))
    return c, out


@dataclass(frozen=True)
class Constraint:
    """``expr rel 0`` with rel one of ``> >= = !=``."""

    expr: RadicalExpr
    rel: str

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel}")

    def holds_at(self, alg: Algebra, point, tol: float = 0.0) -> bool:
        x = self.expr.evalf(alg, point)
        if math.isnan(x):
            return False
        if self.rel == ">":
            return x > tol
        if self.rel == ">=":
            return x >= -tol
        if self.rel == "=":
            return abs(x) <= max(tol, 1e-12)
        return abs(x) > tol

    def describe(self) -> str:
        rel = self.rel
        return f"{self.expr} {rel} 0"


def make_constraint(alg: Algebra, expr, rel: str) -> Constraint:
    if rel in ("<", "<="):
        expr = -_as_radical(alg, expr)
        rel = ">" if rel == "<" else ">="
    return Constraint(_as_radical(alg, expr), rel)


def _as_radical(alg: Algebra, x) -> RadicalExpr:
    if isinstance(x, RadicalExpr):
        return x
    return RadicalExpr.rational(alg.rf(x))


class Region:
    """Conjunction of constraints plus a bounding box per variable.

    ``bounds`` maps variable index to a ``Bound``; missing entries are the
    whole real line.  The empty constraint list means "all parameters".
    """

    def __init__(self, alg: Algebra, constraints: Iterable[Constraint] = (), bounds: Optional[dict] = None):
        self.alg = alg
        self.bounds: dict[int, Bound] = dict(bounds or {})
        self.constraints: tuple[Constraint, ...] = ()
        self._factor_signs: dict = {}
        self._cache: dict = {}
        for c in constraints:
            self._add(c)

    # -- construction --------------------------------------------------
    def copy(self) -> "Region":
        r = Region(self.alg, bounds=self.bounds)
        r.constraints = self.constraints
        r._factor_signs = dict(self._factor_signs)
        return r

    def with_bound(self, var, bound: Bound) -> "Region":
        r = self.copy()
        i = var if isinstance(var, int) else self.alg.index(var)
        r.bounds[i] = r.bounds.get(i, Bound()).intersect(bound)
        r._cache = {}
        return r

    def with_constraints(self, *cons: Constraint) -> "Region":
        r = self.copy()
        for c in cons:
            r._add(c)
        r._cache = {}
        return r

    def _add(self, c: Constraint) -> None:
        if c in self.constraints:
            return
        self.constraints = self.constraints + (c,)
        if not c.expr.is_rational:
            return
        f = c.expr.a
        if c.rel in (">", ">="):
            self._learn(f, c.rel == ">")
        elif c.rel == "=":
            self._learn_equal(f)

    def _learn_equal(self, f: FracElement) -> None:
        num = f.numer
        vars_ = _poly_vars(num)
        if len(vars_) == 1 and num.degree(vars_[0]) == 1:
            i = vars_[0]
            root = _linear_root(num, i)
            if root is not None:
                self.bounds[i] = self.bounds.get(i, Bound()).intersect(Bound(root, root, False, False))

    def _learn(self, f: FracElement, strict: bool) -> None:
        """Record factor signs implied by ``f > 0`` and tighten the box."""
        c_num, fn = factor_poly(f.numer)
        c_den, fd = factor_poly(f.denom)
        sign = _sign_of(c_num) * _sign_of(c_den)
        odd = []
        for p, k in fn + fd:
            s = self.factor_sign(p)
            if s.definite:
                if k % 2:
                    sign = sign * s
            elif k % 2:
                odd.append(p)
        if len(odd) == 1 and sign.definite and sign is not Sign.ZERO:
            p = odd[0]
            self._factor_signs[p] = (sign, strict)
            vars_ = _poly_vars(p)
            if len(vars_) == 1 and p.degree(vars_[0]) == 1:
                i = vars_[0]
                root = _linear_root(p, i)
                slope = _linear_slope(p, i)
                # sign*p > 0 with p = slope*(x - root)
                if (slope > 0) == (sign is Sign.POSITIVE):
                    b = Bound(root, None, strict, True)
                else:
                    b = Bound(None, root, True, strict)
                self.bounds[i] = self.bounds.get(i, Bound()).intersect(b)
            self._propagate_difference(p, sign)

    def _propagate_difference(self, p: PolyElement, sign: Sign) -> None:
        """``x - y > 0`` tightens x from below and y from above."""
        terms = dict(p.iterterms())
        if len(terms) != 2 or any(sum(m) != 1 for m in terms):
            return
        pos = [m.index(1) for m, c in terms.items() if c * sign.value > 0]
        neg = [m.index(1) for m, c in terms.items() if c * sign.value < 0]
        if len(pos) != 1 or len(neg) != 1:
            return
        if set(abs(to_fraction(c)) for c in terms.values()) != {Fraction(1)}:
            return
        x, y = pos[0], neg[0]
        bx, by = self.bounds.get(x, Bound()), self.bounds.get(y, Bound())
        if by.lo is not None:
            self.bounds[x] = bx.intersect(Bound(by.lo, None, True, True))
        if bx.hi is not None:
            self.bounds[y] = by.intersect(Bound(None, bx.hi, True, True))

    # -- queries -------------------------------------------------------
    def box(self) -> list[Bound]:
        return [self.bounds.get(i, Bound()) for i in range(len(self.alg.symbols))]

    @property
    def empty_box(self) -> bool:
        return any(b.empty for b in self.bounds.values())

    def factor_sign(self, p: PolyElement) -> Sign:
        """Sign of a normalized irreducible polynomial over the region."""
        key = ("f", p)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        s = self._factor_sign(p)
        self._cache[key] = s
        return s

    def _factor_sign(self, p: PolyElement) -> Sign:
        if p.is_ground:
            return _sign_of(p.LC)
        known = self._factor_signs.get(p)
        if known is not None and known[1]:
            return known[0]
        box = self.box()
        vars_ = _poly_vars(p)
        if len(vars_) == 1:
            s = _univariate_sign(p, vars_[0], box[vars_[0]])
            if s.definite:
                return s
        s = interval_eval(p, box).sign()
        if s.definite:
            return s
        return _multilinear_sign(p, vars_, box)

    def sign_info(self, x) -> "SignInfo":
        x = _as_radical(self.alg, x)
        if x.is_rational:
            return self._ratfun_info(x.a)
        if x.a == 0:
            return self._ratfun_info(x.b)
        ia = self._ratfun_info(x.a)
        ib = self._ratfun_info(x.b)
        rel = ia * ib
        if rel.sign is Sign.POSITIVE and not rel.odd:
            return ia
        if rel.sign is Sign.NEGATIVE and not rel.odd:
            return ia * self._ratfun_info(x.norm())
        return SignInfo(Sign.INDETERMINATE, frozenset(), frozenset(), opaque=True)

    def _ratfun_info(self, f: FracElement) -> "SignInfo":
        if f == 0:
            return SignInfo(Sign.ZERO)
        key = ("r", f)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        c_num, fn = factor_poly(f.numer)
        c_den, fd = factor_poly(f.denom)
        sign = _sign_of(c_num) * _sign_of(c_den)
        odd: set = set()
        nonzero: set = set()
        for p, k in fn + fd:
            s = self.factor_sign(p)
            if s.definite:
                if k % 2:
                    sign = sign * s
            elif k % 2:
                odd ^= {p}
            else:
                nonzero.add(p)
        out = SignInfo(sign, frozenset(odd), frozenset(nonzero))
        self._cache[key] = out
        return out

    def sign(self, x) -> Sign:
        info = self.sign_info(x)
        if info.odd or info.opaque:
            m = self._match_constraint(x)
            if m is not None:
                return m
            return Sign.INDETERMINATE
        return info.sign

    def _match_constraint(self, x) -> Optional[Sign]:
        x = _as_radical(self.alg, x)
        for c in self.constraints:
            if c.rel != ">":
                continue
            ratio = _ratio(x, c.expr)
            if ratio is None:
                continue
            s = self._ratfun_info(ratio)
            if not s.odd and s.sign.definite and s.sign is not Sign.ZERO:
                return s.sign
        return None

    def contains(self, point, tol: float = 0.0) -> bool:
        for i, b in self.bounds.items():
            if not b.contains(point[i]):
                return False
        fl = [float(v) for v in point]
        return all(c.holds_at(self.alg, fl, tol) for c in self.constraints)

    def sample(self, rng: random.Random, fixed: Optional[dict] = None, tries: int = 4000) -> Optional[list]:
        """Random rational point satisfying every constraint, or None."""
        box = self.box()
        fixed = fixed or {}
        for _ in range(tries):
            pt = [fixed.get(i, b.sample(rng)) for i, b in enumerate(box)]
            if self.contains(pt):
                return pt
        return None

    def reference_point(self) -> list:
        """Deterministic interior point used for orienting factors."""
        pt = self.sample(random.Random(12345))
        if pt is None:
            pt = [b.midpoint() for b in self.box()]
        return pt

    def describe(self) -> list[str]:
        out = []
        for i in sorted(self.bounds):
            b = self.bounds[i]
            if b.lo is None and b.hi is None:
                continue
            out.append(b.describe(self.alg.symbols[i].name))
        out.extend(c.describe() for c in self.constraints)
        return out


def _ratio(x: RadicalExpr, y: RadicalExpr) -> Optional[FracElement]:
    """x/y when it is a rational function, else None."""
    if y.is_zero():
        return None
    if x.is_rational and y.is_rational:
        return x.a / y.a
    if x.is_rational != y.is_rational or x.d != y.d:
        return None
    # x = r*y with r rational: a_x = r a_y, b_x = r b_y
    r = x.b / y.b
    if x.a == r * y.a:
        return r
    return None


@dataclass(frozen=True)
class SignInfo:
    """Sign of a product: ``sign * prod(odd factors)`` times squares.

    ``odd`` holds factors of unknown sign with odd multiplicity; ``nonzero``
    factors of unknown sign with even multiplicity, which only have to be
    nonzero.  ``opaque`` marks values the factor calculus could not handle.
    """

    sign: Sign
    odd: frozenset = frozenset()
    nonzero: frozenset = frozenset()
    opaque: bool = False

    def __mul__(self, other: "SignInfo") -> "SignInfo":
        common = self.odd & other.odd
        return SignInfo(
            self.sign * other.sign,
            self.odd ^ other.odd,
            self.nonzero | other.nonzero | common,
            self.opaque or other.opaque,
        )

    @property
    def definite(self) -> bool:
        return not self.odd and not self.opaque and self.sign.definite


# --------------------------------------------------------------------------
# helpers


def _poly_vars(p: PolyElement) -> list[int]:
    used = set()
    for m in p.itermonoms():
        used.update(i for i, e in enumerate(m) if e)
    return sorted(used)


def _linear_slope(p: PolyElement, i: int) -> Fraction:
    for m, c in p.iterterms():
        if m[i] == 1:
            return to_fraction(c)
    raise ValueError("not linear")


def _linear_root(p: PolyElement, i: int) -> Optional[Fraction]:
    slope = None
    const = Fraction(0)
    for m, c in p.iterterms():
        if m[i] == 1 and sum(m) == 1:
            slope = to_fraction(c)
        elif sum(m) == 0:
            const = to_fraction(c)
        else:
            return None
    if slope is None:
        return None
    return -const / slope


def _univariate_sign(p: PolyElement, i: int, bound: Bound) -> Sign:
    """Exact sign of a univariate polynomial on an interval, if constant."""
    x = sympy.Dummy("x")
    coeffs: dict[int, Fraction] = {}
    for m, c in p.iterterms():
        coeffs[m[i]] = to_fraction(c)
    deg = max(coeffs)
    poly = sympy.Poly([sympy.Rational(coeffs.get(k, 0).numerator, coeffs.get(k, 0).denominator) for k in range(deg, -1, -1)], x)
    for r in _real_roots(poly):
        inside = True
        if bound.lo is not None:
            lo = sympy.Rational(bound.lo.numerator, bound.lo.denominator)
            inside &= bool(r > lo) or (not bound.lo_open and bool(sympy.Eq(r, lo)))
        if bound.hi is not None:
            hi = sympy.Rational(bound.hi.numerator, bound.hi.denominator)
            inside &= bool(r < hi) or (not bound.hi_open and bool(sympy.Eq(r, hi)))
        if inside:
            if bound.is_point:
                return Sign.ZERO
            return Sign.INDETERMINATE
    x0 = bound.midpoint()
    val = sum(c * x0 ** k for k, c in coeffs.items())
    return _sign_of(val)


def _multilinear_sign(p: PolyElement, vars_: list[int], box: list[Bound]) -> Sign:
    """Multilinear polynomials take their extremes at the box corners."""
    if any(p.degree(i) > 1 for i in vars_) or len(vars_) > 6:
        return Sign.INDETERMINATE
    ends = []
    for i in vars_:
        b = box[i]
        if b.lo is None or b.hi is None:
            return Sign.INDETERMINATE
        ends.append(((b.lo, b.lo_open), (b.hi, b.hi_open)))
    signs = set()
    for corner in itertools.product(*ends):
        val = Fraction(0)
        for m, c in p.iterterms():
            term = to_fraction(c)
            for i, (x, _) in zip(vars_, corner):
                if m[i]:
                    term *= x
            val += term
        if val == 0:
            if not any(o for _, o in corner):
                return Sign.INDETERMINATE
            continue
        signs.add(val > 0)
    if len(signs) == 1:
        return Sign.POSITIVE if signs.pop() else Sign.NEGATIVE
    return Sign.INDETERMINATE


@lru_cache(maxsize=4096)
def _real_roots(poly: sympy.Poly):
    return tuple(poly.real_roots())


def positivity_condition(region: Region, x) -> tuple[str, list[Constraint]]:
    """What it takes for ``x > 0`` on the region.

    Returns ``("proved", [])``, ``("refuted", [])`` or
    ``("conditional", constraints)`` where the constraints are the reduced
    form (product of the factors whose sign is unknown).
    """
    alg = region.alg
    x = _as_radical(alg, x)
    info = region.sign_info(x)
    if info.opaque:
        s = region.sign(x)
        if s is Sign.POSITIVE:
            return "proved", []
        if s.definite:
            return "refuted", []
        return "conditional", [Constraint(x, ">")]
    if not info.odd:
        if info.sign is Sign.POSITIVE:
            return "proved", []
        return "refuted", []
    prod = alg.ring.one
    for p in sorted(info.odd, key=str):
        prod *= p
    f = alg.field.new(prod) * info.sign.value
    s = region.sign(f)
    if s is Sign.POSITIVE:
        return "proved", []
    if s.definite or _never_positive(region, f.numer):
        return "refuted", []
    return "conditional", [Constraint(RadicalExpr.rational(f), ">")]


def _never_positive(region: Region, p: PolyElement) -> bool:
    """``p <= 0`` on the closed box, e.g. ``1 - g`` for ``1 <= g``."""
    hi = interval_eval(p, region.box()).hi
    return hi[0] <= 0
