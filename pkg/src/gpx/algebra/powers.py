"""Sums of products of powers with symbolic exponents.

Coefficients such as ``c1**(6 - q)`` or ``[...]**(1/(q - 3))`` leave the
rational-function field.  A ``PowerSum`` keeps them in a normal form::

    sum_k  r_k * prod_j atom_j ** e_kj

with ``r_k`` a RadicalExpr and ``e_kj`` rational functions of the
parameters.  Atoms are primes, irreducible polynomials oriented to be
positive on the working region, monic factors over Q(sqrt d), opaque
radicals, ``-1`` and named symbols (unknown or free coefficients).  Integer
parts of exponents are folded back into ``r_k`` so that two equal values
have the same key set; the sum is zero iff it has no terms.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Optional

import mpmath
import sympy
from sympy.polys.fields import FracElement

from .field import Algebra, AlgebraError, eval_poly, to_fraction
from .radical import MixedRadicalError, RadicalExpr, radical_from_expr
from .region import Region, Sign, factor_poly
from .solve import subs_radical


class PowerError(AlgebraError):
    """Operation outside the normal form (e.g. symbolic power of a sum)."""


NEG = ("neg",)


def sym(name: str) -> tuple:
    return ("sym", name)


def _atom_sort(atom) -> str:
    return f"{atom[0]}:{atom[1:]!s}"


class PowerContext:
    """Algebra plus the region used to orient polynomial atoms."""

    def __init__(self, alg: Algebra, region: Optional[Region] = None):
        self.alg = alg
        self.region = region if region is not None else Region(alg)
        self._ref = [float(x) for x in self.region.reference_point()]
        self._orient: dict = {}

    @property
    def ref_point(self) -> list[float]:
        return self._ref

    def orientation(self, x) -> int:
        """+1 or -1 so that ``orientation * x`` is positive on the region."""
        key = x if not isinstance(x, RadicalExpr) else ("r",) + x.key()
        hit = self._orient.get(key)
        if hit is not None:
            return hit
        if isinstance(x, RadicalExpr):
            s = self.region.sign(x)
            if not s.definite or s is Sign.ZERO:
                val = x.evalf(self.alg, self._ref)
                s = Sign.NEGATIVE if val < 0 else Sign.POSITIVE
        else:
            s = self.region.factor_sign(x)
            if not s.definite or s is Sign.ZERO:
                val = eval_poly(x, self._ref)
                s = Sign.NEGATIVE if val < 0 else Sign.POSITIVE
        out = -1 if s is Sign.NEGATIVE else 1
        self._orient[key] = out
        return out

    def zero(self) -> "PowerSum":
        return PowerSum(self, {})

    def one(self) -> "PowerSum":
        return self.const(RadicalExpr.rational(self.alg.one))

    def const(self, x) -> "PowerSum":
        if not isinstance(x, RadicalExpr):
            x = RadicalExpr.rational(self.alg.rf(x))
        if x.is_zero():
            return self.zero()
        return PowerSum(self, {(): x})

    def symbol(self, name: str, exponent=1) -> "PowerSum":
        e = self.alg.rf(exponent)
        return PowerSum(self, {((sym(name), e),): RadicalExpr.rational(self.alg.one)})

    # -- atom values ---------------------------------------------------
    def atom_value(self, atom) -> RadicalExpr:
        kind = atom[0]
        if kind == "p":
            return RadicalExpr.rational(self.alg.const(atom[1]))
        if kind == "poly":
            return RadicalExpr.rational(atom[1])
        if kind == "rad":
            return atom[1]
        if kind == "neg":
            return RadicalExpr.rational(-self.alg.one)
        raise PowerError(f"no value for atom {atom}")

    def atom_expr(self, atom) -> sympy.Expr:
        kind = atom[0]
        if kind == "p":
            return sympy.Integer(atom[1])
        if kind == "poly":
            return atom[1].as_expr()
        if kind == "rad":
            return atom[1].to_expr()
        if kind == "neg":
            return sympy.Integer(-1)
        return sympy.Symbol(atom[1])

    # -- factorization into atoms -------------------------------------
    def atomize(self, x: RadicalExpr) -> tuple[RadicalExpr, dict]:
        """``x = unit * prod atom**e`` with unit in {1, -1} where possible."""
        unit, exps = self._atomize(x)
        e = exps.get(NEG)
        if e is not None and self.alg.is_constant(e):
            k = self.alg.constant_value(e)
            if k.denominator == 1:
                if k % 2:
                    exps[NEG] = self.alg.one
                else:
                    exps.pop(NEG)
        return unit, exps

    def _atomize(self, x: RadicalExpr) -> tuple[RadicalExpr, dict]:
        if x.is_zero():
            raise PowerError("cannot take a symbolic power of zero")
        if x.is_rational:
            return self._atomize_ratfun(x.a)
        if self.alg.is_constant(x.d):
            return self._atomize_extension(x)
        exps: dict = {}
        unit = RadicalExpr.rational(self.alg.one)
        if x.a != 0:
            u, e = self._atomize_ratfun(x.a)
            _merge(exps, e)
            rest = RadicalExpr.make(self.alg.one, x.b / x.a, x.d)
            s = self.orientation(rest)
            if s < 0:
                rest = -rest
                _merge(exps, {NEG: self.alg.one})
            _merge(exps, {("rad", rest): self.alg.one})
            return u * unit, exps
        u, e = self._atomize_ratfun(x.b)
        _merge(exps, e)
        _, ed = self._atomize_ratfun(x.d)
        for atom, k in ed.items():
            _merge(exps, {atom: k / 2})
        return u, exps

    def _atomize_ratfun(self, f: FracElement) -> tuple[RadicalExpr, dict]:
        alg = self.alg
        exps: dict = {}
        c_num, fn = factor_poly(f.numer)
        c_den, fd = factor_poly(f.denom)
        c = c_num / c_den
        for facs, sgn in ((fn, 1), (fd, -1)):
            for p, k in facs:
                s = self.orientation(p)
                if s < 0:
                    p = -p
                    if k % 2:
                        c = -c
                _merge(exps, {("poly", alg.field.new(p)): alg.const(sgn * k)})
        self._atomize_rational(c, exps)
        return RadicalExpr.rational(alg.one), exps

    def _atomize_rational(self, c: Fraction, exps: dict) -> None:
        alg = self.alg
        if c < 0:
            _merge(exps, {NEG: alg.one})
            c = -c
        for p, k in sympy.factorint(c.numerator).items():
            _merge(exps, {("p", int(p)): alg.const(k)})
        for p, k in sympy.factorint(c.denominator).items():
            _merge(exps, {("p", int(p)): alg.const(-k)})

    def _atomize_extension(self, x: RadicalExpr) -> tuple[RadicalExpr, dict]:
        alg = self.alg
        dval = alg.constant_value(x.d)
        root = sympy.sqrt(sympy.Rational(dval.numerator, dval.denominator))
        fac = sympy.factor(x.to_expr(), extension=root)
        exps: dict = {}
        unit = RadicalExpr.rational(alg.one)
        for base, k in (b.as_base_exp() for b in sympy.Mul.make_args(fac)):
            if not k.is_Integer:
                if base.is_Rational and k == sympy.Rational(1, 2) or k == sympy.Rational(-1, 2):
                    self._atomize_const_power(base, k, exps)
                    continue
                raise PowerError(f"unexpected factor {base}**{k}")
            k = int(k)
            if base.is_Rational:
                self._atomize_rational(to_fraction(base) ** k, exps)
                continue
            val = radical_from_expr(alg, base)
            if val.is_rational:
                u, e = self._atomize_ratfun(val.a)
                for atom, ek in e.items():
                    _merge(exps, {atom: ek * k})
                continue
            if base.is_number:
                self._atomize_numeric(val, k, exps)
                continue
            monic, lc = _monic(alg, val)
            s = self.orientation(monic)
            if s < 0:
                monic, lc = -monic, -lc
            _merge(exps, {("rad", monic): alg.const(k)})
            self._atomize_numeric(lc, k, exps)
        return unit, exps

    def _atomize_const_power(self, base, k, exps: dict) -> None:
        f = to_fraction(base)
        tmp: dict = {}
        self._atomize_rational(f, tmp)
        for atom, e in tmp.items():
            _merge(exps, {atom: e * self.alg.const(to_fraction(k))})

    def _atomize_numeric(self, val: RadicalExpr, k: int, exps: dict) -> None:
        alg = self.alg
        if val.is_rational:
            self._atomize_rational(alg.constant_value(val.a) ** k, exps)
            return
        if val.a == 0:
            self._atomize_rational(alg.constant_value(val.b) ** k, exps)
            self._atomize_const_power(alg.constant_value(val.d).numerator, sympy.Rational(k, 2), exps)
            d = alg.constant_value(val.d)
            if d.denominator != 1:
                self._atomize_rational(Fraction(1, d.denominator) ** k, exps)
            return
        s = 1 if val.evalf(alg, self._ref) > 0 else -1
        if s < 0:
            val = -val
            if k % 2:
                _merge(exps, {NEG: alg.one})
        _merge(exps, {("rad", val): alg.const(k)})


def _monic(alg: Algebra, x: RadicalExpr) -> tuple[RadicalExpr, RadicalExpr]:
    """Divide a Q(sqrt d)-polynomial by its leading coefficient."""
    monoms = set(x.a.numer.itermonoms()) | set(x.b.numer.itermonoms())
    lead = max(monoms, key=lambda m: (sum(m), m))
    ca = alg.const(to_fraction(dict(x.a.numer.iterterms()).get(lead, 0))) / alg.field.new(x.a.denom)
    cb = alg.const(to_fraction(dict(x.b.numer.iterterms()).get(lead, 0))) / alg.field.new(x.b.denom)
    lc = RadicalExpr.make(ca, cb, x.d)
    return x / lc, lc


def _merge(exps: dict, more: Mapping) -> None:
    for atom, e in more.items():
        total = exps.get(atom)
        total = e if total is None else total + e
        if total == 0:
            exps.pop(atom, None)
        else:
            exps[atom] = total


def integer_part(alg: Algebra, e: FracElement) -> int:
    """Floor of the constant term of the polynomial part of e."""
    if alg.is_constant(e):
        return math.floor(alg.constant_value(e))
    num, den = e.numer, e.denom
    if den.is_ground:
        const = dict(num.iterterms()).get((0,) * alg.ring.ngens, 0)
        return math.floor(to_fraction(const) / to_fraction(den.LC))
    q, _ = num.div([den])
    const = dict(q[0].iterterms()).get((0,) * alg.ring.ngens, 0)
    return math.floor(to_fraction(const))


class PowerSum:
    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: PowerContext, terms: dict):
        self.ctx = ctx
        self.terms = terms
        self._hash = None

    # -- construction --------------------------------------------------
    @staticmethod
    def _normal_term(ctx: PowerContext, coef: RadicalExpr, exps: Mapping) -> tuple[tuple, RadicalExpr]:
        alg = ctx.alg
        kept = []
        for atom, e in exps.items():
            if e == 0:
                continue
            if atom[0] != "sym":
                k = integer_part(alg, e)
                if k:
                    coef = coef * (ctx.atom_value(atom) ** k)
                    e = e - k
                    if e == 0:
                        continue
            kept.append((atom, e))
        kept.sort(key=lambda ae: _atom_sort(ae[0]))
        return tuple(kept), coef

    @classmethod
    def build(cls, ctx: PowerContext, items: Iterable[tuple[RadicalExpr, Mapping]]) -> "PowerSum":
        terms: dict = {}
        for coef, exps in items:
            if coef.is_zero():
                continue
            key, coef = cls._normal_term(ctx, coef, exps)
            old = terms.get(key)
            new = coef if old is None else old + coef
            if new.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = new
        return cls(ctx, terms)

    # -- structure -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __eq__(self, other) -> bool:
        if isinstance(other, PowerSum):
            return self.terms == other.terms
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def symbols(self) -> set[str]:
        return {a[1] for key in self.terms for a, _ in key if a[0] == "sym"}

    def as_radical(self) -> Optional[RadicalExpr]:
        """The value as a RadicalExpr when no atoms remain."""
        if not self.terms:
            return RadicalExpr.rational(self.ctx.alg.zero)
        if list(self.terms) == [()]:
            return self.terms[()]
        return None

    # -- arithmetic ----------------------------------------------------
    def _lift(self, other) -> "PowerSum":
        if isinstance(other, PowerSum):
            return other
        if isinstance(other, RadicalExpr):
            return self.ctx.const(other)
        if isinstance(other, (int, Fraction, FracElement)):
            return self.ctx.const(RadicalExpr.rational(self.ctx.alg.rf(other)))
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for key, c in other.terms.items():
            new = terms[key] + c if key in terms else c
            if new.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = new
        return PowerSum(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return PowerSum(self.ctx, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        items = []
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                if not k2:
                    exps = dict(k1)
                elif not k1:
                    exps = dict(k2)
                else:
                    exps = dict(k1)
                    _merge(exps, dict(k2))
                items.append((c1 * c2, exps))
        return PowerSum.build(self.ctx, items)

    __rmul__ = __mul__

    def inverse(self) -> "PowerSum":
        if not self.is_monomial:
            if self.is_zero():
                raise ZeroDivisionError("inverse of zero")
            raise PowerError("inverse of a sum of powers")
        (key, coef), = self.terms.items()
        return PowerSum.build(self.ctx, [(coef.inverse(), {a: -e for a, e in key})])

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, e):
        return self.pow(e)

    def pow(self, e) -> "PowerSum":
        alg = self.ctx.alg
        e = alg.rf(e) if not isinstance(e, FracElement) else e
        if alg.is_constant(e):
            k = alg.constant_value(e)
            if k.denominator == 1:
                k = int(k)
                if k < 0:
                    return self.inverse().pow(-k)
                out = self.ctx.one()
                base = self
                while k:
                    if k & 1:
                        out = out * base
                    base = base * base
                    k >>= 1
                return out
        if self.is_zero():
            raise PowerError("symbolic power of zero")
        if not self.is_monomial:
            raise PowerError("symbolic power of a sum of powers")
        (key, coef), = self.terms.items()
        unit, exps = self.ctx.atomize(coef)
        if unit != RadicalExpr.rational(alg.one):
            raise PowerError("symbolic power of a non-unit remainder")
        _merge(exps, {})
        for a, ea in key:
            _merge(exps, {a: ea})
        return PowerSum.build(self.ctx, [(RadicalExpr.rational(alg.one), {a: ea * e for a, ea in exps.items()})])

    # -- substitution --------------------------------------------------
    def subs(self, values: Mapping) -> "PowerSum":
        """Substitute exact values (RadicalExpr/rational) for field variables."""
        if not values:
            return self
        alg = self.ctx.alg
        idx = {(alg.index(k) if not isinstance(k, int) else k): v for k, v in values.items()}
        rat = {i: v for i, v in idx.items() if not isinstance(v, RadicalExpr) or v.is_rational}
        rat = {i: (v.a if isinstance(v, RadicalExpr) else v) for i, v in rat.items()}
        rat = {i: (alg.constant_value(v) if hasattr(v, "numer") and alg.is_constant(v) else v) for i, v in rat.items()}
        items = []
        for key, coef in self.terms.items():
            c = subs_radical(alg, coef, idx)
            exps = {}
            for a, e in key:
                ne = _subs_exponent(alg, e, rat, idx)
                na = _subs_atom(alg, a, idx)
                if na is None:
                    exps[a] = ne
                else:
                    # the atom itself changed; re-atomize its new value
                    items_atom = self.ctx.const(na).pow(ne)
                    for k2, c2 in items_atom.terms.items():
                        c = c * c2
                        for a2, e2 in k2:
                            _merge(exps, {a2: e2})
            items.append((c, exps))
        return PowerSum.build(self.ctx, items)

    def substitute_symbol(self, name: str, value: "PowerSum") -> "PowerSum":
        out = self.ctx.zero()
        for key, coef in self.terms.items():
            rest = []
            power = None
            for a, e in key:
                if a == sym(name):
                    power = e
                else:
                    rest.append((a, e))
            term = PowerSum(self.ctx, {tuple(rest): coef})
            if power is not None:
                term = term * value.pow(power)
            out = out + term
        return out

    def collect_symbol(self, name: str) -> dict:
        """Map exponent of the named symbol -> PowerSum coefficient."""
        out: dict = {}
        for key, coef in self.terms.items():
            power = self.ctx.alg.zero
            rest = []
            for a, e in key:
                if a == sym(name):
                    power = e
                else:
                    rest.append((a, e))
            part = PowerSum(self.ctx, {tuple(rest): coef})
            out[power] = out[power] + part if power in out else part
        return {k: v for k, v in out.items() if v}

    def with_context(self, ctx: PowerContext) -> "PowerSum":
        return PowerSum(ctx, self.terms)

    # -- numeric / printing --------------------------------------------
    def evalf(self, point: Mapping, symbols: Optional[Mapping] = None, dps: int = 30):
        """mpmath value at a numeric parameter point (name -> number)."""
        alg = self.ctx.alg
        symbols = symbols or {}
        with mpmath.workdps(dps):
            pt = [mpmath.mpf(_num(point.get(s.name, 0))) for s in alg.symbols]
            total = mpmath.mpf(0)
            for key, coef in self.terms.items():
                val = _eval_radical(coef, pt)
                for a, e in key:
                    ev = _eval_ratfun(e, pt)
                    if a[0] == "sym":
                        base = mpmath.mpf(_num(symbols[a[1]])) if not isinstance(symbols[a[1]], mpmath.mpc) else symbols[a[1]]
                    else:
                        base = _eval_atom(a, pt)
                    val = val * mpmath.power(base, ev)
                total += val
            if isinstance(total, mpmath.mpc) and abs(total.imag) <= mpmath.mpf(10) ** (-dps // 2) * max(1, abs(total)):
                total = total.real
            return total

    def to_sympy(self) -> sympy.Expr:
        out = []
        for key, coef in sorted(self.terms.items(), key=lambda kc: str(kc[0])):
            term = coef.to_expr()
            for a, e in key:
                term = term * sympy.Pow(self.ctx.atom_expr(a), e.as_expr(), evaluate=True)
            out.append(term)
        return sympy.Add(*out)

    def __str__(self) -> str:
        return sympy.sstr(self.to_sympy())

    def __repr__(self) -> str:
        return f"PowerSum({self})"


def _num(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return x


def _eval_ratfun(f: FracElement, pt) -> mpmath.mpf:
    return _eval_poly_mp(f.numer, pt) / _eval_poly_mp(f.denom, pt)


def _eval_poly_mp(p, pt):
    total = mpmath.mpf(0)
    for monom, coeff in p.iterterms():
        c = to_fraction(coeff)
        term = mpmath.mpf(c.numerator) / c.denominator
        for x, e in zip(pt, monom):
            if e:
                term *= x ** e
        total += term
    return total


def _eval_radical(x: RadicalExpr, pt):
    a = _eval_ratfun(x.a, pt)
    if x.is_rational:
        return a
    return a + _eval_ratfun(x.b, pt) * mpmath.sqrt(_eval_ratfun(x.d, pt))


def _eval_atom(atom, pt):
    kind = atom[0]
    if kind == "p":
        return mpmath.mpf(atom[1])
    if kind == "poly":
        return _eval_ratfun(atom[1], pt)
    if kind == "rad":
        return _eval_radical(atom[1], pt)
    if kind == "neg":
        return mpmath.mpf(-1)
    raise PowerError(f"cannot evaluate atom {atom}")


def _subs_exponent(alg: Algebra, e: FracElement, rat: dict, idx: dict) -> FracElement:
    used = alg.free_indices(e)
    if not used & set(idx):
        return e
    if not used & set(idx) <= set(rat):
        raise PowerError("irrational value substituted into an exponent")
    return alg.subs(e, {alg.symbols[i]: v for i, v in rat.items() if i in used})


def _subs_atom(alg: Algebra, atom, idx: dict) -> Optional[RadicalExpr]:
    if atom[0] == "poly":
        if alg.free_indices(atom[1]) & set(idx):
            return subs_radical(alg, atom[1], idx)
    elif atom[0] == "rad":
        if atom[1].free_symbols(alg) & {alg.symbols[i] for i in idx}:
            return subs_radical(alg, atom[1], idx)
    return None


def powersum_from_expr(ctx: PowerContext, expr) -> PowerSum:
    """Build a PowerSum from a sympy expression.

    Symbols that are not field variables become named symbol atoms.
    Non-integer powers must have a single-term base.
    """
    alg = ctx.alg
    expr = sympy.sympify(expr)
    field_syms = set(alg.symbols)
    if expr.free_symbols <= field_syms and not any(
        p.is_Pow and not p.exp.is_Integer and not (p.exp.is_Rational and p.exp.q == 2)
        for p in sympy.preorder_traversal(expr)
    ):
        try:
            return ctx.const(radical_from_expr(alg, expr))
        except AlgebraError:
            pass
    if expr.is_Add:
        out = ctx.zero()
        for a in expr.args:
            out = out + powersum_from_expr(ctx, a)
        return out
    if expr.is_Mul:
        out = ctx.one()
        for a in expr.args:
            out = out * powersum_from_expr(ctx, a)
        return out
    if expr.is_Pow:
        base = powersum_from_expr(ctx, expr.base)
        return base.pow(alg.rf(expr.exp))
    if expr.is_Symbol:
        return ctx.symbol(expr.name)
    if expr.func is sympy.exp:
        raise PowerError("exponentials are outside the normal form")
    return ctx.const(radical_from_expr(alg, expr))


def radical_mp(x: RadicalExpr, point, dps: int = 50):
    """mpmath value of a RadicalExpr at a point given per field variable."""
    with mpmath.workdps(dps):
        pt = [mpmath.mpf(_num(v)) if not isinstance(v, mpmath.mpf) else v for v in point]
        return _eval_radical(x, pt)
