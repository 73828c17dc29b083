"""Serializable reports of an expansion run.

Exact values are stored as the canonical strings printed by the algebra
layer, floats as decimal strings, so a report survives a JSON round trip
unchanged and two runs on the same input give byte-identical output.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional

import mpmath

from .frontend.ode import print_ode
from .pipeline import ExpansionResult


def _decimal(x) -> Optional[str]:
    if x is None:
        return None
    with mpmath.workdps(40):
        if isinstance(x, mpmath.mpc):
            if x.imag != 0:
                return f"{mpmath.nstr(x.real, 17)}{'+' if x.imag >= 0 else '-'}{mpmath.nstr(abs(x.imag), 17)}j"
            x = x.real
        return mpmath.nstr(mpmath.mpf(x), 17, min_fixed=-6, max_fixed=12)


@dataclass
class TermReport:
    exponent: str
    coefficient: str
    exponent_value: Optional[str] = None
    coefficient_value: Optional[str] = None


@dataclass
class FamilyReport:
    id: str
    status: str
    provenance: list
    region: list
    terms: list  # TermReport
    conditions: list = dc_field(default_factory=list)
    flags: list = dc_field(default_factory=list)
    free: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)
    critical_values: list = dc_field(default_factory=list)
    residual: list = dc_field(default_factory=list)
    equation: Optional[dict] = None  # unresolved leading equation

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FamilyReport":
        d = dict(d)
        d["terms"] = [TermReport(**t) for t in d["terms"]]
        return cls(**d)


@dataclass
class Report:
    ode: str
    config: dict
    critical_values: list
    families: list  # FamilyReport
    table: list = dc_field(default_factory=list)
    equality_exponents: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ode": self.ode,
            "config": self.config,
            "equality_exponents": list(self.equality_exponents),
            "table": self.table,
            "critical_values": self.critical_values,
            "families": [f.to_dict() for f in self.families],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(
            ode=d["ode"],
            config=d["config"],
            critical_values=d["critical_values"],
            families=[FamilyReport.from_dict(f) for f in d["families"]],
            table=d.get("table", []),
            equality_exponents=d.get("equality_exponents", []),
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def family(self, fid: str) -> FamilyReport:
        for f in self.families:
            if f.id == fid:
                return f
        raise KeyError(fid)

    def to_text(self) -> str:
        lines = [f"ode: {self.ode}"]
        lines.append("config: " + ", ".join(f"{k}={v}" for k, v in sorted(self.config.items()) if v is not None))
        if self.equality_exponents:
            lines.append("equality exponents (M=1): " + ", ".join(self.equality_exponents))
        if self.table:
            lines.append("leading exponents:")
            for block in self.table:
                rows = "; ".join(f"{r['case']}: {r['exponent']}" for r in block["rows"])
                lines.append(f"  {block['block']}: {rows}")
        lines.append("critical values:")
        for c in self.critical_values:
            lines.append(f"  {c['kind']}: {c['equation']}  [{c['witness']}]")
        for f in self.families:
            lines.append("")
            lines.append(f"family {f.id} ({f.status})")
            lines.append("  provenance: " + " / ".join(f.provenance))
            if f.region:
                lines.append("  region: " + ", ".join(f.region))
            for j, t in enumerate(f.terms, start=1):
                num = ""
                if t.exponent_value is not None:
                    coef = t.coefficient_value if t.coefficient_value is not None else t.coefficient
                    num = f"  ~ {coef} t^{t.exponent_value}"
                lines.append(f"  c{j} t^n{j}: n{j} = {t.exponent}, c{j} = {t.coefficient}{num}")
            if f.equation:
                poly = " + ".join(f"({c})*c1^{k}" for k, c in enumerate(f.equation["coefficients"]))
                lines.append(f"  n1 = {f.equation['exponent']}, c1 solves {poly} = 0")
            for label, items in (("conditions", f.conditions), ("flags", f.flags), ("free", f.free), ("notes", f.notes)):
                if items:
                    lines.append(f"  {label}: " + "; ".join(items))
            for r in f.residual:
                lines.append(f"  residual at {r['point']}: slope {r['slope']} vs {r['predicted']} -> {'pass' if r['passed'] else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _config(result: ExpansionResult, order: int) -> dict:
    p = result.problem
    out = {
        "limit": p.config.limit,
        "order": order,
        "exponent_param": p.exponent_param,
    }
    out["params"] = {d.name: (str(d.value) if d.value is not None else d.bound.describe(d.name)) for d in p.params}
    return out


def _numeric_point(result: ExpansionResult) -> Optional[dict]:
    p = result.problem
    if any(d.value is None and not d.bound.is_point for d in p.params):
        return None
    return {d.name: (d.value if d.value is not None else d.bound.lo) for d in p.params}


def family_report(result: ExpansionResult, fam, residual: Optional[list] = None) -> FamilyReport:
    alg = result.problem.alg
    point = _numeric_point(result)
    terms = []
    for t in fam.terms:
        ev = cv = None
        if point is not None:
            from .algebra.powers import radical_mp

            pt = [point.get(s.name, 0) for s in alg.symbols]
            ev = _decimal(radical_mp(t.exp, pt, 30))
            if not t.coeff.symbols():
                cv = _decimal(t.coeff.evalf(point, {}, 30))
        terms.append(TermReport(str(t.exp), str(t.coeff), ev, cv))
    crits = [c.as_dict() for c in result.criticals if c.witness.startswith(f"{fam.id}:")]
    return FamilyReport(
        id=fam.id,
        status=fam.status,
        provenance=[str(x) for x in fam.provenance],
        region=fam.region.describe(),
        terms=terms,
        conditions=[c.describe() for c in fam.conditions],
        flags=list(fam.flags),
        free=list(fam.free),
        notes=list(fam.notes),
        critical_values=crits,
        residual=[r.as_dict() for r in (residual or [])],
        equation=None if fam.equation is None else {"exponent": str(fam.equation[0]), "coefficients": [str(c) for c in fam.equation[1]]},
    )


def build_report(result: ExpansionResult, order: Optional[int] = None, residuals: Optional[dict] = None) -> Report:
    """``residuals`` maps family id to a list of ResidualCheck."""
    residuals = residuals or {}
    order = order or max((f.M for f in result.families), default=1)
    table = []
    for label, rows in result.table:
        table.append({"block": label, "rows": [{"case": r.describe(), "exponent": str(r.exp)} for r in rows]})
    return Report(
        ode=print_ode(result.problem.ode),
        config=_config(result, order),
        critical_values=[c.as_dict() for c in result.criticals],
        families=[family_report(result, f, residuals.get(f.id)) for f in result.families],
        table=table,
        equality_exponents=[str(e.value) for e in result.equality],
    )
