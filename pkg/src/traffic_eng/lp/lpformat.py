"""Reader and writer for the CPLEX-style ``.lp`` text format.

Only the subset needed to exchange :class:`LpModel` instances is handled:
one objective, linear rows, bounds, and a ``Binaries`` section.
"""

from __future__ import annotations

import re
from pathlib import Path

from .model import INF, LpModel, Relation, Sense, VarKind

_TERMS_PER_LINE = 6
_REL = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}


class LpFormatError(ValueError):
    pass


def _num(x: float) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    return format(x, ".17g")


def _expr(model: LpModel, coeffs) -> list[str]:
    terms = []
    for j, c in coeffs:
        name = model.variables[j].name
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign} {_num(abs(c))} {name}")
    if not terms and model.variables:
        terms.append(f"+ 0 {model.variables[0].name}")
    if terms and terms[0].startswith("+ "):
        terms[0] = terms[0][2:]
    return terms


def _wrap(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines = []
    for i in range(0, max(len(terms), 1), _TERMS_PER_LINE):
        chunk = " ".join(terms[i : i + _TERMS_PER_LINE])
        lines.append((head if i == 0 else "  ") + chunk)
    lines[-1] += tail
    return lines


def export_lp_text(model: LpModel) -> str:
    out = [f"\\ Problem: {model.name}"]
    out.append("Minimize" if model.sense is Sense.MIN else "Maximize")
    out += _wrap(" obj: ", _expr(model, sorted(model.objective.items())))
    out.append("Subject To")
    for i, con in enumerate(model.constraints):
        name = con.name or f"c{i}"
        out += _wrap(f" {name}: ", _expr(model, con.coeffs), f" {_REL[con.relation]} {_num(con.rhs)}")

    # Appearance order makes read -> export reproduce the text exactly.
    seen: dict[int, None] = dict.fromkeys(sorted(model.objective))
    for con in model.constraints:
        seen.update(dict.fromkeys(j for j, _ in con.coeffs))
    rest = [j for j in range(model.n_vars) if j not in seen]
    order = [model.variables[j] for j in list(seen) + rest]
    order.sort(key=lambda v: v.kind is VarKind.BINARY and model.index(v.name) in rest)

    bounds = []
    for v in order:
        if v.kind is VarKind.BINARY:
            continue
        if v.lb == v.ub:
            bounds.append(f" {v.name} = {_num(v.lb)}")
        elif v.lb == -INF and v.ub == INF:
            bounds.append(f" {v.name} free")
        elif v.lb != 0.0 or v.ub != INF:
            bounds.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    if bounds:
        out.append("Bounds")
        out += bounds
    binaries = [v.name for v in order if v.kind is VarKind.BINARY]
    if binaries:
        out.append("Binaries")
        out += [" " + " ".join(binaries[i : i + 10]) for i in range(0, len(binaries), 10)]
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(model: LpModel, path: str | Path) -> None:
    Path(path).write_text(export_lp_text(model))


_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj",
    "maximize": "obj", "maximise": "obj", "max": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin", "end": "end",
}
_TERM = re.compile(r"([+-]?)\s*([0-9.eE+-]*[0-9.])?\s*([A-Za-z_][\w.\[\]]*)")


def _parse_expr(text: str) -> list[tuple[str, float]]:
    text = text.strip()
    out = []
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"cannot parse expression near {text[pos:pos + 20]!r}")
        sign, coef, name = m.groups()
        c = float(coef) if coef else 1.0
        out.append((name, -c if sign == "-" else c))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return out


def read_lp_text(text: str) -> LpModel:
    """Parse text produced by :func:`export_lp_text` (and close relatives)."""
    model = LpModel()
    section = None
    obj_sense = Sense.MIN
    stmts: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    for raw in text.splitlines():
        title = re.match(r"\s*\\\s*Problem:\s*(.*\S)", raw)
        if title:
            model.name = title.group(1)
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                obj_sense = Sense.MIN if key.startswith("min") else Sense.MAX
            if section == "end":
                break
            continue
        if section is None:
            raise LpFormatError(f"content outside any section: {line!r}")
        if section in ("obj", "rows") and stmts[section] and not re.match(r"^[A-Za-z_][\w.]*:", line):
            stmts[section][-1] += " " + line
        else:
            stmts[section].append(line)

    names: list[str] = []
    bounds: dict[str, tuple[float, float]] = {}
    binaries: list[str] = []

    def note(name: str) -> None:
        if name not in bounds:
            names.append(name)
            bounds[name] = (0.0, INF)

    obj_terms = []
    for st in stmts["obj"]:
        obj_terms += _parse_expr(st.split(":", 1)[1] if ":" in st else st)
    rows = []
    for st in stmts["rows"]:
        label, body = st.split(":", 1) if ":" in st else (None, st)
        m = re.match(r"(.*?)(<=|>=|=<|=>|<|>|=)\s*(\S+)\s*$", body)
        if not m:
            raise LpFormatError(f"bad constraint {st!r}")
        lhs, op, rhs = m.groups()
        rel = {"<=": Relation.LE, "=<": Relation.LE, "<": Relation.LE,
               ">=": Relation.GE, "=>": Relation.GE, ">": Relation.GE, "=": Relation.EQ}[op]
        rows.append((label.strip() if label else None, _parse_expr(lhs), rel, float(rhs)))
    for _, terms in [(None, obj_terms)] + [(r[0], r[1]) for r in rows]:
        for name, _c in terms:
            note(name)
    for st in stmts["bounds"]:
        parts = st.split()
        if len(parts) == 2 and parts[1].lower() == "free":
            note(parts[0])
            bounds[parts[0]] = (-INF, INF)
        elif len(parts) == 3 and parts[1] == "=":
            note(parts[0])
            bounds[parts[0]] = (float(parts[2]),) * 2
        elif len(parts) == 5:
            note(parts[2])
            bounds[parts[2]] = (float(parts[0]), float(parts[4]))
        elif len(parts) == 3 and parts[1] in ("<=", ">="):
            name, val = parts[0], float(parts[2])
            note(name)
            lb, ub = bounds[name]
            bounds[name] = (lb, val) if parts[1] == "<=" else (val, ub)
        else:
            raise LpFormatError(f"bad bound {st!r}")
    for st in stmts["bin"]:
        for name in st.split():
            note(name)
            binaries.append(name)

    for name in names:
        lb, ub = bounds[name]
        kind = VarKind.BINARY if name in binaries else VarKind.CONTINUOUS
        model.add_variable(name, lb, ub, kind)
    idx = model.index
    model.set_objective([(idx(n), c) for n, c in obj_terms if c != 0.0], obj_sense)
    for label, terms, rel, rhs in rows:
        model.add_constraint([(idx(n), c) for n, c in terms if c != 0.0], rel, rhs, label)
    return model
