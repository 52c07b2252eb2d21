"""Fixed-layout MPS emission and parsing for LinearProgram interchange.

The emitted document is deterministic: column order is insertion order and
numbers are printed in a fixed scientific format, so identical programs
produce byte-identical files.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .lpcore import EQ, GE, INF, LE, LinearProgram, LpError

MAX_NAME_LEN = 24
OBJ_ROW = "COST"
RHS_SET = "RHS"
BND_SET = "BND"

_REL_TO_ROW = {LE: "L", EQ: "E", GE: "G"}
_ROW_TO_REL = {"L": LE, "E": EQ, "G": GE}


class MpsFormatError(ValueError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _num(value: float) -> str:
    return f"{value:.16e}"


def _check_name(name: str, what: str):
    if len(name) > MAX_NAME_LEN:
        raise LpError(f"{what} name {name!r} exceeds {MAX_NAME_LEN} characters")
    if not name or any(ch.isspace() for ch in name):
        raise LpError(f"{what} name {name!r} is empty or contains whitespace")


def emit_standard_form(lp: LinearProgram) -> str:
    """Serialize an LP to a fixed-layout MPS document."""
    for name in lp.var_names:
        _check_name(name, "variable")
    for con in lp.constraints:
        _check_name(con.name, "constraint")
    if OBJ_ROW in (con.name for con in lp.constraints):
        raise LpError(f"constraint name {OBJ_ROW!r} is reserved for the objective row")

    w = MAX_NAME_LEN + 2
    lines = [f"NAME          {lp.name}"]
    if lp.sense == "max":
        lines.append("OBJSENSE")
        lines.append("    MAX")
    lines.append("ROWS")
    lines.append(f" N  {OBJ_ROW}")
    for con in lp.constraints:
        lines.append(f" {_REL_TO_ROW[con.relation]}  {con.name}")

    # entries per variable, objective first, then rows in declaration order
    by_var: List[List[Tuple[str, float]]] = [[] for _ in range(lp.num_vars)]
    for idx, val in lp.objective.items():
        by_var[idx].append((OBJ_ROW, val))
    for con in lp.constraints:
        for idx, val in con.coeffs.items():
            by_var[idx].append((con.name, val))

    lines.append("COLUMNS")
    for idx, entries in enumerate(by_var):
        name = lp.var_names[idx]
        if not entries:
            entries = [(OBJ_ROW, 0.0)]  # declare otherwise-unused variables
        for row, val in entries:
            lines.append(f"    {name:<{w}}{row:<{w}}{_num(val)}")

    lines.append("RHS")
    if lp.objective_constant != 0.0:
        # MPS convention: the objective-row RHS entry is minus the constant
        lines.append(f"    {RHS_SET:<{w}}{OBJ_ROW:<{w}}{_num(-lp.objective_constant)}")
    for con in lp.constraints:
        if con.rhs != 0.0:
            lines.append(f"    {RHS_SET:<{w}}{con.name:<{w}}{_num(con.rhs)}")

    lines.append("BOUNDS")
    for idx, name in enumerate(lp.var_names):
        lb, ub = lp.lower[idx], lp.upper[idx]
        if lb == 0.0 and ub == INF:
            continue
        if lb == ub:
            lines.append(f" FX {BND_SET:<{w}}{name:<{w}}{_num(lb)}")
            continue
        if lb == -INF and ub == INF:
            lines.append(f" FR {BND_SET:<{w}}{name:<{w}}")
            continue
        if lb == -INF:
            lines.append(f" MI {BND_SET:<{w}}{name:<{w}}")
        elif lb != 0.0:
            lines.append(f" LO {BND_SET:<{w}}{name:<{w}}{_num(lb)}")
        if ub != INF:
            lines.append(f" UP {BND_SET:<{w}}{name:<{w}}{_num(ub)}")

    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def parse_standard_form(text: str) -> LinearProgram:
    """Parse an MPS document produced by (or compatible with) the writer."""
    lp = LinearProgram()
    rows: Dict[str, Tuple[str, Dict[str, float], float]] = {}  # rel, coeffs-by-name, rhs
    row_order: List[str] = []
    obj_row: Optional[str] = None
    obj_coeffs: Dict[str, float] = {}
    obj_const = 0.0
    section = None
    saw_endata = False
    pending_sense = False

    raw_lines = text.splitlines()
    last_no = len(raw_lines)
    for line_no, raw in enumerate(raw_lines, start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if saw_endata:
            raise MpsFormatError("content after ENDATA", line_no)
        header = not raw[0].isspace()
        tokens = raw.split()

        if header:
            keyword = tokens[0]
            if keyword == "NAME":
                lp.name = tokens[1] if len(tokens) > 1 else "lp"
                section = "NAME"
            elif keyword == "OBJSENSE":
                section = "OBJSENSE"
                pending_sense = True
                if len(tokens) > 1:  # sense on the header line itself
                    lp.sense = tokens[1].lower()
                    pending_sense = False
            elif keyword in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = keyword
            elif keyword == "ENDATA":
                saw_endata = True
            else:
                raise MpsFormatError(f"unknown section {keyword!r}", line_no)
            continue

        if section == "OBJSENSE":
            if not pending_sense:
                raise MpsFormatError("extra OBJSENSE entry", line_no)
            sense = tokens[0].lower()
            if sense not in ("min", "max", "minimize", "maximize"):
                raise MpsFormatError(f"unknown objective sense {tokens[0]!r}", line_no)
            lp.sense = "max" if sense.startswith("max") else "min"
            pending_sense = False

        elif section == "ROWS":
            if len(tokens) != 2 or tokens[0] not in ("N", "L", "G", "E"):
                raise MpsFormatError("malformed ROWS entry", line_no)
            kind, name = tokens
            if kind == "N":
                if obj_row is not None:
                    raise MpsFormatError("multiple objective (N) rows", line_no)
                obj_row = name
            else:
                if name in rows:
                    raise MpsFormatError(f"duplicate row {name!r}", line_no)
                rows[name] = (_ROW_TO_REL[kind], {}, 0.0)
                row_order.append(name)

        elif section == "COLUMNS":
            if obj_row is None:
                raise MpsFormatError("COLUMNS before ROWS", line_no)
            if len(tokens) not in (3, 5):
                raise MpsFormatError("malformed COLUMNS entry", line_no)
            col = tokens[0]
            if col not in lp._var_index:
                lp.add_var(col)
            for row, val in zip(tokens[1::2], tokens[2::2]):
                try:
                    value = float(val)
                except ValueError:
                    raise MpsFormatError(f"non-numeric value {val!r}", line_no)
                if row == obj_row:
                    obj_coeffs[col] = obj_coeffs.get(col, 0.0) + value
                elif row in rows:
                    rows[row][1][col] = rows[row][1].get(col, 0.0) + value
                else:
                    raise MpsFormatError(f"entry for unknown row {row!r}", line_no)

        elif section == "RHS":
            if len(tokens) not in (3, 5):
                raise MpsFormatError("malformed RHS entry", line_no)
            for row, val in zip(tokens[1::2], tokens[2::2]):
                try:
                    value = float(val)
                except ValueError:
                    raise MpsFormatError(f"non-numeric value {val!r}", line_no)
                if row == obj_row:
                    obj_const = -value
                elif row in rows:
                    rel, coeffs, _ = rows[row]
                    rows[row] = (rel, coeffs, value)
                else:
                    raise MpsFormatError(f"RHS entry for unknown row {row!r}", line_no)

        elif section == "RANGES":
            raise MpsFormatError("RANGES entries are not supported", line_no)

        elif section == "BOUNDS":
            kind = tokens[0]
            if kind in ("FR", "MI", "PL"):
                if len(tokens) != 3:
                    raise MpsFormatError("malformed BOUNDS entry", line_no)
                value = None
            elif kind in ("LO", "UP", "FX"):
                if len(tokens) != 4:
                    raise MpsFormatError("malformed BOUNDS entry", line_no)
                try:
                    value = float(tokens[3])
                except ValueError:
                    raise MpsFormatError(f"non-numeric bound {tokens[3]!r}", line_no)
            else:
                raise MpsFormatError(f"unknown bound type {kind!r}", line_no)
            col = tokens[2]
            if col not in lp._var_index:
                raise MpsFormatError(f"bound for unknown column {col!r}", line_no)
            idx = lp.var_index(col)
            if kind == "LO":
                lp.lower[idx] = value
            elif kind == "UP":
                lp.upper[idx] = value
            elif kind == "FX":
                lp.lower[idx] = value
                lp.upper[idx] = value
            elif kind == "FR":
                lp.lower[idx] = -INF
                lp.upper[idx] = INF
            elif kind == "MI":
                lp.lower[idx] = -INF
            # PL: upper already +inf by default

        elif section in ("NAME", None):
            raise MpsFormatError("data before a section header", line_no)

    if not saw_endata:
        raise MpsFormatError("missing ENDATA", last_no)
    if obj_row is None:
        raise MpsFormatError("no objective (N) row declared", last_no)

    for name in row_order:
        rel, coeffs, rhs = rows[name]
        lp.add_constraint(name, {lp.var_index(c): v for c, v in coeffs.items()},
                          rel, rhs)
    lp.set_objective(lp.sense, {lp.var_index(c): v for c, v in obj_coeffs.items()},
                     obj_const)
    return lp
