#!/usr/bin/env python3
"""Reference backend: solve an MPS model with SciPy's HiGHS interface.

Usage: highs_solve.py MODEL.mps SOLUTION.sol

Writes `status <optimal|infeasible|time_limit>` followed by one
`name value` line per column, the format `--backend cmd:...` expects.
"""
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix


def read_mps(path):
    rows, row_sense, obj_row = [], {}, None
    cols, col_index, integer = [], {}, []
    entries, rhs, bounds = [], {}, {}
    section, in_int = None, False
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                section = line.split()[0]
                continue
            tok = line.split()
            if section == "ROWS":
                sense, name = tok
                if sense == "N" and obj_row is None:
                    obj_row = name
                elif sense != "N":
                    row_sense[name] = sense
                    rows.append(name)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                name = tok[0]
                if name not in col_index:
                    col_index[name] = len(cols)
                    cols.append(name)
                    integer.append(in_int)
                for k in range(1, len(tok), 2):
                    entries.append((tok[k], col_index[name], float(tok[k + 1])))
            elif section == "RHS":
                for k in range(1, len(tok), 2):
                    rhs[tok[k]] = float(tok[k + 1])
            elif section == "BOUNDS":
                kind, _, name = tok[0], tok[1], tok[2]
                val = float(tok[3]) if len(tok) > 3 else None
                bounds.setdefault(name, []).append((kind, val))
            elif section == "RANGES":
                sys.exit("RANGES section is not supported")
    return rows, row_sense, obj_row, cols, integer, entries, rhs, bounds


def main():
    mps_path, sol_path = sys.argv[1], sys.argv[2]
    rows, row_sense, obj_row, cols, integer, entries, rhs, bounds = read_mps(mps_path)
    n = len(cols)
    row_index = {r: i for i, r in enumerate(rows)}
    c = np.zeros(n)
    ri, ci, vals = [], [], []
    for row, j, v in entries:
        if row == obj_row:
            c[j] += v
        else:
            ri.append(row_index[row])
            ci.append(j)
            vals.append(v)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    for name, items in bounds.items():
        j = cols.index(name)
        for kind, val in items:
            if kind == "UP":
                ub[j] = val
            elif kind == "LO":
                lb[j] = val
            elif kind == "FX":
                lb[j] = ub[j] = val
            elif kind == "FR":
                lb[j], ub[j] = -np.inf, np.inf
            elif kind == "MI":
                lb[j] = -np.inf
            elif kind == "PL":
                ub[j] = np.inf
            elif kind == "BV":
                lb[j], ub[j] = 0.0, 1.0
                integer[j] = True
    for j in range(n):
        # integer columns without bounds default to binary in MPS
        if integer[j] and cols[j] not in bounds:
            ub[j] = 1.0
    m = len(rows)
    row_lo, row_hi = np.full(m, -np.inf), np.full(m, np.inf)
    for i, r in enumerate(rows):
        b = rhs.get(r, 0.0)
        s = row_sense[r]
        if s in ("E", "G"):
            row_lo[i] = b
        if s in ("E", "L"):
            row_hi[i] = b
    constraints = []
    if m:
        a = coo_matrix((vals, (ri, ci)), shape=(m, n)).tocsr()
        constraints.append(LinearConstraint(a, row_lo, row_hi))
    res = milp(
        c,
        constraints=constraints,
        integrality=np.array(integer, dtype=int),
        bounds=Bounds(lb, ub),
        options={"mip_rel_gap": 1e-9},
    )
    with open(sol_path, "w") as out:
        if res.status == 0:
            out.write("status optimal\n")
        elif res.status == 2:
            out.write("status infeasible\n")
            return
        elif res.status == 1 and res.x is not None:
            out.write("status time_limit\n")
        else:
            sys.exit(f"HiGHS failed: {res.message}")
        for name, v in zip(cols, res.x):
            out.write(f"{name} {float(v)!r}\n")


if __name__ == "__main__":
    main()
