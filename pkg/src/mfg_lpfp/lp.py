"""Occupation-measure linear programs for both game variants.

Variables and constraints
-------------------------
Stopping: one variable MU_i_j per grid node (exit mass) and one variable
M_i_j per (i < n_t, interior j) node (still-in-game mass).  Evaluating the
discretized constraint on the indicator test function of node (I, J) gives
one flow-balance equality per node:

    MU_I_J + [I < n_t, J interior] * M_I_J
           - sum_{J'} P_{I-1}(x_J' -> x_J) * M_{I-1}_J'  =  [I == 0] m0(x_J)

with P the three-point transition law of mfg_lpfp.generator.  Control with
absorption: M variables get an action subscript (M_i_j_k, coefficient
summed over incoming actions), and MU lives only on the parabolic boundary
(side columns for i < n_t plus the whole terminal slice).

Objective (maximize): sum G[i][j] MU_i_j + delta_t * sum F[i][j][k] M_i_j_k
with the reward tables frozen at the current mean field.

Row names are R_i_j, column names MU_i_j / M_i_j / M_i_j_k; the same names
are used by the MPS writer, so external solvers can cross-check objective
values on exported files (an OBJSENSE/MAX section carries the sense).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .errors import CflError, LpError
from .grid import GridSpec, validate_cfl
from .measures import CONTROL, STOPPING, MeanField
from .models import ModelSpec, RewardTables, discretize_initial, precompute_reward_tables
from .generator import transition_rows


@dataclass
class LinearProgram:
    """Sparse equality-constrained maximization over nonnegative variables."""

    n_rows: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    rhs: np.ndarray
    objective: np.ndarray
    columns: list  # VarKey per column: ("mu", i, j) | ("m", i, j) | ("m", i, j, k)
    row_keys: list  # (i, j) per row
    sense: str = "max"
    crash_basis: np.ndarray | None = None
    _var_index: dict = field(default=None, repr=False, compare=False)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def var_index(self, key) -> int:
        if self._var_index is None:
            object.__setattr__(self, "_var_index", {k: i for i, k in enumerate(self.columns)})
        return self._var_index[key]

    def col_name(self, j: int) -> str:
        return _name_of(self.columns[j])

    def row_name(self, r: int) -> str:
        i, j = self.row_keys[r]
        return f"R_{i}_{j}"

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_cols))
        for j in range(self.n_cols):
            lo, hi = self.indptr[j], self.indptr[j + 1]
            A[self.indices[lo:hi], j] = self.data[lo:hi]
        return A

    def __eq__(self, other):
        if not isinstance(other, LinearProgram):
            return NotImplemented
        return (
            self.n_rows == other.n_rows
            and self.sense == other.sense
            and self.columns == other.columns
            and self.row_keys == other.row_keys
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.objective, other.objective)
        )


@dataclass
class LPSolution:
    values: np.ndarray
    objective_value: float
    status: str
    residual_norm: float
    iterations: int = 0
    message: str = ""


def _name_of(key) -> str:
    if key[0] == "mu":
        return f"MU_{key[1]}_{key[2]}"
    if len(key) == 3:
        return f"M_{key[1]}_{key[2]}"
    return f"M_{key[1]}_{key[2]}_{key[3]}"


def _key_of(name: str):
    parts = name.split("_")
    if parts[0] == "MU" and len(parts) == 3:
        return ("mu", int(parts[1]), int(parts[2]))
    if parts[0] == "M" and len(parts) == 3:
        return ("m", int(parts[1]), int(parts[2]))
    if parts[0] == "M" and len(parts) == 4:
        return ("m", int(parts[1]), int(parts[2]), int(parts[3]))
    raise LpError(f"unrecognized column name {name!r}")


def _to_csc(n_rows, n_cols, rows, cols, vals):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((rows, cols))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n_cols + 1, dtype=np.int64)
    np.add.at(indptr, cols + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, rows, vals


def _require_cfl(grid: GridSpec, model: ModelSpec, override: bool = False):
    report = validate_cfl(grid, model)
    if not report.passed and not override:
        raise CflError(str(report))
    return report


def build_lp_stopping(
    grid: GridSpec, model: ModelSpec, mean_field: MeanField, tables: RewardTables | None = None, check_cfl: bool = True
) -> LinearProgram:
    """Assemble the stopping-game LP against a frozen mean field."""
    if model.kind != STOPPING:
        raise LpError("build_lp_stopping requires a stopping model")
    if check_cfl:
        _require_cfl(grid, model)
    if tables is None:
        tables = precompute_reward_tables(model, grid, mean_field)
    n_t, n_s = grid.n_t, grid.n_s
    width = n_s + 1
    m0 = discretize_initial(model, grid)

    def row_id(i, j):
        return i * width + j

    columns = [("mu", i, j) for i in range(n_t + 1) for j in range(width)]
    mu_col = lambda i, j: i * width + j
    n_mu = len(columns)
    m_col = {}
    for i in range(n_t):
        for j in range(1, n_s):
            m_col[(i, j)] = n_mu + len(m_col)
            columns.append(("m", i, j))

    rows, cols, vals = [], [], []
    # exit-mass identity block
    for i in range(n_t + 1):
        for j in range(width):
            rows.append(row_id(i, j))
            cols.append(mu_col(i, j))
            vals.append(1.0)
    # flow columns: +1 at own node, -transition masses at the next slice
    js = np.arange(1, n_s)
    for i in range(n_t):
        p_down, p_stay, p_up = transition_rows(grid, model, i)
        for idx, j in enumerate(js):
            col = m_col[(i, int(j))]
            rows.extend(
                [row_id(i, int(j)), row_id(i + 1, int(j) - 1), row_id(i + 1, int(j)), row_id(i + 1, int(j) + 1)]
            )
            cols.extend([col, col, col, col])
            vals.extend([1.0, -p_down[idx], -p_stay[idx], -p_up[idx]])

    n_rows = (n_t + 1) * width
    indptr, indices, data = _to_csc(n_rows, len(columns), rows, cols, vals)

    rhs = np.zeros(n_rows)
    rhs[row_id(0, 1) : row_id(0, n_s)] = m0.masses

    objective = np.empty(len(columns))
    objective[:n_mu] = tables.G.ravel()
    for (i, j), col in m_col.items():
        objective[col] = grid.delta_t * tables.F[i, j]

    crash = np.arange(n_rows, dtype=np.int64)  # the MU block is the identity
    row_keys = [(i, j) for i in range(n_t + 1) for j in range(width)]
    return LinearProgram(n_rows, indptr, indices, data, rhs, objective, columns, row_keys, "max", crash)


def build_lp_control(
    grid: GridSpec, model: ModelSpec, mean_field: MeanField, tables: RewardTables | None = None, check_cfl: bool = True
) -> LinearProgram:
    """Assemble the control-with-absorption LP against a frozen mean field."""
    if model.kind != CONTROL:
        raise LpError("build_lp_control requires a control-absorption model")
    if grid.n_actions == 0:
        raise LpError("control LP requires an action grid")
    if check_cfl:
        _require_cfl(grid, model)
    if tables is None:
        tables = precompute_reward_tables(model, grid, mean_field)
    n_t, n_s, n_a = grid.n_t, grid.n_s, grid.n_actions
    width = n_s + 1
    m0 = discretize_initial(model, grid)

    def row_id(i, j):
        return i * width + j

    columns = []
    mu_col = {}
    for i in range(n_t):
        for j in (0, n_s):
            mu_col[(i, j)] = len(columns)
            columns.append(("mu", i, j))
    for j in range(width):
        mu_col[(n_t, j)] = len(columns)
        columns.append(("mu", n_t, j))
    m_col = {}
    for i in range(n_t):
        for j in range(1, n_s):
            for k in range(n_a):
                m_col[(i, j, k)] = len(columns)
                columns.append(("m", i, j, k))

    rows, cols, vals = [], [], []
    for (i, j), col in mu_col.items():
        rows.append(row_id(i, j))
        cols.append(col)
        vals.append(1.0)
    js = np.arange(1, n_s)
    for i in range(n_t):
        for k in range(n_a):
            p_down, p_stay, p_up = transition_rows(grid, model, i, k)
            for idx, j in enumerate(js):
                col = m_col[(i, int(j), k)]
                rows.extend(
                    [row_id(i, int(j)), row_id(i + 1, int(j) - 1), row_id(i + 1, int(j)), row_id(i + 1, int(j) + 1)]
                )
                cols.extend([col, col, col, col])
                vals.extend([1.0, -p_down[idx], -p_stay[idx], -p_up[idx]])

    n_rows = (n_t + 1) * width
    indptr, indices, data = _to_csc(n_rows, len(columns), rows, cols, vals)

    rhs = np.zeros(n_rows)
    rhs[row_id(0, 1) : row_id(0, n_s)] = m0.masses

    objective = np.empty(len(columns))
    for (i, j), col in mu_col.items():
        objective[col] = tables.G[i, j]
    for (i, j, k), col in m_col.items():
        objective[col] = grid.delta_t * tables.F[i, j, k]

    # Crash basis: boundary/terminal rows take their MU column, interior
    # rows the first-action flow column; lower block-triangular in time.
    crash = np.empty(n_rows, dtype=np.int64)
    for i in range(n_t + 1):
        for j in range(width):
            if (i, j) in mu_col:
                crash[row_id(i, j)] = mu_col[(i, j)]
            else:
                crash[row_id(i, j)] = m_col[(i, j, 0)]
    row_keys = [(i, j) for i in range(n_t + 1) for j in range(width)]
    return LinearProgram(n_rows, indptr, indices, data, rhs, objective, columns, row_keys, "max", crash)


def solve_lp(lp: LinearProgram, tol: float = 1e-9, opt_tol: float = 1e-10, iter_limit: int | None = None) -> LPSolution:
    """Solve to an optimal basic solution with the internal simplex.

    Deterministic: identical inputs take identical pivot sequences.  ``tol``
    bounds the equality residual of a solution reported optimal; ``opt_tol``
    is the reduced-cost optimality threshold.
    """
    if lp.n_cols == 0 or lp.n_rows == 0:
        raise LpError("empty linear program")
    res = simplex.solve(
        lp.indptr,
        lp.indices,
        lp.data,
        lp.rhs,
        lp.objective,
        crash_basis=lp.crash_basis,
        feas_tol=tol,
        opt_tol=opt_tol,
        iter_limit=iter_limit,
    )
    return LPSolution(
        values=res.x,
        objective_value=res.objective,
        status=res.status,
        residual_norm=res.residual,
        iterations=res.iterations,
        message=res.message,
    )


def solution_mean_field(lp: LinearProgram, grid: GridSpec, values: np.ndarray, kind: str) -> MeanField:
    """Unpack an LP solution vector into a MeanField (dust clipped at zero)."""
    mf = MeanField.zeros(kind, grid)
    vals = np.maximum(values, 0.0)
    for col, key in enumerate(lp.columns):
        if key[0] == "mu":
            mf.mu[key[1], key[2]] = vals[col]
        elif len(key) == 3:
            mf.m[key[1], key[2]] = vals[col]
        else:
            mf.m[key[1], key[2], key[3]] = vals[col]
    return mf


# ---------------------------------------------------------------------------
# MPS export / import
# ---------------------------------------------------------------------------

_OBJ = "OBJ"
_RHS_SET = "RHS"


def export_mps(lp: LinearProgram, path) -> None:
    """Write the LP in MPS form (OBJSENSE extension carries maximization).

    Deterministic layout: rows in row order, columns in column order, two
    (row, value) pairs per COLUMNS/RHS line, 17-significant-digit floats.
    Names follow the module naming scheme and may exceed the historical
    8-character fixed-format limit; fields stay column-aligned.
    """
    if lp.n_cols == 0 or lp.n_rows == 0:
        raise LpError("refusing to export an empty linear program")
    name_w = max(
        8,
        max(len(lp.row_name(r)) for r in range(lp.n_rows)),
        max(len(lp.col_name(j)) for j in range(lp.n_cols)),
    ) + 2
    num_w = 25

    def pairs_line(col_name, entries):
        line = f"    {col_name:<{name_w}}"
        for row_name, val in entries:
            line += f"{row_name:<{name_w}}{val:<{num_w}.17g}"
        return line.rstrip()

    lines = [f"NAME{'':<10}MFG_LPFP", "OBJSENSE", "    MAX", "ROWS", f" N  {_OBJ}"]
    for r in range(lp.n_rows):
        lines.append(f" E  {lp.row_name(r)}")
    lines.append("COLUMNS")
    for j in range(lp.n_cols):
        entries = []
        if lp.objective[j] != 0.0:
            entries.append((_OBJ, lp.objective[j]))
        lo, hi = lp.indptr[j], lp.indptr[j + 1]
        entries.extend((lp.row_name(int(r)), float(v)) for r, v in zip(lp.indices[lo:hi], lp.data[lo:hi]))
        cname = lp.col_name(j)
        for s in range(0, len(entries), 2):
            lines.append(pairs_line(cname, entries[s : s + 2]))
    lines.append("RHS")
    entries = [(lp.row_name(r), float(lp.rhs[r])) for r in range(lp.n_rows) if lp.rhs[r] != 0.0]
    for s in range(0, len(entries), 2):
        lines.append(pairs_line(_RHS_SET, entries[s : s + 2]))
    lines.append("BOUNDS")  # all variables keep the default bound x >= 0
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_mps(path) -> LinearProgram:
    """Parse a file written by export_mps back into an equal LinearProgram."""
    sections: dict[str, list[list[str]]] = {}
    section = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                section = line.split()[0]
                sections.setdefault(section, [])
                continue
            if section is None:
                raise LpError("MPS data before any section header")
            sections[section].append(line.split())

    sense = "min"
    for tok in sections.get("OBJSENSE", []):
        sense = tok[0].lower()
    if sense != "max":
        raise LpError("expected an OBJSENSE MAX file")
    if sections.get("BOUNDS"):
        raise LpError("bounded variables are not part of this format")

    row_names: list[str] = []
    row_pos: dict[str, int] = {}
    for tok in sections.get("ROWS", []):
        kind, rname = tok
        if kind == "N":
            continue
        if kind != "E":
            raise LpError(f"only equality rows are supported, got {kind!r}")
        row_pos[rname] = len(row_names)
        row_names.append(rname)

    col_names: list[str] = []
    col_pos: dict[str, int] = {}
    obj_coef: list[float] = []
    rows, cols, vals = [], [], []
    for tok in sections.get("COLUMNS", []):
        cname = tok[0]
        if cname not in col_pos:
            col_pos[cname] = len(col_names)
            col_names.append(cname)
            obj_coef.append(0.0)
        j = col_pos[cname]
        for rname, sval in zip(tok[1::2], tok[2::2]):
            v = float(sval)
            if rname == _OBJ:
                obj_coef[j] = v
            else:
                rows.append(row_pos[rname])
                cols.append(j)
                vals.append(v)

    rhs = np.zeros(len(row_names))
    for tok in sections.get("RHS", []):
        for rname, sval in zip(tok[1::2], tok[2::2]):
            rhs[row_pos[rname]] = float(sval)

    if not row_names or not col_names:
        raise LpError("MPS file has no rows or no columns")
    indptr, indices, data = _to_csc(len(row_names), len(col_names), rows, cols, vals)
    row_keys = []
    for rname in row_names:
        parts = rname.split("_")
        if len(parts) != 3 or parts[0] != "R":
            raise LpError(f"unrecognized row name {rname!r}")
        row_keys.append((int(parts[1]), int(parts[2])))
    columns = [_key_of(c) for c in col_names]
    return LinearProgram(
        len(row_names),
        indptr,
        indices,
        data,
        rhs,
        np.asarray(obj_coef),
        columns,
        row_keys,
        "max",
        None,
    )
