"""Equality-form primal revised simplex with a dense basis inverse.

Maximizes c @ x subject to A x = b, x >= 0, with A handed over in CSC
arrays.  The pivot loop lives in mfg_lpfp._kernels (compiled when the
extension is built, numpy otherwise); this driver owns

* row-sign normalization (rhs >= 0),
* phase 1 with one artificial column per row, skipped when the caller
  supplies a feasible crash basis,
* driving residual basic artificials out (or proving their rows redundant)
  before phase 2,
* periodic refactorization of the basis inverse between pivot chunks, and
* an exact optimality re-verification on a freshly factorized basis before
  declaring a solution optimal.

Degenerate flow LPs are the normal case here, so the kernel switches to
Bland's rule after a run of degenerate pivots and back once it makes
progress; that combination has terminated on everything we have thrown at
it, and the iteration cap turns a would-be cycle into an explicit failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LpError

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_ITERATION_LIMIT = "iteration-limit"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int
    residual: float
    basis: np.ndarray
    message: str = ""


def _gather_basis(indptr, indices, data, basis, m):
    B = np.zeros((m, m))
    for pos in range(m):
        col = basis[pos]
        lo, hi = indptr[col], indptr[col + 1]
        B[indices[lo:hi], pos] = data[lo:hi]
    return B


def _reduced_costs(indptr, indices, data, c, basis, binv, n):
    y = c[basis] @ binv
    colmap = np.repeat(np.arange(n), np.diff(indptr))
    return c - np.bincount(colmap, weights=data * y[indices], minlength=n)


class _Workspace:
    """Mutable solver state over the (possibly artificial-extended) matrix."""

    def __init__(self, indptr, indices, data, b, n_cols):
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.b = b
        self.n = n_cols
        self.m = b.shape[0]
        self.basis = None
        self.binv = None
        self.xb = None
        self.inbasis = np.zeros(n_cols, dtype=np.uint8)

    def set_basis(self, basis):
        self.basis = np.asarray(basis, dtype=np.int64).copy()
        self.inbasis[:] = 0
        self.inbasis[self.basis] = 1
        self.refactor()

    def refactor(self):
        B = _gather_basis(self.indptr, self.indices, self.data, self.basis, self.m)
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LpError(f"singular basis during refactorization: {exc}") from None
        self.binv = np.ascontiguousarray(self.binv)
        self.xb = self.binv @ self.b

    def column_of_row(self, row, allow):
        """Index of an allowed column with a nonzero pivot in basis row `row`."""
        rowvec = self.binv[row]
        colmap = np.repeat(np.arange(self.n), np.diff(self.indptr))
        vals = np.abs(np.bincount(colmap, weights=self.data * rowvec[self.indices], minlength=self.n))
        vals[~allow.astype(bool)] = 0.0
        vals[self.inbasis.astype(bool)] = 0.0
        j = int(np.argmax(vals))
        return j if vals[j] > 1e-9 else -1

    def pivot_in(self, e, r):
        """Force column e into basis position r (theta = current xb[r])."""
        lo, hi = self.indptr[e], self.indptr[e + 1]
        d = self.binv[:, self.indices[lo:hi]] @ self.data[lo:hi]
        pivot_row = self.binv[r] / d[r]
        self.binv -= np.outer(d, pivot_row)
        self.binv[r] = pivot_row
        theta = max(self.xb[r], 0.0) / d[r]
        self.xb -= theta * d
        self.xb[r] = theta
        self.inbasis[e] = 1
        self.inbasis[self.basis[r]] = 0
        self.basis[r] = e


def _run_phase(ws: _Workspace, c, allow, opt_tol, piv_tol, chunk, bland_after, budget):
    """Pivot to optimality for costs c; returns (status, pivots_used)."""
    state = np.zeros(2, dtype=np.int64)
    used = 0
    verify_rounds = 0
    while True:
        status, k = _kernels.pivot_chunk(
            ws.indptr,
            ws.indices,
            ws.data,
            c,
            allow,
            ws.inbasis,
            ws.basis,
            ws.binv,
            ws.xb,
            state,
            min(chunk, max(1, budget - used)),
            opt_tol,
            piv_tol,
            1e-11,
            bland_after,
        )
        used += k
        ws.refactor()
        if status == _kernels.UNBOUNDED:
            return STATUS_UNBOUNDED, used
        if status == _kernels.BUDGET:
            if used >= budget:
                return STATUS_ITERATION_LIMIT, used
            continue
        # Kernel believes it is optimal; re-check on the fresh factorization.
        z = _reduced_costs(ws.indptr, ws.indices, ws.data, c, ws.basis, ws.binv, ws.n)
        z[ws.inbasis.astype(bool)] = -np.inf
        z[~allow.astype(bool)] = -np.inf
        if z.max(initial=-np.inf) <= opt_tol:
            return STATUS_OPTIMAL, used
        verify_rounds += 1
        if verify_rounds > 25 or used >= budget:
            return STATUS_ITERATION_LIMIT, used


def solve(
    indptr,
    indices,
    data,
    b,
    c,
    crash_basis=None,
    *,
    opt_tol: float = 1e-10,
    feas_tol: float = 1e-9,
    piv_tol: float = 1e-9,
    chunk: int = 512,
    bland_after: int = 120,
    iter_limit: int | None = None,
) -> SimplexResult:
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    data = np.ascontiguousarray(data, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = c.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        raise LpError("empty linear program")
    if iter_limit is None:
        iter_limit = max(20000, 60 * (m + n))

    # Normalize row signs so every rhs entry is nonnegative.
    flip = np.where(b < 0.0, -1.0, 1.0)
    b = b * flip
    data = data * flip[indices]

    total_pivots = 0
    used_artificials = crash_basis is None
    if used_artificials:
        # Append one artificial identity column per row.
        indptr_w = np.concatenate([indptr, indptr[-1] + 1 + np.arange(m, dtype=np.int64)])
        indices_w = np.concatenate([indices, np.arange(m, dtype=np.int64)])
        data_w = np.concatenate([data, np.ones(m)])
        n_w = n + m
        ws = _Workspace(indptr_w, indices_w, data_w, b, n_w)
        ws.set_basis(n + np.arange(m, dtype=np.int64))

        allow = np.zeros(n_w, dtype=np.uint8)
        allow[:n] = 1
        c1 = np.zeros(n_w)
        c1[n:] = -1.0
        status, used = _run_phase(ws, c1, allow, opt_tol, piv_tol, chunk, bland_after, iter_limit)
        total_pivots += used
        if status == STATUS_UNBOUNDED:
            # Phase-1 objective is bounded above by zero; this is numerical.
            return SimplexResult(STATUS_ITERATION_LIMIT, np.zeros(n), 0.0, total_pivots, np.inf, ws.basis[:], "phase-1 breakdown")
        infeas = float(ws.xb[ws.basis >= n].sum())
        if status != STATUS_OPTIMAL or infeas > feas_tol * (1.0 + float(np.abs(b).sum())):
            x = np.zeros(n)
            return SimplexResult(STATUS_INFEASIBLE, x, 0.0, total_pivots, infeas, ws.basis[:], "phase-1 infeasibility")
        # Pivot residual artificials out where the row is not redundant.
        for pos in range(m):
            if ws.basis[pos] >= n:
                e = ws.column_of_row(pos, allow)
                if e >= 0:
                    ws.pivot_in(e, pos)
        ws.refactor()
        c2 = np.concatenate([c, np.zeros(m)])
    else:
        ws = _Workspace(indptr, indices, data, b, n)
        ws.set_basis(crash_basis)
        if ws.xb.min(initial=0.0) < -feas_tol:
            raise LpError("crash basis is infeasible")
        allow = np.ones(n, dtype=np.uint8)
        c2 = c

    allow2 = allow.copy() if used_artificials else allow
    status, used = _run_phase(ws, c2, allow2, opt_tol, piv_tol, chunk, bland_after, iter_limit - total_pivots)
    total_pivots += used

    x = np.zeros(n)
    real = ws.basis < n
    x[ws.basis[real]] = ws.xb[real]
    residual = float(np.abs(_csc_matvec(indptr, indices, data, x, m) - b).max(initial=0.0))
    objective = float(c @ x)
    message = ""
    if status == STATUS_OPTIMAL and residual > feas_tol:
        status = STATUS_ITERATION_LIMIT
        message = f"residual {residual:.3e} exceeds tolerance after optimality"
    return SimplexResult(status, x, objective, total_pivots, residual, ws.basis.copy(), message)


def _csc_matvec(indptr, indices, data, x, m):
    out = np.zeros(m)
    nz = np.nonzero(x)[0]
    for j in nz:
        lo, hi = indptr[j], indptr[j + 1]
        out[indices[lo:hi]] += data[lo:hi] * x[j]
    return out
