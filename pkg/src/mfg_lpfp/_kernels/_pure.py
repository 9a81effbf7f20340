"""numpy implementation of the revised-simplex pivot loop.

Semantics shared with the compiled kernel (_core.pyx):

* entering column: Dantzig (most positive reduced cost, first index on
  ties) or, in Bland mode, the lowest-index improving column;
* leaving row: minimum ratio with negative basic values clamped to zero,
  ties broken by the smallest basic column index (Bland-compatible);
* Bland mode turns on after ``bland_after`` consecutive degenerate pivots
  and off again at the first non-degenerate pivot.

The basis inverse, basic solution, basis arrays and the (bland, degenerate
run length) state are updated in place.  Returns (status, pivots_done).
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def pivot_chunk(
    indptr,
    indices,
    data,
    c,
    allow,
    inbasis,
    basis,
    binv,
    xb,
    state,
    max_pivots,
    opt_tol,
    piv_tol,
    degen_tol,
    bland_after,
):
    n = c.shape[0]
    colmap = np.repeat(np.arange(n), np.diff(indptr))
    pivots = 0
    priceable = (allow != 0) & (inbasis == 0)
    outer_scratch = np.empty_like(binv)
    while pivots < max_pivots:
        y = c[basis] @ binv
        z = c - np.bincount(colmap, weights=data * y[indices], minlength=n)
        cand = priceable & (z > opt_tol)
        if not cand.any():
            return OPTIMAL, pivots
        if state[0]:
            e = int(np.argmax(cand))
        else:
            e = int(np.argmax(np.where(cand, z, -np.inf)))
        lo, hi = indptr[e], indptr[e + 1]
        d = binv[:, indices[lo:hi]] @ data[lo:hi]

        eligible = d > piv_tol
        if not eligible.any():
            return UNBOUNDED, pivots
        ratios = np.where(eligible, np.maximum(xb, 0.0) / np.where(eligible, d, 1.0), np.inf)
        theta = ratios.min()
        ties = np.nonzero(ratios == theta)[0]
        r = int(ties[np.argmin(basis[ties])])

        pivot_row = binv[r] / d[r]
        np.multiply(d[:, None], pivot_row[None, :], out=outer_scratch)
        binv -= outer_scratch
        binv[r] = pivot_row
        xb -= theta * d
        xb[r] = theta
        priceable[e] = False
        priceable[basis[r]] = allow[basis[r]] != 0
        inbasis[e] = 1
        inbasis[basis[r]] = 0
        basis[r] = e
        pivots += 1

        if theta <= degen_tol:
            state[1] += 1
            if state[1] > bland_after:
                state[0] = 1
        else:
            state[1] = 0
            state[0] = 0
    return BUDGET, pivots
