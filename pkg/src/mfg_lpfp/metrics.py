"""Distances between discrete (sub)probability measures.

* ``w1_prime``    reference-point Wasserstein variant on subprobabilities:
  sup over 1-Lipschitz functions vanishing at x0 of the signed integral,
  plus the total-mass difference.  Evaluated exactly in 1-D by integrating
  the absolute partial cumulative sums away from x0.
* ``d_m_metric``  time-integrated w1_prime between occupation flows
  (state marginals), delta_t * sum over slices.
* ``w1_exit``     1-Wasserstein distance between exit measures on the
  time-state rectangle.  Exact (transport LP on the internal simplex) for
  supports up to ``max_exact`` atoms per side; above that a documented
  upper-bound surrogate (greedy cumulative matching along the fixed node
  ordering) is returned and flagged.
* ``weighted_tv`` total variation weighted by (1 + |x|^p).

Ground metric on the rectangle is |dt| + |dx| (the product-space metric
with exponent one, matching both built-in examples); ``metric="euclid"``
switches to the Euclidean distance.

The brute-force oracles used by the test-suite live here too:
``w1_prime_dual_bruteforce`` enumerates piecewise-linear dual functions
with slopes +-1, ``w1_exit_bruteforce`` enumerates all transport plans of
quantized measures via assignment permutations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ModelError
from .grid import GridSpec


@dataclass(frozen=True)
class DiscreteSubprob:
    """Atoms (position, mass >= 0) on the line with total mass <= 1."""

    xs: np.ndarray
    ws: np.ndarray

    def __post_init__(self):
        xs = np.atleast_1d(np.asarray(self.xs, dtype=float))
        ws = np.atleast_1d(np.asarray(self.ws, dtype=float))
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ws", ws)
        if xs.shape != ws.shape or xs.ndim != 1:
            raise ModelError("atoms need matching 1-D position/mass arrays")
        if ws.size and ws.min() < 0.0:
            raise ModelError("atom masses must be nonnegative")
        if ws.sum() > 1.0 + 1e-12:
            raise ModelError("subprobability mass exceeds one")

    @property
    def mass(self) -> float:
        return float(self.ws.sum())


def _signed_tail_integral(pos: np.ndarray, wts: np.ndarray, x0: float) -> tuple[float, float]:
    """Integral of |h| with h(s) the signed mass beyond s (seen from x0).

    h(s) = d([s, inf)) right of x0 and -d((-inf, s]) left of x0, for the
    signed measure d with atoms (pos, wts); returns (integral, total mass).
    """
    if pos.size == 0:
        return 0.0, 0.0
    order = np.argsort(pos, kind="stable")
    p = pos[order]
    prefix = np.cumsum(wts[order])
    total = float(prefix[-1])
    acc = 0.0
    if p.size > 1:
        left_len = np.clip(np.minimum(p[1:], x0) - p[:-1], 0.0, None)
        right_len = np.clip(p[1:] - np.maximum(p[:-1], x0), 0.0, None)
        acc += float(np.abs(prefix[:-1]) @ left_len + np.abs(total - prefix[:-1]) @ right_len)
    if x0 < p[0]:
        acc += abs(total) * (p[0] - x0)
    elif x0 > p[-1]:
        acc += abs(total) * (x0 - p[-1])
    return acc, total


def w1_prime_arrays(xs: np.ndarray, wa: np.ndarray, wb: np.ndarray, x0: float) -> float:
    """w1_prime for two mass vectors on a common position axis."""
    pos = np.concatenate([xs, xs])
    wts = np.concatenate([wa, -np.asarray(wb, dtype=float)])
    integral, total = _signed_tail_integral(pos, wts, x0)
    return integral + abs(total)


def w1_prime(a: DiscreteSubprob, b: DiscreteSubprob, x0: float) -> float:
    """Exact reference-point Wasserstein variant between subprobabilities."""
    pos = np.concatenate([a.xs, b.xs])
    wts = np.concatenate([a.ws, -b.ws])
    integral, total = _signed_tail_integral(pos, wts, x0)
    return integral + abs(total)


def d_m_metric(m1, m2, grid: GridSpec, x0: float | None = None) -> float:
    """delta_t-weighted sum over time slices of w1_prime between two flows.

    Accepts state-marginal arrays of shape (n_t, n_s+1) or MeanField
    objects (control flows are collapsed to state marginals first).
    """
    a = m1.m_x if hasattr(m1, "m_x") else np.asarray(m1, dtype=float)
    b = m2.m_x if hasattr(m2, "m_x") else np.asarray(m2, dtype=float)
    if a.shape != b.shape or a.shape != (grid.n_t, grid.n_s + 1):
        raise ModelError(f"flow shapes {a.shape}/{b.shape} do not match the grid")
    if x0 is None:
        x0 = 0.5 * (grid.x_min + grid.x_max)
    xs = grid.x_nodes
    return grid.delta_t * sum(w1_prime_arrays(xs, a[i], b[i], x0) for i in range(grid.n_t))


class W1Result(NamedTuple):
    value: float
    exact: bool


def _ground_dist(t1, x1, t2, x2, metric: str):
    if metric == "taxicab":
        return np.abs(t1 - t2) + np.abs(x1 - x2)
    if metric == "euclid":
        return np.hypot(t1 - t2, x1 - x2)
    raise ModelError(f"unknown ground metric {metric!r}")


def _atoms_of(mu, grid: GridSpec | None):
    if grid is not None:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (grid.n_t + 1, grid.n_s + 1):
            raise ModelError("exit measure shape does not match the grid")
        ts = np.repeat(grid.t_nodes, grid.n_s + 1)
        xs = np.tile(grid.x_nodes, grid.n_t + 1)
        ws = mu.ravel()
    else:
        ts, xs, ws = (np.asarray(v, dtype=float) for v in mu)
    keep = ws > 0.0
    return ts[keep], xs[keep], ws[keep]


def w1_exit(mu1, mu2, grid: GridSpec | None = None, *, max_exact: int = 400, metric: str = "taxicab") -> W1Result:
    """1-Wasserstein distance between two equal-mass exit measures.

    Inputs are either (n_t+1, n_s+1) grid arrays (pass the grid) or
    (ts, xs, ws) atom triples.  Exact for supports up to ``max_exact``
    atoms per side; otherwise returns the greedy upper-bound surrogate
    with ``exact=False``.

    Grid inputs are reduced first: W1 depends only on the signed
    difference, so shared mass stays in place at zero cost and only the
    positive/negative parts are transported.  The size threshold applies
    to the reduced supports.
    """
    if grid is not None:
        a = np.asarray(mu1, dtype=float)
        b = np.asarray(mu2, dtype=float)
        if abs(a.sum() - b.sum()) > 1e-9:
            raise ModelError(f"exit measures carry different masses ({a.sum()!r} vs {b.sum()!r})")
        common = np.minimum(a, b)
        mu1, mu2 = a - common, b - common
    t1, x1, w1 = _atoms_of(mu1, grid)
    t2, x2, w2 = _atoms_of(mu2, grid)
    s1, s2 = w1.sum(), w2.sum()
    if abs(s1 - s2) > 1e-9:
        raise ModelError(f"exit measures carry different masses ({s1!r} vs {s2!r})")
    if s1 <= 0.0 or s2 <= 0.0:
        return W1Result(0.0, True)
    w2 = w2 * (s1 / s2)  # remove sub-tolerance mass mismatch before the equality rows
    if max(len(w1), len(w2)) <= max_exact:
        return W1Result(_w1_exact(t1, x1, w1, t2, x2, w2, metric), True)
    return W1Result(_w1_surrogate(t1, x1, w1, t2, x2, w2, metric), False)


def _w1_exact(t1, x1, w1, t2, x2, w2, metric) -> float:
    """Transport LP on the internal simplex (minimize total moved distance)."""
    from . import simplex  # local import keeps metrics importable standalone

    n1, n2 = len(w1), len(w2)
    cost = _ground_dist(t1[:, None], x1[:, None], t2[None, :], x2[None, :], metric).ravel()
    # variables x[a, b] row-major; rows: n1 supply equalities then n2 demands
    n_vars = n1 * n2
    indptr = np.arange(0, 2 * n_vars + 1, 2, dtype=np.int64)
    indices = np.empty(2 * n_vars, dtype=np.int64)
    a_idx = np.repeat(np.arange(n1), n2)
    b_idx = np.tile(np.arange(n2), n1)
    indices[0::2] = a_idx
    indices[1::2] = n1 + b_idx
    data = np.ones(2 * n_vars)
    b_vec = np.concatenate([w1, w2])
    res = simplex.solve(indptr, indices, data, b_vec, -cost)
    if res.status != "optimal":
        raise ModelError(f"transport LP failed: {res.status} {res.message}")
    return -res.objective


def _w1_surrogate(t1, x1, w1, t2, x2, w2, metric) -> float:
    """Greedy cumulative matching along the fixed node ordering (upper bound)."""
    o1 = np.lexsort((x1, t1))
    o2 = np.lexsort((x2, t2))
    t1, x1, w1 = t1[o1], x1[o1], w1[o1].copy()
    t2, x2, w2 = t2[o2], x2[o2], w2[o2].copy()
    ia = ib = 0
    cost = 0.0
    while ia < len(w1) and ib < len(w2):
        move = min(w1[ia], w2[ib])
        if move > 0.0:
            cost += move * float(_ground_dist(t1[ia], x1[ia], t2[ib], x2[ib], metric))
        w1[ia] -= move
        w2[ib] -= move
        if w1[ia] <= 1e-17:
            ia += 1
        if ib < len(w2) and w2[ib] <= 1e-17:
            ib += 1
    return cost


def weighted_tv(mu1, mu2, xs, p: float = 1.0) -> float:
    """Total variation weighted by (1 + |x|^p) on a common support."""
    a = np.asarray(mu1, dtype=float).ravel()
    b = np.asarray(mu2, dtype=float).ravel()
    x = np.broadcast_to(np.asarray(xs, dtype=float).ravel(), a.shape)
    if a.shape != b.shape:
        raise ModelError("weighted_tv requires a common support grid")
    return float(((1.0 + np.abs(x) ** p) * np.abs(a - b)).sum())


# ---------------------------------------------------------------------------
# Brute-force oracles (test-side ground truth; independent of the fast paths)
# ---------------------------------------------------------------------------


def w1_prime_dual_bruteforce(a: DiscreteSubprob, b: DiscreteSubprob, x0: float) -> float:
    """Maximize the dual over piecewise-linear functions with slopes +-1.

    Breakpoints are the atom positions plus x0; every slope pattern is
    enumerated explicitly.  Exponential in the support size; keep inputs
    small.
    """
    pos = np.concatenate([a.xs, b.xs])
    wts = np.concatenate([a.ws, -b.ws])
    bps = np.unique(np.concatenate([pos, [x0]]))
    if bps.size == 1:
        return abs(float(wts.sum()))
    lens = np.diff(bps)
    n_seg = lens.size
    i0 = int(np.searchsorted(bps, x0))
    # phi at breakpoint k for slope pattern s: sum of signed segment lengths
    # between x0 and the breakpoint.
    reach = np.zeros((n_seg, bps.size))
    for s in range(n_seg):
        if s >= i0:  # segment right of x0 raises later breakpoints
            reach[s, s + 1 :] = lens[s]
        else:  # segment left of x0: walking down from x0 subtracts
            reach[s, : s + 1] = -lens[s]
    d_at = np.zeros(bps.size)
    np.add.at(d_at, np.searchsorted(bps, pos), wts)
    patterns = np.array(list(itertools.product((-1.0, 1.0), repeat=n_seg)))
    objective = patterns @ (reach @ d_at)
    return float(objective.max()) + abs(float(wts.sum()))


@lru_cache(maxsize=8)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def w1_exit_bruteforce(atoms1, atoms2, quantum: float, metric: str = "taxicab") -> float:
    """Exhaustive transport-plan enumeration for quantized measures.

    Masses must be integer multiples of ``quantum``; each atom is expanded
    into unit quanta and all assignments between the two quantum lists are
    enumerated (an optimal transport plan between such measures is a
    permutation of quanta).  Factorial in the quantum count; keep it <= 8.
    """
    exp = []
    for ts, xs, ws in (atoms1, atoms2):
        ts, xs, ws = (np.asarray(v, dtype=float) for v in (ts, xs, ws))
        counts = np.rint(ws / quantum).astype(int)
        if not np.allclose(counts * quantum, ws, rtol=0.0, atol=1e-12):
            raise ModelError("oracle requires masses that are exact multiples of the quantum")
        exp.append((np.repeat(ts, counts), np.repeat(xs, counts)))
    (ta, xa), (tb, xb) = exp
    if len(ta) != len(tb):
        raise ModelError("quantized measures have different total mass")
    n = len(ta)
    if n == 0:
        return 0.0
    if n > 8:
        raise ModelError("quantum count too large for exhaustive enumeration")
    cost = _ground_dist(ta[:, None], xa[:, None], tb[None, :], xb[None, :], metric)
    perms = _all_permutations(n)
    totals = cost[np.arange(n)[None, :], perms].sum(axis=1)
    return float(totals.min()) * quantum
