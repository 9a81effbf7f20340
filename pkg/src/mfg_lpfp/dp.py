"""Exact best response by backward induction on the approximating chain.

The discretized constraint set is exactly the set of (exit, occupation)
pairs generated by the three-point Markov chain with absorption at the
side nodes, so the best response to a frozen mean field can be computed
without the LP: a backward value sweep gives the optimal policy, a forward
push of the initial law gives the maximizing measures.  The resulting
value equals the LP optimum and the measures satisfy every LP row, which
is the package's central cross-check (and the fast path for fictitious
play).

Tie-breaks are deterministic: the stopping variant continues on exact
ties, the control variant takes the smallest maximizing action index.
The value is unaffected; the chosen measures can differ from the LP's
only when the maximizer is non-unique.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CflError, ModelError
from .generator import transition_rows
from .grid import GridSpec, validate_cfl
from .measures import CONTROL, STOPPING, MeanField
from .models import DiscreteInitialLaw, ModelSpec, RewardTables, discretize_initial, precompute_reward_tables


@dataclass(frozen=True)
class ChainTables:
    """Transition triples for all interior nodes (mean-field independent).

    Arrays have shape (n_t, n_s-1) for stopping problems and
    (n_t, n_s-1, n_actions) for controlled ones.
    """

    p_down: np.ndarray
    p_stay: np.ndarray
    p_up: np.ndarray


def chain_tables(grid: GridSpec, model: ModelSpec) -> ChainTables:
    if model.kind == STOPPING:
        shape = (grid.n_t, grid.n_s - 1)
        pd, ps, pu = (np.empty(shape) for _ in range(3))
        for i in range(grid.n_t):
            pd[i], ps[i], pu[i] = transition_rows(grid, model, i)
    else:
        shape = (grid.n_t, grid.n_s - 1, grid.n_actions)
        pd, ps, pu = (np.empty(shape) for _ in range(3))
        for i in range(grid.n_t):
            for k in range(grid.n_actions):
                pd[i, :, k], ps[i, :, k], pu[i, :, k] = transition_rows(grid, model, i, k)
    return ChainTables(pd, ps, pu)


@dataclass
class BestResponse:
    """Optimal value, per-node decision, and the measures the policy induces.

    ``policy``: stopping -- boolean stop mask of shape (n_t, n_s+1) (side
    columns always stop, they are absorbing); control -- action indices of
    shape (n_t, n_s+1) (side columns unused).  ``values`` is the full
    (n_t+1, n_s+1) value-function table from the backward sweep.
    """

    value: float
    policy: np.ndarray
    measures: MeanField
    values: np.ndarray = None


def _require_cfl(grid, model):
    report = validate_cfl(grid, model)
    if not report.passed:
        raise CflError(str(report))


def forward_stopping(grid: GridSpec, chain: ChainTables, m0: DiscreteInitialLaw, stop: np.ndarray) -> MeanField:
    """Push the initial law through a stop/continue policy."""
    mf = MeanField.zeros(STOPPING, grid)
    w = m0.full(grid)
    for i in range(grid.n_t):
        s = stop[i]
        mf.mu[i] = np.where(s, w, 0.0)
        cont = np.where(s, 0.0, w)
        mf.m[i] = cont
        inter = cont[1:-1]
        w = np.zeros(grid.n_s + 1)
        w[:-2] += chain.p_down[i] * inter
        w[1:-1] += chain.p_stay[i] * inter
        w[2:] += chain.p_up[i] * inter
    mf.mu[grid.n_t] = w
    return mf


def forward_control(grid: GridSpec, chain: ChainTables, m0: DiscreteInitialLaw, action: np.ndarray) -> MeanField:
    """Push the initial law through a per-node action policy (absorbing sides)."""
    mf = MeanField.zeros(CONTROL, grid)
    w = m0.full(grid)
    js = np.arange(1, grid.n_s)
    for i in range(grid.n_t):
        mf.mu[i, 0] = w[0]
        mf.mu[i, -1] = w[-1]
        inter = w[1:-1]
        k_row = action[i, 1:-1]
        mf.m[i, js, k_row] = inter
        w = np.zeros(grid.n_s + 1)
        for k in range(grid.n_actions):
            mask = k_row == k
            if not mask.any():
                continue
            cont = np.where(mask, inter, 0.0)
            w[:-2] += chain.p_down[i, :, k] * cont
            w[1:-1] += chain.p_stay[i, :, k] * cont
            w[2:] += chain.p_up[i, :, k] * cont
    mf.mu[grid.n_t] = w
    return mf


def best_response_stopping(
    grid: GridSpec,
    model: ModelSpec,
    mean_field: MeanField,
    tables: RewardTables | None = None,
    chain: ChainTables | None = None,
    check_cfl: bool = True,
) -> BestResponse:
    if model.kind != STOPPING:
        raise ModelError("best_response_stopping requires a stopping model")
    if check_cfl:
        _require_cfl(grid, model)
    if tables is None:
        tables = precompute_reward_tables(model, grid, mean_field)
    if chain is None:
        chain = chain_tables(grid, model)
    F, G = tables.F, tables.G
    n_t, n_s = grid.n_t, grid.n_s

    V = np.empty((n_t + 1, n_s + 1))
    V[n_t] = G[n_t]
    stop = np.ones((n_t, n_s + 1), dtype=bool)  # sides forced; interior decided below
    for i in range(n_t - 1, -1, -1):
        cont = (
            grid.delta_t * F[i, 1:-1]
            + chain.p_down[i] * V[i + 1, :-2]
            + chain.p_stay[i] * V[i + 1, 1:-1]
            + chain.p_up[i] * V[i + 1, 2:]
        )
        stop_now = G[i, 1:-1] > cont  # continue on exact ties
        V[i, 1:-1] = np.where(stop_now, G[i, 1:-1], cont)
        V[i, 0] = G[i, 0]
        V[i, -1] = G[i, -1]
        stop[i, 1:-1] = stop_now

    m0 = discretize_initial(model, grid)
    measures = forward_stopping(grid, chain, m0, stop)
    value = float(V[0, 1:-1] @ m0.masses)
    return BestResponse(value=value, policy=stop, measures=measures, values=V)


def best_response_control(
    grid: GridSpec,
    model: ModelSpec,
    mean_field: MeanField,
    tables: RewardTables | None = None,
    chain: ChainTables | None = None,
    check_cfl: bool = True,
) -> BestResponse:
    if model.kind != CONTROL:
        raise ModelError("best_response_control requires a control-absorption model")
    if grid.n_actions == 0:
        raise ModelError("control best response requires an action grid")
    if check_cfl:
        _require_cfl(grid, model)
    if tables is None:
        tables = precompute_reward_tables(model, grid, mean_field)
    if chain is None:
        chain = chain_tables(grid, model)
    F, G = tables.F, tables.G
    n_t, n_s = grid.n_t, grid.n_s

    V = np.empty((n_t + 1, n_s + 1))
    V[n_t] = G[n_t]
    action = np.zeros((n_t, n_s + 1), dtype=np.int64)
    for i in range(n_t - 1, -1, -1):
        cont = (
            grid.delta_t * F[i, 1:-1, :]
            + chain.p_down[i] * V[i + 1, :-2, None]
            + chain.p_stay[i] * V[i + 1, 1:-1, None]
            + chain.p_up[i] * V[i + 1, 2:, None]
        )
        best_k = np.argmax(cont, axis=1)  # first maximum = smallest action index
        V[i, 1:-1] = cont[np.arange(n_s - 1), best_k]
        V[i, 0] = G[i, 0]
        V[i, -1] = G[i, -1]
        action[i, 1:-1] = best_k

    m0 = discretize_initial(model, grid)
    measures = forward_control(grid, chain, m0, action)
    value = float(V[0, 1:-1] @ m0.masses)
    return BestResponse(value=value, policy=action, measures=measures, values=V)


def best_response(grid, model, mean_field, tables=None, chain=None, check_cfl=True) -> BestResponse:
    if model.kind == STOPPING:
        return best_response_stopping(grid, model, mean_field, tables, chain, check_cfl)
    return best_response_control(grid, model, mean_field, tables, chain, check_cfl)


def random_policy_mean_field(grid: GridSpec, model: ModelSpec, rng: np.random.Generator) -> MeanField:
    """Feasible mean field from a uniformly random Markov policy.

    Every pair produced this way satisfies the LP flow-balance rows
    exactly, which makes it the right generator for randomized
    equivalence and property tests.
    """
    chain = chain_tables(grid, model)
    m0 = discretize_initial(model, grid)
    if model.kind == STOPPING:
        stop = np.ones((grid.n_t, grid.n_s + 1), dtype=bool)
        stop[:, 1:-1] = rng.random((grid.n_t, grid.n_s - 1)) < 0.5
        return forward_stopping(grid, chain, m0, stop)
    action = np.zeros((grid.n_t, grid.n_s + 1), dtype=np.int64)
    action[:, 1:-1] = rng.integers(0, grid.n_actions, size=(grid.n_t, grid.n_s - 1))
    return forward_control(grid, chain, m0, action)


def flow_residuals(grid: GridSpec, model: ModelSpec, mean_field: MeanField) -> np.ndarray:
    """Evaluate every LP flow-balance row directly on (mu, m).

    Returns the (n_t+1, n_s+1) array of row residuals without assembling
    the LP; zero (to accumulation error) iff the pair is feasible.
    """
    mean_field.check_shapes(grid)
    chain = chain_tables(grid, model)
    m0 = discretize_initial(model, grid)
    res = np.array(mean_field.mu, dtype=float, copy=True)
    controlled = model.kind == CONTROL
    for i in range(grid.n_t):
        if controlled:
            res[i, 1:-1] += mean_field.m[i, 1:-1, :].sum(axis=1)
        else:
            res[i, 1:-1] += mean_field.m[i, 1:-1]
        # incoming mass pushed to slice i+1
        if controlled:
            for k in range(grid.n_actions):
                inter = mean_field.m[i, 1:-1, k]
                res[i + 1, :-2] -= chain.p_down[i, :, k] * inter
                res[i + 1, 1:-1] -= chain.p_stay[i, :, k] * inter
                res[i + 1, 2:] -= chain.p_up[i, :, k] * inter
        else:
            inter = mean_field.m[i, 1:-1]
            res[i + 1, :-2] -= chain.p_down[i] * inter
            res[i + 1, 1:-1] -= chain.p_stay[i] * inter
            res[i + 1, 2:] -= chain.p_up[i] * inter
    res[0, 1:-1] -= m0.masses
    return res
