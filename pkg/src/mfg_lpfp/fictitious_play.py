"""Fictitious-play driver: best respond, average, track diagnostics.

Iteration ell = 0, 1, ..., N-1 best-responds to the running average pair
and re-averages with weights ell/(ell+1) and 1/(ell+1), so the initial
guess only influences the first best response.  Each iteration records the
exploitability of the current average (reward gap of the best response
against it, with reward tables frozen at the current average) and the
increments of the diagnostic metrics between successive averages.

The best response comes either from backward induction (``method="dp"``,
the fast path) or from the assembled LP and the internal simplex
(``method="lp"``, the formulation-validation path).  Both produce the same
value up to solver tolerance; the measures can differ only on ties.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import dp, lp, metrics
from .errors import CflError, ModelError, SolverError
from .grid import GridSpec, validate_cfl
from .measures import CONTROL, STOPPING, MeanField
from .models import ModelSpec, discrete_reward, discretize_initial, precompute_reward_tables


@dataclass
class IterationRecord:
    """One fictitious-play step: exploitability, metric increments, timing.

    ``n`` is 1-based; row n holds the exploitability of the average after
    n-1 steps (measured by the step-n best response) and the distances
    between the averages after n-1 and n steps.
    """

    n: int
    eps_raw: float
    eps_clamped: float
    dm_step: float
    w1_step: float
    w1_exact: bool
    wtv_step: float
    seconds: float


@dataclass
class RunTrace:
    kind: str
    method: str
    rows: list[IterationRecord] = field(default_factory=list)
    final: MeanField | None = None

    @property
    def eps_raw(self) -> np.ndarray:
        return np.array([r.eps_raw for r in self.rows])

    @property
    def eps_clamped(self) -> np.ndarray:
        return np.array([r.eps_clamped for r in self.rows])


def initial_guess(grid: GridSpec, model: ModelSpec) -> MeanField:
    """A feasible starting pair.

    Stopping: the never-stop policy (all mass rides to the horizon, exits
    only through absorption or the terminal slice).  Control: the constant
    middle action.  Both satisfy every flow-balance row by construction.
    """
    chain = dp.chain_tables(grid, model)
    m0 = discretize_initial(model, grid)
    if model.kind == STOPPING:
        never = np.zeros((grid.n_t, grid.n_s + 1), dtype=bool)
        never[:, 0] = True
        never[:, -1] = True
        return dp.forward_stopping(grid, chain, m0, never)
    if grid.n_actions == 0:
        raise ModelError("control model requires an action grid")
    mid = np.full((grid.n_t, grid.n_s + 1), grid.n_actions // 2, dtype=np.int64)
    return dp.forward_control(grid, chain, m0, mid)


def exploitability(grid: GridSpec, model: ModelSpec, mean_field: MeanField, response: MeanField) -> float:
    """Reward gap of ``response`` over ``mean_field`` at frozen tables.

    Nonnegative (up to solver noise) whenever ``response`` is a best
    response to ``mean_field``; otherwise a lower bound on the true gap.
    """
    mean_field.check_shapes(grid)
    response.check_shapes(grid)
    tables = precompute_reward_tables(model, grid, mean_field)
    return discrete_reward(grid, tables, response) - discrete_reward(grid, tables, mean_field)


def extract_markov_control(grid: GridSpec, mean_field: MeanField) -> np.ndarray:
    """Mean action per node: sum_k a_k m[i,j,k] / sum_k m[i,j,k].

    Nodes carrying no mass are undefined and reported as NaN.
    """
    if mean_field.kind != CONTROL:
        raise ModelError("Markov control extraction needs a control-absorption mean field")
    mean_field.check_shapes(grid)
    acts = np.asarray(grid.actions)
    weighted = mean_field.m @ acts
    total = mean_field.m.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha = np.where(total > 0.0, weighted / np.where(total > 0.0, total, 1.0), np.nan)
    return alpha


def _best_response_lp(grid, model, cur, tables, lp_tol, lp_opt_tol):
    if model.kind == STOPPING:
        program = lp.build_lp_stopping(grid, model, cur, tables, check_cfl=False)
    else:
        program = lp.build_lp_control(grid, model, cur, tables, check_cfl=False)
    sol = lp.solve_lp(program, tol=lp_tol, opt_tol=lp_opt_tol)
    if sol.status != "optimal":
        raise SolverError(f"LP best response failed: {sol.status} {sol.message}".strip())
    return lp.solution_mean_field(program, grid, sol.values, model.kind)


def lpfp_run(
    grid: GridSpec,
    model: ModelSpec,
    n_iters: int,
    method: str = "dp",
    guess: MeanField | None = None,
    *,
    early_stop_eps: float | None = None,
    cfl_override: bool = False,
    callback=None,
    lp_tol: float = 1e-9,
    lp_opt_tol: float = 1e-10,
    w1_max_exact: int = 64,
) -> RunTrace:
    """Run fictitious play for ``n_iters`` best-response/average steps.

    ``callback(record, average, response)`` is invoked after every
    iteration (the CLI streams progress through it).  Solver failures abort
    with SolverError carrying the partial trace.  The driver refuses to run
    on a CFL-violating grid unless ``cfl_override`` is set.

    The per-iteration exit-measure distance uses exact transport only up
    to ``w1_max_exact`` reduced atoms per side (surrogate above, flagged in
    the trace); diagnostics only report, they never gate the run.
    """
    if n_iters < 1:
        raise ModelError("n_iters must be >= 1")
    if method not in ("lp", "dp"):
        raise ModelError(f"unknown method {method!r}")
    report = validate_cfl(grid, model)
    if not report.passed and not cfl_override:
        raise CflError(str(report))

    chain = dp.chain_tables(grid, model)
    cur = guess.copy() if guess is not None else initial_guess(grid, model)
    cur.check_shapes(grid)
    p = model.growth_p
    x_flat = np.tile(grid.x_nodes, grid.n_t + 1)
    trace = RunTrace(kind=model.kind, method=method)

    for ell in range(n_iters):
        tic = time.perf_counter()
        tables = precompute_reward_tables(model, grid, cur)
        if method == "dp":
            resp = dp.best_response(grid, model, cur, tables, chain, check_cfl=False).measures
        else:
            try:
                resp = _best_response_lp(grid, model, cur, tables, lp_tol, lp_opt_tol)
            except SolverError as exc:
                exc.trace = trace
                trace.final = cur
                raise
        eps_raw = discrete_reward(grid, tables, resp) - discrete_reward(grid, tables, cur)

        w_old = ell / (ell + 1.0)
        w_new = 1.0 / (ell + 1.0)
        new = MeanField(cur.kind, w_old * cur.mu + w_new * resp.mu, w_old * cur.m + w_new * resp.m)

        dm_step = metrics.d_m_metric(cur.m_x, new.m_x, grid)
        try:
            w1_step = metrics.w1_exit(cur.mu, new.mu, grid, max_exact=w1_max_exact)
        except ModelError:
            # only reachable on cfl_override runs, where mass is not conserved
            w1_step = metrics.W1Result(float("nan"), False)
        wtv_step = metrics.weighted_tv(cur.mu, new.mu, x_flat, p)
        record = IterationRecord(
            n=ell + 1,
            eps_raw=float(eps_raw),
            eps_clamped=max(float(eps_raw), 0.0),
            dm_step=float(dm_step),
            w1_step=float(w1_step.value),
            w1_exact=bool(w1_step.exact),
            wtv_step=float(wtv_step),
            seconds=time.perf_counter() - tic,
        )
        trace.rows.append(record)
        if callback is not None:
            callback(record, new, resp)
        cur = new
        if early_stop_eps is not None and eps_raw <= early_stop_eps:
            break

    trace.final = cur
    return trace


def loglog_slope(trace: RunTrace, n_lo: int = 10, n_hi: int | None = None) -> float:
    """Least-squares slope of log10(eps) vs log10(N) over rows n_lo..n_hi."""
    rows = [r for r in trace.rows if r.n >= n_lo and (n_hi is None or r.n <= n_hi) and r.eps_clamped > 0.0]
    if len(rows) < 2:
        return float("nan")
    xs = np.log10([r.n for r in rows])
    ys = np.log10([r.eps_clamped for r in rows])
    return float(np.polyfit(xs, ys, 1)[0])
