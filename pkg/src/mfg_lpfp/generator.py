"""Upwind finite-difference generator and its Markov-chain transition law.

The four-term discrete generator (forward time difference, upwinded first
differences, central second difference) is algebraically the same object
as a three-point Markov chain: for interior nodes,

    p_up   = (sigma^2/2) dt/dx^2 + max(b,0) dt/dx
    p_down = (sigma^2/2) dt/dx^2 + max(-b,0) dt/dx
    p_stay = 1 - sigma^2 dt/dx^2 - |b| dt/dx

and  L u(t_i, x_j) = (E[u(t_{i+1}, Y_{i+1}) | Y_i = x_j] - u(t_i, x_j))/dt.
All three masses are probabilities exactly when the CFL check passes.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import GridError, ModelError
from .grid import GridSpec, _coef_grid
from .measures import CONTROL


class TransitionTriple(NamedTuple):
    p_down: float
    p_stay: float
    p_up: float


def _check_interior(grid: GridSpec, i: int, j: int) -> None:
    if not 0 <= i < grid.n_t:
        raise GridError(f"time index {i} out of range [0, {grid.n_t})")
    if not 1 <= j <= grid.n_s - 1:
        raise GridError(f"state index {j} is not interior (boundary nodes are absorbing)")


def _action_value(grid: GridSpec, model, k):
    controlled = model.kind == CONTROL
    if controlled:
        if k is None:
            raise ModelError("controlled model requires an action index")
        if not 0 <= k < grid.n_actions:
            raise GridError(f"action index {k} out of range")
        return grid.actions[k]
    if k is not None:
        raise ModelError("stopping model takes no action index")
    return None


def transition(grid: GridSpec, model, i: int, j: int, k: int | None = None) -> TransitionTriple:
    """Transition probabilities out of interior node (t_i, x_j) [under a_k]."""
    _check_interior(grid, i, j)
    a = _action_value(grid, model, k)
    t, x = grid.t(i), grid.x(j)
    b = float(model.drift(t, x, a)) if a is not None else float(model.drift(t, x))
    sig2 = float(model.diffusion(t, x)) ** 2
    lam = grid.delta_t / grid.delta_x**2
    nu = grid.delta_t / grid.delta_x
    p_up = 0.5 * sig2 * lam + max(b, 0.0) * nu
    p_down = 0.5 * sig2 * lam + max(-b, 0.0) * nu
    p_stay = 1.0 - sig2 * lam - abs(b) * nu
    return TransitionTriple(p_down, p_stay, p_up)


def transition_rows(grid: GridSpec, model, i: int, k: int | None = None):
    """Vectorized transition triples over all interior nodes at time t_i.

    Returns (p_down, p_stay, p_up) arrays of length n_s - 1.  This is the
    hot path shared by LP assembly, backward induction and forward pushes.
    """
    if not 0 <= i < grid.n_t:
        raise GridError(f"time index {i} out of range [0, {grid.n_t})")
    a = _action_value(grid, model, k)
    t = grid.t(i)
    xs = grid.x_interior
    b = _coef_grid(model.drift, t, xs, a) if a is not None else _coef_grid(model.drift, t, xs)
    sig2 = _coef_grid(model.diffusion, t, xs) ** 2
    lam = grid.delta_t / grid.delta_x**2
    nu = grid.delta_t / grid.delta_x
    p_up = 0.5 * sig2 * lam + np.maximum(b, 0.0) * nu
    p_down = 0.5 * sig2 * lam + np.maximum(-b, 0.0) * nu
    p_stay = 1.0 - sig2 * lam - np.abs(b) * nu
    return p_down, p_stay, p_up


def apply_discrete_generator(grid: GridSpec, model, u: np.ndarray, i: int, j: int, k: int | None = None) -> float:
    """Evaluate the four-term upwind generator on node values u[(i, j)].

    ``u`` must be indexed over the full grid, shape (n_t+1, n_s+1); the
    value uses slices i and i+1 only.
    """
    _check_interior(grid, i, j)
    a = _action_value(grid, model, k)
    if u.shape != (grid.n_t + 1, grid.n_s + 1):
        raise GridError(f"u has shape {u.shape}, expected {(grid.n_t + 1, grid.n_s + 1)}")
    t, x = grid.t(i), grid.x(j)
    b = float(model.drift(t, x, a)) if a is not None else float(model.drift(t, x))
    sig2 = float(model.diffusion(t, x)) ** 2
    dt, dx = grid.delta_t, grid.delta_x
    du_t = (u[i + 1, j] - u[i, j]) / dt
    du_up = max(b, 0.0) * (u[i + 1, j + 1] - u[i + 1, j]) / dx
    du_down = min(b, 0.0) * (u[i + 1, j] - u[i + 1, j - 1]) / dx
    du_xx = 0.5 * sig2 * (u[i + 1, j + 1] + u[i + 1, j - 1] - 2.0 * u[i + 1, j]) / dx**2
    return du_t + du_up + du_down + du_xx
