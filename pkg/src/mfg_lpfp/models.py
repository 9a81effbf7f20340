"""Problem definitions: coefficients, rewards, initial law, built-in registry.

A ModelSpec carries plain callables.  Coefficients must accept numpy node
vectors for ``x`` (scalar-returning constants are broadcast).  The running
reward couples with the population only through the current occupation
slice, and the terminal reward only through a statistic of the exit
measure declared by ``mu_statistic``; this is what makes reward tables an
O(grid)-per-iteration precomputation.

Registry
--------
``os_example``        exit-timing game on the line: unit drift and noise,
                      reward for sitting above the surviving crowd's mean,
                      terminal bonus for outlasting the crowd's mean exit
                      time, Gaussian start (variance 4).
``control_example``   drift control on [-2, 2] with absorption: crowd
                      repulsion through an exponential kernel, pull toward
                      |x| = 1 while running, exit penalty |x|, quadratic
                      action cost, truncated Gaussian start (variance 0.1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelError
from .grid import GridSpec
from .measures import CONTROL, STOPPING, MeanField, StateSlice


@dataclass(frozen=True)
class ModelSpec:
    """Coefficients and rewards of one mean-field game.

    ``running_reward(t, x, slice)`` (stopping) or ``(t, x, slice, a)``
    (control), where ``slice`` is a StateSlice of the current flow marginal.
    ``terminal_reward(t, x, stat)`` receives the output of
    ``mu_statistic(grid, mu)``.  ``f_table``/``g_table`` are optional
    vectorized builders used by precompute_reward_tables when present; they
    must agree with the pointwise definitions.
    """

    name: str
    kind: str
    drift: Callable
    diffusion: Callable
    running_reward: Callable
    terminal_reward: Callable
    initial_density: Callable
    growth_p: float = 1.0
    mu_statistic: Callable = None
    f_table: Callable = None
    g_table: Callable = None
    action_bounds: tuple[float, float] | None = None
    default_x_bounds: Callable = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DiscreteInitialLaw:
    """Initial mass vector on interior nodes j = 1..n_s-1, summing to one."""

    masses: np.ndarray

    def full(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.n_s + 1)
        out[1:-1] = self.masses
        return out


def discretize_initial(model: ModelSpec, grid: GridSpec) -> DiscreteInitialLaw:
    """Cell-quadrature discretization of the initial law.

    mass[j] = density(x_j) * delta_x on interior nodes, renormalized to sum
    one.  Boundary nodes carry no initial mass (they are absorbing).
    """
    vals = np.asarray(model.initial_density(grid.x_interior), dtype=float)
    vals = np.broadcast_to(vals, grid.x_interior.shape)
    if not np.all(np.isfinite(vals)):
        raise ModelError("initial density is not finite on the grid")
    if vals.min(initial=0.0) < 0.0:
        raise ModelError("initial density is negative on the grid")
    weights = vals * grid.delta_x
    total = weights.sum()
    if total <= 0.0:
        raise ModelError("initial density vanishes on all interior nodes")
    return DiscreteInitialLaw(weights / total)


@dataclass(frozen=True)
class RewardTables:
    """Rewards evaluated on the grid against a frozen mean field.

    F has shape (n_t, n_s+1) for stopping and (n_t, n_s+1, n_actions) for
    control; G has shape (n_t+1, n_s+1).  Only interior columns of F enter
    objectives, and G enters wherever the exit measure has support.
    """

    F: np.ndarray
    G: np.ndarray


def precompute_reward_tables(model: ModelSpec, grid: GridSpec, mean_field: MeanField) -> RewardTables:
    """Evaluate F[i][j]([k]) and G[i][j] once for the given mean field."""
    mean_field.check_shapes(grid)
    if mean_field.kind != model.kind:
        raise ModelError(f"mean field kind {mean_field.kind!r} does not match model {model.kind!r}")
    m_x = mean_field.m_x
    xs = grid.x_nodes

    if model.f_table is not None:
        F = np.asarray(model.f_table(grid, m_x), dtype=float)
    else:
        if model.kind == STOPPING:
            F = np.empty((grid.n_t, grid.n_s + 1))
            for i in range(grid.n_t):
                sl = StateSlice(xs, m_x[i])
                for j in range(grid.n_s + 1):
                    F[i, j] = model.running_reward(grid.t(i), xs[j], sl)
        else:
            F = np.empty((grid.n_t, grid.n_s + 1, grid.n_actions))
            for i in range(grid.n_t):
                sl = StateSlice(xs, m_x[i])
                for j in range(grid.n_s + 1):
                    for k, a in enumerate(grid.actions):
                        F[i, j, k] = model.running_reward(grid.t(i), xs[j], sl, a)

    if model.g_table is not None:
        G = np.asarray(model.g_table(grid, mean_field.mu), dtype=float)
    else:
        stat = model.mu_statistic(grid, mean_field.mu) if model.mu_statistic else mean_field.mu
        G = np.empty((grid.n_t + 1, grid.n_s + 1))
        for i in range(grid.n_t + 1):
            for j in range(grid.n_s + 1):
                G[i, j] = model.terminal_reward(grid.t(i), xs[j], stat)

    f_shape = (grid.n_t, grid.n_s + 1) if model.kind == STOPPING else (grid.n_t, grid.n_s + 1, grid.n_actions)
    if F.shape != f_shape or G.shape != (grid.n_t + 1, grid.n_s + 1):
        raise ModelError("reward table shape mismatch")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise ModelError("reward tables contain non-finite entries")
    return RewardTables(F=F, G=G)


def discrete_reward(grid: GridSpec, tables: RewardTables, mean_field: MeanField) -> float:
    """Total reward of (mu, m) against frozen tables:
    delta_t * sum(F m) + sum(G mu)."""
    return float(grid.delta_t * np.vdot(tables.F, mean_field.m) + np.vdot(tables.G, mean_field.mu))


def _gaussian_density(mean: float, variance: float) -> Callable:
    inv = 1.0 / math.sqrt(2.0 * math.pi * variance)

    def density(x):
        x = np.asarray(x, dtype=float)
        return inv * np.exp(-((x - mean) ** 2) / (2.0 * variance))

    return density


def _truncated_gaussian_density(mean: float, variance: float, lo: float, hi: float) -> Callable:
    std = math.sqrt(variance)
    z = 0.5 * (math.erf((hi - mean) / (std * math.sqrt(2.0))) - math.erf((lo - mean) / (std * math.sqrt(2.0))))
    base = _gaussian_density(mean, variance)

    def density(x):
        x = np.asarray(x, dtype=float)
        return np.where((x > lo) & (x < hi), base(x) / z, 0.0)

    return density


def _os_example(drift_scale: float = 1.0, variance: float = 4.0) -> ModelSpec:
    def drift(t, x):
        return np.broadcast_to(float(drift_scale), np.shape(x))

    def diffusion(t, x):
        return np.broadcast_to(1.0, np.shape(x))

    def running_reward(t, x, sl: StateSlice):
        # integral of (x - y) against the slice = x * mass - first moment
        return x * sl.masses.sum() - float(sl.xs @ sl.masses)

    def mu_statistic(grid: GridSpec, mu: np.ndarray):
        return mu.sum(), float(grid.t_nodes @ mu.sum(axis=1))

    def terminal_reward(t, x, stat):
        # integral of (t - s) against the exit measure
        mass, time_moment = stat
        return t * mass - time_moment

    def f_table(grid: GridSpec, m_x: np.ndarray):
        mass = m_x.sum(axis=1)
        first_moment = m_x @ grid.x_nodes
        return grid.x_nodes[None, :] * mass[:, None] - first_moment[:, None]

    def g_table(grid: GridSpec, mu: np.ndarray):
        mass, time_moment = mu_statistic(grid, mu)
        col = grid.t_nodes * mass - time_moment
        return np.repeat(col[:, None], grid.n_s + 1, axis=1)

    std = math.sqrt(variance)

    def default_x_bounds(t_horizon: float):
        margin = 5.0 * std + abs(drift_scale) * t_horizon
        return (-margin, margin)

    return ModelSpec(
        name="os_example",
        kind=STOPPING,
        drift=drift,
        diffusion=diffusion,
        running_reward=running_reward,
        terminal_reward=terminal_reward,
        initial_density=_gaussian_density(0.0, variance),
        growth_p=1.0,
        mu_statistic=mu_statistic,
        f_table=f_table,
        g_table=g_table,
        default_x_bounds=default_x_bounds,
        params={"drift_scale": drift_scale, "variance": variance},
    )


def _control_example(kernel_weight: float = 10.0, variance: float = 0.1) -> ModelSpec:
    lo, hi = -2.0, 2.0

    def drift(t, x, a):
        return np.broadcast_to(float(a), np.shape(x))

    def diffusion(t, x):
        return np.broadcast_to(1.0, np.shape(x))

    def running_reward(t, x, sl: StateSlice, a):
        crowd = float(np.exp(-np.abs(x - sl.xs)) @ sl.masses)
        return -kernel_weight * crowd - 2.0 * abs(abs(x) - 1.0) - a * a

    def terminal_reward(t, x, stat):
        return -abs(x)

    def f_table(grid: GridSpec, m_x: np.ndarray):
        xs = grid.x_nodes
        kernel = np.exp(-np.abs(xs[:, None] - xs[None, :]))
        crowd = m_x @ kernel  # (n_t, n_s+1)
        spatial = -kernel_weight * crowd - 2.0 * np.abs(np.abs(xs) - 1.0)[None, :]
        acts = np.asarray(grid.actions)
        return spatial[:, :, None] - (acts**2)[None, None, :]

    def g_table(grid: GridSpec, mu: np.ndarray):
        return np.repeat(-np.abs(grid.x_nodes)[None, :], grid.n_t + 1, axis=0)

    return ModelSpec(
        name="control_example",
        kind=CONTROL,
        drift=drift,
        diffusion=diffusion,
        running_reward=running_reward,
        terminal_reward=terminal_reward,
        initial_density=_truncated_gaussian_density(0.0, variance, lo, hi),
        growth_p=1.0,
        mu_statistic=None,
        f_table=f_table,
        g_table=g_table,
        action_bounds=(-1.0, 1.0),
        default_x_bounds=lambda t_horizon: (lo, hi),
        params={"kernel_weight": kernel_weight, "variance": variance},
    )


_REGISTRY = {
    "os_example": _os_example,
    "control_example": _control_example,
}


def builtin_model(name: str, **params) -> ModelSpec:
    """Instantiate a registry model, optionally overriding numeric parameters."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; available: {sorted(_REGISTRY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {name!r}: {exc}") from None


def builtin_names() -> list[str]:
    return sorted(_REGISTRY)
