"""Time/state/action discretization grids and the chain stability bound.

The solver works on a uniform time grid t_i = i*delta_t (i = 0..n_t), a
uniform state grid x_j = x_min + j*delta_x (j = 0..n_s, boundary nodes
absorbing) and, for the control variant, a finite action grid a_0 < ... <
a_{n_a}.  Everything downstream (transition probabilities, LP assembly,
backward induction) indexes into a single immutable GridSpec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError


@dataclass(frozen=True)
class GridSpec:
    """Immutable discretization grid.

    Interior states are j in {1, ..., n_s - 1}; nodes j = 0 and j = n_s are
    absorbing.  ``actions`` is empty for a pure stopping problem.
    """

    t_horizon: float
    n_t: int
    x_min: float
    x_max: float
    n_s: int
    actions: tuple[float, ...] = ()
    delta_t: float = field(init=False)
    delta_x: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "delta_t", self.t_horizon / self.n_t)
        object.__setattr__(self, "delta_x", (self.x_max - self.x_min) / self.n_s)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def t_nodes(self) -> np.ndarray:
        return self.t_horizon * np.arange(self.n_t + 1) / self.n_t

    @property
    def x_nodes(self) -> np.ndarray:
        # x_{n_s} must equal x_max exactly, so interpolate rather than accumulate.
        j = np.arange(self.n_s + 1)
        return self.x_min + j * (self.x_max - self.x_min) / self.n_s

    @property
    def x_interior(self) -> np.ndarray:
        return self.x_nodes[1:-1]

    def t(self, i: int) -> float:
        return self.t_horizon * i / self.n_t

    def x(self, j: int) -> float:
        return self.x_min + j * (self.x_max - self.x_min) / self.n_s

    def to_dict(self) -> dict:
        return {
            "t_horizon": self.t_horizon,
            "n_t": self.n_t,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "n_s": self.n_s,
            "actions": list(self.actions),
        }


def build_grid(
    t_horizon: float,
    n_t: int,
    x_min: float,
    x_max: float,
    n_s: int,
    actions=(),
) -> GridSpec:
    """Validate parameters and construct a GridSpec.

    Raises GridError on degenerate bounds, zero counts or a non
    strictly-increasing action list.
    """
    if not (isinstance(n_t, (int, np.integer)) and n_t >= 1):
        raise GridError(f"n_t must be an integer >= 1, got {n_t!r}")
    if not (isinstance(n_s, (int, np.integer)) and n_s >= 2):
        raise GridError(f"n_s must be an integer >= 2, got {n_s!r}")
    if not (t_horizon > 0.0 and math.isfinite(t_horizon)):
        raise GridError(f"t_horizon must be positive and finite, got {t_horizon!r}")
    if not (x_min < x_max and math.isfinite(x_min) and math.isfinite(x_max)):
        raise GridError(f"state bounds are degenerate: [{x_min!r}, {x_max!r}]")
    acts = tuple(float(a) for a in actions)
    if any(not math.isfinite(a) for a in acts):
        raise GridError("actions must be finite")
    if any(a1 <= a0 for a0, a1 in zip(acts, acts[1:])):
        raise GridError(f"actions must be strictly increasing, got {list(acts)}")
    grid = GridSpec(float(t_horizon), int(n_t), float(x_min), float(x_max), int(n_s), acts)
    # Guard against catastrophic cancellation in the derived steps.
    if not math.isclose(grid.delta_t * grid.n_t, grid.t_horizon, rel_tol=4e-16, abs_tol=0.0):
        raise GridError("delta_t * n_t does not recover t_horizon")
    return grid


def grid_from_dict(d: dict) -> GridSpec:
    return build_grid(d["t_horizon"], d["n_t"], d["x_min"], d["x_max"], d["n_s"], d.get("actions", ()))


@dataclass(frozen=True)
class CflReport:
    """Result of the stability check Delta <= delta^2/(sigma^2 + delta*|b|)."""

    passed: bool
    delta_t: float
    max_dt: float
    binding: tuple | None  # (i, j) or (i, j, k) attaining the bound; None if unconstrained

    def __str__(self):
        where = "" if self.binding is None else f" (binding node {self.binding})"
        verdict = "pass" if self.passed else "FAIL"
        return f"CFL {verdict}: delta_t={self.delta_t:.6g} vs bound {self.max_dt:.6g}{where}"


def _coef_grid(fn, t: float, xs: np.ndarray, a=None) -> np.ndarray:
    """Evaluate a coefficient function on a node vector, broadcasting scalars."""
    vals = fn(t, xs) if a is None else fn(t, xs, a)
    return np.broadcast_to(np.asarray(vals, dtype=float), xs.shape)


def cfl_max_dt(grid: GridSpec, model) -> float:
    """Largest stable time step: min over nodes of delta^2/(sigma^2 + delta*|b|).

    Returns +inf when both coefficients vanish on the whole grid (the chain
    never moves, so any step is valid).
    """
    _, binding_dt = _cfl_scan(grid, model)
    return binding_dt


def validate_cfl(grid: GridSpec, model) -> CflReport:
    """Check grid.delta_t against the stability bound (non-strict pass)."""
    binding, max_dt = _cfl_scan(grid, model)
    return CflReport(passed=grid.delta_t <= max_dt, delta_t=grid.delta_t, max_dt=max_dt, binding=binding)


def _cfl_scan(grid: GridSpec, model):
    xs = grid.x_interior
    controlled = model.kind == "control-absorption"
    best = math.inf
    binding = None
    for i in range(grid.n_t):
        t = grid.t(i)
        sig = _coef_grid(model.diffusion, t, xs)
        if sig.min(initial=0.0) < 0.0:
            raise GridError(f"diffusion is negative at t={t!r}; sigma must be >= 0 on the grid")
        sig2 = sig**2
        action_iter = enumerate(grid.actions) if controlled else [(None, None)]
        for k, a in action_iter:
            absb = np.abs(_coef_grid(model.drift, t, xs, a) if controlled else _coef_grid(model.drift, t, xs))
            denom = sig2 + grid.delta_x * absb
            with np.errstate(divide="ignore"):
                bounds = np.where(denom > 0.0, grid.delta_x**2 / np.where(denom > 0.0, denom, 1.0), math.inf)
            j_rel = int(np.argmin(bounds))
            if bounds[j_rel] < best:
                best = float(bounds[j_rel])
                binding = (i, j_rel + 1) if k is None else (i, j_rel + 1, k)
    return binding, best
