"""Discrete mean-field pairs: exit measure plus occupation flow.

A MeanField bundles the two measures fictitious play averages:

* ``mu``   -- exit measure on the full time-state grid, shape
  (n_t+1, n_s+1).  In the control-with-absorption variant its support is
  the parabolic boundary (side nodes for i < n_t plus the whole terminal
  slice); entries elsewhere are structural zeros.
* ``m``    -- occupation flow of the players still in the game.  Stopping:
  shape (n_t, n_s+1) with zero boundary columns.  Control: shape
  (n_t, n_s+1, n_actions), again zero at the boundary columns.

Total mu mass is 1; each time slice of m carries at most unit mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ModelError
from .grid import GridSpec

STOPPING = "stopping"
CONTROL = "control-absorption"


class StateSlice(NamedTuple):
    """One time slice of the occupation flow, as (node positions, masses)."""

    xs: np.ndarray
    masses: np.ndarray


@dataclass
class MeanField:
    kind: str
    mu: np.ndarray
    m: np.ndarray

    @property
    def m_x(self) -> np.ndarray:
        """State marginal of the flow (collapses actions in the control case)."""
        return self.m if self.kind == STOPPING else self.m.sum(axis=2)

    def copy(self) -> "MeanField":
        return MeanField(self.kind, self.mu.copy(), self.m.copy())

    @staticmethod
    def zeros(kind: str, grid: GridSpec) -> "MeanField":
        mu = np.zeros((grid.n_t + 1, grid.n_s + 1))
        if kind == STOPPING:
            m = np.zeros((grid.n_t, grid.n_s + 1))
        elif kind == CONTROL:
            if grid.n_actions == 0:
                raise ModelError("control-absorption mean field needs an action grid")
            m = np.zeros((grid.n_t, grid.n_s + 1, grid.n_actions))
        else:
            raise ModelError(f"unknown kind {kind!r}")
        return MeanField(kind, mu, m)

    def check_shapes(self, grid: GridSpec) -> None:
        if self.mu.shape != (grid.n_t + 1, grid.n_s + 1):
            raise ModelError(f"mu shape {self.mu.shape} does not match grid")
        expect = (grid.n_t, grid.n_s + 1) if self.kind == STOPPING else (grid.n_t, grid.n_s + 1, grid.n_actions)
        if self.m.shape != expect:
            raise ModelError(f"m shape {self.m.shape} does not match grid (expected {expect})")

    def check(self, grid: GridSpec, tol: float = 1e-9) -> None:
        """Raise unless (mu, m) is a plausible averaged pair for this grid."""
        self.check_shapes(grid)
        if self.mu.min(initial=0.0) < -tol or self.m.min(initial=0.0) < -tol:
            raise ModelError("mean field has negative mass")
        if abs(self.mu.sum() - 1.0) > tol:
            raise ModelError(f"exit measure mass {self.mu.sum()!r} != 1")
        slice_mass = self.m_x.sum(axis=1)
        if slice_mass.size and slice_mass.max() > 1.0 + tol:
            raise ModelError("occupation slice carries more than unit mass")

