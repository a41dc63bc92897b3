"""Uniform 1-D spatial grids, grid functions, and time-indexed trajectories.

The spatial domain is always [0, 1], discretized with ``n_interior`` interior
nodes plus both boundary nodes, so fields have ``n_interior + 2`` samples and
the mesh width is ``h = 1 / (n_interior + 1)`` exactly.  All types here are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidFieldError, InvalidParameterError


@dataclass(frozen=True)
class Grid1D:
    """Uniform discretization of the unit interval with a fixed time step.

    Parameters
    ----------
    n_interior : int
        Number of interior nodes; at least 3.
    dt : float
        Time step, strictly positive.
    t_final : float
        Simulation horizon; at least one step long.
    """

    n_interior: int
    dt: float
    t_final: float

    def __post_init__(self) -> None:
        if self.n_interior < 3:
            raise InvalidParameterError(f"n_interior must be >= 3, got {self.n_interior}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not (self.t_final >= self.dt and math.isfinite(self.t_final)):
            raise InvalidParameterError(
                f"t_final must be >= dt, got t_final={self.t_final}, dt={self.dt}"
            )

    @property
    def h(self) -> float:
        """Mesh width, exactly 1/(n_interior + 1) in working precision."""
        return 1.0 / (self.n_interior + 1)

    @property
    def n_nodes(self) -> int:
        """Total node count including both boundary nodes."""
        return self.n_interior + 2

    @property
    def n_steps(self) -> int:
        """Number of time steps needed to reach (or just pass) t_final."""
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @cached_property
    def nodes(self) -> np.ndarray:
        """All node coordinates 0 = z_0 < z_1 < ... < z_{n+1} = 1."""
        z = np.linspace(0.0, 1.0, self.n_nodes)
        z.setflags(write=False)
        return z

    def times(self) -> np.ndarray:
        """Recorded time levels 0, dt, 2 dt, ..., n_steps * dt."""
        return np.arange(self.n_steps + 1) * self.dt


def _as_readonly(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Field:
    """A grid function: one sample per node, boundary nodes included."""

    values: np.ndarray
    grid: Grid1D

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != self.grid.n_nodes:
            raise InvalidFieldError(
                f"field length {vals.shape} does not match grid with "
                f"{self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidFieldError("field contains non-finite entries")
        object.__setattr__(self, "values", _as_readonly(vals))

    @classmethod
    def from_function(cls, grid: Grid1D, fn) -> "Field":
        """Sample ``fn(z)`` (vectorized) on the grid nodes."""
        return cls(np.asarray(fn(grid.nodes), dtype=float), grid)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(np.zeros(grid.n_nodes), grid)

    @classmethod
    def constant(cls, grid: Grid1D, c: float) -> "Field":
        return cls(np.full(grid.n_nodes, float(c)), grid)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed states of one simulation plus the applied boundary data.

    ``data[k]`` is the state at ``times[k]``; columns 0 and -1 hold the
    Dirichlet boundary values actually applied, duplicated in
    ``boundary_left`` / ``boundary_right`` for direct access.  ``problem``
    optionally records the problem that produced the trajectory so stability
    checks can recover the diffusion coefficient and reaction term.
    """

    grid: Grid1D
    times: np.ndarray
    data: np.ndarray
    boundary_left: np.ndarray
    boundary_right: np.ndarray
    problem: object = field(default=None, repr=False)

    def __post_init__(self) -> None:
        times = _as_readonly(self.times)
        data = np.array(self.data, dtype=float, copy=True)
        bl = _as_readonly(self.boundary_left)
        br = _as_readonly(self.boundary_right)
        if data.ndim != 2 or data.shape != (times.shape[0], self.grid.n_nodes):
            raise InvalidFieldError(
                f"trajectory data shape {data.shape} does not match "
                f"{times.shape[0]} times x {self.grid.n_nodes} nodes"
            )
        if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise InvalidParameterError("times must increase strictly from 0")
        if bl.shape != times.shape or br.shape != times.shape:
            raise InvalidFieldError("boundary sample count does not match times")
        if not np.all(np.isfinite(data)):
            raise InvalidFieldError("trajectory contains non-finite entries")
        if not (np.array_equal(data[:, 0], bl) and np.array_equal(data[:, -1], br)):
            raise InvalidFieldError(
                "boundary columns of the data disagree with the recorded "
                "Dirichlet samples"
            )
        data.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "boundary_left", bl)
        object.__setattr__(self, "boundary_right", br)

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, k: int) -> Field:
        return Field(self.data[k], self.grid)

    @property
    def initial_state(self) -> Field:
        return self.state(0)

    @property
    def final_state(self) -> Field:
        return self.state(len(self) - 1)

    def truncated(self, t_max: float) -> "Trajectory":
        """Restrict to recorded times <= t_max (t_max >= first step)."""
        keep = int(np.searchsorted(self.times, t_max + 1e-12, side="right"))
        keep = max(keep, 2)
        return Trajectory(
            grid=self.grid,
            times=self.times[:keep],
            data=self.data[:keep],
            boundary_left=self.boundary_left[:keep],
            boundary_right=self.boundary_right[:keep],
            problem=self.problem,
        )
