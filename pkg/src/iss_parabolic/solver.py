"""IMEX finite-difference solver for 1-D semilinear parabolic problems.

The problem class is

    x_t = a x_zz + f(z, x, x_z)   on (0, 1),
    x(t, 0) = d0(t),  x(t, 1) = d1(t),   x(0, z) = x0(z),

stepped with backward-Euler diffusion (tridiagonal elimination) and an
explicit reaction term.  The implicit matrix I + (a dt / h^2) T is an
M-matrix, so each step is order preserving provided the explicit reaction
map w -> w + dt f(z, w, .) is monotone in w; the constructor-enforced
restriction dt * lipschitz_k < 1 guards that.  Order preservation is what
turns the comparison principle into an executable oracle downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    IncompatibleDataError,
    InvalidParameterError,
    MonotonicityLossError,
    NumericalError,
)
from .grid import Field, Grid1D, Trajectory

# Vectorized reaction term f(z, w, w_z) evaluated at interior nodes.
Reaction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

COMPATIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class BoundarySignal:
    """A scalar Dirichlet boundary signal on [0, t_final].

    ``constant`` signals evaluate to a fixed value; ``sampled`` signals
    interpolate a finite table linearly (and clamp outside it); the
    ``closed-loop`` kind is a placeholder resolved by the control module
    and cannot be evaluated directly.
    """

    kind: str
    value: float = 0.0
    sample_times: Optional[np.ndarray] = None
    sample_values: Optional[np.ndarray] = None
    sup_norm: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "constant":
            object.__setattr__(self, "sup_norm", abs(float(self.value)))
        elif self.kind == "sampled":
            ts = np.array(self.sample_times, dtype=float, copy=True)
            vs = np.array(self.sample_values, dtype=float, copy=True)
            if ts.ndim != 1 or ts.shape != vs.shape or ts.shape[0] < 2:
                raise InvalidParameterError("sampled signal needs matching time/value tables")
            if np.any(np.diff(ts) <= 0.0):
                raise InvalidParameterError("sample times must increase strictly")
            if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(vs))):
                raise InvalidParameterError("sampled signal contains non-finite entries")
            ts.setflags(write=False)
            vs.setflags(write=False)
            object.__setattr__(self, "sample_times", ts)
            object.__setattr__(self, "sample_values", vs)
            object.__setattr__(self, "sup_norm", float(np.max(np.abs(vs))))
        elif self.kind == "closed-loop":
            object.__setattr__(self, "sup_norm", float("nan"))
        else:
            raise InvalidParameterError(f"unknown boundary signal kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "BoundarySignal":
        return cls(kind="constant", value=float(value))

    @classmethod
    def zero(cls) -> "BoundarySignal":
        return cls.constant(0.0)

    @classmethod
    def sampled(cls, times: np.ndarray, values: np.ndarray) -> "BoundarySignal":
        return cls(kind="sampled", sample_times=times, sample_values=values)

    @classmethod
    def closed_loop(cls) -> "BoundarySignal":
        return cls(kind="closed-loop")

    def __call__(self, t) -> float:
        if self.kind == "constant":
            return self.value if np.ndim(t) == 0 else np.full(np.shape(t), self.value)
        if self.kind == "sampled":
            return np.interp(t, self.sample_times, self.sample_values)
        raise InvalidParameterError("closed-loop signals are resolved by the control module")

    def shifted(self, tau: float) -> "BoundarySignal":
        """The signal s -> self(tau + s), for restarting a simulation."""
        if self.kind == "constant":
            return self
        if self.kind == "sampled":
            return BoundarySignal.sampled(self.sample_times - tau, self.sample_values)
        raise InvalidParameterError("closed-loop signals cannot be shifted")


@dataclass(frozen=True)
class SemilinearProblem:
    """Diffusion coefficient, reaction term, and initial/boundary data.

    ``reaction is None`` means the pure heat equation.  ``lipschitz_k``
    bounds the slope of the reaction in the state variable over the working
    range; the solver refuses any step with dt * lipschitz_k >= 1 because
    the explicit reaction update would no longer preserve nodewise order.
    """

    a: float
    initial: Field
    boundary_left: BoundarySignal
    boundary_right: BoundarySignal
    reaction: Optional[Reaction] = None
    lipschitz_k: float = 0.0

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise InvalidParameterError(f"diffusion coefficient must be positive, got {self.a}")
        if self.lipschitz_k < 0.0:
            raise InvalidParameterError("lipschitz_k must be nonnegative")
        for side, sig in (("left", self.boundary_left), ("right", self.boundary_right)):
            if sig.kind == "closed-loop":
                raise InvalidParameterError(
                    "closed-loop boundary signals are resolved by the control module"
                )
            node = self.initial.values[0 if side == "left" else -1]
            if abs(node - sig(0.0)) > COMPATIBILITY_TOL:
                raise IncompatibleDataError(
                    f"initial state and {side} boundary signal disagree at t=0: "
                    f"{node} vs {sig(0.0)}"
                )

    @property
    def is_heat(self) -> bool:
        return self.reaction is None

    def with_data(self, initial: Field, left: BoundarySignal, right: BoundarySignal) -> "SemilinearProblem":
        """Same operator, different admissible pair."""
        return replace(self, initial=initial, boundary_left=left, boundary_right=right)


def _banded_matrix(n_interior: int, r: float) -> np.ndarray:
    """LAPACK band storage of I + r * tridiag(-1, 2, -1)."""
    ab = np.zeros((3, n_interior))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    return ab


def _check_step_restriction(dt: float, lipschitz_k: float) -> None:
    if dt * lipschitz_k >= 1.0:
        raise MonotonicityLossError(
            f"time step dt={dt} violates dt * lipschitz_k < 1 (k={lipschitz_k}); "
            "refusing to step because order preservation would be lost"
        )


def _reaction_term(problem: SemilinearProblem, nodes: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """dt-free explicit reaction contribution at interior nodes.

    The state gradient is the central difference; at interior nodes adjacent
    to the boundary this uses the known Dirichlet neighbor, so no one-sided
    stencil is needed.
    """
    grad = (x[2:] - x[:-2]) / (2.0 * h)
    return problem.reaction(nodes[1:-1], x[1:-1], grad)


def _imex_step(
    problem: SemilinearProblem,
    ab: np.ndarray,
    nodes: np.ndarray,
    x: np.ndarray,
    r: float,
    dt: float,
    left_value: float,
    right_value: float,
) -> np.ndarray:
    """One step: explicit reaction, implicit diffusion, boundary overwrite."""
    rhs = x[1:-1].copy()
    if problem.reaction is not None:
        rhs += dt * _reaction_term(problem, nodes, x, problem.initial.grid.h)
    rhs[0] += r * left_value
    rhs[-1] += r * right_value
    try:
        interior = solve_banded((1, 1), ab, rhs, check_finite=False)
    except Exception as exc:  # pragma: no cover - LAPACK breakdown is not reachable for SPD input
        raise NumericalError(f"tridiagonal solve failed: {exc}") from exc
    if not np.all(np.isfinite(interior)):
        raise NumericalError("tridiagonal solve produced non-finite values")
    return np.concatenate(([left_value], interior, [right_value]))


def step(problem: SemilinearProblem, state: Field, t: float, dt: float) -> Field:
    """Advance one state from t to t + dt.

    The state must already carry the Dirichlet values at time t; the
    returned field carries the values at t + dt.
    """
    _check_step_restriction(dt, problem.lipschitz_k)
    grid = state.grid
    if grid != problem.initial.grid:
        raise InvalidParameterError("state lives on a different grid than the problem")
    for side, sig, idx in (("left", problem.boundary_left, 0), ("right", problem.boundary_right, -1)):
        if abs(state.values[idx] - sig(t)) > 1e-6:
            raise IncompatibleDataError(
                f"state does not satisfy the {side} Dirichlet value at t={t}"
            )
    r = problem.a * dt / grid.h**2
    ab = _banded_matrix(grid.n_interior, r)
    new = _imex_step(
        problem, ab, grid.nodes, state.values, r, dt,
        float(problem.boundary_left(t + dt)), float(problem.boundary_right(t + dt)),
    )
    return Field(new, grid)


def simulate(problem: SemilinearProblem, grid: Grid1D) -> Trajectory:
    """Run the IMEX scheme over the grid horizon and record every state."""
    if problem.initial.grid != grid:
        raise InvalidParameterError("problem initial data lives on a different grid")
    _check_step_restriction(grid.dt, problem.lipschitz_k)
    n_steps = grid.n_steps
    r = problem.a * grid.dt / grid.h**2
    ab = _banded_matrix(grid.n_interior, r)
    nodes = grid.nodes
    times = grid.times()
    data = np.empty((n_steps + 1, grid.n_nodes))
    data[0] = problem.initial.values
    x = problem.initial.values.copy()
    for m in range(n_steps):
        t1 = times[m + 1]
        try:
            x = _imex_step(
                problem, ab, nodes, x, r, grid.dt,
                float(problem.boundary_left(t1)), float(problem.boundary_right(t1)),
            )
        except NumericalError as exc:
            raise NumericalError(f"step to t={t1} failed: {exc}") from exc
        data[m + 1] = x
    return Trajectory(
        grid=grid,
        times=times,
        data=data,
        boundary_left=data[:, 0],
        boundary_right=data[:, -1],
        problem=problem,
    )


def pde_residual_field(
    data: np.ndarray,
    times: np.ndarray,
    nodes: np.ndarray,
    a: float,
    reaction: Optional[Reaction],
) -> np.ndarray:
    """|x_t - a x_zz - f| at interior nodes and interior times.

    Central differences in both variables; rows index the interior time
    levels times[1:-1].
    """
    dt = times[1] - times[0]
    h = nodes[1] - nodes[0]
    x_t = (data[2:] - data[:-2]) / (2.0 * dt)
    x_zz = (data[1:-1, :-2] - 2.0 * data[1:-1, 1:-1] + data[1:-1, 2:]) / h**2
    res = x_t[:, 1:-1] - a * x_zz
    if reaction is not None:
        mid = data[1:-1]
        grad = (mid[:, 2:] - mid[:, :-2]) / (2.0 * h)
        res = res - reaction(nodes[np.newaxis, 1:-1], mid[:, 1:-1], grad)
    return np.abs(res)


def residual(problem: SemilinearProblem, traj: Trajectory) -> float:
    """A posteriori operator residual of a trajectory.

    Converges to zero at order min(dt, h^2) for smooth compatible data, so
    it doubles as a convergence-order probe under grid refinement.
    """
    if len(traj) < 3:
        raise InvalidParameterError("residual needs at least three recorded times")
    res = pde_residual_field(traj.data, traj.times, traj.grid.nodes, problem.a, problem.reaction)
    return float(res.max())


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Export as CSV with header t,z,value, row-major by time."""
    nodes = traj.grid.nodes
    with open(path, "w", newline="\n") as fh:
        fh.write("t,z,value\n")
        for k in range(len(traj)):
            t = traj.times[k]
            row = traj.data[k]
            for z, v in zip(nodes, row):
                fh.write(f"{t:.17g},{z:.17g},{v:.17g}\n")
