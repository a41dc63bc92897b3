"""Boundary-feedback synthesis for the reaction-diffusion plant.

Plant and loop
--------------
The plant is y_t = a y_zz + kr y on (0, 1) with y(t, 1) = 0 and the control
applied at the left end, y(t, 0) = u(t).  The stabilizing transform

    x(t, z) = y(t, z) + int_z^1 k(z, s) y(t, s) ds

maps the plant with the feedback u(t) = d(t) - int_0^1 k(0, s) y(t, s) ds
(d an additive actuator disturbance) onto the plain heat equation with
x(t, 0) = d(t), x(t, 1) = 0.  Substituting the transform into both equations
forces the kernel to solve

    k_zz - k_ss = lam k   on the triangle 0 <= z <= s <= 1,  lam = kr / a,
    k(z, 1) = 0,          k(z, z) = (lam / 2) (1 - z),

whose closed form is k(z, s) = lam (1 - s) S(lam [(1-z)^2 - (1-s)^2]) with
S(q) = sum_m q^m / (4^m m! (m+1)!) / 2, an entire function (a modified
Bessel ratio for q > 0).  This module computes the kernel two independent
ways -- successive approximation of the equivalent integral equation in the
characteristic variables xi = 2 - z - s, eta = s - z,

    F(xi, eta) = (lam/4)(xi - eta)
                 + (lam/4) int_eta^xi int_0^eta F(xi', eta') d eta' d xi',

and the truncated series above -- so each validates the other, and a third
check (the transformed closed-loop trajectory must satisfy the heat
residual at the scheme's order) validates both against the dynamics.

The inverse transform y = x + int_z^1 l(z, s) x(t, s) ds is synthesized as
the exact inverse of the quadrature-discretized direct operator, so a
transform round trip reproduces fields to solver precision; its samples
agree with the continuous inverse kernel (the series with lam -> -lam) up
to quadrature order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from .certify import ExpIssConstants, ISSReport, _finish_report
from .comparison import ExpLinearKL, LinearGain
from .errors import (
    IncompatibleDataError,
    InvalidParameterError,
    NumericalError,
    SynthesisError,
)
from .grid import Field, Grid1D, Trajectory
from .norms import lp_norms
from .solver import (
    BoundarySignal,
    SemilinearProblem,
    _banded_matrix,
    _check_step_restriction,
    _imex_step,
    pde_residual_field,
)

KERNEL_ITERATION_TOL = 1e-10
KERNEL_ITERATION_CAP = 200


@dataclass(frozen=True)
class VolterraKernel:
    """Triangular transform kernel sampled on the solver grid.

    ``samples[i, j]`` holds k(z_i, s_j) for s_j >= z_i and zero elsewhere.
    ``lam`` is the reaction-to-diffusion ratio the kernel was built for.
    """

    samples: np.ndarray
    lam: float
    direction: str
    grid: Grid1D

    def __post_init__(self) -> None:
        if self.direction not in ("direct", "inverse"):
            raise InvalidParameterError(f"unknown kernel direction {self.direction!r}")
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.shape != (self.grid.n_nodes, self.grid.n_nodes):
            raise InvalidParameterError("kernel samples do not match the grid")
        if not np.all(np.isfinite(samples)):
            raise NumericalError("kernel samples contain non-finite values")
        if np.any(np.tril(samples, -1) != 0.0):
            raise InvalidParameterError("kernel samples must vanish below the diagonal")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def _row_trapezoid_weights(n_nodes: int, h: float) -> np.ndarray:
    """W[i, j]: trapezoid weight of node j for the integral over [z_i, 1]."""
    w = np.full((n_nodes, n_nodes), h)
    w = np.triu(w)
    idx = np.arange(n_nodes)
    w[idx, idx] = h / 2.0
    w[:, -1] = h / 2.0
    w[-1, -1] = 0.0  # degenerate interval [1, 1]
    return w


def _transform_matrix(kernel: VolterraKernel) -> np.ndarray:
    return _row_trapezoid_weights(kernel.grid.n_nodes, kernel.grid.h) * kernel.samples


def _series_shape(q: np.ndarray) -> np.ndarray:
    """S(q) = sum_m q^m / (4^m m! (m+1)!) / 2, entire in q."""
    q = np.asarray(q, dtype=float)
    term = np.full(q.shape, 0.5)
    out = term.copy()
    for m in range(1, 120):
        term = term * q / (4.0 * m * (m + 1))
        out += term
        if np.max(np.abs(term)) < 1e-18:
            break
    return out


def kernel_series_reference(a: float, k_reaction: float, grid: Grid1D) -> np.ndarray:
    """Closed-form kernel samples; the independent cross-check for the solver.

    Evaluates lam (1 - s) S(lam [(1-z)^2 - (1-s)^2]) on the grid triangle.
    Passing ``-k_reaction`` yields the continuous inverse kernel.
    """
    if not a > 0.0:
        raise InvalidParameterError("diffusion coefficient must be positive")
    lam = k_reaction / a
    z = grid.nodes
    zz, ss = np.meshgrid(z, z, indexing="ij")
    vals = lam * (1.0 - ss) * _series_shape(lam * ((1.0 - zz) ** 2 - (1.0 - ss) ** 2))
    return np.triu(vals)


def solve_kernel(
    a: float,
    k_reaction: float,
    grid: Grid1D,
    tol: float = KERNEL_ITERATION_TOL,
    max_iter: int = KERNEL_ITERATION_CAP,
) -> VolterraKernel:
    """Synthesize the direct kernel by successive approximation.

    Iterates the characteristic-variable integral equation on the rectangle
    xi in [0, 2], eta in [0, 1] (the equation extends smoothly beyond the
    physical triangle, which keeps the quadrature stencils away from kinks),
    with cumulative Simpson quadrature for the double integral, until the
    sup-difference of successive iterates drops below ``tol``.
    """
    if not a > 0.0:
        raise InvalidParameterError("diffusion coefficient must be positive")
    lam = k_reaction / a
    h = grid.h
    n_eta = grid.n_nodes
    n_xi = 2 * (grid.n_interior + 1) + 1
    xi = np.arange(n_xi) * h
    eta = np.arange(n_eta) * h
    base = (lam / 4.0) * (xi[:, None] - eta[None, :])
    F = base.copy()
    diag = np.arange(n_eta)
    converged = False
    for _ in range(max_iter):
        inner = cumulative_simpson(F, dx=h, axis=1, initial=0.0)
        outer = cumulative_simpson(inner, dx=h, axis=0, initial=0.0)
        # int_eta^xi int_0^eta F = D(xi, eta) - D(eta, eta)
        new = base + (lam / 4.0) * (outer - outer[diag, diag][None, :])
        change = float(np.max(np.abs(new - F)))
        F = new
        if change < tol:
            converged = True
            break
    if not converged:
        raise SynthesisError(
            f"kernel iteration did not converge within {max_iter} iterations "
            f"(last change {change:.3e})"
        )
    samples = np.zeros((n_eta, n_eta))
    ii, jj = np.meshgrid(diag, diag, indexing="ij")
    mask = jj >= ii
    samples[mask] = F[2 * (grid.n_interior + 1) - ii[mask] - jj[mask], jj[mask] - ii[mask]]
    return VolterraKernel(samples=samples, lam=lam, direction="direct", grid=grid)


def solve_inverse_kernel(direct: VolterraKernel, tol: float = KERNEL_ITERATION_TOL, max_iter: int = KERNEL_ITERATION_CAP) -> VolterraKernel:
    """Invert the discretized direct transform by successive approximation.

    With U the quadrature matrix of the direct transform, the inverse
    transform matrix L solves L = -U - U L (the reciprocal Volterra
    relation of the two kernels, in discrete-operator form); iterating that
    fixed point converges geometrically because U is triangular with an
    O(h) diagonal.  The composition (I + L)(I + U) = I is enforced
    post-solve, which is what makes transform round trips exact to solver
    precision rather than to quadrature order.
    """
    if direct.direction != "direct":
        raise InvalidParameterError("inverse synthesis expects the direct kernel")
    weights = _row_trapezoid_weights(direct.grid.n_nodes, direct.grid.h)
    U = weights * direct.samples
    L = -U.copy()
    converged = False
    for _ in range(max_iter):
        new = -U - U @ L
        change = float(np.max(np.abs(new - L)))
        L = new
        if change < tol:
            converged = True
            break
    if not converged:
        raise SynthesisError(f"inverse-kernel iteration did not converge within {max_iter} iterations")
    eye = np.eye(direct.grid.n_nodes)
    defect = float(np.max(np.abs((eye + L) @ (eye + U) - eye)))
    if defect > 1e-8:
        raise SynthesisError(f"inverse kernel failed the composition check: defect {defect:.3e}")
    with np.errstate(divide="ignore", invalid="ignore"):
        samples = np.where(weights > 0.0, L / np.where(weights > 0.0, weights, 1.0), 0.0)
    return VolterraKernel(samples=samples, lam=-direct.lam, direction="inverse", grid=direct.grid)


def apply_transform(kernel: VolterraKernel, y: Field) -> Field:
    """x(z_i) = y(z_i) + trapezoid of k(z_i, .) y over [z_i, 1], row-wise."""
    if y.grid != kernel.grid:
        raise InvalidParameterError("field and kernel live on different grids")
    return Field(y.values + _transform_matrix(kernel) @ y.values, y.grid)


def feedback(kernel: VolterraKernel, y: Field, d: float = 0.0) -> float:
    """Boundary control u = d - trapezoid of k(0, .) y over [0, 1]."""
    if y.grid != kernel.grid:
        raise InvalidParameterError("field and kernel live on different grids")
    return float(d - _transform_matrix(kernel)[0] @ y.values)


def compatible_initial_state(kernel: VolterraKernel, base: Field, d0: float = 0.0) -> Field:
    """Correct a profile so it is admissible for the closed loop.

    Adds c (1 + cos(pi z)) / 2 (equal to 1 at the controlled end, 0 at the
    far end) with c chosen so the corrected state satisfies the feedback
    boundary condition y(0) = d0 - int k(0, s) y(s) ds.  The base profile
    must already vanish at z = 1.
    """
    if abs(base.values[-1]) > 1e-12:
        raise IncompatibleDataError("closed-loop initial data must vanish at z = 1")
    row0 = _transform_matrix(kernel)[0]
    bump = 0.5 * (1.0 + np.cos(np.pi * base.grid.nodes))
    denom = bump[0] + row0 @ bump
    if abs(denom) < 1e-12:
        raise NumericalError("compatibility correction is degenerate for this kernel")
    c = (d0 - base.values[0] - row0 @ base.values) / denom
    return Field(base.values + c * bump, base.grid)


@dataclass(frozen=True)
class ClosedLoopRun:
    """Closed-loop plant trajectory with its transformed (target) image.

    Iterating yields (y_traj, x_traj); ``control`` records the applied
    boundary values u(t_k) and ``disturbance`` the actuator error d(t_k).
    """

    y_traj: Trajectory
    x_traj: Trajectory
    control: np.ndarray
    disturbance: np.ndarray
    kernel: VolterraKernel

    def __iter__(self):
        return iter((self.y_traj, self.x_traj))


def simulate_closed_loop(
    a: float,
    k_reaction: float,
    y0: Field,
    d: BoundarySignal,
    grid: Grid1D,
    kernel: Optional[VolterraKernel] = None,
) -> ClosedLoopRun:
    """Step the plant under the synthesized feedback with actuator error d.

    The boundary value applied at each new time level is computed from the
    current state (feedback explicit, diffusion implicit, matching the IMEX
    split), so the transformed trajectory satisfies x(t, 0) = d(t) up to an
    O(dt) lag.  The transformed image is recorded alongside the plant state.
    """
    if y0.grid != grid:
        raise InvalidParameterError("initial state lives on a different grid")
    if d.kind == "closed-loop":
        raise InvalidParameterError("the actuator disturbance must be an evaluable signal")
    _check_step_restriction(grid.dt, abs(k_reaction))
    if kernel is None:
        kernel = solve_kernel(a, k_reaction, grid)
    elif kernel.grid != grid or abs(kernel.lam - k_reaction / a) > 1e-12:
        raise InvalidParameterError("kernel does not match the requested plant")
    if abs(y0.values[-1]) > 1e-9:
        raise IncompatibleDataError("closed-loop initial data must vanish at z = 1")
    u0 = feedback(kernel, y0, float(d(0.0)))
    if abs(y0.values[0] - u0) > 1e-9:
        raise IncompatibleDataError(
            "initial state is incompatible with the feedback at z = 0; "
            "see compatible_initial_state"
        )

    kr = float(k_reaction)
    reaction = lambda z, w, grad: kr * w  # noqa: E731 - local closure, not exported
    problem = SemilinearProblem(
        a=a,
        initial=y0,
        boundary_left=BoundarySignal.constant(y0.values[0]),
        boundary_right=BoundarySignal.zero(),
        reaction=reaction,
        lipschitz_k=abs(kr),
    )
    r = a * grid.dt / grid.h**2
    ab = _banded_matrix(grid.n_interior, r)
    nodes = grid.nodes
    times = grid.times()
    row0 = _transform_matrix(kernel)[0]
    data = np.empty((grid.n_steps + 1, grid.n_nodes))
    control = np.empty(grid.n_steps + 1)
    data[0] = y0.values
    control[0] = y0.values[0]
    y = y0.values.copy()
    for m in range(grid.n_steps):
        u_next = float(d(times[m + 1])) - float(row0 @ y)
        y = _imex_step(problem, ab, nodes, y, r, grid.dt, u_next, 0.0)
        data[m + 1] = y
        control[m + 1] = u_next
    y_traj = Trajectory(
        grid=grid, times=times, data=data,
        boundary_left=data[:, 0], boundary_right=data[:, -1], problem=problem,
    )

    x_data = data + data @ _transform_matrix(kernel).T
    x_problem = SemilinearProblem(
        a=a,
        initial=Field(x_data[0], grid),
        boundary_left=BoundarySignal.sampled(times, x_data[:, 0]),
        boundary_right=BoundarySignal.zero(),
    )
    x_traj = Trajectory(
        grid=grid, times=times, data=x_data,
        boundary_left=x_data[:, 0], boundary_right=x_data[:, -1], problem=x_problem,
    )
    disturbance = np.asarray(d(times), dtype=float)
    if disturbance.ndim == 0:
        disturbance = np.full(times.shape, float(disturbance))
    return ClosedLoopRun(y_traj=y_traj, x_traj=x_traj, control=control, disturbance=disturbance, kernel=kernel)


def transform_commutation_residual(run: ClosedLoopRun, burn_fraction: float = 0.05) -> float:
    """Heat-equation residual of the transformed trajectory, past burn-in.

    The initial state is value-compatible but not derivative-compatible
    with the feedback, so the first few steps carry a boundary layer that
    the L-stable stepper damps; the residual is therefore measured after
    ``burn_fraction`` of the horizon.  It decreases at the scheme's order
    (dt + h^2) under refinement, validating the kernel against the dynamics
    with no reference to any kernel formula.
    """
    if not (0.0 <= burn_fraction < 0.9):
        raise InvalidParameterError("burn_fraction must lie in [0, 0.9)")
    x = run.x_traj
    start = min(max(int(burn_fraction * (len(x) - 1)), 0), len(x) - 3)
    res = pde_residual_field(
        x.data[start:], x.times[start:], x.grid.nodes, run.x_traj.problem.a, None
    )
    return float(res.max())


def _schur_bound(kernel: VolterraKernel, p: float) -> float:
    """Induced-norm bound of the discrete transform operator on L^p.

    Discrete Schur test with unit test weights: with M the quadrature
    matrix and omega the trapezoid node weights,
        ||M|| <= (max_i sum_j |M_ij|)^(1 - 1/p) (max_j sum_i omega_i |M_ij| / omega_j)^(1/p).
    """
    n = kernel.grid.n_nodes
    h = kernel.grid.h
    M = np.abs(_transform_matrix(kernel))
    omega = np.full(n, h)
    omega[0] = omega[-1] = h / 2.0
    row = float(M.sum(axis=1).max())
    col = float(((omega[:, None] * M).sum(axis=0) / omega).max())
    if p == math.inf:
        return row
    if not p >= 1.0:
        raise InvalidParameterError(f"p must lie in [1, inf], got {p}")
    return row ** (1.0 - 1.0 / p) * col ** (1.0 / p)


def _random_smooth_fields(grid: Grid1D, count: int, rng: np.random.Generator) -> np.ndarray:
    z = grid.nodes
    modes = np.sin(np.pi * np.outer(np.arange(1, 9), z))
    coeffs = rng.uniform(-1.0, 1.0, size=(count, 8)) / np.arange(1, 9) ** 2
    return coeffs @ modes


def estimate_equivalence_constants(kernel: VolterraKernel, inverse: VolterraKernel, p: float) -> tuple[float, float]:
    """Constants with K1 ||x[t]||_p <= ||y[t]||_p <= K2 ||x[t]||_p.

    Since x = (I + K) y and y = (I + L) x, valid constants are
    K1 = 1 / (1 + ||K||) from the direct bound and K2 = 1 + ||L|| from the
    inverse bound, with the operator norms estimated by the discrete Schur
    test.  The pair is sanity-checked on 100 seeded smooth fields before
    being returned.
    """
    if kernel.direction != "direct" or inverse.direction != "inverse":
        raise InvalidParameterError("expected a (direct, inverse) kernel pair")
    k1 = 1.0 / (1.0 + _schur_bound(kernel, p))
    k2 = 1.0 + _schur_bound(inverse, p)
    fields = _random_smooth_fields(kernel.grid, 100, np.random.default_rng(0))
    B = _transform_matrix(kernel)
    x = fields + fields @ B.T
    ny = lp_norms(fields, kernel.grid.h, p)
    nx = lp_norms(x, kernel.grid.h, p)
    keep = nx > 1e-14
    ratio = ny[keep] / nx[keep]
    if ratio.size and (ratio.min() < k1 * (1.0 - 1e-9) or ratio.max() > k2 * (1.0 + 1e-9)):
        raise NumericalError(
            f"equivalence constants failed the sampling sanity check: "
            f"ratios in [{ratio.min():.6g}, {ratio.max():.6g}] vs [K1, K2] = [{k1:.6g}, {k2:.6g}]"
        )
    return k1, k2


@dataclass(frozen=True)
class ClosedLoopConstants:
    """Constants entering the closed-loop robustness estimate."""

    k1: float
    k2: float
    iss: ExpIssConstants


def certify_closed_loop(
    y_traj: Trajectory,
    constants: ClosedLoopConstants,
    disturbance: np.ndarray,
    tol: float = 1e-9,
) -> ISSReport:
    """Check the closed-loop robustness estimate at every recorded time:

        ||y[t]||_p <= (K2/K1) m exp(-sigma t) ||y0||_p + K2 gamma max|d(s)|

    with (m, sigma, gamma) the fitted target-system constants and (K1, K2)
    the transform equivalence constants.
    """
    iss = constants.iss
    disturbance = np.asarray(disturbance, dtype=float)
    if disturbance.shape != y_traj.times.shape:
        raise InvalidParameterError("disturbance samples must align with the trajectory times")
    lhs = lp_norms(y_traj.data, y_traj.grid.h, iss.p)
    run_d = np.maximum.accumulate(np.abs(disturbance))
    amp = constants.k2 / constants.k1 * iss.m
    rhs = amp * np.exp(-iss.sigma * y_traj.times) * lhs[0] + constants.k2 * iss.gamma * run_d
    return _finish_report(
        "closed_loop_lp", y_traj.times, lhs, rhs, tol,
        beta=ExpLinearKL(amp, iss.sigma),
        gain=LinearGain(constants.k2 * iss.gamma),
        params={
            "p": iss.p, "k1": constants.k1, "k2": constants.k2,
            "m": iss.m, "sigma": iss.sigma, "gamma": iss.gamma,
        },
    )


def write_kernel_csv(kernel: VolterraKernel, path) -> None:
    """Export kernel samples over the triangle: z,s,k_value."""
    nodes = kernel.grid.nodes
    with open(path, "w", newline="\n") as fh:
        fh.write("z,s,k_value\n")
        for i, z in enumerate(nodes):
            for j in range(i, len(nodes)):
                fh.write(f"{z:.17g},{nodes[j]:.17g},{kernel.samples[i, j]:.17g}\n")
