import math

import numpy as np
import pytest

from iss_parabolic import (
    BoundarySignal,
    Field,
    Grid1D,
    IncompatibleDataError,
    InvalidParameterError,
    MonotonicityLossError,
    SemilinearProblem,
    check_ordering,
    norm_lp,
    residual,
    simulate,
    step,
    write_trajectory_csv,
)
from conftest import eigenfield, heat_problem

PI2 = math.pi**2


class TestBoundarySignal:
    def test_constant_sup(self):
        sig = BoundarySignal.constant(-2.0)
        assert sig(13.7) == -2.0
        assert sig.sup_norm == 2.0

    def test_sampled_interp_and_sup(self):
        sig = BoundarySignal.sampled(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, -4.0]))
        assert sig(0.5) == pytest.approx(1.0)
        assert sig(5.0) == -4.0  # clamped beyond the table
        assert sig.sup_norm == 4.0

    def test_shift_matches_evaluation(self):
        times = np.linspace(0.0, 1.0, 11)
        sig = BoundarySignal.sampled(times, np.sin(3.0 * times))
        shifted = sig.shifted(0.3)
        for s in (0.0, 0.21, 0.55):
            assert shifted(s) == pytest.approx(sig(0.3 + s), abs=1e-15)

    def test_sampled_validation(self):
        with pytest.raises(InvalidParameterError):
            BoundarySignal.sampled(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
        with pytest.raises(InvalidParameterError):
            BoundarySignal.sampled(np.array([0.0, 1.0]), np.array([1.0, np.inf]))

    def test_closed_loop_not_evaluable(self):
        with pytest.raises(InvalidParameterError):
            BoundarySignal.closed_loop()(0.0)


class TestProblemValidation:
    def test_compatibility_required(self, grid_small):
        with pytest.raises(IncompatibleDataError):
            heat_problem(grid_small, lambda z: np.ones_like(z), d0=BoundarySignal.zero())

    def test_positive_diffusion_required(self, grid_small):
        with pytest.raises(InvalidParameterError):
            SemilinearProblem(
                a=0.0,
                initial=Field.zeros(grid_small),
                boundary_left=BoundarySignal.zero(),
                boundary_right=BoundarySignal.zero(),
            )

    def test_step_restriction_refused(self, grid_small):
        problem = SemilinearProblem(
            a=1.0,
            initial=Field.zeros(grid_small),
            boundary_left=BoundarySignal.zero(),
            boundary_right=BoundarySignal.zero(),
            reaction=lambda z, w, g: 5.0 * w,
            lipschitz_k=5.0,
        )
        with pytest.raises(MonotonicityLossError):
            step(problem, problem.initial, 0.0, 0.25)


class TestStep:
    def test_zero_state_stays_zero(self, grid_small):
        problem = heat_problem(grid_small, lambda z: np.zeros_like(z))
        out = step(problem, problem.initial, 0.0, grid_small.dt)
        assert np.all(out.values == 0.0)

    def test_constant_steady_state_fixed_point(self):
        grid = Grid1D(n_interior=49, dt=1e-3, t_final=0.1)
        c = 0.75
        problem = heat_problem(
            grid, lambda z: np.full_like(z, c),
            d0=BoundarySignal.constant(c), d1=BoundarySignal.constant(c),
        )
        out = step(problem, problem.initial, 0.0, grid.dt)
        assert np.allclose(out.values, c, atol=1e-12)

    def test_single_step_matches_eigen_decay(self):
        grid = Grid1D(n_interior=199, dt=1e-3, t_final=0.1)
        problem = heat_problem(grid, lambda z: np.sin(np.pi * z))
        out = step(problem, problem.initial, 0.0, grid.dt)
        expected = math.exp(-PI2 * grid.dt) * np.sin(np.pi * grid.nodes)
        assert np.max(np.abs(out.values - expected)) < 2e-4


class TestSimulate:
    def test_zero_data_zero_trajectory(self, grid_small):
        traj = simulate(heat_problem(grid_small, lambda z: np.zeros_like(z)), grid_small)
        assert np.all(traj.data == 0.0)
        assert len(traj) == grid_small.n_steps + 1

    def test_constant_steady_state_all_times(self, grid_small):
        problem = heat_problem(
            grid_small, lambda z: np.full_like(z, -1.5),
            d0=BoundarySignal.constant(-1.5), d1=BoundarySignal.constant(-1.5),
        )
        traj = simulate(problem, grid_small)
        assert np.allclose(traj.data, -1.5, atol=1e-11)

    def test_eigenfunction_decay_ratio(self):
        grid = Grid1D(n_interior=99, dt=1e-4, t_final=0.2)
        traj = simulate(heat_problem(grid, lambda z: np.sin(np.pi * z)), grid)
        ratio = norm_lp(traj.final_state, 2.0) / norm_lp(traj.initial_state, 2.0)
        assert ratio == pytest.approx(math.exp(-PI2 * traj.times[-1]), rel=0.02)

    def test_subcritical_reaction_decays(self, grid_medium):
        # spectral gap of the discrete operator, confirmed independently on
        # the tridiagonal eigenvalue problem
        from scipy.linalg import eigh_tridiagonal

        h = grid_medium.h
        n = grid_medium.n_interior
        lam_min = eigh_tridiagonal(
            np.full(n, 2.0 / h**2), np.full(n - 1, -1.0 / h**2), select="i", select_range=(0, 0)
        )[0][0]
        assert lam_min - 5.0 > 0.0  # the reaction does not close the gap
        problem = SemilinearProblem(
            a=1.0,
            initial=eigenfield(grid_medium),
            boundary_left=BoundarySignal.zero(),
            boundary_right=BoundarySignal.zero(),
            reaction=lambda z, w, g: 5.0 * w,
            lipschitz_k=5.0,
        )
        traj = simulate(problem, grid_medium)
        norms = [norm_lp(traj.state(k), 2.0) for k in range(0, len(traj), 100)]
        assert all(b < a for a, b in zip(norms, norms[1:]))
        expected = math.exp(-(PI2 - 5.0) * traj.times[-1])
        final_ratio = norm_lp(traj.final_state, 2.0) / norms[0]
        assert final_ratio == pytest.approx(expected, rel=0.05)

    def test_grid_mismatch_rejected(self, grid_small, grid_medium):
        problem = heat_problem(grid_small, lambda z: np.zeros_like(z))
        with pytest.raises(InvalidParameterError):
            simulate(problem, grid_medium)


class TestControlSystemAxioms:
    def _disturbed_problem(self, grid, seed):
        rng = np.random.default_rng(seed)
        times = grid.times()
        amp, omega = rng.uniform(0.2, 1.0), rng.uniform(2.0, 12.0)
        d0 = BoundarySignal.sampled(times, amp * np.sin(omega * times))
        d1 = BoundarySignal.constant(rng.uniform(-0.5, 0.5))
        z = grid.nodes
        x0 = d0(0.0) * (1 - z) + d1(0.0) * z + rng.uniform(0.3, 1.0) * np.sin(np.pi * z)
        return SemilinearProblem(
            a=1.0, initial=Field(x0, grid), boundary_left=d0, boundary_right=d1
        )

    def test_identity_axiom_bitwise(self, grid_small):
        problem = self._disturbed_problem(grid_small, 1)
        traj = simulate(problem, grid_small)
        assert np.array_equal(traj.data[0], problem.initial.values)

    def test_causality_bitwise(self, grid_small):
        problem = self._disturbed_problem(grid_small, 2)
        traj_a = simulate(problem, grid_small)
        # alter the left signal strictly after t_cut
        t_cut = 0.1
        times = problem.boundary_left.sample_times
        values = problem.boundary_left.sample_values.copy()
        values[times > t_cut] += 5.0
        altered = problem.with_data(
            problem.initial, BoundarySignal.sampled(times, values), problem.boundary_right
        )
        traj_b = simulate(altered, grid_small)
        prefix = traj_a.times <= t_cut + 1e-15
        assert np.array_equal(traj_a.data[prefix], traj_b.data[prefix])
        assert not np.array_equal(traj_a.data, traj_b.data)

    def test_cocycle_restart(self, grid_small):
        problem = self._disturbed_problem(grid_small, 3)
        full = simulate(problem, grid_small)
        k_mid = len(full) // 2
        t_mid = float(full.times[k_mid])
        rest_grid = Grid1D(
            n_interior=grid_small.n_interior, dt=grid_small.dt,
            t_final=grid_small.t_final - t_mid,
        )
        restarted_problem = SemilinearProblem(
            a=problem.a,
            initial=Field(full.data[k_mid], rest_grid),
            boundary_left=problem.boundary_left.shifted(t_mid),
            boundary_right=problem.boundary_right.shifted(t_mid),
        )
        restarted = simulate(restarted_problem, rest_grid)
        tail = full.data[k_mid : k_mid + len(restarted)]
        assert np.max(np.abs(restarted.data - tail)) < 1e-12


class TestComparisonPrinciple:
    def test_ordered_initial_data_stays_ordered(self, grid_small):
        low = simulate(heat_problem(grid_small, lambda z: np.zeros_like(z)), grid_small)
        high = simulate(heat_problem(grid_small, lambda z: np.sin(np.pi * z)), grid_small)
        report = check_ordering(low, high, tol=1e-12)
        assert report.passed

    def test_ordered_inputs_give_ordered_trajectories(self, grid_small):
        base = heat_problem(grid_small, lambda z: np.zeros_like(z))
        lower = base.with_data(
            Field.from_function(grid_small, lambda z: -0.5 * np.ones_like(z)),
            BoundarySignal.constant(-0.5), BoundarySignal.constant(-0.5),
        )
        report = check_ordering(simulate(lower, grid_small), simulate(base, grid_small), tol=1e-12)
        assert report.passed


class TestResidual:
    def test_zero_trajectory(self, grid_small):
        problem = heat_problem(grid_small, lambda z: np.zeros_like(z))
        assert residual(problem, simulate(problem, grid_small)) == 0.0

    def test_exact_solution_residual_small(self):
        # residual of the injected analytic eigen-solution is quadrature-level
        grid = Grid1D(n_interior=99, dt=1e-4, t_final=0.05)
        times = grid.times()
        data = np.exp(-PI2 * times)[:, None] * np.sin(np.pi * grid.nodes)[None, :]
        from iss_parabolic import Trajectory

        traj = Trajectory(
            grid=grid, times=times, data=data,
            boundary_left=data[:, 0], boundary_right=data[:, -1],
        )
        problem = heat_problem(grid, lambda z: np.sin(np.pi * z))
        # truncation error of central differences on the smooth solution
        assert residual(problem, traj) < PI2**2 * (grid.h**2 + grid.dt)

    def test_refinement_drops_residual(self):
        values = []
        for n, dt in ((49, 4e-4), (99, 1e-4)):
            grid = Grid1D(n_interior=n, dt=dt, t_final=0.05)
            problem = heat_problem(grid, lambda z: np.sin(np.pi * z))
            values.append(residual(problem, simulate(problem, grid)))
        assert values[0] / values[1] >= 1.8


class TestCsvExport:
    def test_header_rows_and_determinism(self, tmp_path, grid_small):
        problem = heat_problem(grid_small, lambda z: np.sin(np.pi * z))
        traj = simulate(problem, grid_small)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trajectory_csv(traj, p1)
        write_trajectory_csv(traj, p2)
        lines = p1.read_text().splitlines()
        assert lines[0] == "t,z,value"
        assert len(lines) == 1 + len(traj) * grid_small.n_nodes
        assert p1.read_bytes() == p2.read_bytes()
