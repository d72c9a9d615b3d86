import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import adhesion1d as a
from adhesion1d.discretization import (
    BandedJacobianOperator,
    DenseJacobianOperator,
    _advective_flux_periodic,
)
from adhesion1d.errors import (
    IntegrationFailureError,
    InvalidParameterError,
    UnsuitableDomainError,
)

from conftest import random_density


class TestBuildGrid:
    def test_reference_grid(self):
        g = a.build_grid(5.0, 128, 1.0)
        assert g.n_cells == 640
        assert g.h == pytest.approx(1.0 / 128)
        assert g.nu == 128

    def test_misaligned_radius_rejected(self):
        with pytest.raises(InvalidParameterError, match="integer multiple"):
            a.build_grid(5.0, 128, 0.7)

    def test_small_grid_arithmetic(self):
        g = a.build_grid(2.0, 8, 0.5)
        assert g.n_cells == 16
        assert g.nu == 4

    def test_too_few_cells_per_unit(self):
        with pytest.raises(InvalidParameterError):
            a.build_grid(5.0, 4, 1.0)

    def test_grid_too_small_for_radius(self):
        with pytest.raises(InvalidParameterError):
            a.build_grid(3.0, 8, 1.0)  # 24 cells < 4 nu = 32

    def test_centers_and_interfaces(self):
        g = a.build_grid(2.0, 8, 0.5)
        assert g.centers[0] == pytest.approx(g.h / 2)
        assert g.interfaces[0] == 0.0
        assert g.interfaces[-1] == pytest.approx(2.0)


class TestWeights:
    def test_stencil_antisymmetry(self, small_weights):
        w = small_weights["periodic"].stencil
        assert np.max(np.abs(w + w[::-1])) < 1e-15
        assert abs(np.sum(w)) < 1e-14

    def test_constant_field_zero_velocity_periodic(self, small_weights):
        u = np.full(160, 3.7)
        vel = a.apply_nonlocal(small_weights["periodic"], u)
        assert np.max(np.abs(vel)) < 1e-12

    def test_noflux_wall_rows_identically_zero(self, small_weights):
        w = small_weights["noflux"]
        assert np.all(w.rows_left[0] == 0.0)
        assert np.all(w.rows_right[-1] == 0.0)

    def test_boundary_row_support_width(self, small_grid, small_weights):
        # rows strictly inside the boundary region touch at most 2R/h + 1 cells
        cap = 2 * small_grid.nu + 1
        for w in small_weights.values():
            for row in list(w.rows_left) + list(w.rows_right):
                assert np.count_nonzero(row) <= cap

    def test_dense_row_matches_stencil_at_interior(self, small_grid, small_weights):
        w = small_weights["noflux"]
        n, nu = small_grid.n_cells, small_grid.nu
        for j in (2 * nu, n // 2, n - 2 * nu):
            row = a.nonlocal_row(small_grid, w.domain, w.kernel, j)
            dense_window = row[j - nu - 1: j + nu + 1]
            assert np.allclose(dense_window, w.stencil[::-1], atol=1e-13)

    def test_unsuitable_domain_refused(self, small_grid, uniform_kernel):
        bad = a.SamplingDomain(
            kind=a.DomainKind.NAIVE,
            f1=lambda x: np.where(np.asarray(x) <= 1.0, np.asarray(x) - 1.0, -1.0),
            f2=lambda x: np.where(np.asarray(x) < 4.0, 1.0, 5.0 - np.asarray(x)),
            L=5.0,
            R=1.0,
        )
        with pytest.raises(UnsuitableDomainError):
            a.precompute_weights(small_grid, bad, uniform_kernel)

    def test_tent_kernel_weights_also_match_oracle(self, small_grid, tent_kernel):
        dom = a.make_sampling_domain("noflux", 5.0, 1.0)
        w = a.precompute_weights(small_grid, dom, tent_kernel)
        u = random_density(small_grid.n_cells, seed=11)
        fast = a.apply_nonlocal(w, u)
        oracle = a.eval_nonlocal_direct_many(u, dom, tent_kernel, small_grid.interfaces)
        assert np.max(np.abs(fast - oracle)) < 1e-10


class TestApplyNonlocal:
    @pytest.mark.parametrize("kind", ["periodic", "naive", "noflux", "wall_interaction"])
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=10)
    def test_matches_direct_oracle(self, small_grid, domains, small_weights, uniform_kernel, kind, seed):
        u = random_density(small_grid.n_cells, seed=seed, amp=1.0)
        fast = a.apply_nonlocal(small_weights[kind], u)
        oracle = a.eval_nonlocal_direct_many(u, domains[kind], uniform_kernel, small_grid.interfaces)
        assert np.max(np.abs(fast - oracle)) <= 1e-6 * (1.0 + np.max(np.abs(u)))

    @pytest.mark.parametrize("kind", ["periodic", "naive", "noflux", "wall_interaction"])
    def test_fft_and_dense_paths_agree(self, small_grid, small_weights, kind):
        u = random_density(small_grid.n_cells, seed=5, amp=1.0)
        fast = a.apply_nonlocal(small_weights[kind], u, use_fft=True)
        dense = a.apply_nonlocal(small_weights[kind], u, use_fft=False)
        assert np.max(np.abs(fast - dense)) < 1e-10

    def test_oracle_equivalence_across_resolutions(self, uniform_kernel):
        for npu in (16, 32, 128):
            grid = a.build_grid(5.0, npu, 1.0)
            dom = a.make_sampling_domain("naive", 5.0, 1.0)
            w = a.precompute_weights(grid, dom, uniform_kernel)
            u = random_density(grid.n_cells, seed=npu)
            fast = a.apply_nonlocal(w, u)
            oracle = a.eval_nonlocal_direct_many(u, dom, uniform_kernel, grid.interfaces)
            assert np.max(np.abs(fast - oracle)) <= 1e-6 * (1.0 + np.max(np.abs(u)))

    def test_step_field_velocity_points_toward_mass(self, small_grid, small_weights):
        # plateau of density on [0, L/2): at the left wall the naive slice
        # sees interior mass only (velocity into the domain); just left of
        # the plateau edge the velocity points back into the bulk
        u = np.where(small_grid.centers < 2.5, 1.0, 0.0)
        vel = a.apply_nonlocal(small_weights["naive"], u)
        assert vel[1] > 0
        j_edge = int(2.4 / small_grid.h)
        assert vel[j_edge] < 0

    def test_length_mismatch_rejected(self, small_weights):
        with pytest.raises(InvalidParameterError):
            a.apply_nonlocal(small_weights["periodic"], np.ones(7))

    def test_wall_offsets_added(self, small_grid, small_weights):
        u = np.ones(small_grid.n_cells)
        vel = a.apply_nonlocal(small_weights["wall_interaction"], u)
        # left wall: naive slice gives +1/2, beta0=1.5 wall term gives -0.75
        assert vel[0] == pytest.approx(0.5 - 0.75, abs=1e-12)


class TestDiffusiveFlux:
    def test_constant_field(self, small_grid):
        g = a.diffusive_flux(small_grid, np.ones(small_grid.n_cells), a.FluxBC.NEUMANN)
        assert np.all(g == 0.0)

    def test_linear_field_neumann(self, small_grid):
        u = small_grid.centers.copy()
        g = a.diffusive_flux(small_grid, u, a.FluxBC.NEUMANN)
        assert np.allclose(g[1:-1], 1.0, atol=1e-12)
        assert g[0] == 0.0 and g[-1] == 0.0

    def test_cosine_gradient_second_order(self):
        errs = []
        for npu in (16, 32):
            grid = a.build_grid(5.0, npu, 1.0)
            u = np.cos(np.pi * grid.centers / 5.0)
            g = a.diffusive_flux(grid, u, a.FluxBC.NEUMANN)
            exact = -(np.pi / 5.0) * np.sin(np.pi * grid.interfaces / 5.0)
            errs.append(np.max(np.abs(g[1:-1] - exact[1:-1])))
        assert errs[0] / errs[1] > 3.0  # O(h^2)

    def test_periodic_wraps(self, small_grid):
        u = random_density(small_grid.n_cells, seed=2)
        g = a.diffusive_flux(small_grid, u, a.FluxBC.PERIODIC)
        assert g[0] == pytest.approx((u[0] - u[-1]) / small_grid.h)
        assert g[0] == g[-1]


class TestAdvectiveFluxLimited:
    def test_constant_density_exact(self, small_grid):
        u = np.full(small_grid.n_cells, 2.0)
        vel = np.sin(np.arange(small_grid.n_cells + 1.0))
        f = a.advective_flux_limited(small_grid, u, vel, alpha=1.3)
        assert np.allclose(f, 1.3 * vel * 2.0, atol=1e-14)

    def test_zero_wall_velocity_zero_wall_flux(self, small_grid):
        u = random_density(small_grid.n_cells, seed=4)
        vel = np.ones(small_grid.n_cells + 1)
        vel[0] = vel[-1] = 0.0
        f = a.advective_flux_limited(small_grid, u, vel, alpha=2.0)
        assert f[0] == 0.0 and f[-1] == 0.0

    def test_forward_euler_positivity_under_cfl(self, small_grid):
        # 1000 random non-negative fields, velocity >= 0, CFL = 1/2
        n, h = small_grid.n_cells, small_grid.h
        for seed in range(1000):
            rng = np.random.Generator(np.random.Philox(seed))
            u = np.maximum(rng.normal(0.5, 0.6, n), 0.0)
            u[rng.integers(0, n)] += 5.0  # spike
            vel = np.abs(rng.normal(0.0, 1.0, n + 1))
            alpha = 1.0
            dt = 0.5 * h / np.max(alpha * vel)
            f = a.advective_flux_limited(small_grid, u, vel, alpha)
            f[0] = f[-1] = 0.0
            u_new = u - dt * (f[1:] - f[:-1]) / h
            assert np.min(u_new) >= -1e-13

    def test_reduces_to_first_order_at_extrema(self, small_grid):
        n = small_grid.n_cells
        u = np.zeros(n)
        u[n // 2] = 1.0  # isolated spike: faces around it must use donor value
        vel = np.ones(n + 1)
        f = a.advective_flux_limited(small_grid, u, vel, alpha=1.0)
        assert f[n // 2] == pytest.approx(0.0)        # upwind of the spike
        assert f[n // 2 + 1] == pytest.approx(1.0)    # donor value at the spike


class TestRhs:
    def test_constant_periodic_steady(self, small_grid, small_weights):
        out = a.rhs(small_grid, small_weights["periodic"], np.ones(160), 1.0, 3.25, a.FluxBC.PERIODIC)
        assert np.max(np.abs(out.du_dt)) < 1e-12

    def test_constant_noflux_not_steady_but_conservative(self, small_grid, small_weights):
        out = a.rhs(small_grid, small_weights["noflux"], np.ones(160), 1.0, 3.25, a.FluxBC.NEUMANN)
        assert np.max(np.abs(out.du_dt)) > 1e-3  # active near the walls
        nu = small_grid.nu
        assert np.max(np.abs(out.du_dt[nu + 1: -nu - 1])) < 1e-12  # interior untouched
        assert abs(small_grid.h * np.sum(out.du_dt)) < 1e-12

    @pytest.mark.parametrize("kind,bc", [
        ("periodic", a.FluxBC.PERIODIC),
        ("naive", a.FluxBC.NEUMANN),
        ("noflux", a.FluxBC.NEUMANN),
        ("wall_interaction", a.FluxBC.NEUMANN),
    ])
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=10)
    def test_mass_derivative_telescopes(self, small_grid, small_weights, kind, bc, seed):
        u = random_density(160, seed=seed)
        out = a.rhs(small_grid, small_weights[kind], u, 1.0, 5.0, bc)
        assert abs(small_grid.h * np.sum(out.du_dt)) < 1e-12

    def test_non_finite_density_rejected(self, small_grid, small_weights):
        u = np.ones(160)
        u[3] = np.nan
        with pytest.raises(IntegrationFailureError):
            a.rhs(small_grid, small_weights["periodic"], u, 1.0, 1.0, a.FluxBC.PERIODIC)


class TestJacobian:
    def test_banded_matches_dense_solve(self, small_grid, small_weights):
        prob = a.AdhesionProblem(small_grid, small_weights["noflux"], 1.0, 3.25, a.FluxBC.NEUMANN)
        u = random_density(160, seed=9)
        J = prob.jacobian_matrix(u).copy()
        op = BandedJacobianOperator(J, small_grid.nu + 1)
        b = random_density(160, seed=10, non_negative=False)
        x = op.solve_shifted(0.01, b)
        x_ref = np.linalg.solve(np.eye(160) - 0.01 * J, b)
        assert np.max(np.abs(x - x_ref)) < 1e-12
        assert np.allclose(op.matvec(b), J @ b)

    def test_dense_operator_solve(self, small_grid, small_weights):
        prob = a.AdhesionProblem(small_grid, small_weights["periodic"], 1.0, 3.25, a.FluxBC.PERIODIC)
        u = random_density(160, seed=9)
        J = prob.jacobian_matrix(u).copy()
        op = DenseJacobianOperator(J)
        b = random_density(160, seed=10, non_negative=False)
        x = op.solve_shifted(-0.02, b)
        assert np.max(np.abs(x - np.linalg.solve(np.eye(160) + 0.02 * J, b))) < 1e-12

    @pytest.mark.parametrize("kind,bc", [
        ("periodic", a.FluxBC.PERIODIC),
        ("noflux", a.FluxBC.NEUMANN),
    ])
    def test_columns_sum_to_zero(self, small_grid, small_weights, kind, bc):
        # conservation: every Jacobian column sums to zero
        prob = a.AdhesionProblem(small_grid, small_weights[kind], 1.0, 4.0, bc)
        u = random_density(160, seed=13)
        J = prob.jacobian_matrix(u)
        assert np.max(np.abs(J.sum(axis=0))) < 1e-9

    def test_jacobian_approximates_rhs_derivative(self, small_grid, small_weights):
        # directional finite difference on a smooth (limiter-inactive) state
        prob = a.AdhesionProblem(small_grid, small_weights["periodic"], 1.0, 2.0, a.FluxBC.PERIODIC)
        u = 1.0 + 0.01 * np.sin(2 * np.pi * small_grid.centers / 5.0)
        v = np.sin(4 * np.pi * small_grid.centers / 5.0)
        J = prob.jacobian_matrix(u)
        eps = 1e-7
        fd = (prob.rhs(u + eps * v) - prob.rhs(u - eps * v)) / (2 * eps)
        err = np.max(np.abs(J @ v - fd)) / np.max(np.abs(fd))
        assert err < 2e-2  # limiter linearised as first-order upwind


class TestSymmetryPreservation:
    def test_noflux_symmetric_state_stays_symmetric(self, uniform_kernel):
        grid = a.build_grid(5.0, 128, 1.0)
        dom = a.make_sampling_domain("noflux", 5.0, 1.0)
        w = a.precompute_weights(grid, dom, uniform_kernel)
        prob = a.AdhesionProblem(grid, w, 1.0, 3.25, a.FluxBC.NEUMANN)
        u0 = 1.0 + 0.3 * np.cos(2 * np.pi * grid.centers / 5.0)
        s0 = a.State(0.0, u0, grid.h * np.sum(u0))
        cfg = a.IntegratorConfig(t_final=1.0, output_times=[1.0])
        traj, _ = a.integrate(s0, prob.rhs, cfg, jac_fn=prob.jacobian)
        u = traj[-1].u
        assert np.max(np.abs(u - u[::-1])) < 1e-8
