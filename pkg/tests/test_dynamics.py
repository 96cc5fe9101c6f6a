"""Nonlinear term, time stepper, and solution-operator properties."""

import numpy as np
import pytest

from conftest import raw_field
from pe3d.dynamics import (SimState, SimulationParams, _implicit_diffusion,
                           cfl_dt, nonlinear_B, solve_S, step)
from pe3d.errors import DivergenceError, InputError
from pe3d.fields import HorizontalField, apply_bc
from pe3d.grid import GridSpec
from pe3d.norms import inner_H, norm_H, norm_V
from pe3d.projection import project_H
from pe3d.sampling import random_smooth_field


@pytest.fixture(scope="module")
def smooth8():
    grid = GridSpec(n1=8, n2=8, nz=8)
    return project_H(random_smooth_field(np.random.default_rng(7), grid))


class TestSimulationParams:
    @pytest.mark.parametrize("kw", [dict(nu=0.0), dict(cfl=1.5),
                                    dict(dt_max=-1.0),
                                    dict(forcing_mode="impulsive"),
                                    dict(forcing_mode="constant")])
    def test_invalid_rejected(self, kw):
        with pytest.raises(InputError):
            SimulationParams(**kw)

    def test_zero_mode_rejects_forcing_field(self, grid8):
        with pytest.raises(InputError):
            SimulationParams(forcing_mode="zero", f=HorizontalField.zeros(grid8))


class TestNonlinearTerm:
    def test_energy_neutrality(self, smooth8):
        # the skew-symmetrized form pairs to zero against the state itself
        B = nonlinear_B(smooth8, smooth8)
        scale = norm_H(smooth8) ** 2 * max(norm_V(smooth8), 1.0)
        assert abs(inner_H(B, smooth8)) < 1e-12 * max(scale, 1.0)

    def test_bilinearity_in_second_argument(self, smooth8):
        w = project_H(random_smooth_field(np.random.default_rng(8), smooth8.grid))
        lhs = nonlinear_B(smooth8, smooth8 + 2.0 * w, check=False)
        rhs = (nonlinear_B(smooth8, smooth8, check=False)
               + 2.0 * nonlinear_B(smooth8, w, check=False))
        assert np.allclose(lhs.data, rhs.data, atol=1e-12)

    def test_zero_state_maps_to_zero(self, grid8):
        z = HorizontalField.zeros(grid8)
        assert np.all(nonlinear_B(z, z).data == 0.0)

    def test_shape_mismatch(self, grid8, grid12, rng):
        with pytest.raises(InputError):
            nonlinear_B(HorizontalField.zeros(grid8),
                        HorizontalField.zeros(grid12))

    def test_bc_check(self, grid8, rng):
        v = raw_field(grid8, rng)
        with pytest.raises(InputError):
            nonlinear_B(v, v, check=True)


class TestImplicitDiffusion:
    def test_matches_dense_solve(self, rng):
        # assemble (I - dt nu lap_bc) column by column on a minimal grid and
        # compare against numpy's direct solver
        grid = GridSpec(n1=4, n2=4, nz=4)
        dt, nu = 0.01, 0.7
        w = apply_bc(raw_field(grid, rng))
        n = w.data.size
        A = np.empty((n, n))
        from pe3d import grid as grid_mod
        from pe3d.dynamics import _zero_dirichlet
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            data = e.reshape(w.data.shape).copy()
            lap = np.stack([grid_mod.laplacian_bc(data[0], grid),
                            grid_mod.laplacian_bc(data[1], grid)])
            A[:, j] = _zero_dirichlet(data - dt * nu * lap).ravel()
        rhs = _zero_dirichlet(w.data.copy()).ravel()
        # restrict to the free (non-Dirichlet) unknowns to keep A invertible
        free = _zero_dirichlet(np.ones_like(w.data)).ravel().astype(bool)
        expected = np.zeros(n)
        expected[free] = np.linalg.solve(A[np.ix_(free, free)], rhs[free])
        got = _implicit_diffusion(w, dt, nu)
        assert np.allclose(got.data.ravel(), expected, rtol=1e-8, atol=1e-10)

    def test_decreases_H_norm(self, smooth8):
        out = _implicit_diffusion(smooth8, 0.05, 1.0)
        assert norm_H(out) < norm_H(smooth8)


class TestStepper:
    def test_cfl_dt_caps_and_scales(self, smooth8):
        params = SimulationParams(dt_max=0.5, cfl=0.4)
        z = HorizontalField.zeros(smooth8.grid)
        assert cfl_dt(z, params) == 0.5
        big = 1e6 * smooth8
        assert cfl_dt(big, params) < 1e-4

    def test_energy_budget_slack_nonpositive(self, smooth8):
        # backward-Euler dissipation gives the inequality a strict margin
        params = SimulationParams(nu=1.0, dt_max=0.01, cfl=0.4)
        state = SimState(t=0.0, v=smooth8)
        for _ in range(5):
            rec = {}
            state = step(state, params, record=rec)
            assert rec["slack"] <= 1e-12 * rec["H2_old"]

    def test_dt_cap_landing(self, smooth8):
        params = SimulationParams(dt_max=0.01, cfl=1.0)
        state = SimState(t=0.0, v=smooth8)
        state = step(state, params, dt_cap=0.0033)
        assert state.t == pytest.approx(0.0033)

    def test_solve_S_deterministic(self, smooth8):
        params = SimulationParams(nu=1.0, dt_max=0.01, cfl=0.4)
        a = solve_S(smooth8, 0.05, params)
        b = solve_S(smooth8, 0.05, params)
        assert np.array_equal(a.data, b.data)

    def test_solve_S_zero_duration(self, smooth8):
        params = SimulationParams()
        out = solve_S(smooth8, 0.0, params)
        assert norm_H(out - smooth8) < 1e-12

    def test_solve_S_negative_duration(self, smooth8):
        with pytest.raises(InputError):
            solve_S(smooth8, -1.0, SimulationParams())

    def test_semigroup_property(self, smooth8):
        # S(t+s) = S(t) S(s) when the step sequence is identical: compare a
        # single run against a checkpointed rerun with matching dt caps
        params = SimulationParams(nu=1.0, dt_max=0.005, cfl=1.0)
        full = solve_S(smooth8, 0.02, params)
        half = solve_S(smooth8, 0.01, params)
        again = solve_S(half, 0.01, params)
        assert norm_H(again - full) < 1e-10 * max(norm_H(full), 1.0)

    def test_constant_forcing_balances(self, grid8):
        # with constant forcing the state approaches a nonzero equilibrium
        f = 0.1 * random_smooth_field(np.random.default_rng(9), grid8)
        params = SimulationParams(nu=1.0, dt_max=0.01, cfl=0.4,
                                  forcing_mode="constant", f=f)
        out = solve_S(HorizontalField.zeros(grid8), 1.0, params)
        assert norm_H(out) > 0.0

    def test_divergence_error_carries_diagnostics(self):
        e = DivergenceError("boom", diagnostics={"t": 1.0})
        assert e.diagnostics["t"] == 1.0
