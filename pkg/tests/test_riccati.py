from __future__ import annotations

import numpy as np
import pytest

from affine_explode import (
    BlownUp,
    Converged,
    ExplodesBeforeT,
    HorizonReached,
    cascading,
    enumerate_equilibria,
    eta,
    heston,
    integrate_ricV,
    jacobian,
    read_csv,
    rhs_f,
    transform_value,
)
from conftest import random_model, random_w_in_D
from oracles import HestonOracle

ORC = HestonOracle()


class TestVectorField:
    def test_heston_g_by_hand(self, hest):
        np.testing.assert_allclose(hest.model.g([1.0]), [-0.0832], rtol=1e-13)
        np.testing.assert_allclose(rhs_f(hest.model, [0.0], [1.0]), [-0.0832], rtol=1e-13)

    def test_zero_is_a_root_at_w_zero(self, hest):
        assert rhs_f(hest.model, [0.0], [0.0])[0] == 0.0

    def test_heston_matches_scalar_form(self, hest):
        for w in (-1.0, 0.3, 2.0):
            for y in (-1.0, 0.0, 2.5):
                z = y - ORC.shift(w)
                expected = 0.5 * z * z - ORC.k_eff(w) * z + ORC.g_eff(w)
                assert rhs_f(hest.model, [y], [w])[0] == pytest.approx(expected, abs=1e-14)

    def test_eta_is_a_root(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = random_model(rng)
            w = random_w_in_D(m, rng)
            np.testing.assert_allclose(rhs_f(m, eta(m, w), w), 0.0, atol=1e-12)


class TestJacobian:
    def test_heston_at_lower_root(self, hest):
        for w in (-1.0, 0.5, 1.0):
            J = jacobian(hest.model, [ORC.L(w)])
            assert J[0, 0] == pytest.approx(-np.sqrt(ORC.disc(w)), rel=1e-12)

    def test_at_zero_is_A_V(self):
        m = cascading().model
        np.testing.assert_array_equal(jacobian(m, np.zeros(3)), m.A_V)

    def test_cascading_diagonal(self):
        # speeds kappa delta^(i-1) with kappa = 1, delta = 1/2
        m = cascading(m=3, kappa=1.0, delta=0.5).model
        np.testing.assert_allclose(np.diag(jacobian(m, np.zeros(3))), [-1.0, -0.5, -0.25])

    def test_lower_triangular_and_matches_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = random_model(rng)
            y, w = rng.normal(size=m.m), np.zeros(m.n)
            J = jacobian(m, y)
            np.testing.assert_array_equal(J, np.tril(J))
            h = 1e-6
            fd = np.column_stack(
                [(rhs_f(m, y + h * e, w) - rhs_f(m, y - h * e, w)) / (2 * h) for e in np.eye(m.m)]
            )
            np.testing.assert_allclose(J, fd, atol=1e-8)


class TestIntegration:
    def test_below_upper_root_converges_to_lower(self, hest):
        w = 0.5
        traj = integrate_ricV(hest.model, [ORC.U(w) - 0.5], [w])
        assert isinstance(traj.status, Converged)
        assert traj.status.limit[0] == pytest.approx(ORC.L(w), abs=1e-8)

    def test_upper_root_is_held(self, hest):
        w = 0.5
        traj = integrate_ricV(hest.model, [ORC.U(w)], [w])
        assert isinstance(traj.status, Converged)
        assert traj.status.limit[0] == pytest.approx(ORC.U(w), abs=1e-8)

    @pytest.mark.parametrize("w,dv", [(0.5, 0.5), (1.0, 3.0), (-1.0, 10.0)])
    def test_above_upper_root_blows_up_on_time(self, hest, w, dv):
        v = ORC.U(w) + dv
        traj = integrate_ricV(hest.model, [v], [w])
        assert isinstance(traj.status, BlownUp)
        assert traj.status.components == (0,)
        assert traj.status.t_star == pytest.approx(ORC.t_star(v, w), rel=1e-6)

    def test_finite_horizon(self, hest):
        traj = integrate_ricV(hest.model, [0.0], [0.5], horizon=0.25, detect=False)
        assert isinstance(traj.status, HorizonReached)
        assert traj.t[-1] == pytest.approx(0.25)

    def test_trajectory_csv(self, hest):
        traj = integrate_ricV(hest.model, [1.0], [0.5])
        header, rows = read_csv(traj.to_csv())
        assert header == ["t", "y1", "status"]
        np.testing.assert_array_equal([r[1] for r in rows], traj.y[:, 0])

    def test_multidimensional_limit_is_an_equilibrium(self):
        m = cascading().model
        traj = integrate_ricV(m, [0.1, 0.1, 0.1], [0.0])
        assert isinstance(traj.status, Converged)
        eqs = [e.nu for e in enumerate_equilibria(m, [0.0])]
        assert min(np.linalg.norm(traj.status.limit - e) for e in eqs) < 1e-7


class TestTransform:
    @pytest.mark.parametrize("T", [0.5, 2.0, 7.0])
    def test_martingale_exponent(self, hest, T):
        th, X0 = hest.equity.theta, hest.equity.X0
        tv = transform_value(hest.model, th, X0, T)
        assert tv.log_moment == pytest.approx(th @ X0, abs=1e-10)

    def test_zero_exponent(self, hest):
        tv = transform_value(hest.model, [0.0, 0.0], hest.equity.X0, 3.0)
        assert tv.log_moment == 0.0 and tv.moment == 1.0

    def test_closed_form_for_pure_volatility(self, hest):
        # w = 0 gives y' = y^2/2 - y with y(T) in closed form and I = b_V int y
        v, T = 0.5, 1.3
        X0 = hest.equity.X0
        tv = transform_value(hest.model, [v, 0.0], X0, T)
        # y = 2 / (1 - c e^t) and int_0^T y = 2 T - 2 ln((1 - c e^T) / (1 - c))
        c = (v - 2.0) / v
        y_T = 2.0 / (1.0 - c * np.exp(T))
        I = hest.model.b_V[0] * (2.0 * T - 2.0 * np.log((1.0 - c * np.exp(T)) / (1.0 - c)))
        assert tv.y_T[0] == pytest.approx(y_T, rel=1e-10)
        assert tv.log_moment == pytest.approx(I + y_T * X0[0], rel=1e-9)

    def test_explodes_before_T(self, hest):
        with pytest.raises(ExplodesBeforeT):
            transform_value(hest.model, [ORC.U(1.0) + 5.0, 1.0], hest.equity.X0, 5.0)
