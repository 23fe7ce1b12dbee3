from __future__ import annotations

import numpy as np
import pytest

from affine_explode import (
    Converged,
    ExplodesBeforeT,
    NotType1,
    double_vol,
    enumerate_equilibria,
    in_S_infinity,
    integrate_ricV,
    manifold_shoot,
    mc_exponential_moment,
    scalar_closed_form,
    transform_value,
)
from affine_explode.oracle import ScalarRiccatiSolution
from oracles import HestonOracle, scalar_blowup_time

ORC = HestonOracle()


class TestScalarClosedForm:
    def test_log_three(self):
        s = scalar_closed_form(1.0, 0.0)
        assert (s.L, s.U) == (0.0, 2.0)
        assert s.t_star(3.0) == pytest.approx(np.log(3.0), rel=1e-15)

    def test_upper_root_never_explodes(self):
        s = scalar_closed_form(1.0, 0.0)
        assert np.isinf(s.t_star(2.0))
        assert s.limit(2.0) == 2.0
        assert s.limit(1.0) == 0.0
        assert np.isinf(s.limit(3.0))

    @pytest.mark.parametrize("kappa,g", [(1.0, 0.0), (1.0, 0.5), (1.0, 2.0), (-0.5, -1.0)])
    def test_solves_the_equation(self, kappa, g):
        s = ScalarRiccatiSolution(kappa, g)
        v = 0.3
        T = min(1.0, 0.5 * s.t_star(v))
        t = np.linspace(0.0, T, 50)
        y = s.y(t, v)
        assert y[0] == pytest.approx(v, abs=1e-14)
        h = 1e-6
        dy = (s.y(t + h, v) - s.y(t - h, v)) / (2 * h)
        np.testing.assert_allclose(dy, 0.5 * y * y - kappa * y + g, rtol=1e-7, atol=1e-8)

    @pytest.mark.parametrize("kappa,g,v", [(1.0, 0.0, 3.0), (1.0, 0.5, 2.0), (0.5, 1.0, -1.0), (2.0, -1.0, 10.0)])
    def test_blowup_time_agrees_with_test_oracle(self, kappa, g, v):
        assert scalar_closed_form(kappa, g).t_star(v) == pytest.approx(scalar_blowup_time(kappa, g, v), rel=1e-14)

    def test_matches_integrator(self, hest):
        # at w = 0 the canonical Heston equation is exactly the scalar one
        s = scalar_closed_form(1.0, 0.0)
        traj = integrate_ricV(hest.model, [1.5], [0.0])
        assert isinstance(traj.status, Converged)
        assert traj.status.limit[0] == pytest.approx(s.limit(1.5), abs=1e-9)
        np.testing.assert_allclose(traj.y[:, 0], s.y(traj.t, 1.5), atol=1e-8)


class TestMonteCarlo:
    def test_zero_exponent_is_exact(self, hest):
        est = mc_exponential_moment(hest.model, [0.0, 0.0], hest.equity.X0, 1.0, n_paths=2000, dt=0.01, seed=1)
        assert est.mean == 1.0 and est.stderr == 0.0

    def test_martingale(self, hest):
        th, X0 = hest.equity.theta, hest.equity.X0
        est = mc_exponential_moment(hest.model, th, X0, 1.0, n_paths=40_000, dt=0.01, seed=2)
        assert abs(est.mean - np.exp(th @ X0)) <= 3.0 * est.stderr

    def test_matches_transform(self, hest):
        u, X0 = np.array([0.0, 0.5]), hest.equity.X0
        exact = transform_value(hest.model, u, X0, 1.0).moment
        est = mc_exponential_moment(hest.model, u, X0, 1.0, n_paths=40_000, dt=0.005, seed=3)
        assert abs(est.mean - exact) <= 3.0 * est.stderr

    def test_dependent_noise(self):
        p = double_vol()
        u = 0.5 * p.equity.theta
        exact = transform_value(p.model, u, p.equity.X0, 1.0).moment
        est = mc_exponential_moment(p.model, u, p.equity.X0, 1.0, n_paths=40_000, dt=0.005, seed=4)
        assert abs(est.mean - exact) <= 3.0 * est.stderr

    def test_stderr_scales_with_paths(self, hest):
        u, X0 = np.array([0.0, 0.5]), hest.equity.X0
        a = mc_exponential_moment(hest.model, u, X0, 1.0, n_paths=5_000, dt=0.02, seed=5)
        b = mc_exponential_moment(hest.model, u, X0, 1.0, n_paths=80_000, dt=0.02, seed=5)
        assert a.stderr / b.stderr == pytest.approx(4.0, rel=0.15)

    def test_reproducible(self, hest):
        args = (hest.model, [0.0, 0.5], hest.equity.X0, 1.0)
        a = mc_exponential_moment(*args, n_paths=3000, dt=0.02, seed=9, chunk=1024)
        b = mc_exponential_moment(*args, n_paths=3000, dt=0.02, seed=9, chunk=1024)
        c = mc_exponential_moment(*args, n_paths=3000, dt=0.02, seed=10, chunk=1024)
        assert (a.mean, a.stderr) == (b.mean, b.stderr)
        assert a.mean != c.mean
        assert a.generator == "numpy.PCG64"

    def test_refuses_infinite_moment(self, hest):
        with pytest.raises(ExplodesBeforeT):
            mc_exponential_moment(hest.model, [ORC.U(1.0) + 5.0, 1.0], hest.equity.X0, 5.0, n_paths=10)


class TestManifold:
    def test_heston_is_a_point(self, hest):
        pts = manifold_shoot(hest.model, [0.7], [ORC.U(0.7)])
        assert pts.shape == (1, 1)
        assert pts[0, 0] == pytest.approx(ORC.U(0.7), abs=1e-14)

    def test_points_are_on_the_boundary(self):
        p = double_vol()
        w = [0.5]
        nu = next(e.nu for e in enumerate_equilibria(p.model, w) if e.kind.label == "unstable")
        pts = manifold_shoot(p.model, w, nu, radius=1.0, n_points=41)
        assert pts.shape == (41, 2)
        # uniform arc-length samples pass nu within half a spacing
        spacing = np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1))
        assert np.min(np.linalg.norm(pts - nu, axis=1)) <= 0.5 * spacing + 1e-12
        for x in pts[::5]:
            v = in_S_infinity(p.model, np.concatenate([x, w]))
            assert v.region == "boundary"
            np.testing.assert_allclose(v.certificate, nu, atol=1e-12)

    def test_needs_type_one(self, hest):
        with pytest.raises(NotType1):
            manifold_shoot(hest.model, [0.7], [ORC.L(0.7)])
