from __future__ import annotations

import numpy as np
import pytest

from affine_explode import (
    NotAnEquilibrium,
    NotInD,
    canonical_from_blocks,
    cascading,
    classify,
    enumerate_equilibria,
    eta,
    eta_derivative,
    fD_membership,
    heston,
    rhs_f,
)
from conftest import random_model, random_w_in_D
from oracles import HestonOracle

ORC = HestonOracle()


def planar_example(a: float):
    """``y' = (y1^2, y2^2)/2 + [[-a, 0], [1/2, -1]] y`` with ``g = 0``."""
    return canonical_from_blocks([[-a, 0.0], [0.5, -1.0]], np.zeros((2, 0)), np.zeros((0, 0)), [0.0, 0.0], np.zeros((3, 0, 0)))


class TestEta:
    def test_zero(self):
        for p in (heston(), cascading()):
            np.testing.assert_array_equal(eta(p.model, np.zeros(p.model.n)), 0.0)

    def test_heston_at_one_is_rho_sigma(self, hest):
        e = eta(hest.model, [1.0])[0]
        assert e == pytest.approx(1.0 - np.sqrt(1.1664) - 0.08 + 0.08, abs=1e-15)
        assert e == pytest.approx(-0.08, abs=1e-15)
        assert e == pytest.approx(ORC.L(1.0), abs=1e-15)

    def test_outside_domain(self, hest):
        with pytest.raises(NotInD):
            eta(hest.model, [5.0])

    def test_derivative_matches_differences(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            m = random_model(rng, n=2)
            w = 0.5 * random_w_in_D(m, rng)
            d = rng.normal(size=2)
            h = 1e-6
            fd = (eta(m, w + h * d) - eta(m, w - h * d)) / (2 * h)
            np.testing.assert_allclose(eta_derivative(m, w, d), fd, rtol=1e-6, atol=1e-8)

    def test_unique_stable_equilibrium(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            m = random_model(rng)
            w = random_w_in_D(m, rng)
            eqs = enumerate_equilibria(m, w)
            stable = [e for e in eqs if e.kind.is_stable]
            assert len(stable) == 1
            np.testing.assert_allclose(stable[0].nu, eta(m, w), atol=1e-14)
            assert eqs[0] is stable[0]

    def test_eta_precedes_others_lexicographically(self):
        # at the first index where an equilibrium differs from eta it is larger
        rng = np.random.default_rng(23)
        for _ in range(50):
            m = random_model(rng)
            w = random_w_in_D(m, rng)
            e = eta(m, w)
            for q in enumerate_equilibria(m, w)[1:]:
                k = int(np.flatnonzero(np.abs(q.nu - e) > 1e-12)[0])
                assert q.nu[k] > e[k]


class TestEnumeration:
    def test_heston_two_roots(self, hest):
        for w in (-1.0, 0.0, 1.0, 3.0):
            nus = sorted(e.nu[0] for e in enumerate_equilibria(hest.model, [w]))
            np.testing.assert_allclose(nus, [ORC.L(w), ORC.U(w)], atol=1e-14)

    def test_heston_double_root(self):
        # kappa = sigma rho makes the discriminant vanish at w = 1
        p = heston(kappa=0.2, sigma=0.4, rho=0.5)
        o = HestonOracle(kappa=0.2, sigma=0.4, rho=0.5)
        eqs = enumerate_equilibria(p.model, [1.0])
        assert len(eqs) == 1
        assert eqs[0].nu[0] == pytest.approx(o.k_eff(1.0) + o.shift(1.0), abs=1e-12)
        assert eqs[0].kind.label == "nonhyperbolic"

    def test_planar_example(self):
        eqs = enumerate_equilibria(planar_example(0.5), np.zeros(0))
        pts = {tuple(np.round(e.nu, 12)) for e in eqs}
        assert pts == {(0.0, 0.0), (0.0, 2.0), (1.0, 1.0)}
        nonhyp = [e for e in eqs if not e.kind.is_hyperbolic]
        assert len(nonhyp) == 1
        np.testing.assert_allclose(nonhyp[0].nu, [1.0, 1.0])

    @pytest.mark.parametrize("a", [0.2, 0.8, 1.5])
    def test_planar_example_generic_a_is_hyperbolic(self, a):
        eqs = enumerate_equilibria(planar_example(a), np.zeros(0))
        assert all(e.kind.is_hyperbolic for e in eqs)
        assert eqs[0].kind.is_stable
        for e in eqs:
            np.testing.assert_allclose(rhs_f(planar_example(a), e.nu, np.zeros(0)), 0.0, atol=1e-13)

    def test_at_most_two_to_the_index_set(self):
        rng = np.random.default_rng(24)
        for _ in range(50):
            m = random_model(rng)
            w = random_w_in_D(m, rng)
            eqs = enumerate_equilibria(m, w)
            assert 2 <= len(eqs) <= 2 ** len(m.index_set)
            for e in eqs:
                np.testing.assert_allclose(rhs_f(m, e.nu, w), 0.0, atol=1e-11)

    def test_cascading(self):
        m = cascading(m=3, kappa=1.0, delta=0.5).model
        eqs = enumerate_equilibria(m, [0.0])
        assert len(eqs) == 2
        np.testing.assert_array_equal(eqs[0].nu, 0.0)
        np.testing.assert_allclose(eqs[1].nu, [0.0, 0.0, 2.0 * 0.25])
        assert eqs[1].kind.label == "unstable" and eqs[1].kind.type_k == 1

    def test_outside_domain_has_none(self, hest):
        assert enumerate_equilibria(hest.model, [5.0]) == []


class TestClassify:
    def test_heston(self, hest):
        w = 0.7
        assert classify(hest.model, [ORC.L(w)], [w]).is_stable
        k = classify(hest.model, [ORC.U(w)], [w])
        assert (k.label, k.type_k) == ("unstable", 1)
        assert str(k) == "unstable(type 1)"

    def test_not_an_equilibrium(self, hest):
        with pytest.raises(NotAnEquilibrium):
            classify(hest.model, [0.5], [0.7])


class TestMembership:
    def test_zero_is_interior(self):
        for p in (heston(), cascading()):
            assert fD_membership(p.model, np.zeros(p.model.n)).verdict == "interior"

    def test_heston_boundary(self):
        mem = fD_membership(heston(kappa=0.2, sigma=0.4, rho=0.5).model, [1.0])
        assert mem.verdict == "boundary"
        assert mem.index_set_M == (0,)
        assert mem.coupling_ok

    def test_heston_outside(self, hest):
        lo, hi = ORC.domain()
        for w in (hi + 0.01, lo - 0.01, 10.0):
            assert 2 * ORC.g_eff(w) > ORC.k_eff(w) ** 2
            assert fD_membership(hest.model, [w]).verdict == "outside"
        for w in (lo + 0.01, hi - 0.01):
            assert fD_membership(hest.model, [w]).verdict == "interior"
