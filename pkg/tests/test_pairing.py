"""Pairings of propagator-power kernels against bump test functions.

Every numeric route is validated against an estimator that shares no
code with the package: plain or importance-sampled Monte Carlo over
balls, or a raw scipy quadrature for the radial cutoff identities.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from eucren.errors import (
    DomainError,
    NonIntegrableSingularity,
    UnsupportedCase,
)
from eucren.functionals import TestFunction
from eucren.kernels import CutoffFunction, ExtensionSpec, PropFactor, ScalarDistribution
from eucren.propagator import Propagator, pair
from eucren.quadrature import QuadratureScheme
from eucren.triple import analytic_field, grid_field, pair_three, triple_pairing

from helpers import mc_ball, mc_pair, mc_pair_radial, mc_triple

M = 1.0


def single(power, extension=None, **deco):
    return ScalarDistribution(2, 3, M, (PropFactor(0, 1, power, extension=extension, **deco),))


class TestTwoPoint:
    f = TestFunction(3, (0.0, 0.0, 0.0), 1.0)
    g_far = TestFunction(3, (2.5, 0.0, 0.0), 1.0, amplitude=0.7)
    g_near = TestFunction(3, (0.6, 0.0, 0.0), 0.8, amplitude=1.3)

    def test_disjoint_propagator_vs_mc(self):
        val = pair(single(1), (self.f, self.g_far))
        ref, err = mc_pair(Propagator(3, M), 3, self.f.center, 1.0, self.f,
                           self.g_far.center, 1.0, self.g_far, seed=1)
        assert abs(val - ref) < max(4.0 * err, 1e-2 * abs(ref))

    def test_radial_and_tensor_routes_agree(self):
        t = single(1)
        v_rad = pair(t, (self.f, self.g_far))
        v_ten = pair(t, (self.f, self.g_far), method="tensor")
        np.testing.assert_allclose(v_ten, v_rad, rtol=2e-5)

    def test_overlapping_square_vs_importance_mc(self):
        # P^2 is integrable in d = 3; plain MC has unbounded variance
        val = pair(single(2), (self.f, self.g_near))
        ref, err = mc_pair_radial(
            Propagator(3, M).power_callable(2), 3, self.f.center, 1.0,
            self.f, self.g_near.center, 0.8, self.g_near, n=800_000, seed=2)
        assert abs(val - ref) < max(4.0 * err, 1e-2 * abs(ref))

    def test_overlapping_cube_rejected(self):
        with pytest.raises(NonIntegrableSingularity):
            pair(single(3), (self.f, self.g_near))

    def test_disjoint_cube_vs_mc(self):
        val = pair(single(3), (self.f, self.g_far))
        ref, err = mc_pair(Propagator(3, M).power_callable(3), 3,
                           self.f.center, 1.0, self.f,
                           self.g_far.center, 1.0, self.g_far, seed=3)
        assert abs(val - ref) < max(4.0 * err, 1e-2 * abs(ref))

    def test_amplitude_homogeneity(self):
        base = pair(single(2), (self.f, self.g_near))
        scaled = pair(single(2), (TestFunction(3, self.f.center, 1.0, amplitude=3.0),
                                  self.g_near))
        np.testing.assert_allclose(scaled, 3.0 * base, rtol=1e-12)

    def test_decorated_kernel_moves_derivatives_onto_tests(self):
        # <d_x^a d_y^b P, f x g> = <P, (-1)^|a| d^a f x (-1)^|b| d^b g>
        t = single(1, left_deriv=(1, 0, 0), right_deriv=(0, 1, 0))
        val = pair(t, (self.f, self.g_far))
        # the two signs (-1)^|a| (-1)^|b| cancel here
        df = self.f.to_field().diff((1, 0, 0))
        dg = self.g_far.to_field().diff((0, 1, 0))
        ref, err = mc_pair(Propagator(3, M), 3, self.f.center, 1.0, df,
                           self.g_far.center, 1.0, dg, n=800_000, seed=4)
        assert abs(val - ref) < max(4.0 * err, 2e-2 * abs(ref))

    def test_renormalized_cube_cutoff_change_identity(self):
        # moving the cutoff radius is exactly compensated by shifting
        # the order-0 counterterm with <P^3, w' - w>
        p3 = Propagator(3, M).power_callable(3)
        w_old = CutoffFunction(3, radius=0.6)
        w_new = CutoffFunction(3, radius=1.0)
        shift = 4.0 * np.pi * quad(
            lambda r: r * r * float(p3(np.float64(r)))
            * (float(w_new.profile(r)) - float(w_old.profile(r))),
            0.0, 1.0, limit=200)[0]
        t_old = single(3, extension=ExtensionSpec(w_old))
        t_new = single(3, extension=ExtensionSpec(w_new).with_counterterms(
            {(0, 0, 0): shift}))
        v_old = pair(t_old, (self.f, self.g_near))
        v_new = pair(t_new, (self.f, self.g_near))
        np.testing.assert_allclose(v_new, v_old, rtol=1e-6, atol=1e-10)

    def test_counterterm_adds_delta_pairing(self):
        # c delta(z) contributes c int f(x) g(x) dx in relative coords
        spec = ExtensionSpec(CutoffFunction(3, radius=0.6))
        base = pair(single(3, extension=spec), (self.f, self.g_near))
        bumped = pair(single(3, extension=spec.with_counterterms(
            {(0, 0, 0): 2.0})), (self.f, self.g_near))
        ref, err = mc_ball(
            lambda x: np.asarray(self.f(x)) * np.asarray(self.g_near(x)),
            3, self.g_near.center, 0.8, seed=5)
        assert abs((bumped - base) - 2.0 * ref) < max(4.0 * err, 1e-6)

    def test_mismatched_test_count_rejected(self):
        with pytest.raises(DomainError):
            pair(single(1), (self.f,))


class TestThreePoint:
    f0 = TestFunction(3, (0.0, 0.0, 0.0), 1.0)
    f1 = TestFunction(3, (0.0, 0.0, 0.0), 0.9, amplitude=1.1)
    f2 = TestFunction(3, (0.0, 0.0, 0.0), 1.2, amplitude=0.8)

    def path(self, p01, p12):
        return ScalarDistribution(
            3, 3, M, (PropFactor(0, 1, p01), PropFactor(1, 2, p12)))

    def test_path_vs_mc(self):
        a = TestFunction(3, (-2.0, 0.0, 0.0), 0.8)
        piv = TestFunction(3, (0.0, 0.0, 0.0), 1.0, amplitude=1.2)
        b = TestFunction(3, (2.2, 0.0, 0.0), 0.9)
        val = pair(self.path(1, 1), (a, piv, b))
        prop = Propagator(3, M)
        one = lambda s: np.ones_like(np.asarray(s, dtype=float))
        ref, err = mc_triple(prop, one, prop, 3, (a, piv, b),
                             n=1_500_000, seed=1)
        assert abs(val - ref) < max(4.0 * err, 1e-2 * abs(ref))

    def test_path_with_square_leg_vs_mc(self):
        a = TestFunction(3, (-2.2, 0.0, 0.0), 1.0)
        piv = TestFunction(3, (0.0, 0.0, 0.0), 1.0)
        b = TestFunction(3, (2.2, 0.0, 0.0), 1.0, amplitude=0.9)
        val = pair(self.path(2, 1), (a, piv, b))
        prop = Propagator(3, M)
        one = lambda s: np.ones_like(np.asarray(s, dtype=float))
        ref, err = mc_triple(prop.power_callable(2), one, prop, 3,
                             (a, piv, b), n=1_500_000, seed=2)
        assert abs(val - ref) < max(4.0 * err, 1e-2 * abs(ref))

    def test_concentric_triangle_vs_mc(self):
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 1),
                                         PropFactor(0, 2, 1),
                                         PropFactor(1, 2, 1)))
        val = pair_three(t, (self.f0, self.f1, self.f2))
        prop = Propagator(3, M)
        ref, err = mc_triple(prop, prop, prop, 3, (self.f0, self.f1, self.f2),
                             n=2_000_000, seed=3)
        assert abs(val - ref) < max(4.0 * err, 2e-2 * abs(ref))

    def test_triangle_pivot_choice_is_internal(self):
        # calling the reduction directly with a different vertex order
        # must reproduce the dispatched value
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 1),
                                         PropFactor(0, 2, 1),
                                         PropFactor(1, 2, 1)))
        val = pair_three(t, (self.f0, self.f1, self.f2))
        field = grid_field(self.f0, self.f1, self.f2)
        direct = triple_pairing(M, (1, 1, 1), None, None, field)
        np.testing.assert_allclose(direct, val, rtol=5e-5)

    def test_bare_divergent_joint_locus_rejected(self):
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 2),
                                         PropFactor(0, 2, 2),
                                         PropFactor(1, 2, 2)))
        with pytest.raises(NonIntegrableSingularity):
            pair_three(t, (self.f0, self.f1, self.f2))

    def test_renormalized_triangle_needs_overall_extension(self):
        spec = ExtensionSpec(CutoffFunction(3, radius=0.6))
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 3, extension=spec),
                                         PropFactor(0, 2, 2),
                                         PropFactor(1, 2, 1)))
        with pytest.raises(UnsupportedCase):
            pair_three(t, (self.f0, self.f1, self.f2))

    def worked_example(self, wrad, c_p, Wrad, c_o):
        spec_pair = ExtensionSpec(CutoffFunction(3, radius=wrad)).with_counterterms(
            {(0, 0, 0): c_p})
        spec_over = ExtensionSpec(CutoffFunction(3, radius=Wrad)).with_counterterms(
            {(0, 0, 0): c_o})
        t = ScalarDistribution(
            3, 3, M,
            (PropFactor(0, 1, 3, extension=spec_pair),
             PropFactor(0, 2, 2),
             PropFactor(1, 2, 1)),
            overall=spec_over)
        return pair_three(t, (self.f0, self.f1, self.f2))

    def test_overall_extension_pair_cutoff_stability(self):
        p3 = Propagator(3, M).power_callable(3)
        w_old = CutoffFunction(3, radius=0.6)
        w_new = CutoffFunction(3, radius=1.0)
        shift = 4.0 * np.pi * quad(
            lambda r: r * r * float(p3(np.float64(r)))
            * (float(w_new.profile(r)) - float(w_old.profile(r))),
            0.0, 1.0, limit=200)[0]
        v_old = self.worked_example(0.6, 0.0, 0.8, 0.0)
        v_new = self.worked_example(1.0, shift, 0.8, 0.0)
        np.testing.assert_allclose(v_new, v_old, rtol=0, atol=1e-3 * abs(v_old))

    def test_overall_extension_overall_cutoff_stability(self):
        W_old = CutoffFunction(3, radius=0.8)
        W_new = CutoffFunction(3, radius=1.1)
        dV = lambda r: (np.asarray(W_new.profile(r), dtype=float)
                        - np.asarray(W_old.profile(r), dtype=float))
        spec_pair = ExtensionSpec(CutoffFunction(3, radius=0.6))
        shift = triple_pairing(M, (3, 2, 1), spec_pair, None,
                               analytic_field(dV, 1.1, 1.1))
        v_old = self.worked_example(0.6, 0.0, 0.8, 0.0)
        v_new = self.worked_example(0.6, 0.0, 1.1, shift)
        np.testing.assert_allclose(v_new, v_old, rtol=0, atol=1e-3 * abs(v_old))

    def test_triangle_s_kernel_power_cap(self):
        field = grid_field(self.f0, self.f1, self.f2)
        with pytest.raises(UnsupportedCase):
            triple_pairing(M, (1, 1, 2), None, None, field)

    def test_offset_triangle_unsupported(self):
        shifted = TestFunction(3, (0.3, 0.0, 0.0), 0.9)
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 1),
                                         PropFactor(0, 2, 1),
                                         PropFactor(1, 2, 1)))
        with pytest.raises(UnsupportedCase):
            pair_three(t, (self.f0, shifted, self.f2))


class TestComposite:
    def test_disconnected_kernel_factorizes(self):
        f = TestFunction(3, (0.0, 0.0, 0.0), 1.0)
        g = TestFunction(3, (2.5, 0.0, 0.0), 1.0)
        h = TestFunction(3, (9.0, 0.0, 0.0), 1.1, amplitude=2.0)
        t = ScalarDistribution(3, 3, M, (PropFactor(0, 1, 1),))
        val = pair(t, (f, g, h))
        edge = pair(ScalarDistribution(2, 3, M, (PropFactor(0, 1, 1),)), (f, g))
        np.testing.assert_allclose(val, edge * h.integral(), rtol=1e-9)

    def test_two_disjoint_edges_factorize(self):
        f = TestFunction(3, (0.0, 0.0, 0.0), 1.0)
        g = TestFunction(3, (2.5, 0.0, 0.0), 1.0)
        h = TestFunction(3, (9.0, 0.0, 0.0), 1.0)
        k = TestFunction(3, (12.0, 0.0, 0.0), 1.0, amplitude=0.5)
        t = ScalarDistribution(4, 3, M, (PropFactor(0, 1, 1), PropFactor(2, 3, 2)))
        val = pair(t, (f, g, h, k))
        e1 = pair(single(1), (f, g))
        e2 = pair(single(2), (h, k))
        np.testing.assert_allclose(val, e1 * e2, rtol=1e-9)

    def test_connected_four_point_rejected(self):
        tests = tuple(TestFunction(3, (2.5 * i, 0.0, 0.0), 1.0) for i in range(4))
        t = ScalarDistribution(4, 3, M, (PropFactor(0, 1, 1),
                                         PropFactor(1, 2, 1),
                                         PropFactor(2, 3, 1)))
        with pytest.raises(UnsupportedCase):
            pair(t, tests)
