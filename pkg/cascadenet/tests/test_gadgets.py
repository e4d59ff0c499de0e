import math
import unittest
from dataclasses import replace

import numpy as np

from cascadenet.cascade import omega_mask, residual_Rn
from cascadenet.cpwl import hat, iterate, special_hat
from cascadenet.exceptions import ValidationError
from cascadenet.gadgets import (
    build_chi_hats,
    build_H,
    build_min,
    build_pi,
    build_ramp,
    build_Rhat,
    build_Rhat_power,
    build_special,
    default_params,
    pi_apply,
    product_bound,
    rhat_cpwl,
    rhat_terms,
    special_terms,
)
from cascadenet.masks import builtin


class TestParams(unittest.TestCase):
    def test_schedule(self):
        params = default_params(3, builtin('hat'), special_hat(0.125))
        self.assertEqual(params.alpha1, 0.5 - 2.0 ** -7)
        self.assertEqual(params.beta1, 0.5 - 2.0 ** -8)
        self.assertEqual(params.alpha2, 0.5 - 2.0 ** -11)
        self.assertEqual(params.beta2, 0.5 - 2.0 ** -12)
        self.assertEqual(params.delta0, 2.0 ** -6)
        self.assertEqual((params.alpha_mat, params.beta_mat), (params.alpha1, params.beta1))
        self.assertEqual(params.M, 1.0)
        self.assertEqual(params.to_dict()["n"], 3)

    def test_schedule_validates_for_many_n(self):
        for n in range(1, 12):
            default_params(n, builtin('bspline3'), special_hat(0.125)).validate()

    def test_rejects_inconsistent_params(self):
        params = default_params(2, builtin('hat'), special_hat(0.125))
        with self.assertRaises(ValidationError):
            replace(params, delta0=0.01).validate()
        with self.assertRaises(ValidationError):
            replace(params, alpha1=0.4).validate()
        with self.assertRaises(ValidationError):
            replace(params, M=0.0).validate()
        with self.assertRaises(ValidationError):
            default_params(0, builtin('hat'), special_hat(0.125))

    def test_product_bound_is_a_power_of_two(self):
        H = special_hat(0.125)
        for n in (1, 3, 5):
            M = product_bound(n, builtin('d4'), H)
            self.assertGreaterEqual(M, 1.0)
            self.assertEqual(M, 2.0 ** round(math.log2(M)))
            self.assertLessEqual(product_bound(n, builtin('d4'), H, tight=True), 2.0 * M)


class TestSmoothedResidual(unittest.TestCase):
    def setUp(self):
        self.alpha, self.beta = 0.5 - 2.0 ** -6, 0.5 - 2.0 ** -7

    def test_network_matches_cpwl_everywhere(self):
        f, net = build_Rhat(self.alpha, self.beta)
        xs = np.linspace(-0.5, 1.5, 513)
        np.testing.assert_allclose(net(xs), f(xs), atol=1e-12)
        self.assertEqual((net.width, net.depth), (5, 1))

    def test_agrees_with_residual_outside_buffer(self):
        f, _ = build_Rhat(self.alpha, self.beta)
        self.assertEqual(f(0.25), 0.5)
        self.assertEqual(f(0.75), 0.5)
        self.assertEqual(f(1.0), 1.0)
        self.assertEqual(f(self.beta), 0.0)

    def test_power(self):
        f, _ = build_Rhat(self.alpha, self.beta)
        net = build_Rhat_power(self.alpha, self.beta, 3)
        self.assertEqual((net.width, net.depth), (5, 3))
        xs = np.linspace(0.0, 1.0, 257)
        np.testing.assert_allclose(net(xs), iterate(f, xs, 3), atol=1e-9)

    def test_rejects_bad_thresholds(self):
        with self.assertRaises(ValidationError):
            rhat_terms(0.4, 0.45)
        with self.assertRaises(ValidationError):
            rhat_terms(0.48, 0.47)


class TestSmoothedResidualPowers(unittest.TestCase):
    def test_agrees_with_residual_power_on_omega(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(0.0, 1.0, 4000)
        for n in range(1, 9):
            params = default_params(n, builtin('hat'), special_hat(0.125))
            for alpha, beta in ((params.alpha1, params.beta1), (params.alpha2, params.beta2)):
                f = rhat_cpwl(alpha, beta)
                inside = omega_mask(xs, n, alpha)
                self.assertGreater(inside.sum(), 0)
                np.testing.assert_allclose(
                    iterate(f, xs[inside], n), residual_Rn(xs[inside], n), atol=1e-9,
                )

    def test_vanishes_left_of_dyadic_points(self):
        for n in range(1, 9):
            params = default_params(n, builtin('hat'), special_hat(0.125))
            alpha, beta = params.alpha1, params.beta1
            f = rhat_cpwl(alpha, beta)
            width = (0.5 - beta) * 2.0 ** (-n + 1)
            ends = np.arange(1, 2 ** n) * 2.0 ** -n
            xs = (ends[:, None] - width * np.linspace(0.0, 1.0, 5)[None, :]).ravel()
            np.testing.assert_allclose(iterate(f, xs, n), 0.0, atol=1e-12)


class TestIndicators(unittest.TestCase):
    def test_networks_match_cpwl(self):
        delta0 = 2.0 ** -6
        chi0, chi1, net0, net1 = build_chi_hats(delta0)
        xs = np.linspace(0.0, 1.0, 257)
        np.testing.assert_allclose(net0(xs), chi0(xs), atol=1e-12)
        np.testing.assert_allclose(net1(xs), chi1(xs), atol=1e-12)
        self.assertEqual(chi0(0.25), 1.0)
        self.assertEqual(chi0(0.75), 0.0)
        self.assertEqual(chi1(0.25), 0.0)
        self.assertEqual(chi1(0.75), 1.0)

    def test_indicators_sum_to_one_away_from_half(self):
        chi0, chi1, _, _ = build_chi_hats(2.0 ** -5)
        xs = np.array([0.0, 0.3, 0.7, 1.0])
        np.testing.assert_array_equal(chi0(xs) + chi1(xs), np.ones(4))


class TestProduct(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.N, self.M = 3, 4.0

    def test_multiplies_by_a_bit(self):
        y = self.rng.uniform(-self.M, self.M, (20, self.N))
        np.testing.assert_allclose(pi_apply(np.ones(20), y, self.M), y, atol=1e-12)
        np.testing.assert_allclose(pi_apply(np.zeros(20), y, self.M), 0.0, atol=1e-12)

    def test_network_matches_direct_evaluation(self):
        net = build_pi(self.N, self.M)
        self.assertEqual((net.width, net.depth), (2 * self.N + 1, 2))
        chi = self.rng.uniform(0.0, 1.0, 50)
        y = self.rng.uniform(-self.M, self.M, (50, self.N))
        out = net.forward(np.column_stack([chi, y]))
        np.testing.assert_allclose(out, pi_apply(chi, y, self.M), atol=1e-12)

    def test_zero_vector_for_any_indicator(self):
        net = build_pi(self.N, self.M)
        chi = self.rng.uniform(0.0, 1.0, 10 ** 4)
        y = np.zeros((chi.size, self.N))
        np.testing.assert_allclose(pi_apply(chi, y, self.M), 0.0, atol=1e-12)
        np.testing.assert_allclose(net.forward(np.column_stack([chi, y])), 0.0, atol=1e-12)

    def test_bit_products_on_many_points(self):
        net = build_pi(self.N, self.M)
        chi = self.rng.integers(0, 2, 10 ** 4).astype(float)
        y = self.rng.uniform(-self.M, self.M, (chi.size, self.N))
        out = net.forward(np.column_stack([chi, y]))
        np.testing.assert_allclose(out, chi[:, None] * y, atol=1e-12)

    def test_rejects_bad_sizes(self):
        with self.assertRaises(ValidationError):
            build_pi(0, 1.0)
        with self.assertRaises(ValidationError):
            build_pi(2, 0.0)


class TestSmallGadgets(unittest.TestCase):
    def test_min(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(-2.0, 2.0, (40, 2))
        np.testing.assert_allclose(build_min().forward(pts)[:, 0], pts.min(axis=1), atol=1e-12)

    def test_ramp(self):
        f, net = build_ramp(2)
        xs = np.linspace(0.0, 3.0, 61)
        np.testing.assert_allclose(net(xs), f(xs), atol=1e-12)
        self.assertEqual(f(1.5), 0.5)
        self.assertEqual(net.domain, (1.0, 2.0))
        with self.assertRaises(ValidationError):
            build_ramp(0)

    def test_special_network(self):
        H, net = build_H()
        np.testing.assert_array_equal(H.breakpoints, [0.375, 0.5, 0.625])
        xs = np.linspace(-1.0, 2.0, 385)
        np.testing.assert_allclose(net(xs), H(xs), atol=1e-12)
        self.assertEqual((net.width, net.depth), (3, 1))

    def test_special_terms_reject_non_special(self):
        with self.assertRaises(ValidationError):
            special_terms(hat(0.0, 1.0))
        with self.assertRaises(ValidationError):
            build_special(hat(0.0, 2.0))
