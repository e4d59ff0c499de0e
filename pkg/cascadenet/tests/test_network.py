import os
import shutil
import tempfile
import unittest

import numpy as np

from cascadenet.exceptions import DimensionMismatch, ValidationError
from cascadenet.network import (
    IDENTITY,
    RELU,
    Layer,
    ReluNet,
    compose,
    is_lowered,
    lower,
    pad,
    propagate_bounds,
    scale_input,
    scale_output,
    shift_input,
    stack,
    stack_all,
    sum_nets,
)
from cascadenet.network.base import EVAL_CHUNK
from cascadenet.network.exceptions import CorruptNetwork, UnboundedChannel


def abs_net(domain=(-1.0, 1.0)):
    """|x| as x+ + (-x)+."""
    return ReluNet.from_layers(
        [([[1.0], [-1.0]], [0.0, 0.0], RELU), ([[1.0, 1.0]], [0.0], IDENTITY)],
        domain,
    )


def relu_net(domain=(-1.0, 1.0)):
    return ReluNet.from_layers(
        [([[1.0]], [0.0], RELU), ([[1.0]], [0.0], IDENTITY)],
        domain,
    )


class TestLayer(unittest.TestCase):
    def test_shapes_are_checked(self):
        with self.assertRaises(DimensionMismatch):
            Layer([[1.0, 2.0]], [0.0, 0.0])
        with self.assertRaises(DimensionMismatch):
            Layer([1.0, 2.0], [0.0])
        with self.assertRaises(DimensionMismatch):
            Layer([[1.0]], [0.0], (RELU, IDENTITY))
        with self.assertRaises(ValidationError):
            Layer([[1.0]], [0.0], 'tanh')

    def test_mixed_activations(self):
        layer = Layer([[1.0], [1.0]], [0.0, 0.0], (RELU, IDENTITY))
        np.testing.assert_array_equal(layer.apply(np.array([[-2.0]])), [[0.0, -2.0]])
        uniform = Layer([[1.0], [1.0]], [0.0, 0.0], (RELU, RELU))
        self.assertEqual(uniform.activation, RELU)

    def test_hints_default_to_unbounded(self):
        hints = Layer([[1.0]], [0.0]).hints
        self.assertEqual(hints.shape, (1, 2))
        self.assertTrue(np.isinf(hints).all())


class TestReluNet(unittest.TestCase):
    def test_size_report(self):
        net = abs_net()
        self.assertEqual(net.width, 2)
        self.assertEqual(net.depth, 1)
        self.assertEqual(net.parameter_count, 7)
        self.assertEqual(tuple(net.size_report()), (2, 1, 7))
        self.assertEqual(ReluNet.identity().depth, 0)

    def test_forward_and_evaluate(self):
        net = abs_net()
        np.testing.assert_array_equal(net.forward(np.array([-0.5])), [0.5])
        np.testing.assert_array_equal(net.forward(np.array([[-0.5], [0.25]])), [[0.5], [0.25]])
        self.assertEqual(net(-0.75), 0.75)
        with self.assertRaises(DimensionMismatch):
            net.forward(np.array([[1.0, 2.0]]))

    def test_large_batches_are_evaluated_in_chunks(self):
        net = compose(shift_input(abs_net((-3.0, 3.0)), 1.0), abs_net((-3.0, 3.0)))
        xs = np.linspace(-3.0, 3.0, 2 * EVAL_CHUNK + 17)
        np.testing.assert_allclose(net(xs), np.abs(np.abs(xs) - 1.0), atol=1e-14)
        h = xs.reshape(-1, 1)
        for layer in net.layers:
            h = layer.apply(h)
        np.testing.assert_array_equal(net.forward(xs.reshape(-1, 1)), h)

    def test_layers_must_chain(self):
        with self.assertRaises(DimensionMismatch):
            ReluNet((Layer([[1.0]], [0.0]), Layer([[1.0, 1.0]], [0.0], IDENTITY)))
        with self.assertRaises(ValidationError):
            ReluNet(())

    def test_save_and_load(self):
        tmpdir = tempfile.mkdtemp(prefix="cascadenet_net_")
        try:
            path = os.path.join(tmpdir, "net.json")
            net = ReluNet.from_layers(
                [([[0.1], [-1.0 / 3.0]], [0.2, 0.0], RELU), ([[1.0, 1.0]], [0.0], IDENTITY)],
            )
            net.save(path)
            loaded = ReluNet.load(path)
            xs = np.linspace(0.0, 1.0, 11)
            np.testing.assert_array_equal(loaded(xs), net(xs))
            self.assertEqual(loaded.domain, net.domain)
        finally:
            shutil.rmtree(tmpdir, ignore_errors=True)

    def test_corrupt_files(self):
        with self.assertRaises(CorruptNetwork):
            ReluNet.from_dict({"input_dim": 1, "output_dim": 1, "layers": []})
        with self.assertRaises(CorruptNetwork):
            ReluNet.from_dict({"input_dim": 1, "output_dim": 2, "layers": [
                {"weights": [["1.0"]], "bias": ["0.0"], "activation": "identity"},
            ]})
        with self.assertRaises(CorruptNetwork):
            ReluNet.load("/nonexistent/net.json")


class TestCombinators(unittest.TestCase):
    def setUp(self):
        self.xs = np.linspace(-1.0, 1.0, 41)

    def test_compose_adds_depths(self):
        net = compose(abs_net(), abs_net())
        self.assertEqual(net.depth, 2)
        np.testing.assert_allclose(net(self.xs), np.abs(self.xs))

    def test_compose_checks_dimensions(self):
        two = stack(abs_net(), relu_net())
        with self.assertRaises(DimensionMismatch):
            compose(abs_net(), two)

    def test_stack_runs_side_by_side(self):
        net = stack(abs_net(), relu_net())
        self.assertEqual(net.width, 3)
        out = net.forward(self.xs.reshape(-1, 1))
        np.testing.assert_allclose(out[:, 0], np.abs(self.xs))
        np.testing.assert_allclose(out[:, 1], np.maximum(self.xs, 0.0))

    def test_stack_pads_shallower_net(self):
        net = stack_all([compose(abs_net(), abs_net()), relu_net()])
        self.assertEqual(net.depth, 2)
        out = net.forward(self.xs.reshape(-1, 1))
        np.testing.assert_allclose(out[:, 1], np.maximum(self.xs, 0.0))

    def test_pad_preserves_function(self):
        net = pad(abs_net(), target_width=5, target_depth=3)
        self.assertEqual((net.width, net.depth), (5, 3))
        np.testing.assert_allclose(net(self.xs), np.abs(self.xs))
        with self.assertRaises(ValidationError):
            pad(abs_net(), target_width=1)

    def test_sum_strategies(self):
        nets = [abs_net(), relu_net()]
        chained = sum_nets(nets, [1.0, -2.0], strategy="chain")
        stacked = sum_nets(nets, [1.0, -2.0], strategy="stack")
        expected = np.abs(self.xs) - 2.0 * np.maximum(self.xs, 0.0)
        np.testing.assert_allclose(chained(self.xs), expected)
        np.testing.assert_allclose(stacked(self.xs), expected)
        self.assertEqual((chained.width, chained.depth), (4, 2))
        self.assertEqual((stacked.width, stacked.depth), (3, 1))
        with self.assertRaises(ValidationError):
            sum_nets(nets, strategy="parallel")
        with self.assertRaises(DimensionMismatch):
            sum_nets(nets, [1.0])

    def test_input_and_output_rescaling(self):
        net = relu_net(domain=(0.0, 1.0))
        shifted = shift_input(net, 0.5)
        self.assertEqual(shifted.domain, (0.5, 1.5))
        self.assertEqual(shifted(1.0), 0.5)
        scaled = scale_input(net, 2.0)
        self.assertEqual(scaled.domain, (0.0, 0.5))
        self.assertEqual(scaled(0.25), 0.5)
        self.assertEqual(scale_output(net, -3.0)(0.5), -1.5)
        with self.assertRaises(ValidationError):
            scale_input(net, 0.0)


class TestLowering(unittest.TestCase):
    def test_lowering_preserves_chained_sum(self):
        xs = np.linspace(-1.0, 1.0, 41)
        chained = sum_nets([abs_net(), relu_net()], [1.0, -2.0], strategy="chain")
        self.assertFalse(is_lowered(chained))
        lowered = lower(chained)
        self.assertTrue(is_lowered(lowered))
        self.assertEqual((lowered.width, lowered.depth), (chained.width, chained.depth))
        np.testing.assert_allclose(lowered(xs), chained(xs), atol=1e-12)

    def test_lowered_net_is_returned_unchanged(self):
        net = abs_net()
        self.assertIs(lower(net), net)

    def test_bounds_follow_domain(self):
        bounds = propagate_bounds(abs_net(domain=(-2.0, 1.0)))
        lo, hi = bounds[0]
        np.testing.assert_array_equal(lo, [0.0, 0.0])
        np.testing.assert_array_equal(hi, [1.0, 2.0])

    def test_unbounded_identity_channel(self):
        net = ReluNet(
            (
                Layer([[1.0], [1.0]], [0.0, 0.0], (RELU, IDENTITY)),
                Layer([[1.0, 1.0]], [0.0], IDENTITY),
            ),
            (-np.inf, np.inf),
        )
        with self.assertRaises(UnboundedChannel):
            lower(net)
