"""
Structural combinators on ReluNet: compose, stack, sum, pad and input/output
rescaling. Every combinator preserves the computed function on the declared
domain and keeps width/depth bookkeeping exact.
"""
from __future__ import annotations

import logging
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cascadenet.exceptions import DimensionMismatch, ValidationError
from cascadenet.network.base import IDENTITY, RELU, Layer, ReluNet

logger = logging.getLogger(__name__)


def split(net: ReluNet) -> Tuple[List[Layer], Layer]:
    """Hidden layers and the affine readout (identity matrix when absent)."""
    if net.has_readout:
        return list(net.layers[:-1]), net.layers[-1]
    k = net.output_dim
    return list(net.layers), Layer(np.eye(k), np.zeros(k), IDENTITY)


def _domain_intersection(nets: Sequence[ReluNet]) -> Tuple[float, float]:
    lo = max(net.domain[0] for net in nets)
    hi = min(net.domain[1] for net in nets)
    if lo > hi:
        raise ValidationError("Networks have disjoint declared domains.")
    return lo, hi


def _stack_hints(layers: Sequence[Layer]) -> Optional[np.ndarray]:
    if all(layer.bounds is None for layer in layers):
        return None
    return np.vstack([layer.hints for layer in layers])


def _block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def _output_bound(coefficients: Sequence[float], nets: Sequence[ReluNet]) -> Optional[float]:
    if any(net.output_bound is None for net in nets):
        return None
    return float(sum(abs(c) * net.output_bound for c, net in zip(coefficients, nets)))


def compose(f: ReluNet, g: ReluNet) -> ReluNet:
    """f o g: g's readout is merged into f's first layer, so depths add."""
    if g.output_dim != f.input_dim:
        raise DimensionMismatch(
            f"Cannot compose: inner net outputs {g.output_dim}, outer expects {f.input_dim}."
        )
    hidden, readout = split(g)
    first = f.layers[0]
    merged = Layer(
        first.weights @ readout.weights,
        first.weights @ readout.bias + first.bias,
        first.activation,
        first.bounds,
    )
    return ReluNet(tuple(hidden) + (merged,) + f.layers[1:], g.domain, f.output_bound)


def pad(net: ReluNet, target_width: Optional[int] = None,
        target_depth: Optional[int] = None) -> ReluNet:
    """Grow a network to the target size without changing its function.

    Extra depth is pass-through layers carrying y as (y+, (-y)+) pairs;
    extra width is inert zero ReLU nodes.
    """
    width, depth = net.width, net.depth
    target_depth = depth if target_depth is None else int(target_depth)
    if target_width is not None:
        target_width = int(target_width)
    if target_depth < depth or (target_width is not None and target_width < width):
        raise ValidationError(
            f"Cannot pad a width-{width} depth-{depth} net down to "
            f"width {target_width}, depth {target_depth}."
        )
    hidden, readout = split(net)
    k = readout.out_dim
    if target_depth > depth:
        bound = net.output_bound
        hint = None if bound is None else np.tile([0.0, bound], (2 * k, 1))
        hidden.append(Layer(
            np.vstack([readout.weights, -readout.weights]),
            np.concatenate([readout.bias, -readout.bias]),
            RELU,
            hint,
        ))
        eye = np.eye(k)
        swap = np.block([[eye, -eye], [-eye, eye]])
        for _ in range(target_depth - depth - 1):
            hidden.append(Layer(swap, np.zeros(2 * k), RELU, hint))
        readout = Layer(np.hstack([eye, -eye]), np.zeros(k), IDENTITY)
    widest = max((layer.out_dim for layer in hidden), default=0)
    if target_width is None:
        target_width = widest
    if widest > target_width:
        raise ValidationError(
            f"Depth padding needs width {widest}, above the target {target_width}."
        )
    layers = hidden + [readout]
    for i in range(len(hidden)):
        extra = target_width - layers[i].out_dim
        if extra <= 0:
            continue
        layer = layers[i]
        hints = None if layer.bounds is None else np.vstack([layer.hints, np.zeros((extra, 2))])
        layers[i] = Layer(
            np.vstack([layer.weights, np.zeros((extra, layer.in_dim))]),
            np.concatenate([layer.bias, np.zeros(extra)]),
            layer.activations + (RELU,) * extra,
            hints,
        )
        following = layers[i + 1]
        layers[i + 1] = Layer(
            np.hstack([following.weights, np.zeros((following.out_dim, extra))]),
            following.bias,
            following.activation,
            following.bounds,
        )
    return ReluNet(tuple(layers), net.domain, net.output_bound)


def stack(f: ReluNet, g: ReluNet, shared_input: bool = True) -> ReluNet:
    """Run f and g side by side; outputs are concatenated and widths add.

    With ``shared_input`` both read the same input, otherwise the input is
    the concatenation of their inputs.
    """
    if shared_input and f.input_dim != g.input_dim:
        raise DimensionMismatch(
            f"Cannot stack on a shared input: {f.input_dim} vs {g.input_dim} inputs."
        )
    depth = max(f.depth, g.depth)
    f = pad(f, target_depth=depth) if f.depth < depth else f
    g = pad(g, target_depth=depth) if g.depth < depth else g
    f_hidden, f_read = split(f)
    g_hidden, g_read = split(g)
    layers: List[Layer] = []
    for i, (a, b) in enumerate(zip(f_hidden + [f_read], g_hidden + [g_read])):
        if i == 0 and shared_input:
            W = np.vstack([a.weights, b.weights])
        else:
            W = _block_diag([a.weights, b.weights])
        layers.append(Layer(
            W,
            np.concatenate([a.bias, b.bias]),
            a.activations + b.activations,
            _stack_hints([a, b]),
        ))
    bound = None
    if f.output_bound is not None and g.output_bound is not None:
        bound = max(f.output_bound, g.output_bound)
    return ReluNet(tuple(layers), _domain_intersection([f, g]), bound)


def stack_all(nets: Sequence[ReluNet], shared_input: bool = True) -> ReluNet:
    if not nets:
        raise ValidationError("Nothing to stack.")
    return reduce(lambda acc, net: stack(acc, net, shared_input), nets)


def sum_nets(nets: Sequence[ReluNet], coefficients: Optional[Sequence[float]] = None,
             strategy: str = "chain", accumulator_bound: Optional[float] = None) -> ReluNet:
    """The network computing sum_i c_i * net_i(x).

    ``chain`` runs the nets one after another, carrying the input and a
    running sum in identity channels: width max(W_i) + d + k, depth sum(L_i).
    ``stack`` runs them side by side: width sum(W_i), depth max(L_i).
    """
    nets = list(nets)
    if not nets:
        raise ValidationError("sum_nets needs at least one network.")
    coefficients = [1.0] * len(nets) if coefficients is None else [float(c) for c in coefficients]
    if len(coefficients) != len(nets):
        raise DimensionMismatch(f"{len(coefficients)} coefficients for {len(nets)} networks.")
    d, k = nets[0].input_dim, nets[0].output_dim
    for net in nets:
        if (net.input_dim, net.output_dim) != (d, k):
            raise DimensionMismatch("sum_nets needs equal input and output dimensions.")
    if strategy == "stack":
        return _sum_stacked(nets, coefficients)
    if strategy != "chain":
        raise ValidationError(f"Unknown sum strategy '{strategy}'.")
    if accumulator_bound is None:
        accumulator_bound = _output_bound(coefficients, nets)
    return _sum_chained(nets, coefficients, accumulator_bound)


def _sum_stacked(nets: List[ReluNet], coefficients: List[float]) -> ReluNet:
    k = nets[0].output_dim
    stacked = stack_all(nets)
    hidden, readout = split(stacked)
    combine = np.hstack([c * np.eye(k) for c in coefficients])
    final = Layer(combine @ readout.weights, combine @ readout.bias, IDENTITY)
    return ReluNet(tuple(hidden) + (final,), stacked.domain, _output_bound(coefficients, nets))


def _sum_chained(nets: List[ReluNet], coefficients: List[float],
                 accumulator_bound: Optional[float]) -> ReluNet:
    d, k = nets[0].input_dim, nets[0].output_dim
    domain = _domain_intersection(nets)
    x_hint = np.tile(domain, (d, 1))
    acc_limit = np.inf if accumulator_bound is None else accumulator_bound
    acc_hint = np.tile([-acc_limit, acc_limit], (k, 1))
    eye_d, eye_k = np.eye(d), np.eye(k)

    layers: List[Layer] = []
    prev_width = None  # node count of the previous net part, None at the input
    prev_readout: Optional[Layer] = None
    prev_coefficient = 0.0
    for coefficient, net in zip(coefficients, nets):
        if net.depth == 0:
            net = pad(net, target_depth=1)
        hidden, readout = split(net)
        for j, layer in enumerate(hidden):
            w = layer.out_dim
            if prev_width is None:
                net_rows = layer.weights
                x_rows = eye_d
                acc_rows = np.zeros((k, d))
                acc_bias = np.zeros(k)
            elif j == 0:
                # Fold the previous net's readout into the running sum.
                net_rows = np.hstack([np.zeros((w, prev_width)), layer.weights, np.zeros((w, k))])
                x_rows = np.hstack([np.zeros((d, prev_width)), eye_d, np.zeros((d, k))])
                acc_rows = np.hstack([
                    prev_coefficient * prev_readout.weights, np.zeros((k, d)), eye_k,
                ])
                acc_bias = prev_coefficient * prev_readout.bias
            else:
                net_rows = np.hstack([layer.weights, np.zeros((w, d + k))])
                x_rows = np.hstack([np.zeros((d, prev_width)), eye_d, np.zeros((d, k))])
                acc_rows = np.hstack([np.zeros((k, prev_width + d)), eye_k])
                acc_bias = np.zeros(k)
            layers.append(Layer(
                np.vstack([net_rows, x_rows, acc_rows]),
                np.concatenate([layer.bias, np.zeros(d), acc_bias]),
                layer.activations + (IDENTITY,) * (d + k),
                np.vstack([layer.hints, x_hint, acc_hint]),
            ))
            prev_width = w
        prev_readout = readout
        prev_coefficient = coefficient
    final = Layer(
        np.hstack([prev_coefficient * prev_readout.weights, np.zeros((k, d)), eye_k]),
        prev_coefficient * prev_readout.bias,
        IDENTITY,
    )
    layers.append(final)
    logger.debug("Chained %d networks into %d layers", len(nets), len(layers) - 1)
    return ReluNet(tuple(layers), domain, _output_bound(coefficients, nets))


def shift_input(net: ReluNet, t: float) -> ReluNet:
    """x -> net(x - t), by adjusting the first-layer bias."""
    first = net.layers[0]
    offset = np.full(net.input_dim, float(t))
    moved = Layer(
        first.weights, first.bias - first.weights @ offset, first.activation, first.bounds,
    )
    lo, hi = net.domain
    return ReluNet((moved,) + net.layers[1:], (lo + t, hi + t), net.output_bound)


def scale_input(net: ReluNet, a: float) -> ReluNet:
    """x -> net(a * x) for a > 0."""
    if not a > 0:
        raise ValidationError(f"Input scale must be positive, got {a!r}.")
    first = net.layers[0]
    scaled = Layer(first.weights * a, first.bias, first.activation, first.bounds)
    lo, hi = net.domain
    return ReluNet((scaled,) + net.layers[1:], (lo / a, hi / a), net.output_bound)


def scale_output(net: ReluNet, c: float) -> ReluNet:
    """x -> c * net(x)."""
    hidden, readout = split(net)
    scaled = Layer(readout.weights * c, readout.bias * c, IDENTITY)
    bound = None if net.output_bound is None else abs(c) * net.output_bound
    return ReluNet(tuple(hidden) + (scaled,), net.domain, bound)
