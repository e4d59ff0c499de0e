"""
Interval bound propagation and the bias-shift lowering pass.

An identity node carrying a value v with |v| <= b on the declared domain is
replaced by ReLU(v + s) with s = 2b, and s is subtracted again in the next
layer's bias. After lowering every hidden node is a ReLU.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from cascadenet.network.base import IDENTITY, RELU, Layer, ReluNet
from cascadenet.network.exceptions import UnboundedChannel

logger = logging.getLogger(__name__)

Interval = Tuple[np.ndarray, np.ndarray]


def _interval_affine(W: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Interval:
    """Bounds of W v + b for v in the box [lo, hi], with 0 * inf taken as 0."""
    positive = W > 0
    low_pick = np.where(positive, lo[None, :], hi[None, :])
    high_pick = np.where(positive, hi[None, :], lo[None, :])
    with np.errstate(invalid='ignore'):
        low_terms = np.where(W == 0, 0.0, W * low_pick)
        high_terms = np.where(W == 0, 0.0, W * high_pick)
    return low_terms.sum(axis=1) + b, high_terms.sum(axis=1) + b


def propagate_bounds(net: ReluNet) -> List[Interval]:
    """Post-activation value intervals of every layer on the declared domain."""
    lo = np.full(net.input_dim, net.domain[0])
    hi = np.full(net.input_dim, net.domain[1])
    result: List[Interval] = []
    for layer in net.layers:
        lo, hi = _interval_affine(layer.weights, layer.bias, lo, hi)
        relu = layer.relu_mask
        lo = np.where(relu, np.maximum(lo, 0.0), lo)
        hi = np.where(relu, np.maximum(hi, 0.0), hi)
        if layer.bounds is not None:
            lo = np.maximum(lo, layer.bounds[:, 0])
            hi = np.minimum(hi, layer.bounds[:, 1])
        result.append((lo, hi))
    return result


def is_lowered(net: ReluNet) -> bool:
    return all(layer.activation == RELU for layer in net.hidden_layers)


def lower(net: ReluNet) -> ReluNet:
    """Rewrite identity hidden nodes as shifted ReLUs; the function is unchanged."""
    if is_lowered(net):
        return net
    layers = list(net.layers)
    if not net.has_readout:
        k = net.output_dim
        layers.append(Layer(np.eye(k), np.zeros(k), IDENTITY))
        net = ReluNet(tuple(layers), net.domain, net.output_bound)
    bounds = propagate_bounds(net)
    weights = [np.array(layer.weights) for layer in layers]
    biases = [np.array(layer.bias) for layer in layers]
    hints = [layer.hints for layer in layers]
    shifted = 0
    for index in range(len(layers) - 1):
        layer = layers[index]
        if layer.activation == RELU:
            continue
        lo, hi = bounds[index]
        for node, activation in enumerate(layer.activations):
            if activation == RELU:
                continue
            if not (np.isfinite(lo[node]) and np.isfinite(hi[node])):
                raise UnboundedChannel(
                    f"Identity node {node} of layer {index} is unbounded on the "
                    f"domain {net.domain}."
                )
            if lo[node] >= 0:
                hints[index][node] = (lo[node], hi[node])
                continue
            s = 2.0 * max(abs(lo[node]), abs(hi[node]))
            biases[index][node] += s
            biases[index + 1] -= weights[index + 1][:, node] * s
            hints[index][node] = (lo[node] + s, hi[node] + s)
            shifted += 1
    logger.debug("Lowering shifted %d identity channels", shifted)
    lowered = [
        Layer(
            weights[i], biases[i], RELU,
            layers[i].bounds if layers[i].activation == RELU else hints[i],
        )
        for i in range(len(layers) - 1)
    ]
    last = layers[-1]
    lowered.append(Layer(weights[-1], biases[-1], last.activation, last.bounds))
    return ReluNet(tuple(lowered), net.domain, net.output_bound)
