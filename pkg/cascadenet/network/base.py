"""
Layered ReLU network intermediate representation.

A ``ReluNet`` is a chain of affine layers, each followed by a per-node
activation (``relu`` or ``identity``). A final all-identity layer is the
affine readout and is not counted in the depth; when the final layer is
ReLU every layer is hidden. Identity nodes inside hidden layers are allowed
while constructing and removed by ``cascadenet.network.lowering.lower``.

Layers may carry per-node value hints: intervals known to contain the
node's post-activation value on all inputs. Bound propagation intersects
with them, which keeps lowering shifts tight through deep compositions.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from cascadenet.exceptions import DimensionMismatch, ValidationError
from cascadenet.network.exceptions import CorruptNetwork

logger = logging.getLogger(__name__)

RELU = 'relu'
IDENTITY = 'identity'
ACTIVATIONS = (RELU, IDENTITY)
# Rows per forward pass.
EVAL_CHUNK = 4096

Activation = Union[str, Tuple[str, ...]]


class SizeReport(NamedTuple):
    width: int
    depth: int
    params: int


def _normalize_activation(activation: Any, out_dim: int) -> Activation:
    if isinstance(activation, str):
        if activation not in ACTIVATIONS:
            raise ValidationError(f"Unknown activation '{activation}'.")
        return activation
    acts = tuple(activation)
    if len(acts) != out_dim:
        raise DimensionMismatch(f"{len(acts)} activations for {out_dim} nodes.")
    for a in acts:
        if a not in ACTIVATIONS:
            raise ValidationError(f"Unknown activation '{a}'.")
    if acts and all(a == acts[0] for a in acts):
        return acts[0]
    return acts


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = RELU
    bounds: Optional[np.ndarray] = None

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2:
            raise DimensionMismatch(f"Layer weights must be a matrix, got shape {W.shape}.")
        b = np.array(self.bias, dtype=float).reshape(-1)
        if b.size != W.shape[0]:
            raise DimensionMismatch(
                f"Weights have {W.shape[0]} rows but bias has {b.size} entries."
            )
        act = _normalize_activation(self.activation, W.shape[0])
        hints = None
        if self.bounds is not None:
            hints = np.array(self.bounds, dtype=float).reshape(-1, 2)
            if hints.shape[0] != W.shape[0]:
                raise DimensionMismatch("One bounds hint per node required.")
            hints.setflags(write=False)
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'weights', W)
        object.__setattr__(self, 'bias', b)
        object.__setattr__(self, 'activation', act)
        object.__setattr__(self, 'bounds', hints)

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])

    @property
    def activations(self) -> Tuple[str, ...]:
        if isinstance(self.activation, str):
            return (self.activation,) * self.out_dim
        return self.activation

    @property
    def relu_mask(self) -> np.ndarray:
        return np.array([a == RELU for a in self.activations], dtype=bool)

    @property
    def hints(self) -> np.ndarray:
        """Per-node hint intervals, (-inf, inf) where none was given."""
        if self.bounds is None:
            out = np.empty((self.out_dim, 2))
            out[:, 0], out[:, 1] = -np.inf, np.inf
            return out
        return np.array(self.bounds)

    @property
    def parameter_count(self) -> int:
        return int(self.weights.size + self.bias.size)

    def apply(self, h: np.ndarray) -> np.ndarray:
        z = h @ self.weights.T + self.bias
        if self.activation == RELU:
            return np.maximum(z, 0.0)
        if self.activation == IDENTITY:
            return z
        return np.where(self.relu_mask, np.maximum(z, 0.0), z)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "weights": [[repr(float(w)) for w in row] for row in self.weights],
            "bias": [repr(float(b)) for b in self.bias],
            "activation": self.activation if isinstance(self.activation, str)
            else list(self.activation),
        }
        if self.bounds is not None:
            data["bounds"] = [[repr(float(lo)), repr(float(hi))] for lo, hi in self.bounds]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], in_dim: int) -> 'Layer':
        W = np.array([[float(w) for w in row] for row in data["weights"]], dtype=float)
        if W.size == 0:
            W = W.reshape(0, in_dim)
        bounds = data.get("bounds")
        if bounds is not None:
            bounds = [[float(lo), float(hi)] for lo, hi in bounds]
        return cls(W, [float(b) for b in data["bias"]], data.get("activation", RELU), bounds)


@dataclass(frozen=True, eq=False)
class ReluNet:
    layers: Tuple[Layer, ...]
    domain: Tuple[float, float] = (0.0, 1.0)
    output_bound: Optional[float] = None

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("A network needs at least one layer.")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise DimensionMismatch(
                    f"Layer {i} outputs {layers[i].out_dim} values but layer {i + 1} "
                    f"expects {layers[i + 1].in_dim}."
                )
        lo, hi = (float(v) for v in self.domain)
        if not lo <= hi:
            raise ValidationError(f"Empty domain [{lo}, {hi}].")
        object.__setattr__(self, 'layers', layers)
        object.__setattr__(self, 'domain', (lo, hi))
        if self.output_bound is not None:
            object.__setattr__(self, 'output_bound', float(self.output_bound))

    # Structure

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def has_readout(self) -> bool:
        return self.layers[-1].activation == IDENTITY

    @property
    def hidden_layers(self) -> Tuple[Layer, ...]:
        return self.layers[:-1] if self.has_readout else self.layers

    @property
    def depth(self) -> int:
        return len(self.hidden_layers)

    @property
    def width(self) -> int:
        hidden = self.hidden_layers
        return max((layer.out_dim for layer in hidden), default=0)

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.layers)

    def size_report(self) -> SizeReport:
        return SizeReport(self.width, self.depth, self.parameter_count)

    def with_domain(self, lo: float, hi: float) -> 'ReluNet':
        return replace(self, domain=(lo, hi))

    def __repr__(self) -> str:
        w, d, p = self.size_report()
        return (
            f"ReluNet({self.input_dim}->{self.output_dim}, width={w}, depth={d}, "
            f"params={p})"
        )

    # Evaluation

    def forward(self, x: Any) -> np.ndarray:
        """Evaluate on one input of shape (d,) or a batch of shape (B, d)."""
        h = np.asarray(x, dtype=float)
        single = h.ndim <= 1
        if single:
            h = h.reshape(1, -1)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"Network expects {self.input_dim} inputs, got {h.shape[1]}."
            )
        if h.shape[0] <= EVAL_CHUNK:
            out = self._forward_batch(h)
        else:
            out = np.vstack([
                self._forward_batch(h[i:i + EVAL_CHUNK])
                for i in range(0, h.shape[0], EVAL_CHUNK)
            ])
        return out[0] if single else out

    def _forward_batch(self, h: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            h = layer.apply(h)
        return h

    def evaluate(self, xs: Any) -> Union[float, np.ndarray]:
        """Scalar convenience for 1 -> 1 networks over a grid of points."""
        if self.input_dim != 1 or self.output_dim != 1:
            raise DimensionMismatch("evaluate() is for networks with one input and one output.")
        arr = np.asarray(xs, dtype=float)
        out = self.forward(arr.reshape(-1, 1))[:, 0]
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __call__(self, xs: Any) -> Union[float, np.ndarray]:
        return self.evaluate(xs)

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "domain": [self.domain[0], self.domain[1]],
            "layers": [layer.to_dict() for layer in self.layers],
        }
        if self.output_bound is not None:
            data["output_bound"] = self.output_bound
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ReluNet':
        try:
            in_dim = int(data["input_dim"])
            layers: List[Layer] = []
            for raw in data["layers"]:
                layer = Layer.from_dict(raw, in_dim)
                layers.append(layer)
                in_dim = layer.out_dim
            net = cls(
                tuple(layers),
                tuple(data.get("domain", (0.0, 1.0))),
                data.get("output_bound"),
            )
            declared = (int(data["input_dim"]), int(data["output_dim"]))
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise CorruptNetwork(f"Invalid network JSON: {e}")
        if (net.input_dim, net.output_dim) != declared:
            raise CorruptNetwork("Declared input/output dimensions do not match the layers.")
        return net

    def save(self, path: str) -> None:
        from cascadenet.encoders import write_json

        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> 'ReluNet':
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise CorruptNetwork(f"Could not read network file '{path}': {e}")
        if not isinstance(data, dict):
            raise CorruptNetwork(f"Network file '{path}' must contain a JSON object.")
        return cls.from_dict(data)

    # Constructors

    @classmethod
    def affine(cls, weights: Any, bias: Any, domain: Tuple[float, float] = (0.0, 1.0),
               output_bound: Optional[float] = None) -> 'ReluNet':
        """A depth-0 network: a single affine readout."""
        return cls((Layer(weights, bias, IDENTITY),), domain, output_bound)

    @classmethod
    def identity(cls, d: int = 1, domain: Tuple[float, float] = (0.0, 1.0)) -> 'ReluNet':
        return cls.affine(np.eye(d), np.zeros(d), domain)

    @classmethod
    def zero(cls, d: int = 1, k: int = 1, domain: Tuple[float, float] = (0.0, 1.0)) -> 'ReluNet':
        return cls.affine(np.zeros((k, d)), np.zeros(k), domain, 0.0)

    @classmethod
    def from_layers(cls, specs: Sequence[Tuple[Any, Any, Activation]],
                    domain: Tuple[float, float] = (0.0, 1.0)) -> 'ReluNet':
        return cls(tuple(Layer(W, b, act) for W, b, act in specs), domain)


def forward(net: ReluNet, x: Any) -> np.ndarray:
    return net.forward(x)


def size_report(net: ReluNet) -> SizeReport:
    return net.size_report()
