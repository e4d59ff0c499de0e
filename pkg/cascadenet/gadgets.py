"""
Primitive sub-networks: the smoothed residual, smoothed indicators, the
product gadget, min, ramps and special hats, plus the dyadic parameter
schedule they are instantiated with.

Every builder returns the gadget both as a CPwL (where it is univariate)
and as a ReluNet, so each network can be checked against its twin.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np

from cascadenet.cascade import tight_bound
from cascadenet.cpwl import CPwL, is_special, kinks, special_hat
from cascadenet.exceptions import ValidationError
from cascadenet.masks import Mask, operator_norm_bound, transfer_matrices
from cascadenet.network import IDENTITY, RELU, Layer, ReluNet, compose

logger = logging.getLogger(__name__)

SEVEN_SIXTEENTHS = 7.0 / 16.0


@dataclass(frozen=True)
class GadgetParams:
    n: int
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    delta0: float
    alpha_mat: float
    beta_mat: float
    M: float

    def validate(self) -> None:
        n = self.n
        problems = []
        if not (SEVEN_SIXTEENTHS < self.alpha1 < self.beta1 < self.alpha2 < self.beta2 < 0.5):
            problems.append("need 7/16 < alpha1 < beta1 < alpha2 < beta2 < 1/2")
        if not 0.5 - self.alpha1 < 2.0 ** (-n - 3):
            problems.append("1/2 - alpha1 must be below 2^(-n-3)")
        if not 0.5 - self.alpha2 < (0.5 - self.beta1) * 2.0 ** (-n + 1):
            problems.append("1/2 - alpha2 must be below (1/2 - beta1) 2^(-n+1)")
        if self.delta0 != 2.0 ** (-n - 3):
            problems.append("delta0 must equal 2^(-n-3)")
        if not (SEVEN_SIXTEENTHS < self.alpha_mat < self.beta_mat < 0.5):
            problems.append("need 7/16 < alpha_mat < beta_mat < 1/2")
        if not 0.5 - self.alpha_mat < 2.0 ** (-n - 3):
            problems.append("1/2 - alpha_mat must be below 2^(-n-3)")
        if not self.M > 0:
            problems.append("M must be positive")
        if problems:
            raise ValidationError(f"Invalid gadget parameters for n={n}: {'; '.join(problems)}.")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _power_of_two_ceiling(value: float) -> float:
    if value <= 1.0:
        return 1.0
    return 2.0 ** math.ceil(math.log2(value))


def product_bound(n: int, mask: Mask, g: CPwL, tight: bool = False) -> float:
    """The product-gadget bound M, rounded up to a power of two (at least 1)."""
    if tight:
        raw = 2.0 * tight_bound(mask, g, n)
    else:
        B = operator_norm_bound(transfer_matrices(mask))
        raw = float(np.max(np.abs(g.values))) * max(1.0, B) ** n
    return _power_of_two_ceiling(raw)


def default_params(n: int, mask: Mask, g: CPwL, tight: bool = False) -> GadgetParams:
    if n < 1:
        raise ValidationError(f"The parameter schedule needs n >= 1, got {n}.")
    params = GadgetParams(
        n=n,
        alpha1=0.5 - 2.0 ** (-n - 4),
        beta1=0.5 - 2.0 ** (-n - 5),
        alpha2=0.5 - 2.0 ** (-2 * n - 5),
        beta2=0.5 - 2.0 ** (-2 * n - 6),
        delta0=2.0 ** (-n - 3),
        alpha_mat=0.5 - 2.0 ** (-n - 4),
        beta_mat=0.5 - 2.0 ** (-n - 5),
        M=product_bound(n, mask, g, tight),
    )
    params.validate()
    logger.debug("Gadget parameters: %s", params)
    return params


# Smoothed residual

def rhat_terms(alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Thresholds and readout weights with R^(x) = sum w_i (x - t_i)+."""
    if not SEVEN_SIXTEENTHS < alpha < beta < 0.5:
        raise ValidationError(
            f"Smoothed residual needs 7/16 < alpha < beta < 1/2, got {alpha}, {beta}."
        )
    s = -2.0 * alpha / (beta - alpha)
    thresholds = np.array([0.0, alpha, beta, 0.5, 1.0])
    weights = np.array([2.0, s - 2.0, -s, 2.0, -2.0])
    return thresholds, weights


def rhat_cpwl(alpha: float, beta: float) -> CPwL:
    rhat_terms(alpha, beta)
    return CPwL([0.0, alpha, beta, 0.5, 1.0], [0.0, 2.0 * alpha, 0.0, 0.0, 1.0])


def build_Rhat(alpha: float, beta: float) -> Tuple[CPwL, ReluNet]:
    thresholds, weights = rhat_terms(alpha, beta)
    net = ReluNet(
        (
            Layer(np.ones((5, 1)), -thresholds, RELU),
            Layer(weights[None, :], [0.0], IDENTITY),
        ),
        (0.0, 1.0),
        1.0,
    )
    return rhat_cpwl(alpha, beta), net


def build_Rhat_power(alpha: float, beta: float, n: int) -> ReluNet:
    """R^ composed n times: width 5, depth n."""
    _, single = build_Rhat(alpha, beta)
    net = single
    for _ in range(n - 1):
        net = compose(single, net)
    return net


# Smoothed indicators

def chi_hat_terms(delta0: float) -> Dict[int, Tuple[np.ndarray, np.ndarray, float]]:
    """For b in {0, 1}: thresholds, readout weights and constant of chi^_b."""
    if not delta0 > 0:
        raise ValidationError(f"delta0 must be positive, got {delta0!r}.")
    inv = 1.0 / delta0
    return {
        0: (np.array([0.5, 0.5 + delta0]), np.array([-inv, inv]), 1.0),
        1: (np.array([0.5, 0.5 - delta0]), np.array([-inv, inv]), 0.0),
    }


def build_chi_hats(delta0: float) -> Tuple[CPwL, CPwL, ReluNet, ReluNet]:
    terms = chi_hat_terms(delta0)
    chi0 = CPwL([0.5, 0.5 + delta0], [1.0, 0.0])
    chi1 = CPwL([0.5 - delta0, 0.5], [0.0, 1.0])
    nets = []
    for b in (0, 1):
        thresholds, weights, constant = terms[b]
        nets.append(ReluNet(
            (
                Layer(np.ones((2, 1)), -thresholds, RELU),
                Layer(weights[None, :], [constant], IDENTITY),
            ),
            (0.0, 1.0),
            1.0,
        ))
    return chi0, chi1, nets[0], nets[1]


# Product gadget

def pi_first_layer(chi_w: np.ndarray, chi_b: float, y_W: np.ndarray, y_b: np.ndarray,
                   M: float) -> Layer:
    """First layer of Pi(chi, y) for chi = chi_w.h + chi_b and y = y_W h + y_b.

    Nodes: (M chi - y_i)+ for each i, (-y_i)+ for each i, then chi+.
    """
    N = y_W.shape[0]
    W = np.vstack([M * chi_w[None, :] - y_W, -y_W, chi_w[None, :]])
    b = np.concatenate([M * chi_b - y_b, -y_b, [chi_b]])
    hints = np.vstack([
        np.tile([0.0, 2.0 * M], (N, 1)),
        np.tile([0.0, M], (N, 1)),
        [[0.0, 1.0]],
    ])
    return Layer(W, b, RELU, hints)


def pi_second_rows(N: int, M: float, width: int,
                   offset: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rows reading a Pi first layer placed at ``offset`` in a layer of ``width``.

    Nodes: the forwarded (M chi - y_i)+ and (M(1 - chi) - (-y_i)+)+.
    """
    W = np.zeros((2 * N, width))
    b = np.zeros(2 * N)
    for i in range(N):
        W[i, offset + i] = 1.0
        W[N + i, offset + 2 * N] = -M
        W[N + i, offset + N + i] = -1.0
        b[N + i] = M
    hints = np.vstack([np.tile([0.0, 2.0 * M], (N, 1)), np.tile([0.0, M], (N, 1))])
    return W, b, hints


def pi_readout_rows(N: int, M: float, width: int, offset: int) -> Tuple[np.ndarray, np.ndarray]:
    """Pi = -first - second + M, read from second-layer nodes at ``offset``."""
    W = np.zeros((N, width))
    W[:, offset:offset + N] = -np.eye(N)
    W[:, offset + N:offset + 2 * N] = -np.eye(N)
    return W, np.full(N, M)


def pi_apply(chi: np.ndarray, y: np.ndarray, M: float) -> np.ndarray:
    """Pi evaluated directly; chi has shape (B,), y has shape (B, N)."""
    chi = np.asarray(chi, dtype=float)[:, None]
    first = np.maximum(M * chi - y, 0.0)
    second = np.maximum(M * (1.0 - np.maximum(chi, 0.0)) - np.maximum(-y, 0.0), 0.0)
    return -first - second + M


def build_pi(N: int, M: float) -> ReluNet:
    """Pi on inputs (x, y_1..y_N): width 2N+1, depth 2."""
    if N < 1 or not M > 0:
        raise ValidationError(f"Pi needs N >= 1 and M > 0, got N={N}, M={M}.")
    chi_w = np.zeros(N + 1)
    chi_w[0] = 1.0
    y_W = np.hstack([np.zeros((N, 1)), np.eye(N)])
    first = pi_first_layer(chi_w, 0.0, y_W, np.zeros(N), M)
    W2, b2, _ = pi_second_rows(N, M, 2 * N + 1, 0)
    W3, b3 = pi_readout_rows(N, M, 2 * N, 0)
    first = Layer(first.weights, first.bias, RELU)
    return ReluNet(
        (first, Layer(W2, b2, RELU), Layer(W3, b3, IDENTITY)),
        (-M, M),
        M,
    )


# Min, ramps and special functions

def build_min() -> ReluNet:
    """min(x, y) = y+ - (-y)+ - (y - x)+ on R^2."""
    W = np.array([[0.0, 1.0], [0.0, -1.0], [-1.0, 1.0]])
    return ReluNet(
        (
            Layer(W, np.zeros(3), RELU),
            Layer([[1.0, -1.0, -1.0]], [0.0], IDENTITY),
        ),
        (0.0, 1.0),
    )


def build_ramp(k: int) -> Tuple[CPwL, ReluNet]:
    """r_k(x) = (x - k + 1)+ - (x - k)+."""
    if k < 1:
        raise ValidationError(f"Ramp index must be at least 1, got {k}.")
    f = CPwL([k - 1.0, float(k)], [0.0, 1.0])
    net = ReluNet(
        (
            Layer(np.ones((2, 1)), [1.0 - k, -float(k)], RELU),
            Layer([[1.0, -1.0]], [0.0], IDENTITY),
        ),
        (k - 1.0, float(k)),
        1.0,
    )
    return f, net


def special_terms(g: CPwL) -> Tuple[np.ndarray, np.ndarray]:
    """Kinks xi_i and slope jumps d_i with g(t) = sum d_i (t - xi_i)+."""
    if not is_special(g, tol=1e-12):
        raise ValidationError("Expected a special function: non-negative, supported in [1/8, 7/8].")
    return kinks(g)


def build_special(g: CPwL) -> ReluNet:
    """A special function as a width-m depth-1 network."""
    xi, d = special_terms(g)
    if xi.size == 0:
        return ReluNet.zero()
    return ReluNet(
        (
            Layer(np.ones((xi.size, 1)), -xi, RELU),
            Layer(d[None, :], [0.0], IDENTITY),
        ),
        (0.0, 1.0),
        float(np.max(g.values)),
    )


def build_H() -> Tuple[CPwL, ReluNet]:
    """The hat with breakpoints 3/8, 1/2, 5/8 and peak 1."""
    H = special_hat(0.125)
    return H, build_special(H)
