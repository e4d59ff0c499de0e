"""
The compiler: from (mask, seed, n) to an explicit ReLU network for V^n g.

Stages, bottom-up:

    compile_gRn          g(R^n x) as min(g(R^_1^n x), g(R^_2^n x))
    compile_coordinate   the k-th coordinate of the vector cascade on [0, 1]
    compile_Vng_special  V^n g for a special g, coordinates behind a ramp bank
    compile_Vng          V^n g0 for any CPwL seed on [0, N], by hat decomposition

Every artifact carries the size bounds its construction guarantees, and
``verify`` samples a compiled net against the exact cascade oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cascadenet.cascade import apply_Vn, bits_and_residual, residual_Rn
from cascadenet.conf import settings
from cascadenet.cpwl import CPwL, hat_decompose, iterate, special_hat
from cascadenet.exceptions import ValidationError
from cascadenet.gadgets import (
    GadgetParams,
    build_chi_hats,
    build_min,
    build_ramp,
    build_Rhat_power,
    build_special,
    chi_hat_terms,
    default_params,
    pi_apply,
    pi_first_layer,
    pi_readout_rows,
    pi_second_rows,
    rhat_cpwl,
    rhat_terms,
    special_terms,
)
from cascadenet.masks import Mask, transfer_matrices
from cascadenet.network import (
    IDENTITY,
    RELU,
    Layer,
    ReluNet,
    compose,
    lower,
    shift_input,
    stack,
    sum_nets,
)

logger = logging.getLogger(__name__)

ASSEMBLIES = ("stacked", "chained")
UNIT = (0.0, 1.0)


class Stage(str, Enum):
    SPECIAL_GRN = "special_gRn"
    COORDINATE = "coordinate"
    SPECIAL_VNG = "special_Vng"
    GENERAL_VNG = "general_Vng"


@dataclass
class CompileArtifact:
    net: ReluNet
    params: Optional[GadgetParams]
    width_bound: int
    depth_bound: int
    stage: Stage
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def declared_bounds(self) -> Tuple[int, int]:
        return self.width_bound, self.depth_bound

    def bounds_ok(self) -> bool:
        return self.net.width <= self.width_bound and self.net.depth <= self.depth_bound

    def size_dict(self) -> Dict[str, Any]:
        width, depth, params = self.net.size_report()
        return {
            "stage": self.stage.value,
            "width": width,
            "depth": depth,
            "params": params,
            "width_bound": self.width_bound,
            "depth_bound": self.depth_bound,
            "bounds_ok": self.bounds_ok(),
            "M": None if self.params is None else self.params.M,
            "notes": self.notes,
        }


@dataclass
class Report:
    max_dev: Optional[float]
    mean_dev: Optional[float]
    width: int
    depth: int
    params: int
    bounds_ok: bool
    width_bound: int
    depth_bound: int
    stage: str
    tol: float
    passed: bool
    notes: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_dev": self.max_dev,
            "mean_dev": self.mean_dev,
            "width": self.width,
            "depth": self.depth,
            "params": self.params,
            "bounds_ok": self.bounds_ok,
            "width_bound": self.width_bound,
            "depth_bound": self.depth_bound,
            "stage": self.stage,
            "tol": self.tol,
            "passed": self.passed,
            "notes": self.notes,
        }


# Size bounds

def coordinate_width(N: int, m: int) -> int:
    return max(1 + 2 * max(m, 5), N + 10, 4 * N + 3)


def theorem_bounds(stage: Stage, N: int, n: int, m: int = 3, terms: int = 1,
                   assembly: str = "stacked") -> Tuple[int, int]:
    """Declared (width, depth) of each stage's construction.

    ``terms`` is the number of hat grid points for the general stage.
    """
    stage = Stage(stage)
    if assembly not in ASSEMBLIES:
        raise ValidationError(f"Unknown assembly '{assembly}'.")
    W = coordinate_width(N, m)
    if stage is Stage.SPECIAL_GRN:
        return 2 * max(m, 5), n + 2
    if stage is Stage.COORDINATE:
        return W, 4 * n + 1
    if assembly == "stacked":
        width, depth = N * W, 4 * n + 2
    else:
        width, depth = W + 2, N * (4 * n + 2)
    if stage is Stage.SPECIAL_VNG:
        return width, depth
    return width + 2, terms * depth


# Parameter handling

def _resolve_params(params: Optional[GadgetParams], n: int, mask: Mask, g: CPwL,
                    tight: bool = False) -> GadgetParams:
    if params is None:
        return default_params(n, mask, g, tight)
    if params.n != n:
        raise ValidationError(f"Parameters were scheduled for n={params.n}, not n={n}.")
    params.validate()
    return params


def _g_bound(g: CPwL) -> float:
    return float(np.max(np.abs(g.values)))


# g o R^n

def compile_gRn(g: CPwL, n: int, params: Optional[GadgetParams] = None,
                mask: Optional[Mask] = None) -> CompileArtifact:
    """min(g o R^_1^n, g o R^_2^n), equal to g o R^n on the whole line."""
    xi, _ = special_terms(g)
    if params is None:
        if mask is None:
            raise ValidationError("compile_gRn needs either params or a mask.")
        params = default_params(n, mask, g)
    elif params.n != n:
        raise ValidationError(f"Parameters were scheduled for n={params.n}, not n={n}.")
    m = int(xi.size)
    g_net = build_special(g)
    if m == 0:
        net = ReluNet.zero()
    else:
        first = compose(g_net, build_Rhat_power(params.alpha1, params.beta1, n))
        second = compose(g_net, build_Rhat_power(params.alpha2, params.beta2, n))
        net = compose(build_min(), stack(first, second))
    net = lower(ReluNet(net.layers, UNIT, _g_bound(g)))
    width, depth = theorem_bounds(Stage.SPECIAL_GRN, 1, n, m)
    logger.debug("Compiled g(R^%d x): %r", n, net)
    return CompileArtifact(net, params, width, depth, Stage.SPECIAL_GRN, {"m": m})


# Coordinate networks

class _LayerBuilder:
    """Collects the rows of one layer over a previous layer of ``in_dim`` nodes."""

    def __init__(self, in_dim: int):
        self.in_dim = in_dim
        self._weights: List[np.ndarray] = []
        self._bias: List[np.ndarray] = []
        self._activations: List[str] = []
        self._hints: List[np.ndarray] = []

    @property
    def width(self) -> int:
        return sum(w.shape[0] for w in self._weights)

    def unit(self, index: int) -> np.ndarray:
        e = np.zeros(self.in_dim)
        e[index] = 1.0
        return e

    def embed(self, values: np.ndarray, start: int) -> np.ndarray:
        row = np.zeros(self.in_dim)
        row[start:start + len(values)] = values
        return row

    def add(self, weights: np.ndarray, bias: Any, hints: Any,
            activation: str = RELU) -> slice:
        W = np.atleast_2d(np.asarray(weights, dtype=float))
        start = self.width
        self._weights.append(W)
        self._bias.append(np.broadcast_to(np.asarray(bias, dtype=float), (W.shape[0],)))
        self._activations.extend([activation] * W.shape[0])
        self._hints.append(np.broadcast_to(np.asarray(hints, dtype=float), (W.shape[0], 2)))
        return slice(start, start + W.shape[0])

    def add_layer(self, layer: Layer) -> slice:
        start = self.width
        self._weights.append(layer.weights)
        self._bias.append(layer.bias)
        self._activations.extend(layer.activations)
        self._hints.append(layer.hints)
        return slice(start, start + layer.out_dim)

    def build(self) -> Layer:
        return Layer(
            np.vstack(self._weights),
            np.concatenate(self._bias),
            tuple(self._activations),
            np.vstack(self._hints),
        )


def compile_coordinate(g: CPwL, k: int, n: int, mask: Mask,
                       params: Optional[GadgetParams] = None) -> CompileArtifact:
    """The network for x -> (V^n g)(x + k - 1) on [0, 1].

    Layout: n layers computing x, R^_1^j x and R^_2^j x; one layer of g
    kinks on R^_1^n x and R^_2^n x; then per block three layers. Block j
    reads u = R^_mat^{j-1} x and F^{j-1} and produces
    F^j = Pi(chi^_0(u), T0^T F) + Pi(chi^_1(u), T1^T F). The first block's
    F^0 = e_k min(p, q) is formed as e_k (p+ - (p - q)+).
    """
    N = mask.N
    if not 1 <= k <= N:
        raise ValidationError(f"Coordinate index must lie in 1..{N}, got {k}.")
    xi, d = special_terms(g)
    params = _resolve_params(params, n, mask, g)
    m = int(xi.size)
    width, depth = theorem_bounds(Stage.COORDINATE, N, n, m)
    if m == 0:
        return CompileArtifact(ReluNet.zero(), params, width, depth, Stage.COORDINATE, {"k": k})

    M = params.M
    pair = transfer_matrices(mask)
    t1, w1 = rhat_terms(params.alpha1, params.beta1)
    t2, w2 = rhat_terms(params.alpha2, params.beta2)
    tm, wm = rhat_terms(params.alpha_mat, params.beta_mat)
    chi = chi_hat_terms(params.delta0)
    g_hint = (0.0, _g_bound(g))
    F_hint = (-M, M)
    layers: List[Layer] = []

    # Head: x and the two smoothed residual chains.
    in_dim = 1
    for step in range(n):
        lb = _LayerBuilder(in_dim)
        if step == 0:
            x_row = v1 = v2 = lb.unit(0)
        else:
            x_row, v1, v2 = lb.unit(0), lb.embed(w1, 1), lb.embed(w2, 6)
        lb.add(x_row, 0.0, UNIT)
        lb.add(np.tile(v1, (5, 1)), -t1, UNIT)
        lb.add(np.tile(v2, (5, 1)), -t2, UNIT)
        layers.append(lb.build())
        in_dim = lb.width

    lb = _LayerBuilder(in_dim)
    lb.add(lb.unit(0), 0.0, UNIT)
    g1 = lb.add(np.tile(lb.embed(w1, 1), (m, 1)), -xi, UNIT)
    g2 = lb.add(np.tile(lb.embed(w2, 6), (m, 1)), -xi, UNIT)
    layers.append(lb.build())
    p = np.zeros(lb.width)
    q = np.zeros(lb.width)
    p[g1], q[g2] = d, d
    in_dim, u_index = lb.width, 0
    F_W: Optional[np.ndarray] = None
    F_b: Optional[np.ndarray] = None

    for block in range(n):
        # A: smoothed residual and indicator nodes on u, plus F^{j-1}.
        lb = _LayerBuilder(in_dim)
        u = lb.unit(u_index)
        rm = lb.add(np.tile(u, (5, 1)), -tm, UNIT)
        c0 = lb.add(np.tile(u, (2, 1)), -chi[0][0], UNIT)
        c1 = lb.add(np.tile(u, (2, 1)), -chi[1][0], UNIT)
        if block == 0:
            p_pos = lb.add(p, 0.0, g_hint)
            p_gap = lb.add(p - q, 0.0, g_hint)
            width_a = lb.width
            A_W = np.zeros((N, width_a))
            A_W[k - 1, p_pos] = 1.0
            A_W[k - 1, p_gap] = -1.0
        else:
            fs = lb.add(F_W, F_b, F_hint, IDENTITY)
            width_a = lb.width
            A_W = np.zeros((N, width_a))
            A_W[:, fs] = np.eye(N)
        layers.append(lb.build())

        # B: R^_mat(u) and the first layers of both products.
        lb = _LayerBuilder(width_a)
        lb.add(lb.embed(wm, rm.start), 0.0, UNIT)
        offsets = []
        for b, c in ((0, c0), (1, c1)):
            _, weights, constant = chi[b]
            chi_w = lb.embed(weights, c.start)
            T = pair[b].T
            offsets.append(lb.add_layer(
                pi_first_layer(chi_w, constant, T @ A_W, np.zeros(N), M)
            ).start)
        layers.append(lb.build())
        width_b = lb.width

        # C: forward R^_mat(u) and the second layers of both products.
        lb = _LayerBuilder(width_b)
        lb.add(lb.unit(0), 0.0, UNIT)
        seconds = []
        for offset in offsets:
            W2, b2, h2 = pi_second_rows(N, M, width_b, offset)
            seconds.append(lb.add(W2, b2, h2).start)
        layers.append(lb.build())
        width_c = lb.width

        F_W = np.zeros((N, width_c))
        F_b = np.zeros(N)
        for start in seconds:
            W3, b3 = pi_readout_rows(N, M, width_c, start)
            F_W += W3
            F_b += b3
        in_dim, u_index = width_c, 0

    layers.append(Layer(F_W[:1], F_b[:1], IDENTITY))
    net = lower(ReluNet(tuple(layers), UNIT, M))
    logger.debug("Compiled coordinate %d of V^%d g: %r", k, n, net)
    return CompileArtifact(net, params, width, depth, Stage.COORDINATE, {"k": k, "m": m})


def evaluate_coordinate_mirror(g: CPwL, k: int, n: int, mask: Mask, params: GadgetParams,
                               x: Any) -> List[np.ndarray]:
    """F^0..F^n computed with the gadgets' arithmetic instead of layers.

    Each entry has shape (len(x), N); F^n[:, 0] is what the coordinate
    network outputs.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    N = mask.N
    pair = transfer_matrices(mask)
    r1 = rhat_cpwl(params.alpha1, params.beta1)
    r2 = rhat_cpwl(params.alpha2, params.beta2)
    rm = rhat_cpwl(params.alpha_mat, params.beta_mat)
    chi0, chi1, _, _ = build_chi_hats(params.delta0)
    F = np.zeros((x.size, N))
    F[:, k - 1] = np.minimum(g(iterate(r1, x, n)), g(iterate(r2, x, n)))
    trajectory = [F]
    u = x
    for _ in range(n):
        F = pi_apply(chi0(u), F @ pair.T0, params.M) + pi_apply(chi1(u), F @ pair.T1, params.M)
        trajectory.append(F)
        u = rm(u)
    return trajectory


def exact_coordinate_trajectory(g: CPwL, k: int, n: int, mask: Mask, x: Any) -> List[np.ndarray]:
    """F^j = T_{B_j}^T ... T_{B_1}^T e_k g(R^n x) from the true binary digits."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pair = transfer_matrices(mask)
    bits, r = bits_and_residual(x, n)
    F = np.zeros((x.size, mask.N))
    F[:, k - 1] = g(r)
    trajectory = [F]
    for j in range(n):
        F = np.where(bits[:, j:j + 1] == 1, F @ pair.T1, F @ pair.T0)
        trajectory.append(F)
    return trajectory


# V^n g

def _vng_domain(N: int) -> Tuple[float, float]:
    return -1.0, float(N + 1)


def compile_Vng_special(g: CPwL, n: int, mask: Mask, params: Optional[GadgetParams] = None,
                        assembly: str = "stacked") -> CompileArtifact:
    """sum_k gbar_k(r_k(x)); each coordinate vanishes at 0 and 1."""
    if assembly not in ASSEMBLIES:
        raise ValidationError(f"Unknown assembly '{assembly}'.")
    N = mask.N
    xi, _ = special_terms(g)
    params = _resolve_params(params, n, mask, g)
    m = int(xi.size)
    width, depth = theorem_bounds(Stage.SPECIAL_VNG, N, n, m, assembly=assembly)
    domain = _vng_domain(N)
    notes = {"assembly": assembly, "m": m}
    if m == 0:
        return CompileArtifact(ReluNet.zero(domain=domain), params, width, depth,
                               Stage.SPECIAL_VNG, notes)
    terms = []
    for k in range(1, N + 1):
        coordinate = compile_coordinate(g, k, n, mask, params).net
        _, ramp = build_ramp(k)
        terms.append(compose(coordinate, ramp.with_domain(*domain)))
    strategy = "stack" if assembly == "stacked" else "chain"
    net = sum_nets(terms, strategy=strategy, accumulator_bound=params.M)
    net = lower(ReluNet(net.layers, domain, params.M))
    logger.debug("Compiled V^%d g for a special g (%s): %r", n, assembly, net)
    return CompileArtifact(net, params, width, depth, Stage.SPECIAL_VNG, notes)


@lru_cache(maxsize=32)
def _shifted_hat_net(coefficients: Tuple[float, ...], n: int, step: float, tight: bool,
                     assembly: str) -> Tuple[ReluNet, GadgetParams]:
    """The special-hat network shared by every term of a hat decomposition."""
    mask = Mask(np.array(coefficients))
    H = special_hat(step)
    params = default_params(n, mask, H, tight=tight)
    return compile_Vng_special(H, n, mask, params, assembly).net, params


def compile_Vng(g0: CPwL, n: int, mask: Mask, grid_step: Optional[float] = None,
                assembly: str = "stacked", tight_m: bool = False) -> CompileArtifact:
    """V^n g0 for a CPwL seed vanishing outside [0, N].

    g0 is written as sum_j g0(jh) H'(x - jh + 1/2) with H' the special hat of
    half-width h; V^n commutes with that shift up to a factor 2^-n, so each
    term is the special net shifted by 2^-n (jh - 1/2).
    """
    if assembly not in ASSEMBLIES:
        raise ValidationError(f"Unknown assembly '{assembly}'.")
    N = mask.N
    decomposition = hat_decompose(g0, grid_step, N=N)
    step = float(decomposition[0][1] + 0.5) if decomposition else 0.5
    width, depth = theorem_bounds(
        Stage.GENERAL_VNG, N, n, 3, terms=max(len(decomposition), 1), assembly=assembly,
    )
    domain = _vng_domain(N)
    notes: Dict[str, Any] = {
        "assembly": assembly,
        "grid_step": step,
        "terms": len(decomposition),
    }
    active = [(c, s) for c, s in decomposition if c != 0]
    notes["active_terms"] = len(active)
    if not active:
        logger.info("Seed is identically zero; V^%d g0 compiles to the zero network", n)
        return CompileArtifact(ReluNet.zero(domain=domain), None, width, depth,
                               Stage.GENERAL_VNG, notes)

    special, params = _shifted_hat_net(tuple(mask.coefficients), n, step, tight_m, assembly)
    scale = 2.0 ** -n
    nets = [shift_input(special, scale * s).with_domain(*domain) for _, s in active]
    coefficients = [c for c, _ in active]
    accumulator = float(sum(abs(c) for c in coefficients)) * params.M
    net = sum_nets(nets, coefficients, strategy="chain", accumulator_bound=accumulator)
    net = lower(ReluNet(net.layers, domain, accumulator))
    logger.debug("Compiled V^%d g0 from %d hats: %r", n, len(active), net)
    return CompileArtifact(net, params, width, depth, Stage.GENERAL_VNG, notes)


# Verification

def _reference(artifact: CompileArtifact, mask: Mask, g: CPwL, n: int):
    if artifact.stage is Stage.SPECIAL_GRN:
        return lambda xs: g(residual_Rn(xs, n))
    target = apply_Vn(mask, g, n)
    if artifact.stage is Stage.COORDINATE:
        shift = artifact.notes.get("k", 1) - 1
        return lambda xs: target(xs + shift)
    return target


def verification_grid(artifact: CompileArtifact, N: int, grid_step: float) -> np.ndarray:
    if artifact.stage in (Stage.SPECIAL_GRN, Stage.COORDINATE):
        lo, hi = UNIT
    else:
        lo, hi = _vng_domain(N)
    count = int(round((hi - lo) / grid_step))
    return np.linspace(lo, hi, count + 1)


def verify(artifact: CompileArtifact, mask: Mask, g: CPwL, n: int,
           grid_step: Optional[float] = None, tol: Optional[float] = None) -> Report:
    """Sample the compiled net against the oracle; disagreement is reported, not raised."""
    if grid_step is None:
        grid_step = 2.0 ** (-n - settings.GRID_OFFSET)
    if not grid_step > 0:
        raise ValidationError(f"Grid step must be positive, got {grid_step!r}.")
    tol = settings.TOL if tol is None else float(tol)
    xs = verification_grid(artifact, mask.N, grid_step)
    reference = np.asarray(_reference(artifact, mask, g, n)(xs), dtype=float)
    with np.errstate(all='ignore'):
        got = artifact.net.evaluate(xs)
        deviation = np.abs(got - reference)
    notes: Dict[str, Any] = {"grid_points": int(xs.size), "grid_step": grid_step}
    if np.all(np.isfinite(deviation)):
        max_dev: Optional[float] = float(np.max(deviation))
        mean_dev: Optional[float] = float(np.mean(deviation))
        accurate = max_dev <= tol
    else:
        max_dev = mean_dev = None
        accurate = False
        notes["non_finite"] = int(np.count_nonzero(~np.isfinite(deviation)))
    width, depth, params = artifact.net.size_report()
    bounds_ok = artifact.bounds_ok()
    if artifact.stage is Stage.SPECIAL_GRN:
        notes["depth_accounting"] = "min layer counted: n+2"
    report = Report(
        max_dev=max_dev,
        mean_dev=mean_dev,
        width=width,
        depth=depth,
        params=params,
        bounds_ok=bounds_ok,
        width_bound=artifact.width_bound,
        depth_bound=artifact.depth_bound,
        stage=artifact.stage.value,
        tol=tol,
        passed=accurate and bounds_ok,
        notes=notes,
    )
    logger.info(
        "Verified %s net (n=%d): max deviation %s over %d points, bounds %s",
        artifact.stage.value, n, max_dev, xs.size, "ok" if bounds_ok else "exceeded",
    )
    return report


def general_artifact(net: ReluNet, g0: CPwL, n: int, mask: Mask,
                     grid_step: Optional[float] = None,
                     assembly: str = "stacked") -> CompileArtifact:
    """Wrap a loaded general-stage net with the bounds its construction declares."""
    decomposition = hat_decompose(g0, grid_step, N=mask.N)
    width, depth = theorem_bounds(
        Stage.GENERAL_VNG, mask.N, n, 3, terms=max(len(decomposition), 1), assembly=assembly,
    )
    return CompileArtifact(net, None, width, depth, Stage.GENERAL_VNG, {"assembly": assembly})


def size_table(g0: CPwL, mask: Mask, ns: Sequence[int], grid_step: Optional[float] = None,
               assembly: str = "stacked") -> List[Dict[str, Any]]:
    """Sizes of compiled V^n g0 nets against their declared bounds."""
    rows = []
    for n in ns:
        artifact = compile_Vng(g0, n, mask, grid_step, assembly)
        width, depth, params = artifact.net.size_report()
        rows.append({
            "n": n,
            "width": width,
            "depth": depth,
            "params": params,
            "width_bound": artifact.width_bound,
            "depth_bound": artifact.depth_bound,
            "bounds_ok": artifact.bounds_ok(),
        })
    return rows
