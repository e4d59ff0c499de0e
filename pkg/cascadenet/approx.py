"""
Approximation experiments built on the compiler.

``approximate_phi`` measures how fast compiled V^n phi0 networks approach
the refinable function, ``build_wavelet`` assembles a wavelet network from
shifted dilates of a scaling-function network, and ``nterm_demo`` checks
the error of a compiled n-term wavelet sum against the triangle bound.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cascadenet.cascade import RateFit, apply_V, apply_Vn, fit_rate
from cascadenet.compiler import compile_Vng
from cascadenet.conf import settings
from cascadenet.cpwl import CPwL, dilate_shift, linear_combine, merge_abscissae
from cascadenet.exceptions import ValidationError
from cascadenet.masks import Mask, wavelet_combo
from cascadenet.network import ReluNet, lower, scale_input, scale_output, shift_input, sum_nets

logger = logging.getLogger(__name__)

CSV_HEADER = ("n", "error", "width", "depth", "params")

PsiFactory = Callable[[int], Tuple[ReluNet, CPwL]]


@dataclass
class ConvergenceRecord:
    n: int
    error: float
    width: int
    depth: int
    params: int


@dataclass
class ConvergenceRun:
    mask: str
    phi0: str
    records: List[ConvergenceRecord]
    fit: RateFit
    ref_extra: int
    reference_breakpoints: int

    @property
    def fitted_lambda(self) -> Optional[float]:
        return self.fit.lam

    @property
    def errors(self) -> List[float]:
        return [r.error for r in self.records]

    def to_rows(self) -> List[Tuple[Any, ...]]:
        return [(r.n, repr(r.error), r.width, r.depth, r.params) for r in self.records]

    def summary(self) -> Dict[str, Any]:
        return {
            "mask": self.mask,
            "phi0": self.phi0,
            "n_max": max((r.n for r in self.records), default=0),
            "fitted_lambda": self.fit.lam,
            "fit_intercept": self.fit.intercept,
            "fit_max_residual": self.fit.max_residual,
            "fit_used": list(self.fit.used),
            "ref_extra": self.ref_extra,
            "reference_breakpoints": self.reference_breakpoints,
        }


def approximate_phi(mask: Mask, phi0: CPwL, n_max: int, ref_extra: Optional[int] = None,
                    grid_step: Optional[float] = None, label: str = "phi0") -> ConvergenceRun:
    """E_n = sup |phi_ref - S_n| for compiled S_n = V^n phi0, n = 1..n_max.

    phi_ref is the exact iterate V^(n_max + ref_extra) phi0. Both functions
    are CPwL, so the sup is attained on the union of their breakpoints.
    """
    if n_max < 1:
        raise ValidationError(f"n_max must be at least 1, got {n_max}.")
    ref_extra = settings.REF_EXTRA if ref_extra is None else int(ref_extra)
    reference = apply_Vn(mask, phi0, n_max + ref_extra)
    records: List[ConvergenceRecord] = []
    iterate = phi0
    for n in range(1, n_max + 1):
        iterate = apply_V(mask, iterate)
        artifact = compile_Vng(phi0, n, mask, grid_step)
        xs = merge_abscissae(reference.breakpoints, iterate.breakpoints)
        error = float(np.max(np.abs(artifact.net.evaluate(xs) - reference(xs))))
        width, depth, params = artifact.net.size_report()
        records.append(ConvergenceRecord(n, error, width, depth, params))
        logger.debug("E_%d = %.3e (width %d, depth %d)", n, error, width, depth)
    fit = fit_rate([r.n for r in records], [r.error for r in records])
    logger.info("Convergence of %r: fitted lambda %s over n=%s", mask, fit.lam, fit.used)
    return ConvergenceRun(
        mask=mask.name or "custom",
        phi0=label,
        records=records,
        fit=fit,
        ref_extra=ref_extra,
        reference_breakpoints=len(reference),
    )


# Wavelets

def build_wavelet(phi_net: Union[ReluNet, Callable[[], ReluNet]],
                  combo: Sequence[Tuple[float, float]]) -> ReluNet:
    """psi(x) = sum coeff * phi(2x - shift) as one network.

    The result is declared on the window spanned by the dilated and shifted
    copies of phi's domain.
    """
    combo = list(combo)
    if not combo:
        raise ValidationError("A wavelet needs at least one (coefficient, shift) term.")
    phi = phi_net() if callable(phi_net) and not isinstance(phi_net, ReluNet) else phi_net
    shifts = [float(s) for _, s in combo]
    lo, hi = phi.domain
    window = ((lo + min(shifts)) / 2.0, (hi + max(shifts)) / 2.0)
    terms = [
        shift_input(scale_input(phi, 2.0), s / 2.0).with_domain(*window)
        for s in shifts
    ]
    coefficients = [float(c) for c, _ in combo]
    if len(terms) == 1:
        return lower(scale_output(terms[0], coefficients[0]))
    return lower(sum_nets(terms, coefficients, strategy="chain"))


def wavelet_reference(mask: Mask, phi_ref: CPwL,
                      combo: Optional[Sequence[Tuple[float, float]]] = None) -> CPwL:
    """The oracle wavelet sum coeff * phi_ref(2x - shift) as a CPwL."""
    combo = wavelet_combo(mask) if combo is None else list(combo)
    if not combo:
        raise ValidationError("A wavelet needs at least one (coefficient, shift) term.")
    return linear_combine(
        [c for c, _ in combo],
        [dilate_shift(phi_ref, 2.0, float(s)) for _, s in combo],
    )


def wavelet_factory(mask: Mask, phi0: CPwL, ref_extra: Optional[int] = None,
                    grid_step: Optional[float] = None) -> PsiFactory:
    """Level -> (compiled wavelet net, oracle wavelet) for the mask's standard combination."""
    combo = wavelet_combo(mask)
    extra = settings.REF_EXTRA if ref_extra is None else int(ref_extra)

    def factory(level: int) -> Tuple[ReluNet, CPwL]:
        phi_net = compile_Vng(phi0, level, mask, grid_step).net
        phi_ref = apply_Vn(mask, phi0, level + extra)
        return build_wavelet(phi_net, combo), wavelet_reference(mask, phi_ref, combo)

    return factory


# n-term sums

@dataclass
class NTermReport:
    linf: float
    l2: float
    per_wavelet_error: float
    per_wavelet_l2: float
    linf_bound: float
    l2_bound: float
    bound_ok: bool
    params: int
    terms: int
    grid_step: float
    notes: Dict[str, Any] = field(default_factory=dict)


def dyadic_interval(lo: float, hi: float) -> Tuple[int, int]:
    """(k, j) with [lo, hi] = [j, j + 1] 2^-k and k >= 0."""
    length = hi - lo
    if not length > 0:
        raise ValidationError(f"Empty interval [{lo}, {hi}].")
    k = -math.log2(length)
    if abs(k - round(k)) > 1e-12 or round(k) < 0:
        raise ValidationError(f"Interval [{lo}, {hi}] does not have dyadic length 2^-k, k >= 0.")
    k = int(round(k))
    j = lo * 2.0 ** k
    if abs(j - round(j)) > 1e-9:
        raise ValidationError(f"Interval [{lo}, {hi}] is not aligned to the 2^-{k} grid.")
    return k, int(round(j))


def _check_terms(f_coeffs: Sequence[Tuple[Tuple[float, float], float]]
                 ) -> List[Tuple[Tuple[int, int], float]]:
    terms = [(dyadic_interval(lo, hi), float(f)) for (lo, hi), f in f_coeffs]
    if not terms:
        raise ValidationError("The n-term demo needs at least one coefficient.")
    if not all(np.isfinite(f) for _, f in terms):
        raise ValidationError("Coefficients must be finite.")
    return terms


def _l2(values: np.ndarray, scale: float) -> float:
    """Discrete L2 norm of grid samples of step 1/scale."""
    return float(np.sqrt(np.sum(values ** 2) / scale))


def nterm_net(f_coeffs: Sequence[Tuple[Tuple[float, float], float]], psi_net: ReluNet,
              domain: Tuple[float, float]) -> ReluNet:
    """The lowered network for sum f_I 2^(k/2) psi(2^k x - j), declared on ``domain``."""
    nets = []
    for (k, j), f in _check_terms(f_coeffs):
        placed = shift_input(scale_input(psi_net, 2.0 ** k), j / 2.0 ** k)
        nets.append(scale_output(placed, f * 2.0 ** (k / 2.0)).with_domain(*domain))
    combined = sum_nets(nets, strategy="chain") if len(nets) > 1 else nets[0]
    return lower(combined)


def nterm_demo(f_coeffs: Sequence[Tuple[Tuple[float, float], float]], psi_factory: PsiFactory,
               ell: int, grid_exp: Optional[int] = None) -> NTermReport:
    """Compare S = sum f_I psi_I with the compiled network S^ at level ``ell``.

    psi_I(x) = 2^(k/2) psi(2^k x - j) for I = [j, j + 1] 2^-k. Both sums are
    sampled on a grid of step 2^-grid_exp. The discrete L2 error is checked
    against sum |f_I| ||psi_I - psi^_I||, each term's error measured on the
    same grid; the sup error is checked the same way.
    """
    terms = _check_terms(f_coeffs)
    e = settings.NTERM_GRID_EXP if grid_exp is None else int(grid_exp)
    scale = 2.0 ** e
    if any(k > e for (k, _), _ in terms):
        raise ValidationError(f"Interval levels must not exceed the grid exponent {e}.")

    psi_net, psi_ref = psi_factory(ell)
    a = math.floor(float(psi_ref.breakpoints[0]) * scale) / scale
    b = math.ceil(float(psi_ref.breakpoints[-1]) * scale) / scale
    window = a + np.arange(int(round((b - a) * scale)) + 1) / scale
    psi_error = psi_ref(window) - psi_net.evaluate(window)
    per_wavelet = float(np.max(np.abs(psi_error)))
    per_wavelet_l2 = _l2(psi_error, scale)

    x_lo = math.floor(min((a + j) / 2.0 ** k for (k, j), _ in terms) * scale) / scale
    x_hi = math.ceil(max((b + j) / 2.0 ** k for (k, j), _ in terms) * scale) / scale
    xs = x_lo + np.arange(int(round((x_hi - x_lo) * scale)) + 1) / scale
    S = np.zeros(xs.size)
    linf_bound = l2_bound = 0.0
    for (k, j), f in terms:
        weight = 2.0 ** (k / 2.0)
        t = xs * 2.0 ** k - j
        exact = psi_ref(t)
        S += f * weight * exact
        term_error = weight * (exact - psi_net.evaluate(t))
        l2_bound += abs(f) * _l2(term_error, scale)
        linf_bound += abs(f) * float(np.max(np.abs(term_error)))

    combined = nterm_net(f_coeffs, psi_net, (x_lo, x_hi))
    diff = S - combined.evaluate(xs)
    linf = float(np.max(np.abs(diff)))
    l2 = _l2(diff, scale)
    report = NTermReport(
        linf=linf,
        l2=l2,
        per_wavelet_error=per_wavelet,
        per_wavelet_l2=per_wavelet_l2,
        linf_bound=linf_bound,
        l2_bound=l2_bound,
        bound_ok=l2 <= l2_bound + 1e-12 and linf <= linf_bound + 1e-12,
        params=combined.parameter_count,
        terms=len(terms),
        grid_step=1.0 / scale,
        notes={"level": ell},
    )
    logger.info("n-term demo: %d terms, L2 error %.3e, bound %.3e", len(terms), l2, l2_bound)
    return report
