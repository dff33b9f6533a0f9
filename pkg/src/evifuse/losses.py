"""Evidential regression losses and their analytic gradients.

Negative log model evidence for one target y under a NIG state, with
Omega = 2 beta (1 + gamma):

    L_nll = 1/2 log(pi / gamma) - alpha log(Omega)
            + (alpha + 1/2) log((y - delta)^2 gamma + Omega)
            + log Gamma(alpha) - log Gamma(alpha + 1/2)

Evidence regularizer, penalizing confidence on wrong predictions:

    L_reg = |y - delta| (2 gamma + alpha)

The grid loss is the mean of L_nll + tau L_reg over ground-truth-valid
pixels. Gradients are hand-derived; with r = y - delta and
A = r^2 gamma + Omega:

    dL/d delta = -2 (alpha + 1/2) gamma r / A
    dL/d gamma = -1/(2 gamma) - 2 alpha beta / Omega
                 + (alpha + 1/2)(r^2 + 2 beta) / A
    dL/d alpha = log(A / Omega) + psi(alpha) - psi(alpha + 1/2)
    dL/d beta  = 2 (1 + gamma) ((alpha + 1/2)/A - alpha/Omega)

and for the regularizer (subgradient 0 at the kink r = 0):

    dL/d delta = -sign(r)(2 gamma + alpha),  dL/d gamma = 2|r|,
    dL/d alpha = |r|,  dL/d beta = 0

Grid sums use exact (correctly rounded) accumulation, so pixel order never
changes a result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, NonFinite, ShapeMismatch
from .maps import DisparityMap, EvidentialMap
from .nig import NigParams, validate
from .special import digamma, log_gamma

PROB_CLAMP = 1e-7


@dataclass(frozen=True, slots=True)
class LossWeights:
    """Regularization weight tau and the four composition weights.

    Defaults follow the reference training recipe: tau = 0.5 and
    (lambda1, lambda2, lambda3, lambda4) = (1.0, 2.0, 1.0, 1.0).
    """

    tau: float = 0.5
    lambda1: float = 1.0
    lambda2: float = 2.0
    lambda3: float = 1.0
    lambda4: float = 1.0

    def __post_init__(self):
        for name in ("tau", "lambda1", "lambda2", "lambda3", "lambda4"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True, slots=True)
class GradNig:
    """Partial derivatives of a loss with respect to (delta, gamma, alpha, beta)."""

    d_delta: float
    d_gamma: float
    d_alpha: float
    d_beta: float


def _require_finite_target(y) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFinite("target y must be finite")


# Array kernels shared by the scalar API, the grid losses, and the trainer.

def nll_values(delta, gamma, alpha, beta, y):
    """Elementwise negative log model evidence (broadcasting arrays)."""
    omega = 2.0 * beta * (1.0 + gamma)
    r = y - delta
    return (0.5 * np.log(np.pi / gamma) - alpha * np.log(omega)
            + (alpha + 0.5) * np.log(r * r * gamma + omega)
            + log_gamma(alpha) - log_gamma(alpha + 0.5))


def nll_gradients(delta, gamma, alpha, beta, y):
    """Elementwise partials of nll_values; returns (d_delta, d_gamma, d_alpha, d_beta)."""
    omega = 2.0 * beta * (1.0 + gamma)
    r = y - delta
    a_term = r * r * gamma + omega
    d_delta = -2.0 * (alpha + 0.5) * gamma * r / a_term
    d_gamma = (-0.5 / gamma - 2.0 * alpha * beta / omega
               + (alpha + 0.5) * (r * r + 2.0 * beta) / a_term)
    d_alpha = (np.log(a_term) - np.log(omega)
               + digamma(alpha) - digamma(alpha + 0.5))
    d_beta = 2.0 * (1.0 + gamma) * ((alpha + 0.5) / a_term - alpha / omega)
    return d_delta, d_gamma, d_alpha, d_beta


def reg_values(delta, gamma, alpha, y):
    """Elementwise evidence regularizer |y - delta| (2 gamma + alpha)."""
    return np.abs(y - delta) * (2.0 * gamma + alpha)


def reg_gradients(delta, gamma, alpha, y):
    """Elementwise subgradients of reg_values (0 at the kink)."""
    r = y - delta
    sign = np.sign(r)
    d_delta = -sign * (2.0 * gamma + alpha)
    d_gamma = 2.0 * np.abs(r)
    d_alpha = np.abs(r)
    d_beta = np.zeros_like(d_alpha)
    return d_delta, d_gamma, d_alpha, d_beta


# Scalar operations over NigParams.

def nll_loss(params: NigParams, y: float) -> float:
    """Negative log model evidence at one pixel."""
    validate(params)
    _require_finite_target(y)
    return float(nll_values(params.delta, params.gamma, params.alpha,
                            params.beta, y))


def reg_loss(params: NigParams, y: float) -> float:
    """Evidence regularizer at one pixel; zero iff delta == y."""
    validate(params)
    _require_finite_target(y)
    return float(reg_values(params.delta, params.gamma, params.alpha, y))


def grad_nll(params: NigParams, y: float) -> GradNig:
    """Analytic gradient of nll_loss; exactly zero in delta at y == delta."""
    validate(params)
    _require_finite_target(y)
    dd, dg, da, db = nll_gradients(params.delta, params.gamma, params.alpha,
                                   params.beta, y)
    return GradNig(float(dd), float(dg), float(da), float(db))


def grad_reg(params: NigParams, y: float) -> GradNig:
    """Subgradient of reg_loss; the |.| kink at y == delta maps to zero."""
    validate(params)
    _require_finite_target(y)
    dd, dg, da, db = reg_gradients(params.delta, params.gamma, params.alpha, y)
    return GradNig(float(dd), float(dg), float(da), float(db))


# Grid losses.

def uncertainty_loss(emap: EvidentialMap, gt: DisparityMap, tau: float) -> float:
    """Mean over ground-truth-valid pixels of L_nll + tau L_reg."""
    if not math.isfinite(tau) or tau < 0.0:
        raise ValueError(f"tau must be finite and >= 0, got {tau!r}")
    if emap.shape != gt.shape:
        raise ShapeMismatch(f"map shape {emap.shape} != gt shape {gt.shape}")
    mask = gt.mask
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise EmptyMask("ground truth has no valid pixels")
    delta = emap.delta[mask]
    gamma = emap.gamma[mask]
    alpha = emap.alpha[mask]
    beta = emap.beta[mask]
    y = gt.values[mask]
    terms = nll_values(delta, gamma, alpha, beta, y)
    if tau != 0.0:
        terms = terms + tau * reg_values(delta, gamma, alpha, y)
    return math.fsum(terms) / count


def bce_loss(probs, targets, mask=None) -> float:
    """Mean binary cross-entropy over mask; probs clamped into
    [1e-7, 1 - 1e-7] so saturated predictions stay finite."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeMismatch(f"probs shape {p.shape} != targets shape {t.shape}")
    if mask is None:
        m = np.ones(p.shape, dtype=bool)
    else:
        m = np.asarray(mask, dtype=bool)
        if m.shape != p.shape:
            raise ShapeMismatch(f"mask shape {m.shape} != probs shape {p.shape}")
    if not np.all(np.isfinite(p[m])):
        raise NonFinite("probs contain non-finite values under the mask")
    tv = t[m]
    if not np.all((tv == 0.0) | (tv == 1.0)):
        raise ValueError("targets must be binary (0 or 1) under the mask")
    count = int(np.count_nonzero(m))
    if count == 0:
        raise EmptyMask("no valid pixels for bce_loss")
    pv = np.clip(p[m], PROB_CLAMP, 1.0 - PROB_CLAMP)
    terms = -(tv * np.log(pv) + (1.0 - tv) * np.log1p(-pv))
    return math.fsum(terms) / count


def total_loss(u_local: float, u_global: float, u_fused: float,
               rr_term: float, be_term: float, w: LossWeights) -> float:
    """Weighted composition:
    u_local + l1 u_global + l2 u_fused + l3 rr_term + l4 be_term.

    rr_term is an externally supplied scalar (pass 0.0 when absent).
    """
    parts = (u_local, u_global, u_fused, rr_term, be_term)
    if not all(math.isfinite(v) for v in parts):
        raise NonFinite(f"total_loss terms must be finite, got {parts!r}")
    return (u_local + w.lambda1 * u_global + w.lambda2 * u_fused
            + w.lambda3 * rr_term + w.lambda4 * be_term)
