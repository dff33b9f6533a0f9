"""Normal-inverse-gamma (NIG) parameter state: validation, moments, sampling.

A pixel's evidential state is the four-tuple (delta, gamma, alpha, beta)
parameterizing a NIG distribution over an unknown Normal's mean and variance:

    sigma^2 ~ InvGamma(alpha, beta)
    mu      ~ Normal(delta, sigma^2 / gamma)
    d       ~ Normal(mu, sigma^2)

The derived quantities are the predicted disparity (delta), the aleatoric
uncertainty E[sigma^2] = beta / (alpha - 1), the epistemic uncertainty
Var[mu] = beta / (gamma (alpha - 1)), and the total evidence 2 gamma + alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EmptyInput


@dataclass(frozen=True, slots=True)
class NigParams:
    """One evidential state: location delta (px), evidence weight gamma,
    shape alpha, scale beta (px^2). Constraints: gamma > 0, alpha > 1,
    beta > 0, all four finite."""

    delta: float
    gamma: float
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))


@dataclass(frozen=True, slots=True)
class EvidenceSummary:
    """Moments decoded from a NigParams: disparity (px), aleatoric and
    epistemic uncertainties (px^2), and total evidence (dimensionless)."""

    disparity: float
    aleatoric: float
    epistemic: float
    evidence: float


class NigSample(NamedTuple):
    """Draws from the generative process; arrays of equal length n."""

    mu: np.ndarray
    sigma_sq: np.ndarray
    d: np.ndarray


def validate(params: NigParams) -> None:
    """Raise DomainError naming the first violated constraint, else return.

    Checked in field order delta, gamma, alpha, beta: each value must be
    finite; gamma > 0, alpha > 1, beta > 0 (strict — the moment formulas
    divide by gamma and by alpha - 1).
    """
    d, g, a, b = params.delta, params.gamma, params.alpha, params.beta
    if not math.isfinite(d):
        raise DomainError("delta", d, "finite value")
    if not math.isfinite(g):
        raise DomainError("gamma", g, "finite value")
    if not g > 0.0:
        raise DomainError("gamma", g, "gamma > 0")
    if not math.isfinite(a):
        raise DomainError("alpha", a, "finite value")
    if not a > 1.0:
        raise DomainError("alpha", a, "alpha > 1")
    if not math.isfinite(b):
        raise DomainError("beta", b, "finite value")
    if not b > 0.0:
        raise DomainError("beta", b, "beta > 0")


def moments(params: NigParams) -> EvidenceSummary:
    """Decode disparity, aleatoric/epistemic uncertainty, and total evidence.

    aleatoric = beta / (alpha - 1); epistemic = aleatoric / gamma (the exact
    algebraic identity epistemic * gamma == aleatoric holds by construction);
    evidence = 2 gamma + alpha.
    """
    validate(params)
    aleatoric = params.beta / (params.alpha - 1.0)
    return EvidenceSummary(
        disparity=params.delta,
        aleatoric=aleatoric,
        epistemic=aleatoric / params.gamma,
        evidence=2.0 * params.gamma + params.alpha,
    )


def _gamma_rejection(rng: np.random.Generator, shape: float, n: int) -> np.ndarray:
    """n draws from Gamma(shape, scale=1) via Marsaglia-Tsang squeeze rejection.

    For shape >= 1: propose x ~ N(0,1), v = (1 + c x)^3 with d = shape - 1/3,
    c = 1/sqrt(9d); accept when log u < x^2/2 + d - d v + d log v. Acceptance
    exceeds 95%, so the fill loop rarely needs more than two passes. The
    shape < 1 case boosts a Gamma(shape + 1) draw by u^(1/shape).
    """
    if shape < 1.0:
        boosted = _gamma_rejection(rng, shape + 1.0, n)
        u = rng.random(n)
        return boosted * u ** (1.0 / shape)

    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        m = n - filled
        x = rng.standard_normal(m)
        v = (1.0 + c * x) ** 3
        u = rng.random(m)
        positive = v > 0.0
        log_v = np.log(np.where(positive, v, 1.0))
        accept = positive & (np.log(u) < 0.5 * x * x + d - d * v + d * log_v)
        good = d * v[accept]
        out[filled:filled + good.size] = good
        filled += good.size
    return out


def sample(params: NigParams, n: int, seed: int) -> NigSample:
    """Draw n triples (mu, sigma_sq, d) from the generative process.

    sigma^2 ~ InvGamma(alpha, beta) realized as beta / Gamma(alpha, 1) using
    the in-repo rejection sampler, then mu ~ Normal(delta, sigma^2 / gamma)
    and d ~ Normal(mu, sigma^2). Deterministic for a fixed seed: the draw
    order (gamma batch, then the two normal batches) is fixed.
    """
    validate(params)
    if n < 1:
        raise EmptyInput(f"sample requires n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    g = _gamma_rejection(rng, params.alpha, n)
    sigma_sq = params.beta / g
    mu = params.delta + np.sqrt(sigma_sq / params.gamma) * rng.standard_normal(n)
    d = mu + np.sqrt(sigma_sq) * rng.standard_normal(n)
    return NigSample(mu=mu, sigma_sq=sigma_sq, d=d)
