"""NIG summation operator, the MoNIG fold, and grid-level fusion.

The summation of two NIG states (delta1, gamma1, alpha1, beta1) and
(delta2, gamma2, alpha2, beta2) is

    gamma = gamma1 + gamma2
    delta = (gamma1 delta1 + gamma2 delta2) / gamma
    alpha = alpha1 + alpha2 + 1/2
    beta  = beta1 + beta2 + 1/2 gamma1 (delta1 - delta)^2
                          + 1/2 gamma2 (delta2 - delta)^2

delta is the evidence-weighted mean; beta absorbs the squared disagreement
between the operands, so conflicting inputs inflate the fused uncertainty
while agreeing inputs do not. Evidence (gamma, alpha) strictly accumulates,
hence fusion never leaves the valid parameter domain.

A mixture of several NIG states is the left-to-right fold of this operator.
The fold order is fixed for bit-reproducibility; ordering invariance holds
numerically (the fold has a closed form symmetric in its inputs) and is
verified by the test suite, not assumed here.

Grid fusion applies the same arithmetic to whole planes; because the scalar
and grid paths share one kernel, a fused map is bit-identical to folding
each pixel separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, ShapeMismatch
from .maps import EvidentialMap
from .nig import NigParams, validate


def _sum_kernel(d1, g1, a1, b1, d2, g2, a2, b2):
    # Shared by the scalar and grid paths; operation order is part of the
    # bit-determinism contract.
    g = g1 + g2
    d = (g1 * d1 + g2 * d2) / g
    a = a1 + a2 + 0.5
    t1 = d1 - d
    t2 = d2 - d
    b = b1 + b2 + 0.5 * g1 * (t1 * t1) + 0.5 * g2 * (t2 * t2)
    return d, g, a, b


def nig_sum(first: NigParams, second: NigParams) -> NigParams:
    """Fuse two NIG states; the result's gamma strictly exceeds each input's."""
    validate(first)
    validate(second)
    d, g, a, b = _sum_kernel(first.delta, first.gamma, first.alpha, first.beta,
                             second.delta, second.gamma, second.alpha, second.beta)
    return NigParams(delta=float(d), gamma=float(g), alpha=float(a), beta=float(b))


def monig_fold(inputs: Sequence[NigParams]) -> NigParams:
    """Left-to-right fold of nig_sum; a single input is returned unchanged."""
    if len(inputs) == 0:
        raise EmptyInput("monig_fold requires at least one input")
    for params in inputs:
        validate(params)
    acc = inputs[0]
    for params in inputs[1:]:
        acc = nig_sum(acc, params)
    return acc


@dataclass(frozen=True, slots=True)
class FusionTrace:
    """Diagnostic record of one fold: inputs, output, per-input delta weight
    (gamma_i / sum gamma_j; sums to 1 within 1e-12)."""

    inputs: tuple[NigParams, ...]
    output: NigParams
    weights: tuple[float, ...]


def fold_trace(inputs: Sequence[NigParams]) -> FusionTrace:
    """monig_fold plus the evidence weights each input contributed to delta."""
    output = monig_fold(inputs)
    total = sum(p.gamma for p in inputs)
    weights = tuple(p.gamma / total for p in inputs)
    return FusionTrace(inputs=tuple(inputs), output=output, weights=weights)


def _require_same_shape(*emaps: EvidentialMap) -> None:
    shapes = {m.shape for m in emaps}
    if len(shapes) != 1:
        raise ShapeMismatch(f"map shapes differ: {sorted(shapes)}")


def intra_fuse(first: EvidentialMap, second: EvidentialMap,
               third: EvidentialMap) -> EvidentialMap:
    """Per-pixel fold of three equally shaped maps (multi-scale branch merge)."""
    _require_same_shape(first, second, third)
    d, g, a, b = _sum_kernel(first.delta, first.gamma, first.alpha, first.beta,
                             second.delta, second.gamma, second.alpha, second.beta)
    d, g, a, b = _sum_kernel(d, g, a, b,
                             third.delta, third.gamma, third.alpha, third.beta)
    return EvidentialMap(d, g, a, b)


def inter_fuse(local_map: EvidentialMap, global_map: EvidentialMap) -> EvidentialMap:
    """Per-pixel nig_sum of the local (cost-volume) and global (transformer)
    branch outputs."""
    _require_same_shape(local_map, global_map)
    d, g, a, b = _sum_kernel(local_map.delta, local_map.gamma,
                             local_map.alpha, local_map.beta,
                             global_map.delta, global_map.gamma,
                             global_map.alpha, global_map.beta)
    return EvidentialMap(d, g, a, b)
