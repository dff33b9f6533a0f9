"""Desk-scale evidential regression and two-expert fusion experiments.

A deliberately small, fully deterministic training stack: a one-hidden-layer
tanh network with four linear heads feeding the same softplus/+1/eps
activation as the volume regression head, optimized by full-batch gradient
descent on the evidential loss (NLL + tau * regularizer). No momentum, no
adaptive optimizers — runs are bit-reproducible for a fixed seed.

Two synthetic generators:

* ``smooth-1d`` — targets on a smooth curve plus heteroscedastic Gaussian
  noise (a linear ramp in x scales ``noise_sigma``; mean factor 1.0, and
  ``noise_sigma = 0`` puts targets exactly on the curve).
* ``two-region`` — the complementary-expert scenario: two noisy observers
  of the same curve, expert 1 accurate for x < 0 and noisy for x >= 0,
  expert 2 the reverse (high-noise level is 4x the low-noise level).

The fusion experiment trains (or analytically constructs) the two experts,
then compares end-point error of each expert, their plain average, and the
evidence-weighted NIG fusion on the held-out split.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from .errors import BadConfig, Divergence
from .fusion import nig_sum
from .head import evidential_activation
from .losses import nll_gradients, nll_values, reg_gradients, reg_values
from .nig import NigParams
from .special import sigmoid

DEFAULT_HIDDEN = 32
DEFAULT_LR = 0.05
DEFAULT_NOISE_SIGMA = 0.1
HIGH_NOISE_RATIO = 4.0
HELDOUT_FRACTION = 0.25

TextSink = Union[str, Path, TextIO]

KINDS = ("smooth-1d", "two-region")


def _curve(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x)


def _smooth_noise_scale(x: np.ndarray) -> np.ndarray:
    # Ramp from 0.2 to 1.8 across x in [-1, 1]; mean factor 1.0.
    return 0.2 + 0.8 * (x + 1.0)


@dataclass(frozen=True)
class SyntheticDataset:
    """Reproducible (x, y) data with a fixed train/held-out split.

    ``y`` is the training target; ``y_clean`` the generating curve. For the
    two-region kind, ``expert_targets[:, i]`` holds expert i's noisy view,
    ``region`` the 0/1 region index, and ``sigma_table[i, r]`` the noise sd
    of expert i in region r.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    y_clean: np.ndarray
    train_idx: np.ndarray
    heldout_idx: np.ndarray
    noise_sigma: float
    seed: int
    expert_targets: Optional[np.ndarray] = None
    region: Optional[np.ndarray] = None
    sigma_table: Optional[np.ndarray] = None


def make_synthetic(kind: str, n: int, noise_sigma: float,
                   seed: int) -> SyntheticDataset:
    """Generate a dataset; deterministic given the seed."""
    if kind not in KINDS:
        raise BadConfig(f"unknown kind {kind!r}; expected one of {KINDS}")
    if n < 16:
        raise BadConfig(f"n must be >= 16, got {n}")
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0.0):
        raise BadConfig(f"noise_sigma must be finite and >= 0, got {noise_sigma!r}")

    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    y_clean = _curve(x)

    expert_targets = None
    region = None
    sigma_table = None
    if kind == "smooth-1d":
        y = y_clean + noise_sigma * _smooth_noise_scale(x) * rng.standard_normal(n)
    else:
        region = (x >= 0.0).astype(np.intp)
        low, high = noise_sigma, HIGH_NOISE_RATIO * noise_sigma
        sigma_table = np.array([[low, high], [high, low]])
        expert_targets = np.column_stack([
            y_clean + sigma_table[0][region] * rng.standard_normal(n),
            y_clean + sigma_table[1][region] * rng.standard_normal(n),
        ])
        y = y_clean.copy()

    perm = rng.permutation(n)
    n_heldout = max(1, int(round(n * HELDOUT_FRACTION)))
    heldout_idx = np.sort(perm[:n_heldout])
    train_idx = np.sort(perm[n_heldout:])
    return SyntheticDataset(kind=kind, x=x, y=y, y_clean=y_clean,
                            train_idx=train_idx, heldout_idx=heldout_idx,
                            noise_sigma=noise_sigma, seed=seed,
                            expert_targets=expert_targets, region=region,
                            sigma_table=sigma_table)


@dataclass(frozen=True)
class ToyModel:
    """One-hidden-layer tanh network with four evidential heads.

    Head logits map through the shared softplus/+1/eps activation, so every
    emitted parameter set satisfies the NIG domain constraints whenever the
    weights are finite.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def initialize(cls, input_dim: int = 1, hidden_dim: int = DEFAULT_HIDDEN,
                   seed: int = 0) -> "ToyModel":
        """Seeded init: weights uniform in [-0.5, 0.5] scaled by 1/sqrt(fan-in),
        biases zero."""
        rng = np.random.default_rng(seed)
        w1 = rng.uniform(-0.5, 0.5, (input_dim, hidden_dim)) / math.sqrt(input_dim)
        w2 = rng.uniform(-0.5, 0.5, (hidden_dim, 4)) / math.sqrt(hidden_dim)
        return cls(w1=w1, b1=np.zeros(hidden_dim), w2=w2, b2=np.zeros(4))

    def predict(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(delta, gamma, alpha, beta) arrays for a batch of inputs."""
        _, _, _, delta, gamma, alpha, beta = _forward_parts(self, x)
        return delta, gamma, alpha, beta

    def predict_params(self, x) -> list[NigParams]:
        delta, gamma, alpha, beta = self.predict(x)
        return [NigParams(float(d), float(g), float(a), float(b))
                for d, g, a, b in zip(delta, gamma, alpha, beta)]


def _forward_parts(model: ToyModel, x):
    features = np.asarray(x, dtype=np.float64).reshape(-1)[:, None]
    hidden = np.tanh(features @ model.w1 + model.b1)
    logits = hidden @ model.w2 + model.b2
    delta = logits[:, 0]
    gamma, alpha, beta = evidential_activation(logits[:, 1], logits[:, 2],
                                               logits[:, 3])
    return features, hidden, logits, delta, gamma, alpha, beta


def loss_and_gradients(model: ToyModel, x, y, tau: float):
    """Mean evidential loss over the batch and its gradient w.r.t. every weight.

    Returns (loss, {"w1": ..., "b1": ..., "w2": ..., "b2": ...}).
    """
    parts = _forward_parts(model, x)
    return _loss_grads_from_parts(model, parts, np.asarray(y, np.float64).reshape(-1), tau)


def _loss_grads_from_parts(model: ToyModel, parts, y: np.ndarray, tau: float):
    features, hidden, logits, delta, gamma, alpha, beta = parts
    n = delta.size

    terms = nll_values(delta, gamma, alpha, beta, y)
    d_delta, d_gamma, d_alpha, d_beta = nll_gradients(delta, gamma, alpha, beta, y)
    if tau != 0.0:
        terms = terms + tau * reg_values(delta, gamma, alpha, y)
        rd, rg, ra, rb = reg_gradients(delta, gamma, alpha, y)
        d_delta = d_delta + tau * rd
        d_gamma = d_gamma + tau * rg
        d_alpha = d_alpha + tau * ra
        d_beta = d_beta + tau * rb
    loss = float(np.mean(terms))

    # Chain through the head activation (softplus' = sigmoid) and the net.
    d_logits = np.column_stack([
        d_delta,
        d_gamma * sigmoid(logits[:, 1]),
        d_alpha * sigmoid(logits[:, 2]),
        d_beta * sigmoid(logits[:, 3]),
    ]) / n
    grad_w2 = hidden.T @ d_logits
    grad_b2 = d_logits.sum(axis=0)
    d_hidden = d_logits @ model.w2.T
    d_pre = d_hidden * (1.0 - hidden * hidden)
    grad_w1 = features.T @ d_pre
    grad_b1 = d_pre.sum(axis=0)
    return loss, {"w1": grad_w1, "b1": grad_b1, "w2": grad_w2, "b2": grad_b2}


@dataclass(frozen=True)
class TrainingCurves:
    """Per-epoch records: mean loss, mean aleatoric/epistemic over the train
    split, and held-out end-point error against the generating curve."""

    epoch: tuple[int, ...]
    loss: tuple[float, ...]
    mean_aleatoric: tuple[float, ...]
    mean_epistemic: tuple[float, ...]
    heldout_epe: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.epoch)


def train(model: Optional[ToyModel], dataset: SyntheticDataset, tau: float = 0.5,
          lr: float = DEFAULT_LR, epochs: int = 300,
          seed: int = 0) -> tuple[ToyModel, TrainingCurves]:
    """Full-batch gradient descent; one curve record per completed epoch.

    Curve values are measured on the pre-update weights of each epoch. When
    ``model`` is None a fresh default model is initialized from ``seed``
    (training itself is deterministic, so the seed has no other use).
    Raises Divergence with the epoch index if the loss turns non-finite.
    """
    if not (math.isfinite(lr) and lr >= 0.0):
        raise BadConfig(f"lr must be finite and >= 0, got {lr!r}")
    if not (math.isfinite(tau) and tau >= 0.0):
        raise BadConfig(f"tau must be finite and >= 0, got {tau!r}")
    if epochs < 0:
        raise BadConfig(f"epochs must be >= 0, got {epochs}")
    if model is None:
        model = ToyModel.initialize(seed=seed)

    x_train = dataset.x[dataset.train_idx]
    y_train = dataset.y[dataset.train_idx]
    x_held = dataset.x[dataset.heldout_idx]
    truth_held = dataset.y_clean[dataset.heldout_idx]

    rec_epoch: list[int] = []
    rec_loss: list[float] = []
    rec_al: list[float] = []
    rec_ep: list[float] = []
    rec_epe: list[float] = []

    current = model
    for epoch in range(epochs):
        parts = _forward_parts(current, x_train)
        loss, grads = _loss_grads_from_parts(current, parts, y_train, tau)
        if not math.isfinite(loss):
            raise Divergence(epoch)

        _, _, _, _, gamma, alpha, beta = parts
        aleatoric = beta / (alpha - 1.0)
        held_delta = current.predict(x_held)[0]
        rec_epoch.append(epoch)
        rec_loss.append(loss)
        rec_al.append(float(np.mean(aleatoric)))
        rec_ep.append(float(np.mean(aleatoric / gamma)))
        rec_epe.append(float(np.mean(np.abs(held_delta - truth_held))))

        current = ToyModel(w1=current.w1 - lr * grads["w1"],
                           b1=current.b1 - lr * grads["b1"],
                           w2=current.w2 - lr * grads["w2"],
                           b2=current.b2 - lr * grads["b2"])

    for arr in (current.w1, current.b1, current.w2, current.b2):
        if not np.all(np.isfinite(arr)):
            raise Divergence(max(epochs - 1, 0), "weights became non-finite")

    curves = TrainingCurves(epoch=tuple(rec_epoch), loss=tuple(rec_loss),
                            mean_aleatoric=tuple(rec_al),
                            mean_epistemic=tuple(rec_ep),
                            heldout_epe=tuple(rec_epe))
    return current, curves


@dataclass(frozen=True, slots=True)
class FusionTable:
    """Held-out end-point errors of the two experts, their plain average,
    and the evidence-weighted NIG fusion."""

    expert1_epe: float
    expert2_epe: float
    avg_epe: float
    monig_epe: float


def fusion_experiment(dataset: SyntheticDataset, seed: int,
                      experts: str = "trained", tau: float = 0.5,
                      lr: float = DEFAULT_LR, epochs: int = 300,
                      hidden_dim: int = DEFAULT_HIDDEN) -> FusionTable:
    """Two-expert comparison on the held-out split of a two-region dataset.

    experts="trained": fit one model per expert channel (seeds seed, seed+1).
    experts="oracle": expert i predicts its own noisy observation with
    analytic evidence gamma = 1 / sigma_i^2(region) (alpha = 2, beta chosen
    so the aleatoric moment equals sigma_i^2), isolating the value of
    precision weighting from fit quality.
    """
    if dataset.kind != "two-region" or dataset.expert_targets is None:
        raise BadConfig("fusion_experiment requires a two-region dataset")
    if experts not in ("trained", "oracle"):
        raise BadConfig(f"unknown experts mode {experts!r}")

    held = dataset.heldout_idx
    x_held = dataset.x[held]
    truth = dataset.y_clean[held]

    if experts == "oracle":
        if dataset.noise_sigma <= 0.0:
            raise BadConfig("oracle experts need noise_sigma > 0")
        preds = []
        for i in (0, 1):
            delta = dataset.expert_targets[held, i]
            sig_sq = dataset.sigma_table[i][dataset.region[held]] ** 2
            gamma = 1.0 / sig_sq
            alpha = np.full_like(delta, 2.0)
            beta = sig_sq.copy()
            preds.append((delta, gamma, alpha, beta))
    else:
        preds = []
        for i in (0, 1):
            expert_ds = replace(dataset, y=dataset.expert_targets[:, i])
            init = ToyModel.initialize(hidden_dim=hidden_dim, seed=seed + i)
            fitted, _ = train(init, expert_ds, tau=tau, lr=lr, epochs=epochs)
            preds.append(fitted.predict(x_held))

    (d1, g1, a1, b1), (d2, g2, a2, b2) = preds
    fused_delta = np.empty_like(d1)
    for j in range(d1.size):
        fused = nig_sum(NigParams(float(d1[j]), float(g1[j]), float(a1[j]), float(b1[j])),
                        NigParams(float(d2[j]), float(g2[j]), float(a2[j]), float(b2[j])))
        fused_delta[j] = fused.delta

    return FusionTable(
        expert1_epe=float(np.mean(np.abs(d1 - truth))),
        expert2_epe=float(np.mean(np.abs(d2 - truth))),
        avg_epe=float(np.mean(np.abs(0.5 * (d1 + d2) - truth))),
        monig_epe=float(np.mean(np.abs(fused_delta - truth))),
    )


# CSV emission (RFC-4180-style, header row first).

def _open_text(sink: TextSink):
    if isinstance(sink, (str, Path)):
        return open(sink, "w", newline=""), True
    return sink, False


def write_curves_csv(curves: TrainingCurves, sink: TextSink) -> None:
    fh, close = _open_text(sink)
    try:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "mean_al", "mean_ep", "heldout_epe"])
        for i in range(len(curves)):
            writer.writerow([curves.epoch[i], repr(curves.loss[i]),
                             repr(curves.mean_aleatoric[i]),
                             repr(curves.mean_epistemic[i]),
                             repr(curves.heldout_epe[i])])
    finally:
        if close:
            fh.close()


def write_fusion_table_csv(table: FusionTable, sink: TextSink) -> None:
    fh, close = _open_text(sink)
    try:
        writer = csv.writer(fh)
        writer.writerow(["expert1_epe", "expert2_epe", "avg_epe", "monig_epe"])
        writer.writerow([repr(table.expert1_epe), repr(table.expert2_epe),
                         repr(table.avg_epe), repr(table.monig_epe)])
    finally:
        if close:
            fh.close()
