"""Self-training: transport plans become soft targets for the fused-embedding
cluster probabilities, and heads plus prototypes follow plain SGD."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .errors import ConfigError, InternalError
from .featio import FeatureBundle
from .latent import (CostMatrices, LatentModel, cosine_cost, cost_matrices, fuse, init_model,
                     normalize_rows, temporal_prior)
from .transport import TransportPlan, TransportProblem, solve

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


# ---------------------------------------------------------------- inputs / costs

def stream_inputs(bundle: FeatureBundle, mode: str):
    """Visual/text inputs as seen by the heads; ``concat`` feeds one joint head."""
    if mode == "concat":
        return np.hstack([bundle.visual, bundle.text]), bundle.text, bundle.sentinel
    return bundle.visual, bundle.text, bundle.sentinel


def input_dims(bundle: FeatureBundle, mode: str) -> tuple[int, int]:
    x_img, x_text, _ = stream_inputs(bundle, mode)
    return x_img.shape[1], x_text.shape[1]


def new_model(bundle: FeatureBundle, config: RunConfig, k: int | None = None) -> LatentModel:
    d_img, d_text = input_dims(bundle, config.fusion_mode)
    t = config.train
    return init_model(d_img, d_text, t.latent_dim, config.k if k is None else k, t.seed, t.temperature)


def _embeddings(model: LatentModel, x_img, x_text, sentinel, mode: str, beta: float):
    z_img, n_img = normalize_rows(x_img @ model.w_img)
    z_text, n_text = normalize_rows(x_text @ model.w_text, skip=sentinel)
    if mode == "multimodal-cost":
        z = fuse(z_img, z_text, beta, sentinel)
    elif mode == "text-only":
        z = z_text
    else:
        z = z_img
    return z_img, n_img, z_text, n_text, z


def effective_cost(model: LatentModel, bundle: FeatureBundle, config: RunConfig):
    """Per-frame cost (including the temporal prior) for the configured fusion mode.

    Returns ``(cost, CostMatrices)``.
    """
    mode = config.fusion_mode
    x_img, x_text, sentinel = stream_inputs(bundle, mode)
    z_img, _, z_text, _, _ = _embeddings(model, x_img, x_text, sentinel, mode, config.beta)
    A = model.prototypes
    if mode == "multimodal-cost":
        costs = cost_matrices(z_img, z_text, A, config.beta, sentinel)
    else:
        c_img = cosine_cost(z_img, A)
        c_text = cosine_cost(z_text, A)
        costs = CostMatrices(c_img, c_text, c_text if mode == "text-only" else c_img)
    T, K = costs.c_fused.shape
    costs.prior = temporal_prior(T, K, config.rho, config.radius)
    return costs.c_fused + costs.prior, costs


def segment(model: LatentModel, bundle: FeatureBundle, config: RunConfig) -> TransportPlan:
    cost, _ = effective_cost(model, bundle, config)
    return solve(TransportProblem.from_config(cost, config))


# ---------------------------------------------------------------- loss

def cluster_probs(z_fused: np.ndarray, model: LatentModel) -> np.ndarray:
    logits = z_fused @ model.prototypes.T / model.temperature
    logits -= logits.max(axis=1, keepdims=True)
    q = np.exp(logits)
    return q / q.sum(axis=1, keepdims=True)


def pseudo_labels(plan, hard: bool = False) -> np.ndarray:
    """Row-rescaled plan (rows sum to one), or its one-hot argmax with ``hard``."""
    P = np.asarray(getattr(plan, "plan", plan), dtype=np.float64)
    rows = P.sum(axis=1, keepdims=True)
    if np.any(rows <= 0):
        raise InternalError("transport plan has an empty row")
    if hard:
        out = np.zeros_like(P)
        out[np.arange(P.shape[0]), np.argmax(P, axis=1)] = 1.0
        return out
    return P / rows


def _unit_backward(z: np.ndarray, norms: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Backprop through ``z = x / |x|`` row-wise."""
    return (grad - z * np.sum(z * grad, axis=1, keepdims=True)) / norms[:, None]


def loss_and_grads(batch: FeatureBundle, P: np.ndarray, model: LatentModel, beta: float = 0.5,
                   mode: str = "multimodal-cost"):
    """Cross-entropy of the cluster probabilities against soft targets ``P``.

    Returns ``(loss, {"w_img", "w_text", "prototypes"})`` with exact analytic
    gradients; prototypes are treated as free (unnormalized) parameters.
    """
    x_img, x_text, sentinel = stream_inputs(batch, mode)
    T = x_img.shape[0]
    z_img, n_img, z_text, n_text, z = _embeddings(model, x_img, x_text, sentinel, mode, beta)
    A = model.prototypes
    tau = model.temperature

    logits = z @ A.T / tau
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_q = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    Q = np.exp(log_q)
    loss = -float(np.sum(P * np.maximum(log_q, np.log(LOG_FLOOR)))) / T

    d_logits = (Q - P) / T
    d_A = d_logits.T @ z / tau
    d_z = d_logits @ A / tau

    d_zimg = np.zeros_like(z_img)
    d_ztext = np.zeros_like(z_text)
    if mode == "multimodal-cost":
        if beta == 1.0:
            d_zimg = d_z
        else:
            live = ~sentinel
            d_zimg[sentinel] = d_z[sentinel]
            if beta == 0.0:
                d_ztext[live] = d_z[live]
            else:
                mix = beta * z_img[live] + (1.0 - beta) * z_text[live]
                n_mix = np.linalg.norm(mix, axis=1)
                d_mix = _unit_backward(z[live], n_mix, d_z[live])
                d_zimg[live] = beta * d_mix
                d_ztext[live] = (1.0 - beta) * d_mix
    elif mode == "text-only":
        d_ztext = d_z
    else:
        d_zimg = d_z

    d_ztext[sentinel] = 0.0
    d_w_img = x_img.T @ _unit_backward(z_img, n_img, d_zimg)
    d_w_text = x_text.T @ _unit_backward(z_text, n_text, d_ztext)
    return loss, {"w_img": d_w_img, "w_text": d_w_text, "prototypes": d_A}


# ---------------------------------------------------------------- loop

@dataclass
class TrainState:
    model: LatentModel
    epoch: int = 0
    step: int = 0
    loss_history: list[float] = field(default_factory=list)
    rng_seed: int = 0
    log_records: list[dict] = field(default_factory=list)

    def epoch_means(self, steps_per_epoch: int, n_videos: int = 1) -> list[float]:
        per = steps_per_epoch * n_videos
        h = np.asarray(self.loss_history)
        return [float(h[i:i + per].mean()) for i in range(0, len(h), per)]


def sgd_step(model: LatentModel, grads: dict, lr: float) -> None:
    model.w_img -= lr * grads["w_img"]
    model.w_text -= lr * grads["w_text"]
    model.prototypes -= lr * grads["prototypes"]
    # projection back onto the unit sphere
    model.prototypes /= np.linalg.norm(model.prototypes, axis=1, keepdims=True)


def train(bundles: list[FeatureBundle], config: RunConfig, model: LatentModel | None = None,
          log_fh=None) -> TrainState:
    """Alternate per-video transport solves with SGD steps on the frozen targets."""
    if not bundles:
        raise ConfigError("training needs at least one video")
    mode = config.fusion_mode
    dims = {input_dims(b, mode) for b in bundles}
    if len(dims) != 1:
        raise ConfigError(f"videos disagree on feature dimensions: {sorted(dims)}")
    t = config.train
    model = new_model(bundles[0], config) if model is None else model.copy()
    if (model.w_img.shape[0], model.w_text.shape[0]) != dims.pop():
        raise ConfigError("model head sizes do not match the feature dimensions")
    state = TrainState(model=model, rng_seed=t.seed)
    for epoch in range(t.epochs):
        state.epoch = epoch
        for bundle in bundles:
            result = segment(model, bundle, config)
            P = pseudo_labels(result, hard=t.hard_labels)
            for _ in range(t.steps_per_epoch):
                loss, grads = loss_and_grads(bundle, P, model, config.beta, mode)
                if not np.isfinite(loss):
                    raise InternalError(f"loss became non-finite at step {state.step}")
                sgd_step(model, grads, t.learning_rate)
                state.loss_history.append(loss)
                record = {"epoch": epoch, "step": state.step, "video_id": bundle.video_id,
                          "loss": loss, "ot_converged": bool(result.converged)}
                state.log_records.append(record)
                if log_fh is not None:
                    log_fh.write(json.dumps(record) + "\n")
                state.step += 1
        log.debug("epoch %d mean loss %.5f", epoch,
                  np.mean(state.loss_history[-t.steps_per_epoch * len(bundles):]))
    if t.epochs:
        state.epoch = t.epochs
    return state


def fit_predict(bundle: FeatureBundle, config: RunConfig, k: int | None = None):
    """Train a fresh model on one video and return ``(TrainState, TransportPlan)``."""
    if k is not None:
        config = config.replace(k=k)
    state = train([bundle], config)
    return state, segment(state.model, bundle, config)
