"""Projection heads, prototype bank, cosine costs and the temporal prior."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateEmbedding, FormatError, IoError
from .featio import TensorFile, atomic_write_text, read_tensor, write_tensor

CHECKPOINT_FORMAT = "otseg-checkpoint/1"


@dataclass
class LatentModel:
    """Linear heads ``w_img`` (D_img x L), ``w_text`` (D_text x L) and
    unit-norm prototypes (K x L)."""

    w_img: np.ndarray
    w_text: np.ndarray
    prototypes: np.ndarray
    temperature: float = 0.1

    @property
    def k(self) -> int:
        return self.prototypes.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.prototypes.shape[1]

    def copy(self) -> "LatentModel":
        return LatentModel(self.w_img.copy(), self.w_text.copy(), self.prototypes.copy(), self.temperature)


@dataclass
class CostMatrices:
    c_img: np.ndarray
    c_text: np.ndarray
    c_fused: np.ndarray
    prior: np.ndarray | None = None


def normalize_rows(x: np.ndarray, skip: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """L2-normalize rows; returns ``(unit_rows, norms)``.

    Rows flagged in ``skip`` are returned as zeros (sentinel text rows).
    """
    norms = np.linalg.norm(x, axis=1)
    if skip is not None:
        norms = np.where(skip, 1.0, norms)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise DegenerateEmbedding(f"row {bad} projects to the zero vector")
    z = x / norms[:, None]
    if skip is not None:
        z[skip] = 0.0
    return z, norms


def init_model(d_img: int, d_text: int, d_lat: int = 128, k: int = 7, seed: int = 0,
               temperature: float = 0.1) -> LatentModel:
    for name, v in (("d_img", d_img), ("d_text", d_text), ("d_lat", d_lat), ("k", k)):
        if int(v) < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    rng = np.random.default_rng(seed)
    w_img = rng.uniform(-1.0, 1.0, size=(d_img, d_lat)) / np.sqrt(d_img)
    w_text = rng.uniform(-1.0, 1.0, size=(d_text, d_lat)) / np.sqrt(d_text)
    protos = rng.standard_normal((k, d_lat))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    return LatentModel(w_img, w_text, protos, float(temperature))


def fuse(z_img: np.ndarray, z_text: np.ndarray, beta: float, sentinel: np.ndarray | None = None) -> np.ndarray:
    """Unit-normalized beta-mix of the two embeddings; sentinel rows keep ``z_img``."""
    if beta == 1.0:
        return z_img.copy()
    if beta == 0.0:
        z = z_text.copy()
    else:
        z, _ = normalize_rows(beta * z_img + (1.0 - beta) * z_text)
    if sentinel is not None and sentinel.any():
        z[sentinel] = z_img[sentinel]
    return z


def embed(model: LatentModel, x_img: np.ndarray, x_text: np.ndarray, beta: float = 0.5,
          sentinel: np.ndarray | None = None):
    """Project, normalize and fuse; returns ``(z_img, z_text, z_fused)``."""
    z_img, _ = normalize_rows(x_img @ model.w_img)
    z_text, _ = normalize_rows(x_text @ model.w_text, skip=sentinel)
    return z_img, z_text, fuse(z_img, z_text, beta, sentinel)


def cosine_cost(z: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    return 1.0 - z @ prototypes.T


def cost_matrices(z_img, z_text, prototypes, beta: float, sentinel_mask=None) -> CostMatrices:
    c_img = cosine_cost(z_img, prototypes)
    c_text = cosine_cost(z_text, prototypes)
    c_fused = beta * c_img + (1.0 - beta) * c_text
    if sentinel_mask is not None and np.any(sentinel_mask):
        c_fused[sentinel_mask] = c_img[sentinel_mask]
    return CostMatrices(c_img, c_text, c_fused)


def temporal_prior(T: int, K: int, rho: float, radius: float) -> np.ndarray:
    """Banded linear penalty away from the frame/prototype diagonal.

    ``R[i, k] = rho * max(0, |i/(T-1) - k/(K-1)| - radius)``, zero inside the band.
    """
    ti = np.arange(T) / max(T - 1, 1)
    tk = np.arange(K) / max(K - 1, 1)
    return rho * np.maximum(0.0, np.abs(ti[:, None] - tk[None, :]) - radius)


def apply_prior(c: CostMatrices) -> np.ndarray:
    if c.prior is None:
        return c.c_fused.copy()
    return c.c_fused + c.prior


def save_checkpoint(model: LatentModel, directory, extra: dict | None = None) -> None:
    """Write the model as tensor files plus ``manifest.json``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    tensors = {"w_img": model.w_img, "w_text": model.w_text, "prototypes": model.prototypes}
    for name, arr in tensors.items():
        write_tensor(TensorFile(arr, name), out / f"{name}.tsr")
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "temperature": model.temperature,
        "tensors": {name: f"{name}.tsr" for name in tensors},
        **(extra or {}),
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2))


def load_checkpoint(directory) -> LatentModel:
    src = Path(directory)
    try:
        manifest = json.loads((src / "manifest.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read checkpoint manifest in {src}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"checkpoint manifest in {src} is not valid JSON") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{src} is not a checkpoint of format {CHECKPOINT_FORMAT}")
    try:
        arrays = {name: read_tensor(src / fname).data.astype(np.float64)
                  for name, fname in manifest["tensors"].items()}
        model = LatentModel(arrays["w_img"], arrays["w_text"], arrays["prototypes"],
                            float(manifest["temperature"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"checkpoint in {src} is incomplete: {exc}") from exc
    except (IoError, DataError) as exc:
        raise FormatError(f"checkpoint in {src} has a missing or corrupt tensor: {exc}") from exc
    if model.w_img.shape[1] != model.latent_dim or model.w_text.shape[1] != model.latent_dim:
        raise FormatError("checkpoint head and prototype latent dimensions disagree")
    model.prototypes /= np.linalg.norm(model.prototypes, axis=1, keepdims=True)
    return model


def checkpoint_meta(directory) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text(encoding="utf-8"))
