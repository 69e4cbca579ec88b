"""Continuous patch embedder for observation images on the action side.

One feature vector per cell_px patch: a learned linear projection of the
one-hot palette patch plus learned row/column position embeddings. Fully
differentiable through the engine.
"""

from __future__ import annotations

import numpy as np

from planact.numerics import ParameterStore, Tensor, embedding, matmul
from planact.worldsim.config import BAND_STRIDE, MAX_BAND, WorldConfig
from planact.worldsim.state import Image

from .codebook import BadDimensions

N_PIXEL_VALUES = BAND_STRIDE * (MAX_BAND + 1)


class PatchEmbedder:
    """Owns parameter names; weights live in the shared ParameterStore."""

    def __init__(self, config: WorldConfig, d_model: int):
        self.config = config
        self.d_model = d_model
        self.patch = config.cell_px
        self.grid_h = config.scene_rows
        self.grid_w = config.scene_cols
        self.in_dim = self.patch * self.patch * N_PIXEL_VALUES

    @property
    def n_patches(self) -> int:
        return self.grid_h * self.grid_w

    def init_params(self, store: ParameterStore, rng, scale: float = 0.02) -> None:
        store.add("patch/proj_w", rng.normal((self.in_dim, self.d_model)) * scale)
        store.add("patch/proj_b", np.zeros(self.d_model, dtype=np.float32))
        store.add("patch/row", rng.normal((self.grid_h, self.d_model)) * scale)
        store.add("patch/col", rng.normal((self.grid_w, self.d_model)) * scale)

    def onehot_patches(self, images: list[Image]) -> np.ndarray:
        """(B, n_patches, in_dim) one-hot encoding, constant w.r.t. parameters."""
        p = self.patch
        batch = []
        for img in images:
            if img.height != self.grid_h * p or img.width != self.grid_w * p:
                raise BadDimensions(
                    f"image {img.height}x{img.width} does not match "
                    f"{self.grid_h * p}x{self.grid_w * p}")
            tiles = img.pixels.reshape(self.grid_h, p, self.grid_w, p)
            tiles = tiles.transpose(0, 2, 1, 3).reshape(self.n_patches, p * p)
            onehot = np.zeros((self.n_patches, p * p, N_PIXEL_VALUES), dtype=np.float32)
            idx = np.minimum(tiles.astype(np.int64), N_PIXEL_VALUES - 1)
            onehot[np.arange(self.n_patches)[:, None], np.arange(p * p)[None, :], idx] = 1.0
            batch.append(onehot.reshape(self.n_patches, self.in_dim))
        return np.stack(batch)

    def encode(self, store: ParameterStore, images: list[Image]) -> Tensor:
        """(B, n_patches, d_model) features with 2-D position embeddings added."""
        x = Tensor(self.onehot_patches(images))
        feats = matmul(x, store["patch/proj_w"]) + store["patch/proj_b"]
        rows = np.repeat(np.arange(self.grid_h), self.grid_w)
        cols = np.tile(np.arange(self.grid_w), self.grid_h)
        pos = embedding(store["patch/row"], rows) + embedding(store["patch/col"], cols)
        return feats + pos
