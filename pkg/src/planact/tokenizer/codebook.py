"""Exact cell-aligned image tokenizer.

The renderer only ever paints whole-cell blocks plus a fixed-position
gripper marker, so the codebook of cell_px x cell_px patch templates covers
every reachable patch exactly. Encoding is nearest-entry by squared
distance over palette values, which reduces to an exact match on rendered
images; decoding pastes templates back. Round trips are pixel-exact on the
closure of render and prompt-overlay outputs, perturbed configs included.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from planact.worldsim.config import (
    ALT_BG_INDEX,
    BAND_STRIDE,
    BG_INDEX,
    BOARD_INDEX,
    MARKER_INDEX,
    WorldConfig,
)
from planact.worldsim.state import Image

MAGIC = b"MVCB"
VERSION = 1


class UnknownToken(ValueError):
    """Token id outside the codebook."""


class BadDimensions(ValueError):
    """Image dimensions not divisible by the patch size."""


class Codebook:
    """Patch templates, entry 0 reserved for the uniform background patch."""

    def __init__(self, entries: np.ndarray):
        if entries.ndim != 3 or entries.shape[1] != entries.shape[2]:
            raise BadDimensions(f"entries must be (n, p, p), got {entries.shape}")
        self.entries = entries.astype(np.uint8)
        keys = [e.tobytes() for e in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("codebook entries must be distinct")
        self._exact = {k: i for i, k in enumerate(keys)}
        self._flat = self.entries.reshape(len(keys), -1).astype(np.int32)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def patch_size(self) -> int:
        return self.entries.shape[1]

    def encode(self, img: Image) -> np.ndarray:
        """Patch token ids, row-major over the patch grid."""
        p = self.patch_size
        if img.height % p or img.width % p:
            raise BadDimensions(f"{img.height}x{img.width} not divisible by {p}")
        gh, gw = img.height // p, img.width // p
        patches = img.pixels.reshape(gh, p, gw, p).transpose(0, 2, 1, 3).reshape(gh * gw, p * p)
        ids = np.empty(gh * gw, dtype=np.int64)
        pending = []
        for i, patch in enumerate(patches):
            hit = self._exact.get(patch.astype(np.uint8).tobytes())
            if hit is None:
                pending.append(i)
            else:
                ids[i] = hit
        if pending:
            sub = patches[pending].astype(np.int32)
            d = ((sub[:, None, :] - self._flat[None, :, :]) ** 2).sum(-1)
            ids[pending] = d.argmin(axis=1)
        return ids

    def decode(self, ids: np.ndarray, height: int, width: int) -> Image:
        p = self.patch_size
        if height % p or width % p:
            raise BadDimensions(f"{height}x{width} not divisible by {p}")
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= len(self)):
            raise UnknownToken(f"token id out of range [0, {len(self)})")
        gh, gw = height // p, width // p
        if ids.size != gh * gw:
            raise BadDimensions(f"{ids.size} ids cannot fill a {gh}x{gw} grid")
        tiles = self.entries[ids].reshape(gh, gw, p, p)
        return Image(tiles.transpose(0, 2, 1, 3).reshape(height, width).copy())

    # -- persistence: magic, u32 version, u32 count, raw palette bytes ------

    def save(self, path: str) -> None:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<II", VERSION, len(self)))
            f.write(self.entries.tobytes())

    @classmethod
    def load(cls, path: str) -> "Codebook":
        with open(path, "rb") as f:
            blob = f.read()
        if blob[:4] != MAGIC:
            raise ValueError("not a codebook file (bad magic)")
        version, count = struct.unpack("<II", blob[4:12])
        if version != VERSION:
            raise ValueError(f"unsupported codebook version {version}")
        body = np.frombuffer(blob[12:], dtype=np.uint8)
        p = int(round((body.size / count) ** 0.5))
        if count * p * p != body.size:
            raise ValueError("corrupt codebook payload")
        return cls(body.reshape(count, p, p).copy())


def build_codebook(config: WorldConfig) -> Codebook:
    """Enumerate every patch the renderer or prompt overlay can produce.

    Uniform patches for each reachable pixel value, plus gripper-marker
    patches over plain backgrounds (the marker is suppressed over objects).
    Entry 0 is the uniform base background.
    """
    p = config.cell_px
    values = config.used_pixel_values()
    entries = []
    base_bg = BG_INDEX  # entry 0: unshifted background even for perturbed configs
    entries.append(np.full((p, p), base_bg, dtype=np.uint8))
    for v in values:
        patch = np.full((p, p), v, dtype=np.uint8)
        if v != base_bg:
            entries.append(patch)
    marker_bases = set()
    for bg in (BG_INDEX, ALT_BG_INDEX, BOARD_INDEX):
        for band in range(2):  # lighting keeps flat surfaces in bands 0..1
            marker_bases.add(bg + BAND_STRIDE * band)
    for v in sorted(marker_bases):
        patch = np.full((p, p), v, dtype=np.uint8)
        patch[:2, :2] = MARKER_INDEX
        entries.append(patch)
    book = Codebook(np.stack(entries))
    if len(book) > 64:
        raise ValueError(f"codebook exceeds budget: {len(book)} > 64")
    return book


def crc_of_file(path: str) -> int:
    with open(path, "rb") as f:
        return zlib.crc32(f.read())
