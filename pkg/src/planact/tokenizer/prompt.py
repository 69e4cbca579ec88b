"""Affordance prompt image: highlight the target footprint on the observation."""

from __future__ import annotations

import math

from planact.worldsim.config import HIGHLIGHT_INDEX, WorldConfig
from planact.worldsim.state import Image

from .coords import OutOfBounds


def build_prompt_image(current: Image, coord, footprint: tuple[int, int],
                       config: WorldConfig) -> Image:
    """Copy of ``current`` with the footprint's cell block centered at (U, V)
    painted with the highlight value; every other pixel is untouched.

    Idempotent: overlaying the same coordinate twice equals once.
    """
    u, v = float(coord[0]), float(coord[1])
    fh, fw = footprint
    cp = config.cell_px
    r0 = math.floor((v / cp) - fh / 2.0 + 0.5)
    c0 = math.floor((u / cp) - fw / 2.0 + 0.5)
    if r0 < 0 or c0 < 0 or r0 + fh > config.scene_rows or c0 + fw > config.scene_cols:
        raise OutOfBounds(f"overlay at ({u}, {v}) leaves the image")
    out = current.copy()
    out.pixels[r0 * cp:(r0 + fh) * cp, c0 * cp:(c0 + fw) * cp] = HIGHLIGHT_INDEX
    return out
