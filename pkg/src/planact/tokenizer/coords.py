"""Pixel-coordinate tokenizers: one bin per pixel along each axis.

Bins are floor-quantized and decode to bin centers, so the round-trip error
is at most 0.5 px everywhere in range (and exactly 0.5 on the integer
centroids the renderer produces).
"""

from __future__ import annotations

import math


class OutOfBounds(ValueError):
    """Coordinate outside the image."""


class CoordCodec:
    def __init__(self, width_px: int, height_px: int):
        self.width_px = width_px
        self.height_px = height_px

    def encode(self, coord) -> tuple[int, int]:
        u, v = float(coord[0]), float(coord[1])
        if not (0.0 <= u < self.width_px) or not (0.0 <= v < self.height_px):
            raise OutOfBounds(f"({u}, {v}) outside {self.width_px}x{self.height_px}")
        u_id = min(int(math.floor(u)), self.width_px - 1)
        v_id = min(int(math.floor(v)), self.height_px - 1)
        return (u_id, v_id)

    def decode(self, ids) -> tuple[float, float]:
        u_id, v_id = int(ids[0]), int(ids[1])
        if not (0 <= u_id < self.width_px) or not (0 <= v_id < self.height_px):
            raise OutOfBounds(f"ids ({u_id}, {v_id}) outside bin range")
        return (u_id + 0.5, v_id + 0.5)
