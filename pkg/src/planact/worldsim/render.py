"""Deterministic top-down palette rasterizer."""

from __future__ import annotations

import numpy as np

from .config import (
    ALT_BG_INDEX,
    BAND_STRIDE,
    BG_INDEX,
    BOARD_INDEX,
    COLOR_BASE,
    HIGHLIGHT_INDEX,
    MARKER_INDEX,
    MAX_BAND,
    N_COLORS,
    WorldConfig,
    band_of,
    pixel_value,
)
from .state import Image, WorldState

# Base RGB for palette indices 0..12; brightness bands lighten in steps.
_RGB_BASE = np.array([
    (30, 30, 30),     # 0 background
    (90, 90, 90),     # 1 board / box
    (200, 40, 40),    # 2 red
    (40, 180, 60),    # 3 green
    (50, 90, 220),    # 4 blue
    (230, 210, 50),   # 5 yellow
    (160, 60, 200),   # 6 purple
    (240, 140, 40),   # 7 orange
    (60, 200, 210),   # 8 cyan
    (240, 120, 180),  # 9 pink
    (255, 255, 255),  # 10 highlight
    (255, 0, 255),    # 11 gripper marker
    (20, 60, 20),     # 12 alternate background
], dtype=np.int32)

_BAND_LIGHTEN = 45


def value_to_rgb(value: int) -> tuple[int, int, int]:
    index = value % BAND_STRIDE
    band = value // BAND_STRIDE
    base = _RGB_BASE[index] if index < len(_RGB_BASE) else np.array((0, 0, 0))
    rgb = np.clip(base + _BAND_LIGHTEN * band, 0, 255)
    return (int(rgb[0]), int(rgb[1]), int(rgb[2]))


_RGB_LUT = np.array(
    [value_to_rgb(v) for v in range(BAND_STRIDE * (MAX_BAND + 1))], dtype=np.uint8)


def image_to_rgb(img: Image) -> np.ndarray:
    """255-scaled RGB mapping of palette values, for PSNR and dumps."""
    return _RGB_LUT[img.pixels]


def cell_values(state: WorldState, config: WorldConfig) -> np.ndarray:
    """Per-cell top pixel value (rows, cols)."""
    rows, cols = config.scene_rows, config.scene_cols
    vals = np.full((rows, cols), pixel_value(config.bg_index, band_of(0, config)),
                   dtype=np.uint8)
    board = pixel_value(BOARD_INDEX, band_of(0, config))
    vals[config.board_row_lo:config.board_row_hi + 1,
         config.board_col_lo:config.board_col_hi + 1] = board
    occ = state.occupancy
    for r in range(rows):
        for c in range(cols):
            col = occ[r, c]
            top = -1
            for k in range(col.shape[0]):
                if col[k] >= 0:
                    top = k
                else:
                    break
            if top >= 0:
                color = state.objects[int(col[top])].color
                vals[r, c] = pixel_value(color, band_of(top, config))
    return vals


def render(state: WorldState, config: WorldConfig | None = None,
           show_gripper: bool = False) -> Image:
    """Rasterize the scene; pure function of (state, config, show_gripper).

    Manual/goal images omit the gripper; current-observation images draw it
    as a 2x2-px marker in the top-left corner of its cell, suppressed when
    the cell is covered by an object (the codebook stays within budget).
    """
    config = config or state.config
    cp = config.cell_px
    vals = cell_values(state, config)
    px = np.repeat(np.repeat(vals, cp, axis=0), cp, axis=1)
    if show_gripper:
        ri = min(max(int(np.floor(state.gripper_y)), 0), config.scene_rows - 1)
        ci = min(max(int(np.floor(state.gripper_x)), 0), config.scene_cols - 1)
        under = int(vals[ri, ci]) % BAND_STRIDE
        if under in (BG_INDEX, ALT_BG_INDEX, BOARD_INDEX):
            px[ri * cp:ri * cp + 2, ci * cp:ci * cp + 2] = MARKER_INDEX
    return Image(px)


def write_pgm(img: Image, path: str) -> None:
    """Dump as a binary portable graymap (values spread over 0..255)."""
    data = (img.pixels.astype(np.uint16) * 255 // max(int(img.pixels.max()), 1)).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.width} {img.height}\n255\n".encode())
        f.write(data.tobytes())


def write_ppm(img: Image, path: str) -> None:
    """Dump as a binary portable pixmap using the palette RGB mapping."""
    rgb = image_to_rgb(img)
    with open(path, "wb") as f:
        f.write(f"P6\n{img.width} {img.height}\n255\n".encode())
        f.write(rgb.tobytes())
