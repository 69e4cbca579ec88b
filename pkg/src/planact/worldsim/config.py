"""World configuration, palette constants, and perturbation axes."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from planact.numerics import Rng

# Pixel value layout: value = index + BAND_STRIDE * brightness_band.
# Indices 0..15 are the base palette; bands encode stack height and lighting.
BG_INDEX = 0
BOARD_INDEX = 1
COLOR_BASE = 2          # object colors occupy indices 2..9
N_COLORS = 8
HIGHLIGHT_INDEX = 10    # prompt-image affordance overlay
MARKER_INDEX = 11       # gripper marker in current-observation images
ALT_BG_INDEX = 12       # background perturbation remaps index 0 here
BAND_STRIDE = 16
MAX_BAND = 3

COLOR_NAMES = ("red", "green", "blue", "yellow", "purple", "orange", "cyan", "pink")
OBJECT_NOUNS = ("bowl", "banana", "can", "cup", "plate", "ball", "book", "bottle")

TASK_KINDS = ("lego2d", "lego3d", "rearrange")
PERTURB_AXES = ("background", "shape", "lighting")


class InfeasibleConfig(ValueError):
    """No valid placement/staging exists for the requested configuration."""


@dataclass(frozen=True)
class WorldConfig:
    """Static description of a block-assembly or rearrangement world."""

    task_kind: str = "lego2d"
    scene_rows: int = 8
    scene_cols: int = 12
    cell_px: int = 4
    n_objects: int = 4
    group_size: int = 1
    step_cap: int = 200
    max_height: int = -1          # -1 means kind default (1 / 3 / 2)
    board_row_lo: int = -1        # -1 means kind default
    board_row_hi: int = -1
    board_col_lo: int = -1
    board_col_hi: int = -1
    brick_width: int = 2          # shape perturbation widens to 3
    bg_index: int = BG_INDEX      # background perturbation remaps to ALT_BG_INDEX
    lighting_shift: int = 0       # lighting perturbation shifts bands by +-1

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise InfeasibleConfig(f"unknown task kind: {self.task_kind}")
        kind = self.task_kind
        defaults = {
            "lego2d": dict(max_height=1, rows=(0, self.scene_rows - 1), cols=(2, 9)),
            "lego3d": dict(max_height=3, rows=(0, self.scene_rows - 1), cols=(2, 9)),
            "rearrange": dict(max_height=2, rows=(1, self.scene_rows - 2), cols=(4, 9)),
        }[kind]
        if self.max_height < 0:
            object.__setattr__(self, "max_height", defaults["max_height"])
        if self.board_row_lo < 0:
            object.__setattr__(self, "board_row_lo", defaults["rows"][0])
            object.__setattr__(self, "board_row_hi", defaults["rows"][1])
        if self.board_col_lo < 0:
            lo, hi = defaults["cols"]
            if kind != "rearrange" and self.brick_width > 2:
                lo, hi = lo + 1, hi - 1  # staging strips must fit wide bricks
            object.__setattr__(self, "board_col_lo", lo)
            object.__setattr__(self, "board_col_hi", hi)
        self.validate()

    def validate(self) -> None:
        if self.cell_px < 2:
            raise InfeasibleConfig("cell_px must be >= 2")
        if not (0 <= self.board_row_lo <= self.board_row_hi < self.scene_rows):
            raise InfeasibleConfig("board window rows must lie inside the scene")
        if not (0 <= self.board_col_lo <= self.board_col_hi < self.scene_cols):
            raise InfeasibleConfig("board window cols must lie inside the scene")
        if self.n_objects < 0:
            raise InfeasibleConfig("n_objects must be >= 0")
        if self.group_size < 1:
            raise InfeasibleConfig("group_size must be >= 1")
        n_groups = -(-self.n_objects // self.group_size)
        if n_groups > N_COLORS:
            raise InfeasibleConfig(
                f"{n_groups} groups need distinct colors but only {N_COLORS} exist")
        if self.max_height < 1 or self.max_height > MAX_BAND:
            raise InfeasibleConfig(f"max_height must be in [1, {MAX_BAND}]")

    # -- derived geometry ---------------------------------------------------

    @property
    def height_px(self) -> int:
        return self.scene_rows * self.cell_px

    @property
    def width_px(self) -> int:
        return self.scene_cols * self.cell_px

    def in_board(self, r: int, c: int) -> bool:
        return (self.board_row_lo <= r <= self.board_row_hi
                and self.board_col_lo <= c <= self.board_col_hi)

    def footprint_for(self, obj_index: int) -> tuple[int, int]:
        """Cells (rows, cols) an object covers; lego bricks are 1 x brick_width."""
        if self.task_kind != "rearrange":
            return (1, self.brick_width)
        if self.brick_width != 2:
            return (1, self.brick_width)
        if obj_index == 0:
            return (1, 2)  # the container
        return (1, 1) if obj_index % 2 == 1 else (1, 2)

    def used_pixel_values(self) -> list[int]:
        """Every pixel value render() or the prompt overlay can emit for this
        task family, including all three perturbation axes. Drives the codebook."""
        values = set()
        bands_light = {0}
        for shift in (-1, 0, 1):
            bands_light.add(max(0, min(MAX_BAND, shift)))
        for bg in (BG_INDEX, ALT_BG_INDEX):
            for b in bands_light:
                values.add(bg + BAND_STRIDE * b)
        for b in bands_light:
            values.add(BOARD_INDEX + BAND_STRIDE * b)
        for color in range(COLOR_BASE, COLOR_BASE + N_COLORS):
            for layer in range(self.max_height):
                for shift in (-1, 0, 1):
                    band = max(0, min(MAX_BAND, layer + shift))
                    values.add(color + BAND_STRIDE * band)
        values.add(HIGHLIGHT_INDEX)
        return sorted(values)


def band_of(layer: int, config: WorldConfig) -> int:
    return max(0, min(MAX_BAND, layer + config.lighting_shift))


def pixel_value(index: int, band: int) -> int:
    return index + BAND_STRIDE * band


def color_name(color_index: int) -> str:
    return COLOR_NAMES[color_index - COLOR_BASE]


def noun_name(noun_id: int) -> str:
    return OBJECT_NOUNS[noun_id % len(OBJECT_NOUNS)]


def perturb(config: WorldConfig, axis: str, rng: Rng) -> WorldConfig:
    """Held-out test-time variation: background, object shape, or lighting."""
    if axis not in PERTURB_AXES:
        raise ValueError(f"unknown perturbation axis: {axis}")
    if axis == "background":
        return dataclasses.replace(config, bg_index=ALT_BG_INDEX)
    if axis == "shape":
        return dataclasses.replace(
            config, brick_width=3,
            board_col_lo=-1, board_col_hi=-1)  # re-derive window for wide staging
    shift = 1 if rng.integers(0, 2) == 1 else -1
    return dataclasses.replace(config, lighting_shift=shift)
