"""World state containers: scene, goal, image, manual, trajectory."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import WorldConfig


class EpisodeOver(RuntimeError):
    """apply_action called after the step cap was reached."""


class DemoFailed(RuntimeError):
    """The scripted expert hit the step cap before satisfying the goal."""


class InfeasibleOrder(RuntimeError):
    """No support-valid placement ordering exists (impossible for valid goals)."""


@dataclass(frozen=True)
class Placement:
    row: int
    col: int
    layer: int


@dataclass(frozen=True)
class ObjectSpec:
    oid: int
    color: int                   # palette index 2..9
    noun_id: int
    footprint: tuple[int, int]   # (rows, cols)
    staging_anchor: tuple[int, int]
    group: int


@dataclass
class Image:
    """Palette-indexed raster; pixels are small ints (index + band encoding)."""

    pixels: np.ndarray  # (h, w) uint8

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "Image":
        return Image(self.pixels.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


def footprint_cells(anchor_r: int, anchor_c: int, footprint: tuple[int, int]):
    fh, fw = footprint
    return [(anchor_r + dr, anchor_c + dc) for dr in range(fh) for dc in range(fw)]


@dataclass
class WorldState:
    """Mutable scene snapshot. Functions treat it as a value (copy-on-write)."""

    config: WorldConfig
    objects: dict[int, ObjectSpec]
    occupancy: np.ndarray                 # (rows, cols, max_height) int16, -1 empty
    anchors: dict[int, Placement | None]  # None while held
    status: dict[int, str]                # staged | placed | held
    gripper_y: float
    gripper_x: float
    grip_closed: bool = False
    held: int | None = None
    steps: int = 0
    failed_place: bool = False
    failed_count: int = 0

    def copy(self) -> "WorldState":
        return WorldState(
            config=self.config,
            objects=self.objects,
            occupancy=self.occupancy.copy(),
            anchors=dict(self.anchors),
            status=dict(self.status),
            gripper_y=self.gripper_y,
            gripper_x=self.gripper_x,
            grip_closed=self.grip_closed,
            held=self.held,
            steps=self.steps,
            failed_place=self.failed_place,
            failed_count=self.failed_count,
        )

    def column_height(self, r: int, c: int) -> int:
        col = self.occupancy[r, c]
        for k in range(col.shape[0]):
            if col[k] < 0:
                return k
        return col.shape[0]

    def cells_of(self, oid: int) -> list[tuple[int, int, int]]:
        p = self.anchors[oid]
        if p is None:
            return []
        return [(r, c, p.layer) for r, c in footprint_cells(p.row, p.col, self.objects[oid].footprint)]

    def centroid_of(self, oid: int) -> tuple[float, float]:
        """(y, x) in cell units of the object's current cells."""
        p = self.anchors[oid]
        fh, fw = self.objects[oid].footprint
        return (p.row + fh / 2.0, p.col + fw / 2.0)

    def robot_state(self) -> np.ndarray:
        """(gripper y, x, grip in {-1,+1}, holding in {0,1})."""
        return np.array([
            self.gripper_y,
            self.gripper_x,
            1.0 if self.grip_closed else -1.0,
            1.0 if self.held is not None else 0.0,
        ], dtype=np.float32)


@dataclass
class GoalSpec:
    placements: dict[int, Placement]
    goal_image: Image


@dataclass
class ManualRecord:
    """One subgoal step: what to move, where (pixels), and how the scene looks after."""

    text: str
    coord: tuple[float, float]           # (U, V): U horizontal px, V vertical px
    subgoal_image: Image
    group: tuple[int, ...]
    group_index: int
    placements: dict[int, Placement] = field(default_factory=dict)


@dataclass
class Frame:
    state: WorldState
    image: Image
    robot_state: np.ndarray
    action: np.ndarray


@dataclass
class Trajectory:
    frames: list[Frame]
    keyframes: list[int]            # frame indices right after successful placements
    manuals: list[ManualRecord]
    keyframe_manual_idx: list[int]  # manual index per keyframe

    def segment_of_frame(self, t: int) -> int:
        """Index of the manual whose group is being worked on at frame t."""
        if not self.manuals:
            return 0
        done = [0] * len(self.manuals)
        for kf, mi in zip(self.keyframes, self.keyframe_manual_idx):
            if kf <= t:
                done[mi] += 1
        for g, manual in enumerate(self.manuals):
            if done[g] < len(manual.group):
                return g
        return len(self.manuals) - 1
