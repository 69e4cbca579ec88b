"""Procedural block-assembly and rearrangement worlds with a scripted expert."""

from .config import (
    ALT_BG_INDEX,
    BAND_STRIDE,
    BG_INDEX,
    BOARD_INDEX,
    COLOR_BASE,
    COLOR_NAMES,
    HIGHLIGHT_INDEX,
    MARKER_INDEX,
    N_COLORS,
    OBJECT_NOUNS,
    InfeasibleConfig,
    WorldConfig,
    color_name,
    noun_name,
    perturb,
)
from .expert import ScriptedController, scripted_demo
from .manuals import canonical_groups, generate_manual_sequence, group_coord
from .render import image_to_rgb, render, value_to_rgb, write_pgm, write_ppm
from .sim import (
    GRASP_RADIUS,
    MOVE_CLAMP,
    apply_action,
    build_state,
    check_goal,
    check_subgoal,
    describe_group,
    sample_task,
)
from .state import (
    DemoFailed,
    EpisodeOver,
    Frame,
    GoalSpec,
    Image,
    InfeasibleOrder,
    ManualRecord,
    ObjectSpec,
    Placement,
    Trajectory,
    WorldState,
    footprint_cells,
)

__all__ = [
    "WorldConfig", "WorldState", "GoalSpec", "Image", "ManualRecord",
    "Trajectory", "ObjectSpec", "Placement", "Frame", "InfeasibleConfig",
    "InfeasibleOrder", "EpisodeOver", "DemoFailed", "sample_task",
    "apply_action", "check_goal", "check_subgoal", "render", "perturb",
    "generate_manual_sequence", "scripted_demo", "ScriptedController",
    "build_state", "canonical_groups", "group_coord", "describe_group",
    "image_to_rgb", "value_to_rgb", "write_pgm", "write_ppm",
    "footprint_cells", "color_name", "noun_name", "GRASP_RADIUS", "MOVE_CLAMP",
    "BG_INDEX", "BOARD_INDEX", "COLOR_BASE", "N_COLORS", "HIGHLIGHT_INDEX",
    "MARKER_INDEX", "ALT_BG_INDEX", "BAND_STRIDE", "COLOR_NAMES", "OBJECT_NOUNS",
]
