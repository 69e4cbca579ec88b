"""Scene sampling, grasp/place dynamics, and goal checks."""

from __future__ import annotations

import math

import numpy as np

from planact.numerics import Rng

from .config import COLOR_BASE, InfeasibleConfig, N_COLORS, WorldConfig, color_name, noun_name
from .render import render
from .state import (
    EpisodeOver,
    GoalSpec,
    ManualRecord,
    ObjectSpec,
    Placement,
    WorldState,
    footprint_cells,
)

GRASP_RADIUS = 0.5
MOVE_CLAMP = 2.0

INSTRUCTIONS = {
    "lego2d": "assemble the board to match the goal",
    "lego3d": "assemble the board to match the goal",
    "rearrange": "arrange the objects to match the goal",
}


def _staging_slots(config: WorldConfig) -> list[tuple[int, int]]:
    """Anchor cells outside the board window where objects can rest.

    Lego kinds use the two side strips in alternating order; rearrangement
    scatters over every anchor whose footprint stays fully outside the box.
    """
    slots = []
    if config.task_kind in ("lego2d", "lego3d"):
        left_c = 0
        right_c = config.board_col_hi + 1
        for r in range(config.scene_rows):
            slots.append((r, left_c))
            if right_c + config.brick_width <= config.scene_cols:
                slots.append((r, right_c))
        # interleave sides: even index left, odd index right
        left = [s for s in slots if s[1] == left_c]
        right = [s for s in slots if s[1] == right_c]
        slots = []
        for i in range(max(len(left), len(right))):
            if i < len(left):
                slots.append(left[i])
            if i < len(right):
                slots.append(right[i])
    else:
        for r in range(config.scene_rows):
            for c in range(config.scene_cols):
                slots.append((r, c))
    return slots


def _fits_outside_board(config: WorldConfig, anchor: tuple[int, int],
                        footprint: tuple[int, int]) -> bool:
    r, c = anchor
    fh, fw = footprint
    if r < 0 or c < 0 or r + fh > config.scene_rows or c + fw > config.scene_cols:
        return False
    return all(not config.in_board(rr, cc) for rr, cc in footprint_cells(r, c, footprint))


def _build_objects(config: WorldConfig, rng: Rng) -> dict[int, ObjectSpec]:
    n = config.n_objects
    n_groups = -(-n // config.group_size) if n else 0
    colors = (COLOR_BASE + rng.permutation(N_COLORS)[:n_groups]).tolist() if n else []
    taken: set[tuple[int, int]] = set()
    slots = _staging_slots(config)
    scatter = config.task_kind == "rearrange"
    if scatter:
        slots = [tuple(s) for s in rng.permutation(np.array(slots)).tolist()]
    objects = {}
    for oid in range(n):
        group = oid // config.group_size
        fp = config.footprint_for(oid)
        anchor = None
        for cand in slots:
            cells = set(footprint_cells(cand[0], cand[1], fp))
            if _fits_outside_board(config, cand, fp) and not (cells & taken):
                anchor = cand
                break
        if anchor is None:
            raise InfeasibleConfig(f"no staging slot for object {oid}")
        taken |= set(footprint_cells(anchor[0], anchor[1], fp))
        objects[oid] = ObjectSpec(oid=oid, color=colors[group], noun_id=oid % 8,
                                  footprint=fp, staging_anchor=anchor, group=group)
    return objects


def _valid_goal_anchors(config: WorldConfig, heights: np.ndarray, owners: np.ndarray,
                        footprint: tuple[int, int], layer_zero_only: bool,
                        support_groups: set[int] | None) -> list[tuple[int, int, int]]:
    """(r, c, layer) anchors where the footprint sits level and supported."""
    out = []
    fh, fw = footprint
    for r in range(config.board_row_lo, config.board_row_hi - fh + 2):
        for c in range(config.board_col_lo, config.board_col_hi - fw + 2):
            hs = [heights[rr, cc] for rr, cc in footprint_cells(r, c, footprint)]
            k = hs[0]
            if any(h != k for h in hs) or k >= config.max_height:
                continue
            if k > 0:
                if layer_zero_only:
                    continue
                if support_groups is not None:
                    sup = {int(owners[rr, cc]) for rr, cc in footprint_cells(r, c, footprint)}
                    if not sup <= support_groups:
                        continue
            out.append((r, c, k))
    return out


def _sample_goal(config: WorldConfig, objects: dict[int, ObjectSpec], rng: Rng) -> dict[int, Placement]:
    """Iterative placement: one valid random position per object.

    Stacking rules keep every goal executable in canonical (layer, row, col)
    order: with group_size 1, lego objects may rest on any earlier-sampled
    object and rearrangement contents only on the container; with larger
    groups an object may only stack on its own group.
    """
    heights = np.zeros((config.scene_rows, config.scene_cols), dtype=np.int16)
    group_at = np.full((config.scene_rows, config.scene_cols), -1, dtype=np.int16)
    placements: dict[int, Placement] = {}
    groups_placed: set[int] = set()
    for oid in sorted(objects):
        spec = objects[oid]
        if config.group_size > 1:
            support = {spec.group} if spec.group in groups_placed else set()
        elif config.task_kind == "rearrange":
            support = {0} if (oid != 0 and 0 in groups_placed) else set()
        else:
            support = None if placements else set()  # anything already placed
        p_stack = 0.4 if config.task_kind == "lego3d" else 0.3
        want_stack = (config.max_height > 1 and support != set()
                      and rng.uniform() < p_stack)
        cands: list[tuple[int, int, int]] = []
        if want_stack:
            cands = [a for a in _valid_goal_anchors(
                config, heights, group_at, spec.footprint,
                layer_zero_only=False, support_groups=support) if a[2] > 0]
        if not cands:
            cands = _valid_goal_anchors(config, heights, group_at, spec.footprint,
                                        layer_zero_only=True, support_groups=None)
        if not cands:
            raise InfeasibleConfig(f"no valid goal placement for object {oid}")
        r, c, k = cands[rng.integers(0, len(cands))]
        placements[oid] = Placement(int(r), int(c), int(k))
        groups_placed.add(spec.group)
        for rr, cc in footprint_cells(r, c, spec.footprint):
            heights[rr, cc] += 1
            group_at[rr, cc] = spec.group
    return placements


def build_state(config: WorldConfig, objects: dict[int, ObjectSpec],
                placed: dict[int, Placement] | None = None) -> WorldState:
    """A world with the given objects; ``placed`` overrides staging for those ids."""
    occ = np.full((config.scene_rows, config.scene_cols, config.max_height), -1, dtype=np.int16)
    anchors: dict[int, Placement | None] = {}
    status = {}
    for oid, spec in objects.items():
        if placed and oid in placed:
            p = placed[oid]
            status[oid] = "placed"
        else:
            p = Placement(spec.staging_anchor[0], spec.staging_anchor[1], 0)
            status[oid] = "staged"
        anchors[oid] = p
        for r, c in footprint_cells(p.row, p.col, spec.footprint):
            if occ[r, c, p.layer] >= 0:
                raise InfeasibleConfig(f"cell collision at {(r, c, p.layer)}")
            occ[r, c, p.layer] = oid
    return WorldState(
        config=config, objects=objects, occupancy=occ, anchors=anchors, status=status,
        gripper_y=config.scene_rows / 2.0, gripper_x=config.scene_cols / 2.0)


def sample_task(rng: Rng, config: WorldConfig) -> tuple[WorldState, GoalSpec, str]:
    """Fresh episode: all objects staged, a valid random goal, an instruction."""
    config.validate()
    objects = _build_objects(config, rng)
    placements = _sample_goal(config, objects, rng)
    state = build_state(config, objects)
    goal_state = build_state(config, objects, placed=placements)
    goal = GoalSpec(placements=placements, goal_image=render(goal_state, config))
    return state, goal, INSTRUCTIONS[config.task_kind]


# -- dynamics ----------------------------------------------------------------


def _graspable(state: WorldState, oid: int) -> bool:
    p = state.anchors[oid]
    if p is None:
        return False
    for r, c in footprint_cells(p.row, p.col, state.objects[oid].footprint):
        if p.layer + 1 < state.occupancy.shape[2] and state.occupancy[r, c, p.layer + 1] >= 0:
            return False
    return True


def _try_place(state: WorldState, config: WorldConfig) -> bool:
    """Snap the held object's footprint at the gripper; True on success."""
    oid = state.held
    spec = state.objects[oid]
    fh, fw = spec.footprint
    r0 = int(math.floor(state.gripper_y - fh / 2.0 + 0.5))
    c0 = int(math.floor(state.gripper_x - fw / 2.0 + 0.5))
    if r0 < 0 or c0 < 0 or r0 + fh > config.scene_rows or c0 + fw > config.scene_cols:
        return False
    cells = footprint_cells(r0, c0, spec.footprint)
    k = state.column_height(*cells[0])
    for r, c in cells:
        if state.column_height(r, c) != k:
            return False
    if k >= config.max_height:
        return False
    for r, c in cells:
        state.occupancy[r, c, k] = oid
    state.anchors[oid] = Placement(r0, c0, k)
    state.status[oid] = "placed"
    state.held = None
    return True


def _return_to_staging(state: WorldState, config: WorldConfig) -> bool:
    """Failed release: the object goes back to its staging cells (or a free slot)."""
    oid = state.held
    spec = state.objects[oid]
    candidates = [spec.staging_anchor] + _staging_slots(config)
    for cand in candidates:
        if not _fits_outside_board(config, cand, spec.footprint):
            continue
        cells = footprint_cells(cand[0], cand[1], spec.footprint)
        if all(state.occupancy[r, c, 0] < 0 for r, c in cells):
            for r, c in cells:
                state.occupancy[r, c, 0] = oid
            state.anchors[oid] = Placement(cand[0], cand[1], 0)
            state.status[oid] = "staged"
            state.held = None
            return True
    return False  # nowhere to go; object stays held


def apply_action(state: WorldState, action, config: WorldConfig | None = None) -> WorldState:
    """One control step: translate the gripper, then process the grip channel.

    grip > 0 while open closes and grasps the nearest top-layer object within
    0.5 cells (if any); grip < 0 while holding opens and releases: the
    footprint snaps to the cells under the gripper when they are free and
    support-valid, otherwise the object returns to staging and failed_place
    is set.
    """
    config = config or state.config
    if state.steps >= config.step_cap:
        raise EpisodeOver(f"step cap {config.step_cap} reached")
    dy = float(np.clip(action[0], -MOVE_CLAMP, MOVE_CLAMP))
    dx = float(np.clip(action[1], -MOVE_CLAMP, MOVE_CLAMP))
    grip = float(np.clip(action[2], -1.0, 1.0))
    s = state.copy()
    s.failed_place = False
    s.gripper_y = float(np.clip(s.gripper_y + dy, 0.0, config.scene_rows))
    s.gripper_x = float(np.clip(s.gripper_x + dx, 0.0, config.scene_cols))
    if grip > 0 and not s.grip_closed:
        s.grip_closed = True
        best, best_d = None, GRASP_RADIUS
        for oid in s.objects:
            if s.status[oid] == "held" or not _graspable(s, oid):
                continue
            cy, cx = s.centroid_of(oid)
            d = math.hypot(s.gripper_y - cy, s.gripper_x - cx)
            if d <= best_d:
                best, best_d = oid, d
        if best is not None:
            for r, c, k in s.cells_of(best):
                s.occupancy[r, c, k] = -1
            s.anchors[best] = None
            s.status[best] = "held"
            s.held = best
    elif grip < 0 and s.grip_closed:
        s.grip_closed = False
        if s.held is not None:
            if not _try_place(s, config):
                s.failed_place = True
                s.failed_count += 1
                _return_to_staging(s, config)
    s.steps += 1
    return s


# -- goal predicates ------------------------------------------------------------


def check_subgoal(state: WorldState, manual: ManualRecord) -> bool:
    """True iff every object of the manual's group sits exactly at its target."""
    return all(state.anchors.get(oid) == manual.placements[oid] for oid in manual.group)


def check_goal(state: WorldState, goal: GoalSpec) -> bool:
    return all(state.anchors.get(oid) == p for oid, p in goal.placements.items())


def describe_group(config: WorldConfig, objects: dict[int, ObjectSpec],
                   group: tuple[int, ...], placements: dict[int, Placement]) -> str:
    """Template text for a manual step; the anchor cell is the group's first."""
    first = objects[group[0]]
    p = placements[group[0]]
    if config.task_kind == "rearrange":
        return f"{noun_name(first.noun_id)} into box at ({p.row},{p.col})"
    return f"{color_name(first.color)} brick to ({p.row},{p.col})"
