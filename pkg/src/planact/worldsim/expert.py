"""Scripted waypoint expert: demonstration source and oracle controller."""

from __future__ import annotations

import numpy as np

from planact.numerics import Rng

from .config import WorldConfig
from .manuals import generate_manual_sequence
from .render import render
from .sim import MOVE_CLAMP, apply_action, check_goal
from .state import DemoFailed, Frame, GoalSpec, ManualRecord, Placement, Trajectory, WorldState


def _target_centroid(spec, p: Placement) -> tuple[float, float]:
    fh, fw = spec.footprint
    return (p.row + fh / 2.0, p.col + fw / 2.0)


def _step_toward(gy: float, gx: float, ty: float, tx: float) -> tuple[float, float] | None:
    dy, dx = ty - gy, tx - gx
    if abs(dy) < 1e-9 and abs(dx) < 1e-9:
        return None
    return (max(-MOVE_CLAMP, min(MOVE_CLAMP, dy)), max(-MOVE_CLAMP, min(MOVE_CLAMP, dx)))


class ScriptedController:
    """Approach -> grasp -> carry -> release, one object at a time.

    Re-derives the pending object from the live state each call, so a failed
    placement is simply retried.
    """

    def __init__(self, manuals: list[ManualRecord], config: WorldConfig):
        self.manuals = manuals
        self.config = config

    def pending_object(self, state: WorldState) -> tuple[int, Placement] | None:
        for manual in self.manuals:
            for oid in manual.group:
                target = manual.placements[oid]
                if state.anchors.get(oid) != target:
                    return oid, target
        return None

    def next_action(self, state: WorldState) -> np.ndarray | None:
        pending = self.pending_object(state)
        if pending is None:
            return None
        oid, target = pending
        spec = state.objects[oid]
        if state.held == oid:
            ty, tx = _target_centroid(spec, target)
            move = _step_toward(state.gripper_y, state.gripper_x, ty, tx)
            if move is not None:
                return np.array([move[0], move[1], 0.0], dtype=np.float32)
            return np.array([0.0, 0.0, -1.0], dtype=np.float32)
        if state.held is not None:
            # wrong object in hand; put it back down wherever valid
            return np.array([0.0, 0.0, -1.0], dtype=np.float32)
        cy, cx = state.centroid_of(oid)
        move = _step_toward(state.gripper_y, state.gripper_x, cy, cx)
        if move is not None:
            return np.array([move[0], move[1], 0.0], dtype=np.float32)
        return np.array([0.0, 0.0, 1.0], dtype=np.float32)


def scripted_demo(initial: WorldState, goal: GoalSpec,
                  config: WorldConfig | None = None,
                  rng: Rng | None = None) -> Trajectory:
    """Run the scripted expert to completion and record every frame.

    Keyframes are exactly the frames where the grip transitions closed->open
    with a successful placement; each keyframe carries its manual's index.
    """
    config = config or initial.config
    manuals = generate_manual_sequence(initial, goal, config, rng)
    controller = ScriptedController(manuals, config)
    frames: list[Frame] = []
    keyframes: list[int] = []
    keyframe_manual_idx: list[int] = []
    state = initial.copy()
    while True:
        if check_goal(state, goal):
            frames.append(Frame(state, render(state, config, show_gripper=True),
                                state.robot_state(), np.zeros(3, dtype=np.float32)))
            break
        if state.steps >= config.step_cap:
            raise DemoFailed(f"step cap {config.step_cap} hit before goal")
        action = controller.next_action(state)
        if action is None:
            raise DemoFailed("controller finished but goal unsatisfied")
        frames.append(Frame(state, render(state, config, show_gripper=True),
                            state.robot_state(), action))
        was_closed = state.grip_closed
        state = apply_action(state, action, config)
        if was_closed and not state.grip_closed and not state.failed_place:
            prev = frames[-1].state
            placed_oid = None
            for oid in state.objects:
                if prev.status[oid] == "held" and state.status[oid] == "placed":
                    placed_oid = oid
            if placed_oid is not None:
                for mi, manual in enumerate(manuals):
                    if placed_oid in manual.group:
                        keyframes.append(len(frames))
                        keyframe_manual_idx.append(mi)
                        break
    return Trajectory(frames=frames, keyframes=keyframes, manuals=manuals,
                      keyframe_manual_idx=keyframe_manual_idx)
