"""Dataset builders: planner frames, pick-place pretraining demos, full demos."""

from __future__ import annotations

import dataclasses
import os

import numpy as np

from planact.numerics import Rng

from . import dataio
from .config import WorldConfig, color_name, noun_name
from .expert import scripted_demo
from .manuals import generate_manual_sequence
from .render import render
from .sim import sample_task
from .state import GoalSpec, Trajectory, WorldState

CHUNK_LEN = 8


def action_chunk(traj: Trajectory, t: int, h: int = CHUNK_LEN) -> np.ndarray:
    """h consecutive actions from frame t, zero-padded past the episode end."""
    chunk = np.zeros((h, 3), dtype=np.float32)
    for i in range(h):
        if t + i < len(traj.frames):
            chunk[i] = traj.frames[t + i].action
    return chunk


def pretrain_instruction(config: WorldConfig, state: WorldState, goal) -> str:
    """Single-object pick-place instruction naming the object and target cell."""
    oid = next(iter(goal.placements))
    spec = state.objects[oid]
    p = goal.placements[oid]
    if config.task_kind == "rearrange":
        return f"place the {noun_name(spec.noun_id)} at ({p.row},{p.col})"
    return f"move the {color_name(spec.color)} brick to ({p.row},{p.col})"


def gen_manual_dataset(config: WorldConfig, n_frames: int, master_seed: int,
                       min_objects: int = 2, max_objects: int = 6) -> list[dict]:
    """Iterative-placement frames for planner training (one per manual step)."""
    records: list[dict] = []
    episode = 0
    while len(records) < n_frames:
        rng = Rng(master_seed).spawn(episode)
        n_obj = int(rng.integers(min_objects, max_objects + 1))
        cfg = dataclasses.replace(config, n_objects=n_obj)
        state, goal, instruction = sample_task(rng, cfg)
        manuals = generate_manual_sequence(state, goal, cfg, rng)
        current = render(state, cfg)
        for manual in manuals:
            records.append(dataio.manual_record_fields(
                instruction, current, goal.goal_image,
                manual.text, manual.coord, manual.subgoal_image))
            current = manual.subgoal_image
        episode += 1
    return records[:n_frames]


def gen_pretrain_dataset(config: WorldConfig, n_demos: int, master_seed: int) -> list[dict]:
    """Single-object pick-place demos without manuals (prompt = raw observation)."""
    records: list[dict] = []
    for episode in range(n_demos):
        rng = Rng(master_seed).spawn(episode)
        cfg = dataclasses.replace(config, n_objects=1)
        state, goal, _ = sample_task(rng, cfg)
        instruction = pretrain_instruction(cfg, state, goal)
        traj = scripted_demo(state, goal, cfg, rng)
        for t in range(len(traj.frames) - 1):
            frame = traj.frames[t]
            records.append(dataio.action_record_fields(
                frame.image, frame.robot_state, action_chunk(traj, t),
                "-", instruction, frame.image))
    return records


def gen_demo_dataset(config: WorldConfig, n_demos: int, master_seed: int):
    """Full-task demos with manuals attached.

    Returns (manual_records, action_records); each action record's manual_ref
    is the line index of its segment's manual. The manual's current image is
    the observation at the segment's first frame; the action record keeps the
    raw per-frame observation alongside the overlaid prompt image.
    """
    from planact.tokenizer.prompt import build_prompt_image

    manual_records: list[dict] = []
    action_records: list[dict] = []
    for episode in range(n_demos):
        rng = Rng(master_seed).spawn(episode)
        state, goal, instruction = sample_task(rng, config)
        traj = scripted_demo(state, goal, config, rng)
        seg_start_image = {}
        for t in range(len(traj.frames)):
            seg = traj.segment_of_frame(t)
            if seg not in seg_start_image:
                seg_start_image[seg] = traj.frames[t].image
        manual_base = len(manual_records)
        for mi, manual in enumerate(traj.manuals):
            manual_records.append(dataio.manual_record_fields(
                instruction, seg_start_image.get(mi, traj.frames[0].image),
                goal.goal_image, manual.text, manual.coord, manual.subgoal_image))
        for t in range(len(traj.frames) - 1):
            frame = traj.frames[t]
            seg = traj.segment_of_frame(t)
            manual = traj.manuals[seg]
            spec = state.objects[manual.group[0]]
            prompt = build_prompt_image(frame.image, manual.coord, spec.footprint, config)
            action_records.append(dataio.action_record_fields(
                prompt, frame.robot_state, action_chunk(traj, t),
                str(manual_base + seg), instruction, frame.image))
    return manual_records, action_records


def write_dataset(out_dir: str, kind: str, config: WorldConfig, n: int, seed: int) -> dict:
    """Generate and write one dataset; returns a small summary dict."""
    os.makedirs(out_dir, exist_ok=True)
    if kind == "manual":
        records = gen_manual_dataset(config, n, seed)
        dataio.write_records(os.path.join(out_dir, "manual.tsv"), records, dataio.MANUAL_FIELDS)
        return {"kind": kind, "records": len(records)}
    if kind == "pretrain":
        records = gen_pretrain_dataset(config, n, seed)
        dataio.write_records(os.path.join(out_dir, "action.tsv"), records, dataio.ACTION_FIELDS)
        return {"kind": kind, "records": len(records)}
    if kind == "demos":
        manual_records, action_records = gen_demo_dataset(config, n, seed)
        dataio.write_records(os.path.join(out_dir, "manual.tsv"), manual_records, dataio.MANUAL_FIELDS)
        dataio.write_records(os.path.join(out_dir, "action.tsv"), action_records, dataio.ACTION_FIELDS)
        return {"kind": kind, "manual_records": len(manual_records),
                "action_records": len(action_records)}
    raise ValueError(f"unknown dataset kind: {kind}")
