"""Iterative manual-sequence generation from a goal specification."""

from __future__ import annotations

import numpy as np

from planact.numerics import Rng

from .config import WorldConfig
from .render import render
from .sim import build_state, describe_group
from .state import (
    GoalSpec,
    InfeasibleOrder,
    ManualRecord,
    Placement,
    WorldState,
    footprint_cells,
)


def canonical_groups(objects, placements: dict[int, Placement], group_size: int) -> list[list[int]]:
    """Deterministic build order, reconstructible from the goal alone.

    Objects within a group sort by (layer, row, col); groups sort by the same
    key of their first object. Layer-major order guarantees every placement
    is supported when executed in sequence.
    """
    groups: dict[int, list[int]] = {}
    for oid in placements:
        groups.setdefault(objects[oid].group, []).append(oid)
    for g in groups.values():
        g.sort(key=lambda o: (placements[o].layer, placements[o].row, placements[o].col))
    ordered = sorted(groups.values(),
                     key=lambda g: (placements[g[0]].layer, placements[g[0]].row,
                                    placements[g[0]].col))
    return ordered


def group_coord(config: WorldConfig, objects, group: list[int],
                placements: dict[int, Placement]) -> tuple[float, float]:
    """Pixel centroid (U, V) of the group's placement footprint."""
    cells = []
    for oid in group:
        p = placements[oid]
        cells.extend(footprint_cells(p.row, p.col, objects[oid].footprint))
    rs = np.array([r for r, _ in cells], dtype=np.float64)
    cs = np.array([c for _, c in cells], dtype=np.float64)
    u = config.cell_px * (cs.mean() + 0.5)
    v = config.cell_px * (rs.mean() + 0.5)
    return (float(u), float(v))


def generate_manual_sequence(initial: WorldState, goal: GoalSpec,
                             config: WorldConfig | None = None,
                             rng: Rng | None = None) -> list[ManualRecord]:
    """Subgoal manuals, one per object group, in canonical order.

    The k-th record's subgoal image renders the scene after groups 1..k are
    placed (remaining objects still staged); the last record pixel-equals the
    goal image.
    """
    config = config or initial.config
    ordered = canonical_groups(initial.objects, goal.placements, config.group_size)
    records: list[ManualRecord] = []
    placed: dict[int, Placement] = {}
    for gi, group in enumerate(ordered):
        for oid in group:
            p = goal.placements[oid]
            if p.layer > 0:
                state_now = build_state(config, initial.objects, placed=placed)
                for r, c in footprint_cells(p.row, p.col, initial.objects[oid].footprint):
                    if state_now.column_height(r, c) != p.layer:
                        raise InfeasibleOrder(
                            f"object {oid} at layer {p.layer} unsupported in canonical order")
            placed[oid] = p
        after = build_state(config, initial.objects, placed=placed)
        records.append(ManualRecord(
            text=describe_group(config, initial.objects, tuple(group), goal.placements),
            coord=group_coord(config, initial.objects, group, goal.placements),
            subgoal_image=render(after, config),
            group=tuple(group),
            group_index=gi,
            placements={oid: goal.placements[oid] for oid in group},
        ))
    return records
