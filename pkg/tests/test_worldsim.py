"""Simulator tests: sampling validity, dynamics invariants, manuals, demos."""

import dataclasses

import numpy as np
import pytest

from planact.numerics import Rng
from planact.worldsim import (
    BOARD_INDEX,
    COLOR_BASE,
    EpisodeOver,
    WorldConfig,
    apply_action,
    build_state,
    check_goal,
    check_subgoal,
    generate_manual_sequence,
    perturb,
    render,
    sample_task,
    scripted_demo,
)
from planact.worldsim.state import Placement


def small_cfg(kind="lego2d", n=2, **kw):
    return WorldConfig(task_kind=kind, n_objects=n, **kw)


def count_objects(state):
    staged = sum(1 for s in state.status.values() if s == "staged")
    placed = sum(1 for s in state.status.values() if s == "placed")
    held = 1 if state.held is not None else 0
    return staged + placed + held


def occupancy_sound(state):
    occ = state.occupancy
    # disjointness is structural (one id per cell); check support + cell/anchor agreement
    for r in range(occ.shape[0]):
        for c in range(occ.shape[1]):
            seen_empty = False
            for k in range(occ.shape[2]):
                if occ[r, c, k] >= 0 and seen_empty:
                    return False
                if occ[r, c, k] < 0:
                    seen_empty = True
    claimed = {}
    for oid in state.objects:
        for cell in state.cells_of(oid):
            if cell in claimed:
                return False
            claimed[cell] = oid
            if int(occ[cell]) != oid:
                return False
    return int((occ >= 0).sum()) == len(claimed)


# -- sampling -----------------------------------------------------------------


def test_sample_task_deterministic():
    cfg = small_cfg()
    s1, g1, i1 = sample_task(Rng(7), cfg)
    s2, g2, i2 = sample_task(Rng(7), cfg)
    assert g1.placements == g2.placements and i1 == i2
    assert render(s1, cfg) == render(s2, cfg)


def test_sample_task_empty():
    cfg = small_cfg(n=0)
    state, goal, _ = sample_task(Rng(3), cfg)
    assert goal.placements == {}
    assert goal.goal_image == render(state, cfg)
    assert check_goal(state, goal)


@pytest.mark.parametrize("kind", ["lego2d", "lego3d", "rearrange"])
def test_sampled_goals_valid(kind):
    cfg = small_cfg(kind, n=4)
    for seed in range(200):
        _, goal, _ = sample_task(Rng(seed), cfg)
        heights = {}
        for oid, p in sorted(goal.placements.items(), key=lambda kv: kv[1].layer):
            spec_fp = cfg.footprint_for(oid)
            for dr in range(spec_fp[0]):
                for dc in range(spec_fp[1]):
                    cell = (p.row + dr, p.col + dc)
                    assert cfg.in_board(*cell)
                    assert heights.get(cell, 0) == p.layer, "support rule violated"
                    heights[cell] = p.layer + 1
        assert max((p.layer for p in goal.placements.values()), default=0) < cfg.max_height


def test_lego3d_support_rule_over_samples():
    cfg = small_cfg("lego3d", n=4)
    stacked = 0
    for seed in range(300):
        _, goal, _ = sample_task(Rng(seed), cfg)
        stacked += any(p.layer > 0 for p in goal.placements.values())
    assert stacked > 30  # stacking actually occurs


# -- rendering -------------------------------------------------------------------


def test_render_empty_world():
    cfg = small_cfg(n=0)
    img = render(sample_task(Rng(0), cfg)[0], cfg)
    board = img.pixels[cfg.board_row_lo * 4:(cfg.board_row_hi + 1) * 4,
                       cfg.board_col_lo * 4:(cfg.board_col_hi + 1) * 4]
    assert np.all(board == BOARD_INDEX)
    outside = img.pixels.copy()
    outside[cfg.board_row_lo * 4:(cfg.board_row_hi + 1) * 4,
            cfg.board_col_lo * 4:(cfg.board_col_hi + 1) * 4] = 0
    assert np.all(outside == 0)


def test_render_single_brick_exactly():
    cfg = small_cfg(n=1)
    objects = {0: __import__("planact.worldsim.state", fromlist=["ObjectSpec"]).ObjectSpec(
        oid=0, color=COLOR_BASE, noun_id=0, footprint=(1, 2), staging_anchor=(0, 0), group=0)}
    state = build_state(cfg, objects, placed={0: Placement(0, 2, 0)})
    img = render(state, cfg)
    red = img.pixels == COLOR_BASE
    assert red.sum() == 2 * cfg.cell_px * cfg.cell_px
    assert np.all(red[0:4, 8:16])


def test_render_pure_function():
    cfg = small_cfg(n=3)
    state, _, _ = sample_task(Rng(11), cfg)
    assert render(state, cfg) == render(state, cfg)
    assert render(state, cfg, show_gripper=True) == render(state, cfg, show_gripper=True)


def test_render_gripper_marker_only_in_observations():
    cfg = small_cfg(n=1)
    state, _, _ = sample_task(Rng(2), cfg)
    plain = render(state, cfg)
    marked = render(state, cfg, show_gripper=True)
    diff = plain.pixels != marked.pixels
    assert diff.sum() == 4  # 2x2 marker over the empty board center


# -- dynamics --------------------------------------------------------------------


def test_noop_release_changes_only_step_counter():
    cfg = small_cfg()
    state, _, _ = sample_task(Rng(5), cfg)
    after = apply_action(state, (0.0, 0.0, -1.0), cfg)
    assert after.steps == state.steps + 1
    assert after.anchors == state.anchors
    assert after.gripper_y == state.gripper_y and after.gripper_x == state.gripper_x
    assert not after.grip_closed


def test_grasp_vacates_cells():
    cfg = small_cfg(n=1)
    state, _, _ = sample_task(Rng(5), cfg)
    cy, cx = state.centroid_of(0)
    state.gripper_y, state.gripper_x = cy, cx
    before_cells = state.cells_of(0)
    after = apply_action(state, (0.0, 0.0, 1.0), cfg)
    assert after.held == 0 and after.status[0] == "held"
    for r, c, k in before_cells:
        assert after.occupancy[r, c, k] == -1


def test_release_over_occupied_returns_to_staging():
    cfg = small_cfg(n=2)
    state, goal, _ = sample_task(Rng(9), cfg)
    # place object 1 somewhere, then try to drop object 0 on top of it
    p = Placement(3, 4, 0)
    state = build_state(cfg, state.objects, placed={1: p})
    cy, cx = state.centroid_of(0)
    state.gripper_y, state.gripper_x = cy, cx
    state = apply_action(state, (0.0, 0.0, 1.0), cfg)
    assert state.held == 0
    ty, tx = p.row + 0.5, p.col + 1.0
    while abs(state.gripper_y - ty) > 1e-9 or abs(state.gripper_x - tx) > 1e-9:
        dy = np.clip(ty - state.gripper_y, -2, 2)
        dx = np.clip(tx - state.gripper_x, -2, 2)
        state = apply_action(state, (dy, dx, 0.0), cfg)
    board_before = state.occupancy.copy()
    after = apply_action(state, (0.0, 0.0, -1.0), cfg)
    assert after.failed_place
    assert after.status[0] == "staged"
    assert after.anchors[0] == Placement(*state.objects[0].staging_anchor, 0)
    assert np.array_equal(
        after.occupancy[:, cfg.board_col_lo:cfg.board_col_hi + 1],
        board_before[:, cfg.board_col_lo:cfg.board_col_hi + 1])


def test_step_cap_raises():
    cfg = small_cfg(n=0, step_cap=2)
    state, _, _ = sample_task(Rng(1), cfg)
    state = apply_action(state, (0, 0, 0), cfg)
    state = apply_action(state, (0, 0, 0), cfg)
    with pytest.raises(EpisodeOver):
        apply_action(state, (0, 0, 0), cfg)


@pytest.mark.parametrize("kind", ["lego2d", "lego3d", "rearrange"])
def test_fuzzed_dynamics_invariants(kind):
    cfg = small_cfg(kind, n=4, step_cap=10 ** 9)
    rng = Rng(123)
    state, _, _ = sample_task(rng, cfg)
    n_total = len(state.objects)
    for i in range(4000):
        action = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1))
        state = apply_action(state, action, cfg)
        assert count_objects(state) == n_total, f"conservation broke at step {i}"
        if i % 200 == 0:
            assert occupancy_sound(state), f"occupancy unsound at step {i}"
    assert occupancy_sound(state)


# -- manuals ---------------------------------------------------------------------


def test_single_brick_manual_matches_goal():
    cfg = small_cfg(n=1)
    state, goal, _ = sample_task(Rng(21), cfg)
    manuals = generate_manual_sequence(state, goal, cfg)
    assert len(manuals) == 1
    assert manuals[-1].subgoal_image == goal.goal_image


def test_manual_coord_hand_rasterized():
    cfg = small_cfg(n=1)
    objects = {0: __import__("planact.worldsim.state", fromlist=["ObjectSpec"]).ObjectSpec(
        oid=0, color=COLOR_BASE, noun_id=0, footprint=(1, 2), staging_anchor=(0, 0), group=0)}
    state = build_state(cfg, objects)
    from planact.worldsim import GoalSpec
    goal_state = build_state(cfg, objects, placed={0: Placement(0, 2, 0)})
    goal = GoalSpec(placements={0: Placement(0, 2, 0)}, goal_image=render(goal_state, cfg))
    manual = generate_manual_sequence(state, goal, cfg)[0]
    assert manual.coord == (12.0, 2.0)
    assert manual.text == "red brick to (0,2)"


def test_manual_final_image_equals_goal_many_seeds():
    cfg = small_cfg("lego3d", n=4)
    for seed in range(25):
        state, goal, _ = sample_task(Rng(seed), cfg)
        manuals = generate_manual_sequence(state, goal, cfg)
        assert manuals[-1].subgoal_image == goal.goal_image


def test_manual_layer_order_over_seeds():
    cfg = small_cfg("lego3d", n=4)
    for seed in range(100):
        state, goal, _ = sample_task(Rng(seed), cfg)
        manuals = generate_manual_sequence(state, goal, cfg)
        seen_layers = []
        for m in manuals:
            for oid in m.group:
                seen_layers.append(m.placements[oid].layer)
        for a, b in zip(seen_layers, seen_layers[1:]):
            assert b >= a or b == 0  # layer-0 anchors of later groups may follow


# -- scripted demos -----------------------------------------------------------------


def test_demo_one_brick():
    cfg = small_cfg(n=1)
    state, goal, _ = sample_task(Rng(31), cfg)
    traj = scripted_demo(state, goal, cfg, Rng(0))
    assert check_goal(traj.frames[-1].state, goal)
    assert len(traj.keyframes) == 1


def test_demo_zero_objects():
    cfg = small_cfg(n=0)
    state, goal, _ = sample_task(Rng(31), cfg)
    traj = scripted_demo(state, goal, cfg, Rng(0))
    assert check_goal(traj.frames[-1].state, goal)
    assert traj.keyframes == []


@pytest.mark.parametrize("kind", ["lego2d", "lego3d", "rearrange"])
def test_demo_success_100(kind):
    cfg = small_cfg(kind, n=4)
    for seed in range(100):
        state, goal, _ = sample_task(Rng(seed + 1000), cfg)
        traj = scripted_demo(state, goal, cfg, Rng(seed))
        assert check_goal(traj.frames[-1].state, goal), f"{kind} seed {seed} failed"
        assert len(traj.frames) < cfg.step_cap


def test_demo_subgoal_monotone():
    cfg = small_cfg(n=3)
    state, goal, _ = sample_task(Rng(77), cfg)
    traj = scripted_demo(state, goal, cfg, Rng(0))
    satisfied = [False] * len(traj.manuals)
    for frame in traj.frames:
        for k, m in enumerate(traj.manuals):
            ok = check_subgoal(frame.state, m)
            if satisfied[k]:
                assert ok, "a satisfied subgoal regressed"
            satisfied[k] = ok


def test_demo_short_for_four_bricks():
    cfg = small_cfg(n=4)
    state, goal, _ = sample_task(Rng(5), cfg)
    traj = scripted_demo(state, goal, cfg, Rng(0))
    assert len(traj.frames) < 60


# -- perturbations -----------------------------------------------------------------


def test_background_perturb_leaves_foreground():
    cfg = small_cfg(n=2)
    state, goal, _ = sample_task(Rng(13), cfg)
    pcfg = perturb(cfg, "background", Rng(0))
    base = render(state, cfg).pixels
    pert = render(state, pcfg).pixels
    changed = base != pert
    assert np.all(base[changed] == 0)  # only background pixels changed
    assert changed.any()


def test_shape_perturb_width3():
    cfg = perturb(small_cfg(n=3), "shape", Rng(0))
    _, goal, _ = sample_task(Rng(3), cfg)
    for oid in goal.placements:
        assert cfg.footprint_for(oid)[1] == 3


def test_lighting_perturb_shifts_bands():
    cfg = small_cfg(n=2)
    pcfg = perturb(cfg, "lighting", Rng(1))
    assert pcfg.lighting_shift in (-1, 1)
    state, _, _ = sample_task(Rng(13), cfg)
    if pcfg.lighting_shift == 1:
        assert not (render(state, pcfg) == render(state, cfg))


@pytest.mark.parametrize("axis", ["background", "shape", "lighting"])
def test_perturbed_demos_still_succeed(axis):
    cfg = perturb(small_cfg(n=3), axis, Rng(7))
    for seed in range(20):
        state, goal, _ = sample_task(Rng(seed), cfg)
        traj = scripted_demo(state, goal, cfg, Rng(seed))
        assert check_goal(traj.frames[-1].state, goal)
