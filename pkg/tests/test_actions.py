from __future__ import annotations

import math

import pytest

from sceneforge.actions import (
    ActionSpaceConfig,
    ActionToken,
    NavAction,
    TWO_PI,
    decode_nav,
    decode_pose,
    encode_nav,
    encode_pose,
    load_action_config,
    parse_rendered,
    render_past_actions,
)
from sceneforge.errors import OutOfWorkspaceError, WrongRangeError
from sceneforge.rng import SplitMix64

CFG = ActionSpaceConfig()


class TestNav:
    def test_stop_token(self):
        assert encode_nav(NavAction.STOP, CFG).rendered == "<31996>"

    def test_move_forward_token(self):
        assert encode_nav(NavAction.MOVE_FORWARD, CFG).rendered == "<31999>"

    def test_bijection(self):
        seen = set()
        for action in NavAction:
            token = encode_nav(action, CFG)
            seen.add(token.token_id)
            assert decode_nav(token, CFG) is action
        assert len(seen) == 4

    def test_non_nav_token_rejected(self):
        with pytest.raises(WrongRangeError):
            decode_nav(ActionToken(31676), CFG)


class TestEncodePose:
    def test_lower_boundary_bin_zero(self):
        tx, ty, trot = encode_pose(CFG.x_min, CFG.y_min, 0.0, CFG)
        assert tx.token_id == CFG.x_base
        assert ty.token_id == CFG.y_base
        assert trot.token_id == CFG.rot_base

    def test_upper_boundary_clamps(self):
        tx, ty, _ = encode_pose(CFG.x_max, CFG.y_max, TWO_PI - 1e-9, CFG)
        assert tx.token_id == CFG.x_base + 319
        assert ty.token_id == CFG.y_base + 159

    def test_midpoint_bins(self):
        # Hand evaluation of the floor formula: 0.5 of the range per axis.
        x_mid = (CFG.x_min + CFG.x_max) / 2
        y_mid = (CFG.y_min + CFG.y_max) / 2
        rot_mid = math.pi
        assert math.floor((x_mid - CFG.x_min) / (CFG.x_max - CFG.x_min) * 320) == 160
        tx, ty, trot = encode_pose(x_mid, y_mid, rot_mid, CFG)
        assert tx.token_id - CFG.x_base == 160
        assert ty.token_id - CFG.y_base == 80
        assert trot.token_id - CFG.rot_base == 18

    def test_out_of_workspace(self):
        with pytest.raises(OutOfWorkspaceError):
            encode_pose(CFG.x_min - 0.01, 0.0, 0.0, CFG)
        with pytest.raises(OutOfWorkspaceError):
            encode_pose(CFG.x_min, 0.0, TWO_PI, CFG)

    def test_monotone_per_axis(self):
        rng = SplitMix64(5)
        values = sorted(CFG.x_min + rng.uniform() * (CFG.x_max - CFG.x_min) for _ in range(200))
        bins = [encode_pose(v, 0.0, 0.0, CFG)[0].token_id for v in values]
        assert bins == sorted(bins)


class TestDecodePose:
    def test_wrong_slot_rejected(self):
        tx, ty, trot = encode_pose(0.5, 0.0, 1.0, CFG)
        with pytest.raises(WrongRangeError):
            decode_pose((ty, ty, trot), CFG)
        with pytest.raises(WrongRangeError):
            decode_pose((tx, tx, trot), CFG)
        with pytest.raises(WrongRangeError):
            decode_pose((tx, ty, ty), CFG)

    def test_reference_token_triple_decodes_in_workspace(self):
        tokens = parse_rendered("<31748> <31644> <31511>")
        assert [CFG.axis_of(t.token_id) for t in tokens] == ["x", "y", "rot"]
        x, y, rot = decode_pose((tokens[0], tokens[1], tokens[2]), CFG)
        assert CFG.x_min <= x <= CFG.x_max
        assert CFG.y_min <= y <= CFG.y_max
        assert 0.0 <= rot < TWO_PI

    def test_reference_ids_land_in_expected_axes(self):
        for token_id, axis in [
            (31991, "x"), (31748, "x"), (31736, "x"),
            (31671, "y"), (31644, "y"), (31595, "y"),
            (31511, "rot"), (31500, "rot"),
            (31996, "nav"), (31999, "nav"),
        ]:
            assert CFG.axis_of(token_id) == axis

    def test_round_trip_10k_within_half_bin(self):
        rng = SplitMix64(99)
        x_tol = (CFG.x_max - CFG.x_min) / (2 * CFG.x_bins)
        y_tol = (CFG.y_max - CFG.y_min) / (2 * CFG.y_bins)
        rot_tol = TWO_PI / (2 * CFG.rot_bins)
        for _ in range(10_000):
            x = CFG.x_min + rng.uniform() * (CFG.x_max - CFG.x_min)
            y = CFG.y_min + rng.uniform() * (CFG.y_max - CFG.y_min)
            rot = rng.uniform() * TWO_PI
            dx, dy, drot = decode_pose(encode_pose(x, y, rot, CFG), CFG)
            assert abs(dx - x) <= x_tol + 1e-12
            assert abs(dy - y) <= y_tol + 1e-12
            assert abs(drot - rot) <= rot_tol + 1e-12


class TestLayout:
    def test_ranges_disjoint(self):
        ids = []
        ids += [CFG.nav_id(a) for a in NavAction]
        ids += list(range(CFG.rot_base, CFG.rot_base + CFG.rot_bins))
        ids += list(range(CFG.y_base, CFG.y_base + CFG.y_bins))
        ids += list(range(CFG.x_base, CFG.x_base + CFG.x_bins))
        assert len(ids) == len(set(ids)) == 4 + 36 + 160 + 320

    def test_overlapping_nav_rejected(self):
        with pytest.raises(ValueError):
            ActionSpaceConfig(
                nav_tokens=(
                    (NavAction.MOVE_FORWARD, 31676),  # inside the x range
                    (NavAction.TURN_RIGHT, 31998),
                    (NavAction.TURN_LEFT, 31997),
                    (NavAction.STOP, 31996),
                )
            )

    def test_rendered_reparse(self):
        for token_id in (31480, 31515, 31516, 31675, 31676, 31995, 31996):
            token = ActionToken(token_id)
            assert parse_rendered(token.rendered) == [token]


class TestRenderPastActions:
    def test_truncates_to_last_k(self):
        tokens = [encode_nav(NavAction.MOVE_FORWARD, CFG)] * 6
        out = render_past_actions(tokens, k=4)
        assert out == "<31999> <31999> <31999> <31999>"

    def test_empty_list(self):
        assert render_past_actions([], k=4) == ""

    def test_pose_triples(self):
        triple = encode_pose(0.5, 0.0, 1.0, CFG)
        history = list(triple) * 8
        out = render_past_actions(history, k=8, group_size=3)
        assert len(out.split()) == 24
        shorter = render_past_actions(history, k=2, group_size=3)
        assert len(shorter.split()) == 6


class TestConfigFile:
    def test_default_resource_matches_default_config(self):
        assert load_action_config() == CFG

    def test_override(self, tmp_path):
        path = tmp_path / "space.toml"
        path.write_text(
            "[actions]\nx_bins = 10\ny_bins = 10\nrot_bins = 4\nreserved_base = 100\n"
            "x_min = 0.0\nx_max = 1.0\ny_min = 0.0\ny_max = 1.0\n"
            "[actions.nav_tokens]\nmove_forward = 500\nturn_right = 501\n"
            "turn_left = 502\nstop = 503\n"
        )
        cfg = load_action_config(path)
        assert cfg.x_bins == 10
        assert cfg.nav_id(NavAction.STOP) == 503
        token = encode_pose(0.95, 0.5, 0.0, cfg)[0]
        assert token.token_id == cfg.x_base + 9
