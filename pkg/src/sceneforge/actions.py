"""Unified discrete action space over a reserved token-id range.

Navigation uses four dedicated token ids (move_forward, turn_right,
turn_left, stop). Manipulation poses are discretized per axis: 320 bins for
x, 160 for y, 36 for z-rotation. Encoding maps a value to
``floor((v - min) / (max - min) * bins)`` clamped into range; decoding
reconstructs the bin center.

Default reserved layout is one contiguous block, packed downward from the
top nav id::

    rot   [base,           base + 35 ]   36 ids   (31480..31515)
    y     [base + 36,      base + 195]  160 ids   (31516..31675)
    x     [base + 196,     base + 515]  320 ids   (31676..31995)
    nav   31996..31999                    4 ids

All four ranges are disjoint by construction; the workspace bounds are
config values (tabletop defaults ship in resources/action_space.toml) and
the whole layout can be overridden per deployment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence, Tuple

from .errors import OutOfWorkspaceError, WrongRangeError

TWO_PI = 2.0 * math.pi


class NavAction(str, Enum):
    MOVE_FORWARD = "move_forward"
    TURN_RIGHT = "turn_right"
    TURN_LEFT = "turn_left"
    STOP = "stop"


@dataclass(frozen=True)
class ActionToken:
    token_id: int

    @property
    def rendered(self) -> str:
        return f"<{self.token_id}>"


@dataclass(frozen=True)
class ActionSpaceConfig:
    x_bins: int = 320
    y_bins: int = 160
    rot_bins: int = 36
    x_min: float = 0.25
    x_max: float = 0.75
    y_min: float = -0.5
    y_max: float = 0.5
    reserved_base: int = 31480
    nav_tokens: Tuple[Tuple[NavAction, int], ...] = (
        (NavAction.MOVE_FORWARD, 31999),
        (NavAction.TURN_RIGHT, 31998),
        (NavAction.TURN_LEFT, 31997),
        (NavAction.STOP, 31996),
    )

    def __post_init__(self):
        if min(self.x_bins, self.y_bins, self.rot_bins) <= 0:
            raise ValueError("bin counts must be positive")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("workspace bounds must satisfy max > min")
        if len(self.nav_tokens) != 4 or len({a for a, _ in self.nav_tokens}) != 4:
            raise ValueError("nav_tokens must cover the four actions exactly once")
        nav_ids = {t for _, t in self.nav_tokens}
        if len(nav_ids) != 4:
            raise ValueError("nav token ids must be distinct")
        pose_ids = set(range(self.rot_base, self.x_base + self.x_bins))
        if nav_ids & pose_ids:
            raise ValueError("nav token ids overlap a pose-axis range")

    # Axis bases derive from the reserved base: rot, then y, then x.
    @property
    def rot_base(self) -> int:
        return self.reserved_base

    @property
    def y_base(self) -> int:
        return self.reserved_base + self.rot_bins

    @property
    def x_base(self) -> int:
        return self.y_base + self.y_bins

    def nav_id(self, action: NavAction) -> int:
        return dict(self.nav_tokens)[action]

    def nav_action(self, token_id: int) -> NavAction:
        lookup = {t: a for a, t in self.nav_tokens}
        if token_id not in lookup:
            raise WrongRangeError(f"token id {token_id} is not a navigation token")
        return lookup[token_id]

    def axis_of(self, token_id: int) -> str:
        if token_id in {t for _, t in self.nav_tokens}:
            return "nav"
        if self.rot_base <= token_id < self.rot_base + self.rot_bins:
            return "rot"
        if self.y_base <= token_id < self.y_base + self.y_bins:
            return "y"
        if self.x_base <= token_id < self.x_base + self.x_bins:
            return "x"
        raise WrongRangeError(f"token id {token_id} is outside every reserved range")


def load_action_config(path: str | Path | None = None) -> ActionSpaceConfig:
    """Read the TOML config; defaults ship in resources/action_space.toml."""
    if path is None:
        from .prompts import resource_path

        path = resource_path("action_space.toml")
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    section = data.get("actions", data)
    nav = section.get("nav_tokens", {})
    nav_tokens = tuple(
        (action, int(nav.get(action.value, default)))
        for action, default in (
            (NavAction.MOVE_FORWARD, 31999),
            (NavAction.TURN_RIGHT, 31998),
            (NavAction.TURN_LEFT, 31997),
            (NavAction.STOP, 31996),
        )
    )
    return ActionSpaceConfig(
        x_bins=int(section.get("x_bins", 320)),
        y_bins=int(section.get("y_bins", 160)),
        rot_bins=int(section.get("rot_bins", 36)),
        x_min=float(section.get("x_min", 0.25)),
        x_max=float(section.get("x_max", 0.75)),
        y_min=float(section.get("y_min", -0.5)),
        y_max=float(section.get("y_max", 0.5)),
        reserved_base=int(section.get("reserved_base", 31480)),
        nav_tokens=nav_tokens,
    )


def encode_nav(action: NavAction, cfg: ActionSpaceConfig) -> ActionToken:
    return ActionToken(cfg.nav_id(action))


def decode_nav(token: ActionToken, cfg: ActionSpaceConfig) -> NavAction:
    return cfg.nav_action(token.token_id)


def _bin_index(value: float, lo: float, hi: float, bins: int) -> int:
    idx = math.floor((value - lo) / (hi - lo) * bins)
    return max(0, min(bins - 1, idx))


def encode_pose(
    x: float, y: float, rot: float, cfg: ActionSpaceConfig
) -> Tuple[ActionToken, ActionToken, ActionToken]:
    """Discretize one (x, y, z-rotation) pose into three axis tokens."""
    if not (cfg.x_min <= x <= cfg.x_max):
        raise OutOfWorkspaceError(f"x={x} outside [{cfg.x_min}, {cfg.x_max}]")
    if not (cfg.y_min <= y <= cfg.y_max):
        raise OutOfWorkspaceError(f"y={y} outside [{cfg.y_min}, {cfg.y_max}]")
    if not (0.0 <= rot < TWO_PI):
        raise OutOfWorkspaceError(f"rot={rot} outside [0, 2*pi)")
    return (
        ActionToken(cfg.x_base + _bin_index(x, cfg.x_min, cfg.x_max, cfg.x_bins)),
        ActionToken(cfg.y_base + _bin_index(y, cfg.y_min, cfg.y_max, cfg.y_bins)),
        ActionToken(cfg.rot_base + _bin_index(rot, 0.0, TWO_PI, cfg.rot_bins)),
    )


def decode_pose(
    tokens: Tuple[ActionToken, ActionToken, ActionToken], cfg: ActionSpaceConfig
) -> Tuple[float, float, float]:
    """Bin-center reconstruction of a pose from its three axis tokens."""
    tx, ty, trot = tokens
    if cfg.axis_of(tx.token_id) != "x":
        raise WrongRangeError(f"{tx.rendered} is not an x-axis token")
    if cfg.axis_of(ty.token_id) != "y":
        raise WrongRangeError(f"{ty.rendered} is not a y-axis token")
    if cfg.axis_of(trot.token_id) != "rot":
        raise WrongRangeError(f"{trot.rendered} is not a rotation token")
    x = cfg.x_min + (tx.token_id - cfg.x_base + 0.5) * (cfg.x_max - cfg.x_min) / cfg.x_bins
    y = cfg.y_min + (ty.token_id - cfg.y_base + 0.5) * (cfg.y_max - cfg.y_min) / cfg.y_bins
    rot = (trot.token_id - cfg.rot_base + 0.5) * TWO_PI / cfg.rot_bins
    return x, y, rot


def render_past_actions(tokens: Sequence[ActionToken], k: int = 4, group_size: int = 1) -> str:
    """Space-joined rendered forms of the last k actions (k=4 for navigation).

    group_size is the tokens-per-action stride: 1 for navigation commands,
    3 for pose triples, so k counts whole actions either way.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    tail = list(tokens)[-k * group_size :]
    return " ".join(t.rendered for t in tail)


_RENDERED = re.compile(r"<(\d+)>")


def parse_rendered(text: str) -> List[ActionToken]:
    """Reparse rendered token text back into ActionTokens."""
    return [ActionToken(int(m.group(1))) for m in _RENDERED.finditer(text)]
