"""The two-verb head action grammar: look at an object, or search a direction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .orientation import Quaternion


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"
    BEHIND = "behind"
    AHEAD = "ahead"


# body-relative (yaw, pitch) offsets in degrees
SEARCH_OFFSETS_DEG = {
    Direction.LEFT: (90.0, 0.0),
    Direction.RIGHT: (-90.0, 0.0),
    Direction.BEHIND: (180.0, 0.0),
    Direction.AHEAD: (0.0, 0.0),
    Direction.UP: (0.0, 40.0),
    Direction.DOWN: (0.0, -40.0),
}


@dataclass(frozen=True)
class LookAt:
    object_id: str

    def to_json(self) -> dict:
        return {"type": "look_at", "object_id": self.object_id}


@dataclass(frozen=True)
class Search:
    direction: Direction

    def to_json(self) -> dict:
        return {"type": "search", "direction": self.direction.value}


Action = Union[LookAt, Search]


def action_from_json(data: dict) -> Action:
    kind = data.get("type")
    if kind == "look_at":
        return LookAt(str(data["object_id"]))
    if kind == "search":
        return Search(Direction(data["direction"]))
    raise ValueError(f"unknown action type {kind!r}")


def search_orientation(direction: Direction, body_yaw: float) -> Quaternion:
    yaw_deg, pitch_deg = SEARCH_OFFSETS_DEG[direction]
    return Quaternion.from_yaw_pitch(body_yaw + math.radians(yaw_deg), math.radians(pitch_deg))


class RationaleCategory(str, Enum):
    INTEREST = "Interest"
    INFORMATION_SEEKING = "InformationSeeking"
    SAFETY = "Safety"
    HABIT = "Habit"
    SOCIAL_SCHEMA = "SocialSchema"


class MovementClass(str, Enum):
    CONFIRMATION = "Confirmation"
    EXPLORATION = "Exploration"
