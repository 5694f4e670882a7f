"""Action selection, the action history log, and goal decomposition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol, Sequence

from .actions import (
    Action,
    Direction,
    LookAt,
    MovementClass,
    RationaleCategory,
    Search,
    action_from_json,
    search_orientation,
)
from .environment import Observation
from .errors import ActionTargetError, ContractError, DecisionError, DecompositionError
from .orientation import Quaternion, Vec3, look_rotation
from .perception import MemoryState, ObjectDescription

__all__ = [
    "Action",
    "ActionHistory",
    "ActionRecord",
    "DecisionBackend",
    "DecisionRequest",
    "Direction",
    "LookAt",
    "MovementClass",
    "RationaleCategory",
    "Search",
    "SubGoal",
    "action_target_orientation",
    "classify_movement",
    "decide",
    "decompose_goal",
    "record_action",
]

MAX_SUBGOALS = 8


@dataclass(frozen=True)
class SubGoal:
    text: str
    status: str = "pending"  # pending | active | done
    created_at: float = 0.0


@dataclass(frozen=True)
class ActionRecord:
    t: float
    action: Action
    rationale: RationaleCategory
    rationale_text: str
    subgoal: str
    movement_class: MovementClass
    tick: int = 0
    fallback: bool = False
    observation: Optional[Observation] = None

    def to_json(self) -> dict:
        d = {
            "t": self.t,
            "tick": self.tick,
            "action": self.action.to_json(),
            "rationale": self.rationale.value,
            "rationale_text": self.rationale_text,
            "subgoal": self.subgoal,
            "movement_class": self.movement_class.value,
            "fallback": self.fallback,
        }
        if self.observation is not None:
            d["observation"] = self.observation.to_json()
        return d

    def to_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "ActionRecord":
        obs = d.get("observation")
        return cls(
            t=float(d["t"]),
            action=action_from_json(d["action"]),
            rationale=RationaleCategory(d["rationale"]),
            rationale_text=d["rationale_text"],
            subgoal=d["subgoal"],
            movement_class=MovementClass(d["movement_class"]),
            tick=int(d.get("tick", 0)),
            fallback=bool(d.get("fallback", False)),
            observation=Observation.from_json(obs) if obs is not None else None,
        )


@dataclass(frozen=True)
class ActionHistory:
    """Append-only action log; ``record_action`` returns a longer copy."""

    records: tuple = ()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def last_focus_time(self, object_id: str) -> Optional[float]:
        for r in reversed(self.records):
            if isinstance(r.action, LookAt) and r.action.object_id == object_id:
                return r.t
        return None

    def last_search_time(self, direction: Direction) -> Optional[float]:
        for r in reversed(self.records):
            if isinstance(r.action, Search) and r.action.direction == direction:
                return r.t
        return None


@dataclass(frozen=True)
class DecisionRequest:
    t: float
    descriptions: tuple
    goal: str
    walking_velocity: Vec3
    history: ActionHistory
    memory: MemoryState = field(default_factory=MemoryState)
    subgoals: tuple = ()


class DecisionBackend(Protocol):
    def decompose(self, goal: str, memory: MemoryState, history: ActionHistory) -> list[str]:
        ...

    def decide(self, request: DecisionRequest) -> tuple[Action, RationaleCategory, str]:
        ...


def decompose_goal(
    backend: DecisionBackend, goal: str, memory: MemoryState, history: ActionHistory, t: float = 0.0
) -> list[SubGoal]:
    """Split ``goal`` into 1-8 ordered sub-goals, the first one active.

    Raises DecompositionError when the backend fails or returns junk; callers
    fall back to :func:`fallback_subgoals`.
    """
    if not goal or not goal.strip():
        raise DecompositionError("goal must be non-empty")
    try:
        texts = backend.decompose(goal, memory, history)
    except DecompositionError:
        raise
    except Exception as exc:
        raise DecompositionError(f"decomposition backend failed: {exc}") from exc
    if not isinstance(texts, list) or not 1 <= len(texts) <= MAX_SUBGOALS:
        raise DecompositionError(f"expected 1-{MAX_SUBGOALS} sub-goals, got {texts!r}")
    if not all(isinstance(s, str) and s.strip() for s in texts):
        raise DecompositionError("sub-goals must be non-empty strings")
    return [SubGoal(s.strip(), "active" if i == 0 else "pending", t) for i, s in enumerate(texts)]


def fallback_subgoals(goal: str, t: float = 0.0) -> list[SubGoal]:
    return [SubGoal(f"accomplish: {goal}", "active", t)]


def advance_subgoals(subgoals: Sequence[SubGoal], t: float, duration: float) -> list[SubGoal]:
    """Activate the sub-goal whose equal share of ``duration`` contains ``t``."""
    n = len(subgoals)
    idx = min(int(t * n / duration), n - 1) if duration > 0 else 0
    out = []
    for i, s in enumerate(subgoals):
        status = "done" if i < idx else "active" if i == idx else "pending"
        out.append(s if s.status == status else replace(s, status=status))
    return out


def active_subgoal(subgoals: Sequence[SubGoal]) -> str:
    for s in subgoals:
        if s.status == "active":
            return s.text
    return ""


def decide(
    backend: DecisionBackend,
    descriptions: Sequence[ObjectDescription],
    goal: str,
    walking_velocity: Vec3,
    history: ActionHistory,
    *,
    t: float = 0.0,
    memory: Optional[MemoryState] = None,
    subgoals: Sequence[SubGoal] = (),
) -> tuple[Action, RationaleCategory, str]:
    memory = memory if memory is not None else MemoryState()
    request = DecisionRequest(
        t=t,
        descriptions=tuple(descriptions),
        goal=goal,
        walking_velocity=walking_velocity,
        history=history,
        memory=memory,
        subgoals=tuple(subgoals),
    )
    try:
        action, category, text = backend.decide(request)
    except DecisionError:
        raise
    except Exception as exc:
        raise DecisionError(f"decision backend failed: {exc}") from exc
    if not isinstance(category, RationaleCategory):
        raise DecisionError(f"rationale {category!r} is not a RationaleCategory")
    if isinstance(action, LookAt):
        known = {d.object_id for d in descriptions} | set(memory.entries)
        if action.object_id not in known:
            raise DecisionError(f"LookAt target {action.object_id!r} is neither described nor remembered")
    elif not isinstance(action, Search):
        raise DecisionError(f"backend returned a non-action {action!r}")
    return action, category, text


def record_action(history: ActionHistory, record: ActionRecord) -> ActionHistory:
    if history.records and record.t < history.records[-1].t:
        raise ContractError(
            f"action at t={record.t} precedes the last recorded action at t={history.records[-1].t}"
        )
    return ActionHistory(history.records + (record,))


def classify_movement(action: Action, obs: Observation) -> MovementClass:
    """Confirmation for shifts inside the current view, Exploration beyond it."""
    if isinstance(action, LookAt):
        if action.object_id in obs.visible_ids:
            return MovementClass.CONFIRMATION
        return MovementClass.EXPLORATION
    if action.direction == Direction.AHEAD:
        return MovementClass.CONFIRMATION
    return MovementClass.EXPLORATION


def action_target_orientation(
    action: Action, obs: Observation, memory: MemoryState, body_yaw: float
) -> Quaternion:
    """Orientation the head should reach for ``action`` given what the agent knows.

    LookAt resolves the object through the current view first, then the
    last known position in memory.
    """
    if isinstance(action, Search):
        return search_orientation(action.direction, body_yaw)
    for v in obs.visible:
        if v.object_id == action.object_id:
            return look_rotation(obs.body_position, v.center)
    entry = memory.entries.get(action.object_id)
    if entry is not None and entry.last_position is not None:
        return look_rotation(obs.body_position, entry.last_position)
    raise ActionTargetError(f"cannot resolve a position for {action.object_id!r}")
