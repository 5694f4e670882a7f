"""Object descriptions and the bounded object memory.

``perceive`` asks a backend to describe what is in view and rejects any
description that names an object not actually visible.  ``update_memory``
folds descriptions into a capacity-bounded store keyed by object id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Protocol

from .actions import RationaleCategory
from .environment import Observation
from .errors import ContractError, PerceptionError
from .orientation import Vec3

DEFAULT_CAPACITY = 64
RELEVANCE_THRESHOLD = 0.2


@dataclass(frozen=True)
class ObjectDescription:
    object_id: str
    label: str
    description: str
    relevance: float
    rationale_tags: frozenset[RationaleCategory] = frozenset()
    observed_at: float = 0.0
    # perception metadata copied from the observation; used for tie-breaks
    # and last-known-position recall
    distance: Optional[float] = None
    is_moving: bool = False
    position: Optional[Vec3] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.relevance <= 1.0:
            raise ContractError(f"relevance {self.relevance} for {self.object_id!r} outside [0, 1]")
        if not self.description.strip():
            raise ContractError(f"empty description for {self.object_id!r}")

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "label": self.label,
            "description": self.description,
            "relevance": self.relevance,
            "rationale_tags": sorted(r.value for r in self.rationale_tags),
            "observed_at": self.observed_at,
        }


@dataclass(frozen=True)
class MemoryEntry:
    object_id: str
    label: str
    description: str
    relevance: float
    first_seen: float
    last_seen: float
    times_seen: int = 1
    last_focused: Optional[float] = None
    last_position: Optional[Vec3] = None

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "label": self.label,
            "description": self.description,
            "relevance": self.relevance,
            "first_seen": self.first_seen,
            "last_seen": self.last_seen,
            "times_seen": self.times_seen,
            "last_focused": self.last_focused,
            "last_position": list(self.last_position) if self.last_position is not None else None,
        }


@dataclass(frozen=True)
class MemoryState:
    entries: dict = field(default_factory=dict)
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("memory capacity must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, object_id: str) -> bool:
        return object_id in self.entries

    def to_json(self) -> list:
        return [self.entries[k].to_json() for k in sorted(self.entries)]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


class PerceptionBackend(Protocol):
    def describe(self, obs: Observation, goal: str, memory: MemoryState) -> list[ObjectDescription]:
        ...


def perceive(
    backend: PerceptionBackend, obs: Observation, goal: str, memory: MemoryState
) -> list[ObjectDescription]:
    if not obs.visible:
        return []
    try:
        descriptions = list(backend.describe(obs, goal, memory))
    except (PerceptionError, ContractError):
        raise
    except Exception as exc:  # backend diagnostics travel with the error
        raise PerceptionError(f"perception backend failed: {exc}") from exc
    visible = obs.visible_ids
    for d in descriptions:
        if d.object_id not in visible:
            raise ContractError(f"backend described {d.object_id!r}, which is not in the current view")
    return descriptions


def update_memory(
    memory: MemoryState,
    descriptions: Iterable[ObjectDescription],
    t: float,
    threshold: float = RELEVANCE_THRESHOLD,
) -> MemoryState:
    """Return a new memory with ``descriptions`` observed at time ``t``.

    Unknown objects are inserted only when their relevance reaches
    ``threshold``; known objects are always refreshed.  Over capacity, entries
    with the lowest ``(relevance, last_seen, object_id)`` go first.
    """
    entries = dict(memory.entries)
    for d in descriptions:
        old = entries.get(d.object_id)
        if old is None:
            if d.relevance < threshold:
                continue
            entries[d.object_id] = MemoryEntry(
                object_id=d.object_id,
                label=d.label,
                description=d.description,
                relevance=d.relevance,
                first_seen=t,
                last_seen=t,
                times_seen=1,
                last_position=d.position,
            )
        else:
            entries[d.object_id] = replace(
                old,
                label=d.label,
                description=d.description,
                relevance=d.relevance,
                last_seen=t,
                times_seen=old.times_seen + 1,
                last_position=d.position if d.position is not None else old.last_position,
            )
    while len(entries) > memory.capacity:
        victim = min(entries.values(), key=lambda e: (e.relevance, e.last_seen, e.object_id))
        del entries[victim.object_id]
    return MemoryState(entries, memory.capacity)


def recall(memory: MemoryState, object_id: str) -> Optional[MemoryEntry]:
    return memory.entries.get(object_id)


def mark_focused(memory: MemoryState, object_id: str, t: float) -> MemoryState:
    entry = memory.entries.get(object_id)
    if entry is None:
        return memory
    entries = dict(memory.entries)
    entries[object_id] = replace(entry, last_focused=t)
    return MemoryState(entries, memory.capacity)
