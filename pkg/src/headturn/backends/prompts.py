"""Prompt templates for the remote perception and decision backends.

The wording is our own reconstruction; only the placeholder set is fixed.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Any, Mapping

from ..decision import ActionHistory, SubGoal
from ..environment import Observation
from ..errors import TemplateError
from ..perception import MemoryState

PLACEHOLDERS = frozenset({"goal", "observation", "memory", "history", "subgoals", "velocity"})


@dataclass(frozen=True)
class PromptTemplate:
    text: str

    def __post_init__(self) -> None:
        for name in self.fields:
            if name not in PLACEHOLDERS:
                raise TemplateError(f"unknown placeholder {{{name}}} in template")

    @property
    def fields(self) -> list[str]:
        try:
            parsed = list(string.Formatter().parse(self.text))
        except ValueError as exc:
            raise TemplateError(f"malformed template: {exc}") from exc
        names = []
        for _, name, spec, conv in parsed:
            if name is None:
                continue
            if name == "" or spec or conv:
                raise TemplateError(f"placeholders must be bare names, got {{{name}}}")
            if name not in names:
                names.append(name)
        return names


def _deg(rad: float) -> int:
    d = round(math.degrees(rad))
    return d if d != 0 else 0


def serialize_observation(obs: Observation) -> str:
    if not obs.visible:
        return "(nothing in view)"
    lines = []
    for v in obs.visible:
        flags = [f"az {_deg(v.bearing.azimuth)}°", f"el {_deg(v.bearing.elevation)}°", f"{v.distance:.1f} m"]
        if v.is_moving:
            flags.append("moving")
        if v.occlusion > 0:
            flags.append(f"{v.occlusion:.0%} hidden")
        if v.tags:
            flags.append("tags: " + ",".join(sorted(v.tags)))
        lines.append(f"- {v.object_id} ({v.label}): " + "; ".join(flags))
    return "\n".join(lines)


def serialize_memory(memory: MemoryState) -> str:
    if not memory.entries:
        return "(empty)"
    lines = []
    for key in sorted(memory.entries):
        e = memory.entries[key]
        lines.append(
            f"- {e.object_id} ({e.label}): {e.description}; relevance {e.relevance:.2f}; "
            f"seen {e.times_seen}x, last at {e.last_seen:.1f} s"
        )
    return "\n".join(lines)


def serialize_history(history: ActionHistory, limit: int = 10) -> str:
    if not history.records:
        return "(no actions yet)"
    lines = []
    for r in history.records[-limit:]:
        a = r.action.to_json()
        target = a.get("object_id") or a.get("direction")
        lines.append(f"- t={r.t:.2f}s {a['type']} {target} [{r.rationale.value}] {r.rationale_text}")
    return "\n".join(lines)


def serialize_subgoals(subgoals) -> str:
    if not subgoals:
        return "(none)"
    return "\n".join(f"- [{s.status}] {s.text}" if isinstance(s, SubGoal) else f"- {s}" for s in subgoals)


def serialize_velocity(v) -> str:
    speed = math.sqrt(sum(c * c for c in v))
    return f"({v[0]:.2f}, {v[1]:.2f}, {v[2]:.2f}) m/s, speed {speed:.2f} m/s"


_SERIALIZERS = {
    "observation": lambda v: serialize_observation(v) if isinstance(v, Observation) else str(v),
    "memory": lambda v: serialize_memory(v) if isinstance(v, MemoryState) else str(v),
    "history": lambda v: serialize_history(v) if isinstance(v, ActionHistory) else str(v),
    "subgoals": lambda v: v if isinstance(v, str) else serialize_subgoals(v),
    "velocity": lambda v: v if isinstance(v, str) else serialize_velocity(v),
    "goal": str,
}


def render_prompt(template: PromptTemplate, inputs: Mapping[str, Any]) -> str:
    values = {}
    for name in template.fields:
        if name not in inputs:
            raise TemplateError(f"no value supplied for placeholder {{{name}}}")
        values[name] = _SERIALIZERS[name](inputs[name])
    return template.text.format_map(values)


DECISION_SYSTEM = """\
You control the head of a pedestrian in a virtual scene. Choose the single next head action.
Actions: look_at an object id from the observation or memory, or search one of
left, right, up, down, behind, ahead.
Every action needs a rationale category: Interest, InformationSeeking, Safety, Habit, SocialSchema.
Reply with JSON only:
{"action": {"type": "look_at", "object_id": "<id>"} or {"type": "search", "direction": "<dir>"},
 "rationale_category": "<category>", "rationale": "<one sentence>"}"""

DECISION_TEMPLATE = PromptTemplate(
    """\
## Goal
{goal}

## Sub-goals
{subgoals}

## Walking velocity
{velocity}

## In view
{observation}

## Remembered objects
{memory}

## Recent actions
{history}"""
)

PERCEPTION_SYSTEM = """\
You are the eyes of a pedestrian in a virtual scene. For each object in view that matters,
write a short description and a relevance in [0, 1] given the goal and what is remembered.
Only use object ids from the list. Tag each with zero or more of:
Interest, InformationSeeking, Safety, Habit, SocialSchema.
Reply with JSON only:
{"descriptions": [{"object_id": "<id>", "description": "<text>", "relevance": 0.0,
 "rationale_tags": ["<category>"]}]}"""

PERCEPTION_TEMPLATE = PromptTemplate(
    """\
## Goal
{goal}

## In view
{observation}

## Remembered objects
{memory}"""
)

DECOMPOSE_SYSTEM = """\
Break the pedestrian's goal into 1 to 8 short, ordered sub-goals. Balance scanning the
surroundings with making progress. Reply with JSON only: {"subgoals": ["<text>", ...]}"""

DECOMPOSE_TEMPLATE = PromptTemplate(
    """\
## Goal
{goal}

## Remembered objects
{memory}

## Recent actions
{history}"""
)
