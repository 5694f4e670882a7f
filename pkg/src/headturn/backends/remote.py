"""Chat-completion style remote backends.

Requests follow the common ``/chat/completions`` JSON shape and insist on a
JSON object reply.  Replies are validated strictly; anything off-schema is a
:class:`ParseError`, never a silently defaulted value.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

import httpx

from ..actions import Action, Direction, LookAt, RationaleCategory, Search
from ..decision import ActionHistory, DecisionRequest
from ..environment import Observation
from ..errors import BackendError, ParseError
from ..perception import MemoryState, ObjectDescription
from . import prompts

log = logging.getLogger(__name__)

API_KEY_ENV = "HEADTURN_API_KEY"


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "scripted"  # scripted | remote
    endpoint: str = "http://127.0.0.1:8000/v1/chat/completions"
    model: str = "default"
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.2
    seed: int = 0
    backoff_base: float = 0.5
    backoff_factor: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in ("scripted", "remote"):
            raise ValueError(f"backend kind must be 'scripted' or 'remote', got {self.kind!r}")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def backoff_delays(self) -> list[float]:
        return [self.backoff_base * self.backoff_factor**i for i in range(self.max_retries)]

    def to_json(self) -> dict:
        d = {"kind": self.kind, "seed": self.seed}
        if self.kind == "remote":
            d.update(
                endpoint=self.endpoint,
                model=self.model,
                timeout=self.timeout,
                max_retries=self.max_retries,
                temperature=self.temperature,
                backoff_base=self.backoff_base,
                backoff_factor=self.backoff_factor,
            )
        return d


def build_request(config: BackendConfig, system: str, user: str) -> dict:
    return {
        "model": config.model,
        "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
        "temperature": config.temperature,
        "response_format": {"type": "json_object"},
    }


def _extract_content(body: Any) -> dict:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ValueError(f"response lacks choices[0].message.content ({exc!r})") from exc
    if not isinstance(content, str):
        raise ValueError("message content is not a string")
    parsed = json.loads(content)
    if not isinstance(parsed, dict):
        raise ValueError("message content is not a JSON object")
    return parsed


def remote_call(
    config: BackendConfig,
    request: dict,
    *,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """POST ``request`` and return the decoded JSON object from the reply content.

    Retries timeouts, transport errors, non-2xx statuses and malformed bodies
    with exponential backoff.  Raises BackendError once retries run out.
    """
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(API_KEY_ENV)
    if key:
        headers["Authorization"] = f"Bearer {key}"
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=httpx.Timeout(config.timeout))
    delays = config.backoff_delays()
    diagnostics: list[str] = []
    try:
        for attempt in range(config.max_retries + 1):
            try:
                resp = client.post(config.endpoint, json=request, headers=headers, timeout=config.timeout)
                if not 200 <= resp.status_code < 300:
                    raise ValueError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                return _extract_content(resp.json())
            except (httpx.HTTPError, ValueError) as exc:
                diagnostics.append(f"attempt {attempt + 1}: {type(exc).__name__}: {exc}")
                log.warning("remote call to %s failed (%s)", config.endpoint, diagnostics[-1])
                if attempt < config.max_retries:
                    sleep(delays[attempt])
    finally:
        if own_client:
            client.close()
    raise BackendError(
        f"remote backend failed after {config.max_retries + 1} attempt(s)", diagnostics
    )


# ---------------------------------------------------------------- parsing

_CATEGORY_NAMES = {c.value: c for c in RationaleCategory}


def _parse_category(value: Any, where: str) -> RationaleCategory:
    if not isinstance(value, str) or value not in _CATEGORY_NAMES:
        raise ParseError(f"{where}: {value!r} is not one of {sorted(_CATEGORY_NAMES)}")
    return _CATEGORY_NAMES[value]


def parse_action(response: Any, valid_ids: Iterable[str]) -> tuple[Action, RationaleCategory, str]:
    if not isinstance(response, dict):
        raise ParseError("decision response must be a JSON object")
    if set(response) != {"action", "rationale_category", "rationale"}:
        raise ParseError(
            f"decision response keys {sorted(response)} != ['action', 'rationale', 'rationale_category']"
        )
    action = response["action"]
    if not isinstance(action, dict):
        raise ParseError("'action' must be an object")
    kind = action.get("type")
    if kind == "look_at":
        if set(action) != {"type", "object_id"}:
            raise ParseError(f"look_at takes exactly 'type' and 'object_id', got {sorted(action)}")
        oid = action["object_id"]
        if not isinstance(oid, str):
            raise ParseError("object_id must be a string")
        if oid not in set(valid_ids):
            raise ParseError(f"object_id {oid!r} is not a known object")
        parsed: Action = LookAt(oid)
    elif kind == "search":
        if set(action) != {"type", "direction"}:
            raise ParseError(f"search takes exactly 'type' and 'direction', got {sorted(action)}")
        direction = action["direction"]
        if not isinstance(direction, str) or direction not in {d.value for d in Direction}:
            raise ParseError(f"direction {direction!r} is not one of {[d.value for d in Direction]}")
        parsed = Search(Direction(direction))
    else:
        raise ParseError(f"action type {kind!r} must be 'look_at' or 'search'")
    category = _parse_category(response["rationale_category"], "rationale_category")
    rationale = response["rationale"]
    if not isinstance(rationale, str):
        raise ParseError("rationale must be a string")
    return parsed, category, rationale


def parse_descriptions(response: Any, obs: Observation) -> list[ObjectDescription]:
    if not isinstance(response, dict) or set(response) != {"descriptions"}:
        raise ParseError("perception response must be {'descriptions': [...]}")
    items = response["descriptions"]
    if not isinstance(items, list):
        raise ParseError("'descriptions' must be a list")
    by_id = {v.object_id: v for v in obs.visible}
    out = []
    seen = set()
    for i, item in enumerate(items):
        where = f"descriptions[{i}]"
        if not isinstance(item, dict) or set(item) != {"object_id", "description", "relevance", "rationale_tags"}:
            raise ParseError(f"{where}: expected keys object_id, description, relevance, rationale_tags")
        oid = item["object_id"]
        if not isinstance(oid, str) or oid not in by_id:
            raise ParseError(f"{where}: object_id {oid!r} is not in view")
        if oid in seen:
            raise ParseError(f"{where}: duplicate object_id {oid!r}")
        seen.add(oid)
        text = item["description"]
        if not isinstance(text, str) or not text.strip():
            raise ParseError(f"{where}: description must be a non-empty string")
        rel = item["relevance"]
        if isinstance(rel, bool) or not isinstance(rel, (int, float)) or not math.isfinite(rel) or not 0 <= rel <= 1:
            raise ParseError(f"{where}: relevance must be a number in [0, 1]")
        tags = item["rationale_tags"]
        if not isinstance(tags, list):
            raise ParseError(f"{where}: rationale_tags must be a list")
        cats = frozenset(_parse_category(tag, f"{where}.rationale_tags") for tag in tags)
        v = by_id[oid]
        out.append(
            ObjectDescription(
                object_id=oid,
                label=v.label,
                description=text.strip(),
                relevance=float(rel),
                rationale_tags=cats,
                observed_at=obs.t,
                distance=v.distance,
                is_moving=v.is_moving,
                position=v.center,
            )
        )
    return out


def parse_subgoals(response: Any) -> list[str]:
    if not isinstance(response, dict) or set(response) != {"subgoals"}:
        raise ParseError("decomposition response must be {'subgoals': [...]}")
    items = response["subgoals"]
    if not isinstance(items, list) or not all(isinstance(s, str) and s.strip() for s in items):
        raise ParseError("'subgoals' must be a list of non-empty strings")
    return items


# ---------------------------------------------------------------- backends


class RemotePerception:
    def __init__(self, config: BackendConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self.client = client

    def describe(self, obs: Observation, goal: str, memory: MemoryState) -> list[ObjectDescription]:
        user = prompts.render_prompt(
            prompts.PERCEPTION_TEMPLATE, {"goal": goal, "observation": obs, "memory": memory}
        )
        request = build_request(self.config, prompts.PERCEPTION_SYSTEM, user)
        return parse_descriptions(remote_call(self.config, request, client=self.client), obs)


class RemoteDecision:
    def __init__(self, config: BackendConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self.client = client

    def decompose(self, goal: str, memory: MemoryState, history: ActionHistory) -> list[str]:
        user = prompts.render_prompt(
            prompts.DECOMPOSE_TEMPLATE, {"goal": goal, "memory": memory, "history": history}
        )
        request = build_request(self.config, prompts.DECOMPOSE_SYSTEM, user)
        return parse_subgoals(remote_call(self.config, request, client=self.client))

    def decide(self, request: DecisionRequest) -> tuple[Action, RationaleCategory, str]:
        observation = "\n".join(f"- {d.object_id} ({d.label}): {d.description}" for d in request.descriptions)
        user = prompts.render_prompt(
            prompts.DECISION_TEMPLATE,
            {
                "goal": request.goal,
                "subgoals": request.subgoals,
                "velocity": request.walking_velocity,
                "observation": observation or "(nothing in view)",
                "memory": request.memory,
                "history": request.history,
            },
        )
        body = build_request(self.config, prompts.DECISION_SYSTEM, user)
        valid = {d.object_id for d in request.descriptions} | set(request.memory.entries)
        return parse_action(remote_call(self.config, body, client=self.client), valid)
