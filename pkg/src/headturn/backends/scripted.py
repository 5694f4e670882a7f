"""Deterministic rule-based perception and decision backends.

These stand in for the vision and language models: every output is a pure
function of the inputs, the policy, and the seed.  Rules fire in a fixed
priority order:

1. safety        look at a hazard not yet checked (moving hazards are re-checked)
2. information   look at goal-relevant objects and signage
3. interest      look at moving, distracting, or strikingly new objects
4. staleness     search a sector that has not been scanned for a while
5. habit         glance ahead toward the destination
6. social        look at people
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..actions import Action, Direction, LookAt, RationaleCategory, Search
from ..decision import ActionHistory, DecisionRequest
from ..environment import Observation
from ..perception import MemoryState, ObjectDescription

RULES = ("safety", "information", "interest", "staleness", "habit", "social")
SECTORS = (Direction.BEHIND, Direction.LEFT, Direction.RIGHT)

_STOPWORDS = {"from", "into", "onto", "with", "that", "this", "then", "than", "side", "other", "safely", "find"}


@dataclass(frozen=True)
class ScriptedPolicy:
    priority: tuple = RULES
    staleness_window: float = 10.0
    cooldowns: dict = field(
        default_factory=lambda: {
            "safety_moving": 2.5,
            "safety_static": 15.0,
            "information": 8.0,
            "interest": 10.0,
            "staleness": 3.0,
            "habit": 6.0,
            "social": 8.0,
        }
    )
    # relevance = sum(weight * feature); weights sum to 1
    relevance_weights: dict = field(
        default_factory=lambda: {"tag": 0.35, "goal": 0.15, "salience": 0.2, "motion": 0.1, "proximity": 0.2}
    )
    tag_weights: dict = field(
        default_factory=lambda: {
            "hazard": 1.0,
            "goal_relevant": 0.8,
            "social": 0.5,
            "signage": 0.4,
            "distractor": 0.4,
            "dynamic": 0.2,
        }
    )
    proximity_scale: float = 5.0
    salience_floor: float = 0.1
    novelty_salience: float = 0.6

    def __post_init__(self) -> None:
        if sorted(self.priority) != sorted(RULES):
            raise ValueError(f"priority must order exactly the rules {RULES}")
        if self.staleness_window <= 0 or any(v <= 0 for v in self.cooldowns.values()):
            raise ValueError("windows and cooldowns must be positive")


def goal_keywords(goal: str) -> set[str]:
    words = re.findall(r"[a-z]+", goal.lower())
    return {w for w in words if len(w) >= 4 and w not in _STOPWORDS}


def _label_words(label: str) -> set[str]:
    return set(re.findall(r"[a-z]+", label.lower()))


def _fmt_deg(rad: float) -> str:
    deg = round(math.degrees(rad))
    return str(deg if deg != 0 else 0)


def scripted_perceive(
    obs: Observation, goal: str, memory: MemoryState, policy: ScriptedPolicy
) -> list[ObjectDescription]:
    keywords = goal_keywords(goal)
    w = policy.relevance_weights
    out = []
    for v in obs.visible:
        if v.salience < policy.salience_floor:
            continue
        tag_score = max((policy.tag_weights.get(tag, 0.0) for tag in v.tags), default=0.0)
        goal_match = "goal_relevant" in v.tags or bool(_label_words(v.label) & keywords)
        proximity = 1.0 / (1.0 + v.distance / policy.proximity_scale)
        relevance = (
            w["tag"] * tag_score
            + w["goal"] * float(goal_match)
            + w["salience"] * v.salience
            + w["motion"] * float(v.is_moving)
            + w["proximity"] * proximity
        )
        relevance = min(1.0, max(0.0, relevance))

        tags = set()
        if "hazard" in v.tags:
            tags.add(RationaleCategory.SAFETY)
        if goal_match or "signage" in v.tags:
            tags.add(RationaleCategory.INFORMATION_SEEKING)
        novel = v.object_id not in memory and v.salience >= policy.novelty_salience
        if v.is_moving or "distractor" in v.tags or novel:
            tags.add(RationaleCategory.INTEREST)
        if "social" in v.tags:
            tags.add(RationaleCategory.SOCIAL_SCHEMA)

        text = f"{v.label} at {_fmt_deg(v.bearing.azimuth)}°, {v.distance:.1f} m"
        if v.is_moving:
            text += ", moving"
        if "hazard" in v.tags:
            text += ", hazard"
        out.append(
            ObjectDescription(
                object_id=v.object_id,
                label=v.label,
                description=text,
                relevance=relevance,
                rationale_tags=frozenset(tags),
                observed_at=obs.t,
                distance=v.distance,
                is_moving=v.is_moving,
                position=v.center,
            )
        )
    return out


def _pick(cands: Sequence[ObjectDescription]) -> ObjectDescription:
    return min(
        cands,
        key=lambda d: (-d.relevance, d.distance if d.distance is not None else math.inf, d.object_id),
    )


def _age(t: float, since: Optional[float]) -> float:
    return math.inf if since is None else t - since


def scripted_decide(
    descriptions: Sequence[ObjectDescription],
    goal: str,
    velocity,
    history: ActionHistory,
    policy: ScriptedPolicy,
    t: float,
    sector_order: Sequence[Direction] = SECTORS,
) -> tuple[Action, RationaleCategory, str]:
    cd = policy.cooldowns

    def focus_age(d: ObjectDescription) -> float:
        return _age(t, history.last_focus_time(d.object_id))

    def sector_age(direction: Direction) -> float:
        last = history.last_search_time(direction)
        return t - (last if last is not None else 0.0)

    def tagged(cat: RationaleCategory) -> list[ObjectDescription]:
        return [d for d in descriptions if cat in d.rationale_tags]

    def rule_safety():
        cands = []
        for d in tagged(RationaleCategory.SAFETY):
            wait = cd["safety_moving"] if d.is_moving else cd["safety_static"]
            if focus_age(d) >= wait:
                cands.append(d)
        if cands:
            d = _pick(cands)
            return LookAt(d.object_id), RationaleCategory.SAFETY, f"checking {d.label}: possible danger ({d.description})"
        return None

    def rule_information():
        cands = [d for d in tagged(RationaleCategory.INFORMATION_SEEKING) if focus_age(d) >= cd["information"]]
        if cands:
            d = _pick(cands)
            return (
                LookAt(d.object_id),
                RationaleCategory.INFORMATION_SEEKING,
                f"reading {d.label} for information about the goal",
            )
        return None

    def rule_interest():
        cands = [d for d in tagged(RationaleCategory.INTEREST) if focus_age(d) >= cd["interest"]]
        if cands:
            d = _pick(cands)
            return LookAt(d.object_id), RationaleCategory.INTEREST, f"{d.label} caught my eye"
        return None

    def rule_staleness():
        last_scan = max(
            (s for s in (history.last_search_time(x) for x in sector_order) if s is not None),
            default=None,
        )
        if _age(t, last_scan) < cd["staleness"]:
            return None
        stale = [s for s in sector_order if sector_age(s) > policy.staleness_window]
        if not stale:
            return None
        best = max(stale, key=sector_age)  # max() keeps the first of equal ages
        return (
            Search(best),
            RationaleCategory.INFORMATION_SEEKING,
            f"have not checked {best.value} for {sector_age(best):.1f} s",
        )

    def rule_habit():
        if _age(t, history.last_search_time(Direction.AHEAD)) < cd["habit"]:
            return None
        return Search(Direction.AHEAD), RationaleCategory.HABIT, "glancing toward where I am heading"

    def rule_social():
        cands = [d for d in tagged(RationaleCategory.SOCIAL_SCHEMA) if focus_age(d) >= cd["social"]]
        if cands:
            d = _pick(cands)
            return LookAt(d.object_id), RationaleCategory.SOCIAL_SCHEMA, f"checking on {d.label} nearby"
        return None

    rules = {
        "safety": rule_safety,
        "information": rule_information,
        "interest": rule_interest,
        "staleness": rule_staleness,
        "habit": rule_habit,
        "social": rule_social,
    }
    for name in policy.priority:
        result = rules[name]()
        if result is not None:
            return result

    # everything cooling down: scan whichever direction has waited longest
    best = max((Direction.AHEAD, *sector_order), key=sector_age)
    if best == Direction.AHEAD:
        return Search(best), RationaleCategory.HABIT, "glancing toward where I am heading"
    return Search(best), RationaleCategory.INFORMATION_SEEKING, f"scanning {best.value}"


_DECOMPOSITIONS = (
    (("mall", "store", "shop"), ["scan nearby stores", "check escalator position", "locate the far exit", "walk to the opposite side"]),
    (("cross", "crosswalk", "crossing"), ["check traffic in both directions", "confirm the signal", "cross to the other side"]),
    (("cafe", "café", "table", "window"), ["scan the café layout", "check the counter queue", "find a free table by the window", "sit down"]),
    (("bus", "seat"), ["scan the aisle", "check for other passengers", "find an empty seat at the back", "sit down"]),
    (("street", "walk"), ["scan the sidewalk ahead", "watch for vehicles and cyclists", "walk to the far end"]),
)


def scripted_decompose(goal: str) -> list[str]:
    words = set(re.findall(r"[a-zé]+", goal.lower()))
    for keys, plan in _DECOMPOSITIONS:
        if words & set(keys):
            return list(plan)
    return ["look around to get oriented", f"accomplish: {goal}"]


class ScriptedPerception:
    def __init__(self, policy: Optional[ScriptedPolicy] = None):
        self.policy = policy or ScriptedPolicy()

    def describe(self, obs: Observation, goal: str, memory: MemoryState) -> list[ObjectDescription]:
        return scripted_perceive(obs, goal, memory, self.policy)


class ScriptedDecision:
    """Rule-policy decision backend.

    ``seed`` only permutes the order in which equally stale sectors are
    scanned, so runs with different seeds differ but each is reproducible.
    """

    def __init__(self, policy: Optional[ScriptedPolicy] = None, seed: int = 0):
        self.policy = policy or ScriptedPolicy()
        self.seed = seed
        order = list(SECTORS)
        random.Random(seed).shuffle(order)
        self.sector_order = tuple(order)

    def decompose(self, goal: str, memory: MemoryState, history: ActionHistory) -> list[str]:
        return scripted_decompose(goal)

    def decide(self, request: DecisionRequest) -> tuple[Action, RationaleCategory, str]:
        return scripted_decide(
            request.descriptions,
            request.goal,
            request.walking_velocity,
            request.history,
            self.policy,
            request.t,
            self.sector_order,
        )
