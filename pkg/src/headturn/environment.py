"""Scenario model, visibility, and the per-tick environment update.

Objects are bounding spheres.  The agent's eye sits at the body position
(scenarios author ``z`` as eye height).  Observations are structured lists of
bearings and distances rather than rendered frames.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import IO, Any, Optional, Sequence, Tuple, Union

from .actions import Action, LookAt, Search, search_orientation
from .errors import ActionTargetError, InvalidInputError, ScenarioLoadError
from .orientation import Bearing, HeadState, Quaternion, Vec3, bearing_of, look_rotation, slerp_step, wrap_angle

ENVIRONMENT_KINDS = ("bus", "cafe", "crosswalk", "mall", "street")
CONDITIONS = ("MDC", "APC")
OBJECT_TAGS = frozenset({"hazard", "distractor", "goal_relevant", "social", "signage", "dynamic"})

DEFAULT_FOV_H = math.radians(45.0)
DEFAULT_FOV_V = math.radians(35.0)
DEFAULT_OMEGA_MAX = 2.5
MAX_DURATION_S = 60.0


@dataclass(frozen=True)
class Waypoint:
    t: float
    position: Vec3


@dataclass(frozen=True)
class SceneObject:
    id: str
    label: str
    center: Vec3
    radius: float
    tags: frozenset = frozenset()
    salience: float = 0.5
    waypoints: Tuple[Waypoint, ...] = ()

    def position_at(self, t: float) -> Vec3:
        wps = self.waypoints
        if not wps:
            return self.center
        if t <= wps[0].t:
            return wps[0].position
        if t >= wps[-1].t:
            return wps[-1].position
        i = bisect_right([w.t for w in wps], t) - 1
        a, b = wps[i], wps[i + 1]
        f = (t - a.t) / (b.t - a.t)
        return _lerp3(a.position, b.position, f)

    def is_moving_at(self, t: float) -> bool:
        wps = self.waypoints
        if len(wps) < 2 or t < wps[0].t or t >= wps[-1].t:
            return False
        i = bisect_right([w.t for w in wps], t) - 1
        return wps[i].position != wps[i + 1].position


@dataclass(frozen=True)
class BodySample:
    t: float
    position: Vec3
    facing_yaw: float


@dataclass(frozen=True)
class Scenario:
    name: str
    environment_kind: str
    condition: str
    goal: str
    objects: Tuple[SceneObject, ...]
    body_trajectory: Tuple[BodySample, ...]
    duration: float
    seed: int
    fov_h: float = DEFAULT_FOV_H
    fov_v: float = DEFAULT_FOV_V

    def object(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise ActionTargetError(f"unknown object id {object_id!r} in scenario {self.name!r}")

    @property
    def object_ids(self) -> frozenset:
        return frozenset(o.id for o in self.objects)


@dataclass(frozen=True)
class VisibleObject:
    object_id: str
    label: str
    bearing: Bearing
    distance: float
    occlusion: float
    is_moving: bool
    tags: frozenset
    salience: float
    center: Vec3

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "label": self.label,
            "azimuth": self.bearing.azimuth,
            "elevation": self.bearing.elevation,
            "distance": self.distance,
            "occlusion": self.occlusion,
            "is_moving": self.is_moving,
            "tags": sorted(self.tags),
            "salience": self.salience,
            "center": list(self.center),
        }

    @classmethod
    def from_json(cls, d: dict) -> "VisibleObject":
        return cls(
            object_id=d["object_id"],
            label=d["label"],
            bearing=Bearing(d["azimuth"], d["elevation"]),
            distance=d["distance"],
            occlusion=d["occlusion"],
            is_moving=d["is_moving"],
            tags=frozenset(d["tags"]),
            salience=d["salience"],
            center=tuple(d["center"]),
        )


@dataclass(frozen=True)
class Observation:
    t: float
    head_orientation: Quaternion
    body_position: Vec3
    walking_velocity: Vec3
    visible: Tuple[VisibleObject, ...]
    fov_h: float
    fov_v: float

    @property
    def visible_ids(self) -> frozenset:
        return frozenset(v.object_id for v in self.visible)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "head_orientation": list(self.head_orientation.as_tuple()),
            "body_position": list(self.body_position),
            "walking_velocity": list(self.walking_velocity),
            "fov_h": self.fov_h,
            "fov_v": self.fov_v,
            "visible": [v.to_json() for v in self.visible],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Observation":
        return cls(
            t=d["t"],
            head_orientation=Quaternion(*d["head_orientation"]),
            body_position=tuple(d["body_position"]),
            walking_velocity=tuple(d["walking_velocity"]),
            visible=tuple(VisibleObject.from_json(v) for v in d["visible"]),
            fov_h=d["fov_h"],
            fov_v=d["fov_v"],
        )


def _lerp3(a: Sequence[float], b: Sequence[float], f: float) -> Vec3:
    return (a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f, a[2] + (b[2] - a[2]) * f)


# ---------------------------------------------------------------- loading

_TOP_KEYS = {"name", "environment_kind", "condition", "goal", "duration_s", "seed", "objects", "body_trajectory"}
_OPTIONAL_TOP_KEYS = {"fov_half_angles_deg"}
_OBJECT_KEYS = {"id", "label", "center", "radius", "tags", "salience"}
_OPTIONAL_OBJECT_KEYS = {"waypoints"}
_BODY_KEYS = {"t", "position", "facing_yaw"}


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _vec3(v: Any) -> Optional[Vec3]:
    if isinstance(v, list) and len(v) == 3 and all(_is_num(c) for c in v):
        return (float(v[0]), float(v[1]), float(v[2]))
    return None


class _Collector:
    def __init__(self) -> None:
        self.items: list[str] = []

    def add(self, path: str, msg: str) -> None:
        self.items.append(f"{path}: {msg}")


def _check_keys(errs: _Collector, path: str, d: dict, required: set, optional: set = frozenset()) -> None:
    for k in sorted(required - d.keys()):
        errs.add(f"{path}.{k}" if path else k, "missing required field")
    for k in sorted(d.keys() - required - optional):
        errs.add(f"{path}.{k}" if path else k, "unknown field")


def _parse_object(errs: _Collector, path: str, d: Any) -> Optional[SceneObject]:
    if not isinstance(d, dict):
        errs.add(path, "expected an object")
        return None
    n0 = len(errs.items)
    _check_keys(errs, path, d, _OBJECT_KEYS, _OPTIONAL_OBJECT_KEYS)
    oid = d.get("id")
    if not isinstance(oid, str) or not oid:
        errs.add(f"{path}.id", "must be a non-empty string")
    if not isinstance(d.get("label"), str):
        errs.add(f"{path}.label", "must be a string")
    center = _vec3(d.get("center"))
    if center is None:
        errs.add(f"{path}.center", "must be [x, y, z]")
    radius = d.get("radius")
    if not _is_num(radius) or radius <= 0:
        errs.add(f"{path}.radius", "must be a positive number")
    tags = d.get("tags")
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        errs.add(f"{path}.tags", "must be a list of strings")
        tags = []
    else:
        for t in tags:
            if t not in OBJECT_TAGS:
                errs.add(f"{path}.tags", f"unknown tag {t!r}")
    sal = d.get("salience")
    if not _is_num(sal) or not 0.0 <= sal <= 1.0:
        errs.add(f"{path}.salience", "must be a number in [0, 1]")
    waypoints: list[Waypoint] = []
    raw_wps = d.get("waypoints", [])
    if not isinstance(raw_wps, list):
        errs.add(f"{path}.waypoints", "must be a list")
        raw_wps = []
    prev_t = None
    for i, w in enumerate(raw_wps):
        wpath = f"{path}.waypoints[{i}]"
        if not isinstance(w, dict):
            errs.add(wpath, "expected an object")
            continue
        _check_keys(errs, wpath, w, {"t", "position"})
        wt = w.get("t")
        pos = _vec3(w.get("position"))
        if not _is_num(wt) or wt < 0:
            errs.add(f"{wpath}.t", "must be a number >= 0")
            continue
        if pos is None:
            errs.add(f"{wpath}.position", "must be [x, y, z]")
            continue
        if prev_t is not None and wt <= prev_t:
            errs.add(f"{wpath}.t", "waypoint times must be strictly increasing")
        prev_t = wt
        waypoints.append(Waypoint(float(wt), pos))
    if len(errs.items) > n0:
        return None
    return SceneObject(
        id=oid,
        label=d["label"],
        center=center,
        radius=float(radius),
        tags=frozenset(tags),
        salience=float(sal),
        waypoints=tuple(waypoints),
    )


def parse_scenario(data: Any, max_duration: float = MAX_DURATION_S) -> Scenario:
    """Validate decoded scenario JSON; raises ScenarioLoadError listing all violations."""
    errs = _Collector()
    if not isinstance(data, dict):
        raise ScenarioLoadError("scenario root must be a JSON object")
    _check_keys(errs, "", data, _TOP_KEYS, _OPTIONAL_TOP_KEYS)
    name = data.get("name")
    if not isinstance(name, str) or not name:
        errs.add("name", "must be a non-empty string")
    kind = data.get("environment_kind")
    if kind not in ENVIRONMENT_KINDS:
        errs.add("environment_kind", f"must be one of {', '.join(ENVIRONMENT_KINDS)}")
    cond = data.get("condition")
    if cond not in CONDITIONS:
        errs.add("condition", "must be 'MDC' or 'APC'")
    goal = data.get("goal")
    if not isinstance(goal, str) or not goal.strip():
        errs.add("goal", "must be a non-empty string")
    duration = data.get("duration_s")
    if not _is_num(duration) or duration <= 0:
        errs.add("duration_s", "must be a positive number")
    elif duration > max_duration:
        errs.add("duration_s", f"exceeds the {max_duration:g} s limit")
    seed = data.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errs.add("seed", "must be an unsigned integer")
    fov_h, fov_v = DEFAULT_FOV_H, DEFAULT_FOV_V
    if "fov_half_angles_deg" in data:
        fov = data["fov_half_angles_deg"]
        if isinstance(fov, list) and len(fov) == 2 and all(_is_num(f) and 0 < f <= 180 for f in fov):
            fov_h, fov_v = math.radians(fov[0]), math.radians(fov[1])
        else:
            errs.add("fov_half_angles_deg", "must be [h, v] in degrees, each in (0, 180]")

    objects: list[SceneObject] = []
    raw_objects = data.get("objects", [])
    if not isinstance(raw_objects, list):
        errs.add("objects", "must be a list")
        raw_objects = []
    seen: set[str] = set()
    for i, o in enumerate(raw_objects):
        obj = _parse_object(errs, f"objects[{i}]", o)
        if obj is None:
            continue
        if obj.id in seen:
            errs.add(f"objects[{i}].id", f"duplicate object id {obj.id!r}")
        seen.add(obj.id)
        objects.append(obj)

    body: list[BodySample] = []
    raw_body = data.get("body_trajectory", [])
    if not isinstance(raw_body, list) or not raw_body:
        errs.add("body_trajectory", "must be a non-empty list")
        raw_body = raw_body if isinstance(raw_body, list) else []
    prev_t = None
    for i, b in enumerate(raw_body):
        bpath = f"body_trajectory[{i}]"
        if not isinstance(b, dict):
            errs.add(bpath, "expected an object")
            continue
        _check_keys(errs, bpath, b, _BODY_KEYS)
        bt, pos, yaw = b.get("t"), _vec3(b.get("position")), b.get("facing_yaw")
        ok = True
        if not _is_num(bt) or bt < 0:
            errs.add(f"{bpath}.t", "must be a number >= 0")
            ok = False
        if pos is None:
            errs.add(f"{bpath}.position", "must be [x, y, z]")
            ok = False
        if not _is_num(yaw):
            errs.add(f"{bpath}.facing_yaw", "must be a number (radians)")
            ok = False
        if not ok:
            continue
        if prev_t is not None and bt <= prev_t:
            errs.add(f"{bpath}.t", "body samples must be sorted by strictly increasing time")
        prev_t = bt
        body.append(BodySample(float(bt), pos, float(yaw)))

    if errs.items:
        raise ScenarioLoadError(
            f"invalid scenario ({len(errs.items)} problem(s)): {errs.items[0]}", errs.items
        )
    return Scenario(
        name=name,
        environment_kind=kind,
        condition=cond,
        goal=goal,
        objects=tuple(objects),
        body_trajectory=tuple(body),
        duration=float(duration),
        seed=seed,
        fov_h=fov_h,
        fov_v=fov_v,
    )


def load_scenario(source: Union[IO, bytes, str], max_duration: float = MAX_DURATION_S) -> Scenario:
    """Load a scenario from a binary/text stream, raw bytes, or a path-like string."""
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioLoadError(f"scenario is not valid UTF-8: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioLoadError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(data, max_duration=max_duration)


# ---------------------------------------------------------------- kinematics


def body_pose_at(scenario: Scenario, t: float) -> Tuple[Vec3, float, Vec3]:
    """(position, facing_yaw, walking_velocity) at time ``t``.

    Linear interpolation between bracketing samples; yaw takes the short way
    round.  Outside the sampled range the pose clamps and velocity is zero.
    """
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    samples = scenario.body_trajectory
    zero = (0.0, 0.0, 0.0)
    if t <= samples[0].t:
        s = samples[0]
        return s.position, s.facing_yaw, zero
    if t >= samples[-1].t:
        s = samples[-1]
        return s.position, s.facing_yaw, zero
    i = bisect_right([s.t for s in samples], t) - 1
    a, b = samples[i], samples[i + 1]
    span = b.t - a.t
    if t == a.t:
        pos = a.position
        yaw = a.facing_yaw
    else:
        f = (t - a.t) / span
        pos = _lerp3(a.position, b.position, f)
        yaw = a.facing_yaw + wrap_angle(b.facing_yaw - a.facing_yaw) * f
    vel = tuple((pb - pa) / span for pa, pb in zip(a.position, b.position))
    return pos, yaw, vel


# ---------------------------------------------------------------- visibility


def _disk_overlap_fraction(target_r: float, blocker_r: float, sep: float) -> float:
    """Fraction of a disk of radius ``target_r`` covered by another disk."""
    if sep >= target_r + blocker_r:
        return 0.0
    if sep + target_r <= blocker_r:
        return 1.0
    if sep + blocker_r <= target_r:
        return (blocker_r * blocker_r) / (target_r * target_r)
    r, R, d = target_r, blocker_r, sep
    c1 = max(-1.0, min(1.0, (d * d + r * r - R * R) / (2 * d * r)))
    c2 = max(-1.0, min(1.0, (d * d + R * R - r * r) / (2 * d * R)))
    k = max(0.0, (-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R))
    area = r * r * math.acos(c1) + R * R * math.acos(c2) - 0.5 * math.sqrt(k)
    return max(0.0, min(1.0, area / (math.pi * r * r)))


def _angle_between(u: Sequence[float], v: Sequence[float]) -> float:
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), u[0] * v[0] + u[1] * v[1] + u[2] * v[2])


def visible_objects(
    scenario: Scenario,
    t: float,
    head_orientation: Quaternion,
    fov: Optional[Tuple[float, float]] = None,
    head_position: Optional[Vec3] = None,
) -> list[VisibleObject]:
    """Objects inside the view frustum and not fully occluded, nearest first.

    Occlusion is the fraction of the object's angular disk covered by the
    single nearer sphere that hides it most.
    """
    fov_h, fov_v = fov if fov is not None else (scenario.fov_h, scenario.fov_v)
    if head_position is None:
        head_position = body_pose_at(scenario, t)[0]
    eye = head_position
    placed = []
    for obj in scenario.objects:
        c = obj.position_at(t)
        d = (c[0] - eye[0], c[1] - eye[1], c[2] - eye[2])
        dist = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        if dist == 0.0:
            continue
        ang_r = math.asin(min(1.0, obj.radius / dist))
        placed.append((obj, c, d, dist, ang_r))

    out: list[VisibleObject] = []
    for obj, c, d, dist, ang_r in placed:
        bearing = bearing_of(head_orientation, c, eye)
        if abs(bearing.azimuth) > fov_h or abs(bearing.elevation) > fov_v:
            continue
        occ = 0.0
        for other, _, od, odist, o_ang in placed:
            if other is obj or odist >= dist or odist <= other.radius:
                continue
            frac = _disk_overlap_fraction(ang_r, o_ang, _angle_between(d, od))
            if frac > occ:
                occ = frac
                if occ >= 1.0:
                    break
        if occ >= 1.0:
            continue
        out.append(
            VisibleObject(
                object_id=obj.id,
                label=obj.label,
                bearing=bearing,
                distance=dist,
                occlusion=occ,
                is_moving=obj.is_moving_at(t),
                tags=obj.tags,
                salience=obj.salience,
                center=c,
            )
        )
    out.sort(key=lambda v: (v.distance, v.object_id))
    return out


# ---------------------------------------------------------------- stepping


@dataclass
class SimulationState:
    """Mutable per-run environment state; owned by a single run loop."""

    scenario: Scenario
    t: float
    head: HeadState
    fov_h: float
    fov_v: float
    target: Optional[Quaternion] = None

    @classmethod
    def initial(
        cls,
        scenario: Scenario,
        omega_max: float = DEFAULT_OMEGA_MAX,
        fov: Optional[Tuple[float, float]] = None,
    ) -> "SimulationState":
        _, yaw, _ = body_pose_at(scenario, 0.0)
        fov_h, fov_v = fov if fov is not None else (scenario.fov_h, scenario.fov_v)
        return cls(scenario, 0.0, HeadState(Quaternion.from_yaw_pitch(yaw), omega_max), fov_h, fov_v)

    def observe(self) -> Observation:
        pos, _, vel = body_pose_at(self.scenario, self.t)
        vis = visible_objects(self.scenario, self.t, self.head.orientation, (self.fov_h, self.fov_v), pos)
        return Observation(self.t, self.head.orientation, pos, vel, tuple(vis), self.fov_h, self.fov_v)


def target_orientation(scenario: Scenario, action: Action, t: float) -> Quaternion:
    """Head orientation the environment steers toward for ``action`` at time ``t``."""
    pos, yaw, _ = body_pose_at(scenario, t)
    if isinstance(action, LookAt):
        center = scenario.object(action.object_id).position_at(t)
        return look_rotation(pos, center)
    if isinstance(action, Search):
        return search_orientation(action.direction, yaw)
    raise ActionTargetError(f"unsupported action {action!r}")


def step_environment(
    state: SimulationState, action: Action, dt: float, observe: bool = True
) -> Optional[Observation]:
    """Advance ``state`` by ``dt`` seconds while executing ``action``.

    Moves the clock (and thereby dynamic objects and the body), then rotates
    the head one bounded slerp step toward the action's target.  Pass
    ``observe=False`` to skip building the Observation on ticks nobody reads.
    """
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    if isinstance(action, LookAt):
        state.scenario.object(action.object_id)
    t_next = state.t + dt
    target = target_orientation(state.scenario, action, t_next)
    state.t = t_next
    state.head.current_target = None
    if isinstance(action, LookAt):
        state.head.current_target = state.scenario.object(action.object_id).position_at(t_next)
    state.target = target
    state.head.orientation = slerp_step(state.head.orientation, target, state.head.max_angular_velocity * dt)
    return state.observe() if observe else None
