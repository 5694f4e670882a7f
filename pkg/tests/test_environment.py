import io
import json
import math

import numpy as np
import pytest

from conftest import scenario_dict
from headturn.actions import Direction, LookAt, Search
from headturn.environment import (
    SimulationState,
    body_pose_at,
    load_scenario,
    parse_scenario,
    step_environment,
    visible_objects,
)
from headturn.errors import ActionTargetError, InvalidInputError, ScenarioLoadError
from headturn.orientation import Quaternion, angular_distance, bearing_of, look_rotation

ID = Quaternion.identity()
EYE = (0.0, 0.0, 0.0)


def obj(oid, center, radius=0.5, tags=(), salience=0.5, **extra):
    d = {"id": oid, "label": oid, "center": list(center), "radius": radius, "tags": list(tags), "salience": salience}
    d.update(extra)
    return d


def still_scene(objects, fov=None):
    d = scenario_dict(
        objects=objects,
        body_trajectory=[{"t": 0.0, "position": [0, 0, 0], "facing_yaw": 0.0}],
    )
    if fov:
        d["fov_half_angles_deg"] = list(fov)
    return parse_scenario(d)


# ------------------------------------------------------------ loading


def test_minimal_scenario_loads(minimal_scenario_dict):
    sc = load_scenario(json.dumps(minimal_scenario_dict).encode())
    assert sc.name == "mini" and sc.environment_kind == "street" and sc.condition == "MDC"
    assert sc.duration == 10.0 and sc.seed == 1
    assert [o.id for o in sc.objects] == ["sign_1"]
    assert sc.objects[0].tags == frozenset({"signage"})
    assert len(sc.body_trajectory) == 2
    assert sc.fov_h == pytest.approx(math.radians(45)) and sc.fov_v == pytest.approx(math.radians(35))


def test_load_accepts_stream_and_path(tmp_path, minimal_scenario_dict):
    raw = json.dumps(minimal_scenario_dict).encode()
    p = tmp_path / "s.json"
    p.write_bytes(raw)
    assert load_scenario(io.BytesIO(raw)) == load_scenario(str(p))


def test_duplicate_id_named():
    d = scenario_dict(objects=[obj("car_1", (0, 5, 0)), obj("car_1", (0, 9, 0))])
    with pytest.raises(ScenarioLoadError) as err:
        parse_scenario(d)
    assert any("duplicate object id 'car_1'" in v for v in err.value.violations)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d.update(environment_kind="airport"), "environment_kind"),
        (lambda d: d.update(condition="XYZ"), "condition"),
        (lambda d: d.update(duration_s=61), "duration_s"),
        (lambda d: d.update(duration_s=0), "duration_s"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d.update(body_trajectory=[]), "body_trajectory"),
        (lambda d: d["objects"][0].update(radius=0), "objects[0].radius"),
        (lambda d: d["objects"][0].update(salience=1.5), "objects[0].salience"),
        (lambda d: d["objects"][0].update(tags=["scary"]), "objects[0].tags"),
        (lambda d: d["objects"][0].update(colour="red"), "objects[0]"),
        (lambda d: d["body_trajectory"].reverse(), "body_trajectory[1].t"),
        (
            lambda d: d["objects"][0].update(
                waypoints=[{"t": 2, "position": [0, 0, 0]}, {"t": 1, "position": [0, 1, 0]}]
            ),
            "objects[0].waypoints",
        ),
    ],
)
def test_invalid_fields_are_named(mutate, field):
    d = scenario_dict()
    mutate(d)
    with pytest.raises(ScenarioLoadError) as err:
        parse_scenario(d)
    assert any(v.startswith(field) for v in err.value.violations), err.value.violations


def test_all_violations_collected():
    d = scenario_dict(condition="X", environment_kind="moon")
    with pytest.raises(ScenarioLoadError) as err:
        parse_scenario(d)
    assert len(err.value.violations) == 2


def test_malformed_json():
    with pytest.raises(ScenarioLoadError, match="malformed JSON"):
        load_scenario(b"{not json")


def test_ten_demo_scenarios_cover_design_matrix():
    from headturn.cli import demo_scenarios

    scenarios = [load_scenario(str(p)) for p in demo_scenarios()]
    cells = {(s.environment_kind, s.condition) for s in scenarios}
    assert cells == {(k, c) for k in ("bus", "cafe", "crosswalk", "mall", "street") for c in ("MDC", "APC")}
    assert all(s.duration == 60.0 for s in scenarios)


# ------------------------------------------------------------ body pose


def walking_scene():
    return parse_scenario(
        scenario_dict(
            body_trajectory=[
                {"t": 0.0, "position": [0, 0, 1.6], "facing_yaw": 0.0},
                {"t": 4.0, "position": [0, 8, 1.6], "facing_yaw": 1.0},
                {"t": 6.0, "position": [2, 8, 1.6], "facing_yaw": 1.0},
            ]
        )
    )


def test_body_pose_at_sample_time():
    pos, yaw, vel = body_pose_at(walking_scene(), 4.0)
    assert pos == (0, 8, 1.6) and yaw == 1.0
    assert vel == pytest.approx((1.0, 0.0, 0.0))


def test_body_pose_at_midpoint():
    pos, yaw, vel = body_pose_at(walking_scene(), 2.0)
    assert pos == pytest.approx((0, 4, 1.6)) and yaw == pytest.approx(0.5)
    assert vel == pytest.approx((0.0, 2.0, 0.0))


def test_body_pose_clamps_after_end():
    pos, yaw, vel = body_pose_at(walking_scene(), 9.0)
    assert pos == (2, 8, 1.6) and yaw == 1.0 and vel == (0.0, 0.0, 0.0)


def test_body_yaw_takes_short_way_round():
    sc = parse_scenario(
        scenario_dict(
            body_trajectory=[
                {"t": 0.0, "position": [0, 0, 0], "facing_yaw": 3.0},
                {"t": 1.0, "position": [0, 0, 0], "facing_yaw": -3.0},
            ]
        )
    )
    _, yaw, _ = body_pose_at(sc, 0.5)
    assert math.cos(yaw) == pytest.approx(-1.0, abs=1e-3)


def test_body_pose_negative_time_rejected():
    with pytest.raises(InvalidInputError):
        body_pose_at(walking_scene(), -1.0)


def test_dynamic_object_interpolates_between_waypoints():
    sc = parse_scenario(
        scenario_dict(
            objects=[
                obj(
                    "bike",
                    (0, 0, 0),
                    waypoints=[{"t": 1.0, "position": [0, 0, 0]}, {"t": 3.0, "position": [4, 2, 0]}],
                )
            ]
        )
    )
    bike = sc.object("bike")
    assert bike.position_at(2.0) == pytest.approx((2, 1, 0))
    assert bike.position_at(0.0) == (0, 0, 0) and bike.position_at(5.0) == (4, 2, 0)
    assert bike.is_moving_at(2.0) and not bike.is_moving_at(5.0)


# ------------------------------------------------------------ visibility


def test_object_dead_ahead_is_visible():
    sc = still_scene([obj("a", (0, 10, 0))])
    (v,) = visible_objects(sc, 0.0, ID)
    assert v.object_id == "a" and v.distance == pytest.approx(10) and v.occlusion == 0.0


def test_object_outside_horizontal_fov_excluded():
    az = math.radians(50)
    sc = still_scene([obj("a", (-10 * math.sin(az), 10 * math.cos(az), 0))])
    assert visible_objects(sc, 0.0, ID) == []
    assert len(visible_objects(sc, 0.0, ID, fov=(math.radians(55), math.radians(35)))) == 1


def test_object_outside_vertical_fov_excluded():
    sc = still_scene([obj("a", (0, 10, 10))])  # 45 deg up, vertical half-angle 35
    assert visible_objects(sc, 0.0, ID) == []


def test_scenario_fov_override():
    az = math.radians(50)
    sc = still_scene([obj("a", (-10 * math.sin(az), 10 * math.cos(az), 0))], fov=(60, 35))
    assert len(visible_objects(sc, 0.0, ID)) == 1


def ray_hits_sphere(origin, direction, center, radius):
    """Smallest positive ray parameter hitting the sphere, or None."""
    oc = np.subtract(origin, center)
    b = np.dot(direction, oc)
    c = np.dot(oc, oc) - radius * radius
    disc = b * b - c
    if disc < 0:
        return None
    t = -b - math.sqrt(disc)
    return t if t > 0 else None


def test_fully_hidden_object_excluded_ray_oracle():
    small = ("small", (0.0, 20.0, 0.0), 0.5)
    big = ("big", (0.0, 10.0, 0.0), 2.0)
    # oracle: every ray from the eye that touches the small sphere meets the big sphere first
    rng = np.random.default_rng(0)
    for _ in range(2000):
        p = np.array(small[1]) + rng.normal(size=3) * 0.3
        if np.linalg.norm(p - small[1]) > small[2]:
            continue
        d = p / np.linalg.norm(p)
        t_big = ray_hits_sphere(EYE, d, big[1], big[2])
        t_small = ray_hits_sphere(EYE, d, small[1], small[2])
        assert t_big is not None and t_small is not None and t_big < t_small
    sc = still_scene([obj(n, c, r) for n, c, r in (small, big)])
    assert [v.object_id for v in visible_objects(sc, 0.0, ID)] == ["big"]


def test_partial_occlusion_fraction_reported():
    sc = still_scene([obj("back", (0, 20, 0), 1.0), obj("front", (0.8, 10, 0), 0.5)])
    vis = {v.object_id: v for v in visible_objects(sc, 0.0, ID)}
    assert 0.0 < vis["back"].occlusion < 1.0
    assert vis["front"].occlusion == 0.0


def test_partial_occlusion_matches_ray_sampling():
    target, blocker = ((0.0, 20.0, 0.0), 1.0), ((0.4, 10.0, 0.0), 0.4)
    sc = still_scene([obj("t", *target), obj("b", *blocker)])
    frac = {v.object_id: v for v in visible_objects(sc, 0.0, ID)}["t"].occlusion
    # sample directions uniformly over the target's angular disk
    rng = np.random.default_rng(1)
    axis = np.array(target[0]) / np.linalg.norm(target[0])
    half = math.asin(target[1] / np.linalg.norm(target[0]))
    hidden = total = 0
    while total < 20000:
        u, v = rng.uniform(-half, half, size=2)
        if u * u + v * v > half * half:
            continue
        d = axis + np.array([u, 0.0, v])
        d /= np.linalg.norm(d)
        total += 1
        hidden += ray_hits_sphere(EYE, d, blocker[0], blocker[1]) is not None
    assert frac == pytest.approx(hidden / total, abs=0.03)


def test_visible_sorted_by_distance_then_id():
    sc = still_scene([obj("b", (1, 10, 0), 0.2), obj("a", (-1, 10, 0), 0.2), obj("c", (0, 5, 0), 0.2)])
    assert [v.object_id for v in visible_objects(sc, 0.0, ID)] == ["c", "a", "b"]


def test_visible_bearings_match_bearing_of():
    sc = still_scene([obj("a", (3, 10, 1)), obj("b", (-4, 9, -2))])
    head = Quaternion.from_yaw_pitch(0.2, 0.1)
    for v in visible_objects(sc, 0.0, head):
        b = bearing_of(head, sc.object(v.object_id).center, EYE)
        assert (v.bearing.azimuth, v.bearing.elevation) == pytest.approx((b.azimuth, b.elevation), abs=1e-9)


# ------------------------------------------------------------ stepping


def test_step_toward_object_on_the_left_rotates_point_one_pi():
    sc = still_scene([obj("a", (-10, 0, 0))])
    state = SimulationState.initial(sc, omega_max=math.pi)
    before = state.head.orientation
    target = look_rotation(EYE, (-10, 0, 0))
    d0 = angular_distance(before, target)
    step_environment(state, LookAt("a"), 0.1)
    assert angular_distance(before, state.head.orientation) == pytest.approx(0.1 * math.pi, abs=1e-9)
    assert angular_distance(state.head.orientation, target) == pytest.approx(d0 - 0.1 * math.pi, abs=1e-9)
    assert state.t == pytest.approx(0.1)


def test_step_on_target_leaves_orientation():
    sc = still_scene([obj("a", (0, 10, 0))])
    state = SimulationState.initial(sc)
    before = state.head.orientation
    step_environment(state, LookAt("a"), 1 / 60)
    assert angular_distance(before, state.head.orientation) < 1e-12


def test_step_returns_observation():
    sc = still_scene([obj("a", (0, 10, 0))])
    obs = step_environment(SimulationState.initial(sc), Search(Direction.AHEAD), 0.5)
    assert obs.t == pytest.approx(0.5) and obs.visible_ids == {"a"}


def test_step_unknown_object_rejected():
    sc = still_scene([obj("a", (0, 10, 0))])
    with pytest.raises(ActionTargetError):
        step_environment(SimulationState.initial(sc), LookAt("ghost"), 0.1)


def test_step_is_bit_reproducible_and_bounded():
    sc = parse_scenario(
        scenario_dict(objects=[obj("car", (20, 5, 0), waypoints=[{"t": 0, "position": [20, 5, 0]}, {"t": 10, "position": [-20, 5, 0]}])])
    )
    runs = []
    for _ in range(2):
        state = SimulationState.initial(sc)
        qs = [state.head.orientation]
        for k in range(300):
            action = LookAt("car") if k < 150 else Search(Direction.BEHIND)
            step_environment(state, action, 1 / 60, observe=False)
            qs.append(state.head.orientation)
        runs.append(qs)
    assert runs[0] == runs[1]
    bound = 2.5 / 60 + 1e-9
    assert all(angular_distance(a, b) <= bound for a, b in zip(runs[0], runs[0][1:]))
