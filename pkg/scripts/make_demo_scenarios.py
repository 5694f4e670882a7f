"""Regenerate the ten illustrative demo scenarios shipped with the package.

The scenes are hand-authored stand-ins (five environments, each with a
minimal-distraction and an attention-provoking variant); they are not
reconstructions of any recorded environment.

    python scripts/make_demo_scenarios.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "headturn" / "scenarios"
EYE = 1.6


def obj(id, label, center, radius, tags=(), salience=0.5, waypoints=None):
    d = {"id": id, "label": label, "center": list(center), "radius": radius, "tags": list(tags), "salience": salience}
    if waypoints:
        d["waypoints"] = [{"t": t, "position": list(p)} for t, p in waypoints]
    return d


def body(*samples):
    return [{"t": t, "position": [x, y, z], "facing_yaw": yaw} for t, (x, y, z), yaw in samples]


def scenario(name, kind, cond, goal, objects, trajectory, seed):
    return {
        "name": name,
        "environment_kind": kind,
        "condition": cond,
        "goal": goal,
        "duration_s": 60.0,
        "seed": seed,
        "objects": objects,
        "body_trajectory": trajectory,
    }


# ---------------------------------------------------------------- crosswalk
# Agent waits at the curb (road spans y = 2..10), crosses at t = 18..26.

def crosswalk(cond):
    objects = [
        obj("traffic_light", "pedestrian traffic light", (3.0, 11.0, 3.0), 0.4, ["signage", "goal_relevant"], 0.8),
        obj("crossing_sign", "crosswalk sign", (-2.5, 1.0, 2.4), 0.35, ["signage"], 0.4),
        obj("pedestrian_1", "waiting pedestrian", (1.4, 0.6, 1.7), 0.3, ["social"], 0.5),
        obj("parked_van", "parked van", (-9.0, 13.0, 1.2), 1.5, [], 0.3),
        obj("far_shop", "corner shop", (8.0, 18.0, 2.5), 2.5, [], 0.3),
        obj("tree_1", "street tree", (-4.0, 15.0, 3.0), 1.2, [], 0.15),
        obj(
            "car_1", "approaching car", (-60.0, 4.0, 0.8), 1.2, ["hazard", "dynamic"], 0.9,
            [(0.0, (-70.0, 4.0, 0.8)), (7.0, (-70.0, 4.0, 0.8)), (15.0, (10.0, 4.0, 0.8)), (20.0, (60.0, 4.0, 0.8))],
        ),
        obj(
            "car_2", "passing car", (60.0, 8.0, 0.8), 1.2, ["hazard", "dynamic"], 0.7,
            [(0.0, (60.0, 8.0, 0.8)), (30.0, (60.0, 8.0, 0.8)), (38.0, (-60.0, 8.0, 0.8))],
        ),
    ]
    if cond == "APC":
        objects += [
            # a car turning in from ahead-left, in view from the curb
            obj(
                "turning_car", "turning car", (-30.0, 34.0, 0.8), 1.2, ["hazard", "dynamic"], 0.9,
                [(0.0, (-30.0, 34.0, 0.8)), (4.0, (-30.0, 34.0, 0.8)), (10.0, (-6.0, 6.0, 0.8)),
                 (11.0, (0.0, 4.0, 0.8)), (15.0, (40.0, 4.0, 0.8))],
            ),
            obj("billboard", "animated billboard", (10.0, 16.0, 5.0), 2.0, ["distractor", "signage", "dynamic"], 0.9),
            obj(
                "scooter", "electric scooter rider", (-20.0, 12.0, 1.2), 0.5, ["hazard", "dynamic"], 0.6,
                [(0.0, (-20.0, 12.0, 1.2)), (24.0, (-20.0, 12.0, 1.2)), (32.0, (20.0, 12.5, 1.2))],
            ),
            obj("cone_1", "traffic cone in the crossing", (0.6, 6.0, 0.4), 0.3, ["hazard"], 0.5),
        ]
    traj = body((0.0, (0.0, 0.0, EYE), 0.0), (18.0, (0.0, 0.0, EYE), 0.0), (26.0, (0.0, 12.0, EYE), 0.0),
                (40.0, (0.0, 22.0, EYE), 0.0), (60.0, (0.0, 22.0, EYE), 0.0))
    return scenario(f"crosswalk_{cond}", "crosswalk", cond, "cross safely to the other side", objects, traj,
                    101 if cond == "MDC" else 102)


# ---------------------------------------------------------------- mall

def mall(cond):
    objects = [obj("mall_map", "mall directory map", (1.8, 6.0, 1.6), 0.6, ["signage", "goal_relevant"], 0.8)]
    stores = ["bookstore", "shoe store", "phone shop", "bakery", "clothing store"]
    for i, label in enumerate(stores):
        side = 6.0 if i % 2 == 0 else -6.0
        objects.append(obj(f"store_{i + 1}", label, (side, 10.0 + 10.0 * i, 2.0), 2.0, ["goal_relevant"], 0.5))
    objects += [
        obj("escalator", "escalator", (-4.0, 34.0, 1.5), 1.5, ["goal_relevant"], 0.6),
        obj("exit_sign", "far exit sign", (0.0, 64.0, 3.5), 0.6, ["signage", "goal_relevant"], 0.6),
        obj("bench", "bench", (3.0, 22.0, 0.5), 0.8, [], 0.2),
        obj(
            "shopper_1", "shopper", (1.5, 50.0, 1.7), 0.35, ["social", "dynamic"], 0.4,
            [(0.0, (1.5, 50.0, 1.7)), (40.0, (1.5, 2.0, 1.7))],
        ),
        obj(
            "shopper_2", "shopper with bags", (-2.0, 40.0, 1.7), 0.4, ["social", "dynamic"], 0.4,
            [(0.0, (-2.0, 40.0, 1.7)), (20.0, (-2.0, 58.0, 1.7)), (60.0, (-2.5, 58.0, 1.7))],
        ),
    ]
    if cond == "APC":
        objects += [
            obj("promo_screen", "promotional video screen", (4.0, 26.0, 2.6), 1.2, ["distractor", "signage", "dynamic"], 0.9),
            obj("wet_floor", "wet floor sign", (0.8, 30.0, 0.5), 0.35, ["hazard"], 0.6),
            obj(
                "running_kid", "running child", (-3.0, 45.0, 1.0), 0.35, ["hazard", "dynamic", "social"], 0.7,
                [(0.0, (-3.0, 45.0, 1.0)), (25.0, (-3.0, 45.0, 1.0)), (30.0, (3.0, 35.0, 1.0)), (35.0, (-3.0, 30.0, 1.0))],
            ),
            obj("balloon_stand", "balloon vendor", (-3.5, 16.0, 2.2), 1.0, ["distractor", "social"], 0.8),
        ]
    traj = body((0.0, (0.0, 0.0, EYE), 0.0), (50.0, (0.0, 60.0, EYE), 0.0), (60.0, (0.0, 60.0, EYE), 0.0))
    return scenario(f"mall_{cond}", "mall", cond, "move from one end of the mall to the opposite side", objects, traj,
                    201 if cond == "MDC" else 202)


# ---------------------------------------------------------------- cafe

def cafe(cond):
    left = math.pi / 4
    objects = [
        obj("counter", "service counter", (2.0, 7.0, 1.0), 1.2, [], 0.5),
        obj("menu_board", "menu board", (2.0, 8.5, 2.4), 0.8, ["signage"], 0.6),
        obj("queue_1", "customer in queue", (1.2, 5.0, 1.7), 0.3, ["social"], 0.5),
        obj("barista", "barista", (2.6, 8.0, 1.7), 0.3, ["social"], 0.4),
        obj("window_table", "free table by the window", (-5.0, 11.0, 0.8), 0.6, ["goal_relevant"], 0.7),
        obj("window", "large window", (-6.5, 11.0, 1.6), 1.2, ["goal_relevant"], 0.5),
        obj("table_2", "occupied table", (-2.0, 6.0, 0.8), 0.6, [], 0.3),
        obj("patron_1", "seated patron", (-2.4, 6.6, 1.2), 0.3, ["social"], 0.4),
    ]
    if cond == "APC":
        objects += [
            obj("spill", "spilled coffee on the floor", (-1.0, 8.0, 0.1), 0.3, ["hazard"], 0.6),
            obj("tv", "wall television", (-1.0, 13.0, 2.5), 0.9, ["distractor", "dynamic"], 0.85),
            obj(
                "waiter", "waiter carrying a tray", (3.0, 9.0, 1.5), 0.4, ["hazard", "dynamic", "social"], 0.7,
                [(0.0, (3.0, 9.0, 1.5)), (12.0, (3.0, 9.0, 1.5)), (18.0, (-3.0, 9.5, 1.5)), (26.0, (-3.0, 3.0, 1.5)),
                 (34.0, (3.0, 9.0, 1.5))],
            ),
            obj("dog", "dog under a table", (-2.5, 9.0, 0.4), 0.35, ["distractor"], 0.8),
        ]
    traj = body((0.0, (0.0, 0.0, EYE), 0.0), (8.0, (0.0, 4.0, EYE), 0.0), (20.0, (0.0, 4.0, EYE), 0.0),
                (30.0, (-3.8, 10.0, EYE), left), (34.0, (-3.8, 10.4, 1.2), math.pi / 2), (60.0, (-3.8, 10.4, 1.2), math.pi / 2))
    return scenario(f"cafe_{cond}", "cafe", cond, "locate and sit at a table by the window", objects, traj,
                    301 if cond == "MDC" else 302)


# ---------------------------------------------------------------- street

def street(cond):
    objects = [
        obj("street_sign", "street name sign", (2.5, 12.0, 3.0), 0.4, ["signage"], 0.5),
        obj("shop_window_1", "shop window", (-4.0, 18.0, 1.8), 1.5, [], 0.35),
        obj("shop_window_2", "cafe terrace", (-4.0, 36.0, 1.5), 1.8, [], 0.35),
        obj("trash_can", "trash can", (1.8, 28.0, 0.5), 0.4, [], 0.15),
        obj("end_corner", "far street corner", (0.0, 62.0, 2.0), 2.0, ["goal_relevant"], 0.5),
        obj(
            "cyclist", "cyclist in the bike lane", (2.5, 60.0, 1.5), 0.6, ["hazard", "dynamic"], 0.8,
            [(0.0, (2.5, 60.0, 1.5)), (10.0, (2.5, 60.0, 1.5)), (20.0, (2.5, 0.0, 1.5))],
        ),
        obj(
            "car_a", "passing car", (5.5, -20.0, 0.8), 1.2, ["hazard", "dynamic"], 0.6,
            [(0.0, (5.5, -20.0, 0.8)), (26.0, (5.5, -20.0, 0.8)), (33.0, (5.5, 80.0, 0.8))],
        ),
        obj(
            "walker_1", "pedestrian", (-1.0, 45.0, 1.7), 0.3, ["social", "dynamic"], 0.4,
            [(0.0, (-1.0, 45.0, 1.7)), (45.0, (-1.0, 0.0, 1.7))],
        ),
    ]
    if cond == "APC":
        objects += [
            obj("barrier", "construction barrier", (0.4, 24.0, 0.6), 0.6, ["hazard"], 0.7),
            obj("performer", "street performer", (-3.0, 30.0, 1.7), 0.5, ["distractor", "social"], 0.9),
            obj("led_sign", "flashing shop sign", (-4.2, 14.0, 3.2), 0.7, ["distractor", "signage", "dynamic"], 0.85),
            obj(
                "dog_walker", "dog off leash", (3.0, 40.0, 0.4), 0.35, ["hazard", "dynamic", "distractor"], 0.7,
                [(0.0, (3.0, 40.0, 0.4)), (30.0, (3.0, 40.0, 0.4)), (36.0, (-1.0, 32.0, 0.4))],
            ),
        ]
    traj = body((0.0, (0.0, 0.0, EYE), 0.0), (50.0, (0.0, 56.0, EYE), 0.0), (60.0, (0.0, 56.0, EYE), 0.0))
    return scenario(f"street_{cond}", "street", cond, "walk safely to the far end of the street", objects, traj,
                    401 if cond == "MDC" else 402)


# ---------------------------------------------------------------- bus

def bus(cond):
    objects = [
        obj("driver", "bus driver", (-0.8, -1.0, 1.3), 0.35, ["social"], 0.4),
        obj("stop_display", "next-stop display", (0.0, 1.5, 2.2), 0.25, ["signage"], 0.5),
        obj("passenger_1", "seated passenger", (0.8, 3.0, 1.25), 0.3, ["social"], 0.4),
        obj("passenger_2", "seated passenger", (-0.8, 5.0, 1.25), 0.3, ["social"], 0.4),
        obj("passenger_3", "seated passenger", (0.8, 8.0, 1.25), 0.3, ["social"], 0.4),
        obj("empty_seat", "empty seat at the back", (-0.8, 10.5, 0.9), 0.35, ["goal_relevant"], 0.7),
        obj("rear_window", "rear window", (0.0, 11.8, 1.6), 0.9, [], 0.3),
        obj("handrail", "overhead handrail", (0.4, 4.0, 2.0), 0.1, [], 0.1),
    ]
    if cond == "APC":
        objects += [
            obj("santa", "person dressed as Santa Claus", (0.8, 6.0, 1.3), 0.4, ["distractor", "social"], 0.95),
            obj(
                "standing_passenger", "standing passenger in the aisle", (0.2, 7.0, 1.7), 0.3,
                ["hazard", "social", "dynamic"], 0.6,
                [(0.0, (0.2, 7.0, 1.7)), (12.0, (0.2, 7.0, 1.7)), (15.0, (0.6, 6.5, 1.7))],
            ),
            obj("bag", "bag on the floor", (-0.2, 9.0, 0.2), 0.25, ["hazard"], 0.5),
            obj("ad_screen", "advertising screen", (0.0, 2.5, 2.3), 0.3, ["distractor", "dynamic"], 0.8),
        ]
    traj = body((0.0, (0.0, 0.0, EYE), 0.0), (4.0, (0.0, 0.0, EYE), 0.0), (22.0, (0.0, 10.0, EYE), 0.0),
                (25.0, (-0.5, 10.3, 1.2), math.pi / 2), (60.0, (-0.5, 10.3, 1.2), math.pi / 2))
    return scenario(f"bus_{cond}", "bus", cond, "find and sit in an empty seat at the back", objects, traj,
                    501 if cond == "MDC" else 502)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (bus, cafe, crosswalk, mall, street):
        for cond in ("MDC", "APC"):
            data = build(cond)
            path = OUT / f"{data['name']}.json"
            path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
            print(path)


if __name__ == "__main__":
    main()
