import json
import math
from dataclasses import replace

import pytest

from conftest import scenario_dict
from headturn.actions import LookAt
from headturn.backends import BackendConfig
from headturn.environment import parse_scenario
from headturn.errors import DecompositionError, ReplayError
from headturn.evaluation import format_trajectory
from headturn.orientation import angular_distance
from headturn.simulation import (
    RunConfig,
    build_manifest,
    format_action_log,
    read_action_log,
    replay,
    run_scenario,
    write_run,
)


def busy_scene(duration=20.0):
    objects = [
        {"id": "car_1", "label": "car", "center": [30, 8, 0.8], "radius": 1.5, "tags": ["hazard", "dynamic"], "salience": 0.8,
         "waypoints": [{"t": 0, "position": [30, 8, 0.8]}, {"t": 15, "position": [-30, 8, 0.8]}]},
        {"id": "sign_1", "label": "exit sign", "center": [-3, 12, 3.0], "radius": 0.4, "tags": ["signage"], "salience": 0.6},
        {"id": "kid_1", "label": "child", "center": [2, 5, 1.0], "radius": 0.4, "tags": ["social"], "salience": 0.5},
    ]
    return parse_scenario(scenario_dict(duration_s=duration, objects=objects, body_trajectory=[
        {"t": 0.0, "position": [0, 0, 1.6], "facing_yaw": 0.0},
        {"t": duration, "position": [0, 15, 1.6], "facing_yaw": 0.3},
    ]))


@pytest.fixture(scope="module")
def busy_run():
    return run_scenario(busy_scene(), RunConfig())


def test_sample_count_and_spacing(busy_run):
    times = [t for t, _ in busy_run.trajectory.samples]
    assert len(times) == 20 * 60
    assert times[0] == 0.0
    assert all(b - a == pytest.approx(1 / 60, abs=1e-9) for a, b in zip(times, times[1:]))


def test_full_minute_has_3600_samples():
    sc = parse_scenario(scenario_dict(duration_s=60.0))
    assert len(run_scenario(sc, RunConfig()).trajectory) == 3600


def test_kinematic_bound(busy_run):
    qs = [q for _, q in busy_run.trajectory.samples]
    bound = 2.5 / 60 + 1e-9
    assert max(angular_distance(a, b) for a, b in zip(qs, qs[1:])) <= bound


def test_decision_cadence(busy_run):
    recs = busy_run.history.records
    assert recs[0].tick == 0
    for prev, nxt in zip(recs, recs[1:]):
        gap = nxt.tick - prev.tick
        assert 1 <= gap <= 60
        if isinstance(prev.action, LookAt):
            assert gap >= 18  # fixation dwell
        assert nxt.t == pytest.approx(nxt.tick / 60, abs=1e-9)


def test_records_carry_observation_and_subgoal(busy_run):
    for r in busy_run.history:
        assert r.observation is not None and r.observation.t == r.t
        assert r.subgoal
        assert not r.fallback


def test_repeat_runs_identical(busy_run):
    again = run_scenario(busy_scene(), RunConfig())
    assert format_trajectory(again.trajectory) == format_trajectory(busy_run.trajectory)
    assert format_action_log(again.history) == format_action_log(busy_run.history)


def test_replay_reproduces_trajectory(busy_run, tmp_path):
    log = tmp_path / "a.jsonl"
    log.write_text(format_action_log(busy_run.history))
    traj, truncated = replay(read_action_log(log), busy_scene(), RunConfig())
    assert not truncated
    assert format_trajectory(traj) == format_trajectory(busy_run.trajectory)


def test_replay_truncated_log_stops_early(busy_run):
    recs = list(busy_run.history.records)
    cut = len(recs) // 2
    traj, truncated = replay(recs[:cut], busy_scene(), RunConfig())
    assert truncated
    # includes the sample at the tick where the next decision was due
    assert len(traj) == recs[cut].tick + 1
    assert traj.samples == busy_run.trajectory.samples[: len(traj)]


def test_replay_unknown_object_names_record(busy_run):
    recs = list(busy_run.history.records)
    recs[3] = replace(recs[3], action=LookAt("ufo"))
    with pytest.raises(ReplayError, match="record 3"):
        replay(recs, busy_scene(), RunConfig())


def test_replay_against_wrong_config_detected(busy_run):
    with pytest.raises(ReplayError, match="tick"):
        replay(busy_run.history.records, busy_scene(), RunConfig(decision_timeout=0.5, omega_max=1.0))


def test_run_config_round_trip_and_validation():
    cfg = RunConfig(backend=BackendConfig(kind="remote", model="m"), fov_h_deg=50, seed=3)
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
    for bad in ({"tick_hz": 0}, {"omega_max": -1}, {"fov_v_deg": 200}, {"memory_capacity": 0}):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_fov_flags_override_scenario():
    sc = busy_scene(2.0)
    assert RunConfig(fov_h_deg=30).fov(sc) == (math.radians(30), sc.fov_v)


def test_artifacts_and_manifest(busy_run, tmp_path):
    raw = json.dumps(scenario_dict()).encode()
    run_dir = write_run(busy_run, tmp_path, raw, "mini.json")
    assert sorted(p.name for p in run_dir.iterdir()) == ["actions.jsonl", "manifest.json", "memory.json", "trajectory.csv"]
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest == build_manifest(busy_run, raw, "mini.json")
    assert manifest["decisions"] == len(busy_run.history)
    assert manifest["samples"] == len(busy_run.trajectory)
    assert manifest["config"] == RunConfig().to_json()
    assert manifest["scenario"]["file"] == "mini.json" and len(manifest["scenario"]["sha256"]) == 64
    assert json.loads((run_dir / "memory.json").read_text()) == busy_run.memory.to_json()
    assert not list(run_dir.glob("*.tmp"))


def test_remote_failure_without_fallback_aborts():
    cfg = RunConfig(backend=BackendConfig(kind="remote", endpoint="http://127.0.0.1:9/v1", max_retries=0, timeout=1.0), fallback=False)
    with pytest.raises(DecompositionError):
        run_scenario(busy_scene(2.0), cfg)
