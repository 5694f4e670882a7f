import json
import math
import socket
import subprocess
import sys

import pytest

from conftest import scenario_dict
from headturn.cli import demo_scenarios, discover_trajectories, main


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def scene_file(tmp_path):
    d = scenario_dict(duration_s=6.0)
    d["objects"].append(
        {"id": "car_1", "label": "car", "center": [8, 6, 0.8], "radius": 1.2, "tags": ["hazard"], "salience": 0.7,
         "waypoints": [{"t": 0, "position": [8, 6, 0.8]}, {"t": 6, "position": [-8, 6, 0.8]}]}
    )
    return write_json(tmp_path / "mini.json", d)


@pytest.fixture
def run_dir(tmp_path, scene_file):
    assert main(["run", str(scene_file), "--out", str(tmp_path / "out")]) == 0
    return tmp_path / "out" / "mini"


def closed_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


# ------------------------------------------------------------ validate


def test_validate_ok(scene_file, capsys):
    assert main(["validate", str(scene_file)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_duplicate_id(tmp_path, capsys):
    d = scenario_dict()
    d["objects"].append(dict(d["objects"][0]))
    assert main(["validate", str(write_json(tmp_path / "dup.json", d))]) == 1
    assert "duplicate object id 'sign_1'" in capsys.readouterr().out


def test_validate_unsorted_body(tmp_path, capsys):
    d = scenario_dict()
    d["body_trajectory"].reverse()
    assert main(["validate", str(write_json(tmp_path / "uns.json", d))]) == 1
    assert "body_trajectory[1].t" in capsys.readouterr().out


def test_validate_shipped_demos():
    assert main(["validate", *map(str, demo_scenarios())]) == 0


# ------------------------------------------------------------ run


def test_run_writes_artifacts(run_dir):
    names = sorted(p.name for p in run_dir.iterdir())
    assert names == ["actions.jsonl", "manifest.json", "memory.json", "trajectory.csv"]
    rows = run_dir.joinpath("trajectory.csv").read_text().splitlines()
    assert rows[0] == "t,qw,qx,qy,qz" and len(rows) == 1 + 6 * 60


def test_run_twice_identical(tmp_path, scene_file, run_dir):
    assert main(["run", str(scene_file), "--out", str(tmp_path / "again")]) == 0
    for name in ("trajectory.csv", "actions.jsonl", "memory.json", "manifest.json"):
        assert (tmp_path / "again" / "mini" / name).read_bytes() == (run_dir / name).read_bytes()


def test_run_flags_reach_manifest(tmp_path, scene_file):
    out = tmp_path / "flags"
    args = ["run", str(scene_file), "--out", str(out), "--tick-hz", "30", "--fov-h", "60", "--omega-max", "1.5", "--seed", "4"]
    assert main(args) == 0
    manifest = json.loads((out / "mini" / "manifest.json").read_text())
    assert manifest["config"]["tick_hz"] == 30 and manifest["config"]["fov_h_deg"] == 60
    assert manifest["config"]["omega_max"] == 1.5 and manifest["seed"] == 4
    assert manifest["samples"] == 6 * 30


def test_run_unreachable_remote_falls_back(tmp_path, scene_file):
    out = tmp_path / "remote"
    url = f"http://127.0.0.1:{closed_port()}/v1/chat/completions"
    args = ["run", str(scene_file), "--out", str(out), "--backend", "remote", "--endpoint", url, "--retries", "0"]
    assert main(args) == 0
    manifest = json.loads((out / "mini" / "manifest.json").read_text())
    assert manifest["fallbacks"]["decomposition"] == 1
    assert manifest["fallbacks"]["decision"] == manifest["decisions"] > 0
    assert manifest["fallbacks"]["perception"] > 0


def test_run_unreachable_remote_without_fallback_exits_2(tmp_path, scene_file, capsys):
    url = f"http://127.0.0.1:{closed_port()}/v1"
    args = ["run", str(scene_file), "--out", str(tmp_path / "x"), "--backend", "remote", "--endpoint", url, "--retries", "0", "--no-fallback"]
    assert main(args) == 2
    assert "backend error" in capsys.readouterr().err


def test_run_invalid_scenario_exits_1(tmp_path):
    bad = write_json(tmp_path / "bad.json", scenario_dict(condition="none"))
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_run_missing_file_exits_3(tmp_path):
    assert main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 3


def test_run_needs_input(capsys):
    assert main(["run"]) == 1


def test_run_parallel_jobs_match_serial(tmp_path, scene_file, run_dir):
    other = write_json(tmp_path / "other.json", scenario_dict(name="other", duration_s=3.0))
    out = tmp_path / "par"
    assert main(["run", str(scene_file), str(other), "--jobs", "2", "--out", str(out)]) == 0
    assert (out / "mini" / "trajectory.csv").read_bytes() == (run_dir / "trajectory.csv").read_bytes()
    assert (out / "other" / "trajectory.csv").exists()


# ------------------------------------------------------------ replay


def test_replay_identical(tmp_path, scene_file, run_dir):
    out = tmp_path / "replayed.csv"
    assert main(["replay", str(run_dir / "actions.jsonl"), str(scene_file), "--out", str(out)]) == 0
    assert out.read_bytes() == (run_dir / "trajectory.csv").read_bytes()


def test_replay_truncated_log_warns(tmp_path, scene_file, run_dir, capsys):
    lines = (run_dir / "actions.jsonl").read_text().splitlines(keepends=True)
    log = tmp_path / "short" / "actions.jsonl"
    log.parent.mkdir()
    log.write_text("".join(lines[:3]))
    (log.parent / "manifest.json").write_bytes((run_dir / "manifest.json").read_bytes())
    out = tmp_path / "short.csv"
    assert main(["replay", str(log), str(scene_file), "--out", str(out)]) == 0
    assert "ends early" in capsys.readouterr().err
    full = (run_dir / "trajectory.csv").read_text().splitlines()
    part = out.read_text().splitlines()
    assert 1 < len(part) < len(full) and part == full[: len(part)]


def test_replay_unknown_object_reports_record(tmp_path, scene_file, run_dir, capsys):
    lines = (run_dir / "actions.jsonl").read_text().splitlines()
    rec = json.loads(lines[2])
    rec["action"] = {"type": "look_at", "object_id": "zeppelin"}
    lines[2] = json.dumps(rec)
    log = run_dir / "bad.jsonl"
    log.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(log), str(scene_file)]) == 1
    err = capsys.readouterr().err
    assert "record 2" in err and "zeppelin" in err


def test_replay_garbage_log(tmp_path, scene_file, run_dir):
    log = run_dir / "junk.jsonl"
    log.write_text('{"t": 0}\n')
    assert main(["replay", str(log), str(scene_file)]) == 1


# ------------------------------------------------------------ evaluate


def write_traj(path, quats, dt=1.0):
    rows = ["t,qw,qx,qy,qz"] + [f"{k * dt},{w},{x},{y},{z}" for k, (w, x, y, z) in enumerate(quats)]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n")


IDQ = (1.0, 0.0, 0.0, 0.0)
Z90 = (math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4))


def test_evaluate_self_is_zero(tmp_path, run_dir, capsys):
    ref = run_dir.parent
    assert main(["evaluate", str(ref), f"run={ref}", "--out", str(tmp_path / "rep")]) == 0
    csv_rows = (tmp_path / "rep" / "report.csv").read_text().splitlines()
    assert csv_rows == ["scenario,condition,method,normalized_dtw", "street,MDC,run,0.0000"]
    pairs = json.loads((tmp_path / "rep" / "pairs.json").read_text())
    assert pairs[0]["raw_cost"] == 0.0
    # 360 ticks span 5.983 s, resampled at 30 Hz
    assert pairs[0]["len_a"] == pairs[0]["len_b"] and abs(pairs[0]["len_a"] - 6 * 30) <= 1


def test_evaluate_two_methods_hand_computed(tmp_path, capsys):
    write_traj(tmp_path / "ref" / "street_MDC.csv", [IDQ, IDQ])
    write_traj(tmp_path / "same" / "street_MDC.csv", [IDQ, IDQ])
    write_traj(tmp_path / "turn" / "street_MDC.csv", [IDQ, Z90])
    # cost matrix [[0, pi/2], [0, pi/2]]: best path costs pi/2, normalized by (2+2)/2
    args = ["evaluate", str(tmp_path / "ref"), f"A={tmp_path / 'same'}", f"B={tmp_path / 'turn'}",
            "--resample-hz", "0", "--out", str(tmp_path / "rep")]
    assert main(args) == 0
    text = (tmp_path / "rep" / "report.txt").read_text()
    rows = {line.split()[0]: line.split()[1] for line in text.splitlines()[3:5]}
    assert rows == {"A": "0.0000*", "B": f"{math.pi / 4:.4f}"}


def test_evaluate_empty_candidate_dir(tmp_path, run_dir, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["evaluate", str(run_dir.parent), str(empty), "--out", str(tmp_path / "rep")]) == 1
    err = capsys.readouterr().err
    assert "street/MDC missing from candidate" in err


def test_evaluate_missing_reference_dir(tmp_path, run_dir):
    assert main(["evaluate", str(tmp_path / "none"), str(run_dir.parent)]) == 3


def test_evaluate_bad_trajectory_is_io_error(tmp_path):
    write_traj(tmp_path / "ref" / "bus_APC.csv", [IDQ, IDQ])
    (tmp_path / "cand").mkdir()
    (tmp_path / "cand" / "bus_APC.csv").write_text("t,qw,qx,qy,qz\n0,2,0,0,0\n")
    assert main(["evaluate", str(tmp_path / "ref"), str(tmp_path / "cand"), "--out", str(tmp_path / "r")]) == 3


def test_discover_ignores_unrelated_csvs(tmp_path, run_dir):
    (run_dir.parent / "street_replay.csv").write_text("t,qw,qx,qy,qz\n")
    (run_dir.parent / "notes.csv").write_text("")
    assert set(discover_trajectories(run_dir.parent)) == {("street", "MDC")}


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "headturn.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("run", "evaluate", "replay", "validate"):
        assert sub in proc.stdout
