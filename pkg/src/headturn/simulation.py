"""The perceive -> decide -> act loop, run artifacts, and action-log replay."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .actions import LookAt
from .backends import BackendConfig, ScriptedDecision, ScriptedPerception, ScriptedPolicy, make_backends
from .decision import (
    ActionHistory,
    ActionRecord,
    active_subgoal,
    advance_subgoals,
    classify_movement,
    decide,
    decompose_goal,
    fallback_subgoals,
    record_action,
)
from .environment import DEFAULT_OMEGA_MAX, Scenario, SimulationState, load_scenario, step_environment
from .errors import (
    BackendError,
    ContractError,
    DecisionError,
    DecompositionError,
    PerceptionError,
    ReplayError,
)
from .evaluation import Trajectory, format_trajectory
from .orientation import angular_distance
from .perception import MemoryState, mark_focused, perceive, update_memory

log = logging.getLogger(__name__)

ON_TARGET_DEG = 2.0
LOOK_DWELL_S = 0.3


@dataclass(frozen=True)
class RunConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    tick_hz: float = 60.0
    decision_timeout: float = 1.0
    fov_h_deg: Optional[float] = None  # None: use the scenario's value
    fov_v_deg: Optional[float] = None
    omega_max: float = DEFAULT_OMEGA_MAX
    resample_hz: float = 30.0
    seed: int = 0
    memory_capacity: int = 64
    fallback: bool = True

    def __post_init__(self) -> None:
        for name in ("tick_hz", "decision_timeout", "omega_max", "resample_hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("fov_h_deg", "fov_v_deg"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 180:
                raise ValueError(f"{name} must be in (0, 180]")
        if self.memory_capacity < 1:
            raise ValueError("memory_capacity must be positive")

    def fov(self, scenario: Scenario) -> tuple[float, float]:
        h = math.radians(self.fov_h_deg) if self.fov_h_deg is not None else scenario.fov_h
        v = math.radians(self.fov_v_deg) if self.fov_v_deg is not None else scenario.fov_v
        return h, v

    def to_json(self) -> dict:
        return {
            "backend": self.backend.to_json(),
            "tick_hz": self.tick_hz,
            "decision_timeout": self.decision_timeout,
            "fov_h_deg": self.fov_h_deg,
            "fov_v_deg": self.fov_v_deg,
            "omega_max": self.omega_max,
            "resample_hz": self.resample_hz,
            "seed": self.seed,
            "memory_capacity": self.memory_capacity,
            "fallback": self.fallback,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["backend"] = BackendConfig(**d.get("backend", {}))
        return cls(**d)


@dataclass
class RunResult:
    scenario: Scenario
    trajectory: Trajectory
    history: ActionHistory
    memory: MemoryState
    fallbacks: dict
    config: RunConfig
    truncated: bool = False


class _ActionTracker:
    """Decides when the current action is finished and a new decision is due."""

    def __init__(self, action, start_tick: int, config: RunConfig):
        self.action = action
        self.start_tick = start_tick
        self.timeout_ticks = max(1, round(config.decision_timeout * config.tick_hz))
        self.dwell_ticks = round(LOOK_DWELL_S * config.tick_hz) if isinstance(action, LookAt) else 0
        self.tol = math.radians(ON_TARGET_DEG)
        self.on_ticks = 0
        self.done = False

    def update(self, state: SimulationState, tick: int) -> None:
        """Call after stepping into ``tick``."""
        if angular_distance(state.head.orientation, state.target) <= self.tol:
            self.on_ticks += 1
        else:
            self.on_ticks = 0
        elapsed = tick - self.start_tick
        if elapsed >= self.timeout_ticks:
            self.done = True
        elif self.on_ticks > 0 and self.on_ticks >= self.dwell_ticks:
            self.done = True


def _drive(
    scenario: Scenario,
    config: RunConfig,
    choose: Callable[[int, SimulationState], Optional[ActionRecord]],
) -> tuple[list, bool]:
    """Shared tick loop for live runs and replays.

    ``choose`` is called on each decision tick and returns the record whose
    action to execute, or None to stop early.  Returns (samples, stopped_early).
    """
    dt = 1.0 / config.tick_hz
    n_ticks = int(round(scenario.duration * config.tick_hz))
    state = SimulationState.initial(scenario, config.omega_max, config.fov(scenario))
    samples = []
    tracker: Optional[_ActionTracker] = None
    for k in range(n_ticks):
        samples.append((state.t, state.head.orientation))
        if tracker is None or tracker.done:
            record = choose(k, state)
            if record is None:
                return samples, True
            tracker = _ActionTracker(record.action, k, config)
        step_environment(state, tracker.action, dt, observe=False)
        tracker.update(state, k + 1)
    return samples, False


def run_scenario(
    scenario: Scenario,
    config: RunConfig,
    perception=None,
    decision=None,
    policy: Optional[ScriptedPolicy] = None,
) -> RunResult:
    """Run one scenario for its full duration.

    Remote failures on a step fall back to the scripted backends for that
    step (when ``config.fallback`` is set) and are counted.
    """
    if perception is None or decision is None:
        p, d = make_backends(config.backend, policy)
        perception = perception or p
        decision = decision or d
    scripted_p = ScriptedPerception(policy)
    scripted_d = ScriptedDecision(policy, seed=config.backend.seed)
    fallbacks = {"decomposition": 0, "perception": 0, "decision": 0}
    ctx = {"history": ActionHistory(), "memory": MemoryState(capacity=config.memory_capacity)}

    try:
        subgoals = decompose_goal(decision, scenario.goal, ctx["memory"], ctx["history"])
    except DecompositionError as exc:
        if not config.fallback:
            raise
        log.warning("goal decomposition failed, using single sub-goal: %s", exc)
        fallbacks["decomposition"] += 1
        subgoals = fallback_subgoals(scenario.goal)

    def choose(k: int, state: SimulationState) -> ActionRecord:
        nonlocal subgoals
        t = state.t
        obs = state.observe()
        subgoals = advance_subgoals(subgoals, t, scenario.duration)
        memory, history = ctx["memory"], ctx["history"]
        try:
            descs = perceive(perception, obs, scenario.goal, memory)
        except (PerceptionError, ContractError, BackendError, DecisionError) as exc:
            if not config.fallback:
                raise
            log.warning("t=%.3f perception fallback: %s", t, exc)
            fallbacks["perception"] += 1
            descs = perceive(scripted_p, obs, scenario.goal, memory)
        memory = update_memory(memory, descs, t)
        used_fallback = False
        kwargs = dict(t=t, memory=memory, subgoals=subgoals)
        try:
            action, cat, text = decide(decision, descs, scenario.goal, obs.walking_velocity, history, **kwargs)
        except (DecisionError, BackendError, ContractError) as exc:
            if not config.fallback:
                raise
            log.warning("t=%.3f decision fallback: %s", t, exc)
            fallbacks["decision"] += 1
            used_fallback = True
            action, cat, text = decide(scripted_d, descs, scenario.goal, obs.walking_velocity, history, **kwargs)
        record = ActionRecord(
            t=t,
            action=action,
            rationale=cat,
            rationale_text=text,
            subgoal=active_subgoal(subgoals),
            movement_class=classify_movement(action, obs),
            tick=k,
            fallback=used_fallback,
            observation=obs,
        )
        ctx["history"] = record_action(history, record)
        if isinstance(action, LookAt):
            memory = mark_focused(memory, action.object_id, t)
        ctx["memory"] = memory
        return record

    samples, _ = _drive(scenario, config, choose)
    traj = Trajectory(tuple(samples), "run", scenario.name, scenario.condition)
    return RunResult(scenario, traj, ctx["history"], ctx["memory"], fallbacks, config)


def replay(
    records: Sequence[ActionRecord], scenario: Scenario, config: RunConfig
) -> tuple[Trajectory, bool]:
    """Re-execute logged actions without any backend.

    Returns the trajectory and whether the log ended before the scenario did.
    Each record must start on exactly the tick where the previous action
    finished; anything else means the log does not belong to this scenario
    and configuration.
    """
    ids = scenario.object_ids
    for i, r in enumerate(records):
        if isinstance(r.action, LookAt) and r.action.object_id not in ids:
            raise ReplayError(f"record {i}: unknown object {r.action.object_id!r} for scenario {scenario.name!r}")
        if i and r.t < records[i - 1].t:
            raise ReplayError(f"record {i}: timestamp {r.t} goes backwards")
    it = iter(enumerate(records))

    def choose(k: int, state: SimulationState) -> Optional[ActionRecord]:
        nxt = next(it, None)
        if nxt is None:
            return None
        i, rec = nxt
        if rec.tick != k:
            raise ReplayError(
                f"record {i}: logged at tick {rec.tick} but the previous action finished at tick {k}"
            )
        return rec

    samples, truncated = _drive(scenario, config, choose)
    if truncated:
        log.warning("action log for %s ends early; trajectory stops at t=%.3f", scenario.name, samples[-1][0])
    return Trajectory(tuple(samples), "replay", scenario.name, scenario.condition), truncated


# ---------------------------------------------------------------- artifacts


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_action_log(history: Iterable[ActionRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in history)


def read_action_log(path: Path) -> list[ActionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(ActionRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ReplayError(f"{path}:{lineno}: bad action record ({exc})") from exc
    return records


def build_manifest(result: RunResult, scenario_bytes: bytes, scenario_file: str) -> dict:
    return {
        "tool": "headturn",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scenario": {
            "name": result.scenario.name,
            "environment_kind": result.scenario.environment_kind,
            "condition": result.scenario.condition,
            "file": scenario_file,
            "sha256": hashlib.sha256(scenario_bytes).hexdigest(),
            "seed": result.scenario.seed,
        },
        "config": result.config.to_json(),
        "seed": result.config.seed,
        "fallbacks": dict(result.fallbacks),
        "decisions": len(result.history),
        "samples": len(result.trajectory),
        "artifacts": ["trajectory.csv", "actions.jsonl", "memory.json", "manifest.json"],
    }


def write_run(result: RunResult, out_dir: Path, scenario_bytes: bytes, scenario_file: str) -> Path:
    run_dir = Path(out_dir) / result.scenario.name
    atomic_write(run_dir / "trajectory.csv", format_trajectory(result.trajectory))
    atomic_write(run_dir / "actions.jsonl", format_action_log(result.history))
    atomic_write(run_dir / "memory.json", result.memory.dumps())
    manifest = build_manifest(result, scenario_bytes, scenario_file)
    atomic_write(run_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return run_dir


def run_file(scenario_path: str, config: RunConfig, out_dir: Path) -> Path:
    """Load, run, and write artifacts for one scenario file."""
    raw = Path(scenario_path).read_bytes()
    scenario = load_scenario(raw)
    result = run_scenario(scenario, config)
    return write_run(result, out_dir, raw, Path(scenario_path).name)
