"""Command-line entry point: run, evaluate, replay, validate.

Exit codes: 0 success, 1 validation, 2 backend, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .backends import BackendConfig
from .environment import CONDITIONS, load_scenario
from .errors import (
    BackendError,
    ContractError,
    DecisionError,
    HeadturnError,
    PerceptionError,
    ReplayError,
    ReportError,
    ScenarioLoadError,
    TrajectoryLoadError,
)
from .evaluation import build_report, dtw, format_trajectory, load_trajectory, resample
from .simulation import RunConfig, atomic_write, read_action_log, replay, run_file

log = logging.getLogger("headturn")

EXIT_OK, EXIT_VALIDATION, EXIT_BACKEND, EXIT_IO = 0, 1, 2, 3


def demo_scenarios() -> list[Path]:
    root = resources.files("headturn") / "scenarios"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------- run


def _run_config(args) -> RunConfig:
    backend = BackendConfig(
        kind=args.backend,
        endpoint=args.endpoint,
        model=args.model,
        timeout=args.timeout,
        max_retries=args.retries,
        temperature=args.temperature,
        seed=args.seed,
    )
    return RunConfig(
        backend=backend,
        tick_hz=args.tick_hz,
        decision_timeout=args.decision_timeout,
        fov_h_deg=args.fov_h,
        fov_v_deg=args.fov_v,
        omega_max=args.omega_max,
        resample_hz=args.resample_hz,
        seed=args.seed,
        fallback=not args.no_fallback,
    )


def cmd_run(args) -> int:
    config = _run_config(args)
    paths = [Path(p) for p in args.scenarios]
    if args.demo:
        paths += demo_scenarios()
    if not paths:
        print("error: give scenario files or --demo", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            dirs = list(pool.map(run_file, [str(p) for p in paths], [config] * len(paths), [out] * len(paths)))
    else:
        dirs = [run_file(str(p), config, out) for p in paths]
    for d in dirs:
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        fb = sum(manifest["fallbacks"].values())
        print(f"{d}: {manifest['samples']} samples, {manifest['decisions']} decisions, {fb} fallback step(s)")
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def discover_trajectories(root: Path) -> dict:
    """Map (scenario, condition) -> trajectory CSV path under ``root``.

    Accepts run-output directories (``<name>/trajectory.csv`` plus
    ``manifest.json``) and flat ``<scenario>_<CONDITION>.csv`` files.
    """
    found = {}
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    for manifest in sorted(root.glob("*/manifest.json")):
        traj = manifest.parent / "trajectory.csv"
        if traj.exists():
            sc = json.loads(manifest.read_text(encoding="utf-8"))["scenario"]
            found[(sc["environment_kind"], sc["condition"])] = traj
    for csv_path in sorted(root.glob("*.csv")):
        stem = csv_path.stem
        scen, _, cond = stem.rpartition("_")
        if scen and cond in CONDITIONS:
            found.setdefault((scen, cond), csv_path)
    return found


def _evaluate_pair(job):
    key, method, ref_path, cand_path, rate, window = job
    a = load_trajectory(str(ref_path))
    b = load_trajectory(str(cand_path))
    if rate:
        a, b = resample(a, rate), resample(b, rate)
    res = dtw(a, b, window=window)
    return key, method, str(ref_path), str(cand_path), res


def _parse_candidate(spec: str) -> tuple[str, Path]:
    if "=" in spec:
        label, path = spec.split("=", 1)
        return label, Path(path)
    return Path(spec).name, Path(spec)


def cmd_evaluate(args) -> int:
    ref = discover_trajectories(Path(args.reference))
    jobs = []
    missing = []
    for spec in args.candidates:
        method, path = _parse_candidate(spec)
        cand = discover_trajectories(path)
        for key in sorted(set(ref) | set(cand)):
            if key not in cand or key not in ref:
                side = "candidate " + str(path) if key not in cand else "reference"
                missing.append(f"{key[0]}/{key[1]} missing from {side}")
                continue
            jobs.append((key, method, ref[key], cand[key], args.resample_hz, args.window))
        if not cand:
            missing.append(f"no trajectories found in candidate {path}")
    if missing or not jobs:
        print("error: unmatched trajectory pairs:\n  " + "\n  ".join(missing or ["nothing to compare"]), file=sys.stderr)
        return EXIT_VALIDATION
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_evaluate_pair, jobs))
    else:
        done = [_evaluate_pair(j) for j in jobs]
    done.sort(key=lambda r: (r[0][0], r[0][1], r[1], r[3]))
    grouped: dict = {}
    pairs = []
    for (scen, cond), method, ref_path, cand_path, res in done:
        grouped.setdefault((scen, cond, method), []).append(res)
        pairs.append(
            {"scenario": scen, "condition": cond, "method": method, "reference": ref_path,
             "candidate": cand_path, **res.to_json()}
        )
    table = build_report(grouped)
    out = Path(args.out)
    atomic_write(out / "pairs.json", json.dumps(pairs, indent=2, sort_keys=True) + "\n")
    atomic_write(out / "report.txt", table.to_text())
    atomic_write(out / "report.csv", table.to_csv())
    print(table.to_text(), end="")
    return EXIT_OK


# ---------------------------------------------------------------- replay


def cmd_replay(args) -> int:
    log_path = Path(args.action_log)
    scenario = load_scenario(args.scenario)
    manifest_path = Path(args.manifest) if args.manifest else log_path.parent / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        config = RunConfig.from_json(manifest["config"])
    else:
        log.warning("no manifest at %s; replaying with default settings", manifest_path)
        config = RunConfig()
    records = read_action_log(log_path)
    traj, truncated = replay(records, scenario, config)
    text = format_trajectory(traj)
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    if truncated:
        print(f"warning: action log ends early; trajectory stops at t={traj.samples[-1][0]:.3f} s", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- validate


def cmd_validate(args) -> int:
    status = EXIT_OK
    for path in args.scenarios:
        try:
            load_scenario(path)
        except ScenarioLoadError as exc:
            status = EXIT_VALIDATION
            print(f"{path}: INVALID")
            for v in exc.violations:
                print(f"  - {v}")
        else:
            print(f"{path}: ok")
    return status


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="headturn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate scenarios and write trajectories, action logs, memory and manifest")
    r.add_argument("scenarios", nargs="*", help="scenario JSON files")
    r.add_argument("--demo", action="store_true", help="also run the ten bundled demo scenarios")
    r.add_argument("--backend", choices=["scripted", "remote"], default="scripted")
    r.add_argument("--endpoint", default=BackendConfig.endpoint)
    r.add_argument("--model", default=BackendConfig.model)
    r.add_argument("--timeout", type=float, default=BackendConfig.timeout, help="remote request timeout (s)")
    r.add_argument("--retries", type=int, default=BackendConfig.max_retries)
    r.add_argument("--temperature", type=float, default=BackendConfig.temperature)
    r.add_argument("--no-fallback", action="store_true", help="abort instead of using the scripted policy on remote failure")
    r.add_argument("--tick-hz", type=float, default=60.0)
    r.add_argument("--decision-timeout", type=float, default=1.0)
    r.add_argument("--resample-hz", type=float, default=30.0)
    r.add_argument("--fov-h", type=float, default=None, help="horizontal FOV half-angle (deg); default per scenario, 45")
    r.add_argument("--fov-v", type=float, default=None, help="vertical FOV half-angle (deg); default per scenario, 35")
    r.add_argument("--omega-max", type=float, default=2.5, help="max head angular speed (rad/s)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="runs")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("evaluate", help="normalized DTW of candidate trajectories against a reference set")
    e.add_argument("reference", help="directory of reference trajectories")
    e.add_argument("candidates", nargs="+", help="candidate directories, optionally LABEL=DIR")
    e.add_argument("--resample-hz", type=float, default=30.0, help="0 disables resampling")
    e.add_argument("--window", type=int, default=None, help="Sakoe-Chiba band half-width (samples)")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out", default="report")
    e.set_defaults(func=cmd_evaluate)

    rp = sub.add_parser("replay", help="re-execute an action log and emit the trajectory CSV")
    rp.add_argument("action_log")
    rp.add_argument("scenario")
    rp.add_argument("--manifest", default=None, help="run manifest (default: next to the action log)")
    rp.add_argument("--out", default=None, help="output CSV (default: stdout)")
    rp.set_defaults(func=cmd_replay)

    v = sub.add_parser("validate", help="check scenario files against the schema and invariants")
    v.add_argument("scenarios", nargs="+")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in exc.violations[1:]:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ReplayError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_BACKEND
    except (PerceptionError, DecisionError, ContractError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (OSError, TrajectoryLoadError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HeadturnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
