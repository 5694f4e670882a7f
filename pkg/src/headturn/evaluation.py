"""Trajectory I/O, resampling, quaternion DTW, and the comparison table.

DTW cost between two samples is the rotation angle between their
orientations; the cumulative cost is divided by the mean of the two
sequence lengths so trajectories of slightly different duration compare
fairly.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .environment import CONDITIONS
from .errors import InvalidInputError, ReportError, TrajectoryLoadError
from .orientation import Quaternion, slerp

CSV_HEADER = ["t", "qw", "qx", "qy", "qz"]
REPORT_HEADER = ["scenario", "condition", "method", "normalized_dtw"]
NORM_TOL = 1e-6
_SNAP = 1e-9


@dataclass(frozen=True)
class Trajectory:
    samples: Tuple[Tuple[float, Quaternion], ...]
    label: str = ""
    scenario: str = ""
    condition: str = ""

    def __post_init__(self) -> None:
        for (t0, _), (t1, _) in zip(self.samples, self.samples[1:]):
            if not t1 > t0:
                raise InvalidInputError(f"trajectory timestamps must increase strictly ({t0} -> {t1})")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.samples]

    def as_array(self) -> np.ndarray:
        return np.array([q.as_tuple() for _, q in self.samples], dtype=float).reshape(-1, 4)


@dataclass(frozen=True)
class DtwResult:
    raw_cost: float
    normalized_cost: float
    path: Tuple[Tuple[int, int], ...]
    len_a: int
    len_b: int

    def to_json(self, with_path: bool = False) -> dict:
        d = {
            "raw_cost": self.raw_cost,
            "normalized_cost": self.normalized_cost,
            "len_a": self.len_a,
            "len_b": self.len_b,
            "path_length": len(self.path),
        }
        if with_path:
            d["path"] = [list(p) for p in self.path]
        return d


# ---------------------------------------------------------------- I/O


def load_trajectory(
    source: Union[IO, bytes, str], label: str = "", scenario: str = "", condition: str = ""
) -> Trajectory:
    """Read ``t,qw,qx,qy,qz`` CSV.

    Rows whose quaternion norm is within 1e-6 of 1 are renormalized; anything
    further off is rejected with the offending line number.
    """
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TrajectoryLoadError("line 1: empty trajectory file") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise TrajectoryLoadError(f"line 1: header must be {','.join(CSV_HEADER)}, got {','.join(header)}")
    samples: list[Tuple[float, Quaternion]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise TrajectoryLoadError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            t, w, x, y, z = (float(c) for c in row)
        except ValueError:
            raise TrajectoryLoadError(f"line {lineno}: non-numeric field in {row}") from None
        if not all(math.isfinite(v) for v in (t, w, x, y, z)):
            raise TrajectoryLoadError(f"line {lineno}: non-finite value")
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(norm - 1.0) > NORM_TOL:
            raise TrajectoryLoadError(f"line {lineno}: quaternion norm {norm:.9g} is not unit")
        if samples and not t > samples[-1][0]:
            raise TrajectoryLoadError(f"line {lineno}: timestamp {t} does not increase")
        samples.append((t, Quaternion(w, x, y, z)))  # constructor renormalizes
    if not samples:
        raise TrajectoryLoadError("trajectory has no samples")
    return Trajectory(tuple(samples), label, scenario, condition)


def format_trajectory(traj: Trajectory) -> str:
    """CSV text; floats use ``repr`` so a reload is bit-exact."""
    lines = [",".join(CSV_HEADER)]
    for t, q in traj.samples:
        lines.append(f"{t:.9f},{q.w!r},{q.x!r},{q.y!r},{q.z!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- resampling


def resample(traj: Trajectory, rate: float) -> Trajectory:
    """Uniform-time copy at ``rate`` Hz from the first to the last sample.

    The step is adjusted so both endpoints are kept exactly; query times that
    fall within 1e-9 s of an original sample reuse that sample verbatim.
    """
    if len(traj) < 2:
        raise InvalidInputError("resampling needs at least two samples")
    if not rate > 0:
        raise InvalidInputError("rate must be positive")
    times = traj.times
    t0, t1 = times[0], times[-1]
    n = max(2, int(round((t1 - t0) * rate)) + 1)
    out: list[Tuple[float, Quaternion]] = []
    for k in range(n):
        tq = t0 + (t1 - t0) * k / (n - 1) if k < n - 1 else t1
        i = bisect_left(times, tq)
        if i < len(times) and abs(times[i] - tq) <= _SNAP:
            out.append(traj.samples[i])
            continue
        if i > 0 and abs(times[i - 1] - tq) <= _SNAP:
            out.append(traj.samples[i - 1])
            continue
        ta, qa = traj.samples[i - 1]
        tb, qb = traj.samples[i]
        out.append((tq, slerp(qa, qb, (tq - ta) / (tb - ta))))
    return Trajectory(tuple(out), traj.label, traj.scenario, traj.condition)


# ---------------------------------------------------------------- DTW


def cost_matrix(a: np.ndarray, b: np.ndarray, block: int = 256) -> np.ndarray:
    """Pairwise rotation angles between rows of ``a`` (m,4) and ``b`` (n,4)."""
    m = a.shape[0]
    out = np.empty((m, b.shape[0]))
    for start in range(0, m, block):
        ab = a[start : start + block]
        sign = np.where(ab @ b.T < 0.0, -1.0, 1.0)[:, :, None]
        sb = sign * b[None, :, :]
        diff = np.sqrt(np.sum((ab[:, None, :] - sb) ** 2, axis=2))
        summ = np.sqrt(np.sum((ab[:, None, :] + sb) ** 2, axis=2))
        out[start : start + block] = 4.0 * np.arctan2(diff, summ)
    return out


def _accumulate(cost: np.ndarray, window: Optional[int]) -> np.ndarray:
    m, n = cost.shape
    acc = np.full((m + 1, n + 1), np.inf)
    acc[0, 0] = 0.0
    for s in range(2, m + n + 1):
        i = np.arange(max(1, s - n), min(m, s - 1) + 1)
        j = s - i
        best = np.minimum(np.minimum(acc[i - 1, j], acc[i, j - 1]), acc[i - 1, j - 1])
        vals = cost[i - 1, j - 1] + best
        if window is not None:
            vals = np.where(np.abs(i - j) <= window, vals, np.inf)
        acc[i, j] = vals
    return acc


def _backtrack(acc: np.ndarray) -> Tuple[Tuple[int, int], ...]:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        if i == 1:
            j -= 1
        elif j == 1:
            i -= 1
        else:
            diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            if diag <= up and diag <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        path.append((i - 1, j - 1))
    path.reverse()
    return tuple(path)


def dtw(a, b, window: Optional[int] = None) -> DtwResult:
    """Exact DTW between two orientation sequences.

    ``a`` and ``b`` may be Trajectories, sequences of Quaternions, or (k,4)
    arrays.  ``window`` enables a Sakoe-Chiba band of that half-width; the
    default is the unconstrained alignment.  Path indices are 0-based and
    ties on backtracking prefer the diagonal, then ``(i-1, j)``, then
    ``(i, j-1)``.
    """
    qa, qb = _as_quat_array(a), _as_quat_array(b)
    m, n = len(qa), len(qb)
    if m == 0 or n == 0:
        raise InvalidInputError("dtw needs two non-empty sequences")
    if window is not None and window < abs(m - n):
        raise InvalidInputError(f"window {window} cannot connect lengths {m} and {n}")
    acc = _accumulate(cost_matrix(qa, qb), window)
    raw = float(acc[m, n])
    return DtwResult(raw, raw / ((m + n) / 2.0), _backtrack(acc), m, n)


def _as_quat_array(x) -> np.ndarray:
    if isinstance(x, Trajectory):
        return x.as_array()
    if isinstance(x, np.ndarray):
        return np.asarray(x, dtype=float).reshape(-1, 4)
    return np.array([q.as_tuple() for q in x], dtype=float).reshape(-1, 4)


# ---------------------------------------------------------------- report


@dataclass
class ReportTable:
    scenarios: list
    conditions: list
    methods: list
    cells: dict  # (scenario, condition, method) -> mean normalized DTW
    flagged: set = field(default_factory=set)

    def formatted(self, key) -> str:
        return f"{self.cells[key]:.4f}"

    def to_text(self, method_header: str = "Methods", flag: str = "*") -> str:
        cell_w = 4 + 2 + 4 + len(flag)  # "0.0000" + flag, padded
        name_w = max(len(method_header), *(len(m) for m in self.methods))
        cond_w = max(cell_w, *(len(c) for c in self.conditions))
        group_w = cond_w * len(self.conditions) + 2 * (len(self.conditions) - 1)
        sep = "  "
        top = [method_header.ljust(name_w)] + [s.center(group_w) for s in self.scenarios]
        sub = [" " * name_w] + [sep.join(c.ljust(cond_w) for c in self.conditions) for _ in self.scenarios]
        rule = "-" * (name_w + len(self.scenarios) * (group_w + len(sep)))
        lines = [sep.join(top).rstrip(), sep.join(sub).rstrip(), rule]
        for m in self.methods:
            row = [m.ljust(name_w)]
            for s in self.scenarios:
                cells = []
                for c in self.conditions:
                    txt = self.formatted((s, c, m))
                    if (s, c, m) in self.flagged:
                        txt += flag
                    cells.append(txt.ljust(cond_w))
                row.append(sep.join(cells))
            lines.append(sep.join(row).rstrip())
        lines.append(f"({flag} lowest in column; lower is closer to the reference)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for s in self.scenarios:
            for c in self.conditions:
                for m in self.methods:
                    w.writerow([s, c, m, self.formatted((s, c, m))])
        return buf.getvalue()


def _condition_key(c: str):
    # minimal-distraction first, then attention-provoking, then anything else alphabetically
    return (CONDITIONS.index(c), "") if c in CONDITIONS else (len(CONDITIONS), c)


def _unique(seq: Iterable) -> list:
    out = []
    for x in seq:
        if x not in out:
            out.append(x)
    return out


def build_report(
    results: Mapping[Tuple[str, str, str], Sequence[Union[DtwResult, float]]],
    scenarios: Optional[Sequence[str]] = None,
    conditions: Optional[Sequence[str]] = None,
    methods: Optional[Sequence[str]] = None,
) -> ReportTable:
    """Average normalized DTW per (scenario, condition, method) cell.

    Axis orders default to sorted order, except that MDC precedes APC.  Each (scenario, condition) column
    flags every method whose 4-decimal mean equals the column minimum.
    """
    grouped = defaultdict(list)
    for key, vals in results.items():
        for v in vals:
            grouped[tuple(key)].append(v.normalized_cost if isinstance(v, DtwResult) else float(v))
    scenarios = list(scenarios) if scenarios is not None else sorted(_unique(k[0] for k in grouped))
    conditions = list(conditions) if conditions is not None else sorted(_unique(k[1] for k in grouped), key=_condition_key)
    methods = list(methods) if methods is not None else sorted(_unique(k[2] for k in grouped))
    if not (scenarios and conditions and methods):
        raise ReportError("no results to report")
    cells = {}
    for s in scenarios:
        for c in conditions:
            for m in methods:
                vals = grouped.get((s, c, m))
                if not vals:
                    raise ReportError(f"missing result for scenario={s!r} condition={c!r} method={m!r}")
                cells[(s, c, m)] = math.fsum(vals) / len(vals)
    flagged = set()
    for s in scenarios:
        for c in conditions:
            rounded = {m: round(cells[(s, c, m)], 4) for m in methods}
            low = min(rounded.values())
            flagged.update((s, c, m) for m, r in rounded.items() if r == low)
    return ReportTable(scenarios, conditions, methods, cells, flagged)
