"""Trajectories: per-step hint snapshots plus final outputs.

A trajectory records one deterministic execution of an algorithm on an
instance: ``frames[t-1]`` holds the hint feature values after atomic step
``t`` (t = 1..T, T >= 1; executors that perform zero atomic steps emit a
single frame of the initial state), and ``outputs`` holds the output
features at termination.

The JSONL serialization is line-per-trajectory with fixed key order
(schema order), row-major nested lists, masks and pointers as integers,
and floats printed with 17 significant digits so that a load after a save
reproduces every array bit for bit.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import features as F
from .instances import GraphInstance, validate_instance


@dataclass
class SnapshotFrame:
    """Hint values after one atomic step of an execution."""

    t: int
    values: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class Trajectory:
    instance: GraphInstance
    frames: list[SnapshotFrame]
    outputs: dict[str, np.ndarray]
    seed: int | None = None

    @property
    def algorithm(self) -> str:
        return self.instance.algorithm

    @property
    def num_steps(self) -> int:
        return len(self.frames)

    def hint_at(self, name: str, t: int) -> np.ndarray:
        """Hint value after step t (1-based)."""
        return self.frames[t - 1].values[name]


def validate_trajectory(traj: Trajectory, step_bound: int | None = None) -> None:
    """Structural checks tying a trajectory to its schema."""
    validate_instance(traj.instance)
    n = traj.instance.n
    if traj.num_steps < 1:
        raise ValueError("trajectory must contain at least one frame")
    if step_bound is not None and traj.num_steps > step_bound:
        raise ValueError(
            f"{traj.algorithm}: {traj.num_steps} steps exceeds bound {step_bound}"
        )
    hint_specs = F.stage_features(traj.algorithm, F.Stage.HINT)
    out_specs = F.stage_features(traj.algorithm, F.Stage.OUTPUT)
    for idx, frame in enumerate(traj.frames):
        if frame.t != idx + 1:
            raise ValueError(f"frame {idx} carries step index {frame.t}")
        _check_feature_map(frame.values, hint_specs, n, f"frame {frame.t}")
    _check_feature_map(traj.outputs, out_specs, n, "outputs")


def _check_feature_map(
    values: dict[str, np.ndarray],
    specs: tuple[F.FeatureSpec, ...],
    n: int,
    where: str,
) -> None:
    if set(values) != {s.name for s in specs}:
        raise ValueError(
            f"{where}: features {sorted(values)} do not match "
            f"schema {sorted(s.name for s in specs)}"
        )
    for spec in specs:
        arr = np.asarray(values[spec.name])
        if arr.shape != F.feature_shape(spec, n):
            raise ValueError(f"{where}: {spec.name} has shape {arr.shape}")
        if spec.kind is F.Kind.SCALAR:
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{where}: {spec.name} contains non-finite values")
        elif spec.kind is F.Kind.POINTER:
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValueError(f"{where}: pointer {spec.name} out of range")
        elif spec.kind in (F.Kind.MASK, F.Kind.MASK_ONE):
            if not np.isin(arr, (0, 1)).all():
                raise ValueError(f"{where}: mask {spec.name} not 0/1")
            if spec.kind is F.Kind.MASK_ONE and int(arr.sum()) != 1:
                raise ValueError(f"{where}: mask_one {spec.name} is not one-hot")
        elif spec.kind is F.Kind.CATEGORICAL:
            if arr.size and (arr.min() < 0 or arr.max() >= spec.num_classes):
                raise ValueError(f"{where}: categorical {spec.name} out of range")


def trajectories_equal(a: Trajectory, b: Trajectory) -> bool:
    """Bitwise equality of two trajectories (instances, frames, outputs)."""
    if a.algorithm != b.algorithm or a.instance.n != b.instance.n or a.seed != b.seed:
        return False
    for table in ("node_inputs", "edge_inputs", "graph_inputs"):
        ta, tb = getattr(a.instance, table), getattr(b.instance, table)
        if set(ta) != set(tb):
            return False
        for name in ta:
            if not np.array_equal(np.asarray(ta[name]), np.asarray(tb[name])):
                return False
    if a.num_steps != b.num_steps:
        return False
    for fa, fb in zip(a.frames, b.frames):
        if set(fa.values) != set(fb.values):
            return False
        for name in fa.values:
            if not np.array_equal(np.asarray(fa.values[name]), np.asarray(fb.values[name])):
                return False
    if set(a.outputs) != set(b.outputs):
        return False
    return all(
        np.array_equal(np.asarray(a.outputs[k]), np.asarray(b.outputs[k])) for k in a.outputs
    )


# ---------------------------------------------------------------------------
# Reverse-pointer hints
# ---------------------------------------------------------------------------


def reversal_specs(algorithm: str) -> tuple[F.FeatureSpec, ...]:
    """Edge-mask hint specs mirroring each node-level pointer hint."""
    out = []
    for spec in F.stage_features(algorithm, F.Stage.HINT):
        if spec.kind is F.Kind.POINTER and spec.location is F.Location.NODE:
            out.append(
                F.FeatureSpec("rev_" + spec.name, F.Stage.HINT, F.Location.EDGE, F.Kind.MASK)
            )
    return tuple(out)


def reverse_pointer_matrix(pointers: np.ndarray) -> np.ndarray:
    """rev[b, a] = 1 iff pointers[a] == b (the reversed pointer relation)."""
    n = pointers.shape[0]
    rev = np.zeros((n, n), dtype=np.int64)
    rev[pointers, np.arange(n)] = 1
    return rev


def reverse_pointers(traj: Trajectory) -> Trajectory:
    """Add, for every node-level pointer hint ``p``, an edge-mask hint
    ``rev_p`` encoding the reversed relation, frame by frame.  Original
    hints are untouched.  A trajectory without pointer hints is returned
    unchanged with a warning."""
    extra = reversal_specs(traj.algorithm)
    if not extra:
        warnings.warn(
            f"{traj.algorithm}: no node-level pointer hints to reverse",
            stacklevel=2,
        )
        return traj
    frames = []
    for frame in traj.frames:
        values = dict(frame.values)
        for spec in extra:
            values[spec.name] = reverse_pointer_matrix(frame.values[spec.name[4:]])
        frames.append(SnapshotFrame(frame.t, values))
    return Trajectory(traj.instance, frames, dict(traj.outputs), traj.seed)


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    """A float as a JSON number token with 17 significant digits (enough
    for an exact float64 round trip)."""
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def _render(value: np.ndarray, spec: F.FeatureSpec) -> str:
    arr = np.asarray(value)
    as_float = spec.kind is F.Kind.SCALAR

    def render_scalar(x) -> str:
        return format_float(x) if as_float else str(int(x))

    if arr.ndim == 0:
        return render_scalar(arr[()])
    if arr.ndim == 1:
        return "[" + ", ".join(render_scalar(x) for x in arr.tolist()) + "]"
    return "[" + ", ".join(_render(row, spec) for row in arr) + "]"


def _render_feature_map(values, specs) -> str:
    parts = [f"{json.dumps(s.name)}: {_render(values[s.name], s)}" for s in specs]
    return "{" + ", ".join(parts) + "}"


def to_json_line(traj: Trajectory) -> str:
    """One trajectory as a JSONL line with schema-ordered keys."""
    alg = traj.algorithm
    in_specs = F.stage_features(alg, F.Stage.INPUT)
    hint_specs = F.stage_features(alg, F.Stage.HINT)
    out_specs = F.stage_features(alg, F.Stage.OUTPUT)
    merged_inputs = {}
    merged_inputs.update(traj.instance.node_inputs)
    merged_inputs.update(traj.instance.edge_inputs)
    merged_inputs.update(traj.instance.graph_inputs)
    frames = ", ".join(_render_feature_map(f.values, hint_specs) for f in traj.frames)
    parts = [
        f'"algorithm": {json.dumps(alg)}',
        f'"n": {traj.instance.n}',
        f'"seed": {"null" if traj.seed is None else int(traj.seed)}',
        f'"inputs": {_render_feature_map(merged_inputs, in_specs)}',
        f'"hints": [{frames}]',
        f'"outputs": {_render_feature_map(traj.outputs, out_specs)}',
    ]
    return "{" + ", ".join(parts) + "}"


def _parse_feature(raw, spec: F.FeatureSpec, n: int) -> np.ndarray:
    dtype = np.float64 if spec.kind is F.Kind.SCALAR else np.int64
    arr = np.asarray(raw, dtype=dtype)
    if spec.location is F.Location.GRAPH:
        return arr.reshape(())[()]
    return arr.reshape(F.feature_shape(spec, n))


def from_json_line(line: str) -> Trajectory:
    doc = json.loads(line)
    alg = doc["algorithm"]
    n = int(doc["n"])
    inst = GraphInstance(alg, n)
    for spec in F.stage_features(alg, F.Stage.INPUT):
        arr = _parse_feature(doc["inputs"][spec.name], spec, n)
        if spec.location is F.Location.NODE:
            inst.node_inputs[spec.name] = arr
        elif spec.location is F.Location.EDGE:
            inst.edge_inputs[spec.name] = arr
        else:
            inst.graph_inputs[spec.name] = arr
    hint_specs = F.stage_features(alg, F.Stage.HINT)
    frames = [
        SnapshotFrame(t + 1, {s.name: _parse_feature(raw[s.name], s, n) for s in hint_specs})
        for t, raw in enumerate(doc["hints"])
    ]
    outputs = {
        s.name: _parse_feature(doc["outputs"][s.name], s, n)
        for s in F.stage_features(alg, F.Stage.OUTPUT)
    }
    seed = doc.get("seed")
    return Trajectory(inst, frames, outputs, None if seed is None else int(seed))


def save_jsonl(path: str | Path, trajectories: Iterable[Trajectory]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for traj in trajectories:
            fh.write(to_json_line(traj))
            fh.write("\n")
            count += 1
    return count


def load_jsonl(path: str | Path) -> list[Trajectory]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [from_json_line(line) for line in fh if line.strip()]
