"""Deterministic dataset construction.

A dataset is a directory of JSONL trace files, one line per executed
trajectory, split into ``train`` / ``val`` / ``test``.  Instance seeds are
drawn from disjoint per-split blocks so no split can share a seed with
another; on top of that the test split rejects any instance that is
byte-identical to a training instance (possible for tiny unweighted
graphs, measure-zero for real-valued inputs).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import features as F
from .executors import execute
from .instances import GraphInstance, sample_instance
from .seeding import rng_for
from .trajectories import Trajectory, save_jsonl

SPLITS = ("train", "val", "test")

# each split draws instance seeds from its own block of this width
_SPLIT_BLOCK = 10_000_000

_MAX_REJECTS = 200


def split_seed_base(split: str) -> int:
    """First instance seed of a split's disjoint block."""
    return SPLITS.index(split) * _SPLIT_BLOCK


def instance_key(instance: GraphInstance) -> bytes:
    """Canonical byte string of an instance's inputs, for deduplication."""
    parts = [instance.algorithm.encode(), str(instance.n).encode()]
    for table in (instance.node_inputs, instance.edge_inputs, instance.graph_inputs):
        for name in sorted(table):
            parts.append(name.encode())
            parts.append(np.ascontiguousarray(table[name]).tobytes())
    return b"\x00".join(parts)


def split_path(out_dir: str | Path, algorithm: str, split: str) -> Path:
    return Path(out_dir) / f"{algorithm}_{split}.jsonl"


def build_split(
    algorithm: str,
    sizes: "tuple[int, ...]",
    count: int,
    seed: int,
    split: str,
    path: str | Path,
    *,
    exclude: "set[bytes] | None" = None,
) -> list[Trajectory]:
    """Write ``count`` executed trajectories with sizes drawn uniformly
    from ``sizes``; returns them.  ``exclude`` holds instance keys that
    must not appear (seeds are advanced past collisions)."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    if not sizes:
        raise ValueError("sizes must be nonempty")
    rng = rng_for(seed, "dataset", algorithm, split)
    base = split_seed_base(split)
    trajectories: list[Trajectory] = []
    offset = 0
    for _ in range(count):
        n = int(sizes[rng.integers(len(sizes))])
        for _ in range(_MAX_REJECTS):
            inst_seed = base + offset
            offset += 1
            inst = sample_instance(algorithm, n, inst_seed, master_seed=seed)
            if exclude is None or instance_key(inst) not in exclude:
                break
        else:
            raise RuntimeError(
                f"{algorithm}: instance space at n={n} too small to keep "
                f"the {split} split disjoint from training"
            )
        trajectories.append(execute(inst, seed=inst_seed))
    save_jsonl(path, trajectories)
    return trajectories


def build_dataset(
    algorithm: str,
    sizes: "tuple[int, ...]",
    count: int,
    seed: int,
    out_dir: str | Path,
    *,
    eval_sizes: "tuple[int, ...] | None" = None,
    val_count: "int | None" = None,
    test_count: "int | None" = None,
) -> "dict[str, Path]":
    """Build the three splits for one algorithm.

    ``train`` and ``val`` use ``sizes``; ``test`` uses ``eval_sizes``
    (defaults to ``sizes``) so it can hold larger, out-of-distribution
    instances.  Returns the written paths keyed by split name.
    """
    if algorithm not in F.ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if val_count is None:
        val_count = count // 5
    if test_count is None:
        test_count = count // 5
    paths = {s: split_path(out_dir, algorithm, s) for s in SPLITS}
    train = build_split(algorithm, sizes, count, seed, "train", paths["train"])
    seen = {instance_key(t.instance) for t in train}
    build_split(algorithm, sizes, val_count, seed, "val", paths["val"])
    build_split(
        algorithm,
        eval_sizes or sizes,
        test_count,
        seed,
        "test",
        paths["test"],
        exclude=seen,
    )
    return paths
