"""Step-preserving input augmentations.

An augmentation grows a base instance into a larger one whose execution
is unchanged up to a sampled step: appended nodes always receive ids
larger than every base id, so the base instance is the restriction of the
augmented one to the first ``n_base`` nodes, bitwise.

Families and their generators:

* depth-first family -- the step is resampled uniformly over the steps at
  which the first search tree enters a node for the first time; appended
  nodes all gain an edge into that entered node, plus random internal
  connectivity.  The search prefix up to the entered step is provably
  unchanged because appended ids sort after every base id.
* graph family -- a disconnected random subgraph is appended; the whole
  base trajectory is preserved.
* sorting / searching -- keys are appended at the tail of the array,
  drawn strictly above the largest base key (and never equal to the
  search target), so the appended block is a sorted suffix.

Exactness: the depth-first and graph families and insertion sort yield
provably equivalent prefixes; the remaining sorting and searching
algorithms are tagged approximate and the certifier in
:mod:`hintrelic.oracle` only logs their divergence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import features as F
from .executors import execute
from .instances import (
    GraphInstance,
    _distinct_uniform,
    _sample_adjacency,
    _sample_weights,
    validate_instance,
)
from .seeding import rng_for
from .trajectories import SnapshotFrame  # noqa: F401  (re-exported for callers)
from .trajectories import Trajectory, _parse_feature, _render_feature_map

EXACT = "exact"
APPROXIMATE = "approximate"

# Bounded retries when an instance draw cannot be augmented (trivial
# first search tree); the per-attempt failure probability is far below 1.
_MAX_RESAMPLES = 100


class TrivialFirstTree(ValueError):
    """The first search tree consists of a single node; the caller should
    resample the instance."""


@dataclass
class AugmentedPair:
    """A base trajectory together with one augmented instance.

    ``node_map`` sends base node ids to augmented node ids; generated
    pairs always use the identity into the leading block (appended nodes
    take the tail ids).  ``contrast_mask[t-1]`` says whether step ``t`` of
    the base trajectory participates in the invariance objective, and
    equals ``t <= sampled_step``.
    """

    base: Trajectory
    aug_instance: GraphInstance
    node_map: np.ndarray
    sampled_step: int
    family: str
    contrast_mask: np.ndarray

    @property
    def algorithm(self) -> str:
        return self.base.algorithm

    @property
    def n_base(self) -> int:
        return self.base.instance.n

    @property
    def n_aug(self) -> int:
        return self.aug_instance.n


def pair_family(algorithm: str) -> str:
    """``"exact"`` when the family's generator provably preserves the
    prefix, ``"approximate"`` otherwise."""
    return EXACT if algorithm in F.EXACT_ALGORITHMS else APPROXIMATE


def hint_targets(algorithm: str) -> tuple[str, ...]:
    """Names of the hint features the invariance objective contrasts."""
    return F.CONTRASTED_HINTS[algorithm]


def sample_step(num_steps: int, rng: np.random.Generator) -> int:
    """Draw a step uniformly from {1, ..., num_steps}."""
    if num_steps < 1:
        raise ValueError(f"need at least one step, got {num_steps}")
    return int(rng.integers(1, num_steps + 1))


def first_tree_entry_steps(traj: Trajectory) -> list[int]:
    """Steps (1-based) at which the first depth-first tree enters a node
    for the first time.

    A frame is an entry step when its current node has just turned grey
    (it was white one frame earlier); backtracking also leaves a grey
    node current, but never by a white-to-grey transition.  A new tree
    starts when the entered node is its own stack predecessor, so the
    scan stops just before the second such root, or at the second pass
    of a two-pass execution.
    """
    steps: list[int] = []
    roots = 0
    prev_colors: np.ndarray | None = None
    for frame in traj.frames:
        phase = frame.values.get("phase")
        if phase is not None and int(phase) != 0:
            break
        colors = frame.values["color"]
        u = int(np.argmax(frame.values["u"]))
        fresh = prev_colors is None or int(prev_colors[u]) == 0
        if int(colors[u]) == 1 and fresh:
            if int(frame.values["s_prev"][u]) == u:
                roots += 1
                if roots == 2:
                    break
            steps.append(frame.t)
        prev_colors = colors
    return steps


def _distinct_open_uniform(rng: np.random.Generator, size: int, low: float) -> np.ndarray:
    """``size`` distinct draws strictly inside (low, 1)."""
    if not low < 1.0:
        raise ValueError(f"no room above {low} inside the unit interval")
    while True:
        vals = low + (1.0 - low) * rng.random(size)
        if np.unique(vals).size == size and np.all(vals > low):
            return vals


def _grown_positions(n_base: int, n_aug: int) -> np.ndarray:
    # Keep the base denominator so base positions survive bitwise;
    # appended positions continue the same grid past 1.
    return np.arange(n_aug, dtype=np.float64) / n_base


def _append_tail_keys(inst: GraphInstance, m: int, rng: np.random.Generator) -> GraphInstance:
    n, n_aug = inst.n, inst.n + m
    top = float(inst.node_inputs["key"].max())
    draws = _distinct_open_uniform(rng, m, top)
    if inst.algorithm == "binary_search":
        target = float(inst.graph_inputs["target"])
        while np.any(draws == target):  # pragma: no cover - measure-zero branch
            draws = _distinct_open_uniform(rng, m, top)
        draws = np.sort(draws)
    out = GraphInstance(inst.algorithm, n_aug)
    out.node_inputs["pos"] = _grown_positions(n, n_aug)
    out.node_inputs["key"] = np.concatenate([inst.node_inputs["key"], draws])
    for name, value in inst.graph_inputs.items():
        out.graph_inputs[name] = np.copy(value)
    return out


def _append_disconnected(inst: GraphInstance, m: int, rng: np.random.Generator) -> GraphInstance:
    alg, n, n_aug = inst.algorithm, inst.n, inst.n + m
    out = GraphInstance(alg, n_aug)
    out.node_inputs["pos"] = _grown_positions(n, n_aug)
    if alg in F.SOURCED:
        out.node_inputs["s"] = np.concatenate(
            [inst.node_inputs["s"], np.zeros(m, dtype=np.int64)]
        )
    block = _sample_adjacency(rng, alg, m)
    adj = np.zeros((n_aug, n_aug), dtype=np.int64)
    adj[:n, :n] = inst.edge_inputs["adj"]
    adj[n:, n:] = block
    out.edge_inputs["adj"] = adj
    if alg in F.WEIGHTED:
        if alg == "mst_kruskal":
            # Appended edges must sort after every base edge so the base
            # prefix of the edge scan is untouched.
            low = float(inst.edge_inputs["A"].max())
            raw = _distinct_open_uniform(rng, m * m, low).reshape(m, m)
            raw = np.triu(raw, k=1)
            raw = raw + raw.T
            block_w = np.where(block == 1, raw, 0.0)
        else:
            block_w = _sample_weights(rng, alg, block)
        weights = np.zeros((n_aug, n_aug), dtype=np.float64)
        weights[:n, :n] = inst.edge_inputs["A"]
        weights[n:, n:] = block_w
        out.edge_inputs["A"] = weights
    return out


def _append_onto_entered(
    inst: GraphInstance, m: int, entered: int, rng: np.random.Generator
) -> GraphInstance:
    alg, n, n_aug = inst.algorithm, inst.n, inst.n + m
    out = GraphInstance(alg, n_aug)
    out.node_inputs["pos"] = _grown_positions(n, n_aug)
    block = _sample_adjacency(rng, alg, m)
    adj = np.zeros((n_aug, n_aug), dtype=np.int64)
    adj[:n, :n] = inst.edge_inputs["adj"]
    adj[n:, n:] = block
    adj[n:, entered] = 1
    if alg in F.UNDIRECTED:
        adj[entered, n:] = 1
    out.edge_inputs["adj"] = adj
    return out


def augment(
    traj: Trajectory,
    t_tilde: int,
    rng: np.random.Generator,
    *,
    max_train_n: int,
) -> AugmentedPair:
    """Grow the trajectory's instance into an augmented pair.

    The incoming step only matters for range validation: the depth-first
    family resamples it over the first tree's entry steps, and the other
    families contrast every step, so their stored step is the trajectory
    length.  Raises :class:`TrivialFirstTree` when the first search tree
    has a single node (the caller resamples the instance).
    """
    inst = traj.instance
    alg, n, num_steps = traj.algorithm, inst.n, traj.num_steps
    if not 1 <= t_tilde <= num_steps:
        raise ValueError(f"step {t_tilde} outside 1..{num_steps}")
    family = F.FAMILY_OF[alg]
    headroom = max_train_n + 1 - n
    if headroom < 1:
        raise ValueError(
            f"cannot grow an instance of {n} nodes under a training cap of {max_train_n}"
        )
    m = int(rng.integers(1, headroom + 1))
    if family == F.FAMILY_DFS:
        entries = first_tree_entry_steps(traj)
        if len(entries) < 2:
            raise TrivialFirstTree(f"{alg}: first search tree has a single node")
        step = int(entries[rng.integers(len(entries))])
        entered = int(np.argmax(traj.frames[step - 1].values["u"]))
        aug = _append_onto_entered(inst, m, entered, rng)
    elif family == F.FAMILY_GRAPH:
        step = num_steps
        aug = _append_disconnected(inst, m, rng)
    else:
        step = num_steps
        aug = _append_tail_keys(inst, m, rng)
    validate_instance(aug)
    mask = np.arange(1, num_steps + 1) <= step
    return AugmentedPair(
        base=traj,
        aug_instance=aug,
        node_map=np.arange(n, dtype=np.int64),
        sampled_step=step,
        family=pair_family(alg),
        contrast_mask=mask,
    )


def validate_pair(pair: AugmentedPair, max_train_n: int | None = None) -> None:
    """Check the generated-pair contract; raise ValueError on any defect."""
    base_inst, aug = pair.base.instance, pair.aug_instance
    n, n_aug = base_inst.n, aug.n
    if aug.algorithm != base_inst.algorithm:
        raise ValueError("pair mixes algorithms")
    if not n_aug > n:
        raise ValueError(f"augmented size {n_aug} does not exceed base size {n}")
    if max_train_n is not None and n_aug > max_train_n + 1:
        raise ValueError(f"augmented size {n_aug} exceeds cap {max_train_n + 1}")
    if not np.array_equal(pair.node_map, np.arange(n)):
        raise ValueError("generated pairs must map base nodes to the leading block")
    if pair.family not in (EXACT, APPROXIMATE):
        raise ValueError(f"unknown family tag {pair.family!r}")
    if not 1 <= pair.sampled_step <= pair.base.num_steps:
        raise ValueError(f"sampled step {pair.sampled_step} outside the trajectory")
    want_mask = np.arange(1, pair.base.num_steps + 1) <= pair.sampled_step
    if not np.array_equal(np.asarray(pair.contrast_mask, dtype=bool), want_mask):
        raise ValueError("contrast mask must cover exactly the steps up to the sampled one")
    for name, value in base_inst.node_inputs.items():
        if not np.array_equal(aug.node_inputs[name][:n], value):
            raise ValueError(f"node input {name!r} not preserved on base nodes")
    for name, value in base_inst.edge_inputs.items():
        if not np.array_equal(aug.edge_inputs[name][:n, :n], value):
            raise ValueError(f"edge input {name!r} not preserved on base nodes")
    for name, value in base_inst.graph_inputs.items():
        if not np.array_equal(aug.graph_inputs[name], value):
            raise ValueError(f"graph input {name!r} not preserved")


def generate_pair(
    algorithm: str,
    n: int,
    seed: int,
    *,
    max_train_n: int,
    master_seed: int = 0,
) -> AugmentedPair:
    """Sample an instance, execute it, and augment it, resampling the
    instance (bounded retries) when its first search tree is trivial."""
    from .instances import sample_instance

    rng = rng_for(master_seed, "augment", algorithm, n, seed)
    inst_seed = seed
    for _ in range(_MAX_RESAMPLES):
        traj = execute(sample_instance(algorithm, n, inst_seed, master_seed), seed=inst_seed)
        t_tilde = sample_step(traj.num_steps, rng)
        try:
            return augment(traj, t_tilde, rng, max_train_n=max_train_n)
        except TrivialFirstTree:
            inst_seed = int(rng.integers(2**31))
    raise RuntimeError(
        f"{algorithm}: no augmentable instance after {_MAX_RESAMPLES} draws"
    )  # pragma: no cover - would need a pathological sampler


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------


def pair_to_json_line(pair: AugmentedPair, base_ref: int) -> str:
    """One pair as a JSONL line; the base trajectory is stored by index
    into its own trace file."""
    in_specs = F.stage_features(pair.algorithm, F.Stage.INPUT)
    merged: dict[str, np.ndarray] = {}
    merged.update(pair.aug_instance.node_inputs)
    merged.update(pair.aug_instance.edge_inputs)
    merged.update(pair.aug_instance.graph_inputs)
    mask = ", ".join(str(int(x)) for x in np.asarray(pair.contrast_mask, dtype=np.int64))
    parts = [
        f'"base_ref": {int(base_ref)}',
        f'"t_tilde": {int(pair.sampled_step)}',
        f'"family": {json.dumps(pair.family)}',
        f'"aug_inputs": {_render_feature_map(merged, in_specs)}',
        f'"contrast_mask": [{mask}]',
    ]
    return "{" + ", ".join(parts) + "}"


def pair_from_json_doc(doc: dict, bases: list[Trajectory]) -> AugmentedPair:
    base = bases[int(doc["base_ref"])]
    alg = base.algorithm
    n_aug = len(doc["aug_inputs"]["pos"])
    aug = GraphInstance(alg, n_aug)
    for spec in F.stage_features(alg, F.Stage.INPUT):
        arr = _parse_feature(doc["aug_inputs"][spec.name], spec, n_aug)
        if spec.location is F.Location.NODE:
            aug.node_inputs[spec.name] = arr
        elif spec.location is F.Location.EDGE:
            aug.edge_inputs[spec.name] = arr
        else:
            aug.graph_inputs[spec.name] = arr
    return AugmentedPair(
        base=base,
        aug_instance=aug,
        node_map=np.arange(base.instance.n, dtype=np.int64),
        sampled_step=int(doc["t_tilde"]),
        family=str(doc["family"]),
        contrast_mask=np.asarray(doc["contrast_mask"], dtype=np.int64).astype(bool),
    )


def save_pairs_jsonl(path: str | Path, pairs: "list[AugmentedPair]", base_refs=None) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    refs = range(len(pairs)) if base_refs is None else base_refs
    with path.open("w", encoding="utf-8") as fh:
        for pair, ref in zip(pairs, refs):
            fh.write(pair_to_json_line(pair, ref))
            fh.write("\n")
    return len(pairs)


def load_pairs_jsonl(path: str | Path, bases: list[Trajectory]) -> list[AugmentedPair]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [pair_from_json_doc(json.loads(line), bases) for line in fh if line.strip()]
