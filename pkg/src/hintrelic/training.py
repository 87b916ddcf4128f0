"""Training loop, ablation matrix, and evaluation.

A run is described by a :class:`RunConfig`; its ``ablation_mode`` picks
one column of the ablation study and maps onto a model configuration,
the loss recipe, and the pointer-reversal switch:

``no_hints``
    output loss only; hints neither fed nor supervised.
``baseline``
    hints decoded each step, fed back as soft inputs, and supervised.
``baseline_reversal``
    the baseline plus reversed-pointer edge-mask hints.
``relic_no_kl``
    invariance objective with the KL term dropped (alpha = 0).
``relic``
    full invariance objective (contrastive + KL, alpha = 1).
``relic_no_reversal``
    full objective without the reversed-pointer hints.

Training is bit-reproducible for a fixed config and seed: batches,
augmentations and parameter draws all derive from the master seed, and
metrics are serialised with full float precision.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import features as F
from .augmentation import TrivialFirstTree, augment, sample_step
from .autodiff import AdamState, Tensor, adam_step, clip_gradients
from .checkpoints import load_checkpoint, restore_into, save_checkpoint
from .datasets import build_dataset, split_path
from .metrics import OutputScore, score_outputs
from .network import ModelConfig, Reasoner
from .objective import (
    SimilarityHead,
    contrast_specs,
    hint_supervision_loss,
    output_loss,
    relic_loss,
)
from .seeding import rng_for
from .trajectories import Trajectory, load_jsonl, reverse_pointers

MAX_TRAIN_SIZE = 16


@dataclass(frozen=True)
class ModeRecipe:
    """How one ablation column configures the model and the loss."""

    model_mode: str
    use_reversal: bool
    alpha: float
    supervise_hints: bool
    contrastive: bool


MODE_RECIPES: "dict[str, ModeRecipe]" = {
    "no_hints": ModeRecipe("no_hints", False, 0.0, False, False),
    "baseline": ModeRecipe("baseline", False, 0.0, True, False),
    "baseline_reversal": ModeRecipe("baseline", True, 0.0, True, False),
    "relic_no_kl": ModeRecipe("relic", True, 0.0, False, True),
    "relic": ModeRecipe("relic", True, 1.0, False, True),
    "relic_no_reversal": ModeRecipe("relic", False, 1.0, False, True),
}

HARNESS_MODES = tuple(MODE_RECIPES)

METRICS_COLUMNS = (
    "run_id",
    "algorithm",
    "mode",
    "seed",
    "step",
    "split",
    "micro_f1",
    "total_loss",
    "output_loss",
    "hint_loss",
    "contrastive_loss",
    "kl_loss",
)


def mode_applicable(algorithm: str, mode: str) -> bool:
    """Contrastive columns need at least one contrasted hint; depth-first
    search has none, which is why its ablation row carries dashes."""
    if MODE_RECIPES[mode].contrastive:
        return bool(F.contrasted_hints(algorithm))
    return True


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    ablation_mode: str = "relic"
    batch_size: int = 16
    train_steps: int = 2000
    train_sizes: "tuple[int, ...]" = (4, 5, 6, 7, 8)
    eval_size: int = 16
    seeds: "tuple[int, ...]" = (0,)
    learning_rate: float = 1e-3
    grad_clip: float = 1.0
    hidden_dim: int = 32
    triplet_dim: int = 8
    master_seed: int = 0
    eval_interval: int = 500
    train_count: int = 1000
    val_count: int = 64
    test_count: int = 64
    # keep the true counterpart inside each contrastive normalising sum
    # (the default excludes it)
    include_positive: bool = False

    def __post_init__(self):
        if self.algorithm not in F.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.ablation_mode not in MODE_RECIPES:
            raise ValueError(f"unknown ablation mode {self.ablation_mode!r}")
        if not self.train_sizes:
            raise ValueError("train_sizes must be nonempty")
        if max(self.train_sizes) > MAX_TRAIN_SIZE:
            raise ValueError(f"training sizes must stay within {MAX_TRAIN_SIZE} nodes")
        if self.eval_size <= max(self.train_sizes):
            raise ValueError("eval_size must exceed every training size")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.batch_size < 1 or self.train_steps < 0:
            raise ValueError("batch_size must be >= 1 and train_steps >= 0")
        if self.eval_interval < 1:
            raise ValueError("eval_interval must be >= 1")

    @property
    def recipe(self) -> ModeRecipe:
        return MODE_RECIPES[self.ablation_mode]

    @property
    def model_config(self) -> ModelConfig:
        return ModelConfig(
            hidden_dim=self.hidden_dim,
            triplet_dim=self.triplet_dim,
            use_reversal=self.recipe.use_reversal,
            ablation_mode=self.recipe.model_mode,
        )

    def run_id(self, seed: int) -> str:
        return f"{self.algorithm}-{self.ablation_mode}-seed{seed}"


def paper_config(algorithm: str, ablation_mode: str = "relic", **overrides) -> RunConfig:
    """Full-scale preset (kept for completeness; hours of CPU)."""
    base = dict(
        algorithm=algorithm,
        ablation_mode=ablation_mode,
        train_steps=10_000,
        train_sizes=tuple(range(4, 17)),
        eval_size=64,
        hidden_dim=128,
        eval_interval=1000,
    )
    base.update(overrides)
    return RunConfig(**base)


def desk_config(algorithm: str, ablation_mode: str = "relic", **overrides) -> RunConfig:
    """Desk-scale preset: hidden 32, train n <= 8, 2,000 steps, eval n=16."""
    base = dict(algorithm=algorithm, ablation_mode=ablation_mode)
    base.update(overrides)
    return RunConfig(**base)


# ---------------------------------------------------------------------------
# Data plumbing
# ---------------------------------------------------------------------------


def ensure_datasets(config: RunConfig, data_dir: "str | Path") -> "dict[str, Path]":
    """Build the run's dataset files if any split is missing."""
    paths = {s: split_path(data_dir, config.algorithm, s) for s in ("train", "val", "test")}
    if not all(p.exists() for p in paths.values()):
        build_dataset(
            config.algorithm,
            config.train_sizes,
            config.train_count,
            config.master_seed,
            data_dir,
            eval_sizes=(config.eval_size,),
            val_count=config.val_count,
            test_count=config.test_count,
        )
    return paths


def load_splits(config: RunConfig, data_dir: "str | Path") -> "dict[str, list[Trajectory]]":
    splits = {}
    for split in ("train", "val", "test"):
        path = split_path(data_dir, config.algorithm, split)
        if not path.exists():
            raise FileNotFoundError(
                f"missing dataset file {path}; generate datasets first"
            )
        splits[split] = load_jsonl(path)
    if not splits["train"]:
        raise ValueError("training split is empty")
    return splits


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate_model(model: Reasoner, trajectories: "list[Trajectory]") -> OutputScore:
    """Micro-F1 of hard output predictions, each rollout run for the
    ground-truth number of steps."""
    predictions = [
        model.predict_outputs(t.instance, t.num_steps) for t in trajectories
    ]
    truths = [t.outputs for t in trajectories]
    return score_outputs(model.output_specs, predictions, truths)


# ---------------------------------------------------------------------------
# Single-seed training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    run_id: str
    seed: int
    diverged: bool
    final_step: int
    metrics_rows: "list[dict]"
    counters: "dict[str, int]"
    checkpoint_path: "Path | None"
    model: Reasoner
    head: "SimilarityHead | None"


def _loss_row(run_id, config, seed, step, split, f1=None, losses=None):
    row = {
        "run_id": run_id,
        "algorithm": config.algorithm,
        "mode": config.ablation_mode,
        "seed": seed,
        "step": step,
        "split": split,
        "micro_f1": "" if f1 is None else format(f1, ".17g"),
    }
    losses = losses or {}
    for key in ("total_loss", "output_loss", "hint_loss", "contrastive_loss", "kl_loss"):
        value = losses.get(key)
        row[key] = "" if value is None else format(value, ".17g")
    return row


class _WindowMeans:
    """Running means of loss components between metric rows."""

    def __init__(self):
        self.sums: dict[str, float] = {}
        self.count = 0

    def add(self, components: "dict[str, float]"):
        for key, value in components.items():
            self.sums[key] = self.sums.get(key, 0.0) + value
        self.count += 1

    def means(self) -> "dict[str, float]":
        if not self.count:
            return {}
        return {k: v / self.count for k, v in self.sums.items()}

    def reset(self):
        self.sums = {}
        self.count = 0


def _draw_batch(train_set, rng, batch_size):
    return [train_set[int(i)] for i in rng.integers(len(train_set), size=batch_size)]


def _item_loss(config, model, head, traj, rng, counters):
    """Mode-dispatched loss of one training example."""
    recipe = config.recipe
    if recipe.contrastive:
        t_tilde = sample_step(traj.num_steps, rng)
        try:
            pair = augment(traj, t_tilde, rng, max_train_n=max(config.train_sizes))
        except TrivialFirstTree:
            # a one-node first search tree cannot be grown; drop the item
            counters["augment_retries"] += 1
            return None, None
        counters["pairs_built"] += 1
        terms = relic_loss(
            model, pair, head, alpha=recipe.alpha,
            include_positive=config.include_positive,
        )
        components = {
            "total_loss": float(terms.total.data),
            "output_loss": float(terms.output_loss.data),
            "contrastive_loss": float(terms.contrastive.data),
        }
        if terms.kl is not None:
            components["kl_loss"] = float(terms.kl.data)
        return terms.total, components
    inst, steps = traj.instance, traj.num_steps
    if recipe.supervise_hints:
        state, hint_logits = model.rollout_with_hints(inst, steps)
        out = output_loss(model, state, traj.outputs)
        hint = hint_supervision_loss(model, hint_logits, traj)
        counters["hint_supervision_items"] += 1
        total = ad.add(out, hint)
        return total, {
            "total_loss": float(total.data),
            "output_loss": float(out.data),
            "hint_loss": float(hint.data),
        }
    state = model.rollout(inst, steps)
    out = output_loss(model, state, traj.outputs)
    return out, {"total_loss": float(out.data), "output_loss": float(out.data)}


def _batch_loss(config, model, head, batch, rng, counters):
    """Mean loss over a batch; items whose augmentation is degenerate are
    dropped from the mean (depth-first family with a one-node first tree)."""
    totals = []
    window = _WindowMeans()
    for traj in batch:
        total, components = _item_loss(config, model, head, traj, rng, counters)
        if total is None:
            continue
        totals.append(total)
        window.add(components)
    if not totals:
        raise RuntimeError("every item in the batch failed augmentation")
    acc = totals[0]
    for t in totals[1:]:
        acc = ad.add(acc, t)
    mean = ad.mul(acc, Tensor(1.0 / len(totals)))
    return mean, window.means()


def _params_finite(params) -> bool:
    return all(np.all(np.isfinite(p.data)) for p in params.values())


def train_single(
    config: RunConfig,
    seed: int,
    data_dir: "str | Path",
    out_dir: "str | Path | None" = None,
    *,
    splits: "dict[str, list[Trajectory]] | None" = None,
    log=None,
) -> TrainResult:
    """Train one seed of one ablation cell and collect metrics rows.

    On a non-finite loss (or non-finite parameters after an update) the
    run aborts, restores the last finite parameters, and still writes a
    checkpoint so the failure can be inspected.
    """
    recipe = config.recipe
    run_id = config.run_id(seed)
    if splits is None:
        splits = load_splits(config, data_dir)
    train_set = splits["train"]
    if recipe.supervise_hints and recipe.use_reversal:
        train_set = [reverse_pointers(t) for t in train_set]

    model = Reasoner(config.algorithm, config.model_config, seed=seed)
    trainable = dict(model.params)
    head = None
    if recipe.contrastive:
        head = SimilarityHead(config.hidden_dim, seed=seed)
        trainable.update(head.params)

    adam = AdamState()
    counters = {"pairs_built": 0, "hint_supervision_items": 0, "augment_retries": 0}
    rows: list[dict] = []
    window = _WindowMeans()
    last_good = {k: p.data.copy() for k, p in trainable.items()}
    diverged = False
    final_step = 0

    eval_points = set(range(0, config.train_steps + 1, config.eval_interval))
    eval_points.add(config.train_steps)

    def emit_eval(step):
        for split_name, key in (("val", "val"), ("test", "test")):
            data = splits[key]
            if not data:
                continue
            score = evaluate_model(model, data)
            rows.append(
                _loss_row(run_id, config, seed, step, split_name, f1=score.overall)
            )
        if log:
            log(f"{run_id}: step {step} evaluated")

    # untrained snapshot: a probe batch (its own stream, so it does not
    # perturb training draws) plus zero-step evaluation rows
    probe_rng = rng_for(config.master_seed, "train_probe", config.algorithm,
                        config.ablation_mode, seed)
    probe_counters = dict(counters)
    with_probe = _draw_batch(train_set, probe_rng, config.batch_size)
    _, probe_means = _batch_loss(config, model, head, with_probe, probe_rng, probe_counters)
    rows.append(_loss_row(run_id, config, seed, 0, "train", losses=probe_means))
    emit_eval(0)

    rng = rng_for(config.master_seed, "train_batches", config.algorithm,
                  config.ablation_mode, seed)
    for step in range(1, config.train_steps + 1):
        batch = _draw_batch(train_set, rng, config.batch_size)
        for p in trainable.values():
            p.grad = None
        loss, means = _batch_loss(config, model, head, batch, rng, counters)
        if not np.isfinite(loss.data):
            diverged = True
            for k, p in trainable.items():
                p.data = last_good[k]
            break
        loss.backward()
        grads = {
            k: p.grad for k, p in trainable.items() if p.grad is not None
        }
        grads = clip_gradients(grads, config.grad_clip)
        adam_step(trainable, grads, adam, lr=config.learning_rate)
        if not _params_finite(trainable):
            diverged = True
            for k, p in trainable.items():
                p.data = last_good[k]
            break
        for k, p in trainable.items():
            last_good[k] = p.data.copy()
        window.add(means)
        final_step = step
        if step in eval_points:
            rows.append(_loss_row(run_id, config, seed, step, "train",
                                  losses=window.means()))
            window.reset()
            emit_eval(step)

    if diverged and window.count:
        rows.append(_loss_row(run_id, config, seed, final_step, "train",
                              losses=window.means()))

    # mode purity: the invariance modes must never touch hint supervision,
    # and the hint-free mode must never build augmentation pairs
    if recipe.model_mode != "baseline":
        assert counters["hint_supervision_items"] == 0
    if not recipe.contrastive:
        assert counters["pairs_built"] == 0

    checkpoint_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = out_dir / f"{run_id}.ckpt"
        save_checkpoint(checkpoint_path, trainable)

    return TrainResult(
        run_id=run_id,
        seed=seed,
        diverged=diverged,
        final_step=final_step,
        metrics_rows=rows,
        counters=counters,
        checkpoint_path=checkpoint_path,
        model=model,
        head=head,
    )


class TrainingDiverged(RuntimeError):
    """Raised by :func:`train` when any seed's loss went non-finite."""


def write_metrics_csv(path: "str | Path", rows: "list[dict]") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def metrics_csv_text(rows: "list[dict]") -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=METRICS_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def train(
    config: RunConfig,
    data_dir: "str | Path",
    out_dir: "str | Path | None" = None,
    *,
    log=None,
    raise_on_divergence: bool = True,
) -> "list[TrainResult]":
    """Train every seed of the config; writes ``metrics.csv`` and one
    checkpoint per seed when ``out_dir`` is given."""
    splits = load_splits(config, data_dir)
    results = []
    for seed in config.seeds:
        results.append(
            train_single(config, seed, data_dir, out_dir, splits=splits, log=log)
        )
    if out_dir is not None:
        rows = [row for r in results for row in r.metrics_rows]
        write_metrics_csv(Path(out_dir) / "metrics.csv", rows)
    if raise_on_divergence and any(r.diverged for r in results):
        bad = [r.run_id for r in results if r.diverged]
        raise TrainingDiverged(
            f"loss went non-finite in {', '.join(bad)}; last finite "
            "parameters were checkpointed"
        )
    return results


def restore_run(config: RunConfig, seed: int, checkpoint: "str | Path"):
    """Rebuild the model (and head, for contrastive modes) from a
    checkpoint written by :func:`train_single`."""
    model = Reasoner(config.algorithm, config.model_config, seed=seed)
    head = None
    trainable = dict(model.params)
    if config.recipe.contrastive:
        head = SimilarityHead(config.hidden_dim, seed=seed)
        trainable.update(head.params)
    restore_into(trainable, load_checkpoint(checkpoint))
    return model, head


# ---------------------------------------------------------------------------
# Invariance probe
# ---------------------------------------------------------------------------


@dataclass
class InvarianceProbe:
    positive_sim: float
    negative_sim: float

    @property
    def gap(self) -> float:
        return self.positive_sim - self.negative_sim


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    num = (a * b).sum(axis=-1)
    den = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    return num / np.maximum(den, 1e-12)


def invariance_probe(model: Reasoner, pairs, head=None) -> InvarianceProbe:
    """Cosine alignment of the representations the objective contrasts.

    For each pair and contrasted step, the anchor representation of base
    node i is compared with its counterpart in the augmented view
    (positive) and with every other node's counterpart (negatives).
    Uses the first contrasted node-pointer hint.
    """
    spec = next(
        (
            s
            for s in contrast_specs(model)
            if s.kind is F.Kind.POINTER and s.location is F.Location.NODE
        ),
        None,
    )
    if spec is None:
        raise ValueError(f"{model.algorithm} contrasts no node pointer hint")
    pos_sims: list[float] = []
    neg_sims: list[float] = []
    with ad.no_grad():
        for pair in pairs:
            base = pair.base
            n = pair.n_base
            states_b = model.rollout(base.instance, base.num_steps, collect=True)
            states_a = model.rollout(pair.aug_instance, base.num_steps, collect=True)
            for t in range(base.num_steps):
                if not pair.contrast_mask[t]:
                    continue
                value = base.frames[t].values[spec.name]
                reprs_b = model.pair_reprs(spec, states_b[t]).data
                reprs_a = model.pair_reprs(spec, states_a[t]).data
                rows = np.arange(n)
                anchors_b = reprs_b[rows, value]
                mapped = pair.node_map
                anchors_a = reprs_a[mapped[rows], mapped[value]]
                pos_sims.extend(_cosine_rows(anchors_b, anchors_a))
                for i in range(n):
                    others = np.delete(np.arange(n), i)
                    neg = _cosine_rows(
                        np.broadcast_to(anchors_b[i], (n - 1, anchors_b.shape[1])),
                        anchors_a[others],
                    )
                    neg_sims.extend(neg)
    return InvarianceProbe(
        positive_sim=float(np.mean(pos_sims)),
        negative_sim=float(np.mean(neg_sims)),
    )


# ---------------------------------------------------------------------------
# Ablation matrix
# ---------------------------------------------------------------------------


def run_ablation(
    algorithm: str,
    modes: "tuple[str, ...]",
    seeds: "tuple[int, ...]",
    data_dir: "str | Path",
    out_dir: "str | Path | None" = None,
    *,
    config_overrides: "dict | None" = None,
    log=None,
) -> "list[TrainResult]":
    """Train every applicable (mode, seed) cell for one algorithm and
    write the combined metrics file."""
    overrides = dict(config_overrides or {})
    overrides["seeds"] = tuple(seeds)
    results: list[TrainResult] = []
    all_rows: list[dict] = []
    for mode in modes:
        if not mode_applicable(algorithm, mode):
            if log:
                log(f"{algorithm}: skipping {mode} (no contrasted hints)")
            continue
        config = desk_config(algorithm, mode, **overrides)
        ensure_datasets(config, data_dir)
        for r in train(config, data_dir, out_dir, log=log, raise_on_divergence=False):
            results.append(r)
            all_rows.extend(r.metrics_rows)
    if out_dir is not None:
        write_metrics_csv(Path(out_dir) / "metrics.csv", all_rows)
    return results
