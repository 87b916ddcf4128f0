"""Output scoring: micro-F1 over decoded output elements.

Every output feature contributes scored elements: node pointers one per
node, edge pointers one per node pair, single-selection features one per
occurrence, masks one per location.  Match-style kinds (pointer,
categorical, one-hot selection) score their element-match rate; masks
score the F1 of the positive class, pooled over the whole evaluation
set.  The overall number is the element-count weighted average of the
per-feature scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features as F


@dataclass
class _MatchTally:
    correct: int = 0
    count: int = 0

    @property
    def score(self) -> float:
        return self.correct / self.count if self.count else 0.0


@dataclass
class _MaskTally:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    count: int = 0

    @property
    def score(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        if denom == 0:  # no positives anywhere and none predicted
            return 1.0
        return 2 * self.tp / denom


@dataclass
class OutputScore:
    """Pooled per-feature tallies plus the weighted overall micro-F1."""

    per_feature: "dict[str, float]"
    overall: float
    element_count: int


def _selection_index(value: np.ndarray) -> int:
    return int(np.argmax(np.asarray(value)))


def score_outputs(
    output_specs: "tuple[F.FeatureSpec, ...]",
    predictions: "list[dict[str, np.ndarray]]",
    truths: "list[dict[str, np.ndarray]]",
) -> OutputScore:
    """Micro-F1 of a set of output predictions against ground truth."""
    if len(predictions) != len(truths):
        raise ValueError("prediction/truth lists differ in length")
    if not predictions:
        raise ValueError("cannot score an empty evaluation set")
    tallies: "dict[str, _MatchTally | _MaskTally]" = {}
    for spec in output_specs:
        if spec.kind is F.Kind.MASK:
            tallies[spec.name] = _MaskTally()
        else:
            tallies[spec.name] = _MatchTally()
    for pred, true in zip(predictions, truths):
        for spec in output_specs:
            p = np.asarray(pred[spec.name])
            t = np.asarray(true[spec.name])
            tally = tallies[spec.name]
            if spec.kind is F.Kind.POINTER:
                tally.correct += int((p == t).sum())
                tally.count += t.size
            elif spec.kind is F.Kind.CATEGORICAL:
                tally.correct += int((p == t).sum())
                tally.count += t.size
            elif spec.kind is F.Kind.MASK_ONE:
                tally.correct += int(_selection_index(p) == _selection_index(t))
                tally.count += 1
            elif spec.kind is F.Kind.MASK:
                pb = p.astype(bool).ravel()
                tb = t.astype(bool).ravel()
                tally.tp += int(np.sum(pb & tb))
                tally.fp += int(np.sum(pb & ~tb))
                tally.fn += int(np.sum(~pb & tb))
                tally.count += tb.size
            else:
                raise ValueError(f"cannot score {spec.kind} output {spec.name!r}")
    per_feature = {name: tally.score for name, tally in tallies.items()}
    total = sum(t.count for t in tallies.values())
    overall = (
        sum(t.score * t.count for t in tallies.values()) / total if total else 0.0
    )
    return OutputScore(per_feature=per_feature, overall=overall, element_count=total)


def micro_f1(output_specs, predictions, truths) -> float:
    return score_outputs(output_specs, predictions, truths).overall


def mean_stderr(values: "list[float]") -> "tuple[float, float]":
    """Mean and standard error across seeds (stderr 0 for a single seed)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values to aggregate")
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))
