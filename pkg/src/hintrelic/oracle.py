"""Execution-oracle certification of augmented pairs.

The certifier actually runs the algorithm on the augmented instance and
compares its trajectory, step by step, with the base trajectory through
the pair's node map.  It exists to validate the augmentation generators
in tests; training never executes algorithms on augmented inputs.

Comparison rules (exact equality everywhere; the executors are
deterministic):

* node features are gathered through the node map and compared bitwise;
* node pointers are compared after projecting the augmented target onto
  the mapped image: targets outside the image follow the augmented
  pointer chain until they reach a mapped node, so a pointer chain that
  merely threads through appended nodes still counts as equal;
* edge features (including per-pair pointer targets) restrict both axes
  through the node map, with pointer targets mapped back by the inverse
  (an unmapped target is a mismatch);
* outputs are compared with the same rules, on base nodes only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import features as F
from .augmentation import APPROXIMATE, AugmentedPair
from .executors import execute
from .trajectories import Trajectory


@dataclass
class ValidityReport:
    """Outcome of comparing an augmented execution against its base.

    ``equivalent_up_to`` is the largest step s with frames 1..s equal on
    base nodes; ``full_match`` additionally requires every base frame and
    every output to agree.  ``first_divergence`` is (step, feature name,
    index) for the earliest disagreement, or None on a full match.
    """

    equivalent_up_to: int
    full_match: bool
    first_divergence: tuple[int, str, object] | None


def _inverse_map(node_map: np.ndarray, n_aug: int) -> np.ndarray:
    inv = np.full(n_aug, -1, dtype=np.int64)
    inv[node_map] = np.arange(node_map.shape[0], dtype=np.int64)
    return inv


def _project_target(target: int, pointers: np.ndarray, inv: np.ndarray) -> int:
    """Map an augmented pointer target back to a base node, following the
    augmented pointer chain through unmapped nodes; -1 when the chain
    never reaches a mapped node."""
    for _ in range(pointers.shape[0] + 1):
        if inv[target] >= 0:
            return int(inv[target])
        nxt = int(pointers[target])
        if nxt == target:
            return -1
        target = nxt
    return -1


def _first_mismatch(
    spec: F.FeatureSpec,
    base_val: np.ndarray,
    aug_val: np.ndarray,
    node_map: np.ndarray,
    inv: np.ndarray,
):
    """Index of the earliest disagreement, or None."""
    if spec.location is F.Location.GRAPH:
        return None if np.asarray(base_val) == np.asarray(aug_val) else ()
    if spec.location is F.Location.NODE:
        if spec.kind is F.Kind.POINTER:
            for b, a in enumerate(node_map):
                if _project_target(int(aug_val[a]), aug_val, inv) != int(base_val[b]):
                    return int(b)
            return None
        gathered = np.asarray(aug_val)[node_map]
        bad = np.flatnonzero(gathered != np.asarray(base_val))
        return int(bad[0]) if bad.size else None
    sub = np.asarray(aug_val)[np.ix_(node_map, node_map)]
    if spec.kind is F.Kind.POINTER:
        bad = np.argwhere(inv[sub] != np.asarray(base_val))
    else:
        bad = np.argwhere(sub != np.asarray(base_val))
    return (int(bad[0][0]), int(bad[0][1])) if bad.size else None


def check_equivalence(pair: AugmentedPair) -> ValidityReport:
    """Run the algorithm on the augmented instance and locate the first
    step at which the contrasted hints disagree with the base."""
    base = pair.base
    alg = base.algorithm
    try:
        aug_traj: Trajectory = execute(pair.aug_instance)
    except Exception as exc:  # noqa: BLE001 - any failure is a report, not a crash
        return ValidityReport(0, False, (0, f"executor failure: {exc}", None))
    node_map = np.asarray(pair.node_map, dtype=np.int64)
    inv = _inverse_map(node_map, pair.aug_instance.n)
    specs = F.contrasted_hints(alg) or F.stage_features(alg, F.Stage.HINT)

    equivalent_up_to = 0
    first: tuple[int, str, object] | None = None
    for t in range(1, min(base.num_steps, aug_traj.num_steps) + 1):
        base_frame = base.frames[t - 1].values
        aug_frame = aug_traj.frames[t - 1].values
        for spec in specs:
            where = _first_mismatch(spec, base_frame[spec.name], aug_frame[spec.name], node_map, inv)
            if where is not None:
                first = (t, spec.name, where)
                break
        if first is not None:
            break
        equivalent_up_to = t

    if first is None and equivalent_up_to < base.num_steps:
        # every compared frame agreed but the augmented run stopped early
        first = (aug_traj.num_steps + 1, "num_steps", None)

    outputs_agree = True
    if equivalent_up_to == base.num_steps:
        for spec in F.stage_features(alg, F.Stage.OUTPUT):
            where = _first_mismatch(
                spec, base.outputs[spec.name], aug_traj.outputs[spec.name], node_map, inv
            )
            if where is not None:
                outputs_agree = False
                if first is None:
                    first = (base.num_steps, "outputs." + spec.name, where)
                break

    full = equivalent_up_to == base.num_steps and outputs_agree
    return ValidityReport(equivalent_up_to, full, None if full else first)


# Algorithms whose exact certification demands the whole base trajectory
# (and outputs) rather than only the prefix up to the sampled step.
_FULL_MATCH_FAMILIES = frozenset(F.GRAPH_BASED) | {"insertion_sort"}


def certify_family(pair: AugmentedPair, report: ValidityReport) -> bool:
    """Pass/fail for a report: approximate pairs always pass (their
    divergence is only logged); exact pairs need the guaranteed prefix."""
    if pair.family == APPROXIMATE:
        return True
    if pair.algorithm in _FULL_MATCH_FAMILIES:
        return report.full_match
    return report.equivalent_up_to >= pair.sampled_step


def certify(pair: AugmentedPair) -> tuple[ValidityReport, bool]:
    report = check_equivalence(pair)
    return report, certify_family(pair, report)


def certification_csv(pairs: list[AugmentedPair], reports: list[ValidityReport]) -> str:
    """A CSV table of certification outcomes, one row per pair."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "index",
            "algorithm",
            "family",
            "n_base",
            "n_aug",
            "num_steps",
            "sampled_step",
            "equivalent_up_to",
            "full_match",
            "passed",
            "divergence_step",
            "divergence_feature",
            "divergence_index",
        ]
    )
    for idx, (pair, report) in enumerate(zip(pairs, reports)):
        step, name, where = report.first_divergence or ("", "", "")
        writer.writerow(
            [
                idx,
                pair.algorithm,
                pair.family,
                pair.n_base,
                pair.n_aug,
                pair.base.num_steps,
                pair.sampled_step,
                report.equivalent_up_to,
                int(report.full_match),
                int(certify_family(pair, report)),
                step,
                name,
                "" if where == "" else repr(where),
            ]
        )
    return buf.getvalue()
