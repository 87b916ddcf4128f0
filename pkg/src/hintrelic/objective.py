"""Invariance objective: contrastive alignment of step-wise hint
representations across an instance and its grown counterpart.

Both views are run through the same model in lockstep for the base
trace's step count.  At every step the contrast mask allows, each
contrasted hint contributes:

* a contrastive term in both directions — the representation of the
  true hint value in one view must match its counterpart in the other
  view against all alternative values of that view (by default the true
  counterpart is excluded from the normalising set; an
  ``include_positive`` switch keeps it in);
* a KL term comparing the two directions' candidate distributions over
  the shared base-indexed candidate set.

Output losses (cross-entropy for pointer / categorical / one-hot
targets, binary cross-entropy for masks, squared error for scalars) are
applied to the base view only.  The model's own hint predictions are
never fed back in this mode.

Similarity is an inner product of head-projected representations,
scaled by a temperature: phi(f1, f2) = <h(f1), h(f2)> / tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import features as F
from .autodiff import Tensor
from .augmentation import AugmentedPair
from .network import Reasoner, feature_to_dense
from .seeding import rng_for
from .trajectories import Trajectory, reverse_pointer_matrix

DEFAULT_TAU = 0.1


class SimilarityHead:
    """Two affine layers with a ReLU between; every width equals the
    representation width."""

    def __init__(self, dim: int, seed: int = 0, tau: float = DEFAULT_TAU):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.dim = dim
        self.tau = tau
        rng = rng_for(seed, "similarity_head")
        scale = 1.0 / np.sqrt(dim)
        self.params: dict[str, Tensor] = {
            "sim/w1": Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True),
            "sim/b1": Tensor(np.zeros(dim), requires_grad=True),
            "sim/w2": Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True),
            "sim/b2": Tensor(np.zeros(dim), requires_grad=True),
        }

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dim {self.dim}, got {x.shape}")
        shape = x.shape
        flat = ad.reshape(x, (-1, self.dim)) if x.ndim != 2 else x
        hidden = ad.relu(ad.linear(flat, self.params["sim/w1"], self.params["sim/b1"]))
        out = ad.linear(hidden, self.params["sim/w2"], self.params["sim/b2"])
        return ad.reshape(out, shape) if x.ndim != 2 else out


class IdentityHead:
    """Pass-through stand-in for the similarity head (handy for checking
    the loss algebra against hand-computed values)."""

    def __init__(self, tau: float = DEFAULT_TAU):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = tau
        self.params: dict[str, Tensor] = {}

    def __call__(self, x: Tensor) -> Tensor:
        return x


def phi(head, f1: Tensor, f2: Tensor) -> Tensor:
    """Temperature-scaled inner product of head-projected vectors."""
    h1, h2 = head(f1), head(f2)
    return ad.mul(ad.sum_(ad.mul(h1, h2)), Tensor(1.0 / head.tau))


def _phi_matrix(head, anchors: Tensor, candidates: Tensor) -> Tensor:
    """Scores phi(anchor_i, candidate_ij): anchors (m, d) against
    candidates (m, c, d) -> (m, c)."""
    m, c, d = candidates.shape
    ha = head(anchors)
    hc = head(candidates)
    prods = ad.mul(ad.reshape(ha, (m, 1, d)), hc)
    return ad.mul(ad.sum_(prods, axis=2), Tensor(1.0 / head.tau))


def contrastive_step_loss(
    anchors: Tensor,
    candidates: Tensor,
    positive_index: np.ndarray,
    head,
    include_positive: bool = False,
) -> "tuple[Tensor | None, bool]":
    """One direction of the alignment loss.

    For each anchor i the positive is ``candidates[i, positive_index[i]]``
    and every other candidate is a negative; by default the positive is
    excluded from the normalising sum (``include_positive`` keeps it,
    making each row a plain cross-entropy).  Returns ``(loss, skipped)``;
    a candidate set without negatives cannot be contrasted, so the term
    is skipped.
    """
    m, c, _ = candidates.shape
    positive_index = np.asarray(positive_index).reshape(m)
    if c < 2:
        return None, True
    scores = _phi_matrix(head, anchors, candidates)
    positives = ad.take_pairs(scores, np.arange(m), positive_index)
    if include_positive:
        norm = ad.logsumexp(scores, axis=1)
    else:
        block = np.zeros((m, c))
        block[np.arange(m), positive_index] = -np.inf
        norm = ad.logsumexp(ad.add(scores, Tensor(block)), axis=1)
    return ad.sum_(ad.sub(norm, positives)), False


def kl_penalty(
    anchors_p: Tensor,
    candidates_p: Tensor,
    anchors_q: Tensor,
    candidates_q: Tensor,
    head,
) -> Tensor:
    """KL(p || q) between the two directions' candidate distributions.

    Both candidate tensors index the same shared candidate set (m, c, d);
    p softmaxes phi(anchors_p, candidates_p), q the swapped direction.
    A single-candidate set yields exactly zero.
    """
    phi_p = _phi_matrix(head, anchors_p, candidates_p)
    phi_q = _phi_matrix(head, anchors_q, candidates_q)
    log_p = ad.sub(phi_p, ad.logsumexp(phi_p, axis=1, keepdims=True))
    log_q = ad.sub(phi_q, ad.logsumexp(phi_q, axis=1, keepdims=True))
    p = ad.softmax(phi_p, axis=1)
    return ad.sum_(ad.mul(p, ad.sub(log_p, log_q)))


# ---------------------------------------------------------------------------
# Supervised feature losses (mean-reduced per feature)
# ---------------------------------------------------------------------------


def feature_loss(spec: F.FeatureSpec, logits: Tensor, value: np.ndarray) -> Tensor:
    """Mean-reduced loss of one decoded feature against its true value:
    cross-entropy for pointer / categorical / one-hot kinds, binary
    cross-entropy for masks, squared error for scalars."""
    value = np.asarray(value)
    if spec.kind is F.Kind.POINTER:
        n = logits.shape[0]
        if spec.location is F.Location.NODE:
            rows, targets = logits, value
        else:
            rows = ad.reshape(logits, (n * n, n))
            targets = value.reshape(n * n)
        lse = ad.logsumexp(rows, axis=1)
        hits = ad.take_pairs(rows, np.arange(rows.shape[0]), targets)
        return ad.mean(ad.sub(lse, hits))
    if spec.kind is F.Kind.CATEGORICAL:
        lse = ad.logsumexp(logits, axis=1)
        hits = ad.take_pairs(logits, np.arange(logits.shape[0]), value)
        return ad.mean(ad.sub(lse, hits))
    if spec.kind is F.Kind.MASK_ONE:
        row = ad.reshape(logits, (1, logits.shape[0]))
        lse = ad.logsumexp(row, axis=1)
        hit = ad.take_pairs(row, np.array([0]), np.array([int(np.argmax(value))]))
        return ad.reshape(ad.sub(lse, hit), ())
    if spec.kind is F.Kind.MASK:
        flat = ad.reshape(logits, (-1,)) if logits.ndim != 1 else logits
        y = Tensor(value.astype(np.float64).reshape(flat.shape))
        return ad.mean(ad.sub(ad.softplus(flat), ad.mul(flat, y)))
    diff = ad.sub(logits, Tensor(value.astype(np.float64)))
    return ad.mean(ad.mul(diff, diff))


def output_loss(model: Reasoner, state, outputs: "dict[str, np.ndarray]") -> Tensor:
    decoded = model.decode_outputs(state)
    total: Tensor | None = None
    for spec in model.output_specs:
        term = feature_loss(spec, decoded[spec.name], outputs[spec.name])
        total = term if total is None else ad.add(total, term)
    return total


def hint_supervision_loss(
    model: Reasoner, hint_logits: "list[dict[str, Tensor]]", traj: Trajectory
) -> Tensor:
    """Per-step hint losses for the hint-feeding mode, summed over steps
    (each feature mean-reduced within a step).  ``traj`` must carry every
    hint the model decodes (including reversed-pointer masks when the
    model uses them)."""
    if model.config.ablation_mode != "baseline":
        raise RuntimeError("hint supervision applies only to the hint-feeding mode")
    total: Tensor | None = None
    for logits, frame in zip(hint_logits, traj.frames):
        for spec in model.hint_specs:
            term = feature_loss(spec, logits[spec.name], frame.values[spec.name])
            total = term if total is None else ad.add(total, term)
    assert total is not None
    return total


# ---------------------------------------------------------------------------
# Per-hint contrast builders
# ---------------------------------------------------------------------------


def _paired_step_terms(
    head, cands_b, cands_a, pos_b, pos_a, shared_cols, want_kl, include_positive=False
):
    """Both contrast directions plus the KL between their shared-set
    distributions, sharing the head projections and score matrices.

    ``cands_b``/``cands_a`` are (m, c, d) candidate representations per
    view; ``pos_b``/``pos_a`` index the true value along each candidate
    axis.  The anchor of each direction is that view's true-value row, so
    the scores of one direction double as that direction's candidate
    distribution; ``shared_cols`` restricts the aug-view candidate axis
    to the base-aligned shared set (None when the axes already match);
    ``include_positive`` keeps the positive in the normalising sum.
    Returns (contrastive | None, kl | None, skipped_directions).
    """
    m, c_b, d = cands_b.shape
    c_a = cands_a.shape[1]
    rows = np.arange(m)
    inv_tau = Tensor(1.0 / head.tau)
    proj_b = head(cands_b)
    proj_a = head(cands_a)
    anchors_b = ad.take_pairs(proj_b, rows, pos_b)  # (m, d)
    anchors_a = ad.take_pairs(proj_a, rows, pos_a)
    scores_ba = ad.mul(
        ad.sum_(ad.mul(ad.reshape(anchors_b, (m, 1, d)), proj_a), axis=2), inv_tau
    )  # (m, c_a)
    scores_ab = ad.mul(
        ad.sum_(ad.mul(ad.reshape(anchors_a, (m, 1, d)), proj_b), axis=2), inv_tau
    )  # (m, c_b)

    contr: Tensor | None = None
    skipped = 0
    for scores, pos, c in ((scores_ba, pos_a, c_a), (scores_ab, pos_b, c_b)):
        if c < 2:
            skipped += 1
            continue
        if include_positive:
            lse = ad.logsumexp(scores, axis=1)
        else:
            block = np.zeros((m, c))
            block[rows, pos] = -np.inf
            lse = ad.logsumexp(ad.add(scores, Tensor(block)), axis=1)
        hits = ad.take_pairs(scores, rows, pos)
        term = ad.sum_(ad.sub(lse, hits))
        contr = term if contr is None else ad.add(contr, term)

    kl = None
    if want_kl:
        phi_p = (
            scores_ba if shared_cols is None else ad.gather(scores_ba, shared_cols, axis=1)
        )
        phi_q = scores_ab
        log_p = ad.sub(phi_p, ad.logsumexp(phi_p, axis=1, keepdims=True))
        log_q = ad.sub(phi_q, ad.logsumexp(phi_q, axis=1, keepdims=True))
        kl = ad.sum_(ad.mul(ad.softmax(phi_p, axis=1), ad.sub(log_p, log_q)))
    return contr, kl, skipped


def _contrast_node_pointer(model, spec, stacks, values, node_map, head, want_kl, incl):
    hs_b, es_b, hs_a, es_a = stacks
    steps, n_b, _ = hs_b.shape
    hid = model.config.hidden_dim
    pair_b = model.stacked_pair_reprs(spec, hs_b, es_b)  # (S, nb, nb, H)
    pair_a = model.stacked_pair_reprs(spec, hs_a, es_a)  # (S, na, na, H)
    n_a = pair_a.shape[1]
    cands_b = ad.reshape(pair_b, (steps * n_b, n_b, hid))
    cands_a = ad.reshape(ad.gather(pair_a, node_map, axis=1), (steps * n_b, n_a, hid))
    return _paired_step_terms(
        head, cands_b, cands_a, values.reshape(-1), node_map[values].reshape(-1),
        node_map, want_kl, incl,
    )


def _contrast_edge_pointer(model, spec, stacks, values, node_map, head, want_kl, incl):
    hs_b, es_b, hs_a, es_a = stacks
    steps, n_b, _ = hs_b.shape
    hid = model.config.hidden_dim
    trip_b = model.stacked_triple_reprs(spec, hs_b, es_b)  # (S, nb, nb, nb, H)
    trip_a = model.stacked_triple_reprs(spec, hs_a, es_a)
    n_a = trip_a.shape[1]
    cands_b = ad.reshape(trip_b, (steps * n_b * n_b, n_b, hid))
    sub_a = ad.gather(ad.gather(trip_a, node_map, axis=1), node_map, axis=2)
    cands_a = ad.reshape(sub_a, (steps * n_b * n_b, n_a, hid))
    return _paired_step_terms(
        head, cands_b, cands_a, values.reshape(-1), node_map[values].reshape(-1),
        node_map, want_kl, incl,
    )


def _contrast_classes(model, spec, stacks, values, node_map, head, want_kl, incl):
    """Class-valued hints (categorical or mask): candidates are the same
    element's representation combined with each class embedding."""
    hs_b, es_b, hs_a, es_a = stacks
    steps, n_b, _ = hs_b.shape
    emb = model.class_embedding(spec)
    k, hid = emb.shape
    emb_row = ad.reshape(emb, (1, k, hid))
    if spec.location is F.Location.NODE:
        reps_b = ad.reshape(model.stacked_node_reprs(spec, hs_b), (steps * n_b, hid))
        sub = ad.gather(model.stacked_node_reprs(spec, hs_a), node_map, axis=1)
        reps_a = ad.reshape(sub, (steps * n_b, hid))
    else:
        reps_b = ad.reshape(model.stacked_edge_reprs(spec, es_b), (steps * n_b * n_b, hid))
        sub = ad.gather(
            ad.gather(model.stacked_edge_reprs(spec, es_a), node_map, axis=1),
            node_map,
            axis=2,
        )
        reps_a = ad.reshape(sub, (steps * n_b * n_b, hid))
    cls = values.reshape(-1).astype(np.int64)
    m = reps_b.shape[0]
    cands_b = ad.add(ad.reshape(reps_b, (m, 1, hid)), emb_row)
    cands_a = ad.add(ad.reshape(reps_a, (m, 1, hid)), emb_row)
    return _paired_step_terms(head, cands_b, cands_a, cls, cls, None, want_kl, incl)


def contrast_terms(
    model: Reasoner,
    spec: F.FeatureSpec,
    stacks,
    values: np.ndarray,
    node_map: np.ndarray,
    head,
    want_kl: bool,
    include_positive: bool = False,
):
    """Contrastive and KL terms for one hint across a stack of contrasted
    steps.  ``stacks`` holds (hs_b, es_b, hs_a, es_a) stacked states and
    ``values`` the base trace's true hint values, leading axis = step."""
    if spec.kind is F.Kind.POINTER:
        builder = (
            _contrast_node_pointer
            if spec.location is F.Location.NODE
            else _contrast_edge_pointer
        )
        return builder(model, spec, stacks, values, node_map, head, want_kl, include_positive)
    if spec.kind in (F.Kind.CATEGORICAL, F.Kind.MASK, F.Kind.MASK_ONE):
        return _contrast_classes(
            model, spec, stacks, values, node_map, head, want_kl, include_positive
        )
    raise ValueError(f"cannot contrast {spec.kind} hint {spec.name!r}")


# ---------------------------------------------------------------------------
# Full objective
# ---------------------------------------------------------------------------


@dataclass
class LossTerms:
    """Decomposed objective: ``total = output_loss + contrastive +
    alpha * kl`` (the KL factor is dropped entirely when alpha is 0)."""

    total: Tensor
    output_loss: Tensor
    contrastive: Tensor
    kl: "Tensor | None"
    alpha: float
    contrasted_steps: int
    skipped_directions: int


def contrast_specs(model: Reasoner) -> tuple[F.FeatureSpec, ...]:
    """Hints the objective contrasts for this model: the algorithm's
    catalogue plus, when the model uses pointer reversal, the reversed
    edge-mask counterpart of each contrasted node pointer."""
    specs = list(F.contrasted_hints(model.algorithm))
    if model.config.use_reversal:
        for spec in list(specs):
            if spec.kind is F.Kind.POINTER and spec.location is F.Location.NODE:
                specs.append(model._hint_spec("rev_" + spec.name))
    return tuple(specs)


def relic_loss(
    model: Reasoner,
    pair: AugmentedPair,
    head,
    alpha: float = 1.0,
    include_positive: bool = False,
) -> LossTerms:
    """Run both views in lockstep over the base trace's steps and
    assemble output, contrastive and KL terms.  ``include_positive``
    keeps the true counterpart inside each contrastive normalising sum
    (the default excludes it)."""
    if model.config.ablation_mode != "relic":
        raise RuntimeError("the invariance objective requires the relic mode")
    base = pair.base
    specs = contrast_specs(model)
    want_kl = alpha != 0.0
    node_map = pair.node_map

    enc_b = model.encode_inputs(base.instance)
    enc_a = model.encode_inputs(pair.aug_instance)
    static_b = model.static_terms(enc_b)
    static_a = model.static_terms(enc_a)
    state_b = model.initial_state(pair.n_base)
    state_a = model.initial_state(pair.n_aug)

    kept_b: list = []
    kept_a: list = []
    kept_frames: list = []
    for t in range(1, base.num_steps + 1):
        state_b = model.step(state_b, enc_b, static_b)
        state_a = model.step(state_a, enc_a, static_a)
        if pair.contrast_mask[t - 1]:
            kept_b.append(state_b)
            kept_a.append(state_a)
            kept_frames.append(base.frames[t - 1])

    contr_total: Tensor | None = None
    kl_total: Tensor | None = None
    contrasted_steps = len(kept_frames)
    skipped = 0
    if specs and kept_frames:
        stacks = (
            ad.stack([s.h for s in kept_b]),
            ad.stack([s.edge for s in kept_b]),
            ad.stack([s.h for s in kept_a]),
            ad.stack([s.edge for s in kept_a]),
        )
        for spec in specs:
            if spec.name.startswith("rev_") and spec.name not in kept_frames[0].values:
                values = np.stack(
                    [reverse_pointer_matrix(f.values[spec.name[4:]]) for f in kept_frames]
                )
            else:
                values = np.stack([f.values[spec.name] for f in kept_frames])
            contr, kl, n_skip = contrast_terms(
                model, spec, stacks, values, node_map, head, want_kl, include_positive
            )
            skipped += n_skip * contrasted_steps
            if contr is not None:
                contr_total = contr if contr_total is None else ad.add(contr_total, contr)
            if kl is not None:
                kl_total = kl if kl_total is None else ad.add(kl_total, kl)

    out_loss = output_loss(model, state_b, base.outputs)
    zero = Tensor(0.0)
    contr_total = contr_total if contr_total is not None else zero
    total = ad.add(out_loss, contr_total)
    if want_kl:
        kl_total = kl_total if kl_total is not None else zero
        total = ad.add(total, ad.mul(Tensor(alpha), kl_total))
    else:
        kl_total = None
    return LossTerms(
        total=total,
        output_loss=out_loss,
        contrastive=contr_total,
        kl=kl_total,
        alpha=alpha,
        contrasted_steps=contrasted_steps,
        skipped_directions=skipped,
    )
