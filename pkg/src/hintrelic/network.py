"""Encode-process-decode graph reasoner with triplet edge updates.

One model instance owns a parameter dictionary built from an algorithm's
feature schema:

* per-feature linear encoders map inputs (and, in hint-feeding mode,
  hint probabilities) into node / edge / graph embeddings;
* the processor is a fully-connected message-passing step with max
  aggregation over senders, a sigmoid gate over the state update, and a
  triplet term t_ijk reduced over k into a fresh edge representation;
* per-feature decoders read the state back out: pointer heads score
  pairs (i, j), per-pair pointer heads score triples (i, j, k), and the
  other kinds use small two-layer heads.

The penultimate layers of the decoders double as hint representations
for the contrastive objective: a pointer hint indexed by (i, j) is the
pair head's hidden vector at (i, j); class-valued hints combine the
element's hidden vector with a learned class embedding.

Modes: ``no_hints`` ignores hint features entirely; ``baseline``
decodes hints each step and feeds the predicted probabilities back into
the next step's encoders (supervision is applied by the training
harness); ``relic`` neither feeds nor supervises hints — hint
representations enter only the invariance objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import features as F
from .autodiff import Tensor
from .instances import GraphInstance
from .seeding import rng_for
from .trajectories import reversal_specs

ABLATION_MODES = ("no_hints", "baseline", "relic")

# Gate bias starts strongly negative so early training mostly keeps the
# previous state (the update is gated in gradually).
_GATE_BIAS_INIT = -3.0


@dataclass(frozen=True)
class ModelConfig:
    hidden_dim: int = 128
    triplet_dim: int = 8
    use_reversal: bool = False
    ablation_mode: str = "relic"

    def __post_init__(self) -> None:
        if self.hidden_dim < 1 or self.triplet_dim < 1:
            raise ValueError("hidden_dim and triplet_dim must be >= 1")
        if self.ablation_mode not in ABLATION_MODES:
            raise ValueError(
                f"unknown ablation mode {self.ablation_mode!r}; known: {ABLATION_MODES}"
            )


@dataclass
class ProcessorState:
    """Latent carrier between processor steps."""

    h: Tensor  # (n, hidden)
    edge: Tensor  # (n, n, hidden)
    step: int


@dataclass
class Encoded:
    """Summed feature encodings per location."""

    node: Tensor  # (n, hidden)
    edge: Tensor  # (n, n, hidden)
    graph: Tensor  # (1, hidden)

    def merged_with(self, other: "Encoded") -> "Encoded":
        return Encoded(
            node=ad.add(self.node, other.node),
            edge=ad.add(self.edge, other.edge),
            graph=ad.add(self.graph, other.graph),
        )


@dataclass
class StaticTerms:
    """Projections of the encoded features that stay constant across
    processor steps; precomputing them once per rollout avoids repeating
    the same linear maps every step."""

    msg: Tensor  # (n, n, hidden): edge + graph message contributions
    tri: Tensor  # (n, n, n, tri): the three edge contributions to t_ijk


def feature_to_dense(spec: F.FeatureSpec, value: np.ndarray, n: int) -> np.ndarray:
    """Ground-truth feature values as the float channels the encoders
    (and supervision targets) consume.

    scalar/mask (any location) -> trailing channel of width 1; mask_one
    -> (n, 1); categorical -> (n, k) one-hot; node pointer -> (n, n, 1)
    indicator of (i, p_i); per-pair pointer -> (n, n, n) indicator over
    the target axis.
    """
    value = np.asarray(value)
    if spec.kind is F.Kind.CATEGORICAL:
        out = np.zeros((n, spec.num_classes))
        out[np.arange(n), value] = 1.0
        return out
    if spec.kind is F.Kind.POINTER:
        if spec.location is F.Location.NODE:
            out = np.zeros((n, n, 1))
            out[np.arange(n), value, 0] = 1.0
            return out
        out = np.zeros((n, n, n))
        rows, cols = np.indices((n, n))
        out[rows, cols, value] = 1.0
        return out
    if spec.location is F.Location.GRAPH:
        return np.asarray(value, dtype=np.float64).reshape(1, 1)
    if spec.location is F.Location.NODE:
        return np.asarray(value, dtype=np.float64).reshape(n, 1)
    return np.asarray(value, dtype=np.float64).reshape(n, n, 1)


class Reasoner:
    """The full encode-process-decode stack for one algorithm."""

    def __init__(self, algorithm: str, config: ModelConfig, seed: int = 0):
        if algorithm not in F.ALGORITHMS:
            raise KeyError(f"unknown algorithm {algorithm!r}")
        self.algorithm = algorithm
        self.config = config
        self.input_specs = F.stage_features(algorithm, F.Stage.INPUT)
        hints = list(F.stage_features(algorithm, F.Stage.HINT))
        if config.use_reversal:
            hints.extend(reversal_specs(algorithm))
        self.hint_specs = tuple(hints)
        self.output_specs = F.stage_features(algorithm, F.Stage.OUTPUT)
        self.params: dict[str, Tensor] = {}
        self._rng = rng_for(seed, "model", algorithm)
        self._build_params()
        del self._rng

    # -- parameter construction -------------------------------------------

    def _param(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> Tensor:
        if fan_in is None:
            data = np.zeros(shape)
        else:
            data = self._rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)
        t = Tensor(data, requires_grad=True)
        self.params[name] = t
        return t

    def _build_linear(self, name: str, d_in: int, d_out: int, bias: bool = True) -> None:
        self._param(f"{name}/w", (d_in, d_out), fan_in=d_in)
        if bias:
            self._param(f"{name}/b", (d_out,))

    def _build_params(self) -> None:
        hid, tri = self.config.hidden_dim, self.config.triplet_dim
        for spec in self.input_specs + self.hint_specs:
            self._build_encoder(spec)
        two_h = 2 * hid
        for name, d_in in (
            ("proc/msg/recv", two_h),
            ("proc/msg/send", two_h),
            ("proc/msg/edge", hid),
            ("proc/msg/graph", hid),
        ):
            self._build_linear(name, d_in, hid, bias=(name == "proc/msg/recv"))
        self._build_linear("proc/gate/state", two_h, hid)
        self._build_linear("proc/gate/agg", hid, hid, bias=False)
        self._build_linear("proc/gate/out", hid, hid)
        self.params["proc/gate/out/b"].data[:] = _GATE_BIAS_INIT
        self._build_linear("proc/cand/state", two_h, hid)
        self._build_linear("proc/cand/agg", hid, hid, bias=False)
        for name, d_in in (
            ("proc/tri/i", two_h),
            ("proc/tri/j", two_h),
            ("proc/tri/k", two_h),
            ("proc/tri/e_ij", hid),
            ("proc/tri/e_ik", hid),
            ("proc/tri/e_kj", hid),
        ):
            self._build_linear(name, d_in, tri, bias=(name == "proc/tri/i"))
        self._build_linear("proc/tri/readout", tri, hid)
        for spec in self.hint_specs + self.output_specs:
            self._build_decoder(spec)

    def _build_encoder(self, spec: F.FeatureSpec) -> None:
        hid = self.config.hidden_dim
        base = f"enc/{spec.stage.value}/{spec.name}"
        if spec.kind is F.Kind.CATEGORICAL:
            self._build_linear(base, spec.num_classes, hid)
        elif spec.kind is F.Kind.POINTER and spec.location is F.Location.EDGE:
            # two marginal channels: how often k is the target of row i,
            # and of column j
            self._build_linear(base + "/row", 1, hid)
            self._build_linear(base + "/col", 1, hid, bias=False)
        else:
            self._build_linear(base, 1, hid)

    def _build_decoder(self, spec: F.FeatureSpec) -> None:
        hid = self.config.hidden_dim
        base = f"dec/{spec.stage.value}/{spec.name}"
        if spec.kind is F.Kind.POINTER:
            if spec.location is F.Location.NODE:
                for part in ("src", "dst"):
                    self._build_linear(f"{base}/{part}", hid, hid, bias=False)
                self._build_linear(f"{base}/edge", hid, hid)
                self._build_linear(f"{base}/score", hid, 1)
            else:
                for part in ("src", "dst", "tgt"):
                    self._build_linear(f"{base}/{part}", hid, hid, bias=False)
                self._build_linear(f"{base}/edge", hid, hid)
                self._build_linear(f"{base}/score", hid, 1)
            return
        width = spec.num_classes if spec.kind is F.Kind.CATEGORICAL else 1
        self._build_linear(f"{base}/hidden", hid, hid)
        self._build_linear(f"{base}/out", hid, width)
        if spec.stage is F.Stage.HINT and spec.kind in (
            F.Kind.CATEGORICAL,
            F.Kind.MASK,
            F.Kind.MASK_ONE,
        ):
            classes = spec.num_classes if spec.kind is F.Kind.CATEGORICAL else 2
            self._param(f"{base}/class_emb", (classes, hid), fan_in=hid)

    # -- helpers -----------------------------------------------------------

    def _lin(self, name: str, x: Tensor) -> Tensor:
        bias = self.params.get(f"{name}/b")
        return ad.linear(x, self.params[f"{name}/w"], bias)

    def _hint_spec(self, name: str) -> F.FeatureSpec:
        for spec in self.hint_specs:
            if spec.name == name:
                return spec
        raise KeyError(f"model has no hint feature {name!r}")

    # -- encoding ----------------------------------------------------------

    def initial_state(self, n: int) -> ProcessorState:
        hid = self.config.hidden_dim
        return ProcessorState(
            h=Tensor(np.zeros((n, hid))),
            edge=Tensor(np.zeros((n, n, hid))),
            step=0,
        )

    def encode_inputs(self, instance: GraphInstance) -> Encoded:
        values = {}
        for spec in self.input_specs:
            values[spec.name] = Tensor(
                feature_to_dense(spec, instance.input_array(spec.name), instance.n)
            )
        return self._encode(self.input_specs, values, instance.n)

    def encode_hints(self, values: "dict[str, Tensor]", n: int) -> Encoded:
        """Encode hint channels (ground-truth densifications or predicted
        probabilities) with the hint encoders."""
        specs = tuple(self._hint_spec(name) for name in values)
        return self._encode(specs, values, n)

    def _encode(self, specs, values: "dict[str, Tensor]", n: int) -> Encoded:
        hid = self.config.hidden_dim
        node_terms: list[Tensor] = []
        edge_terms: list[Tensor] = []
        graph_terms: list[Tensor] = []
        for spec in specs:
            name = f"enc/{spec.stage.value}/{spec.name}"
            x = values[spec.name]
            if spec.kind is F.Kind.POINTER:
                if spec.location is F.Location.NODE:
                    flat = ad.reshape(x, (n * n, 1))
                    edge_terms.append(ad.reshape(self._lin(name, flat), (n, n, hid)))
                else:
                    row = ad.reshape(ad.mean(x, axis=1), (n * n, 1))
                    col = ad.reshape(ad.mean(x, axis=0), (n * n, 1))
                    contrib = ad.add(self._lin(name + "/row", row), self._lin(name + "/col", col))
                    edge_terms.append(ad.reshape(contrib, (n, n, hid)))
            elif spec.location is F.Location.NODE:
                node_terms.append(self._lin(name, x))
            elif spec.location is F.Location.EDGE:
                flat = ad.reshape(x, (n * n, x.shape[-1]))
                edge_terms.append(ad.reshape(self._lin(name, flat), (n, n, hid)))
            else:
                graph_terms.append(self._lin(name, x))

        def total(terms, zero_shape):
            if not terms:
                return Tensor(np.zeros(zero_shape))
            out = terms[0]
            for term in terms[1:]:
                out = ad.add(out, term)
            return out

        return Encoded(
            node=total(node_terms, (n, hid)),
            edge=total(edge_terms, (n, n, hid)),
            graph=total(graph_terms, (1, hid)),
        )

    # -- processor ---------------------------------------------------------

    def static_terms(self, enc: Encoded) -> StaticTerms:
        hid, tri = self.config.hidden_dim, self.config.triplet_dim
        n = enc.node.shape[0]
        edge_flat = ad.reshape(enc.edge, (n * n, hid))
        msg = ad.add(
            ad.reshape(self._lin("proc/msg/edge", edge_flat), (n, n, hid)),
            ad.reshape(self._lin("proc/msg/graph", enc.graph), (1, 1, hid)),
        )
        e_ij = ad.reshape(self._lin("proc/tri/e_ij", edge_flat), (n, n, 1, tri))
        e_ik = ad.reshape(self._lin("proc/tri/e_ik", edge_flat), (n, 1, n, tri))
        e_kj = ad.reshape(
            ad.transpose(
                ad.reshape(self._lin("proc/tri/e_kj", edge_flat), (n, n, tri)), (1, 0, 2)
            ),
            (1, n, n, tri),
        )
        return StaticTerms(msg=msg, tri=ad.add(ad.add(e_ij, e_ik), e_kj))

    def step(
        self, state: ProcessorState, enc: Encoded, static: "StaticTerms | None" = None
    ) -> ProcessorState:
        hid, tri = self.config.hidden_dim, self.config.triplet_dim
        n = state.h.shape[0]
        if static is None:
            static = self.static_terms(enc)
        z = ad.concat([enc.node, state.h], axis=1)  # (n, 2H)

        recv = self._lin("proc/msg/recv", z)
        send = self._lin("proc/msg/send", z)
        msgs = ad.relu(
            ad.add(
                ad.add(ad.reshape(recv, (n, 1, hid)), ad.reshape(send, (1, n, hid))),
                static.msg,
            )
        )
        agg = ad.max_(msgs, axis=1)  # max over senders j -> (n, H)

        gate_in = ad.relu(
            ad.add(self._lin("proc/gate/state", z), self._lin("proc/gate/agg", agg))
        )
        gate = ad.sigmoid(self._lin("proc/gate/out", gate_in))
        # A bounded candidate keeps |h| <= max(|h_0|, 1) under the convex
        # gate, so rollouts cannot amplify state norms step over step.
        cand = ad.tanh(
            ad.add(self._lin("proc/cand/state", z), self._lin("proc/cand/agg", agg))
        )
        one = Tensor(1.0)
        new_h = ad.add(ad.mul(gate, cand), ad.mul(ad.sub(one, gate), state.h))

        ti = ad.reshape(self._lin("proc/tri/i", z), (n, 1, 1, tri))
        tj = ad.reshape(self._lin("proc/tri/j", z), (1, n, 1, tri))
        tk = ad.reshape(self._lin("proc/tri/k", z), (1, 1, n, tri))
        triple = ad.add(ad.add(ad.add(ti, tj), tk), static.tri)
        reduced = ad.max_(triple, axis=2)  # max over k -> (n, n, tri)
        new_edge = ad.reshape(
            self._lin("proc/tri/readout", ad.reshape(reduced, (n * n, tri))), (n, n, hid)
        )
        return ProcessorState(h=new_h, edge=new_edge, step=state.step + 1)

    # -- decoding ----------------------------------------------------------

    def stacked_pair_reprs(self, spec: F.FeatureSpec, hs: Tensor, es: Tensor) -> Tensor:
        """Pointer-head hidden vectors for every pair (i, j) of a stack of
        states: hs (S, n, H), es (S, n, n, H) -> (S, n, n, H)."""
        hid = self.config.hidden_dim
        steps, n, _ = hs.shape
        base = f"dec/{spec.stage.value}/{spec.name}"
        h_flat = ad.reshape(hs, (steps * n, hid))
        src = ad.reshape(self._lin(f"{base}/src", h_flat), (steps, n, 1, hid))
        dst = ad.reshape(self._lin(f"{base}/dst", h_flat), (steps, 1, n, hid))
        edge = ad.reshape(
            self._lin(f"{base}/edge", ad.reshape(es, (steps * n * n, hid))),
            (steps, n, n, hid),
        )
        return ad.relu(ad.add(ad.add(src, dst), edge))

    def stacked_triple_reprs(self, spec: F.FeatureSpec, hs: Tensor, es: Tensor) -> Tensor:
        """Per-pair pointer head hidden vectors for (i, j, k) of a stack of
        states -> (S, n, n, n, H)."""
        hid = self.config.hidden_dim
        steps, n, _ = hs.shape
        base = f"dec/{spec.stage.value}/{spec.name}"
        h_flat = ad.reshape(hs, (steps * n, hid))
        src = ad.reshape(self._lin(f"{base}/src", h_flat), (steps, n, 1, 1, hid))
        dst = ad.reshape(self._lin(f"{base}/dst", h_flat), (steps, 1, n, 1, hid))
        tgt = ad.reshape(self._lin(f"{base}/tgt", h_flat), (steps, 1, 1, n, hid))
        edge = ad.reshape(
            self._lin(f"{base}/edge", ad.reshape(es, (steps * n * n, hid))),
            (steps, n, n, 1, hid),
        )
        return ad.relu(ad.add(ad.add(src, dst), ad.add(tgt, edge)))

    def stacked_node_reprs(self, spec: F.FeatureSpec, hs: Tensor) -> Tensor:
        """Class-head hidden vectors per node of a stack of states:
        hs (S, n, H) -> (S, n, H)."""
        hid = self.config.hidden_dim
        steps, n, _ = hs.shape
        base = f"dec/{spec.stage.value}/{spec.name}"
        flat = self._lin(f"{base}/hidden", ad.reshape(hs, (steps * n, hid)))
        return ad.relu(ad.reshape(flat, (steps, n, hid)))

    def stacked_edge_reprs(self, spec: F.FeatureSpec, es: Tensor) -> Tensor:
        """Class-head hidden vectors per edge of a stack of states:
        es (S, n, n, H) -> (S, n, n, H)."""
        hid = self.config.hidden_dim
        steps, n, _, _ = es.shape
        base = f"dec/{spec.stage.value}/{spec.name}"
        flat = self._lin(f"{base}/hidden", ad.reshape(es, (steps * n * n, hid)))
        return ad.relu(ad.reshape(flat, (steps, n, n, hid)))

    def _one(self, state: ProcessorState) -> "tuple[Tensor, Tensor]":
        n = state.h.shape[0]
        hid = self.config.hidden_dim
        return (
            ad.reshape(state.h, (1, n, hid)),
            ad.reshape(state.edge, (1, n, n, hid)),
        )

    def pair_reprs(self, spec: F.FeatureSpec, state: ProcessorState) -> Tensor:
        """Pointer-head hidden vectors for every pair (i, j): (n, n, H)."""
        n = state.h.shape[0]
        hs, es = self._one(state)
        stacked = self.stacked_pair_reprs(spec, hs, es)
        return ad.reshape(stacked, (n, n, self.config.hidden_dim))

    def triple_reprs(self, spec: F.FeatureSpec, state: ProcessorState) -> Tensor:
        """Per-pair pointer head hidden vectors for (i, j, k): (n, n, n, H)."""
        n = state.h.shape[0]
        hs, es = self._one(state)
        stacked = self.stacked_triple_reprs(spec, hs, es)
        return ad.reshape(stacked, (n, n, n, self.config.hidden_dim))

    def node_reprs(self, spec: F.FeatureSpec, state: ProcessorState) -> Tensor:
        base = f"dec/{spec.stage.value}/{spec.name}"
        return ad.relu(self._lin(f"{base}/hidden", state.h))

    def edge_reprs(self, spec: F.FeatureSpec, state: ProcessorState) -> Tensor:
        hid = self.config.hidden_dim
        n = state.h.shape[0]
        base = f"dec/{spec.stage.value}/{spec.name}"
        flat = self._lin(f"{base}/hidden", ad.reshape(state.edge, (n * n, hid)))
        return ad.relu(ad.reshape(flat, (n, n, hid)))

    def class_embedding(self, spec: F.FeatureSpec) -> Tensor:
        return self.params[f"dec/{spec.stage.value}/{spec.name}/class_emb"]

    def decode_feature(self, spec: F.FeatureSpec, state: ProcessorState) -> Tensor:
        """Raw decoder output: pointer kinds give logits over targets,
        class kinds give per-element logits, scalars give values."""
        hid = self.config.hidden_dim
        n = state.h.shape[0]
        base = f"dec/{spec.stage.value}/{spec.name}"
        if spec.kind is F.Kind.POINTER:
            if spec.location is F.Location.NODE:
                pair = self.pair_reprs(spec, state)
                flat = ad.matmul(ad.reshape(pair, (n * n, hid)), self.params[f"{base}/score/w"])
                return ad.reshape(ad.add(flat, self.params[f"{base}/score/b"]), (n, n))
            trip = self.triple_reprs(spec, state)
            flat = ad.matmul(ad.reshape(trip, (n * n * n, hid)), self.params[f"{base}/score/w"])
            return ad.reshape(ad.add(flat, self.params[f"{base}/score/b"]), (n, n, n))
        if spec.location is F.Location.GRAPH:
            pooled = ad.reshape(ad.mean(state.h, axis=0), (1, hid))
            pen = ad.relu(self._lin(f"{base}/hidden", pooled))
            return ad.reshape(self._lin(f"{base}/out", pen), ())
        if spec.location is F.Location.NODE:
            pen = self.node_reprs(spec, state)
            out = self._lin(f"{base}/out", pen)
            return out if spec.kind is F.Kind.CATEGORICAL else ad.reshape(out, (n,))
        pen = self.edge_reprs(spec, state)
        out = self._lin(f"{base}/out", ad.reshape(pen, (n * n, hid)))
        return ad.reshape(out, (n, n))

    def decode_outputs(self, state: ProcessorState) -> "dict[str, Tensor]":
        return {spec.name: self.decode_feature(spec, state) for spec in self.output_specs}

    def decode_hints(self, state: ProcessorState) -> "dict[str, Tensor]":
        return {spec.name: self.decode_feature(spec, state) for spec in self.hint_specs}

    def feedback_probs(self, spec: F.FeatureSpec, logits: Tensor) -> Tensor:
        """Predicted hint probabilities in encoder-channel layout."""
        n = logits.shape[0] if logits.ndim else 1
        if spec.kind is F.Kind.POINTER:
            axis = 1 if spec.location is F.Location.NODE else 2
            probs = ad.softmax(logits, axis=axis)
            if spec.location is F.Location.NODE:
                return ad.reshape(probs, (n, n, 1))
            return probs
        if spec.kind is F.Kind.MASK_ONE:
            return ad.reshape(ad.softmax(logits, axis=0), (n, 1))
        if spec.kind is F.Kind.CATEGORICAL:
            return ad.softmax(logits, axis=1)
        if spec.kind is F.Kind.MASK:
            probs = ad.sigmoid(logits)
            if spec.location is F.Location.GRAPH:
                return ad.reshape(probs, (1, 1))
            if spec.location is F.Location.NODE:
                return ad.reshape(probs, (n, 1))
            return ad.reshape(probs, (n, n, 1))
        # scalar: raw predicted values
        if spec.location is F.Location.GRAPH:
            return ad.reshape(logits, (1, 1))
        if spec.location is F.Location.NODE:
            return ad.reshape(logits, (n, 1))
        return ad.reshape(logits, (n, n, 1))

    # -- rollouts ----------------------------------------------------------

    def rollout(self, instance: GraphInstance, num_steps: int, collect: bool = False):
        """Run the processor without hint inputs (no_hints / relic modes).

        Returns the final state, or the list of per-step states when
        ``collect`` is set.
        """
        enc = self.encode_inputs(instance)
        static = self.static_terms(enc)
        state = self.initial_state(instance.n)
        states: list[ProcessorState] = []
        for _ in range(num_steps):
            state = self.step(state, enc, static)
            if collect:
                states.append(state)
        return states if collect else state

    def rollout_with_hints(self, instance: GraphInstance, num_steps: int):
        """Run the processor feeding predicted hint probabilities forward
        (baseline mode).  Returns (final state, per-step hint logits)."""
        enc_inputs = self.encode_inputs(instance)
        state = self.initial_state(instance.n)
        hint_logits: list[dict[str, Tensor]] = []
        feedback: "dict[str, Tensor] | None" = None
        for _ in range(num_steps):
            enc = enc_inputs
            if feedback is not None:
                enc = enc.merged_with(self.encode_hints(feedback, instance.n))
            state = self.step(state, enc)
            logits = self.decode_hints(state)
            hint_logits.append(logits)
            feedback = {
                spec.name: self.feedback_probs(spec, logits[spec.name])
                for spec in self.hint_specs
            }
        return state, hint_logits

    def predict_outputs(self, instance: GraphInstance, num_steps: int) -> "dict[str, np.ndarray]":
        """Hard output predictions (argmax / threshold) for evaluation."""
        with ad.no_grad():
            if self.config.ablation_mode == "baseline":
                state, _ = self.rollout_with_hints(instance, num_steps)
            else:
                state = self.rollout(instance, num_steps)
            decoded = self.decode_outputs(state)
        out: dict[str, np.ndarray] = {}
        for spec in self.output_specs:
            logits = decoded[spec.name].data
            if spec.kind is F.Kind.POINTER:
                out[spec.name] = np.argmax(logits, axis=-1).astype(np.int64)
            elif spec.kind is F.Kind.MASK_ONE:
                hot = np.zeros(instance.n, dtype=np.int64)
                hot[int(np.argmax(logits))] = 1
                out[spec.name] = hot
            elif spec.kind is F.Kind.CATEGORICAL:
                out[spec.name] = np.argmax(logits, axis=1).astype(np.int64)
            elif spec.kind is F.Kind.MASK:
                out[spec.name] = (logits > 0).astype(np.int64)
            else:
                out[spec.name] = logits.astype(np.float64)
        return out
