"""Finite-difference verification of the gradient engine.

Two layers: every primitive is checked on small random inputs through a
scalar-producing wrapper, and the full training objective is checked by
differencing every parameter of a tiny model on a real augmentation
pair.  Both compare reverse-mode gradients against central differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .augmentation import generate_pair
from .autodiff import Tensor
from .network import ModelConfig, Reasoner
from .objective import SimilarityHead, relic_loss

TOLERANCE = 1e-4


@dataclass
class CheckResult:
    name: str
    max_error: float

    @property
    def passed(self) -> bool:
        return self.max_error <= TOLERANCE


def _t(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def primitive_checks(seed: int = 0) -> "list[CheckResult]":
    """Gradcheck every differentiable primitive on random inputs."""
    rng = np.random.default_rng(seed)
    checks = [
        ("add", lambda a, b: ad.sum_(ad.add(a, b)), [_t(rng, 3, 4), _t(rng, 3, 4)]),
        ("add_broadcast", lambda a, b: ad.sum_(ad.add(a, b)), [_t(rng, 3, 4), _t(rng, 4)]),
        ("sub", lambda a, b: ad.sum_(ad.sub(a, b)), [_t(rng, 3, 4), _t(rng, 3, 4)]),
        ("neg", lambda a: ad.sum_(ad.neg(a)), [_t(rng, 5)]),
        ("mul", lambda a, b: ad.sum_(ad.mul(a, b)), [_t(rng, 3, 4), _t(rng, 3, 4)]),
        ("mul_broadcast", lambda a, b: ad.sum_(ad.mul(a, b)), [_t(rng, 2, 3, 4), _t(rng, 1, 4)]),
        ("div", lambda a, b: ad.sum_(ad.div(a, b)),
         [_t(rng, 3, 3), Tensor(rng.uniform(0.5, 2.0, (3, 3)), requires_grad=True)]),
        ("matmul", lambda a, b: ad.sum_(ad.matmul(a, b)), [_t(rng, 3, 4), _t(rng, 4, 2)]),
        ("linear", lambda x, w, b: ad.sum_(ad.linear(x, w, b)),
         [_t(rng, 5, 3), _t(rng, 3, 2), _t(rng, 2)]),
        ("linear_nobias", lambda x, w: ad.sum_(ad.linear(x, w)), [_t(rng, 5, 3), _t(rng, 3, 2)]),
        ("relu", lambda a: ad.sum_(ad.relu(a)),
         [Tensor(rng.normal(size=(4, 4)) + 0.05 * np.sign(rng.normal(size=(4, 4))), requires_grad=True)]),
        ("sigmoid", lambda a: ad.sum_(ad.sigmoid(a)), [_t(rng, 4, 4)]),
        ("tanh", lambda a: ad.sum_(ad.tanh(a)), [_t(rng, 4, 4)]),
        ("exp", lambda a: ad.sum_(ad.exp(a)), [_t(rng, 4)]),
        ("log", lambda a: ad.sum_(ad.log(a)),
         [Tensor(rng.uniform(0.5, 2.0, 5), requires_grad=True)]),
        ("softplus", lambda a: ad.sum_(ad.softplus(a)), [_t(rng, 4, 3)]),
        ("concat", lambda a, b: ad.sum_(ad.concat([a, b], axis=1)),
         [_t(rng, 2, 3), _t(rng, 2, 2)]),
        ("stack", lambda a, b: ad.sum_(ad.mul(ad.stack([a, b]), ad.stack([b, a]))),
         [_t(rng, 2, 3), _t(rng, 2, 3)]),
        ("slice", lambda a: ad.sum_(ad.slice_tensor(a, (slice(1, 3), slice(None, 2)))),
         [_t(rng, 4, 4)]),
        ("reshape", lambda a: ad.sum_(ad.mul(ad.reshape(a, (6,)), ad.reshape(a, (6,)))),
         [_t(rng, 2, 3)]),
        ("transpose", lambda a: ad.sum_(ad.mul(ad.transpose(a, (1, 0)), ad.transpose(a, (1, 0)))),
         [_t(rng, 2, 3)]),
        ("broadcast_to", lambda a: ad.sum_(ad.mul(ad.broadcast_to(a, (4, 3)), ad.broadcast_to(a, (4, 3)))),
         [_t(rng, 1, 3)]),
        ("sum_axis", lambda a: ad.sum_(ad.mul(ad.sum_(a, axis=1), ad.sum_(a, axis=1))),
         [_t(rng, 3, 4)]),
        ("sum_keepdims", lambda a: ad.sum_(ad.mul(a, ad.sum_(a, axis=0, keepdims=True))),
         [_t(rng, 3, 4)]),
        ("mean", lambda a: ad.sum_(ad.mul(ad.mean(a, axis=1), ad.mean(a, axis=1))),
         [_t(rng, 3, 4)]),
        ("max", lambda a: ad.sum_(ad.max_(a, axis=1)), [_t(rng, 4, 5)]),
        ("logsumexp", lambda a: ad.sum_(ad.logsumexp(a, axis=1)), [_t(rng, 3, 5)]),
        ("softmax", lambda a: ad.sum_(ad.mul(ad.softmax(a, axis=1), a)), [_t(rng, 3, 5)]),
        ("gather", lambda a: ad.sum_(ad.mul(ad.gather(a, np.array([2, 0, 1, 1]), axis=0),
                                            ad.gather(a, np.array([2, 0, 1, 1]), axis=0))),
         [_t(rng, 3, 4)]),
        ("take_pairs", lambda a: ad.sum_(ad.take_pairs(a, np.array([0, 1, 2]), np.array([3, 0, 2]))),
         [_t(rng, 3, 4)]),
        ("scatter", lambda a: ad.sum_(ad.mul(ad.scatter(a, np.array([1, 3, 1]), 5),
                                             ad.scatter(a, np.array([1, 3, 1]), 5))),
         [_t(rng, 3, 4)]),
    ]
    results = []
    for name, fn, inputs in checks:
        results.append(CheckResult(name, ad.gradcheck(fn, inputs)))
    return results


def objective_check(
    algorithm: str = "minimum",
    seed: int = 0,
    hidden_dim: int = 4,
    alpha: float = 1.0,
) -> CheckResult:
    """Gradcheck the full training objective against central differences
    over every model and head parameter of a tiny configuration.

    The check perturbs all parameters away from their initial values
    first: the zero-bias initialisation puts nodes with all-zero input
    features exactly on the relu kink (and ties the sender max at zero),
    where central differences measure a subgradient average rather than
    the reverse-mode answer.  At a generic point the objective is smooth
    and the comparison is meaningful.
    """
    config = ModelConfig(
        hidden_dim=hidden_dim, triplet_dim=2, use_reversal=True, ablation_mode="relic"
    )
    model = Reasoner(algorithm, config, seed=seed)
    head = SimilarityHead(hidden_dim, seed=seed)
    pair = generate_pair(algorithm, 3, seed, max_train_n=5)
    params = list(model.params.values()) + list(head.params.values())
    noise = np.random.default_rng(seed + 1)
    for p in params:
        p.data = p.data + noise.normal(0.0, 0.3, size=p.data.shape)

    def fn(*_):
        return relic_loss(model, pair, head, alpha=alpha).total

    return CheckResult(f"relic_loss[{algorithm}]", ad.gradcheck(fn, params))


def full_report(seed: int = 0) -> "list[CheckResult]":
    results = primitive_checks(seed)
    # three algorithms cover all contrast paths: node pointers and class
    # hints (minimum, bfs) and edge pointers (floyd_warshall)
    results.append(objective_check("minimum", seed))
    results.append(objective_check("bfs", seed))
    results.append(objective_check("floyd_warshall", seed))
    return results
