"""Desk-scale workbench for invariance-regularised neural algorithmic
reasoning: deterministic classical-algorithm trace generation,
step-preserving augmentations with an execution-equivalence certifier,
and a small self-contained training stack (tape autodiff, triplet
message passing, contrastive + KL objective, ablation harness)."""

__version__ = "0.1.0"
