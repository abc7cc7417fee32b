"""Contrastive representation learning with an expert-free self-training loop.

Pipeline pieces: a seeded numpy-backed autodiff core (``numerics``), corpus
tooling with a synthetic obituary-style generator (``corpus``), a small
transformer encoder with dropout-view augmentation (``encoder``), the
supervised contrastive objective (``contrastive``), the self-training loop
(``selftrain``), classification metrics (``metrics``), and a CLI (``cli``).
"""

__version__ = "0.1.0"
