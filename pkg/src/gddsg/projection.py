"""Random feature expansion shared by every class group.

A fixed random matrix lifts backbone embeddings from ``input_dim`` to
``expanded_dim`` and a pointwise activation is applied: ``h(x) = g(x @ W)``.
Entries of ``W`` are i.i.d. standard normal from a seeded generator, sampled
once at construction and frozen afterwards; the same ``(input_dim,
expanded_dim, seed)`` triple always reproduces the same matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class RandomProjection:
    input_dim: int
    expanded_dim: int
    activation: str
    seed: int
    weights: np.ndarray = field(repr=False)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Expand one vector (length input_dim) or a batch (N x input_dim).

        With relu the output is elementwise nonnegative and positively
        homogeneous: expand(a*x) == a*expand(x) for a >= 0.
        """
        x = np.asarray(x, dtype=np.float64)
        want = self.input_dim
        if x.shape[-1] != want:
            raise ValueError(f"expected vectors of length {want}, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("input contains non-finite components")
        out = x @ self.weights
        if self.activation == "relu":
            np.maximum(out, 0.0, out=out)
        return out


def init_projection(input_dim: int, expanded_dim: int, seed: int, activation: str = "relu") -> RandomProjection:
    """Sample a frozen random projection, deterministic per (dims, seed)."""
    if input_dim < 1 or expanded_dim < 1:
        raise ValueError(f"dimensions must be >= 1, got ({input_dim}, {expanded_dim})")
    if expanded_dim < input_dim:
        raise ValueError(f"expanded_dim must be >= input_dim, got ({input_dim}, {expanded_dim})")
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal((input_dim, expanded_dim))
    return RandomProjection(
        input_dim=input_dim,
        expanded_dim=expanded_dim,
        activation=activation,
        seed=seed,
        weights=weights,
    )


def expand(proj: RandomProjection, x: np.ndarray) -> np.ndarray:
    return proj.expand(x)
