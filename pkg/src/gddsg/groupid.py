"""First inference stage: route a sample to the group that owns its class.

A sample is described by its meta-feature vector: the distances from the
sample to every known class centroid, ordered by class arrival. That
vector grows by one entry per new class (existing coordinates never
shift), so the router is rebuilt after each task from a small per-class
reservoir of retained samples. Routing is
a k-nearest-neighbor vote in meta-feature space, each retained sample
voting for the group its class belongs to.
"""

from __future__ import annotations

import numpy as np

from .errors import StateError
from .grouping import distance

VOTES = ("distance_weighted", "majority")

RESERVOIR_SALT = 1000003


class CentroidRegistry:
    """All class centroids seen so far, exposed in arrival order.

    Arrival order is append-only, so a class keeps its meta-feature
    coordinate for the life of the run."""

    def __init__(self):
        self._centroids: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._centroids)

    def __contains__(self, class_id: int) -> bool:
        return int(class_id) in self._centroids

    def class_ids(self) -> list[int]:
        return list(self._centroids)

    def add(self, class_id: int, centroid: np.ndarray) -> None:
        class_id = int(class_id)
        if class_id in self._centroids:
            raise ValueError(f"class {class_id} already registered")
        centroid = np.asarray(centroid, dtype=np.float64)
        if self._centroids:
            any_dim = next(iter(self._centroids.values())).shape
            if centroid.shape != any_dim:
                raise ValueError(f"centroid shape {centroid.shape} does not match registry {any_dim}")
        self._centroids[class_id] = centroid

    def centroid(self, class_id: int) -> np.ndarray:
        return self._centroids[int(class_id)]

    def stacked(self) -> np.ndarray:
        """Centroids as rows, arrival order."""
        if not self._centroids:
            raise StateError("registry is empty")
        return np.stack([self._centroids[c] for c in self.class_ids()])

    def meta_features(self, x: np.ndarray, metric: str = "euclidean") -> np.ndarray:
        """Distances from each row of x to every centroid, arrival order."""
        cents = self.stacked()
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if metric == "euclidean":
            # (N,1,D) - (1,K,D) is fine at reservoir scale
            diffs = x[:, None, :] - cents[None, :, :]
            out = np.linalg.norm(diffs, axis=2)
        else:
            out = np.array([[distance(row, c, metric) for c in cents] for row in x])
        return out[0] if single else out


class Reservoir:
    """Per-class uniform subsample of feature rows, kept for calibration
    and for rebuilding the group router as the centroid registry grows."""

    def __init__(self, cap: int, seed: int):
        if cap < 1:
            raise ValueError(f"cap must be >= 1, got {cap}")
        self.cap = int(cap)
        self.seed = int(seed)
        self._rows: dict[int, np.ndarray] = {}

    def class_ids(self) -> list[int]:
        return sorted(self._rows)

    def rows_for(self, class_id: int) -> np.ndarray:
        return self._rows[int(class_id)]

    def add_class(self, class_id: int, samples: np.ndarray) -> None:
        """Keep up to ``cap`` rows of one class, chosen by a seeded draw.

        The draw is keyed on (seed, class id) alone, so the retained subset
        does not depend on which task the class arrived in.
        """
        class_id = int(class_id)
        if class_id in self._rows:
            raise ValueError(f"class {class_id} already in reservoir")
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValueError("need at least one sample, shaped N x dim")
        if samples.shape[0] <= self.cap:
            self._rows[class_id] = samples.copy()
            return
        rng = np.random.default_rng([self.seed, RESERVOIR_SALT, class_id])
        keep = np.sort(rng.choice(samples.shape[0], size=self.cap, replace=False))
        self._rows[class_id] = samples[keep].copy()

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All retained rows plus their class labels, ascending class id."""
        if not self._rows:
            raise StateError("reservoir is empty")
        ids = self.class_ids()
        rows = np.vstack([self._rows[c] for c in ids])
        labels = np.concatenate([np.full(self._rows[c].shape[0], c, dtype=np.int64) for c in ids])
        return rows, labels


class GroupKNN:
    """k-nearest-neighbor group router over meta-feature rows."""

    def __init__(self, k: int = 11, vote: str = "distance_weighted"):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"k must be a positive odd integer, got {k}")
        if vote not in VOTES:
            raise ValueError(f"vote must be one of {VOTES}, got {vote!r}")
        self.k = int(k)
        self.vote = vote
        self._rows: np.ndarray | None = None
        self._groups: np.ndarray | None = None

    def fit(self, meta_rows: np.ndarray, group_labels: np.ndarray) -> None:
        meta_rows = np.asarray(meta_rows, dtype=np.float64)
        group_labels = np.asarray(group_labels, dtype=np.int64)
        if meta_rows.ndim != 2 or meta_rows.shape[0] != group_labels.shape[0]:
            raise ValueError("meta_rows must be N x D with one group label per row")
        if meta_rows.shape[0] == 0:
            raise StateError("cannot fit a router on zero rows")
        self._rows = meta_rows
        self._groups = group_labels

    def predict(self, meta_query: np.ndarray) -> np.ndarray:
        """Group id per query row. Neighbor ties and vote ties both resolve
        toward the smaller group id, so results do not depend on row order."""
        if self._rows is None:
            raise StateError("router not fitted")
        q = np.asarray(meta_query, dtype=np.float64)
        single = q.ndim == 1
        if single:
            q = q[None, :]
        eff_k = min(self.k, self._rows.shape[0])
        out = np.empty(q.shape[0], dtype=np.int64)
        for i, row in enumerate(q):
            d = np.linalg.norm(self._rows - row, axis=1)
            order = np.lexsort((self._groups, d))[:eff_k]
            votes: dict[int, float] = {}
            for j in order:
                g = int(self._groups[j])
                w = 1.0 / (d[j] + 1e-12) if self.vote == "distance_weighted" else 1.0
                votes[g] = votes.get(g, 0.0) + w
            out[i] = min(votes, key=lambda g: (-votes[g], g))
        return out[0] if single else out
