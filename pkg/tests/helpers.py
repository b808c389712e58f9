"""Independent oracles and small builders shared by the test modules.

Everything here is deliberately written with a different structure from the
library code (plain Python loops, explicit inverses, backtracking search)
so agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def er_graph(n: int, p: float, rng: np.random.Generator):
    """Erdős–Rényi graph: (vertices, edges) with canonical edge order."""
    vertices = list(range(n))
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return vertices, edges


def brute_force_chromatic(vertices, edges) -> int:
    """Exact chromatic number by backtracking; intended for n <= 8."""
    vs = sorted(vertices)
    if not vs:
        return 0
    adj = {v: set() for v in vs}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)

    def colorable(k: int) -> bool:
        assignment: dict[int, int] = {}

        def place(idx: int) -> bool:
            if idx == len(vs):
                return True
            v = vs[idx]
            used = {assignment[u] for u in adj[v] if u in assignment}
            for c in range(k):
                if c not in used:
                    assignment[v] = c
                    if place(idx + 1):
                        return True
                    del assignment[v]
            return False

        return place(0)

    for k in range(1, len(vs) + 1):
        if colorable(k):
            return k
    return len(vs)


def is_proper(color_of: dict, edges) -> bool:
    return all(color_of[i] != color_of[j] for i, j in edges)


def stats_oracle(samples: np.ndarray):
    """Literal per-sample centroid and mean radius, scalar arithmetic."""
    samples = np.asarray(samples, dtype=np.float64)
    n, d = samples.shape
    centroid = [sum(float(samples[i, k]) for i in range(n)) / n for k in range(d)]
    radius = 0.0
    for i in range(n):
        radius += math.sqrt(sum((float(samples[i, k]) - centroid[k]) ** 2 for k in range(d)))
    return np.asarray(centroid), radius / n


def dissimilar_oracle(samples_a: np.ndarray, samples_b: np.ndarray) -> bool:
    """The threshold test evaluated from scratch on two raw sample sets."""
    ca, ra = stats_oracle(samples_a)
    cb, rb = stats_oracle(samples_b)
    dist = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(ca, cb)))
    return dist > max(ra, rb)


def forgetting_loop_oracle(ws, n: int, p: int, sigma: float) -> float:
    """Expected forgetting via plain nested loops, no vectorization."""
    T = len(ws)
    r = 1.0 - n / p
    noise = p * sigma * sigma / (p - n - 1)
    total = 0.0
    for i in range(1, T):
        wi = ws[i - 1]
        norm_sq = sum(float(x) * float(x) for x in wi)
        total += (r ** T - r ** i) * norm_sq
        for j in range(i + 1, T + 1):
            wj = ws[j - 1]
            gap = sum((float(a) - float(b)) ** 2 for a, b in zip(wj, wi))
            c_ij = (1.0 - r) * (r ** (T - i) - r ** (j - i) + r ** (T - j))
            total += c_ij * gap
        total += noise * (r ** i - r ** T)
    return total / (T - 1)


def generalization_loop_oracle(ws, n: int, p: int, sigma: float) -> float:
    """Expected generalization via plain nested loops."""
    T = len(ws)
    r = 1.0 - n / p
    first = 0.0
    for i in range(1, T):
        first += sum(float(x) * float(x) for x in ws[i - 1])
    first *= r ** T / T
    second = 0.0
    for i in range(1, T + 1):
        inner = 0.0
        for k in range(1, T + 1):
            inner += sum((float(a) - float(b)) ** 2 for a, b in zip(ws[k - 1], ws[i - 1]))
        second += r ** (T - i) * inner
    second *= (1.0 - r) / T
    third = (p * sigma * sigma / (p - n - 1)) * (1.0 - r ** T)
    return first + second + third


def knn_oracle(rows: np.ndarray, groups: np.ndarray, query: np.ndarray, k: int, vote: str) -> int:
    """Naive nearest-neighbor vote with the same tie conventions."""
    dists = [
        (math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(row, query))), int(g), idx)
        for idx, (row, g) in enumerate(zip(rows, groups))
    ]
    dists.sort(key=lambda t: (t[0], t[1]))
    votes: dict[int, float] = {}
    for d, g, _ in dists[: min(k, len(dists))]:
        w = 1.0 / (d + 1e-12) if vote == "distance_weighted" else 1.0
        votes[g] = votes.get(g, 0.0) + w
    best = None
    for g in sorted(votes):
        if best is None or votes[g] > votes[best]:
            best = g
    return best


def ridge_inverse_oracle(features: np.ndarray, onehot: np.ndarray, lam: float) -> np.ndarray:
    """Normal equations with an explicit dense inverse."""
    m = features.shape[1]
    return np.linalg.inv(features.T @ features + lam * np.eye(m)) @ (features.T @ onehot)


def gaussian_blobs(centers: np.ndarray, per_class: int, std: float, rng: np.random.Generator):
    """(labels, vectors) with per_class draws of N(center_c, std^2 I) per row of centers."""
    labels, vectors = [], []
    for c in range(centers.shape[0]):
        labels.append(np.full(per_class, c, dtype=np.int64))
        vectors.append(centers[c] + std * rng.standard_normal((per_class, centers.shape[1])))
    return np.concatenate(labels), np.vstack(vectors)


def bundle_dataset(
    num_bundles: int = 3,
    per_bundle: int = 4,
    dim: int = 128,
    intra: float = 9.0,
    anchor_scale: float = 50.0,
    n_train: int = 80,
    n_test: int = 40,
    seed: int = 11,
):
    """Clusters arranged as far-apart bundles of mutually similar classes.

    Within a bundle, class centers sit pairwise ``intra`` apart (below the
    expected within-class mean radius sqrt(dim), so the threshold test calls
    them similar) yet far enough apart in noise units to remain separable.
    Returns (train_labels, train_vectors, test_labels, test_vectors,
    bundle_of_class).
    """
    rng = np.random.default_rng(seed)
    num_classes = num_bundles * per_bundle
    anchors = rng.standard_normal((num_bundles, dim))
    anchors = anchor_scale * anchors / np.linalg.norm(anchors, axis=1, keepdims=True)
    centers = np.zeros((num_classes, dim))
    bundle_of = {}
    for b in range(num_bundles):
        for k in range(per_bundle):
            c = per_bundle * b + k
            e = np.zeros(dim)
            e[c] = 1.0
            centers[c] = anchors[b] + (intra / math.sqrt(2.0)) * e
            bundle_of[c] = b
    tr_lab, tr_vec, te_lab, te_vec = [], [], [], []
    for c in range(num_classes):
        draws = centers[c] + rng.standard_normal((n_train + n_test, dim))
        tr_lab.append(np.full(n_train, c, dtype=np.int64))
        tr_vec.append(draws[:n_train])
        te_lab.append(np.full(n_test, c, dtype=np.int64))
        te_vec.append(draws[n_train:])
    return (
        np.concatenate(tr_lab),
        np.vstack(tr_vec),
        np.concatenate(te_lab),
        np.vstack(te_vec),
        bundle_of,
    )


def all_permutation_values(fn, ws, n, p, sigma):
    """fn evaluated on every reordering of ws; returns the list of values."""
    return [fn([ws[k] for k in perm], n, p, sigma) for perm in itertools.permutations(range(len(ws)))]
