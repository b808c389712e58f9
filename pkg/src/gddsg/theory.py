"""Closed-form expectations for sequential overparameterized least squares.

These evaluators compute, exactly, the expected forgetting and expected
generalization error of a linear model trained on T tasks in sequence,
where task t has n samples, the model has p parameters (p >= n + 2), task
t's ground truth is the vector w_t with observation noise sigma, and
r = 1 - n/p is the overparameterization ratio. Forgetting depends on the
task order through the coupling weights

    c[i,j] = (1 - r) * (r**(T-i) - r**(j-i) + r**(T-j)),

so permuting the ground-truth vectors changes the result; the permutation
study below quantifies that spread. A separate helper evaluates the
probability that a random similarity graph over N classes is neither
complete nor disconnected-with-full-components, the regime where a greedy
coloring needs at most max-degree colors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TheoryParams:
    """Ground-truth vectors plus the sample/parameter/noise sizes."""

    w_stars: tuple[np.ndarray, ...]
    n: int
    p: int
    sigma: float

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.w_stars)
        if len(ws) < 1:
            raise ValueError("need at least one task vector")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.p < self.n + 2:
            raise DomainError(f"requires p >= n + 2, got p={self.p}, n={self.n}")
        for k, w in enumerate(ws):
            if w.shape != (self.p,):
                raise ValueError(f"w_stars[{k}] has shape {w.shape}, expected ({self.p},)")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "w_stars", ws)

    @property
    def num_tasks(self) -> int:
        return len(self.w_stars)

    @property
    def ratio(self) -> float:
        return 1.0 - self.n / self.p


def _noise_factor(params: TheoryParams) -> float:
    return params.p * params.sigma ** 2 / (params.p - params.n - 1)


def expected_forgetting(params: TheoryParams) -> float:
    """Expected average drop on tasks 1..T-1 after training through task T.

    Average over i < T of three parts: the decay of task i's own signal,
    (r**T - r**i) * ||w_i||^2; coupling to every later task j,
    c[i,j] * ||w_j - w_i||^2; and the noise contribution,
    (p sigma^2 / (p - n - 1)) * (r**i - r**T).
    """
    T = params.num_tasks
    if T < 2:
        raise ValueError(f"forgetting needs at least 2 tasks, got {T}")
    r = params.ratio
    ws = np.stack(params.w_stars)
    norms_sq = np.sum(ws * ws, axis=1)
    rpow = r ** np.arange(T + 1)
    noise = _noise_factor(params)

    total = 0.0
    for i in range(1, T):
        gaps = ws[i:] - ws[i - 1]
        gap_sq = np.sum(gaps * gaps, axis=1)
        js = np.arange(i + 1, T + 1)
        c_ij = (1.0 - r) * (rpow[T - i] - r ** (js - i) + r ** (T - js))
        total += (rpow[T] - rpow[i]) * norms_sq[i - 1]
        total += float(c_ij @ gap_sq)
        total += noise * (rpow[i] - rpow[T])
    return total / (T - 1)


def expected_generalization(params: TheoryParams) -> float:
    """Expected error over all T tasks after training through task T.

    Three parts: residual signal (r**T / T) * sum_{i<T} ||w_i||^2; the
    order-weighted spread ((1-r)/T) * sum_i r**(T-i) * sum_k ||w_k - w_i||^2;
    and the noise term (p sigma^2 / (p - n - 1)) * (1 - r**T).
    """
    T = params.num_tasks
    r = params.ratio
    ws = np.stack(params.w_stars)
    norms_sq = np.sum(ws * ws, axis=1)

    first = (r ** T / T) * float(np.sum(norms_sq[: T - 1]))
    # pairwise squared distances via broadcasting; rows i, columns k
    diffs = ws[:, None, :] - ws[None, :, :]
    dist_sq = np.sum(diffs * diffs, axis=2)
    weights = r ** (T - np.arange(1, T + 1))
    second = ((1.0 - r) / T) * float(weights @ dist_sq.sum(axis=1))
    third = _noise_factor(params) * (1.0 - r ** T)
    return first + second + third


@dataclass(frozen=True)
class BrooksParams:
    """Class count and pairwise similarity probability for the random graph."""

    num_classes: int
    p_sim: float

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0.0 <= self.p_sim <= 1.0:
            raise ValueError(f"p_sim must be in [0,1], got {self.p_sim}")


def brooks_probability(bp: BrooksParams) -> float:
    """1 - p^(2N) (1-p)^(N^2-2N) - p^(N(N-1)/2), evaluated in log space.

    The subtracted terms underflow long before they stop mattering when
    computed directly, so each is exponentiated from its log. The result is
    clamped into [0,1] only when it strays by less than 1e-12; a larger
    excursion is the formula's own value and is returned as is.
    """
    n, p = bp.num_classes, bp.p_sim

    def pow_from_log(base: float, exponent: float) -> float:
        if exponent == 0.0:
            return 1.0
        if base == 0.0:
            return 0.0
        if base == 1.0:
            return 1.0
        return math.exp(exponent * math.log(base))

    if 0.0 < p < 1.0:
        term1 = math.exp(2 * n * math.log(p) + (n * n - 2 * n) * math.log1p(-p))
    else:
        term1 = pow_from_log(p, 2 * n) * pow_from_log(1.0 - p, n * n - 2 * n)
    term2 = pow_from_log(p, n * (n - 1) / 2.0)
    raw = 1.0 - term1 - term2
    if -1e-12 < raw < 0.0:
        return 0.0
    if 1.0 < raw < 1.0 + 1e-12:
        return 1.0
    return raw


@dataclass(frozen=True)
class PermutationRow:
    perm: tuple[int, ...]
    forgetting: float
    generalization: float


@dataclass(frozen=True)
class PermutationStudy:
    rows: tuple[PermutationRow, ...]
    var_forgetting: float
    var_generalization: float
    sum_sq_distances: float
    exhaustive: bool


def permutation_variance_study(
    params: TheoryParams,
    max_T_exhaustive: int = 6,
    num_samples: int | None = None,
    seed: int | None = None,
) -> PermutationStudy:
    """Evaluate both expectations under reorderings of the task vectors.

    All T! orders are enumerated when T <= max_T_exhaustive; beyond that a
    sampled study (with replacement) must be requested explicitly via
    num_samples and seed. Variances are population variances, computed over
    sorted values so the reduction order is fixed. sum_sq_distances adds
    ||w_i - w_j||^2 over all ordered pairs (i, j); it is permutation
    invariant and reported once. Forgetting is NaN when T == 1.
    """
    T = params.num_tasks
    if T <= max_T_exhaustive:
        perms = list(itertools.permutations(range(T)))
        exhaustive = True
    else:
        if num_samples is None or seed is None:
            raise ValueError(f"T={T} exceeds the exhaustive limit {max_T_exhaustive}; pass num_samples and seed")
        rng = np.random.default_rng(seed)
        perms = [tuple(rng.permutation(T).tolist()) for _ in range(num_samples)]
        exhaustive = False

    rows = []
    for perm in perms:
        permuted = TheoryParams(
            w_stars=tuple(params.w_stars[k] for k in perm),
            n=params.n,
            p=params.p,
            sigma=params.sigma,
        )
        ef = expected_forgetting(permuted) if T >= 2 else math.nan
        eg = expected_generalization(permuted)
        rows.append(PermutationRow(perm=perm, forgetting=ef, generalization=eg))

    def spread(values: list[float]) -> float:
        vals = sorted(values)
        if any(math.isnan(v) for v in vals):
            return math.nan
        return float(np.var(np.asarray(vals)))

    ws = np.stack(params.w_stars)
    diffs = ws[:, None, :] - ws[None, :, :]
    ssd = float(np.sum(diffs * diffs))

    return PermutationStudy(
        rows=tuple(rows),
        var_forgetting=spread([r.forgetting for r in rows]),
        var_generalization=spread([r.generalization for r in rows]),
        sum_sq_distances=ssd,
        exhaustive=exhaustive,
    )
