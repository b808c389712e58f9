"""Embedding file formats, task manifests, and synthetic stream generation.

Two on-disk artifacts are defined here:

* GDE1 embedding file: ``magic "GDE1" | u32 version=1 | u32 dim | u64 count``
  followed by ``count`` packed records of ``(u32 class_id, dim x f32)``,
  little-endian, no padding. Vectors are stored as f32; everything downstream
  computes in f64.
* Manifest: JSON ``{"dim": int, "seed": int, "tasks": [{"id": int,
  "classes": [int], "file": str, "test_file": str?}]}``. Task ids must be
  contiguous from 0 and class sets of distinct tasks must be disjoint; the
  optional ``test_file`` holds the held-out split used for evaluation.

Synthetic streams place class centers uniformly on a sphere so pairwise
center distances concentrate; ``similarity_pairs`` re-places the second class
of each pair within ``within_std`` of the first, which makes the pair come
out similar under the adaptive threshold test with high probability.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    ManifestError,
    NonFiniteError,
    TruncatedError,
)

GDE1_MAGIC = b"GDE1"
GDE1_VERSION = 1
_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("dim", "<u4"), ("count", "<u8")])


class EmbeddingRecord(NamedTuple):
    class_id: int
    vector: np.ndarray


def _record_dtype(dim: int) -> np.dtype:
    # packed: 4 bytes label + dim * 4 bytes payload, no alignment gaps
    return np.dtype([("class_id", "<u4"), ("vector", "<f4", (dim,))])


def write_embedding_arrays(path: str | os.PathLike, dim: int, labels: np.ndarray, vectors: np.ndarray) -> None:
    """Write one GDE1 file from parallel label/vector arrays.

    Output bytes are a pure function of the inputs.
    """
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    labels = np.asarray(labels)
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != dim:
        raise FormatError(f"vectors must be N x {dim}, got shape {vectors.shape}")
    if labels.shape != (vectors.shape[0],):
        raise FormatError("labels and vectors disagree on record count")
    if labels.size and (labels.min() < 0 or labels.max() >= 2**32):
        raise FormatError("class ids must fit in u32")
    if not np.all(np.isfinite(vectors)):
        raise NonFiniteError("refusing to write non-finite vector components")

    header = np.zeros(1, dtype=_HEADER)
    header["magic"] = GDE1_MAGIC
    header["version"] = GDE1_VERSION
    header["dim"] = dim
    header["count"] = labels.shape[0]
    body = np.zeros(labels.shape[0], dtype=_record_dtype(dim))
    body["class_id"] = labels
    body["vector"] = vectors.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(body.tobytes())


def write_embedding_file(path: str | os.PathLike, dim: int, records: Sequence[EmbeddingRecord | tuple]) -> None:
    """Write records of (class_id, vector) to a GDE1 file."""
    labels = np.array([int(r[0]) for r in records], dtype=np.int64)
    if len(records) == 0:
        vectors = np.zeros((0, dim))
    else:
        rows = []
        for r in records:
            v = np.asarray(r[1], dtype=np.float64).ravel()
            if v.shape[0] != dim:
                raise FormatError(f"record for class {r[0]} has length {v.shape[0]}, expected {dim}")
            rows.append(v)
        vectors = np.stack(rows)
    write_embedding_arrays(path, dim, labels, vectors)


def read_embedding_arrays(path: str | os.PathLike) -> tuple[int, np.ndarray, np.ndarray]:
    """Read a GDE1 file into (dim, labels int64, vectors float64)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.itemsize:
        raise TruncatedError(f"{path}: file shorter than header")
    header = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if bytes(header["magic"]) != GDE1_MAGIC:
        raise BadMagicError(f"{path}: bad magic {bytes(header['magic'])!r}")
    if int(header["version"]) != GDE1_VERSION:
        raise BadMagicError(f"{path}: unsupported version {int(header['version'])}")
    dim = int(header["dim"])
    count = int(header["count"])
    if dim < 1:
        raise FormatError(f"{path}: declared dim {dim} is invalid")
    body = raw[_HEADER.itemsize:]
    expected = count * (4 + 4 * dim)
    if len(body) < expected:
        raise TruncatedError(f"{path}: declared {count} records but payload holds {len(body)} of {expected} bytes")
    if len(body) > expected:
        raise TruncatedError(f"{path}: {len(body) - expected} trailing bytes after declared payload")
    packed = np.frombuffer(body, dtype=_record_dtype(dim))
    labels = packed["class_id"].astype(np.int64)
    vectors = packed["vector"].astype(np.float64)
    if not np.all(np.isfinite(vectors)):
        raise NonFiniteError(f"{path}: payload contains non-finite components")
    return dim, labels, vectors


def read_embedding_file(path: str | os.PathLike) -> tuple[int, list[EmbeddingRecord]]:
    """Read a GDE1 file into (dim, list of EmbeddingRecord)."""
    dim, labels, vectors = read_embedding_arrays(path)
    records = [EmbeddingRecord(int(c), vectors[i]) for i, c in enumerate(labels)]
    return dim, records


@dataclass(frozen=True)
class TaskEntry:
    task_id: int
    classes: tuple[int, ...]
    file: str
    test_file: str | None = None


@dataclass(frozen=True)
class TaskManifest:
    dim: int
    seed: int
    tasks: tuple[TaskEntry, ...]

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def all_classes(self) -> list[int]:
        out: list[int] = []
        for t in self.tasks:
            out.extend(t.classes)
        return out


def _validate_manifest(manifest: TaskManifest, base_dir: str, check_files: bool = True) -> None:
    ids = sorted(t.task_id for t in manifest.tasks)
    if ids != list(range(len(manifest.tasks))):
        raise ManifestError(f"task ids must be contiguous 0..{len(manifest.tasks) - 1}, got {ids}")
    seen: dict[int, int] = {}
    for t in manifest.tasks:
        if len(t.classes) == 0:
            raise ManifestError(f"task {t.task_id} declares no classes")
        for c in t.classes:
            if c in seen:
                raise ManifestError(f"class {c} appears in tasks {seen[c]} and {t.task_id}; class sets must be disjoint")
            seen[c] = t.task_id
    if check_files:
        for t in manifest.tasks:
            p = os.path.join(base_dir, t.file)
            if not os.path.isfile(p):
                raise FileNotFoundError(f"task {t.task_id}: embedding file missing: {p}")
            if t.test_file is not None and not os.path.isfile(os.path.join(base_dir, t.test_file)):
                raise FileNotFoundError(f"task {t.task_id}: test file missing: {t.test_file}")


def load_manifest(path: str | os.PathLike, check_files: bool = True) -> TaskManifest:
    """Load and strictly validate a manifest JSON file.

    Violations of the structural rules are errors, never warnings.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    try:
        tasks = tuple(
            TaskEntry(
                task_id=int(t["id"]),
                classes=tuple(int(c) for c in t["classes"]),
                file=str(t["file"]),
                test_file=str(t["test_file"]) if t.get("test_file") is not None else None,
            )
            for t in doc["tasks"]
        )
        manifest = TaskManifest(dim=int(doc["dim"]), seed=int(doc["seed"]), tasks=tasks)
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: malformed manifest: {exc}") from exc
    manifest = TaskManifest(
        dim=manifest.dim,
        seed=manifest.seed,
        tasks=tuple(sorted(manifest.tasks, key=lambda t: t.task_id)),
    )
    _validate_manifest(manifest, os.path.dirname(os.path.abspath(path)), check_files=check_files)
    return manifest


def save_manifest(manifest: TaskManifest, path: str | os.PathLike) -> None:
    doc = {
        "dim": manifest.dim,
        "seed": manifest.seed,
        "tasks": [
            {
                "id": t.task_id,
                "classes": list(t.classes),
                "file": t.file,
                **({"test_file": t.test_file} if t.test_file is not None else {}),
            }
            for t in manifest.tasks
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_task_arrays(manifest: TaskManifest, task: TaskEntry, base_dir: str, split: str = "train") -> tuple[np.ndarray, np.ndarray]:
    """Load one task's records and verify they cover exactly the declared classes."""
    if split == "train":
        rel = task.file
    elif split == "test":
        if task.test_file is None:
            raise ManifestError(f"task {task.task_id} declares no test_file")
        rel = task.test_file
    else:
        raise ValueError(f"unknown split {split!r}")
    dim, labels, vectors = read_embedding_arrays(os.path.join(base_dir, rel))
    if dim != manifest.dim:
        raise FormatError(f"{rel}: file dim {dim} != manifest dim {manifest.dim}")
    found = set(int(c) for c in np.unique(labels))
    declared = set(task.classes)
    if found != declared:
        raise ManifestError(
            f"{rel}: classes in file {sorted(found)} do not match task {task.task_id} declaration {sorted(declared)}"
        )
    return labels, vectors


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a Gaussian-cluster stream with controllable similarity.

    ``similarity_pairs`` lists (anchor, follower) class pairs; the follower's
    center is re-placed within ``within_std`` of the anchor's so the two
    clusters overlap. Pairs are applied in list order, so a class named as
    follower twice keeps the last placement.
    """

    num_classes: int
    dim: int
    per_class_samples: int
    center_scale: float = 10.0
    within_std: float = 1.0
    similarity_pairs: tuple[tuple[int, int], ...] = ()
    seed: int = 0
    num_tasks: int = 1
    test_per_class: int = 0

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.per_class_samples < 1:
            raise ValueError("per_class_samples must be >= 1")
        if self.test_per_class < 0:
            raise ValueError("test_per_class must be >= 0")
        if self.num_tasks < 1 or self.num_tasks > self.num_classes:
            raise ValueError("num_tasks must be in 1..num_classes")
        if self.within_std <= 0:
            raise ValueError("within_std must be positive")
        if self.center_scale <= 0:
            raise ValueError("center_scale must be positive")
        for a, b in self.similarity_pairs:
            if not (0 <= a < self.num_classes and 0 <= b < self.num_classes):
                raise ValueError(f"similarity pair ({a},{b}) references an unknown class")
            if a == b:
                raise ValueError(f"similarity pair ({a},{b}) must name two distinct classes")


def _task_partition(num_classes: int, num_tasks: int) -> list[list[int]]:
    base, extra = divmod(num_classes, num_tasks)
    out, start = [], 0
    for t in range(num_tasks):
        size = base + (1 if t < extra else 0)
        out.append(list(range(start, start + size)))
        start += size
    return out


def _place_centers(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    raw = rng.standard_normal((spec.num_classes, spec.dim))
    centers = spec.center_scale * raw / np.linalg.norm(raw, axis=1, keepdims=True)
    for a, b in spec.similarity_pairs:
        u = rng.standard_normal(spec.dim)
        u /= np.linalg.norm(u)
        centers[b] = centers[a] + 0.4 * spec.within_std * u
    return centers


def synthetic_centers(spec: SyntheticSpec) -> np.ndarray:
    """Class centers for a spec: uniform on the sphere, then pair overlap applied."""
    return _place_centers(spec, np.random.default_rng(spec.seed))


def generate_synthetic(spec: SyntheticSpec, out_dir: str | os.PathLike) -> TaskManifest:
    """Generate a synthetic task stream under ``out_dir``.

    Writes one GDE1 file per task (plus a test split when
    ``test_per_class > 0``) and ``manifest.json``. Identical specs produce
    bit-identical files: a single seeded generator drives center placement,
    pair displacement, then per-class sampling in ascending class order.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    centers = _place_centers(spec, rng)

    n_total = spec.per_class_samples + spec.test_per_class
    train: dict[int, np.ndarray] = {}
    test: dict[int, np.ndarray] = {}
    for c in range(spec.num_classes):
        draws = centers[c] + spec.within_std * rng.standard_normal((n_total, spec.dim))
        train[c] = draws[: spec.per_class_samples]
        test[c] = draws[spec.per_class_samples:]

    entries = []
    for t, classes in enumerate(_task_partition(spec.num_classes, spec.num_tasks)):
        fname = f"task_{t:03d}.gde1"
        labels = np.repeat(classes, spec.per_class_samples)
        vectors = np.concatenate([train[c] for c in classes])
        write_embedding_arrays(os.path.join(out_dir, fname), spec.dim, labels, vectors)
        test_name = None
        if spec.test_per_class > 0:
            test_name = f"task_{t:03d}_test.gde1"
            tl = np.repeat(classes, spec.test_per_class)
            tv = np.concatenate([test[c] for c in classes])
            write_embedding_arrays(os.path.join(out_dir, test_name), spec.dim, tl, tv)
        entries.append(TaskEntry(task_id=t, classes=tuple(classes), file=fname, test_file=test_name))

    manifest = TaskManifest(dim=spec.dim, seed=spec.seed, tasks=tuple(entries))
    save_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest
