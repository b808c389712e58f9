"""End-to-end orchestration: configuration, model state, training on a task
stream, two-stage prediction, and on-disk persistence.

Training a task runs the full chain: expand the samples through the frozen
random projection, compute per-class statistics, place the new classes
into groups, fold each group's new rows into its running ridge sums, stash
per-class reservoir rows, re-select each touched group's ridge strength on
its reservoir, and rebuild the group router over the grown centroid
registry. Groups untouched by a task keep their sums bit-identical; that
isolation is what shields old groups from new classes.

Prediction is two-stage: the router picks a group from the sample's
centroid-distance profile, then that group's classifier picks a class. A
joint mode that takes the argmax across every group's scores is available
as an experimental flag.

State persists as a directory: one JSON file for scalars and maps, plus
one flat matrix file per array. Matrix files use a fixed binary layout
(magic "GDM1", u32 version, u64 rows, u64 cols, row-major f64,
little-endian) so other tools can read them.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BadMagicError, FormatError, NonFiniteError, StateError, TruncatedError
from .grouping import (
    GROUP_POLICIES,
    METRICS,
    ClassStats,
    GroupTable,
    assign_task_classes,
    compute_class_stats,
)
from .groupid import CentroidRegistry, GroupKNN, Reservoir, VOTES
from .projection import ACTIVATIONS, RandomProjection, init_projection
from .ridge import LAMBDA_POOL, RidgeGroup

GDM1_MAGIC = b"GDM1"
GDM1_VERSION = 1
_GDM1_HEADER = struct.Struct("<4sIQQ")

STATE_VERSION = 1

CENTROID_SPACES = ("projected", "raw")


def write_matrix(path, arr: np.ndarray) -> None:
    """Write a 2-D float64 matrix in the GDM1 layout."""
    arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError(f"GDM1 holds 2-D matrices, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"refusing to write non-finite values to {path}")
    with open(path, "wb") as f:
        f.write(_GDM1_HEADER.pack(GDM1_MAGIC, GDM1_VERSION, arr.shape[0], arr.shape[1]))
        f.write(arr.astype("<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    """Read a GDM1 matrix, checking magic, version, size, and finiteness."""
    with open(path, "rb") as f:
        head = f.read(_GDM1_HEADER.size)
        if len(head) < _GDM1_HEADER.size:
            raise TruncatedError(f"{path}: header truncated")
        magic, version, rows, cols = _GDM1_HEADER.unpack(head)
        if magic != GDM1_MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if version != GDM1_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        body = f.read(rows * cols * 8)
        if len(body) < rows * cols * 8:
            raise TruncatedError(f"{path}: expected {rows}x{cols} f64 values")
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after matrix body")
    arr = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{path}: non-finite values in matrix body")
    return arr


@dataclass(frozen=True)
class GddsgConfig:
    """Every tunable knob of the engine, all defaulted to the reference
    settings. ``single_group`` disables grouping entirely (every class lands
    in group 0, similarity ignored) and exists for ablation runs."""

    proj_dim: int = 1000
    seed: int = 0
    activation: str = "relu"
    metric: str = "euclidean"
    policy: str = "maxdist"
    lambda_pool: tuple[float, ...] = LAMBDA_POOL
    reservoir_cap: int = 20
    k_neighbors: int = 11
    vote: str = "distance_weighted"
    joint_argmax: bool = False
    single_group: bool = False
    centroid_space: str = "projected"

    def __post_init__(self):
        if self.proj_dim < 1:
            raise ValueError(f"proj_dim must be >= 1, got {self.proj_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.policy not in GROUP_POLICIES:
            raise ValueError(f"policy must be one of {GROUP_POLICIES}, got {self.policy!r}")
        pool = tuple(float(l) for l in self.lambda_pool)
        if not pool or any(l <= 0 for l in pool):
            raise ValueError("lambda_pool must be nonempty with positive entries")
        object.__setattr__(self, "lambda_pool", pool)
        if self.reservoir_cap < 1:
            raise ValueError(f"reservoir_cap must be >= 1, got {self.reservoir_cap}")
        if self.k_neighbors < 1 or self.k_neighbors % 2 == 0:
            raise ValueError(
                f"k_neighbors must be a positive odd integer, got {self.k_neighbors}"
            )
        if self.vote not in VOTES:
            raise ValueError(f"vote must be one of {VOTES}, got {self.vote!r}")
        if self.centroid_space not in CENTROID_SPACES:
            raise ValueError(f"centroid_space must be one of {CENTROID_SPACES}, got {self.centroid_space!r}")

    def to_json_dict(self) -> dict:
        return {
            "proj_dim": self.proj_dim,
            "seed": self.seed,
            "activation": self.activation,
            "metric": self.metric,
            "policy": self.policy,
            "lambda_pool": list(self.lambda_pool),
            "reservoir_cap": self.reservoir_cap,
            "k_neighbors": self.k_neighbors,
            "vote": self.vote,
            "joint_argmax": self.joint_argmax,
            "single_group": self.single_group,
            "centroid_space": self.centroid_space,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "GddsgConfig":
        return GddsgConfig(
            proj_dim=int(d["proj_dim"]),
            seed=int(d["seed"]),
            activation=str(d["activation"]),
            metric=str(d["metric"]),
            policy=str(d["policy"]),
            lambda_pool=tuple(float(l) for l in d["lambda_pool"]),
            reservoir_cap=int(d["reservoir_cap"]),
            k_neighbors=int(d["k_neighbors"]),
            vote=str(d["vote"]),
            joint_argmax=bool(d["joint_argmax"]),
            single_group=bool(d["single_group"]),
            centroid_space=str(d["centroid_space"]),
        )


@dataclass
class GddsgState:
    """Everything the engine knows after some number of tasks."""

    config: GddsgConfig
    projection: RandomProjection
    table: GroupTable = field(default_factory=GroupTable)
    class_stats: dict[int, ClassStats] = field(default_factory=dict)
    registry: CentroidRegistry = field(default_factory=CentroidRegistry)
    models: dict[int, RidgeGroup] = field(default_factory=dict)
    identifier: GroupKNN | None = None
    reservoir: Reservoir | None = None
    tasks_seen: int = 0

    def check_invariants(self) -> None:
        """Every class is fully housed: stats, registry entry, reservoir rows,
        and a column in exactly one group's classifier."""
        self.table.check_consistent()
        classes = set(self.table.group_of)
        if set(self.class_stats) != classes:
            raise StateError("class_stats out of sync with group table")
        if set(self.registry.class_ids()) != classes:
            raise StateError("registry out of sync with group table")
        if self.reservoir is None or set(self.reservoir.class_ids()) != classes:
            raise StateError("reservoir out of sync with group table")
        if set(self.models) != set(self.table.members):
            raise StateError("models out of sync with group table")
        housed: list[int] = []
        for gid, model in self.models.items():
            if sorted(model.class_columns) != sorted(self.table.members[gid]):
                raise StateError(f"group {gid} columns disagree with member list")
            housed.extend(model.class_columns)
        if len(housed) != len(set(housed)) or set(housed) != classes:
            raise StateError("classes are not housed in exactly one group model")


def create_state(config: GddsgConfig, input_dim: int) -> GddsgState:
    proj = init_projection(input_dim, config.proj_dim, config.seed, config.activation)
    return GddsgState(
        config=config,
        projection=proj,
        reservoir=Reservoir(cap=config.reservoir_cap, seed=config.seed),
    )


def _calibration_rows(state: GddsgState, gid: int) -> tuple[np.ndarray, np.ndarray]:
    ids = sorted(state.table.members[gid])
    rows = np.vstack([state.reservoir.rows_for(c) for c in ids])
    labels = np.concatenate(
        [np.full(state.reservoir.rows_for(c).shape[0], c, dtype=np.int64) for c in ids]
    )
    return rows, labels


def _refresh_identifier(state: GddsgState) -> None:
    rows, labels = state.reservoir.stacked()
    meta = state.registry.meta_features(rows, state.config.metric)
    groups = np.asarray([state.table.group_of[int(c)] for c in labels], dtype=np.int64)
    ident = GroupKNN(k=state.config.k_neighbors, vote=state.config.vote)
    ident.fit(meta, groups)
    state.identifier = ident


def train_task(
    state: GddsgState, class_ids, labels: np.ndarray, vectors: np.ndarray, threads: int = 1
) -> GddsgState:
    """Fold one task (all samples of a set of brand-new classes) into the
    state. Mutates and returns ``state``. Groups are independent, so their
    updates may run on ``threads`` workers; results are identical either
    way because each group's arithmetic stays sequential."""
    class_ids = sorted(int(c) for c in class_ids)
    if len(set(class_ids)) != len(class_ids):
        raise ValueError("duplicate class ids in task")
    for c in class_ids:
        if c in state.table.group_of:
            raise ValueError(f"class {c} was already trained")
    labels = np.asarray(labels, dtype=np.int64)
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != labels.shape[0]:
        raise ValueError("vectors must be N x dim with one label per row")
    present = set(int(c) for c in np.unique(labels))
    if present != set(class_ids):
        raise ValueError(f"task declares classes {class_ids} but records cover {sorted(present)}")

    projected = state.projection.expand(vectors)

    new_stats: list[ClassStats] = []
    proj_rows: dict[int, np.ndarray] = {}
    for c in class_ids:
        mask = labels == c
        proj_rows[c] = projected[mask]
        space_rows = proj_rows[c] if state.config.centroid_space == "projected" else vectors[mask]
        new_stats.append(compute_class_stats(c, space_rows, state.config.metric))

    if state.config.single_group:
        for s in new_stats:
            state.table.add(s.class_id, 0)
        touched = {0}
    else:
        _, assignments = assign_task_classes(
            state.table, state.class_stats, new_stats, state.config.policy, state.config.metric
        )
        touched = {gid for _, gid in assignments}
    for s in new_stats:
        state.class_stats[s.class_id] = s

    for c in class_ids:
        state.registry.add(c, proj_rows[c].mean(axis=0))
        state.reservoir.add_class(c, proj_rows[c])

    for gid in sorted(touched):
        if gid not in state.models:
            state.models[gid] = RidgeGroup(state.config.proj_dim)

    def update_group(gid: int) -> None:
        model = state.models[gid]
        group_new = [c for c in class_ids if state.table.group_of[c] == gid]
        model.register_classes(group_new)
        mask = np.isin(labels, group_new)
        model.accumulate(projected[mask], labels[mask])
        calib_rows, calib_labels = _calibration_rows(state, gid)
        model.select_lambda(calib_rows, calib_labels, state.config.lambda_pool)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(update_group, sorted(touched)))
    else:
        for gid in sorted(touched):
            update_group(gid)

    _refresh_identifier(state)
    state.tasks_seen += 1
    return state


def _sorted_columns(model: RidgeGroup) -> tuple[np.ndarray, np.ndarray]:
    cols = np.asarray(model.class_columns, dtype=np.int64)
    order = np.argsort(cols)
    return cols[order], order


def predict_batch(state: GddsgState, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class and group ids for each row of raw embeddings."""
    if state.tasks_seen < 1 or state.identifier is None:
        raise StateError("no tasks trained yet")
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim == 1:
        vectors = vectors[None, :]
    h = state.projection.expand(vectors)

    classes = np.empty(h.shape[0], dtype=np.int64)
    if state.config.joint_argmax:
        # experimental: flat argmax over every group's score columns
        all_cols, all_scores = [], []
        for gid in sorted(state.models):
            model = state.models[gid]
            cols, order = _sorted_columns(model)
            all_cols.append(cols)
            all_scores.append(model.scores(h)[:, order])
        cols = np.concatenate(all_cols)
        scores = np.hstack(all_scores)
        merge = np.argsort(cols)
        cols, scores = cols[merge], scores[:, merge]
        classes = cols[np.argmax(scores, axis=1)]
        groups = np.asarray([state.table.group_of[int(c)] for c in classes], dtype=np.int64)
        return classes, groups

    meta = state.registry.meta_features(h, state.config.metric)
    groups = state.identifier.predict(meta)
    if groups.ndim == 0:
        groups = groups[None]
    for gid in np.unique(groups):
        mask = groups == gid
        model = state.models[int(gid)]
        cols, order = _sorted_columns(model)
        # ascending-id columns make argmax's first-max rule the smallest-id tie-break
        scores = model.scores(h[mask])[:, order]
        classes[mask] = cols[np.argmax(scores, axis=1)]
    return classes, groups


def predict(state: GddsgState, x: np.ndarray) -> tuple[int, int, dict[int, float]]:
    """Two-stage prediction for a single raw embedding: the routed group,
    the argmax class within it, and that group's per-class scores."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single vector, got shape {x.shape}")
    classes, groups = predict_batch(state, x[None, :])
    gid = int(groups[0])
    model = state.models[int(state.table.group_of[int(classes[0])])] if state.config.joint_argmax else state.models[gid]
    h = state.projection.expand(x)
    cols, order = _sorted_columns(model)
    scores = model.scores(h)[0][order]
    return int(classes[0]), gid, {int(c): float(s) for c, s in zip(cols, scores)}


def predict_group(state: GddsgState, x: np.ndarray) -> int:
    """First stage only: which group the router sends this embedding to."""
    if state.tasks_seen < 1 or state.identifier is None:
        raise StateError("no tasks trained yet")
    h = state.projection.expand(np.asarray(x, dtype=np.float64))
    meta = state.registry.meta_features(h, state.config.metric)
    return int(state.identifier.predict(meta))


def accuracy_by_class(state: GddsgState, labels: np.ndarray, vectors: np.ndarray) -> dict[int, float]:
    """Fraction of correct predictions per true class."""
    labels = np.asarray(labels, dtype=np.int64)
    pred, _ = predict_batch(state, vectors)
    out: dict[int, float] = {}
    for c in np.unique(labels):
        mask = labels == c
        out[int(c)] = float(np.mean(pred[mask] == c))
    return out


def build_meta_dataset(state: GddsgState) -> tuple[np.ndarray, np.ndarray]:
    """The router's training view: meta-feature rows and group labels."""
    if state.reservoir is None or not state.reservoir.class_ids():
        raise StateError("no reservoir rows yet")
    rows, labels = state.reservoir.stacked()
    meta = state.registry.meta_features(rows, state.config.metric)
    groups = np.asarray([state.table.group_of[int(c)] for c in labels], dtype=np.int64)
    return meta, groups


def save_state(state: GddsgState, out_dir) -> None:
    """Persist the state to a directory, matrices bit-exactly."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # arrival order; load_state re-adds in list order, preserving it
    class_ids = state.registry.class_ids()

    write_matrix(out / "projection.gdm1", state.projection.weights)
    if class_ids:
        write_matrix(
            out / "stats_centroids.gdm1",
            np.stack([state.class_stats[c].centroid for c in class_ids]),
        )
        write_matrix(
            out / "registry_centroids.gdm1",
            np.stack([state.registry.centroid(c) for c in class_ids]),
        )
        write_matrix(
            out / "reservoir.gdm1",
            np.vstack([state.reservoir.rows_for(c) for c in class_ids]),
        )
    for gid, model in state.models.items():
        write_matrix(out / f"group_{gid}_gram.gdm1", model.gram)
        write_matrix(out / f"group_{gid}_targets.gdm1", model.targets)

    doc = {
        "format_version": STATE_VERSION,
        "config": state.config.to_json_dict(),
        "input_dim": state.projection.input_dim,
        "tasks_seen": state.tasks_seen,
        "class_ids": class_ids,
        "group_of": {str(c): state.table.group_of[c] for c in class_ids},
        "next_group_id": state.table.next_group_id,
        "members_order": {str(g): state.table.members[g] for g in sorted(state.table.members)},
        "stats": {
            str(c): {"mean_radius": state.class_stats[c].mean_radius, "count": state.class_stats[c].count}
            for c in class_ids
        },
        "reservoir_counts": {str(c): int(state.reservoir.rows_for(c).shape[0]) for c in class_ids},
        "groups": {
            str(g): {
                "lam": state.models[g].lam,
                "class_columns": state.models[g].class_columns,
                "sample_count": state.models[g].sample_count,
            }
            for g in sorted(state.models)
        },
    }
    with open(out / "state.json", "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_state(in_dir) -> GddsgState:
    """Rebuild a state saved by save_state; the router is refit (its fit is
    deterministic, so predictions match the saved model's)."""
    src = Path(in_dir)
    state_path = src / "state.json"
    if not state_path.exists():
        raise StateError(f"{state_path} not found")
    with open(state_path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format_version") != STATE_VERSION:
        raise FormatError(f"unsupported state version {doc.get('format_version')}")

    config = GddsgConfig.from_json_dict(doc["config"])
    weights = read_matrix(src / "projection.gdm1")
    input_dim = int(doc["input_dim"])
    if weights.shape != (input_dim, config.proj_dim):
        raise FormatError(f"projection matrix shape {weights.shape} does not match config")
    proj = RandomProjection(
        input_dim=input_dim,
        expanded_dim=config.proj_dim,
        activation=config.activation,
        seed=config.seed,
        weights=weights,
    )
    state = GddsgState(config=config, projection=proj, reservoir=Reservoir(config.reservoir_cap, config.seed))
    state.tasks_seen = int(doc["tasks_seen"])

    class_ids = [int(c) for c in doc["class_ids"]]
    for g_str, member_list in sorted(doc["members_order"].items(), key=lambda kv: int(kv[0])):
        for c in member_list:
            state.table.add(int(c), int(g_str))
    state.table.next_group_id = int(doc["next_group_id"])
    for c in class_ids:
        if int(doc["group_of"][str(c)]) != state.table.group_of[c]:
            raise FormatError("group_of and members_order disagree")

    if class_ids:
        stats_cent = read_matrix(src / "stats_centroids.gdm1")
        reg_cent = read_matrix(src / "registry_centroids.gdm1")
        res_rows = read_matrix(src / "reservoir.gdm1")
        if stats_cent.shape[0] != len(class_ids) or reg_cent.shape[0] != len(class_ids):
            raise FormatError("centroid matrix row count does not match class list")
        offset = 0
        for k, c in enumerate(class_ids):
            meta = doc["stats"][str(c)]
            state.class_stats[c] = ClassStats(
                class_id=c,
                centroid=stats_cent[k],
                mean_radius=float(meta["mean_radius"]),
                count=int(meta["count"]),
            )
            state.registry.add(c, reg_cent[k])
            n = int(doc["reservoir_counts"][str(c)])
            if offset + n > res_rows.shape[0]:
                raise FormatError("reservoir matrix shorter than recorded counts")
            state.reservoir._rows[c] = res_rows[offset : offset + n].copy()
            offset += n
        if offset != res_rows.shape[0]:
            raise FormatError("reservoir matrix longer than recorded counts")

    for g_str, meta in doc["groups"].items():
        gid = int(g_str)
        model = RidgeGroup(config.proj_dim)
        model.gram = read_matrix(src / f"group_{gid}_gram.gdm1")
        model.targets = read_matrix(src / f"group_{gid}_targets.gdm1")
        if model.gram.shape != (config.proj_dim, config.proj_dim):
            raise FormatError(f"group {gid} gram has shape {model.gram.shape}")
        model.class_columns = [int(c) for c in meta["class_columns"]]
        if model.targets.shape[1] != len(model.class_columns):
            raise FormatError(f"group {gid} targets column count mismatch")
        model.sample_count = int(meta["sample_count"])
        model.lam = None if meta["lam"] is None else float(meta["lam"])
        state.models[gid] = model

    if state.tasks_seen > 0:
        _refresh_identifier(state)
        state.check_invariants()
    return state


def clone_config(config: GddsgConfig, **overrides) -> GddsgConfig:
    return replace(config, **overrides)


@dataclass(frozen=True)
class TaskData:
    """One task's training arrays plus its held-out split."""

    class_ids: tuple[int, ...]
    labels: np.ndarray
    vectors: np.ndarray
    test_labels: np.ndarray | None = None
    test_vectors: np.ndarray | None = None


@dataclass
class StreamResult:
    state: GddsgState
    acc_by_task: list[dict[int, float]]
    group_counts: list[int]

    def curve(self) -> np.ndarray:
        """Mean per-class accuracy (percent) over seen classes, per task."""
        return np.asarray([100.0 * float(np.mean(list(a.values()))) for a in self.acc_by_task])


def run_stream(config: GddsgConfig, tasks: list[TaskData], threads: int = 1) -> StreamResult:
    """Train tasks in order, scoring all seen classes on the pooled held-out
    splits after each task."""
    if not tasks:
        raise ValueError("need at least one task")
    state = create_state(config, input_dim=int(np.asarray(tasks[0].vectors).shape[1]))
    acc_by_task: list[dict[int, float]] = []
    group_counts: list[int] = []
    test_labels: list[np.ndarray] = []
    test_vectors: list[np.ndarray] = []
    for task in tasks:
        train_task(state, task.class_ids, task.labels, task.vectors, threads=threads)
        group_counts.append(state.table.num_groups())
        if task.test_labels is not None:
            test_labels.append(np.asarray(task.test_labels, dtype=np.int64))
            test_vectors.append(np.asarray(task.test_vectors, dtype=np.float64))
        if test_labels:
            acc_by_task.append(
                accuracy_by_class(state, np.concatenate(test_labels), np.vstack(test_vectors))
            )
        else:
            acc_by_task.append({})
    return StreamResult(state=state, acc_by_task=acc_by_task, group_counts=group_counts)
