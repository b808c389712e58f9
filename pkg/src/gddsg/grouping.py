"""Class statistics, similarity graphs, greedy coloring, and group assignment.

Two classes are compared through an adaptive threshold: each class carries
the mean distance from its samples to its own centroid (``mean_radius``),
and the pair's threshold is the larger of the two radii. The pair counts as
dissimilar exactly when the centroid distance strictly exceeds that
threshold. Classes judged similar are connected by an edge in an undirected
similarity graph; a greedy coloring of that graph (highest degree first)
splits mutually similar classes into separate groups, because each color
class is an independent set.

Group assignment is dynamic: each incoming class first tries to join an
existing group whose members are all dissimilar to it, and the remainder of
a task is colored as a fresh graph. Once assigned, classes never move;
their statistics are immutable because a class appears in exactly one task.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRICS = ("euclidean", "cosine")


def distance(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> float:
    if metric == "euclidean":
        return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))
    if metric == "cosine":
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        if denom == 0.0:
            return 1.0
        return float(1.0 - float(a @ b) / denom)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class ClassStats:
    """Centroid and mean within-class distance of one class, in a fixed space."""

    class_id: int
    centroid: np.ndarray
    mean_radius: float
    count: int


def compute_class_stats(class_id: int, samples: np.ndarray, metric: str = "euclidean") -> ClassStats:
    """Centroid (arithmetic mean) and mean sample-to-centroid distance."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValueError("need at least one sample, shaped N x dim")
    centroid = samples.mean(axis=0)
    if metric == "euclidean":
        radii = np.linalg.norm(samples - centroid, axis=1)
        mean_radius = float(radii.mean())
    else:
        mean_radius = float(np.mean([distance(s, centroid, metric) for s in samples]))
    return ClassStats(class_id=class_id, centroid=centroid, mean_radius=mean_radius, count=samples.shape[0])


def adaptive_threshold(a: ClassStats, b: ClassStats) -> float:
    """Pairwise threshold: the larger of the two mean radii."""
    if a.centroid.shape != b.centroid.shape:
        raise ValueError(f"stats live in different spaces: {a.centroid.shape} vs {b.centroid.shape}")
    return max(a.mean_radius, b.mean_radius)


def are_dissimilar(a: ClassStats, b: ClassStats, metric: str = "euclidean") -> bool:
    """True iff the centroid distance strictly exceeds the adaptive threshold."""
    return distance(a.centroid, b.centroid, metric) > adaptive_threshold(a, b)


@dataclass(frozen=True)
class SimGraph:
    """Undirected graph over class ids; an edge marks a similar pair."""

    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if i > j:
                raise ValueError(f"edge ({i},{j}) not stored canonically (smaller id first)")
            if i not in self.vertices or j not in self.vertices:
                raise ValueError(f"edge ({i},{j}) references a missing vertex")

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def neighbors(self, v: int) -> set[int]:
        return {j if i == v else i for i, j in self.edges if v in (i, j)}

    def max_degree(self) -> int:
        if not self.vertices:
            return 0
        return max(self.degree(v) for v in self.vertices)

    def to_json_dict(self) -> dict:
        return {
            "vertices": sorted(self.vertices),
            "edges": sorted(list(e) for e in self.edges),
        }


def make_simgraph(vertices, edges) -> SimGraph:
    """Build a SimGraph from any iterables, canonicalizing edge order."""
    vs = frozenset(int(v) for v in vertices)
    es = frozenset((min(int(i), int(j)), max(int(i), int(j))) for i, j in edges)
    return SimGraph(vertices=vs, edges=es)


def build_simgraph(stats: list[ClassStats], metric: str = "euclidean") -> SimGraph:
    """Vertex per class; edge wherever the dissimilarity test fails."""
    ids = [s.class_id for s in stats]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate class ids in stats")
    edges = []
    for i in range(len(stats)):
        for j in range(i + 1, len(stats)):
            if not are_dissimilar(stats[i], stats[j], metric):
                a, b = stats[i].class_id, stats[j].class_id
                edges.append((min(a, b), max(a, b)))
    return SimGraph(vertices=frozenset(ids), edges=frozenset(edges))


@dataclass(frozen=True)
class Coloring:
    color_of: dict[int, int]
    num_colors: int


def _degree_order(g: SimGraph) -> list[int]:
    # descending degree, ties broken by ascending vertex id
    return sorted(g.vertices, key=lambda v: (-g.degree(v), v))


def welsh_powell(g: SimGraph) -> Coloring:
    """Greedy proper coloring, highest degree first.

    Vertices are processed in descending degree order (ascending id on
    ties); each takes the smallest color index not used by an
    already-colored neighbor. Uses at most max_degree + 1 colors.
    """
    color_of: dict[int, int] = {}
    for v in _degree_order(g):
        taken = {color_of[u] for u in g.neighbors(v) if u in color_of}
        c = 0
        while c in taken:
            c += 1
        color_of[v] = c
    num = (max(color_of.values()) + 1) if color_of else 0
    return Coloring(color_of=color_of, num_colors=num)


def welsh_powell_bound(g: SimGraph) -> int:
    """Worst-case color count of the greedy pass: max over the degree-sorted
    sequence of min(degree + 1, position), positions counted from 1."""
    if not g.vertices:
        raise ValueError("bound undefined for the empty graph")
    order = _degree_order(g)
    return max(min(g.degree(v) + 1, i) for i, v in enumerate(order, start=1))


@dataclass
class GroupTable:
    """Mutable class-to-group assignment with per-group member lists."""

    group_of: dict[int, int] = field(default_factory=dict)
    members: dict[int, list[int]] = field(default_factory=dict)
    next_group_id: int = 0

    def num_groups(self) -> int:
        return len(self.members)

    def group_ids(self) -> list[int]:
        return sorted(self.members)

    def add(self, class_id: int, group_id: int) -> None:
        if class_id in self.group_of:
            raise ValueError(f"class {class_id} already assigned to group {self.group_of[class_id]}")
        self.group_of[class_id] = group_id
        self.members.setdefault(group_id, []).append(class_id)
        if group_id >= self.next_group_id:
            self.next_group_id = group_id + 1

    def check_consistent(self) -> None:
        flat = [(c, g) for g, cs in self.members.items() for c in cs]
        if len(flat) != len(self.group_of):
            raise ValueError("members and group_of disagree on assignment count")
        for c, g in flat:
            if self.group_of.get(c) != g:
                raise ValueError(f"class {c} listed under group {g} but mapped to {self.group_of.get(c)}")


GROUP_POLICIES = ("maxdist", "eq5")


def _mean_distance_to_members(
    cand: ClassStats, member_ids: list[int], stats: dict[int, ClassStats], metric: str
) -> float:
    return float(np.mean([distance(cand.centroid, stats[m].centroid, metric) for m in member_ids]))


def assign_task_classes(
    table: GroupTable,
    existing_stats: dict[int, ClassStats],
    new_stats: list[ClassStats],
    policy: str = "maxdist",
    metric: str = "euclidean",
) -> tuple[GroupTable, list[tuple[int, int]]]:
    """Assign one task's classes to groups, in ascending class id.

    A class may join any group all of whose current members it is
    dissimilar to, members placed earlier in this same call included. Among
    eligible groups the "maxdist" policy picks the one whose members are on
    average farthest from the class (the "eq5" policy picks the closest);
    remaining ties go to the smallest group id. Classes with no eligible
    group are collected, their similarity graph is colored, and each color
    class becomes a fresh group.
    """
    if policy not in GROUP_POLICIES:
        raise ValueError(f"policy must be one of {GROUP_POLICIES}, got {policy!r}")
    for s in new_stats:
        if s.class_id in table.group_of or s.class_id in existing_stats:
            raise ValueError(f"class {s.class_id} was already assigned")

    stats = dict(existing_stats)
    for s in new_stats:
        stats[s.class_id] = s

    assignments: list[tuple[int, int]] = []
    leftovers: list[ClassStats] = []
    for cand in sorted(new_stats, key=lambda s: s.class_id):
        eligible = []
        for gid in sorted(table.members):
            ok = all(are_dissimilar(cand, stats[m], metric) for m in table.members[gid])
            if ok:
                eligible.append(gid)
        if eligible:
            scored = [(gid, _mean_distance_to_members(cand, table.members[gid], stats, metric)) for gid in eligible]
            if policy == "maxdist":
                best = max(scored, key=lambda t: (t[1], -t[0]))[0]
            else:
                best = min(scored, key=lambda t: (t[1], t[0]))[0]
            table.add(cand.class_id, best)
            assignments.append((cand.class_id, best))
        else:
            leftovers.append(cand)

    if leftovers:
        graph = build_simgraph(leftovers, metric)
        coloring = welsh_powell(graph)
        base = table.next_group_id
        for s in sorted(leftovers, key=lambda s: s.class_id):
            gid = base + coloring.color_of[s.class_id]
            table.add(s.class_id, gid)
            assignments.append((s.class_id, gid))

    return table, assignments
