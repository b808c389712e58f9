"""Walk through class grouping: stats, threshold test, coloring, assignment."""

import numpy as np

from gddsg import (
    GroupTable,
    adaptive_threshold,
    are_dissimilar,
    assign_task_classes,
    build_simgraph,
    compute_class_stats,
    welsh_powell,
    welsh_powell_bound,
)


def blob(rng, center, n=60, std=1.0):
    return center + std * rng.standard_normal((n, len(center)))


def main():
    rng = np.random.default_rng(3)

    # task 0: classes 0 and 1 overlap on purpose, class 2 stands apart
    raw = {
        0: blob(rng, np.array([0.0, 0.0])),
        1: blob(rng, np.array([0.8, 0.0])),
        2: blob(rng, np.array([25.0, 0.0])),
    }
    stats = {c: compute_class_stats(c, rows) for c, rows in raw.items()}
    for c, s in stats.items():
        print(f"class {c}: centroid={np.round(s.centroid, 2)} mean_radius={s.mean_radius:.3f}")

    for i, j in [(0, 1), (0, 2), (1, 2)]:
        eta = adaptive_threshold(stats[i], stats[j])
        d = float(np.linalg.norm(stats[i].centroid - stats[j].centroid))
        verdict = "dissimilar" if are_dissimilar(stats[i], stats[j]) else "similar"
        print(f"pair ({i},{j}): centroid distance {d:.3f} vs threshold {eta:.3f} -> {verdict}")

    g = build_simgraph(list(stats.values()))
    coloring = welsh_powell(g)
    print(f"simgraph edges: {sorted(g.edges)}")
    print(f"coloring: {coloring.color_of} using {coloring.num_colors} colors "
          f"(greedy bound {welsh_powell_bound(g)})")

    table = GroupTable()
    assign_task_classes(table, {}, list(stats.values()))
    print(f"after task 0: groups {dict(table.members)}")

    # task 1: class 3 conflicts with class 2, class 4 is far from everything
    new_raw = {
        3: blob(rng, np.array([25.5, 0.3])),
        4: blob(rng, np.array([0.0, 40.0])),
    }
    new_stats = [compute_class_stats(c, rows) for c, rows in new_raw.items()]
    assign_task_classes(table, stats, new_stats)
    print(f"after task 1: groups {dict(table.members)}")
    print("class 3 cannot share a group with class 2; class 4 joins the "
          "first group whose members are all far away")


if __name__ == "__main__":
    main()
