"""Command-line front end.

Subcommands: ``synth`` generates a synthetic embedding stream, ``train``
runs the full training loop over a manifest and writes state plus metric
reports, ``eval`` scores a saved state on an embedding file, ``orders``
reruns training under shuffled class orders and reports the accuracy
spread, ``theory`` evaluates the closed-form expectations, and ``inspect``
summarizes a saved state.

Machine-readable results (JSON, CSV) go to stdout or files; human-oriented
text goes to stderr. Failures print a one-line JSON error object to stderr
and exit with status 2. The GDDSG_LOG environment variable (DEBUG, INFO,
WARNING, ERROR) controls log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset
from . import metrics as metrics_mod
from . import pipeline
from . import theory as theory_mod
from .errors import GddsgError
from .grouping import GROUP_POLICIES, build_simgraph

log = logging.getLogger("gddsg")


def _setup_logging() -> None:
    level_name = os.environ.get("GDDSG_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _parse_pairs(text: str | None) -> tuple[tuple[int, int], ...]:
    if not text:
        return ()
    pairs = []
    for chunk in text.split(","):
        a, sep, b = chunk.partition(":")
        if not sep:
            raise ValueError(f"similar pair {chunk!r} is not of the form a:b")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


def _parse_pool(text: str | None) -> tuple[float, ...] | None:
    if not text:
        return None
    return tuple(float(v) for v in text.split(","))


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proj-dim", type=int, default=1000)
    p.add_argument("--lambda-pool", type=str, default=None, help="comma-separated positive values")
    p.add_argument("--reservoir", type=int, default=20)
    p.add_argument("--knn", type=int, default=11)
    p.add_argument("--policy", choices=GROUP_POLICIES, default="maxdist")
    p.add_argument("--activation", choices=("relu", "identity"), default="relu")
    p.add_argument("--vote", choices=("distance_weighted", "majority"), default="distance_weighted")
    p.add_argument("--single-group", action="store_true", help="ablation: disable grouping entirely")
    p.add_argument("--threads", type=int, default=1)


def _config_from_args(args) -> pipeline.GddsgConfig:
    kwargs = dict(
        proj_dim=args.proj_dim,
        seed=args.seed,
        policy=args.policy,
        reservoir_cap=args.reservoir,
        k_neighbors=args.knn,
        activation=args.activation,
        vote=args.vote,
        single_group=args.single_group,
    )
    pool = _parse_pool(args.lambda_pool)
    if pool is not None:
        kwargs["lambda_pool"] = pool
    return pipeline.GddsgConfig(**kwargs)


def _cmd_synth(args) -> int:
    spec = dataset.SyntheticSpec(
        num_classes=args.classes,
        dim=args.dim,
        per_class_samples=args.per_class,
        center_scale=args.center_scale,
        within_std=args.within_std,
        similarity_pairs=_parse_pairs(args.similar_pairs),
        seed=args.seed,
        num_tasks=args.tasks,
        test_per_class=args.test_per_class,
    )
    dataset.generate_synthetic(spec, args.out)
    print(str(Path(args.out) / "manifest.json"))
    return 0


def _pooled_test(manifest: dataset.TaskManifest, base_dir: Path, upto: int):
    """Concatenated held-out arrays of tasks 0..upto."""
    labels, vectors = [], []
    for task in manifest.tasks[: upto + 1]:
        if task.test_file is None:
            raise ValueError(f"task {task.task_id} has no held-out split in the manifest")
        lab, vec = dataset.load_task_arrays(manifest, task, base_dir, split="test")
        labels.append(lab)
        vectors.append(vec)
    return np.concatenate(labels), np.vstack(vectors)


def _write_group_counts(path: Path, counts: list[int]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["task", "num_groups"])
        for t, n in enumerate(counts):
            w.writerow([t, n])


def _cmd_train(args) -> int:
    if args.resume is None and args.out is None:
        raise ValueError("--out is required unless resuming")
    out = Path(args.resume) if args.resume else Path(args.out)
    manifest = dataset.load_manifest(args.manifest)
    base_dir = Path(args.manifest).resolve().parent
    num_tasks = len(manifest.tasks)
    state_dir = out / "state"
    progress_path = out / "progress.json"

    start = 0
    ledger = metrics_mod.AccuracyLedger()
    group_counts: list[int] = []
    state = None
    if args.resume:
        if not progress_path.exists():
            raise ValueError(f"{progress_path} not found; nothing to resume")
        with open(progress_path, encoding="utf-8") as f:
            progress = json.load(f)
        start = int(progress["tasks_done"])
        ledger = metrics_mod.ledger_from_json_dict(progress["ledger"])
        group_counts = [int(n) for n in progress["group_counts"]]
        if start >= num_tasks:
            log.info("run already complete; nothing to do")
            with open(out / "metrics.json", encoding="utf-8") as f:
                _emit(json.load(f))
            return 0
        state = pipeline.load_state(state_dir)
    else:
        out.mkdir(parents=True, exist_ok=True)
        state = pipeline.create_state(_config_from_args(args), input_dim=manifest.dim)

    for t in range(start, num_tasks):
        task = manifest.tasks[t]
        if t >= state.tasks_seen:
            labels, vectors = dataset.load_task_arrays(manifest, task, base_dir, split="train")
            pipeline.train_task(state, task.classes, labels, vectors, threads=args.threads)
            pipeline.save_state(state, state_dir)
        # else: the state already holds this task (the run stopped between
        # the state save and the progress write); redo only the bookkeeping
        test_labels, test_vectors = _pooled_test(manifest, base_dir, t)
        accs = pipeline.accuracy_by_class(state, test_labels, test_vectors)
        ledger.record_task(t, task.classes, accs)
        group_counts.append(state.table.num_groups())
        with open(progress_path, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "tasks_done": t + 1,
                    "ledger": metrics_mod.ledger_to_json_dict(ledger),
                    "group_counts": group_counts,
                    "manifest": str(args.manifest),
                },
                f,
                indent=2,
                sort_keys=True,
            )
        log.info("task %d/%d done, %d groups", t + 1, num_tasks, group_counts[-1])

    final = num_tasks - 1
    per_task = []
    for t in range(num_tasks):
        seen = [c for c, t0 in ledger.first_task.items() if t0 <= t]
        avg = 100.0 * float(np.mean([ledger.acc[(c, t)] for c in sorted(seen)]))
        per_task.append({"task": t, "avg_acc": avg, "groups": group_counts[t]})
    report = {
        "A_N": metrics_mod.final_average_accuracy(ledger, final),
        "F_N": metrics_mod.forgetting(ledger, final),
        "per_task": per_task,
    }
    with open(out / "metrics.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_group_counts(out / "group_counts.csv", group_counts)
    _emit(report)
    return 0


def _cmd_eval(args) -> int:
    state = pipeline.load_state(args.state)
    _, labels, vectors = dataset.read_embedding_arrays(args.data)
    preds, _ = pipeline.predict_batch(state, vectors)
    per_class = pipeline.accuracy_by_class(state, labels, vectors)
    _emit(
        {
            "n": int(labels.shape[0]),
            "accuracy": float(np.mean(preds == labels)),
            "mean_class_accuracy": float(np.mean(list(per_class.values()))),
            "per_class": {str(c): a for c, a in sorted(per_class.items())},
        }
    )
    return 0


def _pool_by_class(manifest: dataset.TaskManifest, base_dir: Path, split: str):
    pools: dict[int, np.ndarray] = {}
    for task in manifest.tasks:
        if split == "test" and task.test_file is None:
            raise ValueError(f"task {task.task_id} has no held-out split in the manifest")
        labels, vectors = dataset.load_task_arrays(manifest, task, base_dir, split=split)
        for c in task.classes:
            pools[c] = vectors[labels == c]
    return pools


def shuffled_tasks(
    manifest: dataset.TaskManifest, base_dir, shuffle_seed: int
) -> list[pipeline.TaskData]:
    """Reassign classes to task slots by a seeded shuffle, keeping each
    slot's class count; sample arrays move with their class."""
    base_dir = Path(base_dir)
    train_pools = _pool_by_class(manifest, base_dir, "train")
    test_pools = _pool_by_class(manifest, base_dir, "test")
    all_ids = sorted(train_pools)
    perm = np.random.default_rng(shuffle_seed).permutation(all_ids)
    sizes = [len(t.classes) for t in manifest.tasks]
    tasks: list[pipeline.TaskData] = []
    at = 0
    for size in sizes:
        ids = sorted(int(c) for c in perm[at : at + size])
        at += size
        tasks.append(
            pipeline.TaskData(
                class_ids=tuple(ids),
                labels=np.concatenate([np.full(train_pools[c].shape[0], c, dtype=np.int64) for c in ids]),
                vectors=np.vstack([train_pools[c] for c in ids]),
                test_labels=np.concatenate([np.full(test_pools[c].shape[0], c, dtype=np.int64) for c in ids]),
                test_vectors=np.vstack([test_pools[c] for c in ids]),
            )
        )
    return tasks


def _cmd_orders(args) -> int:
    if args.orders < 2:
        raise ValueError(f"need at least 2 orders, got {args.orders}")
    manifest = dataset.load_manifest(args.manifest)
    base_dir = Path(args.manifest).resolve().parent
    config = _config_from_args(args)
    curves = []
    for r in range(args.orders):
        tasks = shuffled_tasks(manifest, base_dir, shuffle_seed=config.seed + r)
        result = pipeline.run_stream(config, tasks, threads=args.threads)
        curves.append(result.curve())
        log.info("order %d/%d done", r + 1, args.orders)
    runs = metrics_mod.OrderRunSet(np.vstack(curves))
    opd, mopd, aopd = metrics_mod.opd_metrics(runs)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "curves.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["order"] + [f"task_{t}" for t in range(runs.num_tasks)])
            for r in range(runs.num_orders):
                w.writerow([r] + [f"{v:.6f}" for v in runs.curves[r]])
    _emit({"opd": [float(v) for v in opd], "mopd": mopd, "aopd": aopd})
    return 0


def _load_w_stars(text: str) -> tuple[np.ndarray, ...]:
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as f:
            data = json.load(f)
    else:
        data = json.loads(text)
    return tuple(np.asarray(w, dtype=np.float64) for w in data)


def _cmd_theory(args) -> int:
    out: dict = {}
    if args.w is not None:
        if args.n is None or args.p is None:
            raise ValueError("--w requires --n and --p")
        params = theory_mod.TheoryParams(
            w_stars=_load_w_stars(args.w), n=args.n, p=args.p, sigma=args.sigma
        )
        out["E_F"] = theory_mod.expected_forgetting(params) if params.num_tasks >= 2 else None
        out["E_G"] = theory_mod.expected_generalization(params)
        ws = np.stack(params.w_stars)
        diffs = ws[:, None, :] - ws[None, :, :]
        out["sum_sq_distances"] = float(np.sum(diffs * diffs))
        if args.study:
            study = theory_mod.permutation_variance_study(
                params, num_samples=args.study_samples, seed=args.study_seed
            )
            out["variance"] = {
                "forgetting": study.var_forgetting,
                "generalization": study.var_generalization,
                "exhaustive": study.exhaustive,
                "table": [
                    {"perm": list(r.perm), "E_F": r.forgetting, "E_G": r.generalization}
                    for r in study.rows
                ],
            }
    if args.brooks_classes is not None:
        if args.brooks_p is None:
            raise ValueError("--brooks-classes requires --brooks-p")
        bp = theory_mod.BrooksParams(num_classes=args.brooks_classes, p_sim=args.brooks_p)
        out["brooks_probability"] = theory_mod.brooks_probability(bp)
    if not out:
        raise ValueError("nothing to compute: pass --w or --brooks-classes")
    _emit(out)
    return 0


def _cmd_inspect(args) -> int:
    state = pipeline.load_state(args.state)
    summary = {
        "tasks_seen": state.tasks_seen,
        "num_classes": len(state.table.group_of),
        "num_groups": state.table.num_groups(),
        "groups": {str(g): sorted(ms) for g, ms in state.table.members.items()},
        "lambda": {str(g): state.models[g].lam for g in sorted(state.models)},
        "config": state.config.to_json_dict(),
    }
    if args.simgraph:
        graph = build_simgraph(
            [state.class_stats[c] for c in sorted(state.class_stats)], state.config.metric
        )
        summary["simgraph"] = graph.to_json_dict()
    if args.meta_csv:
        meta, groups = pipeline.build_meta_dataset(state)
        with open(args.meta_csv, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow([f"rho_{i}" for i in range(meta.shape[1])] + ["group"])
            for row, g in zip(meta, groups):
                w.writerow([f"{v:.9g}" for v in row] + [int(g)])
    _emit(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gddsg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding stream")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--tasks", type=int, default=1)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--test-per-class", type=int, default=20)
    p.add_argument("--center-scale", type=float, default=10.0)
    p.add_argument("--within-std", type=float, default=1.0)
    p.add_argument("--similar-pairs", type=str, default=None, help="e.g. 3:7,10:11")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train over a manifest's task stream")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--resume", type=str, default=None, help="existing output dir to continue")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a saved state on an embedding file")
    p.add_argument("--state", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("orders", help="rerun training under shuffled class orders")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--orders", type=int, required=True)
    p.add_argument("--out", type=str, default=None, help="directory for the per-order curve CSV")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_orders)

    p = sub.add_parser("theory", help="evaluate the closed-form expectations")
    p.add_argument("--w", type=str, default=None, help="JSON list of vectors, or @file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--study", action="store_true", help="run the permutation study")
    p.add_argument("--study-samples", type=int, default=None)
    p.add_argument("--study-seed", type=int, default=None)
    p.add_argument("--brooks-classes", type=int, default=None)
    p.add_argument("--brooks-p", type=float, default=None)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("inspect", help="summarize a saved state")
    p.add_argument("--state", type=str, required=True)
    p.add_argument("--simgraph", action="store_true", help="include the similarity graph")
    p.add_argument("--meta-csv", type=str, default=None, help="dump the router's dataset as CSV")
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GddsgError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
