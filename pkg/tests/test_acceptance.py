"""Acceptance suite: one test per core guarantee of the engine.

Each test prints one ``ACCEPTANCE PASS/FAIL: <name>`` line on the real
stdout (outside pytest's capture) and then asserts, so a plain ``pytest``
run shows the verdict for every guarantee. Numbers in here are frozen
recipes; loosening a tolerance or shrinking a workload is a spec change,
not a test fix.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from gddsg import (
    BrooksParams,
    GddsgConfig,
    LAMBDA_POOL,
    OrderRunSet,
    Reservoir,
    RidgeGroup,
    SyntheticSpec,
    TaskData,
    TheoryParams,
    AccuracyLedger,
    brooks_probability,
    create_state,
    expected_forgetting,
    expected_generalization,
    final_average_accuracy,
    forgetting,
    generate_synthetic,
    load_task_arrays,
    make_simgraph,
    one_hot,
    opd_metrics,
    predict_group,
    read_embedding_arrays,
    run_stream,
    synthetic_centers,
    train_task,
    welsh_powell,
    welsh_powell_bound,
    write_embedding_arrays,
)
from gddsg.cli import shuffled_tasks

from helpers import (
    brute_force_chromatic,
    bundle_dataset,
    er_graph,
    forgetting_loop_oracle,
    generalization_loop_oracle,
    is_proper,
    stats_oracle,
)


@pytest.fixture
def announce(capfd):
    def _announce(name: str, ok: bool, detail: str = ""):
        with capfd.disabled():
            print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}", flush=True)
        assert ok, f"{name}: {detail}"

    return _announce


# --------------------------------------------------------------- shared data

MAIN_SPEC = SyntheticSpec(
    num_classes=100,
    dim=24,
    per_class_samples=50,
    center_scale=45.0,
    within_std=1.0,
    seed=7,
    num_tasks=10,
    test_per_class=20,
)

CONTRAST_SPEC = SyntheticSpec(
    num_classes=100,
    dim=24,
    per_class_samples=50,
    center_scale=45.0,
    within_std=1.0,
    similarity_pairs=tuple((2 * k, 2 * k + 1) for k in range(10)),
    seed=7,
    num_tasks=10,
    test_per_class=20,
)

MAIN_CONFIG = GddsgConfig(proj_dim=1000, seed=0)


def _stream_tasks(spec: SyntheticSpec, root: Path) -> list[TaskData]:
    manifest = generate_synthetic(spec, root)
    tasks = []
    for entry in manifest.tasks:
        labels, vectors = load_task_arrays(manifest, entry, root, split="train")
        t_labels, t_vectors = load_task_arrays(manifest, entry, root, split="test")
        tasks.append(
            TaskData(
                class_ids=tuple(entry.classes),
                labels=labels,
                vectors=vectors,
                test_labels=t_labels,
                test_vectors=t_vectors,
            )
        )
    return tasks


@pytest.fixture(scope="module")
def main_stream(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept_main")
    generate_synthetic(MAIN_SPEC, root)
    return root


@pytest.fixture(scope="module")
def contrast_stream(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept_contrast")
    generate_synthetic(CONTRAST_SPEC, root)
    return root


# -------------------------------------------------- incremental ridge algebra


def test_incremental_ridge_equivalence(announce):
    """Chunked running sums must equal one-shot batch sums (<= 1e-10
    relative) and the solved weights must satisfy the normal equations
    (residual <= 1e-8), over 50 random streams, within 5 seconds."""
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_gram = worst_targets = worst_resid = 0.0
    for _ in range(50):
        h = rng.standard_normal((500, 64))
        labels = rng.integers(0, 5, size=500)
        model = RidgeGroup(64)
        num_cuts = int(rng.integers(1, 8))
        cuts = np.sort(rng.choice(np.arange(1, 500), size=num_cuts, replace=False))
        for chunk_h, chunk_l in zip(np.split(h, cuts), np.split(labels, cuts)):
            model.accumulate(chunk_h, chunk_l)

        gram_b = h.T @ h
        targets_b = h.T @ one_hot(labels, model.class_columns)
        worst_gram = max(worst_gram, float(np.max(np.abs(model.gram - gram_b)) / np.max(np.abs(gram_b))))
        worst_targets = max(
            worst_targets, float(np.max(np.abs(model.targets - targets_b)) / np.max(np.abs(targets_b)))
        )
        for lam in (1e-3, 1.0):
            theta = model.solve(lam)
            resid = (model.gram + lam * np.eye(64)) @ theta - model.targets
            worst_resid = max(worst_resid, float(np.max(np.abs(resid))))
    elapsed = time.perf_counter() - t0
    ok = worst_gram <= 1e-10 and worst_targets <= 1e-10 and worst_resid <= 1e-8 and elapsed < 5.0
    announce(
        "incremental-ridge-equivalence",
        ok,
        f"gram rel {worst_gram:.3e}, targets rel {worst_targets:.3e}, residual {worst_resid:.3e}, {elapsed:.1f}s",
    )


# ----------------------------------------------------------- greedy coloring


def test_greedy_coloring_soundness(announce):
    """On 200 random graphs (n <= 50) the coloring must be proper and use at
    most the degree bound; on 500 small graphs (n <= 8) it must never beat
    the exact chromatic number. All within 30 seconds."""
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    ok = True
    detail = ""
    for _ in range(200):
        n = int(rng.integers(1, 51))
        p = float(rng.choice([0.1, 0.3, 0.7]))
        vertices, edges = er_graph(n, p, rng)
        g = make_simgraph(vertices, edges)
        col = welsh_powell(g)
        bound = welsh_powell_bound(g)
        if not (is_proper(col.color_of, g.edges) and col.num_colors <= bound <= g.max_degree() + 1):
            ok, detail = False, f"violation on n={n}, p={p}"
            break
    if ok:
        for _ in range(500):
            n = int(rng.integers(1, 9))
            vertices, edges = er_graph(n, float(rng.random()), rng)
            g = make_simgraph(vertices, edges)
            col = welsh_powell(g)
            chi = brute_force_chromatic(vertices, edges)
            if not (is_proper(col.color_of, g.edges) and col.num_colors >= chi):
                ok, detail = False, f"chromatic violation on n={n}"
                break
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 30.0
    announce("greedy-coloring-soundness", ok, detail or f"{elapsed:.1f}s")


# ----------------------------------------------- within-group dissimilarity


def test_group_dissimilarity_invariant(announce):
    """After any stream, every pair of classes sharing a group must pass the
    strict dissimilarity test, re-derived from raw data by independent
    oracle code. 10 seeds, 100 classes in 10 tasks, engineered overlaps."""
    violations = 0
    min_groups = None
    stats_drift = 0.0
    for seed in range(10):
        spec = SyntheticSpec(
            num_classes=100,
            dim=16,
            per_class_samples=30,
            center_scale=10.0,
            within_std=1.0,
            similarity_pairs=tuple((3 * k, 3 * k + 1) for k in range(15)),
            seed=seed,
            num_tasks=10,
        )
        centers = synthetic_centers(spec)
        rng = np.random.default_rng([seed, 7])
        state = create_state(GddsgConfig(proj_dim=128, seed=0), input_dim=16)
        raw_by_class = {}
        for t in range(10):
            ids = list(range(10 * t, 10 * t + 10))
            labels, rows = [], []
            for c in ids:
                draws = centers[c] + rng.standard_normal((30, 16))
                raw_by_class[c] = draws
                labels.append(np.full(30, c, dtype=np.int64))
                rows.append(draws)
            train_task(state, ids, np.concatenate(labels), np.vstack(rows))

        groups = state.table.num_groups()
        min_groups = groups if min_groups is None else min(min_groups, groups)

        # oracle stats straight from the raw samples, scalar arithmetic
        oracle_stats = {}
        for c, raw in raw_by_class.items():
            cent, rad = stats_oracle(state.projection.expand(raw))
            oracle_stats[c] = (cent, rad)
            stats_drift = max(
                stats_drift,
                float(np.max(np.abs(cent - state.class_stats[c].centroid))),
                abs(rad - state.class_stats[c].mean_radius),
            )

        for members in state.table.members.values():
            for a_pos in range(len(members)):
                for b_pos in range(a_pos + 1, len(members)):
                    ca, ra = oracle_stats[members[a_pos]]
                    cb, rb = oracle_stats[members[b_pos]]
                    dist = float(np.sqrt(np.sum((ca - cb) ** 2)))
                    if not dist > max(ra, rb):
                        violations += 1

    ok = violations == 0 and min_groups >= 2 and stats_drift < 1e-9
    announce(
        "group-dissimilarity-invariant",
        ok,
        f"{violations} violations, min groups {min_groups}, stats drift {stats_drift:.2e}",
    )


# ------------------------------------------------------ end-to-end accuracy


@pytest.mark.slow
def test_stream_accuracy_vs_batch_oracle(announce, main_stream):
    """A 100-class 10-task stream must finish within 2.0 accuracy points of
    a single batch ridge model trained on everything at once, with final
    mean class accuracy >= 95 and forgetting <= 2.0, in under 5 minutes."""
    t0 = time.perf_counter()
    tasks = _stream_tasks(MAIN_SPEC, main_stream)
    result = run_stream(MAIN_CONFIG, tasks)

    ledger = AccuracyLedger()
    for t, task in enumerate(tasks):
        ledger.record_task(t, task.class_ids, result.acc_by_task[t])
    a_n = final_average_accuracy(ledger, len(tasks) - 1)
    f_n = forgetting(ledger, len(tasks) - 1)

    # oracle: one batch ridge over every training sample, same expansion,
    # same strength selection procedure on the same retained calibration rows
    state = result.state
    all_labels = np.concatenate([t.labels for t in tasks])
    h = state.projection.expand(np.vstack([t.vectors for t in tasks]))
    oracle = RidgeGroup(MAIN_CONFIG.proj_dim)
    oracle.accumulate(h, all_labels)
    res = Reservoir(cap=MAIN_CONFIG.reservoir_cap, seed=MAIN_CONFIG.seed)
    for c in sorted(set(int(v) for v in all_labels)):
        res.add_class(c, h[all_labels == c])
    rows, row_labels = res.stacked()
    oracle.select_lambda(rows, row_labels, LAMBDA_POOL)

    test_labels = np.concatenate([t.test_labels for t in tasks])
    test_h = state.projection.expand(np.vstack([t.test_vectors for t in tasks]))
    preds = oracle.predict(test_h)
    per_class = [float(np.mean(preds[test_labels == c] == c)) for c in np.unique(test_labels)]
    a_n_oracle = 100.0 * float(np.mean(per_class))

    elapsed = time.perf_counter() - t0
    ok = abs(a_n - a_n_oracle) <= 2.0 and a_n >= 95.0 and f_n <= 2.0 and elapsed < 300.0
    announce(
        "stream-accuracy-vs-batch-oracle",
        ok,
        f"A_N {a_n:.3f}, oracle {a_n_oracle:.3f}, F_N {f_n:.3f}, {elapsed:.0f}s",
    )


# ---------------------------------------------------------- order robustness


@pytest.mark.slow
def test_order_robustness(announce, main_stream, contrast_stream):
    """Across 5 shuffled class orders the accuracy-curve spread must stay
    small (MOPD <= 2.0, AOPD <= 1.0), and disabling grouping on a stream of
    engineered conflicts must yield a strictly larger MOPD."""
    from gddsg import load_manifest

    main_manifest = load_manifest(main_stream / "manifest.json")
    curves = []
    for r in range(5):
        tasks = shuffled_tasks(main_manifest, main_stream, shuffle_seed=r)
        curves.append(run_stream(MAIN_CONFIG, tasks).curve())
    _, mopd, aopd = opd_metrics(OrderRunSet(np.vstack(curves)))

    contrast_manifest = load_manifest(contrast_stream / "manifest.json")
    contrast_config = GddsgConfig(proj_dim=1000, seed=0, single_group=True)
    contrast_curves = []
    for r in range(5):
        tasks = shuffled_tasks(contrast_manifest, contrast_stream, shuffle_seed=r)
        contrast_curves.append(run_stream(contrast_config, tasks).curve())
    _, mopd_contrast, _ = opd_metrics(OrderRunSet(np.vstack(contrast_curves)))

    ok = mopd <= 2.0 and aopd <= 1.0 and mopd_contrast > mopd
    announce(
        "order-robustness",
        ok,
        f"MOPD {mopd:.3f}, AOPD {aopd:.3f}, ungrouped-conflict MOPD {mopd_contrast:.3f}",
    )


# ----------------------------------------------------------- exact evaluators


def test_theory_evaluator_exactness(announce):
    """Closed-form evaluators must match literal loop oracles to 1e-12
    relative on 100 random parameter sets, reproduce hand-worked values, and
    put the max-degree coloring regime above 0.99 for 35 classes at 0.9
    similarity. All in under a second."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(2, 8))
        n = int(rng.integers(1, 20))
        p = n + 2 + int(rng.integers(0, 30))
        sigma = float(rng.uniform(0.0, 2.0))
        ws = [rng.standard_normal(p) for _ in range(T)]
        params = TheoryParams(w_stars=tuple(ws), n=n, p=p, sigma=sigma)
        ef, eg = expected_forgetting(params), expected_generalization(params)
        ef_o = forgetting_loop_oracle(ws, n, p, sigma)
        eg_o = generalization_loop_oracle(ws, n, p, sigma)
        worst = max(
            worst,
            abs(ef - ef_o) / max(1.0, abs(ef_o)),
            abs(eg - eg_o) / max(1.0, abs(eg_o)),
        )

    e = np.zeros(20)
    e[0] = 1.0
    z = np.zeros(20)
    worked = [
        (expected_forgetting(TheoryParams((e, e), 10, 20, 0.0)), -0.25),
        (expected_forgetting(TheoryParams((z, z), 10, 20, 1.0)), 5.0 / 9.0),
        (expected_generalization(TheoryParams((z,), 10, 20, 1.0)), 10.0 / 9.0),
        (expected_generalization(TheoryParams((e, e), 10, 20, 0.0)), 0.125),
    ]
    worked_ok = all(abs(got - want) <= 1e-12 for got, want in worked)
    brooks = brooks_probability(BrooksParams(num_classes=35, p_sim=0.9))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and worked_ok and brooks > 0.99 and elapsed < 1.0
    announce(
        "theory-evaluator-exactness",
        ok,
        f"worst rel {worst:.2e}, worked values {'ok' if worked_ok else 'WRONG'}, brooks {brooks:.6f}, {elapsed:.2f}s",
    )


# ------------------------------------------------------------ group routing


def test_group_routing_accuracy(announce):
    """On a stream whose classes form 4 dissimilar groups, the first-stage
    router must place >= 99% of held-out samples into the group that owns
    their true class."""
    tr_lab, tr_vec, te_lab, te_vec, _ = bundle_dataset(seed=11)
    cfg = GddsgConfig(proj_dim=1000, seed=0, reservoir_cap=40)
    state = create_state(cfg, input_dim=tr_vec.shape[1])
    for b in range(3):
        ids = list(range(4 * b, 4 * b + 4))
        mask = np.isin(tr_lab, ids)
        train_task(state, ids, tr_lab[mask], tr_vec[mask])

    num_groups = state.table.num_groups()
    h = state.projection.expand(te_vec)
    meta = state.registry.meta_features(h, cfg.metric)
    routed = state.identifier.predict(meta)
    want = np.asarray([state.table.group_of[int(c)] for c in te_lab])
    acc = float(np.mean(routed == want))
    # the one-at-a-time entry point agrees with the batched route
    singles = [predict_group(state, te_vec[i]) for i in range(0, te_vec.shape[0], 97)]
    singles_ok = all(s == routed[i] for s, i in zip(singles, range(0, te_vec.shape[0], 97)))

    ok = num_groups == 4 and acc >= 0.99 and singles_ok
    announce(
        "group-routing-accuracy",
        ok,
        f"{num_groups} groups, routing accuracy {acc:.4f}, single/batch agree {singles_ok}",
    )


# ------------------------------------------------- embedding fixture (extra)


def test_extractor_fixture_roundtrip(announce, tmp_path):
    """A checked-in embedding file produced by the companion extractor must
    load, validate, and re-serialize byte-exactly."""
    fixture = Path(__file__).parent / "fixtures" / "extractor_smoke.gde1"
    if not fixture.exists():
        pytest.skip("extractor fixture not present")
    dim, labels, vectors = read_embedding_arrays(fixture)
    rewritten = tmp_path / "rewritten.gde1"
    write_embedding_arrays(rewritten, dim, labels, vectors)
    ok = (
        rewritten.read_bytes() == fixture.read_bytes()
        and vectors.shape[0] == labels.shape[0]
        and vectors.shape[0] > 0
        and np.isfinite(vectors).all()
    )
    announce(
        "extractor-fixture-roundtrip",
        ok,
        f"dim {dim}, {labels.shape[0]} records, classes {sorted(set(labels.tolist()))}",
    )
