"""Tests for datasets, metrics, the training loop, and reporting."""

import numpy as np
import pytest

from hintrelic import features as F
from hintrelic.augmentation import AugmentedPair, generate_pair, pair_family
from hintrelic.datasets import build_dataset, build_split, instance_key, split_path
from hintrelic.executors import execute
from hintrelic.instances import permute_instance, sample_instance
from hintrelic.metrics import mean_stderr, micro_f1, score_outputs
from hintrelic.reporting import (
    REPORT_COLUMNS,
    build_report,
    final_ood_scores,
    read_metrics_csv,
    render_csv,
    render_text,
)
from hintrelic.trajectories import load_jsonl, trajectories_equal
from hintrelic.training import (
    HARNESS_MODES,
    MODE_RECIPES,
    RunConfig,
    desk_config,
    ensure_datasets,
    evaluate_model,
    invariance_probe,
    load_splits,
    metrics_csv_text,
    mode_applicable,
    restore_run,
    run_ablation,
    train,
    train_single,
)

TINY = dict(
    train_steps=2,
    batch_size=3,
    train_count=12,
    val_count=4,
    test_count=4,
    eval_interval=2,
    train_sizes=(4, 5),
    eval_size=16,
    seeds=(0,),
)


@pytest.fixture(scope="module")
def minimum_data(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("minimum_data")
    cfg = desk_config("minimum", "relic", **TINY)
    ensure_datasets(cfg, data_dir)
    return data_dir


class TestDatasets:
    def test_line_count_and_sizes(self, tmp_path):
        trajs = build_split("minimum", (4, 5, 6), 60, 1, "train", tmp_path / "t.jsonl")
        assert len(trajs) == 60
        assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 60
        sizes = [t.instance.n for t in trajs]
        assert set(sizes) <= {4, 5, 6}
        # uniform draw: each size should be well represented
        for n in (4, 5, 6):
            assert sizes.count(n) >= 8

    def test_deterministic(self, tmp_path):
        build_split("bfs", (4, 5), 15, 3, "train", tmp_path / "a.jsonl")
        build_split("bfs", (4, 5), 15, 3, "train", tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_zero_count_empty_file(self, tmp_path):
        build_split("minimum", (4,), 0, 0, "train", tmp_path / "e.jsonl")
        assert (tmp_path / "e.jsonl").read_text() == ""
        assert load_jsonl(tmp_path / "e.jsonl") == []

    def test_round_trip_preserves_trajectories(self, tmp_path):
        trajs = build_split("dijkstra", (4, 5), 8, 2, "val", tmp_path / "d.jsonl")
        loaded = load_jsonl(tmp_path / "d.jsonl")
        assert len(loaded) == 8
        assert all(trajectories_equal(a, b) for a, b in zip(trajs, loaded))

    def test_splits_disjoint(self, tmp_path):
        paths = build_dataset("bfs", (4, 5), 30, 0, tmp_path, eval_sizes=(6,),
                              val_count=10, test_count=10)
        train_keys = {instance_key(t.instance) for t in load_jsonl(paths["train"])}
        test_keys = {instance_key(t.instance) for t in load_jsonl(paths["test"])}
        assert not train_keys & test_keys

    def test_test_split_dedup_against_train(self, tmp_path):
        # n=4 undirected graphs collide often; the test split must skip them
        paths = build_dataset("bfs", (4,), 80, 0, tmp_path, eval_sizes=(4,),
                              val_count=0, test_count=40)
        train_keys = {instance_key(t.instance) for t in load_jsonl(paths["train"])}
        test_keys = [instance_key(t.instance) for t in load_jsonl(paths["test"])]
        assert len(test_keys) == 40
        assert not train_keys & set(test_keys)

    def test_unknown_algorithm_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            build_dataset("sleep_sort", (4,), 1, 0, tmp_path)


def _brute_force_f1(specs, preds, trues):
    """Independent per-element counter for the metric oracle check."""
    weighted = 0.0
    total = 0
    for spec in specs:
        if spec.kind is F.Kind.MASK:
            tp = fp = fn = count = 0
            for p, t in zip(preds, trues):
                for pv, tv in zip(
                    np.asarray(p[spec.name]).ravel(), np.asarray(t[spec.name]).ravel()
                ):
                    pv, tv = bool(pv), bool(tv)
                    tp += pv and tv
                    fp += pv and not tv
                    fn += (not pv) and tv
                    count += 1
            score = 1.0 if tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
            weighted += score * count
            total += count
        elif spec.kind is F.Kind.MASK_ONE:
            correct = count = 0
            for p, t in zip(preds, trues):
                correct += int(np.argmax(p[spec.name]) == np.argmax(t[spec.name]))
                count += 1
            weighted += (correct / count) * count
            total += count
        else:
            correct = count = 0
            for p, t in zip(preds, trues):
                for pv, tv in zip(
                    np.asarray(p[spec.name]).ravel(), np.asarray(t[spec.name]).ravel()
                ):
                    correct += int(pv == tv)
                    count += 1
            weighted += (correct / count) * count if count else 0.0
            total += count
    return weighted / total


class TestMetrics:
    POINTER = F.FeatureSpec("p", F.Stage.OUTPUT, F.Location.NODE, F.Kind.POINTER)
    MASK = F.FeatureSpec("m", F.Stage.OUTPUT, F.Location.NODE, F.Kind.MASK)
    ONE = F.FeatureSpec("o", F.Stage.OUTPUT, F.Location.NODE, F.Kind.MASK_ONE)

    def test_all_correct_is_one(self):
        truth = [{"p": np.array([1, 0, 2])}]
        assert micro_f1((self.POINTER,), truth, truth) == 1.0

    def test_all_wrong_is_zero(self):
        pred = [{"p": np.array([0, 1, 0])}]
        true = [{"p": np.array([1, 0, 2])}]
        assert micro_f1((self.POINTER,), pred, true) == 0.0

    def test_half_right_pointers(self):
        # 5 of 10 pointer elements correct -> 0.5
        pred = [{"p": np.array([0, 1, 2, 3, 4, 0, 0, 0, 0, 0])}]
        true = [{"p": np.array([0, 1, 2, 3, 4, 9, 8, 7, 6, 5])}]
        assert micro_f1((self.POINTER,), pred, true) == 0.5

    def test_mask_scores_positive_class_f1(self):
        pred = [{"m": np.array([1, 1, 0, 0])}]
        true = [{"m": np.array([1, 0, 1, 0])}]
        # tp=1 fp=1 fn=1 -> F1 = 2/(2+1+1)
        assert micro_f1((self.MASK,), pred, true) == pytest.approx(0.5)

    def test_empty_mask_is_perfect(self):
        pred = [{"m": np.zeros(4)}]
        true = [{"m": np.zeros(4)}]
        assert micro_f1((self.MASK,), pred, true) == 1.0

    def test_selection_counts_once(self):
        # a correct one-hot selection is one element, however many nodes
        pred = [{"o": np.array([0, 1, 0, 0, 0])}]
        true = [{"o": np.array([0, 1, 0, 0, 0])}]
        score = score_outputs((self.ONE,), pred, true)
        assert score.element_count == 1
        assert score.overall == 1.0

    def test_element_count_weighting(self):
        # 4 pointer elements at 0.75 and 1 selection at 0.0 -> 3/5
        pred = [{"p": np.array([0, 1, 2, 0]), "o": np.array([1, 0, 0, 0])}]
        true = [{"p": np.array([0, 1, 2, 3]), "o": np.array([0, 0, 1, 0])}]
        got = micro_f1((self.POINTER, self.ONE), pred, true)
        assert got == pytest.approx(3 / 5)

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(0)
        specs = (self.POINTER, self.MASK, self.ONE)
        for _ in range(100):
            preds, trues = [], []
            for _ in range(rng.integers(1, 5)):
                n = int(rng.integers(2, 7))
                preds.append(
                    {
                        "p": rng.integers(0, n, n),
                        "m": rng.integers(0, 2, n),
                        "o": np.eye(n)[rng.integers(n)],
                    }
                )
                trues.append(
                    {
                        "p": rng.integers(0, n, n),
                        "m": rng.integers(0, 2, n),
                        "o": np.eye(n)[rng.integers(n)],
                    }
                )
            assert micro_f1(specs, preds, trues) == pytest.approx(
                _brute_force_f1(specs, preds, trues), abs=1e-12
            )

    def test_mean_stderr(self):
        mean, err = mean_stderr([0.5])
        assert (mean, err) == (0.5, 0.0)
        mean, err = mean_stderr([0.0, 1.0])
        assert mean == 0.5
        assert err == pytest.approx(np.std([0.0, 1.0], ddof=1) / np.sqrt(2))

    def test_empty_evaluation_rejected(self):
        with pytest.raises(ValueError):
            score_outputs((self.POINTER,), [], [])


class TestRunConfig:
    def test_eval_must_exceed_train_sizes(self):
        with pytest.raises(ValueError):
            RunConfig("bfs", eval_size=8, train_sizes=(4, 8))

    def test_sizes_capped(self):
        with pytest.raises(ValueError):
            RunConfig("bfs", train_sizes=(4, 17), eval_size=32)

    def test_needs_seeds(self):
        with pytest.raises(ValueError):
            RunConfig("bfs", seeds=())

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            RunConfig("bfs", ablation_mode="softmax_only")

    def test_mode_catalogue(self):
        assert HARNESS_MODES == (
            "no_hints",
            "baseline",
            "baseline_reversal",
            "relic_no_kl",
            "relic",
            "relic_no_reversal",
        )
        assert MODE_RECIPES["baseline_reversal"].use_reversal
        assert MODE_RECIPES["relic_no_kl"].alpha == 0.0
        assert not MODE_RECIPES["relic_no_reversal"].use_reversal

    def test_dfs_has_no_contrastive_cells(self):
        assert not mode_applicable("dfs", "relic")
        assert mode_applicable("dfs", "baseline")
        assert mode_applicable("bubble_sort", "relic")

    def test_run_id_stable(self):
        cfg = desk_config("bfs", "relic")
        assert cfg.run_id(3) == "bfs-relic-seed3"


class TestTraining:
    def test_deterministic_metrics_and_params(self, minimum_data):
        cfg = desk_config("minimum", "relic", **TINY)
        a = train_single(cfg, 0, minimum_data)
        b = train_single(cfg, 0, minimum_data)
        assert metrics_csv_text(a.metrics_rows) == metrics_csv_text(b.metrics_rows)
        for name in a.model.params:
            np.testing.assert_array_equal(
                a.model.params[name].data, b.model.params[name].data
            )
        for name in a.head.params:
            np.testing.assert_array_equal(
                a.head.params[name].data, b.head.params[name].data
            )

    def test_seeds_differ(self, minimum_data):
        cfg = desk_config("minimum", "relic", **TINY)
        a = train_single(cfg, 0, minimum_data)
        b = train_single(cfg, 1, minimum_data)
        assert metrics_csv_text(a.metrics_rows) != metrics_csv_text(b.metrics_rows)

    def test_mode_purity_counters(self, minimum_data):
        for mode, wants_pairs, wants_hints in (
            ("no_hints", False, False),
            ("baseline", False, True),
            ("relic", True, False),
        ):
            cfg = desk_config("minimum", mode, **TINY)
            r = train_single(cfg, 0, minimum_data)
            assert (r.counters["pairs_built"] > 0) == wants_pairs, mode
            assert (r.counters["hint_supervision_items"] > 0) == wants_hints, mode

    def test_metrics_rows_have_expected_steps(self, minimum_data):
        cfg = desk_config("minimum", "relic", **TINY)
        r = train_single(cfg, 0, minimum_data)
        by = {}
        for row in r.metrics_rows:
            by.setdefault(row["split"], []).append(row["step"])
        assert by["train"] == [0, 2]
        assert by["val"] == [0, 2]
        assert by["test"] == [0, 2]
        train_rows = [x for x in r.metrics_rows if x["split"] == "train"]
        assert all(x["total_loss"] != "" and x["micro_f1"] == "" for x in train_rows)
        eval_rows = [x for x in r.metrics_rows if x["split"] != "train"]
        assert all(x["micro_f1"] != "" and x["total_loss"] == "" for x in eval_rows)

    def test_checkpoint_restore_round_trip(self, minimum_data, tmp_path):
        cfg = desk_config("minimum", "relic", **TINY)
        r = train_single(cfg, 0, minimum_data, tmp_path)
        model, head = restore_run(cfg, 0, r.checkpoint_path)
        for name in r.model.params:
            np.testing.assert_array_equal(
                model.params[name].data, r.model.params[name].data
            )
        for name in r.head.params:
            np.testing.assert_array_equal(
                head.params[name].data, r.head.params[name].data
            )

    def test_divergence_aborts_with_last_good(self, minimum_data, monkeypatch, tmp_path):
        import hintrelic.training as T

        cfg = desk_config("minimum", "relic", **TINY)
        real = T._batch_loss
        calls = {"n": 0}

        def poisoned(config, model, head, batch, rng, counters):
            loss, means = real(config, model, head, batch, rng, counters)
            calls["n"] += 1
            if calls["n"] == 3:  # probe batch is call 1; fail at train step 2
                loss.data = np.float64("nan")
            return loss, means

        monkeypatch.setattr(T, "_batch_loss", poisoned)
        r = train_single(cfg, 0, minimum_data, tmp_path)
        assert r.diverged
        assert r.final_step == 1
        assert r.checkpoint_path.exists()
        assert all(np.all(np.isfinite(p.data)) for p in r.model.params.values())

    def test_divergence_raises_from_train(self, minimum_data, monkeypatch, tmp_path):
        import hintrelic.training as T

        real = T._batch_loss

        def poisoned(config, model, head, batch, rng, counters):
            loss, means = real(config, model, head, batch, rng, counters)
            loss.data = np.float64("inf")
            return loss, means

        monkeypatch.setattr(T, "_batch_loss", poisoned)
        cfg = desk_config("minimum", "relic", **TINY)
        with pytest.raises(T.TrainingDiverged):
            train(cfg, minimum_data, tmp_path)

    def test_missing_datasets_rejected(self, tmp_path):
        cfg = desk_config("minimum", "relic", **TINY)
        with pytest.raises(FileNotFoundError):
            load_splits(cfg, tmp_path / "nowhere")

    def test_evaluate_model_range(self, minimum_data):
        cfg = desk_config("minimum", "relic", **TINY)
        splits = load_splits(cfg, minimum_data)
        from hintrelic.network import Reasoner

        model = Reasoner("minimum", cfg.model_config, seed=0)
        score = evaluate_model(model, splits["val"])
        assert 0.0 <= score.overall <= 1.0
        assert score.element_count == len(splits["val"])


class TestInvarianceProbe:
    def test_identical_views_align_perfectly(self):
        from hintrelic.network import ModelConfig, Reasoner

        model = Reasoner("bubble_sort", ModelConfig(16, 4), seed=0)
        inst = sample_instance("bubble_sort", 5, seed=0)
        traj = execute(inst)
        pair = AugmentedPair(
            base=traj,
            aug_instance=permute_instance(inst, np.arange(5)),
            node_map=np.arange(5),
            sampled_step=traj.num_steps,
            family=pair_family("bubble_sort"),
            contrast_mask=np.ones(traj.num_steps, dtype=bool),
        )
        probe = invariance_probe(model, [pair])
        assert probe.positive_sim == pytest.approx(1.0)
        assert probe.negative_sim < 1.0
        assert probe.gap > 0.0

    def test_generated_pairs_give_finite_sims(self):
        from hintrelic.network import ModelConfig, Reasoner

        model = Reasoner("bfs", ModelConfig(16, 4), seed=1)
        pairs = [generate_pair("bfs", 5, s, max_train_n=8) for s in range(3)]
        probe = invariance_probe(model, pairs)
        assert -1.0 <= probe.negative_sim <= 1.0
        assert -1.0 <= probe.positive_sim <= 1.0

    def test_rejects_algorithms_without_node_pointer_contrast(self):
        from hintrelic.network import ModelConfig, Reasoner

        model = Reasoner("dfs", ModelConfig(16, 4), seed=0)
        with pytest.raises(ValueError):
            invariance_probe(model, [])


def _fake_rows():
    rows = []
    for alg, mode, seed, step, f1 in [
        ("bfs", "no_hints", 0, 2, 0.50),
        ("bfs", "no_hints", 1, 2, 0.60),
        ("bfs", "relic", 0, 2, 0.90),
        ("bfs", "relic", 1, 2, 0.80),
        ("bfs", "relic", 0, 1, 0.10),  # superseded by the later step
        ("dfs", "no_hints", 0, 2, 0.40),
        ("dfs", "baseline", 0, 2, 0.45),
    ]:
        rows.append(
            {
                "run_id": f"{alg}-{mode}-seed{seed}",
                "algorithm": alg,
                "mode": mode,
                "seed": seed,
                "step": step,
                "split": "test",
                "micro_f1": format(f1, ".17g"),
            }
        )
    return rows


class TestReporting:
    def test_column_order(self):
        assert [m for m, _ in REPORT_COLUMNS] == [
            "no_hints",
            "baseline",
            "baseline_reversal",
            "relic_no_kl",
            "relic",
            "relic_no_reversal",
        ]
        assert [t for _, t in REPORT_COLUMNS[:5]] == [
            "No Hints",
            "Baseline",
            "+ reversal",
            "+ reversal + contr.",
            "+ reversal + contr. + KL",
        ]

    def test_final_scores_take_latest_step(self):
        scores = final_ood_scores(_fake_rows())
        assert scores[("bfs", "relic")] == {0: 0.90, 1: 0.80}

    def test_dash_for_missing_cells(self):
        table = build_report(_fake_rows())
        text = render_text(table)
        dfs_line = next(l for l in text.splitlines() if l.startswith("dfs"))
        # depth-first search has no contrastive runs -> dashes
        assert dfs_line.split()[-1] == "-"
        assert "45.00" in dfs_line

    def test_mean_and_stderr_rendering(self):
        table = build_report(_fake_rows())
        cell = table.cells[("bfs", "relic")]
        assert cell.mean == pytest.approx(0.85)
        assert cell.seeds == 2
        assert "85.00" in cell.render()

    def test_single_seed_zero_stderr(self):
        table = build_report(_fake_rows())
        assert table.cells[("dfs", "baseline")].stderr == 0.0

    def test_needs_two_modes(self):
        rows = [r for r in _fake_rows() if r["mode"] == "relic"]
        with pytest.raises(ValueError):
            build_report(rows)

    def test_csv_round_trip(self, tmp_path):
        from hintrelic.training import write_metrics_csv

        rows = _fake_rows()
        for row in rows:
            row.update(
                {
                    k: ""
                    for k in (
                        "total_loss",
                        "output_loss",
                        "hint_loss",
                        "contrastive_loss",
                        "kl_loss",
                    )
                }
            )
        write_metrics_csv(tmp_path / "m.csv", rows)
        loaded = read_metrics_csv(tmp_path / "m.csv")
        assert final_ood_scores(loaded) == final_ood_scores(rows)

    def test_csv_report_format(self):
        table = build_report(_fake_rows())
        lines = render_csv(table).splitlines()
        assert lines[0] == "algorithm,mode,column,mean,stderr,seeds"
        assert len(lines) == 1 + len(table.algorithms) * len(REPORT_COLUMNS)


class TestAblation:
    def test_matrix_skips_inapplicable_and_reports(self, tmp_path):
        results = run_ablation(
            "dfs",
            ("no_hints", "relic"),
            (0,),
            tmp_path / "data",
            tmp_path / "out",
            config_overrides=dict(
                train_steps=1, batch_size=2, train_count=8, val_count=2,
                test_count=2, eval_interval=1, train_sizes=(4,), eval_size=16,
            ),
        )
        # the contrastive cell is skipped for depth-first search
        assert [r.run_id for r in results] == ["dfs-no_hints-seed0"]
        assert (tmp_path / "out" / "metrics.csv").exists()
