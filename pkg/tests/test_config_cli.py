"""Tests for the flat config system and the command-line interface."""

import csv

import pytest

from hintrelic.cli import main
from hintrelic.config import (
    DEFAULTS,
    ENV_SEED,
    build_run_config,
    load_config_file,
    merge_config,
    parse_config_text,
    parse_seed_list,
    parse_sizes,
    resolve_master_seed,
)


class TestConfigParsing:
    def test_comments_and_blanks_ignored(self):
        text = "# a comment\n\nrun.mode=baseline\n  # indented comment\n"
        assert parse_config_text(text) == {"run.mode": "baseline"}

    def test_whitespace_stripped(self):
        assert parse_config_text("  run.batch_size =  8 ") == {"run.batch_size": "8"}

    def test_malformed_line_names_location(self):
        with pytest.raises(ValueError, match="conf:2"):
            parse_config_text("run.mode=relic\nnot a pair\n", source="conf")

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="run.turbo"):
            parse_config_text("run.turbo=yes")

    def test_value_may_contain_equals(self):
        assert parse_config_text("out.dir=runs=v2") == {"out.dir": "runs=v2"}

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("run.algorithm=bfs\nrun.train_steps=5\n")
        assert load_config_file(path) == {
            "run.algorithm": "bfs",
            "run.train_steps": "5",
        }


class TestValueParsers:
    def test_size_range_inclusive(self):
        assert parse_sizes("4..8") == (4, 5, 6, 7, 8)
        assert parse_sizes("4..4") == (4,)

    def test_size_list(self):
        assert parse_sizes("4,6,8") == (4, 6, 8)
        assert parse_sizes(" 4 , 6 ") == (4, 6)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            parse_sizes("8..4")

    def test_seed_list(self):
        assert parse_seed_list("0") == (0,)
        assert parse_seed_list("0,1,2") == (0, 1, 2)
        assert parse_seed_list("") == ()


class TestPrecedence:
    def test_defaults_only(self):
        merged = merge_config()
        assert merged == DEFAULTS
        assert merged is not DEFAULTS

    def test_file_overrides_default(self):
        merged = merge_config({"run.mode": "baseline"})
        assert merged["run.mode"] == "baseline"
        assert merged["run.batch_size"] == DEFAULTS["run.batch_size"]

    def test_flag_overrides_file(self):
        merged = merge_config({"run.mode": "baseline"}, {"run.mode": "no_hints"})
        assert merged["run.mode"] == "no_hints"

    def test_none_values_skipped(self):
        merged = merge_config({"run.mode": None}, {})
        assert merged["run.mode"] == DEFAULTS["run.mode"]

    def test_unknown_merge_key_rejected(self):
        with pytest.raises(ValueError):
            merge_config({"run.bogus": "1"})

    def test_env_seed_used_when_unset(self):
        merged = merge_config()
        assert resolve_master_seed(merged, environ={ENV_SEED: "7"}) == 7

    def test_env_seed_default_zero(self):
        assert resolve_master_seed(merge_config(), environ={}) == 0

    def test_explicit_seed_beats_env(self):
        merged = merge_config({"run.master_seed": "5"})
        assert resolve_master_seed(merged, environ={ENV_SEED: "7"}) == 5

    def test_build_requires_algorithm(self):
        with pytest.raises(ValueError, match="run.algorithm"):
            build_run_config(merge_config(), environ={})

    def test_build_maps_every_field(self):
        merged = merge_config(
            {
                "run.algorithm": "bfs",
                "run.mode": "baseline",
                "run.train_steps": "7",
                "run.train_sizes": "4,6",
                "run.seeds": "1,2",
                "opt.learning_rate": "0.01",
                "model.hidden_dim": "16",
            }
        )
        cfg = build_run_config(merged, environ={ENV_SEED: "9"})
        assert cfg.algorithm == "bfs"
        assert cfg.ablation_mode == "baseline"
        assert cfg.train_steps == 7
        assert cfg.train_sizes == (4, 6)
        assert cfg.seeds == (1, 2)
        assert cfg.learning_rate == 0.01
        assert cfg.hidden_dim == 16
        assert cfg.master_seed == 9  # environment fallback


class TestUsageErrors:
    def test_no_verb(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_verb(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unknown_algorithm(self):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--algorithm", "sleep_sort"])
        assert exc.value.code == 2

    def test_unknown_mode_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--algorithm", "bfs", "--mode", "softmax_only"])
        assert exc.value.code == 2

    def test_ablate_needs_algorithm(self):
        assert main(["ablate", "--num-seeds", "1"]) == 2

    def test_ablate_rejects_unknown_mode(self, tmp_path):
        code = main(
            ["ablate", "--algorithm", "bfs", "--modes", "relic,warp",
             "--out", str(tmp_path)]
        )
        assert code == 2


class TestGenVerb:
    def test_deterministic_rerun(self, tmp_path, capsys):
        argv = ["gen", "--algorithm", "minimum", "--sizes", "4..5",
                "--count", "10", "--val-count", "3", "--test-count", "3",
                "--eval-size", "6", "--seed", "1"]
        assert main(argv + ["--out", str(tmp_path / "a")]) == 0
        assert main(argv + ["--out", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        for split in ("train", "val", "test"):
            a = (tmp_path / "a" / f"minimum_{split}.jsonl").read_bytes()
            b = (tmp_path / "b" / f"minimum_{split}.jsonl").read_bytes()
            assert a == b
            assert a  # nonempty


class TestValidateVerb:
    def test_summary_and_detail(self, tmp_path, capsys):
        summary = tmp_path / "summary.csv"
        detail = tmp_path / "detail.csv"
        code = main(
            ["validate", "--algorithm", "minimum", "--pairs", "5",
             "--max-n", "6", "--out", str(summary), "--detail", str(detail)]
        )
        capsys.readouterr()
        assert code == 0
        with open(summary, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == [
            "algorithm", "pairs_checked", "pass_rate", "mean_equivalent_up_to",
        ]
        assert rows[0]["algorithm"] == "minimum"
        assert rows[0]["pass_rate"] == "1"
        with open(detail, newline="") as fh:
            detail_rows = list(csv.DictReader(fh))
        assert len(detail_rows) == 5
        assert {r["passed"] for r in detail_rows} == {"1"}


class TestTrainEvalVerbs:
    ARGS = ["--algorithm", "minimum", "--steps", "2", "--batch-size", "2",
            "--sizes", "4..5", "--eval-size", "6", "--train-count", "8",
            "--val-count", "2", "--test-count", "2", "--eval-interval", "2"]

    def test_missing_data_exits_one(self, tmp_path, capsys):
        code = main(
            ["train", *self.ARGS, "--data", str(tmp_path / "nowhere"),
             "--out", str(tmp_path / "out")]
        )
        capsys.readouterr()
        assert code == 1

    def test_train_then_eval(self, tmp_path, capsys):
        data, out = str(tmp_path / "data"), str(tmp_path / "out")
        code = main(["train", *self.ARGS, "--make-data", "--data", data, "--out", out])
        assert code == 0
        assert (tmp_path / "out" / "metrics.csv").exists()
        assert (tmp_path / "out" / "minimum-relic-seed0.ckpt").exists()
        capsys.readouterr()
        code = main(["eval", *self.ARGS, "--data", data, "--out", out,
                     "--split", "val"])
        printed = capsys.readouterr().out
        assert code == 0
        assert "micro_f1" in printed
        assert "mean" in printed

    def test_eval_missing_checkpoint(self, tmp_path, capsys):
        data = str(tmp_path / "data")
        main(["gen", "--algorithm", "minimum", "--sizes", "4..5", "--count", "8",
              "--val-count", "2", "--test-count", "2", "--eval-size", "6",
              "--out", data])
        capsys.readouterr()
        with pytest.raises(FileNotFoundError):
            main(["eval", *self.ARGS, "--data", data,
                  "--checkpoint", str(tmp_path / "missing.ckpt")])


class TestReportVerb:
    def _write_metrics(self, path):
        from hintrelic.training import METRICS_COLUMNS, write_metrics_csv

        rows = []
        for mode, f1 in (("no_hints", 0.5), ("relic", 0.9)):
            row = {k: "" for k in METRICS_COLUMNS}
            row.update(
                run_id=f"bfs-{mode}-seed0", algorithm="bfs", mode=mode,
                seed=0, step=2, split="test", micro_f1=format(f1, ".17g"),
            )
            rows.append(row)
        write_metrics_csv(path, rows)

    def test_report_renders_and_writes(self, tmp_path, capsys):
        metrics = tmp_path / "metrics.csv"
        self._write_metrics(metrics)
        prefix = tmp_path / "report"
        code = main(["report", "--metrics", str(metrics), "--out", str(prefix)])
        printed = capsys.readouterr().out
        assert code == 0
        assert "No Hints" in printed
        assert "90.00" in printed
        assert (tmp_path / "report.txt").exists()
        assert (tmp_path / "report.csv").exists()

    def test_report_single_mode_fails(self, tmp_path, capsys):
        from hintrelic.training import METRICS_COLUMNS, write_metrics_csv

        row = {k: "" for k in METRICS_COLUMNS}
        row.update(run_id="bfs-relic-seed0", algorithm="bfs", mode="relic",
                   seed=0, step=1, split="test", micro_f1="0.5")
        metrics = tmp_path / "metrics.csv"
        write_metrics_csv(metrics, [row])
        with pytest.raises(ValueError):
            main(["report", "--metrics", str(metrics)])
