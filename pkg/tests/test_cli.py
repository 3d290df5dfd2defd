"""
Tests for the lasr command line.

Covers:
- ingest: outputs, determinism, data errors
- train: model and log files, determinism, config-file precedence
- eval: kv and JSON reports, vocabulary checks
- predict: output format, strategy relations, error exit codes
- bench-synthetic on a tiny instance
- usage errors
"""

import json
from pathlib import Path

import numpy as np
import pytest

from lasr.cli import deps
from lasr.core.exceptions import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from lasr.main import main
from lasr.models.pairs import Vocabulary
from lasr.services import dataset_service
from lasr.services.model_service import init_model, load_model, save_model

TRAIN_FLAGS = [
    "--stages",
    "1",
    "--dim",
    "4",
    "--k",
    "2",
    "--eval-every",
    "20",
    "--max-updates",
    "100",
    "--seed",
    "7",
    "--patience",
    "10",
]

# ----------------------------------------------------------------------------
# Fixtures
# ----------------------------------------------------------------------------


@pytest.fixture
def ingested(tiny_events_file: Path, tmp_path: Path) -> Path:
    """The tiny events file ingested with one validation pair."""
    out = tmp_path / "data"
    assert main(["ingest", str(tiny_events_file), str(out), "--valid-count", "1"]) == EXIT_OK
    return out


@pytest.fixture
def trained(ingested: Path, tmp_path: Path) -> Path:
    """A two-stage model trained on the tiny dataset."""
    model = tmp_path / "model.bin"
    assert main(["train", str(ingested), str(model), *TRAIN_FLAGS]) == EXIT_OK
    return model


@pytest.fixture
def separable_dir(tmp_path: Path) -> Path:
    """Pair files where query q<i> is always followed by item i<i>."""
    out = tmp_path / "separable"
    out.mkdir()
    queries = [f"q{i}" for i in range(6)]
    items = [f"i{i}" for i in range(6)]
    lines = "".join(f"{q}\t{d}\n" for q, d in zip(queries, items))
    (out / "train.tsv").write_text(lines * 10, encoding="utf-8")
    (out / "valid.tsv").write_text(lines, encoding="utf-8")
    dataset_service.save_vocab(Vocabulary(queries), out / "query_vocab.tsv")
    dataset_service.save_vocab(Vocabulary(items), out / "item_vocab.tsv")
    return out


@pytest.fixture
def zero_structure_model(tmp_path: Path) -> Path:
    """A saved three-stage model whose structure matrices are all zero."""
    model = init_model(3, 3, 5, stages=2, k=3, seed=11)
    for stage in model.stages:
        stage.S[:] = 0.0
    path = tmp_path / "flat.bin"
    save_model(model, path)
    query_vocab_path, item_vocab_path = deps.sidecar_paths(path)
    dataset_service.save_vocab(Vocabulary(["A", "B", "C"]), query_vocab_path)
    dataset_service.save_vocab(Vocabulary(["v", "w", "x", "y", "z"]), item_vocab_path)
    return path


def stdout_of(capsys, argv: list[str]) -> str:
    capsys.readouterr()
    assert main(argv) == EXIT_OK
    return capsys.readouterr().out


# ----------------------------------------------------------------------------
# ingest
# ----------------------------------------------------------------------------


class TestIngest:
    """Tests for the ingest command."""

    def test_outputs(self, ingested):
        """Pair files, vocabularies and stats match the hand count."""
        assert len((ingested / "train.tsv").read_text().splitlines()) == 6
        assert len((ingested / "valid.tsv").read_text().splitlines()) == 1
        assert (ingested / "test.tsv").read_text() == "C\tA\n"
        assert (ingested / "query_vocab.tsv").read_text() == "A\t0\nB\t1\nC\t2\n"
        assert (ingested / "item_vocab.tsv").read_text() == "B\t0\nC\t1\nA\t2\n"
        stats = (ingested / "stats.txt").read_text()
        assert "events=13\n" in stats
        assert "test_days=1\n" in stats

    def test_deterministic(self, tiny_events_file, ingested, tmp_path):
        """A second run writes byte-identical files."""
        again = tmp_path / "again"
        assert main(["ingest", str(tiny_events_file), str(again), "--valid-count", "1"]) == EXIT_OK
        for path in ingested.iterdir():
            assert (again / path.name).read_bytes() == path.read_bytes()

    def test_empty_input_writes_nothing(self, tmp_path):
        """An empty events file exits with the data code and no output directory."""
        events = tmp_path / "empty.tsv"
        events.write_text("")
        out = tmp_path / "out"
        assert main(["ingest", str(events), str(out)]) == EXIT_DATA
        assert not out.exists()

    def test_malformed_line_is_reported(self, tmp_path, caplog):
        """The error message names the file and line."""
        events = tmp_path / "bad.tsv"
        events.write_text("u1\t100\tA\nu1\t200\n")
        assert main(["ingest", str(events), str(tmp_path / "out")]) == EXIT_DATA
        assert "bad.tsv:2" in caplog.text

    def test_invalid_flag_value(self, tiny_events_file, tmp_path):
        """A modulus below 2 is a usage error."""
        argv = ["ingest", str(tiny_events_file), str(tmp_path / "o"), "--test-day-modulus", "1"]
        assert main(argv) == EXIT_USAGE


# ----------------------------------------------------------------------------
# train
# ----------------------------------------------------------------------------


class TestTrain:
    """Tests for the train command."""

    def test_writes_model_sidecars_and_log(self, trained):
        """Model, vocabularies and a progress log are written."""
        model = load_model(trained)
        assert (model.T, model.n, model.k, model.n_items) == (1, 4, 2, 3)
        query_vocab_path, item_vocab_path = deps.sidecar_paths(trained)
        assert dataset_service.load_vocab(item_vocab_path).tokens == ["B", "C", "A"]
        assert query_vocab_path.exists()
        log = trained.with_name("model.bin.log").read_text()
        assert "stage=0 updates=0 valid_recall@2=" in log
        assert "stage=1 updates=100 valid_recall@2=" in log

    def test_same_seed_same_bytes(self, ingested, trained, tmp_path):
        """Training is reproducible with one worker."""
        other = tmp_path / "other.bin"
        assert main(["train", str(ingested), str(other), *TRAIN_FLAGS]) == EXIT_OK
        assert other.read_bytes() == trained.read_bytes()

    def test_single_stage(self, ingested, tmp_path):
        """--stages 0 trains an unstructured model."""
        path = tmp_path / "t0.bin"
        argv = ["train", str(ingested), str(path), "--stages", "0", "--dim", "3", "--k", "2"]
        assert main([*argv, "--max-updates", "50", "--eval-every", "25"]) == EXIT_OK
        assert load_model(path).T == 0

    def test_loss_is_logged(self, ingested, tmp_path):
        """The effective configuration is echoed into the log."""
        path = tmp_path / "auc.bin"
        argv = ["train", str(ingested), str(path), *TRAIN_FLAGS, "--loss", "auc"]
        assert main(argv) == EXIT_OK
        assert "loss=auc" in path.with_name("auc.bin.log").read_text()

    def test_losses_train_different_models(self, separable_dir, tmp_path):
        """--loss auc and --loss warp lead to different parameters."""
        flags = ["--stages", "0", "--dim", "4", "--k", "2", "--max-updates", "400"]
        flags += ["--eval-every", "100", "--patience", "10", "--seed", "3"]
        paths = {}
        for loss in ("auc", "warp"):
            paths[loss] = tmp_path / f"{loss}.bin"
            argv = ["train", str(separable_dir), str(paths[loss]), *flags, "--loss", loss]
            assert main(argv) == EXIT_OK
        assert paths["auc"].read_bytes() != paths["warp"].read_bytes()
        assert "loss=warp" in paths["warp"].with_name("warp.bin.log").read_text()

    def test_diverging_run_exits_with_numerical_code(self, ingested, tmp_path, caplog):
        """An infinite learning rate produces non-finite parameters and exit code 3."""
        path = tmp_path / "nan.bin"
        argv = ["train", str(ingested), str(path), *TRAIN_FLAGS, "--lr", "inf"]
        assert main(argv) == EXIT_NUMERICAL
        assert "non-finite parameters" in caplog.text
        assert not path.exists()

    @pytest.mark.parametrize("suffix", [".txt", ".yaml"])
    def test_config_file_precedence(self, ingested, tmp_path, suffix):
        """Config file values apply unless a flag overrides them."""
        config = tmp_path / f"train{suffix}"
        if suffix == ".yaml":
            config.write_text("dim: 3\nmax-updates: 40\neval_every: 20\nk: 2\nstages: 0\n")
        else:
            config.write_text("# small run\ndim=3\nmax-updates=40\neval_every=20\nk=2\nstages=0\n")

        from_file = tmp_path / "file.bin"
        assert main(["train", str(ingested), str(from_file), "--config", str(config)]) == EXIT_OK
        assert load_model(from_file).n == 3

        overridden = tmp_path / "flag.bin"
        argv = ["train", str(ingested), str(overridden), "--config", str(config), "--dim", "5"]
        assert main(argv) == EXIT_OK
        assert load_model(overridden).n == 5

    def test_malformed_config_file(self, ingested, tmp_path):
        """A config line without '=' is a usage error."""
        config = tmp_path / "bad.txt"
        config.write_text("dim 3\n")
        argv = ["train", str(ingested), str(tmp_path / "m.bin"), "--config", str(config)]
        assert main(argv) == EXIT_USAGE

    def test_k_above_item_count(self, ingested, tmp_path):
        """k larger than the item vocabulary exits with the usage code."""
        argv = ["train", str(ingested), str(tmp_path / "m.bin"), "--k", "4", "--max-updates", "1"]
        assert main(argv) == EXIT_USAGE


# ----------------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------------


class TestEval:
    """Tests for the eval command."""

    def test_kv_report(self, capsys, ingested, trained):
        """Default cutoffs, one key=value line each."""
        out = stdout_of(capsys, ["eval", str(trained), str(ingested / "test.tsv")])
        keys = [line.split("=")[0] for line in out.splitlines()]
        expected = ["recall@5", "recall@10", "recall@30", "recall@50"]
        assert keys == [*expected, "map", "mean_rank", "evaluated", "skipped_oov"]
        assert "evaluated=1" in out.splitlines()

    def test_json_report(self, capsys, ingested, trained):
        """--format json with custom cutoffs."""
        argv = ["eval", str(trained), str(ingested / "test.tsv"), "--format", "json", "--ks", "2,1"]
        report = json.loads(stdout_of(capsys, argv))
        assert list(report)[:2] == ["recall@1", "recall@2"]
        assert report["evaluated"] == 1

    def test_oov_pairs_are_skipped(self, capsys, trained, tmp_path):
        """Pairs with unknown tokens are counted, the rest evaluated."""
        pairs = tmp_path / "p.tsv"
        pairs.write_text("C\tA\nZ\tA\nA\tZ\n")
        out = stdout_of(capsys, ["eval", str(trained), str(pairs), "--ks", "1"])
        assert "skipped_oov=2" in out.splitlines()

    def test_all_oov(self, trained, tmp_path):
        """Nothing evaluable is a data error."""
        pairs = tmp_path / "p.tsv"
        pairs.write_text("Z\tA\n")
        assert main(["eval", str(trained), str(pairs)]) == EXIT_DATA

    def test_vocabulary_mismatch(self, trained, tmp_path, caplog):
        """A different ingested directory is refused, naming both files."""
        events = tmp_path / "other_events.tsv"
        events.write_text("u\t100\tX\nu\t200\tY\nu\t300\tX\n")
        other = tmp_path / "other"
        assert main(["ingest", str(events), str(other), "--valid-count", "0"]) == EXIT_OK
        argv = ["eval", str(trained), str(other / "train.tsv"), "--vocab-dir", str(other)]
        assert main(argv) == EXIT_DATA
        assert "model.bin.query_vocab.tsv" in caplog.text
        assert str(other / "query_vocab.tsv") in caplog.text

    def test_not_a_model(self, ingested, tmp_path, caplog):
        """A file without the magic bytes exits with the data code."""
        bogus = tmp_path / "bogus.bin"
        bogus.write_bytes(b"hello world")
        assert main(["eval", str(bogus), str(ingested / "test.tsv")]) == EXIT_DATA
        assert "not a model file" in caplog.text


# ----------------------------------------------------------------------------
# predict
# ----------------------------------------------------------------------------


class TestPredict:
    """Tests for the predict command."""

    def test_output_lines(self, capsys, trained):
        """rank<TAB>item<TAB>score, k lines by default."""
        lines = stdout_of(capsys, ["predict", str(trained), "--query", "A"]).splitlines()
        assert len(lines) == 2
        ranks, items, scores = zip(*(line.split("\t") for line in lines))
        assert ranks == ("1", "2")
        assert set(items) <= {"A", "B", "C"}
        assert all(len(s.split(".")[1]) == 6 for s in scores)

    def test_queries_file(self, capsys, trained, tmp_path):
        """Each query gets a header line."""
        queries = tmp_path / "q.txt"
        queries.write_text("A\nC\n")
        lines = stdout_of(capsys, ["predict", str(trained), "--queries", str(queries)]).splitlines()
        assert lines[0] == "# A"
        assert lines[3] == "# C"
        assert len(lines) == 6

    def test_beam_width_one_equals_greedy(self, capsys, trained):
        """Beam search with M = 1 prints exactly the greedy output."""
        argv = ["predict", str(trained), "--query", "B", "--strategy"]
        greedy = stdout_of(capsys, [*argv, "greedy"])
        beam = stdout_of(capsys, [*argv, "beam", "--beam-width", "1"])
        assert beam == greedy

    @pytest.mark.parametrize("token", ["A", "B", "C"])
    def test_zero_structure_iterative_equals_unstructured(
        self, capsys, zero_structure_model, token
    ):
        """Without structure the cascade prints the unstructured ranking."""
        base = ["predict", str(zero_structure_model), "--query", token, "--strategy"]
        assert stdout_of(capsys, [*base, "iterative"]) == stdout_of(capsys, [*base, "unstructured"])

    def test_k_above_item_count(self, trained):
        """--k larger than the item vocabulary is a usage error."""
        assert main(["predict", str(trained), "--query", "A", "--k", "4"]) == EXIT_USAGE

    def test_unknown_query(self, capsys, trained):
        """An unknown token is a data error and prints nothing."""
        capsys.readouterr()
        assert main(["predict", str(trained), "--query", "nope"]) == EXIT_DATA
        assert capsys.readouterr().out == ""

    def test_query_source_required(self, trained):
        """One of --query and --queries must be given."""
        with pytest.raises(SystemExit) as exc_info:
            main(["predict", str(trained)])
        assert exc_info.value.code == EXIT_USAGE


# ----------------------------------------------------------------------------
# bench-synthetic and usage
# ----------------------------------------------------------------------------


class TestMisc:
    """Tests for bench-synthetic and top-level usage."""

    def test_tiny_benchmark(self, capsys):
        """One seed on a small instance prints a seed line and the win counts."""
        argv = [
            "bench-synthetic",
            "--seeds",
            "1",
            "--n-items",
            "40",
            "--n-clusters",
            "4",
            "--n-queries",
            "10",
            "--dim",
            "4",
            "--k",
            "3",
            "--eval-every",
            "200",
            "--max-updates",
            "400",
        ]
        lines = stdout_of(capsys, argv).splitlines()
        assert lines[0].startswith("seed=0 recall@3_t0=")
        assert lines[1].startswith("structure_wins=")
        assert lines[-1].startswith("mean_improvement=")

    def test_missing_command(self):
        """No subcommand is a usage error."""
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == EXIT_USAGE

    def test_unknown_flag(self):
        """Unknown flags are usage errors."""
        with pytest.raises(SystemExit) as exc_info:
            main(["ingest", "a", "b", "--frobnicate"])
        assert exc_info.value.code == EXIT_USAGE

    def test_missing_input_file(self, tmp_path):
        """A missing input file exits with the data code."""
        assert main(["ingest", str(tmp_path / "absent.tsv"), str(tmp_path / "o")]) == EXIT_DATA


def test_config_keys_accept_dashes_and_aliases(tmp_path):
    """--lr and dashed names map to schema fields."""
    config = tmp_path / "c.txt"
    config.write_text("lr=0.1\nmax-updates=5\n--seed=3\nformat=json\n")
    values = deps.read_config_file(config)
    assert values == {
        "learning_rate": "0.1",
        "max_updates": "5",
        "seed": "3",
        "output_format": "json",
    }
    assert np.isclose(float(values["learning_rate"]), 0.1)
