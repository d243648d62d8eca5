import io
import json

import pytest

from formulink import harness, knowledge, simworld
from formulink.cli import _parse_seed_range, cli_main


class TestUsageErrors:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc_info:
            cli_main(["sweep", "--bogus-flag"])
        assert exc_info.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc_info:
            cli_main([])
        assert exc_info.value.code == 2

    def test_seed_range_parsing(self):
        assert _parse_seed_range("1..5") == (1, 2, 3, 4, 5)
        assert _parse_seed_range("2,7,9") == (2, 7, 9)


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus")
    doc, _ = simworld.generate_corpus(7)
    knowledge.write_corpus(path, [doc])
    return path


class TestIngest:
    def test_success(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "index.json"
        code = cli_main(["ingest", str(corpus_dir), "--chunk-size", "2000",
                         "--out", str(out)])
        assert code == 0
        index = knowledge.load_index(out)
        assert len(index.chunks) == 14

    def test_oversize_chunk_exits_1_and_names_chunk(self, corpus_dir, capsys):
        code = cli_main(["ingest", str(corpus_dir), "--chunk-size", "5000"])
        assert code == 1
        err = capsys.readouterr().err
        assert "5000" in err
        assert "chunk=0" in err

    def test_missing_corpus_exits_1(self, tmp_path, capsys):
        code = cli_main(["ingest", str(tmp_path / "nowhere"), "--chunk-size", "1000"])
        assert code == 1


class TestSweepCommand:
    def test_writes_fifteen_rows(self, tmp_path, capsys):
        out = tmp_path / "sweep-out"
        code = cli_main(["sweep", "--seed", "7", "--out", str(out)])
        assert code == 0
        data = json.loads((out / "sweep.json").read_text())
        assert len(data["rows"]) == 15
        assert (out / "sweep.csv").read_text().count("\n") == 16  # header + 15


class TestChatCommand:
    def test_scripted_happy_path(self, monkeypatch, capsys):
        lines = [
            "I need a formulation please.",
            "Scenario: reflective surface with power splitting, two users.",
            "Objective is EE.",
            "Go ahead and gather the rest.",
            "Finalize it.",
        ]
        monkeypatch.setattr("sys.stdin", io.StringIO("\n".join(lines) + "\n"))
        code = cli_main(["chat", "--k", "1", "--profile", "scripted-model",
                         "--chunk-size", "2000"])
        out = capsys.readouterr().out
        assert code == 0
        assert "session DONE in 4 rounds" in out
        assert "retrieved" in out
        assert "prompt tokens" in out

    def test_failing_setting_exits_1(self, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO("hello\nagain\n"))
        code = cli_main(["chat", "--k", "10", "--profile", "scripted-model",
                         "--chunk-size", "2000"])
        assert code == 1
        assert "context_oversize" in capsys.readouterr().out


class TestCompareCommand:
    def test_smoke_run_with_reduced_iterations(self, tmp_path, capsys):
        out = tmp_path / "cmp-out"
        code = cli_main(["compare", "--seeds", "1,2", "--out", str(out),
                         "--iterations", "2"])
        assert code == 0
        data = json.loads((out / "comparison.json").read_text())
        assert set(data["arms"]) == {"real", "iai", "manual"}
        assert (out / "comparison.csv").exists()
