import json

import pytest

from formulink import harness, ppo
from formulink.harness import (
    ComparisonReport,
    SweepRow,
    SweepTable,
    export,
    import_sweep_csv,
    import_sweep_json,
    run_comparison,
    run_sweep,
    validate_output,
    write_outputs,
)


@pytest.fixture(scope="module")
def sweep_table():
    return run_sweep(7)


@pytest.fixture(scope="module")
def small_comparison():
    # plumbing-level comparison; the full-size run lives in the acceptance suite
    return run_comparison(seeds=(1, 2), config=ppo.TrainConfig(iterations=2, seed=0))


class TestSweep:
    def test_fifteen_cells(self, sweep_table):
        assert len(sweep_table.rows) == 15
        settings = {(r.chunk_size, r.k) for r in sweep_table.rows}
        assert settings == {(cs, k) for cs in (1000, 2000, 3000, 4000, 5000)
                            for k in (1, 3, 10)}

    def test_deterministic(self, sweep_table):
        again = run_sweep(7)
        assert again.rows == sweep_table.rows

    def test_traces_recorded_for_every_cell(self, sweep_table):
        assert set(sweep_table.traces) == {(r.chunk_size, r.k) for r in sweep_table.rows}

    def test_outcome_vocabulary(self, sweep_table):
        allowed = {"done", "failed_max_rounds", "failed_quality",
                   "context_oversize", "ingest_error"}
        assert {r.outcome for r in sweep_table.rows} <= allowed


class TestExport:
    def test_json_round_trip(self, sweep_table, tmp_path):
        path = export(sweep_table, "json", tmp_path / "sweep.json")
        loaded = import_sweep_json(path)
        assert loaded.rows == sweep_table.rows
        assert loaded.corpus_seed == sweep_table.corpus_seed

    def test_csv_round_trip_and_row_count(self, sweep_table, tmp_path):
        path = export(sweep_table, "csv", tmp_path / "sweep.csv")
        rows = import_sweep_csv(path)
        assert rows == sweep_table.rows
        assert len(rows) == 15

    def test_sweep_json_schema(self, sweep_table):
        validate_output("sweep", sweep_table.to_json())

    def test_write_outputs_layout(self, sweep_table, tmp_path):
        written = write_outputs(sweep_table, tmp_path / "out")
        assert (tmp_path / "out" / "sweep.json").exists()
        assert (tmp_path / "out" / "sweep.csv").exists()
        assert (tmp_path / "out" / "traces" / "chunk2000_k1.json").exists()
        trace = json.loads((tmp_path / "out" / "traces" / "chunk2000_k1.json").read_text())
        assert len(trace["rounds"]) == 4

    def test_unknown_format_rejected(self, sweep_table, tmp_path):
        with pytest.raises(ValueError):
            export(sweep_table, "xml", tmp_path / "sweep.xml")


class TestComparisonPlumbing:
    def test_iai_diff_empty_and_manual_missing_rsma(self, small_comparison):
        assert small_comparison.diffs["iai_vs_real"]["missing_kinds"] == []
        assert small_comparison.diffs["iai_vs_real"]["extra_kinds"] == []
        assert small_comparison.diffs["manual_vs_real"]["missing_kinds"] == ["rsma_common_rate"]

    def test_arm_isolation_counters(self, small_comparison):
        # the manual arm's training rewards never include the rsma term,
        # while its reported scores always do
        assert small_comparison.training_terms["manual"]["rsma_common_rate"] == 0
        assert small_comparison.training_terms["real"]["rsma_common_rate"] > 0
        for arm in ("real", "iai", "manual"):
            for seed in small_comparison.seeds:
                report = small_comparison.reports[arm][seed]
                assert report.true_score_terms["rsma_common_rate"] > 0

    def test_scores_per_arm_and_seed(self, small_comparison):
        for arm in ("real", "iai", "manual"):
            assert set(small_comparison.scores[arm]) == set(small_comparison.seeds)

    def test_comparison_json_schema(self, small_comparison):
        validate_output("comparison", small_comparison.to_json())

    def test_csv_export(self, small_comparison, tmp_path):
        path = export(small_comparison, "csv", tmp_path / "comparison.csv")
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "arm,seed,final_score"
        assert len(lines) == 1 + 3 * len(small_comparison.seeds)

    def test_iai_arm_reuses_real_runs_when_identical(self, small_comparison):
        for seed in small_comparison.seeds:
            assert small_comparison.scores["iai"][seed] == small_comparison.scores["real"][seed]


class TestSchemaValidator:
    def test_rejects_missing_key(self):
        with pytest.raises(ValueError):
            validate_output("sweep", {"schema_version": 1, "rows": []})

    def test_rejects_bad_enum(self):
        payload = {"schema_version": 1, "corpus_seed": 7,
                   "rows": [{"chunk_size": 1000, "k": 1, "outcome": "exploded", "rounds": 1}]}
        with pytest.raises(ValueError):
            validate_output("sweep", payload)

    def test_rejects_wrong_type(self):
        payload = {"schema_version": "one", "corpus_seed": 7, "rows": []}
        with pytest.raises(ValueError):
            validate_output("sweep", payload)


class TestIaiSource:
    def test_formulation_text_available_at_passing_setting(self):
        text = harness.iai_formulation_text(7)
        from formulink.formulation import parse_formulation
        assert parse_formulation(text) is not None
