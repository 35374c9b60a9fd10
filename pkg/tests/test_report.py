import numpy as np
import pytest

from models.report import FitReport, IterationRecord, RunRecord, RunReport, RunSummary, StepKind
from models.tree import ModelParams


def record(fold, variant, r2_test, gini=None, wall_time=1.0):
    return RunRecord(fold, 0, variant, r2_test=r2_test, r2_train=0.5, train_error=0.1,
                     gini=gini, wall_time=wall_time)


class TestStepKind:
    @pytest.mark.parametrize("kind", list(StepKind))
    def test_label_round_trip(self, kind):
        assert StepKind.from_label(kind.label) is kind

    def test_wlr_kinds(self):
        assert [kind.label for kind in StepKind if kind.is_wlr] == [
            "heuristic-wlr-moderate", "heuristic-wlr-reassign",
        ]


class TestFitReport:
    def test_trace_views(self):
        model = ModelParams.zeros(1, 2)
        trace = [
            IterationRecord(0, 0, 1, StepKind.ARMIJO_REFERENCE, 1.0, 0.75, 0.5),
            IterationRecord(1, 1, 1, StepKind.HEURISTIC_WLR_REASSIGN, 0.5, 0.625, 0.25, leaf_step_skipped=True),
        ]
        report = FitReport(model, 0.25, 1.0, model, trace)
        assert report.error_trace == [0.5, 0.25]
        assert report.trace_lines()[1] == "1, 1, 1, heuristic-wlr-reassign, 0.625, 0.25"
        data = report.to_dict()
        assert data["trace"][1]["leaf_step_skipped"] is True
        assert data["trace"][0]["step_kind"] == "armijo-reference"


class TestRunSummary:
    def test_population_statistics(self):
        summary = RunSummary.from_records("full", [
            record(0, "full", 0.5, gini=0.2, wall_time=1.0),
            record(1, "full", 0.7, gini=0.4, wall_time=3.0),
            record(2, "full", -0.3, gini=0.1, wall_time=2.0),
        ])
        assert summary.n_runs == 3
        assert summary.mean_r2 == pytest.approx(0.3)
        assert summary.std_r2 == pytest.approx(np.std([0.5, 0.7, -0.3]))
        assert summary.negative_r2_count == 1
        assert summary.median_gini == pytest.approx(0.2)
        assert summary.mean_wall_time == pytest.approx(2.0)

    def test_no_gini(self):
        assert RunSummary.from_records("plain", [record(0, "plain", 0.1)]).median_gini is None

    def test_timing_optional_in_dict(self):
        summary = RunSummary.from_records("full", [record(0, "full", 0.1)])
        assert "mean_wall_time" not in summary.to_dict()
        assert summary.to_dict(include_timing=True)["mean_wall_time"] == 1.0


class TestRunReport:
    @pytest.fixture
    def report(self):
        records = [record(0, "plain", 0.2), record(0, "full", 0.6), record(1, "plain", -0.1), record(1, "full", 0.8)]
        return RunReport("synth-bench", {"depth": 2}, records, data_path=None)

    def test_variants_in_first_seen_order(self, report):
        assert report.variants == ["plain", "full"]
        assert [summary.variant for summary in report.summaries()] == ["plain", "full"]

    def test_summary_for(self, report):
        assert report.summary_for("full").mean_r2 == pytest.approx(0.7)

    def test_dict_excludes_timing(self, report):
        data = report.to_dict()
        assert set(data) == {"command", "data_path", "data_sha256", "config", "runs", "summary"}
        assert "wall_time" not in data["runs"][0]
        assert "mean_wall_time" not in data["summary"][0]

    def test_timing_dict(self, report):
        timing = report.timing_dict()
        assert len(timing["runs"]) == 4
        assert timing["summary"][0] == {"variant": "plain", "mean_wall_time": 1.0}

    def test_from_dict(self, report):
        restored = RunReport.from_dict(report.to_dict())
        assert restored.command == "synth-bench"
        assert [r.r2_test for r in restored.records] == [0.2, 0.6, -0.1, 0.8]
        assert restored.to_dict() == report.to_dict()
