"""
Unit tests for report emission.
"""

import json
import os
import tempfile
import unittest
from unittest.mock import patch

import pandas as pd

from backend.src.common.known_exception import ReportGenerationError
from backend.src.schemas.reports import (
    EvaluationReport,
    MomentRow,
    MomentsReport,
    PolicyMetrics,
    empty_deviation,
)
from backend.src.services.evaluation import report_writer
from backend.src.services.evaluation.report_writer import emit_report, render_summary


def sample_report() -> EvaluationReport:
    return EvaluationReport(
        recipe="RL-25",
        deviation=[empty_deviation("real-PA-25", 2)],
        moments=MomentsReport(
            reference="real-PA-25",
            singular_values=[3.0, 2.0, 1.0],
            rows=[MomentRow(dataset="real-PA-25", component=1, moment="mean", value=0.25)],
        ),
        policies=[
            PolicyMetrics(
                label="bppo",
                episodes=4,
                reward_mode="bppo",
                mean_reward=-12.5,
                std_reward=3.0,
                success_rate=25.0,
                control_cost_mean=900.0,
                control_cost_std=10.0,
                final_deviation_mean=1.5,
                final_deviation_std=0.5,
                seed=3,
            )
        ],
    )


class TestReportWriter(unittest.TestCase):
    """CSV, JSON and markdown outputs."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = os.path.join(self.tmp.name, "evaluation")

    def tearDown(self):
        self.tmp.cleanup()

    def test_every_artifact_is_written(self):
        trajectories = {
            "real-PA-25": pd.DataFrame(
                [[0, 0.0, "x1", 1.0, "stored"]],
                columns=["datum", "t", "state", "value", "source"],
            )
        }
        written = emit_report(
            sample_report(),
            self.directory,
            trajectories=trajectories,
            context={"tool_version": "1.0.0", "master_seed": 42},
        )
        self.assertEqual(
            set(written),
            {
                "deviation_real-PA-25",
                "moments",
                "policy_metrics",
                "trajectories_real-PA-25",
                "report",
                "summary",
            },
        )
        for path in written.values():
            self.assertTrue(os.path.isfile(path))

        deviation = pd.read_csv(written["deviation_real-PA-25"])
        self.assertEqual(list(deviation.columns), ["state", "mean", "std"])
        self.assertEqual(len(deviation), 6)
        policies = pd.read_csv(written["policy_metrics"])
        self.assertEqual(policies.loc[0, "label"], "bppo")
        with open(written["report"], encoding="utf-8") as handle:
            self.assertEqual(EvaluationReport.model_validate(json.load(handle)), sample_report())
        with open(written["summary"], encoding="utf-8") as handle:
            summary = handle.read()
        self.assertIn("# RL-25 run summary", summary)
        self.assertIn("Master seed: 42", summary)
        self.assertIn("| bppo |", summary)

    def test_empty_report_still_has_summary(self):
        written = emit_report(EvaluationReport(), self.directory)
        self.assertEqual(set(written), {"report", "summary"})

    def test_missing_template(self):
        with patch.object(report_writer, "SUMMARY_TEMPLATE", "absent.md.j2"):
            with self.assertRaises(ReportGenerationError):
                render_summary(sample_report())

    def test_unwritable_directory(self):
        blocker = os.path.join(self.tmp.name, "file")
        with open(blocker, mode="w", encoding="utf-8") as handle:
            handle.write("x")
        with self.assertRaises(ReportGenerationError):
            report_writer._write_csv(pd.DataFrame({"a": [1]}), os.path.join(blocker, "x.csv"))
