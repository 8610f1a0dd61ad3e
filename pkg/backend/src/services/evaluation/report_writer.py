"""
Writes evaluation reports as CSV and JSON files plus a rendered markdown summary.

Files written into the report directory:
    deviation_<dataset>.csv      state, mean, std
    moments.csv                  dataset, component, moment, value
    policy_metrics.csv           one row per evaluated policy
    trajectories_<dataset>.csv   datum, t, state, value, source
    report.json                  the full EvaluationReport
    summary.md                   human-readable summary
"""

from __future__ import annotations

import logging
import os
from typing import Any, Optional

import pandas as pd
from jinja2 import exceptions

from backend.src.common.constants import FILES_DIR
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import KnownException, ReportGenerationError
from backend.src.schemas.dataset import DatasetManifest
from backend.src.schemas.reports import EvaluationReport
from backend.src.services.datasets.writers.csv_dataset_writer import CSV_FLOAT_FORMAT
from backend.src.utils.helpers import ensure_dir, read_file

logger = logging.getLogger(__name__)

SUMMARY_TEMPLATE = "summary.md.j2"


def _write_csv(frame: pd.DataFrame, path: str) -> str:
    try:
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise ReportGenerationError(ErrorCode.REPORT_WRITE_FAILED, "csv", f"{path}: {e}") from e
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def _write_text(text: str, path: str) -> str:
    try:
        with open(path, mode="w", encoding="utf-8") as out_file:
            out_file.write(text)
    except OSError as e:
        raise ReportGenerationError(ErrorCode.REPORT_WRITE_FAILED, "text", f"{path}: {e}") from e
    return path


def render_summary(report: EvaluationReport, context: Optional[dict[str, Any]] = None) -> str:
    """
    Renders the markdown summary template.

    Raises:
        ReportGenerationError: If the template is missing or fails to render.
    """
    data: dict[str, Any] = {
        "recipe": report.recipe,
        "tool_version": None,
        "master_seed": None,
        "datasets": [],
    }
    data.update(context or {})
    data["report"] = report
    try:
        template = read_file(os.path.join(FILES_DIR, SUMMARY_TEMPLATE))
        return template.render(data)
    except KnownException as e:
        raise ReportGenerationError(ErrorCode.REPORT_TEMPLATE_ERROR, "summary", e.details) from e
    except (exceptions.TemplateError, TypeError) as e:
        logger.exception("failed to render %s", SUMMARY_TEMPLATE)
        raise ReportGenerationError(ErrorCode.REPORT_TEMPLATE_ERROR, "summary", str(e)) from e


def emit_report(
    report: EvaluationReport,
    directory: str,
    trajectories: Optional[dict[str, pd.DataFrame]] = None,
    datasets: Optional[list[DatasetManifest]] = None,
    context: Optional[dict[str, Any]] = None,
) -> dict[str, str]:
    """
    Writes every part of ``report`` that is present.

    Args:
        report: Evaluation results.
        directory: Output directory, created if missing.
        trajectories: Long-format trajectory frames keyed by dataset name.
        datasets: Manifests listed in the summary.
        context: Extra summary template variables (tool_version, master_seed).

    Returns:
        Written file paths keyed by a short artifact name.

    Raises:
        ReportGenerationError: If a file cannot be written or the summary fails to render.
    """
    ensure_dir(directory)
    written: dict[str, str] = {}
    for deviation in report.deviation:
        key = f"deviation_{deviation.dataset}"
        written[key] = _write_csv(deviation.to_frame(), os.path.join(directory, f"{key}.csv"))
    if report.moments is not None:
        written["moments"] = _write_csv(
            report.moments.to_frame(), os.path.join(directory, "moments.csv")
        )
    if report.policies:
        frame = pd.DataFrame([metrics.model_dump() for metrics in report.policies])
        written["policy_metrics"] = _write_csv(
            frame, os.path.join(directory, "policy_metrics.csv")
        )
    for name, frame in (trajectories or {}).items():
        key = f"trajectories_{name}"
        written[key] = _write_csv(frame, os.path.join(directory, f"{key}.csv"))

    written["report"] = _write_text(
        report.model_dump_json(indent=2), os.path.join(directory, "report.json")
    )
    summary_context = dict(context or {})
    summary_context["datasets"] = [m.model_dump() for m in datasets or []]
    written["summary"] = _write_text(
        render_summary(report, summary_context), os.path.join(directory, "summary.md")
    )
    logger.info("report of %s written to %s (%d files)", report.recipe, directory, len(written))
    return written
