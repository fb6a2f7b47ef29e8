"""Structured evaluation report"""

from collections import defaultdict
from collections.abc import Iterable, Sequence
from logging import getLogger
from pathlib import Path

from pydantic import BaseModel, Field

from dual_view_seg.config.constants import PRECISION_THRESHOLDS
from dual_view_seg.models import EvalRecord
from dual_view_seg.training.metrics import miou, oiou, precision_at

logger = getLogger(__name__)


def precision_key(threshold: float) -> str:
    return f"Pr@{threshold:.1f}"


class MetricSummary(BaseModel):
    """Metrics over one group of samples, in the usual column order"""

    precision: dict[str, float] = Field(default_factory=dict)
    oIoU: float
    mIoU: float
    samples: int


class MetricsReport(BaseModel):
    overall: MetricSummary
    per_category: dict[str, MetricSummary] = Field(default_factory=dict)
    per_size_class: dict[str, MetricSummary] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "MetricsReport":
        return cls.model_validate_json(path.read_text(encoding="utf-8"))


def summarize(
    records: Sequence[EvalRecord],
    thresholds: Sequence[float] = PRECISION_THRESHOLDS,
) -> MetricSummary:
    return MetricSummary(
        precision={precision_key(t): precision_at(records, t) for t in thresholds},
        oIoU=oiou(records),
        mIoU=miou(records),
        samples=len(records),
    )


def _buckets(
    records: Sequence[EvalRecord],
    attribute: str,
    expected: Iterable[str],
    warnings: list[str],
) -> dict[str, MetricSummary]:
    groups: dict[str, list[EvalRecord]] = defaultdict(list)
    for record in records:
        key = getattr(record, attribute)
        if key:
            groups[key].append(record)
    for name in sorted(set(expected) - set(groups)):
        warnings.append(f"{attribute} '{name}' has no samples")
    return {name: summarize(groups[name]) for name in sorted(groups)}


def emit_report(
    records: Sequence[EvalRecord],
    categories: Iterable[str] = (),
    size_classes: Iterable[str] = (),
) -> MetricsReport:
    """Overall metrics plus per-category and per-size-class breakdowns

    Expected buckets that received no sample are omitted and listed under
    warnings.
    """
    warnings: list[str] = []
    report = MetricsReport(
        overall=summarize(records),
        per_category=_buckets(records, "category", categories, warnings),
        per_size_class=_buckets(records, "size_class", size_classes, warnings),
        warnings=warnings,
    )
    for warning in warnings:
        logger.warning(warning)
    return report
