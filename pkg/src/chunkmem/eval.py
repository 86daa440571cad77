"""Metrics over trial records, per-step series, and report files."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from statistics import fmean

from .agent import TrialRecord

SCHEMA_VERSION = 1
OVERALL = "Overall"


class EmptyRecords(ValueError):
    pass


class MissingBaseline(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRow:
    task: str
    variant: str
    trials: int
    success_rate: float
    progress_rate: float
    progress_rate_final: float
    avg_steps: float
    context_tokens_mean: float
    time_ms_mean: float
    context_relative: float | None = None
    time_relative: float | None = None


@dataclass(frozen=True)
class MetricsSummary:
    rows: tuple[MetricsRow, ...]
    baseline: str | None = None

    def row(self, task: str, variant: str) -> MetricsRow:
        for r in self.rows:
            if r.task == task and r.variant == variant:
                return r
        raise KeyError((task, variant))

    @property
    def tasks(self) -> list[str]:
        return list(dict.fromkeys(r.task for r in self.rows if r.task != OVERALL))

    @property
    def variants(self) -> list[str]:
        return list(dict.fromkeys(r.variant for r in self.rows))

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "rows": [asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> MetricsSummary:
        return cls(tuple(MetricsRow(**r) for r in data["rows"]), data.get("baseline"))


def _trial_steps(r: TrialRecord) -> int:
    return r.steps_used if r.success else r.max_steps


def _trial_context(r: TrialRecord) -> float | None:
    if not r.per_step:
        return None
    return fmean(s.context_tokens for s in r.per_step)


def _group(records: Iterable[TrialRecord]) -> dict[tuple[str, str], list[TrialRecord]]:
    groups: dict[tuple[str, str], list[TrialRecord]] = defaultdict(list)
    for r in records:
        if not r.failed:
            groups[(r.task, r.variant)].append(r)
    return dict(sorted(groups.items()))


def summarize_metrics(
    records: Sequence[TrialRecord], baseline_variant: str | None = None
) -> MetricsSummary:
    """One row per (task, variant) plus an unweighted ``Overall`` row per variant.

    Failed trials are excluded. Context and time are also given relative to
    the baseline variant of the same task, in percent.
    """
    groups = _group(records)
    if not groups:
        raise EmptyRecords("no usable trial records")
    tasks = sorted({t for t, _ in groups})
    if baseline_variant is not None:
        missing = [t for t in tasks if (t, baseline_variant) not in groups]
        if missing:
            raise MissingBaseline(
                f"baseline {baseline_variant!r} has no records for: {', '.join(missing)}")

    raw: dict[tuple[str, str], MetricsRow] = {}
    for (task, variant), trials in groups.items():
        contexts = [c for c in map(_trial_context, trials) if c is not None]
        raw[(task, variant)] = MetricsRow(
            task=task,
            variant=variant,
            trials=len(trials),
            success_rate=100.0 * sum(r.success for r in trials) / len(trials),
            progress_rate=100.0 * fmean(r.max_progress for r in trials),
            progress_rate_final=100.0 * fmean(r.final_progress for r in trials),
            avg_steps=fmean(_trial_steps(r) for r in trials),
            context_tokens_mean=fmean(contexts) if contexts else 0.0,
            time_ms_mean=fmean(r.total_wall_ms for r in trials),
        )

    rows = []
    for (task, variant), row in raw.items():
        if baseline_variant is not None:
            base = raw[(task, baseline_variant)]
            row = MetricsRow(**{
                **asdict(row),
                "context_relative": _relative(row.context_tokens_mean, base.context_tokens_mean),
                "time_relative": _relative(row.time_ms_mean, base.time_ms_mean),
            })
        rows.append(row)

    variants = list(dict.fromkeys(v for _, v in sorted(groups, key=lambda k: k[1])))
    for variant in variants:
        mine = [r for r in rows if r.variant == variant]
        rows.append(MetricsRow(
            task=OVERALL,
            variant=variant,
            trials=sum(r.trials for r in mine),
            success_rate=fmean(r.success_rate for r in mine),
            progress_rate=fmean(r.progress_rate for r in mine),
            progress_rate_final=fmean(r.progress_rate_final for r in mine),
            avg_steps=fmean(r.avg_steps for r in mine),
            context_tokens_mean=fmean(r.context_tokens_mean for r in mine),
            time_ms_mean=fmean(r.time_ms_mean for r in mine),
            context_relative=_mean_or_none([r.context_relative for r in mine]),
            time_relative=_mean_or_none([r.time_relative for r in mine]),
        ))
    return MetricsSummary(tuple(rows), baseline_variant)


def _relative(value: float, base: float) -> float | None:
    if base == 0:
        return 100.0 if value == 0 else None
    return 100.0 * value / base


def _mean_or_none(values: list[float | None]) -> float | None:
    if not values or any(v is None for v in values):
        return None
    return fmean(v for v in values if v is not None)


# -- per-step series ----------------------------------------------------------


@dataclass(frozen=True)
class SeriesPoint:
    task: str
    variant: str
    bin_start: int
    progress: float
    executability: float | None
    actions: int
    executable: int


@dataclass(frozen=True)
class StepSeries:
    bin_width: int
    points: tuple[SeriesPoint, ...]

    def to_dict(self) -> dict:
        return {"bin_width": self.bin_width, "points": [asdict(p) for p in self.points]}

    @classmethod
    def from_dict(cls, data: dict) -> StepSeries:
        return cls(data["bin_width"], tuple(SeriesPoint(**p) for p in data["points"]))

    def values(self, task: str, variant: str, field_name: str) -> list:
        return [getattr(p, field_name) for p in self.points
                if p.task == task and p.variant == variant]


def step_series(records: Sequence[TrialRecord], bin_width: int = 5) -> StepSeries:
    """Progress and executability in bins of ``bin_width`` steps.

    Progress in bin b is the running maximum up to its last step, averaged
    over trials; trials that ended earlier carry their last value forward.
    Executability pools actions across trials and is ``None`` for a bin in
    which no trial acted.
    """
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    groups = _group(records)
    points = []
    for (task, variant), trials in groups.items():
        horizon = max(r.max_steps for r in trials)
        bins = math.ceil(horizon / bin_width)
        running = []
        for r in trials:
            best, curve = r.initial_progress, []
            for s in r.per_step:
                best = max(best, s.progress)
                curve.append(best)
            running.append((r.initial_progress, curve))
        for b in range(bins):
            lo, hi = b * bin_width, (b + 1) * bin_width
            values = []
            for initial, curve in running:
                upto = curve[:hi]
                values.append(upto[-1] if upto else initial)
            acted = [s for r in trials for s in r.per_step if lo < s.step_index <= hi]
            ok = sum(s.executable for s in acted)
            points.append(SeriesPoint(
                task=task,
                variant=variant,
                bin_start=lo + 1,
                progress=fmean(values),
                executability=ok / len(acted) if acted else None,
                actions=len(acted),
                executable=ok,
            ))
    return StepSeries(bin_width, tuple(points))


# -- reports ------------------------------------------------------------------

_TABLE_METRICS = (
    ("SR", "success_rate"),
    ("PR", "progress_rate"),
    ("Steps", "avg_steps"),
    ("Context", "context_relative"),
    ("Time", "time_relative"),
)


def _cell(row: MetricsRow, base: MetricsRow | None, attr: str) -> str:
    value = getattr(row, attr)
    if value is None:
        return "-"
    text = f"{value:.2f}" + ("%" if attr.endswith("relative") else "")
    if base is not None and base is not row and getattr(base, attr) is not None:
        text += f" ({value - getattr(base, attr):+.2f})"
    return text


def format_table(summary: MetricsSummary) -> str:
    """Plain-text table: one block per task and a closing Overall block."""
    headers = ["Task", "Variant"] + [name for name, _ in _TABLE_METRICS]
    body: list[list[str]] = []
    for task in summary.tasks + [OVERALL]:
        block = sorted((r for r in summary.rows if r.task == task),
                       key=lambda r: r.variant != summary.baseline)
        base = next((r for r in block if r.variant == summary.baseline), None)
        for i, row in enumerate(block):
            cells = [task if i == 0 else "", row.variant]
            cells += [_cell(row, base, attr) for _, attr in _TABLE_METRICS]
            body.append(cells)
        body.append([])
    widths = [max(len(h), *(len(r[i]) for r in body if r)) for i, h in enumerate(headers)]

    def line(cells: list[str]) -> str:
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = [line(headers), line(["-" * w for w in widths])]
    out += [line(r) if r else "" for r in body]
    note = (f"Context and Time are relative to {summary.baseline} (= 100%); "
            "parenthesised values are differences from it.") if summary.baseline else \
        "No baseline given; relative columns are empty."
    return "\n".join(out).rstrip("\n") + "\n\n" + note + "\n"


def _series_csv(series: StepSeries, attr: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task", "variant", "bin_start", "value"])
    for p in series.points:
        value = getattr(p, attr)
        writer.writerow([p.task, p.variant, p.bin_start, "" if value is None else repr(value)])
    return buf.getvalue()


def _metrics_csv(summary: MetricsSummary) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(MetricsRow)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in summary.rows:
        writer.writerow(["" if getattr(row, n) is None else getattr(row, n) for n in names])
    return buf.getvalue()


def report_bundle(summary: MetricsSummary, series: StepSeries) -> dict:
    return {"schema_version": SCHEMA_VERSION, "summary": summary.to_dict(),
            "series": series.to_dict()}


def emit_report(
    summary: MetricsSummary,
    series: StepSeries,
    out_dir: Path,
    formats: Iterable[str] = ("table-text", "csv", "json"),
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    formats = set(formats)
    unknown = formats - {"table-text", "csv", "json"}
    if unknown:
        raise ValueError(f"unknown report format(s): {', '.join(sorted(unknown))}")
    if "table-text" in formats:
        files["table.txt"] = format_table(summary)
    if "csv" in formats:
        files["metrics.csv"] = _metrics_csv(summary)
        files["progress_by_step.csv"] = _series_csv(series, "progress")
        files["executability_by_step.csv"] = _series_csv(series, "executability")
    if "json" in formats:
        files["report.json"] = json.dumps(report_bundle(summary, series), indent=2,
                                          sort_keys=True) + "\n"
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def load_report(path: Path) -> tuple[MetricsSummary, StepSeries]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {data.get('schema_version')!r}")
    return MetricsSummary.from_dict(data["summary"]), StepSeries.from_dict(data["series"])
