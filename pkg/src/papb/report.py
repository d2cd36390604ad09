"""Results files, priced reports and plot tables.

A results file is JSON lines::

    {"kind": "header", "schema_version": 1, "metadata": {...}}
    {"kind": "run", ...}          # one per RunResult, in execution order
    {"kind": "aggregate", ...}    # one per averaged workload
    {"kind": "quote", ...}        # one per CostQuote (priced reports only)
    {"kind": "trailer", "total_cost": ..., "runs": ..., ...}

Floats are written with ``repr`` so every value survives a round trip.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import warnings
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from papb.cost import CostQuote, total_cost
from papb.errors import InconsistentWorkloadSets, ParseError, SchemaVersionMismatch, ValidationError
from papb.harness import RunResult

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ReportMetadata:
    cluster_id: str
    region: str
    currency: str
    node_count: int
    timestamp: datetime
    scenario: str | None = None
    seed: int | None = None
    noise_fraction: float | None = None
    executor: str = "simulated"
    cluster: dict | None = field(default=None, hash=False)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["timestamp"] = _format_ts(self.timestamp)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ReportMetadata":
        data = dict(data)
        data["timestamp"] = _parse_ts(data["timestamp"])
        return cls(**data)


@dataclass(frozen=True)
class BenchmarkReport:
    metadata: ReportMetadata
    runs: tuple[RunResult, ...] = ()
    aggregates: tuple[RunResult, ...] = ()
    quotes: tuple[CostQuote, ...] = ()
    total_cost: float = 0.0

    def __post_init__(self):
        for name in ("runs", "aggregates", "quotes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        expected = total_cost(self.quotes)
        if not math.isclose(self.total_cost, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ValidationError(f"total_cost {self.total_cost} != sum of quotes {expected}")
        if any(not a.is_aggregate for a in self.aggregates):
            raise ValidationError("aggregates must carry run_index 0")

    @property
    def failures(self) -> int:
        return sum(not r.success for r in self.runs)

    def priced(self, quotes: Iterable[CostQuote]) -> "BenchmarkReport":
        quotes = tuple(quotes)
        return replace(self, quotes=quotes, total_cost=total_cost(quotes))


def _format_ts(ts: datetime) -> str:
    if ts.tzinfo is None:
        raise ValidationError("timestamps must be timezone-aware UTC")
    return ts.astimezone(timezone.utc).isoformat()


def _parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text).astimezone(timezone.utc)


def _run_record(kind: str, r: RunResult) -> dict:
    data = asdict(r)
    data["timestamp"] = _format_ts(r.timestamp)
    data["kind"] = kind
    return data


def _run_from_record(data: dict) -> RunResult:
    data = dict(data)
    data.pop("kind")
    data["timestamp"] = _parse_ts(data["timestamp"])
    return RunResult(**data)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def render_results(report: BenchmarkReport) -> str:
    lines = [_dumps({"kind": "header", "schema_version": SCHEMA_VERSION,
                     "metadata": report.metadata.to_dict()})]
    lines += [_dumps(_run_record("run", r)) for r in report.runs]
    lines += [_dumps(_run_record("aggregate", a)) for a in report.aggregates]
    lines += [_dumps({"kind": "quote", **asdict(q)}) for q in report.quotes]
    lines.append(_dumps({
        "kind": "trailer",
        "total_cost": report.total_cost,
        "currency": report.metadata.currency,
        "runs": len(report.runs),
        "aggregates": len(report.aggregates),
        "quotes": len(report.quotes),
        "failures": report.failures,
    }))
    return "\n".join(lines) + "\n"


def emit_results(report: BenchmarkReport, path) -> Path:
    """Write ``report`` atomically (temp file in the same dir, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_results(report))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def parse_results_text(text: str, path=None) -> BenchmarkReport:
    header = trailer = None
    runs, aggregates, quotes = [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if trailer is not None:
            raise ParseError("content after trailer", path=path, line=lineno)
        try:
            record = json.loads(line)
            kind = record["kind"]
            if header is None:
                if kind != "header":
                    raise ParseError("first record must be the header", path=path, line=lineno)
                version = record.get("schema_version")
                if version != SCHEMA_VERSION:
                    raise SchemaVersionMismatch(
                        f"schema_version {version!r}, expected {SCHEMA_VERSION}", path=path, line=lineno)
                header = ReportMetadata.from_dict(record["metadata"])
            elif kind == "run":
                runs.append(_run_from_record(record))
            elif kind == "aggregate":
                aggregates.append(_run_from_record(record))
            elif kind == "quote":
                record.pop("kind")
                quotes.append(CostQuote(**record))
            elif kind == "trailer":
                trailer = record
            else:
                raise ParseError(f"unknown record kind {kind!r}", path=path, line=lineno)
        except ParseError:
            raise
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"bad record: {exc}", path=path, line=lineno) from exc
    if header is None:
        raise ParseError("empty results file", path=path)
    if trailer is None:
        raise ParseError("missing trailer (truncated file?)", path=path)
    counts = {"runs": len(runs), "aggregates": len(aggregates), "quotes": len(quotes)}
    for key, count in counts.items():
        if trailer.get(key) != count:
            raise ParseError(f"trailer says {trailer.get(key)} {key}, found {count}", path=path)
    try:
        return BenchmarkReport(header, tuple(runs), tuple(aggregates), tuple(quotes),
                               float(trailer["total_cost"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad trailer: {exc}", path=path) from exc


def parse_results(path) -> BenchmarkReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read results: {exc.strerror}", path=path) from exc
    return parse_results_text(text, path=path)


# --- plot tables ---------------------------------------------------------------

def plot_tables(reports: Iterable[BenchmarkReport]) -> tuple[list[tuple[str, int, float]], list[tuple[str, int, float]]]:
    """Long-format ``(workload, node_count, value)`` rows for cost and mean time.

    Rows are sorted by workload id, then node count.  When reports cover
    different workloads, only the common ones are kept (with a warning).
    """
    reports = list(reports)
    if not reports:
        raise ValidationError("need at least one report")
    sets = [{a.workload_id for a in r.aggregates} for r in reports]
    common = set.intersection(*sets)
    if any(s != common for s in sets):
        dropped = sorted(set.union(*sets) - common)
        warnings.warn(f"workload sets differ; dropping {', '.join(dropped)}",
                      InconsistentWorkloadSets, stacklevel=2)
    times, costs = {}, {}
    for report in reports:
        for a in report.aggregates:
            if a.workload_id in common:
                key = (a.workload_id, a.node_count)
                if key in times:
                    raise ValidationError(f"duplicate aggregate for {key}")
                times[key] = a.duration_s
        for q in report.quotes:
            if q.workload_id in common:
                costs[(q.workload_id, q.node_count)] = q.cost
    cost_rows = [(w, n, v) for (w, n), v in sorted(costs.items())]
    time_rows = [(w, n, v) for (w, n), v in sorted(times.items())]
    return cost_rows, time_rows


def render_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["workload", "node_count", "value"])
    for workload, n, value in rows:
        writer.writerow([workload, n, repr(float(value))])
    return buf.getvalue()


def emit_plot_data(reports: Iterable[BenchmarkReport], out_dir) -> tuple[Path, Path]:
    cost_rows, time_rows = plot_tables(reports)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cost_path, time_path = out_dir / "cost.csv", out_dir / "time.csv"
    cost_path.write_text(render_csv(cost_rows))
    time_path.write_text(render_csv(time_rows))
    return cost_path, time_path
