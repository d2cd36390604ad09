"""Workload catalog and per-workload configuration rendering.

Sizes given in GB are binary gigabytes (``GIB = 2**30`` bytes) everywhere in
this package.  Row counts are exact integers: "1 billion" is ``10**9``.

Rendered configs are flat ``key value`` lines sorted by key, with keys
namespaced as ``datasize.*``, ``algo.*`` and ``run.repeats``.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, TextIO

from papb.errors import InvalidSelection, NonPositiveScale, ParseError, UnknownParameter

GIB = 2**30
DEFAULT_REPEATS = 3

_UNITS = {"": 1, "B": 1, "KB": 2**10, "MB": 2**20, "GB": GIB, "TB": 2**40,
          "KIB": 2**10, "MIB": 2**20, "GIB": GIB, "TIB": 2**40}
_SIZE_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]*)\s*$")

# short parameter name -> rendered key
PARAM_KEYS = {
    "rows": "datasize.rows",
    "left_rows": "datasize.left_rows",
    "right_rows": "datasize.right_rows",
    "bytes": "datasize.bytes",
    "pages": "datasize.pages",
    "k": "algo.k",
    "max_iterations": "algo.max_iterations",
    "iterations": "algo.iterations",
}
REPEATS_KEY = "run.repeats"
_KEY_PARAMS = {v: k for k, v in PARAM_KEYS.items()}


class Engine(str, Enum):
    HADOOP = "hadoop"
    SPARK = "spark"


class Category(str, Enum):
    MICRO = "micro"
    ML = "ml"
    SQL = "sql"
    WEBSEARCH = "websearch"


def parse_size(value) -> int:
    """Parse a byte count such as ``300GB``, ``"20 GiB"`` or ``1024``."""
    if isinstance(value, bool):
        raise ValueError(f"not a size: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"byte count must be whole: {value!r}")
        return int(value)
    match = _SIZE_RE.match(str(value))
    if not match or match.group(2).upper() not in _UNITS:
        raise ValueError(f"not a size: {value!r}")
    number, unit = match.groups()
    scaled = float(number) * _UNITS[unit.upper()]
    if not scaled.is_integer():
        raise ValueError(f"byte count must be whole: {value!r}")
    return int(scaled)


def parse_count(value) -> int:
    """Parse an integral count; accepts ``1e9`` style floats and strings."""
    if isinstance(value, bool):
        raise ValueError(f"not a count: {value!r}")
    if isinstance(value, int):
        return value
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"count must be whole: {value!r}")
    return int(number)


@dataclass(frozen=True)
class WorkloadSpec:
    id: str
    engine: Engine
    category: Category
    scale_params: Mapping[str, int]
    repeats: int = DEFAULT_REPEATS
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scale_params", MappingProxyType(dict(self.scale_params)))
        unknown = set(self.scale_params) - set(PARAM_KEYS)
        if unknown:
            raise UnknownParameter(f"{self.id}: unknown parameters {sorted(unknown)}")
        if self.repeats < 1:
            raise NonPositiveScale(f"{self.id}: repeats must be >= 1")

    @property
    def base_name(self) -> str:
        return self.id.split("-", 1)[1]

    def __hash__(self):
        return hash((self.id, self.engine, tuple(sorted(self.scale_params.items())), self.repeats))


@dataclass(frozen=True)
class RenderedConfig:
    workload_id: str
    lines: tuple[tuple[str, str], ...]
    profile_name: str

    def __post_init__(self):
        if not self.lines:
            raise ValueError("rendered config has no lines")

    def get(self, key: str, default=None):
        for k, v in self.lines:
            if k == key:
                return v
        return default

    @property
    def repeats(self) -> int:
        return int(self.get(REPEATS_KEY, DEFAULT_REPEATS))

    def text(self) -> str:
        return "".join(f"{k} {v}\n" for k, v in self.lines)


def _spec(id, category, description, **params):
    engine = Engine(id.split("-", 1)[0])
    return WorkloadSpec(id=id, engine=engine, category=Category(category),
                        scale_params=params, description=description)


def default_catalog() -> list[WorkloadSpec]:
    """The 13 reference workloads, ordered by id."""
    billion = 10**9
    specs = [
        _spec("hadoop-aggregation", "sql", "Hive aggregation over 1 billion rows", rows=billion),
        _spec("spark-aggregation", "sql", "Hive aggregation over 1 billion rows", rows=billion),
        _spec("hadoop-dfsio-read", "micro", "HDFS read throughput", bytes=200 * GIB),
        _spec("hadoop-dfsio-write", "micro", "HDFS write throughput", bytes=200 * GIB),
        # left table takes the 0.5 billion rows
        _spec("hadoop-join", "sql", "Hive natural join of two tables",
              left_rows=500_000_000, right_rows=111_000_000),
        _spec("spark-join", "sql", "Hive natural join of two tables",
              left_rows=500_000_000, right_rows=111_000_000),
        _spec("hadoop-kmeans", "ml", "K-means clustering",
              bytes=20 * GIB, k=10, max_iterations=5),
        _spec("spark-kmeans", "ml", "K-means clustering",
              bytes=20 * GIB, k=10, max_iterations=5),
        _spec("hadoop-pagerank", "websearch", "PageRank", pages=5_000_000, iterations=3),
        _spec("hadoop-scan", "sql", "Hive scan over 1 billion rows", rows=billion),
        _spec("spark-scan", "sql", "Hive scan over 1 billion rows", rows=billion),
        _spec("hadoop-wordcount", "micro", "Word count", bytes=300 * GIB),
        _spec("spark-wordcount", "micro", "Word count", bytes=300 * GIB),
    ]
    return sorted(specs, key=lambda s: s.id)


def catalog_by_id(catalog: Iterable[WorkloadSpec] | None = None) -> dict[str, WorkloadSpec]:
    return {s.id: s for s in (default_catalog() if catalog is None else catalog)}


def _normalize_key(key: str) -> str:
    key = key.strip()
    if key in ("repeats", REPEATS_KEY):
        return "repeats"
    return _KEY_PARAMS.get(key, key)


def resolve_overrides(spec: WorkloadSpec, overrides: Mapping | None) -> tuple[dict[str, int], int]:
    """Merge ``overrides`` into ``spec`` defaults, returning ``(params, repeats)``."""
    params = dict(spec.scale_params)
    repeats = spec.repeats
    for raw_key, raw_value in (overrides or {}).items():
        key = _normalize_key(raw_key)
        if key == "repeats":
            try:
                repeats = parse_count(raw_value)
            except (TypeError, ValueError) as exc:
                raise NonPositiveScale(f"{spec.id}: bad repeats {raw_value!r}") from exc
            if repeats < 1:
                raise NonPositiveScale(f"{spec.id}: repeats must be >= 1, got {repeats}")
            continue
        if key not in spec.scale_params:
            raise UnknownParameter(f"{spec.id} has no parameter {raw_key!r}")
        parse = parse_size if key == "bytes" else parse_count
        try:
            value = parse(raw_value)
        except (TypeError, ValueError) as exc:
            raise NonPositiveScale(f"{spec.id}: bad value for {raw_key!r}: {exc}") from exc
        if value <= 0:
            raise NonPositiveScale(f"{spec.id}: {raw_key} must be positive, got {value}")
        params[key] = value
    return params, repeats


def configure_workload(spec: WorkloadSpec, overrides: Mapping | None = None) -> RenderedConfig:
    params, repeats = resolve_overrides(spec, overrides)
    lines = [(PARAM_KEYS[k], str(v)) for k, v in params.items()]
    lines.append((REPEATS_KEY, str(repeats)))
    return RenderedConfig(
        workload_id=spec.id,
        lines=tuple(sorted(lines)),
        profile_name=f"{spec.category.value}/{spec.base_name}",
    )


def parse_rendered(text: str) -> tuple[dict[str, int], int]:
    """Inverse of :meth:`RenderedConfig.text`: ``(scale_params, repeats)``."""
    params, repeats = {}, DEFAULT_REPEATS
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'key value', got {line!r}", line=lineno)
        key, value = parts
        if key == REPEATS_KEY:
            repeats = int(value)
        elif key in _KEY_PARAMS:
            params[_KEY_PARAMS[key]] = int(value)
        else:
            raise ParseError(f"unknown key {key!r}", line=lineno)
    return params, repeats


# --- planning -------------------------------------------------------------

PlanEntry = tuple  # (WorkloadSpec, overrides dict)


def _parse_override_line(line: str) -> dict[str, str]:
    overrides = {}
    for token in line.replace(",", " ").split():
        if "=" not in token:
            raise InvalidSelection(f"override {token!r} is not key=value")
        key, value = token.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def prompt_plan(catalog: Iterable[WorkloadSpec], answers: Iterable[str],
                prompt: TextIO | None = None) -> list[PlanEntry]:
    """Build a plan from a stream of answer lines.

    Grammar: the first line selects workloads (``all`` or ids separated by
    spaces/commas).  Then one line per selected workload, in selection
    order, holding ``key=value`` overrides; a blank line or end of input
    keeps the defaults.  ``prompt`` receives the questions when interactive.
    """
    by_id = catalog_by_id(catalog)
    stream = iter(answers)

    def ask(question: str) -> str:
        if prompt is not None:
            prompt.write(question)
            prompt.flush()
        return next(stream, "").strip()

    listing = ", ".join(by_id)
    selection = ask(f"Workloads to run [all | {listing}]: ")
    if not selection or selection.lower() == "all":
        chosen = list(by_id)
    else:
        chosen = [t for t in selection.replace(",", " ").split() if t]
        missing = [t for t in chosen if t not in by_id]
        if missing:
            raise InvalidSelection(f"unknown workload(s): {', '.join(missing)}")

    plan = []
    for wid in chosen:
        spec = by_id[wid]
        keys = " ".join(sorted(spec.scale_params)) + " repeats"
        overrides = _parse_override_line(ask(f"{wid} overrides ({keys}) [defaults]: "))
        configure_workload(spec, overrides)  # validate now, not mid-run
        plan.append((spec, overrides))
    return plan


def interactive_plan(catalog=None, stdin: TextIO | None = None, stderr: TextIO | None = None):
    return prompt_plan(default_catalog() if catalog is None else catalog,
                       (line.rstrip("\n") for line in (stdin or sys.stdin)),
                       prompt=stderr or sys.stderr)


def full_plan(catalog=None) -> list[PlanEntry]:
    return [(spec, {}) for spec in (default_catalog() if catalog is None else catalog)]


def plan_to_json(plan: Iterable[PlanEntry]) -> str:
    items = [{"workload_id": spec.id, "overrides": dict(overrides)} for spec, overrides in plan]
    return json.dumps(items, indent=2, sort_keys=True) + "\n"


def load_plan(path, catalog=None) -> list[PlanEntry]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read plan: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    if not isinstance(data, list):
        raise ParseError("plan must be a JSON list", path=path)
    by_id = catalog_by_id(catalog)
    plan = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "workload_id" not in item:
            raise ParseError(f"entry {i} needs a workload_id", path=path)
        wid = item["workload_id"]
        if wid not in by_id:
            raise InvalidSelection(f"unknown workload {wid!r}")
        overrides = item.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ParseError(f"entry {i}: overrides must be an object", path=path)
        configure_workload(by_id[wid], overrides)
        plan.append((by_id[wid], overrides))
    return plan
