"""Sequential, repeated execution of a workload plan.

Executors are pluggable.  :class:`SimulatedExecutor` replays a seeded
scenario so that whole runs are reproducible byte for byte;
:class:`ShellExecutor` runs a real command per workload.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from papb.errors import ExecutorFailure, NoSuccessfulRuns, ParseError, ScenarioMiss, ValidationError
from papb.workloads import RenderedConfig, WorkloadSpec, configure_workload

log = logging.getLogger(__name__)

DEFAULT_NOISE = 0.02
MAX_NOISE = 0.05
# Simulated clock origin; keeps simulated results files byte-reproducible.
SIM_EPOCH = datetime(2019, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class ExecutionOutcome:
    duration_s: float | None
    input_bytes: int
    success: bool = True


class Executor(Protocol):
    def execute(self, workload: RenderedConfig, node_count: int, run_index: int) -> ExecutionOutcome: ...


@dataclass(frozen=True)
class RunResult:
    workload_id: str
    engine: str
    node_count: int
    run_index: int
    duration_s: float | None
    input_bytes: int
    throughput_bps: float
    throughput_per_node_bps: float
    success: bool
    timestamp: datetime

    @classmethod
    def measured(cls, workload_id, engine, node_count, run_index, duration_s, input_bytes,
                 timestamp, success=True) -> "RunResult":
        """Build a result, deriving both throughputs from bytes and duration."""
        if success:
            if duration_s is None or not duration_s > 0:
                raise ValidationError(f"{workload_id}: successful run needs duration > 0")
            throughput = input_bytes / duration_s
        else:
            duration_s, throughput = None, 0.0
        return cls(
            workload_id=workload_id,
            engine=engine,
            node_count=node_count,
            run_index=run_index,
            duration_s=duration_s,
            input_bytes=input_bytes,
            throughput_bps=throughput,
            throughput_per_node_bps=throughput / node_count,
            success=success,
            timestamp=timestamp,
        )

    @property
    def is_aggregate(self) -> bool:
        return self.run_index == 0


# --- clocks ----------------------------------------------------------------

class SimulatedClock:
    """Advances only by the simulated durations it is told about."""

    def __init__(self, start: datetime = SIM_EPOCH):
        self._now = start

    def now(self) -> datetime:
        return self._now

    def advance(self, seconds: float) -> None:
        self._now += timedelta(seconds=seconds)


class WallClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def advance(self, seconds: float) -> None:
        pass


# --- scenario ----------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    entries: Mapping[tuple[str, int], float]
    noise_fraction: float = DEFAULT_NOISE
    seed: int = 0
    input_bytes_map: Mapping[str, int] = field(default_factory=dict)
    name: str = "scenario"

    def __post_init__(self):
        if not 0 <= self.noise_fraction <= MAX_NOISE:
            raise ValidationError(f"noise_fraction must lie in [0, {MAX_NOISE}]")
        for key, base in self.entries.items():
            if not base > 0:
                raise ValidationError(f"base duration for {key} must be > 0")
        if not -(2**63) <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 bits")

    def with_overrides(self, seed: int | None = None, noise_fraction: float | None = None) -> "Scenario":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if noise_fraction is not None:
            changes["noise_fraction"] = noise_fraction
        return replace(self, **changes)

    def check_plan(self, plan, node_count: int) -> None:
        for spec, _ in plan:
            if (spec.id, node_count) not in self.entries:
                raise ScenarioMiss(f"scenario has no baseline for {spec.id} at {node_count} nodes")

    @classmethod
    def from_dict(cls, data, name: str = "scenario") -> "Scenario":
        try:
            entries = {}
            for item in data["entries"]:
                key = (str(item["workload_id"]), int(item["node_count"]))
                if key in entries:
                    raise ValidationError(f"duplicate scenario entry {key}")
                entries[key] = float(item["base_duration_s"])
            return cls(
                entries=entries,
                noise_fraction=float(data.get("noise_fraction", DEFAULT_NOISE)),
                seed=int(data.get("seed", 0)),
                input_bytes_map={str(k): int(v) for k, v in data.get("input_bytes", {}).items()},
                name=str(data.get("name", name)),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"malformed scenario: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "noise_fraction": self.noise_fraction,
            "entries": [{"workload_id": w, "node_count": n, "base_duration_s": d}
                        for (w, n), d in sorted(self.entries.items())],
            "input_bytes": dict(sorted(self.input_bytes_map.items())),
        }


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read scenario: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    return Scenario.from_dict(data, name=path.stem)


def _noise(seed: int, workload_id: str, node_count: int, run_index: int, fraction: float) -> float:
    if fraction == 0:
        return 0.0
    digest = hashlib.sha256(f"{seed}:{workload_id}:{node_count}:{run_index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big")).uniform(-fraction, fraction)


def simulated_execute(scenario: Scenario, workload_id: str, node_count: int,
                      run_index: int) -> tuple[float, int]:
    try:
        base = scenario.entries[(workload_id, node_count)]
    except KeyError:
        raise ScenarioMiss(
            f"scenario has no baseline for {workload_id} at {node_count} nodes") from None
    u = _noise(scenario.seed, workload_id, node_count, run_index, scenario.noise_fraction)
    return base * (1 + u), scenario.input_bytes_map.get(workload_id, 0)


class SimulatedExecutor:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def execute(self, workload: RenderedConfig, node_count: int, run_index: int) -> ExecutionOutcome:
        duration, nbytes = simulated_execute(self.scenario, workload.workload_id, node_count, run_index)
        if workload.workload_id not in self.scenario.input_bytes_map:
            nbytes = int(workload.get("datasize.bytes", 0))
        return ExecutionOutcome(duration, nbytes, True)


class ShellExecutor:
    """Runs ``command_template`` once per run and times it with a wall clock.

    The template is formatted with ``workload_id``, ``conf`` (path to the
    rendered config file), ``nodes`` and ``run_index``; e.g.
    ``"ssh edge /HiBench/bin/workloads/{workload_id}/run.sh {conf}"``.
    A non-zero exit marks the run failed.
    """

    def __init__(self, command_template: str, timeout: float | None = None):
        self.command_template = command_template
        self.timeout = timeout

    def execute(self, workload: RenderedConfig, node_count: int, run_index: int) -> ExecutionOutcome:
        with tempfile.TemporaryDirectory(prefix="papb-") as tmp:
            conf = Path(tmp) / f"{workload.workload_id}.conf"
            conf.write_text(workload.text())
            command = self.command_template.format(
                workload_id=workload.workload_id, conf=shlex.quote(str(conf)),
                nodes=node_count, run_index=run_index)
            start = time.perf_counter()
            try:
                proc = subprocess.run(command, shell=True, timeout=self.timeout,
                                      stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
            except subprocess.TimeoutExpired as exc:
                raise ExecutorFailure(f"{workload.workload_id}: timed out") from exc
            elapsed = time.perf_counter() - start
        if proc.returncode != 0:
            raise ExecutorFailure(
                f"{workload.workload_id}: exit {proc.returncode}: "
                f"{proc.stderr.decode(errors='replace').strip()[-200:]}")
        return ExecutionOutcome(max(elapsed, 1e-9), int(workload.get("datasize.bytes", 0)), True)


# --- running -------------------------------------------------------------------

def run_plan(plan: Iterable[tuple[WorkloadSpec, Mapping]], executor: Executor, node_count: int,
             clock=None) -> list[RunResult]:
    """Run every plan entry ``repeats`` times, strictly one run at a time."""
    if node_count < 1:
        raise ValidationError("node_count must be >= 1")
    if clock is None:
        clock = SimulatedClock() if isinstance(executor, SimulatedExecutor) else WallClock()
    results = []
    for spec, overrides in plan:
        config = configure_workload(spec, overrides)
        for run_index in range(1, config.repeats + 1):
            log.info("running %s (%d/%d) on %d nodes", spec.id, run_index, config.repeats, node_count)
            try:
                outcome = executor.execute(config, node_count, run_index)
            except ExecutorFailure as exc:
                log.warning("run failed: %s", exc)
                outcome = ExecutionOutcome(None, 0, False)
            if outcome.success:
                clock.advance(outcome.duration_s)
            results.append(RunResult.measured(
                spec.id, spec.engine.value, node_count, run_index, outcome.duration_s,
                outcome.input_bytes, clock.now(), success=outcome.success))
    return results


def average_runs(results: Iterable[RunResult]) -> RunResult:
    """Mean over the successful runs of one workload; ``run_index`` 0 marks it."""
    results = list(results)
    if not results:
        raise NoSuccessfulRuns("no runs to average")
    keys = {(r.workload_id, r.node_count) for r in results}
    if len(keys) != 1:
        raise ValidationError(f"cannot average across workloads/node counts: {sorted(keys)}")
    ok = [r for r in results if r.success]
    if not ok:
        raise NoSuccessfulRuns(f"{results[0].workload_id}: every run failed")
    # shifted mean: exact when all durations are equal
    first = ok[0]
    mean = first.duration_s + math.fsum(r.duration_s - first.duration_s for r in ok) / len(ok)
    nbytes = round(sum(r.input_bytes for r in ok) / len(ok))
    return RunResult.measured(first.workload_id, first.engine, first.node_count, 0, mean,
                              nbytes, max(r.timestamp for r in ok))


def aggregate_results(results: Iterable[RunResult]) -> tuple[list[RunResult], dict[str, int]]:
    """Average each (workload, node count) group in first-seen order.

    Returns the aggregates and a failure count per workload id; groups with
    no successful run yield no aggregate.
    """
    groups: dict[tuple[str, int], list[RunResult]] = {}
    for r in results:
        if not r.is_aggregate:
            groups.setdefault((r.workload_id, r.node_count), []).append(r)
    aggregates, failures = [], {}
    for (wid, _), runs in groups.items():
        failed = sum(not r.success for r in runs)
        if failed:
            failures[wid] = failures.get(wid, 0) + failed
        if failed < len(runs):
            aggregates.append(average_runs(runs))
    return aggregates, failures
