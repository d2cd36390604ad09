import math
import sys
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from papb.cli import resolve_data_path
from papb.errors import ExecutorFailure, NoSuccessfulRuns, ScenarioMiss, ValidationError
from papb.harness import (ExecutionOutcome, RunResult, Scenario, ShellExecutor, SimulatedExecutor,
                          aggregate_results, average_runs, load_scenario, run_plan, simulated_execute)
from papb.workloads import catalog_by_id, configure_workload, full_plan

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def shipped():
    return load_scenario(resolve_data_path("builtin:scenario"))


def _run(duration, nbytes=0, n=4, index=1, wid="w"):
    return RunResult.measured(wid, "spark", n, index, duration, nbytes, T0)


def test_shipped_scenario_spark_scan(shipped):
    quiet = shipped.with_overrides(noise_fraction=0)
    for run_index in (1, 2, 7):
        assert simulated_execute(quiet, "spark-scan", 4, run_index)[0] == 75.0
        assert simulated_execute(quiet, "spark-scan", 8, run_index)[0] == 45.0


def test_shipped_scenario_covers_catalog(shipped):
    for n in (4, 8):
        shipped.check_plan(full_plan(), n)


def test_shipped_scenario_faster_with_more_nodes(shipped):
    for (wid, n), base in shipped.entries.items():
        if n == 4 and (wid, 8) in shipped.entries:
            assert shipped.entries[(wid, 8)] <= base


def test_noise_bounded_and_deterministic(shipped):
    assert shipped.noise_fraction == 0.02
    for wid in catalog_by_id():
        for idx in range(1, 4):
            d1, _ = simulated_execute(shipped, wid, 4, idx)
            d2, _ = simulated_execute(shipped, wid, 4, idx)
            base = shipped.entries[(wid, 4)]
            assert d1 == d2
            assert abs(d1 / base - 1) <= shipped.noise_fraction + 1e-15


def test_noise_varies_with_seed_and_index(shipped):
    a = simulated_execute(shipped, "hadoop-scan", 8, 1)[0]
    b = simulated_execute(shipped, "hadoop-scan", 8, 2)[0]
    c = simulated_execute(shipped.with_overrides(seed=1), "hadoop-scan", 8, 1)[0]
    assert len({a, b, c}) == 3


def test_scenario_miss(shipped):
    with pytest.raises(ScenarioMiss):
        simulated_execute(shipped, "spark-scan", 5, 1)


@pytest.mark.parametrize("noise", [-0.01, 0.06])
def test_noise_range_validated(noise):
    with pytest.raises(ValidationError):
        Scenario({("w", 1): 1.0}, noise_fraction=noise)


def test_full_plan_yields_39_runs(shipped):
    results = run_plan(full_plan(), SimulatedExecutor(shipped), 8)
    assert len(results) == 39
    assert [r.run_index for r in results[:3]] == [1, 2, 3]
    stamps = [r.timestamp for r in results]
    assert stamps == sorted(stamps)


def test_empty_plan(shipped):
    assert run_plan([], SimulatedExecutor(shipped), 4) == []


def test_run_plan_scenario_miss_aborts(shipped):
    with pytest.raises(ScenarioMiss):
        run_plan(full_plan(), SimulatedExecutor(shipped), 5)


def test_run_plan_is_reproducible(shipped):
    a = run_plan(full_plan(), SimulatedExecutor(shipped), 4)
    b = run_plan(full_plan(), SimulatedExecutor(shipped), 4)
    assert a == b


class FlakyExecutor:
    """Fails every second call; records call order to check sequentiality."""

    def __init__(self):
        self.calls = []
        self.in_flight = 0

    def execute(self, workload, node_count, run_index):
        self.in_flight += 1
        assert self.in_flight == 1
        self.calls.append((workload.workload_id, run_index))
        try:
            if len(self.calls) % 2 == 0:
                raise ExecutorFailure("boom")
            return ExecutionOutcome(10.0 * run_index, 1000, True)
        finally:
            self.in_flight -= 1


def test_failures_recorded_and_excluded():
    plan = [(catalog_by_id()["spark-scan"], {}), (catalog_by_id()["hadoop-scan"], {"repeats": 1})]
    executor = FlakyExecutor()
    results = run_plan(plan, executor, 4)
    assert executor.calls == [("spark-scan", 1), ("spark-scan", 2), ("spark-scan", 3), ("hadoop-scan", 1)]
    assert [r.success for r in results] == [True, False, True, False]
    assert results[1].duration_s is None
    aggregates, failures = aggregate_results(results)
    assert failures == {"spark-scan": 1, "hadoop-scan": 1}
    assert len(aggregates) == 1
    assert aggregates[0].duration_s == 20.0  # mean of runs 1 and 3


def test_average_examples():
    assert average_runs([_run(10), _run(20), _run(30)]).duration_s == 20
    assert average_runs([_run(42)]).duration_s == 42


def test_average_throughput():
    agg = average_runs([_run(75, 7_500_000_000, n=4, index=i) for i in (1, 2, 3)])
    assert agg.run_index == 0
    assert agg.throughput_bps == 1e8
    assert agg.throughput_per_node_bps == 2.5e7


def test_average_requires_success_and_one_group():
    failed = RunResult.measured("w", "spark", 4, 1, None, 0, T0, success=False)
    with pytest.raises(NoSuccessfulRuns):
        average_runs([failed])
    with pytest.raises(ValidationError):
        average_runs([_run(1, n=4), _run(1, n=8)])


@given(st.floats(1e-3, 1e7), st.integers(1, 10))
def test_average_of_identical_runs_is_exact(duration, k):
    assert average_runs([_run(duration, index=i + 1) for i in range(k)]).duration_s == duration


@given(st.floats(1e-3, 1e7), st.integers(0, 10**13), st.integers(1, 64))
def test_throughput_invariants(duration, nbytes, n):
    r = _run(duration, nbytes, n=n)
    assert r.throughput_bps == nbytes / duration
    assert math.isclose(r.throughput_per_node_bps * n, r.throughput_bps, rel_tol=1e-12, abs_tol=0)


def test_shell_executor_local_command():
    config = configure_workload(catalog_by_id()["hadoop-wordcount"], {"bytes": 1024, "repeats": 1})
    ok = ShellExecutor(f"{sys.executable} -c \"import sys; assert open(sys.argv[1]).read()\" {{conf}}")
    outcome = ok.execute(config, 4, 1)
    assert outcome.success and outcome.duration_s > 0 and outcome.input_bytes == 1024
    with pytest.raises(ExecutorFailure):
        ShellExecutor(f"{sys.executable} -c 'raise SystemExit(4)'").execute(config, 4, 1)
