"""Random BenchmarkReport generation shared by the round-trip tests."""

import random
import string
from datetime import datetime, timedelta, timezone

from papb.cost import CostQuote, total_cost
from papb.harness import RunResult
from papb.report import BenchmarkReport, ReportMetadata

EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)


def _name(rng):
    return rng.choice(["hadoop", "spark"]) + "-" + "".join(rng.choices(string.ascii_lowercase + "-", k=rng.randint(1, 12)))


def _ts(rng):
    return EPOCH + timedelta(seconds=rng.randint(0, 10**9), microseconds=rng.randint(0, 999_999))


def _float(rng):
    return rng.choice([rng.uniform(1e-3, 1e5), rng.lognormvariate(0, 5), 75.0, 1 / 3])


def random_report(rng: random.Random) -> BenchmarkReport:
    n = rng.randint(1, 64)
    runs = []
    for _ in range(rng.randint(0, 40)):
        ok = rng.random() > 0.1
        runs.append(RunResult.measured(_name(rng), rng.choice(["hadoop", "spark"]), n,
                                       rng.randint(1, 5), _float(rng) if ok else None,
                                       rng.randint(0, 10**13), _ts(rng), success=ok))
    aggregates = [RunResult.measured(_name(rng), "spark", n, 0, _float(rng), rng.randint(0, 10**12), _ts(rng))
                  for _ in range(rng.randint(0, 13))]
    quotes = [CostQuote(a.workload_id, n, a.duration_s, _float(rng), _float(rng))
              for a in aggregates if rng.random() < 0.8]
    simulated = rng.random() < 0.5
    meta = ReportMetadata(
        cluster_id=_name(rng), region=rng.choice(["eastus", "", "uk-south"]),
        currency=rng.choice(["GBP", "USD"]), node_count=n, timestamp=_ts(rng),
        scenario=_name(rng) if simulated else None,
        seed=rng.randint(0, 2**64 - 1) if simulated else None,
        noise_fraction=rng.uniform(0, 0.05) if simulated else None,
        executor="simulated" if simulated else "shell",
        cluster=rng.choice([None, {"name": "c", "nodes": [{"hostname": "nn0", "vcpus": 16}]}]),
    )
    return BenchmarkReport(meta, tuple(runs), tuple(aggregates), tuple(quotes), total_cost(quotes))
