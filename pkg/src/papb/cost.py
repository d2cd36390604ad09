"""Monetary cost of benchmark runs.

A workload running for ``T`` seconds on ``n`` VMs, each billed ``CPM`` per
month, costs::

    COST = sum over nodes of CPM * T / SEC_IN_MNT

with a month approximated as 30 days.  Only workload wall time is charged,
not idle cluster time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from papb.cluster import ClusterDescriptor, workload_node_count
from papb.errors import NodeCountMismatch, NonPositiveNodes, NonPositiveRate, ParseError, UnpricedSku, ValidationError
from papb.harness import RunResult

SECONDS_IN_MONTH = 30 * 24 * 3600
REFERENCE_SKU = "STANDARD_DS14_V2"
REFERENCE_CPM_GBP = 821.0


@dataclass(frozen=True)
class CostModel:
    cpm_by_sku: Mapping[str, float]
    currency: str = "GBP"
    seconds_in_month: int = SECONDS_IN_MONTH

    def __post_init__(self):
        object.__setattr__(self, "cpm_by_sku", MappingProxyType(dict(self.cpm_by_sku)))
        if self.seconds_in_month != SECONDS_IN_MONTH:
            raise ValidationError(f"seconds_in_month must be {SECONDS_IN_MONTH}")
        for sku, cpm in self.cpm_by_sku.items():
            if not cpm > 0:
                raise NonPositiveRate(f"CPM for {sku} must be > 0")

    def cpm(self, sku: str) -> float:
        try:
            return self.cpm_by_sku[sku]
        except KeyError:
            raise UnpricedSku(f"no monthly rate for VM SKU {sku!r}") from None

    @classmethod
    def reference(cls) -> "CostModel":
        return cls({REFERENCE_SKU: REFERENCE_CPM_GBP}, currency="GBP")

    @classmethod
    def from_dict(cls, data) -> "CostModel":
        try:
            return cls(
                cpm_by_sku={str(k): float(v) for k, v in data["cpm_by_sku"].items()},
                currency=str(data.get("currency", "GBP")),
                seconds_in_month=int(data.get("seconds_in_month", SECONDS_IN_MONTH)),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"malformed cost model: {exc!r}") from exc


def load_cost_model(path) -> CostModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read cost model: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    return CostModel.from_dict(data)


def _check_time(duration_s: float) -> None:
    if not duration_s >= 0 or math.isinf(duration_s):
        raise ValidationError(f"duration must be a finite non-negative number, got {duration_s}")


def node_costs(cpms: Iterable[float], duration_s: float,
               seconds_in_month: int = SECONDS_IN_MONTH) -> float:
    """Sum one ``cpm * T / SEC_IN_MNT`` term per node, correctly rounded."""
    _check_time(duration_s)
    terms = []
    for cpm in cpms:
        if not cpm > 0:
            raise NonPositiveRate(f"CPM must be > 0, got {cpm}")
        terms.append(cpm * duration_s / seconds_in_month)
    if not terms:
        raise NonPositiveNodes("need at least one node")
    return math.fsum(terms)


def compute_cost(n: int, cpm: float, duration_s: float, model: CostModel | None = None) -> float:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise NonPositiveNodes(f"node count must be a positive integer, got {n!r}")
    if not cpm > 0:
        raise NonPositiveRate(f"CPM must be > 0, got {cpm}")
    seconds = model.seconds_in_month if model is not None else SECONDS_IN_MONTH
    return node_costs([cpm] * n, duration_s, seconds)


def format_cost(cost: float, places: int = 4) -> str:
    return f"{cost:.{places}f}"


@dataclass(frozen=True)
class CostQuote:
    workload_id: str
    node_count: int
    duration_s: float
    cpm: float
    cost: float


def price_run(result: RunResult, desc: ClusterDescriptor, model: CostModel) -> CostQuote:
    n = workload_node_count(desc)
    if result.node_count != n:
        raise NodeCountMismatch(
            f"{result.workload_id} ran on {result.node_count} nodes but cluster "
            f"{desc.name!r} bills {n}")
    if not result.success or result.duration_s is None:
        raise ValidationError(f"{result.workload_id}: cannot price a failed run")
    cpms = [model.cpm(node.vm_sku) for node in desc.workload_nodes]
    if len(set(cpms)) == 1:
        cost = compute_cost(n, cpms[0], result.duration_s, model)
        cpm = cpms[0]
    else:
        # mixed SKUs: each node contributes its own rate
        cost = node_costs(cpms, result.duration_s, model.seconds_in_month)
        cpm = math.fsum(cpms) / n
    return CostQuote(result.workload_id, n, result.duration_s, cpm, cost)


def price_plan(aggregates: Iterable[RunResult], desc: ClusterDescriptor,
               model: CostModel) -> tuple[list[CostQuote], float]:
    """One quote per aggregate plus their total. ``cpm`` is the mean rate on mixed clusters."""
    quotes = [price_run(a, desc, model) for a in aggregates]
    return quotes, total_cost(quotes)


def total_cost(quotes: Iterable[CostQuote]) -> float:
    return math.fsum(q.cost for q in quotes)
