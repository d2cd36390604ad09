"""Cluster inventory and environment detection.

A cluster is described by a small JSON document listing its nodes.  From a
validated descriptor we derive the :class:`EnvironmentProfile` that gets
injected into container recipes and workload configs.

Descriptor format::

    {
      "name": "azure-hdp-8",              # optional, defaults to file stem
      "framework": "HDP",                 # HDP | CDH, case-insensitive
      "platform_version": "2.6.1.0-129",
      "region": "eastus",
      "currency": "GBP",
      "name_node_host": "nn0",            # optional, must be the master
      "nodes": [
        {"hostname": "nn0", "role": "master", "vcpus": 16,
         "memory_gb": 112, "disk_tb": 1, "vm_sku": "STANDARD_DS14_V2"},
        ...
      ]
    }

Unknown keys are rejected at both levels.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from papb.errors import ParseError, UnsupportedFramework, ValidationError

NAME_NODE_PORT = 8020
HDP_CURRENT = "/usr/hdp/current"
HDP_JAVA_HOME = "/usr/jdk64/jdk1.8.0_112"

_TOP_KEYS = {"name", "framework", "platform_version", "region", "currency",
             "name_node_host", "nodes"}
_REQUIRED_TOP = {"framework", "platform_version", "region", "currency", "nodes"}
_NODE_KEYS = {"hostname", "role", "vcpus", "memory_gb", "disk_tb", "vm_sku"}
_CURRENCY_RE = re.compile(r"^[A-Z]{3}$")


class Framework(str, Enum):
    HDP = "HDP"
    CDH = "CDH"

    @classmethod
    def parse(cls, value) -> "Framework":
        if isinstance(value, Framework):
            return value
        if isinstance(value, str):
            for member in cls:
                if member.value == value.strip().upper():
                    return member
        raise ValidationError(f"unknown framework {value!r}; expected one of HDP, CDH")


class Role(str, Enum):
    MASTER = "master"
    WORKER = "worker"
    GATEWAY = "gateway"

    @classmethod
    def parse(cls, value) -> "Role":
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown node role {value!r}") from None


@dataclass(frozen=True)
class NodeSpec:
    hostname: str
    role: Role
    vcpus: int
    memory_gb: float
    disk_tb: float
    vm_sku: str

    def __post_init__(self):
        if not self.hostname:
            raise ValidationError("node hostname must be non-empty")
        if isinstance(self.vcpus, bool) or not isinstance(self.vcpus, int) or self.vcpus < 1:
            raise ValidationError(f"{self.hostname}: vcpus must be a positive integer")
        for name in ("memory_gb", "disk_tb"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ValidationError(f"{self.hostname}: {name} must be positive")
        if not self.vm_sku:
            raise ValidationError(f"{self.hostname}: vm_sku must be non-empty")

    @property
    def is_gateway(self) -> bool:
        return self.role is Role.GATEWAY

    def to_dict(self) -> dict:
        return {"hostname": self.hostname, "role": self.role.value, "vcpus": self.vcpus,
                "memory_gb": self.memory_gb, "disk_tb": self.disk_tb, "vm_sku": self.vm_sku}


@dataclass(frozen=True)
class ClusterDescriptor:
    framework: Framework
    nodes: tuple[NodeSpec, ...]
    platform_version: str
    name_node_host: str
    region: str
    currency: str
    name: str = "cluster"

    def __post_init__(self):
        if not self.nodes:
            raise ValidationError("cluster must have at least one node")
        seen = set()
        for node in self.nodes:
            if node.hostname in seen:
                raise ValidationError(f"duplicate hostname {node.hostname!r}")
            seen.add(node.hostname)
        masters = [n for n in self.nodes if n.role is Role.MASTER]
        if len(masters) != 1:
            raise ValidationError(f"exactly one master node required, found {len(masters)}")
        if self.name_node_host != masters[0].hostname:
            raise ValidationError(
                f"name_node_host {self.name_node_host!r} is not the master "
                f"({masters[0].hostname!r})")
        if not self.platform_version:
            raise ValidationError("platform_version must be non-empty")
        if not _CURRENCY_RE.match(self.currency or ""):
            raise ValidationError(f"currency {self.currency!r} is not an ISO-4217 code")

    @property
    def master(self) -> NodeSpec:
        return next(n for n in self.nodes if n.role is Role.MASTER)

    @property
    def gateways(self) -> tuple[NodeSpec, ...]:
        return tuple(n for n in self.nodes if n.is_gateway)

    @property
    def workload_nodes(self) -> tuple[NodeSpec, ...]:
        """Nodes that run workloads and are billed: master and workers."""
        return tuple(n for n in self.nodes if not n.is_gateway)

    def worker_count(self) -> int:
        return workload_node_count(self)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "framework": self.framework.value,
            "platform_version": self.platform_version,
            "region": self.region,
            "currency": self.currency,
            "name_node_host": self.name_node_host,
            "nodes": [n.to_dict() for n in self.nodes],
        }

    @classmethod
    def from_dict(cls, data, default_name: str = "cluster") -> "ClusterDescriptor":
        if not isinstance(data, dict):
            raise ValidationError("descriptor must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ValidationError(f"unknown descriptor keys: {', '.join(sorted(unknown))}")
        missing = _REQUIRED_TOP - set(data)
        if missing:
            raise ValidationError(f"missing descriptor keys: {', '.join(sorted(missing))}")
        raw_nodes = data["nodes"]
        if not isinstance(raw_nodes, list):
            raise ValidationError("'nodes' must be a list")
        nodes = []
        for i, raw in enumerate(raw_nodes):
            if not isinstance(raw, dict):
                raise ValidationError(f"nodes[{i}] must be an object")
            extra = set(raw) - _NODE_KEYS
            if extra:
                raise ValidationError(f"nodes[{i}]: unknown keys: {', '.join(sorted(extra))}")
            absent = _NODE_KEYS - set(raw)
            if absent:
                raise ValidationError(f"nodes[{i}]: missing keys: {', '.join(sorted(absent))}")
            nodes.append(NodeSpec(
                hostname=str(raw["hostname"]),
                role=Role.parse(raw["role"]),
                vcpus=raw["vcpus"],
                memory_gb=raw["memory_gb"],
                disk_tb=raw["disk_tb"],
                vm_sku=str(raw["vm_sku"]),
            ))
        masters = [n.hostname for n in nodes if n.role is Role.MASTER]
        name_node_host = data.get("name_node_host")
        if name_node_host is None:
            name_node_host = masters[0] if len(masters) == 1 else ""
        return cls(
            framework=Framework.parse(data["framework"]),
            nodes=tuple(nodes),
            platform_version=str(data["platform_version"]),
            name_node_host=str(name_node_host),
            region=str(data["region"]),
            currency=str(data["currency"]),
            name=str(data.get("name", default_name)),
        )


@dataclass(frozen=True)
class EnvironmentProfile:
    hadoop_home: str
    spark_home: str
    java_home: str
    name_node_uri: str
    framework: Framework
    platform_version: str
    env_exports: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        keys = [k for k, _ in self.env_exports]
        required = ["HADOOP_HOME", "SPARK_HOME", "PATH"]
        positions = [keys.index(k) if k in keys else -1 for k in required]
        if -1 in positions or positions != sorted(positions):
            raise ValidationError("env_exports must contain HADOOP_HOME, SPARK_HOME, PATH in order")
        if self.framework is Framework.HDP and not self.hadoop_home.startswith("/usr/hdp/"):
            raise ValidationError("HDP hadoop_home must live under /usr/hdp/")


def load_descriptor(path) -> ClusterDescriptor:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read descriptor: {exc.strerror}", path=path) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    return ClusterDescriptor.from_dict(data, default_name=path.stem)


def workload_node_count(desc: ClusterDescriptor) -> int:
    """Number of billed nodes (``n`` in the cost formula); gateways excluded."""
    return len(desc.workload_nodes)


class EnvironmentSource(Protocol):
    """Something that can produce an environment profile for a cluster.

    Only :class:`StaticDescriptorSource` exists today; a live probe (running
    ``hdp-select`` over SSH, say) would implement the same method.
    """

    def detect(self, desc: ClusterDescriptor) -> EnvironmentProfile: ...


class StaticDescriptorSource:
    """Derives the profile purely from the descriptor, using HDP's fixed layout."""

    def detect(self, desc: ClusterDescriptor) -> EnvironmentProfile:
        if desc.framework is not Framework.HDP:
            raise UnsupportedFramework(
                f"framework {desc.framework.value} is not supported yet (HDP only)")
        hadoop_home = f"{HDP_CURRENT}/hadoop-client"
        spark_home = f"{HDP_CURRENT}/spark2-client"
        name_node_uri = f"hdfs://{desc.name_node_host}:{NAME_NODE_PORT}"
        exports = (
            ("HADOOP_HOME", hadoop_home),
            ("SPARK_HOME", spark_home),
            ("PATH", "$PATH:$HADOOP_HOME/bin:$SPARK_HOME/bin"),
            ("JAVA_HOME", HDP_JAVA_HOME),
            ("HADOOP_CONF_DIR", "/etc/hadoop/conf"),
            ("SPARK_CONF_DIR", "/etc/spark2/conf"),
            ("HDP_VERSION", desc.platform_version),
            ("NAME_NODE_URI", name_node_uri),
        )
        return EnvironmentProfile(
            hadoop_home=hadoop_home,
            spark_home=spark_home,
            java_home=HDP_JAVA_HOME,
            name_node_uri=name_node_uri,
            framework=desc.framework,
            platform_version=desc.platform_version,
            env_exports=exports,
        )


def detect_environment(desc: ClusterDescriptor, source: EnvironmentSource | None = None) -> EnvironmentProfile:
    return (source or StaticDescriptorSource()).detect(desc)
