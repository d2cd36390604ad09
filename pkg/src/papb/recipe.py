"""Container recipe generation for gateway and normal nodes.

Gateway (edge) nodes already carry the cluster client binaries, so the image
stays tiny and the host directories are mapped in as volumes at run time.
Normal nodes have nothing installed: the binaries and configs are pulled
from a cluster node with rsync into the build context and copied in.

Emission is template driven with a fixed section order
(base, packages, envs, syncs, user, expose), so output is byte-stable.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from papb.cluster import EnvironmentProfile, Framework
from papb.errors import MissingSourceNode, UnsupportedFramework, ValidationError

DEFAULT_BASE_IMAGE = "debian:bookworm-slim"
HIBENCH_DIR = "/HiBench"

GATEWAY_VOLUMES = (
    ("/usr/hdp", "/usr/hdp"),
    ("/usr/jdk64", "/usr/jdk64"),
    ("/HiBench", "/HiBench"),
    ("/etc", "/etc"),
)
SYNC_SOURCES = ("/usr/hdp", "/usr/jdk64", "/etc/hadoop")

# java, rsync, ping utilities and bc first; python and ssh for HiBench's scripts.
NORMAL_PACKAGES = (
    "openjdk-8-jdk-headless",
    "rsync",
    "iputils-ping",
    "bc",
    "python3",
    "openssh-client",
)


class NodeKind(str, Enum):
    GATEWAY = "gateway"
    NORMAL = "normal"


@dataclass(frozen=True)
class SyncStep:
    source_user: str
    source_host: str
    source_path: str
    dest_path: str

    def __post_init__(self):
        if self.source_path not in SYNC_SOURCES:
            raise ValidationError(f"unsupported sync source {self.source_path!r}")
        if self.dest_path.startswith("/"):
            raise ValidationError("sync dest_path must be relative to the build context")

    @property
    def rsync_command(self) -> str:
        return f"rsync -avz {self.source_user}@{self.source_host}:{self.source_path} ./"


@dataclass(frozen=True)
class ContainerRecipe:
    node_kind: NodeKind
    base_image: str
    package_installs: tuple[str, ...]
    env_lines: tuple[tuple[str, str], ...]
    sync_steps: tuple[SyncStep, ...]
    volume_mounts: tuple[tuple[str, str], ...]
    user_setup: tuple[str, ...]
    build_command: str
    run_command: str

    def __post_init__(self):
        if self.node_kind is NodeKind.GATEWAY:
            if self.sync_steps or len(self.volume_mounts) != 4:
                raise ValidationError("gateway recipe needs 4 volume mounts and no sync steps")
        elif self.volume_mounts or len(self.sync_steps) != 3:
            raise ValidationError("normal recipe needs 3 sync steps and no volume mounts")


@dataclass(frozen=True)
class RecipeText:
    dockerfile: str
    run_script: str


@dataclass(frozen=True)
class DeploymentProfile:
    """Image size and deployment time observed on the reference Azure cluster.

    Informational only; nothing here is measured by this package.
    """
    image_size: str
    image_size_bytes: int
    deploy_time: str


_DEPLOYMENT_PROFILES = {
    NodeKind.NORMAL: DeploymentProfile("5.2 GB", int(5.2 * 2**30), "3-4 mins"),
    NodeKind.GATEWAY: DeploymentProfile("128 MB", 128 * 2**20, "5 secs"),
}

_IMAGE_NAMES = {NodeKind.GATEWAY: ("edgenode", "edge"), NodeKind.NORMAL: ("normalnode", "normal")}


def deployment_profile(node_kind: NodeKind) -> DeploymentProfile:
    return _DEPLOYMENT_PROFILES[NodeKind(node_kind)]


def render_recipe(profile: EnvironmentProfile, node_kind: NodeKind, source_node: str | None = None,
                  *, source_user: str = "root", base_image: str = DEFAULT_BASE_IMAGE) -> ContainerRecipe:
    if profile.framework is not Framework.HDP:
        raise UnsupportedFramework(f"no recipe template for {profile.framework.value}")
    node_kind = NodeKind(node_kind)
    image, container = _IMAGE_NAMES[node_kind]
    user_setup = (
        "RUN useradd hdfs",
        f"RUN mkdir -p {HIBENCH_DIR} && chown -R hdfs:hdfs {HIBENCH_DIR}",
        "USER hdfs",
    )

    if node_kind is NodeKind.GATEWAY:
        mounts = " ".join(f"-v {host}:{guest}" for host, guest in GATEWAY_VOLUMES)
        return ContainerRecipe(
            node_kind=node_kind,
            base_image=base_image,
            package_installs=(),
            env_lines=tuple(profile.env_exports),
            sync_steps=(),
            volume_mounts=GATEWAY_VOLUMES,
            user_setup=user_setup,
            build_command=f"docker build -t {image} .",
            run_command=f"docker run --name {container} --network=host {mounts} -it {image} bash",
        )

    if not source_node:
        raise MissingSourceNode("normal-node recipes need a source node to sync binaries from")
    syncs = tuple(
        SyncStep(source_user, source_node, path, Path(path).name) for path in SYNC_SOURCES)
    return ContainerRecipe(
        node_kind=node_kind,
        base_image=base_image,
        package_installs=NORMAL_PACKAGES,
        env_lines=tuple(profile.env_exports),
        sync_steps=syncs,
        volume_mounts=(),
        user_setup=user_setup,
        build_command=f"docker build -t {image} .",
        run_command=f"docker run --name {container} --network=host -p 8080:80 -it {image} bash",
    )


def emit_recipe_text(recipe: ContainerRecipe) -> RecipeText:
    """Render the Dockerfile and the POSIX run script for ``recipe``."""
    kind = recipe.node_kind.value
    lines = [
        f"# PAPB {kind} node image (generated; do not edit)",
        f"FROM {recipe.base_image}",
    ]
    if recipe.package_installs:
        lines += [
            "",
            "RUN apt-get update \\",
            f" && apt-get install -y --no-install-recommends {' '.join(recipe.package_installs)} \\",
            " && rm -rf /var/lib/apt/lists/*",
        ]
    lines.append("")
    lines += [f"ENV {key}={value}" for key, value in recipe.env_lines]
    if recipe.sync_steps:
        lines.append("")
        lines += [f"COPY {s.dest_path} {s.source_path}" for s in recipe.sync_steps]
        lines.append(f"COPY HiBench {HIBENCH_DIR}")
    lines.append("")
    lines += list(recipe.user_setup)
    lines.append(f"WORKDIR {HIBENCH_DIR}")
    if recipe.node_kind is NodeKind.NORMAL:
        lines.append("EXPOSE 80")
    dockerfile = "\n".join(lines) + "\n"

    script = ["#!/bin/sh", "set -e"]
    if recipe.sync_steps:
        script += [s.rsync_command for s in recipe.sync_steps]
    script += [recipe.build_command, recipe.run_command]
    return RecipeText(dockerfile=dockerfile, run_script="\n".join(script) + "\n")


def write_recipe(text: RecipeText, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dockerfile = out_dir / "Dockerfile"
    run_sh = out_dir / "run.sh"
    dockerfile.write_text(text.dockerfile)
    run_sh.write_text(text.run_script)
    run_sh.chmod(0o755)
    return dockerfile, run_sh


def execute_recipe(out_dir) -> int:  # pragma: no cover - needs a container runtime
    return subprocess.call(["sh", "run.sh"], cwd=str(out_dir))
