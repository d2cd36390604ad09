import itertools
from dataclasses import replace

import pytest

from papb.cluster import Framework, detect_environment
from papb.errors import MissingSourceNode, UnsupportedFramework
from papb.recipe import (GATEWAY_VOLUMES, NodeKind, deployment_profile, emit_recipe_text,
                         render_recipe)


@pytest.fixture
def profile(hdp8):
    return detect_environment(hdp8)


def test_gateway_recipe_mounts(profile):
    recipe = render_recipe(profile, NodeKind.GATEWAY)
    assert recipe.volume_mounts == (("/usr/hdp", "/usr/hdp"), ("/usr/jdk64", "/usr/jdk64"),
                                    ("/HiBench", "/HiBench"), ("/etc", "/etc"))
    assert recipe.sync_steps == ()


def test_normal_recipe_syncs(profile):
    recipe = render_recipe(profile, NodeKind.NORMAL, "nn0")
    assert [s.source_host for s in recipe.sync_steps] == ["nn0"] * 3
    assert [s.source_path for s in recipe.sync_steps] == ["/usr/hdp", "/usr/jdk64", "/etc/hadoop"]
    assert recipe.volume_mounts == ()
    for package in ("rsync", "iputils-ping", "bc"):
        assert package in recipe.package_installs
    assert any("jdk" in p or "java" in p for p in recipe.package_installs)


def test_normal_without_source_node(profile):
    with pytest.raises(MissingSourceNode):
        render_recipe(profile, NodeKind.NORMAL)


def test_non_hdp_profile_rejected(profile):
    with pytest.raises(UnsupportedFramework):
        render_recipe(replace(profile, framework=Framework.CDH), NodeKind.GATEWAY)


def test_env_lines_verbatim(profile):
    for kind, src in ((NodeKind.GATEWAY, None), (NodeKind.NORMAL, "nn0")):
        assert render_recipe(profile, kind, src).env_lines == profile.env_exports


def test_user_setup_order(profile):
    setup = render_recipe(profile, NodeKind.GATEWAY).user_setup
    assert "useradd hdfs" in setup[0]
    assert "chown -R hdfs:hdfs" in setup[1]
    assert setup[2] == "USER hdfs"


def test_gateway_run_command_has_four_volume_flags(profile):
    text = emit_recipe_text(render_recipe(profile, NodeKind.GATEWAY))
    run = text.run_script.strip().splitlines()[-1]
    assert run.split().count("-v") == len(GATEWAY_VOLUMES) == 4


def test_normal_run_command_shape(profile):
    text = emit_recipe_text(render_recipe(profile, NodeKind.NORMAL, "nn0"))
    run = text.run_script.strip().splitlines()[-1]
    assert run == "docker run --name normal --network=host -p 8080:80 -it normalnode bash"
    assert " -v " not in text.run_script
    assert text.dockerfile.index("useradd hdfs") < text.dockerfile.index("USER hdfs")


def test_gateway_never_mentions_sync_host(profile):
    text = emit_recipe_text(render_recipe(profile, NodeKind.GATEWAY))
    assert "rsync" not in text.run_script and "@" not in text.run_script


def test_emit_deterministic(profile):
    recipe = render_recipe(profile, NodeKind.NORMAL, "nn0")
    assert emit_recipe_text(recipe) == emit_recipe_text(recipe)


def test_every_export_appears_once(profile):
    for kind, src in ((NodeKind.GATEWAY, None), (NodeKind.NORMAL, "nn0")):
        text = emit_recipe_text(render_recipe(profile, kind, src)).dockerfile
        for key, value in profile.env_exports:
            assert text.count(f"ENV {key}={value}\n") == 1
            assert text.count(f"{key}=") == 1


def test_emission_injective(hdp8):
    from papb.cluster import ClusterDescriptor
    data = hdp8.to_dict()
    variants = [hdp8]
    renamed = dict(data, name_node_host="head0",
                   nodes=[dict(n, hostname="head0") if n["role"] == "master" else n for n in data["nodes"]])
    variants.append(ClusterDescriptor.from_dict(renamed))
    variants.append(ClusterDescriptor.from_dict(dict(data, platform_version="3.1.0.0-78")))
    profiles = [detect_environment(d) for d in variants]
    kinds = [(NodeKind.GATEWAY, None), (NodeKind.NORMAL, "nn0"), (NodeKind.NORMAL, "wn1")]
    triples = list(itertools.product(profiles, kinds))
    texts = {emit_recipe_text(render_recipe(p, kind, src)) for p, (kind, src) in triples}
    assert len(texts) == len(triples) == 9


@pytest.mark.parametrize("kind, size, duration", [
    (NodeKind.GATEWAY, "128 MB", "5 secs"),
    (NodeKind.NORMAL, "5.2 GB", "3-4 mins"),
])
def test_deployment_profile(kind, size, duration):
    prof = deployment_profile(kind)
    assert (prof.image_size, prof.deploy_time) == (size, duration)


def test_deployment_profile_closed_enum():
    with pytest.raises(ValueError):
        deployment_profile("laptop")
