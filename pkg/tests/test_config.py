from __future__ import annotations

import pytest

from chunkmem.config import ConfigError, load_config, parse_config

BASIC = """\
version: 1
tasks: [tyreworld, gripper]
instances:
  tyreworld: [t1]
  gripper: [g3]
variants: [STD, OURS]
max_steps: 20
parallelism: 2
out_dir: runs/demo
"""


def test_parse_defaults():
    config = parse_config(BASIC)
    assert config.tasks == ("tyreworld", "gripper")
    assert config.instances == {"tyreworld": ("t1",), "gripper": ("g3",)}
    assert config.backend.kind == "replay" and config.seed == 0
    assert config.temperature == 0.0 and config.top_p == 1.0


def test_missing_instances_default_to_bundled():
    config = parse_config("version: 1\ntasks: [tyreworld]\nvariants: [STD]\n")
    assert config.instances["tyreworld"] == ("t1", "t2")


def test_dump_round_trip_and_hash():
    config = parse_config(BASIC)
    again = parse_config(config.dump())
    assert again == config and again.digest == config.digest
    reordered = parse_config("out_dir: runs/demo\n" + BASIC.replace("out_dir: runs/demo\n", ""))
    assert reordered.digest == config.digest
    assert parse_config(BASIC.replace("max_steps: 20", "max_steps: 21")).digest != config.digest


@pytest.mark.parametrize("text, line, fragment", [
    (BASIC + "colour: blue\n", 10, "unknown key 'colour'"),
    (BASIC.replace("version: 1", "version: 2"), 1, "version must be 1"),
    (BASIC.replace("[tyreworld, gripper]", "[jericho]"), 2, "out of scope"),
    (BASIC.replace("[tyreworld, gripper]", "[sokoban]"), 2, "unknown task"),
    (BASIC.replace("[STD, OURS]", "[]"), 6, "variants must be a non-empty list"),
    (BASIC.replace("[STD, OURS]", "[FAST]"), 6, "unknown variant"),
    (BASIC.replace("max_steps: 20", "max_steps: 0"), 7, "max_steps must be an integer"),
    (BASIC + "top_p: 0\n", 10, "top_p out of range"),
    (BASIC + "backend:\n  kind: carrier-pigeon\n", 11, "backend kind"),
    (BASIC + "backend:\n  kind: http\n", 10, "needs endpoint_url"),
    (BASIC + "backend:\n  kind: replay\n  extra: 1\n", 12, "unknown backend key"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError, match=fragment) as err:
        parse_config(text, "exp.yaml")
    assert err.value.line == line
    assert str(err.value).startswith(f"exp.yaml:{line}: ")


def test_invalid_yaml():
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config("tasks: [a\nb: ]")
    with pytest.raises(ConfigError, match="must be a mapping"):
        parse_config("- 1\n- 2\n")


def test_http_backend():
    config = parse_config(BASIC + "backend:\n  kind: http\n  endpoint_url: http://x/v1\n"
                          "  model_name: m\n  rpm_limit: 30\n")
    assert config.backend.kind == "http" and config.backend.rpm_limit == 30
    assert config.backend.api_key_env == "OPENAI_API_KEY"


def test_load_config_relative_paths(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(BASIC)
    config = load_config(path)
    assert config.resolve(config.out_dir) == tmp_path / "runs/demo"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
