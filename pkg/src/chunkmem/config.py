"""Experiment configuration files.

A config is a YAML mapping with ``version: 1``::

    version: 1
    tasks: [tyreworld, blocksworld]
    instances:              # optional; a list for every task or a per-task mapping
      tyreworld: [t1]
    variants: [STD, OURS]
    backend:
      kind: replay          # or: http
      script_dir: scripts   # replay files named <task>_<instance>_<variant>.txt
    max_steps: 30
    parallelism: 4
    out_dir: runs/demo

For ``kind: http`` the backend section takes ``endpoint_url``, ``model_name``
and optionally ``api_key_env``, ``max_retries``, ``rpm_limit`` and
``max_in_flight``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .agent import Variant
from .env import DOMAINS, bundled_instances
from .env.instances import OUT_OF_SCOPE

CONFIG_VERSION = 1
_TOP_KEYS = {
    "version", "tasks", "instances", "variants", "backend", "max_steps", "parallelism",
    "out_dir", "seed", "temperature", "top_p", "max_output_tokens",
}
_REPLAY_KEYS = {"kind", "script_dir"}
_HTTP_KEYS = {"kind", "endpoint_url", "model_name", "api_key_env", "max_retries", "rpm_limit",
              "max_in_flight"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class BackendConfig:
    kind: str
    script_dir: str | None = None
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    max_retries: int = 5
    rpm_limit: float | None = None
    max_in_flight: int = 4

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "replay":
            return {"kind": "replay", "script_dir": self.script_dir}
        return {
            "kind": "http",
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "api_key_env": self.api_key_env,
            "max_retries": self.max_retries,
            "rpm_limit": self.rpm_limit,
            "max_in_flight": self.max_in_flight,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    tasks: tuple[str, ...]
    instances: dict[str, tuple[str, ...]]
    variants: tuple[str, ...]
    backend: BackendConfig
    max_steps: int = 30
    parallelism: int = 1
    out_dir: str = "runs/latest"
    seed: int = 0
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 512
    base_dir: Path = field(default=Path("."), compare=False)

    def to_dict(self) -> dict[str, Any]:
        """Canonical form: every default spelled out, no source-specific data."""
        return {
            "version": CONFIG_VERSION,
            "tasks": list(self.tasks),
            "instances": {t: list(self.instances[t]) for t in self.tasks},
            "variants": list(self.variants),
            "backend": self.backend.to_dict(),
            "max_steps": self.max_steps,
            "parallelism": self.parallelism,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_output_tokens": self.max_output_tokens,
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @property
    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _key_lines(node: yaml.Node) -> dict[str, int]:
    lines: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            lines[str(key.value)] = key.start_mark.line + 1
            for sub, line in _key_lines(value).items():
                lines[f"{key.value}.{sub}"] = line
    return lines


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None
                 ) -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", 1, source)
    lines = _key_lines(node)

    def fail(message: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, lines.get(key) if key else None, source)

    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise fail(f"unknown key {unknown[0]!r}", unknown[0])
    if data.get("version") != CONFIG_VERSION:
        raise fail(f"version must be {CONFIG_VERSION}, got {data.get('version')!r}", "version")

    tasks = data.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise fail("tasks must be a non-empty list", "tasks")
    for t in tasks:
        if t in OUT_OF_SCOPE:
            raise fail(f"task {t!r} is out of scope: {OUT_OF_SCOPE[t]}", "tasks")
        if t not in DOMAINS:
            raise fail(f"unknown task {t!r}; known: {', '.join(DOMAINS)}", "tasks")

    raw_instances = data.get("instances")
    instances: dict[str, tuple[str, ...]] = {}
    for t in tasks:
        if raw_instances is None:
            chosen = bundled_instances(t)
        elif isinstance(raw_instances, list):
            chosen = raw_instances
        elif isinstance(raw_instances, dict):
            chosen = raw_instances.get(t, bundled_instances(t))
        else:
            raise fail("instances must be a list or a task -> list mapping", "instances")
        if not isinstance(chosen, list) or not chosen:
            raise fail(f"instances for {t} must be a non-empty list", "instances")
        instances[t] = tuple(str(i) for i in chosen)

    variants = data.get("variants")
    if not isinstance(variants, list) or not variants:
        raise fail("variants must be a non-empty list", "variants")
    for v in variants:
        if v not in Variant.__members__:
            raise fail(f"unknown variant {v!r}; known: {', '.join(Variant.__members__)}",
                       "variants")

    backend = _parse_backend(data.get("backend"), fail)

    def integer(key: str, default: int, minimum: int) -> int:
        value = data.get(key, default)
        if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
            raise fail(f"{key} must be an integer >= {minimum}", key)
        return value

    def real(key: str, default: float, lo: float, hi: float, lo_open: bool = False) -> float:
        value = data.get(key, default)
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or value > hi or value < lo or (lo_open and value == lo):
            raise fail(f"{key} out of range", key)
        return float(value)

    out_dir = data.get("out_dir", "runs/latest")
    if not isinstance(out_dir, str) or not out_dir:
        raise fail("out_dir must be a path", "out_dir")

    return ExperimentConfig(
        tasks=tuple(tasks),
        instances=instances,
        variants=tuple(variants),
        backend=backend,
        max_steps=integer("max_steps", 30, 1),
        parallelism=integer("parallelism", 1, 1),
        out_dir=out_dir,
        seed=integer("seed", 0, 0),
        temperature=real("temperature", 0.0, 0.0, 2.0),
        top_p=real("top_p", 1.0, 0.0, 1.0, lo_open=True),
        max_output_tokens=integer("max_output_tokens", 512, 1),
        base_dir=base_dir or Path("."),
    )


def _parse_backend(raw: Any, fail) -> BackendConfig:
    if raw is None:
        return BackendConfig("replay")
    if not isinstance(raw, dict):
        raise fail("backend must be a mapping", "backend")
    kind = raw.get("kind")
    if kind == "replay":
        extra = sorted(set(raw) - _REPLAY_KEYS)
        if extra:
            raise fail(f"unknown backend key {extra[0]!r}", f"backend.{extra[0]}")
        script_dir = raw.get("script_dir")
        if script_dir is not None and not isinstance(script_dir, str):
            raise fail("script_dir must be a path", "backend.script_dir")
        return BackendConfig("replay", script_dir=script_dir)
    if kind == "http":
        extra = sorted(set(raw) - _HTTP_KEYS)
        if extra:
            raise fail(f"unknown backend key {extra[0]!r}", f"backend.{extra[0]}")
        for key in ("endpoint_url", "model_name"):
            if not isinstance(raw.get(key), str) or not raw[key]:
                raise fail(f"http backend needs {key}", "backend")
        return BackendConfig(
            "http",
            endpoint_url=raw["endpoint_url"],
            model_name=raw["model_name"],
            api_key_env=str(raw.get("api_key_env", "OPENAI_API_KEY")),
            max_retries=int(raw.get("max_retries", 5)),
            rpm_limit=raw.get("rpm_limit"),
            max_in_flight=int(raw.get("max_in_flight", 4)),
        )
    raise fail(f"backend kind must be 'replay' or 'http', got {kind!r}", "backend.kind"
               if "kind" in raw else "backend")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path), path.parent)
