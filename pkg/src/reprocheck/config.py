"""Run configuration: a single JSON file covering provider, sandbox, and budgets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .harness import ExecutionLimits


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = ""
    model: str = ""
    api_key_env: str = "REPROCHECK_API_KEY"
    temperature: float = 0.0
    timeout_s: float = 120.0
    min_interval_s: float = 0.0


@dataclass(frozen=True)
class SandboxConfig:
    backend: str = "subprocess"  # or "container"
    container_image: str = "artifact-sandbox:latest"
    time_limit_s: int = 300
    memory_mb: int = 2048
    max_output_bytes: int = 65536
    max_written_mb: int = 512

    def limits(self) -> ExecutionLimits:
        return ExecutionLimits(
            time_limit_s=self.time_limit_s,
            memory_mb=self.memory_mb,
            max_output_bytes=self.max_output_bytes,
            max_written_mb=self.max_written_mb,
        )


@dataclass(frozen=True)
class RunConfig:
    schema_path: str = ""  # empty means the bundled checklist
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)
    max_attempts: int = 3
    context_window_tokens: int = 128_000
    chars_per_token: int = 4
    per_file_tokens: int = 1000
    min_text_chars: int = 200
    fetch_artifacts: bool = True
    execute_artifacts: bool = True
    artifact_max_bytes: int = 512 * 1024 * 1024
    link_timeout_s: float = 20.0
    max_links_checked: int = 5
    persistent_hosts: tuple[str, ...] = ()  # extends the built-in archival host list
    alpha: float = 0.05


def _build(cls, doc: dict, context: str):
    known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return doc


def load_config(path: Path | str) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be an object")

    provider_doc = doc.pop("provider", {})
    sandbox_doc = doc.pop("sandbox", {})
    if not isinstance(provider_doc, dict) or not isinstance(sandbox_doc, dict):
        raise ConfigError(f"{path}: provider and sandbox sections must be objects")
    hosts = doc.get("persistent_hosts")
    if hosts is not None:
        if not isinstance(hosts, list) or not all(isinstance(h, str) for h in hosts):
            raise ConfigError(f"{path}: persistent_hosts must be a list of host names")
        doc["persistent_hosts"] = tuple(hosts)
    try:
        provider = ProviderConfig(**_build(ProviderConfig, provider_doc, "provider"))
        sandbox = SandboxConfig(**_build(SandboxConfig, sandbox_doc, "sandbox"))
        config = RunConfig(provider=provider, sandbox=sandbox, **_build(RunConfig, doc, "config"))
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    if not (0.0 < config.alpha < 1.0):
        raise ConfigError(f"alpha must be strictly between 0 and 1, got {config.alpha}")
    if config.max_attempts < 1:
        raise ConfigError("max_attempts must be at least 1")
    if config.chars_per_token < 1:
        raise ConfigError("chars_per_token must be at least 1")
    if config.context_window_tokens < 1:
        raise ConfigError("context_window_tokens must be positive")
    if config.per_file_tokens < 1:
        raise ConfigError("per_file_tokens must be positive")
    if config.sandbox.backend not in ("subprocess", "container"):
        raise ConfigError(f"unknown sandbox backend: {config.sandbox.backend}")
    if config.sandbox.time_limit_s < 1:
        raise ConfigError("sandbox time_limit_s must be positive")


def config_to_dict(config: RunConfig) -> dict:
    return asdict(config)
