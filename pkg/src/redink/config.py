"""Application configuration: a small JSON file read by the CLI and server.

Example:
    {
      "host": "127.0.0.1",
      "port": 8000,
      "storage_path": "redink.db",
      "audit_log": null,
      "ui_dist": "frontend/dist",
      "pipeline": {"mode": "full_ai", "temperature": 0.05, "retries": 2,
                   "max_quotes_per_rubric": 3, "few_shot_limit": 4}
    }

Provider credentials are never stored here; they come from the
FEEDBACK_PROVIDER_URL / FEEDBACK_PROVIDER_KEY environment variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .pipeline import PipelineConfig, PipelineMode


@dataclass(frozen=True)
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    storage_path: str = "redink.db"
    audit_log: str | None = None
    ui_dist: str | None = None
    # names of the env vars the remote provider reads its credentials from
    provider_url_env: str = "FEEDBACK_PROVIDER_URL"
    provider_key_env: str = "FEEDBACK_PROVIDER_KEY"
    provider_timeout_seconds: float = 60.0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


def pipeline_config_from_dict(obj: dict) -> PipelineConfig:
    kwargs = {}
    if "mode" in obj:
        kwargs["mode"] = PipelineMode(obj["mode"])
    for key in ("max_quotes_per_rubric", "temperature", "retries", "few_shot_limit",
                "fuzzy_threshold", "concurrency", "guideline_text"):
        if key in obj:
            kwargs[key] = obj[key]
    return PipelineConfig(**kwargs)


def load_config(path: str | Path) -> AppConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    pipeline = pipeline_config_from_dict(data.get("pipeline", {}))
    return AppConfig(
        host=data.get("host", "127.0.0.1"),
        port=data.get("port", 8000),
        storage_path=data.get("storage_path", "redink.db"),
        audit_log=data.get("audit_log"),
        ui_dist=data.get("ui_dist"),
        provider_url_env=data.get("provider_url_env", "FEEDBACK_PROVIDER_URL"),
        provider_key_env=data.get("provider_key_env", "FEEDBACK_PROVIDER_KEY"),
        provider_timeout_seconds=data.get("provider_timeout_seconds", 60.0),
        pipeline=pipeline,
    )
