"""Engine configuration with JSON-file and environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional


@dataclass
class EngineConfig:
    """Tunable knobs for one engine session.

    Defaults mirror the behavior contract: categorical promotion at 50
    unique values, 15 sample rows, a 200-row preview sample, at most two
    model candidates, and a 6-column client viewport assumption.
    """

    seed: int = 0
    categorical_threshold: int = 50
    unique_value_cap: int = 50
    row_sample_k: int = 15
    preview_sample_rows: int = 200
    prefix_candidate_cap: int = 50
    max_model_candidates: int = 2
    max_prompt_chars: int = 8000
    viewport_columns: int = 6
    debounce_ms: int = 300
    data_dir: str = "."
    model_endpoint: Optional[str] = None
    model_key: Optional[str] = None
    mock_responses_path: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Optional[str] = None, env: Optional[dict] = None) -> "EngineConfig":
        """Build a config from an optional JSON file plus the environment.

        Environment variables WRANGLEKIT_MODEL_ENDPOINT / WRANGLEKIT_MODEL_KEY
        override file values so credentials stay out of config files.
        """
        env = os.environ if env is None else env
        values: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            if not isinstance(raw, dict):
                raise ValueError("config file must hold a JSON object")
            known = {f.name for f in fields(cls)} - {"extra"}
            values = {k: v for k, v in raw.items() if k in known}
            values["extra"] = {k: v for k, v in raw.items() if k not in known}
        cfg = cls(**values)
        if env.get("WRANGLEKIT_MODEL_ENDPOINT"):
            cfg.model_endpoint = env["WRANGLEKIT_MODEL_ENDPOINT"]
        if env.get("WRANGLEKIT_MODEL_KEY"):
            cfg.model_key = env["WRANGLEKIT_MODEL_KEY"]
        return cfg
