"""Single-TOML configuration with per-module sections.

Every stage reads its knobs from one config mapping; a user file overrides
the defaults section by section. Paths inside the config (lexicons, policy,
distractors) are resolved relative to the config file's directory.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Dict, Optional

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "generate": {"temperature": 0.7, "max_tokens": 1024, "n_demos": 2},
    "gateway": {
        "model": "gpt-3.5-turbo",
        "max_retries": 3,
        "backoff_base": 1.0,
        "timeout": 60.0,
        "max_in_flight": 8,
        "per_minute": 0,  # 0 disables the per-minute budget
    },
    "mock": {
        "questions_per_scene": 6,
        "dialogue_rounds": 3,
        "counting_error_rate": 0.0,
        "existence_error_rate": 0.0,
        "id_leak_rate": 0.0,
        "refusal_rate": 0.0,
    },
    "refiner": {"rewrite_rounds": 3, "lexicons": None},
    "sampler": {"policy": None},
    "balancer": {"ratio": 0.5, "distractors": None},
    "emitter": {"shard_size": 1000},
    "prompts": {"demos": None, "pools": None},
}


def load_config(path: Optional[str | Path] = None) -> Dict[str, Dict[str, Any]]:
    config = copy.deepcopy(DEFAULTS)
    if path is None:
        return config
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    p = Path(path)
    data = tomllib.loads(p.read_text(encoding="utf-8"))
    for section, values in data.items():
        if not isinstance(values, dict):
            continue
        config.setdefault(section, {})
        for key, value in values.items():
            config[section][key] = value
    base = p.parent
    for section in ("refiner", "sampler", "balancer", "prompts"):
        for key in ("lexicons", "policy", "distractors", "demos", "pools"):
            value = config.get(section, {}).get(key)
            if isinstance(value, str) and not Path(value).is_absolute():
                config[section][key] = str(base / value)
    return config
