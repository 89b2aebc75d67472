"""Service and engine configuration.

Values come from an optional YAML file, then environment variables on
top (EXPREUSE_*). The nested ``train`` and ``battery`` maps are passed
through as keyword arguments to the two domain scheme factories, so a
deployment can reshape thresholds without code changes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping

import yaml

from .errors import DomainViolation

_ENV_PREFIX = "EXPREUSE_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8731
    store_dir: str | None = None  # directory for meta.log/traces.bin; None keeps memory only
    event_log: str | None = None  # JSONL sink for the reuse event feed
    console_dir: str | None = None  # static dir served at /console; None disables it
    ttl_answers: float = math.inf
    ttl_responses: float = math.inf
    ttl_results: float = math.inf
    ttl_links: float = math.inf
    train: dict = field(default_factory=dict)
    battery: dict = field(default_factory=dict)

    def ttl_kwargs(self) -> dict[str, float]:
        return {
            "answers": self.ttl_answers,
            "responses": self.ttl_responses,
            "results": self.ttl_results,
            "links": self.ttl_links,
        }


_SCALARS = {
    "host": str,
    "port": int,
    "store_dir": str,
    "event_log": str,
    "console_dir": str,
    "ttl_answers": float,
    "ttl_responses": float,
    "ttl_results": float,
    "ttl_links": float,
}


def _apply(cfg: ServiceConfig, key: str, value) -> None:
    if key in _SCALARS:
        setattr(cfg, key, None if value is None else _SCALARS[key](value))
    elif key in ("train", "battery"):
        if not isinstance(value, Mapping):
            raise DomainViolation(f"config section {key!r} must be a mapping")
        getattr(cfg, key).update(value)
    else:
        raise DomainViolation(f"unknown config key {key!r}")


def load_config(path: str | None = None, env: Mapping[str, str] | None = None) -> ServiceConfig:
    cfg = ServiceConfig()
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, Mapping):
            raise DomainViolation("config file must hold a mapping")
        for key, value in data.items():
            _apply(cfg, str(key), value)
    env = os.environ if env is None else env
    for key in list(_SCALARS) + ["train", "battery"]:
        raw = env.get(_ENV_PREFIX + key.upper())
        if raw is None:
            continue
        if key in ("train", "battery"):
            _apply(cfg, key, json.loads(raw))
        else:
            _apply(cfg, key, raw)
    return cfg
