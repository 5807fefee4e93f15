"""Configuration loading and construction of configured components.

Configuration lives in a small YAML file with four sections: provider
(model access), store (where the question bank lives), catalog (an
optional extra challenge file), and service (HTTP host/port/token and the
review UI directory). Every
key has a default, so a missing file or section is fine, but unknown keys
and wrong types are rejected rather than ignored.

Environment: CFQ_CONFIG points at the config file when no path is given
explicitly, and CFQ_API_KEY supplies the provider API key, which never
appears in the file itself.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional

import yaml

from . import corpus
from .bank import Store
from .errors import ConfigError
from .gateway import (
    DEFAULT_BACKOFF,
    DEFAULT_CONCURRENCY,
    DEFAULT_RETRIES,
    Gateway,
    LiveProvider,
    ReplayProvider,
)

API_KEY_ENV = "CFQ_API_KEY"
CONFIG_ENV = "CFQ_CONFIG"

DEFAULT_STORE_PATH = "./cfq-store"
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8571


@dataclass(frozen=True)
class ProviderConfig:
    mode: str = "replay"
    endpoint: str = ""
    model: str = "gpt-4"
    temperature: float = 0.0
    max_output: int = 2048
    retries: int = DEFAULT_RETRIES
    concurrency: int = DEFAULT_CONCURRENCY
    backoff: float = DEFAULT_BACKOFF
    budget: Optional[int] = None
    fixtures: Optional[str] = None


@dataclass(frozen=True)
class StoreConfig:
    path: Optional[str] = DEFAULT_STORE_PATH


@dataclass(frozen=True)
class CatalogConfig:
    path: Optional[str] = None


@dataclass(frozen=True)
class ServiceConfig:
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT
    token: Optional[str] = None
    ui: Optional[str] = None


@dataclass(frozen=True)
class Config:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    store: StoreConfig = field(default_factory=StoreConfig)
    catalog: CatalogConfig = field(default_factory=CatalogConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


_SECTIONS = {
    "provider": ProviderConfig,
    "store": StoreConfig,
    "catalog": CatalogConfig,
    "service": ServiceConfig,
}

_COERCERS = {
    float: lambda v: float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else None,
    int: lambda v: v if isinstance(v, int) and not isinstance(v, bool) else None,
    str: lambda v: v if isinstance(v, str) else None,
}


def _build_section(name: str, cls, raw: Mapping) -> object:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config section {name!r} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown config key {name}.{sorted(unknown)[0]}")
    values = {}
    for key, value in raw.items():
        if value is None:
            continue
        target = known[key].type
        optional = "Optional" in str(target) or "None" in str(target)
        base = str
        if "int" in str(target):
            base = int
        elif "float" in str(target):
            base = float
        coerced = _COERCERS[base](value)
        if coerced is None and not (optional and value is None):
            raise ConfigError(f"config key {name}.{key} must be of type {base.__name__}")
        values[key] = coerced
    return cls(**values)


def load_config(path: Optional[Path | str] = None, *, env: Mapping[str, str] = os.environ) -> Config:
    """Load configuration from path, $CFQ_CONFIG, or defaults."""
    if path is None:
        path = env.get(CONFIG_ENV)
    if path is None:
        return Config()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if raw is None:
        return Config()
    if not isinstance(raw, Mapping):
        raise ConfigError("config file must contain a mapping")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section {sorted(unknown)[0]!r}")
    sections = {}
    for name, cls in _SECTIONS.items():
        if name in raw:
            sections[name] = _build_section(name, cls, raw[name])
    config = Config(**sections)
    if config.provider.mode not in ("live", "replay", "record"):
        raise ConfigError(f"provider.mode must be live, replay, or record, got {config.provider.mode!r}")
    return config


def open_store(config: Config, *, clock=None) -> Store:
    """Open the configured store and merge in any extra catalog file."""
    kwargs = {} if clock is None else {"clock": clock}
    store = Store.open(config.store.path, **kwargs)
    if config.catalog.path:
        for challenge in corpus.load_catalog(config.catalog.path):
            try:
                store.get_challenge(challenge.id)
            except corpus.UnknownChallenge:
                store.add_challenge(challenge)
    return store


def build_gateway(
    config: Config,
    *,
    env: Mapping[str, str] = os.environ,
    sleep=time.sleep,
) -> Gateway:
    """Construct the gateway for the configured provider mode."""
    provider_config = config.provider
    mode = provider_config.mode
    if mode in ("live", "record"):
        if not provider_config.endpoint:
            raise ConfigError(f"provider.endpoint is required in {mode} mode")
        api_key = env.get(API_KEY_ENV)
        if not api_key:
            raise ConfigError(f"{API_KEY_ENV} must be set in {mode} mode")
        provider = LiveProvider(provider_config.endpoint, api_key)
    else:
        if not provider_config.fixtures:
            raise ConfigError("provider.fixtures is required in replay mode")
        provider = ReplayProvider(provider_config.fixtures)
    if mode == "record" and not provider_config.fixtures:
        raise ConfigError("provider.fixtures is required in record mode")
    return Gateway(
        provider,
        mode=mode,
        model=provider_config.model,
        temperature=provider_config.temperature,
        max_output=provider_config.max_output,
        retries=provider_config.retries,
        concurrency=provider_config.concurrency,
        backoff=provider_config.backoff,
        budget=provider_config.budget,
        fixtures_dir=provider_config.fixtures,
        sleep=sleep,
    )
