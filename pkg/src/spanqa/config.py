"""Declarative configuration: one TOML file, secrets via environment.

The file holds endpoints, paths, and tuning knobs; API keys never
appear in it — the config names the environment variable that holds
each secret, and clients read it at call time. Unknown keys are
rejected so typos fail fast instead of silently using defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .chunker import ChunkerConfig
from .embeddings import EmbeddingClient, create_embedding_client
from .extraction import (
    LlmSpanExtractor,
    PostProcessConfig,
    PromptMode,
    SpanExtractor,
    TokenScorerExtractor,
    create_token_scorer,
)
from .llm import LlmClient, create_llm_client

RETRIEVAL_MODES = ("lexical", "dense", "hybrid")


class ConfigError(ValueError):
    """Unusable configuration file."""


@dataclass(frozen=True, slots=True)
class RetrievalConfig:
    k: int = 5
    mode: str = "hybrid"
    rrf_k: int = 60

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"retrieval.k must be >= 1, got {self.k}")
        if self.mode not in RETRIEVAL_MODES:
            raise ConfigError(f"retrieval.mode must be one of {RETRIEVAL_MODES}, got {self.mode!r}")
        if self.rrf_k < 0:
            raise ConfigError(f"retrieval.rrf_k must be >= 0, got {self.rrf_k}")


@dataclass(frozen=True, slots=True)
class LlmConfig:
    endpoint: str = "fixture://llm_fixture.json"
    model_id: str = "scripted"
    key_env_var: str = ""


@dataclass(frozen=True, slots=True)
class EmbedderConfig:
    endpoint: str = "mock://hash-v1"
    model_id: str = ""
    dim: int = 256

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ConfigError(f"embedder.dim must be >= 2, got {self.dim}")


@dataclass(frozen=True, slots=True)
class ExtractionSettings:
    prompt_mode: str = "default_extraction"
    scorer_endpoint: str = "mock://overlap"
    min_span_chars: int = 10
    merge_gap_chars: int = 20
    decode_threshold: float = 0.2

    def __post_init__(self) -> None:
        if self.prompt_mode not in {m.value for m in PromptMode}:
            raise ConfigError(
                f"extraction.prompt_mode must be one of "
                f"{sorted(m.value for m in PromptMode)}, got {self.prompt_mode!r}"
            )

    @property
    def mode(self) -> PromptMode:
        return PromptMode(self.prompt_mode)

    @property
    def post_process(self) -> PostProcessConfig:
        return PostProcessConfig(
            min_span_chars=self.min_span_chars,
            merge_gap_chars=self.merge_gap_chars,
            decode_threshold=self.decode_threshold,
        )


@dataclass(frozen=True, slots=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ConfigError(f"server.port must be in 1..65535, got {self.port}")


@dataclass(frozen=True, slots=True)
class AppConfig:
    corpus_dir: str = "corpus"
    index_dir: str = "index"
    chunker: ChunkerConfig = field(default_factory=ChunkerConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    extraction: ExtractionSettings = field(default_factory=ExtractionSettings)
    server: ServerConfig = field(default_factory=ServerConfig)


def _build_section(cls, table: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    try:
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}] section: {exc}") from exc


_SECTIONS = {
    "chunker": ChunkerConfig,
    "retrieval": RetrievalConfig,
    "llm": LlmConfig,
    "embedder": EmbedderConfig,
    "extraction": ExtractionSettings,
    "server": ServerConfig,
}


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load an AppConfig from a TOML file; no file means all defaults."""
    if path is None:
        return AppConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as handle:
        try:
            raw = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    top_level = {"corpus_dir", "index_dir"}
    unknown = set(raw) - top_level - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) in {path}: {sorted(unknown)}")
    kwargs: dict = {key: raw[key] for key in top_level & set(raw)}
    for section, cls in _SECTIONS.items():
        if section in raw:
            if not isinstance(raw[section], dict):
                raise ConfigError(f"[{section}] must be a table")
            # tuples, not lists, for hashable frozen dataclasses
            table = {
                key: tuple(value) if isinstance(value, list) else value
                for key, value in raw[section].items()
            }
            kwargs[section] = _build_section(cls, table, section)
    return AppConfig(**kwargs)


# --------------------------------------------------------------------------
# client wiring


def make_embedding_client(config: AppConfig) -> EmbeddingClient:
    return create_embedding_client(
        config.embedder.endpoint, dim=config.embedder.dim, model_id=config.embedder.model_id
    )


def make_llm_client(config: AppConfig) -> LlmClient:
    return create_llm_client(
        config.llm.endpoint,
        model_id=config.llm.model_id,
        key_env_var=config.llm.key_env_var,
    )


def make_extractor(config: AppConfig, backend: str) -> SpanExtractor:
    """Build the extraction backend named by ``backend``.

    Accepted names: ``llm:default``, ``llm:paragraph``, ``scorer``.
    """
    cfg = config.extraction.post_process
    if backend == "llm:default":
        return LlmSpanExtractor(make_llm_client(config), PromptMode.DEFAULT, cfg)
    if backend == "llm:paragraph":
        return LlmSpanExtractor(make_llm_client(config), PromptMode.PARAGRAPH, cfg)
    if backend == "scorer":
        return TokenScorerExtractor(create_token_scorer(config.extraction.scorer_endpoint), cfg)
    raise ConfigError(f"unknown extraction backend {backend!r}")
