"""Layered application configuration.

Precedence, highest first: CLI flags, environment variables (KZB_ZOTERO_KEY,
KZB_OPENAI_KEY, KZB_DATA_DIR), the kzb.toml file in the data directory,
built-in defaults. Secrets are write-only at the API surface: redacted
views replace any non-empty key with "***", and merges treat "***" or empty
as "keep what you had".
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .chunking import ChunkingParams
from .embeddings import ProviderConfig
from .errors import InvalidConfig, IoError
from .rag import RagParams
from .zotero import DEFAULT_API_BASE, LibraryDescriptor

CONFIG_FILENAME = "kzb.toml"
DEFAULT_LISTEN_ADDR = "127.0.0.1:8765"
ENV_ZOTERO_KEY = "KZB_ZOTERO_KEY"
ENV_OPENAI_KEY = "KZB_OPENAI_KEY"
ENV_DATA_DIR = "KZB_DATA_DIR"

REDACTED = "***"


@dataclass
class AppConfig:
    zotero: LibraryDescriptor = field(default_factory=lambda: LibraryDescriptor("user", "", ""))
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    chunking: ChunkingParams = field(default_factory=ChunkingParams)
    rag: RagParams = field(default_factory=RagParams)
    data_dir: Path = field(default_factory=lambda: default_data_dir())
    listen_addr: str = DEFAULT_LISTEN_ADDR
    zotero_api_base: str = DEFAULT_API_BASE

    def validate(self) -> None:
        self.zotero.validate()
        self.provider.validate()
        self.chunking.validate()
        self.rag.validate()
        self.ensure_data_dir()

    def ensure_data_dir(self) -> None:
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InvalidConfig(f"data_dir is not writable: {exc}") from exc
        if not os.access(self.data_dir, os.W_OK):
            raise InvalidConfig(f"data_dir is not writable: {self.data_dir}")

    @property
    def index_path(self) -> Path:
        return self.data_dir / "index.kzb"

    @property
    def sessions_dir(self) -> Path:
        return self.data_dir / "sessions"


def default_data_dir() -> Path:
    return Path(os.environ.get(ENV_DATA_DIR, "~/.kzb")).expanduser()


def load_config(
    *,
    data_dir: str | Path | None = None,
    overrides: dict[str, object] | None = None,
) -> AppConfig:
    """Build an AppConfig with full precedence layering applied.

    ``overrides`` maps dotted paths (e.g. "zotero.api_key") to values; it is
    the CLI-flag layer and wins over everything.
    """
    resolved_dir = Path(data_dir).expanduser() if data_dir else default_data_dir()
    layers = _defaults_dict()
    _merge(layers, _read_config_file(resolved_dir / CONFIG_FILENAME))
    if os.environ.get(ENV_ZOTERO_KEY):
        layers["zotero"]["api_key"] = os.environ[ENV_ZOTERO_KEY]
    if os.environ.get(ENV_OPENAI_KEY):
        layers["provider"]["api_key"] = os.environ[ENV_OPENAI_KEY]
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if not key:
            raise InvalidConfig(f"override key must be 'section.field', got {dotted!r}")
        layers.setdefault(section, {})[key] = value
    return config_from_dict(layers, data_dir=resolved_dir)


def save_config(config: AppConfig) -> Path:
    """Write kzb.toml (mode 0600: it can contain API keys)."""
    config.ensure_data_dir()
    path = config.data_dir / CONFIG_FILENAME
    text = _emit_toml(config_to_dict(config))
    try:
        path.write_text(text, encoding="utf-8")
        os.chmod(path, 0o600)
    except OSError as exc:
        raise IoError(f"cannot write config file: {exc}") from exc
    return path


def config_to_dict(config: AppConfig, *, redact: bool = False) -> dict:
    def secret(value: str) -> str:
        if redact:
            return REDACTED if value else ""
        return value

    data: dict = {
        "zotero": {
            "library_type": config.zotero.library_type,
            "library_id": config.zotero.library_id,
            "api_key": secret(config.zotero.api_key),
            "api_base": config.zotero_api_base,
        },
        "provider": {
            "endpoint_url": config.provider.endpoint_url,
            "api_key": secret(config.provider.api_key),
            "embedding_model": config.provider.embedding_model,
            "chat_model": config.provider.chat_model,
            "request_timeout": config.provider.request_timeout,
            "mode": config.provider.mode,
            "mock_dimension": config.provider.mock_dimension,
        },
        "chunking": {
            "chunk_size": config.chunking.chunk_size,
            "chunk_overlap": config.chunking.chunk_overlap,
        },
        "rag": {
            "top_k": config.rag.top_k,
            "similarity_floor": config.rag.similarity_floor,
            "max_history_turns": config.rag.max_history_turns,
            "system_message": config.rag.system_message,
            "chat_model": config.rag.chat_model,
        },
        "server": {"listen_addr": config.listen_addr},
    }
    if config.zotero.collection_id is not None:
        data["zotero"]["collection_id"] = config.zotero.collection_id
    return data


def config_from_dict(
    data: dict,
    *,
    data_dir: Path,
    base: AppConfig | None = None,
) -> AppConfig:
    """Construct from a nested dict, keeping ``base`` secrets when the
    incoming value is empty or the redaction placeholder."""
    merged = config_to_dict(base) if base is not None else _defaults_dict()
    _merge(merged, data)

    if base is not None:
        if _is_placeholder(merged["zotero"].get("api_key")):
            merged["zotero"]["api_key"] = base.zotero.api_key
        if _is_placeholder(merged["provider"].get("api_key")):
            merged["provider"]["api_key"] = base.provider.api_key

    z = merged["zotero"]
    p = merged["provider"]
    c = merged["chunking"]
    r = merged["rag"]
    try:
        collection = z.get("collection_id")
        config = AppConfig(
            zotero=LibraryDescriptor(
                library_type=str(z["library_type"]),
                library_id=str(z["library_id"]),
                api_key=str(z.get("api_key") or ""),
                collection_id=str(collection) if collection else None,
            ),
            provider=ProviderConfig(
                endpoint_url=str(p["endpoint_url"]),
                api_key=str(p.get("api_key") or ""),
                embedding_model=str(p["embedding_model"]),
                chat_model=str(p["chat_model"]),
                request_timeout=float(p["request_timeout"]),
                mode=str(p["mode"]),
                mock_dimension=int(p["mock_dimension"]),
            ),
            chunking=ChunkingParams(
                chunk_size=int(c["chunk_size"]),
                chunk_overlap=int(c["chunk_overlap"]),
            ),
            rag=RagParams(
                top_k=int(r["top_k"]),
                similarity_floor=float(r["similarity_floor"]),
                max_history_turns=int(r["max_history_turns"]),
                system_message=str(r["system_message"]),
                chat_model=str(r.get("chat_model") or ""),
            ),
            data_dir=data_dir,
            listen_addr=str(merged["server"]["listen_addr"]),
            zotero_api_base=str(z.get("api_base") or DEFAULT_API_BASE),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"bad configuration value: {exc}") from exc
    return config


def _is_placeholder(value) -> bool:
    return value in (None, "", REDACTED)


def _defaults_dict() -> dict:
    return config_to_dict(
        AppConfig(data_dir=Path("."))  # data_dir placeholder; caller supplies the real one
    )


def _read_config_file(path: Path) -> dict:
    if not path.exists():
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"malformed {CONFIG_FILENAME}: {exc}") from exc


def _merge(target: dict, incoming: dict) -> None:
    for key, value in incoming.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _merge(target[key], value)
        else:
            target[key] = value


def _emit_toml(data: dict) -> str:
    lines: list[str] = []
    for section, values in data.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    text = str(value)
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    return f'"{escaped}"'
