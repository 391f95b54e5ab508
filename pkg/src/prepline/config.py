"""Flat key=value configuration files (TOML-style scalars).

Lines are ``key = value``; values may be quoted strings, integers,
floats, or booleans; ``#`` starts a comment.  Unknown keys pass through
so callers can layer their own settings.
"""

from __future__ import annotations

from .cache import DEFAULT_BUDGET_BYTES

DEFAULTS = {
    "port": 8000,
    "host": "127.0.0.1",
    "backend": "template",
    "cache_budget_bytes": DEFAULT_BUDGET_BYTES,
    "session_root": "sessions",
    "models_dir": "models",
    "remote_base_url": "http://localhost:8080/v1",
    "remote_model": "default",
    "api_key_env": "PREPLINE_API_KEY",
    "remote_timeout": 30.0,
    "ui_dir": "frontend/dist",
}


def _parse_scalar(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text):
    out = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not `key = value`: {raw!r}")
        key, _, value = line.partition("=")
        value = value.split("#", 1)[0] if not value.strip().startswith(('"', "'")) else value
        out[key.strip()] = _parse_scalar(value)
    return out


def load_config(path=None):
    """DEFAULTS overlaid with the file's keys (when a path is given)."""
    merged = dict(DEFAULTS)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            merged.update(parse_config_text(fh.read()))
    return merged
