"""JSON configuration loading, schema validation helpers, and the config
hash embedded in every output header."""

from __future__ import annotations

import hashlib
import json

from irflab.errors import InputError


def load_json(path) -> dict:
    """Read a JSON object from ``path`` with actionable error messages."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(payload, dict):
        raise InputError(f"top level of {path} must be a JSON object")
    return payload


def canonical_json(payload) -> str:
    """Key-sorted, whitespace-free serialization used for hashing."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(payload) -> str:
    """First 12 hex digits of the SHA-256 of the canonical serialization."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:12]


def output_header(payload) -> str:
    """Header comment stamped on every output file: tool version plus the
    hash of the configuration that produced it."""
    from irflab import __version__

    return f"irflab v{__version__} config={config_hash(payload)}"


def expect_keys(payload: dict, context: str, required, optional=()) -> None:
    """Reject unknown keys and report missing required keys by name."""
    required = set(required)
    allowed = required | set(optional)
    unknown = set(payload) - allowed
    if unknown:
        raise InputError(
            f"{context}: unknown keys {sorted(unknown)}; allowed keys are {sorted(allowed)}"
        )
    missing = required - set(payload)
    if missing:
        raise InputError(f"{context}: missing required keys {sorted(missing)}")


def typed(payload: dict, key: str, kinds, context: str, default=None):
    """Fetch ``payload[key]`` checking its JSON type; ``default`` when the key
    is absent or explicitly null."""
    if key not in payload or payload[key] is None:
        return default
    value = payload[key]
    if isinstance(kinds, type):
        kinds = (kinds,)
    if bool not in kinds and isinstance(value, bool):
        raise InputError(f"{context}: '{key}' must be {_names(kinds)}, got a boolean")
    if not isinstance(value, tuple(kinds)):
        raise InputError(
            f"{context}: '{key}' must be {_names(kinds)}, got {type(value).__name__}"
        )
    return value


def _names(kinds) -> str:
    labels = {int: "an integer", float: "a number", str: "a string", list: "a list", dict: "an object", bool: "a boolean"}
    return " or ".join(labels.get(k, k.__name__) for k in kinds)
