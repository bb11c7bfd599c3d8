"""Canonical JSON encoding shared by every digest and wire format.

Rules (published so independent parties can recompute identical digests):
  - UTF-8 output, object keys sorted by their UTF-8 byte sequence,
    no insignificant whitespace (separators "," and ":").
  - Values limited to objects, arrays, strings, integers, booleans, null.
    Floats are rejected; integers must stay within +/- 2**53 - 1 so every
    consumer (including JavaScript) parses them exactly.
  - Binary fields are carried as unpadded standard base64. Decoding is
    strict: a string that is not the canonical encoding of its byte value
    is rejected, so no two distinct strings decode to the same bytes.
"""

from __future__ import annotations

import base64
import binascii
import json
from typing import Any

from .errors import NotCanonicalizable, ParseFailure

_INT_BOUND = 2**53


def canonical_json_bytes(obj: Any) -> bytes:
    """Serialize ``obj`` to canonical JSON bytes. Deterministic and injective
    on the value domain described in the module docstring."""
    _check_value(obj, path="$")
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _check_value(value: Any, path: str) -> None:
    if value is None or isinstance(value, str):
        return
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        if not -_INT_BOUND < value < _INT_BOUND:
            raise NotCanonicalizable(f"integer out of safe range at {path}")
        return
    if isinstance(value, float):
        raise NotCanonicalizable(f"float not allowed in canonical JSON at {path}")
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check_value(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NotCanonicalizable(f"non-string key at {path}")
            _check_value(item, f"{path}.{key}")
        return
    raise NotCanonicalizable(f"unsupported type {type(value).__name__} at {path}")


def parse_canonical(raw: bytes) -> Any:
    """Parse canonical JSON bytes, requiring byte-exact canonical form.

    Any re-encoding mismatch (wrong key order, whitespace, duplicate keys,
    non-canonical numbers) is rejected, so a parsed value always
    re-serializes to exactly the input bytes.
    """
    try:
        value = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseFailure(f"invalid JSON: {exc}") from exc
    try:
        round_trip = canonical_json_bytes(value)
    except NotCanonicalizable as exc:
        raise ParseFailure(str(exc)) from exc
    if round_trip != raw:
        raise ParseFailure("input is not in canonical form")
    return value


def b64encode(data: bytes) -> str:
    """Unpadded standard-alphabet base64."""
    return base64.b64encode(data).decode("ascii").rstrip("=")


def b64decode(text: str) -> bytes:
    """Strict inverse of :func:`b64encode`; rejects padding, whitespace,
    non-alphabet characters, and non-canonical trailing bits."""
    if not isinstance(text, str):
        raise ParseFailure("base64 field is not a string")
    pad = -len(text) % 4
    if pad == 3:
        raise ParseFailure("invalid base64 length")
    try:
        data = base64.b64decode(text + "=" * pad, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ParseFailure(f"invalid base64: {exc}") from exc
    if b64encode(data) != text:
        raise ParseFailure("non-canonical base64 encoding")
    return data
