"""DID creation, registration on the trust registry, and resolution.

A DID renders as ``did:authcred:<base58>`` where the id part is the
base58 encoding of the first 16 bytes of SHA-256(verification key).
Only the document digest goes on the ledger; full documents live in a
node-local store, and resolution cross-checks the stored bytes against
the anchored digest so out-of-band edits surface as ``AnchorMismatch``.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from . import crypto
from .canon import b64decode, b64encode, canonical_json_bytes
from .errors import (
    AnchorMismatch,
    DidParseError,
    DuplicateDid,
    InconsistentDocument,
    NotFound,
    ParseFailure,
)
from .registry import EntryKind, Ledger, LedgerEntry, LedgerReceipt

DEFAULT_METHOD = "authcred"
TAG_DID_DOC = b"authcred/did-doc/v1"

_B58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_METHOD_RE = re.compile(r"^[a-z0-9]{1,16}$")


def b58encode(data: bytes) -> str:
    n = int.from_bytes(data, "big")
    out = ""
    while n:
        n, rem = divmod(n, 58)
        out = _B58_ALPHABET[rem] + out
    pad = len(data) - len(data.lstrip(b"\x00"))
    return "1" * pad + (out or "")


def b58decode(text: str) -> bytes:
    n = 0
    for ch in text:
        idx = _B58_ALPHABET.find(ch)
        if idx < 0:
            raise DidParseError(f"invalid base58 character {ch!r}")
        n = n * 58 + idx
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    pad = len(text) - len(text.lstrip("1"))
    return b"\x00" * pad + body


@dataclass(frozen=True)
class Did:
    method: str
    id: str

    def __str__(self) -> str:
        return f"did:{self.method}:{self.id}"


def parse_did(text: str) -> Did:
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "did" or not parts[1] or not parts[2]:
        raise DidParseError(f"not a DID: {text!r}")
    if not _METHOD_RE.match(parts[1]):
        raise DidParseError(f"bad DID method: {parts[1]!r}")
    b58decode(parts[2])  # raises on non-base58 ids
    return Did(method=parts[1], id=parts[2])


def derive_id(public_key: bytes) -> str:
    return b58encode(crypto.sha256(public_key)[:16])


@dataclass(frozen=True)
class DidDocument:
    did: Did
    verification_key: bytes
    created_at: int
    service_endpoint: str | None = None

    def to_json(self) -> dict:
        doc = {
            "did": str(self.did),
            "verification_key": b64encode(self.verification_key),
            "created_at": self.created_at,
        }
        if self.service_endpoint is not None:
            doc["service_endpoint"] = self.service_endpoint
        return doc

    @classmethod
    def from_json(cls, data: dict) -> "DidDocument":
        try:
            return cls(
                did=parse_did(data["did"]),
                verification_key=b64decode(data["verification_key"]),
                created_at=int(data["created_at"]),
                service_endpoint=data.get("service_endpoint"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseFailure(f"bad DID document: {exc}") from exc

    def is_consistent(self) -> bool:
        return (
            self.did.id == derive_id(self.verification_key)
            and len(self.verification_key) == crypto.PUBLIC_KEY_BYTES
            and self.created_at > 0
        )


def document_digest(doc: DidDocument) -> bytes:
    return crypto.sha256(TAG_DID_DOC + canonical_json_bytes(doc.to_json()))


def create_did(
    keypair: crypto.KeyPair,
    method: str = DEFAULT_METHOD,
    now: int | None = None,
    service_endpoint: str | None = None,
) -> tuple[Did, DidDocument]:
    """Derive a DID and its document from the controller key pair. The DID
    string depends only on the key, so seeded key pairs give stable DIDs."""
    if not _METHOD_RE.match(method):
        raise DidParseError(f"bad DID method: {method!r}")
    did = Did(method=method, id=derive_id(keypair.public_key))
    doc = DidDocument(
        did=did,
        verification_key=keypair.public_key,
        created_at=now if now is not None else crypto.SystemClock().now(),
        service_endpoint=service_endpoint,
    )
    return did, doc


class DidStore:
    """Node-local persistence for full DID documents, keyed by DID string.

    Documents are stored as their canonical JSON bytes so that any
    out-of-band modification changes the digest checked at resolution.
    """

    def __init__(self, path: Path | None = None):
        self._path = Path(path) if path is not None else None
        self._docs: dict[str, bytes] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            stored = json.loads(self._path.read_text("utf-8"))
            self._docs = {k: v.encode("utf-8") for k, v in stored.items()}

    def put(self, did: str, doc: DidDocument) -> None:
        with self._lock:
            self._docs[did] = canonical_json_bytes(doc.to_json())
            self._flush()

    def get_bytes(self, did: str) -> bytes | None:
        return self._docs.get(did)

    def dids(self) -> list[str]:
        return sorted(self._docs)

    def _flush(self) -> None:
        if self._path is None:
            return
        payload = {k: v.decode("utf-8") for k, v in self._docs.items()}
        tmp = self._path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True, indent=1), "utf-8")
        tmp.replace(self._path)


def register_did(registry: Ledger, store: DidStore, doc: DidDocument) -> LedgerReceipt:
    """Anchor hash(canonical(document)) on the ledger and persist the
    document. Registration is open to anyone holding the key."""
    if not doc.is_consistent():
        raise InconsistentDocument(f"document id does not match key: {doc.did}")
    did = str(doc.did)
    if registry.query(EntryKind.DID_REGISTRATION, did):
        raise DuplicateDid(f"{did} is already registered")
    entry = LedgerEntry(
        kind=EntryKind.DID_REGISTRATION,
        key=did,
        payload_digest=document_digest(doc),
        recorded_at=registry.clock.now(),
    )
    receipt = registry.append([entry])[0]
    store.put(did, doc)
    return receipt


def resolve_did(registry: Ledger, store: DidStore, did: Did | str) -> DidDocument:
    """Return the registered document after checking it still hashes to the
    anchored digest. A stored-byte mismatch is a tamper signal."""
    did_str = str(did)
    matches = registry.query(EntryKind.DID_REGISTRATION, did_str)
    if not matches:
        raise NotFound(f"{did_str} is not registered")
    entry, _block = matches[0]
    raw = store.get_bytes(did_str)
    if raw is None:
        raise AnchorMismatch(f"document for {did_str} is missing from local store")
    if crypto.sha256(TAG_DID_DOC + raw) != entry.payload_digest:
        raise AnchorMismatch(f"stored document for {did_str} does not match anchor")
    try:
        doc = DidDocument.from_json(json.loads(raw.decode("utf-8")))
    except (ParseFailure, ValueError) as exc:
        raise AnchorMismatch(f"stored document for {did_str} is unreadable") from exc
    return doc
