"""Tamper-evident append-only trust registry.

A single-operator hash chain stands in for a blockchain: every append
creates one block (1..64 entries) whose Merkle root commits the entry
digests and whose block hash commits (index, prev_hash, merkle_root,
timestamp). Holders of the head hash can verify inclusion proofs
without seeing any other entry, and a single corrupted byte anywhere
in the persisted file is detected by ``verify_chain``.

Persistence: ``u32 big-endian length || canonical JSON block bytes``
per block, appended to one file. Parsing is strict (exact key sets,
canonical byte equality), so every stored byte is load-bearing.
"""

from __future__ import annotations

import enum
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

from . import crypto
from .canon import b64decode, b64encode, canonical_json_bytes, parse_canonical
from .errors import (
    BatchTooLarge,
    EmptyBatch,
    EntryNotFound,
    ParseFailure,
    UniquenessViolation,
)

TAG_ENTRY = b"authcred/entry/v1"
TAG_LEAF = b"authcred/leaf/v1"
TAG_NODE = b"authcred/node/v1"
TAG_BLOCK = b"authcred/block/v1"

MAX_ENTRIES_PER_BLOCK = 64
_MAX_BLOCK_BYTES = 1 << 22
_ZERO32 = b"\x00" * 32


class EntryKind(str, enum.Enum):
    DID_REGISTRATION = "DidRegistration"
    CREDENTIAL_ANCHOR = "CredentialAnchor"
    CONSENT_RECORD = "ConsentRecord"
    REVIEW_ATTESTATION = "ReviewAttestation"
    COI_OUTCOME = "CoiOutcome"
    PUBLICATION_ANCHOR = "PublicationAnchor"


# kind+key must be unique across the whole chain for these kinds
UNIQUE_KINDS = frozenset({EntryKind.DID_REGISTRATION, EntryKind.PUBLICATION_ANCHOR})

_ENTRY_KEYS = frozenset({"key", "kind", "payload_digest", "recorded_at"})
_BLOCK_KEYS = frozenset(
    {"block_hash", "entries", "index", "merkle_root", "prev_hash", "timestamp"}
)


@dataclass(frozen=True)
class LedgerEntry:
    kind: EntryKind
    key: str
    payload_digest: bytes
    recorded_at: int

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "key": self.key,
            "payload_digest": b64encode(self.payload_digest),
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LedgerEntry":
        if not isinstance(data, dict) or set(data) != _ENTRY_KEYS:
            raise ParseFailure("entry does not have the exact expected fields")
        try:
            kind = EntryKind(data["kind"])
        except ValueError as exc:
            raise ParseFailure(f"unknown entry kind: {data['kind']!r}") from exc
        if not isinstance(data["key"], str):
            raise ParseFailure("entry key must be a string")
        digest = b64decode(data["payload_digest"])
        if len(digest) != crypto.DIGEST_BYTES:
            raise ParseFailure("payload digest must be 32 bytes")
        recorded_at = data["recorded_at"]
        if not isinstance(recorded_at, int) or isinstance(recorded_at, bool):
            raise ParseFailure("recorded_at must be an integer")
        return cls(kind=kind, key=data["key"], payload_digest=digest, recorded_at=recorded_at)

    def digest(self) -> bytes:
        return crypto.sha256(TAG_ENTRY + canonical_json_bytes(self.to_json()))


# ---------------------------------------------------------------------------
# Merkle tree over entry digests
# ---------------------------------------------------------------------------


def _leaf(entry_digest: bytes) -> bytes:
    return crypto.sha256(TAG_LEAF + entry_digest)


def _node(left: bytes, right: bytes) -> bytes:
    return crypto.sha256(TAG_NODE + left + right)


def merkle_root(entry_digests: list[bytes]) -> bytes:
    """Root of the binary tree over leaf hashes; an unpaired node is
    promoted unchanged. Empty input (genesis only) roots to 32 zero bytes."""
    if not entry_digests:
        return _ZERO32
    level = [_leaf(d) for d in entry_digests]
    while len(level) > 1:
        nxt = [
            _node(level[i], level[i + 1]) if i + 1 < len(level) else level[i]
            for i in range(0, len(level), 2)
        ]
        level = nxt
    return level[0]


def merkle_path(entry_digests: list[bytes], position: int) -> list[tuple[bytes, str]]:
    """Sibling path for the leaf at ``position``; each element is
    (sibling_digest, side) where side is the sibling's side, "L" or "R"."""
    path: list[tuple[bytes, str]] = []
    level = [_leaf(d) for d in entry_digests]
    idx = position
    while len(level) > 1:
        sibling = idx ^ 1
        if sibling < len(level):
            side = "L" if sibling < idx else "R"
            path.append((level[sibling], side))
        nxt = [
            _node(level[i], level[i + 1]) if i + 1 < len(level) else level[i]
            for i in range(0, len(level), 2)
        ]
        level = nxt
        idx //= 2
    return path


def fold_path(entry_digest: bytes, path: list[tuple[bytes, str]]) -> bytes:
    current = _leaf(entry_digest)
    for sibling, side in path:
        current = _node(sibling, current) if side == "L" else _node(current, sibling)
    return current


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------


def compute_block_hash(index: int, prev_hash: bytes, root: bytes, timestamp: int) -> bytes:
    header = {
        "index": index,
        "prev_hash": b64encode(prev_hash),
        "merkle_root": b64encode(root),
        "timestamp": timestamp,
    }
    return crypto.sha256(TAG_BLOCK + canonical_json_bytes(header))


@dataclass(frozen=True)
class BlockHeader:
    index: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    block_hash: bytes

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "prev_hash": b64encode(self.prev_hash),
            "merkle_root": b64encode(self.merkle_root),
            "timestamp": self.timestamp,
            "block_hash": b64encode(self.block_hash),
        }

    @classmethod
    def from_json(cls, data: dict) -> "BlockHeader":
        try:
            return cls(
                index=int(data["index"]),
                prev_hash=b64decode(data["prev_hash"]),
                merkle_root=b64decode(data["merkle_root"]),
                timestamp=int(data["timestamp"]),
                block_hash=b64decode(data["block_hash"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseFailure(f"bad block header: {exc}") from exc


@dataclass(frozen=True)
class LedgerBlock:
    index: int
    prev_hash: bytes
    entries: tuple[LedgerEntry, ...]
    merkle_root: bytes
    timestamp: int
    block_hash: bytes

    @property
    def header(self) -> BlockHeader:
        return BlockHeader(
            index=self.index,
            prev_hash=self.prev_hash,
            merkle_root=self.merkle_root,
            timestamp=self.timestamp,
            block_hash=self.block_hash,
        )

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "prev_hash": b64encode(self.prev_hash),
            "entries": [e.to_json() for e in self.entries],
            "merkle_root": b64encode(self.merkle_root),
            "timestamp": self.timestamp,
            "block_hash": b64encode(self.block_hash),
        }

    @classmethod
    def from_json(cls, data: dict) -> "LedgerBlock":
        if not isinstance(data, dict) or set(data) != _BLOCK_KEYS:
            raise ParseFailure("block does not have the exact expected fields")
        if not isinstance(data["entries"], list):
            raise ParseFailure("block entries must be a list")
        for field in ("index", "timestamp"):
            if not isinstance(data[field], int) or isinstance(data[field], bool):
                raise ParseFailure(f"block {field} must be an integer")
        prev_hash = b64decode(data["prev_hash"])
        root = b64decode(data["merkle_root"])
        block_hash = b64decode(data["block_hash"])
        if any(len(d) != crypto.DIGEST_BYTES for d in (prev_hash, root, block_hash)):
            raise ParseFailure("block digests must be 32 bytes")
        return cls(
            index=data["index"],
            prev_hash=prev_hash,
            entries=tuple(LedgerEntry.from_json(e) for e in data["entries"]),
            merkle_root=root,
            timestamp=data["timestamp"],
            block_hash=block_hash,
        )


@dataclass(frozen=True)
class InclusionProof:
    entry_digest: bytes
    block_index: int
    sibling_path: tuple[tuple[bytes, str], ...]

    def to_json(self) -> dict:
        return {
            "entry_digest": b64encode(self.entry_digest),
            "block_index": self.block_index,
            "sibling_path": [
                {"digest": b64encode(d), "side": side} for d, side in self.sibling_path
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "InclusionProof":
        try:
            path = tuple(
                (b64decode(step["digest"]), str(step["side"]))
                for step in data["sibling_path"]
            )
            return cls(
                entry_digest=b64decode(data["entry_digest"]),
                block_index=int(data["block_index"]),
                sibling_path=path,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseFailure(f"bad inclusion proof: {exc}") from exc


@dataclass(frozen=True)
class LedgerReceipt:
    block_index: int
    entry_digest: bytes
    block_hash: bytes
    proof: InclusionProof

    def to_json(self) -> dict:
        return {
            "block_index": self.block_index,
            "entry_digest": b64encode(self.entry_digest),
            "block_hash": b64encode(self.block_hash),
            "proof": self.proof.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "LedgerReceipt":
        try:
            return cls(
                block_index=int(data["block_index"]),
                entry_digest=b64decode(data["entry_digest"]),
                block_hash=b64decode(data["block_hash"]),
                proof=InclusionProof.from_json(data["proof"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseFailure(f"bad receipt: {exc}") from exc


@dataclass(frozen=True)
class ChainReport:
    ok: bool
    blocks_checked: int
    first_bad_index: int | None = None
    reason: str | None = None


def verify_inclusion(
    proof: InclusionProof, trusted_head_hash: bytes, block_headers: list[BlockHeader]
) -> bool:
    """Check a proof against a pinned head hash using block headers only.

    Verifies that the headers form an unbroken hash chain ending at the
    trusted head and that folding the sibling path from the entry digest
    reproduces the referenced block's Merkle root.
    """
    if not block_headers or block_headers[-1].block_hash != trusted_head_hash:
        return False
    prev = _ZERO32
    for position, header in enumerate(block_headers):
        if header.index != position or header.prev_hash != prev:
            return False
        recomputed = compute_block_hash(
            header.index, header.prev_hash, header.merkle_root, header.timestamp
        )
        if recomputed != header.block_hash:
            return False
        prev = header.block_hash
    if not 0 <= proof.block_index < len(block_headers):
        return False
    try:
        root = fold_path(proof.entry_digest, list(proof.sibling_path))
    except Exception:
        return False
    return root == block_headers[proof.block_index].merkle_root


# ---------------------------------------------------------------------------
# Chain verification over persisted bytes
# ---------------------------------------------------------------------------


def verify_chain_bytes(raw: bytes) -> ChainReport:
    """Replay the persisted file and recompute every commitment.

    Fails at the first block whose framing, canonical form, index, chain
    link, timestamp ordering, Merkle root, or block hash does not
    recompute. Reports the 0-based index of the offending block.
    """
    offset = 0
    position = 0
    prev_hash = _ZERO32
    prev_timestamp = None

    def bad(reason: str) -> ChainReport:
        return ChainReport(
            ok=False, blocks_checked=position, first_bad_index=position, reason=reason
        )

    while offset < len(raw):
        if offset + 4 > len(raw):
            return bad("truncated length prefix")
        (length,) = struct.unpack(">I", raw[offset : offset + 4])
        if length == 0 or length > _MAX_BLOCK_BYTES:
            return bad(f"implausible block length {length}")
        if offset + 4 + length > len(raw):
            return bad("block extends past end of file")
        body = raw[offset + 4 : offset + 4 + length]
        try:
            block = LedgerBlock.from_json(parse_canonical(body))
        except ParseFailure as exc:
            return bad(f"unparseable block: {exc}")
        if block.index != position:
            return bad(f"index {block.index} at position {position}")
        if block.prev_hash != prev_hash:
            return bad("prev_hash does not match preceding block")
        if position == 0:
            if block.entries:
                return bad("genesis block must carry no entries")
        elif not 1 <= len(block.entries) <= MAX_ENTRIES_PER_BLOCK:
            return bad(f"block carries {len(block.entries)} entries")
        if prev_timestamp is not None and block.timestamp < prev_timestamp:
            return bad("timestamp decreased")
        if merkle_root([e.digest() for e in block.entries]) != block.merkle_root:
            return bad("merkle root does not recompute")
        recomputed = compute_block_hash(
            block.index, block.prev_hash, block.merkle_root, block.timestamp
        )
        if recomputed != block.block_hash:
            return bad("block hash does not recompute")
        prev_hash = block.block_hash
        prev_timestamp = block.timestamp
        offset += 4 + length
        position += 1

    if position == 0:
        return ChainReport(ok=False, blocks_checked=0, first_bad_index=0, reason="no genesis block")
    return ChainReport(ok=True, blocks_checked=position)


# ---------------------------------------------------------------------------
# The ledger
# ---------------------------------------------------------------------------


class Ledger:
    """Single-writer append-only log with a rebuildable in-memory index.

    Appends are serialized under a lock and each append persists exactly
    one block before the receipts are returned. Reads observe only fully
    committed blocks.
    """

    def __init__(self, path: Path | str, clock=None):
        self.path = Path(path)
        self.clock = clock or crypto.SystemClock()
        self._lock = threading.Lock()
        self._blocks: list[LedgerBlock] = []
        self._index: dict[tuple[EntryKind, str], list[tuple[int, int]]] = {}
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()
        else:
            self._write_genesis()

    # -- construction -------------------------------------------------------

    def _write_genesis(self) -> None:
        timestamp = self.clock.now()
        block_hash = compute_block_hash(0, _ZERO32, _ZERO32, timestamp)
        genesis = LedgerBlock(
            index=0,
            prev_hash=_ZERO32,
            entries=(),
            merkle_root=_ZERO32,
            timestamp=timestamp,
            block_hash=block_hash,
        )
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("wb") as fh:
            fh.write(self._frame(genesis))
        self._blocks = [genesis]

    def _load(self) -> None:
        raw = self.path.read_bytes()
        report = verify_chain_bytes(raw)
        if not report.ok:
            raise ParseFailure(
                f"ledger file fails verification at block {report.first_bad_index}: {report.reason}"
            )
        offset = 0
        while offset < len(raw):
            (length,) = struct.unpack(">I", raw[offset : offset + 4])
            body = raw[offset + 4 : offset + 4 + length]
            block = LedgerBlock.from_json(parse_canonical(body))
            self._admit(block)
            offset += 4 + length

    def _admit(self, block: LedgerBlock) -> None:
        self._blocks.append(block)
        for entry_pos, entry in enumerate(block.entries):
            self._index.setdefault((entry.kind, entry.key), []).append(
                (block.index, entry_pos)
            )

    @staticmethod
    def _frame(block: LedgerBlock) -> bytes:
        body = canonical_json_bytes(block.to_json())
        return struct.pack(">I", len(body)) + body

    # -- writes -------------------------------------------------------------

    def append(self, entries: list[LedgerEntry]) -> list[LedgerReceipt]:
        """Chain one new block carrying ``entries`` and return one receipt
        (block index, entry digest, inclusion proof) per entry."""
        if not entries:
            raise EmptyBatch("append requires at least one entry")
        if len(entries) > MAX_ENTRIES_PER_BLOCK:
            raise BatchTooLarge(
                f"{len(entries)} entries exceeds the {MAX_ENTRIES_PER_BLOCK}-entry block bound"
            )
        with self._lock:
            seen: set[tuple[EntryKind, str]] = set()
            for entry in entries:
                if entry.kind not in UNIQUE_KINDS:
                    continue
                slot = (entry.kind, entry.key)
                if slot in self._index or slot in seen:
                    raise UniquenessViolation(
                        f"{entry.kind.value} entry for {entry.key!r} already recorded"
                    )
                seen.add(slot)
            head = self._blocks[-1]
            digests = [e.digest() for e in entries]
            root = merkle_root(digests)
            timestamp = max(self.clock.now(), head.timestamp)
            index = head.index + 1
            block = LedgerBlock(
                index=index,
                prev_hash=head.block_hash,
                entries=tuple(entries),
                merkle_root=root,
                timestamp=timestamp,
                block_hash=compute_block_hash(index, head.block_hash, root, timestamp),
            )
            with self.path.open("ab") as fh:
                fh.write(self._frame(block))
                fh.flush()
            self._admit(block)
            return [
                LedgerReceipt(
                    block_index=index,
                    entry_digest=digest,
                    block_hash=block.block_hash,
                    proof=InclusionProof(
                        entry_digest=digest,
                        block_index=index,
                        sibling_path=tuple(merkle_path(digests, pos)),
                    ),
                )
                for pos, digest in enumerate(digests)
            ]

    # -- reads --------------------------------------------------------------

    @property
    def head_hash(self) -> bytes:
        return self._blocks[-1].block_hash

    @property
    def head_hash_hex(self) -> str:
        return self.head_hash.hex()

    def __len__(self) -> int:
        return len(self._blocks)

    def block(self, index: int) -> LedgerBlock:
        if not 0 <= index < len(self._blocks):
            raise EntryNotFound(f"no block {index}")
        return self._blocks[index]

    def headers(self) -> list[BlockHeader]:
        return [b.header for b in self._blocks]

    def query(self, kind: EntryKind, key: str) -> list[tuple[LedgerEntry, int]]:
        """All entries matching (kind, key), in chain order."""
        out = []
        for block_index, entry_pos in self._index.get((kind, key), []):
            out.append((self._blocks[block_index].entries[entry_pos], block_index))
        return out

    def prove_inclusion(self, block_index: int, entry_digest: bytes) -> InclusionProof:
        block = self.block(block_index)
        digests = [e.digest() for e in block.entries]
        for pos, digest in enumerate(digests):
            if digest == entry_digest:
                return InclusionProof(
                    entry_digest=digest,
                    block_index=block_index,
                    sibling_path=tuple(merkle_path(digests, pos)),
                )
        raise EntryNotFound(f"entry digest not present in block {block_index}")

    def verify_chain(self) -> ChainReport:
        """Re-read the persisted file and recompute every commitment."""
        try:
            raw = self.path.read_bytes()
        except OSError:
            return ChainReport(ok=False, blocks_checked=0, first_bad_index=0, reason="unreadable file")
        return verify_chain_bytes(raw)
