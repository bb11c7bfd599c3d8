"""Deterministic cryptographic primitives used by every other module.

Concrete algorithms are fixed so digests and signatures are bit-exact
across runs and across independent implementations:

  - signatures: Ed25519 (32-byte verification keys, 64-byte signatures)
  - hashing:    SHA-256 (raw; callers prepend ASCII domain tags)
  - commitments: digest = SHA-256(tag || salt || value) with 32-byte salts
  - blinding group: the quadratic-residue subgroup of the RFC 3526
    1536-bit safe prime. The subgroup has prime order q = (p - 1) / 2,
    elements encode as 192 big-endian bytes, and scalar multiplication
    is modular exponentiation, so (P^a)^b == (P^b)^a exactly.

All values are immutable after construction and every operation here is
pure, so concurrent use needs no coordination.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature as _InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

try:
    from gmpy2 import powmod as _powmod
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _powmod = pow

from .errors import (
    BadSaltLength,
    BadSeedLength,
    MalformedElementEncoding,
    MalformedKey,
    MalformedSignature,
    ZeroScalar,
)

TAG_COMMIT = b"authcred/commit/v1"
TAG_HASH_TO_GROUP = b"authcred/h2g/v1"
_DRBG_TAG = b"authcred/drbg/v1"

SEED_BYTES = 32
SALT_BYTES = 32
PUBLIC_KEY_BYTES = 32
SIGNATURE_BYTES = 64
DIGEST_BYTES = 32


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# ---------------------------------------------------------------------------
# Entropy sources and clocks
# ---------------------------------------------------------------------------


class SystemEntropy:
    """OS randomness; the default outside deterministic demo runs."""

    def bytes(self, n: int) -> bytes:
        return os.urandom(n)


class DeterministicEntropy:
    """SHA-256 counter DRBG. Same seed, same byte stream, every run."""

    def __init__(self, seed: int | bytes):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "big", signed=True)
        self._key = sha256(_DRBG_TAG + seed)
        self._counter = 0

    def bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += sha256(self._key + self._counter.to_bytes(8, "big"))
            self._counter += 1
        return bytes(out[:n])


class SystemClock:
    """Wall-clock seconds, clamped so repeated reads never decrease."""

    def __init__(self) -> None:
        self._last = 0

    def now(self) -> int:
        self._last = max(self._last, int(time.time()))
        return self._last


class LogicalClock:
    """Counter clock for deterministic runs: start, start+1, start+2, ..."""

    def __init__(self, start: int):
        self._next = start

    def now(self) -> int:
        value = self._next
        self._next += 1
        return value


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 key pair. ``private_key`` is the 32-byte seed and must never
    appear in any serialized wire or ledger form."""

    public_key: bytes
    private_key: bytes


def generate_keypair(seed: bytes | None = None, entropy=None) -> KeyPair:
    """Deterministic when ``seed`` (32 bytes) is given, otherwise drawn from
    ``entropy`` (default: OS randomness)."""
    if seed is None:
        seed = (entropy or SystemEntropy()).bytes(SEED_BYTES)
    elif len(seed) != SEED_BYTES:
        raise BadSeedLength(f"seed must be {SEED_BYTES} bytes, got {len(seed)}")
    private = ed25519.Ed25519PrivateKey.from_private_bytes(seed)
    public = private.public_key().public_bytes_raw()
    return KeyPair(public_key=public, private_key=seed)


def sign(private_key: bytes, message: bytes) -> bytes:
    if len(private_key) != SEED_BYTES:
        raise MalformedKey(f"private key must be {SEED_BYTES} bytes")
    return ed25519.Ed25519PrivateKey.from_private_bytes(private_key).sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is valid for exactly this key and message.
    Malformed key or signature lengths raise instead of returning False."""
    if len(public_key) != PUBLIC_KEY_BYTES:
        raise MalformedKey(f"public key must be {PUBLIC_KEY_BYTES} bytes")
    if len(signature) != SIGNATURE_BYTES:
        raise MalformedSignature(f"signature must be {SIGNATURE_BYTES} bytes")
    try:
        key = ed25519.Ed25519PublicKey.from_public_bytes(public_key)
        key.verify(signature, message)
        return True
    except _InvalidSignature:
        return False
    except ValueError as exc:
        raise MalformedKey(str(exc)) from exc


# ---------------------------------------------------------------------------
# Salted commitments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Commitment:
    """Binding and hiding commitment; the opening (value, salt) is held
    separately by whoever created it."""

    digest: bytes


def commit(value: bytes, salt: bytes) -> Commitment:
    if len(salt) != SALT_BYTES:
        raise BadSaltLength(f"salt must be {SALT_BYTES} bytes, got {len(salt)}")
    return Commitment(digest=sha256(TAG_COMMIT + salt + value))


def open_commitment(commitment: Commitment, value: bytes, salt: bytes) -> bool:
    """True iff both value and salt match the committed opening."""
    if len(salt) != SALT_BYTES:
        return False
    return commit(value, salt).digest == commitment.digest


# ---------------------------------------------------------------------------
# Prime-order blinding group
# ---------------------------------------------------------------------------

# RFC 3526 group 5 (1536-bit MODP). p is a safe prime, so the quadratic
# residues form a subgroup of prime order q = (p - 1) / 2.
GROUP_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF",
    16,
)
GROUP_Q = (GROUP_P - 1) // 2
ELEMENT_BYTES = 192


@dataclass(frozen=True)
class GroupElement:
    value: int

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(ELEMENT_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes, check_subgroup: bool = False) -> "GroupElement":
        """Decode an element. ``check_subgroup`` additionally proves the
        value lies in the order-q subgroup (one exponentiation; used at
        wire boundaries, skipped for internally constructed elements)."""
        if len(data) != ELEMENT_BYTES:
            raise MalformedElementEncoding(
                f"group element must be {ELEMENT_BYTES} bytes, got {len(data)}"
            )
        value = int.from_bytes(data, "big")
        if not 1 < value < GROUP_P:
            raise MalformedElementEncoding("group element out of range")
        if check_subgroup and _powmod(value, GROUP_Q, GROUP_P) != 1:
            raise MalformedElementEncoding("value is not in the prime-order subgroup")
        return cls(value)


def hash_to_group(data: bytes) -> GroupElement:
    """Deterministically map bytes to a non-identity subgroup element."""
    attempt = 0
    while True:
        blocks = []
        for counter in range((ELEMENT_BYTES + 32) // DIGEST_BYTES + 1):
            blocks.append(
                sha256(
                    TAG_HASH_TO_GROUP
                    + attempt.to_bytes(4, "big")
                    + counter.to_bytes(4, "big")
                    + data
                )
            )
        wide = int.from_bytes(b"".join(blocks), "big") % GROUP_P
        element = int(_powmod(wide, 2, GROUP_P))  # square into the QR subgroup
        if element not in (0, 1):
            return GroupElement(element)
        attempt += 1  # pragma: no cover - probability ~2**-1534


def scalar_mul(element: GroupElement, k: int) -> GroupElement:
    """element^k in the subgroup. k is taken modulo q and must be nonzero."""
    k %= GROUP_Q
    if k == 0:
        raise ZeroScalar("scalar is zero modulo the group order")
    return GroupElement(int(_powmod(element.value, k, GROUP_P)))


def random_scalar(entropy=None) -> int:
    """Uniform nonzero scalar in [1, q-1]."""
    raw = (entropy or SystemEntropy()).bytes(ELEMENT_BYTES + 32)
    return int.from_bytes(raw, "big") % (GROUP_Q - 1) + 1


def scalar_to_bytes(k: int) -> bytes:
    return k.to_bytes(ELEMENT_BYTES, "big")
