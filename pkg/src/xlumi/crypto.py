"""Signature schemes and the canonical payment-message encoding.

Two backends share one interface:

* ``ed25519`` -- real Edwards-curve signatures via ``cryptography``.
* ``toy`` -- a deterministic keyed-hash scheme for fast oracle-style tests.
  The public key doubles as the MAC key, so anyone holding it can forge.
  Never use it outside simulations.

Both backends use 32-byte secret keys, 32-byte public keys and 64-byte
signatures, so serialized messages have the same layout whichever is used.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SEED_SIZE = 32
KEY_SIZE = 32
SIGNATURE_SIZE = 64
CHANNEL_ID_SIZE = 32
PAYMENT_SIZE = CHANNEL_ID_SIZE + 8
MAX_AMOUNT = 2**64 - 1

_RAW = serialization.Encoding.Raw


class CryptoError(Exception):
    pass


class SeedError(CryptoError, ValueError):
    pass


class EmptyMessage(CryptoError, ValueError):
    pass


class FormatError(CryptoError, ValueError):
    """Raised for byte strings of the wrong length or shape."""


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes
    public_key: bytes
    scheme: str = "ed25519"

    def __repr__(self) -> str:
        return f"KeyPair(public_key={self.public_key.hex()}, scheme={self.scheme!r})"


@dataclass(frozen=True)
class Signature:
    bytes: bytes

    def hex(self) -> str:
        return self.bytes.hex()


class Ed25519Scheme:
    name = "ed25519"

    def public_key(self, secret_key: bytes) -> bytes:
        key = Ed25519PrivateKey.from_private_bytes(secret_key)
        return key.public_key().public_bytes(_RAW, serialization.PublicFormat.Raw)

    def sign(self, secret_key: bytes, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(secret_key).sign(message)

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class KeyedHashScheme:
    """Deterministic HMAC-SHA512 stand-in for a signature scheme."""

    name = "toy"

    def public_key(self, secret_key: bytes) -> bytes:
        return hashlib.sha256(b"xlumi-toy-pk" + secret_key).digest()

    def sign(self, secret_key: bytes, message: bytes) -> bytes:
        return hmac.new(self.public_key(secret_key), message, hashlib.sha512).digest()

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        expected = hmac.new(public_key, message, hashlib.sha512).digest()
        return hmac.compare_digest(expected, signature)


SCHEMES = {s.name: s for s in (Ed25519Scheme(), KeyedHashScheme())}


def get_scheme(name: str):
    try:
        return SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown signature scheme {name!r}; choose from {sorted(SCHEMES)}")


def generate_keypair(seed: bytes | None = None, scheme: str = "ed25519") -> KeyPair:
    """Create a key pair, deterministically when ``seed`` is given."""
    if seed is None:
        seed = os.urandom(SEED_SIZE)
    elif not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_SIZE:
        raise SeedError(f"seed must be exactly {SEED_SIZE} bytes")
    backend = get_scheme(scheme)
    secret = bytes(seed)
    return KeyPair(secret, backend.public_key(secret), scheme)


def sign(secret_key: bytes, message: bytes, scheme: str = "ed25519") -> Signature:
    if not message:
        raise EmptyMessage("refusing to sign an empty message")
    if len(secret_key) != KEY_SIZE:
        raise FormatError(f"secret key must be {KEY_SIZE} bytes")
    return Signature(get_scheme(scheme).sign(bytes(secret_key), bytes(message)))


def verify(public_key: bytes, message: bytes, signature: Signature | bytes, scheme: str = "ed25519") -> bool:
    """Check a signature. Malformed lengths raise FormatError rather than returning False."""
    raw = signature.bytes if isinstance(signature, Signature) else signature
    if len(public_key) != KEY_SIZE:
        raise FormatError(f"public key must be {KEY_SIZE} bytes, got {len(public_key)}")
    if len(raw) != SIGNATURE_SIZE:
        raise FormatError(f"signature must be {SIGNATURE_SIZE} bytes, got {len(raw)}")
    return get_scheme(scheme).verify(bytes(public_key), bytes(message), bytes(raw))


@dataclass(frozen=True)
class SignedPayload:
    """A message together with its signature and the signer's public key.

    Construction fails unless the signature verifies under ``signer``.
    """

    message: bytes
    signature: Signature
    signer: bytes
    scheme: str = "ed25519"

    def __post_init__(self):
        if not verify(self.signer, self.message, self.signature, self.scheme):
            raise CryptoError("signature does not verify under the given signer")

    @classmethod
    def create(cls, keypair: KeyPair, message: bytes) -> SignedPayload:
        sig = sign(keypair.secret_key, message, keypair.scheme)
        return cls(message, sig, keypair.public_key, keypair.scheme)


def encode_payment(channel_id: bytes, accumulated_amount: int) -> bytes:
    """Canonical 40-byte layout: channel id, then the amount as big-endian u64."""
    if len(channel_id) != CHANNEL_ID_SIZE:
        raise FormatError(f"channel id must be {CHANNEL_ID_SIZE} bytes")
    if not 0 <= accumulated_amount <= MAX_AMOUNT:
        raise FormatError("amount must fit in an unsigned 64-bit integer")
    return bytes(channel_id) + struct.pack(">Q", accumulated_amount)


def decode_payment(data: bytes) -> tuple[bytes, int]:
    if len(data) != PAYMENT_SIZE:
        raise FormatError(f"payment message must be {PAYMENT_SIZE} bytes, got {len(data)}")
    (amount,) = struct.unpack(">Q", data[CHANNEL_ID_SIZE:])
    return bytes(data[:CHANNEL_ID_SIZE]), amount


def address_of(public_key: bytes) -> bytes:
    """Account address: SHA-256 of the public key."""
    return hashlib.sha256(public_key).digest()
