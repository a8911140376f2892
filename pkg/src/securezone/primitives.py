"""Symmetric, signature and token primitives (suite 0x01).

Suite 0x01 pins:

* hash: SHA-256
* token PRF: HMAC-SHA256 over the big-endian u64 window index, truncated to 16 bytes
* KDF: HKDF-SHA256, empty salt, context label as ``info``
* AEAD: ChaCha20-Poly1305 (12-byte nonce, 16-byte tag)
* signatures: Ed25519 (deterministic)

Nothing here reads the clock or ambient entropy; randomness comes from the
``random.Random`` instance the caller passes in.
"""

from __future__ import annotations

import hashlib
import hmac
import random
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .codec import DecodeError, Reader, Writer

SUITE_ID = 0x01
DIGEST_SIZE = 32
TOKEN_SIZE = 16
SEED_SIZE = 32
KEY_SIZE = 32
NONCE_SIZE = 12
TAG_SIZE = 16
PUBLIC_KEY_SIZE = 32
SIGNATURE_SIZE = 64
DEFAULT_WINDOW = 30

LABEL_DEM = b"SZ-DEM"
LABEL_TOKEN = b"SZ-TOKEN"


class AuthFailure(Exception):
    """Wrong key or tampered box; the two cases are deliberately merged."""


class MalformedSignature(ValueError):
    pass


class ZeroWindow(ValueError):
    pass


def hash(data: bytes) -> bytes:  # noqa: A001 - mirrors the protocol vocabulary
    return hashlib.sha256(data).digest()


def prf(key: bytes, data: bytes) -> bytes:
    return hmac.new(key, data, hashlib.sha256).digest()


def hkdf_sha256(ikm: bytes, info: bytes, length: int = KEY_SIZE, salt: bytes | None = None) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=salt, info=info).derive(ikm)


def kdf(data: bytes, label: bytes) -> bytes:
    return hkdf_sha256(data, label)


@dataclass(frozen=True)
class Token:
    tk: bytes
    window_index: int


def window_index(time: int, window: int = DEFAULT_WINDOW) -> int:
    if window < 1:
        raise ZeroWindow("token window must be at least 1 second")
    return time // window


def token_for_window(seed: bytes, index: int) -> Token:
    return Token(prf(seed, struct.pack(">Q", index))[:TOKEN_SIZE], index)


def token_at(seed: bytes, time: int, window: int = DEFAULT_WINDOW) -> Token:
    return token_for_window(seed, window_index(time, window))


def new_seed(rng: random.Random) -> bytes:
    return rng.randbytes(SEED_SIZE)


# -- AEAD -------------------------------------------------------------------

@dataclass(frozen=True)
class SealedBox:
    nonce: bytes
    ciphertext: bytes  # includes the trailing 16-byte tag

    def to_bytes(self) -> bytes:
        return Writer().u8(SUITE_ID).raw(self.nonce).blob32(self.ciphertext).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, base: int = 0) -> SealedBox:
        r = Reader(data, base)
        suite = r.u8()
        if suite != SUITE_ID:
            raise DecodeError(f"unknown suite 0x{suite:02x}", base)
        nonce = r.raw(NONCE_SIZE, "nonce")
        ct = r.blob32("ciphertext")
        if len(ct) < TAG_SIZE:
            r.fail("ciphertext shorter than tag")
        r.end()
        return cls(nonce, ct)


def aead_encrypt(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    if len(key) != KEY_SIZE:
        raise ValueError(f"AEAD key must be {KEY_SIZE} bytes")
    return ChaCha20Poly1305(key).encrypt(nonce, plaintext, aad or None)


def aead_decrypt(key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
    if len(key) != KEY_SIZE:
        raise ValueError(f"AEAD key must be {KEY_SIZE} bytes")
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, ciphertext, aad or None)
    except InvalidTag:
        raise AuthFailure("authentication failed") from None


def seal(key: bytes, plaintext: bytes, rng: random.Random, aad: bytes = b"") -> SealedBox:
    nonce = rng.randbytes(NONCE_SIZE)
    return SealedBox(nonce, aead_encrypt(key, nonce, plaintext, aad))


def open_box(key: bytes, box: SealedBox, aad: bytes = b"") -> bytes:
    return aead_decrypt(key, box.nonce, box.ciphertext, aad)


# -- signatures -------------------------------------------------------------

@dataclass(frozen=True)
class SigningKeypair:
    private: bytes
    public: bytes

    @classmethod
    def generate(cls, rng: random.Random) -> SigningKeypair:
        return cls.from_private(rng.randbytes(32))

    @classmethod
    def from_private(cls, private: bytes) -> SigningKeypair:
        key = Ed25519PrivateKey.from_private_bytes(private)
        public = key.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        return cls(bytes(private), public)

    def __repr__(self):
        return f"SigningKeypair(public={self.public.hex()})"


def sign(private: bytes, msg: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(private).sign(msg)


def verify(public: bytes, msg: bytes, sig: bytes) -> bool:
    if len(sig) != SIGNATURE_SIZE:
        raise MalformedSignature(f"signature must be {SIGNATURE_SIZE} bytes, got {len(sig)}")
    try:
        key = Ed25519PublicKey.from_public_bytes(public)
    except ValueError:
        return False
    try:
        key.verify(sig, msg)
    except InvalidSignature:
        return False
    return True


def encode_signature(sig: bytes) -> bytes:
    return Writer().u8(SUITE_ID).blob16(sig).getvalue()


def decode_signature(data: bytes, base: int = 0) -> bytes:
    r = Reader(data, base)
    suite = r.u8()
    if suite != SUITE_ID:
        raise DecodeError(f"unknown suite 0x{suite:02x}", base)
    sig = r.blob16("signature")
    r.end()
    if len(sig) != SIGNATURE_SIZE:
        raise MalformedSignature(f"signature must be {SIGNATURE_SIZE} bytes")
    return sig
