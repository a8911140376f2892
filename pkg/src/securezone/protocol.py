"""Key infrastructure and the zone-message pipeline.

Three roles take part.  The central authority (CA) owns the ABE master key,
a signing key and the system-wide token seed.  Zone authorities (SZAs)
register their signing key with the CA, receive a certificate, and
periodically broadcast a :class:`ZoneMessage`.  Firearms carry a
:class:`FirearmKeyBundle` and run :func:`assess` on every message they hear.

Message layering, innermost first::

    inner  = ts | SZA signature over hash(tk) | certificate
    box    = seal(kdf(tk, "SZ-TOKEN"), inner)
    outer  = seal(K, box) with K encapsulated under the zone policy

The outer seal authenticates every byte in front of it (magic, suite,
policy text and ABE header) as associated data.
"""

from __future__ import annotations

import enum
import json
import random
import struct
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from . import primitives as P
from .abe import (
    AbeCiphertextHeader,
    AbeSecretKey,
    DecryptFailure,
    MalformedHeader,
    MasterSecretKey,
    SystemPublicKey,
    abe_decrypt,
    abe_encrypt,
    abe_keygen,
    abe_setup,
)
from .codec import DecodeError, Reader, Writer
from .groups import BilinearGroup, TransparentGroup, group_for_backend
from .policy import Node, attributes, check_attribute, parse_policy, serialize_policy

MESSAGE_MAGIC = b"SZM1"
BUNDLE_MAGIC = b"SZTPD1"
CERT_MAGIC = b"SZCRT1"
MAX_MESSAGE_BYTES = 64 * 1024
DEFAULT_SKEW_WINDOWS = 1
CA_STATE_FORMAT = "szca/1"
SZA_STATE_FORMAT = "szsza/1"


class ProtocolError(Exception):
    pass


class DuplicateSzaId(ProtocolError):
    pass


class UnknownAttribute(ProtocolError):
    def __init__(self, attrs: Iterable[str]):
        self.attrs = tuple(sorted(attrs))
        super().__init__(f"attribute(s) not in the CA universe: {', '.join(self.attrs)}")


class InvalidExpiration(ProtocolError):
    pass


class MalformedMessage(ProtocolError):
    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(message)


class Outcome(enum.Enum):
    AUTHORIZED = "AUTHORIZED"
    POLICY_NOT_SATISFIED = "POLICY_NOT_SATISFIED"
    TOKEN_MISMATCH = "TOKEN_MISMATCH"
    KEY_EXPIRED = "KEY_EXPIRED"
    INVALID_CREDENTIAL = "INVALID_CREDENTIAL"
    MALFORMED = "MALFORMED"


@dataclass(frozen=True)
class AdvisoryOutcome:
    outcome: Outcome
    detail: str = ""

    @property
    def authorized(self) -> bool:
        return self.outcome is Outcome.AUTHORIZED

    def __str__(self):
        return f"{self.outcome.value} {self.detail}".rstrip()


# -- certificates -------------------------------------------------------------

def certificate_body(sza_id: int, public_key: bytes) -> bytes:
    return struct.pack(">I", sza_id) + public_key


@dataclass(frozen=True)
class Certificate:
    """CA signature over ``sza_id || sza_public_key``."""

    sza_id: int
    public_key: bytes
    signature: bytes

    def verify(self, ca_public_key: bytes) -> bool:
        try:
            return P.verify(ca_public_key, certificate_body(self.sza_id, self.public_key), self.signature)
        except P.MalformedSignature:
            return False

    def to_bytes(self) -> bytes:
        return (Writer().u8(P.SUITE_ID).u32(self.sza_id).blob16(self.public_key)
                .blob16(P.encode_signature(self.signature)).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes, base: int = 0) -> Certificate:
        r = Reader(data, base)
        suite = r.u8()
        if suite != P.SUITE_ID:
            raise DecodeError(f"unknown suite 0x{suite:02x}", base)
        sza_id = r.u32()
        public_key = r.blob16("public key")
        at = r.offset
        try:
            sig = P.decode_signature(r.blob16("signature"), at + 2)
        except P.MalformedSignature as exc:
            raise DecodeError(str(exc), at) from None
        r.end()
        return cls(sza_id, public_key, sig)

    def to_file(self) -> bytes:
        return CERT_MAGIC + self.to_bytes()

    @classmethod
    def from_file(cls, data: bytes) -> Certificate:
        if not data.startswith(CERT_MAGIC):
            raise DecodeError("not a certificate file", 0)
        return cls.from_bytes(data[len(CERT_MAGIC):], len(CERT_MAGIC))


# -- central authority --------------------------------------------------------

@dataclass
class CentralAuthority:
    public_key: SystemPublicKey
    master_key: MasterSecretKey
    signing: P.SigningKeypair
    token_seed: bytes
    universe: frozenset[str] = frozenset()
    window: int = P.DEFAULT_WINDOW
    registry: dict[int, Certificate] = field(default_factory=dict)

    @property
    def group(self) -> BilinearGroup:
        return self.public_key.group

    @property
    def ca_public_key(self) -> bytes:
        return self.signing.public

    def to_json(self) -> str:
        grp = self.group
        state = {
            "format": CA_STATE_FORMAT,
            "suite": P.SUITE_ID,
            "backend": grp.backend_id,
            "system_public_key": self.public_key.to_bytes().hex(),
            "master_key": {
                "beta": grp.encode_scalar(self.master_key.beta).hex(),
                "g_alpha": grp.encode(self.master_key.g_alpha).hex(),
            },
            "signing_key": self.signing.private.hex(),
            "token_seed": self.token_seed.hex(),
            "window": self.window,
            "universe": sorted(self.universe),
            "registry": {str(i): c.to_bytes().hex() for i, c in sorted(self.registry.items())},
        }
        return json.dumps(state, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> CentralAuthority:
        state = json.loads(text)
        if state.get("format") != CA_STATE_FORMAT:
            raise ProtocolError(f"not a CA state file (format {state.get('format')!r})")
        grp = group_for_backend(state["backend"])
        pk = SystemPublicKey.from_bytes(bytes.fromhex(state["system_public_key"]))
        mk = MasterSecretKey(
            grp,
            grp.decode_scalar(bytes.fromhex(state["master_key"]["beta"])),
            grp.decode(bytes.fromhex(state["master_key"]["g_alpha"])),
        )
        return cls(
            public_key=pk,
            master_key=mk,
            signing=P.SigningKeypair.from_private(bytes.fromhex(state["signing_key"])),
            token_seed=bytes.fromhex(state["token_seed"]),
            universe=frozenset(state["universe"]),
            window=int(state["window"]),
            registry={int(i): Certificate.from_bytes(bytes.fromhex(c)) for i, c in state["registry"].items()},
        )


def ca_setup(rng: random.Random, universe: Iterable[str] = (), window: int = P.DEFAULT_WINDOW,
             group: BilinearGroup | None = None) -> CentralAuthority:
    if window < 1:
        raise P.ZeroWindow("token window must be at least 1 second")
    group = group or TransparentGroup()
    pk, mk = abe_setup(group, rng)
    signing = P.SigningKeypair.generate(rng)
    seed = P.new_seed(rng)
    return CentralAuthority(pk, mk, signing, seed, frozenset(check_attribute(a) for a in universe), window)


class Registration(NamedTuple):
    certificate: Certificate
    public_key: SystemPublicKey
    token_seed: bytes
    window: int


def sza_register(ca: CentralAuthority, sza_public_key: bytes, sza_id: int) -> Registration:
    if not 0 <= sza_id <= 0xFFFFFFFF:
        raise ValueError("sza_id must fit in 32 bits")
    if sza_id in ca.registry:
        raise DuplicateSzaId(f"SZA id {sza_id} already registered")
    sig = P.sign(ca.signing.private, certificate_body(sza_id, sza_public_key))
    cert = Certificate(sza_id, bytes(sza_public_key), sig)
    ca.registry[sza_id] = cert
    return Registration(cert, ca.public_key, ca.token_seed, ca.window)


def _check_universe(ca: CentralAuthority, attrs: Iterable[str]):
    unknown = set(attrs) - ca.universe
    if unknown:
        raise UnknownAttribute(unknown)


# -- zone authority -----------------------------------------------------------

@dataclass(frozen=True)
class SzaState:
    sza_id: int
    signing: P.SigningKeypair
    certificate: Certificate
    public_key: SystemPublicKey
    token_seed: bytes
    policy: Node
    window: int = P.DEFAULT_WINDOW

    def to_json(self) -> str:
        state = {
            "format": SZA_STATE_FORMAT,
            "suite": P.SUITE_ID,
            "sza_id": self.sza_id,
            "signing_key": self.signing.private.hex(),
            "certificate": self.certificate.to_bytes().hex(),
            "system_public_key": self.public_key.to_bytes().hex(),
            "token_seed": self.token_seed.hex(),
            "window": self.window,
            "policy": serialize_policy(self.policy),
        }
        return json.dumps(state, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SzaState:
        state = json.loads(text)
        if state.get("format") != SZA_STATE_FORMAT:
            raise ProtocolError(f"not an SZA state file (format {state.get('format')!r})")
        return cls(
            sza_id=int(state["sza_id"]),
            signing=P.SigningKeypair.from_private(bytes.fromhex(state["signing_key"])),
            certificate=Certificate.from_bytes(bytes.fromhex(state["certificate"])),
            public_key=SystemPublicKey.from_bytes(bytes.fromhex(state["system_public_key"])),
            token_seed=bytes.fromhex(state["token_seed"]),
            policy=parse_policy(state["policy"]),
            window=int(state["window"]),
        )


def create_sza(ca: CentralAuthority, sza_id: int, policy: Node | str, rng: random.Random) -> SzaState:
    """SZA side of registration: own keypair, certificate from the CA, zone policy."""
    tree = parse_policy(policy) if isinstance(policy, str) else policy
    _check_universe(ca, attributes(tree))
    signing = P.SigningKeypair.generate(rng)
    reg = sza_register(ca, signing.public, sza_id)
    return SzaState(sza_id, signing, reg.certificate, reg.public_key, reg.token_seed, tree, reg.window)


# -- firearm ------------------------------------------------------------------

@dataclass(frozen=True)
class FirearmKeyBundle:
    """Everything recorded into the firearm's tamper-proof device."""

    secret_key: AbeSecretKey
    firearm_id: int
    user_id: int
    et: int
    token_seed: bytes
    ca_public_key: bytes
    window: int = P.DEFAULT_WINDOW
    suite_id: int = P.SUITE_ID

    @property
    def x(self) -> int:
        return self.secret_key.x

    @property
    def attrs(self) -> frozenset[str]:
        return self.secret_key.attrs

    def to_bytes(self) -> bytes:
        return (Writer().raw(BUNDLE_MAGIC).u8(self.suite_id)
                .u64(self.firearm_id).u64(self.user_id).u64(self.et).u32(self.window)
                .blob16(self.token_seed).blob16(self.ca_public_key)
                .blob32(self.secret_key.to_bytes()).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> FirearmKeyBundle:
        r = Reader(data)
        r.magic(BUNDLE_MAGIC)
        suite = r.u8()
        if suite != P.SUITE_ID:
            raise DecodeError(f"unknown suite 0x{suite:02x}", r.offset - 1)
        firearm_id, user_id, et, window = r.u64(), r.u64(), r.u64(), r.u32()
        if window < 1:
            r.fail("zero token window")
        seed = r.blob16("token seed")
        ca_pub = r.blob16("CA public key")
        at = r.offset + 4
        sk = AbeSecretKey.from_bytes(r.blob32("secret key"), at)
        r.end()
        return cls(sk, firearm_id, user_id, et, seed, ca_pub, window, suite)

    def describe(self) -> dict:
        return {
            "firearm_id": self.firearm_id,
            "user_id": self.user_id,
            "x": self.x,
            "et": self.et,
            "attributes": sorted(self.attrs),
            "window": self.window,
            "suite": self.suite_id,
            "ca_public_key": self.ca_public_key.hex(),
        }


def firearm_register(ca: CentralAuthority, attrs: Iterable[str], firearm_id: int, user_id: int, et: int,
                     rng: random.Random, issued_at: int = 0) -> FirearmKeyBundle:
    attrs = frozenset(attrs)
    _check_universe(ca, attrs)
    if et <= issued_at:
        raise InvalidExpiration(f"expiration {et} is not after issuance time {issued_at}")
    for name, v in (("firearm_id", firearm_id), ("user_id", user_id), ("et", et)):
        if not 0 <= v < 1 << 64:
            raise ValueError(f"{name} must fit in 64 bits")
    sk = abe_keygen(ca.master_key, attrs, rng)
    return FirearmKeyBundle(sk, firearm_id, user_id, et, ca.token_seed, ca.ca_public_key, ca.window)


# -- zone message -------------------------------------------------------------

@dataclass(frozen=True)
class ZoneMessage:
    policy: str
    header: AbeCiphertextHeader
    outer: P.SealedBox
    suite_id: int = P.SUITE_ID

    def associated_data(self) -> bytes:
        return (Writer().raw(MESSAGE_MAGIC).u8(self.suite_id).blob16(self.policy.encode())
                .blob32(self.header.to_bytes()).getvalue())

    def to_bytes(self) -> bytes:
        return self.associated_data() + Writer().blob32(self.outer.to_bytes()).getvalue()


def parse_zone_message(data: bytes) -> ZoneMessage:
    """Strict decoder; anything off raises :class:`MalformedMessage`."""
    if len(data) > MAX_MESSAGE_BYTES:
        raise MalformedMessage(f"message longer than {MAX_MESSAGE_BYTES} bytes", MAX_MESSAGE_BYTES)
    try:
        r = Reader(data)
        r.magic(MESSAGE_MAGIC)
        suite = r.u8()
        if suite != P.SUITE_ID:
            r.fail(f"unknown suite 0x{suite:02x}")
        at = r.offset
        try:
            policy = r.blob16("policy").decode()
        except UnicodeDecodeError:
            raise DecodeError("policy is not UTF-8", at) from None
        at = r.offset + 4
        header = AbeCiphertextHeader.from_bytes(r.blob32("ABE header"), at)
        if header.policy != policy:
            raise DecodeError("clear policy differs from header policy", at)
        at = r.offset + 4
        outer = P.SealedBox.from_bytes(r.blob32("sealed box"), at)
        r.end()
    except DecodeError as exc:
        raise MalformedMessage(str(exc), exc.offset) from None
    except MalformedHeader as exc:
        raise MalformedMessage(str(exc)) from None
    return ZoneMessage(policy, header, outer, suite)


def encode_inner(ts: int, signature: bytes, certificate: Certificate) -> bytes:
    return (Writer().u64(ts).blob16(P.encode_signature(signature))
            .blob16(certificate.to_bytes()).getvalue())


def decode_inner(data: bytes) -> tuple[int, bytes, Certificate]:
    r = Reader(data)
    ts = r.u64()
    at = r.offset + 2
    try:
        sig = P.decode_signature(r.blob16("signature"), at)
    except P.MalformedSignature as exc:
        raise DecodeError(str(exc), at) from None
    at = r.offset + 2
    cert = Certificate.from_bytes(r.blob16("certificate"), at)
    r.end()
    return ts, sig, cert


def compose_zone_message(sza: SzaState, now: int, rng: random.Random) -> bytes:
    tk = P.token_at(sza.token_seed, now, sza.window).tk
    sig = P.sign(sza.signing.private, P.hash(tk))
    inner = encode_inner(now, sig, sza.certificate)
    box = P.seal(P.kdf(tk, P.LABEL_TOKEN), inner, rng)
    header, key = abe_encrypt(sza.public_key, sza.policy, rng)
    policy = serialize_policy(sza.policy)
    shell = ZoneMessage(policy, header, P.SealedBox(b"", b""))
    outer = P.seal(key, box.to_bytes(), rng, aad=shell.associated_data())
    data = ZoneMessage(policy, header, outer).to_bytes()
    if len(data) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"zone message exceeds {MAX_MESSAGE_BYTES} bytes")
    return data


def candidate_windows(now: int, window: int, skew: int = DEFAULT_SKEW_WINDOWS) -> list[int]:
    n = P.window_index(now, window)
    return [w for w in [n] + [n + d for i in range(1, skew + 1) for d in (-i, i)] if w >= 0]


def assess(bundle: FirearmKeyBundle, msg: bytes, now: int,
           skew: int = DEFAULT_SKEW_WINDOWS) -> AdvisoryOutcome:
    """Run the firearm-side checks in order and report the first failure."""
    try:
        zm = parse_zone_message(msg)
    except MalformedMessage as exc:
        return AdvisoryOutcome(Outcome.MALFORMED, f"unparseable message: {exc}")

    try:
        key = abe_decrypt(bundle.secret_key, zm.header)
    except (DecryptFailure, MalformedHeader):
        return AdvisoryOutcome(Outcome.POLICY_NOT_SATISFIED,
                               f"ABE decryption failed for policy {zm.policy!r} "
                               "(attributes insufficient or header corrupt)")

    try:
        box = P.SealedBox.from_bytes(P.open_box(key, zm.outer, aad=zm.associated_data()))
    except (P.AuthFailure, DecodeError):
        return AdvisoryOutcome(Outcome.MALFORMED, "outer envelope failed authentication")

    inner = tk_u = None
    for w in candidate_windows(now, bundle.window, skew):
        tk = P.token_for_window(bundle.token_seed, w).tk
        try:
            inner = P.open_box(P.kdf(tk, P.LABEL_TOKEN), box)
        except P.AuthFailure:
            continue
        tk_u = tk
        break
    if inner is None:
        return AdvisoryOutcome(Outcome.TOKEN_MISMATCH, f"no token within +/-{skew} window(s) of t={now}")

    try:
        ts, sig, cert = decode_inner(inner)
    except DecodeError as exc:
        return AdvisoryOutcome(Outcome.MALFORMED, f"inner blob: {exc}")

    if bundle.et < ts:
        return AdvisoryOutcome(Outcome.KEY_EXPIRED, f"key expired at {bundle.et}, message ts {ts}")

    if not cert.verify(bundle.ca_public_key):
        return AdvisoryOutcome(Outcome.INVALID_CREDENTIAL, f"certificate of SZA {cert.sza_id} not signed by CA")
    try:
        ok = P.verify(cert.public_key, P.hash(tk_u), sig)
    except P.MalformedSignature:
        ok = False
    if not ok:
        return AdvisoryOutcome(Outcome.INVALID_CREDENTIAL, f"token signature of SZA {cert.sza_id} invalid")

    return AdvisoryOutcome(Outcome.AUTHORIZED, f"SZA {cert.sza_id}, ts {ts}")
