"""Ciphertext-policy ABE over access trees, used as a key encapsulation.

The construction follows the classic access-tree CP-ABE layout:

    setup:   h = g^beta,  Y = e(g,g)^alpha;  master = (beta, g^alpha)
    keygen:  D = g^((alpha + x) / beta);  per attribute j:
             D_j = g^x * H(j)^r_j,  D'_j = g^r_j
    encrypt: C~ = M * Y^s,  C = h^s;  per leaf y with share q_y(0):
             C_y = g^q_y(0),  C'_y = H(attr(y))^q_y(0)

M is a fresh random target-group element; the encapsulated key is
``kdf(M, "SZ-DEM")``.  Shares are distributed top down: a gate with
threshold k gets a random polynomial of degree k-1 whose constant term is
the share handed down by its parent, and its i-th child (1-based, in
serialization order) receives the polynomial evaluated at i.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import primitives
from .codec import DecodeError, Reader, Writer
from .groups import BilinearGroup, GroupError, group_for_backend
from .policy import Leaf, Node, PolicyError, leaves, parse_policy, satisfies, serialize_policy

HEADER_MAGIC = b"SZH1"
PUBLIC_KEY_MAGIC = b"SZPK1"
SECRET_KEY_MAGIC = b"SZK1"


class AbeError(Exception):
    pass


class DecryptFailure(AbeError):
    """The key's attributes do not satisfy the header policy."""


class MalformedHeader(AbeError):
    pass


class EmptyAttributeSet(AbeError, ValueError):
    pass


class DuplicateIndices(AbeError, ValueError):
    pass


@dataclass(frozen=True)
class SystemPublicKey:
    group: BilinearGroup
    g: object
    h: object
    egg_alpha: object

    def to_bytes(self) -> bytes:
        grp = self.group
        w = Writer().raw(PUBLIC_KEY_MAGIC).u8(grp.backend_id)
        for el in (self.g, self.h, self.egg_alpha):
            w.blob16(grp.encode(el))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> SystemPublicKey:
        r = Reader(data)
        r.magic(PUBLIC_KEY_MAGIC)
        grp = _group_or_fail(r)
        els = [_element(grp, r) for _ in range(3)]
        r.end()
        return cls(grp, *els)


@dataclass(frozen=True)
class MasterSecretKey:
    group: BilinearGroup
    beta: int
    g_alpha: object

    def __post_init__(self):
        if self.beta % self.group.order == 0:
            raise ValueError("beta must be non-zero")

    def __repr__(self):
        return f"MasterSecretKey(group={self.group!r}, <redacted>)"


@dataclass(frozen=True)
class AbeSecretKey:
    group: BilinearGroup
    x: int
    d: object
    components: Mapping[str, tuple]  # attr -> (D_j, D'_j)

    @property
    def attrs(self) -> frozenset[str]:
        return frozenset(self.components)

    def __repr__(self):
        return f"AbeSecretKey(attrs={sorted(self.components)})"

    def to_bytes(self) -> bytes:
        grp = self.group
        w = Writer().raw(SECRET_KEY_MAGIC).u8(grp.backend_id)
        w.blob16(grp.encode_scalar(self.x)).blob16(grp.encode(self.d))
        w.u16(len(self.components))
        for attr in sorted(self.components):
            dj, dj_prime = self.components[attr]
            w.blob16(attr.encode()).blob16(grp.encode(dj)).blob16(grp.encode(dj_prime))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, base: int = 0) -> AbeSecretKey:
        r = Reader(data, base)
        r.magic(SECRET_KEY_MAGIC)
        grp = _group_or_fail(r)
        try:
            x = grp.decode_scalar(r.blob16("x"))
        except GroupError as exc:
            r.fail(str(exc))
        d = _element(grp, r)
        components = {}
        for _ in range(r.u16()):
            at = r.offset
            try:
                attr = r.blob16("attribute").decode()
            except UnicodeDecodeError:
                raise DecodeError("attribute is not UTF-8", at) from None
            if attr in components:
                raise DecodeError(f"duplicate attribute {attr!r}", at)
            components[attr] = (_element(grp, r), _element(grp, r))
        r.end()
        return cls(grp, x, d, components)


@dataclass(frozen=True)
class AbeCiphertextHeader:
    group: BilinearGroup
    tree: Node
    c_tilde: object
    c: object
    leaf_pairs: tuple = field(default=())  # (C_y, C'_y) in leaf order

    def __post_init__(self):
        object.__setattr__(self, "leaf_pairs", tuple(tuple(p) for p in self.leaf_pairs))
        n = sum(1 for _ in leaves(self.tree))
        if len(self.leaf_pairs) != n or any(len(p) != 2 for p in self.leaf_pairs):
            raise MalformedHeader(f"expected {n} leaf pairs, got {len(self.leaf_pairs)}")

    @property
    def policy(self) -> str:
        return serialize_policy(self.tree)

    def to_bytes(self) -> bytes:
        grp = self.group
        w = Writer().raw(HEADER_MAGIC).u8(grp.backend_id)
        w.blob16(self.policy.encode())
        w.blob16(grp.encode(self.c_tilde)).blob16(grp.encode(self.c))
        for cy, cy_prime in self.leaf_pairs:
            w.blob16(grp.encode(cy)).blob16(grp.encode(cy_prime))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, base: int = 0) -> AbeCiphertextHeader:
        """Strict parse; every structural problem raises :class:`DecodeError`."""
        r = Reader(data, base)
        r.magic(HEADER_MAGIC)
        grp = _group_or_fail(r)
        at = r.offset
        text = r.blob16("policy")
        try:
            tree = parse_policy(text.decode())
        except (UnicodeDecodeError, PolicyError) as exc:
            raise DecodeError(f"bad policy: {exc}", at) from None
        if serialize_policy(tree).encode() != text:
            raise DecodeError("policy not in canonical form", at)
        c_tilde = _element(grp, r)
        c = _element(grp, r)
        pairs = [(_element(grp, r), _element(grp, r)) for _ in leaves(tree)]
        r.end()
        return cls(grp, tree, c_tilde, c, tuple(pairs))


def _group_or_fail(r: Reader) -> BilinearGroup:
    at = r.offset
    try:
        return group_for_backend(r.u8())
    except GroupError as exc:
        raise DecodeError(str(exc), at) from None


def _element(grp: BilinearGroup, r: Reader):
    at = r.offset
    data = r.blob16("group element")
    try:
        return grp.decode(data)
    except GroupError as exc:
        raise DecodeError(str(exc), at) from None


def attribute_point(grp: BilinearGroup, attr: str):
    return grp.hash_to_group(attr.encode())


def lagrange_coefficient(i: int, indices: Iterable[int], p: int) -> int:
    """Delta_{i,S}(0) = prod_{j in S, j != i} (0 - j) / (i - j) mod p."""
    S = [j % p for j in indices]
    if len(set(S)) != len(S):
        raise DuplicateIndices(f"indices not distinct mod p: {sorted(S)}")
    i %= p
    if i not in S:
        raise ValueError(f"{i} is not in the index set")
    num, den = 1, 1
    for j in S:
        if j == i:
            continue
        num = num * (-j) % p
        den = den * (i - j) % p
    return num * pow(den, -1, p) % p


def share_polynomial(secret: int, k: int, p: int, rng: random.Random) -> list[int]:
    """Coefficients of a random degree k-1 polynomial with q(0) = secret."""
    return [secret % p] + [rng.randrange(p) for _ in range(k - 1)]


def eval_polynomial(coeffs: list[int], x: int, p: int) -> int:
    y = 0
    for c in reversed(coeffs):
        y = (y * x + c) % p
    return y


def abe_setup(group: BilinearGroup, rng: random.Random) -> tuple[SystemPublicKey, MasterSecretKey]:
    alpha = group.random_scalar(rng)
    beta = group.random_scalar(rng)
    g = group.generator
    pk = SystemPublicKey(group, g, group.exp(g, beta), group.gt_exp(group.pair(g, g), alpha))
    return pk, MasterSecretKey(group, beta, group.exp(g, alpha))


def abe_keygen(mk: MasterSecretKey, attrs: Iterable[str], rng: random.Random) -> AbeSecretKey:
    attrs = sorted(set(attrs))
    if not attrs:
        raise EmptyAttributeSet("cannot issue a key without attributes")
    grp = mk.group
    g = grp.generator
    x = grp.random_scalar(rng)
    g_x = grp.exp(g, x)
    d = grp.exp(grp.mul(mk.g_alpha, g_x), pow(mk.beta, -1, grp.order))
    components = {}
    for attr in attrs:
        r_j = grp.random_scalar(rng)
        components[attr] = (grp.mul(g_x, grp.exp(attribute_point(grp, attr), r_j)), grp.exp(g, r_j))
    return AbeSecretKey(grp, x, d, components)


def _encrypt(pk: SystemPublicKey, tree: Node, rng: random.Random):
    grp = pk.group
    p = grp.order
    s = grp.random_scalar(rng)
    payload = grp.random_gt(rng)
    pairs: list[tuple] = []

    def share(node: Node, secret: int):
        if isinstance(node, Leaf):
            pairs.append((grp.exp(pk.g, secret), grp.exp(attribute_point(grp, node.attr), secret)))
            return
        coeffs = share_polynomial(secret, node.k, p, rng)
        for index, child in enumerate(node.children, start=1):
            share(child, eval_polynomial(coeffs, index, p))

    share(tree, s)
    header = AbeCiphertextHeader(
        grp, tree,
        c_tilde=grp.gt_mul(payload, grp.gt_exp(pk.egg_alpha, s)),
        c=grp.exp(pk.h, s),
        leaf_pairs=tuple(pairs),
    )
    return header, payload, s


def encapsulated_key(grp: BilinearGroup, payload) -> bytes:
    return primitives.kdf(grp.encode(payload), primitives.LABEL_DEM)


def abe_encrypt(pk: SystemPublicKey, tree: Node, rng: random.Random) -> tuple[AbeCiphertextHeader, bytes]:
    header, payload, _ = _encrypt(pk, tree, rng)
    return header, encapsulated_key(pk.group, payload)


def _leaf_count(node: Node) -> int:
    return sum(1 for _ in leaves(node))


def decrypt_root(sk: AbeSecretKey, header: AbeCiphertextHeader):
    """Recombine leaf results up the tree; returns e(g,g)^(x*s) or None."""
    grp = sk.group
    p = grp.order
    pairs = header.leaf_pairs

    def node_value(node: Node, pos: int):
        if isinstance(node, Leaf):
            comp = sk.components.get(node.attr)
            if comp is None:
                return None
            cy, cy_prime = pairs[pos]
            return grp.gt_div(grp.pair(comp[0], cy), grp.pair(comp[1], cy_prime))
        found: dict[int, object] = {}
        for index, child in enumerate(node.children, start=1):
            if len(found) < node.k:
                value = node_value(child, pos)
                if value is not None:
                    found[index] = value
            pos += _leaf_count(child)
        if len(found) < node.k:
            return None
        acc = None
        for index, value in found.items():
            term = grp.gt_exp(value, lagrange_coefficient(index, found, p))
            acc = term if acc is None else grp.gt_mul(acc, term)
        return acc

    return node_value(header.tree, 0)


def decrypt_payload(sk: AbeSecretKey, header: AbeCiphertextHeader):
    grp = sk.group
    if header.group != grp:
        raise MalformedHeader("header and key use different pairing backends")
    if not satisfies(header.tree, sk.attrs):
        raise DecryptFailure("key attributes do not satisfy the policy")
    a = decrypt_root(sk, header)
    if a is None:  # unreachable when satisfies() holds
        raise DecryptFailure("key attributes do not satisfy the policy")
    blind = grp.gt_div(grp.pair(header.c, sk.d), a)  # e(g,g)^(alpha*s)
    return grp.gt_div(header.c_tilde, blind)


def abe_decrypt(sk: AbeSecretKey, header: AbeCiphertextHeader) -> bytes:
    return encapsulated_key(sk.group, decrypt_payload(sk, header))
