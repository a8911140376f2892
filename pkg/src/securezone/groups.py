"""Bilinear group backends for the CP-ABE layer.

Any backend exposes the same small surface (see :class:`BilinearGroup`).
The only shipped backend, :class:`TransparentGroup`, represents every
element by its discrete logarithm, so the pairing is plain multiplication
modulo a prime.  It is fully INSECURE and exists so that every algebraic
identity of the scheme can be checked by direct arithmetic.
"""

from __future__ import annotations

import abc
import hashlib
import random

XPAR_MAGIC = b"XPAR"
TRANSPARENT_BACKEND_ID = 0x00

# 2**61 - 1, a Mersenne prime
TRANSPARENT_PRIME = (1 << 61) - 1


class GroupError(ValueError):
    pass


class BilinearGroup(abc.ABC):
    """Prime-order groups G, GT with a pairing e: G x G -> GT."""

    backend_id: int
    order: int

    @property
    @abc.abstractmethod
    def generator(self): ...

    @abc.abstractmethod
    def mul(self, a, b): ...

    @abc.abstractmethod
    def exp(self, a, k: int): ...

    @abc.abstractmethod
    def pair(self, a, b): ...

    @abc.abstractmethod
    def gt_mul(self, a, b): ...

    @abc.abstractmethod
    def gt_exp(self, a, k: int): ...

    @abc.abstractmethod
    def gt_inv(self, a): ...

    @abc.abstractmethod
    def hash_to_group(self, data: bytes): ...

    @abc.abstractmethod
    def random_gt(self, rng: random.Random): ...

    @abc.abstractmethod
    def encode(self, element) -> bytes: ...

    @abc.abstractmethod
    def decode(self, data: bytes): ...

    def gt_div(self, a, b):
        return self.gt_mul(a, self.gt_inv(b))

    def random_scalar(self, rng: random.Random, nonzero: bool = True) -> int:
        lo = 1 if nonzero else 0
        return rng.randrange(lo, self.order)

    def encode_scalar(self, k: int) -> bytes:
        return (k % self.order).to_bytes((self.order.bit_length() + 7) // 8, "big")

    def decode_scalar(self, data: bytes) -> int:
        k = int.from_bytes(data, "big")
        if len(data) != (self.order.bit_length() + 7) // 8 or k >= self.order:
            raise GroupError("non-canonical scalar")
        return k


class TransparentGroup(BilinearGroup):
    """Elements are exponents mod p; g is 1 and e(g^a, g^b) = gt^(ab).

    G and GT share the representation, which is what makes the backend
    transparent (and useless for secrecy).
    """

    backend_id = TRANSPARENT_BACKEND_ID

    def __init__(self, order: int = TRANSPARENT_PRIME):
        self.order = order
        self._width = (order.bit_length() + 7) // 8

    def __repr__(self):
        return f"TransparentGroup(order={self.order})"

    def __eq__(self, other):
        return isinstance(other, TransparentGroup) and other.order == self.order

    def __hash__(self):
        return hash(("transparent", self.order))

    @property
    def generator(self) -> int:
        return 1

    @property
    def gt_generator(self) -> int:
        return 1

    def identity(self) -> int:
        return 0

    def mul(self, a: int, b: int) -> int:
        return (a + b) % self.order

    def inv(self, a: int) -> int:
        return -a % self.order

    def exp(self, a: int, k: int) -> int:
        return a * k % self.order

    def pair(self, a: int, b: int) -> int:
        return a * b % self.order

    def gt_mul(self, a: int, b: int) -> int:
        return (a + b) % self.order

    def gt_exp(self, a: int, k: int) -> int:
        return a * k % self.order

    def gt_inv(self, a: int) -> int:
        return -a % self.order

    def hash_to_group(self, data: bytes) -> int:
        return int.from_bytes(hashlib.sha256(data).digest(), "big") % self.order

    def random_gt(self, rng: random.Random) -> int:
        return rng.randrange(1, self.order)

    def encode(self, element: int) -> bytes:
        return XPAR_MAGIC + element.to_bytes(self._width, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != len(XPAR_MAGIC) + self._width or not data.startswith(XPAR_MAGIC):
            raise GroupError("not a transparent-group element")
        value = int.from_bytes(data[len(XPAR_MAGIC):], "big")
        if value >= self.order:
            raise GroupError("non-canonical group element")
        return value


def group_for_backend(backend_id: int) -> BilinearGroup:
    if backend_id == TRANSPARENT_BACKEND_ID:
        return TransparentGroup()
    raise GroupError(f"unsupported pairing backend 0x{backend_id:02x}")
