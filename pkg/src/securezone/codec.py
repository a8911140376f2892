"""Big-endian, length-prefixed binary helpers shared by all wire formats."""

from __future__ import annotations

import struct


class DecodeError(ValueError):
    """Raised on any structural problem; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> Writer:
        self._parts.append(bytes(data))
        return self

    def u8(self, v: int) -> Writer:
        return self.raw(struct.pack(">B", v))

    def u16(self, v: int) -> Writer:
        return self.raw(struct.pack(">H", v))

    def u32(self, v: int) -> Writer:
        return self.raw(struct.pack(">I", v))

    def u64(self, v: int) -> Writer:
        return self.raw(struct.pack(">Q", v))

    def blob16(self, data: bytes) -> Writer:
        if len(data) > 0xFFFF:
            raise ValueError("field too long for u16 length prefix")
        return self.u16(len(data)).raw(data)

    def blob32(self, data: bytes) -> Writer:
        if len(data) > 0xFFFFFFFF:
            raise ValueError("field too long for u32 length prefix")
        return self.u32(len(data)).raw(data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes, base: int = 0):
        self.data = bytes(data)
        self.pos = 0
        self.base = base

    @property
    def offset(self) -> int:
        return self.base + self.pos

    def fail(self, message: str):
        raise DecodeError(message, self.offset)

    def raw(self, n: int, what: str = "field") -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            self.fail(f"truncated {what}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def magic(self, expected: bytes):
        got = self.raw(len(expected), "magic")
        if got != expected:
            raise DecodeError(f"bad magic {got!r}, expected {expected!r}", self.offset - len(expected))

    def u8(self) -> int:
        return self.raw(1, "u8")[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.raw(2, "u16"))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4, "u32"))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8, "u64"))[0]

    def blob16(self, what: str = "field") -> bytes:
        return self.raw(self.u16(), what)

    def blob32(self, what: str = "field") -> bytes:
        return self.raw(self.u32(), what)

    def end(self):
        if self.pos != len(self.data):
            self.fail(f"{len(self.data) - self.pos} trailing bytes")
