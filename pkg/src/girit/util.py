"""Small shared helpers: varint codec, file checksums, atomic writes."""

from __future__ import annotations

import hashlib
import os
import tempfile

CHECKSUM_BYTES = 8

# single-byte fast path covers the vast majority of gaps and tfs
_ONE_BYTE = [bytes([i]) for i in range(0x80)]


def write_varint(value: int, out: bytearray) -> None:
    while value >= 0x80:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    out.append(value)


def encode_varints(values) -> bytes:
    buf = bytearray()
    append = buf.append
    one = _ONE_BYTE
    for v in values:
        if v < 0x80:
            buf += one[v]
        else:
            while v >= 0x80:
                append(0x80 | (v & 0x7F))
                v >>= 7
            append(v)
    return bytes(buf)


def read_varint(data, pos: int) -> tuple[int, int]:
    """Decode one varint from `data` at `pos`; returns (value, next_pos)."""
    result = 0
    shift = 0
    while True:
        b = data[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if b < 0x80:
            return result, pos
        shift += 7


def decode_varints(data, pos: int, count: int) -> tuple[list[int], int]:
    out = []
    append = out.append
    result = 0
    shift = 0
    while count:
        b = data[pos]
        pos += 1
        if b < 0x80 and shift == 0:
            append(b)
            count -= 1
            continue
        result |= (b & 0x7F) << shift
        if b < 0x80:
            append(result)
            result = 0
            shift = 0
            count -= 1
        else:
            shift += 7
    return out, pos


def checksum64(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_BYTES).digest()


def write_checksummed(path, payload: bytes) -> None:
    atomic_write_bytes(path, payload + checksum64(payload))


def read_checksummed(path) -> bytes:
    """Read a payload+checksum file, verifying the trailing 64-bit checksum."""
    from .errors import IndexStoreError

    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < CHECKSUM_BYTES:
        raise IndexStoreError(f"{path}: truncated (no checksum)")
    payload, stored = raw[:-CHECKSUM_BYTES], raw[-CHECKSUM_BYTES:]
    if checksum64(payload) != stored:
        raise IndexStoreError(f"{path}: checksum mismatch (corrupt or truncated)")
    return payload


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp.", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
