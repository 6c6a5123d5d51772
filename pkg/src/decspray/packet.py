"""Binary storage-packet format (big-endian).

    "DEC1" | u8 version=1 | u8 field degree | u32 k | u32 n | u32 storage_id
    | u32 m | m x (u32 source_id, coeff in ceil(u/8) bytes)
    | u32 payload symbol count | payload, ceil(u/8) bytes per symbol
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from decspray.code import StoragePacket
from decspray.errors import PacketFormatError
from decspray.field import FieldSpec

MAGIC = b"DEC1"
VERSION = 1

_HEAD = struct.Struct(">4sBBIIII")
_U32 = struct.Struct(">I")


def _symbol_dtype(field: FieldSpec) -> np.dtype:
    return np.dtype(">u1") if field.symbol_bytes == 1 else np.dtype(">u2")


def pack(pkt: StoragePacket) -> bytes:
    field = pkt.field
    sb = field.symbol_bytes
    parts = [_HEAD.pack(MAGIC, VERSION, field.degree_u, pkt.k, pkt.n, pkt.storage_id, len(pkt.coeffs))]
    for src, coef in pkt.coeffs:
        parts.append(_U32.pack(src) + int(coef).to_bytes(sb, "big"))
    payload = np.asarray(pkt.payload)
    parts.append(_U32.pack(len(payload)))
    parts.append(payload.astype(_symbol_dtype(field)).tobytes())
    return b"".join(parts)


def unpack(buf: bytes) -> StoragePacket:
    if len(buf) < _HEAD.size:
        raise PacketFormatError("truncated header")
    magic, version, u, k, n, sid, m = _HEAD.unpack_from(buf, 0)
    if magic != MAGIC:
        raise PacketFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise PacketFormatError(f"unsupported version {version}")
    try:
        field = FieldSpec(u)
    except ValueError as exc:
        raise PacketFormatError(str(exc)) from None
    sb = field.symbol_bytes
    off = _HEAD.size
    coeffs = []
    for _ in range(m):
        if off + 4 + sb > len(buf):
            raise PacketFormatError("truncated coefficient list")
        (src,) = _U32.unpack_from(buf, off)
        coef = int.from_bytes(buf[off + 4 : off + 4 + sb], "big")
        if src >= k or coef >= field.order:
            raise PacketFormatError("coefficient entry out of range")
        coeffs.append((src, coef))
        off += 4 + sb
    if off + 4 > len(buf):
        raise PacketFormatError("truncated payload length")
    (count,) = _U32.unpack_from(buf, off)
    off += 4
    if len(buf) != off + count * sb:
        raise PacketFormatError(f"payload size mismatch: expected {count * sb} bytes, got {len(buf) - off}")
    payload = np.frombuffer(buf, dtype=_symbol_dtype(field), count=count, offset=off).astype(np.int64)
    if payload.size and payload.max() >= field.order:
        raise PacketFormatError("payload symbol outside field")
    return StoragePacket(storage_id=sid, coeffs=tuple(coeffs), payload=payload, k=k, n=n, field=field)


def write_packet(path: Path | str, pkt: StoragePacket) -> None:
    Path(path).write_bytes(pack(pkt))


def read_packet(path: Path | str) -> StoragePacket:
    return unpack(Path(path).read_bytes())


# -- files <-> symbols ----------------------------------------------------


def bytes_to_symbols(data: bytes, field: FieldSpec) -> np.ndarray:
    """Map raw bytes to field symbols.

    GF(16) takes two symbols per byte (high nibble first); GF(256) one per
    byte; GF(65536) one per big-endian byte pair.
    """
    raw = np.frombuffer(data, dtype=np.uint8)
    if field.degree_u == 4:
        return np.stack([raw >> 4, raw & 0x0F], axis=1).reshape(-1).astype(np.int64)
    if field.degree_u == 8:
        return raw.astype(np.int64)
    if len(data) % 2:
        raise PacketFormatError("GF(65536) needs an even number of bytes")
    return np.frombuffer(data, dtype=">u2").astype(np.int64)


def symbols_to_bytes(symbols: np.ndarray, field: FieldSpec) -> bytes:
    sym = np.asarray(symbols, dtype=np.int64)
    if field.degree_u == 4:
        pairs = sym.reshape(-1, 2)
        return ((pairs[:, 0] << 4) | pairs[:, 1]).astype(np.uint8).tobytes()
    if field.degree_u == 8:
        return sym.astype(np.uint8).tobytes()
    return sym.astype(">u2").tobytes()
