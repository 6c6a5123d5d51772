import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decspray.code import CodeParams, StoragePacket, build_code, encode
from decspray.errors import PacketFormatError
from decspray.field import FieldSpec
from decspray.packet import bytes_to_symbols, pack, read_packet, symbols_to_bytes, unpack, write_packet


def _packet(u=8):
    f = FieldSpec(u)
    return StoragePacket(
        storage_id=7, coeffs=((0, 3), (2, f.order - 1)), payload=np.array([1, 0, f.order - 1]), k=3, n=9, field=f
    )


def test_layout_is_bit_exact_gf256():
    blob = pack(_packet(8))
    expect = (
        b"DEC1" + bytes([1, 8])
        + struct.pack(">IIII", 3, 9, 7, 2)
        + struct.pack(">I", 0) + b"\x03"
        + struct.pack(">I", 2) + b"\xff"
        + struct.pack(">I", 3) + b"\x01\x00\xff"
    )  # fmt: skip
    assert blob == expect


def test_layout_gf65536_uses_two_byte_symbols():
    blob = pack(_packet(16))
    assert blob[5] == 16
    assert blob.endswith(b"\x00\x01\x00\x00\xff\xff")
    assert len(blob) == 22 + 2 * (4 + 2) + 4 + 3 * 2


@pytest.mark.parametrize("u", [4, 8, 16])
def test_roundtrip_encoded_packets(u, tmp_path):
    params = CodeParams(k=6, n=15, c=3.0, field=FieldSpec(u), seed=u)
    _, gen = build_code(params)
    data = params.field.random(np.random.default_rng(u), (6, 10))
    for pkt in encode(gen, data):
        assert unpack(pack(pkt)) == pkt
        path = tmp_path / f"{pkt.storage_id}.dec"
        write_packet(path, pkt)
        assert read_packet(path) == pkt


def test_bad_magic_and_version():
    blob = bytearray(pack(_packet()))
    with pytest.raises(PacketFormatError, match="magic"):
        unpack(b"XXXX" + bytes(blob[4:]))
    blob[4] = 9
    with pytest.raises(PacketFormatError, match="version"):
        unpack(bytes(blob))


def test_bad_field_degree():
    blob = bytearray(pack(_packet()))
    blob[5] = 7
    with pytest.raises(PacketFormatError):
        unpack(bytes(blob))


def test_truncation_and_trailing_bytes_rejected():
    blob = pack(_packet())
    for cut in range(len(blob)):
        with pytest.raises(PacketFormatError):
            unpack(blob[:cut])
    with pytest.raises(PacketFormatError):
        unpack(blob + b"\x00")


def test_out_of_range_coefficient_source():
    blob = bytearray(pack(_packet()))
    # first source id sits right after the 22-byte header
    blob[22:26] = struct.pack(">I", 3)
    with pytest.raises(PacketFormatError, match="range"):
        unpack(bytes(blob))


@pytest.mark.parametrize("u", [4, 8, 16])
@settings(max_examples=50, deadline=None)
@given(raw=st.binary(max_size=64))
def test_bytes_symbols_roundtrip(u, raw):
    f = FieldSpec(u)
    if u == 16 and len(raw) % 2:
        with pytest.raises(PacketFormatError):
            bytes_to_symbols(raw, f)
        return
    sym = bytes_to_symbols(raw, f)
    assert sym.size == len(raw) * 8 // u
    assert sym.size == 0 or sym.max() < f.order
    assert symbols_to_bytes(sym, f) == raw


def test_nibble_order():
    assert bytes_to_symbols(b"\xa5\x0f", FieldSpec(4)).tolist() == [0xA, 0x5, 0x0, 0xF]
    assert bytes_to_symbols(b"\x12\x34", FieldSpec(16)).tolist() == [0x1234]
