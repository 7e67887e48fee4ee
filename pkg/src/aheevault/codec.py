"""Reversible mapping between byte streams and block integers strictly below p.

Blocks are independent fixed-width big-endian chunks (final chunk zero-padded
on the right); the exact byte length travels out of band in the manifest, so
per-block homomorphic operations stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CapacityError, CorruptionError


@dataclass(frozen=True)
class BlockStream:
    blocks: tuple[int, ...]
    byte_len: int
    block_bytes: int


def block_capacity(p: int) -> int:
    """Bytes per block for modulus p: largest B with 2^(8B) <= p. Can be 0."""
    return (p.bit_length() - 1) // 8


def encode(data: bytes, p: int) -> BlockStream:
    cap = block_capacity(p)
    if cap < 1:
        raise CapacityError(
            f"modulus of {p.bit_length()} bits cannot carry a whole byte per block"
        )
    blocks = tuple(
        int.from_bytes(data[i : i + cap].ljust(cap, b"\x00"), "big")
        for i in range(0, len(data), cap)
    )
    return BlockStream(blocks=blocks, byte_len=len(data), block_bytes=cap)


def decode(stream: BlockStream) -> bytes:
    width = stream.block_bytes
    if width < 1 or stream.byte_len < 0:
        raise CorruptionError("invalid block stream framing")
    expected = (stream.byte_len + width - 1) // width
    if len(stream.blocks) != expected:
        raise CorruptionError(
            f"{len(stream.blocks)} blocks inconsistent with byte length {stream.byte_len}"
        )
    limit = 1 << (8 * width)
    out = bytearray()
    for block in stream.blocks:
        if not 0 <= block < limit:
            raise CorruptionError(f"block {block} exceeds {width}-byte width")
        out += block.to_bytes(width, "big")
    return bytes(out[: stream.byte_len])
