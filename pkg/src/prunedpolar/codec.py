"""Encoder and successive-cancellation decoder over a pruned tree.

Both directions walk the tree recursively. Going down the encoder, each
internal node combines its children's vectors u (flat side) and v (sharp
side) into (u+v, v): position i carries u[i]+v[i], position i + M/2 carries
v[i]. The decoder reverses this in the usual SC order: guess the flat
subproblem from y[i]+y[i+M/2], decode it, resolve the sharp subproblem from
(y[i]-u[i]) v y[i+M/2], decode that, and hand the re-encoded (u+v, v) back
up. Leaves are where pruning pays off: a frozen leaf is an all-zero vector
and a utilized leaf is read or written directly, with no recursion
underneath.

Everything operates on batches -- arrays of shape (blocks, width) of uint8
symbol codes -- so Monte Carlo runs and exhaustive pattern enumerations are
vectorized across blocks. Single-frame encode/decode are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erasure import ERASED_CODE, resolve_codes, xor_codes
from .tree import CodeSpec

_NO_CHILD = -1


class BlockError(Exception):
    """An erasure reached a utilized leaf; the block is unrecoverable.

    Attributes
    ----------
    leaf : str
        Branch path of the failing leaf ('f'/'s' from the root).
    instance : int
        Index of the failing instance among the leaf's copies.
    """

    def __init__(self, leaf: str, instance: int):
        super().__init__(f"erasure reached utilized leaf {leaf!r} instance {instance}")
        self.leaf = leaf
        self.instance = instance


class LengthMismatchError(ValueError):
    """Input length does not match the code's N or K."""


@dataclass
class DecodeResult:
    """Batch decoding outcome.

    ``messages`` rows are only meaningful where ``failed`` is False.
    ``pair_ops_per_block`` counts the guess and resolve pair-operations each
    block incurred; it equals the code's device count exactly.
    """

    messages: np.ndarray
    failed: np.ndarray
    fail_leaf: np.ndarray
    fail_instance: np.ndarray
    pair_ops_per_block: int


def message_length(spec: CodeSpec) -> int:
    """K: number of message bits = sum of utilized-leaf multiplicities."""
    return spec.params.message_length


def _as_batch(x, width: int, what: str, limit: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.uint8)
    single = arr.ndim == 1
    if single:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise LengthMismatchError(f"{what} must have length {width}, got shape {arr.shape}")
    if arr.size and arr.max() > limit:
        raise ValueError(f"{what} contains symbol codes above {limit}")
    return arr, single


def encode_frames(spec: CodeSpec, messages) -> np.ndarray:
    """Encode a batch of messages, shape (B, K) of bits, into (B, N) frames."""
    msgs, _ = _as_batch(messages, spec.params.message_length, "message", 1)
    tree = spec.tree
    flat, sharp = tree.flat_child, tree.sharp_child
    utilized = spec.utilized_mask
    batch = msgs.shape[0]
    cursor = 0

    def rec(idx: int, width: int) -> np.ndarray:
        nonlocal cursor
        if flat[idx] == _NO_CHILD:
            if utilized[idx]:
                out = msgs[:, cursor : cursor + width]
                cursor += width
                return out
            return np.zeros((batch, width), dtype=np.uint8)
        half = width // 2
        u = rec(int(flat[idx]), half)
        v = rec(int(sharp[idx]), half)
        return np.concatenate([u ^ v, v], axis=1)

    frame = rec(0, spec.params.block_length)
    assert cursor == spec.params.message_length
    return frame


def encode(spec: CodeSpec, message) -> np.ndarray:
    """Encode one message (length K) into a frame (length N) of bits."""
    return encode_frames(spec, np.asarray(message, dtype=np.uint8)[np.newaxis, :])[0]


def decode_frames(spec: CodeSpec, frames) -> DecodeResult:
    """Successive-cancellation decode of a batch of received frames.

    ``frames`` has shape (B, N) with symbol codes 0/1/2 (2 = erased). Blocks
    where an erasure reaches a utilized leaf are flagged in ``failed`` with
    the first failing leaf and instance recorded; their message rows are
    garbage. Nothing raises here -- single-frame :func:`decode` turns the
    flag into a BlockError.
    """
    rx, _ = _as_batch(frames, spec.params.block_length, "frame", ERASED_CODE)
    tree = spec.tree
    flat, sharp = tree.flat_child, tree.sharp_child
    utilized = spec.utilized_mask
    batch = rx.shape[0]

    failed = np.zeros(batch, dtype=bool)
    fail_leaf = np.full(batch, _NO_CHILD, dtype=np.int32)
    fail_instance = np.full(batch, _NO_CHILD, dtype=np.int32)
    parts: list[np.ndarray] = []
    pair_ops = 0

    def rec(idx: int, y: np.ndarray) -> np.ndarray:
        nonlocal pair_ops
        if flat[idx] == _NO_CHILD:
            if not utilized[idx]:
                return np.zeros_like(y)
            erased = y == ERASED_CODE
            hit = erased.any(axis=1)
            newly = hit & ~failed
            if newly.any():
                failed[newly] = True
                fail_leaf[newly] = idx
                fail_instance[newly] = erased[newly].argmax(axis=1)
            out = np.where(erased, np.uint8(0), y)
            parts.append(out)
            return out
        half = y.shape[1] // 2
        left, right = y[:, :half], y[:, half:]
        pair_ops += half
        u_hat = rec(int(flat[idx]), xor_codes(left, right))
        pair_ops += half
        v_in = resolve_codes(xor_codes(left, u_hat), right, live=~failed)
        v_hat = rec(int(sharp[idx]), v_in)
        return np.concatenate([xor_codes(u_hat, v_hat), v_hat], axis=1)

    # The outermost re-encoded frame has no predecessor to receive it.
    rec(0, rx)

    if parts:
        messages = np.concatenate(parts, axis=1)
    else:
        messages = np.zeros((batch, 0), dtype=np.uint8)
    return DecodeResult(messages, failed, fail_leaf, fail_instance, pair_ops)


def decode(spec: CodeSpec, frame) -> np.ndarray:
    """Decode one received frame (length N, codes 0/1/2) into its message.

    Raises
    ------
    BlockError
        If an erasure reaches a utilized leaf (carries leaf path and
        instance index).
    InconsistentResolveError
        If the frame is not a codeword-plus-erasures (corrupted input).
    """
    res = decode_frames(spec, np.asarray(frame, dtype=np.uint8)[np.newaxis, :])
    if res.failed[0]:
        raise BlockError(
            spec.tree.path_id(int(res.fail_leaf[0])), int(res.fail_instance[0])
        )
    return res.messages[0]


def decodable(spec: CodeSpec, erasure_pattern) -> bool:
    """Whether SC decoding survives the given erasure pattern.

    On a BEC the outcome depends only on which positions are erased, not on
    the transmitted bits, so the all-zero codeword stands in for any message.
    """
    return bool(decodable_many(spec, np.asarray(erasure_pattern, dtype=bool)[np.newaxis, :])[0])


def decodable_many(spec: CodeSpec, patterns) -> np.ndarray:
    """Vectorized :func:`decodable` over patterns of shape (B, N)."""
    masks = np.asarray(patterns, dtype=bool)
    if masks.ndim != 2 or masks.shape[1] != spec.params.block_length:
        raise LengthMismatchError(
            f"patterns must have shape (B, {spec.params.block_length})"
        )
    rx = np.where(masks, np.uint8(ERASED_CODE), np.uint8(0))
    return ~decode_frames(spec, rx).failed


# -- byte packing for the CLI ------------------------------------------------


def pack_bits(bits) -> bytes:
    """Pack a 0/1 sequence into bytes, most significant bit first."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("pack_bits expects bits")
    return np.packbits(arr).tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    """Inverse of pack_bits; validates length and zero padding."""
    expect = (count + 7) // 8
    if len(data) != expect:
        raise LengthMismatchError(f"expected {expect} bytes for {count} bits, got {len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if bits[count:].any():
        raise ValueError("nonzero padding bits")
    return bits[:count]


def pack_symbols(codes) -> bytes:
    """Pack symbol codes two bits each (00=0, 01=1, 10=erased), MSB first."""
    arr = np.asarray(codes, dtype=np.uint8)
    if arr.size and arr.max() > ERASED_CODE:
        raise ValueError("symbol codes must be 0, 1, or 2")
    bits = np.empty(2 * arr.size, dtype=np.uint8)
    bits[0::2] = arr >> 1
    bits[1::2] = arr & 1
    return np.packbits(bits).tobytes()


def unpack_symbols(data: bytes, count: int) -> np.ndarray:
    """Inverse of pack_symbols; validates length, padding, and code range."""
    expect = (2 * count + 7) // 8
    if len(data) != expect:
        raise LengthMismatchError(
            f"expected {expect} bytes for {count} symbols, got {len(data)}"
        )
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if bits[2 * count :].any():
        raise ValueError("nonzero padding bits")
    codes = (bits[0::2][:count] << 1) | bits[1::2][:count]
    if codes.size and codes.max() > ERASED_CODE:
        raise ValueError("invalid symbol code 3 in stream")
    return codes.astype(np.uint8)
