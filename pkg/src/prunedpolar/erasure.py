"""Erasure-symbol algebra, the two polarization maps, and the BEC model.

Everything downstream (tree growth, the codec, the process sampler) is built
on the three primitives here: GF(2) addition extended by an absorbing erasure
symbol, the "resolve" operator that merges two observations of the same wire,
and the pair of maps sending a channel's erasure probability to those of its
two synthetic children.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Symbol(IntEnum):
    """A value on a wire: a bit, or the erasure symbol."""

    ZERO = 0
    ONE = 1
    ERASED = 2


#: Integer code for the erasure symbol in array form (dtype uint8).
ERASED_CODE = 2


class InconsistentResolveError(ValueError):
    """Two non-erased observations of the same wire disagreed.

    On a genuine erasure channel this cannot happen; it signals a decoder
    bug or corrupted input, so it is raised loudly instead of picking a side.
    """


def sym_add(a: Symbol, b: Symbol) -> Symbol:
    """GF(2) addition (= subtraction) extended by an absorbing erasure.

    Returns the XOR of two bits; if either operand is erased the result is
    erased.
    """
    if a == Symbol.ERASED or b == Symbol.ERASED:
        return Symbol.ERASED
    return Symbol(a ^ b)


def sym_resolve(a: Symbol, b: Symbol) -> Symbol:
    """Merge two observations of one wire: any non-erased operand wins.

    Returns ``a`` if it is not erased, else ``b`` if it is not erased, else
    the erasure symbol.

    Raises
    ------
    InconsistentResolveError
        If both operands are bits and they differ.
    """
    if a != Symbol.ERASED and b != Symbol.ERASED and a != b:
        raise InconsistentResolveError(f"non-erased operands disagree: {a!r} vs {b!r}")
    if a != Symbol.ERASED:
        return Symbol(a)
    return Symbol(b)


def xor_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized sym_add over uint8 symbol-code arrays."""
    erased = (a == ERASED_CODE) | (b == ERASED_CODE)
    return np.where(erased, np.uint8(ERASED_CODE), a ^ b)


def resolve_codes(
    a: np.ndarray, b: np.ndarray, live: np.ndarray | None = None
) -> np.ndarray:
    """Vectorized sym_resolve over uint8 symbol-code arrays.

    ``live``, if given, is a boolean mask over leading rows; the consistency
    check is enforced only on live rows (the decoder uses this to skip blocks
    it has already declared lost, whose wire values are garbage by then).
    """
    conflict = (a != ERASED_CODE) & (b != ERASED_CODE) & (a != b)
    if live is not None:
        conflict = conflict & live.reshape(-1, *([1] * (a.ndim - 1)))
    if conflict.any():
        raise InconsistentResolveError("non-erased wire observations disagree")
    return np.where(a != ERASED_CODE, a, b)


def _check_unit(z, name: str) -> None:
    arr = np.asarray(z)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must lie in [0, 1], got {z!r}")


def z_flat(z):
    """Erasure probability of the less reliable synthetic child, 1-(1-z)^2.

    Accepts a float or an ndarray. Computed as z*(2-z), which is the same
    quantity but keeps z_flat(z) >= z at every double (the textbook form
    collapses to 0 below 2**-54).
    """
    _check_unit(z, "z")
    return z * (2.0 - z)


def z_sharp(z):
    """Erasure probability of the more reliable synthetic child, z^2."""
    _check_unit(z, "z")
    return z * z


class BecChannel:
    """A binary erasure channel with its own deterministic random stream.

    Parameters
    ----------
    z : float
        Erasure probability.
    seed : int, optional
        Seed for the channel's private PCG64 stream. Given the same seed and
        input sequence the output sequence is identical across runs.
    rng : numpy.random.Generator, optional
        Use an externally owned stream instead of creating one (the Monte
        Carlo harness shares one per-block stream between message and noise).
    """

    def __init__(self, z: float, seed: int | None = None, rng: np.random.Generator | None = None):
        _check_unit(z, "z")
        self.z = float(z)
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def transmit(self, x: Symbol) -> Symbol:
        """Send one bit: delivered intact w.p. 1-z, erased w.p. z."""
        if x == Symbol.ERASED:
            raise ValueError("channel input must be a bit, not the erasure symbol")
        if self.rng.random() < self.z:
            return Symbol.ERASED
        return Symbol(x)

    def transmit_frame(self, bits: np.ndarray) -> np.ndarray:
        """Send a frame of bits; returns uint8 symbol codes with erasures."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size and bits.max() > 1:
            raise ValueError("channel input must be bits")
        mask = self.rng.random(bits.shape) < self.z
        return np.where(mask, np.uint8(ERASED_CODE), bits)
