"""Fixed-width bitstrings, the hash abstraction, and seedable randomness.

Everything on the wire and in key material is a :class:`BitString`: an
immutable value with an explicit bit length (the length is part of the value,
never inferred from a byte container). The module also provides:

* :class:`HashSpec` / :func:`hash2` / :func:`counter_hash` -- a pluggable
  hash with a deterministic two-argument form ``H(a, b)`` and a
  counter-bound per-session form ``H_i(a, b)``.  Two variants exist:
  ``production`` (SHA-256 truncated to the output width) and ``toy`` (a
  small keyless mixer meant to be exhaustively brute-forceable in tests).
* :class:`Prng` / :func:`prng_next` -- a deterministic counter-mode stream
  over SHA-256, replayable from ``(seed, stream_id)``.
* :class:`OpMeter` / :func:`metered` -- instrumentation counters on the
  shared hash/PRNG/XOR entry points, used to account per-session tag cost.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class LengthMismatchError(ValueError):
    """Raised when an operation requires equal-length bitstrings."""


class OddLengthError(ValueError):
    """Raised when splitting a bitstring of odd length."""


class BitString:
    """An immutable bit vector of explicit length, most-significant bit first.

    >>> BitString(0b1010, 4) ^ BitString(0b0110, 4)
    BitString('1100')
    >>> (BitString(0b10, 2) + BitString(0b01, 2)).split()
    (BitString('10'), BitString('01'))
    >>> BitString(0x9f, 8).to_text()
    '9f:8'
    """

    __slots__ = ("_value", "_length")

    def __init__(self, value: int, length: int):
        if length < 0:
            raise ValueError("length must be >= 0")
        if value < 0 or value >> length:
            raise ValueError(f"value {value:#x} does not fit in {length} bits")
        self._value = value
        self._length = length

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        value = 0
        length = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            value = (value << 1) | b
            length += 1
        return cls(value, length)

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        """Parse the ``hex:len`` wire/fixture encoding (lowercase hex)."""
        hexpart, sep, lenpart = text.partition(":")
        if not sep:
            raise ValueError(f"missing ':<len>' in bitstring text {text!r}")
        length = int(lenpart)
        value = int(hexpart, 16) if hexpart else 0
        return cls(value, length)

    # -- accessors ---------------------------------------------------------

    @property
    def value(self) -> int:
        return self._value

    def __len__(self) -> int:
        return self._length

    def bit(self, i: int) -> int:
        """Bit at index ``i``, counting from the most significant (index 0)."""
        if not 0 <= i < self._length:
            raise IndexError(f"bit index {i} out of range for length {self._length}")
        return (self._value >> (self._length - 1 - i)) & 1

    def bits(self) -> tuple[int, ...]:
        return tuple(self.bit(i) for i in range(self._length))

    def to_text(self) -> str:
        """The ``hex:len`` encoding: lowercase hex of the value, zero-padded
        to ``ceil(len/4)`` nibbles, then an explicit bit length."""
        nibbles = (self._length + 3) // 4
        return f"{self._value:0{nibbles}x}:{self._length}" if nibbles else f":{self._length}"

    def to_bytes(self) -> bytes:
        """Value as big-endian bytes, left-padded to ``ceil(len/8)`` bytes."""
        return self._value.to_bytes((self._length + 7) // 8, "big")

    # -- operations --------------------------------------------------------

    def xor(self, other: "BitString") -> "BitString":
        return xor(self, other)

    def concat(self, other: "BitString") -> "BitString":
        return concat(self, other)

    def split(self) -> tuple["BitString", "BitString"]:
        return split(self)

    def flip(self, i: int) -> "BitString":
        """Copy with bit ``i`` flipped (MSB-first index)."""
        if not 0 <= i < self._length:
            raise IndexError(f"bit index {i} out of range for length {self._length}")
        return BitString(self._value ^ (1 << (self._length - 1 - i)), self._length)

    def __xor__(self, other: "BitString") -> "BitString":
        return xor(self, other)

    def __add__(self, other: "BitString") -> "BitString":
        return concat(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._value == other._value and self._length == other._length

    def __hash__(self) -> int:
        return hash((self._value, self._length))

    def __repr__(self) -> str:
        return f"BitString('{self._value:0{self._length}b}')" if self._length else "BitString('')"


EMPTY = BitString(0, 0)


# ---------------------------------------------------------------------------
# Instrumentation: counters on the shared hash/PRNG/XOR entry points.
# ---------------------------------------------------------------------------

@dataclass
class OpMeter:
    """Operation counters. PRNG draws are priced as hash-equivalent."""

    hash_calls: int = 0
    prng_calls: int = 0
    xor_calls: int = 0

    @property
    def hash_equivalent(self) -> int:
        return self.hash_calls + self.prng_calls

    def snapshot(self) -> tuple[int, int, int]:
        return (self.hash_calls, self.prng_calls, self.xor_calls)


_ACTIVE_METER: ContextVar[OpMeter | None] = ContextVar("kimap_op_meter", default=None)


@contextmanager
def metered(meter: OpMeter) -> Iterator[OpMeter]:
    """Route hash/PRNG/XOR counts to ``meter`` within the block."""
    token = _ACTIVE_METER.set(meter)
    try:
        yield meter
    finally:
        _ACTIVE_METER.reset(token)


def _count(kind: str) -> None:
    meter = _ACTIVE_METER.get()
    if meter is None:
        return
    if kind == "hash":
        meter.hash_calls += 1
    elif kind == "prng":
        meter.prng_calls += 1
    else:
        meter.xor_calls += 1


# ---------------------------------------------------------------------------
# Core bit operations.
# ---------------------------------------------------------------------------

def xor(a: BitString, b: BitString) -> BitString:
    """Bitwise XOR of two equal-length bitstrings."""
    if len(a) != len(b):
        raise LengthMismatchError(f"xor of lengths {len(a)} and {len(b)}")
    _count("xor")
    return BitString(a.value ^ b.value, len(a))


def concat(a: BitString, b: BitString) -> BitString:
    """``a`` followed by ``b``."""
    return BitString((a.value << len(b)) | b.value, len(a) + len(b))


def split(s: BitString) -> tuple[BitString, BitString]:
    """The two equal halves of an even-length bitstring."""
    if len(s) % 2:
        raise OddLengthError(f"cannot split odd length {len(s)}")
    half = len(s) // 2
    return BitString(s.value >> half, half), BitString(s.value & ((1 << half) - 1), half)


# ---------------------------------------------------------------------------
# Hash abstraction.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HashSpec:
    """Selects a hash variant and its output width.

    ``production`` truncates SHA-256; ``toy`` is a small multiply-rotate-xor
    mixer over ``toy_state_bits`` of state, weak by design so tests can
    brute-force preimages over tiny domains.
    """

    output_len_bits: int
    variant: str = "production"
    toy_state_bits: int = 64

    def __post_init__(self) -> None:
        if self.variant not in ("production", "toy"):
            raise ValueError(f"unknown hash variant {self.variant!r}")
        if not 1 <= self.output_len_bits <= 256:
            raise ValueError("output_len_bits must be in 1..256")
        if self.variant == "toy" and not self.output_len_bits <= self.toy_state_bits <= 64:
            raise ValueError("toy_state_bits must satisfy output_len_bits <= width <= 64")

    @classmethod
    def production(cls, output_len_bits: int) -> "HashSpec":
        return cls(output_len_bits, "production")

    @classmethod
    def toy(cls, output_len_bits: int, state_bits: int = 64) -> "HashSpec":
        return cls(output_len_bits, "toy", state_bits)


def _pad_to_bytes(bits: BitString) -> bytes:
    # 10* padding: appending a 1 bit then zeros to a byte boundary keeps the
    # bits -> bytes map injective, so the length-prefixed pair encoding below
    # stays injective over pairs of arbitrary lengths.
    padded = concat(bits, BitString(1, 1))
    tail = (-len(padded)) % 8
    padded = concat(padded, BitString(0, tail))
    return padded.to_bytes()


# Toy mixer constants (odd multipliers; pi-derived initial state).
_TOY_INIT = 0x243F6A8885A308D3
_TOY_MULT1 = 0x9E3779B97F4A7C15
_TOY_MULT2 = 0xBF58476D1CE4E5B9


def _toy_digest(data: bytes, width: int, out_bits: int) -> int:
    mask = (1 << width) - 1
    h = _TOY_INIT & mask
    for byte in data:
        h = ((h ^ byte) * _TOY_MULT1) & mask
        h = ((h << 7) | (h >> (width - 7))) & mask
        h ^= h >> (width // 2)
    h = ((h ^ len(data)) * _TOY_MULT2) & mask
    h ^= h >> (width // 2 + 1)
    h = (h * _TOY_MULT1) & mask
    h ^= h >> (width // 2)
    out = 0
    while True:
        out ^= h & ((1 << out_bits) - 1)
        h >>= out_bits
        if not h:
            return out


def _digest(spec: HashSpec, data: bytes) -> BitString:
    if spec.variant == "production":
        digest = hashlib.sha256(data).digest()
        value = int.from_bytes(digest, "big") >> (256 - spec.output_len_bits)
        return BitString(value, spec.output_len_bits)
    return BitString(_toy_digest(data, spec.toy_state_bits, spec.output_len_bits), spec.output_len_bits)


def hash2(spec: HashSpec, left: BitString, right: BitString) -> BitString:
    """Deterministic two-argument digest ``H(left, right)``.

    The pair is encoded injectively: a 32-bit big-endian length prefix for
    ``left``, then ``left``'s bits, then ``right``'s bits, then 10* padding
    to a byte boundary.
    """
    _count("hash")
    enc = concat(concat(BitString(len(left), 32), left), right)
    return _digest(spec, _pad_to_bytes(enc))


def counter_hash(spec: HashSpec, i: int, left: BitString, right: BitString) -> BitString:
    """Session-bound digest ``H_i(left, right)``: the counter is folded into
    the first argument as a 32-bit prefix, so each session index selects an
    independent function at constant cost."""
    if i < 1:
        raise ValueError("session index must be >= 1")
    return hash2(spec, concat(BitString(i, 32), left), right)


# ---------------------------------------------------------------------------
# Seedable randomness: counter mode over SHA-256.
# ---------------------------------------------------------------------------

_PRNG_DOMAIN = b"kimap-prng-v1"


@dataclass
class Prng:
    """Deterministic bit stream. Same ``(seed, stream_id)`` replays the same
    sequence; distinct ``stream_id`` values are independent streams."""

    seed: int
    stream_id: int = 0
    _counter: int = field(default=0, repr=False)
    _acc: int = field(default=0, repr=False)
    _acc_bits: int = field(default=0, repr=False)

    def next_bits(self, nbits: int) -> BitString:
        return prng_next(self, nbits)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        k = (n - 1).bit_length()
        while True:
            v = prng_next(self, k).value
            if v < n:
                return v

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def derive(self, stream_id: int) -> "Prng":
        """Fresh stream with the same seed and a different stream id."""
        return Prng(self.seed, stream_id)


def prng_next(p: Prng, nbits: int) -> BitString:
    """Draw ``nbits`` pseudorandom bits, advancing the stream state."""
    if nbits < 1:
        raise ValueError("nbits must be >= 1")
    _count("prng")
    while p._acc_bits < nbits:
        block = hashlib.sha256(
            _PRNG_DOMAIN
            + (p.seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")
            + p.stream_id.to_bytes(8, "big")
            + p._counter.to_bytes(8, "big")
        ).digest()
        p._acc = (p._acc << 256) | int.from_bytes(block, "big")
        p._acc_bits += 256
        p._counter += 1
    excess = p._acc_bits - nbits
    out = p._acc >> excess
    p._acc &= (1 << excess) - 1
    p._acc_bits = excess
    return BitString(out, nbits)
