"""Bit-packed linear algebra over GF(2).

Vectors and matrix rows are stored as little-endian ``uint64`` words: column
``j`` (0-based) lives in word ``j // 64`` at bit ``j % 64``. Padding bits past
the logical length are kept at zero so that popcounts and equality tests can
work on whole words.

User-facing indices (channels, rows of ``G_N``) are 1-based; Python-level
indexing (``v[j]``, ``m.row(i)``) is 0-based like any other sequence.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence

import numpy as np

from .errors import SizeError

WORD_BITS = 64
MAX_KRON_STAGES = 20

_ONE = np.uint64(1)


def n_words(nbits: int) -> int:
    return (nbits + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into ``uint64`` words."""
    bits = np.asarray(bits)
    if bits.ndim == 0:
        raise SizeError("cannot pack a scalar")
    nbits = bits.shape[-1]
    nw = n_words(nbits)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD_BITS,), dtype=np.uint8)
    padded[..., :nbits] = bits != 0
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a ``uint8`` 0/1 array."""
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :nbits]


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class BitVector:
    """Immutable packed bit vector of fixed length."""

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray):
        words = np.asarray(words, dtype=np.uint64)
        if length < 0 or words.shape != (n_words(length),):
            raise SizeError(f"{words.shape[0]} words cannot hold exactly {length} bits")
        tail = length % WORD_BITS
        if tail and int(words[-1]) >> tail:
            raise SizeError("padding bits beyond length must be zero")
        self.length = length
        self.words = _readonly(words.copy())

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(length, np.zeros(n_words(length), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> BitVector:
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        if arr.ndim != 1:
            raise SizeError("BitVector.from_bits expects a 1-D sequence")
        return cls(arr.shape[0], pack_bits(arr))

    @classmethod
    def from_string(cls, text: str) -> BitVector:
        text = text.strip()
        if any(c not in "01" for c in text):
            raise ValueError(f"not a 0/1 string: {text!r}")
        return cls.from_bits(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def unit(cls, length: int, index: int) -> BitVector:
        """The 1-based unit vector ``e_index``."""
        if not 1 <= index <= length:
            raise SizeError(f"unit index {index} outside 1..{length}")
        bits = np.zeros(length, dtype=np.uint8)
        bits[index - 1] = 1
        return cls.from_bits(bits)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, j: int) -> int:
        if j < 0:
            j += self.length
        if not 0 <= j < self.length:
            raise IndexError(j)
        return int(self.words[j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_array().tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.length, self.words.tobytes()))

    def __xor__(self, other: BitVector) -> BitVector:
        self._check_same(other)
        return BitVector(self.length, self.words ^ other.words)

    def __and__(self, other: BitVector) -> BitVector:
        self._check_same(other)
        return BitVector(self.length, self.words & other.words)

    def __repr__(self) -> str:
        return f"BitVector('{self.to_string()}')"

    def _check_same(self, other: BitVector) -> None:
        if self.length != other.length:
            raise SizeError(f"length mismatch: {self.length} vs {other.length}")

    def weight(self) -> int:
        return int(_popcount(self.words))

    def any(self) -> bool:
        return bool(self.words.any())

    def support(self) -> list[int]:
        """1-based positions of the set bits."""
        return (np.flatnonzero(self.to_array()) + 1).tolist()

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.words, self.length)

    def to_string(self) -> str:
        return (self.to_array() + ord("0")).tobytes().decode()

    def to_int(self) -> int:
        """Integer with bit ``j`` equal to entry ``j`` (entry 0 is the LSB)."""
        return int.from_bytes(self.words.astype("<u8").tobytes(), "little")


class BitMatrix:
    """Immutable dense GF(2) matrix with bit-packed rows."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        words = np.asarray(words, dtype=np.uint64).reshape(rows, n_words(cols))
        tail = cols % WORD_BITS
        if tail and rows and (words[:, -1] >> np.uint64(tail)).any():
            raise SizeError("padding bits beyond cols must be zero")
        self.rows = rows
        self.cols = cols
        self.words = _readonly(words.copy())

    @classmethod
    def from_array(cls, bits: np.ndarray | Sequence[Sequence[int]]) -> BitMatrix:
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise SizeError("BitMatrix.from_array expects a 2-D array")
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr))

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector], cols: int | None = None) -> BitMatrix:
        if not rows:
            if cols is None:
                raise SizeError("column count required for an empty row list")
            return cls.zeros(0, cols)
        cols = rows[0].length if cols is None else cols
        if any(r.length != cols for r in rows):
            raise SizeError("all rows must have the same length")
        return cls(len(rows), cols, np.stack([r.words for r in rows]))

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> BitMatrix:
        return cls.from_rows([BitVector.from_string(r) for r in rows])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols, np.zeros((rows, n_words(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, size: int) -> BitMatrix:
        return cls.from_array(np.eye(size, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i])

    def __iter__(self) -> Iterator[BitVector]:
        return (self.row(i) for i in range(self.rows))

    def __len__(self) -> int:
        return self.rows

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    def __matmul__(self, other: BitMatrix) -> BitMatrix:
        return mat_mat(self, other)

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.words, self.cols).reshape(self.rows, self.cols)

    def transpose(self) -> BitMatrix:
        return BitMatrix.from_array(self.to_array().T)

    @property
    def T(self) -> BitMatrix:
        return self.transpose()

    def take_rows(self, indices: Sequence[int]) -> BitMatrix:
        """Rows at the given 0-based positions, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return BitMatrix(len(idx), self.cols, self.words[idx])

    def row_weights(self) -> np.ndarray:
        return _popcount(self.words)

    def col_weights(self) -> np.ndarray:
        return self.to_array().sum(axis=0, dtype=np.int64)

    def vstack(self, other: BitMatrix) -> BitMatrix:
        if self.cols != other.cols:
            raise SizeError(f"column mismatch: {self.cols} vs {other.cols}")
        return BitMatrix(self.rows + other.rows, self.cols, np.vstack([self.words, other.words]))

    def to_text(self) -> str:
        return format_matrix(self)


def kron_power_F(n: int) -> BitMatrix:
    """``F^{(x)n}`` over GF(2) with ``F = [[1, 1], [0, 1]]``.

    Entry ``(i, j)`` (0-based) is 1 exactly when the bits of ``i`` are a subset
    of the bits of ``j``, which is the closed form of the Kronecker power.
    """
    if not 0 <= n <= MAX_KRON_STAGES:
        raise SizeError(f"stage count n={n} outside 0..{MAX_KRON_STAGES}")
    size = 1 << n
    idx = np.arange(size, dtype=np.int64)
    out = np.empty((size, n_words(size)), dtype=np.uint64)
    # row by row keeps the unpacked working set at O(N)
    for i in range(size):
        out[i] = pack_bits((idx & i) == i)
    return BitMatrix(size, size, out)


def mat_vec(m: BitMatrix, v: BitVector) -> BitVector:
    """``m . v`` mod 2 (column-vector convention)."""
    if v.length != m.cols:
        raise SizeError(f"mat_vec: matrix has {m.cols} columns, vector has length {v.length}")
    parity = np.bitwise_count(m.words & v.words).sum(axis=1, dtype=np.int64) & 1
    return BitVector.from_bits(parity)


def row_vec_mat(v: BitVector, m: BitMatrix) -> BitVector:
    """``v . m`` mod 2 (row-vector convention): XOR of the rows selected by ``v``."""
    if v.length != m.rows:
        raise SizeError(f"row_vec_mat: vector has length {v.length}, matrix has {m.rows} rows")
    sel = np.flatnonzero(v.to_array())
    if sel.size == 0:
        return BitVector.zeros(m.cols)
    return BitVector(m.cols, np.bitwise_xor.reduce(m.words[sel], axis=0))


def mat_mat(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise SizeError(f"mat_mat: {a.shape} x {b.shape}")
    if a.cols >= 1 << 24:
        raise SizeError("inner dimension too large for exact float accumulation")
    prod = a.to_array().astype(np.float32) @ b.to_array().astype(np.float32)
    return BitMatrix.from_array(prod.astype(np.int64) & 1)


def _eliminate(words: np.ndarray, cols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of packed rows; returns (nonzero rows, pivot columns)."""
    w = np.array(words, dtype=np.uint64, copy=True)
    nrows = w.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        if r == nrows:
            break
        wi = col // WORD_BITS
        mask = _ONE << np.uint64(col % WORD_BITS)
        hits = np.flatnonzero(w[r:, wi] & mask)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
        others = np.flatnonzero(w[:, wi] & mask)
        others = others[others != r]
        if others.size:
            w[others] ^= w[r]
        pivots.append(col)
        r += 1
    return w[:r], pivots


def rank(m: BitMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(_eliminate(m.words, m.cols)[1])


def in_rowspace(m: BitMatrix, v: BitVector) -> bool:
    """Whether ``v`` is a GF(2) combination of the rows of ``m``."""
    if v.length != m.cols:
        raise SizeError(f"in_rowspace: matrix has {m.cols} columns, vector has length {v.length}")
    if not v.any():
        return True
    if m.rows == 0:
        return False
    basis, pivots = _eliminate(m.words, m.cols)
    x = v.words.copy()
    for row, col in zip(basis, pivots):
        if (int(x[col // WORD_BITS]) >> (col % WORD_BITS)) & 1:
            x ^= row
    return not x.any()


def reduce_row_weights(m: BitMatrix) -> BitMatrix:
    """Greedy pairwise row-weight reduction preserving the row space.

    Passes run over ordered pairs ``(i, j)``, ascending ``i`` then ``j``; row
    ``i`` is replaced by ``row_i ^ row_j`` whenever that strictly lowers its
    weight. Iterates until a full pass makes no change.
    """
    w = np.array(m.words, dtype=np.uint64, copy=True)
    nrows = w.shape[0]
    if nrows < 2:
        return BitMatrix(m.rows, m.cols, w)
    changed = True
    while changed:
        changed = False
        for i in range(nrows):
            start = 0
            while True:
                cur = int(_popcount(w[i]))
                cand = _popcount(w[start:] ^ w[i])
                better = np.flatnonzero(cand < cur)
                better = better[better + start != i]
                if better.size == 0:
                    break
                j = start + int(better[0])
                w[i] ^= w[j]
                changed = True
                start = j + 1
                if start >= nrows:
                    break
    return BitMatrix(m.rows, m.cols, w)


def format_matrix(m: BitMatrix) -> str:
    """Text form: ``"rows cols"`` then one 0/1 string per row; column 1 leftmost."""
    arr = m.to_array()
    lines = [f"{m.rows} {m.cols}"]
    lines.extend((row + ord("0")).astype(np.uint8).tobytes().decode() for row in arr)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BitMatrix:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines:
        raise ValueError("empty matrix text")
    try:
        rows, cols = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows:
        raise SizeError(f"header declares {rows} rows, found {len(body)}")
    if rows == 0:
        return BitMatrix.zeros(0, cols)
    m = BitMatrix.from_strings(body)
    if m.cols != cols:
        raise SizeError(f"header declares {cols} columns, rows have {m.cols}")
    return m


def format_vector(v: BitVector) -> str:
    return format_matrix(BitMatrix.from_rows([v]))


def parse_vector(text: str) -> BitVector:
    m = parse_matrix(text)
    if m.rows != 1:
        raise SizeError(f"vector text must hold exactly one row, got {m.rows}")
    return m.row(0)
