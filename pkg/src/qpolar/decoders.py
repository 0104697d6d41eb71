"""Syndrome decoders for polar stabilizer codes under bit flips.

``SyndromeTable`` is the exhaustive minimum-weight lookup decoder: every
syndrome maps to a lowest-weight error producing it. ``FlipDecoder`` is the
parity-check-matrix-element-flipping decoder, a greedy column picker working
on a weight-reduced copy of the parity-check matrix.

Syndromes are indexed by the integer whose bit ``i`` is the parity of check
row ``i`` (row 1 is the least significant bit).
"""

from __future__ import annotations

import itertools
import struct
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import gf2
from .construction import PolarCodeLayout
from .errors import ResourceError, SizeError
from .gf2 import BitVector

TiePolicy = Literal["random", "first_lexicographic"]
TIE_POLICIES: tuple[str, ...] = ("random", "first_lexicographic")

MAX_TABLE_LENGTH = 32
DEFAULT_MAX_ENTRIES = 1 << 22
_CHUNK = 1 << 16

TABLE_MAGIC = b"QPST"
TABLE_VERSION = 1
_HEADER = struct.Struct("<4sHHII")


def _check_policy(tie_policy: str) -> None:
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie_policy!r}; expected one of {TIE_POLICIES}")


def column_syndromes(layout: PolarCodeLayout) -> np.ndarray:
    """Syndrome index of each single-qubit error, as ``uint64``."""
    if layout.n_checks > 63:
        raise SizeError(f"{layout.n_checks} checks do not fit a 64-bit syndrome index")
    S = layout.S_G.to_array().astype(np.uint64)
    shifts = np.arange(layout.n_checks, dtype=np.uint64)[:, None]
    return np.bitwise_or.reduce(S << shifts, axis=0) if layout.n_checks else np.zeros(layout.N, np.uint64)


def syndrome_indices(layout: PolarCodeLayout, errors: np.ndarray) -> np.ndarray:
    """Syndrome index of each row of a 0/1 error array of shape ``(trials, N)``."""
    errors = np.asarray(errors)
    S = layout.S_G.to_array().astype(np.float32)
    bits = (errors.astype(np.float32) @ S.T).astype(np.int64) & 1
    weights = np.left_shift(np.uint64(1), np.arange(layout.n_checks, dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class SyndromeTable:
    """Syndrome-indexed minimum-weight recoveries.

    ``recoveries[s]`` is a bit mask (bit ``j`` = qubit ``j + 1``),
    ``min_weights[s]`` its weight, and ``tie_counts[s]`` the number of
    distinct minimum-weight errors sharing syndrome ``s``.
    """

    layout_id: str
    N: int
    k: int
    tie_policy: str
    seed: int | None
    recoveries: np.ndarray
    min_weights: np.ndarray
    tie_counts: np.ndarray

    @property
    def n_checks(self) -> int:
        return self.N - self.k

    def __len__(self) -> int:
        return int(self.recoveries.shape[0])

    def recovery_bits(self, indices: np.ndarray | int) -> np.ndarray:
        """Unpacked 0/1 recoveries for one or many syndrome indices."""
        masks = np.atleast_1d(self.recoveries[indices]).astype("<u8")
        return gf2.unpack_bits(masks[:, None], self.N)

    def __getitem__(self, syndrome: BitVector) -> BitVector:
        return lookup_decode(self, syndrome)

    def entries(self) -> Iterator[tuple[BitVector, BitVector]]:
        for s in range(len(self)):
            syn = BitVector.from_bits([(s >> i) & 1 for i in range(self.n_checks)])
            yield syn, BitVector.from_bits(self.recovery_bits(s)[0])

    def to_bytes(self) -> bytes:
        """Binary dump: 16-byte header, then one record per syndrome index."""
        policy = TIE_POLICIES.index(self.tie_policy)
        header = _HEADER.pack(TABLE_MAGIC, TABLE_VERSION, policy, self.N, self.k)
        width = (self.N + 7) // 8
        body = self.recoveries.astype("<u8").view(np.uint8).reshape(-1, 8)[:, :width]
        return header + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, layout_id: str = "") -> SyndromeTable:
        if len(data) < _HEADER.size:
            raise ValueError("truncated syndrome table header")
        magic, version, policy, N, k = _HEADER.unpack_from(data)
        if magic != TABLE_MAGIC or version != TABLE_VERSION:
            raise ValueError(f"not a version-{TABLE_VERSION} syndrome table")
        width = (N + 7) // 8
        count = 1 << (N - k)
        body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        if body.size != count * width:
            raise ValueError(f"expected {count * width} record bytes, found {body.size}")
        padded = np.zeros((count, 8), dtype=np.uint8)
        padded[:, :width] = body.reshape(count, width)
        recoveries = padded.view("<u8").reshape(count).astype(np.uint64)
        weights = np.bitwise_count(recoveries).astype(np.int64)
        return cls(
            layout_id=layout_id,
            N=N,
            k=k,
            tie_policy=TIE_POLICIES[policy],
            seed=None,
            recoveries=recoveries,
            min_weights=weights,
            tie_counts=np.zeros(count, dtype=np.int64),
        )


def _combination_chunks(N: int, w: int) -> Iterator[np.ndarray]:
    if w == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    it = itertools.combinations(range(N), w)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(it, _CHUNK)), dtype=np.int64
        )
        if flat.size == 0:
            return
        yield flat.reshape(-1, w)


def build_syndrome_table(
    layout: PolarCodeLayout,
    tie_policy: str = "random",
    seed: int | None = 0,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> SyndromeTable:
    """Enumerate errors by weight, lexicographically within a weight class.

    Every syndrome whose minimum weight is ``w`` sees all of its weight-``w``
    candidates; ``random`` keeps a uniformly chosen one (seeded),
    ``first_lexicographic`` keeps the first one enumerated.
    """
    _check_policy(tie_policy)
    N, r = layout.N, layout.n_checks
    if N > MAX_TABLE_LENGTH:
        raise ResourceError(
            f"lookup table needs 2^{r} entries over N={N} qubits; exhaustive tables "
            f"are impractical from N = 64 upward (hard limit N={MAX_TABLE_LENGTH})"
        )
    size = 1 << r
    if size > max_entries:
        raise ResourceError(f"lookup table needs 2^{r} = {size} entries, budget is {max_entries}")

    cols = column_syndromes(layout)
    rng = np.random.default_rng(seed) if tie_policy == "random" else None
    min_w = np.full(size, -1, dtype=np.int64)
    counts = np.zeros(size, dtype=np.int64)
    best_key = np.full(size, np.inf)
    best_mask = np.zeros(size, dtype=np.uint64)
    remaining = size
    serial = 0
    for w in range(N + 1):
        for combos in _combination_chunks(N, w):
            n_c = combos.shape[0]
            if w:
                synd = np.bitwise_xor.reduce(cols[combos], axis=1)
                masks = np.bitwise_or.reduce(np.left_shift(np.uint64(1), combos.astype(np.uint64)), axis=1)
            else:
                synd = np.zeros(1, dtype=np.uint64)
                masks = np.zeros(1, dtype=np.uint64)
            keys = rng.random(n_c) if rng is not None else np.arange(serial, serial + n_c, dtype=np.float64)
            serial += n_c
            sidx = synd.astype(np.int64)
            live = (min_w[sidx] == -1) | (min_w[sidx] == w)
            if not live.any():
                continue
            sidx, masks, keys = sidx[live], masks[live], keys[live]
            remaining -= int(np.count_nonzero(min_w[np.unique(sidx)] == -1))
            min_w[sidx] = w
            np.add.at(counts, sidx, 1)
            order = np.lexsort((keys, sidx))
            uniq, first = np.unique(sidx[order], return_index=True)
            pick = order[first]
            better = keys[pick] < best_key[uniq]
            best_key[uniq[better]] = keys[pick][better]
            best_mask[uniq[better]] = masks[pick][better]
        if remaining == 0:
            break
    return SyndromeTable(
        layout_id=layout.layout_id,
        N=N,
        k=layout.k,
        tie_policy=tie_policy,
        seed=seed,
        recoveries=best_mask,
        min_weights=min_w,
        tie_counts=counts,
    )


def lookup_decode(table: SyndromeTable, syndrome: BitVector) -> BitVector:
    if syndrome.length != table.n_checks:
        raise SizeError(f"syndrome length {syndrome.length}, table expects {table.n_checks}")
    return BitVector.from_bits(table.recovery_bits(syndrome.to_int())[0])


@dataclass(frozen=True)
class FlipResult:
    e_hat: np.ndarray
    success: bool
    iterations: int


class FlipDecoder:
    """Parity-check-matrix-element-flipping decoder bound to one layout.

    Rows of the reduced check matrix are split into an unsatisfied part
    ``S_A`` and a satisfied part ``S_B``. Each step picks the column with the
    largest ``colsum(S_A) - colsum(S_B)``, marks that qubit as flipped, clears
    the column and swaps every row that touched it to the other part. Decoding
    succeeds once ``S_A`` is empty and gives up after ``N`` steps.
    """

    def __init__(self, layout: PolarCodeLayout):
        self.layout = layout
        self.reduced = gf2.reduce_row_weights(layout.S_G)
        self._dense = self.reduced.to_array().astype(np.int32)

    @property
    def N(self) -> int:
        return self.layout.N

    def reduced_syndrome(self, error: np.ndarray) -> np.ndarray:
        return (self._dense @ np.asarray(error, dtype=np.int32)) & 1

    def decode_syndrome(
        self,
        syndrome: np.ndarray,
        tie_policy: str = "random",
        rng: np.random.Generator | None = None,
    ) -> FlipResult:
        """Run the flipping loop from a reduced-matrix syndrome (0/1 per row)."""
        _check_policy(tie_policy)
        if tie_policy == "random" and rng is None:
            raise ValueError("random tie policy needs a Generator")
        M = self._dense.copy()
        sign = np.where(np.asarray(syndrome) != 0, 1, -1).astype(np.int32)
        e_hat = np.zeros(self.N, dtype=np.uint8)
        s1 = int(np.count_nonzero(sign > 0))
        budget = self.N
        steps = 0
        while s1 != 0 and budget > 0:
            live = np.flatnonzero(M.any(axis=0) & (e_hat == 0))
            if live.size == 0:
                break
            score = sign @ M[:, live]
            ties = live[score == score.max()]
            col = int(ties[0]) if tie_policy == "first_lexicographic" else int(ties[rng.integers(ties.size)])
            e_hat[col] = 1
            hit = M[:, col] != 0
            sign[hit] = -sign[hit]
            M[hit, col] = 0
            s1 = int(np.count_nonzero(sign > 0))
            budget -= 1
            steps += 1
        return FlipResult(e_hat=e_hat, success=s1 == 0, iterations=steps)

    def decode_error(
        self,
        error: np.ndarray,
        tie_policy: str = "random",
        rng: np.random.Generator | None = None,
    ) -> FlipResult:
        error = np.asarray(error)
        if error.shape != (self.N,):
            raise SizeError(f"error vector must have length {self.N}")
        return self.decode_syndrome(self.reduced_syndrome(error), tie_policy, rng)


def flip_decode(
    layout: PolarCodeLayout,
    error: BitVector,
    seed: int | None = 0,
    tie_policy: str = "random",
    decoder: FlipDecoder | None = None,
) -> BitVector:
    """Estimate of the error ``error`` from its syndrome; check the residual to see if it worked."""
    if error.length != layout.N:
        raise SizeError(f"error length {error.length}, layout has N={layout.N}")
    decoder = decoder or FlipDecoder(layout)
    rng = np.random.default_rng(seed) if tie_policy == "random" else None
    result = decoder.decode_error(error.to_array(), tie_policy, rng)
    return BitVector.from_bits(result.e_hat)
