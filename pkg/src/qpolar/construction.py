"""Stabilizer construction for polar codes against bit flips.

Two ways of choosing which channels carry logical qubits:

* ``quality_ranking`` keeps the ``k = floor(N (1 - H(p)))`` channels with the
  smallest Bhattacharyya parameter;
* ``block_selection`` freezes every channel whose stabilizer weight reaches
  the weight class of the ``k'``-th heaviest logical-X channel, trading rate
  for larger logical-X weight.

Stabilizer rows are rows of ``G_N = F^{(x)n}`` at frozen indices; logical-X
rows are rows of ``G_N^T`` at logical indices.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Literal

import numpy as np

from . import gf2
from .errors import DegenerateCodeError, DomainError, SizeError
from .gf2 import BitMatrix
from .polarization import (
    ChannelOrdering,
    bhattacharyya_profile,
    bitflip_capacity,
    n_target_nodes,
    order_by_bhattacharyya,
)

Algorithm = Literal["quality_ranking", "block_selection"]
ALGORITHMS: tuple[str, ...] = ("quality_ranking", "block_selection")
MAX_EXHAUSTIVE_K = 22

TARGET = "target"
CONTROL = "control"


@lru_cache(maxsize=16)
def _generator(n: int) -> BitMatrix:
    return gf2.kron_power_F(n)


@lru_cache(maxsize=16)
def _generator_t(n: int) -> BitMatrix:
    return _generator(n).transpose()


@dataclass(frozen=True)
class PathDescriptor:
    channel_index: int
    nodes: tuple[str, ...]  # node_n first, node_1 last

    @property
    def n_target(self) -> int:
        return self.nodes.count(TARGET)

    @property
    def n_control(self) -> int:
        return self.nodes.count(CONTROL)


def _check_index(n: int, i: int) -> None:
    if n < 0:
        raise SizeError(f"stage count n={n} must be nonnegative")
    if not 1 <= i <= 1 << n:
        raise SizeError(f"channel index {i} outside 1..{1 << n}")


def path_descriptor(n: int, i: int) -> PathDescriptor:
    """CNOT roles met by input ``i``, listed ``node_n`` down to ``node_1``.

    ``node_{n-b}`` is a control node exactly when bit ``b`` of ``i - 1`` is
    set, so ``P_1`` is all targets, ``P_N`` all controls, and for ``n = 2``
    ``P_2 = (control, target)``, ``P_3 = (target, control)``.
    """
    _check_index(n, i)
    bits = i - 1
    return PathDescriptor(i, tuple(CONTROL if (bits >> b) & 1 else TARGET for b in range(n)))


def stabilizer_weight(n: int, i: int) -> int:
    _check_index(n, i)
    return 1 << n_target_nodes(n, i)


def logicalx_weight(n: int, i: int) -> int:
    _check_index(n, i)
    return 1 << (i - 1).bit_count()


def single_node_pairs(n: int) -> list[tuple[int, int]]:
    """Channel pairs ``(a, b)``, ``a < b``, whose paths differ in exactly one node."""
    N = 1 << n
    return [(i + 1, (i | 1 << bit) + 1) for bit in range(n) for i in range(N) if not i >> bit & 1]


@dataclass(frozen=True)
class WeightSpectrum:
    n: int
    stab_counts: dict[int, int]
    logx_counts: dict[int, int]


def weight_spectrum(n: int) -> WeightSpectrum:
    """Counts of stabilizer and logical-X weights over all ``2^n`` channels."""
    if n < 0:
        raise SizeError(f"stage count n={n} must be nonnegative")
    stab = {1 << x: math.comb(n, x) for x in range(n + 1)}
    logx = {1 << x: math.comb(n, n - x) for x in range(n + 1)}
    return WeightSpectrum(n, stab, logx)


def measured_weight_spectrum(n: int) -> WeightSpectrum:
    """Spectrum read off the actual rows and columns of ``G_N``."""
    g = _generator(n)
    rows, row_counts = np.unique(g.row_weights(), return_counts=True)
    cols, col_counts = np.unique(g.col_weights(), return_counts=True)
    return WeightSpectrum(
        n,
        {int(w): int(c) for w, c in zip(rows, row_counts)},
        {int(w): int(c) for w, c in zip(cols, col_counts)},
    )


@dataclass(frozen=True, eq=False)
class PolarCodeLayout:
    """A fully specified polar stabilizer code.

    ``logical_indices`` and ``frozen_indices`` are 1-based channel indices in
    the order the construction ranked them; row ``r`` of ``S_G`` belongs to
    ``frozen_indices[r]`` and row ``r`` of ``L_G`` to ``logical_indices[r]``.
    """

    n: int
    k: int
    construction_p: float
    algorithm: str
    logical_indices: tuple[int, ...]
    frozen_indices: tuple[int, ...]
    S_G: BitMatrix
    L_G: BitMatrix
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def n_checks(self) -> int:
        return self.N - self.k

    @property
    def layout_id(self) -> str:
        return f"{self.algorithm}:n={self.n}:p={self.construction_p!r}:k={self.k}"

    def min_logical_row_weight(self) -> int:
        return int(self.L_G.row_weights().min())

    def syndrome(self, error: gf2.BitVector) -> gf2.BitVector:
        return gf2.mat_vec(self.S_G, error)

    def to_dict(self, include_matrices: bool = True) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "n": self.n,
            "N": self.N,
            "k": self.k,
            "p": self.construction_p,
            "algorithm": self.algorithm,
            "logical_indices": list(self.logical_indices),
            "frozen_indices": list(self.frozen_indices),
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        if include_matrices:
            doc["S_G"] = gf2.format_matrix(self.S_G)
            doc["L_G"] = gf2.format_matrix(self.L_G)
        return doc

    def to_json(self, include_matrices: bool = True) -> str:
        return json.dumps(self.to_dict(include_matrices), indent=2)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> PolarCodeLayout:
        layout = layout_from_indices(
            int(doc["n"]),
            doc["logical_indices"],
            doc["frozen_indices"],
            construction_p=float(doc["p"]),
            algorithm=str(doc["algorithm"]),
            metadata=doc.get("metadata") or {},
        )
        if layout.N != int(doc.get("N", layout.N)) or layout.k != int(doc.get("k", layout.k)):
            raise ValueError("N/k fields disagree with the index sets")
        for name in ("S_G", "L_G"):
            if name in doc and gf2.parse_matrix(doc[name]) != getattr(layout, name):
                raise ValueError(f"embedded {name} does not match the index sets")
        return layout

    @classmethod
    def from_json(cls, text: str) -> PolarCodeLayout:
        return cls.from_dict(json.loads(text))


def layout_from_indices(
    n: int,
    logical_indices: Sequence[int],
    frozen_indices: Sequence[int],
    *,
    construction_p: float = float("nan"),
    algorithm: str = "custom",
    metadata: dict[str, Any] | None = None,
) -> PolarCodeLayout:
    N = 1 << n
    logical = tuple(int(i) for i in logical_indices)
    frozen = tuple(int(i) for i in frozen_indices)
    if sorted(logical + frozen) != list(range(1, N + 1)):
        raise ValueError("logical and frozen indices must partition 1..N")
    k = len(logical)
    if k == 0:
        raise DegenerateCodeError("degenerate code: k=0 (no logical qubits)", k, N)
    if k == N:
        raise DegenerateCodeError(f"degenerate code: k=N={N} (no stabilizers)", k, N)
    S_G = _generator(n).take_rows([i - 1 for i in frozen])
    L_G = _generator_t(n).take_rows([i - 1 for i in logical])
    return PolarCodeLayout(
        n=n,
        k=k,
        construction_p=construction_p,
        algorithm=algorithm,
        logical_indices=logical,
        frozen_indices=frozen,
        S_G=S_G,
        L_G=L_G,
        metadata=dict(metadata or {}),
    )


def _design_checks(n: int, p: float) -> None:
    if not 0 <= n <= gf2.MAX_KRON_STAGES:
        raise SizeError(f"stage count n={n} outside 0..{gf2.MAX_KRON_STAGES}")
    if not 0.0 < p < 0.5:
        raise DomainError(f"design probability p={p} must satisfy 0 < p < 0.5")


def capacity_k(n: int, p: float) -> int:
    """``floor(N (1 - H(p)))``."""
    return math.floor((1 << n) * bitflip_capacity(p))


def construct_quality_ranking(n: int, p: float) -> PolarCodeLayout:
    _design_checks(n, p)
    N = 1 << n
    k = capacity_k(n, p)
    ordering = order_by_bhattacharyya(bhattacharyya_profile(n, p))
    return layout_from_indices(
        n,
        ordering.order[:k],
        ordering.order[k:],
        construction_p=p,
        algorithm="quality_ranking",
        metadata={"capacity_k": k, "rate": k / N},
    )


def order_by_logical_weight(n: int) -> ChannelOrdering:
    """Channels by descending logical-X weight, ties in index order."""
    weights = _generator_t(n).row_weights()
    idx = np.argsort(-weights, kind="stable")
    return ChannelOrdering(tuple((idx + 1).tolist()), "logical_weight_descending")


def construct_block_selection(n: int, p: float) -> PolarCodeLayout:
    _design_checks(n, p)
    N = 1 << n
    k_prime = capacity_k(n, p)
    if k_prime == 0:
        raise DegenerateCodeError("degenerate code: k=0 (k'=0, no reference channel)", 0, N)
    ordering = order_by_logical_weight(n)
    w = logicalx_weight(n, ordering.order[k_prime - 1])
    x = n - int(math.log2(w))
    frozen_count = sum(math.comb(n, a) for a in range(x, n + 1))
    k = N - frozen_count
    return layout_from_indices(
        n,
        ordering.order[:k],
        ordering.order[k:],
        construction_p=p,
        algorithm="block_selection",
        metadata={"capacity_k": k_prime, "x": x, "rate": k / N},
    )


def construct(n: int, p: float, algorithm: str) -> PolarCodeLayout:
    if algorithm == "quality_ranking":
        return construct_quality_ranking(n, p)
    if algorithm == "block_selection":
        return construct_block_selection(n, p)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


@dataclass(frozen=True)
class DistanceResult:
    value: int
    exact: bool

    def __int__(self) -> int:
        return self.value


def effective_x_distance(layout: PolarCodeLayout, max_k: int = MAX_EXHAUSTIVE_K) -> DistanceResult:
    """Minimum weight over nonzero combinations of logical-X rows.

    Gray-code walk over all ``2^k - 1`` combinations when ``k <= max_k``;
    otherwise the minimum row weight, flagged as an upper bound.
    """
    L = layout.L_G
    if layout.k > max_k:
        return DistanceResult(layout.min_logical_row_weight(), exact=False)
    rows = [row.to_int() for row in L]
    best = layout.N
    acc = 0
    for step in range(1, 1 << layout.k):
        # bit that flips between gray(step - 1) and gray(step)
        acc ^= rows[(step & -step).bit_length() - 1]
        w = acc.bit_count()
        if w < best:
            best = w
    return DistanceResult(best, exact=True)


def effective_x_distance_bruteforce(layout: PolarCodeLayout) -> int:
    """Independent reference: explicit subset sums over unpacked rows."""
    L = layout.L_G.to_array().astype(np.int64)
    best = layout.N
    for r in range(1, layout.k + 1):
        for combo in itertools.combinations(range(layout.k), r):
            best = min(best, int((L[list(combo)].sum(axis=0) % 2).sum()))
    return best
