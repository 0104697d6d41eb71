"""Coordinate-channel quality under the bit-flip channel.

The Bhattacharyya recursion ``z -> (2z - z^2, z^2)`` squares values towards
zero or one very quickly; by ``n = 10`` many entries underflow a double. The
profile therefore carries ``log z`` and ``log(1 - z)`` alongside ``z`` and all
orderings are taken on ``logit z``, which stays finite and strictly monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError, SizeError

MAX_STAGES = 20


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise DomainError(f"probability p={p} outside [0, 1]")
    return p


def base_bhattacharyya(p: float) -> float:
    p = _check_probability(p)
    return min(1.0, 2.0 * math.sqrt(p * (1.0 - p)))


def binary_entropy(p: float) -> float:
    p = _check_probability(p)
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def bitflip_capacity(p: float) -> float:
    """``1 - H(p)`` for the bit-flip channel."""
    return 1.0 - binary_entropy(p)


def n_target_nodes(n: int, index: int) -> int:
    """Target-node count of channel ``index`` (1-based): ``n - popcount(index - 1)``."""
    return n - (index - 1).bit_count()


@dataclass(frozen=True, eq=False)
class BhattacharyyaProfile:
    n: int
    p: float
    z: np.ndarray
    log_z: np.ndarray
    log_one_minus_z: np.ndarray

    @property
    def N(self) -> int:
        return 1 << self.n

    def logit(self) -> np.ndarray:
        """``log z - log(1 - z)`` per channel; a strictly monotone image of ``z``."""
        with np.errstate(invalid="ignore"):
            return self.log_z - self.log_one_minus_z

    def __getitem__(self, index: int) -> float:
        """Z of channel ``index`` (1-based)."""
        if not 1 <= index <= self.N:
            raise IndexError(f"channel {index} outside 1..{self.N}")
        return float(self.z[index - 1])


def _base_logs(p: float) -> tuple[float, float]:
    with np.errstate(divide="ignore"):
        log_z = math.log(2.0) + 0.5 * (np.log(p) + np.log1p(-p)) if 0.0 < p < 1.0 else -math.inf
        # 1 - 2 sqrt(p(1-p)) = (sqrt(1-p) - sqrt(p))^2, exact near p = 1/2
        gap = abs(math.sqrt(1.0 - p) - math.sqrt(p))
        log_1mz = 2.0 * float(np.log(gap)) if gap > 0 else -math.inf
    return float(min(log_z, 0.0)), float(min(log_1mz, 0.0))


def bhattacharyya_profile(n: int, p: float) -> BhattacharyyaProfile:
    """Per-channel Z after ``n`` combining stages.

    Channel ``2i - 1`` of stage ``N`` takes ``2z - z^2`` of channel ``i`` of
    stage ``N/2``; channel ``2i`` takes ``z^2``.
    """
    p = _check_probability(p)
    if not 0 <= n <= MAX_STAGES:
        raise SizeError(f"stage count n={n} outside 0..{MAX_STAGES}")
    a0, b0 = _base_logs(p)
    log_z = np.array([a0])
    log_1mz = np.array([b0])
    for _ in range(n):
        nxt_a = np.empty(2 * log_z.size)
        nxt_b = np.empty(2 * log_z.size)
        # 2z - z^2 = z (1 + (1 - z));  1 - (2z - z^2) = (1 - z)^2
        nxt_a[0::2] = log_z + np.log1p(np.exp(log_1mz))
        nxt_b[0::2] = 2.0 * log_1mz
        # z^2;  1 - z^2 = (1 - z)(1 + z)
        nxt_a[1::2] = 2.0 * log_z
        nxt_b[1::2] = log_1mz + np.log1p(np.exp(log_z))
        log_z = np.minimum(nxt_a, 0.0)
        log_1mz = np.minimum(nxt_b, 0.0)
    z = np.clip(np.exp(log_z), 0.0, 1.0)
    return BhattacharyyaProfile(n=n, p=p, z=z, log_z=log_z, log_one_minus_z=log_1mz)


def bhattacharyya_profile_direct(n: int, p: float) -> np.ndarray:
    """Plain float recursion with per-stage clamping; reference for small ``n``."""
    z = np.array([base_bhattacharyya(p)])
    for _ in range(n):
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = np.clip(nxt, 0.0, 1.0)
    return z


OrderingKey = Literal["bhattacharyya_ascending", "logical_weight_descending"]


@dataclass(frozen=True)
class ChannelOrdering:
    order: tuple[int, ...]
    key: OrderingKey

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise ValueError("order must be a permutation of 1..N")

    def __len__(self) -> int:
        return len(self.order)


def order_by_bhattacharyya(profile: BhattacharyyaProfile) -> ChannelOrdering:
    """Channels sorted by ascending Z, ties kept in index order."""
    idx = np.argsort(profile.logit(), kind="stable")
    return ChannelOrdering(tuple((idx + 1).tolist()), "bhattacharyya_ascending")


@dataclass(frozen=True)
class TargetOrderCheck:
    """Outcome of the strict target-count ordering check.

    ``violation`` holds ``(a, b)`` with ``n_target(a) > n_target(b)`` but
    ``Z(a) <= Z(b)``. ``excluded`` is set when ``p`` sits at a fixed point of
    the recursion, where the strict claim cannot apply.
    """

    n: int
    p: float
    holds: bool
    violation: tuple[int, int] | None = None
    excluded: bool = False

    def __bool__(self) -> bool:
        return self.holds


def check_theorem1(n: int, p: float) -> TargetOrderCheck:
    """Check ``n_target(a) > n_target(b)  =>  Z(a) > Z(b)`` over all channel pairs."""
    p = _check_probability(p)
    if not 0.0 < p < 0.5:
        return TargetOrderCheck(n, p, holds=True, excluded=True)
    profile = bhattacharyya_profile(n, p)
    key = profile.logit()
    targets = np.array([n_target_nodes(n, i) for i in range(1, profile.N + 1)])
    # transitivity: comparing each level's minimum with the level below's maximum suffices
    for t in range(n):
        low = np.flatnonzero(targets == t)
        high = np.flatnonzero(targets == t + 1)
        b = low[np.argmax(key[low])]
        a = high[np.argmin(key[high])]
        if not key[a] > key[b]:
            return TargetOrderCheck(n, p, holds=False, violation=(int(a) + 1, int(b) + 1))
    return TargetOrderCheck(n, p, holds=True)


def check_single_node_order(n: int, p: float) -> TargetOrderCheck:
    """Strict ordering restricted to channel pairs whose paths differ in one node.

    This is the comparison the recursion argument actually covers: flipping
    one control node to a target node strictly raises Z for ``0 < p < 1/2``.
    """
    p = _check_probability(p)
    if not 0.0 < p < 0.5:
        return TargetOrderCheck(n, p, holds=True, excluded=True)
    key = bhattacharyya_profile(n, p).logit()
    N = 1 << n
    for bit in range(n):
        step = 1 << bit
        lo = np.array([i for i in range(N) if not i & step])
        # lo has one more target node than lo | step
        bad = np.flatnonzero(~(key[lo] > key[lo | step]))
        if bad.size:
            a = int(lo[bad[0]])
            return TargetOrderCheck(n, p, holds=False, violation=(a + 1, (a | step) + 1))
    return TargetOrderCheck(n, p, holds=True)
