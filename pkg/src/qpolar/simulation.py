"""Seeded Monte-Carlo estimation of the logical error rate.

Every trial draws from its own Philox stream keyed by ``(seed, trial_index)``,
so results depend only on the configuration, never on how trials are split
across workers. The error sample uses counter block 0 of that key and the
decoder's tie-breaking uses counter block 1.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import time
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gf2
from .construction import PolarCodeLayout
from .decoders import (
    FlipDecoder,
    SyndromeTable,
    build_syndrome_table,
    syndrome_indices,
)
from .errors import DomainError, ResourceError, SizeError
from .gf2 import BitVector

DECODERS: tuple[str, ...] = ("lookup", "flip")
MAX_EXACT_LENGTH = 16
_MASK64 = (1 << 64) - 1

CSV_COLUMNS: tuple[str, ...] = (
    "algorithm",
    "decoder",
    "n",
    "N",
    "k",
    "construction_p",
    "physical_p",
    "trials",
    "failures",
    "p_L",
    "std_err",
    "tie_event_count",
    "residual_nonzero_syndrome_count",
    "seed",
)


class Verdict(enum.Enum):
    SUCCESS = "success"
    LOGICAL_FAILURE = "logical_failure"
    SYNDROME_FAILURE = "syndrome_failure"


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one trial; ``stream`` selects an independent block."""
    key = ((trial & _MASK64) << 64) | (seed & _MASK64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, stream]))


def sample_error(N: int, p: float, rng: np.random.Generator) -> BitVector:
    """Independent bit flips with probability ``p`` on each of ``N`` qubits."""
    return BitVector.from_bits(_sample_bits(N, p, rng))


def _sample_bits(N: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(N) < p).astype(np.uint8)


def adjudicate(
    layout: PolarCodeLayout, error: BitVector, e_hat: BitVector, debug: bool = False
) -> Verdict:
    if error.length != layout.N or e_hat.length != layout.N:
        raise SizeError(f"error and estimate must both have length {layout.N}")
    residual = error ^ e_hat
    if layout.syndrome(residual).any():
        return Verdict.SYNDROME_FAILURE
    if not residual.any():
        return Verdict.SUCCESS
    if debug:
        assert gf2.in_rowspace(layout.L_G, residual), "zero-syndrome residual outside span(L_G)"
    return Verdict.LOGICAL_FAILURE


@dataclass(frozen=True, eq=False)
class SimConfig:
    layout: PolarCodeLayout
    decoder: str = "lookup"
    physical_p: float | None = None
    trials: int = 100_000
    seed: int = 0
    tie_policy: str = "random"

    def __post_init__(self) -> None:
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}; expected one of {DECODERS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"physical p={self.p} outside [0, 1]")

    @property
    def p(self) -> float:
        return self.layout.construction_p if self.physical_p is None else float(self.physical_p)


@dataclass(frozen=True)
class TrialBatchResult:
    trials: int
    failures: int
    residual_nonzero_syndrome_count: int | None
    tie_event_count: int | None
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def p_L(self) -> float:
        return self.failures / self.trials

    @property
    def std_err(self) -> float:
        return math.sqrt(self.p_L * (1.0 - self.p_L) / self.trials)


def default_trials(N: int, decoder: str) -> int:
    return 10_000 if decoder == "flip" and N > 32 else 100_000


class _Engine:
    """Per-process decoding state shared by all trials of one configuration."""

    def __init__(self, config: SimConfig, table: SyndromeTable | None = None):
        self.config = config
        layout = config.layout
        self.table = None
        self.flip = None
        if config.decoder == "lookup":
            self.table = table or build_syndrome_table(layout, config.tie_policy, seed=config.seed)
        else:
            self.flip = FlipDecoder(layout)
            self._cache: dict[bytes, np.ndarray] = {}

    def run(self, start: int, stop: int) -> tuple[int, int, int]:
        cfg = self.config
        layout = cfg.layout
        N, p = layout.N, cfg.p
        errors = np.empty((stop - start, N), dtype=np.uint8)
        for row, t in enumerate(range(start, stop)):
            errors[row] = _sample_bits(N, p, trial_rng(cfg.seed, t))
        synd = syndrome_indices(layout, errors)
        if self.table is not None:
            recovery = self.table.recovery_bits(synd.astype(np.int64))
            failures = int(np.count_nonzero((errors ^ recovery).any(axis=1)))
            ties = int(np.count_nonzero(self.table.tie_counts[synd.astype(np.int64)] > 1))
            return failures, 0, ties
        failures = residual = 0
        S = layout.S_G.to_array().astype(np.int32)
        for row, t in enumerate(range(start, stop)):
            err = errors[row]
            if synd[row] == 0:
                # empty S_A: the decoder returns zero immediately
                failures += int(err.any())
                continue
            e_hat = self._flip(err, t)
            res = err ^ e_hat
            if ((S @ res) & 1).any():
                residual += 1
                failures += 1
            elif res.any():
                failures += 1
        return failures, residual, 0

    def _flip(self, err: np.ndarray, trial: int) -> np.ndarray:
        s = self.flip.reduced_syndrome(err)
        if self.config.tie_policy == "first_lexicographic":
            key = s.tobytes()
            hit = self._cache.get(key)
            if hit is None:
                hit = self._cache[key] = self.flip.decode_syndrome(s, "first_lexicographic").e_hat
            return hit
        rng = trial_rng(self.config.seed, trial, stream=1)
        return self.flip.decode_syndrome(s, "random", rng).e_hat


def _run_chunk(args: tuple[SimConfig, int, int]) -> tuple[int, int, int]:
    config, start, stop = args
    return _Engine(config).run(start, stop)


def run_batch(
    config: SimConfig,
    workers: int = 1,
    chunk_size: int = 20_000,
    table: SyndromeTable | None = None,
) -> TrialBatchResult:
    t0 = time.perf_counter()
    bounds = [(a, min(a + chunk_size, config.trials)) for a in range(0, config.trials, chunk_size)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, a, b) for a, b in bounds]))
    else:
        engine = _Engine(config, table)
        parts = [engine.run(a, b) for a, b in bounds]
    failures = sum(p[0] for p in parts)
    residual = sum(p[1] for p in parts)
    ties = sum(p[2] for p in parts)
    is_flip = config.decoder == "flip"
    return TrialBatchResult(
        trials=config.trials,
        failures=failures,
        residual_nonzero_syndrome_count=residual if is_flip else None,
        tie_event_count=None if is_flip else ties,
        seed=config.seed,
        wall_time=time.perf_counter() - t0,
    )


def exact_pL(
    layout: PolarCodeLayout,
    decoder: str,
    p: float,
    tie_policy: str = "first_lexicographic",
    table: SyndromeTable | None = None,
) -> float:
    """Logical error rate by summing over all ``2^N`` error patterns.

    The decoder must be a deterministic function of the syndrome: the flip
    decoder needs ``first_lexicographic`` ties, while any fixed lookup table
    qualifies.
    """
    if layout.N > MAX_EXACT_LENGTH:
        raise ResourceError(f"exact enumeration over 2^{layout.N} errors exceeds N <= {MAX_EXACT_LENGTH}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    N = layout.N
    codes = np.arange(1 << N, dtype=np.uint64)
    errors = gf2.unpack_bits(codes[:, None], N)
    synd = syndrome_indices(layout, errors)
    if decoder == "lookup":
        table = table or build_syndrome_table(layout, tie_policy, seed=0)
        recovery = table.recovery_bits(synd.astype(np.int64))
    elif decoder == "flip":
        if tie_policy != "first_lexicographic":
            raise ValueError("exact_pL with the flip decoder requires first_lexicographic ties")
        flip = FlipDecoder(layout)
        uniq, inverse = np.unique(synd, return_inverse=True)
        first = np.zeros(uniq.size, dtype=np.int64)
        first[inverse[::-1]] = np.arange(len(synd))[::-1]
        decoded = np.stack(
            [flip.decode_error(errors[i], "first_lexicographic").e_hat for i in first]
        )
        recovery = decoded[inverse]
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    residual = errors ^ recovery
    failed = residual.any(axis=1)
    weights = errors.sum(axis=1)
    prob = np.power(p, weights) * np.power(1.0 - p, N - weights)
    return float(prob[failed].sum())


def _fmt(x: float) -> str:
    return format(x, ".12g")


def result_row(config: SimConfig, result: TrialBatchResult) -> dict[str, str]:
    layout = config.layout
    opt = lambda v: "" if v is None else str(v)  # noqa: E731
    return {
        "algorithm": layout.algorithm,
        "decoder": config.decoder,
        "n": str(layout.n),
        "N": str(layout.N),
        "k": str(layout.k),
        "construction_p": _fmt(layout.construction_p),
        "physical_p": _fmt(config.p),
        "trials": str(result.trials),
        "failures": str(result.failures),
        "p_L": _fmt(result.p_L),
        "std_err": _fmt(result.std_err),
        "tie_event_count": opt(result.tie_event_count),
        "residual_nonzero_syndrome_count": opt(result.residual_nonzero_syndrome_count),
        "seed": str(config.seed),
    }


def write_csv(
    rows: Iterable[dict[str, str]], columns: Sequence[str] = CSV_COLUMNS, header: bool = True
) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    if header:
        writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def with_physical_p(config: SimConfig, p: float) -> SimConfig:
    return replace(config, physical_p=p)
