"""Command-line front end: ``construct``, ``analyze``, ``simulate``, ``sweep``.

Data (JSON or CSV) goes to ``--out`` or stdout; human-readable summaries go
to stderr. Exit status: 0 ok, 2 validation error, 3 resource/budget error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import construction, simulation
from .construction import ALGORITHMS, PolarCodeLayout
from .decoders import TIE_POLICIES
from .errors import QPolarError, ResourceError
from .polarization import bhattacharyya_profile, n_target_nodes
from .simulation import CSV_COLUMNS, DECODERS, SimConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_IO = 4

SWEEP_COLUMNS = CSV_COLUMNS + ("status",)
DEFAULT_SWEEP_P = (0.001, 0.01, 0.075)


def _default_seed() -> int:
    raw = os.environ.get("QPOLAR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"QPOLAR_SEED={raw!r} is not an integer") from None


def _emit(text: str, out: str | None, append: bool = False) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "a" if append else "w", newline="") as fh:
        fh.write(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _fmt(x: float) -> str:
    return format(x, ".12g")


def cmd_construct(args: argparse.Namespace) -> int:
    layout = construction.construct(args.n, args.p, args.alg)
    _note(
        f"{layout.algorithm}: n={layout.n} N={layout.N} k={layout.k} N-k={layout.n_checks} "
        f"min_logical_row_weight={layout.min_logical_row_weight()}"
    )
    _note(f"logical_indices={list(layout.logical_indices)}")
    _note(f"frozen_indices={list(layout.frozen_indices)}")
    _emit(layout.to_json() + "\n", args.out)
    return EXIT_OK


def analyze_rows(n: int, p: float) -> list[dict[str, str]]:
    profile = bhattacharyya_profile(n, p)
    rows = []
    for i in range(1, profile.N + 1):
        rows.append(
            {
                "channel_index": str(i),
                "z": _fmt(profile[i]),
                "n_target_nodes": str(n_target_nodes(n, i)),
                "stab_weight": str(construction.stabilizer_weight(n, i)),
                "logx_weight": str(construction.logicalx_weight(n, i)),
            }
        )
    return rows


def cmd_analyze(args: argparse.Namespace) -> int:
    rows = analyze_rows(args.n, args.p)
    columns = ("channel_index", "z", "n_target_nodes", "stab_weight", "logx_weight")
    _emit(simulation.write_csv(rows, columns), args.out)
    spectrum = construction.weight_spectrum(args.n)
    _note("stab_weight_counts " + " ".join(f"{w}:{c}" for w, c in spectrum.stab_counts.items()))
    _note("logx_weight_counts " + " ".join(f"{w}:{c}" for w, c in spectrum.logx_counts.items()))
    return EXIT_OK


def _layout_from_args(args: argparse.Namespace) -> PolarCodeLayout:
    if args.layout:
        with open(args.layout) as fh:
            return PolarCodeLayout.from_json(fh.read())
    if args.n is None or args.p is None:
        raise ValueError("simulate needs either --layout or both --n and --p")
    return construction.construct(args.n, args.p, args.alg)


def cmd_simulate(args: argparse.Namespace) -> int:
    layout = _layout_from_args(args)
    physical = args.physical_p if args.physical_p is not None else layout.construction_p
    trials = args.trials or simulation.default_trials(layout.N, args.decoder)
    config = SimConfig(layout, args.decoder, physical, trials, args.seed, args.tie_policy)
    result = simulation.run_batch(config, workers=args.workers)
    row = simulation.result_row(config, result)
    fresh = args.out in (None, "-") or not os.path.exists(args.out) or os.path.getsize(args.out) == 0
    _emit(simulation.write_csv([row], header=fresh), args.out, append=True)
    _note(f"p_L={row['p_L']} +/- {row['std_err']} ({result.failures}/{result.trials}) in {result.wall_time:.2f}s")
    return EXIT_OK


@dataclass(frozen=True)
class SweepSpec:
    algorithms: tuple[str, ...]
    decoders: tuple[str, ...]
    n_values: tuple[int, ...]
    p_values: tuple[float, ...]
    trials: int | None
    seed: int
    output_path: str | None = None
    tie_policy: str = "random"

    def __post_init__(self) -> None:
        for name in ("algorithms", "decoders", "n_values", "p_values"):
            if not getattr(self, name):
                raise ValueError(f"sweep {name} must be nonempty")
        if list(self.n_values) != sorted(self.n_values):
            raise ValueError("sweep n_values must be sorted ascending")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        for d in self.decoders:
            if d not in DECODERS:
                raise ValueError(f"unknown decoder {d!r}")

    def cells(self) -> list[tuple[str, str, float, int]]:
        return list(itertools.product(self.algorithms, self.decoders, self.p_values, self.n_values))


def cell_seed(master: int, cell: int) -> int:
    state = np.random.SeedSequence(master, spawn_key=(cell,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _run_cell(job: tuple[SweepSpec, int]) -> dict[str, str]:
    spec, index = job
    alg, decoder, p, n = spec.cells()[index]
    seed = cell_seed(spec.seed, index)
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(algorithm=alg, decoder=decoder, n=str(n), N=str(1 << n), physical_p=_fmt(p), seed=str(seed))
    try:
        layout = construction.construct(n, p, alg)
        trials = spec.trials or simulation.default_trials(layout.N, decoder)
        config = SimConfig(layout, decoder, p, trials, seed, spec.tie_policy)
        result = simulation.run_batch(config)
    except (QPolarError, ValueError) as exc:
        row["status"] = f"error: {exc}"
        return row
    row.update(simulation.result_row(config, result))
    row["status"] = "ok"
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict[str, str]]:
    jobs = [(spec, i) for i in range(len(spec.cells()))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(job) for job in jobs]


def trend_verdicts(rows: Sequence[dict[str, str]]) -> dict[tuple[str, str, str], str]:
    """``increasing`` when p_L strictly rises with n across a series' ok cells."""
    series: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (row["algorithm"], row["decoder"], row["physical_p"])
        series.setdefault(key, []).append((int(row["n"]), float(row["p_L"])))
    verdicts = {}
    for key, pts in series.items():
        pts.sort()
        rates = [v for _, v in pts]
        ok = len(rates) > 1 and all(a < b for a, b in zip(rates, rates[1:]))
        verdicts[key] = "increasing" if ok else "not increasing"
    return verdicts


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = SweepSpec(
        algorithms=tuple(args.alg),
        decoders=tuple(args.decoder),
        n_values=tuple(sorted(args.n)),
        p_values=tuple(args.p),
        trials=args.trials,
        seed=args.seed,
        output_path=args.out,
        tie_policy=args.tie_policy,
    )
    rows = run_sweep(spec, workers=args.workers)
    _emit(simulation.write_csv(rows, SWEEP_COLUMNS), args.out)
    for (alg, dec, p), verdict in trend_verdicts(rows).items():
        _note(f"trend algorithm={alg} decoder={dec} p={p}: {verdict}")
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        _note(f"{failed} of {len(rows)} cells failed; see status column")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpolar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    p = sub.add_parser("construct", parents=[common], help="build a code and write its layout JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alg", choices=ALGORITHMS, default="quality_ranking")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("analyze", parents=[common], help="per-channel Z and weight profile as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_analyze)

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    run.add_argument("--tie-policy", choices=TIE_POLICIES, default="random")
    run.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", parents=[common, run], help="Monte-Carlo run, one CSV row")
    p.add_argument("--layout", help="layout JSON written by construct")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="design error rate (also the physical rate by default)")
    p.add_argument("--physical-p", type=float, default=None)
    p.add_argument("--alg", choices=ALGORITHMS, default="quality_ranking")
    p.add_argument("--decoder", choices=DECODERS, default="lookup")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common, run], help="grid of simulations, CSV with trend verdicts")
    p.add_argument("--n", type=int, nargs="*", required=True)
    p.add_argument("--p", type=float, nargs="+", default=list(DEFAULT_SWEEP_P))
    p.add_argument("--alg", choices=ALGORITHMS, nargs="+", default=list(ALGORITHMS))
    p.add_argument("--decoder", choices=DECODERS, nargs="+", default=["lookup"])
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        _note(f"error: {exc}")
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ResourceError as exc:
        _note(f"error: {exc}")
        return EXIT_RESOURCE
    except OSError as exc:
        _note(f"error: {exc}")
        return EXIT_IO
    except (QPolarError, ValueError, json.JSONDecodeError, KeyError) as exc:
        _note(f"error: {exc}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
