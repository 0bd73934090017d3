"""Command-line interface.

Subcommands: grid, ranks, critvals, test, simulate, table1.  Machine-readable
payloads (JSON or CSV) go to stdout or to ``--out``; progress and diagnostics
go to stderr.  Exit codes: 0 success, 1 usage/validation, 2 I/O failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as otio
from .grids import ReferenceKind, build_grid, optimal_factorization, w2_to_reference
from .scores import ScoreKind, extract_rank_sign, scored_sample
from .simulate import HOTELLING_ID, TEST_GRIDS, Scenario, ScenarioKind, power_curve
from .transport import empirical_map
from .two_sample import TwoSampleConfig, two_sample_test

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        otio._atomic_write(Path(out_path), text if text.endswith("\n") else text + "\n")


def _parse_shifts(spec: str) -> list[float]:
    """Either 'start:stop:step' (inclusive) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"shift range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("shift step must be positive")
        count = int(round((stop - start) / step)) + 1
        values = [start + i * step for i in range(count)]
        return [round(v, 12) for v in values if v <= stop + 1e-12]
    return [float(p) for p in spec.split(",") if p.strip()]


def _parse_int_list(spec: str) -> list[int]:
    return [int(p) for p in spec.split(",") if p.strip()]


def _build_parser() -> _Parser:
    parser = _Parser(prog="otrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in ReferenceKind]
    scores = [s.value for s in ScoreKind]

    p = sub.add_parser("grid", parents=[], help="construct a reference grid", add_help=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reference", choices=kinds, required=True)
    p.add_argument("--m", type=int, default=None, help="Wasserstein oracle discretization size")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("ranks", help="center-outward ranks and signs of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("critvals", help="tabulate Monte-Carlo critical values")
    p.add_argument("--grid", required=True)
    p.add_argument("--score", choices=scores, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=40000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("test", help="run the two-sample test on two CSV files")
    p.add_argument("--data1", required=True)
    p.add_argument("--data2", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--score", choices=scores, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=40000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("simulate", help="power curve over a shift grid")
    p.add_argument("--config", default=None,
                   help="JSON scenario/run configuration (replaces the flags below)")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind], default=None)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--df", type=float, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tests", default="wilcoxon-spherical,hotelling",
                   help=f"comma list from {sorted(TEST_GRIDS) + [HOTELLING_ID]}")
    p.add_argument("--shifts", default="0:0.5:0.1")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mc-reps", type=int, default=40000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("table1", help="optimal shell factorizations over (d, n) grids")
    p.add_argument("--dims", default="2")
    p.add_argument("--ns", default="50,100,200,300,400")
    p.add_argument("--references", default="spherical-uniform,gaussian-spherical")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)

    return parser


def _cmd_grid(args) -> int:
    kind = ReferenceKind(args.reference)
    fact = None
    if kind.is_spherical:
        fact = optimal_factorization(args.n, args.dim, kind, m=args.m, workers=args.threads)
    grid = build_grid(args.dim, args.n, kind, fact)
    _emit(otio.grid_to_json(grid), args.out)
    return EXIT_OK


def _cmd_ranks(args) -> int:
    grid = otio.read_grid(args.grid)
    data = otio.read_dataset_csv(args.data)
    if data.shape[0] != grid.n:
        raise ValueError(f"dataset has {data.shape[0]} rows, grid expects n={grid.n}")
    rank_signs = extract_rank_sign(empirical_map(data, grid))
    _emit(otio.rank_sign_csv(rank_signs), args.out)
    return EXIT_OK


def _cmd_critvals(args) -> int:
    grid = otio.read_grid(args.grid)
    table = otio.cached_critical_value(
        grid, ScoreKind(args.score), args.n1, args.alpha, args.reps, args.seed,
        cache_dir=args.cache_dir,
    )
    payload = {
        "key": list(table.key),
        "alpha": table.alpha,
        "critical_value": table.critical_value,
        "reps": len(table.null_sample),
    }
    _emit(json.dumps(payload, indent=2), None)
    return EXIT_OK


def _cmd_test(args) -> int:
    grid = otio.read_grid(args.grid)
    data1 = otio.read_dataset_csv(args.data1)
    data2 = otio.read_dataset_csv(args.data2)
    n1, n2 = data1.shape[0], data2.shape[0]
    if n1 + n2 != grid.n:
        raise ValueError(
            f"sample sizes {n1} + {n2} = {n1 + n2} do not match the grid; expected n={grid.n}"
        )
    cfg = TwoSampleConfig(
        n1=n1, n2=n2, grid_kind=grid.kind, score_kind=ScoreKind(args.score),
        alpha=args.alpha, mc_reps=args.reps, seed=args.seed,
    )
    table = otio.cached_critical_value(
        grid, cfg.score_kind, n1, cfg.alpha, cfg.mc_reps, cfg.seed, cache_dir=args.cache_dir
    )
    result = two_sample_test(data1, data2, cfg, grid=grid, table=table)
    echo = {
        "n1": n1, "n2": n2, "grid_kind": grid.kind.value, "score": cfg.score_kind.value,
        "alpha": cfg.alpha, "mc_reps": cfg.mc_reps, "seed": cfg.seed,
    }
    _emit(otio.test_result_json(result, echo), None)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.config is not None:
        if args.scenario is not None:
            raise ValueError("give either --config or --scenario, not both")
        run = otio.simulation_config_from_json(Path(args.config).read_text())
    else:
        if args.scenario is None:
            raise ValueError("one of --config or --scenario is required")
        run = {
            "scenario": Scenario(ScenarioKind(args.scenario), args.dim, df=args.df),
            "n": args.n,
            "tests": [t.strip() for t in args.tests.split(",") if t.strip()],
            "shifts": _parse_shifts(args.shifts),
            "reps": args.reps,
            "seed": args.seed,
            "alpha": args.alpha,
            "mc_reps": args.mc_reps,
        }

    # Precompute the shell grids so the factorization search can use the
    # requested worker pool; cubic grids are cheap and built inside.
    scenario, n = run["scenario"], run["n"]
    grids = {}
    for test in run["tests"]:
        if test == HOTELLING_ID:
            continue
        kind, _ = TEST_GRIDS[test]
        if kind.is_spherical and kind not in grids:
            fact = optimal_factorization(n, scenario.dim, kind, workers=args.threads)
            grids[kind] = build_grid(scenario.dim, n, kind, fact)

    def progress(done, total):
        print(f"shift grid {done}/{total} complete", file=sys.stderr)

    curve = power_curve(grids=grids, progress=progress, **run)
    _emit(otio.power_curve_csv(curve), args.out)
    return EXIT_OK


def _cmd_table1(args) -> int:
    rows = []
    for dim in _parse_int_list(args.dims):
        for kind_name in (k.strip() for k in args.references.split(",") if k.strip()):
            kind = ReferenceKind(kind_name)
            for n in _parse_int_list(args.ns):
                fact = optimal_factorization(n, dim, kind, m=args.m, workers=args.threads)
                grid = build_grid(dim, n, kind, fact)
                w2 = w2_to_reference(grid, args.m)
                rows.append([dim, n, kind.value, fact.n_r, fact.n_s, fact.n_0, repr(w2)])
                print(f"d={dim} n={n} {kind.value}: n_r={fact.n_r}", file=sys.stderr)
    text = otio._csv_text(["d", "n", "reference", "n_r", "n_s", "n_0", "w2"], rows)
    _emit(text, args.out)
    return EXIT_OK


_COMMANDS = {
    "grid": _cmd_grid,
    "ranks": _cmd_ranks,
    "critvals": _cmd_critvals,
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "table1": _cmd_table1,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"otrank {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"otrank {args.command}: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        print(f"otrank {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
