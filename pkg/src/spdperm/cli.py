"""Command-line interface: simulate, similarity-matrix, mean, test, mtest,
power and benchmark subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .harness import (
    StudyConfig,
    StudyInterrupted,
    benchmark_costs,
    run_power_study,
    write_benchmark_csv,
)
from .means import MEAN_KINDS, mean_by_kind
from .multivariate import COMBINERS, PARAMETRIZATIONS, multivariate_test
from .permtest import FullEnumeration, MonteCarlo, mrpp_test
from .similarity import MEASURE_KINDS, Measure, similarity_matrix
from .synth import DEFORMATIONS, REGIMES, DeformationSpec, WishartNoise, make_cohort


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.handler(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdperm",
        description="Permutation tests for populations of 3x3 SPD tensors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic two-group cohort CSV")
    p.add_argument("--regime", choices=tuple(REGIMES), default="low")
    p.add_argument("--deform", choices=DEFORMATIONS, default="co")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--n", type=int, default=10, help="samples per group")
    p.add_argument("--df", type=int, default=10, help="Wishart degrees of freedom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("similarity-matrix", help="pairwise similarity matrix CSV")
    p.add_argument("--input", required=True, help="cohort or tensor CSV")
    p.add_argument("--measure", choices=MEASURE_KINDS, default="sq")
    p.add_argument("--k0", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_similarity_matrix)

    p = sub.add_parser("mean", help="mean tensor of a cohort (one CSV row)")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=MEAN_KINDS, default="le")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(handler=cmd_mean)

    p = sub.add_parser("test", help="dispersion permutation test (JSON to stdout)")
    p.add_argument("--input", required=True, help="labeled cohort CSV")
    p.add_argument("--measure", choices=MEASURE_KINDS, default="sq")
    p.add_argument("--k0", type=float, default=1.0)
    p.add_argument("--np", type=int, default=20000, dest="n_permutations")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--weights", default="proportional",
                   help="'proportional', 'equal' or comma-separated values")
    p.add_argument("--enumerate", action="store_true",
                   help="full enumeration instead of Monte Carlo")
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("mtest", help="multivariate partial tests (JSON to stdout)")
    p.add_argument("--input", required=True, help="labeled cohort CSV")
    p.add_argument("--parametrization", choices=PARAMETRIZATIONS, default="geometric")
    p.add_argument("--combiner", choices=COMBINERS, default="fisher")
    p.add_argument("--np", type=int, default=20000, dest="n_permutations")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(handler=cmd_mtest)

    p = sub.add_parser("power", help="run a power study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="power curve CSV path")
    p.add_argument("--paper-scale", action="store_true",
                   help="use 20000 permutations and 500 tests per point")
    p.add_argument("--plot", action="store_true",
                   help="also render a PNG figure next to the CSV")
    p.add_argument("--append", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(handler=cmd_power)

    p = sub.add_parser("benchmark", help="dispersion vs mean-based cost table")
    p.add_argument("--sizes", default="10,20,40,80")
    p.add_argument("--np", type=int, default=200, dest="n_permutations")
    p.add_argument("--enumerate-mean-up-to", type=int, default=12)
    p.add_argument("--out", default=None, help="write CSV here as well")
    p.set_defaults(handler=cmd_benchmark)

    return parser


def _parse_weights(text: str):
    if text in ("proportional", "equal"):
        return text
    return [float(v) for v in text.split(",")]


def cmd_simulate(args) -> int:
    cohort = make_cohort(
        args.regime,
        DeformationSpec(args.deform, args.gamma),
        n_per_group=args.n,
        noise=WishartNoise(df=args.df, seed=args.seed),
    )
    io.ensure_parent(args.out)
    io.write_cohort_csv(args.out, cohort)
    print(f"wrote {cohort.n} tensors to {args.out}")
    return 0


def cmd_similarity_matrix(args) -> int:
    tensors = io.read_tensors_csv(args.input)
    matrix = similarity_matrix(tensors, Measure(args.measure, args.k0))
    io.ensure_parent(args.out)
    io.write_matrix_csv(args.out, matrix)
    print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {args.out}")
    return 0


def cmd_mean(args) -> int:
    tensors = io.read_tensors_csv(args.input)
    mean = mean_by_kind(tensors, args.kind)
    row = io.format_tensor_row(mean)
    if args.out:
        io.ensure_parent(args.out)
        io.write_tensor_csv(args.out, [mean])
    else:
        print(row)
    return 0


def cmd_test(args) -> int:
    cohort = io.read_cohort_csv(args.input)
    measure = Measure(args.measure, args.k0)
    scheme = (
        FullEnumeration()
        if args.enumerate
        else MonteCarlo(args.n_permutations, seed=args.seed)
    )
    result = mrpp_test(
        cohort, measure, weights=_parse_weights(args.weights), scheme=scheme
    )
    payload = result.to_dict()
    payload["settings"] = {
        "input": args.input,
        "measure": measure.name,
        "k0": args.k0,
        "weights": args.weights,
        "seed": args.seed,
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_mtest(args) -> int:
    cohort = io.read_cohort_csv(args.input)
    report = multivariate_test(
        cohort,
        parametrization=args.parametrization,
        combiner=args.combiner,
        scheme=MonteCarlo(args.n_permutations, seed=args.seed),
    )
    payload = report.to_dict()
    payload["settings"] = {"input": args.input, "seed": args.seed}
    print(json.dumps(payload, indent=2))
    return 0


def cmd_power(args) -> int:
    config = StudyConfig.from_json(Path(args.config).read_text())
    if args.paper_scale:
        config = config.paper_scale()
    progress = None if args.quiet else lambda msg: print(msg, file=sys.stderr)
    try:
        curve = run_power_study(config, progress=progress)
    except StudyInterrupted as stop:
        if stop.partial.points:
            io.ensure_parent(args.out)
            stop.partial.write_csv(args.out, append=args.append)
            print(f"interrupted; flushed {len(stop.partial.points)} points to {args.out}",
                  file=sys.stderr)
        return 130
    io.ensure_parent(args.out)
    curve.write_csv(args.out, append=args.append)
    print(f"wrote {len(curve.points)} points to {args.out}")
    if args.plot:
        from .plots import plot_power_curves

        fig_path = Path(args.out).with_suffix(".png")
        plot_power_curves(curve, fig_path)
        print(f"wrote figure to {fig_path}")
    return 0


def cmd_benchmark(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(","))
    rows = benchmark_costs(
        sizes=sizes,
        n_permutations=args.n_permutations,
        enumerate_mean_up_to=args.enumerate_mean_up_to,
    )
    header = (
        f"{'N':>4} {'assignments':>12} {'pair evals':>10} "
        f"{'mrpp [s]':>10} {'mean-based [s]':>14}"
    )
    print(header)
    for r in rows:
        mean_s = f"{r.mean_based_seconds:.4f}" if r.mean_based_seconds else "(skipped)"
        print(
            f"{r.n:>4} {r.n_assignments:>12} {r.similarity_evaluations:>10} "
            f"{r.mrpp_seconds:>10.4f} {mean_s:>14}"
        )
    if args.out:
        io.ensure_parent(args.out)
        write_benchmark_csv(args.out, rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
