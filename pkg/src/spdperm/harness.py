"""Power-study driver: repeated synthetic tests across deformation grids.

For every gamma on the grid and every test variant (univariate measures,
multivariate parametrizations and their per-variable partial tests), the
study generates independent cohorts from derived seeds, runs the test and
reports the rejection rate at level alpha. All variants at a fixed
(gamma, repetition) share the same cohort and the same permutation draws,
so cross-variant comparisons are paired and the whole study is
reproducible bit-for-bit from (config, seed).
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .permtest import (
    FullEnumeration,
    MonteCarlo,
    draw_labelings,
    mean_based_test,
    mrpp_test,
    n_assignments,
)
from .multivariate import multivariate_test, variable_names
from .similarity import Measure, similarity_matrix
from .synth import DeformationSpec, WishartNoise, make_cohort

DEFAULT_GAMMAS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class StudyConfig:
    """Everything a power study needs; JSON round-trips field-for-field.

    Desk-scale defaults (n_permutations=2000, n_tests=200) keep runtimes
    in CI territory; ``paper_scale()`` restores the full protocol
    (20000 permutations, 500 tests per point). The default Wishart df of
    40 is calibrated so the expected qualitative power shapes emerge at
    desk scale (higher df means less noise).
    """

    regime: str = "low"
    deformation: str = "co"
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    measures: tuple[str, ...] = ("euclidean", "logeuclidean", "sq", "fa")
    parametrizations: tuple[str, ...] = ()
    combiner: str = "fisher"
    alpha: float = 0.05
    n_per_group: int = 10
    n_permutations: int = 2000
    n_tests: int = 200
    wishart_df: int = 40
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.n_tests < 1:
            raise ValueError("n_tests must be >= 1")
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ValueError("every gamma must lie in [0, 1]")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "measures", tuple(self.measures))
        object.__setattr__(self, "parametrizations", tuple(self.parametrizations))

    def paper_scale(self) -> "StudyConfig":
        return dataclasses.replace(self, n_permutations=20000, n_tests=500)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StudyConfig":
        data = json.loads(text)
        for key in ("gammas", "measures", "parametrizations"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class PowerPoint:
    """Rejection rate of one variant at one gamma."""

    gamma: float
    variant: str
    power: float
    stderr: float
    n_tests: int
    n_permutations: int


@dataclass(frozen=True)
class PowerCurve:
    """Study output: one PowerPoint per (gamma, variant)."""

    config: StudyConfig
    points: tuple[PowerPoint, ...]

    def power(self, gamma: float, variant: str) -> float:
        for p in self.points:
            if p.variant == variant and math.isclose(p.gamma, gamma):
                return p.power
        raise KeyError(f"no point for gamma={gamma!r}, variant={variant!r}")

    def stderr(self, gamma: float, variant: str) -> float:
        for p in self.points:
            if p.variant == variant and math.isclose(p.gamma, gamma):
                return p.stderr
        raise KeyError(f"no point for gamma={gamma!r}, variant={variant!r}")

    @property
    def variants(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for p in self.points:
            seen.setdefault(p.variant, None)
        return tuple(seen)

    def write_csv(self, path, append: bool = False) -> None:
        """Write points as CSV with a config comment, fixed formatting.

        The leading ``# config ...`` comment makes the file
        self-describing; appending re-emits the comment and header so a
        concatenated file remains parseable section by section.
        """
        mode = "a" if append else "w"
        with open(path, mode, newline="") as fh:
            fh.write(f"# config {self.config.to_json()}\n")
            fh.write("gamma,variant,power,stderr,n_tests,n_permutations\n")
            for p in self.points:
                fh.write(
                    f"{p.gamma:.6g},{p.variant},{p.power:.6f},{p.stderr:.6f},"
                    f"{p.n_tests},{p.n_permutations}\n"
                )


def _variant_list(config: StudyConfig) -> list[str]:
    names = [Measure.parse(m).name for m in config.measures]
    for par in config.parametrizations:
        names.append(f"{par}:{config.combiner}")
        names.extend(f"{par}:{v}" for v in variable_names(par))
    return names


class StudyInterrupted(RuntimeError):
    """A power study stopped early; carries the completed points."""

    def __init__(self, message: str, partial: "PowerCurve"):
        super().__init__(message)
        self.partial = partial


def run_power_study(
    config: StudyConfig,
    progress: Callable[[str], None] | None = None,
) -> PowerCurve:
    """Run the configured study and return its power curve.

    Seeds for cohort noise and for the shared permutation draws are
    derived from (config.seed, gamma index, repetition index), so results
    do not depend on evaluation order and any (gamma, repetition) unit can
    be recomputed in isolation. If the run is interrupted, the points of
    all completed gamma rows travel on the raised
    :class:`StudyInterrupted` so callers can flush them.
    """
    measures = [Measure.parse(m) for m in config.measures]
    variants = _variant_list(config)
    points: list[PowerPoint] = []
    try:
        _run_points(config, measures, variants, points, progress)
    except KeyboardInterrupt as exc:
        raise StudyInterrupted(
            f"study interrupted after {len(points)} completed points",
            PowerCurve(config=config, points=tuple(points)),
        ) from exc
    return PowerCurve(config=config, points=tuple(points))


def _run_points(config, measures, variants, points, progress) -> None:
    for gi, gamma in enumerate(config.gammas):
        spec = DeformationSpec(config.deformation, gamma)
        hits = {v: 0 for v in variants}
        for t in range(config.n_tests):
            root = np.random.SeedSequence((config.seed, gi, t))
            noise_seed, perm_seed = (int(s) for s in root.generate_state(2, np.uint64))
            cohort = make_cohort(
                config.regime,
                spec,
                n_per_group=config.n_per_group,
                noise=WishartNoise(df=config.wishart_df, seed=noise_seed),
            )
            scheme = MonteCarlo(config.n_permutations, seed=perm_seed)
            shared_draws, _ = draw_labelings(scheme, cohort.labels)
            for m in measures:
                result = mrpp_test(cohort, m, scheme=scheme, labels_matrix=shared_draws)
                hits[m.name] += result.p_value <= config.alpha
            for par in config.parametrizations:
                report = multivariate_test(
                    cohort,
                    parametrization=par,
                    combiner=config.combiner,
                    scheme=scheme,
                    labels_matrix=shared_draws,
                )
                hits[f"{par}:{config.combiner}"] += report.combined_p <= config.alpha
                for name, xi in zip(report.variable_names, report.marginal_p):
                    hits[f"{par}:{name}"] += xi <= config.alpha
        for v in variants:
            power = hits[v] / config.n_tests
            points.append(
                PowerPoint(
                    gamma=gamma,
                    variant=v,
                    power=power,
                    stderr=math.sqrt(power * (1.0 - power) / config.n_tests),
                    n_tests=config.n_tests,
                    n_permutations=config.n_permutations,
                )
            )
        if progress is not None:
            progress(f"gamma={gamma:g} done ({gi + 1}/{len(config.gammas)})")


# ---------------------------------------------------------------------------
# Cost benchmark: dispersion-based vs mean-based scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRow:
    n: int
    n_assignments: int
    similarity_evaluations: int
    mrpp_seconds: float
    mean_based_seconds: float | None
    mean_based_enumerated: bool


class _CountingMeasure:
    """Wraps a measure's pair function with an evaluation counter."""

    def __init__(self, measure: Measure):
        self.measure = measure
        self.calls = 0

    def __call__(self, a, b):
        self.calls += 1
        return self.measure.pair(a, b)


def benchmark_costs(
    sizes: Sequence[int] = (10, 20, 40, 80),
    measure: Measure = Measure("logeuclidean"),
    mean_kind: str = "le",
    n_permutations: int = 200,
    enumerate_mean_up_to: int = 12,
    regime: str = "low",
    seed: int = 0,
) -> list[BenchmarkRow]:
    """Empirical cost table for the two test families over cohort sizes.

    The dispersion test is timed at every size and its similarity
    evaluations are counted (it needs exactly N(N-1)/2). The mean-based
    test is run under full enumeration only up to ``enumerate_mean_up_to``
    samples; beyond that only the assignment count is reported, which is
    the point of the comparison.
    """
    rows: list[BenchmarkRow] = []
    pair_of_mean = {"arithmetic": "euclidean", "le": "logeuclidean", "sq": "sq"}
    for n in sizes:
        if n % 2 != 0 or n < 4:
            raise ValueError(f"benchmark sizes must be even and >= 4, got {n}")
        half = n // 2
        cohort = make_cohort(
            regime,
            DeformationSpec("im", 0.3),
            n_per_group=half,
            noise=WishartNoise(df=10, seed=seed + n),
        )
        counter = _CountingMeasure(measure)
        start = time.perf_counter()
        similarity_matrix(cohort.tensors, counter)
        mrpp_test(cohort, measure, scheme=MonteCarlo(n_permutations, seed=seed))
        mrpp_seconds = time.perf_counter() - start

        m_count = n_assignments([half, half])
        mean_seconds = None
        enumerated = n <= enumerate_mean_up_to
        if enumerated:
            start = time.perf_counter()
            mean_based_test(
                cohort,
                mean_kind,
                Measure(pair_of_mean[mean_kind]),
                scheme=FullEnumeration(cap=max(200_000, m_count)),
            )
            mean_seconds = time.perf_counter() - start
        rows.append(
            BenchmarkRow(
                n=n,
                n_assignments=m_count,
                similarity_evaluations=counter.calls,
                mrpp_seconds=mrpp_seconds,
                mean_based_seconds=mean_seconds,
                mean_based_enumerated=enumerated,
            )
        )
    return rows


def evaluation_exponent(rows: Sequence[BenchmarkRow]) -> float:
    """Log-log slope of similarity evaluations versus cohort size."""
    n = np.array([r.n for r in rows], dtype=float)
    e = np.array([r.similarity_evaluations for r in rows], dtype=float)
    return float(np.polyfit(np.log(n), np.log(e), 1)[0])


def write_benchmark_csv(path, rows: Sequence[BenchmarkRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(
            "n,n_assignments,similarity_evaluations,mrpp_seconds,"
            "mean_based_seconds,mean_based_enumerated\n"
        )
        for r in rows:
            mean_s = "" if r.mean_based_seconds is None else f"{r.mean_based_seconds:.6f}"
            fh.write(
                f"{r.n},{r.n_assignments},{r.similarity_evaluations},"
                f"{r.mrpp_seconds:.6f},{mean_s},{r.mean_based_enumerated}\n"
            )
