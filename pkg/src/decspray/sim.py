"""Reproducible Monte Carlo harness.

Trial ``t`` of a configuration uses the seed ``mix64(master_seed, t)`` for
everything it draws (graph, coefficients, data, query), so results do not
depend on trial order or on how trials are spread over workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from itertools import combinations
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np
from scipy import stats

from decspray import seeding
from decspray.code import CodeParams, build_code, degree, encode_payloads
from decspray.decode import QuerySelection, SingularReport, extract_submatrix, rank, rank_and_solve
from decspray.errors import InvalidParams
from decspray.field import FieldSpec, get_field
from decspray.matching import SupportGraph, has_perfect_matching

THREADS_ENV = "DECSPRAY_THREADS"

T = TypeVar("T")


@dataclass(frozen=True)
class TrialConfig:
    k: int
    n: int
    c: float
    field: FieldSpec = dc_field(default_factory=lambda: FieldSpec(16))
    trials: int = 1000
    master_seed: int = 0
    payload_len: int = 2
    nonzero_coeffs: bool = False
    degree_override: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "field", get_field(self.field))
        if self.trials < 1:
            raise InvalidParams("trials must be >= 1")
        if self.payload_len < 1:
            raise InvalidParams("payload_len must be >= 1")
        self.code_params(0)  # validates k, n, c

    def trial_seed(self, trial_index: int) -> int:
        return seeding.mix64(self.master_seed, trial_index)

    def code_params(self, trial_index: int) -> CodeParams:
        return CodeParams(
            k=self.k,
            n=self.n,
            c=self.c,
            field=self.field,
            seed=self.trial_seed(trial_index),
            nonzero_coeffs=self.nonzero_coeffs,
            degree_override=self.degree_override,
        )

    @property
    def d(self) -> int:
        return self.degree_override if self.degree_override is not None else degree(self.k, self.c)


@dataclass(frozen=True)
class TrialResult:
    pm_exists: bool
    full_rank: bool
    decode_ok: bool
    rank: int
    covered_storage_nodes: int
    max_load: int
    runtime_s: float = dc_field(default=0.0, compare=False)

    def __post_init__(self):
        # decode_ok => full_rank => pm_exists, on every trial
        if self.decode_ok and not self.full_rank:
            raise AssertionError("decoded without a full-rank G'")
        if self.full_rank and not self.pm_exists:
            raise AssertionError("full numeric rank without a perfect matching")


def evaluate_code(
    params: CodeParams,
    payload_len: int,
    selection: Sequence[int] | None = None,
) -> TrialResult:
    """Build the code for ``params``, encode random data and try one decode."""
    t0 = time.perf_counter()
    graph, gen = build_code(params)
    data = params.field.random(seeding.stream(params.seed, seeding.DATA), (params.k, payload_len))
    payloads = encode_payloads(gen, data)
    if selection is None:
        sel = QuerySelection.random(params.n, params.k, seeding.stream(params.seed, seeding.SELECT))
    else:
        sel = QuerySelection.of(selection, params.n, params.k)
    sub = extract_submatrix(gen, sel)
    pm = has_perfect_matching(SupportGraph.of(sub))
    out = rank_and_solve(sub, payloads[list(sel.indices)])
    if isinstance(out, SingularReport):
        r, ok = out.rank, False
    else:
        r, ok = params.k, bool(np.array_equal(out, data))
    loads = graph.storage_loads()
    return TrialResult(
        pm_exists=pm,
        full_rank=r == params.k,
        decode_ok=ok,
        rank=r,
        covered_storage_nodes=int(np.count_nonzero(loads)),
        max_load=int(loads.max()),
        runtime_s=time.perf_counter() - t0,
    )


def run_trial(cfg: TrialConfig, trial_index: int) -> TrialResult:
    return evaluate_code(cfg.code_params(trial_index), cfg.payload_len)


def worker_count(workers: int | None = None) -> int:
    """Resolve concurrency: explicit value, else $DECSPRAY_THREADS, 0 = auto."""
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def parallel_map(fn: Callable[[int], T], indices: Iterable[int], workers: int | None = None) -> list[T]:
    """``[fn(i) for i in indices]``, possibly concurrent; output order is input order."""
    indices = list(indices)
    workers = worker_count(workers)
    if workers == 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))


def run_trials(cfg: TrialConfig, workers: int | None = None, start: int = 0) -> list[TrialResult]:
    return parallel_map(lambda t: run_trial(cfg, t), range(start, start + cfg.trials), workers)


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for ``successes / trials``."""
    if trials == 0:
        return 0.0, 1.0
    a = 1.0 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(a / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - a / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass(frozen=True)
class AggregateStats:
    trials: int
    failures: int
    pm_failures: int
    pm_trials: int
    cond_singular: int
    mean_max_load: float
    ci: tuple[float, float]
    pm_ci: tuple[float, float]
    cond_ci: tuple[float, float]
    runtime_per_trial_s: float = dc_field(default=0.0, compare=False)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def pm_failure_rate(self) -> float:
        return self.pm_failures / self.trials

    @property
    def conditional_singular_rate(self) -> float:
        """Share of trials with a perfect matching whose G' is still singular."""
        return self.cond_singular / self.pm_trials if self.pm_trials else 0.0


def aggregate(results: Sequence[TrialResult]) -> AggregateStats:
    n = len(results)
    failures = sum(not r.decode_ok for r in results)
    pm_failures = sum(not r.pm_exists for r in results)
    pm_trials = n - pm_failures
    cond = sum(r.pm_exists and not r.full_rank for r in results)
    return AggregateStats(
        trials=n,
        failures=failures,
        pm_failures=pm_failures,
        pm_trials=pm_trials,
        cond_singular=cond,
        mean_max_load=float(np.mean([r.max_load for r in results])) if n else 0.0,
        ci=clopper_pearson(failures, n),
        pm_ci=clopper_pearson(pm_failures, n),
        cond_ci=clopper_pearson(cond, pm_trials),
        runtime_per_trial_s=float(np.mean([r.runtime_s for r in results])) if n else 0.0,
    )


def estimate_failure(cfg: TrialConfig, trials: int | None = None, workers: int | None = None) -> AggregateStats:
    if trials is not None:
        cfg = replace(cfg, trials=trials)
    if cfg.trials < 100:
        raise InvalidParams("estimate_failure needs at least 100 trials")
    return aggregate(run_trials(cfg, workers))


def conditioned_singular_rate(
    cfg: TrialConfig, target: int, workers: int | None = None, batch: int = 1000
) -> tuple[int, int]:
    """Run trials until ``target`` of them have a perfect matching.

    Returns ``(singular among them, target)``.
    """
    singular = 0
    collected = 0
    start = 0
    while collected < target:
        part = replace(cfg, trials=batch)
        for r in run_trials(part, workers, start=start):
            if r.pm_exists and collected < target:
                collected += 1
                singular += not r.full_rank
        start += batch
    return singular, collected


def exhaustive_subsets(cfg: TrialConfig, trial_index: int) -> tuple[int, int]:
    """Check every k-subset of storage nodes for one code (k <= 6).

    Returns ``(number of subsets, number with singular G')``.
    """
    if cfg.k > 6:
        raise InvalidParams("exhaustive mode is limited to k <= 6")
    params = cfg.code_params(trial_index)
    _, gen = build_code(params)
    total = singular = 0
    for subset in combinations(range(cfg.n), cfg.k):
        total += 1
        singular += rank(extract_submatrix(gen, QuerySelection(subset))) < cfg.k
    return total, singular


# -- balls into bins ------------------------------------------------------


def coverage_trial(bins: int, rng: np.random.Generator) -> int:
    """Uniform draws with replacement until every one of ``bins`` is hit."""
    if bins < 1:
        raise InvalidParams("need at least one bin")
    seen = np.zeros(bins, dtype=bool)
    remaining = bins
    drawn = 0
    chunk = max(64, 2 * bins)
    while True:
        draws = rng.integers(0, bins, size=chunk)
        uniq, first = np.unique(draws, return_index=True)
        fresh = ~seen[uniq]
        if fresh.sum() >= remaining:
            return drawn + int(first[fresh].max()) + 1
        seen[uniq] = True
        remaining -= int(fresh.sum())
        drawn += chunk


def coupon_expectation(bins: int) -> float:
    """Exact mean of the coupon-collector time, ``m * H_m``."""
    return bins * float(sum(1.0 / i for i in range(1, bins + 1)))


def max_load_trial(balls: int, bins: int, rng: np.random.Generator) -> int:
    if bins < 1 or balls < 0:
        raise InvalidParams("need bins >= 1 and balls >= 0")
    if balls == 0:
        return 0
    return int(np.bincount(rng.integers(0, bins, size=balls), minlength=bins).max())


def converse_experiment(
    k: int,
    n: int,
    d_const: int,
    trials: int,
    master_seed: int = 0,
    field: FieldSpec | str = "gf65536",
    workers: int | None = None,
) -> AggregateStats:
    """Decode failure statistics with the per-node degree pinned to ``d_const``."""
    cfg = TrialConfig(
        k=k, n=n, c=1.0, field=field, trials=trials, master_seed=master_seed, degree_override=d_const
    )
    return aggregate(run_trials(cfg, workers))


# -- CSV ------------------------------------------------------------------

SIM_COLUMNS = (
    "k", "n", "c", "q", "trials", "failures", "pm_failures", "cond_singular",
    "ci_low", "ci_high", "mean_max_load", "seed",
)  # fmt: skip


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 10))
    return str(x)


def sim_row(cfg: TrialConfig, agg: AggregateStats) -> dict:
    return {
        "k": cfg.k,
        "n": cfg.n,
        "c": float(cfg.c),
        "q": cfg.field.order,
        "trials": agg.trials,
        "failures": agg.failures,
        "pm_failures": agg.pm_failures,
        "cond_singular": agg.cond_singular,
        "ci_low": agg.ci[0],
        "ci_high": agg.ci[1],
        "mean_max_load": agg.mean_max_load,
        "seed": cfg.master_seed,
    }


def write_csv(rows: Iterable[dict], columns: Sequence[str], header: Sequence[str] = ()) -> str:
    """Render rows as CSV text; ``header`` lines are emitted as ``# ...`` comments."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)
