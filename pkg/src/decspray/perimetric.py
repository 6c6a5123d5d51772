"""Perimetric storage on an s x s sensor grid.

Storage nodes sit on the boundary of the grid (``n = 4(s - 1)`` lattice
points), data nodes on uniformly chosen interior points.  Packets travel by
greedy geographic routing, which on the lattice costs the Manhattan
distance in 1-hop transmissions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from decspray import seeding
from decspray.code import CodeParams, build_graph
from decspray.errors import InvalidGrid
from decspray.field import FieldSpec, get_field
from decspray.sim import TrialResult, evaluate_code, parallel_map

Point = tuple[int, int]


@dataclass(frozen=True)
class GridSpec:
    side: int
    ratio: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.side < 3:
            raise InvalidGrid(f"grid side must be >= 3, got {self.side}")
        if not 0 < self.ratio < 1:
            raise InvalidGrid(f"k/n ratio must lie in (0, 1), got {self.ratio}")
        k = self.k
        if not 1 <= k < self.n:
            raise InvalidGrid(f"k={k} must satisfy 1 <= k < n={self.n}")
        if k > (self.side - 2) ** 2:
            raise InvalidGrid(f"k={k} data nodes do not fit in {(self.side - 2) ** 2} interior points")

    @property
    def N(self) -> int:
        return self.side * self.side

    @property
    def n(self) -> int:
        return 4 * (self.side - 1)

    @property
    def k(self) -> int:
        # round half up, not banker's rounding
        return math.floor(self.ratio * self.n + 0.5)

    @property
    def rho(self) -> float:
        """Data nodes per unit of grid side, ``k / sqrt(N)``."""
        return self.k / self.side


@dataclass(frozen=True)
class Placement:
    storage_positions: tuple[Point, ...]
    data_positions: tuple[Point, ...]


def perimeter(side: int) -> list[Point]:
    """Boundary lattice points clockwise from (0, 0): up, right, down, left."""
    m = side - 1
    pts = [(0, y) for y in range(m)]
    pts += [(x, m) for x in range(m)]
    pts += [(m, y) for y in range(m, 0, -1)]
    pts += [(x, 0) for x in range(m, 0, -1)]
    return pts


def layout(spec: GridSpec) -> Placement:
    rng = seeding.stream(spec.seed, seeding.PLACE)
    inner = spec.side - 2
    picks = rng.choice(inner * inner, size=spec.k, replace=False)
    data = tuple((1 + int(p) // inner, 1 + int(p) % inner) for p in picks)
    return Placement(storage_positions=tuple(perimeter(spec.side)), data_positions=data)


def hop_cost(a: Point, b: Point) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def total_hops(placement: Placement, draws: Sequence[np.ndarray]) -> int:
    """Hops summed over every pre-routed packet, duplicates included."""
    store = np.array(placement.storage_positions, dtype=np.int64)
    total = 0
    for src, targets in zip(placement.data_positions, draws):
        dst = store[targets]
        total += int(np.abs(dst[:, 0] - src[0]).sum() + np.abs(dst[:, 1] - src[1]).sum())
    return total


@dataclass(frozen=True)
class CostReport:
    total_hops: int
    hops_per_node: float
    packets_prerouted: int
    mean_store: float
    sd_store: float

    def __post_init__(self):
        if self.total_hops < self.packets_prerouted:
            raise AssertionError("every pre-routed packet needs at least one hop")


def run_perimetric(
    spec: GridSpec,
    c: float | None = None,
    field: FieldSpec | str = "gf65536",
    payload_len: int = 2,
) -> tuple[CostReport, TrialResult, CodeParams]:
    """Spray the code over the grid, account the hops, try one decode.

    ``c`` defaults to ``5 n / k``, the large-k limit of ``sufficient_c`` at
    this grid's expansion ratio.
    """
    placement = layout(spec)
    if c is None:
        c = 5.0 * spec.n / spec.k
    params = CodeParams(
        k=spec.k, n=spec.n, c=c, field=get_field(field), seed=seeding.derive(spec.seed, seeding.TRIAL)
    )
    graph = build_graph(params)
    hops = total_hops(placement, graph.draws)
    received = graph.received_packets()
    report = CostReport(
        total_hops=hops,
        hops_per_node=hops / spec.N,
        packets_prerouted=int(sum(len(d) for d in graph.draws)),
        mean_store=float(received.mean()),
        sd_store=float(received.std()),
    )
    return report, evaluate_code(params, payload_len), params


PERIMETRIC_COLUMNS = (
    "N", "s", "n", "k", "c", "q", "total_hops", "hops_per_node", "packets_prerouted",
    "mean_store", "sd_store", "decode_ok", "seed",
)  # fmt: skip


def perimetric_rows(
    sides: Sequence[int],
    ratios: Sequence[float],
    trials: int,
    master_seed: int = 0,
    c: float | None = None,
    field: FieldSpec | str = "gf65536",
    workers: int | None = None,
) -> list[dict]:
    """One CSV row per (side, ratio, trial); trial seeds derive from the master seed."""
    jobs = [(s, r, t) for s in sides for r in ratios for t in range(trials)]

    def one(j: int) -> dict:
        s, r, t = jobs[j]
        seed = seeding.derive(master_seed, s, int(round(r * 1e6)), t)
        spec = GridSpec(side=s, ratio=r, seed=seed)
        report, result, params = run_perimetric(spec, c=c, field=field)
        return {
            "N": spec.N,
            "s": s,
            "n": spec.n,
            "k": spec.k,
            "c": float(params.c),
            "q": params.field.order,
            "total_hops": report.total_hops,
            "hops_per_node": report.hops_per_node,
            "packets_prerouted": report.packets_prerouted,
            "mean_store": report.mean_store,
            "sd_store": report.sd_store,
            "decode_ok": int(result.decode_ok),
            "seed": seed,
        }

    return parallel_map(one, range(len(jobs)), workers)
