import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decspray.code import degree
from decspray.errors import InvalidGrid
from decspray.perimetric import (
    PERIMETRIC_COLUMNS,
    GridSpec,
    Placement,
    hop_cost,
    layout,
    perimeter,
    perimetric_rows,
    run_perimetric,
    total_hops,
)
from decspray.sim import TrialConfig, aggregate, clopper_pearson, run_trials


def test_three_by_three_grid():
    spec = GridSpec(side=3, ratio=0.10)
    assert spec.n == 8 and spec.k == 1 and spec.N == 9
    pl = layout(spec)
    assert pl.data_positions == ((1, 1),)
    assert len(set(pl.storage_positions)) == 8


def test_side_twenty_ten_percent():
    spec = GridSpec(side=20, ratio=0.10)
    assert (spec.N, spec.n, spec.k) == (400, 76, 8)


def test_k_rounds_half_up():
    assert GridSpec(side=5, ratio=0.3125).k == 5  # 16 * 0.3125 = 5
    assert GridSpec(side=5, ratio=0.28125).k == 5  # 4.5 -> 5
    assert GridSpec(side=5, ratio=0.15625).k == 3  # 2.5 -> 3, not 2


@pytest.mark.parametrize("side", [3, 4, 7, 20])
def test_perimeter_geometry(side):
    pts = perimeter(side)
    assert len(pts) == len(set(pts)) == 4 * (side - 1)
    assert pts[0] == (0, 0)
    m = side - 1
    assert all(min(x, y) == 0 or max(x, y) == m for x, y in pts)
    # consecutive points (cyclically) are lattice neighbours, clockwise walk
    for a, b in zip(pts, pts[1:] + pts[:1]):
        assert hop_cost(a, b) == 1
    assert pts[1] == (0, 1)


def test_layout_is_deterministic_and_interior():
    spec = GridSpec(side=40, ratio=0.33, seed=12)
    a, b = layout(spec), layout(spec)
    assert a == b
    assert len(set(a.data_positions)) == spec.k
    assert all(0 < x < 39 and 0 < y < 39 for x, y in a.data_positions)
    assert layout(GridSpec(side=40, ratio=0.33, seed=13)) != a


@pytest.mark.parametrize(
    "kwargs",
    [dict(side=2), dict(side=1), dict(side=10, ratio=0.99), dict(side=10, ratio=0.0), dict(side=3, ratio=0.3)],
)
def test_invalid_grids(kwargs):
    with pytest.raises(InvalidGrid):
        GridSpec(**kwargs)


def test_hop_cost_examples():
    assert hop_cost((3, 4), (3, 5)) == 1
    assert hop_cost((0, 0), (19, 19)) == 2 * 19
    assert hop_cost((5, 5), (5, 5)) == 0


def test_hop_cost_metric_axioms():
    rng = np.random.default_rng(0)
    pts = [tuple(map(int, p)) for p in rng.integers(0, 80, size=(30_000, 2))]
    for a, b, c in zip(pts[0::3], pts[1::3], pts[2::3]):
        assert hop_cost(a, b) == hop_cost(b, a)
        assert hop_cost(a, c) <= hop_cost(a, b) + hop_cost(b, c)
        assert (hop_cost(a, b) == 0) == (a == b)


def _naive_hops(placement, draws):
    return sum(
        hop_cost(src, placement.storage_positions[int(j)])
        for src, row in zip(placement.data_positions, draws)
        for j in row
    )


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 30), st.integers(0, 2**32))
def test_total_hops_matches_naive_sum_and_is_relabeling_invariant(side, seed):
    spec = GridSpec(side=side, ratio=0.2, seed=seed)
    pl = layout(spec)
    rng = np.random.default_rng(seed)
    draws = [rng.integers(0, spec.n, size=5) for _ in range(spec.k)]
    base = total_hops(pl, draws)
    assert base == _naive_hops(pl, draws)
    perm = rng.permutation(spec.n)
    relabeled = [None] * spec.n
    for j, p in enumerate(perm):
        relabeled[p] = pl.storage_positions[j]
    pl2 = Placement(tuple(relabeled), pl.data_positions)
    assert total_hops(pl2, [perm[d] for d in draws]) == base


@pytest.mark.parametrize("side,ratio", [(10, 0.1), (20, 0.33), (40, 0.1)])
def test_cost_report_counts(side, ratio):
    spec = GridSpec(side=side, ratio=ratio, seed=5)
    report, result, params = run_perimetric(spec)
    d = degree(spec.k, 5 * spec.n / spec.k)
    assert params.d == d
    assert report.packets_prerouted == spec.k * d
    assert report.mean_store == pytest.approx(spec.k * d / spec.n, rel=1e-12)
    assert report.total_hops >= report.packets_prerouted
    assert report.hops_per_node == report.total_hops / spec.N
    assert result.rank <= spec.k


def test_decodability_matches_plain_sim():
    # geometry changes cost, never code structure
    side, ratio, trials = 20, 0.33, 150
    spec0 = GridSpec(side=side, ratio=ratio)
    c = 4.0  # mid-range degree so both failure rates sit well inside (0, 1)
    rows = perimetric_rows([side], [ratio], trials, master_seed=3, c=c, field="gf256", workers=1)
    geo_fail = sum(1 - r["decode_ok"] for r in rows)
    agg = aggregate(run_trials(TrialConfig(k=spec0.k, n=spec0.n, c=c, field="gf256", trials=trials, master_seed=3), 1))
    a, b = clopper_pearson(geo_fail, trials), agg.ci
    assert 0 < geo_fail < trials
    assert a[0] <= b[1] and b[0] <= a[1]


def test_rows_schema_and_determinism():
    rows = perimetric_rows([10], [0.1, 0.33], 3, master_seed=1, workers=1)
    assert len(rows) == 6
    assert all(tuple(r) == PERIMETRIC_COLUMNS for r in rows)
    assert rows == perimetric_rows([10], [0.1, 0.33], 3, master_seed=1, workers=4)
    assert len({r["seed"] for r in rows}) == 6
