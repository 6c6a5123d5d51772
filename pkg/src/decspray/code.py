"""Decentralized code construction and storage-node encoding.

Every data node independently "sprays" its packet: it picks ``d(k)``
storage nodes uniformly with replacement, duplicates are identified, and
each storage node keeps a random linear combination of what it received
together with the coefficients.  Row ``i`` of the generator depends only on
``(seed, i)``, so any row can be regenerated on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from decspray import seeding
from decspray.errors import InvalidAlpha, InvalidParams, LengthMismatch
from decspray.field import FieldSpec, get_field


def degree(k: int, c: float) -> int:
    """Number of pre-routed packets per data node, ``max(1, ceil(c ln k))``."""
    if k < 1 or c <= 0:
        raise InvalidParams(f"degree needs k >= 1 and c > 0, got k={k}, c={c}")
    return max(1, math.ceil(c * math.log(k)))


def sufficient_c(alpha: float) -> float:
    """Degree constant above which the matching failure probability vanishes.

    Returns ``-5 / (2 ln((alpha - 1/2) / alpha))``, which tends to ``5 alpha``.
    """
    if alpha <= 1:
        raise InvalidAlpha(f"alpha = n/k must exceed 1, got {alpha}")
    return -5.0 / (2.0 * math.log((alpha - 0.5) / alpha))


def ceil_log2(k: int) -> int:
    return (k - 1).bit_length()


@dataclass(frozen=True)
class CodeParams:
    k: int
    n: int
    c: float
    field: FieldSpec = dc_field(default_factory=lambda: FieldSpec(16))
    seed: int = 0
    nonzero_coeffs: bool = False
    degree_override: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "field", get_field(self.field))
        if not 1 <= self.k < self.n:
            raise InvalidParams(f"k must be < n (and >= 1), got k={self.k}, n={self.n}")
        if not self.c > 0:
            raise InvalidParams(f"c must be positive, got {self.c}")
        if self.degree_override is not None and self.degree_override < 1:
            raise InvalidParams("degree_override must be >= 1")

    @property
    def alpha(self) -> float:
        return self.n / self.k

    @property
    def d(self) -> int:
        if self.degree_override is not None:
            return self.degree_override
        return degree(self.k, self.c)


@dataclass(frozen=True)
class BipartiteGraph:
    """Data-node neighbourhoods ``N(i)`` plus the raw draws they came from.

    ``draws[i]`` keeps the ``d`` storage indices in draw order (duplicates
    included); ``neighbors[i]`` is the sorted set of distinct ones.
    """

    k: int
    n: int
    neighbors: tuple[np.ndarray, ...]
    draws: tuple[np.ndarray, ...]

    def storage_loads(self) -> np.ndarray:
        """Distinct data nodes attached to each storage node, ``|N(j)|``."""
        if self.k == 0:
            return np.zeros(self.n, dtype=np.int64)
        return np.bincount(np.concatenate(self.neighbors), minlength=self.n)

    def received_packets(self) -> np.ndarray:
        """Pre-routed packets landing on each storage node, duplicates counted."""
        return np.bincount(np.concatenate(self.draws), minlength=self.n)

    def covered(self) -> int:
        return int(np.count_nonzero(self.storage_loads()))


def _row_stream(params: CodeParams, i: int) -> np.random.Generator:
    # one stream per data node: d neighbour draws, then the coefficients
    return seeding.stream(params.seed, seeding.ROW, i)


def draw_row(params: CodeParams, i: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``d`` raw draws of data node ``i`` and their distinct set."""
    raw = _row_stream(params, i).integers(0, params.n, size=params.d, dtype=np.int64)
    return raw, np.unique(raw)


def build_graph(params: CodeParams) -> BipartiteGraph:
    rows = [draw_row(params, i) for i in range(params.k)]
    return BipartiteGraph(
        k=params.k,
        n=params.n,
        neighbors=tuple(r[1] for r in rows),
        draws=tuple(r[0] for r in rows),
    )


@dataclass(frozen=True)
class SparseGenerator:
    """Row-wise sparse k x n generator: ``rows[i] = (storage indices, coeffs)``."""

    k: int
    n: int
    field: FieldSpec
    rows: tuple[tuple[np.ndarray, np.ndarray], ...]

    @property
    def nnz(self) -> int:
        return sum(len(idx) for idx, _ in self.rows)

    def to_dense(self) -> np.ndarray:
        g = np.zeros((self.k, self.n), dtype=np.int64)
        for i, (idx, coef) in enumerate(self.rows):
            g[i, idx] = coef
        return g

    def support(self) -> np.ndarray:
        s = np.zeros((self.k, self.n), dtype=bool)
        for i, (idx, _) in enumerate(self.rows):
            s[i, idx] = True
        return s


def row_coefficients(params: CodeParams, i: int, count: int) -> np.ndarray:
    rng = _row_stream(params, i)
    rng.integers(0, params.n, size=params.d, dtype=np.int64)
    return params.field.random(rng, count, nonzero=params.nonzero_coeffs)


def make_generator(graph: BipartiteGraph, params: CodeParams) -> SparseGenerator:
    """Attach one uniform coefficient to every distinct edge of ``graph``."""
    rows = tuple(
        (idx, row_coefficients(params, i, len(idx))) for i, idx in enumerate(graph.neighbors)
    )
    return SparseGenerator(k=graph.k, n=graph.n, field=params.field, rows=rows)


def generator_from_rows(k, n, field, rows) -> SparseGenerator:
    """Build a generator from explicit ``{storage_index: coeff}`` mappings."""
    field = get_field(field)
    out = []
    for mapping in rows:
        idx = np.array(sorted(mapping), dtype=np.int64)
        coef = np.array([field.check(int(mapping[j])) for j in idx], dtype=np.int64)
        out.append((idx, coef))
    if len(out) != k:
        raise InvalidParams(f"expected {k} rows, got {len(out)}")
    for idx, _ in out:
        if len(idx) and (idx.min() < 0 or idx.max() >= n):
            raise InvalidParams("storage index out of range")
    return SparseGenerator(k=k, n=n, field=field, rows=tuple(out))


def build_code(params: CodeParams) -> tuple[BipartiteGraph, SparseGenerator]:
    """Graph and generator in one pass; same result as build_graph + make_generator."""
    draws, neighbors, rows = [], [], []
    for i in range(params.k):
        rng = _row_stream(params, i)
        raw = rng.integers(0, params.n, size=params.d, dtype=np.int64)
        idx = np.unique(raw)
        draws.append(raw)
        neighbors.append(idx)
        rows.append((idx, params.field.random(rng, len(idx), nonzero=params.nonzero_coeffs)))
    graph = BipartiteGraph(k=params.k, n=params.n, neighbors=tuple(neighbors), draws=tuple(draws))
    return graph, SparseGenerator(k=params.k, n=params.n, field=params.field, rows=tuple(rows))


@dataclass(frozen=True)
class StoragePacket:
    storage_id: int
    coeffs: tuple[tuple[int, int], ...]
    payload: np.ndarray
    k: int
    n: int
    field: FieldSpec

    @property
    def overhead_bits(self) -> int:
        return len(self.coeffs) * (self.field.degree_u + ceil_log2(self.k))

    def __eq__(self, other):
        if not isinstance(other, StoragePacket):
            return NotImplemented
        return (
            self.storage_id == other.storage_id
            and self.coeffs == other.coeffs
            and (self.k, self.n, self.field) == (other.k, other.n, other.field)
            and np.array_equal(self.payload, other.payload)
        )

    __hash__ = None


def as_data_matrix(data, field: FieldSpec) -> np.ndarray:
    rows = [np.asarray(p, dtype=np.int64) for p in data]
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise LengthMismatch(f"data packets have differing lengths {sorted(lengths)}")
    mat = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
    if mat.size and (mat.min() < 0 or mat.max() >= field.order):
        raise InvalidParams(f"data symbols outside {field.name}")
    return mat


def encode_payloads(gen: SparseGenerator, data) -> np.ndarray:
    """Combined payloads ``S_j = sum_{i: j in N(i)} f_ij D_i`` as an n x L array."""
    mat = as_data_matrix(data, gen.field)
    if mat.shape[0] != gen.k:
        raise LengthMismatch(f"expected {gen.k} data packets, got {mat.shape[0]}")
    out = np.zeros((gen.n, mat.shape[1]), dtype=np.int64)
    for i, (idx, coef) in enumerate(gen.rows):
        if len(idx):
            # idx is duplicate-free, so fancy-index XOR is safe
            out[idx] ^= gen.field.mul_array(coef[:, None], mat[i][None, :])
    return out


def encode(gen: SparseGenerator, data) -> list[StoragePacket]:
    payloads = encode_payloads(gen, data)
    per_node: list[list[tuple[int, int]]] = [[] for _ in range(gen.n)]
    for i, (idx, coef) in enumerate(gen.rows):
        for j, f in zip(idx.tolist(), coef.tolist()):
            per_node[j].append((i, f))
    return [
        StoragePacket(
            storage_id=j,
            coeffs=tuple(per_node[j]),
            payload=payloads[j],
            k=gen.k,
            n=gen.n,
            field=gen.field,
        )
        for j in range(gen.n)
    ]
