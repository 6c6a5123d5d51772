"""Data-collector side: pick k storage nodes, form G', and solve for the data.

With data rows ``D`` (k x L) and the k selected payloads ``S'`` (k x L) the
system is ``G'^T D = S'``.  Two solvers are provided: Gaussian
elimination (the reference) and Wiedemann's randomized Krylov method, which
only needs sparse matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from decspray.code import SparseGenerator, StoragePacket
from decspray.errors import BadSelection, LengthMismatch, NotDetermined
from decspray.field import FieldSpec


@dataclass(frozen=True)
class QuerySelection:
    indices: tuple[int, ...]

    @classmethod
    def of(cls, indices, n: int, k: int | None = None) -> "QuerySelection":
        idx = tuple(int(i) for i in indices)
        if k is not None and len(idx) != k:
            raise BadSelection(f"need exactly k={k} storage nodes, got {len(idx)}")
        if len(set(idx)) != len(idx):
            raise BadSelection(f"duplicate storage index in {idx}")
        if any(not 0 <= i < n for i in idx):
            raise BadSelection(f"storage index out of range [0, {n})")
        return cls(idx)

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "QuerySelection":
        return cls(tuple(int(i) for i in rng.choice(n, size=k, replace=False)))


@dataclass(frozen=True)
class Submatrix:
    """k x k matrix G'; column l is generator column ``indices[l]``.

    ``support`` marks structural positions (edges of the bipartite graph),
    which may carry a zero coefficient.
    """

    entries: np.ndarray
    support: np.ndarray
    field: FieldSpec

    @property
    def k(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SingularReport:
    """Decoding impossible: G' is singular.

    ``rank`` is None when the solver certified singularity without
    computing the rank (Wiedemann).
    """

    rank: int | None
    k: int


def extract_submatrix(gen: SparseGenerator, sel: QuerySelection) -> Submatrix:
    sel = QuerySelection.of(sel.indices, gen.n, gen.k)
    pos = np.full(gen.n, -1, dtype=np.int64)
    pos[list(sel.indices)] = np.arange(gen.k)
    entries = np.zeros((gen.k, gen.k), dtype=np.int64)
    support = np.zeros((gen.k, gen.k), dtype=bool)
    for i, (idx, coef) in enumerate(gen.rows):
        p = pos[idx]
        keep = p >= 0
        entries[i, p[keep]] = coef[keep]
        support[i, p[keep]] = True
    return Submatrix(entries=entries, support=support, field=gen.field)


def submatrix_from_packets(packets: Sequence[StoragePacket]) -> Submatrix:
    """G' assembled from the coefficient lists carried by the packets."""
    k = len(packets)
    field = packets[0].field
    entries = np.zeros((k, k), dtype=np.int64)
    support = np.zeros((k, k), dtype=bool)
    for col, pkt in enumerate(packets):
        for i, f in pkt.coeffs:
            entries[i, col] = f
            support[i, col] = True
    return Submatrix(entries=entries, support=support, field=field)


def _eliminate(field: FieldSpec, a: np.ndarray, b: np.ndarray | None):
    """Row-reduce ``[a | b]``; return (reduced copy, pivot columns).

    Forward elimination touches only rows below the pivot and columns from
    the pivot on.  Pivot choice is the first nonzero at or below the
    current row.  Pivot rows are normalized to a leading 1.
    """
    rows, cols = a.shape
    m = a if b is None else np.concatenate([a, b], axis=1)
    m = np.array(m, dtype=np.int64, copy=True)
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, col])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r, col:] = field.scale(m[r, col:], field.inv(int(m[r, col])))
        below = r + 1 + np.flatnonzero(m[r + 1 :, col])
        if below.size:
            m[below, col:] ^= field.mul_array(m[below, col][:, None], m[r, col:][None, :])
        pivots.append(col)
        r += 1
    return m, pivots


def _back_substitute(field: FieldSpec, m: np.ndarray, k: int) -> np.ndarray:
    """Solve the unit upper-triangular system left by :func:`_eliminate`."""
    x = m[:k, k:].copy()
    for r in range(k - 1, -1, -1):
        above = np.flatnonzero(m[:r, r])
        if above.size:
            x[above] ^= field.mul_array(m[above, r][:, None], x[r][None, :])
    return x


def rank(sub: Submatrix) -> int:
    _, pivots = _eliminate(sub.field, sub.entries, None)
    return len(pivots)


def _received(received, k: int) -> np.ndarray:
    rows = [np.asarray(r, dtype=np.int64) for r in received]
    if len(rows) != k:
        raise LengthMismatch(f"expected {k} received payloads, got {len(rows)}")
    if len({len(r) for r in rows}) > 1:
        raise LengthMismatch("received payloads have differing lengths")
    return np.array(rows, dtype=np.int64).reshape(k, -1)


def rank_and_solve(sub: Submatrix, received) -> np.ndarray | SingularReport:
    """Solve ``m G' = s'`` symbol-wise; returns the k x L data matrix."""
    s = _received(received, sub.k)
    reduced, pivots = _eliminate(sub.field, sub.entries.T, s)
    if len(pivots) < sub.k:
        return SingularReport(rank=len(pivots), k=sub.k)
    data = _back_substitute(sub.field, reduced, sub.k)
    if not verify(sub, data, s):  # pragma: no cover - exact arithmetic
        raise AssertionError("elimination produced a non-solution")
    return data


def verify(sub: Submatrix, data, received) -> bool:
    """True when ``data`` re-multiplies to ``received`` exactly."""
    data = np.asarray(data, dtype=np.int64).reshape(sub.k, -1)
    received = np.asarray(received, dtype=np.int64).reshape(sub.k, -1)
    return np.array_equal(sub.field.matmul(sub.entries.T, data), received)


# -- Wiedemann ------------------------------------------------------------


class _CSR:
    """Sparse k x k operator over GF(2^u) for repeated matvecs."""

    def __init__(self, field: FieldSpec, dense: np.ndarray):
        self.field = field
        self.k = dense.shape[0]
        rows, cols = np.nonzero(dense)
        self.rows = rows
        self.cols = cols
        self.vals = dense[rows, cols]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.k, dtype=np.int64)
        if self.vals.size:
            prod = self.field.mul_array(self.vals, x[self.cols])
            np.bitwise_xor.at(out, self.rows, prod)
        return out


def berlekamp_massey(field: FieldSpec, seq: Sequence[int]) -> list[int]:
    """Shortest connection polynomial ``C`` (``C[0] = 1``) generating ``seq``.

    ``sum_i C[i] * seq[t - i] = 0`` for all ``t >= L`` where ``L = len(C) - 1``.
    """
    conn = [1]
    prev = [1]
    length = 0
    shift = 1
    prev_disc = 1
    for t, s_t in enumerate(seq):
        disc = s_t
        for i in range(1, length + 1):
            if i < len(conn):
                disc ^= field.mul(conn[i], seq[t - i])
        if disc == 0:
            shift += 1
            continue
        coef = field.div(disc, prev_disc)
        new = conn + [0] * max(0, len(prev) + shift - len(conn))
        for i, p in enumerate(prev):
            new[i + shift] ^= field.mul(coef, p)
        if 2 * length <= t:
            prev, prev_disc = conn, disc
            length = t + 1 - length
            shift = 1
        else:
            shift += 1
        conn = new
    conn = conn + [0] * max(0, length + 1 - len(conn))
    return conn[: length + 1]


def _krylov_minpoly(op: _CSR, u: np.ndarray, v: np.ndarray) -> list[int]:
    """Minimal polynomial of ``u^T A^i v`` as coefficients f[0..L] (f[j] of x^j)."""
    field = op.field
    seq = []
    w = v
    for _ in range(2 * op.k):
        seq.append(int(np.bitwise_xor.reduce(field.mul_array(u, w))) if op.k else 0)
        w = op.matvec(w)
    conn = berlekamp_massey(field, seq)
    return conn[::-1]


def _solve_column(op: _CSR, b: np.ndarray, rng, attempts: int):
    """Return (solution, singular_flag); None solution when attempts run out."""
    field = op.field
    x = np.zeros(op.k, dtype=np.int64)
    resid = b.copy()
    for _ in range(attempts):
        if not resid.any():
            return x, False
        u = field.random(rng, op.k)
        f = _krylov_minpoly(op, u, resid)
        if f[0] == 0:
            # x divides the minimal polynomial of A, so A is singular
            return None, True
        # f(A) r = 0  =>  A * (f0^-1 * sum_{j>=1} f_j A^{j-1} r) = r
        acc = np.zeros(op.k, dtype=np.int64)
        w = resid
        for fj in f[1:]:
            if fj:
                acc ^= field.scale(w, fj)
            w = op.matvec(w)
        y = field.scale(acc, field.inv(f[0]))
        x = x ^ y
        resid = b ^ op.matvec(x)
    if not resid.any():
        return x, False
    return None, False


def wiedemann_solve(
    sub: Submatrix,
    received,
    rng: np.random.Generator | None = None,
    attempts: int = 3,
) -> np.ndarray | SingularReport:
    """Randomized sparse solver with the same contract as :func:`rank_and_solve`.

    A singularity probe runs first: a random Krylov sequence whose minimal
    polynomial is divisible by x certifies that G' is singular.  Then each
    payload column is solved by residual-correcting Wiedemann iterations.
    Raises NotDetermined if ``attempts`` projections neither certify
    singularity nor produce a verified solution.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    s = _received(received, sub.k)
    field = sub.field
    op = _CSR(field, sub.entries.T)
    k = sub.k

    for _ in range(attempts):
        f = _krylov_minpoly(op, field.random(rng, k), field.random(rng, k))
        if f[0] == 0:
            return SingularReport(rank=None, k=k)
        if len(f) - 1 == k:
            # minimal polynomial of full degree with f(0) != 0: nonsingular
            break

    out = np.zeros_like(s)
    for col in range(s.shape[1]):
        x, singular = _solve_column(op, s[:, col], rng, attempts)
        if singular:
            return SingularReport(rank=None, k=k)
        if x is None:
            raise NotDetermined(f"no verified solution after {attempts} random projections")
        out[:, col] = x
    if not verify(sub, out, s):
        raise NotDetermined("candidate solution failed re-multiplication")
    return out


def decode_packets(packets: Sequence[StoragePacket]) -> np.ndarray | SingularReport:
    """Recover the k data packets from exactly k storage packets."""
    sub = submatrix_from_packets(packets)
    return rank_and_solve(sub, [p.payload for p in packets])
