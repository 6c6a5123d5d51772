"""Structural oracles on the support of G'.

A k x k support pattern has a perfect matching exactly when the symbolic
determinant (one indeterminate per structural position) is not the zero
polynomial (Edmonds).  Given a perfect matching, a uniform random
assignment of the indeterminates vanishes with probability at most k/q
(Schwartz-Zippel).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from decspray.decode import Submatrix, rank
from decspray.errors import NoMatching, TooLarge
from decspray.field import FieldSpec

SYMBOLIC_MAX_K = 8


@dataclass(frozen=True)
class SupportGraph:
    """Boolean k x k adjacency: row = data node, column = selected storage node."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"support graph must be square, got shape {adj.shape}")
        object.__setattr__(self, "adjacency", adj)

    @property
    def k(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def of(cls, sub: Submatrix) -> "SupportGraph":
        return cls(sub.support)

    @classmethod
    def from_bits(cls, bits: int, k: int) -> "SupportGraph":
        """Pattern whose entry (i, j) is bit ``i*k + j`` of ``bits``."""
        flat = [(bits >> b) & 1 for b in range(k * k)]
        return cls(np.array(flat, dtype=bool).reshape(k, k))


def maximum_matching(g: SupportGraph) -> list[int]:
    """Hopcroft-Karp.  Returns ``match[i]`` = matched column of row i or -1."""
    k = g.k
    adj = [np.flatnonzero(row).tolist() for row in g.adjacency]
    match_row = [-1] * k
    match_col = [-1] * k
    inf = k + 1

    while True:
        # BFS layering from free rows
        dist = [inf] * k
        queue = deque()
        for r in range(k):
            if match_row[r] == -1:
                dist[r] = 0
                queue.append(r)
        found = False
        while queue:
            r = queue.popleft()
            for c in adj[r]:
                r2 = match_col[c]
                if r2 == -1:
                    found = True
                elif dist[r2] == inf:
                    dist[r2] = dist[r] + 1
                    queue.append(r2)
        if not found:
            break

        # iterative DFS along the layers
        for root in range(k):
            if match_row[root] != -1:
                continue
            stack = [(root, 0)]
            path: list[tuple[int, int]] = []
            while stack:
                r, pos = stack[-1]
                if pos >= len(adj[r]):
                    dist[r] = inf
                    stack.pop()
                    if path:
                        path.pop()
                    continue
                stack[-1] = (r, pos + 1)
                c = adj[r][pos]
                r2 = match_col[c]
                if r2 == -1:
                    path.append((r, c))
                    for pr, pc in path:
                        match_row[pr] = pc
                        match_col[pc] = pr
                    break
                if dist[r2] == dist[r] + 1:
                    path.append((r, c))
                    stack.append((r2, 0))
    return match_row


def has_perfect_matching(g: SupportGraph) -> bool:
    if g.k == 0:
        return True
    adj = g.adjacency
    if not adj.any(axis=1).all() or not adj.any(axis=0).all():
        return False
    return all(c != -1 for c in maximum_matching(g))


@lru_cache(maxsize=None)
def _permutations(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.int64).reshape(-1, k)


def symbolic_det_is_zero(g: SupportGraph) -> bool:
    """True iff every permutation term of the determinant hits a structural zero."""
    if g.k > SYMBOLIC_MAX_K:
        raise TooLarge(f"permutation expansion limited to k <= {SYMBOLIC_MAX_K}, got {g.k}")
    if g.k == 0:
        return False
    terms = g.adjacency[np.arange(g.k), _permutations(g.k)]
    return not bool(terms.all(axis=1).any())


def schwartz_zippel_check(
    g: SupportGraph, field: FieldSpec, trials: int, rng: np.random.Generator
) -> float:
    """Fraction of uniform coefficient draws on ``g``'s support with det = 0."""
    if not has_perfect_matching(g):
        raise NoMatching("support graph has no perfect matching")
    mask = g.adjacency
    singular = 0
    for _ in range(trials):
        entries = np.where(mask, field.random(rng, mask.shape), 0)
        if rank(Submatrix(entries=entries, support=mask, field=field)) < g.k:
            singular += 1
    return singular / trials
