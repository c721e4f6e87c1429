"""Sparsity graph of ``H(t)`` and its self-avoiding walks.

Entry ``H[a, b]`` weights the edge ``b -> a``.  Subgraphs are vertex
bitmasks over the parent graph: bit ``v`` set means vertex ``v`` is kept.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import evaluate_array
from .matrix import MatrixSpec
from .star import TimeGrid

ZERO_TOL = 1e-12
MAX_VERTICES = 64

Path = tuple[int, ...]


@dataclass(frozen=True)
class SparsityGraph:
    """Directed graph with sorted out-neighbour tuples; self-loops allowed."""

    n_vertices: int
    out: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, n, edges) -> "SparsityGraph":
        adj = [set() for _ in range(n)]
        for src, dst in edges:
            adj[src].add(dst)
        return cls(n, tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_adjacency(cls, A) -> "SparsityGraph":
        """From a matrix with ``A[a, b] != 0`` meaning edge ``b -> a``."""
        A = np.asarray(A)
        rows, cols = np.nonzero(A)
        return cls.from_edges(A.shape[0], zip(cols.tolist(), rows.tolist()))

    @property
    def full_mask(self) -> int:
        return (1 << self.n_vertices) - 1

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(v, w) for v in range(self.n_vertices) for w in self.out[v]]

    def has_edge(self, src: int, dst: int) -> bool:
        return dst in self.out[src]

    def adjacency(self) -> np.ndarray:
        """0/1 matrix in the same orientation as ``H``."""
        A = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
        for v, w in self.edges:
            A[w, v] = 1
        return A


def nonzero_entries(spec: MatrixSpec, grid: TimeGrid) -> set[tuple[int, int]]:
    """Entries that are not identically zero on the grid (or forced on)."""
    keep = set()
    for pos, e in spec.entries.items():
        forced = spec.force_nonzero.get(pos)
        if forced is not None:
            if forced:
                keep.add(pos)
            continue
        if np.any(np.abs(evaluate_array(e, grid.nodes)) > ZERO_TOL):
            keep.add(pos)
    for pos, forced in spec.force_nonzero.items():
        if forced:
            keep.add(pos)
    return keep


def build_graph(spec: MatrixSpec, grid: TimeGrid) -> SparsityGraph:
    if spec.n > MAX_VERTICES:
        raise ValueError(f"at most {MAX_VERTICES} vertices are supported")
    return SparsityGraph.from_edges(spec.n, [(c, r) for r, c in nonzero_entries(spec, grid)])


def _mask_or_full(g, mask):
    return g.full_mask if mask is None else mask


def _check_in(mask, *vertices):
    for v in vertices:
        if not (mask >> v) & 1:
            raise ValueError(f"vertex {v} is not in the subgraph mask")


def simple_paths(g: SparsityGraph, mask: Optional[int], alpha: int, omega: int) -> list[Path]:
    """All self-avoiding walks ``alpha -> omega`` inside the induced subgraph.

    Returned in lexicographic order; ``alpha == omega`` gives ``[(alpha,)]``.
    """
    mask = _mask_or_full(g, mask)
    _check_in(mask, alpha, omega)
    if alpha == omega:
        return [(alpha,)]
    found = []
    stack = [alpha]

    def dfs(v, visited):
        for w in g.out[v]:
            if not (visited >> w) & 1:
                continue
            stack.append(w)
            if w == omega:
                found.append(tuple(stack))
            else:
                dfs(w, visited & ~(1 << w))
            stack.pop()

    dfs(alpha, mask & ~(1 << alpha))
    return found


def simple_cycles_at(g: SparsityGraph, mask: Optional[int], alpha: int) -> list[Path]:
    """All simple cycles ``(alpha, mu_1, ..., mu_k, alpha)`` in the induced subgraph.

    A self-loop is the cycle ``(alpha, alpha)``.  Lexicographic order.
    """
    mask = _mask_or_full(g, mask)
    _check_in(mask, alpha)
    found = []
    stack = [alpha]

    def dfs(v, available):
        for w in g.out[v]:
            if w == alpha:
                found.append(tuple(stack) + (alpha,))
            elif (available >> w) & 1:
                stack.append(w)
                dfs(w, available & ~(1 << w))
                stack.pop()

    dfs(alpha, mask & ~(1 << alpha))
    found.sort()
    return found


def distance(g: SparsityGraph, alpha: int, omega: int) -> Optional[int]:
    """Length of the shortest directed path, or ``None`` when unreachable."""
    if alpha == omega:
        return 0
    seen = {alpha}
    queue = deque([(alpha, 0)])
    while queue:
        v, d = queue.popleft()
        for w in g.out[v]:
            if w == omega:
                return d + 1
            if w not in seen:
                seen.add(w)
                queue.append((w, d + 1))
    return None


def max_degree(g: SparsityGraph) -> int:
    """Maximum out-degree; a self-loop counts once."""
    return max((len(o) for o in g.out), default=0)


def remove(mask: int, *vertices: int) -> int:
    for v in vertices:
        mask &= ~(1 << v)
    return mask
