"""Path-sum evaluation of the time-ordered exponential.

Entry ``OE[H](t', t)[omega, alpha]`` is a finite sum over the simple paths
``alpha -> omega`` of ⊛-chains of edge weights and Green's kernels; each
Green's kernel is the resolvent of the sum of its anchored simple-cycle
weights, which contain Green's kernels on strictly smaller vertex sets.

Two equivalent kernel conventions are supported:

``"t"`` (default)
    edge weights ``k(t', t) = H(t)`` and the final integral runs over the
    earlier time, ``OE(t_i, t_0) = ∫_{t_0}^{t_i} T(t_i, τ) dτ``.
``"tprime"``
    edge weights ``k(t', t) = H(t')`` and the final integral runs over the
    later time, ``OE(t_i, t_0) = ∫_{t_0}^{t_i} T(τ, t_0) dτ``.

Both produce the same propagator up to quadrature error.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import star
from .graph import SparsityGraph, build_graph, remove, simple_cycles_at, simple_paths
from .matrix import MatrixSpec
from .star import StarElement, TimeGrid

CONVENTIONS = (star.RIGHT, star.LEFT)


@dataclass(frozen=True)
class GreenKernel:
    mask: int
    anchor: int
    kernel: StarElement
    n_cycles: int
    depth: int


@dataclass(frozen=True)
class PropagatorResult:
    """Time series ``OE(t_i, t_0)[omega, alpha]`` for every grid node."""

    omega: int
    alpha: int
    grid: TimeGrid
    values: np.ndarray
    n_paths: int
    n_cycles: int
    depth: int

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("PATHSUM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"PATHSUM_THREADS must be an integer, got {env!r}") from None
    return 1


class PathSumEngine:
    """Evaluates path-sums for one matrix on one grid.

    Green's kernels are memoised by ``(mask, anchor)``; the cache is
    compute-once and safe to share between threads.
    """

    def __init__(
        self,
        spec: MatrixSpec,
        grid: TimeGrid,
        graph: Optional[SparsityGraph] = None,
        convention: str = star.RIGHT,
        use_cache: bool = True,
        pivot_tol: float = star.DEFAULT_PIVOT_TOL,
    ):
        if convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
        self.spec = spec
        self.grid = grid
        self.graph = graph if graph is not None else build_graph(spec, grid)
        self.convention = convention
        self.use_cache = use_cache
        self.pivot_tol = pivot_tol
        self._weights: dict[tuple[int, int], StarElement] = {}
        for v, w in self.graph.edges:
            self._weights[(w, v)] = self._sample(w, v)
        self._cache: dict[tuple[int, int], Future] = {}
        self._lock = threading.Lock()

    def _sample(self, row, col):
        e = self.spec.entry(row, col)
        if e is None:
            # forced edge with no expression: a structural zero weight
            return star.sample_values(np.zeros(self.grid.n_nodes), self.grid, self.convention)
        return star.sample_kernel(e, self.grid, self.convention)

    def weight(self, row: int, col: int) -> StarElement:
        """Edge kernel for ``H[row, col]`` (edge ``col -> row``)."""
        return self._weights[(row, col)]

    # -- Green's kernels ------------------------------------------------------

    def green_kernel(self, mask: Optional[int], alpha: int) -> GreenKernel:
        mask = self.graph.full_mask if mask is None else mask
        if not (mask >> alpha) & 1:
            raise ValueError(f"anchor {alpha} is not in the mask")
        if not self.use_cache:
            return self._compute_green(mask, alpha)
        key = (mask, alpha)
        with self._lock:
            fut = self._cache.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._cache[key] = fut
        if owner:
            try:
                fut.set_result(self._compute_green(mask, alpha))
            except BaseException as exc:
                fut.set_exception(exc)
                raise
        return fut.result()

    def cycle_weight(self, mask: int, cycle) -> tuple[StarElement, int]:
        """⊛-weight of an anchored simple cycle, evaluated right to left.

        For ``(a, m1, ..., mk, a)`` this is
        ``H[a,mk] ⊛ G[S∖{a,m1..m(k-1)}; mk] ⊛ H[mk,m(k-1)] ⊛ ... ⊛ G[S∖{a}; m1] ⊛ H[m1,a]``.
        Also returns the deepest nested recursion level used.
        """
        alpha = cycle[0]
        inner = cycle[1:-1]
        if not inner:
            return self.weight(alpha, alpha), 0
        x = self.weight(inner[0], alpha)
        removed = remove(mask, alpha)
        depth = 0
        for k, mu in enumerate(inner):
            g = self.green_kernel(removed, mu)
            depth = max(depth, g.depth)
            x = g.kernel @ x
            nxt = inner[k + 1] if k + 1 < len(inner) else alpha
            x = self.weight(nxt, mu) @ x
            removed = remove(removed, mu)
        return x, depth

    def _compute_green(self, mask, alpha):
        cycles = simple_cycles_at(self.graph, mask, alpha)
        if not cycles:
            return GreenKernel(mask, alpha, star.identity(self.grid), 0, 1)
        total = None
        depth = 0
        for cyc in cycles:
            w, d = self.cycle_weight(mask, cyc)
            depth = max(depth, d)
            total = w if total is None else total + w
        kernel = star.resolvent(total, self.pivot_tol)
        return GreenKernel(mask, alpha, kernel, len(cycles), depth + 1)

    # -- propagator entries --------------------------------------------------

    def path_weight(self, path) -> tuple[StarElement, int]:
        """``G[V∖{a,..,v(l-1)}; w] ⊛ H[w,v(l-1)] ⊛ ... ⊛ H[v1,a] ⊛ G[V; a]``."""
        mask = self.graph.full_mask
        g = self.green_kernel(mask, path[0])
        x = g.kernel
        depth = g.depth
        for prev, nxt in zip(path[:-1], path[1:]):
            x = self.weight(nxt, prev) @ x
            mask = remove(mask, prev)
            g = self.green_kernel(mask, nxt)
            depth = max(depth, g.depth)
            x = g.kernel @ x
        return x, depth

    def transfer_kernel(self, omega: int, alpha: int) -> tuple[Optional[StarElement], int, int]:
        """Sum of path weights ``alpha -> omega`` before the final integration."""
        paths = simple_paths(self.graph, None, alpha, omega)
        total = None
        depth = 0
        for p in paths:
            w, d = self.path_weight(p)
            depth = max(depth, d)
            total = w if total is None else total + w
        return total, len(paths), depth

    def _integrate(self, kernel):
        if self.convention == star.RIGHT:
            return star.integrate_final_series(kernel, 0)
        return star.integrate_initial_series(kernel, 0)

    def entry(self, omega: int, alpha: int) -> PropagatorResult:
        n = self.spec.n
        if not (0 <= omega < n and 0 <= alpha < n):
            raise ValueError(f"entry ({omega}, {alpha}) outside a {n}x{n} matrix")
        kernel, n_paths, depth = self.transfer_kernel(omega, alpha)
        if kernel is None:
            values = np.zeros(self.grid.n_nodes)
        else:
            values = self._integrate(kernel)
        values[0] = 1.0 if omega == alpha else 0.0
        n_cycles = self.green_kernel(None, alpha).n_cycles
        return PropagatorResult(omega, alpha, self.grid, values, n_paths, n_cycles, depth)

    def full(self, threads: Optional[int] = None) -> list[list[PropagatorResult]]:
        n = self.spec.n
        pairs = [(w, a) for w in range(n) for a in range(n)]
        workers = _thread_count(threads)
        if workers == 1:
            results = [self.entry(w, a) for w, a in pairs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda p: self.entry(*p), pairs))
        return [results[r * n : (r + 1) * n] for r in range(n)]


def green_kernel(spec, graph, mask, alpha, grid, engine=None) -> GreenKernel:
    engine = engine or PathSumEngine(spec, grid, graph)
    return engine.green_kernel(mask, alpha)


def path_sum_entry(spec: MatrixSpec, grid: TimeGrid, omega: int, alpha: int, **kwargs) -> PropagatorResult:
    """``OE(t_i, t_0)[omega, alpha]`` on every node of ``grid``."""
    return PathSumEngine(spec, grid, **kwargs).entry(omega, alpha)


def full_propagator(spec: MatrixSpec, grid: TimeGrid, threads=None, **kwargs) -> list[list[PropagatorResult]]:
    return PathSumEngine(spec, grid, **kwargs).full(threads)


def propagator_array(results) -> np.ndarray:
    """Stack a table of results into an array of shape ``(n_nodes, n, n)``."""
    n = len(results)
    out = np.empty((results[0][0].values.size, n, n))
    for r in range(n):
        for c in range(n):
            out[:, r, c] = results[r][c].values
    return out


def dyson_residual(spec: MatrixSpec, grid: TimeGrid, alpha: int = 0) -> float:
    """Sup-norm residual of ``G - G0 - G ⊛ Σ ⊛ G0`` for a two-vertex matrix.

    ``G`` is the Green's kernel at ``alpha``, ``G0`` the resolvent of the
    self-loop at ``alpha`` and ``Σ = H[a,w] ⊛ G[{w}; w] ⊛ H[w,a]``.
    """
    if spec.n != 2:
        raise ValueError(f"the Dyson residual needs a 2x2 matrix, got n={spec.n}")
    omega = 1 - alpha
    engine = PathSumEngine(spec, grid)
    graph = engine.graph
    G = engine.green_kernel(None, alpha).kernel
    if graph.has_edge(alpha, alpha):
        G0 = star.resolvent(engine.weight(alpha, alpha))
    else:
        G0 = star.identity(grid)
    if graph.has_edge(alpha, omega) and graph.has_edge(omega, alpha):
        inner = engine.green_kernel(remove(graph.full_mask, alpha), omega).kernel
        sigma = engine.weight(alpha, omega) @ (inner @ engine.weight(omega, alpha))
    else:
        sigma = star.zero(grid)
    residual = G - G0 - G @ (sigma @ G0)
    return float(np.abs(residual.smooth).max() + abs(residual.delta))
