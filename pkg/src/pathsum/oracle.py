"""Reference propagators that do not go through the path-sum.

* :func:`rk4_propagator` integrates ``dU/dt' = H(t') U`` directly.
* :func:`neumann_truncated` sums the Dyson series ``Σ_k H^{⊛k}`` entrywise.
* :func:`ode_residual` checks a propagator against its differential equation.
* :func:`triangle_closed_form` and :func:`k2_closed_form` are the exact
  propagators of the oriented-triangle and two-vertex examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import star
from .errors import BlowUpError
from .graph import build_graph
from .matrix import MatrixSpec
from .special import hyp0f2
from .star import TimeGrid

NEUMANN_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    """Propagator ``U(t_i, t_0)`` at every grid node, shape ``(n_nodes, n, n)``."""

    grid: TimeGrid
    values: np.ndarray
    method: str
    step: float
    order: int = 0

    @property
    def times(self):
        return self.grid.nodes


def rk4_propagator(spec: MatrixSpec, grid: TimeGrid, substeps: int = 4) -> OracleResult:
    """Classical fixed-step RK4 with ``substeps`` steps per grid interval."""
    if int(substeps) != substeps or substeps < 1:
        raise ValueError("substeps must be a positive integer")
    n = spec.n
    n_int = grid.n_nodes - 1
    h = grid.spacing / substeps
    # H at every half step of the fine grid
    k = np.arange(2 * substeps * n_int + 1)
    half_times = grid.t_min + 0.5 * h * k
    half_times[-1] = grid.t_max
    Hs = spec.values(half_times)
    U = np.eye(n)
    out = np.empty((grid.n_nodes, n, n))
    out[0] = U
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, grid.n_nodes):
            for _ in range(substeps):
                H0, H1, H2 = Hs[2 * step], Hs[2 * step + 1], Hs[2 * step + 2]
                k1 = H0 @ U
                k2 = H1 @ (U + 0.5 * h * k1)
                k3 = H1 @ (U + 0.5 * h * k2)
                k4 = H2 @ (U + h * k3)
                U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                step += 1
            if not np.all(np.isfinite(U)):
                raise BlowUpError(float(grid.nodes[i]))
            out[i] = U
    return OracleResult(grid, out, "rk4", h, substeps)


def sup_row_norm(spec: MatrixSpec, grid: TimeGrid) -> float:
    """``sup_t ||H(t)||_∞`` over the grid nodes (max absolute row sum)."""
    H = spec.values(grid.nodes)
    return float(np.abs(H).sum(axis=2).max()) if H.size else 0.0


def neumann_tail_bound(h: float, elapsed: float, order: int) -> float:
    """Bound on ``Σ_{k>order} (h·elapsed)^k / k!``, the truncation error."""
    x = h * elapsed
    if x == 0.0:
        return 0.0
    k = order + 1
    term = math.exp(k * math.log(x) - math.lgamma(k + 1))
    total = 0.0
    while True:
        total += term
        k += 1
        nxt = term * x / k
        if nxt <= 1e-17 * total or nxt == 0.0:
            ratio = x / (k + 1)
            return total + (nxt / (1.0 - ratio) if ratio < 1 else math.inf)
        term = nxt


def neumann_order(h: float, elapsed: float, tol: float = NEUMANN_TAIL_TOL) -> int:
    """Smallest truncation order whose tail bound is below ``tol``."""
    order = 0
    while neumann_tail_bound(h, elapsed, order) >= tol:
        order += 1
        if order > 10_000:
            raise ValueError("Neumann series needs more than 10000 terms")
    return order


def neumann_truncated(spec: MatrixSpec, grid: TimeGrid, order: int | None = None,
                      tol: float = NEUMANN_TAIL_TOL) -> OracleResult:
    """Truncated Dyson series ``∫ Σ_{k<=order} H^{⊛k}``, assembled entrywise.

    With ``order=None`` the order is picked from :func:`neumann_tail_bound`
    using ``h = sup ||H(t)||_∞``.
    """
    n = spec.n
    if order is None:
        order = neumann_order(sup_row_norm(spec, grid), grid.t_max - grid.t_min, tol)
    if int(order) != order or order < 0:
        raise ValueError("order must be a non-negative integer")
    graph = build_graph(spec, grid)
    weights = {}
    for v, w in graph.edges:
        e = spec.entry(w, v)
        if e is not None:
            weights[(w, v)] = star.sample_kernel(e, grid)
    # power[b][a] holds (H^{⊛k})[b, a]; None is the zero kernel
    power = [[star.identity(grid) if r == c else None for c in range(n)] for r in range(n)]
    total = [[p for p in row] for row in power]
    for _ in range(order):
        nxt = [[None] * n for _ in range(n)]
        for w in range(n):
            for a in range(n):
                ls, rs = [], []
                for b in range(n):
                    K = weights.get((w, b))
                    P = power[b][a]
                    if K is not None and P is not None:
                        ls.append(K)
                        rs.append(P)
                acc = star.star_dot(ls, rs) if ls else None
                nxt[w][a] = acc
        power = nxt
        for w in range(n):
            for a in range(n):
                if power[w][a] is not None:
                    t = total[w][a]
                    total[w][a] = power[w][a] if t is None else t + power[w][a]
    out = np.zeros((grid.n_nodes, n, n))
    for w in range(n):
        for a in range(n):
            if total[w][a] is not None:
                out[:, w, a] = star.integrate_final_series(total[w][a], 0)
    out[0] = np.eye(n)
    return OracleResult(grid, out, "neumann", grid.spacing, int(order))


def triangle_closed_form(t: float) -> np.ndarray:
    """Exact ``OE(t, 0)`` for ``H = [[0, t, 0], [0, 0, 1], [1, 0, 0]]``."""

    def Q(a, b):
        return hyp0f2(a, b, t**4 / 64.0)

    t2, t3 = t * t, t**3
    return np.array(
        [
            [Q(0.25, 0.5), 0.5 * t2 * Q(0.75, 1.5), 0.5 * t3 * Q(0.75, 1.25) - t3 / 6.0 * Q(0.25, 1.75)],
            [t2 * Q(0.5, 1.25) - 0.5 * t2 * Q(0.25, 1.5), Q(0.5, 0.75), t * Q(0.75, 1.25)],
            [t * Q(0.5, 1.25), 0.5 * t3 * Q(0.75, 1.5) - t3 / 3.0 * Q(0.5, 1.75), Q(0.25, 0.75)],
        ]
    )


def k2_closed_form(t: float) -> np.ndarray:
    """Exact ``OE(t, 0)`` for ``H = [[1, e^t], [e^-t, 1]]``."""
    r5 = math.sqrt(5.0)
    a = math.cosh(r5 * t / 2.0)
    b = math.sinh(r5 * t / 2.0) / r5
    et = math.exp(t)
    return math.exp(t / 2.0) * np.array([[et * (a - b), 2.0 * et * b], [2.0 * b, a + b]])


def k2_green_11(t: float) -> float:
    """Smooth part of the Green's kernel at vertex 1 of the two-vertex example."""
    r5 = math.sqrt(5.0)
    return 0.1 * math.exp(-0.5 * (r5 - 3.0) * t) * ((5.0 + r5) * math.exp(r5 * t) + 5.0 - r5)


def closed_form_series(fn, grid: TimeGrid) -> np.ndarray:
    return np.array([fn(float(t)) for t in grid.nodes])


def ode_residual(spec: MatrixSpec, grid: TimeGrid, values) -> float:
    """Max-abs residual of ``dU/dt' - H(t') U`` on a propagator series.

    ``values`` has shape ``(n_nodes, n, n)``; the derivative is taken by
    second-order finite differences (one-sided at the two end nodes), so
    the residual of an order-2 accurate series is itself ``O(Δ²)``.
    """
    U = np.asarray(values, dtype=float)
    if U.shape != (grid.n_nodes, spec.n, spec.n):
        raise ValueError(f"expected shape {(grid.n_nodes, spec.n, spec.n)}, got {U.shape}")
    if grid.n_nodes < 3:
        raise ValueError("the finite-difference residual needs at least 3 grid nodes")
    dU = np.gradient(U, grid.spacing, axis=0, edge_order=2)
    H = spec.values(grid.nodes)
    return float(np.abs(dU - H @ U).max())
