"""The ring of two-time kernels under the ⊛-product, on a uniform grid.

An element is ``c·δ(t'-t) + k(t', t)`` with ``k`` supported on the causal
triangle ``t' >= t``.  On a grid with nodes ``t_0 < ... < t_{N-1}`` the smooth
part is an ``N x N`` lower-triangular array ``k[i, j] = k(t_i, t_j)``; entries
above the diagonal are identically zero and never read by any operation.

The product is

    (a ⊛ b)(t', t) = ∫_t^t' a(t', τ) b(τ, t) dτ

discretised with the composite trapezoidal rule, so the whole algebra is
second order in the grid spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AcausalQueryError, CoarseGridError, DomainError, GridMismatchError, NumericError
from .expr import Expr, evaluate_array

DEFAULT_NODES = 400
DEFAULT_PIVOT_TOL = 1e-12

# Structure hints for the smooth part, used only to pick a cheaper but
# algebraically identical quadrature path.
GENERAL = "general"
RIGHT = "t"  # k(t', t) = f(t): depends on the earlier time only
LEFT = "tprime"  # k(t', t) = g(t'): depends on the later time only


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[t_min, t_max]`` with ``n_nodes`` nodes."""

    t_min: float
    t_max: float
    n_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2:
            raise ValueError(f"n_nodes must be an integer >= 2, got {self.n_nodes!r}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise ValueError("grid bounds must be finite")
        if not self.t_min < self.t_max:
            raise ValueError(f"need t_min < t_max, got [{self.t_min}, {self.t_max}]")
        object.__setattr__(self, "t_min", float(self.t_min))
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_nodes - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.linspace(self.t_min, self.t_max, self.n_nodes)
        nodes.setflags(write=False)
        return nodes

    def refined(self, factor: int = 2) -> "TimeGrid":
        """Grid with the spacing divided by ``factor`` (old nodes kept)."""
        return TimeGrid(self.t_min, self.t_max, factor * (self.n_nodes - 1) + 1)


class StarElement:
    """Immutable element ``delta·1_⊛ + smooth`` of the ⊛-ring.

    Use ``a @ b`` for the ⊛-product, ``+``/``-`` for the ring addition and
    multiplication by a Python scalar for scaling.
    """

    __slots__ = ("grid", "delta", "smooth", "_kind", "_profile")

    def __init__(self, grid: TimeGrid, delta: float, smooth, kind=GENERAL, profile=None):
        smooth = np.array(smooth, dtype=float)
        n = grid.n_nodes
        if smooth.shape != (n, n):
            raise ValueError(f"smooth part must have shape {(n, n)}, got {smooth.shape}")
        smooth = np.tril(smooth)
        if not np.all(np.isfinite(smooth)):
            raise ValueError("smooth part must be finite on the causal triangle")
        smooth.setflags(write=False)
        self.grid = grid
        self.delta = float(delta)
        self.smooth = smooth
        self._kind = kind
        self._profile = profile

    @classmethod
    def _trusted(cls, grid, delta, smooth, kind=GENERAL, profile=None):
        # internal results are already lower triangular and finite-checked upstream
        self = object.__new__(cls)
        smooth.setflags(write=False)
        self.grid = grid
        self.delta = float(delta)
        self.smooth = smooth
        self._kind = kind
        self._profile = profile
        return self

    def __repr__(self):
        return (
            f"StarElement(delta={self.delta!r}, kind={self._kind!r}, "
            f"max|smooth|={np.abs(self.smooth).max():.6g}, n_nodes={self.grid.n_nodes})"
        )

    def _check(self, other):
        if not isinstance(other, StarElement):
            return NotImplemented
        if other.grid != self.grid:
            raise GridMismatchError()
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return StarElement._trusted(self.grid, self.delta + other.delta, self.smooth + other.smooth)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return StarElement._trusted(self.grid, self.delta - other.delta, self.smooth - other.smooth)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        profile = None if self._profile is None else self._profile * scalar
        return StarElement._trusted(
            self.grid, self.delta * scalar, self.smooth * scalar, self._kind, profile
        )

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, StarElement):
            return NotImplemented
        return star_product(self, other)

    @property
    def is_identity(self) -> bool:
        return self.delta == 1.0 and not self.smooth.any()

    @property
    def is_zero(self) -> bool:
        return self.delta == 0.0 and not self.smooth.any()


def identity(grid: TimeGrid) -> StarElement:
    """The ring identity ``1_⊛``."""
    return StarElement(grid, 1.0, np.zeros((grid.n_nodes, grid.n_nodes)))


def zero(grid: TimeGrid) -> StarElement:
    return StarElement(grid, 0.0, np.zeros((grid.n_nodes, grid.n_nodes)))


def from_function(grid: TimeGrid, fn, delta: float = 0.0) -> StarElement:
    """Element with smooth part ``fn(t', t)`` sampled on the causal triangle.

    ``fn`` is called once with broadcastable arrays of later and earlier times.
    """
    t = grid.nodes
    values = np.broadcast_to(fn(t[:, None], t[None, :]), (t.size, t.size))
    return StarElement(grid, delta, values)


def _one_variable(grid, values, mode):
    values = np.asarray(values, dtype=float)
    if mode == RIGHT:
        smooth = np.broadcast_to(values[None, :], (values.size, values.size))
    elif mode == LEFT:
        smooth = np.broadcast_to(values[:, None], (values.size, values.size))
    else:
        raise ValueError(f"unknown sampling mode {mode!r}; use 't' or 'tprime'")
    profile = values.copy()
    profile.setflags(write=False)
    return StarElement(grid, 0.0, smooth, kind=mode, profile=profile)


def sample_kernel(expr: Expr, grid: TimeGrid, mode: str = RIGHT) -> StarElement:
    """Sample a one-time expression as a delta-free two-time kernel.

    ``mode="t"`` (default) gives ``k(t', t) = expr(t)``, the weight
    ``Θ(t'-t)H(t)`` of the motion generator; ``mode="tprime"`` gives
    ``k(t', t) = expr(t')``.
    """
    try:
        values = evaluate_array(expr, grid.nodes)
    except DomainError as exc:
        node = None
        if exc.t is not None:
            node = int(np.argmin(np.abs(grid.nodes - exc.t)))
        raise DomainError(f"cannot sample kernel at node {node}: {exc}") from exc
    return _one_variable(grid, values, mode)


def sample_values(values, grid: TimeGrid, mode: str = RIGHT) -> StarElement:
    """Like :func:`sample_kernel` but from precomputed node values."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError("need one value per grid node")
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values)))
        raise DomainError(f"non-finite kernel value at node {bad}", float(grid.nodes[bad]))
    return _one_variable(grid, values, mode)


def _quad(a: StarElement, b: StarElement) -> np.ndarray:
    """Trapezoidal ``Q(a, b)[i, j] ≈ ∫_{t_j}^{t_i} a(t_i, τ) b(τ, t_j) dτ``."""
    A, B = a.smooth, b.smooth
    h = a.grid.spacing
    if a._kind == RIGHT:
        f = a._profile
        S = np.cumsum(f[:, None] * B, axis=0)
        ends = 0.5 * (f[:, None] * B + (f * np.diag(B))[None, :])
    elif a._kind == LEFT:
        g = a._profile
        S = g[:, None] * np.cumsum(B, axis=0)
        ends = 0.5 * g[:, None] * (B + np.diag(B)[None, :])
    elif b._kind == LEFT:
        g = b._profile
        AG = A * g[None, :]
        S = np.cumsum(AG[:, ::-1], axis=1)[:, ::-1]
        ends = 0.5 * ((np.diag(A) * g)[:, None] + AG)
    elif b._kind == RIGHT:
        f = b._profile
        S = np.cumsum(A[:, ::-1], axis=1)[:, ::-1] * f[None, :]
        ends = 0.5 * (np.diag(A)[:, None] + A) * f[None, :]
    else:
        S = A @ B
        ends = 0.5 * (np.diag(A)[:, None] * B + A * np.diag(B)[None, :])
    Q = h * (S - ends)
    Q = np.tril(Q, -1)
    return Q


def star_product(a: StarElement, b: StarElement) -> StarElement:
    """⊛-product ``a ⊛ b``; non-commutative, associative up to O(Δ²)."""
    if a.grid != b.grid:
        raise GridMismatchError()
    if a.is_identity:
        return b
    if b.is_identity:
        return a
    smooth = _quad(a, b)
    if b.delta:
        smooth += b.delta * a.smooth
    if a.delta:
        smooth += a.delta * b.smooth
    if not np.all(np.isfinite(smooth)):
        raise NumericError("non-finite value in ⊛-product")
    return StarElement._trusted(a.grid, a.delta * b.delta, smooth)


def star_dot(lefts, rights) -> StarElement:
    """``Σ_k lefts[k] ⊛ rights[k]``, the inner product of a matrix ⊛-product.

    When every left factor is a one-time kernel of the earlier time (the
    sampled edge weights) the sum is formed before the single cumulative
    quadrature, which is much cheaper than summing separate products.
    """
    lefts = list(lefts)
    rights = list(rights)
    if len(lefts) != len(rights) or not lefts:
        raise ValueError("need equally many, and at least one, factors")
    grid = lefts[0].grid
    for x in lefts + rights:
        if x.grid != grid:
            raise GridMismatchError()
    if not all(a._kind == RIGHT and a.delta == 0.0 for a in lefts):
        total = star_product(lefts[0], rights[0])
        for a, b in zip(lefts[1:], rights[1:]):
            total = total + star_product(a, b)
        return total
    X = np.zeros((grid.n_nodes, grid.n_nodes))  # integrand rows
    D = np.zeros(grid.n_nodes)  # integrand at the lower endpoint
    Y = np.zeros((grid.n_nodes, grid.n_nodes))  # delta parts of the right factors
    delta = 0.0
    for a, b in zip(lefts, rights):
        f = a._profile
        X += f[:, None] * b.smooth
        D += f * np.diag(b.smooth)
        if b.delta:
            Y += b.delta * a.smooth
        delta += a.delta * b.delta
    Q = grid.spacing * (np.cumsum(X, axis=0) - 0.5 * (X + D[None, :]))
    Q = np.tril(Q, -1) + Y
    if not np.all(np.isfinite(Q)):
        raise NumericError("non-finite value in ⊛-product")
    return StarElement._trusted(grid, delta, Q)


def star_power(m: StarElement, p: int) -> StarElement:
    """``m^{⊛p}`` built as ``m ⊛ m^{⊛(p-1)}``."""
    if int(p) != p or p < 0:
        raise ValueError(f"power must be a non-negative integer, got {p!r}")
    result = identity(m.grid)
    for _ in range(int(p)):
        result = star_product(m, result)
    return result


def resolvent(m: StarElement, pivot_tol: float = DEFAULT_PIVOT_TOL) -> StarElement:
    """``(1_⊛ - m)^{⊛-1} = 1_⊛ + h`` for a delta-free ``m``.

    ``h`` solves the second-kind Volterra equation
    ``h(t', t) = m(t', t) + ∫_t^t' m(t', τ) h(τ, t) dτ``, marched node by
    node with the trapezoidal rule; the diagonal term of each step is
    implicit and solved for directly.
    """
    if m.delta != 0.0:
        raise ValueError("resolvent requires a delta-free kernel")
    grid = m.grid
    if not m.smooth.any():
        return identity(grid)
    M = m.smooth
    n = grid.n_nodes
    dt = grid.spacing
    H = np.zeros((n, n))
    diag = np.diag(M).copy()
    H[np.arange(n), np.arange(n)] = diag
    for i in range(1, n):
        pivot = 1.0 - 0.5 * dt * M[i, i]
        if abs(pivot) < pivot_tol:
            raise CoarseGridError(i, pivot)
        row = M[i, :i]
        s = row @ H[:i, :i]
        H[i, :i] = (row + dt * (s - 0.5 * row * diag[:i])) / pivot
    if not np.all(np.isfinite(H)):
        raise NumericError("non-finite value in resolvent")
    return StarElement._trusted(grid, 1.0, H)


def integrate_final(g: StarElement, i: int, j: int) -> float:
    """``g.delta + ∫_{t_j}^{t_i} g(t_i, τ) dτ`` (the δ contributes Θ(0) = 1)."""
    if i < j:
        raise AcausalQueryError(i, j)
    row = g.smooth[i, j : i + 1]
    if row.size < 2:
        return g.delta
    return g.delta + g.grid.spacing * (row.sum() - 0.5 * (row[0] + row[-1]))


def integrate_final_series(g: StarElement, j: int = 0) -> np.ndarray:
    """:func:`integrate_final` for every ``i >= j`` at once."""
    S = g.smooth[j:, j:]
    dt = g.grid.spacing
    out = dt * (S.sum(axis=1) - 0.5 * (S[:, 0] + np.diag(S)))
    out[0] = 0.0
    return g.delta + out


def integrate_initial(g: StarElement, i: int, j: int) -> float:
    """``g.delta + ∫_{t_j}^{t_i} g(τ, t_j) dτ``: integrate over the later time.

    This is the counterpart of :func:`integrate_final` for kernels sampled in
    ``tprime`` mode.
    """
    if i < j:
        raise AcausalQueryError(i, j)
    col = g.smooth[j : i + 1, j]
    if col.size < 2:
        return g.delta
    return g.delta + g.grid.spacing * (col.sum() - 0.5 * (col[0] + col[-1]))


def integrate_initial_series(g: StarElement, j: int = 0) -> np.ndarray:
    col = g.smooth[j:, j]
    dt = g.grid.spacing
    cum = np.concatenate(([0.0], np.cumsum(0.5 * dt * (col[1:] + col[:-1]))))
    return g.delta + cum


def max_abs_difference(a: StarElement, b: StarElement) -> float:
    """Sup-norm distance of the smooth parts plus the delta mismatch."""
    if a.grid != b.grid:
        raise GridMismatchError()
    return float(np.abs(a.smooth - b.smooth).max() + abs(a.delta - b.delta))
