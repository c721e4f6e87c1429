"""Walk counts and decay envelopes for structured sparse matrices.

If every entry of ``H(t)`` is bounded by ``h`` in absolute value, then

    |OE[H](t', t)[omega, alpha]| <= Σ_k (h·Δt)^k / k! · |W_k(alpha -> omega)|

where ``W_k`` are the walks of length ``k`` on the sparsity graph and
``Δt = t' - t``.  The closed forms below evaluate that series for path
graphs, ``Z^δ`` lattices, Bethe lattices and hypercubes, plus the
structure-free envelope that only uses the maximum degree.

Each closed form has a brute-force counterpart (``brute_*``) that counts
walks by repeated adjacency products on a finite truncation of the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .special import bessel_i

#: switch to log-space evaluation beyond this exponent
LOG_SPACE_THRESHOLD = 500.0
#: relative stopping tolerance of :func:`walk_series`
SERIES_RTOL = 1e-14


def _check_nonneg(**kw):
    for name, v in kw.items():
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")


def _check_nonneg_int(**kw):
    for name, v in kw.items():
        if int(v) != v or v < 0:
            raise ValueError(f"{name} must be a non-negative integer, got {v}")


def _safe_exp(log_value: float) -> float:
    if log_value > 709.0:
        return math.inf
    return math.exp(log_value)


# ---------------------------------------------------------------------------
# walk counts
# ---------------------------------------------------------------------------


def walk_count_path_graph(d: int, k: int) -> int:
    """Walks of length ``k`` between vertices ``d`` apart on the infinite
    path graph with one self-loop per vertex.

    ``Σ_j C(k, 2j+d)·C(2j+d, j)``: choose which ``2j+d`` steps move, then
    which ``j`` of those move backwards.
    """
    _check_nonneg_int(d=d, k=k)
    return sum(math.comb(k, 2 * j + d) * math.comb(2 * j + d, j) for j in range(k + 1) if 2 * j + d <= k)


def walk_count_hypercube(N: int, d: int, n_pairs: int) -> int:
    """Walks of length ``2·n_pairs + d`` between vertices at Hamming
    distance ``d`` on the ``N``-dimensional hypercube (no self-loops).

    Spectral formula: the hypercube adjacency has eigenvalues ``N - 2m``
    with Krawtchouk-weighted eigenprojections, folded pairwise
    ``±(2i + N mod 2)`` so only even-parity lengths survive.
    """
    _check_nonneg_int(N=N, d=d, n_pairs=n_pairs)
    if d > N:
        raise ValueError(f"distance d={d} exceeds the hypercube dimension N={N}")
    k = 2 * n_pairs + d
    if k == 0:
        # the eigenvalue 0 is not paired with a mirror image: 0^0 terms would double count
        return 1
    half, parity = divmod(N, 2)
    total = 0
    for i in range(half + 1):
        inner = 0
        for j in range(half + 1):
            lo = half - i - j
            if lo < 0 or j > d:
                continue
            inner += math.comb(N - d, lo) * math.comb(d, j) * (-1) ** j
        total += (2 * i + parity) ** k * inner
    value = Fraction(2 * total, 2**N)
    if value.denominator != 1:
        raise ArithmeticError("hypercube walk count is not an integer")
    return int(value)


def walk_count_hypercube_looped(N: int, d: int, k: int) -> int:
    """Walks of length ``k`` between vertices at distance ``d`` on the
    ``N``-hypercube with one self-loop per vertex.

    A looped walk is a loopless walk of length ``m`` with ``k - m`` loop
    steps interleaved, hence ``Σ_m C(k, m)·(loopless count at length m)``.
    """
    _check_nonneg_int(N=N, d=d, k=k)
    if d > N:
        raise ValueError(f"distance d={d} exceeds the hypercube dimension N={N}")
    total = 0
    for m in range(d, k + 1, 2):
        total += math.comb(k, m) * walk_count_hypercube(N, d, (m - d) // 2)
    return total


def walk_count_bethe_upper(N: int, d: int, n: int) -> tuple[int, int]:
    """Walks of length ``2n + d`` between vertices ``d`` apart on the
    regular tree of degree ``N + 1``, with its closed-form upper bound.

    Returns ``(exact, bound)`` where

    * ``exact = Σ_{k=d}^{n+d} C(2n+d, n+d-k)·N^(n+d-k)·(2k-d+1)/(n+k+1)``
    * ``bound = (n+1)·C(2n+d, n)·N^n·(d+1)/(n+d+1)``, rounded down.
    """
    _check_nonneg_int(N=N, d=d, n=n)
    if N < 2:
        raise ValueError(f"the Bethe lattice needs N >= 2, got {N}")
    length = 2 * n + d
    exact = Fraction(0)
    for k in range(d, n + d + 1):
        exact += Fraction(math.comb(length, n + d - k) * N ** (n + d - k) * (2 * k - d + 1), n + k + 1)
    if exact.denominator != 1:
        raise ArithmeticError("Bethe walk count is not an integer")
    bound = Fraction((n + 1) * math.comb(length, n) * N**n * (d + 1), n + d + 1)
    return int(exact), math.floor(bound)


# ---------------------------------------------------------------------------
# brute-force walk counts
# ---------------------------------------------------------------------------


def _walk_counts_from(adj, start: int, target: int, k_max: int) -> list[int]:
    """``[(A^k)[target, start] for k in 0..k_max]`` by repeated mat-vec."""
    A = np.asarray(adj, dtype=np.int64)
    deg = int(A.sum(axis=0).max()) if A.size else 0
    if deg > 1 and k_max * math.log2(deg) > 62:
        raise OverflowError("walk counts would overflow 64-bit integers")
    v = np.zeros(A.shape[0], dtype=np.int64)
    v[start] = 1
    out = [int(v[target])]
    for _ in range(k_max):
        v = A @ v
        out.append(int(v[target]))
    return out


def path_graph_adjacency(width: int, loops: bool = True) -> np.ndarray:
    """Adjacency of the path graph on ``width`` vertices."""
    A = np.eye(width, k=1, dtype=np.int64) + np.eye(width, k=-1, dtype=np.int64)
    if loops:
        A += np.eye(width, dtype=np.int64)
    return A


def hypercube_adjacency(N: int, loops: bool = False) -> np.ndarray:
    """Adjacency of the ``N``-hypercube; vertex ``v`` is the bit string of ``v``."""
    size = 1 << N
    A = np.zeros((size, size), dtype=np.int64)
    for v in range(size):
        for b in range(N):
            A[v ^ (1 << b), v] = 1
    if loops:
        A += np.eye(size, dtype=np.int64)
    return A


def lattice_adjacency(dim: int, radius: int) -> tuple[np.ndarray, callable]:
    """Looped ``Z^dim`` truncated to the box ``[-radius, radius]^dim``.

    Returns the adjacency and a map from coordinates to vertex index.
    """
    side = 2 * radius + 1
    size = side**dim

    def index(coords):
        idx = 0
        for c in coords:
            idx = idx * side + (c + radius)
        return idx

    A = np.eye(size, dtype=np.int64)
    for flat in range(size):
        coords = list(np.unravel_index(flat, (side,) * dim))
        for axis in range(dim):
            if coords[axis] + 1 < side:
                nb = list(coords)
                nb[axis] += 1
                other = int(np.ravel_multi_index(nb, (side,) * dim))
                A[other, flat] = A[flat, other] = 1
    return A, index


def brute_path_graph(d: int, k_max: int) -> list[int]:
    """Looped path-graph walk counts, truncation radius ``k_max + 2``."""
    radius = k_max + 2
    A = path_graph_adjacency(2 * radius + d + 1)
    return _walk_counts_from(A, radius, radius + d, k_max)


def brute_hypercube(N: int, d: int, k_max: int, loops: bool = False) -> list[int]:
    """Hypercube walk counts between ``0`` and the vertex with ``d`` low bits set."""
    A = hypercube_adjacency(N, loops)
    return _walk_counts_from(A, 0, (1 << d) - 1, k_max)


def brute_lattice(coords: Sequence[int], k_max: int) -> list[int]:
    """Looped lattice walk counts from the origin to ``coords``."""
    radius = max([k_max + 2] + [abs(c) + 2 for c in coords])
    A, index = lattice_adjacency(len(coords), radius)
    return _walk_counts_from(A, index([0] * len(coords)), index(coords), k_max)


def brute_bethe(N: int, d: int, k_max: int) -> list[int]:
    """Walk counts on the regular tree of degree ``N + 1`` (no self-loops).

    Tree vertices are reduced words over ``N + 1`` letters (no letter
    repeated twice in a row), i.e. the Cayley graph of a free product of
    ``N + 1`` copies of ``Z/2``.  The walk starts at the empty word and ends
    at an alternating word of length ``d``.  States that can no longer
    reach the target in the remaining steps are pruned, which is exact.
    """
    if N < 2:
        raise ValueError(f"the Bethe lattice needs N >= 2, got {N}")
    letters = range(N + 1)
    target = tuple(i % 2 for i in range(d))

    def dist(a, b):
        p = 0
        while p < len(a) and p < len(b) and a[p] == b[p]:
            p += 1
        return len(a) + len(b) - 2 * p

    state = {(): 1}
    out = [state.get(target, 0)]
    for step in range(1, k_max + 1):
        remaining = k_max - step
        nxt: dict = {}
        for word, count in state.items():
            for c in letters:
                w = word[:-1] if word and word[-1] == c else word + (c,)
                if dist(w, target) <= remaining:
                    nxt[w] = nxt.get(w, 0) + count
        state = nxt
        out.append(state.get(target, 0))
    return out


# ---------------------------------------------------------------------------
# decay envelopes
# ---------------------------------------------------------------------------


def walk_series(x: float, counts, k_min: int = 0) -> float:
    """``Σ_k x^k / k! · counts(k)`` summed until the terms are negligible.

    ``counts`` is a callable of ``k`` or a finite sequence (then summed in
    full).  Truncation is only considered from ``k_min`` on, which should be
    the first length with a non-zero count (the graph distance).
    """
    _check_nonneg(x=x)
    if not callable(counts):
        return math.fsum(x**k / math.factorial(k) * c for k, c in enumerate(counts))
    total = 0.0
    small = 0
    k = 0
    while True:
        c = counts(k)
        term = math.exp(k * math.log(x) - math.lgamma(k + 1)) * c if x > 0 else float(c if k == 0 else 0)
        total += term
        # stop after a run of negligible terms once past the hump of x^k/k!
        if k >= k_min and k > x and term <= SERIES_RTOL * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
        k += 1
        if k > 10_000:
            if total == 0.0:
                return 0.0
            raise ArithmeticError("walk series did not converge")


def bound_tridiagonal(h: float, elapsed: float, d: int) -> float:
    """``e^{hΔt}·I_d(2hΔt)``, exact for ``H = h·A`` on the looped path graph."""
    _check_nonneg(h=h, elapsed=elapsed)
    _check_nonneg_int(d=d)
    x = h * elapsed
    return math.exp(x) * bessel_i(d, 2.0 * x) if x < LOG_SPACE_THRESHOLD else math.inf


def bound_lattice(h: float, elapsed: float, coords: Sequence[int]) -> float:
    """``e^{hΔt}·Π_i I_{a_i}(2hΔt)`` for the looped ``Z^δ`` lattice."""
    _check_nonneg(h=h, elapsed=elapsed)
    if len(coords) == 0:
        raise ValueError("coords must be non-empty")
    x = h * elapsed
    if x >= LOG_SPACE_THRESHOLD:
        return math.inf
    value = math.exp(x)
    for a in coords:
        if int(a) != a:
            raise ValueError(f"lattice coordinates must be integers, got {a}")
        value *= bessel_i(abs(int(a)), 2.0 * x)
    return value


def bound_bethe(h: float, elapsed: float, N: int, d: int) -> float:
    """``(e^M/M)·(d+1)·N^{-d/2}·(I_{d+1}(2M) + M·I_{d+2}(2M))``, ``M = hΔt√N``.

    Envelope for the regular tree of degree ``N + 1``.  At ``M = 0`` the
    limit is 1 for ``d = 0`` and 0 otherwise.
    """
    _check_nonneg(h=h, elapsed=elapsed)
    _check_nonneg_int(d=d)
    if N < 2:
        raise ValueError(f"the Bethe lattice needs N >= 2, got {N}")
    M = h * elapsed * math.sqrt(N)
    if M == 0.0:
        return 1.0 if d == 0 else 0.0
    if M >= LOG_SPACE_THRESHOLD:
        return math.inf
    bracket = bessel_i(d + 1, 2.0 * M) + M * bessel_i(d + 2, 2.0 * M)
    return math.exp(M) / M * (d + 1) * N ** (-d / 2.0) * bracket


def bound_hypercube(beta_h: float, elapsed: float, N: int, d: int) -> float:
    """``e^x·sinh^d(x)·cosh^{N-d}(x)`` with ``x = beta_h·Δt``.

    Exact for the looped ``N``-hypercube with uniform weight ``beta_h``.
    """
    _check_nonneg(beta_h=beta_h, elapsed=elapsed)
    _check_nonneg_int(N=N, d=d)
    if d > N:
        raise ValueError(f"distance d={d} exceeds the hypercube dimension N={N}")
    x = beta_h * elapsed
    if x * (N + 1) <= LOG_SPACE_THRESHOLD:
        return math.exp(x) * math.sinh(x) ** d * math.cosh(x) ** (N - d)
    # log sinh x = x - log 2 + log1p(-e^{-2x}); same for cosh with +
    e2 = math.exp(-2.0 * x)
    log_val = x + d * (x - math.log(2.0) + math.log1p(-e2)) + (N - d) * (x - math.log(2.0) + math.log1p(e2))
    return _safe_exp(log_val)


def bound_generic(h: float, elapsed: float, max_degree: int, d: int) -> float:
    """``e^{Δ·hΔt}·(Δ·hΔt)^d / d!`` from ``|W_k| <= Δ^k``."""
    _check_nonneg(h=h, elapsed=elapsed)
    _check_nonneg_int(max_degree=max_degree, d=d)
    y = max_degree * h * elapsed
    if y == 0.0:
        return 1.0 if d == 0 else 0.0
    if y + d <= LOG_SPACE_THRESHOLD:
        return math.exp(y) * y**d / math.factorial(d)
    return _safe_exp(y + d * math.log(y) - math.lgamma(d + 1))


STRUCTURES = ("tridiagonal", "lattice", "bethe", "hypercube", "generic")


@dataclass(frozen=True)
class BoundQuery:
    """Parameters of one envelope evaluation.

    ``structure`` picks the formula; ``d`` is the graph distance except for
    ``lattice`` (which uses ``coords``).  ``degree`` is the Bethe ``N``, the
    hypercube dimension or the generic maximum degree.
    """

    structure: str
    h: float
    elapsed: float
    d: int = 0
    coords: tuple[int, ...] = ()
    degree: Optional[int] = None

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}; expected one of {STRUCTURES}")
        _check_nonneg(h=self.h, elapsed=self.elapsed)
        _check_nonneg_int(d=self.d)
        if self.structure in ("bethe", "hypercube", "generic") and self.degree is None:
            raise ValueError(f"structure {self.structure!r} needs a degree / dimension")
        if self.structure == "lattice" and not self.coords:
            raise ValueError("structure 'lattice' needs coords")

    def evaluate(self) -> float:
        s = self.structure
        if s == "tridiagonal":
            return bound_tridiagonal(self.h, self.elapsed, self.d)
        if s == "lattice":
            return bound_lattice(self.h, self.elapsed, self.coords)
        if s == "bethe":
            return bound_bethe(self.h, self.elapsed, self.degree, self.d)
        if s == "hypercube":
            return bound_hypercube(self.h, self.elapsed, self.degree, self.d)
        return bound_generic(self.h, self.elapsed, self.degree, self.d)


# ---------------------------------------------------------------------------
# bound for a concrete matrix
# ---------------------------------------------------------------------------

VIOLATION_SLACK = 1e-12


@dataclass
class MatrixBound:
    """Envelope of ``|OE(t_i, t_0)[omega, alpha]|`` on every grid node."""

    alpha: int
    omega: int
    h: float
    distance: Optional[int]
    max_degree: int
    times: np.ndarray
    bound: np.ndarray
    values: np.ndarray
    violations: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def bound_from_matrix(spec, grid, alpha: int, omega: int, values=None, slack: float = VIOLATION_SLACK) -> MatrixBound:
    """Generic envelope for entry ``[omega, alpha]`` of ``spec``'s propagator.

    ``h`` is the largest ``|H_ij(t)|`` over all entries and grid nodes, ``d``
    the directed distance ``alpha -> omega`` and ``Δ`` the maximum degree of
    the sparsity graph.  The path-sum value is computed (unless ``values``
    is given) and every node where it exceeds the envelope by more than
    ``slack`` is listed as ``(t, |value|, bound)``.
    """
    from .engine import path_sum_entry
    from .graph import build_graph, distance, max_degree

    graph = build_graph(spec, grid)
    H = spec.values(grid.nodes)
    h = float(np.abs(H).max()) if H.size else 0.0
    d = distance(graph, alpha, omega)
    deg = max_degree(graph)
    ts = grid.nodes
    elapsed = ts - grid.t_min
    if d is None:
        bound = np.zeros(ts.size)
    else:
        bound = np.array([bound_generic(h, float(e), deg, d) for e in elapsed])
    if values is None:
        values = path_sum_entry(spec, grid, omega, alpha).values
    values = np.asarray(values, dtype=float)
    bad = np.nonzero(np.abs(values) > bound + slack)[0]
    violations = [(float(ts[i]), float(abs(values[i])), float(bound[i])) for i in bad]
    return MatrixBound(alpha, omega, h, d, deg, ts, bound, values, violations)
