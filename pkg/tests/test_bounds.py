import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathsum import bounds as b
from pathsum.matrix import MatrixSpec
from pathsum.special import bessel_i, matrix_exp

K = 12


# --- walk counts --------------------------------------------------------------


def test_path_graph_examples():
    assert b.walk_count_path_graph(0, 0) == 1
    assert b.walk_count_path_graph(0, 2) == 3
    assert b.walk_count_path_graph(1, 1) == 1
    assert b.walk_count_path_graph(5, 3) == 0


@pytest.mark.parametrize("d", range(K + 1))
def test_path_graph_brute_force(d):
    brute = b.brute_path_graph(d, K)
    assert brute == [b.walk_count_path_graph(d, k) for k in range(K + 1)]


def test_hypercube_examples():
    assert b.walk_count_hypercube(1, 1, 0) == 1
    assert b.walk_count_hypercube(2, 0, 1) == b.brute_hypercube(2, 0, 2)[2] == 2
    assert b.walk_count_hypercube_looped(2, 0, 2) == b.brute_hypercube(2, 0, 2, loops=True)[2] == 3
    for N in (0, 2, 4):
        assert b.walk_count_hypercube(N, 0, 0) == 1
    with pytest.raises(ValueError):
        b.walk_count_hypercube(2, 3, 0)


@pytest.mark.parametrize("N", range(7))
def test_hypercube_brute_force(N):
    for d in range(N + 1):
        loopless = b.brute_hypercube(N, d, K)
        looped = b.brute_hypercube(N, d, K, loops=True)
        for k in range(K + 1):
            expected = b.walk_count_hypercube(N, d, (k - d) // 2) if k >= d and (k - d) % 2 == 0 else 0
            assert loopless[k] == expected
            assert looped[k] == b.walk_count_hypercube_looped(N, d, k)


def test_bethe_examples():
    for d in range(6):
        assert b.walk_count_bethe_upper(3, d, 0)[0] == 1
    assert b.walk_count_bethe_upper(2, 0, 0) == (1, 1)
    # return walks of length 2 on a tree of degree N + 1
    assert b.walk_count_bethe_upper(4, 0, 1)[0] == 5
    with pytest.raises(ValueError):
        b.walk_count_bethe_upper(1, 0, 0)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_bethe_brute_force(N):
    for d in range(K + 1):
        brute = b.brute_bethe(N, d, K)
        for k in range(K + 1):
            if k >= d and (k - d) % 2 == 0:
                exact, bound = b.walk_count_bethe_upper(N, d, (k - d) // 2)
                assert brute[k] == exact
                assert exact <= bound
            else:
                assert brute[k] == 0


def test_bethe_bound_sweep():
    for N in range(2, 5):
        for d in range(5):
            for n in range(7):
                exact, bound = b.walk_count_bethe_upper(N, d, n)
                assert exact <= bound


@pytest.mark.parametrize("coords", [(0, 0), (1, 0), (2, 1), (1, 1, 1)])
def test_lattice_series_saturates_bound(coords):
    k_max = 10 if len(coords) == 2 else 8
    counts = b.brute_lattice(coords, k_max)
    for x in (0.1, 0.3):
        partial = b.walk_series(x, counts)
        closed = b.bound_lattice(x, 1.0, coords)
        # the truncated series is a lower bound converging to the closed form
        assert partial <= closed * (1 + 1e-12)
        tail = sum(x**k / math.factorial(k) * (2 * len(coords) + 1) ** k for k in range(k_max + 1, 60))
        assert closed - partial <= tail


# --- bounds -----------------------------------------------------------------------


def test_tridiagonal_examples():
    assert b.bound_tridiagonal(1, 0, 0) == 1.0
    assert b.bound_tridiagonal(1, 0, 3) == 0.0
    for d in range(8):
        series = b.walk_series(1.0, lambda k: b.walk_count_path_graph(d, k), d)
        assert b.bound_tridiagonal(1, 1, d) == pytest.approx(series, rel=1e-12)
    vals = [b.bound_tridiagonal(0.4, 1.5, d) for d in range(10)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_lattice_examples():
    for d in range(5):
        assert b.bound_lattice(0.7, 1.3, [d]) == b.bound_tridiagonal(0.7, 1.3, d)
    assert b.bound_lattice(1, 0, [0, 0, 0]) == 1.0
    assert b.bound_lattice(0.5, 2.0, [1, 1]) == pytest.approx(math.e * bessel_i(1, 2.0) ** 2, rel=1e-14)


def test_bethe_bound_dominates_series():
    for N in (2, 3, 4):
        for d in range(6):
            for x in (0.05, 0.3, 1.0, 2.0):
                series = b.walk_series(
                    x,
                    lambda k: b.walk_count_bethe_upper(N, d, (k - d) // 2)[0] if k >= d and (k - d) % 2 == 0 else 0,
                    d,
                )
                assert series <= b.bound_bethe(x, 1.0, N, d)


def test_bethe_limits_and_decay():
    assert b.bound_bethe(0, 1, 3, 0) == 1.0
    assert b.bound_bethe(0, 1, 3, 2) == 0.0
    ratios = [b.bound_bethe(1, 1, 3, d + 1) / b.bound_bethe(1, 1, 3, d) for d in range(5, 40, 5)]
    assert all(x > y for x, y in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.05
    # small-M limit of the d=0 bound is continuous
    assert b.bound_bethe(1e-9, 1, 3, 0) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("x", [0.25, 0.5, 1.0])
def test_hypercube_closed_form(x):
    assert b.bound_hypercube(x, 1, 0, 0) == pytest.approx(math.exp(x))
    for N in range(7):
        for d in range(N + 1):
            series = b.walk_series(x, lambda k: b.walk_count_hypercube_looped(N, d, k), d)
            assert series == pytest.approx(b.bound_hypercube(x, 1, N, d), rel=1e-12)
            generic = math.exp((N + 1) * x) * ((N + 1) * x) ** d / math.factorial(d)
            assert b.bound_hypercube(x, 1, N, d) <= generic


def test_hypercube_decay_is_exponential():
    x = 0.8
    ratios = [b.bound_hypercube(x, 1, 20, d + 1) / b.bound_hypercube(x, 1, 20, d) for d in range(20)]
    assert np.allclose(ratios, math.tanh(x), rtol=1e-12)


def test_hypercube_log_space():
    x = 60.0
    N = 10
    direct = math.exp(x) * math.sinh(x) ** 3 * math.cosh(x) ** 7
    assert b.bound_hypercube(x, 1, N, 3) == pytest.approx(direct, rel=1e-12)
    assert math.isinf(b.bound_hypercube(1000, 1, N, 3))


def test_generic_examples():
    assert b.bound_generic(1.5, 2, 3, 0) == pytest.approx(math.exp(9.0))
    assert b.bound_generic(1, 1, 0, 0) == 1.0
    assert b.bound_generic(1, 1, 0, 2) == 0.0
    assert b.bound_generic(400, 1, 2, 3) == math.inf
    assert b.bound_generic(2, 100, 2, 50) == pytest.approx(
        math.exp(400 + 50 * math.log(400) - math.lgamma(51)), rel=1e-12
    )


def test_generic_vs_tridiagonal_ratio():
    # the maximum-degree bound with Δ = 2 exceeds the Bessel bound by e^{x} 2^d asymptotically
    x = 0.5
    for d in (40, 80):
        ratio = b.bound_generic(x, 1, 2, d) / b.bound_tridiagonal(x, 1, d)
        assert ratio / (math.exp(x) * 2**d) == pytest.approx(1.0, rel=2 / d)
    assert b.bound_generic(x, 1, 2, 10) >= b.bound_tridiagonal(x, 1, 10)


@given(
    st.floats(0, 3),
    st.floats(0, 3),
    st.integers(0, 6),
)
def test_every_bound_dominates_path_series(h, dt, d):
    x = h * dt
    series = b.walk_series(x, lambda k: b.walk_count_path_graph(d, k), d)
    assert b.bound_tridiagonal(h, dt, d) >= series * (1 - 1e-12)
    assert b.bound_generic(h, dt, 3, d) >= series * (1 - 1e-12)


def test_query_dispatch():
    q = b.BoundQuery("bethe", 0.5, 1.0, d=2, degree=3)
    assert q.evaluate() == b.bound_bethe(0.5, 1.0, 3, 2)
    assert b.BoundQuery("lattice", 1, 1, coords=(1, 2)).evaluate() == b.bound_lattice(1, 1, (1, 2))
    with pytest.raises(ValueError):
        b.BoundQuery("hypercube", 1, 1, d=1)
    with pytest.raises(ValueError):
        b.BoundQuery("torus", 1, 1)
    with pytest.raises(ValueError):
        b.BoundQuery("generic", -1, 1, degree=2)


def test_path_graph_saturation():
    width = 81
    mid = width // 2
    E = matrix_exp(b.path_graph_adjacency(width).astype(float))
    for d in range(7):
        assert E[mid + d, mid] == pytest.approx(math.e * bessel_i(d, 2.0), abs=1e-12)


# --- bounds for concrete matrices --------------------------------------------------


def test_bound_from_matrix_triangle(triangle_spec):
    grid = triangle_spec.grid(200)
    res = b.bound_from_matrix(triangle_spec, grid, 0, 1)
    assert res.distance == 2 and res.max_degree == 1 and res.h == 2.0
    x = res.h * (grid.nodes - grid.t_min)
    assert np.allclose(res.bound, np.exp(x) * x**2 / 2)
    assert res.ok


def test_bound_from_matrix_zero_coupling():
    spec = MatrixSpec.from_rows([["1", "0"], ["0", "t"]], (0, 1))
    res = b.bound_from_matrix(spec, spec.grid(50), 0, 1)
    assert res.distance is None
    assert np.all(res.bound == 0) and np.all(res.values == 0)
    assert res.ok


def test_bound_from_matrix_k2(k2_spec):
    grid = k2_spec.grid(200)
    for a in range(2):
        for w in range(2):
            assert b.bound_from_matrix(k2_spec, grid, a, w).ok


def test_bound_from_matrix_reports_violations(k2_spec):
    grid = k2_spec.grid(20)
    fake = np.full(grid.n_nodes, 1e300)
    res = b.bound_from_matrix(k2_spec, grid, 0, 1, values=fake)
    assert not res.ok
    assert len(res.violations) == grid.n_nodes
