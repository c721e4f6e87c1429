"""Power-series special functions and the matrix exponential.

All series stop once the next term is below ``SERIES_RTOL`` relative to the
partial sum *and* the term ratio has dropped under one half, so the
remaining tail is bounded by twice the last term.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_RTOL = 1e-14
_MAX_TERMS = 10_000


def _is_pole(b):
    return b <= 0 and float(b).is_integer()


def hyp0f2(b1: float, b2: float, z: float) -> float:
    """Generalised hypergeometric ``0F2(; b1, b2; z) = Σ z^k / ((b1)_k (b2)_k k!)``."""
    if _is_pole(b1) or _is_pole(b2):
        raise ValueError(f"0F2 has a pole at b1={b1}, b2={b2}")
    total = 1.0
    term = 1.0
    for k in range(_MAX_TERMS):
        ratio = z / ((b1 + k) * (b2 + k) * (k + 1))
        term *= ratio
        total += term
        if abs(term) <= SERIES_RTOL * abs(total) and abs(ratio) < 0.5:
            return total
        if term == 0.0:
            return total
    raise ArithmeticError("0F2 series did not converge")


def bessel_i(nu: int, x: float) -> float:
    """Modified Bessel function of the first kind ``I_nu(x)`` for integer ``nu``."""
    if int(nu) != nu:
        raise ValueError("only integer orders are supported")
    nu = abs(int(nu))
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    # leading term (x/2)^nu / nu!, in log space so large orders do not overflow
    log_lead = nu * math.log(abs(half)) - math.lgamma(nu + 1)
    if log_lead < -745.0:
        return 0.0
    term = math.exp(log_lead)
    if half < 0 and nu % 2:
        term = -term
    total = term
    q = half * half
    for m in range(1, _MAX_TERMS):
        ratio = q / (m * (m + nu))
        term *= ratio
        total += term
        if abs(term) <= SERIES_RTOL * abs(total) and ratio < 0.5:
            return total
    raise ArithmeticError("Bessel series did not converge")


def matrix_exp(M) -> np.ndarray:
    """``exp(M)`` by scaling and squaring with a truncated Taylor series.

    The matrix is scaled so its 1-norm is at most 1/2, where 20 Taylor terms
    leave a relative remainder far below double precision.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix_exp needs a square matrix")
    n = A.shape[0]
    norm = np.abs(A).sum(axis=0).max() if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    A = A / (2.0**s)
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, 21):
        term = term @ A / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result
