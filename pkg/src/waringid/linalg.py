"""Dense linear algebra over complex doubles and over a large prime field.

The complex side provides an LU solver with partial pivoting and a
singular-value numerical rank.  The prime-field side provides exact rank
and right-kernel computation by Gaussian elimination on Python integers
(held in object-dtype numpy arrays so row operations stay vectorized
while arithmetic stays exact).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Largest prime below 2**62 and the next prime below it.  Ranks computed
# modulo a random large prime at random points equal the generic rank
# with overwhelming probability; two independent primes make an unlucky
# collapse practically impossible.
DEFAULT_PRIME = 4611686018427387847
RETRY_PRIME = 4611686018427387817

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class SingularSystemError(RuntimeError):
    """Raised when a pivot falls below the singularity threshold."""


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin primality test (exact for m < 3.3e24)."""
    if m < 2:
        return False
    for p in _MR_BASES:
        if m % p == 0:
            return m == p
    d = m - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """A prime modulus; primality is checked at construction."""

    p: int = DEFAULT_PRIME

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")


def lu_solve(a, b, pivot_rtol: float = 1e-14) -> np.ndarray:
    """Solve the square complex system a x = b with partial pivoting.

    Args:
        a: square matrix.
        b: right-hand side vector.
        pivot_rtol: a pivot below pivot_rtol * max|a| raises
            SingularSystemError (a path passing near the discriminant
            shows up here).

    Returns:
        Solution vector x.
    """
    A = np.ascontiguousarray(a, dtype=np.complex128)
    x = np.asarray(b, dtype=np.complex128)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix must be square, got {A.shape}")
    if x.shape != (n,):
        raise ValueError(f"rhs has shape {x.shape}, expected ({n},)")
    scale = np.abs(A).max() if n else 0.0
    if scale == 0.0:
        raise SingularSystemError("zero matrix")
    with warnings.catch_warnings():
        # exact zeros on the diagonal are reported via SingularSystemError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    small = pivots <= pivot_rtol * scale
    if small.any():
        k = int(np.argmax(small))
        raise SingularSystemError(
            f"pivot {pivots[k]:.3e} below threshold at column {k}"
        )
    return scipy.linalg.lu_solve((lu, piv), x, check_finite=False)


def numerical_rank(a, tol: float = 1e-8) -> int:
    """Number of singular values above tol * (largest singular value)."""
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must be in (0, 1), got {tol}")
    A = np.asarray(a, dtype=np.complex128)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _modp_array(a, p: int) -> np.ndarray:
    """Copy input into an object-dtype array of Python ints reduced mod p."""
    rows = [[int(v) % p for v in row] for row in a]
    if not rows or not rows[0]:
        return np.empty((len(rows), 0), dtype=object)
    return np.array(rows, dtype=object)


def _echelon_modp(A: np.ndarray, p: int, reduced: bool):
    """Row echelon form mod p; returns (matrix, pivot column list)."""
    A = A.copy()
    rows, cols = A.shape
    pivot_cols: list[int] = []
    rpos = 0
    for c in range(cols):
        if rpos == rows:
            break
        nz = np.flatnonzero(A[rpos:, c])
        if nz.size == 0:
            continue
        pr = rpos + int(nz[0])
        if pr != rpos:
            A[[rpos, pr]] = A[[pr, rpos]]
        inv = pow(int(A[rpos, c]), -1, p)
        A[rpos] = A[rpos] * inv % p
        if reduced:
            targets = np.flatnonzero(A[:, c]).tolist()
            targets.remove(rpos)
        else:
            targets = (rpos + 1 + np.flatnonzero(A[rpos + 1:, c])).tolist()
        if targets:
            A[targets] = (A[targets] - np.outer(A[targets, c], A[rpos])) % p
        pivot_cols.append(c)
        rpos += 1
    return A, pivot_cols


def rank_modp(a, field: PrimeField) -> int:
    """Exact rank of a matrix over F_p by Gaussian elimination."""
    A = _modp_array(a, field.p)
    if A.size == 0:
        return 0
    _, pivot_cols = _echelon_modp(A, field.p, reduced=False)
    return len(pivot_cols)


def kernel_basis_modp(a, field: PrimeField) -> list[list[int]]:
    """Basis of the right kernel {v : a v = 0} over F_p.

    Returns cols - rank vectors read off the reduced row echelon form:
    one basis vector per free column, with a 1 in that column.
    """
    p = field.p
    A = _modp_array(a, p)
    rows, cols = A.shape
    if cols == 0:
        return []
    if rows == 0:
        return [[1 if j == f else 0 for j in range(cols)] for f in range(cols)]
    R, pivot_cols = _echelon_modp(A, p, reduced=True)
    pivot_set = set(pivot_cols)
    basis = []
    for f in range(cols):
        if f in pivot_set:
            continue
        v = [0] * cols
        v[f] = 1
        for i, c in enumerate(pivot_cols):
            v[c] = int(-R[i, f]) % p
        basis.append(v)
    return basis
