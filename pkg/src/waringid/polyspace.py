"""Monomial combinatorics and the rank-one forward map.

A rank-one polynomial vector is built from one linear form
``l = x0 + l_1*x1 + ... + l_n*xn`` (the x0 coefficient is pinned to 1)
and one weight per component: component j contributes ``w_j * l**d_j``.
This module evaluates the map from summand parameters to the stacked
coefficient vector of the polynomial vector, together with its first
and second partial derivatives in closed form.

All three evaluators share one code path over two scalar domains:
complex double precision (``mod=None``) and integers modulo a prime
(``mod=p``).  The modular path keeps exact Python integers throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np


@dataclass(frozen=True)
class MonomialBasis:
    """All exponent tuples of a fixed total degree, in a fixed order.

    The order is graded lexicographic with x0 > x1 > ... > xn, i.e.
    descending lexicographic on the exponent tuples.  It is deterministic
    across runs and platforms, which fixes the meaning of every
    coefficient-vector index in this package.
    """

    degree: int
    nvars: int  # number of variables, n + 1
    exponents: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.exponents)

    def index(self, alpha: tuple[int, ...]) -> int:
        return self.exponents.index(tuple(alpha))


@lru_cache(maxsize=None)
def monomial_basis(n: int, degree: int) -> MonomialBasis:
    """Basis of monomials of total degree ``degree`` in n+1 variables.

    Args:
        n: number of variables minus one (x0..xn).
        degree: total degree, >= 0.

    Returns:
        MonomialBasis with C(n + degree, degree) exponent tuples in
        descending lexicographic order ((d,0,...,0) first).
    """
    if n < 1:
        raise ValueError(f"need at least two variables, got n={n}")
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for e in range(remaining, -1, -1):
            extend(prefix + (e,), remaining - e, slots - 1)

    extend((), degree, n + 1)
    assert len(out) == comb(n + degree, degree)
    return MonomialBasis(degree=degree, nvars=n + 1, exponents=tuple(out))


def multinomial(d: int, alpha: tuple[int, ...]) -> int:
    """Multinomial coefficient d! / (alpha_0! * ... * alpha_n!).

    Args:
        d: total degree.
        alpha: exponent tuple with nonnegative entries summing to d.
    """
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    if sum(alpha) != d:
        raise ValueError(f"exponents {alpha} do not sum to degree {d}")
    out = factorial(d)
    for a in alpha:
        out //= factorial(a)
    return out


@dataclass(frozen=True)
class SummandParams:
    """Parameters of one rank-one summand.

    ``linear`` holds the coefficients of x1..xn of the linear form
    (the x0 coefficient is implicitly 1); ``weights`` holds one scalar
    per component of the polynomial vector.
    """

    linear: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "linear", tuple(self.linear))
        object.__setattr__(self, "weights", tuple(self.weights))

    def conjugate(self) -> "SummandParams":
        return SummandParams(
            tuple(np.conj(v) for v in self.linear),
            tuple(np.conj(v) for v in self.weights),
        )


@dataclass(frozen=True)
class ProblemSpec:
    """One decomposition problem: n, the component count r and the degrees.

    Derived data (ambient coefficient count N, per-component monomial
    bases, block size n+r) are computed once and cached on the instance.
    """

    n: int
    r: int
    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if len(self.degrees) != self.r:
            raise ValueError(
                f"expected {self.r} degrees, got {len(self.degrees)}"
            )
        if any(d < 1 for d in self.degrees):
            raise ValueError(f"degrees must be >= 1, got {self.degrees}")
        if any(a > b for a, b in zip(self.degrees, self.degrees[1:])):
            raise ValueError(f"degrees must be nondecreasing, got {self.degrees}")

    @property
    def block_size(self) -> int:
        """Parameters per summand: n linear coefficients plus r weights."""
        return self.n + self.r

    @property
    def ambient_dim(self) -> int:
        """Total coefficient count N = sum_j C(n + d_j, d_j)."""
        return sum(comb(self.n + d, d) for d in self.degrees)

    @property
    def bases(self) -> tuple[MonomialBasis, ...]:
        return tuple(monomial_basis(self.n, d) for d in self.degrees)

    @property
    def component_offsets(self) -> tuple[int, ...]:
        """Start index of each component block in the coefficient vector."""
        offs = []
        pos = 0
        for b in self.bases:
            offs.append(pos)
            pos += len(b)
        return tuple(offs)

    @property
    def component_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)


# ---------------------------------------------------------------------------
# array-level core, shared by the float and mod-p paths


@lru_cache(maxsize=None)
def _exponent_array(spec: ProblemSpec, j: int) -> np.ndarray:
    arr = np.array(spec.bases[j].exponents, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _coeff_array(spec: ProblemSpec, j: int, mod: int | None) -> np.ndarray:
    coeffs = [multinomial(spec.degrees[j], a) for a in spec.bases[j].exponents]
    if mod is None:
        arr = np.array(coeffs, dtype=np.complex128)
    else:
        arr = np.array([c % mod for c in coeffs], dtype=object)
    arr.setflags(write=False)
    return arr


def _param_arrays(spec: ProblemSpec, summands, mod: int | None):
    """Split summands into an L (k x n) and W (k x r) array pair."""
    k = len(summands)
    if mod is None:
        L = np.empty((k, spec.n), dtype=np.complex128)
        W = np.empty((k, spec.r), dtype=np.complex128)
    else:
        L = np.empty((k, spec.n), dtype=object)
        W = np.empty((k, spec.r), dtype=object)
    for i, s in enumerate(summands):
        if len(s.linear) != spec.n:
            raise ValueError(
                f"summand {i} has {len(s.linear)} linear coefficients, expected {spec.n}"
            )
        if len(s.weights) != spec.r:
            raise ValueError(
                f"summand {i} has {len(s.weights)} weights, expected {spec.r}"
            )
        if mod is None:
            L[i] = s.linear
            W[i] = s.weights
        else:
            L[i] = [int(v) % mod for v in s.linear]
            W[i] = [int(v) % mod for v in s.weights]
    return L, W


def _power_table(spec: ProblemSpec, L: np.ndarray, mod: int | None) -> np.ndarray:
    """pow[i, h, e] = (h-th homogeneous coordinate of summand i) ** e.

    Coordinate h=0 is the pinned x0 coefficient 1; h=1..n are the linear
    coefficients.  e runs from 0 to the maximum degree of the spec.
    """
    k = L.shape[0]
    dmax = max(spec.degrees)
    if mod is not None:
        # object arrays must hold Python ints only: a stray numpy integer
        # would silently overflow 64 bits under multiplication
        lv = np.full((k, spec.n + 1), 1, dtype=object)
        table = np.full((k, spec.n + 1, dmax + 1), 1, dtype=object)
    else:
        lv = np.ones((k, spec.n + 1), dtype=np.complex128)
        table = np.ones((k, spec.n + 1, dmax + 1), dtype=np.complex128)
    lv[:, 1:] = L
    for e in range(1, dmax + 1):
        nxt = table[:, :, e - 1] * lv
        if mod is not None:
            nxt %= mod
        table[:, :, e] = nxt
    return table


def _monomial_values(spec, table, j, mod):
    """Values of every degree-d_j monomial at every summand, shape (k, m_j)."""
    E = _exponent_array(spec, j)
    var_idx = np.broadcast_to(np.arange(spec.n + 1), E.shape)
    P = table[:, var_idx, E]  # (k, m, n+1)
    V = P.prod(axis=2)
    if mod is not None:
        V %= mod
    return P, V


def _forward_map_arrays(spec: ProblemSpec, L, W, mod: int | None) -> np.ndarray:
    table = _power_table(spec, L, mod)
    blocks = []
    for j in range(spec.r):
        _, V = _monomial_values(spec, table, j, mod)
        coeffs = _coeff_array(spec, j, mod)
        block = np.dot(W[:, j], V * coeffs[None, :])
        if mod is not None:
            block %= mod
        blocks.append(block)
    return np.concatenate(blocks)


def _forward_jacobian_arrays(spec: ProblemSpec, L, W, mod: int | None) -> np.ndarray:
    k = L.shape[0]
    bs = spec.block_size
    dtype = object if mod is not None else np.complex128
    J = np.zeros((spec.ambient_dim, k * bs), dtype=dtype)
    table = _power_table(spec, L, mod)
    off = 0
    for j in range(spec.r):
        E = _exponent_array(spec, j)
        m = E.shape[0]
        coeffs = _coeff_array(spec, j, mod)
        P, V = _monomial_values(spec, table, j, mod)
        Vc = V * coeffs[None, :]
        if mod is not None:
            Vc %= mod
        for i in range(k):
            J[off:off + m, i * bs + spec.n + j] = Vc[i]
        for h in range(1, spec.n + 1):
            down = np.maximum(E[:, h] - 1, 0)
            efac = E[None, :, h].astype(object) if mod is not None else E[None, :, h]
            dh = table[:, h, :][:, down] * efac
            if mod is not None:
                dh %= mod
            T = P.copy()
            T[:, :, h] = dh
            D = T.prod(axis=2) * coeffs[None, :]
            if mod is not None:
                D %= mod
            for i in range(k):
                col = W[i, j] * D[i]
                if mod is not None:
                    col %= mod
                J[off:off + m, i * bs + (h - 1)] = col
        off += m
    return J


# ---------------------------------------------------------------------------
# public API


def forward_map(spec: ProblemSpec, summands, mod: int | None = None) -> np.ndarray:
    """Coefficient vector of the polynomial vector sum of rank-one summands.

    Args:
        spec: problem dimensions.
        summands: iterable of SummandParams.
        mod: optional prime modulus; with ``mod`` the result is an object
            array of Python ints in [0, mod).

    Returns:
        Length-N array; component blocks are concatenated in degree order,
        each block indexed by the component's MonomialBasis.
    """
    summands = list(summands)
    L, W = _param_arrays(spec, summands, mod)
    return _forward_map_arrays(spec, L, W, mod)


def forward_jacobian(spec: ProblemSpec, summands, mod: int | None = None) -> np.ndarray:
    """Exact first partials of forward_map, shape (N, k*(n+r)).

    Column blocks follow the summand layout: for summand i the columns
    are (l_1..l_n, w_1..w_r), matching the flat vector layout used by
    the system module.
    """
    summands = list(summands)
    L, W = _param_arrays(spec, summands, mod)
    return _forward_jacobian_arrays(spec, L, W, mod)


def forward_hessian_contraction(
    spec: ProblemSpec,
    summand: SummandParams,
    kernel_vector,
    mod: int | None = None,
) -> np.ndarray:
    """Second partials of <kernel_vector, forward_map> for one summand.

    Contracts the Hessian of the rank-one map against a covector of
    length N, yielding the symmetric (n+r) x (n+r) matrix of second
    derivatives with respect to the summand's parameters.  The
    weight-weight block is identically zero since the map is linear in
    the weights.
    """
    K = list(kernel_vector)
    if len(K) != spec.ambient_dim:
        raise ValueError(
            f"kernel vector has length {len(K)}, expected {spec.ambient_dim}"
        )
    L, W = _param_arrays(spec, [summand], mod)
    table = _power_table(spec, L, mod)
    bs = spec.block_size
    dtype = object if mod is not None else np.complex128
    H = np.zeros((bs, bs), dtype=dtype)
    if mod is not None:
        K = [int(v) % mod for v in K]
        Karr = np.array(K, dtype=object)
    else:
        Karr = np.array(K, dtype=np.complex128)
    off = 0
    for j in range(spec.r):
        E = _exponent_array(spec, j)
        m = E.shape[0]
        coeffs = _coeff_array(spec, j, mod)
        a = Karr[off:off + m] * coeffs
        if mod is not None:
            a %= mod
        P = table[0, np.broadcast_to(np.arange(spec.n + 1), E.shape), E]  # (m, n+1)

        def directional(hs: tuple[int, ...]) -> np.ndarray:
            # product over variables with the slots in hs differentiated
            T = P.copy()
            for h in hs:
                reps = hs.count(h)
                e = E[:, h]
                fac = e.astype(object) if mod is not None else e.astype(np.complex128)
                if reps == 2:
                    fac = fac * ((e - 1).astype(object) if mod is not None else (e - 1))
                    down = np.maximum(e - 2, 0)
                else:
                    down = np.maximum(e - 1, 0)
                T[:, h] = table[0, h, :][down] * fac
                if mod is not None:
                    T[:, h] %= mod
            out = T.prod(axis=1)
            if mod is not None:
                out %= mod
            return out

        for h in range(1, spec.n + 1):
            # mixed weight/linear entries
            val = np.dot(a, directional((h,)))
            if mod is not None:
                val %= mod
            H[h - 1, spec.n + j] += val
            H[spec.n + j, h - 1] += val
            # linear/linear entries, weighted by this component's weight
            for g in range(h, spec.n + 1):
                hs = (h, h) if g == h else (h, g)
                val = W[0, j] * np.dot(a, directional(hs))
                if mod is not None:
                    val %= mod
                H[h - 1, g - 1] += val
                if g != h:
                    H[g - 1, h - 1] += val
        off += m
    if mod is not None:
        H %= mod
    return H
