"""Identifiability certification at sub-generic rank via tangent-space ranks.

The rank-one variety is sampled at k random points over a large prime
field.  Full rank of the stacked tangent matrix certifies that the span
of the k tangent spaces has the expected dimension; the kernel of that
matrix gives the linear equations of the span, and the rank of the
stacked second-derivative contractions at each sample point bounds the
dimension of the tangential contact locus there.  When every contact
rank equals n+r-1 the decomposition of a general rank-k vector is unique
over the complex numbers.

Negative observations (rank drops) are retried once with a fresh prime
and seed before being reported, since a special-point or modular rank
collapse can only lower ranks below their generic values.  A verdict of
"not certified" is therefore inconclusive rather than a disproof.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_PRIME,
    RETRY_PRIME,
    PrimeField,
    kernel_basis_modp,
    rank_modp,
)
from .polyspace import (
    ProblemSpec,
    SummandParams,
    forward_hessian_contraction,
    forward_jacobian,
)
from .system import SCHEMA_VERSION, rank_info, spec_to_dict

VERDICT_CERTIFIED = "certified"
VERDICT_TERRACINI_DEFICIENT = "terracini-deficient"
VERDICT_CONTACT_POSITIVE = "contact-locus-positive"


@dataclass(frozen=True)
class IdentCertificate:
    """Outcome of the criterion at one rank k."""

    spec: ProblemSpec
    k: int
    terracini_rank: int
    expected_terracini_rank: int
    hessian_ranks: tuple[int, ...]
    expected_hessian_rank: int
    verdict: str
    prime: int
    seed: int
    retried: bool = False

    @property
    def certified(self) -> bool:
        return self.verdict == VERDICT_CERTIFIED

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": spec_to_dict(self.spec),
            "k": self.k,
            "terracini_rank": self.terracini_rank,
            "expected_terracini_rank": self.expected_terracini_rank,
            "hessian_ranks": list(self.hessian_ranks),
            "expected_hessian_rank": self.expected_hessian_rank,
            "verdict": self.verdict,
            "prime": self.prime,
            "seed": self.seed,
            "retried": self.retried,
        }


@dataclass(frozen=True)
class CertifierRun:
    """Descent trace from the largest sub-generic rank downwards."""

    spec: ProblemSpec
    generic_rank: int
    start_k: int
    trace: tuple[tuple[int, str], ...]
    max_certified_k: int | None
    retries: tuple[tuple[int, int], ...]  # (k, retry count) pairs
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": spec_to_dict(self.spec),
            "generic_rank": self.generic_rank,
            "start_k": self.start_k,
            "trace": [[k, v] for k, v in self.trace],
            "max_certified_k": self.max_certified_k,
            "retries": [[k, c] for k, c in self.retries],
            "seed": self.seed,
        }


@dataclass(frozen=True)
class DefectivityProbe:
    """Observed tangent-span rank at one rank k, over several primes."""

    spec: ProblemSpec
    k: int
    ranks: tuple[tuple[int, int], ...]  # (prime, rank) pairs
    expected_rank: int  # min(k(n+r), N)
    seed: int

    @property
    def deficient(self) -> bool:
        return all(r < self.expected_rank for _, r in self.ranks)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": spec_to_dict(self.spec),
            "k": self.k,
            "ranks": [[p, r] for p, r in self.ranks],
            "expected_rank": self.expected_rank,
            "deficient": self.deficient,
            "seed": self.seed,
        }


def random_variety_points(
    spec: ProblemSpec, k: int, field: PrimeField, seed: int
) -> list[SummandParams]:
    """k uniform random points on the rank-one variety over F_p.

    Points with a zero weight are redrawn (they sit outside the dense
    chart where every component genuinely appears).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = random.Random(seed)
    points = []
    for _ in range(k):
        while True:
            linear = tuple(rng.randrange(field.p) for _ in range(spec.n))
            weights = tuple(rng.randrange(field.p) for _ in range(spec.r))
            if all(weights):
                break
        points.append(SummandParams(linear, weights))
    return points


def terracini_matrix(spec: ProblemSpec, points, field: PrimeField | None = None) -> np.ndarray:
    """Stacked tangent rows at the given points, shape (k(n+r), N).

    Block i holds the n+r parameter directions of point i as rows of
    length N (the transpose of the single-summand forward Jacobian).
    Entries live in F_p when a field is given, otherwise in the ambient
    scalar domain of the points.
    """
    blocks = []
    mod = field.p if field is not None else None
    for pt in points:
        jac = forward_jacobian(spec, [pt], mod=mod)
        blocks.append(jac.T)
    return np.vstack(blocks)


def contact_hessian(spec: ProblemSpec, point: SummandParams, kernel_vectors,
                    field: PrimeField) -> np.ndarray:
    """Stacked Hessian contractions of the span equations at one point.

    One (n+r) x (n+r) block per kernel covector, stacked vertically into
    an ((n+r)*M) x (n+r) matrix, M = number of kernel vectors.  The rank
    is what matters and is invariant under the stacking order.  With no
    kernel vectors (perfect square case) the matrix is empty and the
    criterion is vacuous.
    """
    kernel_vectors = list(kernel_vectors)
    bs = spec.block_size
    if not kernel_vectors:
        return np.empty((0, bs), dtype=object)
    blocks = [
        forward_hessian_contraction(spec, point, kv, mod=field.p)
        for kv in kernel_vectors
    ]
    return np.vstack(blocks)


def _criterion_once(spec: ProblemSpec, k: int, seed: int, field: PrimeField,
                    retried: bool) -> IdentCertificate:
    points = random_variety_points(spec, k, field, seed)
    tangent = terracini_matrix(spec, points, field)
    expected = k * spec.block_size
    t_rank = rank_modp(tangent, field)
    if t_rank < expected:
        return IdentCertificate(
            spec=spec, k=k,
            terracini_rank=t_rank, expected_terracini_rank=expected,
            hessian_ranks=(), expected_hessian_rank=spec.block_size - 1,
            verdict=VERDICT_TERRACINI_DEFICIENT,
            prime=field.p, seed=seed, retried=retried,
        )
    kernel = kernel_basis_modp(tangent, field)
    ranks = []
    for pt in points:
        stacked = contact_hessian(spec, pt, kernel, field)
        ranks.append(rank_modp(stacked, field))
    ok = all(r == spec.block_size - 1 for r in ranks)
    return IdentCertificate(
        spec=spec, k=k,
        terracini_rank=t_rank, expected_terracini_rank=expected,
        hessian_ranks=tuple(ranks), expected_hessian_rank=spec.block_size - 1,
        verdict=VERDICT_CERTIFIED if ok else VERDICT_CONTACT_POSITIVE,
        prime=field.p, seed=seed, retried=retried,
    )


def _retry_field(primary: PrimeField) -> PrimeField:
    return PrimeField(RETRY_PRIME if primary.p != RETRY_PRIME else DEFAULT_PRIME)


def certify_at_k(spec: ProblemSpec, k: int, seed: int,
                 field: PrimeField | None = None) -> IdentCertificate:
    """Run the criterion at a single sub-generic rank k.

    Requires k < g (the expected generic rank).  A negative first attempt
    is retried once with a fresh prime and seed; a negative that survives
    the retry is reported but remains inconclusive by design.
    """
    info = rank_info(spec)
    if k >= info.generic_rank:
        raise ValueError(
            f"k = {k} is not sub-generic (expected generic rank g = "
            f"{info.generic_rank}); the criterion applies for k < g"
        )
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    primary = field or PrimeField(DEFAULT_PRIME)
    cert = _criterion_once(spec, k, seed, primary, retried=False)
    if cert.certified:
        return cert
    return _criterion_once(spec, k, seed + 1, _retry_field(primary), retried=True)


def certify_descend(spec: ProblemSpec, seed: int = 0,
                    field: PrimeField | None = None) -> CertifierRun:
    """Descend k from g-1 until the criterion certifies (or k hits zero).

    Certifying some rank also certifies every smaller rank, so the first
    success is the maximal certified sub-generic rank.
    """
    info = rank_info(spec)
    start_k = info.generic_rank - 1
    trace: list[tuple[int, str]] = []
    retries: list[tuple[int, int]] = []
    max_certified = None
    k = start_k
    while k >= 1:
        cert = certify_at_k(spec, k, seed, field)
        trace.append((k, cert.verdict))
        retries.append((k, 1 if cert.retried else 0))
        if cert.certified:
            max_certified = k
            break
        k -= 1
    return CertifierRun(
        spec=spec,
        generic_rank=info.generic_rank,
        start_k=start_k,
        trace=tuple(trace),
        max_certified_k=max_certified,
        retries=tuple(retries),
        seed=seed,
    )


def probe_defectivity(spec: ProblemSpec, k: int, seed: int = 0,
                      fields: tuple[PrimeField, ...] | None = None) -> DefectivityProbe:
    """Observe the tangent-span rank at rank k over several primes.

    Unlike certify_at_k this makes sense at any k >= 1, in particular at
    k = g where a rank below min(k(n+r), N) exhibits defectivity of the
    k-th secant variety.  Rank deficiency observed over independent
    primes is overwhelming evidence, not a proof.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if fields is None:
        fields = (PrimeField(DEFAULT_PRIME), PrimeField(RETRY_PRIME))
    ranks = []
    for i, fld in enumerate(fields):
        points = random_variety_points(spec, k, fld, seed + i)
        ranks.append((fld.p, rank_modp(terracini_matrix(spec, points, fld), fld)))
    return DefectivityProbe(
        spec=spec,
        k=k,
        ranks=tuple(ranks),
        expected_rank=min(k * spec.block_size, spec.ambient_dim),
        seed=seed,
    )
