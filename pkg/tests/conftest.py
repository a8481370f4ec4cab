"""Shared helpers: finite-difference oracles and random instance generators."""

from __future__ import annotations

import numpy as np
import pytest

from waringid import ProblemSpec, SummandParams, forward_map


def random_summands(spec: ProblemSpec, k: int, rng: np.random.Generator,
                    complex_entries: bool = False) -> list[SummandParams]:
    def draw(size):
        vals = rng.uniform(-1.0, 1.0, size)
        if complex_entries:
            vals = vals + 1j * rng.uniform(-1.0, 1.0, size)
        return vals
    return [
        SummandParams(tuple(draw(spec.n)), tuple(draw(spec.r)))
        for _ in range(k)
    ]


def summands_to_vector(summands) -> np.ndarray:
    vals = []
    for s in summands:
        vals.extend(s.linear)
        vals.extend(s.weights)
    return np.array(vals, dtype=np.complex128)


def vector_to_summands(vec: np.ndarray, spec: ProblemSpec) -> list[SummandParams]:
    bs = spec.block_size
    blocks = np.asarray(vec).reshape(-1, bs)
    return [SummandParams(tuple(b[: spec.n]), tuple(b[spec.n:])) for b in blocks]


def fd_jacobian(spec: ProblemSpec, summands, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of forward_map, the derivative oracle."""
    x0 = summands_to_vector(summands)
    cols = []
    for c in range(x0.size):
        xp, xm = x0.copy(), x0.copy()
        xp[c] += h
        xm[c] -= h
        fp = forward_map(spec, vector_to_summands(xp, spec))
        fm = forward_map(spec, vector_to_summands(xm, spec))
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# specs exercised by the derivative property suites
PROPERTY_SPECS = [
    ProblemSpec(n=2, r=1, degrees=(2,)),
    ProblemSpec(n=2, r=2, degrees=(2, 3)),
    ProblemSpec(n=2, r=4, degrees=(2, 3, 3, 3)),
    ProblemSpec(n=3, r=2, degrees=(2, 2)),
    ProblemSpec(n=2, r=3, degrees=(3, 3, 4)),
]
