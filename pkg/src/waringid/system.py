"""Square decomposition systems and their residual/Jacobian evaluation.

A WaringSystem fixes a coefficient vector f (the parameters) and asks for
all parameter points whose rank-one summands reproduce it:

    residual(point) = parameters - forward_map(point)

The residual convention is "parameters minus model", so solutions are the
zeros of the residual.  JSON serialization of specs, parameter vectors and
points lives here too (complex numbers as [re, im] pairs).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .polyspace import (
    ProblemSpec,
    SummandParams,
    _forward_jacobian_arrays,
    _forward_map_arrays,
    forward_map,
)

SCHEMA_VERSION = 1


class ConfigurationError(ValueError):
    """Inconsistent problem setup (e.g. a non-square system for tracking)."""


@dataclass(frozen=True)
class DecompositionPoint:
    """k summand blocks; a candidate solution of a decomposition system."""

    summands: tuple[SummandParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))

    @property
    def k(self) -> int:
        return len(self.summands)

    def to_vector(self) -> np.ndarray:
        """Flat complex vector: k blocks of (n linear coords, r weights)."""
        vals = []
        for s in self.summands:
            vals.extend(s.linear)
            vals.extend(s.weights)
        return np.array(vals, dtype=np.complex128)

    @staticmethod
    def from_vector(vec, n: int, r: int) -> "DecompositionPoint":
        vec = np.asarray(vec)
        bs = n + r
        if vec.ndim != 1 or vec.size % bs != 0:
            raise ValueError(
                f"vector of length {vec.size} is not a multiple of block size {bs}"
            )
        blocks = vec.reshape(-1, bs)
        return DecompositionPoint(
            tuple(
                SummandParams(tuple(row[:n]), tuple(row[n:])) for row in blocks
            )
        )

    def conjugate(self) -> "DecompositionPoint":
        return DecompositionPoint(tuple(s.conjugate() for s in self.summands))


@dataclass(frozen=True)
class RankInfo:
    """Expected generic rank and the sub-generic threshold for a spec."""

    spec: ProblemSpec
    generic_rank: int
    perfect: bool
    subgeneric_bound: int

    def is_subgeneric(self, k: int) -> bool:
        return k < self.generic_rank


def rank_info(spec: ProblemSpec) -> RankInfo:
    """Expected generic rank g = ceil(N / (n+r)) with the perfect-case flag."""
    g = ceil(spec.ambient_dim / spec.block_size)
    return RankInfo(
        spec=spec,
        generic_rank=g,
        perfect=spec.ambient_dim % spec.block_size == 0,
        subgeneric_bound=g - 1,
    )


class WaringSystem:
    """The square system with unknown summand parameters and fixed f.

    Immutable after construction; evaluation methods are pure.  Vector
    variants (residual_vector / jacobian_vector) operate on the flat
    block layout and back the tracker's hot path.
    """

    def __init__(self, spec: ProblemSpec, k: int, parameters, *, require_square: bool = True):
        parameters = np.asarray(parameters, dtype=np.complex128)
        if parameters.shape != (spec.ambient_dim,):
            raise ConfigurationError(
                f"parameter vector has shape {parameters.shape}, "
                f"expected ({spec.ambient_dim},)"
            )
        if k < 1:
            raise ConfigurationError(f"k must be >= 1, got {k}")
        self.spec = spec
        self.k = k
        self.parameters = parameters
        self.parameters.setflags(write=False)
        self.equations = spec.ambient_dim
        self.unknowns = k * spec.block_size
        if require_square and not self.is_square:
            raise ConfigurationError(
                f"system is not square: {self.equations} equations vs "
                f"{self.unknowns} unknowns (N = {spec.ambient_dim}, "
                f"k(n+r) = {k}*{spec.block_size})"
            )

    @property
    def is_square(self) -> bool:
        return self.equations == self.unknowns

    def _check_vector(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.unknowns,):
            raise ValueError(
                f"point vector has shape {x.shape}, expected ({self.unknowns},)"
            )
        return x

    def residual_vector(self, x) -> np.ndarray:
        x = self._check_vector(x)
        blocks = x.reshape(self.k, self.spec.block_size)
        L, W = blocks[:, : self.spec.n], blocks[:, self.spec.n:]
        return self.parameters - _forward_map_arrays(self.spec, L, W, None)

    def jacobian_vector(self, x) -> np.ndarray:
        x = self._check_vector(x)
        blocks = x.reshape(self.k, self.spec.block_size)
        L, W = blocks[:, : self.spec.n], blocks[:, self.spec.n:]
        return -_forward_jacobian_arrays(self.spec, L, W, None)

    def conjugate(self) -> "WaringSystem":
        return WaringSystem(
            self.spec, self.k, np.conj(self.parameters),
            require_square=False,
        )


def build_system(spec: ProblemSpec, k: int, parameters, *, require_square: bool = True) -> WaringSystem:
    """Assemble the decomposition system for the coefficient vector f.

    Raises ConfigurationError (naming N and k(n+r)) when the system is
    not square and squareness is required, which is the default since
    only square systems can be tracked.
    """
    return WaringSystem(spec, k, parameters, require_square=require_square)


def residual(system: WaringSystem, point: DecompositionPoint) -> np.ndarray:
    """parameters - forward_map(point); zero exactly at decompositions of f."""
    if point.k != system.k:
        raise ValueError(f"point has {point.k} blocks, system expects {system.k}")
    return system.parameters - forward_map(system.spec, point.summands)


def jacobian(system: WaringSystem, point: DecompositionPoint) -> np.ndarray:
    """Derivative of the residual: minus the forward-map Jacobian."""
    if point.k != system.k:
        raise ValueError(f"point has {point.k} blocks, system expects {system.k}")
    from .polyspace import forward_jacobian

    return -forward_jacobian(system.spec, point.summands)


# ---------------------------------------------------------------------------
# JSON serialization helpers (schema: complex numbers as [re, im] pairs)


def complex_to_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def pair_to_complex(pair) -> complex:
    re, im = pair
    return complex(re, im)


def spec_to_dict(spec: ProblemSpec) -> dict:
    return {"n": spec.n, "r": spec.r, "degrees": list(spec.degrees)}


def spec_from_dict(d: dict) -> ProblemSpec:
    return ProblemSpec(n=int(d["n"]), r=int(d["r"]), degrees=tuple(d["degrees"]))


def params_to_list(parameters) -> list[list[float]]:
    return [complex_to_pair(z) for z in np.asarray(parameters).ravel()]


def params_from_list(pairs) -> np.ndarray:
    return np.array([pair_to_complex(p) for p in pairs], dtype=np.complex128)


def point_to_dict(point: DecompositionPoint) -> dict:
    return {
        "blocks": [
            {
                "linear": [complex_to_pair(v) for v in s.linear],
                "weights": [complex_to_pair(v) for v in s.weights],
            }
            for s in point.summands
        ]
    }


def point_from_dict(d: dict) -> DecompositionPoint:
    return DecompositionPoint(
        tuple(
            SummandParams(
                tuple(pair_to_complex(p) for p in blk["linear"]),
                tuple(pair_to_complex(p) for p in blk["weights"]),
            )
            for blk in d["blocks"]
        )
    )
