"""Triangle-loop monodromy over decomposition systems.

A random real start instance fixes a square system together with one known
(real) solution.  Each loop sends every known solution through two random
complex parameter vectors and back; endpoints are refined, canonicalized
and merged into a registry of solution classes.  The loop stops once a
fixed number of consecutive loops adds nothing new (saturation) or a loop
budget runs out, and the class registry is classified over the reals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polyspace import ProblemSpec
from .system import (
    ConfigurationError,
    DecompositionPoint,
    SCHEMA_VERSION,
    WaringSystem,
    build_system,
    point_to_dict,
    spec_to_dict,
)
from .tracker import PathResult, TrackOptions, newton_refine, track_segment

REALITY_REAL = "real"
REALITY_SELF_CONJUGATE = "self-conjugate"
REALITY_COMPLEX_PAIRED = "complex-paired"

VERDICT_C_IDENTIFIABLE = "identifiable over ℂ"
VERDICT_R_NOT_C = "identifiable over ℝ, not over ℂ"
VERDICT_NOT_R = "not identifiable over ℝ, not over ℂ"
VERDICT_NOT_C = "not identifiable over ℂ"

# coordinates closer than this collapse to one class; imaginary parts
# below the reality threshold count as zero
DEDUPE_TOL = 1e-6
REALITY_TOL = 1e-6
DEGENERATE_WEIGHT_TOL = 1e-10
CLASS_RESIDUAL_TOL = 1e-10


@dataclass
class SolutionClass:
    """A canonicalized decomposition with its reality classification."""

    point: DecompositionPoint
    reality: str
    residual_norm: float
    multiplicity: int = 1

    def to_dict(self) -> dict:
        return {
            "point": point_to_dict(self.point),
            "reality": self.reality,
            "residual_norm": self.residual_norm,
            "multiplicity": self.multiplicity,
        }


@dataclass
class MonodromyReport:
    """Outcome of a monodromy run: classes, counts, statistics, verdict."""

    spec: ProblemSpec
    k: int
    seed: int | None
    classes: list[SolutionClass]
    loops_run: int
    paths_failed: int
    degenerate_discarded: int
    saturated: bool
    verdict: str

    @property
    def count_complex(self) -> int:
        return len(self.classes)

    @property
    def count_real(self) -> int:
        return sum(1 for c in self.classes if c.reality == REALITY_REAL)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": spec_to_dict(self.spec),
            "k": self.k,
            "seed": self.seed,
            "classes": [c.to_dict() for c in self.classes],
            "count_complex": self.count_complex,
            "count_real": self.count_real,
            "loops_run": self.loops_run,
            "paths_failed": self.paths_failed,
            "degenerate_discarded": self.degenerate_discarded,
            "saturated": self.saturated,
            "verdict": self.verdict,
        }


def generate_start_instance(
    spec: ProblemSpec, k: int, seed: int, *, round_two_decimals: bool = False
):
    """Random real start point and the parameters it decomposes.

    Point entries are uniform in [-1, 1]; the parameters are the exact
    forward image, so the pair has residual zero by construction.
    ``round_two_decimals`` snaps the point entries to two decimals first.
    """
    _require_square(spec, k)
    rng = np.random.default_rng(seed)
    return _draw_start(spec, k, rng, round_two_decimals)


def _draw_start(spec: ProblemSpec, k: int, rng: np.random.Generator,
                round_two_decimals: bool = False):
    vals = rng.uniform(-1.0, 1.0, size=k * spec.block_size)
    if round_two_decimals:
        vals = np.round(vals, 2)
    point = DecompositionPoint.from_vector(vals.astype(np.complex128), spec.n, spec.r)
    from .polyspace import forward_map

    params = forward_map(spec, point.summands)
    return point, params


def _require_square(spec: ProblemSpec, k: int) -> None:
    if spec.ambient_dim != k * spec.block_size:
        raise ConfigurationError(
            f"monodromy needs a square case: N = {spec.ambient_dim} but "
            f"k(n+r) = {k}*{spec.block_size} = {k * spec.block_size}"
        )


def canonicalize(point: DecompositionPoint, granularity: float = DEDUPE_TOL) -> DecompositionPoint:
    """Sort summand blocks by a rounded key on the linear coefficients.

    Rounding at the dedupe granularity makes the block order stable under
    numerical noise well below the granularity, so two tracker endpoints
    of the same decomposition canonicalize identically.  Idempotent.
    """
    def key(s):
        parts = []
        for v in s.linear:
            v = complex(v)
            parts.append(round(v.real / granularity))
            parts.append(round(v.imag / granularity))
        return tuple(parts)

    return DecompositionPoint(tuple(sorted(point.summands, key=key)))


def _class_distance(a: DecompositionPoint, b: DecompositionPoint) -> float:
    return float(np.abs(a.to_vector() - b.to_vector()).max())


def _is_degenerate(point: DecompositionPoint) -> bool:
    vec = point.to_vector()
    k = point.k
    blocks = vec.reshape(k, -1)
    for s in point.summands:
        if any(abs(complex(w)) < DEGENERATE_WEIGHT_TOL for w in s.weights):
            return True
    for i in range(k):
        for j in range(i + 1, k):
            if np.abs(blocks[i] - blocks[j]).max() < DEDUPE_TOL:
                return True
    return False


def _classify_reality(point: DecompositionPoint) -> str:
    vec = point.to_vector()
    if float(np.abs(vec.imag).max()) < REALITY_TOL:
        return REALITY_REAL
    if _class_distance(canonicalize(point.conjugate()), point) < DEDUPE_TOL:
        return REALITY_SELF_CONJUGATE
    return REALITY_COMPLEX_PAIRED


def triangle_loop(
    spec: ProblemSpec,
    k: int,
    base_params,
    known_points,
    rng: np.random.Generator,
    options: TrackOptions | None = None,
) -> list[PathResult]:
    """One three-leg loop: base -> random -> random -> base.

    Every known point is tracked through the same pair of random complex
    parameter vectors (independent standard-normal real and imaginary
    parts).  Returns one PathResult per input point; a failed leg yields
    the failing result, a completed loop yields the endpoint at base.
    """
    base_params = np.asarray(base_params, dtype=np.complex128)
    n_params = base_params.size
    leg1 = rng.standard_normal(n_params) + 1j * rng.standard_normal(n_params)
    leg2 = rng.standard_normal(n_params) + 1j * rng.standard_normal(n_params)
    legs = [(base_params, leg1), (leg1, leg2), (leg2, base_params)]
    results = []
    for point in known_points:
        current = point
        outcome: PathResult | None = None
        for a, b in legs:
            outcome = track_segment(spec, k, a, b, current, options)
            if not outcome.success:
                break
            current = outcome.endpoint
        results.append(outcome)
    return results


class _ClassRegistry:
    """Registry of solution classes; conjugation-closed for real parameters."""

    def __init__(self, system: WaringSystem, real_params: bool):
        self.system = system
        self.real_params = real_params
        self.classes: list[SolutionClass] = []
        self.degenerate = 0

    def _find(self, canon: DecompositionPoint) -> SolutionClass | None:
        for cls in self.classes:
            if _class_distance(cls.point, canon) < DEDUPE_TOL:
                return cls
        return None

    def add(self, point: DecompositionPoint) -> bool:
        """Returns True when a genuinely new class was registered."""
        refined = newton_refine(self.system, point, tol=CLASS_RESIDUAL_TOL)
        if not refined.converged:
            return False
        if _is_degenerate(refined.point):
            self.degenerate += 1
            return False
        canon = canonicalize(refined.point)
        hit = self._find(canon)
        if hit is not None:
            hit.multiplicity += 1
            return False
        cls = SolutionClass(
            point=canon,
            reality=_classify_reality(canon),
            residual_norm=refined.residual_norm,
        )
        self.classes.append(cls)
        # for real parameters the solution set is conjugation-closed, so a
        # complex-paired class always comes with its conjugate partner
        if self.real_params and cls.reality == REALITY_COMPLEX_PAIRED:
            partner = canonicalize(refined.point.conjugate())
            if self._find(partner) is None:
                ref2 = newton_refine(self.system, partner, tol=CLASS_RESIDUAL_TOL)
                if ref2.converged and not _is_degenerate(ref2.point):
                    self.classes.append(
                        SolutionClass(
                            point=canonicalize(ref2.point),
                            reality=REALITY_COMPLEX_PAIRED,
                            residual_norm=ref2.residual_norm,
                        )
                    )
        return True


def _verdict(classes: list[SolutionClass]) -> str:
    n_real = sum(1 for c in classes if c.reality == REALITY_REAL)
    if len(classes) == 1:
        return VERDICT_C_IDENTIFIABLE
    if n_real == 1:
        return VERDICT_R_NOT_C
    if n_real == 0:
        return VERDICT_NOT_C
    return VERDICT_NOT_R


def run_monodromy(
    spec: ProblemSpec,
    k: int,
    seed: int,
    *,
    saturation: int = 5,
    max_loops: int = 50,
    options: TrackOptions | None = None,
    start: tuple[DecompositionPoint, np.ndarray] | None = None,
) -> MonodromyReport:
    """Run triangle loops until saturation and classify the class registry.

    Args:
        spec, k: the (square) decomposition problem.
        seed: drives both the start instance and the loop legs.
        saturation: stop after this many consecutive loops with no new class.
        max_loops: hard loop budget.
        options: tracker options for every leg.
        start: optional (point, parameters) pair overriding the random
            start instance, e.g. a replayed fixture.

    The verdict is "identifiable over C" for a single class and
    "identifiable over R, not over C" when exactly one of several classes
    is real; the saturated flag records whether the stop rule (rather
    than the loop budget) ended the run.
    """
    _require_square(spec, k)
    if saturation < 1 or max_loops < 1:
        raise ConfigurationError("saturation and max_loops must be >= 1")
    rng = np.random.default_rng(seed)
    if start is None:
        point, params = _draw_start(spec, k, rng)
    else:
        point, params = start
        params = np.asarray(params, dtype=np.complex128)
    system = build_system(spec, k, params)
    real_params = bool(np.abs(params.imag).max() < REALITY_TOL) if params.size else True
    registry = _ClassRegistry(system, real_params)
    if not registry.add(point):
        raise ConfigurationError(
            "start point does not refine to a nondegenerate solution of its "
            "own parameters"
        )

    loops_run = 0
    paths_failed = 0
    streak = 0
    while loops_run < max_loops and streak < saturation:
        reps = [c.point for c in registry.classes]
        results = triangle_loop(spec, k, params, reps, rng, options)
        loops_run += 1
        new_class = False
        for res in results:
            if res is None or not res.success:
                paths_failed += 1
                continue
            if registry.add(res.endpoint):
                new_class = True
        streak = 0 if new_class else streak + 1

    return MonodromyReport(
        spec=spec,
        k=k,
        seed=seed,
        classes=registry.classes,
        loops_run=loops_run,
        paths_failed=paths_failed,
        degenerate_discarded=registry.degenerate,
        saturated=streak >= saturation,
        verdict=_verdict(registry.classes),
    )
