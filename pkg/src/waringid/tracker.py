"""Predictor-corrector tracking along straight segments in parameter space.

The parameters of a square WaringSystem are interpolated linearly from a
start vector to an end vector while the solution is continued: an Euler
predictor from the implicit-function tangent, Newton correction at each
accepted step, adaptive step length, and a final endpoint refinement.

Failures are data, not exceptions: every outcome is a PathResult whose
status is one of 'success', 'diverged', 'step-underflow' or 'singular'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularSystemError, lu_solve
from .polyspace import ProblemSpec
from .system import ConfigurationError, DecompositionPoint, WaringSystem, build_system

STATUS_SUCCESS = "success"
STATUS_DIVERGED = "diverged"
STATUS_STEP_UNDERFLOW = "step-underflow"
STATUS_SINGULAR = "singular"

# residual bound (infinity norm) a successful endpoint must satisfy
ENDPOINT_RESIDUAL_BOUND = 1e-9
# residual bound the start point must satisfy at the start parameters
START_RESIDUAL_BOUND = 1e-8


@dataclass(frozen=True)
class TrackOptions:
    """Step-control and corrector settings for segment tracking."""

    initial_step: float = 0.1
    min_step: float = 1e-7
    max_step: float = 0.25
    newton_tol: float = 1e-10
    max_corrector_iters: int = 3
    max_steps: int = 10000
    shrink: float = 0.5
    grow: float = 1.25
    endpoint_refine_iters: int = 5
    divergence_norm: float = 1e8
    # unit-modulus rotation applied to the segment midpoint; 1 keeps the
    # straight segment.  A generic rotation bends the path off the real
    # locus, a safeguard for real-to-complex first legs.
    midpoint_rotation: complex = 1.0

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.initial_step <= self.max_step <= 1.0):
            raise ValueError(
                "need 0 < min_step <= initial_step <= max_step <= 1, got "
                f"{self.min_step}, {self.initial_step}, {self.max_step}"
            )
        if abs(abs(self.midpoint_rotation) - 1.0) > 1e-12:
            raise ValueError("midpoint_rotation must have modulus 1")


@dataclass(frozen=True)
class RefineResult:
    """Outcome of Newton refinement against a fixed system."""

    point: DecompositionPoint
    residual_norm: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class PathResult:
    """Endpoint and status of one tracked segment."""

    status: str
    endpoint: DecompositionPoint
    residual_norm: float
    steps: int

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS


class _SegmentPath:
    """Parameter path p(t); straight unless a midpoint rotation is set."""

    def __init__(self, start: np.ndarray, end: np.ndarray, rotation: complex):
        self.start = start
        self.end = end
        self.rotation = complex(rotation)

    def at(self, t: float) -> np.ndarray:
        if self.rotation == 1.0:
            return (1.0 - t) * self.start + t * self.end
        # quadratic Bezier through the rotated midpoint; degenerates to
        # the straight segment at rotation 1
        mid = self.rotation * 0.5 * (self.start + self.end)
        return (1 - t) ** 2 * self.start + 2 * t * (1 - t) * mid + t**2 * self.end

    def derivative(self, t: float) -> np.ndarray:
        if self.rotation == 1.0:
            return self.end - self.start
        mid = self.rotation * 0.5 * (self.start + self.end)
        return -2 * (1 - t) * self.start + 2 * (1 - 2 * t) * mid + 2 * t * self.end


def _newton_vector(system: WaringSystem, params: np.ndarray, x: np.ndarray,
                   tol: float, max_iters: int):
    """Newton iteration on the flat vector; returns (x, residual, converged, iters)."""
    res = params - system.parameters  # adjust residual to the given parameters
    for it in range(max_iters + 1):
        r = system.residual_vector(x) + res
        rnorm = float(np.abs(r).max()) if r.size else 0.0
        if rnorm < tol:
            return x, rnorm, True, it
        if it == max_iters:
            return x, rnorm, False, it
        jac = system.jacobian_vector(x)
        dx = lu_solve(jac, -r)
        x = x + dx
    raise AssertionError("unreachable")


def newton_refine(system: WaringSystem, point: DecompositionPoint,
                  tol: float = 1e-10, max_iters: int = 10) -> RefineResult:
    """Refine a near-solution of a square system by Newton iteration.

    Stops as soon as the residual infinity norm drops below tol (zero
    iterations if the input already qualifies) or after max_iters steps,
    reporting convergence rather than raising.  A numerically singular
    corrector Jacobian raises SingularSystemError.
    """
    if not system.is_square:
        raise ConfigurationError(
            f"newton_refine needs a square system, got {system.equations} "
            f"equations vs {system.unknowns} unknowns"
        )
    x, rnorm, converged, iters = _newton_vector(
        system, system.parameters, point.to_vector(), tol, max_iters
    )
    return RefineResult(
        point=DecompositionPoint.from_vector(x, system.spec.n, system.spec.r),
        residual_norm=rnorm,
        converged=converged,
        iterations=iters,
    )


def track_segment(
    spec: ProblemSpec,
    k: int,
    params_start,
    params_end,
    start_point: DecompositionPoint,
    options: TrackOptions | None = None,
) -> PathResult:
    """Track a solution from params_start to params_end.

    The start point must solve the system at params_start to within
    START_RESIDUAL_BOUND; the system must be square.  On success the
    endpoint solves the system at params_end to ENDPOINT_RESIDUAL_BOUND.
    """
    opts = options or TrackOptions()
    params_start = np.asarray(params_start, dtype=np.complex128)
    params_end = np.asarray(params_end, dtype=np.complex128)
    system = build_system(spec, k, params_end)  # raises if non-square
    x = start_point.to_vector()
    if x.shape != (system.unknowns,):
        raise ValueError(
            f"start point has {x.size} coordinates, expected {system.unknowns}"
        )

    def result(status: str, xvec: np.ndarray, rnorm: float, steps: int) -> PathResult:
        return PathResult(
            status=status,
            endpoint=DecompositionPoint.from_vector(xvec, spec.n, spec.r),
            residual_norm=rnorm,
            steps=steps,
        )

    r0 = system.residual_vector(x) + (params_start - params_end)
    r0norm = float(np.abs(r0).max())
    if r0norm > START_RESIDUAL_BOUND:
        raise ValueError(
            f"start point residual {r0norm:.3e} exceeds {START_RESIDUAL_BOUND:.0e} "
            "at the start parameters"
        )

    if np.array_equal(params_start, params_end):
        return result(STATUS_SUCCESS, x, r0norm, 0)

    path = _SegmentPath(params_start, params_end, opts.midpoint_rotation)
    t = 0.0
    h = opts.initial_step
    steps = 0
    while t < 1.0:
        if steps >= opts.max_steps:
            # step budget exhausted without reaching t=1: stalled progress
            return result(STATUS_STEP_UNDERFLOW, x, float("nan"), steps)
        h_eff = min(h, 1.0 - t)
        try:
            tangent = lu_solve(-system.jacobian_vector(x), path.derivative(t))
        except SingularSystemError:
            return result(STATUS_SINGULAR, x, float("nan"), steps)
        predicted = x + h_eff * tangent
        target = path.at(t + h_eff)
        steps += 1
        try:
            xn, rnorm, converged, _ = _newton_vector(
                system, target, predicted, opts.newton_tol, opts.max_corrector_iters
            )
        except SingularSystemError:
            converged = False
        if converged:
            t += h_eff
            x = xn
            h = min(h * opts.grow, opts.max_step)
            if float(np.abs(x).max()) > opts.divergence_norm:
                return result(STATUS_DIVERGED, x, rnorm, steps)
        else:
            h *= opts.shrink
            if h < opts.min_step:
                return result(STATUS_STEP_UNDERFLOW, x, float("nan"), steps)

    try:
        x, rnorm, _, _ = _newton_vector(
            system, params_end, x, opts.newton_tol, opts.endpoint_refine_iters
        )
    except SingularSystemError:
        return result(STATUS_SINGULAR, x, float("nan"), steps)
    if rnorm < ENDPOINT_RESIDUAL_BOUND:
        return result(STATUS_SUCCESS, x, rnorm, steps)
    return result(STATUS_SINGULAR, x, rnorm, steps)
