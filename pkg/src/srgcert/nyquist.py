"""Classical frequency-domain comparators: determinant locus, winding number,
the generalized Nyquist criterion, and its tau-swept sufficient variant.

The locus of det(I + tau*H1*H2) over the closed Nyquist contour decides
closed-loop stability for open-loop-stable, well-posed loops: no origin
crossing and zero winding.  Negative frequencies come from conjugation
(real-rational systems); the contour closes at the feedthrough limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import FrequencyGrid, StateSpaceModel, is_hurwitz, realize

DEFAULT_EPS_ORIGIN = 1e-9
MAX_PHASE_STEP = math.pi / 2


class OriginProximityError(ValueError):
    """The locus passes too close to the origin for a defined winding number."""


class PhaseStepError(ValueError):
    """A single phase step exceeds the limit: the frequency grid is too coarse."""

    def __init__(self, message: str, omega_lo: float = 0.0, omega_hi: float = 0.0):
        super().__init__(message)
        self.omega_lo = omega_lo
        self.omega_hi = omega_hi


class WindingAccuracyError(ValueError):
    """The accumulated phase is too far from an integer multiple of 2*pi."""


@dataclass(frozen=True)
class DetLocus:
    """Samples of det(I + tau*H1(jw)*H2(jw)) over signed frequencies.

    ``omegas`` ascends from -omega_max to +omega_max; ``closure`` is the
    limit value det(I + tau*D1*D2) that closes the contour through infinity.
    """

    tau: float
    omegas: np.ndarray
    values: np.ndarray
    closure: complex
    min_abs: float

    def __post_init__(self):
        self.omegas.setflags(write=False)
        self.values.setflags(write=False)

    def closed_values(self) -> np.ndarray:
        return np.concatenate([self.values, [self.closure]])

    def rows(self):
        for w, v in zip(self.omegas, self.values):
            yield (self.tau, float(w), float(v.real), float(v.imag))


def _as_statespace(model) -> StateSpaceModel:
    return model if isinstance(model, StateSpaceModel) else realize(model, validate=False)


def det_locus(h1, h2, tau: float, grid: FrequencyGrid) -> DetLocus:
    """Determinant locus at one homotopy parameter tau."""
    if h1.dim != h2.dim:
        raise ValueError("loop systems must share the same dimension")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    m = h1.dim
    R1 = h1.response_many(grid.omegas)
    R2 = h2.response_many(grid.omegas)
    L = R1 @ R2
    vals_pos = np.linalg.det(np.eye(m)[None] + tau * L)
    # real-rational symmetry: value(-w) = conj(value(w))
    omegas = np.concatenate([-grid.omegas[::-1], grid.omegas])
    values = np.concatenate([vals_pos[::-1].conj(), vals_pos])
    closure = complex(np.linalg.det(np.eye(m) + tau * h1.feedthrough() @ h2.feedthrough()))
    min_abs = float(min(np.abs(values).min(), abs(closure)))
    return DetLocus(tau, omegas, values, closure, min_abs)


def winding_number(locus: DetLocus | np.ndarray,
                   eps_origin: float = DEFAULT_EPS_ORIGIN,
                   max_step: float = MAX_PHASE_STEP) -> int:
    """Signed encirclements of the origin by the closed locus.

    Counterclockwise counts +1.  Raises if the curve approaches the origin
    (winding undefined), if any single phase step exceeds ``max_step`` (grid
    too coarse), or if the total is not close to an integer.
    """
    if isinstance(locus, DetLocus):
        values = locus.closed_values()
        omegas = np.concatenate([locus.omegas, [math.inf]])
    else:
        values = np.asarray(locus, dtype=complex)
        omegas = np.arange(values.size, dtype=float)
    if values.size < 3:
        raise ValueError("need at least three samples")
    if np.abs(values).min() <= eps_origin:
        raise OriginProximityError(
            f"|det| reaches {np.abs(values).min():.3e} <= {eps_origin:g}: "
            "winding number undefined")
    nxt = np.roll(values, -1)
    steps = np.angle(nxt / values)
    k = int(np.argmax(np.abs(steps)))
    if abs(steps[k]) > max_step:
        lo = float(omegas[k])
        hi = float(omegas[(k + 1) % values.size])
        raise PhaseStepError(
            f"phase step {abs(steps[k]):.3f} rad > {max_step:.3f} between "
            f"omega {lo:g} and {hi:g}: grid too coarse", lo, hi)
    total = steps.sum() / (2 * math.pi)
    w = round(total)
    if abs(total - w) >= 0.1:
        raise WindingAccuracyError(
            f"winding residue {abs(total - w):.3f} >= 0.1 (total {total:.4f})")
    return int(w)


@dataclass(frozen=True)
class GncVerdict:
    stable: bool
    winding: int
    min_abs: float
    tau: float = 1.0
    refined: bool = False

    def to_json_dict(self) -> dict:
        return {"stable": self.stable, "winding": self.winding,
                "min_abs": self.min_abs, "tau": self.tau, "refined": self.refined}


@dataclass(frozen=True)
class SufficientGncVerdict:
    """Outcome of the tau-swept determinant condition (sufficient only)."""

    passed: bool
    min_abs: float
    worst_tau: float
    worst_omega: float

    @property
    def verdict(self) -> str:
        return "stable" if self.passed else "inconclusive"

    def to_json_dict(self) -> dict:
        return {"passed": self.passed, "verdict": self.verdict,
                "min_abs": self.min_abs, "worst_tau": self.worst_tau,
                "worst_omega": self.worst_omega}


def _precheck(h1, h2):
    ss1, ss2 = _as_statespace(h1), _as_statespace(h2)
    for name, ss in (("h1", ss1), ("h2", ss2)):
        ok, absc = is_hurwitz(ss)
        if not ok:
            raise ValueError(f"{name} is not open-loop stable "
                             f"(spectral abscissa {absc:.3g})")
    m = ss1.dim
    wp = np.linalg.det(np.eye(m) + ss1.D @ ss2.D)
    if abs(wp) < 1e-12:
        raise ValueError(f"ill-posed loop: |det(I + D1 D2)| = {abs(wp):.3g}")


def gnc(h1, h2, grid: FrequencyGrid,
        eps_origin: float = DEFAULT_EPS_ORIGIN) -> GncVerdict:
    """Generalized Nyquist criterion for open-loop-stable, well-posed loops.

    Stable iff the tau=1 locus avoids the origin and has zero winding.  On a
    too-coarse grid the locus is recomputed once on a refined grid.
    """
    _precheck(h1, h2)
    locus = det_locus(h1, h2, 1.0, grid)
    refined = False
    try:
        w = winding_number(locus, eps_origin)
    except PhaseStepError:
        refined = True
        locus = det_locus(h1, h2, 1.0, grid.refined())
        w = winding_number(locus, eps_origin)
    stable = locus.min_abs > eps_origin and w == 0
    return GncVerdict(stable, w, locus.min_abs, 1.0, refined)


def sufficient_gnc(h1, h2, grid: FrequencyGrid, tau_grid,
                   eps_origin: float = DEFAULT_EPS_ORIGIN) -> SufficientGncVerdict:
    """Pass iff det(I + tau*H1*H2) stays away from zero over the whole tau
    grid; passing implies exponential stability, failing is inconclusive."""
    _precheck(h1, h2)
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size == 0 or np.any(taus <= 0) or np.any(taus > 1):
        raise ValueError("tau grid must be nonempty with values in (0, 1]")
    m = h1.dim
    R1 = h1.response_many(grid.omegas)
    R2 = h2.response_many(grid.omegas)
    L = R1 @ R2
    eye = np.eye(m)[None]
    best = (math.inf, 1.0, 0.0)
    for t in taus:
        a = np.abs(np.linalg.det(eye + t * L))
        k = int(np.argmin(a))
        if a[k] < best[0]:
            best = (float(a[k]), float(t), float(grid.omegas[k]))
    min_abs, worst_tau, worst_omega = best
    return SufficientGncVerdict(min_abs > eps_origin, min_abs, worst_tau, worst_omega)
