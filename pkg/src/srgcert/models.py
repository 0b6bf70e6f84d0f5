"""Model layer: polynomials, rational transfer matrices, state-space realizations.

All transfer functions are real-rational and proper; stability (all poles in
the open left half plane) is checked, not assumed, by :func:`is_hurwitz`.
Everything here is immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P


class ModelError(ValueError):
    """Base class for model construction/evaluation errors."""


class ImproperEntryError(ModelError):
    """Numerator degree exceeds denominator degree."""


class PoleOnAxisError(ModelError):
    """A denominator (numerically) vanishes on the imaginary axis."""


class DimensionError(ModelError):
    """Inconsistent matrix dimensions."""


DEFAULT_POLE_TOL = 1e-12


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ModelError("coefficients must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(c)):
        raise ModelError("coefficients must be finite")
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending-degree coefficients.

    The zero polynomial is stored as the single coefficient 0; otherwise the
    leading coefficient is nonzero.
    """

    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence[float]):
        object.__setattr__(self, "coeffs", _trim(coeffs))
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return P.polyval(s, self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)})"


@dataclass(frozen=True)
class RationalFunction:
    """Proper ratio of two real polynomials, stored exactly as written.

    No pole/zero cancellation is attempted.
    """

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ModelError("denominator is identically zero")
        if not self.num.is_zero and self.num.degree > self.den.degree:
            raise ImproperEntryError(
                f"improper entry: numerator degree {self.num.degree} exceeds "
                f"denominator degree {self.den.degree}"
            )

    @classmethod
    def from_coeffs(cls, num, den) -> "RationalFunction":
        return cls(Polynomial(num), Polynomial(den))

    def __call__(self, s, pole_tol: float = DEFAULT_POLE_TOL):
        dv = self.den(s)
        if np.any(np.abs(dv) < pole_tol):
            raise PoleOnAxisError(f"denominator magnitude below {pole_tol} at s={s!r}")
        return self.num(s) / dv

    @property
    def feedthrough(self) -> float:
        """Limit value as s -> infinity (0 when strictly proper)."""
        if self.num.is_zero or self.num.degree < self.den.degree:
            return 0.0
        return float(self.num.coeffs[-1] / self.den.coeffs[-1])


class RationalMatrix:
    """Square matrix of proper real-rational functions: the model H(s)."""

    def __init__(self, entries: Sequence[Sequence[RationalFunction]]):
        m = len(entries)
        if m == 0 or any(len(row) != m for row in entries):
            raise DimensionError("transfer matrix must be square and nonempty")
        self.entries = tuple(tuple(row) for row in entries)
        self.dim = m

    @property
    def m(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalMatrix)
            and self.dim == other.dim
            and self.entries == other.entries
        )

    def response(self, omega: float, pole_tol: float = DEFAULT_POLE_TOL) -> np.ndarray:
        """Frequency response H(j*omega) as a complex m x m matrix."""
        return self.response_many(np.asarray([omega], dtype=float), pole_tol)[0]

    def response_many(self, omegas, pole_tol: float = DEFAULT_POLE_TOL) -> np.ndarray:
        """Responses at many frequencies, shape (len(omegas), m, m)."""
        w = np.asarray(omegas, dtype=float)
        s = 1j * w
        out = np.empty((w.size, self.dim, self.dim), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, rf in enumerate(row):
                dv = rf.den(s)
                bad = np.abs(dv) < pole_tol
                if np.any(bad):
                    raise PoleOnAxisError(
                        f"entry ({i},{j}): denominator magnitude below {pole_tol} "
                        f"at omega={w[bad][0]!r}"
                    )
                out[:, i, j] = rf.num(s) / dv
        return out

    def feedthrough(self) -> np.ndarray:
        """Limit matrix H(inf), the direct feedthrough of any realization."""
        return np.array([[rf.feedthrough for rf in row] for row in self.entries])


class StateSpaceModel:
    """Real state-space realization (A, B, C, D) of a square LTI system."""

    def __init__(self, A, B, C, D):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float)
        C = np.asarray(C, dtype=float)
        D = np.atleast_2d(np.asarray(D, dtype=float))
        n = A.shape[0]
        m = D.shape[0]
        if n == 0:
            B = B.reshape(0, m)
            C = C.reshape(m, 0)
        else:
            B = np.atleast_2d(B)
            C = np.atleast_2d(C)
        if A.shape != (n, n) or D.shape != (m, m):
            raise DimensionError("A must be square and D square")
        if B.shape != (n, m) or C.shape != (m, n):
            raise DimensionError(
                f"inconsistent dimensions: A{A.shape} B{B.shape} C{C.shape} D{D.shape}"
            )
        self.A, self.B, self.C, self.D = A, B, C, D
        self.order = n
        self.dim = m

    @property
    def m(self) -> int:
        return self.dim

    def response(self, omega: float, pole_tol: float = DEFAULT_POLE_TOL) -> np.ndarray:
        return self.response_many(np.asarray([omega], dtype=float), pole_tol)[0]

    def response_many(self, omegas, pole_tol: float = DEFAULT_POLE_TOL) -> np.ndarray:
        """D + C (j*omega*I - A)^-1 B at each frequency, shape (nw, m, m)."""
        w = np.asarray(omegas, dtype=float)
        if self.order == 0:
            return np.broadcast_to(self.D.astype(complex), (w.size, self.dim, self.dim)).copy()
        eye = np.eye(self.order)
        lhs = 1j * w[:, None, None] * eye[None] - self.A[None]
        try:
            x = np.linalg.solve(lhs, np.broadcast_to(self.B, (w.size, *self.B.shape)))
        except np.linalg.LinAlgError as exc:
            raise PoleOnAxisError(f"jw*I - A singular on the grid: {exc}") from exc
        return self.D[None] + self.C[None] @ x

    def feedthrough(self) -> np.ndarray:
        return self.D.copy()


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing grid of nonnegative frequencies in rad/s."""

    omegas: np.ndarray
    scale: str = "log"

    def __init__(self, omegas, scale: str = "log"):
        w = np.asarray(omegas, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ModelError("frequency grid must be a nonempty 1-D array")
        if np.any(w < 0):
            raise ModelError("frequencies must be nonnegative")
        if np.any(np.diff(w) <= 0):
            raise ModelError("frequencies must be strictly increasing")
        if scale not in ("log", "linear"):
            raise ModelError("scale must be 'log' or 'linear'")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "scale", scale)
        self.omegas.setflags(write=False)

    @classmethod
    def log(cls, omega_min: float, omega_max: float, points_per_decade: int) -> "FrequencyGrid":
        if not (0 < omega_min < omega_max):
            raise ModelError("need 0 < omega_min < omega_max")
        decades = np.log10(omega_max / omega_min)
        n = max(2, int(round(decades * points_per_decade)) + 1)
        return cls(np.logspace(np.log10(omega_min), np.log10(omega_max), n), "log")

    @classmethod
    def linear(cls, omega_min: float, omega_max: float, n: int) -> "FrequencyGrid":
        return cls(np.linspace(omega_min, omega_max, n), "linear")

    def __len__(self) -> int:
        return self.omegas.size

    def refined(self) -> "FrequencyGrid":
        """Grid with midpoints inserted (in the grid's own scale)."""
        w = self.omegas
        if self.scale == "log" and w[0] > 0:
            mids = np.sqrt(w[:-1] * w[1:])
        else:
            mids = (w[:-1] + w[1:]) / 2
        return FrequencyGrid(np.sort(np.concatenate([w, mids])), self.scale)


def eval_response(model, omega: float, pole_tol: float = DEFAULT_POLE_TOL) -> np.ndarray:
    """Frequency response of a rational matrix or state-space model at omega >= 0."""
    return model.response(omega, pole_tol)


def realize(H: RationalMatrix, validate: bool = True) -> StateSpaceModel:
    """Block-diagonal realization of a proper rational matrix.

    Each entry gets its own controllable companion block; blocks stack along
    the diagonal, grouped by input column.  The result is not minimal, which
    is fine here: only frequency responses and pole locations of the stated
    realization are consumed downstream.
    """
    m = H.dim
    blocks = []
    D = np.zeros((m, m))
    n_total = 0
    placements = []  # (row, col, offset, order, Cblock)
    for j in range(m):
        for i in range(m):
            rf = H.entries[i][j]
            d = rf.feedthrough
            D[i, j] = d
            den = rf.den.coeffs
            n = len(den) - 1
            if n == 0:
                continue
            den = den / den[-1]
            num = np.zeros(n + 1)
            num[: len(rf.num.coeffs)] = rf.num.coeffs / rf.den.coeffs[-1]
            # strictly-proper remainder after removing the feedthrough
            rem = num - d * den
            A = np.zeros((n, n))
            if n > 1:
                A[:-1, 1:] = np.eye(n - 1)
            A[-1, :] = -den[:-1]
            placements.append((i, j, n_total, n, rem[:n]))
            blocks.append(A)
            n_total += n
    A = np.zeros((n_total, n_total))
    B = np.zeros((n_total, m))
    C = np.zeros((m, n_total))
    off = 0
    for blk in blocks:
        k = blk.shape[0]
        A[off : off + k, off : off + k] = blk
        off += k
    for i, j, off, n, crow in placements:
        B[off + n - 1, j] = 1.0
        C[i, off : off + n] = crow
    ss = StateSpaceModel(A, B, C, D)
    if validate:
        check_realization(H, ss)
    return ss


def check_realization(H: RationalMatrix, ss: StateSpaceModel,
                      n_freqs: int = 20, rtol: float = 1e-8, seed: int = 20) -> None:
    """Verify ss matches H at random test frequencies (relative tolerance)."""
    rng = np.random.default_rng(seed)
    w = 10.0 ** rng.uniform(-2, 2, n_freqs)
    r1 = H.response_many(w)
    r2 = ss.response_many(w)
    scale = np.maximum(np.abs(r1), 1.0)
    err = np.abs(r1 - r2) / scale
    if err.max() > rtol:
        raise ModelError(f"realization mismatch: relative error {err.max():.3e} > {rtol}")


def is_hurwitz(model, eps_stab: float = 0.0) -> tuple[bool, float]:
    """Whether every eigenvalue of A has real part < -eps_stab; also the abscissa.

    Accepts a StateSpaceModel or a bare square matrix.  Zero-order models are
    vacuously stable (abscissa -inf).
    """
    A = model.A if isinstance(model, StateSpaceModel) else np.atleast_2d(np.asarray(model))
    if A.shape[0] == 0:
        return True, -np.inf
    abscissa = float(np.linalg.eigvals(A).real.max())
    return abscissa < -eps_stab, abscissa


def spectral_abscissa(A) -> float:
    A = np.atleast_2d(np.asarray(A))
    if A.shape[0] == 0:
        return -np.inf
    return float(np.linalg.eigvals(A).real.max())
