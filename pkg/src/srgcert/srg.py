"""Scaled relative graphs of complex matrices, as point clouds and regions.

For a matrix M the cloud holds values (||Mu||/||u||) * exp(+-j*theta) with
theta the angle between Mu and u; the cloud is closed under conjugation.
Regions (disk, convex hull, chord closure, unions) over-approximate clouds
and support distance/membership queries used by the separation tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import convex_hull, point_segment_distance, polygon_point_distance

ZERO_OUTPUT_TOL = 1e-14
DEFAULT_TOL_ZERO = 1e-9

_HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _halton(n: int, dims: int, start: int = 1) -> np.ndarray:
    """First ``n`` points of the Halton sequence in [0,1)^dims (nested prefixes)."""
    if dims > len(_HALTON_PRIMES):
        raise ValueError(f"at most {len(_HALTON_PRIMES)} Halton dimensions supported")
    out = np.empty((n, dims))
    idx = np.arange(start, start + n, dtype=np.int64)
    for d in range(dims):
        b = _HALTON_PRIMES[d]
        i = idx.copy()
        f = np.ones(n)
        r = np.zeros(n)
        while np.any(i > 0):
            f = f / b
            r = r + f * (i % b)
            i = i // b
        out[:, d] = r
    return out


def _gaussian_from_uniform(u: np.ndarray) -> np.ndarray:
    """Box-Muller transform, columns paired; u has an even number of columns."""
    n, d = u.shape
    g = np.empty_like(u)
    for k in range(0, d, 2):
        r = np.sqrt(-2.0 * np.log(np.clip(u[:, k], 1e-300, 1 - 1e-16)))
        g[:, k] = r * np.cos(2 * np.pi * u[:, k + 1])
        g[:, k + 1] = r * np.sin(2 * np.pi * u[:, k + 1])
    return g


@dataclass(frozen=True)
class SamplerConfig:
    """How SRG input directions are drawn (unit vectors modulo global phase).

    ``n_dir`` deterministic low-discrepancy directions plus ``n_rand`` seeded
    random ones; eigenvectors and right singular vectors of the sampled matrix
    are appended by default so spectrum and gain extremes always appear.
    """

    n_dir: int = 2000
    n_rand: int = 500
    include_eigvecs: bool = True
    include_singvecs: bool = True
    seed: int = 0

    def directions(self, M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unit direction matrix (m x K) and a kind label per column."""
        m = M.shape[0]
        cols, kinds = [], []
        if self.n_dir > 0:
            u = _halton(self.n_dir, 2 * m)
            g = _gaussian_from_uniform(u)
            cols.append((g[:, :m] + 1j * g[:, m:]).T)
            kinds.append(np.full(self.n_dir, "grid"))
        if self.n_rand > 0:
            rng = np.random.default_rng(np.random.SeedSequence(self.seed))
            g = rng.standard_normal((2 * m, self.n_rand))
            cols.append(g[:m] + 1j * g[m:])
            kinds.append(np.full(self.n_rand, "random"))
        if self.include_eigvecs and m > 1:
            cols.append(np.linalg.eig(M)[1])
            kinds.append(np.full(m, "eigvec"))
        if self.include_singvecs and m > 1:
            cols.append(np.linalg.svd(M)[2].conj().T)
            kinds.append(np.full(m, "singvec"))
        U = np.concatenate(cols, axis=1)
        kind = np.concatenate(kinds)
        norms = np.linalg.norm(U, axis=0)
        ok = norms > 0
        return U[:, ok] / norms[ok], kind[ok]


@dataclass(frozen=True)
class SrgCloud:
    """Sampled SRG of one matrix at one frequency; conjugate-closed."""

    omega: float
    points: np.ndarray
    kinds: np.ndarray
    n_samples: int
    closed_under_conjugation: bool = True
    unbounded: bool = False

    def __post_init__(self):
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.size

    def max_modulus(self) -> float:
        return float(np.abs(self.points).max()) if self.points.size else 0.0


def srg_points(M, sampler: SamplerConfig | None = None, omega: float = 0.0) -> SrgCloud:
    """Sample the SRG of a complex square matrix at one frequency.

    For 1x1 matrices the SRG is exactly the two conjugate points {h, h*} and
    no sampling happens.  A direction with zero output contributes the point 0.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    m = M.shape[0]
    if M.shape != (m, m):
        raise ValueError("matrix must be square")
    if m == 1:
        h = complex(M[0, 0])
        pts = np.array([h, np.conj(h)])
        kinds = np.array(["eigvec", "conj"])
        return SrgCloud(omega, pts, kinds, n_samples=1)
    sampler = sampler or SamplerConfig()
    U, kind = sampler.directions(M)
    Y = M @ U
    ny = np.linalg.norm(Y, axis=0)
    ip = np.sum(Y.conj() * U, axis=0)  # <y, u> = sum y_i^* u_i
    with np.errstate(invalid="ignore", divide="ignore"):
        ct = np.clip(np.where(ny > 0, ip.real / np.where(ny == 0, 1.0, ny), 1.0), -1.0, 1.0)
    theta = np.arccos(ct)
    z = np.where(ny < ZERO_OUTPUT_TOL, 0.0 + 0.0j, ny * np.exp(1j * theta))
    pts = np.concatenate([z, z.conj()])
    kinds = np.concatenate([kind, np.full(kind.size, "conj")])
    return SrgCloud(omega, pts, kinds, n_samples=U.shape[1])


def boundary_extract(cloud: SrgCloud, n_bins: int = 720) -> SrgCloud:
    """Keep extreme-modulus points per phase bin (the N_phi angular directions).

    Points are folded onto the upper half plane, binned by phase over [0, pi]
    (half of ``n_bins`` bins, matching ``n_bins`` over the full circle), the
    min- and max-modulus point per bin is kept, and the result is mirrored so
    it stays conjugate-closed.
    """
    if cloud.points.size == 0:
        return cloud
    half = max(1, n_bins // 2)
    folded = np.where(cloud.points.imag < 0, cloud.points.conj(), cloud.points)
    phase = np.angle(folded)  # in [0, pi] up to fp noise
    r = np.abs(folded)
    b = np.clip((phase / np.pi * half).astype(np.int64), 0, half - 1)
    order = np.lexsort((r, b))
    bs = b[order]
    new_bin = np.r_[True, bs[1:] != bs[:-1]]
    lo = order[new_bin]
    hi = order[np.r_[new_bin[1:], True]]
    sel = np.unique(np.concatenate([lo, hi]))
    kept = folded[sel]
    pts = np.concatenate([kept, kept.conj()])
    kinds = np.concatenate([cloud.kinds[sel], np.full(sel.size, "conj")])
    return SrgCloud(cloud.omega, pts, kinds, cloud.n_samples,
                    cloud.closed_under_conjugation, cloud.unbounded)


def invert_cloud(cloud: SrgCloud, tol_zero: float = DEFAULT_TOL_ZERO) -> SrgCloud:
    """Moebius image z -> (1/z)* = z/|z|^2 of a cloud.

    Points within ``tol_zero`` of the origin map to infinity: they are dropped
    and the result is flagged unbounded (data, not an error).
    """
    r2 = np.abs(cloud.points) ** 2
    finite = r2 > tol_zero * tol_zero
    pts = cloud.points[finite] / r2[finite]
    return SrgCloud(cloud.omega, pts, cloud.kinds[finite], cloud.n_samples,
                    cloud.closed_under_conjugation, unbounded=not np.all(finite))


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class DiskRegion:
    center: complex
    radius: float
    unbounded: bool = False

    kind = "disk"

    def contains(self, w: complex, tol: float = 1e-9) -> bool:
        return self.unbounded or abs(w - self.center) <= self.radius + tol

    def distance_to_point(self, w: complex) -> float:
        if self.unbounded:
            return 0.0
        return max(0.0, abs(w - self.center) - self.radius)

    def sample_points(self, n: int = 64) -> np.ndarray:
        th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * th)

    def scaled(self, tau: float) -> "DiskRegion":
        return DiskRegion(self.center * tau, self.radius * tau, self.unbounded)

    def negated(self) -> "DiskRegion":
        return DiskRegion(-self.center, self.radius, self.unbounded)

    def to_json_dict(self) -> dict:
        return {"kind": "disk", "payload": {
            "center": [self.center.real, self.center.imag], "radius": self.radius,
            "unbounded": self.unbounded}}


@dataclass(frozen=True)
class HullRegion:
    """Convex hull region; vertices counterclockwise (1 or 2 for degenerate)."""

    vertices: np.ndarray
    unbounded: bool = False

    kind = "hull"

    def __post_init__(self):
        self.vertices.setflags(write=False)

    def contains(self, w: complex, tol: float = 1e-9) -> bool:
        return self.unbounded or polygon_point_distance(w, self.vertices) <= tol

    def distance_to_point(self, w: complex) -> float:
        if self.unbounded:
            return 0.0
        return polygon_point_distance(w, self.vertices)

    def sample_points(self, n: int = 0) -> np.ndarray:
        return np.asarray(self.vertices)

    def scaled(self, tau: float) -> "HullRegion":
        return HullRegion(self.vertices * tau, self.unbounded)

    def negated(self) -> "HullRegion":
        # negation preserves orientation (rotation by pi)
        return HullRegion(-self.vertices, self.unbounded)

    def to_json_dict(self) -> dict:
        return {"kind": "hull", "payload": {
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "unbounded": self.unbounded}}


@dataclass(frozen=True)
class ChordRegion:
    """Union of vertical segments [z, z*] over conjugate-paired base points."""

    base: np.ndarray
    unbounded: bool = False

    kind = "chords"

    def __post_init__(self):
        self.base.setflags(write=False)

    def contains(self, w: complex, tol: float = 1e-9) -> bool:
        if self.unbounded:
            return True
        dx = np.abs(self.base.real - w.real)
        dy = np.maximum(0.0, abs(w.imag) - np.abs(self.base.imag))
        return bool(np.any(np.hypot(dx, dy) <= tol))

    def distance_to_point(self, w: complex) -> float:
        if self.unbounded:
            return 0.0
        dx = self.base.real - w.real
        dy = np.maximum(0.0, np.abs(w.imag) - np.abs(self.base.imag))
        return float(np.hypot(dx, dy).min())

    def sample_points(self, n_per_chord: int = 9) -> np.ndarray:
        return chord_sample_points(self.base, n_per_chord)

    def scaled(self, tau: float) -> "ChordRegion":
        return ChordRegion(self.base * tau, self.unbounded)

    def negated(self) -> "ChordRegion":
        # -[z, z*] = [(-z)*, -z]: still a conjugate pair of base points
        return ChordRegion(-self.base, self.unbounded)

    def to_json_dict(self) -> dict:
        return {"kind": "chords", "payload": {
            "base_points": [[z.real, z.imag] for z in self.base],
            "unbounded": self.unbounded}}


@dataclass(frozen=True)
class RegionUnion:
    """Union of regions; queries delegate to the nearest member."""

    members: tuple

    kind = "union"

    def contains(self, w: complex, tol: float = 1e-9) -> bool:
        return any(r.contains(w, tol) for r in self.members)

    def distance_to_point(self, w: complex) -> float:
        return min(r.distance_to_point(w) for r in self.members)

    @property
    def unbounded(self) -> bool:
        return any(r.unbounded for r in self.members)

    def sample_points(self, n: int = 16) -> np.ndarray:
        return np.concatenate([np.atleast_1d(r.sample_points(n)) for r in self.members])

    def scaled(self, tau: float) -> "RegionUnion":
        return RegionUnion(tuple(r.scaled(tau) for r in self.members))

    def negated(self) -> "RegionUnion":
        return RegionUnion(tuple(r.negated() for r in self.members))

    def to_json_dict(self) -> dict:
        return {"kind": "union", "payload": {
            "members": [r.to_json_dict() for r in self.members]}}


SrgRegion = DiskRegion | HullRegion | ChordRegion | RegionUnion


def chord_sample_points(base: np.ndarray, n_per_chord: int = 9) -> np.ndarray:
    """Discretize each chord [z, z*] at n_per_chord points (includes endpoints)."""
    base = np.asarray(base, dtype=complex)
    beta = np.linspace(0.0, 1.0, n_per_chord)[None, :]
    return (beta * base[:, None] + (1.0 - beta) * base.conj()[:, None]).ravel()


def chord_closure(cloud: SrgCloud) -> ChordRegion:
    """Tight chord-property closure: the union of segments [z, z*]."""
    if not cloud.closed_under_conjugation:
        raise ValueError("chord closure requires a conjugate-closed cloud")
    return ChordRegion(cloud.points.copy(), cloud.unbounded)


def disk_approx(cloud: SrgCloud, delta: float = 1e-6) -> DiskRegion:
    """Disk at the cloud mean with maximal radial deviation, inflated by 1+delta."""
    if cloud.points.size == 0:
        raise ValueError("cannot fit a disk to an empty cloud")
    c = complex(cloud.points.mean())
    r = float(np.abs(cloud.points - c).max())
    return DiskRegion(c, r * (1.0 + delta), cloud.unbounded)


def hull_approx(cloud: SrgCloud) -> HullRegion:
    """Convex hull of the cloud points (counterclockwise vertices)."""
    if cloud.points.size == 0:
        raise ValueError("cannot hull an empty cloud")
    return HullRegion(convex_hull(cloud.points), cloud.unbounded)


def invert_region(x, tol_zero: float = DEFAULT_TOL_ZERO):
    """Moebius inverse of a cloud or region.

    Clouds invert pointwise.  A disk avoiding the origin inverts exactly to a
    disk; one touching the origin becomes an unbounded marker (conservative:
    zero distance to everything).  Hull and chord regions invert through their
    defining points, which is the image of those samples, not of the filled
    region; prefer inverting clouds before building regions.
    """
    if isinstance(x, SrgCloud):
        return invert_cloud(x, tol_zero)
    if isinstance(x, DiskRegion):
        c, r = x.center, x.radius
        den = abs(c) ** 2 - r * r
        if x.unbounded or den <= tol_zero:
            return DiskRegion(0.0, np.inf, unbounded=True)
        return DiskRegion(c / den, r / den)
    if isinstance(x, HullRegion):
        pts, bad = _invert_points(x.vertices, tol_zero)
        return HullRegion(convex_hull(pts) if pts.size else pts, x.unbounded or bad)
    if isinstance(x, ChordRegion):
        pts, bad = _invert_points(x.base, tol_zero)
        return ChordRegion(pts, x.unbounded or bad)
    if isinstance(x, RegionUnion):
        return RegionUnion(tuple(invert_region(r, tol_zero) for r in x.members))
    raise TypeError(f"cannot invert {type(x).__name__}")


def _invert_points(pts: np.ndarray, tol_zero: float) -> tuple[np.ndarray, bool]:
    r2 = np.abs(pts) ** 2
    finite = r2 > tol_zero * tol_zero
    return pts[finite] / r2[finite], bool(np.any(~finite))


def scale_region(region, tau: float):
    """Scale a region by tau in (0, 1]; negation is separate (negate_region)."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    return region.scaled(tau)


def negate_region(region):
    return region.negated()


def union_regions(regions: Sequence) -> RegionUnion:
    if not regions:
        raise ValueError("union of no regions")
    return RegionUnion(tuple(regions))


def region_from_json_dict(doc: dict):
    kind = doc["kind"]
    p = doc["payload"]
    if kind == "disk":
        return DiskRegion(complex(*p["center"]), float(p["radius"]),
                          bool(p.get("unbounded", False)))
    if kind == "hull":
        return HullRegion(np.array([complex(a, b) for a, b in p["vertices"]]),
                          bool(p.get("unbounded", False)))
    if kind == "chords":
        return ChordRegion(np.array([complex(a, b) for a, b in p["base_points"]]),
                           bool(p.get("unbounded", False)))
    if kind == "union":
        return RegionUnion(tuple(region_from_json_dict(d) for d in p["members"]))
    raise ValueError(f"unknown region kind {kind!r}")


def region_contains_cloud(region, cloud: SrgCloud, tol: float = 1e-9) -> bool:
    """Containment check used by tests: every cloud point inside the region."""
    return all(region.contains(complex(z), tol) for z in cloud.points)


def split_half_planes(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower conjugate components (real-axis points go to both)."""
    up = points[points.imag >= 0]
    dn = points[points.imag <= 0]
    return up, dn
