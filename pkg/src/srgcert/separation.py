"""Frequency-wise SRG separation tests and the closed-loop certification sweep.

At each frequency the inverted SRG of the forward system is checked against
the negated, tau-scaled SRG of the feedback system for all tau in (0, 1].
Three methods of increasing sharpness: disk (one disk per side, closed-form
tau minimization), hull (per-half-plane convex hulls against the tau-swept
cone, GJK distances), naive (pairwise point/segment distances on a tau grid).

One side must carry the chord-property closure.  Closing the feedback side
keeps the vertical segments [z, z*] as primitives; closing the forward side
closes before Moebius inversion and discretizes the resulting arcs.  Which
side is closed is configurable; ``auto`` keeps the more favorable side per
frequency (each side is a sound test on its own).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .geometry import convex_hull, gjk_distance
from .models import FrequencyGrid, StateSpaceModel, is_hurwitz, realize
from .srg import (
    DEFAULT_TOL_ZERO,
    DiskRegion,
    SamplerConfig,
    SrgCloud,
    boundary_extract,
    chord_sample_points,
    disk_approx,
    invert_cloud,
    split_half_planes,
    srg_points,
)


class OpenLoopUnstableError(ValueError):
    """The theorem assumes both open-loop systems are stable."""


class IllPosedError(ValueError):
    """det(I + D1 D2) is (numerically) zero: the loop is not well posed."""


class Status(str, Enum):
    CERTIFIED_STABLE = "certified-stable"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


def default_tau_grid(n: int = 32, tau_min: float = 1e-3) -> np.ndarray:
    """Log-spaced tau grid on [tau_min, 1]; the maximum is always exactly 1."""
    if n < 1:
        raise ValueError("need at least one tau point")
    if n == 1:
        return np.array([1.0])
    g = np.logspace(math.log10(tau_min), 0.0, n)
    g[-1] = 1.0
    return g


def _check_tau_grid(tau_grid) -> np.ndarray:
    t = np.asarray(tau_grid, dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(t > 1):
        raise ValueError("tau grid must be nonempty with values in (0, 1]")
    if np.any(np.diff(t) <= 0):
        raise ValueError("tau grid must be sorted ascending")
    if t[-1] != 1.0:
        raise ValueError("tau grid must end at exactly 1")
    return t


@dataclass(frozen=True)
class SeparationResult:
    omega: float
    separated: bool
    margin: float  # clamped at 0; Euclidean distance in the complex plane
    worst_tau: float = 1.0
    witness: Optional[tuple[complex, complex]] = None
    method: str = ""
    chord_side: str = ""
    reason: str = ""

    def to_json_dict(self) -> dict:
        w = None
        if self.witness is not None:
            a, b = self.witness
            w = [[a.real, a.imag], [b.real, b.imag]]
        return {
            "omega": None if math.isinf(self.omega) else self.omega,
            "separated": self.separated,
            "margin": None if math.isinf(self.margin) else self.margin,
            "worst_tau": self.worst_tau,
            "witness": w,
            "method": self.method,
            "chord_side": self.chord_side,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class SeparationQuery:
    """One frequency's separation problem.

    ``points_a`` samples the inverted SRG of the forward system (already
    Moebius-mapped, chord-closed when the forward side carries the closure);
    ``points_b`` samples the raw SRG of the feedback side, before negation.
    ``chord_on_b`` selects segment primitives [z, z*] on the feedback side.
    """

    points_a: np.ndarray
    points_b: np.ndarray
    tau_grid: np.ndarray
    method: str = "hull"
    chord_on_b: bool = False
    omega: float = 0.0
    unbounded_a: bool = False
    tau_continuous: bool = True  # include the tau->0 limit (the (0,1] infimum)


def separate(q: SeparationQuery) -> SeparationResult:
    if q.method == "disk":
        return separate_disk(q)
    if q.method == "hull":
        return separate_hull(q)
    if q.method == "naive":
        return separate_naive(q)
    raise ValueError(f"unknown method {q.method!r}")


# --------------------------------------------------------------------------
# disk method


def _disk_of(points: np.ndarray) -> DiskRegion:
    cloud = SrgCloud(0.0, np.asarray(points, dtype=complex),
                     np.full(len(points), "grid"), len(points))
    return disk_approx(cloud)


def separate_disk(q: SeparationQuery,
                  disk_a: DiskRegion | None = None,
                  disk_b: DiskRegion | None = None) -> SeparationResult:
    """Disk test: separated iff |c1 + tau*c2| > r1 + tau*r2 for all tau.

    The signed clearance f(tau) = |c1 + tau*c2| - r1 - tau*r2 is convex, so
    its minimum over [0, 1] is found exactly from the closed-form critical
    points; the tau grid is still scanned for the reported worst_tau.
    """
    if q.unbounded_a:
        return SeparationResult(q.omega, False, 0.0, method="disk",
                                reason="inverse-unbounded")
    da = disk_a or _disk_of(q.points_a)
    db = disk_b or _disk_of(q.points_b)
    c1, r1 = complex(da.center), float(da.radius)
    c2, r2 = complex(db.center), float(db.radius)
    beta = (np.conj(c1) * c2).real
    gamma = abs(c2) ** 2

    def f(t: float) -> float:
        return abs(c1 + t * c2) - r1 - t * r2

    cands = list(q.tau_grid) + [1.0]
    if q.tau_continuous:
        cands.append(0.0)
        # f'(t) = (beta + gamma t)/|c1 + t c2| - r2 = 0
        a2 = gamma * (gamma - r2 * r2)
        a1 = 2 * beta * (gamma - r2 * r2)
        a0 = beta * beta - r2 * r2 * abs(c1) ** 2
        roots = np.roots([a2, a1, a0]) if a2 != 0 or a1 != 0 else []
        for t in np.atleast_1d(roots):
            if abs(t.imag) < 1e-12 and 0.0 < t.real <= 1.0 and beta + gamma * t.real >= 0:
                cands.append(float(t.real))
    signed = min(f(t) for t in cands)
    worst = min(cands, key=f)
    sep = signed > 0.0
    # witness points along the line of centers at the worst tau
    t = max(worst, q.tau_grid[0]) if worst == 0.0 else worst
    dvec = (-t * c2) - c1
    dist = abs(dvec)
    e = dvec / dist if dist > 0 else 1.0 + 0.0j
    if sep:
        wa = c1 + r1 * e
        wb = -t * c2 - t * r2 * e
    else:
        depth = min(r1, max(dist - t * r2, 0.0)) if dist > 0 else 0.0
        mid = c1 + e * min(r1, (dist + r1 - t * r2) / 2 if dist > 0 else 0.0)
        wa = wb = mid if dist > 0 else c1 + min(r1, depth) * e
    return SeparationResult(q.omega, sep, max(signed, 0.0), worst, (wa, wb), "disk",
                            reason="" if sep else "disks-overlap")


# --------------------------------------------------------------------------
# hull method


def _component_hulls(points: np.ndarray, augment_real_projection: bool = False):
    if augment_real_projection:
        points = np.concatenate([points, points.real.astype(complex)])
    up, dn = split_half_planes(points)
    return [convex_hull(c) for c in (up, dn) if c.size]


def _ray_exit_scale(verts: np.ndarray, d: complex) -> float:
    """sup {t > 0 : t*d in conv(verts)} for a CCW polygon; 0 if the ray misses."""
    n = verts.size
    if n == 1:
        v = verts[0]
        cr = v.real * d.imag - v.imag * d.real
        dot = v.real * d.real + v.imag * d.imag
        return dot / (abs(d) ** 2) if abs(cr) <= 1e-9 * max(abs(v), 1.0) and dot > 0 else 0.0
    if n == 2:
        # ray t*d meets segment a + s*(b - a): 2x2 solve
        a, b = verts
        ab = b - a
        det = d.real * (-ab.imag) - d.imag * (-ab.real)
        if abs(det) < 1e-15:
            return max(_ray_exit_scale(verts[:1], d), _ray_exit_scale(verts[1:], d))
        t = (a.real * (-ab.imag) - a.imag * (-ab.real)) / det
        s = (d.real * a.imag - d.imag * a.real) / det
        return t if t > 0 and -1e-12 <= s <= 1 + 1e-12 else 0.0
    t_hi = np.inf
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        nx, ny = (b - a).imag, -(b - a).real  # outward for CCW
        num = a.real * nx + a.imag * ny
        den = d.real * nx + d.imag * ny
        if den > 0:
            t_hi = min(t_hi, num / den)
        elif num < 0:
            return 0.0
    return max(t_hi, 0.0)


def separate_hull(q: SeparationQuery) -> SeparationResult:
    """Hull test, grid-free in tau.

    The union of -tau*conv(B) over tau in (0,1] is the convex cone chunk
    conv({0} union -B) (segment family over the vertices), so one GJK call
    per component pair decides the whole tau sweep.  Hulls are built per
    conjugate half plane; if the feedback side carries the chord closure its
    points are augmented with their real-axis projections, which restores the
    chord property of the union of the two hulls.
    """
    if q.unbounded_a:
        return SeparationResult(q.omega, False, 0.0, method="hull",
                                reason="inverse-unbounded")
    hulls_a = _component_hulls(q.points_a)
    hulls_b = _component_hulls(q.points_b, augment_real_projection=q.chord_on_b)
    best = (np.inf, None, None, None)  # margin, witness_a, witness_b, hull_b
    for ha in hulls_a:
        for hb in hulls_b:
            neg = -hb
            cone = convex_hull(np.concatenate([neg, [0.0 + 0.0j]])) \
                if q.tau_continuous else neg
            d, wa, wb = gjk_distance(ha, cone)
            if d < best[0]:
                best = (d, wa, wb, neg)
    margin, wa, wb, neg = best
    sep = margin > 0.0
    # recover the tau at the closest approach from the witness on the cone
    worst_tau = 1.0
    if wb is not None and abs(wb) > 0 and neg is not None:
        exit_scale = _ray_exit_scale(convex_hull(neg), wb / abs(wb))
        if exit_scale > 0 and np.isfinite(exit_scale):
            worst_tau = float(min(1.0, abs(wb) / exit_scale))
    elif wb is not None and abs(wb) == 0:
        worst_tau = float(q.tau_grid[0])
    return SeparationResult(q.omega, sep, float(max(margin, 0.0)), worst_tau,
                            (wa, wb), "hull", reason="" if sep else "hulls-intersect")


# --------------------------------------------------------------------------
# naive method


def separate_naive(q: SeparationQuery) -> SeparationResult:
    """Exhaustive pairwise distances on the tau grid; exact on the samples.

    With the chord closure on the feedback side, distances are measured to
    the vertical segments [-tau*z, -tau*z*] in closed form; otherwise plain
    point-to-point distances |a + tau*b|.
    """
    if q.unbounded_a:
        return SeparationResult(q.omega, False, 0.0, method="naive",
                                reason="inverse-unbounded")
    a = np.asarray(q.points_a, dtype=complex)
    b = np.asarray(q.points_b, dtype=complex)
    taus = q.tau_grid
    best = (np.inf, 1.0, 0, 0)
    if q.chord_on_b:
        ax = a.real[:, None]
        ay = np.abs(a.imag)[:, None]
        bx = b.real[None, :]
        by = np.abs(b.imag)[None, :]
        for t in taus:
            dx = ax + t * bx
            dy = np.maximum(0.0, ay - t * by)
            d2 = dx * dx + dy * dy
            k = int(np.argmin(d2))
            if d2.flat[k] < best[0] ** 2:
                i, j = divmod(k, b.size)
                best = (math.sqrt(d2.flat[k]), float(t), i, j)
        margin, t, i, j = best
        # witness on the segment: clamp the imaginary part
        seg_im = np.clip(a[i].imag, -t * abs(b[j].imag), t * abs(b[j].imag))
        wb = complex(-t * b[j].real, seg_im)
    else:
        # real^2 + imag^2 keeps exactly-coincident points at distance 0
        aa = (a.real * a.real + a.imag * a.imag)[:, None]
        ab = (a[:, None] * np.conj(b)[None, :]).real
        bb = (b.real * b.real + b.imag * b.imag)[None, :]
        for t in taus:
            d2 = aa + 2 * t * ab + t * t * bb
            k = int(np.argmin(d2))
            if d2.flat[k] < best[0] ** 2:
                i, j = divmod(k, b.size)
                best = (math.sqrt(max(d2.flat[k], 0.0)), float(t), i, j)
        margin, t, i, j = best
        wb = -t * b[j]
    sep = margin > 0.0
    return SeparationResult(q.omega, sep, margin, t, (complex(a[i]), wb), "naive",
                            reason="" if sep else "points-coincide")


# --------------------------------------------------------------------------
# the certification sweep


@dataclass(frozen=True)
class SweepConfig:
    method: str = "hull"
    chord_side: str = "auto"  # h1 | h2 | auto
    n_dir: int = 2000
    n_rand: int = 500
    n_phase_bins: int = 720
    chord_samples: int = 9
    tau_points: int = 32
    tau_min: float = 1e-3
    tau_one_only: bool = False
    eps_margin: float = 1e-6
    tol_zero: float = DEFAULT_TOL_ZERO
    seed: int = 0
    threads: int = 1
    include_infinity: bool = True
    sampler_eigvecs: bool = True
    sampler_singvecs: bool = True
    # local minima of margin(omega) near the global minimum (or below the
    # absolute trigger) are re-bracketed by bisection; catches set contacts
    # isolated between grid frequencies
    refine_below: float = 1e-2
    refine_rounds: int = 26
    refine_max: int = 10

    def tau_grid(self) -> np.ndarray:
        if self.tau_one_only:
            return np.array([1.0])
        return default_tau_grid(self.tau_points, self.tau_min)

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        return d


@dataclass(frozen=True)
class FeedbackVerdict:
    status: Status
    margin_min: float
    worst_omega: float
    worst_tau: float
    per_frequency: tuple[SeparationResult, ...]
    config: SweepConfig
    witness: Optional[tuple[complex, complex]] = None
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED_STABLE

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "worst_omega": None if math.isinf(self.worst_omega) else self.worst_omega,
            "worst_tau": self.worst_tau,
            "margin_min": None if math.isinf(self.margin_min) else self.margin_min,
            "reason": self.reason,
            "per_frequency": [r.to_json_dict() for r in self.per_frequency],
            "config_echo": self.config.to_json_dict(),
        }


def _as_statespace(model) -> StateSpaceModel:
    return model if isinstance(model, StateSpaceModel) else realize(model, validate=False)


def _omega_seed(base: int, idx: int) -> int:
    return int(np.random.SeedSequence((base, idx)).generate_state(1)[0])


def _side_result(M1, M2, side: str, cfg: SweepConfig, tau_grid, omega, seed) -> SeparationResult:
    sampler = SamplerConfig(cfg.n_dir, cfg.n_rand, cfg.sampler_eigvecs,
                            cfg.sampler_singvecs, seed)
    cloud1 = srg_points(M1, sampler, omega)
    if cloud1.max_modulus() <= cfg.tol_zero:
        # zero forward map: SRG(H1) = {0}, its inverse is {inf}, separated
        # from any bounded set (zero loop gain)
        return SeparationResult(omega, True, math.inf, 1.0, None, cfg.method,
                                side, reason="zero-gain-h1")
    b1 = boundary_extract(cloud1, cfg.n_phase_bins)
    cloud2 = srg_points(M2, sampler, omega)
    b2 = boundary_extract(cloud2, cfg.n_phase_bins)

    if side == "h1":
        closed = chord_sample_points(b1.points, cfg.chord_samples)
        closed_cloud = SrgCloud(omega, closed, np.full(closed.size, "grid"), closed.size)
        inv = invert_cloud(closed_cloud, cfg.tol_zero)
        if inv.unbounded:
            return SeparationResult(omega, False, 0.0, 1.0, None, cfg.method,
                                    side, reason="inverse-unbounded")
        points_a = boundary_extract(inv, cfg.n_phase_bins).points
        chord_on_b = False
    else:
        inv = invert_cloud(b1, cfg.tol_zero)
        if inv.unbounded:
            return SeparationResult(omega, False, 0.0, 1.0, None, cfg.method,
                                    side, reason="inverse-unbounded")
        points_a = inv.points
        chord_on_b = True

    q = SeparationQuery(points_a, b2.points, tau_grid, cfg.method, chord_on_b,
                        omega, tau_continuous=not cfg.tau_one_only)
    res = separate(q)
    return replace(res, chord_side=side)


def _result_rank(r: SeparationResult, eps_margin: float) -> tuple:
    # higher is better: separated with real margin > thin margin > failure
    if r.separated and r.margin > eps_margin:
        return (2, r.margin)
    if r.separated:
        return (1, r.margin)
    return (0, -1.0 if r.reason == "inverse-unbounded" else 0.0)


def sweep_frequency(M1, M2, omega: float, cfg: SweepConfig, tau_grid, seed) -> SeparationResult:
    sides = ("h2", "h1") if cfg.chord_side == "auto" else (cfg.chord_side,)
    best = None
    for side in sides:
        r = _side_result(M1, M2, side, cfg, tau_grid, omega, seed)
        if best is None or _result_rank(r, cfg.eps_margin) > _result_rank(best, cfg.eps_margin):
            best = r
    return best


def sweep_feedback(h1, h2, grid: FrequencyGrid, cfg: SweepConfig | None = None) -> FeedbackVerdict:
    """Certify closed-loop stability of the (h1, h2) negative-feedback loop.

    Models may be rational matrices or state-space realizations; both must be
    open-loop stable (refused otherwise) and the loop well posed.  Certifies
    when every grid frequency plus the synthetic infinite-frequency sample
    separates with margin above ``eps_margin``; a genuine intersection gives
    VIOLATED with the worst witness; unbounded inversions or thin margins
    give INCONCLUSIVE.
    """
    cfg = cfg or SweepConfig()
    if cfg.method not in ("disk", "hull", "naive"):
        raise ValueError(f"unknown method {cfg.method!r}")
    if cfg.chord_side not in ("h1", "h2", "auto"):
        raise ValueError(f"unknown chord side {cfg.chord_side!r}")
    ss1, ss2 = _as_statespace(h1), _as_statespace(h2)
    if ss1.dim != ss2.dim:
        raise ValueError("loop systems must share the same dimension")
    for name, ss in (("h1", ss1), ("h2", ss2)):
        ok, absc = is_hurwitz(ss)
        if not ok:
            raise OpenLoopUnstableError(
                f"{name} is not open-loop stable (spectral abscissa {absc:.3g}); "
                "the certificate only applies to stable open loops")
    D1, D2 = ss1.D, ss2.D
    wp = np.linalg.det(np.eye(ss1.dim) + D1 @ D2)
    if abs(wp) < 1e-12:
        raise IllPosedError(f"|det(I + D1 D2)| = {abs(wp):.3g} < 1e-12")

    tau_grid = cfg.tau_grid()
    R1 = h1.response_many(grid.omegas)
    R2 = h2.response_many(grid.omegas)
    jobs = [(i, grid.omegas[i], R1[i], R2[i]) for i in range(len(grid))]
    if cfg.include_infinity:
        jobs.append((len(grid), math.inf, D1.astype(complex), D2.astype(complex)))

    def work(job):
        i, w, M1, M2 = job
        return sweep_frequency(M1, M2, w, cfg, tau_grid, _omega_seed(cfg.seed, i))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    grid_results = results[: len(grid)]
    extra = _refine_minima(h1, h2, grid.omegas, grid_results, cfg, tau_grid)
    return _reduce_verdict(results + extra, cfg)


def _margin_at(h1, h2, w: float, cfg: SweepConfig, tau_grid) -> SeparationResult:
    M1 = h1.response_many(np.array([w]))[0]
    M2 = h2.response_many(np.array([w]))[0]
    seed = int(np.random.SeedSequence((cfg.seed, np.float64(w).view(np.uint64))).generate_state(1)[0])
    return sweep_frequency(M1, M2, w, cfg, tau_grid, seed)


def _refine_minima(h1, h2, omegas, results, cfg: SweepConfig, tau_grid):
    """Bisection around low local minima of margin(omega).

    A transversal contact of the SRG sets at an off-grid frequency shows up
    as a dip, not a zero; shrinking the bracket drives the margin to the true
    scale so the verdict reduction can see it.
    """
    if cfg.refine_rounds <= 0 or len(results) < 3:
        return []
    margins = np.array([r.margin for r in results])
    finite = margins[np.isfinite(margins)]
    if finite.size == 0:
        return []
    trigger = max(3.0 * float(finite.min()), cfg.refine_below)
    n = len(results)
    minima = []
    for i in range(n):
        m = margins[i]
        if not np.isfinite(m) or m > trigger or not results[i].separated:
            continue
        left = margins[i - 1] if i > 0 else np.inf
        right = margins[i + 1] if i < n - 1 else np.inf
        if m <= left and m <= right:
            minima.append((m, i))
    minima.sort()
    extra = []
    for _, i in minima[: cfg.refine_max]:
        m = margins[i]
        lo = omegas[i - 1] if i > 0 else omegas[i]
        hi = omegas[i + 1] if i < n - 1 else omegas[i]
        triple = [(omegas[i], m)]
        best = (omegas[i], m)
        for _ in range(cfg.refine_rounds):
            w1 = math.sqrt(lo * best[0]) if lo > 0 else (lo + best[0]) / 2
            w2 = math.sqrt(best[0] * hi)
            cands = []
            for w in (w1, w2):
                r = _margin_at(h1, h2, w, cfg, tau_grid)
                extra.append(r)
                cands.append((w, r.margin))
                if not r.separated or r.margin <= cfg.eps_margin / 4:
                    return extra  # verdict already decided by this sample
            all_pts = sorted(triple + cands)
            best = min(all_pts, key=lambda t: t[1])
            k = [p[0] for p in all_pts].index(best[0])
            lo = all_pts[k - 1][0] if k > 0 else lo
            hi = all_pts[k + 1][0] if k < len(all_pts) - 1 else hi
            triple = [best]
            if hi / max(lo, 1e-300) < 1 + 1e-9:
                break
    return extra


def _reduce_verdict(results: Sequence[SeparationResult], cfg: SweepConfig) -> FeedbackVerdict:
    violated = [r for r in results if not r.separated and r.reason != "inverse-unbounded"]
    unbounded = [r for r in results if r.reason == "inverse-unbounded"]
    thin = [r for r in results if r.separated and r.margin <= cfg.eps_margin]
    finite = [r for r in results if not math.isinf(r.margin)]
    worst = min(finite, key=lambda r: r.margin) if finite else results[0]
    margin_min = worst.margin if finite else math.inf
    if violated:
        w = min(violated, key=lambda r: r.margin)
        return FeedbackVerdict(Status.VIOLATED, w.margin, w.omega, w.worst_tau,
                               tuple(results), cfg, w.witness,
                               reason=f"intersection at omega={w.omega:.6g}")
    if unbounded or thin:
        w = unbounded[0] if unbounded else min(thin, key=lambda r: r.margin)
        why = ("inverse-unbounded" if unbounded
               else f"margin {w.margin:.3g} below eps_margin {cfg.eps_margin:g}")
        return FeedbackVerdict(Status.INCONCLUSIVE, margin_min, w.omega, w.worst_tau,
                               tuple(results), cfg, w.witness, reason=why)
    return FeedbackVerdict(Status.CERTIFIED_STABLE, margin_min, worst.omega,
                           worst.worst_tau, tuple(results), cfg, worst.witness)
