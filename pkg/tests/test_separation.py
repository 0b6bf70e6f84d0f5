import math

import numpy as np
import pytest

from srgcert.models import FrequencyGrid
from srgcert.modelio import parse_rational_matrix
from srgcert.separation import (
    FeedbackVerdict,
    IllPosedError,
    OpenLoopUnstableError,
    SeparationQuery,
    Status,
    SweepConfig,
    default_tau_grid,
    separate,
    separate_disk,
    separate_hull,
    separate_naive,
    sweep_feedback,
)
from srgcert.srg import DiskRegion

TAUS = default_tau_grid(32)
TAU_ONE = np.array([1.0])


def disk_query(tau_grid=TAUS, tau_continuous=True):
    return SeparationQuery(np.array([0j]), np.array([0j]), tau_grid, "disk",
                           tau_continuous=tau_continuous)


class TestSeparateDisk:
    def test_hand_geometry_separated(self):
        # Disk(3,1) vs -1*Disk(1,0.5) = Disk(-1,0.5): gap 4 - 1.5 = 2.5
        q = disk_query(TAU_ONE, tau_continuous=False)
        r = separate_disk(q, DiskRegion(3 + 0j, 1.0), DiskRegion(1 + 0j, 0.5))
        assert r.separated
        assert r.margin == pytest.approx(2.5)
        assert r.worst_tau == 1.0
        wa, wb = r.witness
        assert abs(wa - wb) == pytest.approx(2.5)

    def test_hand_geometry_overlapping(self):
        # Disk(0,1) vs -1*Disk(-1,0.5) = Disk(1,0.5): |0-1| = 1 < 1.5
        q = disk_query(TAU_ONE, tau_continuous=False)
        r = separate_disk(q, DiskRegion(0j, 1.0), DiskRegion(-1 + 0j, 0.5))
        assert not r.separated
        assert r.margin == 0.0
        wa, wb = r.witness
        assert abs(wa - wb) <= 1e-12

    def test_tau_sweep_contact(self):
        # Disk(2,0.1) vs Disk(-4,0.1): -tau*Disk(-4,0.1) = Disk(4 tau, 0.1 tau)
        # contact where |2 - 4 tau| = 0.1 + 0.1 tau -> tau in [1.9/4.1, 2.1/3.9]
        r = separate_disk(disk_query(), DiskRegion(2 + 0j, 0.1), DiskRegion(-4 + 0j, 0.1))
        assert not r.separated
        assert r.worst_tau == pytest.approx(0.5, abs=0.02)

    def test_continuous_tau_catches_between_grid_dip(self):
        # coarse grid misses the contact near tau = 0.5; the closed-form
        # critical point must still find it
        coarse = np.array([0.25, 1.0])
        r = separate_disk(disk_query(coarse),
                          DiskRegion(2 + 0j, 0.1), DiskRegion(-4 + 0j, 0.1))
        assert not r.separated

    def test_unbounded_flag(self):
        q = SeparationQuery(np.array([1 + 0j]), np.array([1 + 0j]), TAUS, "disk",
                            unbounded_a=True)
        r = separate_disk(q)
        assert not r.separated and r.margin == 0.0 and r.reason == "inverse-unbounded"


class TestSeparateHull:
    def test_axis_aligned_squares(self):
        # [0,1]^2 vs [3,4]x[0,1] at tau = 1: pass the negated square as B
        A = np.array([0j, 1 + 0j, 1 + 1j, 1j])
        B = -np.array([3 + 0j, 4 + 0j, 4 + 1j, 3 + 1j])
        q = SeparationQuery(A, B, TAU_ONE, "hull", tau_continuous=False)
        r = separate_hull(q)
        assert r.separated
        assert r.margin == pytest.approx(2.0, abs=1e-9)

    def test_point_hulls_touch(self):
        q = SeparationQuery(np.array([1 + 0j]), np.array([-1 + 0j]), TAU_ONE,
                            "hull", tau_continuous=False)
        r = separate_hull(q)
        assert not r.separated
        assert r.margin == 0.0

    def test_cone_catches_intermediate_tau(self):
        # A at 1, B at -2: -tau*B = 2 tau hits 1 at tau = 0.5 (not on a
        # 2-point grid); the cone formulation must detect it
        q = SeparationQuery(np.array([1 + 0j]), np.array([-2 + 0j]),
                            np.array([0.25, 1.0]), "hull")
        r = separate_hull(q)
        assert not r.separated
        assert r.worst_tau == pytest.approx(0.5, abs=1e-6)

    def test_degenerate_segment_vs_polygon(self):
        # A is a segment inside one half plane; B negates onto a triangle
        # with apex 3j, two above the segment's line y = 1: distance 2
        A = np.array([-1 + 1j, 1 + 1j])
        B = np.array([-3j, -1 - 4j, 1 - 4j])
        q = SeparationQuery(A, B, TAU_ONE, "hull", tau_continuous=False)
        r = separate_hull(q)
        assert r.separated and r.margin == pytest.approx(2.0, abs=1e-9)

    def test_real_projection_restores_chord_property(self):
        # B has points with Re < 0 far from the axis; its chords cross the
        # axis, so -tau*chord(B) must reach A at +1 even though the raw
        # per-component hulls never do
        B = np.array([-2 + 3j, -2 - 3j, 0.5 + 0.1j, 0.5 - 0.1j])
        A = np.array([1 + 0j])
        q = SeparationQuery(A, B, TAUS, "hull", chord_on_b=True)
        r = separate_hull(q)
        assert not r.separated
        q2 = SeparationQuery(A, B, TAUS, "hull", chord_on_b=False)
        assert separate_hull(q2).separated

    def test_matches_naive_on_vertices(self, rng):
        # hull distance can never exceed the pointwise distance on the same set
        for _ in range(25):
            A = rng.standard_normal(12) + 1j * rng.standard_normal(12) + 4
            B = rng.standard_normal(12) + 1j * rng.standard_normal(12)
            qh = SeparationQuery(A, B, TAU_ONE, "hull", tau_continuous=False)
            qn = SeparationQuery(A, B, TAU_ONE, "naive", tau_continuous=False)
            rh, rn = separate_hull(qh), separate_naive(qn)
            assert rh.margin <= rn.margin + 1e-9


class TestSeparateNaive:
    def test_two_points(self):
        # {1+j} vs -1*{1-j} = {-1+j}: distance 2
        q = SeparationQuery(np.array([1 + 1j]), np.array([1 - 1j]), TAU_ONE,
                            "naive", tau_continuous=False)
        r = separate_naive(q)
        assert r.separated and r.margin == pytest.approx(2.0)
        wa, wb = r.witness
        assert wa == 1 + 1j and wb == -1 + 1j

    def test_symmetric_cloud_touches_itself(self):
        # a cloud symmetric about the origin negated onto itself: margin 0
        pts = np.array([1 + 1j, -1 - 1j, 1 - 1j, -1 + 1j])
        q = SeparationQuery(pts, pts, TAU_ONE, "naive", tau_continuous=False)
        r = separate_naive(q)
        assert not r.separated and r.margin == 0.0

    def test_chord_variant_hits_axis_crossing(self):
        # segment of [-2+3j, -2-3j] scaled by tau=0.5 passes through +1
        A = np.array([1 + 0j])
        B = np.array([-2 + 3j, -2 - 3j])
        r = separate_naive(SeparationQuery(A, B, TAUS, "naive", chord_on_b=True))
        assert r.margin < 0.03  # tau-grid granularity near tau = 0.5
        r2 = separate_naive(SeparationQuery(A, B, TAUS, "naive", chord_on_b=False))
        assert r2.margin > 0.5

    def test_worst_tau_reported(self):
        A = np.array([2 + 0j])
        B = np.array([-4 + 0j])
        r = separate_naive(SeparationQuery(A, B, TAUS, "naive"))
        assert r.worst_tau == pytest.approx(0.5, abs=0.06)


class TestConservatismOrdering:
    @pytest.mark.parametrize("trial", range(100))
    def test_disk_implies_hull_implies_naive(self, trial):
        rng = np.random.default_rng(31000 + trial)
        nA, nB = rng.integers(2, 40, 2)
        A = rng.standard_normal(nA) + 1j * rng.standard_normal(nA) \
            + complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
        B = rng.standard_normal(nB) + 1j * rng.standard_normal(nB) \
            + complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
        A = np.concatenate([A, A.conj()])
        B = np.concatenate([B, B.conj()])
        taus = default_tau_grid(16)
        rd = separate(SeparationQuery(A, B, taus, "disk"))
        rh = separate(SeparationQuery(A, B, taus, "hull"))
        rn = separate(SeparationQuery(A, B, taus, "naive"))
        # disk set contains hull set contains the samples, and disk/hull
        # minimize over the whole tau interval while naive uses the grid
        assert rd.margin <= rh.margin + 1e-9
        assert rh.margin <= rn.margin + 1e-9
        if rd.separated:
            assert rh.separated
        if rh.separated:
            assert rn.separated

    def test_margin_grid_convergence(self, rng):
        # naive margin on the default grid is within 1% of a 4x refined grid
        # for a well-separated pair (0 not in region_b)
        A = 5 + rng.standard_normal(30) + 1j * rng.standard_normal(30)
        B = 2 + 0.3 * (rng.standard_normal(30) + 1j * rng.standard_normal(30))
        A = np.concatenate([A, A.conj()])
        B = np.concatenate([B, B.conj()])
        m32 = separate(SeparationQuery(A, B, default_tau_grid(32), "naive")).margin
        m128 = separate(SeparationQuery(A, B, default_tau_grid(128), "naive")).margin
        assert abs(m32 - m128) / m128 < 0.01


class TestTauGrid:
    def test_default_grid_shape(self):
        g = default_tau_grid(32)
        assert g.size == 32 and g[-1] == 1.0 and g[0] == pytest.approx(1e-3)
        assert np.all(np.diff(g) > 0)

    def test_rejects_bad_grids(self):
        from srgcert.separation import _check_tau_grid
        with pytest.raises(ValueError):
            _check_tau_grid([0.5, 0.9])  # max not 1
        with pytest.raises(ValueError):
            _check_tau_grid([1.0, 0.5])


GRID = FrequencyGrid.log(1e-3, 1e3, 12)


class TestSweepFeedback:
    def test_siso_lag_with_gain_certified(self):
        # h1 = 1/(s+1), h2 = k: SRG(h1)^-1 = {1 +- jw} never meets {-tau k}
        h1 = parse_rational_matrix("[ 1/(s+1) ]")
        for k in (0.5, 1.0, 2.0):
            h2 = parse_rational_matrix(f"[ {k} ]")
            v = sweep_feedback(h1, h2, GRID, SweepConfig(method="hull", seed=3))
            assert v.status is Status.CERTIFIED_STABLE
            assert v.margin_min > 1e-6

    def test_zero_gain_loop_trivially_certified(self):
        z = parse_rational_matrix("[ 0, 0 ; 0, 0 ]")
        v = sweep_feedback(z, z, GRID, SweepConfig(method="hull"))
        assert v.status is Status.CERTIFIED_STABLE
        assert math.isinf(v.margin_min)

    def test_open_loop_unstable_refused(self):
        h1 = parse_rational_matrix("[ 1/(s - 1) ]")  # pole at +1
        h2 = parse_rational_matrix("[ 1 ]")
        with pytest.raises(OpenLoopUnstableError):
            sweep_feedback(h1, h2, GRID, SweepConfig())

    def test_ill_posed_refused(self):
        h1 = parse_rational_matrix("[ -1 ]")
        h2 = parse_rational_matrix("[ 1 ]")
        with pytest.raises(IllPosedError):
            sweep_feedback(h1, h2, GRID, SweepConfig())

    def test_known_unstable_loop_not_certified(self):
        # 10/(s+1)^3 with unit feedback has closed-loop poles in the RHP
        h1 = parse_rational_matrix("[ 10/(s^3 + 3*s^2 + 3*s + 1) ]")
        h2 = parse_rational_matrix("[ 1 ]")
        v = sweep_feedback(h1, h2, FrequencyGrid.log(1e-2, 1e2, 60),
                           SweepConfig(method="hull", seed=5))
        assert v.status is not Status.CERTIFIED_STABLE

    def test_verdict_json_shape(self):
        h1 = parse_rational_matrix("[ 1/(s+1) ]")
        h2 = parse_rational_matrix("[ 1 ]")
        v = sweep_feedback(h1, h2, GRID, SweepConfig(method="hull"))
        doc = v.to_json_dict()
        assert doc["status"] == "certified-stable"
        assert len(doc["per_frequency"]) >= len(GRID) + 1  # + infinity sample
        assert doc["config_echo"]["method"] == "hull"

    def test_disk_method_conservative_on_high_frequency_siso(self):
        # one disk per side swallows the region between the conjugate
        # branches at high frequency: no certificate, but no crash either
        h1 = parse_rational_matrix("[ 1/(s+1) ]")
        h2 = parse_rational_matrix("[ 1 ]")
        v = sweep_feedback(h1, h2, GRID, SweepConfig(method="disk"))
        assert v.status in (Status.VIOLATED, Status.INCONCLUSIVE)

    def test_threads_do_not_change_result(self):
        h1 = parse_rational_matrix("[ 1/(s+1) ]")
        h2 = parse_rational_matrix("[ 2 ]")
        v1 = sweep_feedback(h1, h2, GRID, SweepConfig(method="naive", threads=1, seed=9))
        v4 = sweep_feedback(h1, h2, GRID, SweepConfig(method="naive", threads=4, seed=9))
        assert v1.margin_min == v4.margin_min
        assert [r.margin for r in v1.per_frequency] == [r.margin for r in v4.per_frequency]

    def test_tau_one_only_flag(self):
        h1 = parse_rational_matrix("[ 1/(s+1) ]")
        h2 = parse_rational_matrix("[ 2 ]")
        v = sweep_feedback(h1, h2, GRID, SweepConfig(method="naive", tau_one_only=True))
        assert v.status is Status.CERTIFIED_STABLE
        assert all(r.worst_tau == 1.0 for r in v.per_frequency if np.isfinite(r.margin))


@pytest.mark.slow
class TestBundledPairSweep:
    def test_symmetry_of_side_selection(self, h1_model, h2_model):
        # swapping which system is inverted yields the same verdict
        grid = FrequencyGrid.log(1e-3, 1e3, 20)
        cfg = SweepConfig(method="hull", chord_side="auto", n_dir=600,
                          n_rand=150, n_phase_bins=240, seed=2)
        v12 = sweep_feedback(h1_model, h2_model, grid, cfg)
        v21 = sweep_feedback(h2_model, h1_model, grid, cfg)
        assert v12.status is Status.CERTIFIED_STABLE
        assert v21.status == v12.status

    def test_disk_never_certifies_when_hull_rejects(self, h1_model, h2_model):
        grid = FrequencyGrid.log(1e-3, 1e3, 8)
        for side in ("h1", "h2"):
            cfg_h = SweepConfig(method="hull", chord_side=side, n_dir=400,
                                n_rand=100, n_phase_bins=180, seed=4)
            cfg_d = SweepConfig(method="disk", chord_side=side, n_dir=400,
                                n_rand=100, n_phase_bins=180, seed=4)
            vh = sweep_feedback(h1_model, h2_model, grid, cfg_h)
            vd = sweep_feedback(h1_model, h2_model, grid, cfg_d)
            if vd.status is Status.CERTIFIED_STABLE:
                assert vh.status is Status.CERTIFIED_STABLE
