"""Principal angles, sin-Theta, orbit embeddings, covering/packing, bounds."""

import math

import numpy as np
import pytest

from orbitdp.geometry import (
    BoundConstants,
    DegenerateGapError,
    GapHypothesisError,
    ProjectionPoint,
    aligned_basis,
    coordinate_projection,
    evaluate_bounds,
    greedy_orbit_cover,
    greedy_orbit_packing,
    haar_projection,
    lower_bound_maximand,
    orbit_embedding,
    orbit_unitary_factor,
    principal_angles,
    sin_theta_check,
    utility_gap_bound,
    verify_packing_certificate,
)
from orbitdp.linalg import (
    HermitianMatrix,
    Spectrum,
    ValidationError,
    frobenius_distance,
    spectral_norm,
)
from orbitdp.sampler import haar_unitary

from conftest import random_hermitian


def projector_onto(vec):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return ProjectionPoint(np.outer(v, v.conj()))


class TestProjectionPoint:
    def test_validates_idempotence(self):
        with pytest.raises(ValidationError):
            ProjectionPoint(np.diag([0.5, 0.0]).astype(complex))

    def test_rank_and_complement(self):
        p = coordinate_projection(4, 2)
        assert p.rank == 2 and p.complement().rank == 2

    def test_from_basis(self):
        u = haar_unitary(4, np.random.default_rng(0))
        p = ProjectionPoint.from_basis(u[:, :2])
        assert p.rank == 2


class TestPrincipalAngles:
    def test_equal_subspaces(self):
        p = haar_projection(4, 2, np.random.default_rng(1))
        angles, _, _ = principal_angles(p, p)
        assert np.allclose(angles, 0.0, atol=1e-7)

    def test_orthogonal_lines(self):
        a = projector_onto([1.0, 0.0])
        b = projector_onto([0.0, 1.0])
        angles, _, _ = principal_angles(a, b)
        assert angles[0] == pytest.approx(math.pi / 2, abs=1e-12)

    def test_diagonal_line(self):
        a = projector_onto([1.0, 0.0, 0.0])
        b = projector_onto([1.0, 1.0, 0.0])
        angles, _, _ = principal_angles(a, b)
        assert angles[0] == pytest.approx(math.pi / 4, abs=1e-10)

    def test_paired_bases(self):
        gen = np.random.default_rng(2)
        a, b = haar_projection(5, 2, gen), haar_projection(5, 2, gen)
        angles, ua, vb = principal_angles(a, b)
        assert np.all(np.diff(angles) >= -1e-12)
        assert np.allclose(ua @ ua.conj().T, a.p, atol=1e-10)
        assert np.allclose(vb @ vb.conj().T, b.p, atol=1e-10)
        for ell in range(2):
            inner = ua[:, ell].conj() @ vb[:, ell]
            assert abs(inner.imag) <= 1e-8
            assert inner.real == pytest.approx(math.cos(angles[ell]), abs=1e-8)

    def test_rank_mismatch(self):
        with pytest.raises(ValidationError):
            principal_angles(coordinate_projection(4, 1), coordinate_projection(4, 2))


class TestSinTheta:
    def test_equal_matrices(self):
        a = HermitianMatrix(np.diag([3.0, 1.0, 0.0]).astype(complex))
        lhs, rhs = sin_theta_check(a, a, 1, 1.0)
        assert lhs == 0.0 and rhs == 0.0

    def test_small_rotation(self):
        eta = 0.1
        rot = np.array([[math.cos(eta), -math.sin(eta)], [math.sin(eta), math.cos(eta)]],
                       dtype=complex)
        a = HermitianMatrix(np.diag([2.0, 0.0]).astype(complex))
        a_hat = HermitianMatrix(rot @ a.entries @ rot.conj().T)
        lhs, rhs = sin_theta_check(a, a_hat, 1, 2.0)
        assert lhs <= rhs + 1e-12
        assert lhs == pytest.approx(math.sqrt(2) * abs(math.sin(eta)), abs=1e-10)

    def test_hypothesis_violation_raises(self):
        a = HermitianMatrix(np.diag([1.0, 0.9]).astype(complex))
        with pytest.raises(GapHypothesisError):
            sin_theta_check(a, a, 1, 0.5)

    def test_randomized_no_violations(self):
        gen = np.random.default_rng(9)
        for _ in range(500):
            d = int(gen.integers(2, 7))
            i = int(gen.integers(1, d))
            base = np.sort(gen.random(d))[::-1]
            base[:i] += 2.0  # enforce a gap >= 2 between the blocks
            u = haar_unitary(d, gen)
            a = HermitianMatrix((u * base) @ u.conj().T)
            pert = random_hermitian(d, gen)
            pert_scaled = 0.3 * pert.entries / max(np.linalg.norm(pert.entries), 1.0)
            a_hat = HermitianMatrix(a.entries + pert_scaled)
            lhs, rhs = sin_theta_check(a, a_hat, i, 1.0)
            assert lhs <= rhs + 1e-8


class TestAlignedBasis:
    def test_coordinate_projection_is_exact(self):
        p = coordinate_projection(5, 2)
        assert np.allclose(aligned_basis(p), np.eye(5, dtype=complex)[:, :2], atol=1e-12)

    def test_closed_form_line(self):
        for eta in np.linspace(0.05, math.pi / 2, 12):
            p = projector_onto([math.cos(eta), math.sin(eta)])
            w = aligned_basis(p)
            dist = np.linalg.norm(w - np.eye(2, dtype=complex)[:, :1])
            assert dist == pytest.approx(2 * abs(math.sin(eta / 2)), abs=1e-10)
            bound = frobenius_distance(p.p, coordinate_projection(2, 1).p)
            assert bound == pytest.approx(math.sqrt(2) * abs(math.sin(eta)), abs=1e-10)
            assert dist <= bound + 1e-12

    def test_randomized_inequality(self):
        gen = np.random.default_rng(10)
        for _ in range(1000):
            d = int(gen.integers(2, 9))
            r = int(gen.integers(1, d))
            p = haar_projection(d, r, gen)
            w = aligned_basis(p)
            assert np.allclose(w.conj().T @ w, np.eye(r), atol=1e-10)
            assert np.allclose(w @ w.conj().T, p.p, atol=1e-9)
            lhs = np.linalg.norm(w - np.eye(d, dtype=complex)[:, :r])
            rhs = frobenius_distance(p.p, coordinate_projection(d, r).p)
            assert lhs <= rhs + 1e-8

    def test_unitary_factor_bound(self):
        gen = np.random.default_rng(11)
        for _ in range(300):
            d = int(gen.integers(2, 8))
            r = int(gen.integers(1, d))
            p = haar_projection(d, r, gen)
            psi = orbit_unitary_factor(p)
            assert np.linalg.norm(psi @ psi.conj().T - np.eye(d)) <= 1e-9
            lhs = np.linalg.norm(psi - np.eye(d))
            rhs = 2.0 * frobenius_distance(p.p, coordinate_projection(d, r).p)
            assert lhs <= rhs + 1e-8


class TestOrbitEmbedding:
    LAM3 = Spectrum(np.array([2.0, 1.0, 0.0]), rank_k=2)

    def test_coordinate_point_maps_to_diagonal(self):
        out = orbit_embedding(coordinate_projection(2, 1), self.LAM3, 1, 3)
        assert np.allclose(out.materialize().entries, np.diag([2.0, 1.0, 0.0]), atol=1e-12)

    def test_named_instance_bounds(self):
        p = projector_onto([1.0, 1.0])
        center = coordinate_projection(2, 1)
        phi_p = orbit_embedding(p, self.LAM3, 1, 3).materialize().entries
        phi_c = orbit_embedding(center, self.LAM3, 1, 3).materialize().entries
        gap = 2.0 - 0.0
        grass = frobenius_distance(p.p, center.p)
        dist = frobenius_distance(phi_p, phi_c)
        assert dist >= gap * grass - 1e-8
        assert dist <= 4.0 * 2.0 * grass + 1e-8

    def test_distance_preservation_randomized(self):
        gen = np.random.default_rng(12)
        for _ in range(200):
            d = int(gen.integers(3, 7))
            i = int(gen.integers(1, d))
            j = int(gen.integers(i + 1, d + 1))
            vals = np.sort(gen.random(d))[::-1] + np.linspace(d, 1, d)  # distinct, positive
            lam = Spectrum(vals)
            sub = d - j + i + 1
            pa, pb = haar_projection(sub, i, gen), haar_projection(sub, i, gen)
            fa = orbit_embedding(pa, lam, i, j).materialize().entries
            fb = orbit_embedding(pb, lam, i, j).materialize().entries
            gap = vals[i - 1] - vals[j - 1]
            assert frobenius_distance(fa, fb) >= gap * frobenius_distance(pa.p, pb.p) - 1e-8
            center = orbit_embedding(coordinate_projection(sub, i), lam, i, j)
            assert frobenius_distance(fa, center.materialize().entries) <= \
                4.0 * vals[0] * frobenius_distance(pa.p, coordinate_projection(sub, i).p) + 1e-8

    def test_index_validation(self):
        with pytest.raises(ValidationError):
            orbit_embedding(coordinate_projection(2, 1), self.LAM3, 2, 2)
        with pytest.raises(ValidationError):
            orbit_embedding(coordinate_projection(3, 1), self.LAM3, 1, 3)


class TestGreedyCover:
    LAM = Spectrum(np.array([1.0, 0.0]), rank_k=1)

    def test_huge_radius_single_center(self):
        centers = greedy_orbit_cover(self.LAM, 1.1, 4, budget=40)
        assert len(centers) == 1

    def test_count_range_d2(self):
        centers = greedy_orbit_cover(self.LAM, 0.5, 11, budget=60)
        assert 2 <= len(centers) <= 50

    def test_separation_holds(self):
        centers = greedy_orbit_cover(self.LAM, 0.5, 11, budget=60)
        mats = [c.materialize().entries for c in centers]
        for s in range(len(mats)):
            for t in range(s + 1, len(mats)):
                assert spectral_norm(mats[s] - mats[t]) > 0.5

    def test_monotone_in_radius_shared_stream(self):
        coarse = greedy_orbit_cover(self.LAM, 0.5, 123, budget=60)
        fine = greedy_orbit_cover(self.LAM, 0.25, 123, budget=60)
        assert len(fine) >= len(coarse)

    def test_packing_cover_sandwich(self):
        # separated set at 2*zeta can never beat the greedy cover count at zeta
        for seed in (1, 2, 3):
            wide = greedy_orbit_cover(self.LAM, 0.6, seed, budget=60)
            narrow = greedy_orbit_cover(self.LAM, 0.3, seed, budget=60)
            assert len(wide) <= len(narrow)


class TestGreedyPacking:
    def test_small_orbit_certificate(self):
        lam = Spectrum(np.array([1.0, 0.0]), rank_k=1)
        cert = greedy_orbit_packing(lam, 1, 2, 0.1, math.inf, 7, budget=60)
        assert len(cert.points) >= 2
        assert cert.min_pairwise_dist >= 0.1
        assert verify_packing_certificate(cert)["ok"]

    def test_oversized_separation_single_point(self):
        lam = Spectrum(np.array([1.0, 0.0]), rank_k=1)
        cert = greedy_orbit_packing(lam, 1, 2, 1.5, math.inf, 7, budget=40)
        assert len(cert.points) == 1

    def test_ball_restricted_instance(self):
        lam = Spectrum(np.array([3.0, 2.0, 1.0, 0.0]), rank_k=3)
        cert = greedy_orbit_packing(lam, 1, 4, 0.5, 2.0, 13, budget=150)
        report = verify_packing_certificate(cert)
        assert report["ok"]
        assert report["max_center_dist"] <= 2.0 + 1e-9
        if report["count"] >= 2:
            assert report["min_pairwise_dist"] >= 0.5 - 1e-9

    def test_degenerate_gap_rejected(self):
        lam = Spectrum(np.array([1.0, 1.0, 0.0]), rank_k=2)
        with pytest.raises(DegenerateGapError):
            greedy_orbit_packing(lam, 1, 2, 0.1, math.inf, 0)

    def test_tampered_certificate_fails_verification(self):
        from orbitdp.geometry import PackingCertificate
        from orbitdp.linalg import OrbitPoint

        lam = Spectrum(np.array([1.0, 0.0]), rank_k=1)
        cert = greedy_orbit_packing(lam, 1, 2, 0.3, math.inf, 7, budget=40)
        duplicated = PackingCertificate(cert.points + (cert.points[0],),
                                        cert.min_pairwise_dist, cert.center,
                                        cert.radius, cert.target_separation)
        assert not verify_packing_certificate(duplicated)["ok"]


class TestGrassmannianDiameter:
    @pytest.mark.parametrize("d,k", [(4, 2), (5, 2), (6, 3)])
    def test_empirical_diameter(self, d, k):
        gen = np.random.default_rng(14)
        units = haar_unitary(d, gen, size=20_000)
        cols = units[:, :, :k]
        a, b = cols[:10_000], cols[10_000:]
        # ||Pa - Pb||_F^2 = 2k - 2 ||Qa* Qb||_F^2
        cross = np.einsum("nik,nil->nkl", a.conj(), b)
        dist_sq = 2 * k - 2 * np.sum(np.abs(cross) ** 2, axis=(1, 2))
        assert np.sqrt(dist_sq.max()) <= math.sqrt(2 * min(k, d - k)) + 1e-8


class TestEvaluateBounds:
    def test_zero_spectrum_collapse(self):
        gamma = Spectrum(np.zeros(3))
        lam = Spectrum(np.zeros(3), rank_k=2)
        report = evaluate_bounds(gamma, lam, 3, 2, 1.0, 0.1)
        assert report.upper_utility_bound == 0.0
        assert report.lower_error_bound == 0.0
        assert report.covering_upper == 0.0
        assert report.packing_lower == 0.0
        # eigenvalue noise keeps the rank-k error bound positive even at M = 0
        assert report.rank_k_error_bound >= 0.0

    def test_projection_maximand(self):
        vals = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        assert lower_bound_maximand(vals) == 2.0  # i = min(k, d/2) attains i * lambda_1^2
        assert lower_bound_maximand(vals) <= 2 * 1.0**2

    def test_gap_bound_matches_independent_derivation(self):
        gamma = Spectrum(np.array([3.0, 2.0, 1.0, 0.0]))
        lam = Spectrum(np.array([3.0, 2.0, 0.0, 0.0]), rank_k=2)
        got = utility_gap_bound(gamma, lam, 1.0, 0.1)
        big_gamma = 6.0
        direct = (2.0 * 3.0 / 1.0) * math.log(math.e + (2 + 8 * big_gamma) ** (4 * 4 * 2) / 0.1) + 3.0
        assert got == pytest.approx(direct, rel=1e-12)

    def test_report_consistency_and_fields(self):
        gamma = Spectrum(np.array([3.0, 2.0, 1.0, 0.0]))
        lam = Spectrum(np.array([3.0, 2.0, 0.0, 0.0]), rank_k=2)
        report = evaluate_bounds(gamma, lam, 4, 2, 1.0, 0.1, BoundConstants(), zeta=0.1)
        assert report.packing_lower <= report.covering_upper
        assert report.packing_lower > 0  # small zeta makes the packing bound informative
        assert "constants" in report.constants_note
        table = report.to_text_table()
        assert "utility gap bound" in table

    def test_sandwich_across_zetas(self):
        gamma = Spectrum(np.array([2.0, 1.5, 0.5, 0.0]))
        lam = Spectrum(np.array([2.0, 1.5, 0.0, 0.0]), rank_k=2)
        for zeta in (0.01, 0.05, 0.2, 1.0):
            report = evaluate_bounds(gamma, lam, 4, 2, 0.5, 0.05, zeta=zeta)
            assert report.packing_lower <= report.covering_upper

    def test_input_validation(self):
        gamma = Spectrum(np.array([1.0, 0.0]))
        lam = Spectrum(np.array([1.0, 0.0]), rank_k=1)
        with pytest.raises(ValidationError):
            evaluate_bounds(gamma, lam, 3, 1, 1.0, 0.1)
        with pytest.raises(ValidationError):
            evaluate_bounds(gamma, lam, 2, 2, 1.0, 0.1)
        with pytest.raises(ValidationError):
            evaluate_bounds(gamma, lam, 2, 1, 1.0, 1.5)
