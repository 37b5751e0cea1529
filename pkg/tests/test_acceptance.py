"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Every tolerance is pinned here; nothing is deferred to calibration.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from orbitdp.bench import (
    ExperimentSpec,
    audit_privacy,
    gen_projection_instance,
    make_instance,
    run_experiment,
)
from orbitdp.cli import cli_main
from orbitdp.geometry import (
    aligned_basis,
    coordinate_projection,
    greedy_orbit_packing,
    haar_projection,
    orbit_embedding,
    sin_theta_check,
    utility_gap_bound,
    verify_packing_certificate,
)
from orbitdp.linalg import (
    HermitianMatrix,
    OrbitPoint,
    Spectrum,
    eig_hermitian,
    frobenius_distance,
    frobenius_identity_check,
)
from orbitdp.mechanisms import privatize_eigenvalues, sort_clip_eigenvalues
from orbitdp.sampler import (
    SamplerConfig,
    haar_unitary,
    orbit_chain_samples,
    sample_rank1_exact,
    tv_distance_diagnostic,
)
from orbitdp.serialize import dumps, matrix_to_dict

from conftest import random_hermitian, random_psd, random_unit_vector


@contextmanager
def criterion(number, label, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:02d} FAIL — {label}")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number:02d} PASS — {label} ({elapsed:.1f}s)")
    assert elapsed < budget_seconds, f"criterion {number} exceeded {budget_seconds}s"


def test_01_sensitivity_invariant():
    with criterion(1, "score sensitivity never exceeds top target eigenvalue", 30):
        gen = np.random.default_rng(101)
        total = 0
        for _ in range(20):
            d = int(gen.integers(2, 9))
            k = int(gen.integers(1, min(4, d) + 1))
            lam_vals = np.concatenate([np.sort(gen.uniform(0.0, 3.0, size=k))[::-1],
                                       np.zeros(d - k)])
            lam = Spectrum(lam_vals, rank_k=k)
            units = haar_unitary(d, gen, size=500)
            hs = np.einsum("nij,j,nkj->nik", units, lam_vals.astype(complex), units.conj())
            u = gen.standard_normal((500, d)) + 1j * gen.standard_normal((500, d))
            u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1.0)
            v = gen.standard_normal((500, d)) + 1j * gen.standard_normal((500, d))
            v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1.0)
            score_u = np.einsum("ni,nij,nj->n", u.conj(), hs, u).real
            score_v = np.einsum("ni,nij,nj->n", v.conj(), hs, v).real
            assert np.max(np.abs(score_u - score_v)) <= lam.top + 1e-9
            total += 500
        assert total == 10_000


def test_02_eigenvalue_l1_stability():
    with criterion(2, "rank-1 downdate moves the spectrum by ||v||^2 in l1", 10):
        gen = np.random.default_rng(102)
        for _ in range(1000):
            d = int(gen.integers(2, 9))
            m = random_psd(d, gen)
            v = random_unit_vector(d, gen, max_norm=float(gen.uniform(0.05, 1.0)))
            lam_m = np.linalg.eigvalsh(m.entries)[::-1]
            lam_a = np.linalg.eigvalsh(m.entries - np.outer(v, v.conj()))[::-1]
            assert np.all(lam_a <= lam_m + 1e-10)
            assert abs(np.sum(lam_m - lam_a) - np.linalg.norm(v) ** 2) <= 1e-8


def test_03_exact_sampler_correctness():
    with criterion(3, "exact rank-1 sampler matches the 1-D integral oracle", 20):
        m = HermitianMatrix(np.diag([2.0, 0.0]).astype(complex))
        u = sample_rank1_exact(m, 1.0, np.random.default_rng(103), size=100_000)
        target = (math.e**2 + 1) / (2 * (math.e**2 - 1))
        assert abs((np.abs(u[:, 0]) ** 2).mean() - target) <= 0.005


def test_04_mcmc_vs_oracle_tv():
    with criterion(4, "Metropolis marginal within TV 0.05 of the oracle", 60):
        m = HermitianMatrix(np.diag([2.0, 0.0]).astype(complex))
        lam = Spectrum(np.array([1.0, 0.0]), rank_k=1)
        cfg = SamplerConfig(chain_length=1000, burn_in=500)
        for coeff, seed in ((0.0, 40), (1.0, 41), (4.0, 42)):
            pts = orbit_chain_samples(m, lam, coeff, cfg, np.random.default_rng(seed),
                                      n_samples=10_000, thin=25)
            tv = tv_distance_diagnostic(pts, lambda x, c=coeff: math.exp(2 * c * x), 25)
            assert tv < 0.05, f"coeff={coeff}: TV={tv}"


def test_05_privacy_audit_with_power():
    with criterion(5, "output-ratio audit passes; mutated mechanism fails it", 300):
        passing = audit_privacy(1.0, pairs=10, runs_per_pair=100_000, rng=105)
        assert passing.passed, f"correct mechanism flagged: max ratio {passing.max_ratio}"
        broken = audit_privacy(0.25, pairs=6, runs_per_pair=3_000_000, rng=1, mutated=True)
        assert not broken.passed, "mutated mechanism escaped the audit"
        control = audit_privacy(0.25, pairs=6, runs_per_pair=3_000_000, rng=1, mutated=False)
        assert control.passed, "correct mechanism flagged at mutation-test scale"


def test_06_utility_tail_domination():
    with criterion(6, "observed utility-gap quantile below the explicit gap bound", 600):
        cfg = SamplerConfig(chain_length=1200, burn_in=400)
        scenarios = [
            ExperimentSpec(scenario="projection", d=4, k=2, epsilon=1.0, beta=0.1,
                           trials=200, seed=106, sampler=cfg, mechanism="orbit"),
            ExperimentSpec(scenario="wishart", d=6, k=3, epsilon=1.0, beta=0.1,
                           trials=200, seed=107, sampler=cfg, mechanism="orbit",
                           wishart_m=6),
        ]
        for spec in scenarios:
            gamma, _ = eig_hermitian(make_instance(spec))
            lam = sort_clip_eigenvalues(gamma.values[:spec.k], spec.k).padded(spec.d)
            tau = utility_gap_bound(gamma, lam, spec.epsilon, spec.beta)
            result = run_experiment(spec)
            observed = result.quantiles["utility_gap"]["one_minus_beta"]
            assert observed <= tau, f"{spec.scenario}: {observed} > tau={tau}"


def test_07_laplace_calibration():
    with criterion(7, "eigenvalue noise calibrated to scale 2/epsilon", 20):
        spec = Spectrum(np.array([1.0]))
        gen = np.random.default_rng(108)
        noise = np.array([privatize_eigenvalues(spec, 1.0, gen)[0] - 1.0
                          for _ in range(100_000)])
        assert abs(np.abs(noise).mean() - 2.0) <= 0.02 * 2.0
        laplace_cdf = lambda x: np.where(x < 0, 0.5 * np.exp(x / 2.0),
                                         1 - 0.5 * np.exp(-x / 2.0))
        assert stats.kstest(noise, laplace_cdf).statistic < 0.01


def test_08_geometry_suite():
    with criterion(8, "sin-Theta, alignment, embedding, and identity suites clean", 120):
        gen = np.random.default_rng(109)
        # (a) sin-Theta inequality on 500 gap-verified pairs
        for _ in range(500):
            d = int(gen.integers(2, 7))
            i = int(gen.integers(1, d))
            base = np.sort(gen.random(d))[::-1]
            base[:i] += 2.0
            u = haar_unitary(d, gen)
            a = HermitianMatrix((u * base) @ u.conj().T)
            pert = random_hermitian(d, gen)
            a_hat = HermitianMatrix(a.entries + 0.3 * pert.entries
                                    / max(np.linalg.norm(pert.entries), 1.0))
            lhs, rhs = sin_theta_check(a, a_hat, i, 1.0)
            assert lhs <= rhs + 1e-8
        # (b) alignment inequality on 1000 projections, d <= 8
        for _ in range(1000):
            d = int(gen.integers(2, 9))
            r = int(gen.integers(1, d))
            p = haar_projection(d, r, gen)
            w = aligned_basis(p)
            assert np.linalg.norm(w - np.eye(d, dtype=complex)[:, :r]) <= \
                frobenius_distance(p.p, coordinate_projection(d, r).p) + 1e-8
        # (c) embedding lower bound and center upper bound on 500 pairs
        for _ in range(500):
            d = int(gen.integers(3, 7))
            i = int(gen.integers(1, d))
            j = int(gen.integers(i + 1, d + 1))
            vals = np.sort(gen.random(d))[::-1] + np.linspace(d, 1, d)
            lam = Spectrum(vals)
            sub = d - j + i + 1
            pa, pb = haar_projection(sub, i, gen), haar_projection(sub, i, gen)
            fa = orbit_embedding(pa, lam, i, j).materialize().entries
            fb = orbit_embedding(pb, lam, i, j).materialize().entries
            gap = vals[i - 1] - vals[j - 1]
            assert frobenius_distance(fa, fb) >= gap * frobenius_distance(pa.p, pb.p) - 1e-8
            center = np.diag(vals.astype(complex))
            assert frobenius_distance(fa, center) <= \
                4.0 * vals[0] * frobenius_distance(pa.p, coordinate_projection(sub, i).p) + 1e-8
        # (d) Frobenius identity to relative 1e-8 on 1000 pairs
        for _ in range(1000):
            d = int(gen.integers(2, 7))
            lam = Spectrum(np.sort(gen.random(d))[::-1])
            lhs, rhs = frobenius_identity_check(OrbitPoint(haar_unitary(d, gen), lam),
                                                OrbitPoint(haar_unitary(d, gen), lam))
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, lhs)


def test_09_packing_certificates():
    with criterion(9, "all emitted packing certificates re-verify independently", 120):
        cases = [
            (Spectrum(np.array([1.0, 0.0]), rank_k=1), 1, 2, 0.1, math.inf),
            (Spectrum(np.array([2.0, 1.0, 0.0]), rank_k=2), 1, 3, 0.3, math.inf),
            (Spectrum(np.array([3.0, 2.0, 1.0, 0.0]), rank_k=3), 1, 4, 0.5, 2.0),
            (Spectrum(np.array([3.0, 2.0, 1.0, 0.5, 0.0]), rank_k=4), 2, 5, 0.4, 4.0),
            (Spectrum(np.array([4.0, 3.0, 2.0, 1.0, 0.5, 0.0]), rank_k=5), 2, 6, 0.6, 5.0),
        ]
        for idx, (lam, i, j, zeta, omega) in enumerate(cases):
            cert = greedy_orbit_packing(lam, i, j, zeta, omega, 200 + idx, budget=80)
            report = verify_packing_certificate(cert)
            assert report["ok"], f"case {idx}: {report}"
            assert report["count"] >= 1


def test_10_determinism(tmp_path, capsys):
    with criterion(10, "selftest and CLI examples byte-identical across reruns", 60):
        outputs = []
        for _ in range(2):
            assert cli_main(["--seed", "3", "selftest"]) == 0
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1] and "FAIL" not in outputs[0]

        m = gen_projection_instance(4, 2, 2.0, np.random.default_rng(110))
        matrix_path = tmp_path / "m.json"
        matrix_path.write_text(dumps(matrix_to_dict(m)))
        artifacts = {}
        for name, argv in {
            "privatize": ["--seed", "7", "privatize", "--in", str(matrix_path),
                          "--k", "2", "--eps", "1"],
            "bounds": ["bounds", "--gamma", "3,2,1,0", "--lambda", "3,2,1,0",
                       "--k", "2", "--eps", "1", "--beta", "0.1"],
            "sample-orbit": ["--seed", "5", "sample-orbit", "--in", str(matrix_path),
                             "--lambda", "1,0,0,0", "--eps", "0.5",
                             "--chain-length", "2000", "--burn-in", "500"],
        }.items():
            pair = []
            for run in range(2):
                out = tmp_path / f"{name}-{run}.json"
                assert cli_main(["--quiet", "--out", str(out)] + argv) == 0
                pair.append(out.read_bytes())
            assert pair[0] == pair[1], f"{name} artifact differs between runs"
            artifacts[name] = pair[0]
        bounds_payload = json.loads(artifacts["bounds"])
        assert "upper_utility_bound" in bounds_payload


def test_11_monotone_epsilon_scaling():
    with criterion(11, "median utility gap strictly decreasing in epsilon, slope near -1", 600):
        cfg = SamplerConfig(chain_length=4000, burn_in=1500, step_size=0.3)
        grid = (0.5, 1.0, 2.0, 4.0)
        medians = []
        for eps in grid:
            spec = ExperimentSpec(scenario="projection", d=4, k=2, epsilon=eps, beta=0.1,
                                  trials=200, seed=42, sampler=cfg, mechanism="orbit",
                                  top_eig=50.0)
            medians.append(run_experiment(spec).quantiles["utility_gap"]["median"])
        assert all(np.diff(medians) < 0), f"medians not strictly decreasing: {medians}"
        slope = np.polyfit(np.log(grid), np.log(medians), 1)[0]
        assert -2.0 <= slope <= -0.5, f"slope {slope} outside [-2.0, -0.5]"
