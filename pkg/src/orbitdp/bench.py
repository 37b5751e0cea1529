"""Benchmark instances, end-to-end experiments, and the empirical privacy audit.

Instance generators reproduce three regimes: scalar multiples of random
projections, deterministic spectra with O(1) condition number and a large
eigenvalue gap, and complex Wishart sample covariances.  Experiments run one
of the two mechanisms over many seeded trials, aggregate nearest-rank
quantiles, and attach the closed-form bound report for the instance.

The privacy audit is a desk-scale output-distribution ratio test at d=2,
rank-1: the orbit of diag(1, 0) is the set of rank-1 projections, the scalar
t = H[0,0] in [0, 1] determines the mechanism's score, and the exact rank-1
sampler lets us draw millions of outputs.  The audit bins t, and any
high-count bin whose count ratio between a neighboring pair exceeds
``exp(epsilon) * (1 + 4 * CI halfwidth)`` is a violation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundConstants, BoundReport, evaluate_bounds
from .linalg import (
    Dataset,
    HermitianMatrix,
    Spectrum,
    ValidationError,
    eig_hermitian,
    neighbor,
    schur_horn_optimum,
)
from .mechanisms import (
    private_orbit_approximation,
    private_rank_k_approximation,
    sort_clip_eigenvalues,
)
from .rng import as_generator, derive_seed
from .sampler import SamplerConfig, haar_unitary, sample_rank1_exact

SCENARIOS = ("projection", "conditioned_gap", "wishart", "custom_file")
MECHANISMS = ("orbit", "rank_k")


def gen_projection_instance(d: int, k: int, top_eig: float, rng) -> HermitianMatrix:
    """``top_eig`` times a Haar-random rank-k projection."""
    if top_eig < 0:
        raise ValidationError("top_eig must be nonnegative")
    basis = haar_unitary(d, as_generator(rng))[:, :k]
    return HermitianMatrix(top_eig * basis @ basis.conj().T)


def gen_wishart_instance(d: int, m: int, rng, norm: str = "samples") -> HermitianMatrix:
    """Complex Wishart sample covariance: X X*/m for X a d x m standard complex Gaussian.

    Each entry has unit second moment (real and imaginary parts of variance
    1/2), so the trace has expectation d under the default per-sample
    normalization.  ``norm="dim"`` divides by d instead.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    if norm not in ("samples", "dim"):
        raise ValidationError("norm must be 'samples' or 'dim'")
    gen = as_generator(rng)
    x = (gen.standard_normal((d, m)) + 1j * gen.standard_normal((d, m))) / np.sqrt(2.0)
    return HermitianMatrix(x @ x.conj().T / (m if norm == "samples" else d))


def gen_conditioned_gap_instance(d: int, k: int, top_eig: float, rng) -> HermitianMatrix:
    """Rank-k spectrum with condition number 3 and a gap of top_eig/2.

    Bucket edges use ceilings: values are ``top_eig`` up to index
    ``ceil(k/4)``, ``top_eig/2`` up to ``ceil(3k/4)``, and ``top_eig/3`` up
    to ``k``; the matrix is the spectrum conjugated by a Haar unitary.
    """
    if k < 4:
        raise ValidationError("k must be >= 4")
    if not (k <= d):
        raise ValidationError("k must be <= d")
    q1, q3 = math.ceil(k / 4), math.ceil(3 * k / 4)
    vals = np.zeros(d)
    vals[:q1] = top_eig
    vals[q1:q3] = top_eig / 2.0
    vals[q3:k] = top_eig / 3.0
    u = haar_unitary(d, as_generator(rng))
    return HermitianMatrix((u * vals) @ u.conj().T)


def conditioned_gap_spectrum(d: int, k: int, top_eig: float) -> np.ndarray:
    q1, q3 = math.ceil(k / 4), math.ceil(3 * k / 4)
    vals = np.zeros(d)
    vals[:q1] = top_eig
    vals[q1:q3] = top_eig / 2.0
    vals[q3:k] = top_eig / 3.0
    return vals


@dataclass(frozen=True)
class ExperimentSpec:
    """One benchmark configuration; serializes to/from a JSON spec file."""

    scenario: str
    d: int
    k: int
    epsilon: float
    beta: float = 0.1
    trials: int = 1
    seed: int = 0
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    output_path: str | None = None
    mechanism: str = "rank_k"
    top_eig: float = 1.0
    wishart_m: int | None = None
    wishart_norm: str = "samples"
    input_path: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"scenario must be one of {SCENARIOS}")
        if self.mechanism not in MECHANISMS:
            raise ValidationError(f"mechanism must be one of {MECHANISMS}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not (1 <= self.k <= self.d):
            raise ValidationError("need 1 <= k <= d")
        if not (self.epsilon > 0):
            raise ValidationError("epsilon must be positive")
        if not (0.0 < self.beta < 1.0):
            raise ValidationError("beta must be in (0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        sampler = data.pop("sampler", None)
        cfg = SamplerConfig(**sampler) if isinstance(sampler, dict) else (sampler or SamplerConfig())
        try:
            return cls(sampler=cfg, **data)
        except TypeError as exc:
            raise ValidationError(f"malformed experiment spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "d": self.d,
            "k": self.k,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "trials": self.trials,
            "seed": self.seed,
            "sampler": {
                "chain_length": self.sampler.chain_length,
                "burn_in": self.sampler.burn_in,
                "step_size": self.sampler.step_size,
                "diagnostics_on": self.sampler.diagnostics_on,
                "init": self.sampler.init,
            },
            "output_path": self.output_path,
            "mechanism": self.mechanism,
            "top_eig": self.top_eig,
            "wishart_m": self.wishart_m,
            "wishart_norm": self.wishart_norm,
            "input_path": self.input_path,
        }


@dataclass(frozen=True)
class ExperimentResult:
    per_trial: list[dict]
    quantiles: dict
    bounds: BoundReport
    wall_clock_seconds: float

    def to_dict(self, include_timing: bool = False) -> dict:
        rows = [dict(r) for r in self.per_trial]
        if not include_timing:
            for r in rows:
                r["wall_ms"] = 0.0  # keep artifacts byte-identical across runs
        out = {
            "per_trial": rows,
            "quantiles": self.quantiles,
            "bounds": self.bounds.to_dict(),
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out


CSV_HEADER = "trial,utility,utility_gap,frob_err_sq,{lambda_cols},acceptance_rate,rhat,wall_ms"


def result_to_csv(result: ExperimentResult, k: int, include_timing: bool = False) -> str:
    lambda_cols = ",".join(f"lambda_tilde_{i + 1}" for i in range(k))
    lines = [CSV_HEADER.format(lambda_cols=lambda_cols)]
    for row in result.per_trial:
        lam = row["lambda_tilde"]
        cells = [
            str(row["trial"]),
            repr(row["utility"]),
            repr(row["utility_gap"]),
            repr(row["frob_err_sq"]),
            *[repr(float(x)) for x in lam],
            "" if row["acceptance_rate"] is None else repr(row["acceptance_rate"]),
            "" if row["rhat"] is None else repr(row["rhat"]),
            repr(row["wall_ms"]) if include_timing else "0.0",
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def nearest_rank_quantile(data, q: float) -> float:
    """Nearest-rank quantile (1-based ceil indexing) for reproducibility."""
    arr = np.sort(np.asarray(data, dtype=float))
    if arr.size == 0:
        raise ValidationError("no data")
    idx = max(int(math.ceil(q * arr.size)), 1) - 1
    return float(arr[min(idx, arr.size - 1)])


def make_instance(spec: ExperimentSpec) -> HermitianMatrix:
    gen = as_generator(derive_seed(spec.seed, 0))
    if spec.scenario == "projection":
        return gen_projection_instance(spec.d, spec.k, spec.top_eig, gen)
    if spec.scenario == "conditioned_gap":
        return gen_conditioned_gap_instance(spec.d, spec.k, spec.top_eig, gen)
    if spec.scenario == "wishart":
        return gen_wishart_instance(spec.d, spec.wishart_m or spec.d, gen, spec.wishart_norm)
    if spec.input_path is None:
        raise ValidationError("custom_file scenario requires input_path")
    from .serialize import load_matrix_or_dataset

    loaded = load_matrix_or_dataset(spec.input_path)
    return loaded.covariance() if isinstance(loaded, Dataset) else loaded


def _run_trial(mat: HermitianMatrix, spec: ExperimentSpec, lam_target: Spectrum,
               optimum: float, trial: int) -> dict:
    seed = derive_seed(spec.seed, trial + 1)
    start = time.perf_counter()
    if spec.mechanism == "orbit":
        tr = private_orbit_approximation(mat, lam_target, spec.epsilon, spec.sampler, seed)
    else:
        tr = private_rank_k_approximation(mat, spec.k, spec.epsilon, spec.sampler, seed)
    wall_ms = (time.perf_counter() - start) * 1000.0
    diag = tr.diagnostics
    return {
        "trial": trial,
        "seed": seed,
        "utility": tr.utility,
        "utility_gap": optimum - tr.utility,
        "frob_err_sq": tr.frobenius_error,
        "lambda_tilde": tr.output_spectrum_topk(spec.k),
        "acceptance_rate": None if diag is None else diag.acceptance_rate,
        "rhat": None if diag is None or diag.split_rhat is None else diag.split_rhat,
        "flags": list(tr.flags),
        "wall_ms": wall_ms,
    }


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run all trials of a spec against one deterministic instance.

    The instance is derived from the spec seed; trial ``i`` uses the derived
    seed ``hash(seed, i + 1)`` so trials are independent and order-free.  A
    flagged trial never aborts the batch; flags travel in the per-trial rows.
    """
    started = time.perf_counter()
    mat = make_instance(spec)
    gamma, _ = eig_hermitian(mat)
    lam_target = sort_clip_eigenvalues(gamma.values[:spec.k], spec.k).padded(spec.d)
    optimum = schur_horn_optimum(gamma, lam_target)

    trials = range(spec.trials)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial_entry,
                                 [(mat, spec, lam_target, optimum, t) for t in trials]))
    else:
        rows = [_run_trial(mat, spec, lam_target, optimum, t) for t in trials]
    rows.sort(key=lambda r: r["trial"])

    gaps = [r["utility_gap"] for r in rows]
    errs = [r["frob_err_sq"] for r in rows]
    quantiles = {
        "utility_gap": {"median": nearest_rank_quantile(gaps, 0.5),
                        "one_minus_beta": nearest_rank_quantile(gaps, 1.0 - spec.beta)},
        "frob_err_sq": {"median": nearest_rank_quantile(errs, 0.5),
                        "one_minus_beta": nearest_rank_quantile(errs, 1.0 - spec.beta)},
    }
    bounds = evaluate_bounds(gamma, lam_target, spec.d, spec.k, spec.epsilon,
                             spec.beta, BoundConstants())
    wall = time.perf_counter() - started
    return ExperimentResult(rows, quantiles, bounds, wall)


def _trial_entry(args):
    return _run_trial(*args)


def invert_tail_bound(gamma: Spectrum, lam: Spectrum, epsilon: float, beta: float) -> float:
    """Smallest t with tail bound <= beta (bisection; bound decreasing for large t)."""
    from .mechanisms import utility_tail_bound

    lo, hi = 1e-9, 1.0
    while utility_tail_bound(gamma, lam, epsilon, hi) > beta:
        hi *= 2.0
        if hi > 1e12:
            return float("inf")
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if utility_tail_bound(gamma, lam, epsilon, mid) > beta:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# Privacy audit (d = 2, rank-1)
# ---------------------------------------------------------------------------

AUDIT_Z = 1.96
AUDIT_CI_SLACK = 4.0


@dataclass(frozen=True)
class AuditReport:
    epsilon: float
    runs_per_pair: int
    bins: int
    mutated: bool
    pair_results: list[dict]
    excluded_bins: int
    max_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "runs_per_pair": self.runs_per_pair,
            "bins": self.bins,
            "mutated": self.mutated,
            "excluded_bins": self.excluded_bins,
            "max_ratio": self.max_ratio,
            "passed": self.passed,
            "pair_results": self.pair_results,
        }


def adversarial_pairs(count: int) -> list[tuple[Dataset, Dataset]]:
    """Neighboring d=2 dataset pairs that stress the output-ratio test.

    Pair ``s`` holds ``s`` copies of e2 and its neighbor swaps one copy for
    e1, so the covariances are diag(0, s) and diag(1, s - 1): the score
    densities differ both in tilt and in normalization, which is where
    mechanisms with an oversized coefficient show up.
    """
    e1 = np.array([1.0, 0.0], dtype=complex)
    e2 = np.array([0.0, 1.0], dtype=complex)
    pairs = []
    for idx in range(count):
        s = 2 * idx + 2
        base = Dataset(np.tile(e2, (s, 1)))
        pairs.append((base, neighbor(base, 0, e1)))
    return pairs


def _audit_t_samples(mat: HermitianMatrix, epsilon: float, runs: int, gen,
                     mutated: bool) -> np.ndarray:
    """t = H[0,0] samples of the orbit mechanism output at d=2, lambda=(1,0)."""
    lam_top = 1.0
    coeff = (epsilon / lam_top) if mutated else (epsilon / (4.0 * lam_top))
    # the orbit point is u u*, so the scalar marginal is |u_1|^2
    vectors = sample_rank1_exact(mat, coeff * lam_top, gen, size=runs)
    return np.abs(vectors[:, 0]) ** 2


def audit_privacy(epsilon: float, pairs: int = 10, runs_per_pair: int = 100_000,
                  bins: int = 24, rng=None, mutated: bool = False,
                  pair_list: list[tuple[Dataset, Dataset]] | None = None,
                  min_count: int = 200) -> AuditReport:
    """Discretized output-ratio audit of the orbit mechanism at d=2, rank-1.

    For each neighboring pair we draw ``runs_per_pair`` outputs per side,
    histogram the scalar marginal t into equal-width bins (equal Haar mass),
    and test every bin where both sides have at least ``min_count`` hits:

        count_A / count_A' <= exp(epsilon) * (1 + 4 * hw),
        hw = 1.96 * sqrt(1/count_A + 1/count_A')

    in both directions.  Bins below the count floor are excluded and counted
    in the report.  ``mutated=True`` runs the deliberately broken variant
    (inverse temperature ``epsilon`` instead of ``epsilon/4``) used to
    demonstrate the test has power.
    """
    gen = as_generator(rng)
    pair_list = pair_list if pair_list is not None else adversarial_pairs(pairs)
    if any(a.dim != 2 or b.dim != 2 for a, b in pair_list):
        raise ValidationError("the output-ratio audit is defined for d=2 pairs only")
    edges = np.linspace(0.0, 1.0, bins + 1)
    cap = math.exp(epsilon)

    results = []
    excluded = 0
    max_ratio = 0.0
    passed = True
    for pair_idx, (ds_a, ds_b) in enumerate(pair_list):
        mat_a, mat_b = ds_a.covariance(), ds_b.covariance()
        counts_a = np.histogram(_audit_t_samples(mat_a, epsilon, runs_per_pair, gen, mutated),
                                bins=edges)[0]
        counts_b = np.histogram(_audit_t_samples(mat_b, epsilon, runs_per_pair, gen, mutated),
                                bins=edges)[0]
        bin_rows = []
        for b in range(bins):
            na, nb = int(counts_a[b]), int(counts_b[b])
            if na < min_count or nb < min_count:
                excluded += 1
                bin_rows.append({"bin": b, "count_a": na, "count_b": nb, "tested": False})
                continue
            hw = AUDIT_Z * math.sqrt(1.0 / na + 1.0 / nb)
            ratio = max(na / nb, nb / na)
            violation = ratio > cap * (1.0 + AUDIT_CI_SLACK * hw)
            max_ratio = max(max_ratio, ratio)
            if violation:
                passed = False
            bin_rows.append({
                "bin": b, "count_a": na, "count_b": nb, "tested": True,
                "ratio": ratio, "ci_halfwidth": hw, "violation": violation,
            })
        results.append({"pair": pair_idx, "bins": bin_rows})
    return AuditReport(epsilon, runs_per_pair, bins, mutated, results,
                       excluded, max_ratio, passed)
