"""Pure-DP mechanisms for orbit optimization and rank-k approximation.

Two mechanisms are provided, both ``epsilon``-differentially private under
the "replace one unit-norm user vector" neighbor relation on covariance
matrices:

* :func:`private_orbit_approximation` — exponential mechanism over the
  unitary orbit of a public target spectrum, sampling with inverse
  temperature ``epsilon / (4 * lambda_1)`` (score sensitivity is
  ``lambda_1``; half the budget is reserved for sampler inaccuracy).
* :func:`private_rank_k_approximation` — two-stage mechanism for private
  spectra: Laplace-privatize the top-k eigenvalues with budget ``epsilon/2``
  (eigenvalue map has l1 sensitivity 2, so the noise scale is ``4/epsilon``),
  sort/clip them into a valid orbit target, then run the orbit stage with
  the remaining ``epsilon/2`` (coefficient ``epsilon / (8 * tilde_lambda_1)``,
  using the *privatized* top value so the coefficient leaks nothing).

Every run is summarized by a :class:`MechanismTranscript` that reproduces
bit-exactly from its recorded seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    Dataset,
    HermitianMatrix,
    OrbitPoint,
    Spectrum,
    ValidationError,
    as_hermitian,
    eig_hermitian,
    frobenius_inner,
    optimal_orbit_point,
)
from .rng import as_generator, resolve_seed
from .sampler import (
    ChainDiagnostics,
    SamplerConfig,
    rank1_orbit_point,
    sample_orbit_mcmc,
    sample_rank1_exact,
)

EIGENVALUE_L1_SENSITIVITY = 2.0  # replacing one unit-norm vector moves the spectrum by <= 2 in l1


@dataclass(frozen=True)
class PrivacyBudget:
    """Pure-DP budget with split accounting across mechanism stages."""

    epsilon: float
    split: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValidationError("epsilon must be positive")
        if not self.split:
            raise ValidationError("split must be non-empty")
        if any(not (0.0 < f <= 1.0) for f in self.split):
            raise ValidationError("split fractions must lie in (0, 1]")
        if abs(sum(self.split) - 1.0) > 1e-12:
            raise ValidationError("split fractions must sum to 1")

    def stage(self, i: int) -> float:
        return self.epsilon * self.split[i]


@dataclass(frozen=True)
class ExponentialTarget:
    """Log-linear target density ``∝ exp(coeff * <M, H>)`` over an orbit."""

    m: HermitianMatrix
    lam: Spectrum
    inverse_temperature_coeff: float
    sensitivity: float

    def __post_init__(self):
        if self.sensitivity != self.lam.top:
            raise ValidationError("sensitivity must equal the top target eigenvalue")

    @classmethod
    def build(cls, m, lam: Spectrum, coeff: float) -> "ExponentialTarget":
        mat = as_hermitian(m)
        return cls(mat, lam.require_orbit_target(), float(coeff), sensitivity_bound(lam))

    def log_density(self, point: OrbitPoint) -> float:
        """Unnormalized log-density at an orbit point."""
        return self.inverse_temperature_coeff * frobenius_inner(self.m, point.materialize())


@dataclass(frozen=True)
class MechanismTranscript:
    """Reproducible record of one mechanism run.

    ``frobenius_error`` is the squared error ``||M - H||_F^2``.  Re-running
    the mechanism with the recorded seed and identical inputs reproduces the
    transcript bit-exactly.
    """

    seed: int
    budget: PrivacyBudget
    noisy_eigenvalues: np.ndarray | None
    output: OrbitPoint
    utility: float
    frobenius_error: float
    flags: tuple[str, ...] = ()
    diagnostics: ChainDiagnostics | None = None

    def output_spectrum_topk(self, k: int | None = None) -> list[float]:
        k = k if k is not None else self.output.spectrum.rank_k
        return [float(x) for x in self.output.spectrum.values[:k]]


def laplace_noise(scale_b: float, rng) -> float:
    """One draw from the Laplace density ``(1/2b) exp(-|x|/b)``."""
    if not (scale_b > 0):
        raise ValidationError("Laplace scale must be positive")
    return float(as_generator(rng).laplace(0.0, scale_b))


def privatize_eigenvalues(spectrum: Spectrum, epsilon: float, rng) -> np.ndarray:
    """Laplace mechanism on an eigenvalue vector: adds i.i.d. Lap(2/epsilon).

    The eigenvalue map of a covariance matrix has l1 sensitivity 2 over
    neighboring datasets, so this release is epsilon-DP.  The output is
    neither sorted nor clipped; entries may be negative.
    """
    if not (epsilon > 0):
        raise ValidationError("epsilon must be positive")
    gen = as_generator(rng)
    scale = EIGENVALUE_L1_SENSITIVITY / epsilon
    return spectrum.values + gen.laplace(0.0, scale, size=spectrum.dim)


def sort_clip_eigenvalues(noisy, k: int) -> Spectrum:
    """Sorted, clipped rank-k orbit target from a noisy eigenvalue vector.

    Keeps the top-k entries sorted non-increasing, clamps negatives to 0
    (post-processing, so privacy is unaffected; orbits require nonnegative
    spectra), and zeroes everything past position k.
    """
    vals = np.sort(np.asarray(noisy, dtype=float).reshape(-1))[::-1]
    if vals.size < k:
        raise ValidationError(f"need at least {k} values, got {vals.size}")
    vals = np.maximum(vals, 0.0)
    vals[k:] = 0.0
    return Spectrum(vals, rank_k=k)


def sensitivity_bound(lam: Spectrum) -> float:
    """Worst-case change of ``<A, H>`` over neighbors, for H in the orbit.

    Equals the top target eigenvalue: replacing ``uu*`` by ``vv*`` changes
    the score by ``u*Hu - v*Hv``, and each quadratic form lies in
    ``[0, lambda_1]`` for PSD orbit points.
    """
    lam.require_orbit_target()
    return lam.top


def exponential_coefficient(epsilon: float, lam_top: float) -> float:
    """Inverse temperature for the orbit stage at budget ``epsilon``."""
    return epsilon / (4.0 * lam_top) if lam_top > 0 else 0.0


def utility_tail_bound(gamma: Spectrum, lam: Spectrum, epsilon: float, t: float) -> float:
    """Closed-form bound on P[Schur-Horn optimum - <M,H> > t] for the orbit mechanism.

    Combines the exponential-mechanism tail with a covering bound for the
    orbit in spectral norm, ``N(zeta) <= (1 + 8*lambda_1/zeta)^(2dk)``,
    evaluated at ``zeta = t / (2*Gamma)`` with ``Gamma = tr(M)``:

        bound(t) = (1 + 16*lambda_1*Gamma/t)^(2dk) * exp(-epsilon*t / (4*lambda_1)).

    Often vacuous (> 1) at desk scale; still a valid upper bound.
    """
    if not (t > 0):
        raise ValidationError("t must be positive")
    lam.require_orbit_target()
    lam1 = lam.top
    if lam1 == 0.0:
        return 0.0  # constant score: the gap is identically zero
    big_gamma = float(np.sum(gamma.values))
    d, k = gamma.dim, lam.rank_k
    log_bound = 2.0 * d * k * np.log1p(16.0 * lam1 * big_gamma / t) - epsilon * t / (4.0 * lam1)
    return float(np.exp(min(log_bound, 700.0)))


def _sample_orbit_stage(mat: HermitianMatrix, lam: Spectrum, coeff: float,
                        sampler_cfg: SamplerConfig | None, gen: np.random.Generator):
    """Draw H from the orbit target; exact sampler when the target is rank-1."""
    nonzero = int(np.count_nonzero(lam.values))
    if nonzero == 1:
        column, info = sample_rank1_exact(mat, coeff * lam.top, gen, return_info=True)
        point = rank1_orbit_point(column, lam)
        warnings = ("exact-sampler-fallback-to-mcmc",) if info["fallback"] else ()
        diag = ChainDiagnostics(info["acceptance"], np.empty(0), None, warnings)
        return point, diag
    return sample_orbit_mcmc(mat, lam, coeff, sampler_cfg, gen)


def _finish_transcript(seed, budget, noisy, mat, point, flags, diag) -> MechanismTranscript:
    h = point.materialize()
    utility = frobenius_inner(mat, h)
    err = float(np.linalg.norm(mat.entries - h.entries) ** 2)
    flags = tuple(flags) + tuple(diag.warnings if diag is not None else ())
    return MechanismTranscript(seed, budget, noisy, point, utility, err, flags, diag)


def private_orbit_approximation(m, lam: Spectrum, epsilon: float,
                                sampler_cfg: SamplerConfig | None = None,
                                rng=None) -> MechanismTranscript:
    """Epsilon-DP approximation of M by an orbit point with public spectrum.

    Samples ``H`` from ``∝ exp(epsilon/(4*lambda_1) * <M, H>)`` over the
    orbit of ``lam`` (zero-padded to the dimension of ``M``).  The output
    eigenvalues are exactly ``lam``.  Budgets at or above 1 are accepted but
    flagged: the utility analysis is stated for epsilon in (0, 1).
    """
    if not (epsilon > 0):
        raise ValidationError("epsilon must be positive")
    mat = as_hermitian(m)
    if not mat.is_psd():
        raise ValidationError("input matrix must be PSD")
    lam_full = lam.require_orbit_target().padded(mat.dim)
    seed = resolve_seed(rng)
    gen = as_generator(seed)
    budget = PrivacyBudget(epsilon)
    flags = [] if epsilon < 1.0 else ["epsilon-outside-unit-interval"]

    if lam_full.top == 0.0:
        point = OrbitPoint(np.eye(mat.dim, dtype=complex), lam_full)
        return _finish_transcript(seed, budget, None, mat, point, flags, None)

    target = ExponentialTarget.build(mat, lam_full, exponential_coefficient(epsilon, lam_full.top))
    point, diag = _sample_orbit_stage(mat, lam_full, target.inverse_temperature_coeff,
                                      sampler_cfg, gen)
    return _finish_transcript(seed, budget, None, mat, point, flags, diag)


def private_rank_k_approximation(data, k: int, epsilon: float,
                                 sampler_cfg: SamplerConfig | None = None,
                                 rng=None) -> MechanismTranscript:
    """Epsilon-DP rank-k approximation with private eigenvalues.

    Stage 1 (budget epsilon/2): release the top-k eigenvalues with Laplace
    noise of scale ``4/epsilon``.  Stage 2 (budget epsilon/2): sort/clip the
    release into an orbit target and sample ``H`` with coefficient
    ``epsilon / (8 * tilde_lambda_1)``.  Composition gives epsilon total.
    """
    if not (epsilon > 0):
        raise ValidationError("epsilon must be positive")
    if isinstance(data, Dataset):
        mat = data.covariance()
    else:
        mat = as_hermitian(data)
    if not mat.is_psd():
        raise ValidationError("input matrix must be PSD")
    if not (1 <= k <= mat.dim):
        raise ValidationError(f"k must be in [1, {mat.dim}]")

    seed = resolve_seed(rng)
    gen = as_generator(seed)
    budget = PrivacyBudget(epsilon, split=(0.5, 0.5))
    assert abs(budget.stage(0) + budget.stage(1) - epsilon) <= 1e-12 * epsilon

    gamma, _ = eig_hermitian(mat)
    noisy = privatize_eigenvalues(gamma.truncated(k), budget.stage(0), gen)
    lam_hat = sort_clip_eigenvalues(noisy, k).padded(mat.dim)

    flags: list[str] = []
    if lam_hat.top == 0.0:
        flags.append("noisy-spectrum-clipped-to-zero")
        point = OrbitPoint(np.eye(mat.dim, dtype=complex), lam_hat)
        return _finish_transcript(seed, budget, noisy, mat, point, flags, None)

    coeff = exponential_coefficient(budget.stage(1), lam_hat.top)  # epsilon / (8 * tilde_lambda_1)
    point, diag = _sample_orbit_stage(mat, lam_hat, coeff, sampler_cfg, gen)
    return _finish_transcript(seed, budget, noisy, mat, point, flags, diag)


def rank_k_optimum(mat, k: int) -> tuple[float, OrbitPoint]:
    """Non-private best rank-k orbit value and point (for gap reporting)."""
    m = as_hermitian(mat)
    gamma, _ = eig_hermitian(m)
    lam = sort_clip_eigenvalues(gamma.values[:k], k).padded(m.dim)
    point = optimal_orbit_point(m, lam)
    return frobenius_inner(m, point.materialize()), point
