"""Differentially private optimization over unitary orbits of Hermitian matrices.

Public surface:

* :mod:`orbitdp.linalg` — Hermitian/orbit types, Schur-Horn optimum,
  neighboring-dataset arithmetic.
* :mod:`orbitdp.mechanisms` — Laplace eigenvalue privatization and the two
  exponential-mechanism drivers.
* :mod:`orbitdp.sampler` — Haar, exact rank-1, and Metropolis orbit samplers.
* :mod:`orbitdp.geometry` — principal angles, sin-Theta checks, orbit
  embeddings, covering/packing constructions, bound evaluators.
* :mod:`orbitdp.bench` — instance generators, experiments, privacy audit.
* :mod:`orbitdp.estimators` — scikit-learn style wrappers.
"""

from .linalg import (
    Dataset,
    HermitianMatrix,
    OrbitPoint,
    Spectrum,
    ValidationError,
    eig_hermitian,
    frobenius_identity_check,
    frobenius_inner,
    neighbor,
    optimal_orbit_point,
    orbit_spectrum,
    schur_horn_optimum,
)
from .mechanisms import (
    ExponentialTarget,
    MechanismTranscript,
    PrivacyBudget,
    laplace_noise,
    private_orbit_approximation,
    private_rank_k_approximation,
    privatize_eigenvalues,
    sensitivity_bound,
    sort_clip_eigenvalues,
    utility_tail_bound,
)
from .sampler import (
    ChainDiagnostics,
    SamplerConfig,
    haar_unitary,
    orbit_chain_samples,
    sample_orbit_mcmc,
    sample_rank1_exact,
    tv_distance_diagnostic,
)
from .geometry import (
    BoundConstants,
    BoundReport,
    DegenerateGapError,
    GapHypothesisError,
    PackingCertificate,
    ProjectionPoint,
    aligned_basis,
    evaluate_bounds,
    greedy_orbit_cover,
    greedy_orbit_packing,
    orbit_embedding,
    principal_angles,
    sin_theta_check,
    verify_packing_certificate,
)
from .bench import (
    ExperimentResult,
    ExperimentSpec,
    audit_privacy,
    gen_conditioned_gap_instance,
    gen_projection_instance,
    gen_wishart_instance,
    run_experiment,
)
from .estimators import PrivateOrbitApproximator, PrivateRankKApproximator

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
