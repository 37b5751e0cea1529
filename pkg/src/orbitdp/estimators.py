"""Scikit-learn style estimators wrapping the private mechanisms.

These make the mechanisms compose with the wider ecosystem (``get_params``
/ ``set_params``, pipelines, clones).  ``fit`` accepts either a square PSD
Hermitian matrix or an ``(n, d)`` array of user rows with norms at most 1;
rows are aggregated into the covariance ``sum_i x_i x_i*``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .linalg import Spectrum, ValidationError, as_hermitian, eig_hermitian
from .mechanisms import private_orbit_approximation, private_rank_k_approximation
from .sampler import SamplerConfig


def _as_score_matrix(x):
    """Interpret fit input as a covariance: square Hermitian passes through,
    an (n, d) array of bounded rows is aggregated."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D array, got shape {arr.shape}")
    if arr.shape[0] == arr.shape[1]:
        dev = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
        if dev <= 1e-8:
            return as_hermitian(arr)
    norms = np.linalg.norm(arr, axis=1)
    if norms.size and norms.max() > 1.0 + 1e-12:
        raise ValidationError(
            "rows must have norm <= 1 to act as user vectors "
            f"(max row norm {norms.max():.6f}); rescale your data first"
        )
    return as_hermitian(np.einsum("ia,ib->ab", arr, arr.conj()))


class PrivateOrbitApproximator(BaseEstimator):
    """Pure-DP approximation by a matrix with a fixed public spectrum.

    Parameters
    ----------
    target_spectrum : array-like
        Nonnegative non-increasing eigenvalues of the output (zero-padded to
        the input dimension at fit time).
    epsilon : float
        Pure-DP budget.
    sampler : SamplerConfig or None
        Metropolis settings for rank >= 2 targets.
    random_state : int or None
        Seed; recorded on the fitted transcript for bit-exact replay.
    """

    def __init__(self, target_spectrum=(1.0,), epsilon=1.0, sampler=None, random_state=None):
        self.target_spectrum = target_spectrum
        self.epsilon = epsilon
        self.sampler = sampler
        self.random_state = random_state

    def fit(self, X, y=None):
        mat = _as_score_matrix(X)
        vals = np.asarray(self.target_spectrum, dtype=float)
        lam = Spectrum(vals, rank_k=int(np.count_nonzero(vals)) or 1)
        transcript = private_orbit_approximation(
            mat, lam, self.epsilon, self.sampler or SamplerConfig(), self.random_state)
        self.n_features_in_ = mat.dim
        self.transcript_ = transcript
        self.approximation_ = np.asarray(transcript.output.materialize().entries)
        self.utility_ = transcript.utility
        return self

    def score(self, X, y=None):
        """Utility <X_cov, H> of the fitted output against (possibly new) data."""
        if not hasattr(self, "approximation_"):
            raise NotFittedError("fit must be called first")
        mat = _as_score_matrix(X)
        return float(np.sum(mat.entries.conj() * self.approximation_).real)


class PrivateRankKApproximator(BaseEstimator, TransformerMixin):
    """Pure-DP rank-k covariance approximation with private eigenvalues.

    After ``fit``, ``approximation_`` holds the rank-k output matrix,
    ``eigenvalues_`` the privatized (sorted, clipped) top-k eigenvalues, and
    ``components_`` the top-k eigenvectors of the output; ``transform``
    projects data onto that private subspace.
    """

    def __init__(self, k=1, epsilon=1.0, sampler=None, random_state=None):
        self.k = k
        self.epsilon = epsilon
        self.sampler = sampler
        self.random_state = random_state

    def fit(self, X, y=None):
        mat = _as_score_matrix(X)
        transcript = private_rank_k_approximation(
            mat, self.k, self.epsilon, self.sampler or SamplerConfig(), self.random_state)
        out = transcript.output
        _, vecs = eig_hermitian(out.materialize())
        self.n_features_in_ = mat.dim
        self.transcript_ = transcript
        self.approximation_ = np.asarray(out.materialize().entries)
        self.eigenvalues_ = np.asarray(out.spectrum.values[:self.k])
        self.components_ = vecs[:, :self.k].T
        self.error_ = transcript.frobenius_error
        return self

    def transform(self, X):
        if not hasattr(self, "components_"):
            raise NotFittedError("fit must be called first")
        arr = np.asarray(X, dtype=complex)
        if arr.ndim != 2 or arr.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected (n, {self.n_features_in_}) array")
        return arr @ self.components_.conj().T
