"""Hermitian/unitary linear algebra for unitary-orbit optimization.

Core vocabulary: a Hermitian matrix ``M`` with eigenvalues
``gamma_1 >= ... >= gamma_d``, a target spectrum ``lambda_1 >= ... >= lambda_d``
(nonnegative, at most ``rank_k`` nonzero entries), and the unitary orbit
``{U diag(lambda) U* : U unitary}``.  The maximum of ``<M, H>`` over the orbit
is the Schur-Horn value ``sum_i lambda_i gamma_i``, attained by aligning the
eigenbases.

All types are immutable after construction; operations are pure functions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-8       # inputs further than this from Hermitian are rejected
PSD_EIG_TOL = -1e-10        # absorbs decomposition round-off on trace-O(d) matrices
UNITARY_ATOL = 1e-10
SPECTRUM_SORT_ATOL = 1e-12


class ValidationError(ValueError):
    """Raised when an input violates a construction-time invariant."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class HermitianMatrix:
    """Dense d x d complex Hermitian matrix.

    Construction symmetrizes ``(A + A*)/2``; inputs violating Hermitian-ness
    by more than ``HERMITIAN_ATOL`` in max-norm are rejected rather than
    silently repaired.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr.view(float))):
            raise ValidationError("matrix entries must be finite")
        deviation = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
        if deviation > HERMITIAN_ATOL:
            raise ValidationError(
                f"matrix is not Hermitian: max |A - A*| = {deviation:.3e} > {HERMITIAN_ATOL:.0e}"
            )
        object.__setattr__(self, "entries", _readonly((arr + arr.conj().T) / 2.0))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def is_psd(self, tol: float = PSD_EIG_TOL) -> bool:
        return bool(np.linalg.eigvalsh(self.entries).min() >= tol)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)


def as_hermitian(m) -> HermitianMatrix:
    """Coerce an ndarray (or pass through a HermitianMatrix)."""
    if isinstance(m, HermitianMatrix):
        return m
    return HermitianMatrix(np.asarray(m, dtype=complex))


@dataclass(frozen=True)
class Spectrum:
    """Non-increasing real eigenvalue vector with a rank marker.

    ``rank_k`` marks how many leading values may be nonzero; it defaults to
    the full length.  Orbit targets additionally require nonnegative values
    and exact zeros from position ``rank_k`` on (see :meth:`is_orbit_target`).
    """

    values: np.ndarray
    rank_k: int = -1  # -1 sentinel: replaced by len(values) in __post_init__

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size == 0:
            raise ValidationError("spectrum must be non-empty")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("spectrum values must be finite")
        if np.any(np.diff(vals) > SPECTRUM_SORT_ATOL):
            raise ValidationError("spectrum values must be non-increasing")
        k = self.rank_k if self.rank_k != -1 else vals.size
        if not (1 <= k <= vals.size):
            raise ValidationError(f"rank_k must be in [1, {vals.size}], got {k}")
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "rank_k", int(k))

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def top(self) -> float:
        return float(self.values[0])

    def is_orbit_target(self) -> bool:
        v = self.values
        return bool(np.all(v >= 0.0) and np.all(v[self.rank_k:] == 0.0))

    def require_orbit_target(self) -> "Spectrum":
        if not self.is_orbit_target():
            raise ValidationError(
                "spectrum is not a valid orbit target "
                "(needs nonnegative values, zero beyond rank_k)"
            )
        return self

    def truncated(self, k: int) -> "Spectrum":
        """Leading ``k`` values as a rank-k spectrum."""
        return Spectrum(self.values[:k], rank_k=k)

    def padded(self, dim: int) -> "Spectrum":
        """Zero-pad to length ``dim`` (rank marker preserved)."""
        if dim < self.dim:
            raise ValidationError(f"cannot pad length-{self.dim} spectrum to {dim}")
        if dim == self.dim:
            return self
        if self.values[-1] < 0:
            raise ValidationError("cannot zero-pad a spectrum with negative tail")
        return Spectrum(np.concatenate([self.values, np.zeros(dim - self.dim)]), rank_k=self.rank_k)

    def diag(self) -> np.ndarray:
        return np.diag(self.values.astype(complex))


def orbit_spectrum(values, rank_k: int | None = None) -> Spectrum:
    """Build and validate an orbit-target spectrum."""
    vals = np.asarray(values, dtype=float).reshape(-1)
    k = rank_k if rank_k is not None else int(np.count_nonzero(vals)) or 1
    return Spectrum(vals, rank_k=k).require_orbit_target()


@dataclass(frozen=True)
class OrbitPoint:
    """A point ``H = U diag(spectrum) U*`` on the unitary orbit of its spectrum."""

    u: np.ndarray
    spectrum: Spectrum

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        d = self.spectrum.dim
        if u.shape != (d, d):
            raise ValidationError(f"unitary shape {u.shape} does not match spectrum length {d}")
        dev = np.linalg.norm(u @ u.conj().T - np.eye(d))
        if dev > UNITARY_ATOL:
            raise ValidationError(f"matrix is not unitary: ||UU* - I||_F = {dev:.3e}")
        object.__setattr__(self, "u", _readonly(u))

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    def materialize(self) -> HermitianMatrix:
        lam = self.spectrum.values
        h = (self.u * lam) @ self.u.conj().T
        return HermitianMatrix(h)


@dataclass(frozen=True)
class Dataset:
    """User vectors x_i in C^d with ||x_i||_2 <= 1; covariance is sum x_i x_i*."""

    points: np.ndarray  # shape (n, d), one vector per row

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 2:
            raise ValidationError(f"expected (n, d) array of points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts.view(float))):
            raise ValidationError("dataset points must be finite")
        norms = np.linalg.norm(pts, axis=1)
        if norms.size and norms.max() > 1.0 + 1e-12:
            raise ValidationError(f"all points must have norm <= 1, max is {norms.max():.6f}")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def covariance(self) -> HermitianMatrix:
        cov = np.einsum("ia,ib->ab", self.points, self.points.conj())
        return HermitianMatrix(cov)


def neighbor(dataset: Dataset, index: int, replacement) -> Dataset:
    """Replace one user vector, producing a neighboring dataset.

    The covariances of the two datasets differ by ``vv* - uu*`` (rank <= 2),
    so their trace difference is ``||v||^2 - ||u||^2``.
    """
    repl = np.asarray(replacement, dtype=complex).reshape(-1)
    if repl.size != dataset.dim:
        raise ValidationError(f"replacement has dim {repl.size}, dataset has dim {dataset.dim}")
    if np.linalg.norm(repl) > 1.0 + 1e-12:
        raise ValidationError("replacement vector must have norm <= 1")
    if not (0 <= index < dataset.size):
        raise ValidationError(f"index {index} out of range for dataset of size {dataset.size}")
    pts = np.array(dataset.points)
    pts[index] = repl
    return Dataset(pts)


def eig_hermitian(m) -> tuple[Spectrum, np.ndarray]:
    """Spectral decomposition with eigenvalues sorted non-increasing.

    Returns ``(spectrum, U)`` with orthonormal eigenvector columns matching
    the sorted eigenvalues.  Degenerate eigenvectors keep the decomposition
    library's order (no canonicalization).
    """
    mat = as_hermitian(m)
    vals, vecs = np.linalg.eigh(mat.entries)
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    residual = np.linalg.norm(mat.entries - (vecs * vals) @ vecs.conj().T)
    if residual > 1e-8 * max(1.0, mat.frobenius_norm()):
        raise ArithmeticError(f"eigendecomposition residual too large: {residual:.3e}")
    return Spectrum(vals), vecs


def frobenius_inner(a, b) -> float:
    """Frobenius inner product ``Re tr(A* B)`` of two Hermitian matrices.

    For Hermitian inputs the trace is real; an imaginary part above 1e-10 is
    treated as a numerical fault.
    """
    am, bm = as_hermitian(a), as_hermitian(b)
    if am.dim != bm.dim:
        raise ValidationError(f"dimension mismatch: {am.dim} vs {bm.dim}")
    val = complex(np.sum(am.entries.conj() * bm.entries))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"inner product has non-negligible imaginary part {val.imag:.3e}")
    return float(val.real)


def schur_horn_optimum(gamma: Spectrum, lam: Spectrum) -> float:
    """Maximum of ``<M, H>`` over the orbit: ``sum_i lambda_i gamma_i``."""
    if gamma.dim != lam.dim:
        raise ValidationError(f"spectra length mismatch: {gamma.dim} vs {lam.dim}")
    return float(np.dot(gamma.values, lam.values))


def optimal_orbit_point(m, lam: Spectrum) -> OrbitPoint:
    """Orbit point maximizing ``<M, H>``: eigenbasis of ``M`` carrying ``lam``."""
    mat = as_hermitian(m)
    lam_full = lam.require_orbit_target().padded(mat.dim)
    _, vecs = eig_hermitian(mat)
    return OrbitPoint(vecs, lam_full)


def frobenius_identity_check(u: OrbitPoint, v: OrbitPoint) -> tuple[float, float]:
    """Both sides of ``||A - B||_F^2 = 2 <A, A - B>`` for same-spectrum A, B.

    Holds because ``tr(A^2) = tr(B^2)`` when A and B share a spectrum.
    """
    if not np.array_equal(u.spectrum.values, v.spectrum.values):
        raise ValidationError("orbit points must share a spectrum")
    a = u.materialize().entries
    b = v.materialize().entries
    diff = a - b
    lhs = float(np.linalg.norm(diff) ** 2)
    rhs = 2.0 * float(np.sum(a.conj() * diff).real)
    if abs(lhs - rhs) > 1e-8 * max(1.0, lhs):
        raise ArithmeticError(f"identity violated: lhs={lhs!r} rhs={rhs!r}")
    return lhs, rhs


def spectral_norm(arr) -> float:
    return float(np.linalg.norm(np.asarray(arr), ord=2))


def frobenius_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
