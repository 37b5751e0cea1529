"""Samplers over unitary orbits.

Three sampling routes for densities ``∝ exp(coeff * <M, H>)`` on the orbit
``{U diag(lambda) U*}``, against the Haar-derived base measure:

* :func:`haar_unitary` — the base measure itself (QR of a complex Ginibre
  matrix with phase-corrected R diagonal).
* :func:`sample_rank1_exact` — exact rejection sampler for rank-1 targets,
  i.e. unit vectors with density ``∝ exp(coeff * u* M u)``.  The envelope is
  an angular distribution of a diagonal complex Gaussian in the eigenbasis
  of ``M``; acceptance is computable in closed form, so samples are exact.
* :func:`sample_orbit_mcmc` — Metropolis chain on U(d) with two-coordinate
  Givens proposals for general rank-k targets, with convergence diagnostics
  (acceptance rate, utility trace, split R-hat over parallel chains).

The Metropolis route is approximate; desk-scale total-variation checks
against brute-force oracles live in :func:`tv_distance_diagnostic` and the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import (
    OrbitPoint,
    Spectrum,
    ValidationError,
    as_hermitian,
    eig_hermitian,
)
from .rng import as_generator, derive_seed, resolve_seed

REORTHONORMALIZE_EVERY = 256
RHAT_WARN_THRESHOLD = 1.1
EXACT_MIN_ACCEPTANCE = 1e-4
_RHAT_CHAINS = 4


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for the Metropolis orbit chain.

    ``step_size`` is the std-dev of the Givens rotation angle (radians).
    ``init`` selects the starting unitary: "aligned" starts at the eigenbasis
    of the score matrix (the orbit optimum), "haar" starts at a Haar draw.
    """

    chain_length: int = 20000
    burn_in: int = 5000
    step_size: float = 0.3
    diagnostics_on: bool = False
    init: str = "aligned"

    def __post_init__(self):
        if self.chain_length <= 0 or self.burn_in <= 0:
            raise ValidationError("chain_length and burn_in must be positive")
        if self.burn_in >= self.chain_length:
            raise ValidationError("burn_in must be smaller than chain_length")
        if not (0.0 < self.step_size <= math.pi):
            raise ValidationError("step_size must be in (0, pi]")
        if self.init not in ("aligned", "haar"):
            raise ValidationError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True)
class ChainDiagnostics:
    acceptance_rate: float
    utility_trace: np.ndarray
    split_rhat: float | None = None
    warnings: tuple[str, ...] = field(default=())

    def trace_for_serialization(self, max_points: int = 4096) -> list[float]:
        trace = np.asarray(self.utility_trace, dtype=float)
        if trace.size > max_points:
            idx = np.linspace(0, trace.size - 1, max_points).round().astype(int)
            trace = trace[idx]
        return [float(x) for x in trace]


def haar_unitary(d: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitary matrices via Ginibre QR.

    The QR factor alone is not Haar; multiplying each column by the phase of
    the corresponding diagonal entry of R fixes the distribution.
    """
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    gen = as_generator(rng)
    shape = (d, d) if size is None else (size, d, d)
    z = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def _acg_batch(gammas: np.ndarray, coeff: float, n: int, gen: np.random.Generator):
    """One proposal batch of the angular-Gaussian envelope; returns accepted rows."""
    d = gammas.size
    g1 = gammas[0]
    b = coeff * g1 + d
    std = 1.0 / np.sqrt(b - coeff * gammas)  # positive: b - coeff*g_i = coeff*(g1-g_i) + d
    z = (gen.standard_normal((n, d)) + 1j * gen.standard_normal((n, d))) * (std / np.sqrt(2.0))
    w = z / np.linalg.norm(z, axis=1, keepdims=True)
    q = (np.abs(w) ** 2) @ gammas
    log_accept = coeff * (q - g1) + d * np.log((b - coeff * q) / d)
    keep = np.log(gen.random(n)) < log_accept
    return w[keep]


def sample_rank1_exact(m, coeff: float, rng, size: int | None = None,
                       return_info: bool = False):
    """Exact unit-vector samples from density ``∝ exp(coeff * u* M u) dHaar(u)``.

    Works in the eigenbasis of ``M``: there the target is a log-linear
    density over ``(|w_1|^2, ..., |w_d|^2)`` with uniform phases.  Rejection
    sampling with a diagonal-complex-Gaussian angular envelope is exact, and
    at ``coeff = 0`` accepts every proposal (Haar-uniform case).

    Falls back to the Metropolis chain if envelope acceptance drops below
    ``EXACT_MIN_ACCEPTANCE``; the fallback is flagged in the returned info.
    """
    if coeff < 0:
        raise ValidationError("coeff must be nonnegative")
    mat = as_hermitian(m)
    gen = as_generator(rng)
    gamma, basis = eig_hermitian(mat)
    gammas = gamma.values
    n = 1 if size is None else int(size)

    out = np.empty((n, mat.dim), dtype=complex)
    filled = 0
    proposed = 0
    accepted = 0
    fallback = False
    while filled < n:
        batch = max(min(2 * (n - filled), 1_000_000), 1024)
        got = _acg_batch(gammas, coeff, batch, gen)
        proposed += batch
        accepted += got.shape[0]
        take = got[: n - filled] @ basis.T  # eigenbasis -> original basis
        out[filled:filled + take.shape[0]] = take
        filled += take.shape[0]
        if proposed >= 500_000 and accepted / proposed < EXACT_MIN_ACCEPTANCE:
            fallback = True
            break

    if fallback:
        lam = Spectrum(np.concatenate([[1.0], np.zeros(mat.dim - 1)]), rank_k=1)
        cfg = SamplerConfig(chain_length=20000, burn_in=5000)
        while filled < n:
            point, _ = sample_orbit_mcmc(mat, lam, coeff, cfg, gen)
            out[filled] = point.u[:, 0]
            filled += 1

    info = {
        "acceptance": accepted / proposed if proposed else 1.0,
        "fallback": fallback,
    }
    result = out[0] if size is None else out
    return (result, info) if return_info else result


def _complete_unitary(column: np.ndarray) -> np.ndarray:
    """Unitary matrix whose first column is the given unit vector."""
    d = column.size
    basis = np.eye(d, dtype=complex)
    basis[:, 0] = column
    q, r = np.linalg.qr(basis)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def rank1_orbit_point(column: np.ndarray, lam: Spectrum) -> OrbitPoint:
    """Embed a sampled top direction as a full orbit point."""
    return OrbitPoint(_complete_unitary(column), lam)


class _OrbitChain:
    """Metropolis chain state: unitary U, cached column scores, utility."""

    def __init__(self, mat: np.ndarray, lam: np.ndarray, coeff: float,
                 step_size: float, u0: np.ndarray, gen: np.random.Generator):
        self.mat = mat
        self.lam = lam
        self.coeff = coeff
        self.step = step_size
        self.gen = gen
        self.u = np.array(u0, dtype=complex)
        self.d = lam.size
        # only rotations mixing columns with distinct target eigenvalues move H
        self.pairs = [(p, q) for p in range(self.d) for q in range(p + 1, self.d)
                      if lam[p] != lam[q]]
        self._refresh_cache()
        self.accepted = 0
        self.steps = 0
        self._since_reorth = 0

    def _refresh_cache(self):
        mu = self.mat @ self.u
        self.col_scores = np.einsum("ij,ij->j", self.u.conj(), mu).real
        self.utility = float(np.dot(self.lam, self.col_scores))

    def reorthonormalize(self):
        q, r = np.linalg.qr(self.u)
        self.u = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        self._refresh_cache()

    def step_once(self) -> float:
        gen = self.gen
        p, q = self.pairs[gen.integers(len(self.pairs))]
        theta = gen.normal(0.0, self.step)
        phi = gen.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(theta), math.sin(theta)
        e_minus = complex(math.cos(phi), -math.sin(phi))
        up, uq = self.u[:, p], self.u[:, q]
        new_p = c * up + s * e_minus * uq
        new_q = -s * e_minus.conjugate() * up + c * uq
        sp = float(np.vdot(new_p, self.mat @ new_p).real)
        sq = float(np.vdot(new_q, self.mat @ new_q).real)
        delta = self.lam[p] * (sp - self.col_scores[p]) + self.lam[q] * (sq - self.col_scores[q])
        self.steps += 1
        if math.log(gen.random() + 1e-300) < self.coeff * delta:
            self.u[:, p] = new_p
            self.u[:, q] = new_q
            self.col_scores[p] = sp
            self.col_scores[q] = sq
            self.utility += delta
            self.accepted += 1
            self._since_reorth += 1
            if self._since_reorth >= REORTHONORMALIZE_EVERY:
                self.reorthonormalize()
                self._since_reorth = 0
        return self.utility


def _initial_unitary(mat, cfg: SamplerConfig, gen) -> np.ndarray:
    if cfg.init == "haar":
        return haar_unitary(mat.dim, gen)
    _, vecs = eig_hermitian(mat)
    return vecs


def _run_single_chain(mat, lam: Spectrum, coeff: float, cfg: SamplerConfig,
                      gen, thin: int = 0):
    chain = _OrbitChain(np.asarray(mat.entries), lam.values, coeff,
                        cfg.step_size, _initial_unitary(mat, cfg, gen), gen)
    trace = np.empty(cfg.chain_length)
    states = []
    for t in range(cfg.chain_length):
        trace[t] = chain.step_once()
        if thin and t >= cfg.burn_in and (t - cfg.burn_in) % thin == 0:
            states.append(np.array(chain.u))
    chain.reorthonormalize()
    return chain, trace, states


def split_rhat(traces: list[np.ndarray]) -> float:
    """Split-half potential scale reduction factor over parallel chains."""
    halves = []
    for tr in traces:
        tr = np.asarray(tr, dtype=float)
        mid = tr.size // 2
        halves.extend([tr[:mid], tr[mid:2 * mid]])
    n = min(h.size for h in halves)
    stacked = np.stack([h[:n] for h in halves])
    within = stacked.var(axis=1, ddof=1).mean()
    between = n * stacked.mean(axis=1).var(ddof=1)
    if within <= 0:
        return 1.0
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def sample_orbit_mcmc(m, lam: Spectrum, coeff: float, cfg: SamplerConfig | None,
                      rng) -> tuple[OrbitPoint, ChainDiagnostics]:
    """One draw targeting ``∝ exp(coeff * <M, H>)`` over the orbit of ``lam``.

    Givens proposals preserve unitarity exactly, so the chain's state space
    is exactly the orbit (periodic re-orthonormalization controls float
    drift).  With ``diagnostics_on``, three extra chains run on independent
    derived streams and the split R-hat of the utility scalar gates a
    convergence warning.
    """
    if coeff < 0:
        raise ValidationError("coeff must be nonnegative")
    cfg = cfg or SamplerConfig()
    mat = as_hermitian(m)
    lam = lam.require_orbit_target().padded(mat.dim)
    gen = as_generator(rng)

    if np.all(lam.values == 0.0) or len([
            1 for p in range(lam.dim) for q in range(p + 1, lam.dim)
            if lam.values[p] != lam.values[q]]) == 0:
        # constant spectrum: the orbit is a single point, no chain needed
        point = OrbitPoint(np.eye(lam.dim, dtype=complex), lam)
        diag = ChainDiagnostics(1.0, np.full(1, float(np.dot(lam.values, np.diagonal(mat.entries).real))))
        return point, diag

    chain, trace, _ = _run_single_chain(mat, lam, coeff, cfg, gen)
    acceptance = chain.accepted / max(chain.steps, 1)
    warnings: list[str] = []
    rhat = None
    if cfg.diagnostics_on:
        traces = [trace[cfg.burn_in:]]
        base = resolve_seed(gen)
        for extra in range(_RHAT_CHAINS - 1):
            sub = as_generator(derive_seed(base, extra + 1))
            _, tr, _ = _run_single_chain(mat, lam, coeff, cfg, sub)
            traces.append(tr[cfg.burn_in:])
        rhat = split_rhat(traces)
        if rhat > RHAT_WARN_THRESHOLD:
            warnings.append("convergence-warning: split R-hat %.3f > %.2f" % (rhat, RHAT_WARN_THRESHOLD))
    if not (0.1 <= acceptance <= 0.9):
        warnings.append("acceptance-rate %.3f outside [0.1, 0.9]" % acceptance)

    point = OrbitPoint(chain.u, lam)
    diag = ChainDiagnostics(acceptance, trace, rhat, tuple(warnings))
    return point, diag


def orbit_chain_samples(m, lam: Spectrum, coeff: float, cfg: SamplerConfig | None,
                        rng, n_samples: int, thin: int = 10) -> list[OrbitPoint]:
    """Thinned post-burn-in states from a single Metropolis run.

    Used by the distributional diagnostics; the chain is extended until it
    yields ``n_samples`` states at the requested thinning.
    """
    cfg = cfg or SamplerConfig()
    needed_steps = cfg.burn_in + thin * n_samples
    cfg = replace(cfg, chain_length=max(cfg.chain_length, needed_steps))
    mat = as_hermitian(m)
    lam = lam.require_orbit_target().padded(mat.dim)
    gen = as_generator(rng)
    _, _, states = _run_single_chain(mat, lam, coeff, cfg, gen, thin=thin)
    return [OrbitPoint(u, lam) for u in states[:n_samples]]


def rank1_marginal(point: OrbitPoint) -> float:
    """The scalar t = |u_1|^2 for a d=2 rank-1 orbit point (top-left of H)."""
    if point.dim != 2 or point.spectrum.rank_k != 1:
        raise ValidationError("rank-1 marginal is defined for d=2 rank-1 points only")
    lam1 = point.spectrum.values[0]
    h00 = float(((point.u[0, :] * point.spectrum.values) @ point.u[0, :].conj()).real)
    return min(max(h00 / lam1, 0.0), 1.0) if lam1 > 0 else 0.0


def tv_distance_diagnostic(samples, oracle_density, bins: int) -> float:
    """Binned total-variation distance of the d=2 rank-1 marginal t = |u_1|^2.

    ``oracle_density`` is an (unnormalized) density on [0, 1]; it is
    integrated per bin on a fine grid and normalized before comparison.
    """
    ts = np.array([rank1_marginal(p) if isinstance(p, OrbitPoint) else float(p)
                   for p in samples])
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(ts, bins=edges)
    empirical = counts / counts.sum()

    grid_per_bin = 64
    grid = np.linspace(0.0, 1.0, bins * grid_per_bin + 1)
    dens = np.asarray([float(oracle_density(x)) for x in grid])
    cell = np.diff(grid) * (dens[:-1] + dens[1:]) / 2.0
    oracle = cell.reshape(bins, grid_per_bin).sum(axis=1)
    oracle = oracle / oracle.sum()
    return float(0.5 * np.abs(empirical - oracle).sum())
