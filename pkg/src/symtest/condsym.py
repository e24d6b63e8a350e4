"""Tests of conditional symmetry (equivariance) of a response given covariates.

If the joint law of (X, Y) is unchanged when a group element hits both
coordinates, then the standardised response Z = tau(X)^{-1} Y is independent
of X given a maximal invariant M(X).  Two tests of that conditional
independence are provided:

* a kernel conditional independence (KCI) test whose null distribution is
  approximated by a spectral Monte Carlo simulation, and
* a conditional permutation (CP) test that shuffles responses within a
  Markov chain whose stationary law is the conditional permutation law,
  using kernel conditional density estimates for the swap odds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMonteCarloBudget,
    BadParameters,
    DegenerateDensity,
    RankDeficientDesign,
    SampleTooSmall,
    UnsupportedKind,
)
from .groups import act, inverse, maximal_invariant, representative_inversion, \
    default_invariant_kind
from .invariance import TestResult
from .kernels import GaussianRBF, center, gram


@dataclass
class PairedDataset:
    """Covariates X, responses Y, maximal invariant M, standardised response Z."""

    X: np.ndarray
    Y: np.ndarray
    M: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        n = self.X.shape[0]
        for name in ("Y", "M", "Z"):
            if getattr(self, name).shape[0] != n:
                raise BadParameters(f"{name} must have one row per observation")


@dataclass(frozen=True)
class KciConfig:
    """Kernels and regularisation for the conditional independence test."""

    kernel_x: object
    kernel_y: object
    kernel_m: object
    epsilon: float = 1e-3
    null_samples: int = 1000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise BadParameters("the ridge epsilon must be positive")
        if self.null_samples < 1:
            raise BadMonteCarloBudget("need at least one null sample")


def transform_responses(X, Y, spec, y_action="same", m_kind=None):
    """Standardise responses relative to the group position of the covariate.

    With ``y_action='same'`` the group acts identically on X and Y and
    Z_i = tau(X_i)^{-1} Y_i removes the orbit position; with ``'trivial'``
    the group leaves Y untouched and Z = Y.  M holds the maximal invariant of
    X (the default kind for the family unless ``m_kind`` overrides it).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise BadParameters("X and Y must have one row per observation")
    if m_kind is None:
        m_kind = default_invariant_kind(spec)
    M = np.stack([maximal_invariant(spec, m_kind, x) for x in X])
    if y_action == "trivial":
        Z = Y.copy()
    elif y_action == "same":
        if Y.shape[1] != X.shape[1]:
            raise BadParameters(
                "a shared group action needs responses of the covariate dimension"
            )
        Z = np.stack(
            [act(inverse(representative_inversion(spec, x)), y)
             for x, y in zip(X, Y)]
        )
    else:
        raise UnsupportedKind(f"unknown response action {y_action!r}")
    return PairedDataset(X, Y, M, Z)


# ---------------------------------------------------------------------------
# kernel conditional independence test


def _kci_matrices(data, config):
    k_y = center(gram(config.kernel_y, data.Z))
    k_m = center(gram(config.kernel_m, data.M))
    k_xm = center(gram(config.kernel_x, data.X) * gram(config.kernel_m, data.M))
    n = k_y.shape[0]
    eps = config.epsilon
    r_m = eps * np.linalg.inv(k_m + eps * np.eye(n))
    a = r_m @ k_xm @ r_m
    b = r_m @ k_y @ r_m
    return a, b


def kci_statistic(data, config):
    """Normalised trace statistic of the kernel conditional independence test.

    Builds centred Gram matrices on (X, M) jointly and on Z, projects out the
    part explained by M through the ridge smoother R = eps (K_M + eps I)^{-1},
    and returns (1/n) Tr of the product of the two conditioned matrices.
    """
    a, b = _kci_matrices(data, config)
    n = a.shape[0]
    return float(np.sum(a * b) / n)


_EIG_TRUNC = 1e-10


def kci_null_samples(data, config, rng, n_samples=None):
    """Spectral Monte Carlo draws approximating the null law of the statistic.

    Eigenvalues of the two conditioned matrices are combined with independent
    chi-square(1) weights: T_b = (1/n^2) sum_{i,j} lam_i mu_j z_ij^2.  Under
    conditional independence the eigenbases are in random relation, so each
    squared eigenvector inner product behaves like z^2 / n, which this
    reproduces in distribution.
    """
    if n_samples is None:
        n_samples = config.null_samples
    a, b = _kci_matrices(data, config)
    n = a.shape[0]
    lam = _trimmed_eigs(a)
    mu = _trimmed_eigs(b)
    if lam.size == 0 or mu.size == 0:
        return np.zeros(n_samples)
    out = np.empty(n_samples)
    chunk = max(1, int(2e6 / max(1, lam.size * mu.size)))
    for start in range(0, n_samples, chunk):
        stop = min(start + chunk, n_samples)
        z2 = rng.standard_normal((stop - start, lam.size, mu.size)) ** 2
        out[start:stop] = np.einsum("i,j,bij->b", lam, mu, z2) / n**2
    return out


def _trimmed_eigs(mat):
    vals = np.linalg.eigvalsh((mat + mat.T) / 2.0)
    vals = vals[vals > 0]
    if vals.size == 0:
        return vals
    return vals[vals >= _EIG_TRUNC * vals.max()]


def kci_test_data(data, config, alpha=0.05, rng=None, seed=None):
    """Kernel conditional independence test on a prepared paired dataset."""
    if data.X.shape[0] < 2:
        raise SampleTooSmall("need at least two observations")
    t_obs = kci_statistic(data, config)
    nulls = kci_null_samples(data, config, rng)
    p = float(np.mean(t_obs <= nulls))
    return TestResult(t_obs, p, nulls, alpha, p <= alpha, "kci", seed)


def kci_test(X, Y, spec, config, alpha=0.05, rng=None, y_action="same",
             m_kind=None, seed=None):
    """Test equivariance of Y given X under the group via KCI."""
    data = transform_responses(X, Y, spec, y_action, m_kind)
    return kci_test_data(data, config, alpha, rng, seed)


# ---------------------------------------------------------------------------
# conditional permutation test


def _log_gram(kernel, A, B=None):
    if not isinstance(kernel, GaussianRBF):
        raise BadParameters("the density-ratio odds need strictly positive kernels")
    from scipy.spatial.distance import cdist

    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    B = A if B is None else np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    d2 = cdist(A, B, metric="sqeuclidean")
    return -d2 / (2.0 * kernel.bandwidth**2)


def _log_joint_sums(data, config):
    """LS[a, q] = log sum_r k_Y(Z_a, Z_r) k_M(M_q, M_r), stable in log space."""
    ly = _log_gram(config.kernel_y, data.Z)
    lm = _log_gram(config.kernel_m, data.M)
    ca = ly.max(axis=1, keepdims=True)
    cq = lm.max(axis=1, keepdims=True)
    prod = np.exp(ly - ca) @ np.exp(lm - cq).T
    if np.any(prod <= 0):
        raise DegenerateDensity("a kernel density sum underflowed to zero")
    return np.log(prod) + ca + cq.T


def kcde_swap_odds(data, config, i, j, assignment=None):
    """Odds ratio for swapping the responses at positions i and j.

    The conditional permutation chain accepts a swap with probability
    odds / (1 + odds) where odds is the ratio of kernel-estimated joint
    densities with the two responses exchanged versus kept.  ``assignment``
    maps positions to rows of the original response sample (identity by
    default).
    """
    ls = _log_joint_sums(data, config)
    n = ls.shape[0]
    pi = np.arange(n) if assignment is None else np.asarray(assignment)
    log_odds = ls[pi[j], i] + ls[pi[i], j] - ls[pi[i], i] - ls[pi[j], j]
    return float(np.exp(log_odds))


def _chain_sweeps(ls, pi, n_sweeps, rng):
    """Run pairwise swap sweeps of the conditional permutation chain."""
    n = ls.shape[0]
    pi = pi.copy()
    half = n // 2
    for _ in range(n_sweeps):
        order = rng.permutation(n)[: 2 * half].reshape(half, 2)
        u = rng.uniform(size=half)
        for (i, j), uu in zip(order, u):
            log_odds = ls[pi[j], i] + ls[pi[i], j] - ls[pi[i], i] - ls[pi[j], j]
            # accept with probability odds / (1 + odds)
            if np.log(uu / (1.0 - uu)) < log_odds:
                pi[i], pi[j] = pi[j], pi[i]
    return pi


def multiple_correlation_statistic(X, Z, M=None):
    """Multiple correlation of the leading response direction with X.

    The first principal coordinate of Z (Z itself when univariate) is
    regressed on the columns of X with an intercept; returns the square root
    of the explained variance fraction.
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, d = X.shape
    if n <= d + 1:
        raise SampleTooSmall("need more observations than regressors")
    zc = Z - Z.mean(axis=0)
    if Z.shape[1] == 1:
        target = zc[:, 0]
    else:
        _, _, vt = np.linalg.svd(zc, full_matrices=False)
        target = zc @ vt[0]
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < d + 1:
        raise RankDeficientDesign("covariate design matrix is rank deficient")
    sst = float(target @ target)
    if sst <= 0.0:
        return 0.0
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    r2 = 1.0 - float(resid @ resid) / sst
    return float(np.sqrt(max(r2, 0.0)))


def cp_test(X, Y, spec, config, alpha=0.05, burn_in=50, B=100, rng=None,
            y_action="same", m_kind=None, statistic=None, seed=None):
    """Conditional permutation test of equivariance of Y given X.

    Responses are shuffled by a swap chain that preserves the estimated
    conditional law of Z given M: ``burn_in`` sweeps from the observed
    assignment, then B independent continuations of ``burn_in`` further
    sweeps each supply one permuted copy.  The observed statistic is ranked
    among the permuted ones.
    """
    if B < 1 or burn_in < 1:
        raise BadMonteCarloBudget("burn-in and B must be positive")
    data = transform_responses(X, Y, spec, y_action, m_kind)
    n = data.X.shape[0]
    if n < 4:
        raise SampleTooSmall("the swap chain needs at least four observations")
    if statistic is None:
        statistic = multiple_correlation_statistic
    ls = _log_joint_sums(data, config)
    t_obs = statistic(data.X, data.Z, data.M)
    pi0 = _chain_sweeps(ls, np.arange(n), burn_in, rng)
    nulls = np.empty(B)
    for b in range(B):
        pi_b = _chain_sweeps(ls, pi0, burn_in, rng)
        nulls[b] = statistic(data.X, data.Z[pi_b], data.M)
    p = (1.0 + float(np.sum(t_obs <= nulls))) / (1.0 + B)
    return TestResult(t_obs, p, nulls, alpha, p <= alpha, "cp", seed)
