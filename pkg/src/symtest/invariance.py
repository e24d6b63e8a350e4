"""Monte Carlo tests of distributional invariance under a compact group.

The central routine is a conditional Monte Carlo test: because Haar
re-randomisation leaves an invariant distribution unchanged, re-randomised
copies of the sample are exchangeable with the original under the null, so
comparing the observed statistic against statistics of re-randomised copies
yields an exactly valid p-value at any Monte Carlo budget.

Also here: a projected-ECDF (Kolmogorov-Smirnov style) statistic over random
directions, a bootstrap two-sample MMD test, a test built on transformed
copies of the sample, a test of the conditional law of the inverting group
element for non-free actions, and a power estimator that reuses the null
exchangeability to predict rejection rates from a single dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import (
    BadMonteCarloBudget,
    BadParameters,
    BadProjectionCount,
    SampleTooSmall,
    UnsupportedFamily,
)
from .groups import (
    element_apply,
    haar_rotations,
    inversion_kernel_sample,
    sample_batch,
    sample_haar,
)
from .kernels import RotationKernelSO3, gram
from .mmd import (
    invariance_stat_u,
    mmd_u,
    nystrom_invariance_stat,
)


@dataclass
class TestResult:
    """Outcome of a Monte Carlo hypothesis test."""

    statistic: float
    p_value: float
    null_stats: np.ndarray
    alpha: float
    reject: bool
    method: str
    seed: object = None


def pvalue_from_nulls(t_obs, nulls, rng=None, tie_break=False):
    """Monte Carlo p-value (1 + #{T_b >= T}) / (1 + B).

    With ``tie_break=True`` ties between the observed statistic and null
    copies are broken by independent uniforms, which restores exact size
    even for statistics with atoms.
    """
    nulls = np.asarray(nulls, dtype=float)
    b = nulls.size
    if not tie_break:
        count = int(np.sum(nulls >= t_obs))
    else:
        u = rng.uniform(size=b + 1)
        count = int(np.sum((nulls > t_obs) | ((nulls == t_obs) & (u[1:] >= u[0]))))
    return (1.0 + count) / (1.0 + b)


def _check_budget(B):
    if not isinstance(B, (int, np.integer)) or B < 1:
        raise BadMonteCarloBudget("the Monte Carlo budget B must be a positive integer")


def mc_invariance_test(X, spec, kernel=None, m=2, B=200, alpha=0.05,
                       statistic="mmd-u", rng=None, reuse_transforms=True,
                       tie_break=False, n_landmarks=None, n_projections=None,
                       n_stat_transforms=None, seed=None):
    """Conditional Monte Carlo test of invariance of the law of X.

    ``statistic`` selects the test statistic: ``mmd-u`` (the U-form
    invariance MMD), ``mmd-nystrom`` (its landmark approximation), ``cw``
    (max Kolmogorov-Smirnov distance over random projections), or a callable
    ``f(X) -> float``.  Auxiliary randomness of the statistic (transform
    draws, landmarks, projection directions) is drawn once and reused across
    the B re-randomised copies when ``reuse_transforms`` is true.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise SampleTooSmall("need at least two observations")
    _check_budget(B)
    if not 0 < alpha < 1:
        raise BadParameters("alpha must lie in (0, 1)")

    if callable(statistic):
        method = getattr(statistic, "__name__", "custom")

        def make_aux():
            return None

        def stat_fn(sample, aux):
            return float(statistic(sample))

    elif statistic == "mmd-u":
        method = "mc-invariance/mmd-u"

        def make_aux():
            g = [sample_batch(spec, rng, n) for _ in range(m)]
            h = [sample_batch(spec, rng, n) for _ in range(m)]
            return g, h

        def stat_fn(sample, aux):
            g, h = aux
            return invariance_stat_u(sample, g, h, kernel)

    elif statistic == "mmd-nystrom":
        method = "mc-invariance/mmd-nystrom"
        j = n_landmarks if n_landmarks is not None else int(np.ceil(np.sqrt(n)))

        def make_aux():
            g = [sample_batch(spec, rng, n) for _ in range(m)]
            h = [sample_batch(spec, rng, n) for _ in range(m)]
            return g, h

        def stat_fn(sample, aux):
            g, h = aux
            return nystrom_invariance_stat(sample, g, h, kernel, j, rng)

    elif statistic == "cw":
        method = "mc-invariance/cw"
        j = n_projections if n_projections is not None else int(np.ceil(np.sqrt(n)))
        n_tr = n_stat_transforms if n_stat_transforms is not None else m
        if j < 1:
            raise BadProjectionCount("need at least one projection direction")

        def make_aux():
            dirs = _random_directions(j, X.shape[1], rng)
            transforms = sample_haar(spec, rng, n_tr)
            return transforms, dirs

        def stat_fn(sample, aux):
            transforms, dirs = aux
            return cw_statistic(sample, transforms, dirs)

    else:
        raise BadParameters(f"unknown statistic choice {statistic!r}")

    aux = make_aux()
    t_obs = stat_fn(X, aux)
    nulls = np.empty(B)
    for b in range(B):
        gb = sample_batch(spec, rng, n)
        if not reuse_transforms:
            aux = make_aux()
        nulls[b] = stat_fn(gb.apply(X), aux)
    p = pvalue_from_nulls(t_obs, nulls, rng, tie_break)
    return TestResult(t_obs, p, nulls, alpha, p <= alpha, method, seed)


# ---------------------------------------------------------------------------
# projected-ECDF statistic


def _random_directions(j, d, rng):
    v = rng.standard_normal((j, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def ks_distance(a, b):
    """Exact sup distance between the ECDFs of two 1-d samples."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def cw_statistic(X, transforms, directions):
    """Max over transforms and directions of the projected ECDF distance.

    For each group element g and unit direction t, compares the empirical
    distribution of t.X with that of t.(gX) by the exact Kolmogorov-Smirnov
    sup distance, and returns the largest value found.
    """
    X = np.asarray(X, dtype=float)
    directions = np.asarray(directions, dtype=float)
    if directions.ndim != 2 or directions.shape[1] != X.shape[1]:
        raise BadProjectionCount("directions must be a (J, d) array")
    if len(transforms) < 1:
        raise BadParameters("at least one group element is required")
    proj = X @ directions.T  # n x J
    best = 0.0
    for g in transforms:
        proj_g = element_apply(g, X) @ directions.T
        for jj in range(directions.shape[0]):
            best = max(best, ks_distance(proj[:, jj], proj_g[:, jj]))
    return best


def cw_test(X, spec, n_projections=None, n_transforms=2, B=200, alpha=0.05,
            rng=None, seed=None):
    """Conditional Monte Carlo invariance test on the projected-ECDF statistic."""
    return mc_invariance_test(
        X, spec, kernel=None, m=n_transforms, B=B, alpha=alpha, statistic="cw",
        rng=rng, n_projections=n_projections, n_stat_transforms=n_transforms,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# two-sample tests


def two_sample_mmd_test(X, Y, kernel, B=200, alpha=0.05, rng=None, seed=None):
    """Two-sample MMD test with a pooled bootstrap null.

    Null copies are formed by resampling both samples with replacement from
    the pooled data, which mimics the null of equal distributions.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n1, n2 = X.shape[0], Y.shape[0]
    if n1 < 2 or n2 < 2:
        raise SampleTooSmall("both samples need at least two points")
    if B < 0:
        raise BadMonteCarloBudget("B must be nonnegative")
    t_obs = mmd_u(X, Y, kernel).value
    pool = np.concatenate([X, Y], axis=0)
    nulls = np.empty(B)
    for b in range(B):
        xi = pool[rng.integers(0, n1 + n2, n1)]
        yi = pool[rng.integers(0, n1 + n2, n2)]
        nulls[b] = mmd_u(xi, yi, kernel).value
    p = pvalue_from_nulls(t_obs, nulls)
    return TestResult(t_obs, p, nulls, alpha, p <= alpha, "two-sample-mmd", seed)


def transformation_two_sample_test(X, spec, kernel, B=200, alpha=0.05, rng=None,
                                   seed=None):
    """Invariance test comparing X against a randomly transformed copy.

    Each observation is hit by an independent Haar element to form a second
    sample; under invariance the two samples share a distribution, which is
    checked by the bootstrap two-sample MMD test.
    """
    X = np.asarray(X, dtype=float)
    gb = sample_batch(spec, rng, X.shape[0])
    res = two_sample_mmd_test(X, gb.apply(X), kernel, B, alpha, rng, seed)
    res.method = "transformation-two-sample-mmd"
    return res


# ---------------------------------------------------------------------------
# inversion test for non-free actions


def inversion_mc_test(X, spec, kernel, B=200, alpha=0.05, rng=None, seed=None):
    """Test that the inverting group element is conditionally Haar.

    For each observation one element is drawn from the conditional law of
    the element mapping the orbit representative to the point; under
    invariance these draws are jointly Haar.  Their sample is compared with
    a fresh Haar sample by the two-sample MMD U-statistic on the group, and
    null copies are formed by left-multiplying the drawn elements with fresh
    Haar elements, which makes observed and null statistics exchangeable
    under the null.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise SampleTooSmall("need at least two observations")
    _check_budget(B)
    if spec.family == "so":
        tau = np.stack(
            [inversion_kernel_sample(spec, x, rng).matrix for x in X]
        )
        ref = haar_rotations(spec.dim, n, rng)
        if isinstance(kernel, RotationKernelSO3) and spec.dim != 3:
            raise UnsupportedFamily("the rotation kernel is defined on SO(3)")

        def stat(sample):
            return mmd_u(sample, ref, kernel).value

        t_obs = stat(tau)
        nulls = np.empty(B)
        for b in range(B):
            g = haar_rotations(spec.dim, n, rng)
            nulls[b] = stat(np.einsum("nij,njk->nik", g, tau))
    elif spec.family == "sym":
        tau = np.stack(
            [inversion_kernel_sample(spec, x, rng).index for x in X]
        ).astype(float)
        base = np.tile(np.arange(spec.dim), (n, 1))
        ref = rng.permuted(base, axis=1).astype(float)

        def stat(sample):
            return mmd_u(sample, ref, kernel).value

        t_obs = stat(tau)
        nulls = np.empty(B)
        for b in range(B):
            g = rng.permuted(base, axis=1)
            # compose g with each drawn permutation: (g o p)[i] = g[p[i]]
            nulls[b] = stat(np.take_along_axis(g, tau.astype(np.intp), axis=1))
    else:
        raise UnsupportedFamily(
            f"no inversion sampler for the {spec.family!r} family"
        )
    p = pvalue_from_nulls(t_obs, nulls)
    return TestResult(t_obs, p, nulls, alpha, p <= alpha, "inversion-mmd", seed)


# ---------------------------------------------------------------------------
# power estimation


@dataclass
class PowerEstimate:
    """Estimated rejection probability with its per-resample components."""

    beta_hat: float
    betas: np.ndarray
    p_nulls: np.ndarray
    n_resamples: int
    B: int
    alpha: float
    config: dict = field(default_factory=dict)


def conditional_power_binomial(p0, B, alpha):
    """Probability that a Monte Carlo p-value with null mass p0 rejects.

    If each null copy independently exceeds the observed statistic with
    probability p0, the p-value rejects at level alpha exactly when the
    binomial count stays below floor(alpha (B+1)); this returns that
    binomial tail probability.
    """
    if not 0 <= p0 <= 1:
        raise BadParameters("p0 must lie in [0, 1]")
    _check_budget(B)
    kmax = int(np.floor(alpha * (B + 1))) - 1
    if kmax < 0:
        return 0.0
    return float(binom.cdf(kmax, B, p0))


def power_estimate(X, spec, kernel=None, m=2, B=200, n_resamples=50,
                   alpha=0.05, statistic="mmd-u", rng=None, test_fn=None,
                   seed=None):
    """Estimate test power from one dataset by bootstrap re-testing.

    Each bootstrap resample of X is run through the Monte Carlo invariance
    test; its p-value is converted to an estimate of the probability that a
    single null copy beats the observed statistic, and the binomial formula
    gives the implied rejection probability.  The average over resamples
    estimates the power of the test at this sample size.

    ``test_fn(sample) -> p_value`` may replace the built-in test.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n_resamples < 1:
        raise BadMonteCarloBudget("need at least one bootstrap resample")
    betas = np.empty(n_resamples)
    p_nulls = np.empty(n_resamples)
    for c in range(n_resamples):
        xc = X[rng.integers(0, n, n)]
        if test_fn is not None:
            p = float(test_fn(xc))
        else:
            p = mc_invariance_test(
                xc, spec, kernel=kernel, m=m, B=B, alpha=alpha,
                statistic=statistic, rng=rng,
            ).p_value
        p0 = np.clip((p * (B + 1) - 1.0) / B, 0.0, 1.0)
        p_nulls[c] = p0
        betas[c] = conditional_power_binomial(p0, B, alpha)
    return PowerEstimate(
        float(betas.mean()), betas, p_nulls, n_resamples, B, alpha,
        {"m": m, "alpha": alpha, "statistic": str(statistic), "seed": seed},
    )
