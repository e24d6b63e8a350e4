"""Positive definite kernels and Gram matrix utilities.

Three kernel families cover every test in the package: a Gaussian RBF on
Euclidean points, a heat-kernel-style kernel on rotation matrices in SO(3),
and an exact-match (delta) kernel for discrete values.  Helpers compute Gram
matrices, the median-distance bandwidth heuristic, and double centering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import (
    AllPointsIdentical,
    BadParameters,
    DimensionMismatch,
    InvalidRotation,
    SampleTooSmall,
    UnsupportedKind,
)


@dataclass(frozen=True)
class GaussianRBF:
    """k(x, y) = exp(-||x - y||^2 / (2 sigma^2)).

    ``bandwidth=None`` marks a kernel whose sigma is to be resolved from a
    training sample via the median heuristic before first use.
    """

    bandwidth: float | None = None

    def __post_init__(self):
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise BadParameters("RBF bandwidth must be positive")


@dataclass(frozen=True)
class RotationKernelSO3:
    """A positive definite kernel on SO(3) built from the rotation angle.

    With theta in [0, pi/2] the half-angle of the relative rotation between
    the two arguments (cos theta = sqrt((1 + trace)/4) on the 3x3 matrices,
    equivalently half the trace of the corresponding unit quaternion),

        k = pi * theta * (pi - theta) / (8 sin theta),

    extended continuously to theta = 0 where the value is pi^2 / 8.  In the
    half-angle variable this equals sum_j chi_{2j+1}(phi) / (2j+1)^3 over the
    odd-dimensional (integer spin) characters, a nonnegative combination, so
    the kernel is positive definite on SO(3); with the full rotation angle in
    place of theta it is not.
    """


@dataclass(frozen=True)
class DiscreteDelta:
    """k(x, y) = 1 when x == y exactly, else 0."""


def parse_kernel(text):
    """Parse a kernel descriptor: ``rbf(median)``, ``rbf(1.5)``, ``so3``, ``delta``."""
    s = text.strip().lower()
    if s == "so3":
        return RotationKernelSO3()
    if s == "delta":
        return DiscreteDelta()
    m = re.match(r"^rbf\((median|[0-9.eE+-]+)\)$", s)
    if m:
        arg = m.group(1)
        if arg == "median":
            return GaussianRBF(None)
        try:
            return GaussianRBF(float(arg))
        except ValueError:
            raise UnsupportedKind(f"bad RBF bandwidth {arg!r}") from None
    raise UnsupportedKind(f"unrecognised kernel descriptor {text!r}")


def _as_points(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    elif X.ndim > 2:
        # stacks of matrix-valued points are treated as flattened vectors
        X = X.reshape(X.shape[0], -1)
    return X


def _so3_from_trace(tr):
    """Kernel value from the 3x3 relative-rotation trace, elementwise.

    The half-angle satisfies cos(theta) = sqrt((1 + tr) / 4), so theta lies
    in [0, pi/2] and only theta -> 0 needs a guard, where we use the series
    theta / sin(theta) ~ 1 + theta^2 / 6.
    """
    c = np.sqrt(np.clip((1.0 + tr) / 4.0, 0.0, 1.0))
    theta = np.arccos(c)
    comp = np.pi - theta
    out = np.empty_like(theta)
    lo = theta < 1e-6
    mid = ~lo
    out[mid] = np.pi * theta[mid] * comp[mid] / (8.0 * np.sin(theta[mid]))
    out[lo] = np.pi * comp[lo] / 8.0 * (1.0 + theta[lo] ** 2 / 6.0)
    return out


def _check_rotation_stack(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape == (3, 3):
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (3, 3):
        raise InvalidRotation("expected a stack of 3x3 rotation matrices")
    return X


def eval_kernel(kernel, x, y):
    """Evaluate a kernel at one pair of points."""
    if isinstance(kernel, RotationKernelSO3):
        a = _check_rotation_stack(x)[0]
        b = _check_rotation_stack(y)[0]
        tr = np.trace(b.T @ a)
        return float(_so3_from_trace(np.atleast_1d(tr))[0])
    if isinstance(kernel, DiscreteDelta):
        return 1.0 if np.array_equal(np.asarray(x), np.asarray(y)) else 0.0
    if isinstance(kernel, GaussianRBF):
        if kernel.bandwidth is None:
            raise BadParameters("RBF bandwidth has not been resolved")
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != y.size:
            raise DimensionMismatch("kernel arguments of different dimension")
        d2 = float(np.sum((x - y) ** 2))
        return float(np.exp(-d2 / (2.0 * kernel.bandwidth**2)))
    raise UnsupportedKind(f"unknown kernel type {type(kernel).__name__}")


def gram(kernel, X, Y=None):
    """Gram matrix K[i, j] = k(X[i], Y[j]); Y defaults to X."""
    if isinstance(kernel, RotationKernelSO3):
        A = _check_rotation_stack(X)
        B = A if Y is None else _check_rotation_stack(Y)
        tr = np.einsum("aij,bij->ab", A, B)
        return _so3_from_trace(tr)
    if isinstance(kernel, DiscreteDelta):
        A = _as_points(X)
        B = A if Y is None else _as_points(Y)
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch("samples of different dimension")
        return (A[:, None, :] == B[None, :, :]).all(axis=2).astype(float)
    if isinstance(kernel, GaussianRBF):
        if kernel.bandwidth is None:
            raise BadParameters("RBF bandwidth has not been resolved")
        A = _as_points(X)
        B = A if Y is None else _as_points(Y)
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch("samples of different dimension")
        d2 = cdist(A, B, metric="sqeuclidean")
        np.multiply(d2, -1.0 / (2.0 * kernel.bandwidth**2), out=d2)
        # avoid subnormal kernel values: they are extremely slow to produce
        # and indistinguishable from zero for every statistic built on top
        np.copyto(d2, -1000.0, where=d2 < -708.0)
        return np.exp(d2, out=d2)
    raise UnsupportedKind(f"unknown kernel type {type(kernel).__name__}")


def median_heuristic(X):
    """Median pairwise Euclidean distance of a sample, used as RBF sigma."""
    X = _as_points(X)
    if X.shape[0] < 2:
        raise SampleTooSmall("median heuristic needs at least two points")
    med = float(np.median(pdist(X)))
    if med <= 0.0:
        raise AllPointsIdentical("all points coincide; no usable bandwidth")
    return med


def resolve_bandwidth(kernel, X):
    """Fill in an unresolved RBF bandwidth from a training sample."""
    if isinstance(kernel, GaussianRBF) and kernel.bandwidth is None:
        return GaussianRBF(median_heuristic(X))
    return kernel


def center(K):
    """Double centering H K H with H = I - (1/n) 1 1^T."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionMismatch("centering expects a square matrix")
    row = K.mean(axis=1, keepdims=True)
    col = K.mean(axis=0, keepdims=True)
    return K - row - col + K.mean()
