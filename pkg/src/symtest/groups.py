"""Compact group actions on Euclidean sample spaces.

Provides the group families used by the invariance and equivariance tests:
special orthogonal groups SO(d), symmetric (permutation) groups S_d, two
product constructions on R^4 (a pair of planes rotated by the same SO(2)
element, and two independently rotated planes), finite cyclic rotation
groups, and the trivial group.  For each family the module offers

* element algebra (``compose``, ``inverse``, ``act``),
* uniform (Haar) sampling,
* orbit machinery: an orbit selector ``gamma`` picking one point per orbit,
  a representative inversion ``tau`` with ``act(tau(x), gamma(x)) == x``,
  a sampler for the conditional distribution of the inverting element when
  the action has stabilisers, and several maximal invariants.

Rotations are stored as matrices, permutations as index arrays where entry
``p[i]`` is the image of position ``i``; the action places coordinate ``i``
of the input at coordinate ``p[i]`` of the output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParameters,
    DimensionMismatch,
    InvalidRotation,
    NonCompactGroup,
    UnsupportedFamily,
    UnsupportedKind,
    VariantMismatch,
    ZeroVector,
)

_ORTHO_TOL = 1e-9
_ZERO_TOL = 1e-12

FAMILIES = ("so", "sym", "paired-so2", "so2xso2", "rot-discrete", "trivial", "lorentz")


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class Rotation:
    """An element of SO(d), stored as its matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidRotation("rotation matrix must be square")
        if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > _ORTHO_TOL:
            raise InvalidRotation("matrix is not orthogonal")
        if np.linalg.det(m) < 0:
            raise InvalidRotation("matrix has negative determinant")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Permutation:
    """An element of S_d; ``index[i]`` is the image of position ``i``."""

    index: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.index, dtype=np.intp)
        if p.ndim != 1:
            raise BadParameters("permutation index must be one-dimensional")
        if not np.array_equal(np.sort(p), np.arange(p.size)):
            raise BadParameters("permutation index is not a bijection")
        object.__setattr__(self, "index", p)

    @property
    def dim(self):
        return self.index.size


@dataclass(frozen=True)
class ProductElement:
    """A tuple of elements acting blockwise on a partitioned vector."""

    parts: tuple
    blocks: tuple  # tuple of tuples of coordinate indices

    def __post_init__(self):
        if len(self.parts) != len(self.blocks):
            raise VariantMismatch("one factor element per block required")
        for g, blk in zip(self.parts, self.blocks):
            if _elem_dim(g) != len(blk):
                raise DimensionMismatch("factor dimension does not match its block")

    @property
    def dim(self):
        return sum(len(b) for b in self.blocks)


def _elem_dim(g):
    return g.dim


def compose(g, h):
    """Group product g*h (apply h first, then g)."""
    if isinstance(g, Rotation) and isinstance(h, Rotation):
        if g.dim != h.dim:
            raise DimensionMismatch("rotations act on different dimensions")
        return Rotation(g.matrix @ h.matrix)
    if isinstance(g, Permutation) and isinstance(h, Permutation):
        if g.dim != h.dim:
            raise DimensionMismatch("permutations act on different dimensions")
        return Permutation(g.index[h.index])
    if isinstance(g, ProductElement) and isinstance(h, ProductElement):
        if g.blocks != h.blocks:
            raise VariantMismatch("product elements over different block structures")
        return ProductElement(
            tuple(compose(a, b) for a, b in zip(g.parts, h.parts)), g.blocks
        )
    raise VariantMismatch(
        f"cannot compose {type(g).__name__} with {type(h).__name__}"
    )


def inverse(g):
    """Group inverse."""
    if isinstance(g, Rotation):
        return Rotation(g.matrix.T)
    if isinstance(g, Permutation):
        return Permutation(np.argsort(g.index))
    if isinstance(g, ProductElement):
        return ProductElement(tuple(inverse(p) for p in g.parts), g.blocks)
    raise VariantMismatch(f"unknown element type {type(g).__name__}")


def act(g, x):
    """Apply a group element to a point (1-d array of matching dimension)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("act expects a single point as a 1-d array")
    if x.size != _elem_dim(g):
        raise DimensionMismatch(
            f"element of dimension {_elem_dim(g)} applied to point of size {x.size}"
        )
    if isinstance(g, Rotation):
        return g.matrix @ x
    if isinstance(g, Permutation):
        out = np.empty_like(x)
        out[g.index] = x
        return out
    if isinstance(g, ProductElement):
        out = np.empty_like(x)
        for part, blk in zip(g.parts, g.blocks):
            out[list(blk)] = act(part, x[list(blk)])
        return out
    raise VariantMismatch(f"unknown element type {type(g).__name__}")


def element_apply(g, X):
    """Apply one group element to every row of an (n, d) sample."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != _elem_dim(g):
        raise DimensionMismatch("sample shape does not match element dimension")
    if isinstance(g, Rotation):
        return X @ g.matrix.T
    if isinstance(g, Permutation):
        out = np.empty_like(X)
        out[:, g.index] = X
        return out
    if isinstance(g, ProductElement):
        out = np.empty_like(X)
        for part, blk in zip(g.parts, g.blocks):
            idx = list(blk)
            out[:, idx] = element_apply(part, X[:, idx])
        return out
    raise VariantMismatch(f"unknown element type {type(g).__name__}")


# ---------------------------------------------------------------------------
# group specifications


_PAIR_BLOCKS = ((0, 1), (2, 3))


@dataclass(frozen=True)
class GroupSpec:
    """Which group acts, and on which space.

    ``family`` is one of ``so``, ``sym``, ``paired-so2`` (both planes of R^4
    rotated by the same SO(2) element), ``so2xso2`` (independent plane
    rotations on R^4), ``rot-discrete`` (cyclic rotations by a fixed step),
    ``trivial`` and ``lorentz``.  The Lorentz family exists only so that
    requesting Haar sampling on it fails loudly: the group is not compact.
    For the trivial family ``dim == 0`` means "any dimension".
    """

    family: str
    dim: int
    step_deg: float | None = None
    axis: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamily(f"unknown group family {self.family!r}")
        if self.family == "so" and self.dim < 2:
            raise BadParameters("rotation groups need dimension >= 2")
        if self.family == "sym" and self.dim < 1:
            raise BadParameters("permutation groups need dimension >= 1")
        if self.family in ("paired-so2", "so2xso2") and self.dim != 4:
            raise BadParameters(f"{self.family} acts on R^4")
        if self.family == "lorentz" and self.dim != 4:
            raise BadParameters("the Lorentz group here acts on R^4")
        if self.family == "rot-discrete":
            if self.dim not in (2, 3):
                raise BadParameters("discrete rotations implemented for d in {2, 3}")
            if self.step_deg is None or not 0 < self.step_deg <= 360:
                raise BadParameters("step angle must lie in (0, 360] degrees")
            if abs(360.0 / self.step_deg - round(360.0 / self.step_deg)) > 1e-9:
                raise BadParameters("step angle must divide 360 degrees")
            if self.dim == 3 and self.axis not in (1, 2, 3):
                raise BadParameters("a rotation axis in {1, 2, 3} is required in R^3")

    @property
    def blocks(self):
        if self.family in ("paired-so2", "so2xso2"):
            return _PAIR_BLOCKS
        return None


def so(d):
    return GroupSpec("so", d)


def sym(d):
    return GroupSpec("sym", d)


def paired_so2():
    return GroupSpec("paired-so2", 4)


def so2xso2():
    return GroupSpec("so2xso2", 4)


def discrete_rotations(step_deg, d, axis=None):
    return GroupSpec("rot-discrete", d, step_deg=step_deg, axis=axis)


def trivial(d=0):
    return GroupSpec("trivial", d)


_GROUP_PATTERNS = [
    (re.compile(r"^so\((\d+)\)$"), lambda m: so(int(m.group(1)))),
    (re.compile(r"^sym\((\d+)\)$"), lambda m: sym(int(m.group(1)))),
    (re.compile(r"^paired-so2$"), lambda m: paired_so2()),
    (re.compile(r"^so2xso2$"), lambda m: so2xso2()),
    (
        re.compile(r"^rot-discrete\(([0-9.]+)deg,d=(\d+)(?:,axis=(\d+))?\)$"),
        lambda m: discrete_rotations(
            float(m.group(1)), int(m.group(2)),
            int(m.group(3)) if m.group(3) else None,
        ),
    ),
    (re.compile(r"^trivial(?:\((\d+)\))?$"),
     lambda m: trivial(int(m.group(1)) if m.group(1) else 0)),
]


def parse_group(text):
    """Parse a group descriptor such as ``so(4)`` or ``rot-discrete(24deg,d=3,axis=3)``."""
    s = text.strip().lower()
    for pat, build in _GROUP_PATTERNS:
        m = pat.match(s)
        if m:
            return build(m)
    raise UnsupportedFamily(f"unrecognised group descriptor {text!r}")


def identity(spec, d=None):
    """The identity element of a group, as a concrete element."""
    d = spec.dim if spec.dim else d
    if d is None:
        raise DimensionMismatch("dimension required for the trivial group identity")
    if spec.family == "sym":
        return Permutation(np.arange(d))
    if spec.family in ("paired-so2", "so2xso2"):
        eye2 = Rotation(np.eye(2))
        return ProductElement((eye2, eye2), _PAIR_BLOCKS)
    if spec.family == "lorentz":
        raise NonCompactGroup("the Lorentz group is not supported for sampling")
    return Rotation(np.eye(d))


# ---------------------------------------------------------------------------
# Haar sampling


def haar_rotations(d, count, rng):
    """Stack of ``count`` rotation matrices drawn from Haar measure on SO(d).

    QR of a Gaussian matrix, with the R-diagonal sign fix that makes the
    orthogonal factor Haar on O(d), then a final column flip onto SO(d).
    """
    a = rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(a)
    sign = np.sign(np.diagonal(r, axis1=1, axis2=2))
    sign[sign == 0] = 1.0
    q = q * sign[:, None, :]
    neg = np.linalg.det(q) < 0
    q[neg, :, -1] *= -1.0
    return q


def _rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _axis_rotation(theta, d, axis):
    """Rotation by ``theta`` in the plane orthogonal to coordinate ``axis``.

    In d=2 the axis argument is ignored and the rotation is in-plane.
    """
    if d == 2:
        return _rot2(theta)
    plane = [i for i in range(3) if i != axis - 1]
    m = np.eye(3)
    block = _rot2(theta)
    for a, i in enumerate(plane):
        for b, j in enumerate(plane):
            m[i, j] = block[a, b]
    return m


class TransformBatch:
    """One group element per observation, in vectorised form.

    ``apply(X)`` transforms row ``i`` of an (n, d) sample by element ``i``.
    Used wherever a statistic needs independent draws per observation.
    """

    def __init__(self, spec, kind, data, count):
        self.spec = spec
        self.kind = kind  # "rot" | "perm" | "angle-paired" | "angle-blocks" | "identity"
        self.data = data
        self.count = count

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != self.count:
            raise DimensionMismatch("sample rows must match the number of elements")
        if self.kind == "identity":
            return X.copy()
        if self.kind == "rot":
            return np.einsum("nij,nj->ni", self.data, X)
        if self.kind == "perm":
            out = np.empty_like(X)
            np.put_along_axis(out, self.data, X, axis=1)
            return out
        if self.kind == "angle-paired":
            out = np.empty_like(X)
            out[:, 0:2] = _rotate_rows(X[:, 0:2], self.data)
            out[:, 2:4] = _rotate_rows(X[:, 2:4], self.data)
            return out
        if self.kind == "angle-blocks":
            out = np.empty_like(X)
            out[:, 0:2] = _rotate_rows(X[:, 0:2], self.data[:, 0])
            out[:, 2:4] = _rotate_rows(X[:, 2:4], self.data[:, 1])
            return out
        raise VariantMismatch(f"unknown batch kind {self.kind!r}")

    def elements(self):
        """The batch as a list of concrete group elements."""
        if self.kind == "identity":
            return [identity(self.spec) for _ in range(self.count)]
        if self.kind == "rot":
            return [Rotation(m) for m in self.data]
        if self.kind == "perm":
            return [Permutation(p) for p in self.data]
        if self.kind == "angle-paired":
            return [
                ProductElement((Rotation(_rot2(t)), Rotation(_rot2(t))), _PAIR_BLOCKS)
                for t in self.data
            ]
        if self.kind == "angle-blocks":
            return [
                ProductElement(
                    (Rotation(_rot2(t1)), Rotation(_rot2(t2))), _PAIR_BLOCKS
                )
                for t1, t2 in self.data
            ]
        raise VariantMismatch(f"unknown batch kind {self.kind!r}")


def _rotate_rows(xy, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * xy[:, 0] - s * xy[:, 1], s * xy[:, 0] + c * xy[:, 1]], axis=1)


def sample_batch(spec, rng, count):
    """Draw ``count`` independent Haar elements as a TransformBatch."""
    if spec.family == "so":
        return TransformBatch(spec, "rot", haar_rotations(spec.dim, count, rng), count)
    if spec.family == "sym":
        base = np.tile(np.arange(spec.dim), (count, 1))
        return TransformBatch(spec, "perm", rng.permuted(base, axis=1), count)
    if spec.family == "paired-so2":
        return TransformBatch(
            spec, "angle-paired", rng.uniform(0.0, 2 * np.pi, count), count
        )
    if spec.family == "so2xso2":
        return TransformBatch(
            spec, "angle-blocks", rng.uniform(0.0, 2 * np.pi, (count, 2)), count
        )
    if spec.family == "rot-discrete":
        order = int(round(360.0 / spec.step_deg))
        theta = np.deg2rad(spec.step_deg) * rng.integers(0, order, count)
        mats = np.stack([_axis_rotation(t, spec.dim, spec.axis) for t in theta])
        return TransformBatch(spec, "rot", mats, count)
    if spec.family == "trivial":
        return TransformBatch(spec, "identity", None, count)
    raise NonCompactGroup(
        f"no Haar probability measure on the {spec.family!r} family"
    )


def sample_haar(spec, rng, count=1):
    """Draw ``count`` independent elements from Haar measure, as a list."""
    return sample_batch(spec, rng, count).elements()


# ---------------------------------------------------------------------------
# orbit machinery


def _so_tau(x):
    """The rotation mapping ||x|| e1 to x, smooth off the e1 axis.

    Rotates by the angle between e1 and x inside their common plane and
    fixes the orthogonal complement.  On the positive e1 axis it is the
    identity; on the negative axis a fixed half-turn in the (e1, e2) plane.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    nrm = np.linalg.norm(x)
    if nrm <= _ZERO_TOL:
        raise ZeroVector("no inverting rotation at the origin")
    u = x / nrm
    c = u[0]
    resid = u.copy()
    resid[0] -= c
    rn = np.linalg.norm(resid)
    if rn <= 1e-12:
        m = np.eye(d)
        if c < 0:
            m[0, 0] = -1.0
            m[1, 1] = -1.0
        return m
    xt = resid / rn
    s = rn  # sin of the angle, >= 0 by construction
    e1 = np.zeros(d)
    e1[0] = 1.0
    frame = np.stack([e1, xt], axis=1)  # d x 2
    planar = np.array([[c, -s], [s, c]])
    return np.eye(d) - np.outer(e1, e1) - np.outer(xt, xt) + frame @ planar @ frame.T


def _paired_angle(x):
    p1 = np.asarray(x, dtype=float)[0:2]
    if np.linalg.norm(p1) <= _ZERO_TOL:
        raise ZeroVector("first block vanishes; the paired rotation is not determined")
    return np.arctan2(p1[1], p1[0])


def orbit_selector(spec, x):
    """The canonical representative gamma(x) of the orbit through x."""
    x = np.asarray(x, dtype=float)
    if spec.dim and x.size != spec.dim:
        raise DimensionMismatch("point dimension does not match the group spec")
    if spec.family == "so":
        out = np.zeros_like(x)
        out[0] = np.linalg.norm(x)
        return out
    if spec.family == "sym":
        return np.sort(x)
    if spec.family == "paired-so2":
        theta = _paired_angle(x)
        r = _rot2(-theta)
        out = np.empty_like(x)
        out[0:2] = r @ x[0:2]
        out[2:4] = r @ x[2:4]
        return out
    if spec.family == "so2xso2":
        out = np.zeros_like(x)
        out[0] = np.linalg.norm(x[0:2])
        out[2] = np.linalg.norm(x[2:4])
        return out
    if spec.family == "trivial":
        return x.copy()
    raise UnsupportedFamily(f"no orbit selector for the {spec.family!r} family")


def representative_inversion(spec, x):
    """An element tau(x) with act(tau(x), gamma(x)) == x.

    For free actions this is the unique inverting element; it is equivariant,
    tau(g x) == g tau(x), wherever the map is defined and continuous.
    """
    x = np.asarray(x, dtype=float)
    if spec.dim and x.size != spec.dim:
        raise DimensionMismatch("point dimension does not match the group spec")
    if spec.family == "so":
        return Rotation(_so_tau(x))
    if spec.family == "sym":
        return Permutation(np.argsort(x, kind="stable"))
    if spec.family == "paired-so2":
        r = Rotation(_rot2(_paired_angle(x)))
        return ProductElement((r, r), _PAIR_BLOCKS)
    if spec.family == "so2xso2":
        p1, p2 = x[0:2], x[2:4]
        if np.linalg.norm(p1) <= _ZERO_TOL or np.linalg.norm(p2) <= _ZERO_TOL:
            raise ZeroVector("a block vanishes; the inverting element is not determined")
        r1 = Rotation(_rot2(np.arctan2(p1[1], p1[0])))
        r2 = Rotation(_rot2(np.arctan2(p2[1], p2[0])))
        return ProductElement((r1, r2), _PAIR_BLOCKS)
    if spec.family == "trivial":
        return identity(spec, x.size)
    raise UnsupportedFamily(
        f"no representative inversion for the {spec.family!r} family"
    )


def inversion_kernel_sample(spec, x, rng):
    """One draw from the conditional law of the element carrying gamma(x) to x.

    For SO(d), d >= 3, the stabiliser of e1 is a copy of SO(d-1), so the draw
    is tau(x) times a uniformly random stabiliser element.  For free actions
    (d = 2, permutations without ties, the R^4 products) the law is a point
    mass at tau(x).
    """
    x = np.asarray(x, dtype=float)
    tau = representative_inversion(spec, x)
    if spec.family == "so" and spec.dim >= 3:
        d = spec.dim
        h = np.eye(d)
        h[1:, 1:] = haar_rotations(d - 1, 1, rng)[0]
        return Rotation(tau.matrix @ h)
    return tau


def maximal_invariant(spec, kind, x):
    """Evaluate a maximal invariant of the group action at one point.

    Kinds: ``norm`` (SO(d)); ``sorted`` (S_d); ``minkowski-q`` (E^2 - |p|^2
    per four-vector, accepting a flat vector of one or more four-vectors);
    ``per-block-norm`` (independent plane rotations); ``paired-rotation``
    (both block norms, their inner product, and the sign of their planar
    cross product, for the shared SO(2) action on R^4).
    """
    x = np.asarray(x, dtype=float)
    if kind == "norm":
        return np.atleast_1d(np.linalg.norm(x))
    if kind == "sorted":
        return np.sort(x)
    if kind == "minkowski-q":
        if x.size % 4 != 0:
            raise DimensionMismatch("expected a flat vector of four-vectors")
        p = x.reshape(-1, 4)
        return p[:, 0] ** 2 - np.sum(p[:, 1:] ** 2, axis=1)
    if kind == "per-block-norm":
        if x.size != 4:
            raise DimensionMismatch("per-block norms are defined on R^4")
        return np.array([np.linalg.norm(x[0:2]), np.linalg.norm(x[2:4])])
    if kind == "paired-rotation":
        if x.size != 4:
            raise DimensionMismatch("the paired rotation invariant lives on R^4")
        p1, p2 = x[0:2], x[2:4]
        cross = p1[0] * p2[1] - p1[1] * p2[0]
        return np.array(
            [np.linalg.norm(p1), np.linalg.norm(p2), p1 @ p2, np.sign(cross)]
        )
    raise UnsupportedKind(f"unknown maximal invariant kind {kind!r}")


def default_invariant_kind(spec):
    """The natural maximal invariant for each group family."""
    kinds = {
        "so": "norm",
        "sym": "sorted",
        "so2xso2": "per-block-norm",
        "paired-so2": "paired-rotation",
    }
    if spec.family not in kinds:
        raise UnsupportedFamily(
            f"no default maximal invariant for the {spec.family!r} family"
        )
    return kinds[spec.family]
