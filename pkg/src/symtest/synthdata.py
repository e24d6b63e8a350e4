"""Synthetic data models for calibration and power studies.

Marginal models: isotropic and shifted Gaussians, fixed and Wishart-random
covariances, exchangeable covariances with positive or negative equal
correlation, and a rotated von Mises-Fisher model whose radius is an
independent chi variable.  Conditional models pair a covariate sample with
responses that are equivariant (shift) or break equivariance (absolute value,
fixed-direction projection), plus a toy particle-collision labelling model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameters, UnsupportedKind

MARGINAL_TAGS = (
    "gauss-iso", "gauss-mean", "gauss-cov", "wishart-cov",
    "exch-plus", "exch-minus", "vmf",
)
CONDITIONAL_TAGS = ("cond-shift", "cond-abs", "cond-proj", "top-quark")


@dataclass(frozen=True, eq=False)
class Generator:
    """A named data model with its parameters."""

    tag: str
    d: int
    mu: np.ndarray | None = None
    cov: np.ndarray | None = None
    kappa: float | None = None
    xi: np.ndarray | None = None

    def __post_init__(self):
        if self.tag not in MARGINAL_TAGS + CONDITIONAL_TAGS:
            raise UnsupportedKind(f"unknown generator tag {self.tag!r}")
        if self.d < 1:
            raise BadParameters("dimension must be positive")
        if self.tag == "exch-minus" and self.d < 2:
            raise BadParameters("negative exchangeable correlation needs d >= 2")
        if self.tag == "vmf" and (self.kappa is None or self.kappa < 0):
            raise BadParameters("vMF concentration must be nonnegative")
        if self.tag == "top-quark" and self.d != 8:
            raise BadParameters("the collision model produces two four-vectors")

    @property
    def conditional(self):
        return self.tag in CONDITIONAL_TAGS


def exchangeable_cov(d, sign):
    """Unit-variance covariance with equal off-diagonal correlation.

    ``sign=+1`` uses correlation 1/d; ``sign=-1`` uses -1/(d-1), the most
    negative exchangeable correlation (the matrix is then singular).
    """
    rho = 1.0 / d if sign > 0 else -1.0 / (d - 1)
    return (1.0 - rho) * np.eye(d) + rho * np.ones((d, d))


def _psd_sqrt(cov):
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def chi_sample(d, rng, n=1):
    """Draws from the chi distribution with d degrees of freedom."""
    return np.sqrt(rng.chisquare(d, n))


def vmf_sample(mu, kappa, n, rng):
    """Unit vectors from the von Mises-Fisher law on the sphere around mu.

    Uses the standard rejection sampler for the cosine of the polar angle;
    kappa = 0 reduces to the uniform distribution on the sphere.
    """
    mu = np.asarray(mu, dtype=float)
    d = mu.size
    nrm = np.linalg.norm(mu)
    if nrm <= 0:
        raise BadParameters("the vMF mean direction must be nonzero")
    mu = mu / nrm
    if kappa == 0:
        v = rng.standard_normal((n, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    w = np.empty(n)
    b = (-2.0 * kappa + np.sqrt(4.0 * kappa**2 + (d - 1.0) ** 2)) / (d - 1.0)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1.0) * np.log(1.0 - x0**2)
    filled = 0
    while filled < n:
        z = rng.beta((d - 1.0) / 2.0, (d - 1.0) / 2.0, n - filled)
        u = rng.uniform(size=n - filled)
        cand = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        ok = kappa * cand + (d - 1.0) * np.log(1.0 - x0 * cand) - c >= np.log(u)
        take = cand[ok]
        w[filled:filled + take.size] = take
        filled += take.size
    # uniform direction in the tangent space, then tilt toward mu
    v = rng.standard_normal((n, d))
    v -= (v @ mu)[:, None] * mu
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    out = np.sqrt(np.clip(1.0 - w**2, 0.0, None))[:, None] * v + w[:, None] * mu
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _wishart_identity(d, rng):
    """One draw from Wishart(I_d, d) via a square Gaussian factor."""
    a = rng.standard_normal((d, d))
    return a @ a.T


_ENERGY_SCALE = 100.0
_ENERGY_CUT = 200.0
_MASS_SCALE = 50.0


def sample(gen, n, rng):
    """Draw n observations; conditional models return a pair (X, Y)."""
    if n < 1:
        raise BadParameters("sample size must be positive")
    d = gen.d
    if gen.tag == "gauss-iso":
        return rng.standard_normal((n, d))
    if gen.tag == "gauss-mean":
        return rng.standard_normal((n, d)) + gen.mu
    if gen.tag == "gauss-cov":
        return rng.standard_normal((n, d)) @ _psd_sqrt(gen.cov).T
    if gen.tag == "wishart-cov":
        sigma = _wishart_identity(d, rng)
        return rng.standard_normal((n, d)) @ _psd_sqrt(sigma).T
    if gen.tag == "exch-plus":
        return rng.standard_normal((n, d)) @ _psd_sqrt(exchangeable_cov(d, +1)).T
    if gen.tag == "exch-minus":
        return rng.standard_normal((n, d)) @ _psd_sqrt(exchangeable_cov(d, -1)).T
    if gen.tag == "vmf":
        xi = gen.xi if gen.xi is not None else np.eye(d)[0]
        u = vmf_sample(xi, gen.kappa, n, rng)
        return chi_sample(d, rng, n)[:, None] * u
    if gen.tag in ("cond-shift", "cond-abs", "cond-proj"):
        sigma = _wishart_identity(d, rng)
        x = rng.standard_normal((n, d)) @ _psd_sqrt(sigma).T
        noise = rng.standard_normal((n, d))
        if gen.tag == "cond-shift":
            y = x + noise
        elif gen.tag == "cond-abs":
            y = np.abs(x) + noise
        else:
            y = np.outer(x[:, 0], np.ones(d)) + noise
        return x, y
    if gen.tag == "top-quark":
        x = np.empty((n, 8))
        for blk in (0, 4):
            p = rng.standard_normal((n, 3)) * _ENERGY_SCALE
            mass = np.abs(rng.standard_normal(n)) * _MASS_SCALE
            x[:, blk] = np.sqrt(mass**2 + np.sum(p**2, axis=1))
            x[:, blk + 1:blk + 4] = p
        prob = np.where(x[:, 0] >= _ENERGY_CUT, 0.9, 0.1)
        y = (rng.uniform(size=n) < prob).astype(float)
        return x, y[:, None]
    raise UnsupportedKind(f"unknown generator tag {gen.tag!r}")


# ---------------------------------------------------------------------------
# descriptor parsing


_AXIS_VECTOR = re.compile(r"^([0-9.]+)e(\d+)$")


def _parse_mu(text, d):
    m = _AXIS_VECTOR.match(text)
    if not m:
        raise UnsupportedKind(f"bad mean descriptor {text!r}; use '<coef>e<axis>'")
    coef = float(m.group(1))
    axis = int(m.group(2))
    if not 1 <= axis <= d:
        raise BadParameters("mean axis outside the space dimension")
    mu = np.zeros(d)
    mu[axis - 1] = coef
    return mu


def parse_generator(text):
    """Parse a generator descriptor such as ``gauss-mean(d=4,mu=0.4e1)``.

    Supported forms: ``gauss-iso(d=..)``, ``gauss-mean(d=..,mu=<coef>e<axis>)``,
    ``wishart(d=..)``, ``exch-plus(d=..)``, ``exch-minus(d=..)``,
    ``vmf(d=..,kappa=..)``, ``cond-shift(d=..)``, ``cond-abs(d=..)``,
    ``cond-proj(d=..)``, ``top-quark``.
    """
    s = text.strip().lower()
    if s == "top-quark":
        return Generator("top-quark", 8)
    m = re.match(r"^([a-z-]+)\(([^)]*)\)$", s)
    if not m:
        raise UnsupportedKind(f"unrecognised generator descriptor {text!r}")
    name, argstr = m.group(1), m.group(2)
    args = {}
    for part in argstr.split(","):
        if not part:
            continue
        if "=" not in part:
            raise UnsupportedKind(f"bad generator argument {part!r}")
        k, v = part.split("=", 1)
        args[k.strip()] = v.strip()
    if "d" not in args:
        raise BadParameters("generator descriptors need a dimension d")
    d = int(args["d"])
    if name == "gauss-iso":
        return Generator("gauss-iso", d)
    if name == "gauss-mean":
        if "mu" not in args:
            raise BadParameters("gauss-mean needs a mu argument")
        return Generator("gauss-mean", d, mu=_parse_mu(args["mu"], d))
    if name == "wishart":
        return Generator("wishart-cov", d)
    if name in ("exch-plus", "exch-minus"):
        return Generator(name, d)
    if name == "vmf":
        return Generator("vmf", d, kappa=float(args.get("kappa", 0.0)))
    if name in ("cond-shift", "cond-abs", "cond-proj"):
        return Generator(name, d)
    raise UnsupportedKind(f"unrecognised generator descriptor {text!r}")
