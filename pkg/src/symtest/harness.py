"""Simulation harness: replicated experiments, tuning, data files, reports.

Runs a configured test over many independent replications with fully
deterministic seeding (replication i uses a generator keyed by (seed, i), so
results do not depend on execution order or parallel scheduling), summarises
rejection rates and p-value uniformity, searches bandwidth grids, and reads
and writes the package's CSV/JSON interchange formats.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import kstest

from . import __version__
from .condsym import PairedDataset, KciConfig, cp_test, kci_test, transform_responses
from .errors import (
    ConfigInvalid,
    DataFileMissing,
    DegenerateVariance,
    EmptyGrid,
    IoError,
    ParseError,
    RangeError,
    SampleTooSmall,
    SchemaMismatch,
    SymtestError,
    TooFewValues,
)
from .groups import GroupSpec, parse_group
from .invariance import (
    cw_test,
    inversion_mc_test,
    mc_invariance_test,
    power_estimate,
    transformation_two_sample_test,
)
from .kernels import GaussianRBF, median_heuristic, parse_kernel, resolve_bandwidth
from .synthdata import parse_generator, sample

METHODS = ("mmd", "nmmd", "cw", "2smmd", "inversion-mmd", "kci", "cp")


@dataclass
class ExperimentConfig:
    """A replicated experiment: which test, on what data, at what scale."""

    method: str
    group: str
    n: int = 200
    reps: int = 100
    m: int = 2
    B: int = 200
    alpha: float = 0.05
    kernel: str = "rbf(median)"
    generator: str | None = None
    data: str | None = None
    schema: dict | None = None
    kernel_y: str = "rbf(median)"
    kernel_m: str = "rbf(median)"
    epsilon: float = 1e-3
    null_samples: int = 1000
    burn_in: int = 50
    n_landmarks: int | None = None
    n_projections: int | None = None
    n_resamples: int = 50
    y_action: str = "same"
    m_kind: str | None = None
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigInvalid("configuration must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(raw) - known
        if extra:
            raise ConfigInvalid(f"unknown configuration keys: {sorted(extra)}")
        if "method" not in raw or "group" not in raw:
            raise ConfigInvalid("configuration needs 'method' and 'group'")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.method not in METHODS:
            raise ConfigInvalid(
                f"unknown method {self.method!r}; choose one of {METHODS}"
            )
        try:
            parse_group(self.group)
        except SymtestError as exc:
            raise ConfigInvalid(f"bad group descriptor: {exc}") from exc
        for name in ("n", "reps", "m", "B", "null_samples", "burn_in",
                     "n_resamples", "threads"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigInvalid(f"{name} must be a positive integer")
        if not 0 < self.alpha < 1:
            raise ConfigInvalid("alpha must lie strictly between 0 and 1")
        if not self.epsilon > 0:
            raise ConfigInvalid("epsilon must be positive")
        if (self.generator is None) == (self.data is None):
            raise ConfigInvalid("exactly one of 'generator' or 'data' is required")
        if self.data is not None and self.schema is None:
            raise ConfigInvalid("file-backed experiments need a 'schema'")
        if self.generator is not None:
            try:
                parse_generator(self.generator)
            except SymtestError as exc:
                raise ConfigInvalid(f"bad generator descriptor: {exc}") from exc
        for name in ("kernel", "kernel_y", "kernel_m"):
            try:
                parse_kernel(getattr(self, name))
            except SymtestError as exc:
                raise ConfigInvalid(f"bad {name} descriptor: {exc}") from exc
        if self.y_action not in ("same", "trivial"):
            raise ConfigInvalid("y_action must be 'same' or 'trivial'")


@dataclass
class SimulationReport:
    """Summary of one replicated experiment."""

    method: str
    group: str
    n: int
    reps: int
    alpha: float
    rejection_rate: float
    rejection_se: float
    ks_stat: float
    ks_p: float
    mean_seconds: float
    pvalues: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__


def pvalue_uniformity_check(pvalues):
    """Kolmogorov-Smirnov distance of p-values from the uniform law on [0, 1]."""
    p = np.asarray(pvalues, dtype=float)
    if p.size < 5:
        raise TooFewValues("uniformity needs at least five p-values")
    res = kstest(p, "uniform")
    return float(res.statistic), float(res.pvalue)


def _rep_rng(seed, rep):
    return np.random.default_rng([int(seed), int(rep)])


def _draw_data(gen, n, rng):
    out = sample(gen, n, rng)
    if gen.conditional:
        return out
    return out, None


def _subsample(X, Y, n, rng, with_train=False):
    total = X.shape[0]
    need = 2 * n if with_train else n
    if total < need:
        raise SampleTooSmall(
            f"data file has {total} rows; {need} are needed per replication"
        )
    idx = rng.permutation(total)
    test = idx[:n]
    train = idx[n:2 * n] if with_train else None
    pick = lambda rows: (X[rows], None if Y is None else Y[rows])
    if with_train:
        return pick(test), pick(train)
    return pick(test), (None, None)


def run_replication(config, rep, dataset=None):
    """Run one replication of a configured experiment; returns a TestResult."""
    rng = _rep_rng(config.seed, rep)
    spec = parse_group(config.group)
    kernel = parse_kernel(config.kernel)
    needs_train = isinstance(kernel, GaussianRBF) and kernel.bandwidth is None
    if config.method == "kci":
        needs_train = True

    if dataset is not None:
        x_all, y_all = dataset
        (X, Y), (Xtr, Ytr) = _subsample(x_all, y_all, config.n, rng, needs_train)
    else:
        gen = parse_generator(config.generator)
        X, Y = _draw_data(gen, config.n, rng)
        Xtr = Ytr = None
        if needs_train:
            Xtr, Ytr = _draw_data(gen, config.n, rng)

    if isinstance(kernel, GaussianRBF) and kernel.bandwidth is None:
        kernel = resolve_bandwidth(kernel, Xtr if Xtr is not None else X)

    if config.method == "mmd":
        return mc_invariance_test(
            X, spec, kernel=kernel, m=config.m, B=config.B, alpha=config.alpha,
            statistic="mmd-u", rng=rng, seed=(config.seed, rep),
        )
    if config.method == "nmmd":
        return mc_invariance_test(
            X, spec, kernel=kernel, m=config.m, B=config.B, alpha=config.alpha,
            statistic="mmd-nystrom", rng=rng, n_landmarks=config.n_landmarks,
            seed=(config.seed, rep),
        )
    if config.method == "cw":
        return cw_test(
            X, spec, n_projections=config.n_projections, n_transforms=config.m,
            B=config.B, alpha=config.alpha, rng=rng, seed=(config.seed, rep),
        )
    if config.method == "2smmd":
        return transformation_two_sample_test(
            X, spec, kernel, B=config.B, alpha=config.alpha, rng=rng,
            seed=(config.seed, rep),
        )
    if config.method == "inversion-mmd":
        return inversion_mc_test(
            X, spec, kernel, B=config.B, alpha=config.alpha, rng=rng,
            seed=(config.seed, rep),
        )
    if Y is None:
        raise ConfigInvalid(f"method {config.method!r} needs responses")
    kci_cfg = _resolve_kci_config(config, spec, Xtr, Ytr, X, Y)
    if config.method == "kci":
        return kci_test(
            X, Y, spec, kci_cfg, alpha=config.alpha, rng=rng,
            y_action=config.y_action, m_kind=config.m_kind,
            seed=(config.seed, rep),
        )
    return cp_test(
        X, Y, spec, kci_cfg, alpha=config.alpha, burn_in=config.burn_in,
        B=config.B, rng=rng, y_action=config.y_action, m_kind=config.m_kind,
        seed=(config.seed, rep),
    )


def _resolve_kci_config(config, spec, Xtr, Ytr, X, Y):
    """Resolve median bandwidths for the conditional tests on a training split."""
    kx = parse_kernel(config.kernel)
    ky = parse_kernel(config.kernel_y)
    km = parse_kernel(config.kernel_m)
    if any(isinstance(k, GaussianRBF) and k.bandwidth is None for k in (kx, ky, km)):
        if Xtr is None or Ytr is None:
            Xtr, Ytr = X, Y
        train = transform_responses(Xtr, Ytr, spec, config.y_action, config.m_kind)
        kx = resolve_bandwidth(kx, train.X)
        ky = resolve_bandwidth(ky, train.Z)
        km = resolve_bandwidth(km, train.M)
    return KciConfig(kx, ky, km, epsilon=config.epsilon,
                     null_samples=config.null_samples)


def run_simulation(config, dataset=None):
    """Run all replications of an experiment and summarise the outcomes.

    ``dataset`` is an optional preloaded (X, Y-or-None) pair for file-backed
    experiments; when the configuration names a data file it is read here.
    """
    config.validate()
    if config.data is not None and dataset is None:
        x_all, y_all, _ = ingest_csv(config.data, config.schema)
        dataset = (x_all, y_all)
    pvalues = np.empty(config.reps)
    seconds = np.empty(config.reps)
    for rep in range(config.reps):
        t0 = time.perf_counter()
        pvalues[rep] = run_replication(config, rep, dataset).p_value
        seconds[rep] = time.perf_counter() - t0
    rate = float(np.mean(pvalues <= config.alpha))
    se = float(np.sqrt(rate * (1.0 - rate) / config.reps))
    if config.reps >= 5:
        ks_stat, ks_p = pvalue_uniformity_check(pvalues)
    else:
        ks_stat = ks_p = float("nan")
    return SimulationReport(
        method=config.method, group=config.group, n=config.n, reps=config.reps,
        alpha=config.alpha, rejection_rate=rate, rejection_se=se,
        ks_stat=ks_stat, ks_p=ks_p, mean_seconds=float(seconds.mean()),
        pvalues=[float(p) for p in pvalues], config=asdict(config),
    )


def run_power_estimate(config, rng=None):
    """Draw one dataset from the configured generator and estimate power."""
    config.validate()
    if config.generator is None:
        raise ConfigInvalid("power estimation is defined for generated data")
    if rng is None:
        rng = _rep_rng(config.seed, 0)
    gen = parse_generator(config.generator)
    X, _ = _draw_data(gen, config.n, rng)
    kernel = parse_kernel(config.kernel)
    if isinstance(kernel, GaussianRBF) and kernel.bandwidth is None:
        Xtr, _ = _draw_data(gen, config.n, rng)
        kernel = resolve_bandwidth(kernel, Xtr)
    spec = parse_group(config.group)
    return power_estimate(
        X, spec, kernel=kernel, m=config.m, B=config.B,
        n_resamples=config.n_resamples, alpha=config.alpha, rng=rng,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# bandwidth tuning


def tune_bandwidths(grids, measure, h0_cap=0.1):
    """Grid search over kernel bandwidth combinations.

    ``grids`` maps parameter names to candidate lists; ``measure`` is called
    once per combination with a dict of chosen values and must return a pair
    (null rejection rate, alternative rejection rate).  Among combinations
    whose null rate stays at or below ``h0_cap`` the one with the highest
    alternative rate wins; if none qualify, the lowest null rate wins.  Ties
    keep the earliest combination in grid enumeration order.

    Returns (best combination, records), where records lists every
    combination with its measured rates in evaluation order.
    """
    names = list(grids)
    if not names or any(len(grids[k]) == 0 for k in names):
        raise EmptyGrid("every tuning grid must have at least one candidate")
    combos = [{}]
    for name in names:
        combos = [dict(c, **{name: v}) for c in combos for v in grids[name]]
    records = []
    for combo in combos:
        h0, h1 = measure(combo)
        records.append({"combo": combo, "h0_rate": float(h0), "h1_rate": float(h1)})
    ok = [r for r in records if r["h0_rate"] <= h0_cap]
    if ok:
        best = max(ok, key=lambda r: r["h1_rate"])  # max keeps the first tie
    else:
        best = min(records, key=lambda r: r["h0_rate"])
    return best["combo"], records


# ---------------------------------------------------------------------------
# data files


def ingest_csv(path, schema):
    """Read a CSV data file against a declared column schema.

    ``schema`` maps ``features`` to the covariate column names (in order) and
    optionally ``response`` to response column names.  Returns (X, Y-or-None,
    header).  Blank lines and lines starting with ``#`` are skipped; missing
    files, missing columns, unparseable cells and non-finite values raise
    the corresponding errors.
    """
    if not isinstance(schema, dict) or "features" not in schema:
        raise SchemaMismatch("schema must declare a 'features' column list")
    feat_cols = list(schema["features"])
    resp_cols = list(schema.get("response", []))
    if not os.path.exists(path):
        raise DataFileMissing(f"no such data file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch("data file is empty") from None
        header = [h.strip() for h in header]
        missing = [c for c in feat_cols + resp_cols if c not in header]
        if missing:
            raise SchemaMismatch(f"data file lacks columns: {missing}")
        fi = [header.index(c) for c in feat_cols]
        ri = [header.index(c) for c in resp_cols]
        x_rows, y_rows = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            vals = []
            for col in fi + ri:
                cell = row[col].strip() if col < len(row) else ""
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"cannot parse {cell!r} at row {rownum}, "
                        f"column {header[col]!r}",
                        row=rownum, column=header[col],
                    ) from None
                if not math.isfinite(v):
                    raise RangeError(
                        f"non-finite value at row {rownum}, column {header[col]!r}"
                    )
                vals.append(v)
            x_rows.append(vals[: len(fi)])
            if ri:
                y_rows.append(vals[len(fi):])
    if not x_rows:
        raise SchemaMismatch("data file contains no data rows")
    X = np.asarray(x_rows, dtype=float)
    Y = np.asarray(y_rows, dtype=float) if ri else None
    return X, Y, header


def preprocess_swarm(rows, axis=(0.0, 0.0, 1.0)):
    """Prepare satellite magnetic-survey records for a rotation-about-axis test.

    ``rows`` has columns (latitude deg, longitude deg, radius, field value).
    Positions become Cartesian coordinates rescaled so the largest coordinate
    norm is one, then rotated so that ``axis`` is the third coordinate; the
    field is standardised.  Returns a PairedDataset with M = (distance from
    the axis, height along the axis) and Z the standardised field, matching a
    test of conditional invariance under rotations about the axis.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise SchemaMismatch("expected columns (lat, lon, radius, field)")
    if np.any(np.abs(rows[:, 0]) > 90.0):
        raise RangeError("latitudes must lie in [-90, 90] degrees")
    if np.any((rows[:, 1] < -180.0) | (rows[:, 1] >= 360.0)):
        raise RangeError("longitudes must lie in [-180, 360) degrees")
    lat = np.deg2rad(rows[:, 0])
    lon = np.deg2rad(rows[:, 1])
    r = rows[:, 2]
    if np.any(r <= 0):
        raise RangeError("radii must be positive")
    xyz = np.stack(
        [r * np.cos(lat) * np.cos(lon), r * np.cos(lat) * np.sin(lon),
         r * np.sin(lat)], axis=1,
    )
    xyz = xyz / np.linalg.norm(xyz, axis=1).max()
    basis = _axis_frame(np.asarray(axis, dtype=float))
    X = xyz @ basis  # columns: two transverse coordinates, then along-axis
    field_vals = rows[:, 3]
    sd = field_vals.std()
    if sd <= 0:
        raise DegenerateVariance("field values are constant")
    Z = ((field_vals - field_vals.mean()) / sd)[:, None]
    M = np.stack([np.hypot(X[:, 0], X[:, 1]), X[:, 2]], axis=1)
    return PairedDataset(X, Z.copy(), M, Z)


def _axis_frame(axis):
    """Right-handed orthonormal basis (b1, b2, axis/|axis|) as columns."""
    nrm = np.linalg.norm(axis)
    if nrm <= 0:
        raise RangeError("the axis vector must be nonzero")
    a = axis / nrm
    helper = np.eye(3)[np.argmin(np.abs(a))]
    b1 = np.cross(a, helper)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(a, b1)
    return np.stack([b1, b2, a], axis=1)


def preprocess_dijet(rows):
    """Turn leading-jet (pT, phi) pairs into planar momentum blocks on R^4.

    ``rows`` has columns (pt1, phi1, pt2, phi2); the output rows are
    (pt1 cos phi1, pt1 sin phi1, pt2 cos phi2, pt2 sin phi2), the layout the
    paired and independent plane-rotation groups act on.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise SchemaMismatch("expected columns (pt1, phi1, pt2, phi2)")
    if np.any(rows[:, (0, 2)] < 0):
        raise RangeError("transverse momenta must be nonnegative")
    pt1, phi1, pt2, phi2 = rows.T
    return np.stack(
        [pt1 * np.cos(phi1), pt1 * np.sin(phi1),
         pt2 * np.cos(phi2), pt2 * np.sin(phi2)], axis=1,
    )


# ---------------------------------------------------------------------------
# reports


def emit_report(report, path, fmt="json"):
    """Write a report as JSON (full object) or CSV (one row per replication).

    The CSV form lists (replication index, p-value, reject flag) and ends
    with a ``#`` summary comment line; its p-value column round-trips
    through ``ingest_csv``.
    """
    payload = asdict(report)
    try:
        if fmt == "json":
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
        elif fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["rep", "pvalue", "reject"])
                for i, p in enumerate(payload["pvalues"]):
                    writer.writerow([i, repr(p), int(p <= report.alpha)])
                fh.write(
                    f"# method={report.method} group={report.group} "
                    f"n={report.n} reps={report.reps} alpha={report.alpha} "
                    f"rejection_rate={report.rejection_rate} "
                    f"rejection_se={report.rejection_se}\n"
                )
        else:
            raise IoError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc
