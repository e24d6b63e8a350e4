"""Tests for the simulation harness, tuning, data ingestion and reports."""

import json
import os

import numpy as np
import pytest

from symtest import (
    ConfigInvalid,
    DataFileMissing,
    DegenerateVariance,
    EmptyGrid,
    ExperimentConfig,
    ParseError,
    RangeError,
    SchemaMismatch,
    TooFewValues,
    emit_report,
    ingest_csv,
    preprocess_dijet,
    preprocess_swarm,
    pvalue_uniformity_check,
    run_replication,
    run_simulation,
    tune_bandwidths,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def tiny_config(**overrides):
    base = dict(
        method="mmd", group="so(2)", n=15, reps=4, m=1, B=9,
        kernel="rbf(1.0)", generator="gauss-iso(d=2)", seed=7,
    )
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestConfig:
    def test_round_trip(self):
        cfg = tiny_config()
        assert cfg.method == "mmd" and cfg.n == 15

    def test_requires_method_and_group(self):
        with pytest.raises(ConfigInvalid):
            ExperimentConfig.from_dict({"method": "mmd"})
        with pytest.raises(ConfigInvalid):
            ExperimentConfig.from_dict({"group": "so(2)"})

    def test_rejects_unknown_keys(self):
        with pytest.raises(ConfigInvalid):
            tiny_config(bogus=1)

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigInvalid):
            tiny_config(method="anova")
        with pytest.raises(ConfigInvalid):
            tiny_config(group="su(2)")
        with pytest.raises(ConfigInvalid):
            tiny_config(n=0)
        with pytest.raises(ConfigInvalid):
            tiny_config(alpha=1.0)
        with pytest.raises(ConfigInvalid):
            tiny_config(kernel="banana")
        with pytest.raises(ConfigInvalid):
            tiny_config(generator="nope(d=2)")
        with pytest.raises(ConfigInvalid):
            tiny_config(y_action="flip")

    def test_generator_xor_data(self):
        with pytest.raises(ConfigInvalid):
            tiny_config(generator=None)
        with pytest.raises(ConfigInvalid):
            tiny_config(data="x.csv", schema={"features": ["a"]})
        with pytest.raises(ConfigInvalid):
            tiny_config(generator=None, data="x.csv")  # schema missing


class TestSimulation:
    def test_deterministic(self):
        r1 = run_simulation(tiny_config())
        r2 = run_simulation(tiny_config())
        assert r1.pvalues == r2.pvalues
        assert r1.rejection_rate == r2.rejection_rate

    def test_replication_keyed_by_index(self):
        cfg = tiny_config()
        a = run_replication(cfg, 0).p_value
        b = run_replication(cfg, 1).p_value
        # same replication index reproduces, independent of order
        assert run_replication(cfg, 0).p_value == a
        assert run_replication(cfg, 1).p_value == b

    def test_report_fields(self):
        rep = run_simulation(tiny_config())
        assert rep.reps == 4 and len(rep.pvalues) == 4
        assert 0.0 <= rep.rejection_rate <= 1.0
        assert rep.mean_seconds > 0
        assert rep.config["kernel"] == "rbf(1.0)"

    def test_median_bandwidth_path(self):
        rep = run_simulation(tiny_config(kernel="rbf(median)"))
        assert len(rep.pvalues) == 4

    def test_conditional_method(self):
        cfg = tiny_config(
            method="kci", generator="cond-shift(d=2)", n=20,
            kernel="rbf(1.0)", kernel_y="rbf(1.0)", kernel_m="rbf(1.0)",
            null_samples=100,
        )
        rep = run_simulation(cfg)
        assert len(rep.pvalues) == 4

    def test_file_backed_simulation(self):
        cfg = tiny_config(
            generator=None, data=os.path.join(FIXTURES, "dijet.csv"),
            schema={"features": ["pt1", "phi1", "pt2", "phi2"]},
            group="so(4)", n=10, kernel="rbf(1.0)",
        )
        rep = run_simulation(cfg)
        assert len(rep.pvalues) == 4


class TestUniformityCheck:
    def test_uniform_sample_passes(self):
        p = np.random.default_rng(0).uniform(size=500)
        stat, pv = pvalue_uniformity_check(p)
        assert pv > 0.01 and stat < 0.1

    def test_concentrated_sample_fails(self):
        stat, pv = pvalue_uniformity_check(np.full(100, 0.5))
        assert pv < 1e-6
        assert stat == pytest.approx(0.5)

    def test_too_few(self):
        with pytest.raises(TooFewValues):
            pvalue_uniformity_check([0.1, 0.2, 0.3, 0.4])

    def test_lattice_grid_is_nearly_uniform(self):
        grid = np.arange(1, 101) / 101.0
        stat, _ = pvalue_uniformity_check(grid)
        assert stat <= 0.01


class TestTuning:
    def test_picks_best_power_under_cap(self):
        grids = {"kernel": [1.0, 2.0], "kernel_y": [0.5]}
        table = {
            (1.0, 0.5): (0.05, 0.90),
            (2.0, 0.5): (0.08, 0.99),
        }

        def measure(combo):
            return table[(combo["kernel"], combo["kernel_y"])]

        best, records = tune_bandwidths(grids, measure, h0_cap=0.1)
        assert best == {"kernel": 2.0, "kernel_y": 0.5}
        assert len(records) == 2

    def test_falls_back_to_lowest_null_rate(self):
        grids = {"kernel": [1.0, 2.0, 3.0]}
        rates = {1.0: (0.5, 1.0), 2.0: (0.3, 1.0), 3.0: (0.4, 1.0)}
        best, _ = tune_bandwidths(grids, lambda c: rates[c["kernel"]], 0.1)
        assert best == {"kernel": 2.0}

    def test_ties_keep_enumeration_order(self):
        grids = {"kernel": [1.0, 2.0]}
        best, _ = tune_bandwidths(grids, lambda c: (0.05, 0.9), 0.1)
        assert best == {"kernel": 1.0}

    def test_empty_grid(self):
        with pytest.raises(EmptyGrid):
            tune_bandwidths({}, lambda c: (0, 0))
        with pytest.raises(EmptyGrid):
            tune_bandwidths({"kernel": []}, lambda c: (0, 0))


class TestIngest:
    def test_reads_features_and_response(self):
        X, Y, header = ingest_csv(
            os.path.join(FIXTURES, "topquark.csv"),
            {"features": ["e1", "px1", "py1", "pz1"], "response": ["label"]},
        )
        assert X.shape == (64, 4)
        assert Y.shape == (64, 1)
        assert "label" in header

    def test_feature_order_follows_schema(self):
        X1, _, _ = ingest_csv(
            os.path.join(FIXTURES, "dijet.csv"), {"features": ["pt1", "pt2"]}
        )
        X2, _, _ = ingest_csv(
            os.path.join(FIXTURES, "dijet.csv"), {"features": ["pt2", "pt1"]}
        )
        assert np.allclose(X1, X2[:, ::-1])

    def test_missing_file(self):
        with pytest.raises(DataFileMissing):
            ingest_csv("/nonexistent/file.csv", {"features": ["a"]})

    def test_missing_column(self):
        with pytest.raises(SchemaMismatch):
            ingest_csv(
                os.path.join(FIXTURES, "dijet.csv"), {"features": ["momentum"]}
            )

    def test_bad_cell_reports_position(self):
        with pytest.raises(ParseError) as err:
            ingest_csv(
                os.path.join(FIXTURES, "bad_cell.csv"),
                {"features": ["a", "b"]},
            )
        assert err.value.row is not None
        assert err.value.column is not None

    def test_bad_schema(self):
        with pytest.raises(SchemaMismatch):
            ingest_csv(os.path.join(FIXTURES, "dijet.csv"), {"cols": ["pt1"]})

    def test_non_finite_value(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("a,b\n1.0,inf\n")
        with pytest.raises(RangeError):
            ingest_csv(str(path), {"features": ["a", "b"]})


class TestPreprocess:
    def test_swarm_geometry(self):
        # a point on the equator at longitude 0 with unit radius lies on the
        # first transverse axis; the axis-frame invariant is (1, 0)
        rows = np.array(
            [[0.0, 0.0, 1.0, 5.0], [0.0, 90.0, 1.0, 7.0],
             [90.0, 0.0, 1.0, 9.0]]
        )
        data = preprocess_swarm(rows)
        # the largest norm is scaled to one; here all radii are equal
        assert np.allclose(np.linalg.norm(data.X, axis=1), 1.0, atol=1e-12)
        # the pole maps onto the axis coordinate
        assert data.M[2, 0] == pytest.approx(0.0, abs=1e-12)
        assert data.M[2, 1] == pytest.approx(1.0, abs=1e-12)
        # equator points sit at unit distance from the axis, zero height
        assert np.allclose(data.M[:2, 0], 1.0, atol=1e-12)
        assert np.allclose(data.M[:2, 1], 0.0, atol=1e-12)
        # standardised field has mean zero, unit variance
        assert data.Z.mean() == pytest.approx(0.0, abs=1e-12)
        assert data.Z.std() == pytest.approx(1.0, abs=1e-12)

    def test_swarm_custom_axis(self):
        rows = np.array(
            [[0.0, 0.0, 1.0, 1.0], [45.0, 30.0, 1.0, 2.0], [10.0, 80.0, 1.0, 3.0]]
        )
        data = preprocess_swarm(rows, axis=(1.0, 0.0, 0.0))
        # the equator point at longitude 0 is the new axis direction
        assert data.M[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert abs(data.M[0, 1]) == pytest.approx(1.0, abs=1e-12)

    def test_swarm_max_norm_rescale(self):
        # with radii 2 and 1 the larger point is scaled onto the unit sphere
        rows = np.array([[0.0, 0.0, 2.0, 1.0], [0.0, 90.0, 1.0, 2.0]])
        data = preprocess_swarm(rows)
        norms = np.linalg.norm(data.X, axis=1)
        assert norms[0] == pytest.approx(1.0, abs=1e-12)
        assert norms[1] == pytest.approx(0.5, abs=1e-12)

    def test_swarm_lat_lon_ranges(self):
        with pytest.raises(RangeError):
            preprocess_swarm(
                np.array([[91.0, 0.0, 1.0, 1.0], [0.0, 0.0, 1.0, 2.0]])
            )
        with pytest.raises(RangeError):
            preprocess_swarm(
                np.array([[0.0, 360.0, 1.0, 1.0], [0.0, 0.0, 1.0, 2.0]])
            )

    def test_swarm_validation(self):
        with pytest.raises(SchemaMismatch):
            preprocess_swarm(np.zeros((3, 3)))
        bad_radius = np.array([[0.0, 0.0, -1.0, 1.0], [0.0, 0.0, 1.0, 2.0]])
        with pytest.raises(RangeError):
            preprocess_swarm(bad_radius)
        flat_field = np.array([[0.0, 0.0, 1.0, 2.0], [10.0, 10.0, 1.0, 2.0]])
        with pytest.raises(DegenerateVariance):
            preprocess_swarm(flat_field)

    def test_dijet_blocks(self):
        rows = np.array([[2.0, 0.0, 3.0, np.pi / 2]])
        X = preprocess_dijet(rows)
        assert np.allclose(X, [[2.0, 0.0, 0.0, 3.0]], atol=1e-12)

    def test_dijet_validation(self):
        with pytest.raises(SchemaMismatch):
            preprocess_dijet(np.zeros((2, 3)))
        with pytest.raises(RangeError):
            preprocess_dijet(np.array([[-1.0, 0.0, 1.0, 0.0]]))

    def test_dijet_fixture_round_trip(self):
        rows, _, _ = ingest_csv(
            os.path.join(FIXTURES, "dijet.csv"),
            {"features": ["pt1", "phi1", "pt2", "phi2"]},
        )
        X = preprocess_dijet(rows)
        assert np.allclose(np.hypot(X[:, 0], X[:, 1]), rows[:, 0], atol=1e-9)
        assert np.allclose(np.hypot(X[:, 2], X[:, 3]), rows[:, 2], atol=1e-9)


class TestReports:
    def test_json_report(self, tmp_path):
        rep = run_simulation(tiny_config())
        out = tmp_path / "report.json"
        emit_report(rep, str(out), "json")
        payload = json.loads(out.read_text())
        assert payload["method"] == "mmd"
        assert payload["pvalues"] == rep.pvalues
        assert payload["config"]["group"] == "so(2)"

    def test_csv_report_round_trips(self, tmp_path):
        rep = run_simulation(tiny_config(reps=5))
        out = tmp_path / "report.csv"
        emit_report(rep, str(out), "csv")
        text = out.read_text()
        assert "rejection_rate" in text
        X, _, _ = ingest_csv(str(out), {"features": ["pvalue"]})
        assert np.allclose(X[:, 0], rep.pvalues, atol=1e-15)

    def test_unknown_format(self, tmp_path):
        from symtest import IoError as SymtestIoError

        rep = run_simulation(tiny_config())
        with pytest.raises(SymtestIoError):
            emit_report(rep, str(tmp_path / "x"), "yaml")
