import json

import numpy as np
import pytest

from mvmlp.bench import (
    CSV_HEADER,
    ExperimentConfig,
    build_model,
    estimate_experiment_cost,
    l2_error,
    render_csv,
    render_markdown,
    rows_from_json,
    rows_to_json,
    run_cell,
    run_experiment,
)
from mvmlp.cli import config_from_args, main
from mvmlp.mlp import analytic_cost
from mvmlp.models import OuParams, ou_model
from mvmlp.numerics import DiscretePath, TimeGrid


def _path(grid, values):
    return DiscretePath(grid=grid, values=np.asarray(values, dtype=float))


class TestL2Error:
    def test_hand_case(self):
        g = TimeGrid(T=1.0, K=1)
        ref = _path(g, [[0.0], [1.0]])
        est = _path(g, [[0.0], [0.5]])
        assert l2_error([(ref, est)]) == pytest.approx(0.5)

    def test_time_zero_excluded(self):
        g = TimeGrid(T=1.0, K=1)
        ref = _path(g, [[7.0], [1.0]])
        est = _path(g, [[0.0], [1.0]])
        assert l2_error([(ref, est)]) == 0.0

    def test_run_average(self):
        g = TimeGrid(T=1.0, K=2)
        zero = _path(g, np.zeros((3, 1)))
        off = _path(g, [[0.0], [1.0], [1.0]])
        # two runs, one exact and one with unit gaps at both times
        got = l2_error([(zero, zero), (zero, off)])
        assert got == pytest.approx(np.sqrt(2 / (2 * 1 * 2)))

    def test_dimension_normalization(self):
        g = TimeGrid(T=1.0, K=1)
        ref = _path(g, [[0.0, 0.0], [1.0, 1.0]])
        est = _path(g, np.zeros((2, 2)))
        assert l2_error([(ref, est)]) == pytest.approx(1.0)

    def test_mismatched_grids_rejected(self):
        a = _path(TimeGrid(T=1.0, K=1), np.zeros((2, 1)))
        b = _path(TimeGrid(T=2.0, K=1), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            l2_error([(a, b)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            l2_error([])


class TestRunCell:
    def test_constant_coefficients_are_exact(self):
        d = 2
        params = OuParams(
            a0=np.array([0.4, -0.2]),
            A1=np.zeros((d, d)),
            A2=np.zeros((d, d)),
            b=np.array([[0.3, 0.0], [0.1, 0.2]]),
            B=np.zeros((d, d, d)),
        )
        model = ou_model(params)
        cfg = ExperimentConfig(model="ou", d=d, runs=3, seed=5)
        for n, m in ((1, 1), (2, 2), (3, 2)):
            row = run_cell(cfg, n, m, model=model)
            assert row.l2_error < 1e-8

    def test_cost_column_is_closed_form(self):
        cfg = ExperimentConfig(model="kuramoto", d=3, runs=2, seed=1)
        model = build_model(cfg)
        row = run_cell(cfg, 2, 2, model=model)
        assert row.cost == analytic_cost(2, 2, 4, 3, model.unit_costs)
        assert row.K == 4

    def test_per_run_errors_aggregate(self):
        cfg = ExperimentConfig(model="ou", d=2, runs=4, seed=3)
        row = run_cell(cfg, 2, 2)
        assert len(row.per_run_errors) == 4
        pooled = np.sqrt(np.mean(np.square(row.per_run_errors)))
        assert row.l2_error == pytest.approx(pooled, rel=1e-12)

    def test_thread_count_does_not_change_results(self):
        base = dict(model="ou", d=3, levels=((1, 1), (2, 2)), runs=6, seed=7)
        rows1 = run_experiment(ExperimentConfig(threads=1, **base))
        rows8 = run_experiment(ExperimentConfig(threads=8, **base))

        def strip_time(rows):
            out = []
            for line in render_csv(rows).splitlines():
                cells = line.split(",")
                del cells[6]
                out.append(",".join(cells))
            return out

        assert strip_time(rows1) == strip_time(rows8)

    def test_cost_grows_with_n(self):
        cfg = ExperimentConfig(model="ou", d=2, runs=1, seed=0)
        costs = [run_cell(cfg, n, 2).cost for n in (1, 2, 3)]
        assert costs[0] < costs[1] < costs[2]


class TestExperiment:
    def test_empty_levels(self):
        assert run_experiment(ExperimentConfig(levels=())) == []

    def test_desk_caps(self):
        with pytest.raises(ValueError):
            run_experiment(ExperimentConfig(d=101, levels=((1, 1),)))
        with pytest.raises(ValueError):
            run_experiment(ExperimentConfig(levels=((5, 1),)))

    def test_cost_estimate_sums_cells(self):
        cfg = ExperimentConfig(model="ou", d=2, levels=((1, 1), (2, 2)), runs=3)
        units = build_model(cfg).unit_costs
        want = 3 * (analytic_cost(1, 1, 1, 2, units) + analytic_cost(2, 2, 4, 2, units))
        assert estimate_experiment_cost(cfg) == want

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(runs=0)
        with pytest.raises(ValueError):
            ExperimentConfig(levels=((1, 0),))
        with pytest.raises(ValueError):
            ExperimentConfig(model="heat")


class TestOutputs:
    def _rows(self):
        cfg = ExperimentConfig(model="ou", d=2, levels=((1, 1), (2, 2)), runs=2, seed=2)
        return run_experiment(cfg)

    def test_csv_schema(self):
        rows = self._rows()
        lines = render_csv(rows).splitlines()
        assert lines[0] == CSV_HEADER == "model,d,n,m,K,l2_error,time_s,cost"
        assert len(lines) == 1 + len(rows)
        for line, row in zip(lines[1:], rows):
            cells = line.split(",")
            assert len(cells) == 8
            assert cells[0] == "ou"
            assert [int(c) for c in cells[1:5]] == [row.d, row.n, row.m, row.K]
            assert float(cells[5]) == pytest.approx(row.l2_error, rel=1e-11)
            assert int(cells[7]) == row.cost

    def test_json_round_trip(self):
        rows = self._rows()
        back = rows_from_json(rows_to_json(rows))
        assert back == rows

    def test_markdown_table(self):
        text = render_markdown(self._rows())
        assert "## ou, d = 2" in text
        assert "n = m = 1" in text and "n = m = 2" in text
        for label in ("L2-Error", "Time", "Cost"):
            assert f"| {label} |" in text

    def test_write_outputs(self, tmp_path):
        cfg = ExperimentConfig(
            model="ou", d=2, levels=((1, 1),), runs=2, seed=2,
            out_dir=str(tmp_path), formats=("csv", "json", "md"),
        )
        rows = run_experiment(cfg)
        assert (tmp_path / "results.csv").read_text() == render_csv(rows)
        assert json.loads((tmp_path / "results.json").read_text())[0]["model"] == "ou"
        assert (tmp_path / "table.md").exists()


class TestCli:
    def test_flag_parsing(self):
        cfg = config_from_args(
            ["--model", "kuramoto", "--d", "4", "--levels", "1,2x3",
             "--runs", "5", "--seed", "9", "--threads", "2"]
        )
        assert cfg.model == "kuramoto"
        assert cfg.d == 4
        assert list(cfg.levels) == [(1, 1), (2, 3)]
        assert (cfg.runs, cfg.seed, cfg.threads) == (5, 9, 2)

    def test_config_file_with_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": "ou", "d": 6, "runs": 4, "levels": [1, 2]}))
        cfg = config_from_args(["--config", str(path), "--d", "3"])
        assert cfg.model == "ou"
        assert cfg.d == 3
        assert cfg.runs == 4
        assert list(cfg.levels) == [(1, 1), (2, 2)]

    def test_end_to_end(self, tmp_path, capsys):
        rc = main(
            ["--model", "ou", "--d", "2", "--levels", "1,2", "--runs", "2",
             "--seed", "2", "--out", str(tmp_path), "--format", "csv"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("l2_error=") == 2
        text = (tmp_path / "results.csv").read_text()
        assert text.startswith(CSV_HEADER)

    def test_desk_cap_exit_code(self, capsys):
        rc = main(["--model", "ou", "--d", "2", "--levels", "5", "--runs", "1"])
        assert rc == 2
        assert "desk-scale caps" in capsys.readouterr().err
