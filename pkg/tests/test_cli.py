import csv
import io
import json

import numpy as np
import pytest
from click.testing import CliRunner

from wpcopula.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_xyy(path, n=40, d=1, seed=0, header=None):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    y1 = x[:, 0] + rng.standard_normal(n)
    y2 = x[:, 0] + rng.standard_normal(n)
    cols = header or [f"x{j + 1}" for j in range(d)] + ["y1", "y2"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(n):
            w.writerow(list(x[i]) + [y1[i], y2[i]])
    return path


def test_cmd_test_json_schema(runner, tmp_path):
    path = write_xyy(tmp_path / "d.csv")
    result = runner.invoke(
        main, ["test", str(path), "--margin", "lr", "--B", "25", "--seed", "3"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert list(payload) == [
        "statistic", "p_value", "quantile", "reject", "alpha", "B", "k_selected", "seed",
    ]
    assert payload["B"] == 25 and payload["seed"] == 3
    assert payload["k_selected"] is None


def test_cmd_test_deterministic(runner, tmp_path):
    path = write_xyy(tmp_path / "d.csv")
    args = ["test", str(path), "--margin", "knn", "--k", "8", "--B", "20", "--seed", "1"]
    r1 = runner.invoke(main, args + ["--threads", "1"])
    r2 = runner.invoke(main, args + ["--threads", "3"])
    assert r1.exit_code == 0 and r1.output == r2.output


def test_cmd_test_single_covariate_schema_inferred(runner, tmp_path):
    path = write_xyy(tmp_path / "d.csv", d=1, header=["x1", "y1", "y2"])
    result = runner.invoke(main, ["test", str(path), "--margin", "lr", "--B", "10"])
    assert result.exit_code == 0


class TestInputErrors:
    def test_too_few_rows(self, runner, tmp_path):
        path = write_xyy(tmp_path / "d.csv", n=3)
        result = runner.invoke(main, ["test", str(path)])
        assert result.exit_code == 2
        assert "n too small" in result.output

    def test_missing_column(self, runner, tmp_path):
        path = write_xyy(tmp_path / "d.csv", header=["x1", "y1", "zz"])
        result = runner.invoke(main, ["test", str(path)])
        assert result.exit_code == 2
        assert "zz" in result.output

    def test_non_numeric_cell_names_position(self, runner, tmp_path):
        path = tmp_path / "d.csv"
        write_xyy(path, n=12)
        lines = path.read_text().splitlines()
        parts = lines[5].split(",")
        parts[1] = "oops"
        lines[5] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["test", str(path)])
        assert result.exit_code == 2
        assert "'oops'" in result.output and "line 6" in result.output
        assert "y1" in result.output

    def test_gapped_covariate_names(self, runner, tmp_path):
        path = write_xyy(tmp_path / "d.csv", d=2, header=["x1", "x3", "y1", "y2"])
        result = runner.invoke(main, ["test", str(path)])
        assert result.exit_code == 2
        assert "x1..xd" in result.output

    def test_unknown_model_lists_choices(self, runner):
        result = runner.invoke(main, ["simulate", "--model", "foo", "--n", "100"])
        assert result.exit_code == 2
        assert "latent_cause" in result.output

    def test_missing_file(self, runner):
        result = runner.invoke(main, ["test", "/nonexistent/x.csv"])
        assert result.exit_code == 2

    def test_bad_k_format(self, runner, tmp_path):
        path = write_xyy(tmp_path / "d.csv")
        result = runner.invoke(main, ["test", str(path), "--k", "a,b"])
        assert result.exit_code == 2
        assert "--k" in result.output

    def test_cost_guard_exit_2(self, runner, tmp_path):
        path = write_xyy(tmp_path / "d.csv", n=1100)
        result = runner.invoke(
            main, ["test", str(path), "--margin", "lr", "--B", "200000"]
        )
        assert result.exit_code == 2
        assert "--force" in result.output


def test_cmd_simulate_outputs_outcome(runner):
    result = runner.invoke(
        main,
        ["simulate", "--model", "latent_cause", "--a", "0", "--n", "80",
         "--margin", "lr", "--B", "15", "--seed", "2"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert set(payload) >= {"statistic", "p_value", "reject"}


def test_cmd_sweep_csv_grid(runner, tmp_path):
    out = tmp_path / "report.csv"
    result = runner.invoke(
        main,
        ["sweep", "--model", "linear", "--param", "a", "--values", "0,0.15,0.3",
         "--trials", "3", "--n", "60", "--margin", "lr", "--B", "15",
         "--seed", "4", "--output", str(out)],
    )
    assert result.exit_code == 0, result.output
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["param", "value", "freq", "se", "mean_p", "auc", "trials"]
    assert len(rows) == 4
    assert [r[1] for r in rows[1:]] == ["0.0", "0.15", "0.3"]


def test_cmd_sweep_json(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        main,
        ["sweep", "--model", "linear", "--param", "n", "--values", "50,60",
         "--trials", "2", "--margin", "lr", "--B", "10", "--format", "json",
         "--output", str(out)],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert [c["value"] for c in payload["cells"]] == [50.0, 60.0]


def write_matrix(path, n=40, p=3, seed=0, collider=False):
    rng = np.random.default_rng(seed)
    cols = rng.standard_normal((n, p))
    if collider:
        cols[:, 2] = cols[:, 0] + cols[:, 1] + rng.standard_normal(n)
    names = [f"v{j}" for j in range(p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in cols:
            w.writerow(list(row))
    return path, names


class TestCiMatrix:
    def test_symmetric_with_empty_diagonal(self, runner, tmp_path):
        path, names = write_matrix(tmp_path / "m.csv", n=40, p=3, seed=1)
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["ci-matrix", str(path), "--B", "15", "--k", "8", "--seed", "5",
             "--output", str(out)],
        )
        assert result.exit_code == 0, result.output
        rows = list(csv.reader(io.StringIO((tmp_path / "out.pvalues.csv").read_text())))
        assert rows[0] == [""] + names
        for i in range(3):
            assert rows[i + 1][i + 1] == ""  # empty diagonal
            for j in range(3):
                if i != j:
                    assert rows[i + 1][j + 1] == rows[j + 1][i + 1]
        adj = list(csv.reader(io.StringIO((tmp_path / "out.adjacency.csv").read_text())))
        for i in range(3):
            for j in range(3):
                if i != j:
                    assert adj[i + 1][j + 1] in ("0", "1")
                    assert adj[i + 1][j + 1] == adj[j + 1][i + 1]

    def test_json_format(self, runner, tmp_path):
        path, names = write_matrix(tmp_path / "m.csv", n=40, p=3, seed=2)
        result = runner.invoke(
            main,
            ["ci-matrix", str(path), "--B", "12", "--k", "6", "--seed", "6",
             "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["columns"] == names
        assert payload["p_values"][0][0] is None
        assert payload["p_values"][0][1] == payload["p_values"][1][0]

    def test_collider_conditioning_detected(self, runner, tmp_path):
        # v2 = v0 + v1 + noise: conditioning on the sum induces dependence
        path, _ = write_matrix(tmp_path / "m.csv", n=300, p=3, seed=3, collider=True)
        result = runner.invoke(
            main,
            ["ci-matrix", str(path), "--B", "60", "--seed", "7", "--format", "json",
             "--threads", "2"],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["adjacency"][0][1] == 1

    def test_needs_three_columns(self, runner, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("a,b\n" + "\n".join("1,2" for _ in range(20)) + "\n")
        result = runner.invoke(main, ["ci-matrix", str(path)])
        assert result.exit_code == 2
        assert "3 columns" in result.output

    def test_deterministic(self, runner, tmp_path):
        path, _ = write_matrix(tmp_path / "m.csv", n=40, p=3, seed=4)
        args = ["ci-matrix", str(path), "--B", "10", "--k", "5", "--seed", "8",
                "--format", "json"]
        r1 = runner.invoke(main, args + ["--threads", "1"])
        r2 = runner.invoke(main, args + ["--threads", "3"])
        assert r1.exit_code == 0 and r1.output == r2.output
