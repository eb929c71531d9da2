"""Command-line front end.

Subcommands: ``test`` (one dataset from CSV), ``simulate`` (one synthetic
run), ``sweep`` (Monte Carlo level/power grid), ``ci-matrix`` (pairwise
conditional independence decisions between all columns of a CSV).

Exit codes: 0 success, 1 internal error, 2 bad user input.  Every
subcommand is deterministic given --seed, independent of --threads.
"""

from __future__ import annotations

import csv
import functools
import json

import click
import numpy as np

from .bootstrap import BootstrapConfig, run_test
from .data import Dataset
from .margins import CvConfig
from .simulate import MODELS, SWEEPABLE, SimSpec, run_experiment
from .copula import KernelSpec
from .util import STREAM_PAIR, child_seed, resolve_threads

from concurrent.futures import ThreadPoolExecutor


class InputError(click.ClickException):
    exit_code = 2


def _user_errors_exit_2(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return wrapper


def _parse_float(cell: str, line: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise InputError(
            f"non-numeric value {cell!r} at line {line}, column {column}"
        ) from None


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InputError(f"{path}: empty file or missing header")
        header = [h.strip() for h in header]
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: line {reader.line_num} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            rows.append((reader.line_num, row))
    return header, rows


def _read_xyy_csv(path) -> Dataset:
    """CSV with columns x1..xd, y1, y2 (any order) -> Dataset."""
    header, rows = _read_rows(path)
    x_index = {}
    y_index = {}
    for pos, name in enumerate(header):
        if name in ("y1", "y2"):
            y_index[name] = pos
        elif name.startswith("x") and name[1:].isdigit():
            x_index[int(name[1:])] = pos
        else:
            raise InputError(f"{path}: unexpected column {name!r} (want x1..xd, y1, y2)")
    for req in ("y1", "y2"):
        if req not in y_index:
            raise InputError(f"{path}: missing column {req!r}")
    d = len(x_index)
    if d == 0 or sorted(x_index) != list(range(1, d + 1)):
        raise InputError(
            f"{path}: covariate columns must be x1..xd, found {sorted(x_index)}"
        )
    n = len(rows)
    if n < 10:
        raise InputError(f"{path}: n too small, need at least 10 data rows, got {n}")
    x = np.empty((n, d))
    y1 = np.empty(n)
    y2 = np.empty(n)
    for r, (line, row) in enumerate(rows):
        for col in range(1, d + 1):
            x[r, col - 1] = _parse_float(row[x_index[col]], line, f"x{col}")
        y1[r] = _parse_float(row[y_index["y1"]], line, "y1")
        y2[r] = _parse_float(row[y_index["y2"]], line, "y2")
    return Dataset(x, y1, y2)


def _read_matrix_csv(path):
    """CSV of p >= 3 uniquely named numeric columns -> (names, n x p array)."""
    header, rows = _read_rows(path)
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    if len(header) < 3:
        raise InputError(f"{path}: need at least 3 columns, got {len(header)}")
    n = len(rows)
    if n < 10:
        raise InputError(f"{path}: n too small, need at least 10 data rows, got {n}")
    mat = np.empty((n, len(header)))
    for r, (line, row) in enumerate(rows):
        for c, name in enumerate(header):
            mat[r, c] = _parse_float(row[c], line, name)
    return header, mat


def _write_text(path, text: str) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_k(text):
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return int(parts[0])
        if len(parts) == 2:
            return (int(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise InputError(f"--k must be an integer K or a pair K1,K2, got {text!r}")


def _parse_grid(text):
    if text is None:
        return None
    try:
        return tuple(int(p.strip()) for p in text.split(","))
    except ValueError:
        raise InputError(f"--k-grid must be comma-separated integers, got {text!r}") from None


def _test_options(fn):
    """Options shared by every subcommand that runs the test pipeline."""
    opts = [
        click.option("--alpha", type=float, default=0.05, show_default=True,
                     help="Test level."),
        click.option("--B", "n_boot", type=int, default=200, show_default=True,
                     help="Bootstrap replicates."),
        click.option("--k", "k_text", type=str, default=None,
                     help="Fixed neighbor count K or pair K1,K2 (skips cross-validation)."),
        click.option("--cv-folds", type=int, default=5, show_default=True,
                     help="Cross-validation folds for choosing k."),
        click.option("--k-grid", "k_grid_text", type=str, default=None,
                     help="Comma-separated candidate k values for cross-validation."),
        click.option("--kernel-scale", type=float, default=1.0, show_default=True,
                     help="Scale s of the covariate weight exp(-|t|^2/s^2)."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--standardize", is_flag=True, help="Z-score covariate columns first."),
        click.option("--threads", type=int, default=None,
                     help="Worker threads [default: WPCOPULA_THREADS or CPU count]."),
        click.option("--force", is_flag=True, help="Override the B*n^2 cost ceiling."),
        click.option("--output", "output_path", type=click.Path(dir_okay=False),
                     default=None, help="Write results here instead of stdout."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Conditional independence testing via the weighted partial copula."""


@main.command("test")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--margin", type=click.Choice(["knn", "lr"]), default="knn",
              show_default=True, help="Conditional margin estimator.")
@_test_options
@_user_errors_exit_2
def cmd_test(input_path, margin, alpha, n_boot, k_text, cv_folds, k_grid_text,
             kernel_scale, seed, standardize, threads, force, output_path):
    """Test y1 independent of y2 given x1..xd on a CSV dataset.

    The CSV needs a header with columns x1..xd, y1, y2 (d inferred).
    Output is JSON with keys statistic, p_value, quantile, reject, alpha,
    B, k_selected, seed.
    """
    data = _read_xyy_csv(input_path)
    outcome = run_test(
        data,
        margin,
        k=_parse_k(k_text),
        cv=CvConfig(folds=cv_folds, k_grid=_parse_grid(k_grid_text), seed=seed),
        kernel=KernelSpec(scale=kernel_scale),
        cfg=BootstrapConfig(n_boot=n_boot, alpha=alpha, seed=seed),
        threads=threads,
        standardize=standardize,
        force=force,
    )
    _write_text(output_path, json.dumps(outcome.to_json_dict(), indent=2) + "\n")


def _sim_options(fn):
    opts = [
        click.option("--model", type=click.Choice(list(MODELS)), required=True),
        click.option("--n", type=int, default=500, show_default=True),
        click.option("--d", type=int, default=1, show_default=True),
        click.option("--a", type=float, default=0.0, show_default=True,
                     help="Dependence parameter."),
        click.option("--c", type=float, default=0.0, show_default=True,
                     help="Disturbance magnitude (disturbed_linear)."),
        click.option("--margin", type=click.Choice(["knn", "lr"]), default="knn",
                     show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command("simulate")
@_sim_options
@_test_options
@_user_errors_exit_2
def cmd_simulate(model, n, d, a, c, margin, alpha, n_boot, k_text, cv_folds,
                 k_grid_text, kernel_scale, seed, standardize, threads, force,
                 output_path):
    """Generate one synthetic dataset and run the test on it."""
    spec = SimSpec(model=model, n=n, d=d, a=a, c=c, seed=seed)
    from .simulate import generate

    data = generate(spec)
    outcome = run_test(
        data,
        margin,
        k=_parse_k(k_text),
        cv=CvConfig(folds=cv_folds, k_grid=_parse_grid(k_grid_text), seed=seed),
        kernel=KernelSpec(scale=kernel_scale),
        cfg=BootstrapConfig(n_boot=n_boot, alpha=alpha, seed=seed),
        threads=threads,
        standardize=standardize,
        force=force,
    )
    _write_text(output_path, json.dumps(outcome.to_json_dict(), indent=2) + "\n")


@main.command("sweep")
@_sim_options
@click.option("--param", type=click.Choice(list(SWEEPABLE)), required=True,
              help="Parameter to sweep.")
@click.option("--values", "values_text", type=str, required=True,
              help="Comma-separated sweep values.")
@click.option("--trials", type=int, default=200, show_default=True,
              help="Independent generate/test cycles per value.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@_test_options
@_user_errors_exit_2
def cmd_sweep(model, n, d, a, c, margin, param, values_text, trials, fmt, alpha,
              n_boot, k_text, cv_folds, k_grid_text, kernel_scale, seed,
              standardize, threads, force, output_path):
    """Monte Carlo sweep of one parameter; per-cell progress on stderr.

    CSV columns (fixed order): param,value,freq,se,mean_p,auc,trials.
    """
    try:
        values = [float(v) for v in values_text.split(",") if v.strip() != ""]
    except ValueError:
        raise InputError(f"--values must be comma-separated numbers, got {values_text!r}")
    if standardize:
        raise InputError("--standardize is not supported for synthetic sweeps")
    spec = SimSpec(model=model, n=n, d=d, a=a, c=c, seed=seed)
    report = run_experiment(
        spec,
        param,
        values,
        trials,
        margin=margin,
        k=_parse_k(k_text),
        cv=CvConfig(folds=cv_folds, k_grid=_parse_grid(k_grid_text), seed=seed),
        kernel=KernelSpec(scale=kernel_scale),
        n_boot=n_boot,
        alpha=alpha,
        threads=threads,
        force=force,
        progress=lambda line: click.echo(line, err=True),
    )
    _write_text(output_path, report.to_csv() if fmt == "csv" else report.to_json())


def _matrix_csv_text(names, matrix, formatter) -> str:
    lines = ["," + ",".join(names)]
    for i, name in enumerate(names):
        cells = [formatter(i, j) for j in range(len(names))]
        lines.append(name + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


@main.command("ci-matrix")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@_test_options
@_user_errors_exit_2
def cmd_ci_matrix(input_path, fmt, alpha, n_boot, k_text, cv_folds, k_grid_text,
                  kernel_scale, seed, standardize, threads, force, output_path):
    """Pairwise conditional independence map of all CSV columns.

    Every unordered column pair (j, j') is tested for independence given
    the remaining columns, with k-NN margins (k cross-validated unless
    --k is given).  Emits the symmetric p-value matrix and the 0/1
    adjacency (1 = dependence detected) with empty diagonals; CSV output
    writes <output>.pvalues.csv and <output>.adjacency.csv.
    """
    names, mat = _read_matrix_csv(input_path)
    p = len(names)
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    k_fixed = _parse_k(k_text)
    grid = _parse_grid(k_grid_text)

    def one_pair(pair_index: int):
        i, j = pairs[pair_index]
        rest = [c for c in range(p) if c != i and c != j]
        ds = Dataset(mat[:, rest], mat[:, i], mat[:, j])
        pair_seed = child_seed(seed, STREAM_PAIR, pair_index)
        outcome = run_test(
            ds,
            "knn",
            k=k_fixed,
            cv=CvConfig(folds=cv_folds, k_grid=grid, seed=pair_seed),
            kernel=KernelSpec(scale=kernel_scale),
            cfg=BootstrapConfig(n_boot=n_boot, alpha=alpha, seed=pair_seed),
            threads=1,
            standardize=standardize,
            force=force,
        )
        return outcome.p_value, outcome.reject

    n_workers = resolve_threads(threads)
    if n_workers == 1:
        results = [one_pair(pi) for pi in range(len(pairs))]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one_pair, range(len(pairs))))

    pvals = np.full((p, p), np.nan)
    adj = np.zeros((p, p), dtype=np.int64)
    for (i, j), (pv, reject) in zip(pairs, results):
        pvals[i, j] = pvals[j, i] = pv
        adj[i, j] = adj[j, i] = int(reject)

    if fmt == "json":
        payload = {
            "columns": names,
            "alpha": alpha,
            "B": n_boot,
            "seed": seed,
            "p_values": [[None if i == j else float(pvals[i, j]) for j in range(p)]
                         for i in range(p)],
            "adjacency": [[None if i == j else int(adj[i, j]) for j in range(p)]
                          for i in range(p)],
        }
        _write_text(output_path, json.dumps(payload, indent=2) + "\n")
        return
    pv_text = _matrix_csv_text(
        names, pvals, lambda i, j: "" if i == j else repr(float(pvals[i, j]))
    )
    adj_text = _matrix_csv_text(
        names, adj, lambda i, j: "" if i == j else str(int(adj[i, j]))
    )
    if output_path is None:
        click.echo(pv_text, nl=False)
        click.echo(adj_text, nl=False)
    else:
        base = output_path[:-4] if output_path.endswith(".csv") else output_path
        _write_text(base + ".pvalues.csv", pv_text)
        _write_text(base + ".adjacency.csv", adj_text)


if __name__ == "__main__":
    main()
