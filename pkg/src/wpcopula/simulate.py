"""Synthetic models and the Monte Carlo level/power harness.

Four generators share the scaffolding X ~ N(0, I_d) with coefficient
vectors drawn once per experiment from [0, 1]^d:

* ``linear``            Y_j = X'b_j + e_j, Gaussian noise pair with
                        covariance ``a`` (conditional independence iff a=0)
* ``disturbed_linear``  adds c * |X| to the second response
* ``latent_cause``      X -> Y1 -> Y2 chain with edge weight ``a`` (d=1)
* ``post_nonlinear``    the linear pair pushed through z -> z^3

The harness sweeps one parameter, runs independent generate/test trials
per grid value with per-trial derived streams, and reports rejection
frequencies with binomial standard errors.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from .bootstrap import BootstrapConfig, run_test
from .data import Dataset
from .margins import CvConfig
from .copula import KernelSpec
from .util import STREAM_BETA, STREAM_TRIAL, child_seed, resolve_threads, spawn_rng

MODELS = ("linear", "disturbed_linear", "latent_cause", "post_nonlinear")
SWEEPABLE = ("a", "c", "n", "d")

# Noise-covariance models need |a| < 1 to stay a valid correlation.
_COV_MODELS = ("linear", "disturbed_linear", "post_nonlinear")


@dataclass(frozen=True)
class SimSpec:
    """One synthetic-model configuration.

    ``beta1``/``beta2`` may be preset; when None they are drawn uniformly
    on [0, 1]^d from a dedicated stream of ``seed``, so equal specs always
    generate identical data.
    """

    model: str
    n: int
    d: int = 1
    a: float = 0.0
    c: float = 0.0
    beta1: tuple[float, ...] | None = None
    beta2: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.d < 1:
            raise ValueError(f"d must be at least 1, got {self.d}")
        if self.a < 0 or self.c < 0:
            raise ValueError("dependence parameters a and c must be nonnegative")
        if self.model in _COV_MODELS and not abs(self.a) < 1:
            raise ValueError(f"{self.model} needs |a| < 1, got a={self.a}")
        if self.model == "latent_cause" and self.d != 1:
            raise ValueError("latent_cause is univariate; set d=1")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if b is not None:
                b = tuple(float(v) for v in np.atleast_1d(b))
                if len(b) != self.d:
                    raise ValueError(f"{name} must have length d={self.d}, got {len(b)}")
                object.__setattr__(self, name, b)


def _resolved_betas(spec: SimSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.beta1 is not None and spec.beta2 is not None:
        return np.asarray(spec.beta1), np.asarray(spec.beta2)
    rng = spawn_rng(spec.seed, STREAM_BETA)
    b1 = rng.uniform(0.0, 1.0, spec.d)
    b2 = rng.uniform(0.0, 1.0, spec.d)
    return (np.asarray(spec.beta1) if spec.beta1 is not None else b1,
            np.asarray(spec.beta2) if spec.beta2 is not None else b2)


def _linear_parts(spec: SimSpec, rng: np.random.Generator):
    # Draw order (x, e1, eta) is part of the reproducibility contract.
    b1, b2 = _resolved_betas(spec)
    x = rng.standard_normal((spec.n, spec.d))
    e1 = rng.standard_normal(spec.n)
    eta = rng.standard_normal(spec.n)
    e2 = spec.a * e1 + np.sqrt(1.0 - spec.a**2) * eta
    return x, x @ b1 + e1, x @ b2 + e2


def gen_linear(spec: SimSpec, rng: np.random.Generator) -> Dataset:
    """Linear-Gaussian pair; conditional independence holds iff a = 0."""
    x, y1, y2 = _linear_parts(spec, rng)
    return Dataset(x, y1, y2)


def gen_disturbed_linear(spec: SimSpec, rng: np.random.Generator) -> Dataset:
    """Linear model with a c * |X| bump on the second response."""
    x, y1, y2 = _linear_parts(spec, rng)
    if spec.c != 0.0:
        y2 = y2 + spec.c * np.linalg.norm(x, axis=1)
    return Dataset(x, y1, y2)


def gen_latent_cause(spec: SimSpec, rng: np.random.Generator) -> Dataset:
    """Chain X -> Y1 and X, Y1 -> Y2 with direct-edge weight a."""
    x = rng.standard_normal(spec.n)
    y1 = x + rng.standard_normal(spec.n)
    y2 = x + spec.a * y1 + rng.standard_normal(spec.n)
    return Dataset(x[:, None], y1, y2)


def gen_post_nonlinear(spec: SimSpec, rng: np.random.Generator) -> Dataset:
    """Linear-Gaussian pair observed through the monotone map z -> z^3."""
    x, z1, z2 = _linear_parts(spec, rng)
    return Dataset(x, z1**3, z2**3)


_GENERATORS = {
    "linear": gen_linear,
    "disturbed_linear": gen_disturbed_linear,
    "latent_cause": gen_latent_cause,
    "post_nonlinear": gen_post_nonlinear,
}


def generate(spec: SimSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Draw one dataset from the spec (fresh stream from spec.seed if no rng)."""
    if rng is None:
        rng = spawn_rng(spec.seed)
    return _GENERATORS[spec.model](spec, rng)


def roc_auc(h0_scores, h1_scores) -> float:
    """Mann–Whitney AUC of alternative scores against null scores.

    Midranks handle ties, so identical score distributions give 0.5.
    """
    h0 = np.asarray(h0_scores, dtype=np.float64)
    h1 = np.asarray(h1_scores, dtype=np.float64)
    if h0.size == 0 or h1.size == 0:
        raise ValueError("both score vectors must be nonempty")
    ranks = rankdata(np.concatenate([h0, h1]))
    r1 = float(ranks[h0.size:].sum())
    return (r1 - h1.size * (h1.size + 1) / 2.0) / (h0.size * h1.size)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-grid-cell summaries of one sweep."""

    param: str
    values: tuple
    freq: tuple
    se: tuple
    mean_p: tuple
    auc: tuple
    trials: int
    wall_time: float
    spec: SimSpec

    CSV_COLUMNS = ("param", "value", "freq", "se", "mean_p", "auc", "trials")

    def rows(self):
        for i, v in enumerate(self.values):
            yield {
                "param": self.param,
                "value": v,
                "freq": self.freq[i],
                "se": self.se[i],
                "mean_p": self.mean_p[i],
                "auc": self.auc[i],
                "trials": self.trials,
            }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            if row["auc"] is None:
                row["auc"] = ""
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "param": self.param,
            "model": self.spec.model,
            "n": self.spec.n,
            "d": self.spec.d,
            "seed": self.spec.seed,
            "trials": self.trials,
            "wall_time_s": self.wall_time,
            "cells": list(self.rows()),
        }
        return json.dumps(payload, indent=2) + "\n"


def run_experiment(
    base: SimSpec,
    param: str,
    values,
    trials: int,
    *,
    margin: str = "knn",
    k=None,
    cv: CvConfig | None = None,
    kernel: KernelSpec | None = None,
    n_boot: int = 200,
    alpha: float = 0.05,
    refit_margins: bool = True,
    threads: int | None = None,
    cost_ceiling: float = 1e11,
    force: bool = False,
    progress=None,
) -> ExperimentReport:
    """Sweep one parameter, running independent generate/test trials per value.

    Trial (value_index, t) draws its dataset and its test seed from
    dedicated streams of the experiment seed, so the report is
    reproducible cell by cell and independent of the worker count.
    ``progress`` (if given) receives one line per finished grid cell.
    """
    if param not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param!r}; choose from {SWEEPABLE}")
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    values = list(values)
    if not values:
        raise ValueError("need at least one sweep value")
    specs = [replace(base, **{param: type(getattr(base, param))(v)}) for v in values]
    worst = max(s.n for s in specs)
    cost = trials * n_boot * float(worst) ** 2
    if cost > cost_ceiling and not force:
        raise ValueError(
            f"trials * B * n^2 = {cost:.3g} exceeds the ceiling {cost_ceiling:.3g}; "
            "pass force=True (CLI: --force) to run anyway"
        )

    # Coefficients are fixed across the whole experiment; sweeping d forces
    # a per-cell redraw since the vector length changes.
    if param == "d":
        specs = [replace(s, beta1=None, beta2=None, seed=child_seed(base.seed, STREAM_BETA, vi))
                 if s.beta1 is None else s
                 for vi, s in enumerate(specs)]
    else:
        b1, b2 = _resolved_betas(base)
        specs = [replace(s, beta1=tuple(b1), beta2=tuple(b2)) for s in specs]

    n_workers = resolve_threads(threads)
    start = time.perf_counter()

    def one_trial(args) -> float:
        vi, t = args
        spec_v = specs[vi]
        rng = spawn_rng(base.seed, STREAM_TRIAL, vi, t, 0)
        ds = generate(spec_v, rng)
        outcome = run_test(
            ds,
            margin,
            k=k,
            cv=cv,
            kernel=kernel,
            cfg=BootstrapConfig(
                n_boot=n_boot,
                alpha=alpha,
                seed=child_seed(base.seed, STREAM_TRIAL, vi, t, 1),
                refit_margins=refit_margins,
            ),
            threads=1,
            force=True,  # guarded above at experiment granularity
        )
        return outcome.p_value

    pvals = np.empty((len(values), trials), dtype=np.float64)
    for vi in range(len(values)):
        jobs = [(vi, t) for t in range(trials)]
        if n_workers == 1:
            results = [one_trial(j) for j in jobs]
        else:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(one_trial, jobs))
        pvals[vi] = results
        if progress is not None:
            rejected = int(np.count_nonzero(pvals[vi] <= alpha))
            progress(
                f"{param}={values[vi]}: {rejected}/{trials} rejected "
                f"(freq {rejected / trials:.3f})"
            )

    reject = pvals <= alpha
    freq = reject.mean(axis=1)
    se = np.sqrt(freq * (1.0 - freq) / trials)
    scores = 1.0 - pvals

    # AUC against the null cell, when the sweep includes one (a=0 or c=0).
    auc: list[float | None] = [None] * len(values)
    if param in ("a", "c") and min(values) == 0:
        null_vi = values.index(min(values))
        for vi in range(len(values)):
            auc[vi] = roc_auc(scores[null_vi], scores[vi])

    return ExperimentReport(
        param=param,
        values=tuple(values),
        freq=tuple(float(f) for f in freq),
        se=tuple(float(s) for s in se),
        mean_p=tuple(float(m) for m in pvals.mean(axis=1)),
        auc=tuple(auc),
        trials=trials,
        wall_time=time.perf_counter() - start,
        spec=base,
    )
