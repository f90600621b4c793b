"""Reproducible Monte Carlo experiments and their CSV output.

Every trial draws from its own stream keyed by (master seed, experiment,
n, trial), so results do not depend on the number of worker threads.
Aggregates are summed in trial order.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.stats import poisson

from .bodies import ConvexBody, body_volume, grid_cell_counts, parse_body
from .degree import (
    _degrees_of_subsets,
    all_subset_degrees,
    degree_at_most,
    degree_lower_bound_local,
    exact_cap,
)
from .functionals import clustered_subsets, n_t, pair_count_within
from .geometry import PointSet, unit_ball_volume

CSV_COLUMNS = [
    "experiment", "M", "n", "k", "T", "estimate", "stderr",
    "bound_lower", "bound_upper", "trials", "seed", "elapsed_ms",
]

MECKE_FUNCTIONS = ("one", "zero", "nt-indicator", "pairwise-cutoff")


@dataclass
class ExperimentConfig:
    body: Any = "unit-square"
    dim: int = 2
    n_grid: list = field(default_factory=lambda: [100])
    trials: int = 100
    k_list: list = field(default_factory=lambda: [1])
    t_rule: Any = "default"
    rho: float | None = None
    k_rule: str = "default"
    degree_mode: str = "exact"
    seed: int = 0
    out: str | None = None
    threshold: int = 5
    mecke_f: str = "nt-indicator"
    mecke_samples: int = 1_000_000
    density: str = "uniform"
    threads: int = 1

    def __post_init__(self):
        self.n_grid = [int(n) for n in np.atleast_1d(self.n_grid)]
        self.k_list = [int(k) for k in np.atleast_1d(self.k_list)]
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if any(n < 0 for n in self.n_grid):
            raise ValueError("n_grid entries must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(k < 0 for k in self.k_list):
            raise ValueError("k_list entries must be nonnegative")
        if self.t_rule != "default" and not float(self.t_rule) > 0:
            raise ValueError("t_rule must be 'default' or a positive number")
        if self.k_rule != "default":
            raise ValueError("k_rule must be 'default'")
        if self.degree_mode not in ("exact", "local"):
            raise ValueError("degree_mode must be 'exact' or 'local'")
        if self.mecke_f not in MECKE_FUNCTIONS:
            raise ValueError(f"mecke_f must be one of {MECKE_FUNCTIONS}")
        if self.density != "uniform":
            raise ValueError("only the uniform density is implemented")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        self._body = parse_body(self.body, self.dim)

    @property
    def convex_body(self) -> ConvexBody:
        return self._body

    def T(self, n: int) -> float:
        """Cluster radius; the default rule is n^(-1/(M-1))."""
        if self.t_rule == "default":
            return float(max(n, 1)) ** (-1.0 / (self.dim - 1))
        return float(self.t_rule)

    def K(self, n: int) -> float:
        return 2 * (self.dim + 1) * math.log(n)

    def rho_value(self) -> float:
        return 0.5 * self._body.inradius if self.rho is None else float(self.rho)

    def require_degree_sizes(self):
        bad = [n for n in self.n_grid if n < self.dim + 1]
        if bad:
            raise ValueError(f"degree experiments need n >= M+1 = {self.dim + 1}, got {bad}")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        if str(path).endswith(".json"):
            data = json.loads(text)
        else:
            import yaml

            data = yaml.safe_load(text)
        return cls.from_mapping(data or {})

    def replace(self, **changes) -> "ExperimentConfig":
        values = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        values.update(changes)
        return ExperimentConfig(**values)


@dataclass
class ResultRow:
    experiment: str
    M: int
    n: int
    k: int
    T: float | None
    estimate: float
    stderr: float
    bound_lower: float | None
    bound_upper: float | None
    trials: int
    seed: int
    elapsed_ms: float = field(default=0.0, compare=False)
    extras: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def write_csv(rows: list[ResultRow], path) -> None:
    """Write rows with the fixed column set plus a trailing ``extras`` column.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(rows, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(rows, fh)


def _write_rows(rows, fh) -> None:
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS + ["extras"])
    for r in rows:
        extras = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(r.extras.items()))
        w.writerow([r.experiment] + [_fmt(getattr(r, c)) for c in CSV_COLUMNS[1:]] + [extras])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- helpers

_EXPERIMENT_CODES = {
    "expected-n-t": 1, "conditional-degree": 2, "moment-deg": 3, "markov-tail": 4,
    "poisson-grid": 5, "convergence-probe": 6, "mecke": 7,
}


def trial_rng(seed: int, experiment: str, n: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_EXPERIMENT_CODES[experiment], n, trial))
    return np.random.Generator(np.random.PCG64(ss))


def run_trials(fn: Callable[[int], Any], trials: int, threads: int = 1) -> list:
    """Evaluate fn(0..trials-1), results in trial order whatever the thread count."""
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0:
        return math.nan, math.nan
    mean = math.fsum(v) / len(v)
    if len(v) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2) / (len(v) - 1)
    return mean, math.sqrt(var / len(v))


def _sample(cfg: ExperimentConfig, n: int, rng) -> np.ndarray:
    return np.ascontiguousarray(cfg.convex_body.sample_array(n, rng))


def _nt_fast(points: np.ndarray, T: float) -> int:
    if points.shape[1] == 2:
        return pair_count_within(PointSet(points, check=False), T)
    return n_t(PointSet(points, check=False), T)


def expected_nt_bracket(m: int, n: int, T: float, vol: float) -> tuple[float, float]:
    """Asymptotic lower/upper values of E[N_T]; vol enters as Vol^(1-M)."""
    base = unit_ball_volume(m) ** (m - 1) * math.comb(n, m) * T ** (m * (m - 1)) * vol ** (1 - m)
    return base, m * base


def conditional_degree_bound(m: int, n: int, k: int, rho: float, vol: float) -> float:
    """n^k (rho^(M-1) M!/2^(M-1) (1 - exp(-2^(M-1) rho / (M! Vol))))^k."""
    c = rho ** (m - 1) * math.factorial(m) / 2 ** (m - 1)
    c *= 1.0 - math.exp(-(2 ** (m - 1)) * rho / (math.factorial(m) * vol))
    return float(n) ** k * c ** k


def pinned_points(cfg: ExperimentConfig, n: int) -> np.ndarray:
    """Anchor at the body center plus offsets n^(-1/(M-1))/2 along the first M-1 axes."""
    body = cfg.convex_body
    m = cfg.dim
    rho = cfg.rho_value()
    step = 0.5 * float(n) ** (-1.0 / (m - 1))
    if step > rho:
        raise ValueError(f"pinned offset {step:g} exceeds rho = {rho:g}; increase n or rho")
    pts = np.tile(body.center, (m, 1)).astype(np.float64)
    for j in range(1, m):
        pts[j, j - 1] += step
    if not np.all(body.contains(pts)):
        raise ValueError("pinned points lie outside W")
    return pts


# ---------------------------------------------------------------- experiments

def estimate_expected_n_t(cfg: ExperimentConfig) -> list[ResultRow]:
    name = "expected-n-t"
    m = cfg.dim
    vol = body_volume(cfg.convex_body)
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        T = cfg.T(n)

        def trial(t, n=n, T=T):
            return _nt_fast(_sample(cfg, n, trial_rng(cfg.seed, name, n, t)), T)

        values = run_trials(trial, cfg.trials, cfg.threads)
        mean, se = mean_stderr(values)
        lo, hi = expected_nt_bracket(m, n, T, vol)
        rows.append(ResultRow(
            name, m, n, 0, T, mean, se, lo, hi, cfg.trials, cfg.seed,
            1000 * (time.perf_counter() - t0),
            {"kappa_M": unit_ball_volume(m), "binom_n_M": math.comb(n, m), "vol": vol},
        ))
    return rows


def conditional_degree_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Mean deg(pinned subset; xi_{n-M} + pinned)^k against the closed-form lower bound."""
    name = "conditional-degree"
    cfg.require_degree_sizes()
    m = cfg.dim
    vol = body_volume(cfg.convex_body)
    rho = cfg.rho_value()
    subset = np.arange(m, dtype=np.int64)[None, :]
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        pinned = pinned_points(cfg, n)

        def trial(t, n=n, pinned=pinned):
            pts = np.vstack([pinned, _sample(cfg, n - m, trial_rng(cfg.seed, name, n, t))])
            return int(_degrees_of_subsets(pts, subset)[0])

        degs = run_trials(trial, cfg.trials, cfg.threads)
        if max(degs) > n - m:
            raise AssertionError("subset degree exceeded n - M")
        elapsed = 1000 * (time.perf_counter() - t0)
        for k in cfg.k_list:
            mean, se = mean_stderr([float(d) ** k for d in degs])
            bound = conditional_degree_bound(m, n, k, rho, vol)
            rows.append(ResultRow(
                name, m, n, k, cfg.T(n), mean, se, bound, None, cfg.trials, cfg.seed, elapsed,
                {"rho": rho, "vol": vol, "max_deg": max(degs),
                 "below_bound": bool(mean < bound - 3 * se)},
            ))
    return rows


def _moment_trial(cfg: ExperimentConfig, points: np.ndarray, T: float, mode: str) -> dict:
    X = PointSet(points, check=False)
    m = cfg.dim
    if mode == "exact":
        deg = int(all_subset_degrees(X)[1].max())
    else:
        deg = degree_lower_bound_local(X, T).degree
    # per-trial consistency of N_T, F_T^(k) and the two degree modes
    clustered = clustered_subsets(X, T)
    nt = len(clustered)
    cdeg = _degrees_of_subsets(np.ascontiguousarray(points), clustered)
    violations = 0
    for k in cfg.k_list:
        f = sum(int(d) ** k for d in cdeg)
        if f > nt * deg ** k:
            violations += 1
    local = int(cdeg.max()) if len(cdeg) else 0
    if local > deg:
        violations += 1
    if deg > len(points) - m:
        violations += 1
    return {"deg": deg, "nt": nt, "local": local, "violations": violations}


def estimate_moment_deg(cfg: ExperimentConfig) -> list[ResultRow]:
    """Moments E[deg(xi_n)^k] with the r(n) = mean*ln(n)/n diagnostic and Jensen baseline."""
    name = "moment-deg"
    cfg.require_degree_sizes()
    m = cfg.dim
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        T = cfg.T(n)
        mode = "exact" if cfg.degree_mode == "exact" and n <= exact_cap(m) else "local"

        def trial(t, n=n, T=T, mode=mode):
            return _moment_trial(cfg, _sample(cfg, n, trial_rng(cfg.seed, name, n, t)), T, mode)

        res = run_trials(trial, cfg.trials, cfg.threads)
        degs = [r["deg"] for r in res]
        mean_deg, se_deg = mean_stderr(degs)
        elapsed = 1000 * (time.perf_counter() - t0)
        extras_common = {
            "mode": mode,
            "local_lower_bound_curve": mode == "local",
            "mean_deg": mean_deg,
            "stderr_deg": se_deg,
            "r_n": mean_deg * math.log(n) / n,
            "consistency_violations": sum(r["violations"] for r in res),
            "mean_nt": mean_stderr([r["nt"] for r in res])[0],
        }
        for k in cfg.k_list:
            mean, se = mean_stderr([float(d) ** k for d in degs])
            rows.append(ResultRow(
                name, m, n, k, T, mean, se, None, None, cfg.trials, cfg.seed, elapsed,
                dict(extras_common, jensen_baseline=mean_deg ** k),
            ))
    return rows


def markov_tail_check(cfg: ExperimentConfig) -> list[ResultRow]:
    """Empirical P(N_2T >= ln n) against the Markov bound E[N_2T]/ln n."""
    name = "markov-tail"
    m = cfg.dim
    rows = []
    for n in cfg.n_grid:
        if n < 2:
            raise ValueError("markov-tail needs n >= 2")
        t0 = time.perf_counter()
        T = cfg.T(n)
        ln_n = math.log(n)

        def trial(t, n=n, T=T):
            pts = _sample(cfg, n, trial_rng(cfg.seed, name, n, t))
            return _nt_fast(pts, T), _nt_fast(pts, 2 * T)

        res = run_trials(trial, cfg.trials, cfg.threads)
        n1 = [a for a, _ in res]
        n2 = [b for _, b in res]
        p, _ = mean_stderr([float(b >= ln_n) for b in n2])
        se_p = math.sqrt(p * (1 - p) / cfg.trials)
        mean2, se2 = mean_stderr(n2)
        rows.append(ResultRow(
            name, m, n, 0, T, p, se_p, None, mean2 / ln_n, cfg.trials, cfg.seed,
            1000 * (time.perf_counter() - t0),
            {"K_n": cfg.K(n), "ln_n": ln_n, "mean_N2T": mean2, "stderr_N2T": se2,
             "bound_stderr": se2 / ln_n, "combined_stderr": math.hypot(se_p, se2 / ln_n),
             "mean_NT": mean_stderr(n1)[0],
             "monotonicity_violations": sum(a > b for a, b in res),
             "kappa_M": unit_ball_volume(m), "binom_n_M": math.comb(n, m)},
        ))
    return rows


def poisson_tv(counts) -> tuple[np.ndarray, np.ndarray, float]:
    """Empirical pmf of counts, the Poisson(1) pmf on the same support, and their TV distance."""
    counts = np.asarray(counts, dtype=np.int64)
    top = int(counts.max()) if len(counts) else 0
    emp = np.bincount(counts, minlength=top + 1) / max(len(counts), 1)
    ref = poisson.pmf(np.arange(top + 1), 1.0)
    tail = float(poisson.sf(top, 1.0))
    tv = 0.5 * (float(np.abs(emp - ref).sum()) + tail)
    return emp, ref, tv


def poisson_grid_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Cell counts on the mesh (Vol/n)^(1/M) grid against Poisson(1)."""
    name = "poisson-grid"
    body = cfg.convex_body
    m = cfg.dim
    vol = body_volume(body)
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        mesh = (vol / max(n, 1)) ** (1.0 / m)

        def trial(t, n=n, mesh=mesh):
            return grid_cell_counts(_sample(cfg, n, trial_rng(cfg.seed, name, n, t)), body, mesh)

        counts = np.concatenate(run_trials(trial, cfg.trials, cfg.threads))
        cells = len(counts) // cfg.trials
        if cells < 50:
            warnings.warn(f"only {cells} grid cells lie inside W at n = {n}; increase n", RuntimeWarning)
        emp, ref, tv = poisson_tv(counts)
        mean, se = mean_stderr(counts)
        elapsed = 1000 * (time.perf_counter() - t0)
        common = {"mesh": mesh, "cells_per_trial": cells}
        rows.append(ResultRow(f"{name}/tv", m, n, 0, None, tv, 0.0, None, None,
                              cfg.trials, cfg.seed, elapsed, dict(common)))
        rows.append(ResultRow(f"{name}/mean", m, n, 0, None, mean, se, 1.0, 1.0,
                              cfg.trials, cfg.seed, elapsed, dict(common)))
        for j, (e, r) in enumerate(zip(emp, ref)):
            rows.append(ResultRow(f"{name}/pmf", m, n, j, None, float(e), 0.0, float(r), float(r),
                                  cfg.trials, cfg.seed, elapsed, dict(common)))
    return rows


def convergence_probe(cfg: ExperimentConfig, threshold: int | None = None) -> list[ResultRow]:
    """Empirical P(deg(xi_n) <= t) along the n-grid (exact mode)."""
    name = "convergence-probe"
    cfg.require_degree_sizes()
    t_val = cfg.threshold if threshold is None else int(threshold)
    m = cfg.dim
    rows = []
    for n in cfg.n_grid:
        if n > exact_cap(m):
            raise ValueError(f"convergence probe runs in exact mode; n = {n} exceeds the cap")
        t0 = time.perf_counter()

        def trial(t, n=n):
            pts = _sample(cfg, n, trial_rng(cfg.seed, name, n, t))
            return degree_at_most(PointSet(pts, check=False), t_val)

        hits = run_trials(trial, cfg.trials, cfg.threads)
        p = sum(hits) / cfg.trials
        rows.append(ResultRow(
            name, m, n, t_val, None, p, math.sqrt(p * (1 - p) / cfg.trials), None, None,
            cfg.trials, cfg.seed, 1000 * (time.perf_counter() - t0), {"threshold": t_val},
        ))
    return rows


def _mecke_f_tuples(f: str, x: np.ndarray, T: float) -> np.ndarray:
    """f evaluated on a batch of M-tuples, x of shape (B, M, M)."""
    b = x.shape[0]
    if f == "one":
        return np.ones(b)
    if f == "zero":
        return np.zeros(b)
    d = np.linalg.norm(x[:, :, None, :] - x[:, None, :, :], axis=-1)
    close = d <= T
    if f == "nt-indicator":
        return np.any(np.all(close, axis=2), axis=1).astype(np.float64)
    return np.all(close, axis=(1, 2)).astype(np.float64)


def _mecke_f_sum(f: str, points: np.ndarray, T: float) -> int:
    m = points.shape[1]
    n = len(points)
    if f == "one":
        return math.comb(n, m)
    if f == "zero":
        return 0
    subsets = clustered_subsets(PointSet(points, check=False), T)
    if f == "nt-indicator":
        return len(subsets)
    pts = points[subsets]
    d = np.linalg.norm(pts[:, :, None, :] - pts[:, None, :, :], axis=-1)
    return int(np.all(d <= T, axis=(1, 2)).sum())


def mecke_check(cfg: ExperimentConfig, f: str | None = None) -> list[ResultRow]:
    """E sum_{M-subsets} f  versus  C(n, M) E f(U_1, ..., U_M), U_i i.i.d. uniform in W."""
    name = "mecke"
    f = cfg.mecke_f if f is None else f
    if f not in MECKE_FUNCTIONS:
        raise ValueError(f"f must be one of {MECKE_FUNCTIONS}")
    m = cfg.dim
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        T = cfg.T(n)

        def trial(t, n=n, T=T):
            return _mecke_f_sum(f, _sample(cfg, n, trial_rng(cfg.seed, name, n, t)), T)

        lhs, lhs_se = mean_stderr(run_trials(trial, cfg.trials, cfg.threads))
        # the right-hand side uses a separate stream (trial index past the LHS range)
        rng = trial_rng(cfg.seed, name, n, cfg.trials + 1)
        vals = []
        left = cfg.mecke_samples
        while left > 0:
            b = min(left, 100_000)
            x = cfg.convex_body.sample_array(b * m, rng).reshape(b, m, m)
            vals.append(_mecke_f_tuples(f, x, T))
            left -= b
        vals = np.concatenate(vals)
        binom = math.comb(n, m)
        mu = float(vals.mean())
        rhs = binom * mu
        rhs_se = binom * (float(vals.std(ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0)
        combined = math.hypot(lhs_se, rhs_se)
        elapsed = 1000 * (time.perf_counter() - t0)
        extras = {"f": f, "combined_stderr": combined, "binom_n_M": binom}
        rows.append(ResultRow(f"{name}/lhs", m, n, 0, T, lhs, lhs_se, None, None,
                              cfg.trials, cfg.seed, elapsed, dict(extras)))
        rows.append(ResultRow(f"{name}/rhs", m, n, 0, T, rhs, rhs_se, None, None,
                              cfg.mecke_samples, cfg.seed, elapsed, dict(extras)))
    return rows


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], list[ResultRow]]] = {
    "expected-n-t": estimate_expected_n_t,
    "conditional-degree": conditional_degree_experiment,
    "moment-deg": estimate_moment_deg,
    "markov-tail": markov_tail_check,
    "poisson-grid": poisson_grid_experiment,
    "convergence-probe": convergence_probe,
    "mecke": mecke_check,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> list[ResultRow]:
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    rows = fn(cfg)
    if cfg.out:
        write_csv(rows, cfg.out)
    return rows
