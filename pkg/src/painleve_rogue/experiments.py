"""Universality runs and Monte-Carlo probes of the good sets.

A universality run compares the rescaled N-soliton profile X -> Psi_N(X, T)
with the model profile Psi(X, T) in the trapezoidal L2 norm, realization by
realization.  Both are computed with the circle Riemann-Hilbert solver: the
finite-N field on the circle of radius 1/length, the model on the unit
circle.  The model profile does not depend on the realization and is cached.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import models
from .errors import DataIOError, RogueError, ValidationError
from .soliton import WaveField
from .spectral import Distribution, RandomEnsembleConfig, sample_ensemble

DEFAULT_X = np.linspace(-3.0, 3.0, 121)
DEFAULT_DELTA = 0.3


def trapezoid_weights(x) -> np.ndarray:
    x = np.asarray(x, float)
    if len(x) < 2:
        return np.ones(len(x))
    d = np.diff(x)
    w = np.zeros(len(x))
    w[:-1] += d / 2
    w[1:] += d / 2
    return np.abs(w)


def l2_error(f, g, x=None) -> float:
    """sqrt of the trapezoid-weighted sum of |f - g|^2.

    Accepts two WaveFields on identical grids (integrating over x, and over t
    when there are several times) or two arrays with an abscissa ``x``.
    """
    if isinstance(f, WaveField) and isinstance(g, WaveField):
        if f.values.shape != g.values.shape or not (np.array_equal(f.x, g.x)
                                                    and np.array_equal(f.t, g.t)):
            raise ValidationError("l2_error needs identical grids")
        sq = np.abs(f.values - g.values) ** 2 @ trapezoid_weights(f.x)
        if len(f.t) > 1:
            return float(math.sqrt(sq @ trapezoid_weights(f.t)))
        return float(math.sqrt(sq[0]))
    f = np.asarray(f, complex)
    g = np.asarray(g, complex)
    if f.shape != g.shape or x is None or np.shape(x) != f.shape:
        raise ValidationError("l2_error needs matching 1-d arrays and an abscissa")
    return float(math.sqrt(np.abs(f - g) ** 2 @ trapezoid_weights(x)))


@dataclass
class ErrorRecord:
    case: str
    N: int
    realization: int
    seed: int
    l2_error: float
    peak_ratio: Optional[float] = None


@dataclass
class ExperimentReport:
    case: str
    N_values: list
    X: np.ndarray
    T: float
    M: Optional[int]
    seed: int
    config: dict
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    profiles: dict = field(default_factory=dict)  # N -> mean |Psi_N| over realizations
    model: Optional[np.ndarray] = None
    timings: dict = field(default_factory=dict)

    def errors(self, N) -> np.ndarray:
        return np.array([r.l2_error for r in self.records if r.N == N])

    def summary(self) -> list:
        """[(N, mean_error, std_error)] in the order of N_values."""
        out = []
        for N in self.N_values:
            e = self.errors(N)
            out.append((N, float(e.mean()) if len(e) else math.nan,
                        float(e.std(ddof=1) / math.sqrt(len(e))) if len(e) > 1 else math.nan))
        return out

    def write_csv(self, path):
        rows = [("case", "N", "realization", "seed", "l2_error")]
        rows += [(r.case, r.N, r.realization, r.seed, repr(r.l2_error)) for r in self.records]
        _write_rows(path, rows)

    def write_summary_csv(self, path):
        rows = [("case", "N", "mean_error", "std_error")]
        rows += [(self.case, N, repr(m), repr(s)) for N, m, s in self.summary()]
        _write_rows(path, rows)

    def write_profile_csv(self, path, N):
        if N not in self.profiles:
            raise ValidationError(f"no profile recorded for N = {N}")
        rows = [("X", "abs_psi_model", "abs_psi_N_mean")]
        rows += [(repr(float(x)), repr(float(abs(m))), repr(float(p)))
                 for x, m, p in zip(self.X, self.model, self.profiles[N])]
        _write_rows(path, rows)


def _write_rows(path, rows):
    try:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def _realization(cfg, r, scaling, X, T, M):
    """(sum of amplitudes, rescaled profile) or (None, error message)."""
    try:
        data = sample_ensemble(cfg, r)
        psi = models.rescaled_soliton(data, scaling, X, T, M)
    except RogueError as exc:
        return None, str(exc)
    return float(np.sum(data.eigenvalues.imag)), psi


def run_universality(config: RandomEnsembleConfig, X_grid: Sequence[float] = DEFAULT_X,
                     T: float = 0.0, M: Optional[int] = 64,
                     N_values: Optional[Sequence[int]] = None,
                     workers: int = 1) -> ExperimentReport:
    """Mean L2 distance between rescaled N-soliton and model profiles.

    ``N_values`` overrides config.N to sweep several sizes with the same
    seed; realization r reuses the same substreams for every N, so its first
    draws are shared across sizes.  Failed realizations are reported in
    ``failures`` and excluded with a warning.  With workers > 1 the
    realizations run in a process pool; results are reduced in realization
    order, so the report does not depend on the worker count.
    """
    X = np.asarray(X_grid, float)
    N_values = [int(config.N)] if N_values is None else [int(n) for n in N_values]
    mu_mean = config.amplitude_dist.mean
    report = ExperimentReport(config.case, N_values, X, float(T), M, int(config.seed),
                              {"amplitude": config.amplitude_dist.describe(),
                               "velocity": config.velocity_dist.describe(),
                               "zeta": config.zeta, "realizations": config.realizations})
    t0 = time.perf_counter()
    zeta = config.zeta if config.case == "PV" else None
    model = models.model_profile(config.case, X, T, zeta, mu_mean if zeta else None, M)
    report.model = model
    report.timings["model"] = time.perf_counter() - t0
    i0 = int(np.argmin(np.abs(X))) if np.min(np.abs(X)) == 0 else None
    for N in N_values:
        t1 = time.perf_counter()
        cfg = replace(config, N=N)
        scaling = models.scaling_map(config.case, N, mu_mean)
        args = [(cfg, r, scaling, X, T, M) for r in range(cfg.realizations)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_realization, *zip(*args)))
        else:
            results = [_realization(*a) for a in args]
        mods = []
        for r, (mass, psi) in enumerate(results):
            if mass is None:
                report.failures.append({"N": N, "realization": r, "error": psi})
                warnings.warn(f"N = {N}, realization {r} failed and is excluded: {psi}")
                continue
            ratio = None
            if i0 is not None and T == 0:
                ratio = float(abs(psi[i0]) / (scaling.amplitude * 2.0 * mass))
            report.records.append(ErrorRecord(config.case, N, r, int(config.seed),
                                              l2_error(psi, model, X), ratio))
            mods.append(np.abs(psi))
        if mods:
            report.profiles[N] = np.mean(mods, axis=0)
        report.timings[f"N={N}"] = time.perf_counter() - t1
    return report


def convergence_table(report: ExperimentReport) -> list:
    """Rows (N, mean_error, rate) with rate = log(e_N / e_N') / log(N' / N) to the next N.

    For doubling N this is log2(e_N / e_2N); the last row has rate None.
    """
    s = report.summary()
    rows = []
    for i, (N, m, _) in enumerate(s):
        rate = None
        if i + 1 < len(s):
            N2, m2 = s[i + 1][0], s[i + 1][1]
            if m > 0 and m2 > 0:
                rate = math.log(m / m2) / math.log(N2 / N)
        rows.append((N, m, rate))
    return rows


# ------------------------------------------------------------- good sets

@dataclass
class GoodSetStats:
    N: int
    delta: float
    trials: int
    omega_failures: int
    v_failures: int
    u_failures: Optional[int] = None

    @property
    def omega_frequency(self) -> float:
        return self.omega_failures / self.trials

    @property
    def v_frequency(self) -> float:
        return self.v_failures / self.trials

    @property
    def u_frequency(self) -> Optional[float]:
        return None if self.u_failures is None else self.u_failures / self.trials


def good_set_probe(N: int, delta: float = DEFAULT_DELTA, zeta: Optional[float] = None,
                   dist: Distribution = Distribution("chi2", (4.0,)),
                   trials: int = 2000, seed: int = 0,
                   velocity_dist: Distribution = Distribution("gauss", (0.0, 15.0)),
                   batch: int = 250) -> GoodSetStats:
    """Monte-Carlo failure counts of the good sets.

    Omega: max |mu_j| and max |v_j| below N^delta.  V: |sum (mu_j - mean)| at
    most N^(2 delta).  U (only with zeta): the circle statistic of
    ``models.u2delta_statistic`` at most N^(2 delta), on 4N angles.
    """
    if not 0.25 < delta < 0.5:
        raise ValidationError("delta: must lie in (1/4, 1/2)")
    if N < 1 or trials < 1:
        raise ValidationError("N and trials must be positive")
    if zeta is not None and not 0 < zeta < 1:
        raise ValidationError("zeta: must lie in (0, 1)")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(N,))
    rng = np.random.Generator(np.random.Philox(ss))
    mean = dist.mean
    bound, bound2 = N ** delta, N ** (2 * delta)
    kernel = None
    if zeta is not None:
        Z = np.exp(2j * np.pi * np.arange(4 * N) / (4 * N))
        kernel = 1.0 / (Z[:, None] + zeta * np.arange(1, N + 1)[None, :] / N)
    om = vf = uf = 0
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        mu = dist.sample(rng, k * N).reshape(k, N)
        v = velocity_dist.sample(rng, k * N).reshape(k, N)
        om += int(np.sum((np.abs(mu).max(axis=1) >= bound) | (np.abs(v).max(axis=1) >= bound)))
        dev = mu - mean
        vf += int(np.sum(np.abs(dev.sum(axis=1)) > bound2))
        if kernel is not None:
            stat = np.abs(kernel @ dev.T).max(axis=0)
            uf += int(np.sum(stat > bound2))
        done += k
    return GoodSetStats(N, delta, trials, om, vf, uf if zeta is not None else None)


def write_goodset_csv(path, stats: Sequence[GoodSetStats]):
    rows = [("N", "delta", "trials", "omega_failure", "v_failure", "u_failure")]
    for s in stats:
        rows.append((s.N, repr(s.delta), s.trials, repr(s.omega_frequency), repr(s.v_frequency),
                     "" if s.u_frequency is None else repr(s.u_frequency)))
    _write_rows(path, rows)
