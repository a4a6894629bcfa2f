"""Rotating-disc error model: Monte Carlo, closed-form moments, asymptotics.

A disc of ``r`` cells holding symbols ``0..p-1`` is hit by noise once per
step: with probability ``a_gamma`` the ``gamma`` cells in the noise zone (the
trailing tensor slots) are each redrawn uniformly, then the disc rotates one
cell.  After a full cycle of ``r`` steps the error count ``k`` is the Hamming
distance to the initial content.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGap, NonConvergent, NotNormalized, UnsupportedP
from .hiermat import Form, HierParams
from .oracle import exact_moments

BLOCK_SIZE = 4096

SWEEP_FIELDS = ["beta", "mean_analytic", "var_analytic", "mean_mc", "var_mc",
                "stderr_mean", "n_trials", "r", "p", "seed"]
EXACT_FIELDS = ["mean_exact", "var_exact"]


@dataclass(frozen=True)
class NoiseModel:
    p: int
    r: int
    weights: tuple
    beta: float | None = None

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if self.p < 2 or self.r < 1:
            raise ValueError("need p >= 2 and r >= 1")
        if len(w) != self.r + 1:
            raise ValueError(f"expected {self.r + 1} weights, got {len(w)}")
        if min(w) < 0 or abs(math.fsum(w) - 1.0) > 1e-12:
            raise NotNormalized(f"weights must be a probability vector (sum {math.fsum(w)!r})")

    @property
    def params(self) -> HierParams:
        return HierParams(self.p, self.r, self.weights, Form.A)

    @property
    def eigenvalues(self) -> np.ndarray:
        """``lambda^(gamma)`` of the noise operator, ``gamma = 0..r``."""
        return np.cumsum(self.weights)


@dataclass(frozen=True)
class DiscState:
    cells: tuple

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))

    def check(self, p: int, r: int) -> "DiscState":
        if len(self.cells) != r or any(not 0 <= c < p for c in self.cells):
            raise ValueError(f"disc state must have {r} cells with symbols in 0..{p - 1}")
        return self


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    n_trials: int = 0
    std_error_mean: float = 0.0
    source: str = "Analytic"
    std_error_variance: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def boltzmann_model(p: int, r: int, beta: float) -> NoiseModel:
    """Weights proportional to ``exp(-beta gamma)``, normalized numerically."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    w = np.exp(-beta * np.arange(r + 1))
    return NoiseModel(p, r, tuple(w / math.fsum(w)), float(beta))


def boltzmann_eigenvalues(r: int, beta: float) -> np.ndarray:
    """``lambda^(gamma) = (1 - e^{-(gamma+1) beta}) / (1 - e^{-(r+1) beta})``."""
    g = np.arange(r + 1)
    return -np.expm1(-(g + 1) * beta) / -np.expm1(-(r + 1) * beta)


def _as_cells(initial, p, r) -> np.ndarray:
    if p > 256:
        raise ValueError("simulation stores symbols as uint8; p must be <= 256")
    state = initial if isinstance(initial, DiscState) else DiscState(tuple(initial))
    return np.array(state.check(p, r).cells, dtype=np.int64)


# -- Monte Carlo ---------------------------------------------------------------

def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), block])))


def _simulate_block(model: NoiseModel, start: np.ndarray, seed: int, block: int,
                    size: int, frame: str) -> np.ndarray:
    p, r = model.p, model.r
    rng = _block_rng(seed, block)
    cdf = np.cumsum(model.weights)
    cdf[-1] = 1.0
    cols = np.arange(r)
    cells = np.tile(start.astype(np.uint8), (size, 1))
    for step in range(r):
        gammas = np.searchsorted(cdf, rng.random(size), side="right")
        symbols = rng.integers(0, p, size=(size, r), dtype=np.uint8)
        zone = cols[None, :] >= (r - gammas)[:, None]
        if frame == "lab":
            cells = np.roll(np.where(zone, symbols, cells), 1, axis=1)
        else:
            # lab slot i sits over disc cell (i - step) mod r
            cells = np.where(np.roll(zone, -step, axis=1),
                             np.roll(symbols, -step, axis=1), cells)
    k = np.count_nonzero(cells != start[None, :], axis=1)
    return np.bincount(k, minlength=r + 1)


def simulate_histogram(model: NoiseModel, initial, seed: int, n_trials: int,
                       frame: str = "lab", workers: int = 1,
                       block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Counts of ``k = 0..r`` errors over ``n_trials`` full cycles.

    Trials are grouped in fixed blocks, block ``b`` drawing from the stream
    seeded by ``(seed, b)``; the block histograms are summed, so the result
    does not depend on ``workers``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if frame not in ("lab", "disc"):
        raise ValueError(f"frame must be 'lab' or 'disc', got {frame!r}")
    start = _as_cells(initial, model.p, model.r)
    sizes = [min(block_size, n_trials - b0) for b0 in range(0, n_trials, block_size)]
    jobs = [(b, size) for b, size in enumerate(sizes)]
    run = lambda job: _simulate_block(model, start, seed, job[0], job[1], frame)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return np.sum(parts, axis=0)


def moments_from_histogram(hist: np.ndarray) -> MomentReport:
    hist = np.asarray(hist, dtype=np.int64)
    n = int(hist.sum())
    k = np.arange(len(hist), dtype=float)
    mean = float(hist @ k) / n
    dev = k - mean
    m2 = float(hist @ dev ** 2) / n
    m4 = float(hist @ dev ** 4) / n
    var = m2 * n / (n - 1) if n > 1 else 0.0
    se_mean = math.sqrt(var / n) if n > 1 else 0.0
    # large-sample standard error of the sample variance
    se_var = math.sqrt(max(m4 - m2 ** 2, 0.0) / n) if n > 1 else 0.0
    return MomentReport(mean, var, n, se_mean, "MonteCarlo", se_var)


def simulate_full_cycle(model: NoiseModel, initial, seed: int, n_trials: int,
                        frame: str = "lab", workers: int = 1) -> MomentReport:
    """Sample mean and variance of the full-cycle error count."""
    hist = simulate_histogram(model, initial, seed, n_trials, frame, workers)
    return moments_from_histogram(hist)


# -- closed forms --------------------------------------------------------------

def _require_p2(model: NoiseModel):
    if model.p != 2:
        raise UnsupportedP(f"closed-form moments are derived for p = 2, got p = {model.p}")


def g_products(model: NoiseModel) -> np.ndarray:
    """``g(l) = lambda^(0) ... lambda^(l)`` for ``l = 0..r``."""
    return np.cumprod(model.eigenvalues)


def analytic_moments(model: NoiseModel) -> MomentReport:
    _require_p2(model)
    r = model.r
    lam = model.eigenvalues
    if abs(lam[r] - 1.0) > 1e-12:
        raise NotNormalized(f"lambda^(r) = {lam[r]!r} != 1")
    g = g_products(model)
    mean = 0.5 * r * (1.0 - g[r - 1])
    cross = math.fsum(g[r - 2 - j] * g[j] for j in range(r - 1))
    var = 0.25 * r * (1.0 - r * g[r - 1] ** 2 + cross)
    return MomentReport(float(mean), float(max(var, 0.0)), 0, 0.0, "Analytic")


def euler_product(beta: float, tol: float = 1e-15, max_terms: int = 10 ** 6) -> float:
    """``prod_{gamma >= 1} (1 - e^{-gamma beta})``, stopped once a factor is within ``tol`` of 1."""
    log_prod = 0.0
    for gamma in range(1, max_terms + 1):
        x = math.exp(-gamma * beta)
        log_prod += math.log1p(-x)
        if x < tol:
            return math.exp(log_prod)
    raise NonConvergent(f"Euler product did not converge within {max_terms} factors")


def asymptotic_moments(model: NoiseModel, tol: float = 1e-15,
                       max_terms: int = 10 ** 6) -> MomentReport:
    """Leading large-``r`` behaviour of the moments for Boltzmann noise.

    ``g_inf`` is the infinite product and ``G = sum_j (g(j) - g_inf)`` uses
    the ``r -> infinity`` limit ``g(j) = prod_{gamma=1}^{j+1} (1 - e^{-gamma beta})``.
    """
    _require_p2(model)
    if model.beta is None:
        raise ValueError("asymptotic moments need a Boltzmann model (beta)")
    beta, r = model.beta, model.r
    g_inf = euler_product(beta, tol, max_terms)
    G = 0.0
    g = 1.0
    for j in range(max_terms):
        g *= -math.expm1(-(j + 1) * beta)
        term = g - g_inf
        G += term
        if abs(term) < tol:
            break
    else:
        raise NonConvergent(f"G series did not converge within {max_terms} terms")
    mean = 0.5 * r * (1.0 - g_inf)
    var = 0.25 * r * (1.0 - g_inf ** 2 + 2.0 * g_inf * G)
    return MomentReport(mean, var, 0, 0.0, "Asymptotic")


@dataclass(frozen=True)
class EquilibrationReport:
    tau_pure: float
    gap_shifted: float
    bounds: tuple | None = None
    bounds_hold: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def pure_equilibration_time(model: NoiseModel) -> float:
    """``-1 / ln(lambda^(r-1))`` for the noise operator alone.

    ``1 - lambda^(r-1)`` equals ``a_r`` for normalized weights, which keeps the
    gap accurate far below machine epsilon.
    """
    gap = model.weights[-1]
    if gap <= 0.0:
        raise DegenerateGap("lambda^(r-1) = 1: the pure diffusion never equilibrates")
    return -1.0 / math.log1p(-gap)


def equilibration_report(model: NoiseModel, slack: float = 1e-12) -> EquilibrationReport:
    try:
        tau = pure_equilibration_time(model)
    except DegenerateGap:
        tau = math.inf
    lam = model.eigenvalues[: model.r]
    gap = 0.0 if np.any(lam <= 0) else math.exp(math.fsum(np.log(lam)) / model.r)
    if model.beta is None:
        return EquilibrationReport(tau, gap)
    beta, r = model.beta, model.r
    lo = math.exp(-math.pi ** 2 / (6 * r * beta))
    hi = math.exp(math.log1p(-math.exp(-beta)) / r)
    return EquilibrationReport(tau, gap, (lo, hi), lo - slack <= gap <= hi + slack)


# -- beta sweeps ---------------------------------------------------------------

def beta_grid(start: float, stop: float, points: int, spacing: str = "log") -> np.ndarray:
    if points < 1 or not 0 < start < stop:
        raise ValueError("beta grid needs 0 < start < stop and points >= 1")
    if spacing == "log":
        return np.geomspace(start, stop, points)
    if spacing == "linear":
        return np.linspace(start, stop, points)
    raise ValueError(f"spacing must be 'log' or 'linear', got {spacing!r}")


def sweep_rows(p: int, r: int, betas: Sequence[float], n_trials: int, seed: int,
               initial=None, exact: bool = False, workers: int = 1) -> list:
    """One row per ``beta`` with analytic, Monte Carlo and optionally exact moments.

    Analytic columns are ``nan`` for ``p != 2``.
    """
    initial = tuple(initial) if initial is not None else (0,) * r
    rows = []
    for beta in betas:
        model = boltzmann_model(p, r, float(beta))
        if p == 2:
            ana = analytic_moments(model)
            mean_a, var_a = ana.mean, ana.variance
        else:
            mean_a = var_a = float("nan")
        mc = simulate_full_cycle(model, initial, seed, n_trials, workers=workers)
        row = {"beta": float(beta), "mean_analytic": mean_a, "var_analytic": var_a,
               "mean_mc": mc.mean, "var_mc": mc.variance, "stderr_mean": mc.std_error_mean,
               "n_trials": n_trials, "r": r, "p": p, "seed": seed}
        if exact:
            row["mean_exact"], row["var_exact"] = exact_moments(model.params, r, initial)
        rows.append(row)
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    fields = SWEEP_FIELDS + (EXACT_FIELDS if rows and "mean_exact" in rows[0] else [])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def rows_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(rows, indent=2)
