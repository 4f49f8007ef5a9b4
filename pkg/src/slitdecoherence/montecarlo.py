"""Monte Carlo estimates of the fringe factor and screen pattern from sampled kick histories.

Trajectories are processed in fixed-size batches. Batch ``i`` draws from its own
Philox stream keyed by ``(seed, i)``, and batch statistics are merged with a
fixed pairwise tree, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .kicks import KickLaw, sample_kick
from .spectrum import DEFAULT_RTOL
from .visibility import (
    ExperimentConfig,
    FringePattern,
    envelope,
    fringe_wavenumber,
    slit_momentum_density,
    visibility_closed_form,
)

MIN_STATISTICAL_SAMPLES = 1000
PULL_LIMIT = 4.0


@dataclass(frozen=True)
class McConfig:
    n_samples: int
    seed: int
    batch_size: int = 10_000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "batch_size", min(self.batch_size, self.n_samples))

    def batches(self) -> list[tuple[int, int]]:
        """(index, size) of every batch, in reduction order."""
        full, rest = divmod(self.n_samples, self.batch_size)
        sizes = [self.batch_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))


def batch_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based child stream for batch ``index``; independent of worker count."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class Moments:
    """Count, mean and centred second moment of a batch of vector samples."""

    n: int
    mean: np.ndarray
    m2: np.ndarray  # diagonal (variance sums) or full matrix when built with cov=True

    @classmethod
    def of(cls, samples: np.ndarray, cov: bool = False) -> "Moments":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        mean = samples.mean(axis=0)
        dev = samples - mean
        m2 = dev.T @ dev if cov else np.einsum("ij,ij->j", dev, dev)
        return cls(samples.shape[0], mean, m2)

    def merge(self, other: "Moments") -> "Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        corr = np.outer(delta, delta) if self.m2.ndim == 2 else delta * delta
        m2 = self.m2 + other.m2 + corr * (self.n * other.n / n)
        return Moments(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.m2)
        return np.maximum(self.m2, 0.0) / (self.n - 1) if self.m2.ndim == 1 else self.m2 / (self.n - 1)

    @property
    def std_error(self) -> np.ndarray:
        var = self.variance if self.m2.ndim == 1 else np.diag(self.variance)
        return np.sqrt(np.maximum(var, 0.0) / self.n)


def pairwise_reduce(items: list[Moments]) -> Moments:
    """Merge in a fixed balanced tree over the batch order."""
    if not items:
        raise ValueError("nothing to reduce")
    while len(items) > 1:
        nxt = [items[i].merge(items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _kick_law(cfg: ExperimentConfig, tol: float) -> KickLaw | None:
    if cfg.temperature == 0 or cfg.flight_time == 0:
        return None
    law = KickLaw.at(cfg.molecule, cfg.temperature, tol)
    if law.rate * cfg.flight_time == 0:
        return None
    return law


def weighted_kick_sums(law: KickLaw | None, t: float, n_traj: int, rng: np.random.Generator) -> np.ndarray:
    """sum_k (1 - t_k/t) dp_k for ``n_traj`` independent trajectories.

    Event times are left unsorted; the sum does not depend on their order.
    """
    if law is None:
        return np.zeros(n_traj)
    counts = rng.poisson(law.rate * t, n_traj)
    total = int(counts.sum())
    times = rng.uniform(0.0, t, total)
    jumps = sample_kick(law, rng, total)
    owner = np.repeat(np.arange(n_traj), counts)
    return np.bincount(owner, weights=(1.0 - times / t) * jumps, minlength=n_traj)


def _map_batches(fn, mc: McConfig, threads: int) -> list:
    batches = mc.batches()
    if threads <= 1 or len(batches) == 1:
        return [fn(i, size) for i, size in batches]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), batches))


@dataclass(frozen=True)
class McEstimate:
    f_real: float
    f_imag: float
    visibility_hat: float
    std_error: float  # of f_real
    n_used: int
    std_error_imag: float = 0.0


def estimate_F(cfg: ExperimentConfig, mc: McConfig, threads: int = 1, tol: float = DEFAULT_RTOL) -> McEstimate:
    """Sample mean of exp(i d S) over kick histories, S the weighted kick sum."""
    law = _kick_law(cfg, tol)
    d, t = cfg.slit_separation, cfg.flight_time

    def batch(index, size):
        rng = batch_generator(mc.seed, index)
        phase = (d / HBAR) * weighted_kick_sums(law, t, size, rng)
        return Moments.of(np.column_stack([np.cos(phase), np.sin(phase)]))

    mom = pairwise_reduce(_map_batches(batch, mc, threads))
    re, im = (float(v) for v in mom.mean)
    se_re, se_im = (float(v) for v in mom.std_error)
    return McEstimate(re, im, math.hypot(re, im), se_re, mom.n, se_im)


def _pattern_values(cfg: ExperimentConfig, x: np.ndarray, kick_sums: np.ndarray) -> np.ndarray:
    """(m/t) |psi_0(p_bar)|^2 per trajectory (rows) and screen point (columns)."""
    m, t, d = cfg.molecule.mass, cfg.flight_time, cfg.slit_separation
    pbar = (m / t) * x[None, :] + kick_sums[:, None]
    slit = slit_momentum_density(pbar, cfg.slit_width_momentum)
    return (m / t) * 2.0 * slit * np.cos(pbar * d / (2.0 * HBAR)) ** 2


def estimate_pattern(
    cfg: ExperimentConfig, mc: McConfig, screen_grid, threads: int = 1, tol: float = DEFAULT_RTOL
) -> FringePattern:
    """Empirical screen intensity from the far-field stationary-phase momentum p_bar."""
    if not cfg.flight_time > 0:
        raise ValueError("the screen pattern needs a positive flight time")
    x = np.asarray(screen_grid, dtype=float)
    law = _kick_law(cfg, tol)

    def batch(index, size):
        rng = batch_generator(mc.seed, index)
        sums = weighted_kick_sums(law, cfg.flight_time, size, rng)
        return Moments.of(_pattern_values(cfg, x, sums))

    mom = pairwise_reduce(_map_batches(batch, mc, threads))
    return FringePattern(x, mom.mean.copy(), envelope(cfg, x), mom.std_error)


def contrast_points(cfg: ExperimentConfig, n_fringes: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Screen positions of the central fringe maxima and minima (zero phase)."""
    spacing = 2 * math.pi / fringe_wavenumber(cfg)
    j = np.arange(-n_fringes, n_fringes + 1)
    maxima = j * spacing
    minima = (np.arange(-n_fringes, n_fringes) + 0.5) * spacing
    return maxima, minima


def estimate_fringe_contrast(
    cfg: ExperimentConfig, mc: McConfig, n_fringes: int = 2, threads: int = 1, tol: float = DEFAULT_RTOL
) -> tuple[float, float]:
    """(I_max - I_min) / (I_max + I_min) over the central fringes, with its standard error.

    Intensities are divided by the unkicked envelope before averaging over the
    maxima and minima; the error comes from the joint per-trajectory covariance.
    """
    maxima, minima = contrast_points(cfg, n_fringes)
    law = _kick_law(cfg, tol)
    env_max, env_min = envelope(cfg, maxima), envelope(cfg, minima)

    def batch(index, size):
        rng = batch_generator(mc.seed, index)
        sums = weighted_kick_sums(law, cfg.flight_time, size, rng)
        hi = (_pattern_values(cfg, maxima, sums) / env_max).mean(axis=1)
        lo = (_pattern_values(cfg, minima, sums) / env_min).mean(axis=1)
        return Moments.of(np.column_stack([hi, lo]), cov=True)

    mom = pairwise_reduce(_map_batches(batch, mc, threads))
    a, b = mom.mean
    v = (a - b) / (a + b)
    grad = np.array([2 * b, -2 * a]) / (a + b) ** 2
    var = float(grad @ mom.variance @ grad) / mom.n
    return float(v), math.sqrt(max(var, 0.0))


@dataclass(frozen=True)
class Comparison:
    v_mc: float
    v_exact: float
    std_error: float
    pull: float
    flagged: bool
    f_imag: float = 0.0
    std_error_imag: float = 0.0


def compare_to_closed_form(
    cfg: ExperimentConfig, mc: McConfig, threads: int = 1, tol: float = DEFAULT_RTOL
) -> Comparison:
    est = estimate_F(cfg, mc, threads, tol)
    exact = visibility_closed_form(cfg, tol).visibility
    diff = est.visibility_hat - exact
    if est.std_error > 0:
        pull = diff / est.std_error
    else:
        # zero variance: no kicks, the estimate is exact
        pull = 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)
    return Comparison(
        est.visibility_hat, exact, est.std_error, pull, abs(pull) > PULL_LIMIT, est.f_imag, est.std_error_imag
    )
