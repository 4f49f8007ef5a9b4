"""Compound Poisson momentum kicks from isotropic photon emission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .constants import C_LIGHT, HBAR, K_B
from .numerics import adaptive_quad, gauss_legendre_01, one_minus_sinc_scalar
from .spectrum import (
    DEFAULT_RTOL,
    EmissionSpectrum,
    MoleculeParams,
    reduced_cutoff,
    reduced_moment,
    sample_reduced_frequency,
    spectral_shape,
)

OSCILLATORY_SWITCH = 1.0  # reduced argument above which f is integrated with a sine weight


@dataclass(frozen=True, eq=False)
class KickTrajectory:
    """One realization of the kick process over a flight of duration ``flight_time``."""

    flight_time: float
    event_times: np.ndarray = field(repr=False)
    jumps: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        jumps = np.asarray(self.jumps, dtype=float)
        object.__setattr__(self, "event_times", times)
        object.__setattr__(self, "jumps", jumps)
        if times.shape != jumps.shape or times.ndim != 1:
            raise ValueError("event_times and jumps must be 1-d and of equal length")
        if times.size:
            if times[0] < 0 or times[-1] > self.flight_time or np.any(np.diff(times) < 0):
                raise ValueError("event times must be ascending within [0, flight_time]")

    @property
    def n(self) -> int:
        return self.event_times.size

    @property
    def weights(self) -> np.ndarray:
        """Lever arms 1 - t_k/t of each kick on the screen momentum."""
        return 1.0 - self.event_times / self.flight_time

    def weighted_kick(self) -> float:
        """sum_k (1 - t_k/t) dp_k, the kick shift of the far-field momentum."""
        return math.fsum(self.weights * self.jumps)

    def to_line(self) -> str:
        fields = [str(self.n)]
        for tk, pk in zip(self.event_times, self.jumps):
            fields += [repr(float(tk)), repr(float(pk))]
        return " ".join(fields)

    @classmethod
    def from_line(cls, line: str, flight_time: float) -> "KickTrajectory":
        parts = line.split()
        n = int(parts[0])
        if len(parts) != 1 + 2 * n:
            raise ValueError(f"expected {1 + 2 * n} fields, got {len(parts)}")
        vals = np.array([float(p) for p in parts[1:]]).reshape(n, 2)
        return cls(flight_time, vals[:, 0], vals[:, 1])


def write_trajectories(path, trajectories: Iterable[KickTrajectory]) -> None:
    """Plain-text dump: a ``# flight_time <t>`` header, then one trajectory per line.

    Each line is ``n t_1 dp_1 ... t_n dp_n`` (seconds, kg m/s).
    """
    trajectories = list(trajectories)
    times = {tr.flight_time for tr in trajectories}
    if len(times) > 1:
        raise ValueError("all trajectories in one file must share a flight time")
    t = times.pop() if times else 0.0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# flight_time {t!r}\n")
        for tr in trajectories:
            fh.write(tr.to_line() + "\n")


def read_trajectories(path) -> list[KickTrajectory]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split()
    if header[:2] != ["#", "flight_time"]:
        raise ValueError("missing '# flight_time' header")
    t = float(header[2])
    return [KickTrajectory.from_line(ln, t) for ln in lines[1:] if ln.strip()]


@dataclass(frozen=True)
class KickLaw:
    spectrum: EmissionSpectrum
    rate: float  # s^-1

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"kick rate must be positive, got {self.rate}")

    @classmethod
    def from_spectrum(cls, spec: EmissionSpectrum) -> "KickLaw":
        return cls(spec, spec.total_rate)

    @classmethod
    def at(cls, mol: MoleculeParams, T: float, tol: float = DEFAULT_RTOL) -> "KickLaw":
        return cls.from_spectrum(EmissionSpectrum.at(mol, T, tol))

    @property
    def molecule(self) -> MoleculeParams:
        return self.spectrum.molecule

    @property
    def momentum_scale(self) -> float:
        """k_B T / c: photon momentum per unit reduced frequency."""
        return K_B * self.spectrum.temperature / C_LIGHT


def w_density(law: KickLaw, dp: float, tol: float = DEFAULT_RTOL) -> float:
    """One-dimensional kick density W(dp) in (kg m/s)^-1."""
    mol = law.molecule
    y0 = abs(dp) / law.momentum_scale
    xmax = reduced_cutoff(mol)
    if y0 >= xmax:
        return 0.0
    tail = adaptive_quad(lambda x: spectral_shape(mol, x) / x, y0, xmax, tol)
    return tail / (2.0 * law.momentum_scale * reduced_moment(mol, 0.0, tol))


def _one_minus_f_reduced(mol: MoleculeParams, y: float, tol: float) -> float:
    """1 - f for reduced argument y = x k_B T / (hbar c)."""
    if y == 0.0:
        return 0.0
    xmax = reduced_cutoff(mol)
    norm = reduced_moment(mol, 0.0, tol)
    if y <= OSCILLATORY_SWITCH:
        val = adaptive_quad(
            lambda u: spectral_shape(mol, u) * one_minus_sinc_scalar(u * y), 0.0, xmax, tol,
            points=[mol.ell + 2.0],
        )
        return val / norm
    # many oscillations over the support: integrate shape(u)/u * sin(y u) with QAWO
    osc = adaptive_quad(
        lambda u: spectral_shape(mol, u) / u if u > 0 else 0.0, 0.0, xmax, tol,
        atol=tol * norm * y, sin_freq=y,
    )
    return 1.0 - osc / (y * norm)


def _reduced_length(law: KickLaw, x: float) -> float:
    return abs(x) * law.momentum_scale / HBAR


def one_minus_characteristic(law: KickLaw, x: float, tol: float = 1e-12) -> float:
    """1 - f(x), computed directly to avoid cancellation when f is close to 1."""
    return _one_minus_f_reduced(law.molecule, _reduced_length(law, x), tol)


def characteristic_function(law: KickLaw, x: float, tol: float = 1e-12) -> float:
    """f(x) = <exp(i x dp)>, real because W is symmetric. ``x`` in metres."""
    return 1.0 - one_minus_characteristic(law, x, tol)


def zeta_factor(law: KickLaw, d: float, order: int = 32, tol: float = 1e-12, max_order: int = 1024) -> float:
    """Geometric factor int_0^1 [1 - f(s d)] ds.

    Gauss-Legendre in s, order doubled until successive estimates agree to ``tol``.
    """
    if d < 0:
        raise ValueError(f"slit separation must be >= 0, got {d}")
    if d == 0:
        return 0.0
    mol = law.molecule
    y = _reduced_length(law, d)

    def rule(n):
        s, w = gauss_legendre_01(n)
        return float(sum(wi * _one_minus_f_reduced(mol, si * y, tol) for si, wi in zip(s, w)))

    prev = rule(order)
    while order < max_order:
        order *= 2
        cur = rule(order)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    return prev


def sample_kick(law: KickLaw, rng: np.random.Generator, size: int | None = None):
    """Momentum jump along the slit axis: photon momentum times a uniform direction cosine."""
    n = 1 if size is None else size
    x = sample_reduced_frequency(law.spectrum, rng, n)
    u = rng.uniform(-1.0, 1.0, n)
    dp = law.momentum_scale * x * u
    return float(dp[0]) if size is None else dp


def sample_trajectory(law: KickLaw, t: float, rng: np.random.Generator) -> KickTrajectory:
    if t < 0:
        raise ValueError(f"flight time must be >= 0, got {t}")
    n = int(rng.poisson(law.rate * t))
    times = np.sort(rng.uniform(0.0, t, n))
    return KickTrajectory(t, times, sample_kick(law, rng, n))


def mean_photon_number(law: KickLaw, t: float) -> float:
    return law.rate * t


def momentum_rms(law: KickLaw, tol: float = DEFAULT_RTOL) -> float:
    """Root-mean-square of dp under W; <u^2> = 1/3 for isotropic emission."""
    mol = law.molecule
    x2 = reduced_moment(mol, 2.0, tol) / reduced_moment(mol, 0.0, tol)
    return law.momentum_scale * math.sqrt(x2 / 3.0)
