"""Thermal photon emission of a hot particle with a finite number of modes.

Everything is integrated in the reduced frequency x = hbar*omega / (k_B T), where
the spectral shape is x^(l+2) exp(-x - x^2/(2N)) and all temperature dependence
sits in a single prefactor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constants import AMU, C_LIGHT, HBAR, K_B, NM2
from .numerics import SeriesDivergenceWarning, adaptive_quad

DEFAULT_RTOL = 1e-9


@dataclass(frozen=True)
class MoleculeParams:
    name: str
    n_modes: float
    ell: int
    a_ell: float  # m^2 s^ell
    mass: float  # kg

    def __post_init__(self):
        if not self.n_modes >= 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell}")
        if not self.a_ell > 0:
            raise ValueError(f"a_ell must be positive, got {self.a_ell}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")


C60 = MoleculeParams("C60", n_modes=170, ell=4, a_ell=7.04e-66 * NM2, mass=720 * AMU)
C70 = MoleculeParams("C70", n_modes=200, ell=4, a_ell=7.79e-66 * NM2, mass=840 * AMU)
PRESETS = {"C60": C60, "C70": C70}


def get_preset(name: str) -> MoleculeParams:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown molecule preset {name!r}; choose from {sorted(PRESETS)}") from None


def thermal_frequency(T: float) -> float:
    """k_B T / hbar in rad/s."""
    return K_B * T / HBAR


def rate_scale(mol: MoleculeParams, T: float) -> float:
    """a_l / (pi^2 c^2) * (k_B T / hbar)^(l+3), the s^-1 prefactor of every reduced integral."""
    return mol.a_ell / (math.pi**2 * C_LIGHT**2) * thermal_frequency(T) ** (mol.ell + 3)


def reduced_cutoff(mol: MoleculeParams) -> float:
    """Upper limit in x beyond which the spectral shape is negligible."""
    n_eff = min(mol.n_modes, 10.0 * (mol.ell + 3) ** 2)
    return (mol.ell + 3) + 40.0 + math.sqrt(2.0 * n_eff * 40.0)


def spectral_shape(mol: MoleculeParams, x: float) -> float:
    """x^(l+2) exp(-x - x^2 / 2N); scalar, for quadrature integrands."""
    if x <= 0.0:
        return 0.0
    return x ** (mol.ell + 2) * math.exp(-x - x * x / (2.0 * mol.n_modes))


def absorption_cross_section(mol: MoleculeParams, omega):
    """sigma_abs(omega) = a_l omega^l, in m^2."""
    return mol.a_ell * np.asarray(omega, dtype=float) ** mol.ell


def reduced_moment(mol: MoleculeParams, power: float, rtol: float = DEFAULT_RTOL) -> float:
    """int_0^inf x^power * shape(x) dx."""
    return _reduced_moment(mol, float(power), rtol)


@lru_cache(maxsize=256)
def _reduced_moment(mol: MoleculeParams, power: float, rtol: float) -> float:
    xmax = reduced_cutoff(mol)
    return adaptive_quad(
        lambda x: spectral_shape(mol, x) * x**power, 0.0, xmax, rtol, points=[mol.ell + 2.0]
    )


def total_rate_quadrature(mol: MoleculeParams, T: float, tol: float = DEFAULT_RTOL) -> float:
    """Total photon emission rate Lambda(T) in s^-1 by adaptive quadrature."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    return rate_scale(mol, T) * reduced_moment(mol, 0.0, tol)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    last_index: int  # index m of the last included term
    last_term: float  # |last included term|, in the units of value
    diverging: bool  # first term was not the largest


def smallest_term_sum(terms, max_index: int) -> tuple[float, int, float, bool]:
    """Sum an asymptotic series up to and including its smallest term.

    ``terms`` is a callable m -> term. Stops when the next term would grow in
    magnitude, or at ``max_index``.
    """
    t0 = terms(0)
    total = t0
    last, last_m = t0, 0
    diverging = False
    for m in range(1, max_index + 1):
        tm = terms(m)
        if abs(tm) >= abs(last):
            if m == 1:
                diverging = True
            break
        total += tm
        last, last_m = tm, m
    return total, last_m, abs(last), diverging


def rate_series_coefficient(mol: MoleculeParams, m: int) -> float:
    """(-1)^m (2m+l+2)! / ((2N)^m m!)."""
    if m == 0:
        return float(math.factorial(mol.ell + 2))
    if math.isinf(mol.n_modes):
        return 0.0
    log_mag = math.lgamma(2 * m + mol.ell + 3) - m * math.log(2.0 * mol.n_modes) - math.lgamma(m + 1)
    return (-1) ** m * math.exp(log_mag)


def series_max_index(mol: MoleculeParams) -> int:
    if math.isinf(mol.n_modes):
        return 0
    return int(math.floor(mol.n_modes))


def total_rate_series(mol: MoleculeParams, T: float) -> SeriesResult:
    """Lambda(T) from the large-N asymptotic expansion, truncated at its smallest term."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if mol.n_modes < 10:
        raise ValueError(f"asymptotic series needs n_modes >= 10, got {mol.n_modes}")
    total, last_m, last, diverging = smallest_term_sum(
        lambda m: rate_series_coefficient(mol, m), series_max_index(mol)
    )
    if diverging:
        warnings.warn(
            f"rate series for N={mol.n_modes} is not in its asymptotic regime",
            SeriesDivergenceWarning,
            stacklevel=2,
        )
    scale = rate_scale(mol, T)
    return SeriesResult(scale * total, last_m, scale * last, diverging)


@dataclass(frozen=True)
class EmissionSpectrum:
    molecule: MoleculeParams
    temperature: float  # K
    total_rate: float  # s^-1

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")

    @classmethod
    def at(cls, mol: MoleculeParams, T: float, tol: float = DEFAULT_RTOL) -> "EmissionSpectrum":
        return cls(mol, T, total_rate_quadrature(mol, T, tol))

    @property
    def omega_scale(self) -> float:
        return thermal_frequency(self.temperature)

    @property
    def acceptance(self) -> float:
        """Probability that a Gamma(l+3) proposal survives the finite-N factor."""
        return self.total_rate / rate_scale(self.molecule, self.temperature) / math.factorial(
            self.molecule.ell + 2
        )


def emission_rate_density(spec: EmissionSpectrum, omega):
    """R_T(omega) in s^-1 per (rad/s)."""
    mol = spec.molecule
    omega = np.asarray(omega, dtype=float)
    x = omega / spec.omega_scale
    shape = omega**2 * absorption_cross_section(mol, omega) / (math.pi**2 * C_LIGHT**2)
    out = shape * np.exp(-x - x * x / (2.0 * mol.n_modes))
    return out[()] if out.ndim == 0 else out


_MAX_REJECTION_ROUNDS = 10_000


def sample_reduced_frequency(spec: EmissionSpectrum, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw x = hbar omega / k_B T from the normalized emission spectrum.

    Gamma(l+3) proposals thinned with probability exp(-x^2 / 2N).
    """
    mol = spec.molecule
    out = np.empty(size)
    if size == 0:
        return out
    accept = spec.acceptance
    if not 0 < accept <= 1 + 1e-9:
        raise RuntimeError(f"malformed spectrum: acceptance {accept}")
    filled = 0
    for _ in range(_MAX_REJECTION_ROUNDS):
        need = size - filled
        n_draw = int(need / accept * 1.05) + 8
        x = rng.gamma(mol.ell + 3, size=n_draw)
        u = rng.random(n_draw)
        kept = x[u < np.exp(-x * x / (2.0 * mol.n_modes))][:need]
        out[filled : filled + kept.size] = kept
        filled += kept.size
        if filled == size:
            return out
    raise RuntimeError("rejection sampler exceeded its round cap; spectrum is malformed")


def sample_frequency(spec: EmissionSpectrum, rng: np.random.Generator, size: int | None = None):
    """Emission frequency in rad/s with density R_T(omega) / Lambda(T)."""
    n = 1 if size is None else size
    omega = sample_reduced_frequency(spec, rng, n) * spec.omega_scale
    return float(omega[0]) if size is None else omega
