"""Closed-form fringe visibility, attenuation rate and screen intensity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constants import C_LIGHT, HBAR, K_B
from .kicks import KickLaw, momentum_rms
from .numerics import (
    SeriesDivergenceWarning,
    adaptive_quad,
    one_minus_si_ratio_scalar,
    si_ratio,
)
from .spectrum import (
    DEFAULT_RTOL,
    MoleculeParams,
    rate_scale,
    rate_series_coefficient,
    reduced_cutoff,
    series_max_index,
    smallest_term_sum,
    spectral_shape,
    total_rate_quadrature,
    total_rate_series,
    SeriesResult,
)

DEFAULT_SLIT_WIDTH = 100e-9  # m
MAX_SLIT_SEPARATION = 1e-4  # m


@dataclass(frozen=True)
class ExperimentConfig:
    molecule: MoleculeParams
    temperature: float  # K
    slit_separation: float  # m
    flight_time: float  # s
    slit_width_momentum: float = HBAR / (2 * DEFAULT_SLIT_WIDTH)  # kg m/s

    def __post_init__(self):
        for name in ("temperature", "slit_separation", "flight_time"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")
        if not self.slit_width_momentum > 0:
            raise ValueError("slit_width_momentum must be positive")
        if self.slit_separation > MAX_SLIT_SEPARATION:
            raise ValueError(f"slit separation {self.slit_separation} m exceeds {MAX_SLIT_SEPARATION} m")


@dataclass(frozen=True)
class VisibilityResult:
    visibility: float
    phase: float  # rad
    rate: float  # Lambda, s^-1
    g_factor: float  # G, s^-1
    zeta: float


@dataclass(frozen=True, eq=False)
class FringePattern:
    positions: np.ndarray  # m
    intensity: np.ndarray  # m^-1
    envelope: np.ndarray  # m^-1
    std_error: np.ndarray | None = None


def reduced_separation(T: float, d: float) -> float:
    """d k_B T / (hbar c): slit separation in units of the thermal photon wavelength / 2 pi."""
    return d * K_B * T / (HBAR * C_LIGHT)


@lru_cache(maxsize=4096)
def _reduced_g(mol: MoleculeParams, X: float, rtol: float) -> float:
    return adaptive_quad(
        lambda x: spectral_shape(mol, x) * float(si_ratio(x * X)), 0.0, reduced_cutoff(mol), rtol,
        points=[mol.ell + 2.0],
    )


@lru_cache(maxsize=4096)
def _reduced_deficit(mol: MoleculeParams, X: float, rtol: float) -> float:
    return adaptive_quad(
        lambda x: spectral_shape(mol, x) * one_minus_si_ratio_scalar(x * X), 0.0,
        reduced_cutoff(mol), rtol, points=[mol.ell + 2.0],
    )


def g_attenuation_quadrature(mol: MoleculeParams, T: float, d: float, tol: float = DEFAULT_RTOL) -> float:
    """G(T, d) in s^-1: emission rate weighted by Si(z)/z with z = omega d / c."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if d < 0:
        raise ValueError(f"slit separation must be >= 0, got {d}")
    if d == 0:
        return total_rate_quadrature(mol, T, tol)
    return rate_scale(mol, T) * _reduced_g(mol, reduced_separation(T, d), tol)


def attenuation_deficit(mol: MoleculeParams, T: float, d: float, tol: float = DEFAULT_RTOL) -> float:
    """Lambda(T) - G(T, d), integrated directly so it stays accurate when G ~ Lambda."""
    if T == 0 or d == 0:
        return 0.0
    if T < 0 or d < 0:
        raise ValueError("temperature and slit separation must be >= 0")
    return rate_scale(mol, T) * _reduced_deficit(mol, reduced_separation(T, d), tol)


def _near_zero_kernel(n: int, x: float) -> float:
    # sin(n atan x) / (x (1+x^2)^(n/2)) = n [1 - ((n^2+2)/6 + n/2) x^2] + O(x^4)
    return n * (1.0 - ((n * n + 2) / 6.0 + n / 2.0) * x * x)


def inner_series_integral(n: int, X: float, rtol: float = 1e-11) -> float:
    """int_0^X sin(n atan x) / (x (1 + x^2)^(n/2)) dx."""

    def kernel(x):
        if x < 1e-8:
            return _near_zero_kernel(n, x)
        return math.sin(n * math.atan(x)) / x * math.exp(-0.5 * n * math.log1p(x * x))

    return adaptive_quad(kernel, 0.0, X, rtol)


def g_attenuation_series(mol: MoleculeParams, T: float, d: float) -> SeriesResult:
    """G(T, d) from the term-by-term integrated large-N expansion, smallest-term truncation."""
    if d < 0:
        raise ValueError(f"slit separation must be >= 0, got {d}")
    if d == 0:
        return total_rate_series(mol, T)
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if mol.n_modes < 10:
        raise ValueError(f"asymptotic series needs n_modes >= 10, got {mol.n_modes}")
    X = reduced_separation(T, d)

    def term(m):
        n = 2 * m + mol.ell + 2
        coeff = rate_series_coefficient(mol, m) / n  # (2m+l+1)! / ((2N)^m m!) with sign
        if coeff == 0.0:
            return 0.0
        return coeff * inner_series_integral(n, X)

    total, last_m, last, diverging = smallest_term_sum(term, series_max_index(mol))
    if diverging:
        warnings.warn(
            f"attenuation series for N={mol.n_modes} is not in its asymptotic regime",
            SeriesDivergenceWarning,
            stacklevel=2,
        )
    scale = rate_scale(mol, T) / X
    return SeriesResult(scale * total, last_m, scale * last, diverging)


def visibility_closed_form(cfg: ExperimentConfig, tol: float = DEFAULT_RTOL) -> VisibilityResult:
    """V = exp(-(Lambda - G) t) with zeta = (Lambda - G) / Lambda and zero phase."""
    mol, T, d, t = cfg.molecule, cfg.temperature, cfg.slit_separation, cfg.flight_time
    if T == 0:
        return VisibilityResult(1.0, 0.0, 0.0, 0.0, 0.0)
    lam = total_rate_quadrature(mol, T, tol)
    deficit = attenuation_deficit(mol, T, d, tol)
    vis = math.exp(-deficit * t)
    zeta = deficit / lam if lam > 0 else 0.0  # rates underflow only as T -> 0, where zeta -> 0
    return VisibilityResult(vis, 0.0, lam, lam - deficit, zeta)


def visibility(mol: MoleculeParams, T: float, d: float, t: float, tol: float = DEFAULT_RTOL) -> float:
    return visibility_closed_form(ExperimentConfig(mol, T, d, t), tol).visibility


def slit_momentum_density(p, sigma_p: float):
    """|psi_slit(p)|^2: normalized Gaussian of standard deviation sigma_p."""
    p = np.asarray(p, dtype=float)
    return np.exp(-0.5 * (p / sigma_p) ** 2) / (math.sqrt(2 * math.pi) * sigma_p)


def fringe_wavenumber(cfg: ExperimentConfig) -> float:
    """m d / (hbar t), the angular wavenumber of the fringes on the screen (rad/m)."""
    return cfg.molecule.mass * cfg.slit_separation / (HBAR * cfg.flight_time)


def fringe_spacing(cfg: ExperimentConfig) -> float:
    return 2 * math.pi / fringe_wavenumber(cfg)


def envelope(cfg: ExperimentConfig, x) -> np.ndarray:
    """I0(x) = (m/t) |psi_slit(m x / t)|^2, normalized to unit area over x."""
    if not cfg.flight_time > 0:
        raise ValueError("the screen pattern needs a positive flight time")
    m, t = cfg.molecule.mass, cfg.flight_time
    x = np.asarray(x, dtype=float)
    return (m / t) * slit_momentum_density(m * x / t, cfg.slit_width_momentum)


def fringe_pattern(cfg: ExperimentConfig, vis: VisibilityResult, screen_grid) -> FringePattern:
    """I(x) = I0(x) [1 + V cos(m d x / (hbar t) + phase)]."""
    x = np.asarray(screen_grid, dtype=float)
    env = envelope(cfg, x)
    intensity = env * (1.0 + vis.visibility * np.cos(fringe_wavenumber(cfg) * x + vis.phase))
    return FringePattern(x, intensity, env)


def far_field_check(cfg: ExperimentConfig) -> float:
    """t / (m d^2 / hbar); values >= 10 mean the far-field form is safe."""
    scale = cfg.molecule.mass * cfg.slit_separation**2 / HBAR
    if scale == 0:
        return math.inf
    return cfg.flight_time / scale


@dataclass(frozen=True)
class ActionCheck:
    dp_total: float  # kg m/s
    action_ratio: float  # dp_total d / hbar, should be <~ 1
    thermal_ratio: float  # k_B T t / hbar, should be >> 1


def action_exchange_check(cfg: ExperimentConfig, tol: float = DEFAULT_RTOL) -> ActionCheck:
    """Random-walk recoil sqrt(Lambda t) * dp_rms against hbar / d."""
    T, t = cfg.temperature, cfg.flight_time
    thermal = K_B * T * t / HBAR
    if T == 0 or t == 0:
        return ActionCheck(0.0, 0.0, thermal)
    law = KickLaw.at(cfg.molecule, T, tol)
    dp_total = math.sqrt(law.rate * t) * momentum_rms(law, tol)
    return ActionCheck(dp_total, dp_total * cfg.slit_separation / HBAR, thermal)
