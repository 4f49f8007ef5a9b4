"""Shared numerical helpers: cancellation-safe sinc forms and a checked quadrature."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SeriesDivergenceWarning(RuntimeWarning):
    """Asymptotic series is outside its useful regime."""


SINC_SERIES_CUTOFF = 1e-4
_ONE_MINUS_CUTOFF = 0.2


def sinc(z):
    """Unnormalized sinc, sin(z)/z, with a series branch near zero."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    small = np.abs(z) < SINC_SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 - z2 / 6.0 + z2 * z2 / 120.0, np.sin(z) / z)
    return out[()] if out.ndim == 0 else out


def one_minus_sinc(z):
    """1 - sin(z)/z without cancellation at small |z|."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    small = np.abs(z) < _ONE_MINUS_CUTOFF
    # z^2/3! - z^4/5! + z^6/7! - z^8/9! + z^10/11!
    series = z2 * (1 / 6 - z2 * (1 / 120 - z2 * (1 / 5040 - z2 * (1 / 362880 - z2 / 39916800))))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, series, 1.0 - np.sin(z) / z)
    return out[()] if out.ndim == 0 else out


def si_ratio(z):
    """Si(z)/z, the mean of sinc over [0, z]."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _ONE_MINUS_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = special.sici(z)[0] / z
    out = np.where(small, 1.0 - one_minus_si_ratio(np.where(small, z, 0.0)), direct)
    return out[()] if out.ndim == 0 else out


def one_minus_si_ratio(z):
    """1 - Si(z)/z, accurate for small |z|.

    Series: sum_{k>=1} (-1)^(k+1) z^(2k) / ((2k+1) (2k+1)!).
    """
    z = np.asarray(z, dtype=float)
    z2 = z * z
    small = np.abs(z) < _ONE_MINUS_CUTOFF
    series = z2 * (
        1 / 18 - z2 * (1 / 600 - z2 * (1 / 35280 - z2 * (1 / 3265920 - z2 / 439084800)))
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, series, 1.0 - special.sici(z)[0] / z)
    return out[()] if out.ndim == 0 else out


def one_minus_sinc_scalar(z: float) -> float:
    if abs(z) < _ONE_MINUS_CUTOFF:
        z2 = z * z
        return z2 * (1 / 6 - z2 * (1 / 120 - z2 * (1 / 5040 - z2 * (1 / 362880 - z2 / 39916800))))
    return 1.0 - math.sin(z) / z


def one_minus_si_ratio_scalar(z: float) -> float:
    if abs(z) < _ONE_MINUS_CUTOFF:
        z2 = z * z
        return z2 * (
            1 / 18 - z2 * (1 / 600 - z2 * (1 / 35280 - z2 * (1 / 3265920 - z2 / 439084800)))
        )
    return 1.0 - float(special.sici(z)[0]) / z


def sine_integral(z):
    """Si(z) = int_0^z sin(u)/u du."""
    return special.sici(z)[0]


def adaptive_quad(
    func, a: float, b: float, rtol: float, limit: int = 400, points=None, atol: float = 0.0, sin_freq=None
) -> float:
    """Gauss-Kronrod adaptive quadrature (QUADPACK) with a hard failure mode.

    With ``sin_freq`` the integrand is multiplied by sin(sin_freq * x) and the
    oscillatory QAWO rule is used. Raises QuadratureError when the error
    estimate exceeds both ``rtol`` relative to the result and ``atol``.
    """
    rtol = max(rtol, 1e-13)
    kw = dict(epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
    if sin_freq is None:
        kw["points"] = points
    else:
        kw.update(weight="sin", wvar=sin_freq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(func, a, b, **kw)
    value, abserr = res[0], res[1]
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    if len(res) > 3 and abserr > max(rtol * abs(value), atol) and abserr > 1e-300:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge: estimate {value:.6g}, "
            f"error {abserr:.3g} > rtol {rtol:.1e} ({res[3].splitlines()[0]})"
        )
    return value


def gauss_legendre_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped onto [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
