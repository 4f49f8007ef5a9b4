"""Decoherence temperature (visibility level crossing) and parameter-sweep surfaces."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .numerics import QuadratureError
from .spectrum import DEFAULT_RTOL, MoleculeParams
from .visibility import ExperimentConfig, attenuation_deficit, visibility_closed_form

DEFAULT_BRACKET = (10.0, 5000.0)
MAX_BISECTIONS = 50
AXIS_NAMES = ("T", "d", "t")


class ModelInconsistencyError(RuntimeError):
    """The decoherence exponent is not monotone in temperature on the bracket."""


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if not self.min < self.max:
            raise ValueError(f"axis {self.name}: min must be < max")
        if self.count < 2:
            raise ValueError(f"axis {self.name}: count must be >= 2")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"axis {self.name}: spacing must be linear or log")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError(f"axis {self.name}: log spacing needs min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)

    def __str__(self):
        tail = ":log" if self.spacing == "log" else ""
        return f"{self.name}:{self.min!r}:{self.max!r}:{self.count}{tail}"


@dataclass(frozen=True)
class GridSpec:
    axis1: Axis
    axis2: Axis
    fixed: dict = field(default_factory=dict)  # values for the axes not swept

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ValueError("grid axes must be distinct")

    def require_fixed(self) -> None:
        missing = set(AXIS_NAMES) - {self.axis1.name, self.axis2.name} - set(self.fixed)
        if missing:
            raise ValueError(f"grid needs a fixed value for {sorted(missing)}")

    def nodes(self):
        """(i, j, {T, d, t}) in axis1-major order."""
        for i, a in enumerate(self.axis1.values()):
            for j, b in enumerate(self.axis2.values()):
                params = dict(self.fixed)
                params[self.axis1.name] = float(a)
                params[self.axis2.name] = float(b)
                yield i, j, params


@dataclass(frozen=True, eq=False)
class Surface:
    grid: GridSpec
    values: np.ndarray  # count1 x count2, NaN where undefined or failed
    quantity: str
    failures: int = 0

    def rows(self):
        a1, a2 = self.grid.axis1.values(), self.grid.axis2.values()
        for i, a in enumerate(a1):
            for j, b in enumerate(a2):
                yield float(a), float(b), float(self.values[i, j])


@dataclass(frozen=True)
class DecoherenceRoot:
    temperature: float  # K, NaN when no root
    found: bool
    bracket: tuple[float, float]  # final bracket
    h_lo: float
    h_hi: float
    iterations: int
    message: str = ""


def decoherence_exponent(mol: MoleculeParams, T: float, d: float, t: float, tol: float = DEFAULT_RTOL) -> float:
    """(Lambda(T) - G(T, d)) t, i.e. -ln V."""
    return attenuation_deficit(mol, T, d, tol) * t


def decoherence_temperature(
    mol: MoleculeParams,
    d: float,
    t: float,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol_T: float = 1e-3,
    threshold: float = 0.5,
    tol: float = DEFAULT_RTOL,
) -> DecoherenceRoot:
    """Temperature at which the visibility falls to ``threshold``, by bisection.

    h(T) = (Lambda - G) t + ln(threshold) is checked to be non-decreasing on an
    8-point grid over the bracket; a violation raises ModelInconsistencyError. A
    bracket without a sign change is reported through ``found=False``.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < T_lo < T_hi, got {bracket}")
    if not tol_T > 0:
        raise ValueError("tol_T must be positive")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    shift = math.log(threshold)

    def h(T):
        return decoherence_exponent(mol, T, d, t, tol) + shift

    grid = np.linspace(lo, hi, 8)
    hv = [float(h(T)) for T in grid]
    scale = max(abs(v) for v in hv)
    if any(b < a - 1e-12 * scale for a, b in zip(hv, hv[1:])):
        raise ModelInconsistencyError(
            f"decoherence exponent not monotone in T on [{lo}, {hi}] K for d={d}, t={t}"
        )
    if hv[0] > 0 or hv[-1] < 0:
        if hv[0] > 0:
            msg = f"visibility already below {threshold} at {lo} K"
        else:
            msg = f"visibility still above {threshold} at {hi} K"
        return DecoherenceRoot(math.nan, False, (lo, hi), hv[0], hv[-1], 0, msg)
    k = next(i for i in range(7) if hv[i + 1] >= 0)
    a, b, ha, hb = float(grid[k]), float(grid[k + 1]), hv[k], hv[k + 1]
    it = 0
    while b - a > tol_T and it < MAX_BISECTIONS:
        mid = 0.5 * (a + b)
        hm = h(mid)
        if hm < 0:
            a, ha = mid, hm
        else:
            b, hb = mid, hm
        it += 1
    candidates = [(abs(ha), a), (abs(hb), b)]
    if hb != ha:
        interp = a - ha * (b - a) / (hb - ha)
        if a < interp < b:
            candidates.append((abs(h(interp)), interp))
    root = min(candidates)[1]
    return DecoherenceRoot(root, True, (a, b), hv[0], hv[-1], it)


def _config(mol: MoleculeParams, params: dict) -> ExperimentConfig:
    return ExperimentConfig(mol, *(params[n] for n in AXIS_NAMES))


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def visibility_surface(
    mol: MoleculeParams, grid: GridSpec, tol: float = DEFAULT_RTOL, threads: int = 1
) -> Surface:
    grid.require_fixed()
    nodes = list(grid.nodes())

    def evaluate(node):
        _, _, params = node
        try:
            return visibility_closed_form(_config(mol, params), tol).visibility
        except QuadratureError:
            return None

    out = _parallel_map(evaluate, nodes, threads)
    values = np.full((grid.axis1.count, grid.axis2.count), np.nan)
    failures = 0
    for (i, j, _), v in zip(nodes, out):
        if v is None:
            failures += 1
        else:
            values[i, j] = v
    return Surface(grid, values, "visibility", failures)


def tdec_surface(
    mol: MoleculeParams,
    grid: GridSpec,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol_T: float = 1e-3,
    threshold: float = 0.5,
    tol: float = DEFAULT_RTOL,
    threads: int = 1,
) -> Surface:
    if {grid.axis1.name, grid.axis2.name} != {"d", "t"}:
        raise ValueError("a decoherence-temperature surface spans the d and t axes")
    nodes = list(grid.nodes())

    def evaluate(node):
        _, _, params = node
        try:
            return decoherence_temperature(mol, params["d"], params["t"], bracket, tol_T, threshold, tol)
        except (QuadratureError, ModelInconsistencyError):
            return None

    out = _parallel_map(evaluate, nodes, threads)
    values = np.full((grid.axis1.count, grid.axis2.count), np.nan)
    failures = 0
    for (i, j, _), root in zip(nodes, out):
        if root is None:
            failures += 1
        elif root.found:
            values[i, j] = root.temperature
    return Surface(grid, values, "tdec", failures)


def level_crossings(surface: Surface, level: float = 0.5) -> np.ndarray:
    """For each axis2 value, the axis1 coordinate where the surface first drops below ``level``.

    Linear interpolation between nodes; NaN where no crossing exists.
    """
    a1 = surface.grid.axis1.values()
    out = np.full(surface.grid.axis2.count, np.nan)
    for j in range(surface.grid.axis2.count):
        col = surface.values[:, j]
        for i in range(len(a1) - 1):
            if col[i] >= level > col[i + 1]:
                frac = (col[i] - level) / (col[i] - col[i + 1])
                out[j] = a1[i] + frac * (a1[i + 1] - a1[i])
                break
    return out
