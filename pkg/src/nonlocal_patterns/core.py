"""Grids, fields, kernels and simulation configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate

KERNEL_FAMILIES = ("K1", "K2", "K3", "K4", "K5", "custom")

# Subcells per axis used to cell-average 2D radial kernels.
_SUPERSAMPLE_2D = 16


class SpacingMismatchError(ValueError):
    """Kernel lattice spacing differs from the grid spacing."""


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over [-r, r]^dimension.

    A bounded grid has nodes x_i = -r + i*dx with dx = 2r/(n - 1), so both
    endpoints are nodes. A periodic grid identifies -r with r and has
    dx = 2r/n; its nodes are x_i = -r + i*dx for i < n.
    """

    dimension: int
    extent: float
    points_per_axis: int
    periodic: bool = False

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")
        if self.points_per_axis < 3:
            raise ValueError(f"points_per_axis must be >= 3, got {self.points_per_axis}")

    @property
    def spacing(self) -> float:
        if self.periodic:
            return 2.0 * self.extent / self.points_per_axis
        return 2.0 * self.extent / (self.points_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        """Quadrature weight dx^dimension."""
        return self.spacing**self.dimension

    @property
    def length(self) -> float:
        """Side length of the domain (the period for periodic grids)."""
        return 2.0 * self.extent

    def axis(self) -> np.ndarray:
        return -self.extent + np.arange(self.points_per_axis) * self.spacing

    def coordinate(self, index: int) -> float:
        return -self.extent + index * self.spacing

    def index_of(self, x: float) -> int:
        return int(round((x + self.extent) / self.spacing))

    def mesh(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        if self.dimension == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))


def make_grid(dimension: int, extent_r: float, points_per_axis: int, periodic: bool = False) -> Grid:
    return Grid(int(dimension), float(extent_r), int(points_per_axis), bool(periodic))


@dataclass(frozen=True, eq=False)
class Field:
    """Real values sampled on a grid; the array has shape ``grid.shape``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.size != self.grid.size:
            raise ValueError(f"field has {vals.size} values, grid needs {self.grid.size}")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def norm2(self) -> float:
        """Discrete L2 norm with weight dx^d."""
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def inner(self, other: "Field") -> float:
        return float(np.sum(self.values * other.values) * self.grid.cell_volume)


@dataclass(frozen=True)
class Band:
    """Radial band: ``amplitude`` on inner <= |x| <= outer (signed)."""

    inner: float
    outer: float
    amplitude: float


@dataclass(frozen=True, eq=False)
class Kernel:
    """Even, compactly supported kernel sampled at multiples of ``spacing``.

    ``samples`` has length 2m+1 per axis, centered on offset 0. Each sample
    is the cell average of the continuous profile over
    [k*dx - dx/2, k*dx + dx/2]^d, so ``sum(samples) * dx^d`` reproduces the
    continuous integral (exactly in 1D for band kernels).
    """

    spacing: float
    dimension: int
    samples: np.ndarray
    family: str = "custom"
    s: float = 0.0
    support_half_width: float = 0.0
    bands: tuple[Band, ...] = ()
    analytic_integral: float | None = None
    params: dict | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.samples, dtype=float)
        if vals.ndim != self.dimension or len(set(vals.shape)) != 1 or vals.shape[0] % 2 != 1:
            raise ValueError(f"kernel samples must be an odd-length {self.dimension}D square array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("kernel samples must be finite")
        flipped = vals[::-1] if self.dimension == 1 else vals[::-1, ::-1]
        if not np.array_equal(vals, flipped):
            raise ValueError("kernel samples must be even: K(k) == K(-k)")
        vals.setflags(write=False)
        object.__setattr__(self, "samples", vals)

    @property
    def radius_taps(self) -> int:
        return self.samples.shape[0] // 2

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def offsets(self) -> np.ndarray:
        m = self.radius_taps
        return np.arange(-m, m + 1) * self.spacing

    def scaled(self, factor: float) -> "Kernel":
        bands = tuple(Band(b.inner, b.outer, factor * b.amplitude) for b in self.bands)
        analytic = None if self.analytic_integral is None else factor * self.analytic_integral
        return Kernel(
            self.spacing, self.dimension, factor * self.samples, self.family, self.s,
            self.support_half_width, bands, analytic, self.params,
        )

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def norm1(self) -> float:
        return float(np.sum(np.abs(self.samples)) * self.cell_volume)

    def norm2(self) -> float:
        return float(np.sqrt(np.sum(self.samples**2) * self.cell_volume))


def _check_alignment(kernel: Kernel, grid: Grid) -> None:
    if kernel.dimension != grid.dimension:
        raise SpacingMismatchError(
            f"kernel is {kernel.dimension}D but grid is {grid.dimension}D"
        )
    if not math.isclose(kernel.spacing, grid.spacing, rel_tol=1e-12, abs_tol=0.0):
        raise SpacingMismatchError(
            f"kernel spacing {kernel.spacing!r} != grid spacing {grid.spacing!r}"
        )


def _taps_for_support(support: float, spacing: float) -> int:
    # Largest k whose cell [k*dx - dx/2, k*dx + dx/2] meets [-R, R] in positive measure.
    m = math.ceil(support / spacing + 0.5) - 1
    return max(m, 0)


def _band_cell_averages_1d(bands: Sequence[Band], spacing: float, m: int) -> np.ndarray:
    k = np.arange(0, m + 1) * spacing
    lo_cell, hi_cell = k - spacing / 2, k + spacing / 2
    out = np.zeros(m + 1)
    for band in bands:
        # Band occupies [-outer, -inner] and [inner, outer].
        for a, b in ((band.inner, band.outer), (-band.outer, -band.inner)):
            overlap = np.clip(np.minimum(hi_cell, b) - np.maximum(lo_cell, a), 0.0, None) / spacing
            # Cells fully inside the band get the amplitude exactly.
            overlap[(lo_cell >= a) & (hi_cell <= b)] = 1.0
            out += band.amplitude * overlap
    return np.concatenate([out[:0:-1], out])


def _profile_cell_averages_1d(
    profile: Callable[[float], float], spacing: float, m: int, breakpoints: Sequence[float]
) -> np.ndarray:
    half = np.zeros(m + 1)
    pts = sorted({abs(float(p)) for p in breakpoints} | {-abs(float(p)) for p in breakpoints})
    for i in range(m + 1):
        a, b = i * spacing - spacing / 2, i * spacing + spacing / 2
        inner = [p for p in pts if a < p < b]
        val, _ = integrate.quad(lambda x: profile(abs(x)), a, b, points=inner or None, limit=200)
        half[i] = val / spacing
    return np.concatenate([half[:0:-1], half])


def _profile_cell_averages_2d(radial: Callable[[np.ndarray], np.ndarray], spacing: float, m: int) -> np.ndarray:
    sub = (np.arange(_SUPERSAMPLE_2D) + 0.5) / _SUPERSAMPLE_2D - 0.5
    quad = np.zeros((m + 1, m + 1))
    for i in range(m + 1):
        xs = (i + sub) * spacing
        for j in range(i, m + 1):
            ys = (j + sub) * spacing
            r = np.hypot(xs[:, None], ys[None, :])
            quad[i, j] = quad[j, i] = float(np.mean(radial(r)))
    top = np.concatenate([quad[:0:-1], quad], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def _bands_profile(bands: Sequence[Band]) -> Callable[[np.ndarray], np.ndarray]:
    def radial(r: np.ndarray) -> np.ndarray:
        out = np.zeros_like(r, dtype=float)
        for band in bands:
            out = out + band.amplitude * ((r >= band.inner) & (r <= band.outer))
        return out

    return radial


def _family_bands(family: str, params: dict, dimension: int) -> tuple[tuple[Band, ...], float]:
    """Band layout and negative-band width ``s`` for a named family."""
    p = dict(params)
    A = float(p.get("A", 0.0))
    B = float(p.get("B", 0.0))
    if A < 0 or B < 0:
        raise ValueError("band amplitudes A and B must be non-negative")
    if family in ("K1", "K2"):
        pp, q = float(p["p"]), float(p["q"])
        _check_order(0.0, pp, q)
        return (Band(0.0, pp, A), Band(pp, q, -B)), q - pp
    if family == "K3":
        pp, q, mm = float(p["p"]), float(p["q"]), float(p["m"])
        _check_order(pp, q, mm)
        return (Band(pp, q, A), Band(q, mm, -B)), mm - q
    if family == "K4" and dimension == 2:
        pp, q = float(p["p"]), float(p["q"])
        _check_order(0.0, pp, q)
        return (Band(0.0, pp, -B), Band(pp, q, A)), pp
    if family in ("K4", "K5"):
        pp, q = float(p["p"]), float(p["q"])
        _check_order(0.0, pp, q)
        return (Band(pp, q, -B),), q - pp
    raise ValueError(f"unknown kernel family {family!r}")


def _check_order(*edges: float) -> None:
    if edges[0] < 0 or any(b < a for a, b in zip(edges, edges[1:])) or edges[-1] <= 0:
        raise ValueError(f"band edges must satisfy 0 <= p <= q with positive support, got {edges}")


# Defaults used when a family is requested without parameters.
FAMILY_DEFAULTS: dict[tuple[str, int], dict] = {
    ("K1", 1): {"A": 1.0, "B": 0.25, "p": 1.0, "q": 4.0},
    ("K2", 1): {"A": 1.0, "B": 0.1, "p": 1.5, "q": 4.0},
    ("K3", 1): {"A": 1.0, "B": 0.0, "p": 1.0, "q": 3.0, "m": 3.0},
    ("K4", 1): {"B": 1.1, "p": 2.0, "q": 3.0},
    ("K5", 1): {"B": 1.0, "p": 2.0, "q": 4.0},
    ("K1", 2): {"A": 1.0, "B": 3.0, "p": 2.0, "q": 2.5},
    ("K2", 2): {"A": 1.0, "B": 0.05, "p": 2.0, "q": 4.0},
    ("K3", 2): {"A": 1.0, "B": 0.35, "p": 1.0, "q": 2.5, "m": 4.0},
    ("K4", 2): {"A": 0.2, "B": 1.0, "p": 1.5, "q": 3.0},
    ("K5", 2): {"B": 1.0, "p": 2.0, "q": 4.0},
}


def sample_kernel(
    family: str,
    params: dict | None,
    grid_spacing: float,
    dimension: int = 1,
    *,
    profile: Callable[[float], float] | None = None,
    support: float | None = None,
    breakpoints: Sequence[float] = (),
    s: float = 0.0,
) -> Kernel:
    """Sample a radial kernel on the lattice ``k * grid_spacing``.

    Named families (K1..K5) are piecewise-constant radial bands built from
    ``params`` (amplitudes A, B and edges p <= q [<= m]). ``custom`` takes
    either ``params={"bands": [(inner, outer, amplitude), ...]}`` or a
    radial ``profile`` with its ``support`` half-width.
    """
    if family not in KERNEL_FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}")
    if not grid_spacing > 0:
        raise ValueError("grid_spacing must be positive")
    if dimension not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    params = dict(params or {})

    if family == "custom" and profile is not None:
        if support is None or not support > 0:
            raise ValueError("custom profile kernels need a positive support")
        m = _taps_for_support(support, grid_spacing)
        if dimension == 1:
            samples = _profile_cell_averages_1d(profile, grid_spacing, m, tuple(breakpoints) + (support,))
        else:
            samples = _profile_cell_averages_2d(np.vectorize(profile, otypes=[float]), grid_spacing, m)
        return Kernel(grid_spacing, dimension, samples, "custom", float(s), float(support))

    if family == "custom":
        try:
            bands = tuple(Band(float(a), float(b), float(c)) for a, b, c in params["bands"])
        except KeyError as exc:
            raise ValueError("custom kernels need 'bands' or a profile") from exc
        for band in bands:
            _check_order(band.inner, band.outer)
        s_val = float(params.get("s", s))
    else:
        if not params:
            params = FAMILY_DEFAULTS[(family, dimension)]
        bands, s_val = _family_bands(family, params, dimension)

    support_r = max(b.outer for b in bands)
    m = _taps_for_support(support_r, grid_spacing)
    if dimension == 1:
        samples = _band_cell_averages_1d(bands, grid_spacing, m)
        analytic = sum(2.0 * b.amplitude * (b.outer - b.inner) for b in bands)
    else:
        samples = _profile_cell_averages_2d(_bands_profile(bands), grid_spacing, m)
        analytic = sum(math.pi * b.amplitude * (b.outer**2 - b.inner**2) for b in bands)
    named = None if family == "custom" else {key: float(v) for key, v in params.items()}
    return Kernel(grid_spacing, dimension, samples, family, s_val, support_r, bands, analytic, named)


def kernel_integral(kernel: Kernel) -> float:
    return float(np.sum(kernel.samples) * kernel.cell_volume)


def _part(kernel: Kernel, sign: float) -> Kernel:
    if kernel.bands:
        # Average the same-signed bands alone, so cells straddling a sign
        # change keep both contributions and the part integrals stay exact.
        bands = tuple(Band(b.inner, b.outer, sign * b.amplitude) for b in kernel.bands if sign * b.amplitude > 0)
        m = kernel.radius_taps
        if not bands:
            samples = np.zeros_like(kernel.samples)
        elif kernel.dimension == 1:
            samples = _band_cell_averages_1d(bands, kernel.spacing, m)
        else:
            samples = _profile_cell_averages_2d(_bands_profile(bands), kernel.spacing, m)
    else:
        samples = np.maximum(sign * kernel.samples, 0.0)
    return Kernel(kernel.spacing, kernel.dimension, samples, kernel.family, kernel.s, kernel.support_half_width)


def kernel_positive_part(kernel: Kernel) -> Kernel:
    """Non-negative K_+; band kernels split by band sign, others pointwise."""
    return _part(kernel, 1.0)


def kernel_negative_part(kernel: Kernel) -> Kernel:
    """Non-negative K_- with K = K_+ - K_- (to round-off for band kernels)."""
    return _part(kernel, -1.0)


# --- initial conditions --------------------------------------------------


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Random:
    """Uniform on [-amplitude, amplitude] from a Philox counter-based stream."""

    seed: int = 0
    amplitude: float = 1.0


@dataclass(frozen=True)
class StepSign:
    """sign(x) along the first axis (0 at x = 0)."""


@dataclass(frozen=True)
class SquarePlateau:
    """+1 on [-h, h]^d and -1 elsewhere."""

    half_width: float = 4.0


@dataclass(frozen=True)
class ModeSeed:
    """``amplitude`` times eigenfield ``index`` (0-based, by descending eigenvalue)."""

    index: int = 0
    amplitude: float = 1.0


@dataclass(frozen=True)
class PeriodicSquare:
    """+1/-1 square wave along the first axis with a +1 plateau centred at ``center``.

    With period 4 + 2s and center 1 this is the sharp member of the periodic
    invariant set (+1 on [0, 2], -1 on [2+s, 4+s], jumps at band centres).
    """

    period: float = 6.0
    center: float = 1.0


@dataclass(frozen=True)
class FromFile:
    path: str


InitialCondition = Union[Zero, Random, StepSign, SquarePlateau, ModeSeed, PeriodicSquare, FromFile]


def random_generator(seed: int) -> np.random.Generator:
    """Philox-4x64 counter-based generator; reproducible across platforms."""
    return np.random.Generator(np.random.Philox(int(seed)))


# --- configuration --------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    kernel: Kernel
    a: float = 1.0
    response: "object" = None  # dynamics.Response; typed loosely to avoid an import cycle
    dt: float = 0.1
    max_steps: int = 100_000
    stationarity_tol: float = 1e-8
    initial_condition: InitialCondition = field(default_factory=Zero)
    method: str = "auto"

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"degradation rate a must be positive, got {self.a}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.dt * self.a < 1:
            raise ValueError(f"explicit Euler needs dt*a < 1, got dt*a = {self.dt * self.a}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be a positive integer")
        if not self.stationarity_tol > 0:
            raise ValueError("stationarity_tol must be positive")
        if self.response is None:
            raise ValueError("a response function is required")
        if self.method not in ("auto", "direct", "fft"):
            raise ValueError(f"unknown convolution method {self.method!r}")
        _check_alignment(self.kernel, self.grid)


def initial_field(config: SimConfig, spectrum=None) -> Field:
    """Materialize the configured initial condition on the config grid."""
    grid = config.grid
    ic = config.initial_condition
    if isinstance(ic, Zero):
        return Field(grid, np.zeros(grid.shape))
    if isinstance(ic, Random):
        rng = random_generator(ic.seed)
        return Field(grid, rng.uniform(-ic.amplitude, ic.amplitude, size=grid.shape))
    if isinstance(ic, StepSign):
        return Field(grid, np.sign(grid.mesh()[0]))
    if isinstance(ic, SquarePlateau):
        inside = np.ones(grid.shape, dtype=bool)
        for coord in grid.mesh():
            inside &= np.abs(coord) <= ic.half_width
        return Field(grid, np.where(inside, 1.0, -1.0))
    if isinstance(ic, PeriodicSquare):
        phase = np.cos(2.0 * np.pi * (grid.mesh()[0] - ic.center) / ic.period)
        # Nodes sitting on a jump get 0, keeping the wave odd about it.
        return Field(grid, np.where(np.abs(phase) < 1e-12, 0.0, np.sign(phase)))
    if isinstance(ic, ModeSeed):
        if spectrum is None:
            raise ValueError("ModeSeed initial condition needs a spectrum")
        return Field(grid, ic.amplitude * spectrum.eigenfields[ic.index].reshape(grid.shape))
    if isinstance(ic, FromFile):
        from .io import read_field_csv

        return read_field_csv(Path(ic.path), grid)
    raise TypeError(f"unsupported initial condition {ic!r}")
