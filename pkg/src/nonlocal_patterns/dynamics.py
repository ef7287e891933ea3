"""Explicit Euler integration of u_t = -a u + f(T u)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Field, Kernel, SimConfig, _check_alignment, initial_field
from .operator import convolve_values
from .spectral import Spectrum

RESPONSE_KINDS = ("linear", "saturation", "smooth")


class BlowUpError(RuntimeError):
    """The explicit iteration produced non-finite values."""

    def __init__(self, step: int, message: str):
        super().__init__(f"blow-up at step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class Response:
    """Pointwise response f.

    linear:     f(x) = b x
    saturation: f(x) = clamp(b x, -1, 1)
    smooth:     f(x) = tanh(b x), a C-infinity stand-in for the clamp
    """

    kind: str
    b: float

    def __post_init__(self) -> None:
        if self.kind not in RESPONSE_KINDS:
            raise ValueError(f"unknown response kind {self.kind!r}")

    def __call__(self, x):
        if self.kind == "linear":
            return self.b * x
        if self.kind == "saturation":
            return np.clip(self.b * x, -1.0, 1.0)
        return np.tanh(self.b * x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.full_like(x, self.b)
        if self.kind == "saturation":
            # Zero on the clamped set |b x| >= 1.
            return np.where(np.abs(self.b * x) < 1.0, self.b, 0.0)
        return self.b / np.cosh(self.b * x) ** 2


def Linear(b: float) -> Response:
    return Response("linear", float(b))


def Saturation(b: float) -> Response:
    return Response("saturation", float(b))


def SmoothSaturation(b: float) -> Response:
    return Response("smooth", float(b))


def apply_response(response: Response, value):
    return response(value)


def _rhs(values: np.ndarray, kernel: Kernel, grid, a: float, response: Response, method: str) -> np.ndarray:
    return -a * values + response(convolve_values(kernel, values, grid, method))


def euler_step(field: Field, kernel: Kernel, a: float, response: Response, dt: float,
               method: str = "direct") -> Field:
    """One step u + dt * (-a u + f(T u))."""
    _check_alignment(kernel, field.grid)
    new = field.values + dt * _rhs(field.values, kernel, field.grid, a, response, method)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(1, "non-finite values after a single step")
    return Field(field.grid, new)


@dataclass
class RunReport:
    final: Field
    steps_taken: int
    stationary: bool
    residual_inf: float
    update_norm: float
    dt: float = 0.0
    mode_times: np.ndarray | None = None
    mode_coefficients: np.ndarray | None = None
    norm_history: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.steps_taken * self.dt

    @property
    def mode_history(self) -> list[tuple[float, np.ndarray]] | None:
        if self.mode_times is None:
            return None
        return list(zip(self.mode_times.tolist(), self.mode_coefficients))


def stability_margin_warning(config: SimConfig) -> str | None:
    b = abs(config.response.b)
    bound = config.dt * (config.a + b * config.kernel.norm1())
    if bound > 1:
        return f"dt*(a + |b|*||K||_1) = {bound:.3g} > 1; explicit Euler may oscillate"
    return None


def integrate(
    config: SimConfig,
    u0: Field | np.ndarray | None = None,
    *,
    spectrum: Spectrum | None = None,
    record_every: int | None = None,
    on_snapshot: Callable[[int, Field], None] | None = None,
    snapshot_every: int | None = None,
) -> RunReport:
    """Step until ||u_{n+1} - u_n||_inf / dt <= tol or ``max_steps``.

    The increment at the current state is computed first; if it is already
    within tolerance the run stops without applying it, so a stationary
    initial state reports zero steps. With ``record_every`` and a spectrum,
    mode coefficients and the weighted L2 norm are sampled every
    ``record_every`` steps (and at exit).
    """
    grid, kernel, a, f = config.grid, config.kernel, config.a, config.response
    notes = []
    msg = stability_margin_warning(config)
    if msg:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    if u0 is None:
        start = initial_field(config, spectrum)
    elif isinstance(u0, Field):
        start = u0
    else:
        start = Field(grid, u0)
    u = np.array(start.values, dtype=float)
    w = grid.cell_volume

    times, coeffs, norms = [], [], []
    recording = record_every is not None and spectrum is not None

    def record(step: int) -> None:
        times.append(step * config.dt)
        coeffs.append(spectrum.eigenfields @ u.ravel() * w)
        norms.append(float(np.sqrt(np.sum(u * u) * w)))

    stationary = False
    update_norm = np.inf
    step = 0
    while True:
        if recording and step % record_every == 0:
            record(step)
        if on_snapshot is not None and snapshot_every and step % snapshot_every == 0:
            on_snapshot(step, Field(grid, u))
        incr = _rhs(u, kernel, grid, a, f, config.method)
        norm = float(np.max(np.abs(incr)))
        if not np.isfinite(norm):
            raise BlowUpError(step, f"non-finite right-hand side (max|u| = {np.max(np.abs(u)):.3e})")
        if norm <= config.stationarity_tol:
            stationary = True
            update_norm = norm
            break
        if step >= config.max_steps:
            break
        u = u + config.dt * incr
        update_norm = norm
        step += 1
        if not np.all(np.isfinite(u)):
            raise BlowUpError(step, "state became non-finite")

    if recording and (not times or times[-1] != step * config.dt):
        record(step)
    residual = float(np.max(np.abs(_rhs(u, kernel, grid, a, f, config.method))))
    return RunReport(
        final=Field(grid, u),
        steps_taken=step,
        stationary=stationary,
        residual_inf=residual,
        update_norm=float(update_norm),
        dt=config.dt,
        mode_times=np.array(times) if recording else None,
        mode_coefficients=np.array(coeffs) if recording else None,
        norm_history=np.array(norms) if recording else None,
        warnings=notes,
    )


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    mu: np.ndarray
    unstable_indices: list[int]


def stability_classify(a: float, b: float, spectrum: Spectrum | np.ndarray) -> StabilityVerdict:
    """Linear stability: growth rates mu_j = b lambda_j - a; stable iff all mu_j <= 0.

    For a ``Spectrum`` the verdict also uses its full-spectrum extremes
    (lambda_max for b > 0, lambda_min for b < 0), so truncated mode sets
    cannot hide an unstable direction. ``unstable_indices`` lists retained
    modes only.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if b == 0:
        raise ValueError("b must be nonzero")
    lam = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    mu = b * lam - a
    unstable = [int(j) for j in np.flatnonzero(mu > 1e-12)]
    stable = not unstable
    if isinstance(spectrum, Spectrum):
        extreme = spectrum.lambda_max if b > 0 else spectrum.lambda_min
        if np.isfinite(extreme):
            stable = stable and b * extreme - a <= 1e-12
    return StabilityVerdict(stable, mu, unstable)


@dataclass(frozen=True)
class ModeDecayResult:
    max_relative_error: float
    norm_nonincreasing: bool
    max_norm_increase: float


def mode_decay_check(
    report: RunReport, spectrum: Spectrum, a: float, b: float, slack: float = 1e-8
) -> ModeDecayResult:
    """Compare recorded coefficients with a_j(0) exp(mu_j t).

    Modes whose initial coefficient is below 1e-12 of the largest are
    skipped. ``norm_nonincreasing`` checks successive weighted L2 norms with
    an absolute ``slack``.
    """
    if report.mode_coefficients is None:
        raise ValueError("run has no recorded mode history")
    t = report.mode_times
    c = report.mode_coefficients
    c0 = c[0]
    scale = np.max(np.abs(c0)) if c0.size else 0.0
    if scale == 0.0:
        worst = 0.0
    else:
        mu = b * spectrum.eigenvalues - a
        active = np.abs(c0) > 1e-12 * scale
        predicted = c0[active][None, :] * np.exp(np.outer(t, mu[active]))
        worst = float(np.max(np.abs(c[:, active] - predicted) / np.abs(predicted)))
    norms = report.norm_history
    increase = float(np.max(np.diff(norms))) if len(norms) > 1 else 0.0
    return ModeDecayResult(worst, increase <= slack, max(increase, 0.0))

