"""Invariant-set checks, stationary-state refinement and pattern metrics.

The invariant sets are odd monotone profiles with +-1 plateaus outside a
transition gap (or their periodic analogue with period 4 + 2s). The lemma
checks evaluate kernel hypotheses on the discrete kernel, treating each
sample as constant over its cell, so integrals are exact for the samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .core import (
    Field,
    Grid,
    Kernel,
    _check_alignment,
    kernel_integral,
    kernel_negative_part,
    kernel_positive_part,
    random_generator,
)
from .dynamics import Response, SmoothSaturation
from .operator import build_operator_matrix, convolve_values
from .spectral import Spectrum

LEMMAS = ("Positive1", "Positive2", "SmallInhibition1", "SmallInhibition2", "Negative")

# Plateau half-gap for each set-B variant.
_GAPS = {"wide": 2.0, "narrow": 1.0}


class DimensionError(ValueError):
    pass


# --- lemma hypotheses -----------------------------------------------------


@dataclass(frozen=True)
class Hypothesis:
    name: str
    value: float
    threshold: float
    satisfied: bool


@dataclass(frozen=True)
class LemmaReport:
    lemma: str
    hypotheses: tuple[Hypothesis, ...]

    @property
    def applicable(self) -> bool:
        return all(h.satisfied for h in self.hypotheses)

    def failed(self) -> list[str]:
        return [h.name for h in self.hypotheses if not h.satisfied]


def _ge(name: str, value: float, threshold: float) -> Hypothesis:
    return Hypothesis(name, float(value), float(threshold), bool(value >= threshold))


def _le(name: str, value: float, threshold: float) -> Hypothesis:
    return Hypothesis(name, float(value), float(threshold), bool(value <= threshold))


def _cumulative(half: np.ndarray, dx: float, x: np.ndarray) -> np.ndarray:
    """int_0^x of the cell-wise constant function with values ``half[i]`` on
    [i dx - dx/2, i dx + dx/2] (only the right half of cell 0 counts)."""
    edges = np.concatenate([[0.0], (np.arange(len(half)) + 0.5) * dx])
    mass = np.concatenate([[0.0], np.cumsum(half * np.diff(edges))])
    return np.interp(x, edges, mass, right=mass[-1])


def _band_cumulative(half: np.ndarray, dx: float, start: float, x: np.ndarray) -> np.ndarray:
    return _cumulative(half, dx, start + x) - _cumulative(half, dx, np.full_like(x, start))


def check_lemma_hypotheses(kernel: Kernel, lemma: str, s: float | None = None) -> LemmaReport:
    """Evaluate one invariant-set lemma's kernel hypotheses.

    Positive-part support is expected in [-2, 2] and the negative part in
    the bands 2 <= |x| <= 2 + s, each up to half a cell (cell-averaged
    samples straddle band edges). Monotonicity is non-strict with zero
    tolerance, so constant stretches pass.
    """
    if lemma not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}")
    if kernel.dimension != 1:
        raise DimensionError("invariant-set lemmas are one-dimensional")
    s = kernel.s if s is None else float(s)
    dx = kernel.spacing
    m = kernel.radius_taps
    K = kernel.samples
    half = K[m:]
    pos = kernel_positive_part(kernel).samples[m:]
    neg = kernel_negative_part(kernel).samples[m:]
    offsets = np.arange(m + 1) * dx
    tol_edge = dx / 2 + 1e-12

    symmetric = _le("symmetric: max|K(k) - K(-k)|", float(np.max(np.abs(K - K[::-1]))), 0.0)
    int_pos_half = _cumulative(pos, dx, np.array([np.inf]))[0]
    int_neg = float(2.0 * np.sum(neg) * dx - neg[0] * dx)
    int_neg_band = _cumulative(neg, dx, np.array([np.inf]))[0]

    pos_reach = float(offsets[pos > 0].max()) if np.any(pos > 0) else 0.0
    pos_support = _le("K+ support within [-2, 2]: max |k| with K+ > 0", pos_reach, 2.0 + tol_edge)
    if np.any(neg > 0):
        neg_lo, neg_hi = float(offsets[neg > 0].min()), float(offsets[neg > 0].max())
    else:
        neg_lo, neg_hi = 2.0, 2.0
    neg_support = _le(
        "K- support within 2 <= |k| <= 2+s: distance outside band",
        max(2.0 - neg_lo, neg_hi - (2.0 + s), 0.0), tol_edge,
    )
    rises = np.diff(pos)
    nonincreasing = _le("K+ non-increasing for k > 0: max rise", float(rises.max()) if rises.size else 0.0, 0.0)

    hyps: list[Hypothesis]
    if lemma == "Positive1":
        hyps = [
            _ge("int K", kernel_integral(kernel), 2.0),
            symmetric,
            _ge("positive: min K", float(K.min()), 0.0),
            _le("support within [-2, 2]: max |k| with K != 0",
                float(offsets[half != 0].max()) if np.any(half != 0) else 0.0, 2.0 + tol_edge),
        ]
    elif lemma == "Positive2":
        hyps = [
            _ge("int K", kernel_integral(kernel), 2.0),
            symmetric,
            _ge("positive: min K", float(K.min()), 0.0),
            _le("support within [-2, 2]: max |k| with K != 0",
                float(offsets[half != 0].max()) if np.any(half != 0) else 0.0, 2.0 + tol_edge),
            nonincreasing,
        ]
    elif lemma == "SmallInhibition1":
        hyps = [
            _ge("int_0^2 K+ - int K-", int_pos_half - int_neg, 1.0),
            symmetric, nonincreasing, pos_support, neg_support,
        ]
    elif lemma == "SmallInhibition2":
        xs = _cumulative_breakpoints(dx, m, s)
        margin = _cumulative(pos, dx, xs) - _band_cumulative(neg, dx, 2.0, xs)
        hyps = [
            _ge("int_0^2 K+ - int_2^{2+s} K-", int_pos_half - int_neg_band, 1.0),
            symmetric, nonincreasing, pos_support, neg_support,
            _ge("min over x in [0,2] of int_0^x K+ - int_2^{2+x} K-", float(margin.min()), 0.0),
        ]
    else:
        ts = np.linspace(0.0, s, 4 * m + 5) if s > 0 else np.zeros(1)
        lower = _band_cumulative(neg, dx, 2.0, ts)
        upper = _band_cumulative(neg, dx, 2.0 + s - ts, ts)
        mirror = float(np.max(np.abs(lower - upper))) if s > 0 else 0.0
        hyps = [
            _le("int K", kernel_integral(kernel), -2.0),
            _le("non-positive: max K", float(K.max()), 0.0),
            Hypothesis("s < 2", s, 2.0, bool(0.0 < s < 2.0)),
            neg_support,
            symmetric,
            _le("band mirror symmetry: max cumulative mismatch", mirror, dx * max(neg.max(initial=0.0), 1e-300)),
        ]
    return LemmaReport(lemma, tuple(hyps))


def _cumulative_breakpoints(dx: float, m: int, s: float) -> np.ndarray:
    edges = (np.arange(m + 1) + 0.5) * dx
    pts = np.concatenate([[0.0, 2.0], edges, edges - 2.0])
    return np.unique(pts[(pts >= 0.0) & (pts <= 2.0)])


# --- set B ----------------------------------------------------------------


@dataclass(frozen=True)
class SetBSpec:
    """Invariant profile family.

    ``variant``: "wide" (plateaus beyond |x| = 2), "narrow" (beyond |x| = 1)
    or "periodic" (period 4 + 2s: +1 on [0, 2], -1 on [2+s, 4+s], monotone
    transitions that are point-symmetric about each band centre).
    """

    variant: str
    tolerance: float = 1e-6
    s: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in ("wide", "narrow", "periodic"):
            raise ValueError(f"unknown set-B variant {self.variant!r}")
        if self.variant == "periodic" and not self.s > 0:
            raise ValueError("periodic set B needs s > 0")

    @property
    def gap(self) -> float:
        return _GAPS[self.variant]

    @property
    def period(self) -> float:
        return 4.0 + 2.0 * self.s


@dataclass(frozen=True)
class Membership:
    member: bool
    violations: dict[str, float]

    @property
    def worst(self) -> float:
        return max(self.violations.values(), default=0.0)


def _positive(x: float) -> float:
    return float(max(x, 0.0)) + 0.0  # no -0.0 in reports


def set_B_membership(field: Field, spec: SetBSpec) -> Membership:
    grid = field.grid
    if grid.dimension != 1:
        raise DimensionError("set-B membership is defined for 1D fields")
    u = field.values
    x = grid.axis()
    eps = 1e-9 * grid.spacing
    if spec.variant == "periodic":
        viol = _periodic_violations(u, grid, spec, eps)
    else:
        if grid.periodic:
            raise ValueError("wide/narrow set B needs a bounded (symmetric) grid")
        g = spec.gap
        right, left = x > g + eps, x < -g - eps
        viol = {
            "odd": float(np.max(np.abs(u + u[::-1]))),
            "monotone": _positive(-np.min(np.diff(u))),
            "plateau": float(max(
                np.max(np.abs(u[right] - 1.0), initial=0.0),
                np.max(np.abs(u[left] + 1.0), initial=0.0),
            )),
        }
    return Membership(all(v <= spec.tolerance for v in viol.values()), viol)


def _periodic_violations(u: np.ndarray, grid: Grid, spec: SetBSpec, eps: float) -> dict[str, float]:
    if not grid.periodic:
        raise ValueError("periodic set B needs a periodic grid")
    P, s, L = spec.period, spec.s, grid.length
    if abs(L / P - round(L / P)) > 1e-9:
        raise ValueError(f"domain length {L} is not a multiple of the period {P}")
    x = grid.axis()

    def interp(pts: np.ndarray) -> np.ndarray:
        return np.interp(pts, x, u, period=L)

    xi = np.mod(x, P)
    xi = np.where(xi > P - eps, xi - P, xi)
    up = (xi >= -eps) & (xi <= 2.0 + eps)
    down = (xi >= 2.0 + s - eps) & (xi <= 4.0 + s + eps)
    fall = (xi > 2.0 + eps) & (xi < 2.0 + s - eps)
    rise = (xi > 4.0 + s + eps) & (xi < P - eps)

    # Non-increasing from the +1 plateau centre to the -1 plateau centre,
    # non-decreasing on the way back (cyclically).
    nxt = np.roll(u, -1)
    mid = np.mod(x + grid.spacing / 2, P)
    descending = (mid > 1.0) & (mid < 3.0 + s)
    step = nxt - u
    mono = max(_positive(np.max(step[descending], initial=-np.inf)),
               _positive(-np.min(step[~descending], initial=np.inf)))

    c_fall, c_rise = 2.0 + s / 2, 4.0 + 1.5 * s
    anti = 0.0
    for mask, c in ((fall, c_fall), (rise, c_rise)):
        if np.any(mask):
            mirror = x[mask] + 2.0 * (c - xi[mask])
            anti = max(anti, float(np.max(np.abs(u[mask] + interp(mirror)))))
    return {
        "periodic": float(np.max(np.abs(u - interp(x + P)))),
        "plateau": float(max(np.max(np.abs(u[up] - 1.0), initial=0.0),
                             np.max(np.abs(u[down] + 1.0), initial=0.0))),
        "monotone": mono,
        "band_symmetry": anti,
        "bounded": _positive(np.max(np.abs(u)) - 1.0),
    }


def _monotone_profile(rng: np.random.Generator, n_knots: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Knots on [0, 1] and non-decreasing values ending at 1; value at 0+ may jump."""
    w = rng.exponential(size=n_knots + 1)
    # Occasional flat stretches and jumps.
    w[rng.random(n_knots + 1) < 0.25] = 0.0
    if w.sum() == 0.0:
        w[-1] = 1.0
    v = np.cumsum(w) / w.sum()
    v[-1] = 1.0
    return np.linspace(0.0, 1.0, n_knots + 1), v


def random_B_member(grid: Grid, spec: SetBSpec, rng: np.random.Generator) -> Field:
    """Random member of B: an odd transition built from sorted non-negative
    increments (normalized so the profile climbs from -1 to 1)."""
    knots, vals = _monotone_profile(rng)
    x = grid.axis()

    def h(t: np.ndarray) -> np.ndarray:
        # Odd, non-decreasing, h(+-1) = +-1, clamped beyond.
        a = np.abs(t)
        out = np.where(a >= 1.0, 1.0, np.interp(a, knots, vals))
        out = np.where(a == 0.0, 0.0, out)
        return np.sign(t) * out

    if spec.variant != "periodic":
        return Field(grid, h(x / spec.gap))
    knots2, vals2 = _monotone_profile(rng)

    def h2(t: np.ndarray) -> np.ndarray:
        a = np.abs(t)
        out = np.where(a >= 1.0, 1.0, np.interp(a, knots2, vals2))
        out = np.where(a == 0.0, 0.0, out)
        return np.sign(t) * out

    s, P = spec.s, spec.period
    xi = np.mod(x, P)
    u = np.empty_like(x)
    # Piecewise in the period cell: +1, falling band, -1, rising band.
    u[:] = np.where(xi <= 2.0, 1.0, -1.0)
    fall = (xi > 2.0) & (xi < 2.0 + s)
    rise = xi > 4.0 + s
    u[fall] = -h((xi[fall] - (2.0 + s / 2)) / (s / 2))
    u[rise] = h2((xi[rise] - (4.0 + 1.5 * s)) / (s / 2))
    return Field(grid, u)


def extremal_B_members(grid: Grid, spec: SetBSpec) -> list[Field]:
    """Sharp step at the centre and a zero-valued gap (steps at the gap edges)."""
    x = grid.axis()
    if spec.variant != "periodic":
        g = spec.gap
        step = np.sign(x)
        wide = np.where(x > g, 1.0, np.where(x < -g, -1.0, 0.0))
        return [Field(grid, step), Field(grid, wide)]
    s, P = spec.s, spec.period
    xi = np.mod(x, P)
    base = np.where(xi <= 2.0, 1.0, -1.0)
    sharp = base.copy()
    c_fall, c_rise = 2.0 + s / 2, 4.0 + 1.5 * s
    sharp[(xi > 2.0) & (xi < c_fall)] = 1.0
    sharp[np.isclose(xi, c_fall) | np.isclose(xi, c_rise)] = 0.0
    sharp[xi > c_rise] = 1.0
    flat = base.copy()
    flat[((xi > 2.0) & (xi < 2.0 + s)) | (xi > 4.0 + s)] = 0.0
    return [Field(grid, sharp), Field(grid, flat)]


@dataclass(frozen=True)
class InvarianceResult:
    status: str  # "preserved" | "violated" | "hypothesis-unmet"
    all_preserved: bool
    worst_violation: float
    tolerance: float
    n_samples: int
    lemma_report: LemmaReport | None = None
    failures: list[int] = field(default_factory=list)


_DEFAULT_LEMMA = {"wide": "Positive1", "periodic": "Negative"}


def verify_fT_invariance(
    kernel: Kernel,
    response: Response,
    spec: SetBSpec,
    grid: Grid,
    n_samples: int = 100,
    seed: int = 0,
    lemma: str | None = None,
) -> InvarianceResult:
    """Apply f(T) to sampled members of B and re-test membership.

    The first two samples are the extremal step profiles, the rest are
    random. Outputs are tested at ``spec.tolerance + 2 dx max|bK|`` to allow
    for quadrature of band edges. When the matching lemma's hypotheses fail
    the status is ``"hypothesis-unmet"`` whatever the outcome.
    """
    _check_alignment(kernel, grid)
    if response.kind == "smooth":
        raise ValueError("invariance is stated for the linear or clamped response")
    effective = kernel.scaled(response.b)
    lemma = lemma or _DEFAULT_LEMMA.get(spec.variant)
    report = None
    if lemma is not None:
        report = check_lemma_hypotheses(effective, lemma, s=spec.s if spec.variant == "periodic" else None)
    slack = spec.tolerance + 2.0 * grid.spacing * effective.max_abs()
    out_spec = SetBSpec(spec.variant, slack, spec.s)

    rng = random_generator(seed)
    samples = extremal_B_members(grid, spec)[:n_samples]
    while len(samples) < n_samples:
        samples.append(random_B_member(grid, spec, rng))

    worst = 0.0
    failures = []
    for i, u in enumerate(samples):
        image = response(convolve_values(kernel, u.values, grid, "direct"))
        result = set_B_membership(Field(grid, image), out_spec)
        worst = max(worst, result.worst)
        if not result.member:
            failures.append(i)
    preserved = not failures
    if report is not None and not report.applicable:
        status = "hypothesis-unmet"
    else:
        status = "preserved" if preserved else "violated"
    return InvarianceResult(status, preserved, worst, slack, len(samples), report, failures)


# --- stationary states ----------------------------------------------------


def residual(field: Field, kernel: Kernel, a: float, response: Response) -> float:
    """||-a u + f(T u)||_inf."""
    _check_alignment(kernel, field.grid)
    Tu = convolve_values(kernel, field.values, field.grid, "direct")
    return float(np.max(np.abs(-a * field.values + response(Tu))))


@dataclass(frozen=True)
class NewtonResult:
    field: Field
    residual: float
    iterations: int
    converged: bool
    fallback_used: bool = False
    history: tuple[float, ...] = ()


def newton_refine(
    field: Field,
    kernel: Kernel,
    a: float,
    response: Response,
    max_iters: int = 20,
    tol: float = 1e-12,
    matrix: np.ndarray | None = None,
) -> NewtonResult:
    """Damped Newton on F(u) = -a u + f(T u).

    Jacobian -a I + diag(f'(T u)) H, with f' = 0 on the clamped set. Steps
    are halved until the residual decreases; if no damped step helps (or the
    Jacobian is singular) one fixed-point update u <- f(T u)/a is tried. The
    best iterate is returned, so the residual never exceeds the input's.
    """
    grid = field.grid
    _check_alignment(kernel, grid)
    H = build_operator_matrix(kernel, grid).entries if matrix is None else matrix
    N = H.shape[0]

    def F(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Tv = H @ v
        return -a * v + response(Tv), Tv

    u = field.flat.copy()
    Fu, Tu = F(u)
    r = float(np.max(np.abs(Fu)))
    history = [r]
    fallback = False
    it = 0
    while it < max_iters and r > tol:
        it += 1
        J = response.derivative(Tu)[:, None] * H
        J[np.diag_indices(N)] -= a
        step = None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", linalg.LinAlgWarning)
                step = linalg.solve(J, -Fu)
        except (linalg.LinAlgError, linalg.LinAlgWarning):
            step = None
        accepted = False
        if step is not None and np.all(np.isfinite(step)):
            lam = 1.0
            while lam >= 2.0**-10:
                trial = u + lam * step
                Ft, Tt = F(trial)
                rt = float(np.max(np.abs(Ft)))
                if rt < r:
                    u, Fu, Tu, r = trial, Ft, Tt, rt
                    accepted = True
                    break
                lam *= 0.5
        if not accepted:
            trial = response(Tu) / a
            Ft, Tt = F(trial)
            rt = float(np.max(np.abs(Ft)))
            fallback = True
            if rt < r:
                u, Fu, Tu, r = trial, Ft, Tt, rt
            else:
                history.append(r)
                break
        history.append(r)
    return NewtonResult(Field(grid, u), r, it, r <= tol, fallback, tuple(history))


@dataclass(frozen=True)
class BranchPoint:
    b: float
    amplitude: float
    residual: float
    accepted: bool


def bifurcation_scan(
    kernel: Kernel,
    grid: Grid,
    a: float,
    spectrum: Spectrum,
    mode_index: int,
    b_values: Sequence[float],
    seed_amplitude: float = 0.5,
    response_factory=SmoothSaturation,
    tol: float = 1e-8,
    max_iters: int = 60,
    relax_time: float = 400.0,
) -> list[BranchPoint]:
    """Stationary amplitudes ||u||_2 along b, seeded from eigenfield ``mode_index``.

    Each b-value is refined by Newton from the previous accepted nonzero
    state (natural continuation) and from ``seed_amplitude * e_k``. If
    neither gives a nonzero root, the seed is first relaxed by explicit Euler
    for ``relax_time`` (unstable trivial states then drift onto the branch,
    stable ones decay) and refined again. Points whose residual stays above
    ``tol`` are returned with ``accepted=False`` (gaps in the branch).
    """
    if spectrum.eigenvalues[mode_index] <= 0:
        raise ValueError("bifurcation scan needs a mode with positive eigenvalue")
    H = build_operator_matrix(kernel, grid).entries
    e = spectrum.field(mode_index).flat
    w = grid.cell_volume
    rows = []
    previous: np.ndarray | None = None
    for b in b_values:
        response = response_factory(b)

        def refine(start: np.ndarray):
            # Iterate well past ``tol`` so trivial states land at round-off.
            res = newton_refine(Field(grid, start), kernel, a, response, max_iters=max_iters, tol=1e-14, matrix=H)
            amp = float(np.sqrt(np.sum(res.field.flat**2) * w))
            return (res.residual <= tol, amp, res)

        seeds = [seed_amplitude * e] if previous is None else [previous, seed_amplitude * e]
        best = None
        for seed in seeds:
            cand = refine(seed)
            if best is None or _better(cand, best):
                best = cand
            if cand[0] and cand[1] > 1e-6:
                break
        if not (best[0] and best[1] > 1e-6):
            cand = refine(_relax(H, a, response, seed_amplitude * e, relax_time))
            if _better(cand, best):
                best = cand
        converged, amp, res = best
        if converged and amp > 1e-6:
            previous = res.field.flat.copy()
        rows.append(BranchPoint(float(b), amp, res.residual, bool(converged)))
    return rows


def _relax(H: np.ndarray, a: float, response: Response, u: np.ndarray, duration: float) -> np.ndarray:
    dt = 0.5 / (a + abs(response.b) * np.max(np.sum(np.abs(H), axis=1)))
    for _ in range(int(np.ceil(duration / dt))):
        incr = -a * u + response(H @ u)
        if np.max(np.abs(incr)) < 1e-13:
            break
        u = u + dt * incr
    return u


def _better(cand, best) -> bool:
    # Converged beats unconverged; among converged, nontrivial beats trivial.
    if cand[0] != best[0]:
        return cand[0]
    if cand[0]:
        return cand[1] > 1e-6 and best[1] <= 1e-6
    return cand[2].residual < best[2].residual


# --- pattern metrics ------------------------------------------------------


def _first_peak(profile: np.ndarray, min_height: float) -> float | None:
    below = np.flatnonzero(profile < 0.0)
    if below.size == 0:
        return None
    for i in range(max(below[0], 1), len(profile) - 1):
        if profile[i] >= profile[i - 1] and profile[i] > profile[i + 1] and profile[i] > min_height:
            denom = profile[i - 1] - 2.0 * profile[i] + profile[i + 1]
            shift = 0.5 * (profile[i - 1] - profile[i + 1]) / denom if denom != 0 else 0.0
            return float(i + shift)
    return None


def _autocorrelation(v: np.ndarray, periodic: bool) -> np.ndarray:
    shape = v.shape
    axes = tuple(range(len(shape)))
    if periodic:
        spec = np.fft.rfftn(v)
        return np.fft.irfftn(np.abs(spec) ** 2, s=shape, axes=axes)
    padded = tuple(2 * n for n in shape)
    spec = np.fft.rfftn(v, s=padded, axes=axes)
    raw = np.fft.irfftn(np.abs(spec) ** 2, s=padded, axes=axes)
    ones = np.fft.rfftn(np.ones(shape), s=padded, axes=axes)
    counts = np.fft.irfftn(np.abs(ones) ** 2, s=padded, axes=axes)
    # Unbiased estimate: divide by the number of overlapping pairs.
    return raw / np.maximum(np.rint(counts), 1.0)


def stripe_wavelength(field: Field, min_peak: float = 0.1) -> float | None:
    """Dominant spatial period from the first autocorrelation peak.

    1D fields use the autocorrelation over lags up to N/2; 2D fields its
    radial average (integer-radius bins). Returns ``None`` when no peak
    above ``min_peak`` (relative to lag 0) follows the first zero crossing,
    e.g. for near-constant fields.
    """
    grid = field.grid
    v = field.values - field.values.mean()
    if np.max(np.abs(v)) <= 1e-12 * (1.0 + np.max(np.abs(field.values))):
        return None
    ac = _autocorrelation(v, grid.periodic)
    n = grid.points_per_axis
    if grid.dimension == 1:
        profile = ac[: n // 2 + 1]
    else:
        idx = np.arange(ac.shape[0])
        lag = np.minimum(idx, ac.shape[0] - idx)
        r = np.hypot(lag[:, None], lag[None, :])
        bins = np.rint(r).astype(int)
        keep = bins <= n // 2
        sums = np.bincount(bins[keep], weights=ac[keep])
        counts = np.bincount(bins[keep])
        profile = sums / np.maximum(counts, 1)
    if profile[0] <= 0:
        return None
    lag = _first_peak(profile / profile[0], min_peak)
    return None if lag is None else lag * grid.spacing
