"""Named experiment presets and the runner that writes their artifacts.

Scales: ``desk`` uses 1D grids of 200 points on [-25, 25] and 128^2 on
[-25, 25]^2; ``paper`` uses 600 points on [-50, 50] (both dimensions).
Periodic presets need a domain length that is a multiple of the period, so
they use [-24, 24] (desk) and [-48, 48] (paper) with spacing 1/4 and 1/6.

Response slopes are resolved against the local spectrum: ``critical`` means
b = a / lambda_max, ``factor`` multiplies that value and ``absolute`` is
used as given.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .analysis import (
    SetBSpec,
    bifurcation_scan,
    check_lemma_hypotheses,
    set_B_membership,
    stripe_wavelength,
)
from .core import (
    Field,
    Grid,
    Kernel,
    ModeSeed,
    PeriodicSquare,
    Random,
    SimConfig,
    SquarePlateau,
    StepSign,
    kernel_integral,
    make_grid,
    sample_kernel,
)
from .dynamics import Response, integrate, stability_classify
from .io import (
    config_to_mapping,
    write_branch_csv,
    write_field_csv,
    write_image,
    write_lemma_csv,
    write_report,
    write_spectrum_csv,
)
from .operator import build_operator_matrix
from .spectral import Spectrum, b_critical, eigendecompose, project_onto_modes, top_modes

SCALES = ("desk", "paper")
ANALYSIS_STEPS = ("spectrum", "stability", "setB", "wavelength", "branch")

# Slope multiples of b_critical for the two-row 2D pattern figures.
LARGE_B_FACTOR = 10.0
SMALL_B_FACTOR = 1.5


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    dimension: int
    family: str
    params: dict | None = None
    response: str = "saturation"
    b_rule: tuple[str, float] = ("critical", 1.0)
    initial: str = "random"
    periodic: bool = False
    dt: float = 0.1
    max_steps: int = 20_000
    stationarity_tol: float = 1e-8
    analysis_steps: tuple[str, ...] = ()
    setB: SetBSpec | None = None
    lemma: str | None = None
    simulate: bool = True
    max_steps_paper: int | None = None

    @property
    def outputs(self) -> tuple[str, ...]:
        if not self.simulate:
            return ("kernel.csv", "kernel.pgm", "report.json")
        out = ["config.yaml", "field.csv", "field.pgm", "report.json"]
        if "spectrum" in self.analysis_steps:
            out.append("spectrum.csv")
        if "branch" in self.analysis_steps:
            out.append("branch.csv")
        if self.lemma:
            out.append("lemma.csv")
        return tuple(out)


def _grid(dimension: int, scale: str, periodic: bool) -> Grid:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {SCALES}")
    if periodic:
        return make_grid(dimension, 24.0, 192, True) if scale == "desk" else make_grid(dimension, 48.0, 576, True)
    if dimension == 1:
        return make_grid(1, 25.0, 200) if scale == "desk" else make_grid(1, 50.0, 600)
    return make_grid(2, 25.0, 128) if scale == "desk" else make_grid(2, 50.0, 600)


def _presets() -> dict[str, ExperimentPreset]:
    out: dict[str, ExperimentPreset] = {}

    def add(p: ExperimentPreset) -> None:
        out[p.name] = p

    # 1D kernel shapes.
    for fam in ("K1", "K2", "K3", "K4"):
        add(ExperimentPreset(f"kernel-1d-{fam}", f"1D kernel {fam} samples", 1, fam, simulate=False))
    # Linear problem at b = a / lambda_max from random data.
    for fam in ("K1", "K2", "K3", "K4"):
        add(ExperimentPreset(
            f"linear-1d-{fam}", f"linear response, {fam}, b at the critical slope", 1, fam,
            response="linear", b_rule=("critical", 1.0), initial="random", dt=0.25,
            max_steps=40_000, stationarity_tol=1e-9, analysis_steps=("spectrum", "stability"),
        ))
    # Saturated problem from a step: invariant-set kernels.
    narrow = SetBSpec("narrow", 1e-3)
    add(ExperimentPreset(
        "schauder-1d-K1", "saturation b=0.8, local activation with weak inhibition band", 1, "K1",
        params={"A": 1.0, "B": 0.1, "p": 2.0, "q": 3.0}, b_rule=("absolute", 0.8), initial="step",
        analysis_steps=("setB", "wavelength"), setB=narrow, lemma="SmallInhibition1",
    ))
    add(ExperimentPreset(
        "schauder-1d-K2", "saturation b=0.7, activation with a long inhibition band", 1, "K2",
        params={"A": 1.0, "B": 0.15, "p": 2.0, "q": 4.0}, b_rule=("absolute", 0.7), initial="step",
        analysis_steps=("setB", "wavelength"), setB=narrow, lemma="SmallInhibition2",
    ))
    add(ExperimentPreset(
        "schauder-1d-K3", "saturation b=1.0, activation ring without local activation", 1, "K3",
        b_rule=("absolute", 1.0), initial="step", analysis_steps=("setB", "wavelength"), setB=narrow,
    ))
    add(ExperimentPreset(
        "negative-1d-K4-periodic", "saturation b=1.0, inhibition band 2<=|x|<=3, periodic domain", 1, "K4",
        b_rule=("absolute", 1.0), initial="periodic", periodic=True,
        analysis_steps=("setB", "wavelength"), setB=SetBSpec("periodic", 1e-3, s=1.0), lemma="Negative",
    ))
    add(ExperimentPreset(
        "bifurcation-1d-K1", "branch scan through the first critical slope (smooth response)", 1, "K1",
        response="smooth", analysis_steps=("spectrum", "branch"), simulate=True, initial="mode",
        b_rule=("factor", 1.05), max_steps=20_000,
    ))
    # 2D kernels and pattern runs.
    for fam in ("K1", "K2", "K3", "K4", "K5"):
        add(ExperimentPreset(f"kernel-2d-{fam}", f"2D kernel {fam} samples", 2, fam, simulate=False))
        for size, factor in (("large", LARGE_B_FACTOR), ("small", SMALL_B_FACTOR)):
            for init in ("random", "regular"):
                add(ExperimentPreset(
                    f"nonlinear-2d-{fam}-{size}-{init}",
                    f"2D {fam}, saturation b = {factor} b_critical, {init} initial data", 2, fam,
                    b_rule=("factor", factor), initial=init, max_steps=3000, max_steps_paper=6000,
                    stationarity_tol=1e-6, analysis_steps=("wavelength",),
                ))
    return out


PRESETS = _presets()


def list_presets() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}") from None


def preset_kernel(preset: ExperimentPreset, grid: Grid) -> Kernel:
    return sample_kernel(preset.family, preset.params, grid.spacing, grid.dimension)


def preset_spectrum(kernel: Kernel, grid: Grid, k: int = 20) -> Spectrum:
    if grid.dimension == 1:
        return eigendecompose(build_operator_matrix(kernel, grid), k=min(k, grid.size), select="value")
    return top_modes(kernel, grid, k=4)


def _initial(preset: ExperimentPreset, seed: int):
    return {
        "random": lambda: Random(seed=seed),
        "regular": lambda: SquarePlateau(4.0),
        "step": StepSign,
        "periodic": lambda: PeriodicSquare(4.0 + 2.0 * (preset.setB.s if preset.setB else 1.0)),
    }[preset.initial]()


def resolve_slope(preset: ExperimentPreset, spectrum: Spectrum | None, a: float = 1.0) -> float:
    rule, value = preset.b_rule
    if rule == "absolute":
        return float(value)
    if spectrum is None:
        raise ValueError("slope rule needs a spectrum")
    return float(value) * b_critical(spectrum, a)


@dataclass
class PresetResult:
    name: str
    scale: str
    out_dir: Path
    artifacts: dict[str, Path] = field(default_factory=dict)
    metrics: dict[str, Any] = field(default_factory=dict)
    report: Any = None
    config: SimConfig | None = None
    spectrum: Spectrum | None = None


def build_config(preset: ExperimentPreset, scale: str = "desk", seed: int = 0) -> tuple[SimConfig, Spectrum | None]:
    grid = _grid(preset.dimension, scale, preset.periodic)
    kernel = preset_kernel(preset, grid)
    spectrum = None
    if preset.b_rule[0] != "absolute" or "spectrum" in preset.analysis_steps or preset.initial == "mode":
        spectrum = preset_spectrum(kernel, grid)
    b = resolve_slope(preset, spectrum)
    steps = preset.max_steps_paper if (scale == "paper" and preset.max_steps_paper) else preset.max_steps
    ic = ModeSeed(0, 0.5) if preset.initial == "mode" else _initial(preset, seed)
    config = SimConfig(
        grid=grid, kernel=kernel, a=1.0, response=Response(preset.response, b), dt=preset.dt,
        max_steps=steps, stationarity_tol=preset.stationarity_tol,
        initial_condition=ic,
        method="auto" if grid.dimension == 1 else "fft",
    )
    return config, spectrum


def run_preset(
    name: str, scale: str = "desk", seed: int = 0, out_dir: str | Path = "out", progress=None
) -> PresetResult:
    """Run a preset and write its artifacts under ``out_dir/name/scale``."""
    preset = get_preset(name)
    target = Path(out_dir) / name / scale
    target.mkdir(parents=True, exist_ok=True)
    result = PresetResult(name, scale, target)

    if not preset.simulate:
        grid = _grid(preset.dimension, scale, preset.periodic)
        kernel = preset_kernel(preset, grid)
        m = kernel.radius_taps
        kgrid = make_grid(preset.dimension, m * grid.spacing, 2 * m + 1)
        kfield = Field(kgrid, kernel.samples)
        result.artifacts["kernel.csv"] = write_field_csv(kfield, target / "kernel.csv")
        peak = max(kernel.max_abs(), 1e-300)
        result.artifacts["kernel.pgm"] = write_image(kfield.with_values(kernel.samples / peak), target / "kernel.pgm")
        result.metrics = {"integral": kernel_integral(kernel), "taps": 2 * m + 1, "spacing": grid.spacing}
        result.artifacts["report.json"] = write_report({"preset": name, "scale": scale, **result.metrics},
                                                       target / "report.json")
        return result

    config, spectrum = build_config(preset, scale, seed)
    result.config, result.spectrum = config, spectrum
    result.artifacts["config.yaml"] = target / "config.yaml"
    (target / "config.yaml").write_text(yaml.safe_dump(config_to_mapping(config), sort_keys=True))

    metrics: dict[str, Any] = {"b": config.response.b}
    if spectrum is not None:
        metrics["lambda_max"] = spectrum.lambda_max
        metrics["b_critical"] = b_critical(spectrum, config.a)
        result.artifacts["spectrum.csv"] = write_spectrum_csv(spectrum, target / "spectrum.csv")
    if "stability" in preset.analysis_steps and spectrum is not None:
        verdict = stability_classify(config.a, config.response.b, spectrum)
        metrics["linearly_stable"] = verdict.stable
        metrics["unstable_modes"] = verdict.unstable_indices
    if preset.lemma:
        lemma = check_lemma_hypotheses(config.kernel.scaled(config.response.b), preset.lemma)
        metrics["lemma"] = preset.lemma
        metrics["lemma_applicable"] = lemma.applicable
        result.artifacts["lemma.csv"] = write_lemma_csv(lemma, target / "lemma.csv")

    snapshot_every = None
    if progress is not None:
        snapshot_every = max(config.max_steps // 10, 1)
    report = integrate(config, spectrum=spectrum, on_snapshot=progress, snapshot_every=snapshot_every)
    result.report = report
    final = report.final

    if spectrum is not None and preset.response == "linear":
        coeffs = project_onto_modes(final, spectrum)
        norm = final.norm2()
        metrics["dominant_mode_ratio"] = float(abs(coeffs[0]) / norm) if norm > 0 else 0.0
    if "setB" in preset.analysis_steps and preset.setB is not None:
        member = set_B_membership(final, preset.setB)
        metrics["setB_member"] = member.member
        metrics["setB_violations"] = member.violations
    if "wavelength" in preset.analysis_steps:
        metrics["wavelength"] = stripe_wavelength(final)
    if "branch" in preset.analysis_steps and spectrum is not None:
        bc = b_critical(spectrum, config.a)
        rows = bifurcation_scan(config.kernel, config.grid, config.a, spectrum, 0,
                                np.linspace(0.9, 1.1, 21) * bc)
        result.artifacts["branch.csv"] = write_branch_csv(rows, target / "branch.csv")
        metrics["branch_points"] = len(rows)

    result.metrics = metrics
    result.artifacts["field.csv"] = write_field_csv(final, target / "field.csv")
    result.artifacts["field.pgm"] = write_image(final, target / "field.pgm")
    result.artifacts["report.json"] = write_report(
        report, target / "report.json", extra={"preset": name, "scale": scale, "seed": seed, "metrics": metrics}
    )
    return result
