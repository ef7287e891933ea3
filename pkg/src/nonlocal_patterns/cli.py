"""Command line entry point.

Exit codes: 0 success, 2 config error, 3 numerical blow-up, 4 IO error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import LEMMAS, bifurcation_scan, check_lemma_hypotheses
from .core import ModeSeed, Random, SimConfig
from .dynamics import BlowUpError, SmoothSaturation, integrate
from .io import (
    ConfigError,
    parse_config,
    write_branch_csv,
    write_field_csv,
    write_image,
    write_lemma_csv,
    write_report,
    write_spectrum_csv,
)
from .presets import SCALES, get_preset, list_presets, preset_spectrum, run_preset
from .spectral import b_critical

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4


def _load(args) -> SimConfig:
    config = parse_config(args.config)
    if args.seed is not None and isinstance(config.initial_condition, Random):
        config = replace(config, initial_condition=Random(args.seed, config.initial_condition.amplitude))
    return config


def cmd_run(args) -> int:
    config = _load(args)
    out = Path(args.out_dir)
    spectrum = None
    if isinstance(config.initial_condition, ModeSeed):
        spectrum = preset_spectrum(config.kernel, config.grid)
    report = integrate(config, spectrum=spectrum)
    write_field_csv(report.final, out / "field.csv")
    write_image(report.final, out / "field.pgm")
    write_report(report, out / "report.json")
    print(f"steps={report.steps_taken} stationary={report.stationary} residual={report.residual_inf:.3e}")
    print(f"wrote {out / 'field.csv'}, {out / 'field.pgm'}, {out / 'report.json'}")
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.list or not args.name:
        for name in list_presets():
            print(f"{name:36s} {get_preset(name).description}")
        return EXIT_OK
    seed = 0 if args.seed is None else args.seed
    result = run_preset(args.name, args.scale, seed, args.out_dir)
    for key, value in result.metrics.items():
        print(f"{key}: {value}")
    if result.report is not None:
        r = result.report
        print(f"steps={r.steps_taken} stationary={r.stationary} residual={r.residual_inf:.3e}")
    print(f"artifacts in {result.out_dir}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    config = _load(args)
    spectrum = preset_spectrum(config.kernel, config.grid, k=args.modes)
    path = write_spectrum_csv(spectrum, Path(args.out_dir) / "spectrum.csv")
    print(f"lambda_max={spectrum.lambda_max:.12g}")
    if spectrum.lambda_max > 0:
        print(f"b_critical={b_critical(spectrum, config.a):.12g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_kernel(args) -> int:
    config = _load(args)
    kernel = config.kernel.scaled(config.response.b) if args.scaled else config.kernel
    report = check_lemma_hypotheses(kernel, args.lemma, s=args.s)
    for h in report.hypotheses:
        mark = "ok  " if h.satisfied else "FAIL"
        print(f"{mark} {h.name}: {h.value:.6g} (threshold {h.threshold:.6g})")
    print(f"{report.lemma}: {'applicable' if report.applicable else 'not applicable'}")
    write_lemma_csv(report, Path(args.out_dir) / "lemma.csv")
    return EXIT_OK


def cmd_scan(args) -> int:
    config = _load(args)
    spectrum = preset_spectrum(config.kernel, config.grid, k=max(args.mode + 1, 10))
    lo, hi = args.b_range
    bs = np.linspace(lo, hi, args.points)
    if args.relative:
        bs = bs * config.a / spectrum.eigenvalues[args.mode]
    rows = bifurcation_scan(config.kernel, config.grid, config.a, spectrum, args.mode, bs,
                            seed_amplitude=args.seed_amplitude, response_factory=SmoothSaturation)
    for r in rows:
        print(f"b={r.b:.8g} amplitude={r.amplitude:.6e} residual={r.residual:.3e} accepted={r.accepted}")
    write_branch_csv(rows, Path(args.out_dir) / "branch.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-patterns", description="Nonlocal pattern formation experiments")
    p.add_argument("--seed", type=int, default=None, help="seed for random initial data")
    p.add_argument("--out-dir", default="out", help="artifact directory")
    p.add_argument("--threads", type=int, default=None, help="limit BLAS/FFT threads")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a config file")
    run.add_argument("config")
    run.set_defaults(func=cmd_run)

    pre = sub.add_parser("preset", help="run a named experiment")
    pre.add_argument("name", nargs="?")
    pre.add_argument("--scale", choices=SCALES, default="desk")
    pre.add_argument("--list", action="store_true")
    pre.set_defaults(func=cmd_preset)

    spec = sub.add_parser("spectrum", help="eigenvalues of T for a config")
    spec.add_argument("config")
    spec.add_argument("--modes", type=int, default=20)
    spec.set_defaults(func=cmd_spectrum)

    chk = sub.add_parser("check-kernel", help="evaluate invariant-set lemma hypotheses")
    chk.add_argument("config")
    chk.add_argument("lemma", choices=LEMMAS)
    chk.add_argument("--s", type=float, default=None, help="negative band width (default: kernel's)")
    chk.add_argument("--scaled", action="store_true", help="check b*K instead of K")
    chk.set_defaults(func=cmd_check_kernel)

    scan = sub.add_parser("scan", help="stationary branch amplitudes over a b range (tanh response)")
    scan.add_argument("config")
    scan.add_argument("--mode", type=int, default=0)
    scan.add_argument("--b-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    scan.add_argument("--points", type=int, default=21)
    scan.add_argument("--relative", action="store_true", help="b-range in units of a/lambda_mode")
    scan.add_argument("--seed-amplitude", type=float, default=0.5)
    scan.set_defaults(func=cmd_scan)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
