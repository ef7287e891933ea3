import numpy as np
import pytest

from nonlocal_patterns.presets import (
    LARGE_B_FACTOR,
    SMALL_B_FACTOR,
    build_config,
    get_preset,
    list_presets,
    run_preset,
)


def test_preset_catalogue():
    names = list_presets()
    for fam in ("K1", "K2", "K3", "K4"):
        assert f"linear-1d-{fam}" in names
    for fam in ("K1", "K2", "K3", "K4", "K5"):
        for size in ("large", "small"):
            for start in ("random", "regular"):
                assert f"nonlinear-2d-{fam}-{size}-{start}" in names
    assert {"schauder-1d-K1", "schauder-1d-K2", "negative-1d-K4-periodic"} <= set(names)
    with pytest.raises(KeyError):
        get_preset("no-such-preset")


def test_desk_and_full_scale_grids():
    cfg, _ = build_config(get_preset("linear-1d-K1"), "desk")
    assert cfg.grid.points_per_axis == 200
    full, _ = build_config(get_preset("linear-1d-K1"), "paper")
    assert full.grid.points_per_axis == 600 and full.kernel.samples.size == 49


def test_nonlinear_slopes_follow_critical_value():
    for size, factor in (("large", LARGE_B_FACTOR), ("small", SMALL_B_FACTOR)):
        cfg, sp = build_config(get_preset(f"nonlinear-2d-K3-{size}-random"))
        assert cfg.response.b == pytest.approx(factor / sp.lambda_max)


def test_linear_k3_tracks_dominant_mode(tmp_path):
    res = run_preset("linear-1d-K3", out_dir=tmp_path)
    assert res.metrics["dominant_mode_ratio"] >= 0.999
    assert res.metrics["b"] == pytest.approx(1.0 / res.spectrum.lambda_max)


def test_schauder_k1_lands_in_narrow_set(tmp_path):
    res = run_preset("schauder-1d-K1", out_dir=tmp_path)
    assert res.metrics["setB_member"] and res.metrics["lemma_applicable"]
    for name in ("config.yaml", "field.csv", "field.pgm", "report.json", "lemma.csv"):
        assert (res.out_dir / name).exists()


def test_negative_periodic_wavelength(tmp_path):
    res = run_preset("negative-1d-K4-periodic", out_dir=tmp_path)
    dx = res.config.grid.spacing
    assert res.metrics["wavelength"] == pytest.approx(6.0, abs=2 * dx)
    assert res.metrics["setB_member"]


def test_kernel_preset_exports_samples(tmp_path):
    res = run_preset("kernel-1d-K1", out_dir=tmp_path)
    rows = (res.out_dir / "kernel.csv").read_text().splitlines()
    assert rows[0] == "x,u" and len(rows) - 1 == res.metrics["taps"]


def test_preset_determinism(tmp_path):
    a = run_preset("schauder-1d-K2", seed=3, out_dir=tmp_path / "a")
    b = run_preset("schauder-1d-K2", seed=3, out_dir=tmp_path / "b")
    for name in ("field.csv", "field.pgm", "report.json", "config.yaml"):
        assert (a.out_dir / name).read_bytes() == (b.out_dir / name).read_bytes()


def test_random_seed_changes_start():
    c0, _ = build_config(get_preset("nonlinear-2d-K1-small-random"), seed=0)
    c1, _ = build_config(get_preset("nonlinear-2d-K1-small-random"), seed=1)
    assert c0.initial_condition != c1.initial_condition
    assert np.isfinite(c0.response.b)
