import warnings

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nonlocal_patterns.analysis import (
    LEMMAS,
    SetBSpec,
    check_lemma_hypotheses,
    newton_refine,
    residual,
    verify_fT_invariance,
)
from nonlocal_patterns.core import (
    Field,
    SimConfig,
    kernel_negative_part,
    kernel_positive_part,
    make_grid,
    sample_kernel,
)
from nonlocal_patterns.dynamics import Linear, Saturation, SmoothSaturation, integrate
from nonlocal_patterns.operator import apply_T, build_operator_matrix, verify_Linfty_bound
from nonlocal_patterns.spectral import eigendecompose, project_onto_modes

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

amplitudes = st.floats(-2.0, 2.0, allow_nan=False).filter(lambda a: abs(a) > 1e-3)


@st.composite
def band_lists(draw, max_bands=3):
    n = draw(st.integers(1, max_bands))
    edges = sorted(draw(st.lists(st.floats(0.05, 5.0), min_size=n + 1, max_size=n + 1, unique=True)))
    edges[0] = draw(st.sampled_from([0.0, edges[0]]))
    return [(edges[i], edges[i + 1], draw(amplitudes)) for i in range(n)]


@st.composite
def kernel_and_grid(draw, dim=1):
    n = draw(st.integers(20, 90)) if dim == 1 else draw(st.integers(8, 16))
    extent = draw(st.floats(3.0, 15.0))
    periodic = draw(st.booleans()) if dim == 1 else False
    g = make_grid(dim, extent, n, periodic=periodic)
    k = sample_kernel("custom", {"bands": draw(band_lists())}, g.spacing, dim)
    return k, g


def _field(g, seed, scale=1.0):
    return Field(g, scale * np.random.default_rng(seed).uniform(-1, 1, g.shape))


@SETTINGS
@given(band_lists(), st.floats(0.05, 0.5), st.sampled_from([1, 2]))
def test_kernel_symmetric_and_parts_reconstruct(bands, dx, dim):
    k = sample_kernel("custom", {"bands": bands}, dx, dim)
    flipped = k.samples[::-1] if dim == 1 else k.samples[::-1, ::-1]
    assert np.array_equal(k.samples, flipped)
    pos, neg = kernel_positive_part(k).samples, kernel_negative_part(k).samples
    assert np.all(pos >= 0) and np.all(neg >= 0)
    assert np.max(np.abs(pos - neg - k.samples)) <= 1e-14 * max(1.0, k.max_abs())
    offsets = np.abs(k.offsets())
    beyond = offsets > k.support_half_width + dx / 2
    if dim == 1:
        assert np.all(k.samples[beyond] == 0)


@SETTINGS
@given(st.integers(1, 2), st.floats(0.5, 100.0), st.integers(3, 400))
def test_grid_round_trip(dim, extent, n):
    g = make_grid(dim, extent, n)
    assert g.spacing > 0
    for i in {0, 1, n // 2, n - 1}:
        assert g.index_of(g.coordinate(i)) == i


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31))
def test_direct_matrix_fft_agree(kg, seed):
    k, g = kg
    u = _field(g, seed)
    direct = apply_T(k, u).values
    scale = max(np.max(np.abs(direct)), 1e-300)
    H = build_operator_matrix(k, g).entries
    assert np.max(np.abs(H @ u.flat - direct)) <= 1e-12 * scale + 1e-300
    assert np.max(np.abs(apply_T(k, u, "fft").values - direct)) <= 1e-10 * max(scale, 1.0)
    # Symmetric and constant along diagonals.
    assert np.array_equal(H, H.T)
    if not g.periodic:
        assert np.allclose(np.diag(H, 1), H[0, 1])


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_and_self_adjointness(kg, seed, alpha, beta):
    k, g = kg
    u, v = _field(g, seed), _field(g, seed + 1)
    Tu, Tv = apply_T(k, u).values, apply_T(k, v).values
    combo = apply_T(k, Field(g, alpha * u.values + beta * v.values)).values
    scale = max(1.0, np.max(np.abs(Tu)) + np.max(np.abs(Tv))) * (abs(alpha) + abs(beta) + 1)
    assert np.max(np.abs(combo - alpha * Tu - beta * Tv)) <= 1e-12 * scale
    lhs = np.sum(Tu * v.values) * g.cell_volume
    rhs = np.sum(u.values * Tv) * g.cell_volume
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-12)


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31), st.floats(0.01, 100.0))
def test_linfty_bound(kg, seed, scale):
    k, g = kg
    assert verify_Linfty_bound(k, _field(g, seed, scale))[2]


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31))
def test_parseval_full_spectrum(kg, seed):
    k, g = kg
    sp = eigendecompose(build_operator_matrix(k, g))
    u = _field(g, seed)
    coeffs = project_onto_modes(u, sp)
    assert abs(np.sum(coeffs**2) - u.norm2() ** 2) <= 1e-8 * u.norm2() ** 2


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31), st.floats(0.1, 5.0), st.floats(0.2, 3.0), st.floats(0.1, 2.0))
def test_saturated_trajectories_stay_in_box(kg, seed, b, a, amp):
    k, g = kg
    dt = min(0.9 / a, 0.5)
    cfg = SimConfig(grid=g, kernel=k, a=a, response=Saturation(b), dt=dt, max_steps=30, stationarity_tol=1e-300)
    u0 = _field(g, seed, amp)
    bound = max(u0.norm_inf(), 1.0 / a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = integrate(cfg, u0)
    assert out.final.norm_inf() <= bound * (1 + 1e-12)


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31), st.floats(-4, 4))
def test_linear_flow_is_linear(kg, seed, alpha):
    k, g = kg
    cfg = SimConfig(grid=g, kernel=k, response=Linear(0.3), dt=0.05, max_steps=20, stationarity_tol=1e-300)
    u0 = _field(g, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        base = integrate(cfg, u0).final.values
        scaled = integrate(cfg, Field(g, alpha * u0.values)).final.values
    assert np.max(np.abs(scaled - alpha * base)) <= 1e-10 * max(1.0, np.max(np.abs(alpha * base)))


@SETTINGS
@given(st.integers(0, 2**31), band_lists(), st.floats(0.3, 4.0))
def test_odd_data_stay_odd(seed, bands, b):
    g = make_grid(1, 10, 81)
    k = sample_kernel("custom", {"bands": bands}, g.spacing)
    cfg = SimConfig(grid=g, kernel=k, response=Saturation(b), dt=0.1, max_steps=50, stationarity_tol=1e-300)
    u = np.random.default_rng(seed).uniform(-1, 1, g.size)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = integrate(cfg, u - u[::-1]).final.values
    assert np.max(np.abs(out + out[::-1])) <= 1e-8 * max(1.0, np.max(np.abs(out)))


@SETTINGS
@given(band_lists(), st.sampled_from(LEMMAS), st.floats(0.1, 0.3))
def test_applicable_iff_all_hypotheses(bands, lemma, dx):
    report = check_lemma_hypotheses(sample_kernel("custom", {"bands": bands, "s": 1.0}, dx), lemma)
    assert report.applicable == all(h.satisfied for h in report.hypotheses)
    assert report.applicable == (not report.failed())


@st.composite
def positive_decreasing_bands(draw):
    # Two non-increasing positive steps inside [0, 2].
    mid = draw(st.floats(0.3, 1.7))
    hi = draw(st.floats(0.5, 3.0))
    lo = draw(st.floats(0.05, 1.0)) * hi
    return [(0.0, mid, hi), (mid, 2.0, lo)]


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(positive_decreasing_bands(), st.sampled_from(["wide", "narrow"]), st.integers(0, 1000))
def test_applicable_lemma_implies_invariance(bands, variant, seed):
    g = make_grid(1, 25, 400)
    k = sample_kernel("custom", {"bands": bands}, g.spacing)
    lemma = "Positive1" if variant == "wide" else "Positive2"
    res = verify_fT_invariance(k, Saturation(1.0), SetBSpec(variant), g, n_samples=12, seed=seed, lemma=lemma)
    if res.lemma_report.applicable:
        assert res.status == "preserved", (res.worst_violation, res.tolerance)


@SETTINGS
@given(kernel_and_grid(), st.integers(0, 2**31), st.floats(0.5, 4.0), st.booleans())
def test_newton_never_increases_residual(kg, seed, b, smooth):
    k, g = kg
    response = SmoothSaturation(b) if smooth else Saturation(b)
    u = _field(g, seed)
    before = residual(u, k, 1.0, response)
    res = newton_refine(u, k, 1.0, response, max_iters=4)
    assert res.residual <= before
