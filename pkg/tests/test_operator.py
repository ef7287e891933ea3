import numpy as np
import pytest

from nonlocal_patterns.core import Field, Kernel, SpacingMismatchError, make_grid, sample_kernel
from nonlocal_patterns.operator import (
    OperatorTooLargeError,
    apply_T,
    build_operator_matrix,
    convolve_values,
    verify_Linfty_bound,
)

from oracles import kernel_taps_1d, naive_T_1d, naive_T_2d, toeplitz_matrix_1d

BANDS = [(0.0, 1.0, 1.0), (1.0, 4.0, -0.25)]


@pytest.mark.parametrize("periodic", [False, True])
def test_direct_matches_naive_loop(periodic):
    g = make_grid(1, 10, 60, periodic=periodic)
    k = sample_kernel("custom", {"bands": BANDS}, g.spacing)
    u = np.random.default_rng(1).uniform(-1, 1, 60)
    taps = kernel_taps_1d(BANDS, g.spacing)
    expected = naive_T_1d(taps, u, g.spacing, periodic)
    got = apply_T(k, Field(g, u)).values
    assert np.allclose(got, expected, rtol=0, atol=1e-12)


def test_matrix_is_toeplitz_oracle():
    g = make_grid(1, 10, 50)
    k = sample_kernel("custom", {"bands": BANDS}, g.spacing)
    H = build_operator_matrix(k, g).entries
    ref = toeplitz_matrix_1d(kernel_taps_1d(BANDS, g.spacing), 50, g.spacing)
    assert np.allclose(H, ref, rtol=0, atol=1e-13)
    assert np.array_equal(H, H.T)


@pytest.mark.parametrize("periodic", [False, True])
@pytest.mark.parametrize("dim", [1, 2])
def test_fft_matches_direct(dim, periodic):
    n = 200 if dim == 1 else 40
    g = make_grid(dim, 12, n, periodic=periodic)
    k = sample_kernel("K1", None, g.spacing, dim)
    u = np.random.default_rng(2).uniform(-1, 1, g.shape)
    d = convolve_values(k, u, g, "direct")
    f = convolve_values(k, u, g, "fft")
    assert np.max(np.abs(d - f)) <= 1e-10 * max(np.max(np.abs(d)), 1.0)
    assert np.array_equal(convolve_values(k, u, g, "auto"), convolve_values(k, u, g, "auto"))


def test_2d_direct_matches_naive_loop():
    g = make_grid(2, 3, 13)
    k = sample_kernel("K1", {"A": 1.0, "B": 0.3, "p": 0.6, "q": 1.2}, g.spacing, 2)
    u = np.random.default_rng(3).uniform(-1, 1, g.shape)
    expected = naive_T_2d(k.samples, u, g.spacing)
    assert np.allclose(apply_T(k, Field(g, u)).values, expected, rtol=0, atol=1e-12)
    H = build_operator_matrix(k, g).entries
    assert np.allclose(H @ u.ravel(), expected.ravel(), rtol=0, atol=1e-12)


def test_periodic_matrix_wraps():
    g = make_grid(1, 2, 8, periodic=True)
    k = Kernel(g.spacing, 1, np.array([1.0, 2.0, 1.0]))
    H = build_operator_matrix(k, g).entries / g.spacing
    assert H[0, -1] == 1.0 and H[-1, 0] == 1.0 and H[0, 0] == 2.0


def test_zero_extension_at_boundary():
    g = make_grid(1, 2, 5)
    k = Kernel(g.spacing, 1, np.array([1.0, 1.0, 1.0]))
    out = apply_T(k, Field(g, np.ones(5))).values / g.spacing
    assert np.array_equal(out, [2.0, 3.0, 3.0, 3.0, 2.0])


def test_operator_size_cap():
    g = make_grid(2, 10, 80)
    k = sample_kernel("K1", None, g.spacing, 2)
    with pytest.raises(OperatorTooLargeError):
        build_operator_matrix(k, g, max_points=1000)


def test_misaligned_kernel_rejected():
    g = make_grid(1, 10, 50)
    k = sample_kernel("K1", None, 0.3)
    with pytest.raises(SpacingMismatchError):
        apply_T(k, Field(g, np.zeros(50)))


def test_unknown_method():
    g = make_grid(1, 10, 50)
    k = sample_kernel("K1", None, g.spacing)
    with pytest.raises(ValueError):
        convolve_values(k, np.zeros(50), g, "magic")


def test_linfty_bound_tight_for_aligned_input():
    # u = K restricted around the centre attains Cauchy-Schwarz.
    g = make_grid(1, 10, 101)
    k = sample_kernel("custom", {"bands": [(0.0, 2.0, 1.0)]}, g.spacing)
    m = k.radius_taps
    u = np.zeros(101)
    u[50 - m: 50 + m + 1] = k.samples
    lhs, rhs, ok = verify_Linfty_bound(k, Field(g, u))
    assert ok and lhs == pytest.approx(rhs, rel=1e-12)


def test_three_point_matrix_by_hand():
    g = make_grid(1, 1, 3)
    k = Kernel(1.0, 1, np.array([0.5, 1.0, 0.5]))
    H = build_operator_matrix(k, g).entries
    assert np.array_equal(H, [[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]])
