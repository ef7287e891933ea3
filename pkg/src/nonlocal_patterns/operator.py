"""Truncated convolution T u = (K * u~)|_Omega and its matrix form.

``u~`` is the zero extension of ``u`` outside the domain. Every discrete
sum carries the quadrature weight dx^d, so kernel integrals keep their
continuum meaning. Periodic grids wrap instead of zero-extending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import Field, Grid, Kernel, _check_alignment

DEFAULT_MAX_MATRIX_POINTS = 20_000

# Above this many nonzero taps the FFT path is used by ``method="auto"``.
_AUTO_DIRECT_TAPS = 64


class OperatorTooLargeError(MemoryError):
    """Dense operator assembly would exceed the configured size cap."""


def _nonzero_taps(kernel: Kernel) -> list[tuple[tuple[int, ...], float]]:
    m = kernel.radius_taps
    idx = np.argwhere(kernel.samples != 0.0)
    return [(tuple(int(i) - m for i in ij), float(kernel.samples[tuple(ij)])) for ij in idx]


def _direct(kernel: Kernel, values: np.ndarray, periodic: bool) -> np.ndarray:
    m = kernel.radius_taps
    n = values.shape[0]
    mode = "wrap" if periodic else "constant"
    padded = np.pad(values, m, mode=mode)
    out = np.zeros_like(values)
    # Sequential accumulation over taps in a fixed order.
    for offset, weight in _nonzero_taps(kernel):
        sl = tuple(slice(m - k, m - k + n) for k in offset)
        out += weight * padded[sl]
    return out


def _fft(kernel: Kernel, values: np.ndarray, periodic: bool) -> np.ndarray:
    if periodic:
        m = kernel.radius_taps
        padded = np.pad(values, m, mode="wrap")
        return signal.fftconvolve(padded, kernel.samples, mode="valid")
    # Zero-padded linear convolution, cropped back to the domain.
    return signal.fftconvolve(values, kernel.samples, mode="same")


def convolve_values(kernel: Kernel, values: np.ndarray, grid: Grid, method: str = "direct") -> np.ndarray:
    """Array-level T: ``sum_k K(k) u~(x - k) dx^d`` on ``grid``."""
    if method == "auto":
        method = "direct" if np.count_nonzero(kernel.samples) <= _AUTO_DIRECT_TAPS else "fft"
    if method == "direct":
        raw = _direct(kernel, values, grid.periodic)
    elif method == "fft":
        raw = _fft(kernel, values, grid.periodic)
    else:
        raise ValueError(f"unknown method {method!r}")
    return raw * grid.cell_volume


def apply_T(kernel: Kernel, field: Field, method: str = "direct") -> Field:
    """Apply the truncated convolution to ``field``.

    ``method="direct"`` is the reference summation; ``"fft"`` computes the
    same zero-padded linear convolution in O(N log N).
    """
    _check_alignment(kernel, field.grid)
    return Field(field.grid, convolve_values(kernel, field.values, field.grid, method))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense H with H[i, j] = K(x_i - x_j) dx^d over flattened grid indices."""

    grid: Grid
    entries: np.ndarray

    def matvec(self, field: Field) -> Field:
        return Field(self.grid, self.entries @ field.flat)


def build_operator_matrix(
    kernel: Kernel, grid: Grid, max_points: int = DEFAULT_MAX_MATRIX_POINTS
) -> OperatorMatrix:
    _check_alignment(kernel, grid)
    n = grid.points_per_axis
    N = grid.size
    if N > max_points:
        raise OperatorTooLargeError(
            f"dense operator needs {N}x{N} entries (~{N * N * 8 / 2**30:.1f} GiB); cap is N <= {max_points}"
        )
    H = np.zeros((N, N))
    idx = np.arange(n)
    if grid.dimension == 1:
        for (k,), w in _nonzero_taps(kernel):
            # Row i picks up u at index i - k.
            cols = idx - k
            if grid.periodic:
                H[idx, cols % n] += w
            else:
                ok = (cols >= 0) & (cols < n)
                H[idx[ok], cols[ok]] += w
    else:
        I, J = np.meshgrid(idx, idx, indexing="ij")
        rows = (I * n + J).ravel()
        for (k1, k2), w in _nonzero_taps(kernel):
            c1, c2 = (I - k1).ravel(), (J - k2).ravel()
            if grid.periodic:
                H[rows, (c1 % n) * n + (c2 % n)] += w
            else:
                ok = (c1 >= 0) & (c1 < n) & (c2 >= 0) & (c2 < n)
                H[rows[ok], c1[ok] * n + c2[ok]] += w
    H *= grid.cell_volume
    return OperatorMatrix(grid, H)


def verify_Linfty_bound(kernel: Kernel, field: Field) -> tuple[float, float, bool]:
    """Check max|Tu| <= ||K||_2 ||u||_2 with discrete weighted norms."""
    lhs = apply_T(kernel, field).norm_inf()
    rhs = kernel.norm2() * field.norm2()
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-10))
