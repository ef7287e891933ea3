"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical routines; each quantity is
recomputed from its definition by a different route (quadrature instead of
interval overlaps, explicit loops instead of shifted slices, general
eigensolvers instead of symmetric ones).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def band_profile(r: float, bands) -> float:
    return sum(amp for inner, outer, amp in bands if inner <= r <= outer)


def cell_average_1d(bands, k: int, dx: float) -> float:
    """Average of the radial band profile over [k dx - dx/2, k dx + dx/2] by quadrature."""
    a, b = k * dx - dx / 2, k * dx + dx / 2
    edges = sorted({e for inner, outer, _ in bands for e in (inner, outer, -inner, -outer) if a < e < b})
    val, _ = integrate.quad(lambda x: band_profile(abs(x), bands), a, b, points=edges or None, limit=200)
    return val / dx


def kernel_taps_1d(bands, dx: float) -> dict[int, float]:
    reach = max(outer for _, outer, _ in bands)
    m = int(math.ceil(reach / dx + 0.5))
    return {k: cell_average_1d(bands, k, dx) for k in range(-m, m + 1)}


def naive_T_1d(taps: dict[int, float], u: np.ndarray, dx: float, periodic: bool = False) -> np.ndarray:
    """Tu(x_i) = sum_j K(x_i - x_j) u_j dx by explicit double loop."""
    n = len(u)
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            d = i - j
            if periodic:
                # Nearest periodic image.
                d = (d + n // 2) % n - n // 2
            acc += taps.get(d, 0.0) * u[j]
        out[i] = acc * dx
    return out


def naive_T_2d(samples: np.ndarray, u: np.ndarray, dx: float) -> np.ndarray:
    """Zero-extended 2D convolution with an explicit loop over targets and sources."""
    m = samples.shape[0] // 2
    n = u.shape[0]
    out = np.zeros_like(u)
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for p in range(max(0, i - m), min(n, i + m + 1)):
                for q in range(max(0, j - m), min(n, j + m + 1)):
                    acc += samples[i - p + m, j - q + m] * u[p, q]
            out[i, j] = acc * dx * dx
    return out


def toeplitz_matrix_1d(taps: dict[int, float], n: int, dx: float) -> np.ndarray:
    from scipy.linalg import toeplitz

    col = np.array([taps.get(k, 0.0) for k in range(n)])
    return toeplitz(col) * dx


def general_eigenvalues(H: np.ndarray) -> np.ndarray:
    """Eigenvalues from the nonsymmetric solver, sorted descending."""
    vals = np.linalg.eigvals(H)
    return np.sort(vals.real)[::-1]


def euler_growth(mu: float, dt: float, steps: int) -> float:
    return (1.0 + dt * mu) ** steps


def band_integral_1d(bands) -> float:
    return sum(2.0 * amp * (outer - inner) for inner, outer, amp in bands)


def band_integral_2d(bands) -> float:
    return sum(math.pi * amp * (outer**2 - inner**2) for inner, outer, amp in bands)
