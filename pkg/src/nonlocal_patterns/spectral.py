"""Eigenpairs of the discretized operator T and mode projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .core import Field, Grid, Kernel
from .operator import OperatorMatrix, convolve_values


class SpectrumError(RuntimeError):
    pass


class NoPositiveEigenvalueError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Retained eigenpairs, sorted by eigenvalue (descending).

    ``eigenfields[j]`` is a flat array, orthonormal under the weighted inner
    product ``sum(u * v) * dx^d``. ``lambda_max``/``lambda_min`` refer to the
    whole computed spectrum, not only the retained modes.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfields: np.ndarray
    lambda_max: float
    lambda_min: float
    complete: bool = False

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def field(self, j: int) -> Field:
        return Field(self.grid, self.eigenfields[j])


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # First component above a noise floor is made positive, per vector (rows).
    out = vectors.copy()
    for row in out:
        floor = 1e-10 * np.max(np.abs(row))
        nz = np.flatnonzero(np.abs(row) > floor)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out


def _finish(grid: Grid, vals: np.ndarray, vecs: np.ndarray, lam_max: float, lam_min: float,
            complete: bool) -> Spectrum:
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    # Euclidean-orthonormal columns -> weighted-orthonormal fields.
    fields = _fix_signs(vecs[:, order].T) / np.sqrt(grid.cell_volume)
    return Spectrum(grid, vals, fields, float(lam_max), float(lam_min), complete)


def eigendecompose(matrix: OperatorMatrix, k: int | None = None, select: str = "magnitude") -> Spectrum:
    """Dense symmetric eigendecomposition of the operator matrix.

    Retains ``k`` modes chosen by largest ``|lambda|`` (``select="magnitude"``)
    or largest ``lambda`` (``select="value"``); ``k=None`` keeps all.
    """
    H = matrix.entries
    N = H.shape[0]
    if k is None:
        k = N
    if not 1 <= k <= N:
        raise ValueError(f"k must be in [1, {N}], got {k}")
    asym = np.max(np.abs(H - H.T)) if N else 0.0
    if asym > 1e-12 * max(np.max(np.abs(H)), 1e-300):
        raise ValueError(f"operator matrix is not symmetric (max asymmetry {asym:.3e})")
    try:
        vals, vecs = linalg.eigh(H)
    except linalg.LinAlgError as exc:
        raise SpectrumError(f"dense eigensolver failed: {exc}") from exc
    if select == "magnitude":
        keep = np.argsort(-np.abs(vals), kind="stable")[:k]
    elif select == "value":
        keep = np.argsort(-vals, kind="stable")[:k]
    else:
        raise ValueError(f"unknown selection {select!r}")
    return _finish(matrix.grid, vals[keep], vecs[:, keep], vals.max(), vals.min(), k == N)


def top_modes(kernel: Kernel, grid: Grid, k: int = 6, which: str = "LA", tol: float = 1e-10) -> Spectrum:
    """Matrix-free Lanczos extraction of ``k`` extreme modes.

    Used when the dense matrix is too large. ``which`` follows
    ``scipy.sparse.linalg.eigsh`` ("LA" = largest algebraic). Leading
    eigenvalues on large 2D grids come in tight clusters, so the Krylov
    subspace is kept well above ``2k``.
    """
    N = grid.size

    def mv(x: np.ndarray) -> np.ndarray:
        return convolve_values(kernel, x.reshape(grid.shape), grid, "fft").ravel()

    op = LinearOperator((N, N), matvec=mv, dtype=float)
    v0 = np.cos(np.arange(N) * 0.7071) + 1.0
    try:
        ncv = min(N - 1, max(2 * k + 1, 60))
        vals, vecs = eigsh(op, k=k, which=which, tol=tol, v0=v0, ncv=ncv, maxiter=20 * N)
    except ArpackNoConvergence as exc:
        raise SpectrumError(
            f"Lanczos did not converge; {len(exc.eigenvalues)} of {k} eigenvalues attained"
        ) from exc
    # Orthonormalize against round-off before weighting.
    q, _ = np.linalg.qr(vecs)
    signs = np.sign(np.sum(q * vecs, axis=0))
    q = q * np.where(signs == 0, 1.0, signs)
    if which == "LA":
        lam_max, lam_min = vals.max(), np.nan
    elif which == "SA":
        lam_max, lam_min = np.nan, vals.min()
    else:
        lam_max, lam_min = np.nan, np.nan
    return _finish(grid, vals, q, lam_max, lam_min, False)


def eigen_residuals(spectrum: Spectrum, kernel: Kernel) -> np.ndarray:
    """Weighted L2 norms of T e_j - lambda_j e_j for each retained mode."""
    g = spectrum.grid
    out = np.empty(len(spectrum))
    for j, (lam, e) in enumerate(zip(spectrum.eigenvalues, spectrum.eigenfields)):
        Te = convolve_values(kernel, e.reshape(g.shape), g, "direct").ravel()
        out[j] = np.sqrt(np.sum((Te - lam * e) ** 2) * g.cell_volume)
    return out


def b_critical(spectrum: Spectrum, a: float = 1.0) -> float:
    """Smallest positive slope b at which some mode stops decaying: a / lambda_max."""
    lam = spectrum.lambda_max
    if not np.isfinite(lam) or lam <= 0:
        raise NoPositiveEigenvalueError(f"largest eigenvalue is {lam}; no critical b exists")
    return a / lam


def project_onto_modes(field: Field, spectrum: Spectrum) -> np.ndarray:
    """Coefficients <u, e_j> with weight dx^d."""
    return spectrum.eigenfields @ field.flat * spectrum.grid.cell_volume


def reconstruct(coefficients: np.ndarray, spectrum: Spectrum) -> Field:
    coeffs = np.asarray(coefficients, dtype=float)
    return Field(spectrum.grid, coeffs @ spectrum.eigenfields[: len(coeffs)])


def linear_stationary_existence(a: float, b: float, spectrum: Spectrum, tol: float = 1e-6) -> list[int]:
    """0-based indices j with a/b = lambda_j (within ``tol * |lambda_1|``).

    Only nonzero eigenvalues (``|lambda_j| > tol * |lambda_1|``) count. An
    empty list means the linear problem has only the trivial stationary
    state for this (a, b).
    """
    if b == 0:
        raise ValueError("b must be nonzero")
    lam = spectrum.eigenvalues
    scale = abs(lam[0]) if len(spectrum) else 0.0
    target = a / b
    hits = np.flatnonzero((np.abs(target - lam) <= tol * scale) & (np.abs(lam) > tol * scale))
    return [int(j) for j in hits]
