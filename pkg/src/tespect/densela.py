"""Dense linear-algebra kernels used by the spectral pipeline.

Thin, contract-enforcing wrappers over LAPACK (through numpy/scipy):
symmetric eigendecomposition, SPD square roots, the dense nonsymmetric
eigensolver (balancing + Hessenberg reduction + shifted QR, as LAPACK does
it), log-scale complex determinants, and singular values.  Everything here
is deterministic for fixed input on a fixed build.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import AsymmetryExceeded, NoConvergence, NotPositiveDefinite

_SYM_TOL = 1e-10
_SPD_FLOOR = 1e-13


@dataclass(frozen=True)
class SymEig:
    """Full symmetric eigendecomposition, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues of a general real matrix, optionally with vectors."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None  # columns, when requested
    residuals: Optional[np.ndarray] = None  # ||M x - mu x|| / ||M||_F per pair


@dataclass(frozen=True)
class LogDet:
    """Determinant carried as log-magnitude plus argument.

    Keeps contour evaluations alive where the linear-scale determinant
    overflows; ``value`` reconstructs the complex number when representable.
    """

    log_abs: float
    arg: float

    @property
    def value(self) -> complex:
        if self.log_abs == -np.inf:
            return 0.0 + 0.0j
        if self.log_abs > 700.0:  # exp overflow; caller should stay in log scale
            return complex(np.inf, np.inf)
        return complex(np.exp(self.log_abs) * np.exp(1j * self.arg))


def _check_symmetric(s: np.ndarray, tol: float = _SYM_TOL) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(float(np.linalg.norm(s)), 1e-300)
    if np.linalg.norm(s - s.T) > tol * scale:
        raise AsymmetryExceeded(
            f"matrix asymmetry {np.linalg.norm(s - s.T) / scale:.3e} exceeds {tol:.1e}"
        )
    return 0.5 * (s + s.T)


def sym_eig(s: np.ndarray) -> SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    sym = _check_symmetric(s)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return SymEig(vals, vecs)


def _spd_decomposition(s: np.ndarray) -> SymEig:
    dec = sym_eig(s)
    vals = dec.eigenvalues
    if vals[-1] <= 0 or vals[0] <= _SPD_FLOOR * vals[-1]:
        raise NotPositiveDefinite(
            f"eigenvalue range [{vals[0]:.3e}, {vals[-1]:.3e}] is not safely positive"
        )
    return dec

def spd_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix."""
    dec = _spd_decomposition(s)
    q = dec.eigenvectors
    root = (q * np.sqrt(dec.eigenvalues)) @ q.T
    return 0.5 * (root + root.T)


def spd_inv_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix."""
    dec = _spd_decomposition(s)
    q = dec.eigenvectors
    root = (q / np.sqrt(dec.eigenvalues)) @ q.T
    return 0.5 * (root + root.T)


def nonsym_eig(m: np.ndarray, want_vectors: bool = False) -> ComplexSpectrum:
    """All eigenvalues of a real square matrix.

    Routed through LAPACK's balanced Hessenberg/shifted-QR path.  With
    ``want_vectors`` the right eigenvectors come back column-wise together
    with per-pair residuals ||M x - mu x|| / ||M||_F.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    try:
        if want_vectors:
            vals, vecs = np.linalg.eig(m)
        else:
            vals = np.linalg.eigvals(m)
            vecs = None
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    residuals = None
    if vecs is not None:
        scale = max(float(np.linalg.norm(m)), 1e-300)
        residuals = np.linalg.norm(m @ vecs - vecs * vals, axis=0) / scale
    return ComplexSpectrum(vals, vecs, residuals)


def complex_det(m: np.ndarray) -> LogDet:
    """Determinant of a complex matrix via partially pivoted LU, in log scale.

    Singular input is not an error: it returns log-magnitude -inf.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if m.shape[0] == 0:
        return LogDet(0.0, 0.0)
    with warnings.catch_warnings():
        # singular input is legal here and reported through the -inf sentinel
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return LogDet(-np.inf, 0.0)
    swaps = int(np.sum(piv != np.arange(m.shape[0])))
    log_abs = float(np.sum(np.log(np.abs(diag))))
    arg = float(np.sum(np.angle(diag)) + np.pi * (swaps % 2))
    arg = float((arg + np.pi) % (2.0 * np.pi) - np.pi)
    if arg == -np.pi:
        arg = np.pi
    return LogDet(log_abs, arg)


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values, descending, as roots of the Gram-matrix spectrum."""
    m = np.asarray(m)
    gram = (m.conj().T @ m).real if np.iscomplexobj(m) else m.T @ m
    dec = sym_eig(gram)
    vals = np.clip(dec.eigenvalues, 0.0, None)
    return np.sqrt(vals)[::-1]
