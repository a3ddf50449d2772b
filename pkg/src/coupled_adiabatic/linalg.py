"""Dense complex linear algebra for small Hilbert spaces.

Matrices and states are plain ``numpy`` arrays of dtype ``complex128``.
Eigenvectors are stored as columns, following ``numpy.linalg.eigh``.
Two-qubit basis order is |uu>, |ud>, |du>, |dd> with qubit 1 as the left
(slow) Kronecker factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitian, NonPhysical

HERMITIAN_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |u><d|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
I2 = np.eye(2, dtype=complex)

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


@dataclass(frozen=True)
class EigenPairSet:
    """Eigenvalues, column eigenvectors and the partition into degenerate groups."""

    values: np.ndarray
    vectors: np.ndarray
    degeneracy_groups: tuple[tuple[int, ...], ...]

    def degenerate(self, i: int) -> bool:
        return any(i in grp and len(grp) > 1 for grp in self.degeneracy_groups)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(v) -> np.ndarray:
    s = np.asarray(v, dtype=complex)
    if s.ndim != 1:
        raise DimensionMismatch(f"expected a state vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("state has non-finite amplitudes")
    return s


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[-1] == a.shape[-2] and float(np.max(np.abs(a - dagger(a)), initial=0.0)) < tol


def inner(a, b) -> complex:
    """<a|b>, conjugating the first argument."""
    return complex(np.vdot(a, b))


def normalize(v) -> np.ndarray:
    s = as_state(v)
    n = np.linalg.norm(s)
    if n == 0:
        raise NonPhysical("cannot normalize the zero vector")
    return s / n


def validate_state(v, tol: float = 1e-9) -> np.ndarray:
    s = as_state(v)
    if abs(np.linalg.norm(s) ** 2 - 1.0) > tol:
        raise NonPhysical(f"state norm^2 {np.linalg.norm(s) ** 2:.3g} differs from 1")
    return s


def validate_density(rho, tol: float = 1e-9) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {m.shape}")
    if not is_hermitian(m, max(tol, HERMITIAN_TOL)):
        raise NonPhysical("density matrix is not Hermitian")
    if abs(np.trace(m).real - 1.0) > tol:
        raise NonPhysical(f"density matrix trace {np.trace(m).real:.6g} differs from 1")
    if np.min(np.linalg.eigvalsh(m)) < -tol:
        raise NonPhysical("density matrix has a negative eigenvalue")
    return m


def projector(v) -> np.ndarray:
    s = as_state(v)
    return np.outer(s, np.conj(s))


def tensor(a, b) -> np.ndarray:
    """Kronecker product; ``a`` acts on qubit 1 (left factor)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def phase_fix(v: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude component is real positive.

    Ties within ``rtol`` go to the lowest index.
    """
    mags = np.abs(v)
    top = mags.max()
    if top == 0:
        return v
    k = int(np.flatnonzero(mags >= top * (1 - rtol))[0])
    return v * (np.conj(v[k]) / mags[k])


def align_phase(v: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so that <ref|v> is real and non-negative."""
    ov = np.vdot(ref, v)
    if ov == 0:
        return v
    return v * (np.conj(ov) / abs(ov))


def degeneracy_groups(values: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    """Group indices whose values lie within ``tol`` of a neighbour (in sorted order)."""
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and abs(values[idx] - values[groups[-1][-1]]) <= tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return tuple(tuple(sorted(g)) for g in sorted(groups, key=min))


def default_deg_tol(values: np.ndarray) -> float:
    """1e-8 times the spectral range (or the spectral radius when the range is zero)."""
    scale = float(np.ptp(values)) if len(values) > 1 else 0.0
    if scale == 0.0:
        scale = float(np.max(np.abs(values), initial=0.0)) or 1.0
    return 1e-8 * scale


def eig_hermitian(a, deg_tol: float | None = None) -> EigenPairSet:
    """Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.

    Raises:
        DimensionMismatch: ``a`` is not square.
        NonHermitian: ``max|A - A^dagger|`` exceeds 1e-12 (scaled by ``max(1, |A|)``).
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if not is_hermitian(m, HERMITIAN_TOL * scale):
        raise NonHermitian("matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(0.5 * (m + dagger(m)))
    tol = default_deg_tol(vals) if deg_tol is None else deg_tol
    return EigenPairSet(vals, vecs, degeneracy_groups(vals, tol))


def partial_trace(rho, keep: int, dims: tuple[int, int] = (2, 2)) -> np.ndarray:
    """Reduced density matrix of subsystem ``keep`` (1 or 2)."""
    m = as_matrix(rho)
    d1, d2 = dims
    if m.shape != (d1 * d2, d1 * d2):
        raise DimensionMismatch(f"expected {(d1 * d2,) * 2} matrix, got {m.shape}")
    t = m.reshape(d1, d2, d1, d2)
    if keep == 1:
        return np.einsum("ijkj->ik", t)
    if keep == 2:
        return np.einsum("ijil->jl", t)
    raise ValueError("keep must be 1 or 2")


def partial_trace_2(rho, trace_tol: float = 1e-6) -> np.ndarray:
    """Trace out qubit 2 of a 4x4 density matrix."""
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 matrix, got {m.shape}")
    tr = np.trace(m)
    if abs(tr - 1.0) > trace_tol:
        raise NonPhysical(f"trace {tr.real:.6g} deviates from 1")
    return partial_trace(m, keep=1)
