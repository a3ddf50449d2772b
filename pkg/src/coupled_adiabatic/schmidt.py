"""Schmidt form of the evolving two-qubit state and the subsystem criteria.

For a pure state psi = sum_i a_i |E_i>|e_i> the subsystem weights are
p_i = |a_i|^2.  Along a trajectory the bases are carried by overlap
continuity and phase-smoothed, so that

    b_j(t) = <E_j e_j|psi(t)> exp(+i int_0^t H_jj)

satisfies the exact identity

    i db_j/dt + i b_j (<E_j|dE_j/dt> + <e_j|de_j/dt>)
        - sum_{k != j} b_k exp(-i int_0^t (H_kk - H_jj)) H_jk = 0,

with H_jk = <E_j e_j|H|E_k e_k>.  ``rate_equation_residual`` measures how
well the sampled series satisfies it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, _cumtrapz
from .errors import FrameMismatch, InsufficientSamples, LabelAmbiguityWarning
from .linalg import align_phase, as_matrix, partial_trace, phase_fix, validate_state
from .model import ModelSpec, hamiltonian_at, spectral_radius_bound
from .spectra import analytic_eigensystem

DEGENERATE_P = 1e-6
MIN_RESIDUAL_STEPS = 64
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SchmidtForm:
    """psi = sum_i sqrt(p_i) |E_i> (x) |e_i>, bases stored as columns."""

    p: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return sum(math.sqrt(self.p[i]) * np.kron(self.basis1[:, i], self.basis2[:, i]) for i in range(2))


def _complement(v: np.ndarray) -> np.ndarray:
    # the unit vector orthogonal to v in C^2
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _other_basis(psi_mat: np.ndarray, e1: np.ndarray, s: np.ndarray) -> np.ndarray:
    return _other_basis_batch(psi_mat[None], e1[None], s[None])[0]


def _other_basis_batch(m: np.ndarray, e1: np.ndarray, s: np.ndarray) -> np.ndarray:
    # dominant column from the state, second as its complement with the matching phase
    proj = np.einsum("kab,kai->kbi", m, e1.conj())  # column i = M^T conj(e1_i)
    first = proj[:, :, 0] / s[:, :1]
    first /= np.linalg.norm(first, axis=1)[:, None]
    comp = np.stack([-np.conj(first[:, 1]), np.conj(first[:, 0])], axis=1)
    w = np.einsum("ka,ka->k", comp.conj(), proj[:, :, 1])
    mag = np.abs(w)
    phase = np.where(mag > _ZERO_TOL, w / np.where(mag > _ZERO_TOL, mag, 1.0), 1.0)
    return np.stack([first, comp * phase[:, None]], axis=2)


def _align_chain(b: np.ndarray) -> np.ndarray:
    # make <b_k-1|b_k> real non-negative per column by cumulative rephasing
    link = np.einsum("kai,kai->ki", b[:-1].conj(), b[1:])
    b[1:] *= np.exp(-1j * np.cumsum(np.angle(link), axis=0))[:, None, :]
    return b


def schmidt_decompose(psi) -> SchmidtForm:
    """Schmidt form of a normalised two-qubit state, weights sorted descending.

    The reconstruction is exact (no leftover global phase): any phase sits
    on the qubit-1 basis.
    """
    psi = validate_state(psi)
    if psi.shape != (4,):
        raise FrameMismatch(f"expected a two-qubit state, got shape {psi.shape}")
    m = psi.reshape(2, 2)
    u, s, _ = np.linalg.svd(m)
    e1 = np.stack([phase_fix(u[:, i]) for i in range(2)], axis=1)
    e2 = _other_basis(m, e1, s)
    return SchmidtForm(s ** 2 / np.sum(s ** 2), e1, e2)


@dataclass(frozen=True)
class SchmidtSeries:
    """Label-tracked Schmidt data along a pure trajectory.

    ``p`` has shape (n, 2), ``basis1``/``basis2`` (n, 2, 2) with columns as
    basis vectors, ``hmat`` (n, 2, 2) holds H_jk(t).  ``ambiguous`` marks
    samples with |p1 - p2| < 1e-6, ``swapped`` marks samples where label
    continuity differed from descending order.
    """

    model: ModelSpec
    times: np.ndarray
    states: np.ndarray
    p: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray
    hmat: np.ndarray
    ambiguous: np.ndarray
    swapped: np.ndarray
    deg_tol: float

    def ratios(self) -> np.ndarray:
        return nontransitional_ratios(self)

    def p_drift(self) -> float:
        return float(np.max(np.abs(self.p - self.p[0])))


def _schmidt_loop(mats: np.ndarray, ambiguous: np.ndarray):
    """Sample-by-sample Schmidt labelling; needed when |p1 - p2| gets tiny."""
    n = len(mats)
    p = np.empty((n, 2))
    b1 = np.empty((n, 2, 2), dtype=complex)
    b2 = np.empty((n, 2, 2), dtype=complex)
    swapped = np.zeros(n, dtype=bool)
    for k in range(n):
        m = mats[k]
        u, s, _ = np.linalg.svd(m)
        if ambiguous[k] and k > 0:
            # any orthonormal qubit-1 basis is a Schmidt basis: keep the previous one
            q, _ = np.linalg.qr(b1[k - 1])
            u = np.stack([align_phase(q[:, i], b1[k - 1][:, i]) for i in range(2)], axis=1)
            s = np.sqrt(np.sum(np.abs(m.T @ u.conj()) ** 2, axis=0))
        if k == 0:
            u = np.stack([phase_fix(u[:, i]) for i in range(2)], axis=1)
        else:
            prev = b1[k - 1]
            direct = abs(np.vdot(prev[:, 0], u[:, 0])) ** 2 + abs(np.vdot(prev[:, 1], u[:, 1])) ** 2
            cross = abs(np.vdot(prev[:, 0], u[:, 1])) ** 2 + abs(np.vdot(prev[:, 1], u[:, 0])) ** 2
            if cross > direct:
                u, s = u[:, ::-1], s[::-1]
                swapped[k] = True
            u = np.stack([align_phase(u[:, i], prev[:, i]) for i in range(2)], axis=1)
        e2 = _other_basis(m, u, s)
        if k > 0:
            e2 = np.stack([align_phase(e2[:, i], b2[k - 1][:, i]) for i in range(2)], axis=1)
        p[k] = s ** 2
        b1[k] = u
        b2[k] = e2
    return p, b1, b2, swapped


def schmidt_series(traj: Trajectory) -> SchmidtSeries:
    """Schmidt decomposition at every sample with continuity-matched labels.

    Emits ``LabelAmbiguityWarning`` once if any sample has |p1 - p2| < 1e-6;
    there the qubit-1 basis is taken from the previous sample.
    """
    if not traj.is_pure:
        raise FrameMismatch("schmidt_series needs a pure trajectory")
    states = traj.states / np.linalg.norm(traj.states, axis=1)[:, None]
    n = len(states)
    mats = states.reshape(n, 2, 2)
    u, sv, _ = np.linalg.svd(mats)
    ambiguous = np.abs(sv[:, 0] ** 2 - sv[:, 1] ** 2) < DEGENERATE_P
    if ambiguous.any():
        warnings.warn(f"{int(ambiguous.sum())} samples have |p1 - p2| < {DEGENERATE_P:g}; "
                      "Schmidt bases there follow continuity", LabelAmbiguityWarning, stacklevel=2)
        p, b1, b2, swapped = _schmidt_loop(mats, ambiguous)
    else:
        ov = np.abs(np.einsum("kai,kaj->kij", u[:-1].conj(), u[1:])) ** 2
        cross = ov[:, 0, 1] + ov[:, 1, 0] > ov[:, 0, 0] + ov[:, 1, 1]
        swapped = np.concatenate([[0], np.cumsum(cross) % 2]).astype(bool)
        cols = np.where(swapped[:, None], [1, 0], [0, 1])
        sv = np.take_along_axis(sv, cols, axis=1)
        b1 = np.take_along_axis(u, cols[:, None, :], axis=2)
        b1[0] = np.stack([phase_fix(b1[0][:, i]) for i in range(2)], axis=1)
        b1 = _align_chain(b1)
        b2 = _align_chain(_other_basis_batch(mats, b1, sv))
        p = sv ** 2
    prod = np.einsum("kai,kbi->kiab", b1, b2).reshape(n, 2, 4)  # |E_i e_i> per label
    h = hamiltonian_at(traj.model, traj.times)
    hmat = np.einsum("kia,kab,kjb->kij", prod.conj(), h, prod)
    tol = 1e-8 * spectral_radius_bound(traj.model)
    return SchmidtSeries(traj.model, traj.times, states, p, b1, b2, hmat, ambiguous, swapped, tol)


def _pair_ratio(off: np.ndarray, diag_gap: np.ndarray, scale: float, tol: float) -> np.ndarray:
    off = np.abs(off)
    gap = np.abs(diag_gap)
    out = np.zeros_like(off, dtype=float)
    live = off > _ZERO_TOL * scale
    singular = live & (gap <= tol)
    ok = live & ~singular
    out[ok] = off[ok] / gap[ok]
    out[singular] = np.inf
    return out


def nontransitional_ratios(series: SchmidtSeries) -> np.ndarray:
    """R_12(t) = |H_12| / |H_11 - H_22| per sample.

    Vanishing H_12 gives 0 even where the diagonal is degenerate; a
    non-vanishing H_12 over a degenerate diagonal gives ``inf``.
    """
    h = series.hmat
    scale = spectral_radius_bound(series.model)
    return _pair_ratio(h[:, 0, 1], (h[:, 0, 0] - h[:, 1, 1]).real, scale, series.deg_tol)


def open_system_ratio(series: SchmidtSeries, gamma_ops) -> np.ndarray:
    """|<E_1 e_1|G|E_2 e_2>| / |H_11 - H_22| per sample and operator, shape (n, len(gamma_ops)).

    Both off-diagonal directions are evaluated and the larger is kept, so
    non-Hermitian operators are handled symmetrically.
    """
    n = len(series.times)
    prod = np.einsum("kai,kbi->kiab", series.basis1, series.basis2).reshape(n, 2, 4)
    gap = (series.hmat[:, 0, 0] - series.hmat[:, 1, 1]).real
    out = []
    for op in gamma_ops:
        g = as_matrix(op)
        if g.shape != (4, 4):
            raise FrameMismatch(f"operators must be 4x4, got {g.shape}")
        m = np.einsum("kia,ab,kjb->kij", prod.conj(), g, prod)
        off = np.maximum(np.abs(m[:, 0, 1]), np.abs(m[:, 1, 0]))
        scale = max(1.0, float(np.max(np.abs(g))))
        out.append(_pair_ratio(off, gap, scale, series.deg_tol))
    return np.stack(out, axis=1) if out else np.zeros((n, 0))


def rate_equation_residual(series: SchmidtSeries) -> float:
    """Largest |LHS| of the Schmidt amplitude identity over samples and labels.

    Derivatives are second-order finite differences on the smoothed series.

    Raises:
        InsufficientSamples: fewer than 64 steps.
    """
    n = len(series.times) - 1
    if n < MIN_RESIDUAL_STEPS:
        raise InsufficientSamples(f"need at least {MIN_RESIDUAL_STEPS} steps, got {n}")
    dt = float(series.times[1] - series.times[0])
    prod = np.einsum("kai,kbi->kiab", series.basis1, series.basis2).reshape(n + 1, 2, 4)
    a = np.einsum("kia,ka->ki", prod.conj(), series.states)
    hdiag = np.einsum("kii->ki", series.hmat).real
    integral = _cumtrapz(hdiag, dt)
    b = a * np.exp(1j * integral)
    db = np.gradient(b, dt, axis=0, edge_order=2)
    d1 = np.gradient(series.basis1, dt, axis=0, edge_order=2)
    d2 = np.gradient(series.basis2, dt, axis=0, edge_order=2)
    conn = (np.einsum("kai,kai->ki", series.basis1.conj(), d1)
            + np.einsum("kai,kai->ki", series.basis2.conj(), d2))
    conn = 1j * conn.imag
    lhs = 1j * db + 1j * conn * b
    for j in range(2):
        k = 1 - j
        lhs[:, j] -= b[:, k] * np.exp(-1j * (integral[:, k] - integral[:, j])) * series.hmat[:, j, k]
    return float(np.max(np.abs(lhs)))


@dataclass(frozen=True)
class ReducedDensitySeries:
    """Eigen-decomposition of rho_1(t) (qubit 2 traced out), labels continuity-matched."""

    times: np.ndarray
    values: np.ndarray
    vectors: np.ndarray


def reduced_density_eigen(traj: Trajectory) -> ReducedDensitySeries:
    """Per-sample eigenvalues (descending at t = 0) and eigenvectors of rho_1.

    Each density matrix is divided by its trace first, so integrator norm
    loss does not leak into the spectrum.
    """
    rhos = traj.density_matrices()
    rhos = rhos / np.trace(rhos, axis1=1, axis2=2).real[:, None, None]
    n = len(rhos)
    rho1 = np.einsum("kaibi->kab", rhos.reshape(n, 2, 2, 2, 2))
    w, v = np.linalg.eigh(0.5 * (rho1 + np.conj(np.swapaxes(rho1, 1, 2))))
    w, v = w[:, ::-1], v[:, :, ::-1]
    # a label swap between neighbours shows up as larger cross overlaps
    ov = np.abs(np.einsum("kai,kaj->kij", v[:-1].conj(), v[1:])) ** 2
    cross = ov[:, 0, 1] + ov[:, 1, 0] > ov[:, 0, 0] + ov[:, 1, 1]
    parity = np.concatenate([[0], np.cumsum(cross) % 2])
    cols = np.where(parity[:, None] == 1, [1, 0], [0, 1])
    vals = np.take_along_axis(w, cols, axis=1)
    vecs = np.take_along_axis(v, cols[:, None, :], axis=2)
    vecs[0] = np.stack([phase_fix(vecs[0][:, i]) for i in range(2)], axis=1)
    if n > 1:
        link = np.einsum("kai,kai->ki", vecs[:-1].conj(), vecs[1:])
        vecs[1:] *= np.exp(-1j * np.cumsum(np.angle(link), axis=0))[:, None, :]
    return ReducedDensitySeries(traj.times, vals, vecs)


def reduced_density_closed_form(spec: ModelSpec, t: float, label: int = 1) -> np.ndarray:
    """rho_1 of the instantaneous eigenstate ``label`` for IsingZ or uncoupled models.

    Each such eigenstate is a product state, so rho_1 is the pure projector
    onto its qubit-1 factor, e.g. for label 1

        (1/M_1) [[(g + c + E_1)^2, (g + c + E_1) s e^{i phi}],
                 [(g + c + E_1) s e^{-i phi}, s^2]].

    Raises:
        UnsupportedModel: flip-flop coupling (its eigenstates are entangled).
    """
    v = analytic_eigensystem(spec, t).vectors[:, label - 1]
    return partial_trace(np.outer(v, v.conj()), keep=1)


def p_drift(series: SchmidtSeries) -> float:
    """max_t max_i |p_i(t) - p_i(0)|."""
    return series.p_drift()
