"""Phases accumulated over one loop.

* total phase       arg <psi(0)|psi(T)>
* dynamical term    i int <psi|d psi/dt> dt = int <psi|H|psi>/<psi|psi> dt
* geometric phase   total + dynamical, wrapped to (-pi, pi]
* Berry phases      gauge-invariant discrete holonomy of each eigenstate
* first-order estimates built from the instantaneous-basis amplitudes
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, evolve_pure
from .errors import DegenerateGap, FrameMismatch, NotCyclicWarning
from .linalg import EigenPairSet, phase_fix
from .model import LoopSpec, ModelSpec, hamiltonian_at
from .spectra import GaugeFixedFrame, derivative_couplings, frames_along, gamma_matrix, numeric_eigensystem

CYCLIC_MIN_OVERLAP = 0.1


def wrap(angle):
    """Reduce to (-pi, pi]."""
    a = np.mod(np.asarray(angle, dtype=float) + math.pi, 2 * math.pi) - math.pi
    a = np.where(a == -math.pi, math.pi, a)
    return float(a) if np.ndim(a) == 0 else a


@dataclass(frozen=True)
class GeometricPhase:
    total: float
    dynamical: float
    geometric: float
    overlap: float
    cyclic: bool


@dataclass(frozen=True)
class PhaseReport:
    seed_label: int | None
    total_phase: float
    dynamical_phase: float
    geometric_phase: float
    berry_phases: tuple[float, float, float, float]
    perturbative_phase_18: float
    perturbative_phase_19: float
    omega_matrix: np.ndarray
    gamma_max: float
    cyclic: bool

    def lines(self) -> list[str]:
        return [
            f"seed_label = {self.seed_label if self.seed_label is not None else 'none'}",
            f"total_phase = {self.total_phase:.10f}",
            f"dynamical_phase = {self.dynamical_phase:.10f}",
            f"geometric_phase = {self.geometric_phase:.10f}",
            "berry_phases = " + ", ".join(f"{b:.10f}" for b in self.berry_phases),
            f"perturbative_phase_18 = {self.perturbative_phase_18:.10f}",
            f"perturbative_phase_19 = {self.perturbative_phase_19:.10f}",
            f"gamma_max = {self.gamma_max:.6e}",
            f"cyclic = {int(self.cyclic)}",
        ]


def geometric_phase(traj: Trajectory) -> GeometricPhase:
    """Geometric phase of a pure trajectory covering one period.

    The dynamical term uses <H> (exact by the Schrodinger equation) rather
    than a numerical derivative of the state.  Emits ``NotCyclicWarning``
    when |<psi(0)|psi(T)>| < 0.1; the value is still returned.
    """
    if not traj.is_pure:
        raise FrameMismatch("geometric_phase needs a pure trajectory")
    psi = traj.states
    h = hamiltonian_at(traj.model, traj.times)
    energy = np.einsum("ka,kab,kb->k", psi.conj(), h, psi).real / np.einsum("ka,ka->k", psi.conj(), psi).real
    dynamical = float(np.sum(0.5 * np.diff(traj.times) * (energy[1:] + energy[:-1])))
    ov = np.vdot(psi[0], psi[-1])
    total = float(np.angle(ov))
    mag = abs(ov) / (np.linalg.norm(psi[0]) * np.linalg.norm(psi[-1]))
    cyclic = mag >= CYCLIC_MIN_OVERLAP
    if not cyclic:
        warnings.warn(f"|<psi(0)|psi(T)>| = {mag:.3g}; the total phase is ill-conditioned", NotCyclicWarning,
                      stacklevel=2)
    return GeometricPhase(total, dynamical, wrap(total + dynamical), float(mag), bool(cyclic))


def _holonomy(vecs: np.ndarray, stride: int) -> float:
    v = vecs[::stride]
    if (len(vecs) - 1) % stride:
        raise ValueError("stride must divide the number of intervals")
    links = np.einsum("ka,ka->k", v[:-1].conj(), v[1:])
    closing = np.vdot(v[-1], v[0])
    # sum of link angles is gauge-dependent but the total is not
    return -float(np.sum(np.angle(links)) + np.angle(closing))


def berry_phase(frames: list[GaugeFixedFrame], n: int, extrapolate: bool = True) -> float:
    """Berry phase of label ``n`` (1-based) around a closed loop of frames.

    The discrete holonomy -arg prod <phi_n(t_k)|phi_n(t_k+1)> (closed with
    <phi_n(T)|phi_n(0)>) carries an O(dt^2) error with an even expansion; with
    ``extrapolate`` one Richardson step against every-other-frame sampling
    removes it.  Result wrapped to (-pi, pi].

    Raises:
        DegenerateGap: label ``n`` is degenerate on some frame.
        FrameMismatch: the first and last frames do not describe the same state.
    """
    vecs = np.array([f.vector(n) for f in frames])
    if any(f.coupled_degenerate(n) for f in frames):
        raise DegenerateGap(f"label {n} is degenerate with a coupled level somewhere on the loop")
    if abs(abs(np.vdot(vecs[0], vecs[-1])) - 1.0) > 1e-6:
        raise FrameMismatch("frames do not close: last eigenvector differs from the first")
    fine = _holonomy(vecs, 1)
    if extrapolate and (len(vecs) - 1) % 2 == 0 and len(vecs) >= 5:
        coarse = _holonomy(vecs, 2)
        # (4 fine - coarse) / 3, using the wrapped difference so a branch cut cannot leak in
        fine = fine - wrap(coarse - fine) / 3.0
    return wrap(fine)


def omega_matrix(frames: list[GaugeFixedFrame]) -> np.ndarray:
    """Omega_jk(T) = int_0^T (E_k - E_j) by trapezoid; antisymmetric."""
    e = np.array([f.values for f in frames])
    t = np.array([f.t for f in frames])
    integral = np.sum(0.5 * np.diff(t)[:, None] * (e[1:] + e[:-1]), axis=0)
    return integral[None, :] - integral[:, None]


def _closure_frame(spec: ModelSpec, frames) -> GaugeFixedFrame:
    # Single-valued gauge at T: the deterministic rule, identical to the one at t = 0.
    f = numeric_eigensystem(spec, frames[-1].t, deg_tol=frames[-1].deg_tol)
    vecs = np.stack([phase_fix(f.vectors[:, k]) for k in range(f.vectors.shape[1])], axis=1)
    return GaugeFixedFrame(f.t, EigenPairSet(f.values, vecs, f.eigen.degeneracy_groups), f.ordering, f.deg_tol,
                           spec=spec)


def perturbative_amplitudes(spec: ModelSpec, frames: list[GaugeFixedFrame], n: int) -> np.ndarray:
    """First-order amplitudes at T for a run seeded in label ``n`` (1-based):

        c_n = exp(i gamma_n),
        c_m = exp(i Omega_nm + i gamma_n) <phi_m|d phi_n/dt> / (E_m - E_n).

    Matrix elements use the single-valued gauge at T.

    Raises:
        DegenerateGap: a level coupled to ``n`` is degenerate with it.
    """
    gamma_n = berry_phase(frames, n)
    om = omega_matrix(frames)
    end = _closure_frame(spec, frames)
    d = derivative_couplings(spec, end)
    e = end.values
    k = n - 1
    c = np.zeros(len(e), dtype=complex)
    c[k] = np.exp(1j * gamma_n)
    for m in range(len(e)):
        if m == k or d[m, k] == 0:
            continue
        c[m] = np.exp(1j * (om[k, m] + gamma_n)) * d[m, k] / (e[m] - e[k])
    return c


def geometric_phase_perturbative(spec: ModelSpec, frames: list[GaugeFixedFrame], n: int) -> tuple[float, float]:
    """Two first-order estimates of the geometric phase for a run seeded in ``n``.

    ``phi_18 = arg[exp(i gamma_n) + sum_{m != n} c_m(T)]`` and its expansion
    to first order in Gamma_mn,

        phi_19 = gamma_n + sum_{m != n} Gamma_mn sin(Omega_nm(T) + arg(<phi_m|d phi_n/dt> / (E_m - E_n))),

    so that the two agree to O(Gamma^2).  Both tend to gamma_n as Gamma -> 0.
    """
    c = perturbative_amplitudes(spec, frames, n)
    k = n - 1
    gamma_n = float(np.angle(c[k]))
    phi_18 = float(np.angle(np.sum(c)))
    # Im(c_m exp(-i gamma_n)) = Gamma_mn sin(...)
    correction = float(sum(np.imag(c[m] * np.exp(-1j * gamma_n)) for m in range(len(c)) if m != k))
    return wrap(phi_18), wrap(gamma_n + correction)


def phase_report(loop: LoopSpec, seed_label: int | None, traj: Trajectory | None = None,
                 frames: list[GaugeFixedFrame] | None = None) -> PhaseReport:
    """All phase quantities for one loop.

    ``seed_label`` names the eigenstate of H(0) the run starts in.  With
    ``None`` the trajectory must be supplied; the perturbative estimates are
    then ``nan`` and ``gamma_max`` covers every pair.
    """
    spec = loop.model
    if frames is None:
        frames = frames_along(spec, loop.times())
    if traj is None:
        if seed_label is None:
            raise ValueError("a trajectory is required when no seed label is given")
        traj = evolve_pure(loop, frames[0].vector(seed_label))
    gp = geometric_phase(traj)
    berry = []
    for lab in range(1, 5):
        try:
            berry.append(berry_phase(frames, lab))
        except DegenerateGap:
            berry.append(float("nan"))
    gm = gamma_matrix(spec, frame=frames[-1])
    if seed_label is None:
        phi_18 = phi_19 = float("nan")
        gmax = float(np.max(gm))
    else:
        phi_18, phi_19 = geometric_phase_perturbative(spec, frames, seed_label)
        gmax = float(np.max(np.delete(gm[:, seed_label - 1], seed_label - 1)))
    return PhaseReport(seed_label, gp.total, gp.dynamical, gp.geometric, tuple(berry), phi_18, phi_19,
                       omega_matrix(frames), gmax, gp.cyclic)
