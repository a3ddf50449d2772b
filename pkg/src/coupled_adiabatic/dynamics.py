"""Time evolution around the loop.

All integrators are fixed-step RK4.  Because every equation here is linear,
x' = A(t) x, one RK4 step is x -> M_k x with

    M_k = I + dt/6 (K1 + 2 K2 + 2 K3 + K4),
    K1 = A(t),  K2 = A(t+dt/2)(I + dt/2 K1),  K3 = A(t+dt/2)(I + dt/2 K2),
    K4 = A(t+dt)(I + dt K3),

which is the classical scheme with the stage vectors factored out.  The
step matrices are built in batches and the recursion is a plain matvec.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGap, FrameMismatch, NonPhysical, StepTooLarge
from .linalg import validate_density, validate_state
from .model import DEFAULT_N_STEPS, LoopSpec, ModelSpec, hamiltonian_at, hamiltonian_derivative_at, spectral_radius_bound
from .spectra import GaugeFixedFrame, frames_along

log = logging.getLogger(__name__)

STEP_DRIFT_LIMIT = 1e-6
_CHUNK = 16384
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution over ``loop``: ``times[k] = k * loop.dt``.

    Pure runs fill ``states`` (shape (n+1, 4)); mixed runs fill
    ``rho_states`` (shape (n+1, 4, 4)).
    """

    loop: LoopSpec
    times: np.ndarray
    states: np.ndarray | None = None
    rho_states: np.ndarray | None = None
    max_step_drift: float = 0.0

    @property
    def model(self) -> ModelSpec:
        return self.loop.model

    @property
    def is_pure(self) -> bool:
        return self.states is not None

    def norm_drift(self) -> np.ndarray:
        """|norm - 1| per sample (trace - 1 for mixed runs)."""
        if self.states is not None:
            return np.abs(np.linalg.norm(self.states, axis=1) - 1.0)
        return np.abs(np.trace(self.rho_states, axis1=1, axis2=2).real - 1.0)

    def density_matrices(self) -> np.ndarray:
        if self.rho_states is not None:
            return self.rho_states
        return np.einsum("ka,kb->kab", self.states, self.states.conj())


@dataclass(frozen=True)
class AmplitudeSeries:
    """Instantaneous-basis amplitudes c_j(t) and accumulated integrals of E_j."""

    times: np.ndarray
    c: np.ndarray
    dynamical_phases: np.ndarray

    def populations(self) -> np.ndarray:
        return np.abs(self.c) ** 2


def rk4_step_matrices(a0: np.ndarray, ah: np.ndarray, a1: np.ndarray, dt: float) -> np.ndarray:
    """Batched RK4 step matrices for x' = A(t) x given A at t, t+dt/2, t+dt."""
    eye = np.eye(a0.shape[-1])
    k1 = a0
    k2 = ah + (0.5 * dt) * (ah @ k1)
    k3 = ah + (0.5 * dt) * (ah @ k2)
    k4 = a1 + dt * (a1 @ k3)
    return eye + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _propagate(generator, x0: np.ndarray, n_steps: int, dt: float) -> np.ndarray:
    out = np.empty((n_steps + 1,) + x0.shape, dtype=complex)
    out[0] = x0
    x = x0
    for start in range(0, n_steps, _CHUNK):
        stop = min(n_steps, start + _CHUNK)
        t0 = np.arange(start, stop) * dt
        steps = rk4_step_matrices(generator(t0), generator(t0 + 0.5 * dt), generator(t0 + dt), dt)
        for i, m in enumerate(steps, start + 1):
            x = m @ x
            out[i] = x
    return out


def _check_drift(norms: np.ndarray, loop: LoopSpec) -> float:
    drift = float(np.max(np.abs(np.diff(norms)), initial=0.0))
    log.debug("max per-step norm drift %.3e over %d steps", drift, loop.n_steps)
    if drift > STEP_DRIFT_LIMIT:
        # per-step drift of RK4 scales as dt^6; aim two decades under the limit
        factor = (drift / (STEP_DRIFT_LIMIT * 1e-2)) ** (1 / 6)
        suggested = int(math.ceil(loop.n_steps * factor))
        raise StepTooLarge(
            f"per-step norm drift {drift:.2e} exceeds {STEP_DRIFT_LIMIT:.0e}; "
            f"raise n_steps to at least {suggested}", suggested)
    return drift


def recommended_n_steps(model: ModelSpec, period: float | None = None, max_phase_step: float = 0.05) -> int:
    """Step count keeping |H| * dt below ``max_phase_step`` (never below the default).

    Rounded up to a multiple of 16 so that sub-sampled grids stay aligned.
    """
    if period is None:
        period = 2 * math.pi / model.omega
    n = max(DEFAULT_N_STEPS, int(math.ceil(period * spectral_radius_bound(model) / max_phase_step)))
    return -(-n // 16) * 16


def evolve_pure(loop: LoopSpec, psi0) -> Trajectory:
    """Integrate i d|psi>/dt = H(t)|psi> over one loop.

    States are never renormalised; the largest per-step norm change is
    recorded and guarded.

    Raises:
        NonPhysical: ``psi0`` is not normalised.
        StepTooLarge: per-step norm drift above 1e-6.
    """
    psi0 = validate_state(psi0)
    spec = loop.model

    def gen(t):
        return -1j * hamiltonian_at(spec, t)

    states = _propagate(gen, psi0, loop.n_steps, loop.dt)
    drift = _check_drift(np.linalg.norm(states, axis=1), loop)
    return Trajectory(loop, loop.times(), states=states, max_step_drift=drift)


def _liouvillian(h: np.ndarray) -> np.ndarray:
    # row-major vec: vec(H rho) = (H x I) vec(rho), vec(rho H) = (I x H^T) vec(rho)
    eye = np.eye(h.shape[-1])
    left = np.einsum("...ab,cd->...acbd", h, eye)
    right = np.einsum("ab,...dc->...acbd", eye, h)
    shape = h.shape[:-2] + (h.shape[-1] ** 2,) * 2
    return -1j * (left - right).reshape(shape)


def evolve_mixed(loop: LoopSpec, rho0) -> Trajectory:
    """Integrate the von Neumann equation i d(rho)/dt = [H, rho] over one loop.

    Raises:
        NonPhysical: ``rho0`` is not a density matrix.
        StepTooLarge: per-step drift of the Frobenius norm above 1e-6.
    """
    try:
        rho0 = validate_density(rho0)
    except NonPhysical:
        raise
    except ValueError as exc:
        raise NonPhysical(str(exc)) from exc
    spec = loop.model
    d = rho0.shape[0]

    def gen(t):
        return _liouvillian(hamiltonian_at(spec, t))

    vecs = _propagate(gen, rho0.reshape(-1), loop.n_steps, loop.dt)
    drift = _check_drift(np.linalg.norm(vecs, axis=1), loop)
    return Trajectory(loop, loop.times(), rho_states=vecs.reshape(-1, d, d), max_step_drift=drift)


def propagator(loop: LoopSpec) -> np.ndarray:
    """One-period RK4 propagator U(T)."""
    spec = loop.model

    def gen(t):
        return -1j * hamiltonian_at(spec, t)

    x = np.eye(4, dtype=complex)
    for start in range(0, loop.n_steps, _CHUNK):
        stop = min(loop.n_steps, start + _CHUNK)
        t0 = np.arange(start, stop) * loop.dt
        for m in rk4_step_matrices(gen(t0), gen(t0 + 0.5 * loop.dt), gen(t0 + loop.dt), loop.dt):
            x = m @ x
    return x


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]), axis=0)
    return out


def _stack_frames(frames) -> tuple[np.ndarray, np.ndarray]:
    return (np.array([f.values for f in frames]), np.array([f.vectors for f in frames]))


def project_amplitudes(traj: Trajectory, frames: list[GaugeFixedFrame]) -> AmplitudeSeries:
    """c_j(t) = exp(+i int_0^t E_j) <phi_j(t)|psi(t)>, integral by composite trapezoid."""
    if not traj.is_pure:
        raise FrameMismatch("amplitude projection needs a pure trajectory")
    if len(frames) != len(traj.times) or any(abs(f.t - t) > 1e-9 * max(1.0, abs(t))
                                             for f, t in zip(frames, traj.times)):
        raise FrameMismatch("frames are not sampled at the trajectory times")
    energies, vecs = _stack_frames(frames)
    phases = _cumtrapz(energies, traj.loop.dt)
    overlaps = np.einsum("kal,ka->kl", vecs.conj(), traj.states)
    return AmplitudeSeries(traj.times, np.exp(1j * phases) * overlaps, phases)


def _connection_diagonal(vecs: np.ndarray, h: float) -> np.ndarray:
    dv = np.gradient(vecs, h, axis=0, edge_order=2)
    a = np.einsum("kaj,kaj->kj", vecs.conj(), dv)
    return 1j * a.imag


def integrate_amplitudes(loop: LoopSpec, c0, frames: list[GaugeFixedFrame] | None = None,
                         couple: bool = True) -> AmplitudeSeries:
    """RK4 integration of the amplitude equation in the instantaneous basis,

        dc_j/dt = -<phi_j|dphi_j/dt> c_j - sum_{k != j} exp(i Omega_kj(t)) <phi_j|dphi_k/dt> c_k,

    with Omega_kj(t) = int_0^t (E_j - E_k).  ``frames`` must sit on the
    half-step grid (2 n_steps + 1 points); they are built when omitted.
    ``couple=False`` drops the sum, leaving pure Berry-phase transport.

    Raises:
        DegenerateGap: two coupled levels are degenerate somewhere on the path.
        FrameMismatch: ``frames`` has the wrong length.
    """
    spec = loop.model
    n = loop.n_steps
    fine = np.linspace(0.0, loop.period, 2 * n + 1)
    if frames is None:
        frames = frames_along(spec, fine)
    if len(frames) != len(fine):
        raise FrameMismatch(f"expected {len(fine)} half-step frames, got {len(frames)}")
    h = 0.5 * loop.dt
    energies, vecs = _stack_frames(frames)
    conn = _connection_diagonal(vecs, h)
    gen = -np.einsum("kj,ij->kij", conn, np.eye(4))
    if couple:
        hdot = hamiltonian_derivative_at(spec, fine)
        num = np.einsum("kai,kab,kbj->kij", vecs.conj(), hdot, vecs)
        scale = np.max(np.abs(hdot), axis=(1, 2))[:, None, None]
        coupled = np.abs(num) > _ZERO_TOL * scale
        gaps = energies[:, None, :] - energies[:, :, None]  # E_k - E_j at [., j, k]
        tol = np.array([f.deg_tol for f in frames])[:, None, None]
        off = ~np.eye(4, dtype=bool)[None]
        if np.any(coupled & off & (np.abs(gaps) <= tol)):
            raise DegenerateGap("coupled levels are degenerate along the path")
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(coupled & off, num / gaps, 0.0)
        phase = _cumtrapz(energies, h)
        rot = np.exp(1j * (phase[:, :, None] - phase[:, None, :]))  # exp(i (I_j - I_k))
        gen = gen - rot * d
    c0 = np.asarray(c0, dtype=complex)
    steps = rk4_step_matrices(gen[0:-1:2], gen[1::2], gen[2::2], loop.dt)
    c = np.empty((n + 1, 4), dtype=complex)
    c[0] = c0
    x = c0
    for i, m in enumerate(steps, 1):
        x = m @ x
        c[i] = x
    return AmplitudeSeries(fine[::2], c, _cumtrapz(energies, h)[::2])
