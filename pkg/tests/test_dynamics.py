import math

import numpy as np
import pytest

from coupled_adiabatic.dynamics import (
    evolve_mixed,
    evolve_pure,
    integrate_amplitudes,
    project_amplitudes,
    propagator,
    recommended_n_steps,
)
from coupled_adiabatic.errors import FrameMismatch, NonPhysical, StepTooLarge
from coupled_adiabatic.linalg import I2, SIGMA_Z, tensor
from coupled_adiabatic.model import LoopSpec, ModelSpec
from coupled_adiabatic.phases import berry_phase
from coupled_adiabatic.spectra import frames_along, numeric_eigensystem

from oracles import exact_states

SPEC = ModelSpec("ising_z", 1.0, math.pi / 3, 1.0)


def test_stationary_state_picks_up_energy_phase():
    spec = ModelSpec("ising_z", 0.7, 1.0, 0.0)
    loop = LoopSpec(spec, 512, period=3.0)
    f = numeric_eigensystem(spec, 0.0)
    traj = evolve_pure(loop, f.vector(2))
    expected = np.exp(-1j * f.values[1] * 3.0) * f.vector(2)
    assert abs(np.vdot(expected, traj.states[-1])) > 1 - 1e-8


@pytest.mark.parametrize("kind", ["ising_z", "flip_flop", "none"])
def test_against_rotating_frame_oracle(kind):
    spec = ModelSpec(kind, 0.8, 1.1, 0.7, 0.3)
    loop = LoopSpec(spec, 2048)
    psi0 = np.array([0.6, 0.3j, -0.5, 0.1 + 0.2j])
    psi0 = psi0 / np.linalg.norm(psi0)
    traj = evolve_pure(loop, psi0)
    ref = exact_states(kind, 0.8, 1.1, 0.7, traj.times, psi0, 0.3)
    assert np.max(np.abs(traj.states - ref)) < 1e-8


def test_qubit2_polarisation_conserved():
    psi0 = np.kron([0.6, 0.8], [1, 0]).astype(complex)
    traj = evolve_pure(LoopSpec(SPEC), psi0)
    z2 = tensor(I2, SIGMA_Z)
    pol = np.einsum("ka,ab,kb->k", traj.states.conj(), z2, traj.states).real / np.linalg.norm(traj.states, axis=1) ** 2
    assert np.max(np.abs(pol - 1)) < 1e-9


def test_fast_driving_leaves_the_eigenstate():
    spec = ModelSpec("none", 0.0, math.pi / 2, 10.0)
    loop = LoopSpec(spec)
    frames = frames_along(spec, loop.times())
    traj = evolve_pure(loop, frames[0].vector(1))
    pops = project_amplitudes(traj, frames).populations()
    assert np.min(pops[:, 0]) < 0.9


def test_step_guard_and_suggestion():
    spec = ModelSpec("ising_z", 1.0, math.pi / 3, 0.01)
    with pytest.raises(StepTooLarge) as info:
        evolve_pure(LoopSpec(spec, 4096), numeric_eigensystem(spec, 0.0).vector(1))
    n = info.value.suggested_n_steps
    assert n > 4096
    evolve_pure(LoopSpec(spec, n), numeric_eigensystem(spec, 0.0).vector(1))


def test_recommended_steps_pass_guard():
    for omega in (0.003, 0.05, 2.0):
        spec = ModelSpec("ising_z", 2.0, 1.0, omega)
        n = recommended_n_steps(spec)
        assert n % 16 == 0 and n >= 4096
        evolve_pure(LoopSpec(spec, n), numeric_eigensystem(spec, 0.0).vector(1))


def test_rejects_unnormalised_seed():
    with pytest.raises(NonPhysical):
        evolve_pure(LoopSpec(SPEC, 64), [1, 1, 0, 0])
    with pytest.raises(NonPhysical):
        evolve_mixed(LoopSpec(SPEC, 64), np.diag([0.5, 0.6, 0, 0]))


def test_mixed_examples():
    loop = LoopSpec(SPEC, 1024)
    traj = evolve_mixed(loop, np.eye(4) / 4)
    assert np.max(np.abs(traj.rho_states - np.eye(4) / 4)) < 1e-12
    psi0 = numeric_eigensystem(SPEC, 0.0).vector(3)
    pure = evolve_pure(loop, psi0)
    mixed = evolve_mixed(loop, np.outer(psi0, psi0.conj()))
    assert np.max(np.abs(mixed.rho_states - pure.density_matrices())) < 1e-8


def test_mixed_spectrum_and_trace_constant():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho0 = a @ a.conj().T
    rho0 /= np.trace(rho0).real
    traj = evolve_mixed(LoopSpec(ModelSpec("flip_flop", 0.9, 1.2, 1.5), 2048), rho0)
    w0 = np.linalg.eigvalsh(rho0)
    for rho in traj.rho_states[::64]:
        assert np.max(np.abs(np.linalg.eigvalsh(rho) - w0)) < 1e-8
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert np.max(traj.norm_drift()) < 1e-8


def test_propagator_unitary_and_consistent():
    loop = LoopSpec(SPEC, 2048)
    u = propagator(loop)
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-8
    psi0 = numeric_eigensystem(SPEC, 0.0).vector(1)
    np.testing.assert_allclose(u @ psi0, evolve_pure(loop, psi0).states[-1], atol=1e-12)


def test_rk4_order():
    psi0 = numeric_eigensystem(SPEC, 0.0).vector(1)
    ref = exact_states("ising_z", 1.0, math.pi / 3, 1.0, [2 * math.pi], psi0)[0]
    errs = [np.linalg.norm(evolve_pure(LoopSpec(SPEC, n), psi0).states[-1] - ref) for n in (128, 256)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_projection_examples():
    spec = ModelSpec("ising_z", 1.0, 1.0, 0.0)
    loop = LoopSpec(spec, 2048, period=4.0)
    frames = frames_along(spec, loop.times())
    amps = project_amplitudes(evolve_pure(loop, frames[0].vector(1)), frames)
    assert np.max(np.abs(amps.c[:, 0] - 1)) < 1e-8
    assert np.max(np.abs(amps.c[:, 1:])) < 1e-8
    with pytest.raises(FrameMismatch):
        project_amplitudes(evolve_pure(loop, frames[0].vector(1)), frames[:-1])


def test_projection_normalised_and_block_conserving():
    loop = LoopSpec(SPEC)
    frames = frames_along(SPEC, loop.times())
    amps = project_amplitudes(evolve_pure(loop, frames[0].vector(1)), frames)
    assert np.max(np.abs(np.sum(amps.populations(), axis=1) - 1)) < 1e-8
    assert np.max(np.abs(amps.c[:, 2:])) < 1e-10
    np.testing.assert_allclose(amps.c[0], [1, 0, 0, 0], atol=1e-15)


def test_amplitude_equation_matches_projection():
    spec = ModelSpec("ising_z", 1.0, math.pi / 3, 0.1)
    loop = LoopSpec(spec)
    frames = frames_along(spec, loop.times())
    proj = project_amplitudes(evolve_pure(loop, frames[0].vector(1)), frames)
    direct = integrate_amplitudes(loop, [1, 0, 0, 0])
    assert np.max(np.abs(direct.c - proj.c)) < 1e-6


def _single_valued(frame):
    # largest component real positive on every frame: a gauge that closes on itself
    phases = []
    for lab in range(4):
        v = frame.vectors[:, lab]
        k = int(np.argmax(np.abs(v)))
        phases.append(-np.angle(v[k]))
    return frame.rephased(phases)


def test_amplitude_equation_without_coupling_gives_berry_phase():
    spec = ModelSpec("ising_z", 0.5, 1.0, 0.2)
    loop = LoopSpec(spec, 2048)
    fine = [_single_valued(f) for f in frames_along(spec, np.linspace(0, loop.period, 4097))]
    amps = integrate_amplitudes(loop, [1, 0, 0, 0], frames=fine, couple=False)
    assert np.max(np.abs(np.abs(amps.c[:, 0]) - 1)) < 1e-10
    gamma = berry_phase(frames_along(spec, loop.times()), 1)
    assert np.angle(amps.c[-1, 0]) == pytest.approx(gamma, abs=1e-6)


def test_amplitude_equation_adiabatic_limit():
    spec = ModelSpec("ising_z", 1.0, math.pi / 3, 1e-3)
    amps = integrate_amplitudes(LoopSpec(spec, 16384), [1, 0, 0, 0])
    pops = amps.populations()
    assert np.max(np.abs(np.sum(pops, axis=1) - 1)) < 1e-6
    assert np.max(1 - pops[:, 0]) < 1e-4


def test_amplitude_frames_length_checked():
    loop = LoopSpec(SPEC, 64)
    with pytest.raises(FrameMismatch):
        integrate_amplitudes(loop, [1, 0, 0, 0], frames=frames_along(SPEC, loop.times()))
