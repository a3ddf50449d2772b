import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coupled_adiabatic.dynamics import evolve_mixed, evolve_pure, recommended_n_steps
from coupled_adiabatic.errors import InsufficientSamples, LabelAmbiguityWarning, UnsupportedModel
from coupled_adiabatic.linalg import I2, SIGMA_X, normalize, partial_trace_2, projector, tensor
from coupled_adiabatic.model import LoopSpec, ModelSpec, hamiltonian_at
from coupled_adiabatic.schmidt import (
    nontransitional_ratios,
    open_system_ratio,
    rate_equation_residual,
    reduced_density_closed_form,
    reduced_density_eigen,
    schmidt_decompose,
    schmidt_series,
)
from coupled_adiabatic.schmidt import _schmidt_loop
from coupled_adiabatic.spectra import frames_along, gamma_matrix, numeric_eigensystem

from oracles import exact_states, qubit1_upper

FLIP = ModelSpec("flip_flop", 1.0, math.pi / 3, 0.05)


def _series(spec, label=1, n=None):
    n = n or recommended_n_steps(spec)
    traj = evolve_pure(LoopSpec(spec, n), numeric_eigensystem(spec, 0.0).vector(label))
    return traj, schmidt_series(traj)


def _oracle_p(spec, label, times):
    psi0 = numeric_eigensystem(spec, 0.0).vector(label)
    states = exact_states(spec.coupling.value, spec.g, spec.theta, spec.omega, times, psi0, spec.phi0)
    return np.array([np.linalg.svd(s.reshape(2, 2), compute_uv=False) ** 2 for s in states])


def test_decompose_product_and_bell():
    f = schmidt_decompose([1, 0, 0, 0])
    np.testing.assert_allclose(f.p, [1, 0])
    np.testing.assert_allclose(f.basis1[:, 0], [1, 0])
    np.testing.assert_allclose(f.basis2[:, 0], [1, 0])
    np.testing.assert_allclose(schmidt_decompose(np.array([1, 0, 0, 1]) / math.sqrt(2)).p, [0.5, 0.5])


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 3), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_instantaneous_eigenstates_are_products(g, theta, t):
    spec = ModelSpec("ising_z", g, theta, 1.0)
    frame = numeric_eigensystem(spec, t, deg_tol=1e-8) if abs(g - 1) > 1e-3 else None
    if frame is None:
        return
    np.testing.assert_allclose(schmidt_decompose(frame.vector(1)).p, [1, 0], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 4), elements=st.floats(-1, 1)).filter(lambda a: np.linalg.norm(a) > 1e-2))
def test_decompose_reconstructs(a):
    psi = normalize(a[0] + 1j * a[1])
    f = schmidt_decompose(psi)
    assert abs(np.vdot(f.reconstruct(), psi)) > 1 - 1e-10
    assert f.p[0] >= f.p[1] >= 0 and abs(f.p.sum() - 1) < 1e-12
    for b in (f.basis1, f.basis2):
        np.testing.assert_allclose(b.conj().T @ b, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("omega", [0.05, 1.0, 10.0])
def test_ising_seeded_in_eigenstate_is_non_transitional(omega):
    _, s = _series(ModelSpec("ising_z", 1.0, math.pi / 3, omega))
    assert np.max(np.abs(s.p[:, 0] - 1)) < 1e-8
    assert np.max(nontransitional_ratios(s)) < 1e-10


def test_static_run_keeps_weights():
    spec = ModelSpec("flip_flop", 0.8, 1.0, 0.0)
    traj = evolve_pure(LoopSpec(spec, 1024, period=5.0), numeric_eigensystem(spec, 0.0).vector(2))
    s = schmidt_series(traj)
    assert np.max(np.abs(s.p - s.p[0])) < 1e-9


def test_uncoupled_product_ratio_zero():
    spec = ModelSpec("none", 0.0, 1.0, 0.7)
    traj = evolve_pure(LoopSpec(spec, 1024), np.kron([0.6, 0.8j], [0.8, -0.6]).astype(complex))
    assert np.all(nontransitional_ratios(schmidt_series(traj)) == 0)


def test_flip_flop_weights_match_oracle():
    traj, s = _series(FLIP, label=4)
    ref = _oracle_p(FLIP, 4, traj.times)
    assert np.max(np.abs(np.sort(s.p, axis=1) - np.sort(ref, axis=1))) < 1e-6
    drift = s.p_drift()
    assert drift > 1e-3
    assert np.max(nontransitional_ratios(s)) > 0.1


@pytest.mark.xfail(strict=True, reason="converged drift for this run is about 6.0e-3; see notes")
def test_flip_flop_drift_exceeds_one_percent():
    _, s = _series(FLIP, label=4)
    assert s.p_drift() > 0.01


@pytest.mark.parametrize("label", [1, 4])
def test_vectorised_labelling_matches_loop(label):
    traj, s = _series(ModelSpec("flip_flop", 0.8, 1.2, 0.7), label=label, n=2048)
    mats = s.states.reshape(-1, 2, 2)
    p, b1, b2, swapped = _schmidt_loop(mats, np.zeros(len(mats), dtype=bool))
    np.testing.assert_allclose(s.p, p, atol=1e-12)
    np.testing.assert_allclose(s.basis1, b1, atol=1e-9)
    np.testing.assert_allclose(s.basis2, b2, atol=1e-9)
    np.testing.assert_array_equal(s.swapped, swapped)


def test_label_ambiguity_is_flagged():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    traj = evolve_pure(LoopSpec(ModelSpec("none", 0.0, 1.0, 1.0), 256), bell)
    with pytest.warns(LabelAmbiguityWarning):
        s = schmidt_series(traj)
    assert s.ambiguous.all()
    np.testing.assert_allclose(s.p, 0.5, atol=1e-8)


def test_residual_static_and_errors():
    spec = ModelSpec("flip_flop", 0.8, 1.0, 0.0)
    psi0 = normalize([0.3, 0.5, 0.2j, 0.6])
    res = [rate_equation_residual(schmidt_series(evolve_pure(LoopSpec(spec, n, period=5.0), psi0)))
           for n in (1024, 2048)]
    # second-order finite differences dominate the residual
    assert 3.5 < res[0] / res[1] < 4.5
    short = evolve_pure(LoopSpec(spec, 32, period=0.5), psi0)
    with pytest.raises(InsufficientSamples):
        rate_equation_residual(schmidt_series(short))


def test_residual_adiabatic_ising():
    _, s = _series(ModelSpec("ising_z", 1.0, math.pi / 3, 0.02), n=4096)
    assert rate_equation_residual(s) < 1e-4


def test_residual_converges_flip_flop():
    res = [rate_equation_residual(_series(FLIP, 4, n)[1]) for n in (4096, 8192)]
    assert res[1] < res[0]


def test_open_system_ratio():
    traj, s = _series(ModelSpec("ising_z", 1.0, math.pi / 3, 0.3))
    h_ops = hamiltonian_at(s.model, s.times)
    r = open_system_ratio(s, [np.eye(4), tensor(SIGMA_X, SIGMA_X), tensor(SIGMA_X, I2)])
    assert np.all(r[:, 0] == 0)
    assert np.max(r[:, 1]) > 0
    # a local operator on qubit 1 cannot connect orthogonal qubit-2 partners
    assert np.max(r[:, 2]) < 1e-12
    _, f = _series(FLIP, 4, 4096)
    rh = np.array([open_system_ratio(_slice(f, k), [hamiltonian_at(f.model, f.times[k])])[0, 0]
                   for k in range(0, 4097, 256)])
    np.testing.assert_allclose(rh, nontransitional_ratios(f)[::256], atol=1e-12)
    assert h_ops.shape[0] == len(s.times)


def _slice(series, k):
    import dataclasses

    return dataclasses.replace(series, times=series.times[k:k + 1], states=series.states[k:k + 1],
                               p=series.p[k:k + 1], basis1=series.basis1[k:k + 1], basis2=series.basis2[k:k + 1],
                               hmat=series.hmat[k:k + 1], ambiguous=series.ambiguous[k:k + 1],
                               swapped=series.swapped[k:k + 1])


def test_closed_form_reduced_density():
    for g, theta, t in ((0.4, 1.0, 0.0), (2.0, 2.0, 3.0), (1.0, math.pi / 3, 1.0)):
        spec = ModelSpec("ising_z", g, theta, 0.7)
        v = qubit1_upper(g, theta, 0.7 * t)
        np.testing.assert_allclose(reduced_density_closed_form(spec, t), np.outer(v, v.conj()), atol=1e-10)
        frame = numeric_eigensystem(spec, t)
        np.testing.assert_allclose(partial_trace_2(projector(frame.vector(1))), np.outer(v, v.conj()), atol=1e-10)
    with pytest.raises(UnsupportedModel):
        reduced_density_closed_form(FLIP, 0.0)


def test_reduced_density_follows_closed_form_adiabatically():
    spec = ModelSpec("ising_z", 1.0, math.pi / 3, 1e-3)
    traj, s = _series(spec)
    rd = reduced_density_eigen(traj)
    np.testing.assert_allclose(rd.values[:, 0], 1, atol=1e-8)
    gam = gamma_matrix(spec)[0, 1]
    dev = 0.0
    for k in range(0, len(traj.times), 2048):
        ref = reduced_density_closed_form(spec, traj.times[k])
        v = rd.vectors[k][:, 0]
        dev = max(dev, np.max(np.abs(np.outer(v, v.conj()) - ref)))
    # the evolved state trails the instantaneous one by O(Gamma)
    assert dev < 3 * gam


def test_reduced_density_mixed_runs():
    spec = ModelSpec("none", 0.0, 1.0, 0.5)
    rho0 = np.diag([0.7, 0, 0, 0.3]).astype(complex)
    rd = reduced_density_eigen(evolve_mixed(LoopSpec(spec, 2048), rho0))
    np.testing.assert_allclose(rd.values, np.tile([0.7, 0.3], (2049, 1)), atol=1e-8)
    rd = reduced_density_eigen(evolve_mixed(LoopSpec(FLIP, 4096), np.eye(4) / 4))
    np.testing.assert_allclose(rd.values, 0.5, atol=1e-12)


def test_reduced_density_agrees_with_schmidt_weights():
    traj, s = _series(FLIP, label=2, n=4096)
    rd = reduced_density_eigen(traj)
    assert np.max(np.abs(rd.values - s.p)) < 1e-9


def test_drift_tracks_ratio_across_rates():
    from scipy.stats import spearmanr

    drift, ratio = [], []
    for omega in np.geomspace(0.02, 2.0, 8):
        spec = ModelSpec("flip_flop", 1.0, math.pi / 3, omega)
        _, s = _series(spec, label=4)
        drift.append(s.p_drift())
        ratio.append(np.max(nontransitional_ratios(s)))
    assert spearmanr(drift, ratio).statistic > 0.9


def test_phase_corrected_weights_constant_when_ratio_vanishes():
    # with H_12 = 0 the Schmidt amplitudes only pick up connection phases
    _, s = _series(ModelSpec("ising_z", 0.7, 1.2, 0.4))
    assert np.max(nontransitional_ratios(s)) < 1e-10
    assert np.max(np.abs(s.p - s.p[0])) < 1e-9
    _, f = _series(FLIP, label=4)
    assert np.max(nontransitional_ratios(f)) > 0.1 and f.p_drift() > 1e-3


def test_ambiguity_warning_not_raised_for_clean_runs():
    with warnings.catch_warnings():
        warnings.simplefilter("error", LabelAmbiguityWarning)
        _series(FLIP, label=4, n=4096)
