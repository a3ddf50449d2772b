import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupled_adiabatic.dynamics import recommended_n_steps
from coupled_adiabatic.errors import InvalidParameter
from coupled_adiabatic.model import LoopSpec, ModelSpec
from coupled_adiabatic.regimes import (
    Regime,
    RegimeThresholds,
    classify,
    evaluate_mixed,
    evaluate_pure,
    gamma_max_for,
)
from coupled_adiabatic.spectra import numeric_eigensystem

evidence = st.floats(0, 2) | st.just(math.inf) | st.just(math.nan)


@pytest.mark.parametrize("args,letter", [
    ((0.01, 0.0, 0.0), "A"),
    ((0.01, 0.5, 0.0), "B"),
    ((0.01, 0.0, 0.01), "B"),
    ((2.5, 0.0, 0.0), "C"),
    ((2.5, 0.5, 0.1), "D"),
    ((math.inf, 0.0, 0.0), "C"),
    ((0.01, math.nan, 0.0), "B"),
])
def test_classify_table(args, letter):
    assert classify(*args).letter == letter


def test_threshold_edges_and_validation():
    assert classify(0.1, 0.0, 0.0).regime is Regime.QUASI_ADIABATIC_2C
    assert classify(0.0, 0.0, 1e-3).regime is Regime.QUASI_ADIABATIC_1B
    with pytest.raises(InvalidParameter):
        RegimeThresholds(0.0, 0.1, 1e-3)
    with pytest.raises(InvalidParameter):
        classify(-1.0, 0.0, 0.0)


def test_label_line_format():
    line = classify(0.25, 0.0, 1.5e-3).line()
    assert line == "regime=D gamma_max=2.500000e-01 ratio_max=0.000000e+00 p_drift=1.500000e-03"


@settings(max_examples=200)
@given(evidence, evidence, evidence, st.floats(1e-3, 1), st.floats(1, 10))
def test_raising_adiabatic_eps_is_monotone(g, r, d, eps, factor):
    lo = classify(g, r, d, RegimeThresholds(adiabatic_eps=eps))
    hi = classify(g, r, d, RegimeThresholds(adiabatic_eps=eps * factor))
    if lo.letter in "AB":
        assert hi.letter in "AB"
    # the subsystem verdict does not depend on the composite threshold
    assert (lo.letter in "AC") == (hi.letter in "AC")


@settings(max_examples=10, deadline=None)
@given(st.floats(0, math.pi), st.floats(0.1, 5), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_uncoupled_products_never_transitional(theta, omega, a, b):
    spec = ModelSpec("none", 0.0, theta, omega)
    q1 = np.array([math.cos(a / 2), math.sin(a / 2) * np.exp(1j * b)])
    q2 = np.array([math.cos(b / 2), math.sin(b / 2)])
    ev = evaluate_pure(LoopSpec(spec, 1024), np.kron(q1, q2))
    assert ev.label.letter in "AC"
    assert ev.label.ratio_max == 0.0


def test_examples():
    spec = ModelSpec("ising_z", 1.0, math.pi / 3, 0.01)
    loop = LoopSpec(spec, recommended_n_steps(spec))
    assert evaluate_pure(loop, numeric_eigensystem(spec, 0.0).vector(1)).label.letter == "A"
    spec = ModelSpec("none", 0.0, math.pi / 2, 10.0)
    ev = evaluate_pure(LoopSpec(spec), numeric_eigensystem(spec, 0.0).vector(1))
    assert ev.label.letter == "C"
    assert ev.label.gamma_max == pytest.approx(2.5, abs=1e-9)
    spec = ModelSpec("flip_flop", 1.0, math.pi / 3, 0.05)
    ev = evaluate_pure(LoopSpec(spec, recommended_n_steps(spec)), numeric_eigensystem(spec, 0.0).vector(4))
    assert ev.label.letter == "B"
    assert ev.label.p_drift > 1e-3


def test_gamma_max_uses_occupied_labels():
    spec = ModelSpec("ising_z", 0.5, 1.0, 1.0)
    loop = LoopSpec(spec, 64)
    g12 = gamma_max_for(loop, (1,))
    g34 = gamma_max_for(loop, (3,))
    assert g12 == pytest.approx(1.0 * math.sin(1.0) / (4 * (1.25 + math.cos(1.0))), rel=1e-9)
    assert g34 > g12
    assert gamma_max_for(loop, (1, 3)) == g34


def test_mixed_evaluation():
    spec = ModelSpec("none", 0.0, 1.0, 0.5)
    loop = LoopSpec(spec, 1024)
    ev = evaluate_mixed(loop, np.diag([0.7, 0, 0, 0.3]).astype(complex))
    assert ev.label.letter in "AC" and ev.label.p_drift < 1e-8
    assert ev.weights == pytest.approx((0.7, 0.3))
    full = evaluate_mixed(loop, np.eye(4) / 4)
    assert full.occupied == (1, 2, 3, 4)
    assert full.label.p_drift < 1e-12
