"""Four-way classification of a run: composite adiabatic or not, subsystems
non-transitional or not.

"Much less than one" is made operational by configurable thresholds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, evolve_mixed, evolve_pure
from .errors import InvalidParameter
from .linalg import validate_density
from .model import LoopSpec
from .schmidt import nontransitional_ratios, reduced_density_eigen, schmidt_series
from .spectra import GaugeFixedFrame, frames_along, gamma_matrix

OCCUPIED_TOL = 1e-12
GAMMA_SAMPLES = 65


@dataclass(frozen=True)
class RegimeThresholds:
    adiabatic_eps: float = 0.1
    nontrans_eps: float = 0.1
    p_drift_eps: float = 1e-3

    def __post_init__(self):
        for name in ("adiabatic_eps", "nontrans_eps", "p_drift_eps"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidParameter(f"{name} must be positive and finite, got {val}")


class Regime(enum.Enum):
    ADIABATIC_A = "A"
    QUASI_ADIABATIC_1B = "B"
    QUASI_ADIABATIC_2C = "C"
    NON_ADIABATIC_D = "D"

    @property
    def letter(self) -> str:
        return self.value


@dataclass(frozen=True)
class RegimeLabel:
    regime: Regime
    gamma_max: float
    ratio_max: float
    p_drift: float

    @property
    def letter(self) -> str:
        return self.regime.value

    def line(self) -> str:
        return (f"regime={self.letter} gamma_max={self.gamma_max:.6e} "
                f"ratio_max={self.ratio_max:.6e} p_drift={self.p_drift:.6e}")


def _passes(value: float, eps: float) -> bool:
    # nan and inf mark singular evidence: the criterion fails
    return math.isfinite(value) and value < eps


def classify(gamma_max: float, ratio_max: float, p_drift_max: float,
             th: RegimeThresholds | None = None) -> RegimeLabel:
    """Label a run from its evidence; ``inf``/``nan`` count as failing."""
    th = th or RegimeThresholds()
    for name, val in (("gamma_max", gamma_max), ("ratio_max", ratio_max), ("p_drift_max", p_drift_max)):
        if val < 0:
            raise InvalidParameter(f"{name} must be >= 0, got {val}")
    adiabatic = _passes(gamma_max, th.adiabatic_eps)
    nontrans = _passes(ratio_max, th.nontrans_eps) and _passes(p_drift_max, th.p_drift_eps)
    regime = {
        (True, True): Regime.ADIABATIC_A,
        (True, False): Regime.QUASI_ADIABATIC_1B,
        (False, True): Regime.QUASI_ADIABATIC_2C,
        (False, False): Regime.NON_ADIABATIC_D,
    }[(adiabatic, nontrans)]
    return RegimeLabel(regime, float(gamma_max), float(ratio_max), float(p_drift_max))


@dataclass(frozen=True)
class RunEvaluation:
    """Evidence and label for one run, plus the trajectories it came from."""

    label: RegimeLabel
    occupied: tuple[int, ...]
    trajectories: tuple[Trajectory, ...] = field(repr=False)
    weights: tuple[float, ...] = ()


def gamma_max_for(loop: LoopSpec, occupied, samples: int = GAMMA_SAMPLES,
                  frames: list[GaugeFixedFrame] | None = None) -> float:
    """Largest Gamma_ij over the loop for pairs touching an occupied label (1-based)."""
    if frames is None:
        frames = frames_along(loop.model, np.linspace(0.0, loop.period, samples))
    best = 0.0
    occ = [k - 1 for k in occupied]
    for f in frames:
        gm = gamma_matrix(loop.model, frame=f)
        for k in occ:
            col = np.delete(gm[:, k], k)
            best = max(best, float(np.max(col)))
    return best


def evaluate_pure(loop: LoopSpec, psi0, th: RegimeThresholds | None = None,
                  traj: Trajectory | None = None) -> RunEvaluation:
    """Evolve a pure seed and classify the run.

    Occupied labels are those with population above 1e-12 in the
    eigenbasis of H(0).
    """
    frames = frames_along(loop.model, np.linspace(0.0, loop.period, GAMMA_SAMPLES))
    psi0 = np.asarray(psi0, dtype=complex)
    pops = np.abs(frames[0].vectors.conj().T @ psi0) ** 2
    occupied = tuple(int(k) + 1 for k in np.flatnonzero(pops > OCCUPIED_TOL))
    if traj is None:
        traj = evolve_pure(loop, psi0)
    series = schmidt_series(traj)
    ratio = float(np.max(nontransitional_ratios(series)))
    drift = series.p_drift()
    gmax = gamma_max_for(loop, occupied, frames=frames)
    return RunEvaluation(classify(gmax, ratio, drift, th), occupied, (traj,), (1.0,))


def evaluate_mixed(loop: LoopSpec, rho0, th: RegimeThresholds | None = None) -> RunEvaluation:
    """Classify a mixed seed.

    The ratio evidence is the maximum over the pure components of rho0
    (its eigenvectors with weight above 1e-12), each evolved separately;
    the drift is that of the reduced spectrum of the evolved rho.
    """
    rho0 = validate_density(rho0)
    w, v = np.linalg.eigh(rho0)
    frames = frames_along(loop.model, np.linspace(0.0, loop.period, GAMMA_SAMPLES))
    pops = np.real(np.einsum("al,ab,bl->l", frames[0].vectors.conj(), rho0, frames[0].vectors))
    occupied = tuple(int(k) + 1 for k in np.flatnonzero(pops > OCCUPIED_TOL))
    ratio = 0.0
    trajs = []
    weights = []
    for k in np.flatnonzero(w > OCCUPIED_TOL)[::-1]:
        tr = evolve_pure(loop, v[:, k] / np.linalg.norm(v[:, k]))
        ratio = max(ratio, float(np.max(nontransitional_ratios(schmidt_series(tr)))))
        trajs.append(tr)
        weights.append(float(w[k]))
    mixed = evolve_mixed(loop, rho0)
    rd = reduced_density_eigen(mixed)
    drift = float(np.max(np.abs(rd.values - rd.values[0])))
    gmax = gamma_max_for(loop, occupied, frames=frames)
    return RunEvaluation(classify(gmax, ratio, drift, th), occupied, (mixed, *trajs), tuple(weights))
