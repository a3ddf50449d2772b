"""Driven two-qubit Hamiltonian and the precession loop.

Units: energies in mu*B0/2, time in 2/(mu*B0), hbar = 1.  In these units

    H(t) = g * C + h(theta, phi(t)) (x) I,     phi(t) = phi0 + omega * t

where ``C`` is the inter-qubit coupling and ``h`` the field term on qubit 1.
The azimuth enters ``h`` with the sense that makes

    (g + cos(theta) + E)|uu> + sin(theta) exp(-i phi)|du>

an eigenvector, i.e. <u|h|d> = sin(theta) exp(+i phi).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .linalg import I2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, tensor

DEFAULT_N_STEPS = 4096


class CouplingKind(enum.Enum):
    ISING_Z = "ising_z"
    FLIP_FLOP = "flip_flop"
    NONE = "none"

    @classmethod
    def parse(cls, value: "str | CouplingKind") -> "CouplingKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidParameter(f"unknown coupling {value!r} (expected one of {choices})") from None


@dataclass(frozen=True)
class ModelSpec:
    coupling: CouplingKind
    g: float
    theta: float
    omega: float
    phi0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coupling", CouplingKind.parse(self.coupling))
        for name in ("g", "theta", "omega", "phi0"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise InvalidParameter(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if not 0.0 <= self.theta <= math.pi:
            raise InvalidParameter(f"theta must lie in [0, pi], got {self.theta}")
        if self.omega < 0:
            raise InvalidParameter(f"omega must be >= 0, got {self.omega}")

    def phi(self, t):
        return self.phi0 + self.omega * np.asarray(t, dtype=float)

    def coupling_matrix(self) -> np.ndarray:
        return coupling_matrix(self.coupling)


@dataclass(frozen=True)
class LoopSpec:
    """One traversal of the precession loop, sampled with ``n_steps`` steps.

    ``period`` defaults to 2*pi/omega.  A static model (omega = 0) needs an
    explicit duration.
    """

    model: ModelSpec
    n_steps: int = DEFAULT_N_STEPS
    period: float | None = None

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 16:
            raise InvalidParameter(f"n_steps must be an integer >= 16, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if self.period is None:
            if self.model.omega == 0:
                raise InvalidParameter("omega = 0 has no period; pass period= explicitly")
            object.__setattr__(self, "period", 2 * math.pi / self.model.omega)
        if not (math.isfinite(self.period) and self.period > 0):
            raise InvalidParameter(f"period must be positive, got {self.period}")

    @property
    def dt(self) -> float:
        return self.period / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.period, self.n_steps + 1)

    def with_steps(self, n_steps: int) -> "LoopSpec":
        return LoopSpec(self.model, n_steps, self.period)


def coupling_matrix(kind: CouplingKind) -> np.ndarray:
    kind = CouplingKind.parse(kind)
    if kind is CouplingKind.ISING_Z:
        return tensor(SIGMA_Z, SIGMA_Z)
    if kind is CouplingKind.FLIP_FLOP:
        c = tensor(SIGMA_PLUS, SIGMA_MINUS)
        return c + c.conj().T
    return np.zeros((4, 4), dtype=complex)


def field_matrix(theta: float, phi) -> np.ndarray:
    """Single-qubit field term h(theta, phi); batched over an array of ``phi``."""
    phi = np.asarray(phi, dtype=float)
    s, c = math.sin(theta), math.cos(theta)
    h = np.empty(phi.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = c
    h[..., 1, 1] = -c
    h[..., 0, 1] = s * np.exp(1j * phi)
    h[..., 1, 0] = s * np.exp(-1j * phi)
    return h


def field_matrix_dphi(theta: float, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    s = math.sin(theta)
    d = np.zeros(phi.shape + (2, 2), dtype=complex)
    d[..., 0, 1] = 1j * s * np.exp(1j * phi)
    d[..., 1, 0] = -1j * s * np.exp(-1j * phi)
    return d


def _lift_qubit1(h: np.ndarray) -> np.ndarray:
    # h (x) I for a batch of 2x2 matrices
    out = np.zeros(h.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0::2, 0::2] = h
    out[..., 1::2, 1::2] = h
    return out


def hamiltonian_at(spec: ModelSpec, t) -> np.ndarray:
    """Dimensionless H(t); ``t`` may be a scalar or an array (batched result)."""
    h = field_matrix(spec.theta, spec.phi(t))
    return spec.g * spec.coupling_matrix() + _lift_qubit1(h)


def hamiltonian_derivative_at(spec: ModelSpec, t) -> np.ndarray:
    """Exact dH/dt = omega * d(h)/d(phi) (x) I."""
    d = field_matrix_dphi(spec.theta, spec.phi(t))
    return spec.omega * _lift_qubit1(d)


def spectral_radius_bound(spec: ModelSpec) -> float:
    """Upper bound on |H(t)|_2 valid for every t."""
    c = np.linalg.norm(spec.coupling_matrix(), 2) if spec.coupling is not CouplingKind.NONE else 0.0
    return abs(spec.g) * c + 1.0
