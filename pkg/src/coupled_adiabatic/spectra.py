"""Instantaneous eigensystems along the loop and the adiabaticity metric Gamma_ij.

Labels are 1-based in the public API (``gamma_metric(spec, t, 1, 2)``) and
0-based as column indices of ``frame.eigen.vectors``.

IsingZ / uncoupled labels follow the closed form:

    E1,2 = +/- sqrt(g^2 + 1 + 2 g cos(theta))     (qubit 2 up)
    E3,4 = +/- sqrt(g^2 + 1 - 2 g cos(theta))     (qubit 2 down)

FlipFlop labels are assigned by descending energy on the first frame and
carried along by overlap continuity.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGap, DegenerateLabeling, UnsupportedModel
from .linalg import EigenPairSet, align_phase, default_deg_tol, degeneracy_groups, phase_fix
from .model import CouplingKind, ModelSpec, _lift_qubit1, coupling_matrix, hamiltonian_at, hamiltonian_derivative_at

AMBIGUOUS_OVERLAP = 0.6
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class GaugeFixedFrame:
    """Labelled, phase-fixed eigensystem of H(t).

    ``ordering[l]`` is the eigensolver column that label ``l`` (0-based) came
    from.  ``ambiguous`` marks frames whose labelling could not be decided by
    overlap.
    """

    t: float
    eigen: EigenPairSet
    ordering: tuple[int, ...]
    deg_tol: float
    ambiguous: bool = False
    spec: ModelSpec | None = None

    @property
    def values(self) -> np.ndarray:
        return self.eigen.values

    @property
    def vectors(self) -> np.ndarray:
        return self.eigen.vectors

    def vector(self, label: int) -> np.ndarray:
        """Eigenvector for a 1-based label."""
        return self.eigen.vectors[:, label - 1]

    def rephased(self, phases) -> "GaugeFixedFrame":
        """Same frame with column ``l`` multiplied by ``exp(1j * phases[l])``."""
        vecs = self.eigen.vectors * np.exp(1j * np.asarray(phases, dtype=float))[None, :]
        eig = EigenPairSet(self.eigen.values, vecs, self.eigen.degeneracy_groups)
        return GaugeFixedFrame(self.t, eig, self.ordering, self.deg_tol, self.ambiguous, self.spec)

    def coupled_degenerate(self, label: int) -> bool:
        """True when ``label`` (1-based) is degenerate with a level dH/dt couples it to.

        Without a model attached any degeneracy counts.
        """
        k = label - 1
        if not self.eigen.degenerate(k):
            return False
        if self.spec is None:
            return True
        num, negligible, gaps = _coupling_elements(self.spec, self)
        partners = (np.abs(gaps[k]) <= self.deg_tol) & ~negligible[k]
        partners[k] = False
        return bool(np.any(partners))


# -- closed form --------------------------------------------------------------


def analytic_energies(g: float, theta: float) -> np.ndarray:
    c = math.cos(theta)
    e12 = math.sqrt(max(g * g + 1 + 2 * g * c, 0.0))
    e34 = math.sqrt(max(g * g + 1 - 2 * g * c, 0.0))
    return np.array([e12, -e12, e34, -e34])


def _qubit1_eigvec(u: float, s: float, energy: float, phi: float, upper: bool) -> tuple[np.ndarray, float]:
    """Eigenvector of [[u, s e^{i phi}], [s e^{-i phi}, -u]] for ``energy``.

    Returns the unnormalised closed-form vector (u + E, s e^{-i phi}) and its
    squared norm M.  Where that form vanishes the equivalent vector built
    from the other matrix row is used instead.
    """
    a = np.array([u + energy, s * np.exp(-1j * phi)])
    m = float(np.vdot(a, a).real)
    b = np.array([s, (energy - u) * np.exp(-1j * phi)], dtype=complex)
    mb = float(np.vdot(b, b).real)
    if m >= mb and m > _ZERO_TOL:
        return a, m
    if mb > _ZERO_TOL:
        return b, mb
    # Fully degenerate 2x2 block (zero matrix): any basis works.
    return (np.array([1, 0], dtype=complex) if upper else np.array([0, 1], dtype=complex)), 1.0


def normalization_constants(g: float, theta: float) -> np.ndarray:
    """M_j = sin^2(theta) + (g + cos(theta) + E_j)^2, resp. (cos(theta) + E_j - g)^2."""
    s, c = math.sin(theta), math.cos(theta)
    e = analytic_energies(g, theta)
    return np.array([s * s + (g + c + e[0]) ** 2, s * s + (g + c + e[1]) ** 2,
                     s * s + (c + e[2] - g) ** 2, s * s + (c + e[3] - g) ** 2])


def analytic_eigensystem(spec: ModelSpec, t: float = 0.0) -> EigenPairSet:
    """Closed-form eigenpairs in label order 1..4 (IsingZ or uncoupled only)."""
    if spec.coupling is CouplingKind.FLIP_FLOP:
        raise UnsupportedModel("no closed-form eigensystem for flip-flop coupling")
    g = spec.g if spec.coupling is CouplingKind.ISING_Z else 0.0
    s, c = math.sin(spec.theta), math.cos(spec.theta)
    phi = float(spec.phi(t))
    energies = analytic_energies(g, spec.theta)
    vecs = np.zeros((4, 4), dtype=complex)
    # qubit 2 up occupies rows 0 (|uu>) and 2 (|du>); down occupies rows 1 and 3
    for label, (u, rows) in enumerate([(g + c, (0, 2)), (g + c, (0, 2)), (c - g, (1, 3)), (c - g, (1, 3))]):
        v, m = _qubit1_eigvec(u, s, energies[label], phi, upper=label % 2 == 0)
        vecs[list(rows), label] = v / math.sqrt(m)
    return EigenPairSet(energies, vecs, degeneracy_groups(energies, default_deg_tol(energies)))


def gamma_closed_form(g: float, theta: float, omega: float, i: int, j: int) -> float:
    """(1/sqrt(M_i M_j)) |omega sin^2(theta) / (E_i - E_j)| for pairs (1,2), (3,4); 0 otherwise.

    Uses the raw normalisation constants, so it is undefined (nan) where one
    of them vanishes.
    """
    if {i, j} not in ({1, 2}, {3, 4}):
        return 0.0
    m = normalization_constants(g, theta)
    e = analytic_energies(g, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(abs(omega * math.sin(theta) ** 2 / (e[i - 1] - e[j - 1])) / math.sqrt(m[i - 1] * m[j - 1]))


# -- numeric frames -----------------------------------------------------------


def _assign_to_reference(vals, vecs, ref, tol):
    """Map solver eigenvectors onto reference columns, rotating inside degenerate groups."""
    groups = degeneracy_groups(vals, tol)
    n = len(vals)
    weights = []
    for gi, grp in enumerate(groups):
        q = vecs[:, grp]
        w = np.sum(np.abs(q.conj().T @ ref) ** 2, axis=0)
        weights.extend((float(w[lab]), gi, lab) for lab in range(n))
    weights.sort(key=lambda x: (-x[0], x[1], x[2]))
    capacity = [len(grp) for grp in groups]
    chosen: list[list[int]] = [[] for _ in groups]
    taken = set()
    worst = 1.0
    for w, gi, lab in weights:
        if lab in taken or capacity[gi] == 0:
            continue
        chosen[gi].append(lab)
        capacity[gi] -= 1
        taken.add(lab)
        worst = min(worst, w)
    out_vecs = np.empty_like(vecs)
    out_vals = np.empty_like(vals)
    ordering = [0] * n
    for grp, labs in zip(groups, chosen):
        labs.sort()
        q = vecs[:, grp]
        x = q.conj().T @ ref[:, labs]
        u, _, vh = np.linalg.svd(x)
        rotated = q @ (u @ vh)
        for col, lab in enumerate(labs):
            out_vecs[:, lab] = rotated[:, col]
            out_vals[lab] = vals[grp[col]]
            ordering[lab] = grp[int(np.argmax(np.abs(q.conj().T @ rotated[:, col])))]
    return out_vals, out_vecs, tuple(ordering), math.sqrt(worst) < AMBIGUOUS_OVERLAP


def numeric_eigensystem(spec: ModelSpec, t: float, prev: GaugeFixedFrame | None = None,
                        deg_tol: float | None = None, _eigh=None) -> GaugeFixedFrame:
    """Diagonalise H(t) and relabel/re-gauge the result.

    IsingZ and uncoupled models are labelled by overlap with the closed form;
    flip-flop frames are labelled by continuity with ``prev`` (or by
    descending energy when there is none).  The gauge is continuity with
    ``prev`` when given, otherwise the largest component is made real positive.

    Raises:
        DegenerateLabeling: overlap labelling is ambiguous and no ``prev`` exists.
    """
    block = spec.coupling is not CouplingKind.FLIP_FLOP
    if _eigh is None and block:
        # solve each qubit-2 sector separately so near-degenerate levels of
        # different sectors cannot mix
        svals, svecs, gap = _sector_eigh(hamiltonian_at(spec, t)[None])
        tol = default_deg_tol(svals[0]) if deg_tol is None else deg_tol
        if gap[0] > tol:
            out_vals, out_vecs = svals[0], svecs[0]
            rank = np.argsort(np.argsort(out_vals, kind="stable"), kind="stable")
            return _gauge_frame(spec, t, out_vals, out_vecs, tuple(int(x) for x in rank), tol, False, prev)
    if _eigh is None:
        vals, vecs = np.linalg.eigh(hamiltonian_at(spec, t))
    else:
        vals, vecs = _eigh
    tol = default_deg_tol(vals) if deg_tol is None else deg_tol
    ref = analytic_eigensystem(spec, t).vectors if block else (prev.vectors if prev is not None else None)
    if ref is None:
        order = np.argsort(-vals, kind="stable")
        out_vals, out_vecs, ordering, ambiguous = vals[order], vecs[:, order], tuple(int(k) for k in order), False
    else:
        out_vals, out_vecs, ordering, ambiguous = _assign_to_reference(vals, vecs, ref, tol)
        if ambiguous and prev is None:
            raise DegenerateLabeling(f"overlap labelling ambiguous at t={t}")
    return _gauge_frame(spec, t, out_vals, out_vecs, ordering, tol, ambiguous, prev)


def _gauge_frame(spec, t, vals, vecs, ordering, tol, ambiguous, prev) -> GaugeFixedFrame:
    for lab in range(vecs.shape[1]):
        v = vecs[:, lab]
        vecs[:, lab] = align_phase(v, prev.vectors[:, lab]) if prev is not None else phase_fix(v)
    eig = EigenPairSet(vals, vecs, degeneracy_groups(vals, tol))
    return GaugeFixedFrame(float(t), eig, ordering, tol, ambiguous, spec)


def _frames_batched(spec, times, vals, vecs, deg_tol):
    """Vectorised ``frames_along`` for chains without degeneracies or ambiguous overlaps.

    Returns None when the per-frame path is needed.
    """
    n = len(times)
    if deg_tol is None:
        tols = _default_tols(vals)
    else:
        tols = np.full(n, float(deg_tol))
    if np.any(np.min(np.diff(vals, axis=1), axis=1) <= tols):
        return None
    rows = np.arange(n)[:, None]
    if spec.coupling is CouplingKind.FLIP_FLOP:
        perm = np.empty((n, 4), dtype=int)
        perm[0] = np.argsort(-vals[0], kind="stable")
        if n > 1:
            ov = np.abs(np.einsum("kai,kaj->kij", vecs[:-1].conj(), vecs[1:])) ** 2
            step = np.argmax(ov, axis=2)  # solver col at k-1 -> col at k
            if np.any(np.max(ov, axis=2) < AMBIGUOUS_OVERLAP ** 2):
                return None
            if np.any(np.sort(step, axis=1) != np.arange(4)):
                return None
            for k in range(1, n):
                perm[k] = step[k - 1][perm[k - 1]]
    else:
        ref0 = analytic_eigensystem(spec, 0.0).vectors
        ph = np.exp(-1j * spec.omega * times)
        ref = np.broadcast_to(ref0, (n, 4, 4)).copy()
        ref[:, 2:, :] *= ph[:, None, None]
        ov = np.abs(np.einsum("kai,kal->kil", ref.conj(), vecs)) ** 2  # [k, label, solver col]
        perm = np.argmax(ov, axis=2)
        if np.any(np.max(ov, axis=2) < AMBIGUOUS_OVERLAP ** 2):
            return None
        if np.any(np.sort(perm, axis=1) != np.arange(4)):
            return None
    w = vecs[rows, :, perm].transpose(0, 2, 1)  # columns in label order
    e = vals[rows, perm]
    first = np.stack([phase_fix(w[0][:, lab]) for lab in range(4)], axis=1)
    w[0] = first
    if n > 1:
        ov = np.einsum("kal,kal->kl", w[:-1].conj(), w[1:])
        alpha = -np.cumsum(np.angle(ov), axis=0)
        w[1:] *= np.exp(1j * alpha)[:, None, :]
    singletons = tuple((i,) for i in range(4))
    return [GaugeFixedFrame(float(times[k]), EigenPairSet(e[k], w[k], singletons),
                            tuple(int(x) for x in perm[k]), float(tols[k]), spec=spec)
            for k in range(n)]


_SECTORS = ((0, 2), (1, 3))  # qubit 2 up, qubit 2 down


def _default_tols(vals: np.ndarray) -> np.ndarray:
    spread = np.ptp(vals, axis=-1)
    radius = np.max(np.abs(vals), axis=-1)
    return 1e-8 * np.where(spread > 0, spread, np.where(radius > 0, radius, 1.0))


def _sector_eigh(h: np.ndarray):
    """Label-ordered eigenpairs of block-diagonal (IsingZ / uncoupled) Hamiltonians.

    Each qubit-2 sector is a 2x2 problem; labels 1, 2 are the upper and
    lower level of the up sector, 3, 4 of the down sector.  Returns the
    values, vectors and the smallest in-sector gap per matrix.
    """
    n = h.shape[0]
    vals = np.empty((n, 4))
    vecs = np.zeros((n, 4, 4), dtype=complex)
    gap = np.full(n, np.inf)
    for sec, rows in enumerate(_SECTORS):
        block = h[:, rows][:, :, rows]
        w, v = np.linalg.eigh(block)
        for lab, col in ((2 * sec, 1), (2 * sec + 1, 0)):
            vals[:, lab] = w[:, col]
            vecs[:, rows[0], lab] = v[:, 0, col]
            vecs[:, rows[1], lab] = v[:, 1, col]
        gap = np.minimum(gap, w[:, 1] - w[:, 0])
    return vals, vecs, gap


def _frames_sectors(spec, times, deg_tol):
    """Vectorised frames for block-diagonal models; None if a sector is degenerate."""
    n = len(times)
    vals, vecs, gap = _sector_eigh(hamiltonian_at(spec, times))
    tols = _default_tols(vals) if deg_tol is None else np.full(n, float(deg_tol))
    if np.any(gap <= tols):
        return None
    vecs[0] = np.stack([phase_fix(vecs[0][:, lab]) for lab in range(4)], axis=1)
    if n > 1:
        ov = np.einsum("kal,kal->kl", vecs[:-1].conj(), vecs[1:])
        vecs[1:] *= np.exp(-1j * np.cumsum(np.angle(ov), axis=0))[:, None, :]
    order = np.argsort(np.argsort(vals, axis=1, kind="stable"), axis=1, kind="stable")
    distinct = np.min(np.diff(np.sort(vals, axis=1), axis=1), axis=1) > tols
    singletons = tuple((i,) for i in range(4))
    return [GaugeFixedFrame(float(times[k]),
                            EigenPairSet(vals[k], vecs[k],
                                         singletons if distinct[k] else degeneracy_groups(vals[k], tols[k])),
                            tuple(int(x) for x in order[k]), float(tols[k]), spec=spec)
            for k in range(n)]


def frames_along(spec: ModelSpec, times, deg_tol: float | None = None) -> list[GaugeFixedFrame]:
    """Continuity-chained frames at every time in ``times``.

    Equivalent to calling :func:`numeric_eigensystem` with ``prev`` set to
    the previous frame; non-degenerate chains take a vectorised path.
    """
    times = np.asarray(times, dtype=float)
    if spec.coupling is not CouplingKind.FLIP_FLOP:
        fast = _frames_sectors(spec, times, deg_tol)
        if fast is not None:
            return fast
    vals, vecs = np.linalg.eigh(hamiltonian_at(spec, times))
    fast = _frames_batched(spec, times, vals, vecs, deg_tol)
    if fast is not None:
        return fast
    frames: list[GaugeFixedFrame] = []
    prev = None
    for k, t in enumerate(times):
        prev = numeric_eigensystem(spec, float(t), prev, deg_tol, _eigh=(vals[k], vecs[k]))
        frames.append(prev)
    return frames


@dataclass(frozen=True)
class EigenGrid:
    """Labelled eigenpairs at t on a (theta, g) grid; arrays indexed [theta, g, ...]."""

    theta: np.ndarray
    g: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    degenerate: np.ndarray


def _phase_fix_columns(vecs: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    # batched phase_fix over the columns of (..., 4, L) arrays
    mags = np.abs(vecs)
    top = np.max(mags, axis=-2, keepdims=True)
    k = np.argmax(mags >= top * (1 - rtol), axis=-2)[..., None, :]
    pick = np.take_along_axis(vecs, k, axis=-2)
    return vecs * (np.conj(pick) / np.abs(pick))


def eigensystem_grid(coupling, theta_grid, g_grid, t: float = 0.0, omega: float = 1.0,
                     phi0: float = 0.0) -> EigenGrid:
    """``numeric_eigensystem`` over a parameter grid with batched solver calls.

    Block-diagonal models are solved per qubit-2 sector in one call; cells
    with an in-sector degeneracy, and every flip-flop cell, go through the
    per-cell path.
    """
    coupling = CouplingKind.parse(coupling)
    theta_grid = np.asarray(theta_grid, dtype=float)
    g_grid = np.asarray(g_grid, dtype=float)
    shape = (len(theta_grid), len(g_grid))
    th = np.repeat(theta_grid, len(g_grid))
    gs = np.tile(g_grid, len(theta_grid))
    rot = np.exp(1j * (phi0 + omega * t))
    field = np.zeros((len(th), 2, 2), dtype=complex)
    field[:, 0, 0] = np.cos(th)
    field[:, 1, 1] = -np.cos(th)
    field[:, 0, 1] = np.sin(th) * rot
    field[:, 1, 0] = np.sin(th) * np.conj(rot)
    h = gs[:, None, None] * coupling_matrix(coupling) + _lift_qubit1(field)
    if coupling is CouplingKind.FLIP_FLOP:
        vals, vecs = np.linalg.eigh(h)
        slow = np.arange(len(th))
    else:
        vals, vecs, gap = _sector_eigh(h)
        vecs = _phase_fix_columns(vecs)
        slow = np.flatnonzero(gap <= _default_tols(vals))
    tols = _default_tols(vals)
    degenerate = np.min(np.diff(np.sort(vals, axis=1), axis=1), axis=1) <= tols
    for k in slow:
        f = numeric_eigensystem(ModelSpec(coupling, float(gs[k]), float(th[k]), omega, phi0), t)
        vals[k], vecs[k] = f.values, f.vectors
    return EigenGrid(theta_grid, g_grid, vals.reshape(shape + (4,)), vecs.reshape(shape + (4, 4)),
                     degenerate.reshape(shape))


# -- adiabaticity metric ------------------------------------------------------


def _coupling_elements(spec: ModelSpec, frame: GaugeFixedFrame):
    hdot = hamiltonian_derivative_at(spec, frame.t)
    v = frame.vectors
    num = v.conj().T @ hdot @ v
    scale = float(np.max(np.abs(hdot), initial=0.0))
    negligible = np.abs(num) <= _ZERO_TOL * scale
    gaps = frame.values[None, :] - frame.values[:, None]  # gaps[i, j] = E_j - E_i
    return num, negligible, gaps


def derivative_couplings(spec: ModelSpec, frame: GaugeFixedFrame) -> np.ndarray:
    """Off-diagonal <phi_i|d phi_j/dt> = <phi_i|dH/dt|phi_j> / (E_j - E_i); diagonal left 0.

    Pairs with no matrix element give 0 even when degenerate.

    Raises:
        DegenerateGap: a coupled pair is degenerate.
    """
    num, negligible, gaps = _coupling_elements(spec, frame)
    out = np.zeros_like(num)
    n = num.shape[0]
    for i in range(n):
        for j in range(n):
            if i == j or negligible[i, j]:
                continue
            if abs(gaps[i, j]) <= frame.deg_tol:
                raise DegenerateGap(f"labels {i + 1},{j + 1} are degenerate at t={frame.t}")
            out[i, j] = num[i, j] / gaps[i, j]
    return out


def gamma_matrix(spec: ModelSpec, t: float = 0.0, frame: GaugeFixedFrame | None = None) -> np.ndarray:
    """All Gamma_ij = |<phi_i|dH/dt|phi_j>| / (E_i - E_j)^2 at once; ``inf`` marks singular pairs."""
    if frame is None:
        frame = numeric_eigensystem(spec, t)
    num, negligible, gaps = _coupling_elements(spec, frame)
    out = np.zeros(num.shape)
    singular = (np.abs(gaps) <= frame.deg_tol) & ~negligible
    ok = ~negligible & ~singular
    out[ok] = np.abs(num[ok]) / gaps[ok] ** 2
    out[singular] = np.inf
    np.fill_diagonal(out, 0.0)
    return np.triu(out) + np.triu(out, 1).T  # exactly symmetric


def gamma_metric(spec: ModelSpec, t: float, i: int, j: int, frame: GaugeFixedFrame | None = None) -> float:
    """Adiabaticity metric Gamma_ij for 1-based labels ``i != j``.

    Raises:
        DegenerateGap: the pair is coupled and |E_i - E_j| <= deg_tol.
    """
    if i == j:
        raise ValueError("gamma_metric needs two distinct labels")
    val = gamma_matrix(spec, t, frame)[i - 1, j - 1]
    if math.isinf(val):
        raise DegenerateGap(f"|E_{i} - E_{j}| is below the degeneracy tolerance")
    return float(val)


@dataclass(frozen=True)
class GammaSurface:
    """Gamma_12 and Gamma_34 on a (theta, g) grid; arrays are indexed [theta, g]."""

    coupling: CouplingKind
    omega: float
    theta: np.ndarray
    g: np.ndarray
    gamma12: np.ndarray
    gamma34: np.ndarray
    singular12: np.ndarray
    singular34: np.ndarray


def _surface_row(coupling, omega, theta, g_grid, deg_tol):
    specs = [ModelSpec(coupling, float(g), float(theta), omega) for g in g_grid]
    h = np.stack([hamiltonian_at(sp, 0.0) for sp in specs])
    if coupling is CouplingKind.FLIP_FLOP:
        vals, vecs = np.linalg.eigh(h)
        vals, vecs = vals[:, ::-1], vecs[:, :, ::-1]  # descending energy labels
    else:
        vals, vecs, _ = _sector_eigh(h)
    tols = _default_tols(vals) if deg_tol is None else np.full(len(g_grid), float(deg_tol))
    hdot = hamiltonian_derivative_at(specs[0], 0.0)
    num = np.abs(np.einsum("kai,ab,kbj->kij", vecs.conj(), hdot, vecs))
    negligible = num <= _ZERO_TOL * float(np.max(np.abs(hdot), initial=0.0))
    out = []
    for i, j in ((0, 1), (2, 3)):
        gap = vals[:, i] - vals[:, j]
        # flagged on the gap alone: Gamma diverges on approach even where dH/dt vanishes
        singular = np.abs(gap) <= tols
        with np.errstate(divide="ignore", invalid="ignore"):
            gam = np.where(negligible[:, i, j], 0.0, num[:, i, j] / gap ** 2)
        out.append((np.where(singular, np.inf, gam), singular))
    (g12, s12), (g34, s34) = out
    return g12, g34, s12, s34


def gamma_surface(coupling, omega: float, theta_grid, g_grid, jobs: int | None = 1,
                  deg_tol: float | None = None) -> GammaSurface:
    """Evaluate Gamma_12 and Gamma_34 at t = 0 over the grid, one theta row per task.

    A cell is singular when the pair's gap is within the degeneracy
    tolerance; its value is then ``inf``.
    """
    coupling = CouplingKind.parse(coupling)
    theta_grid = np.asarray(theta_grid, dtype=float)
    g_grid = np.asarray(g_grid, dtype=float)
    if theta_grid.size == 0 or g_grid.size == 0:
        raise ValueError("grids must be non-empty")
    for name, grid in (("theta", theta_grid), ("g", g_grid)):
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"{name} grid must be strictly monotone")

    def row(theta):
        return _surface_row(coupling, omega, theta, g_grid, deg_tol)

    if jobs is not None and jobs <= 1:
        rows = [row(th) for th in theta_grid]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row, theta_grid))
    g12, g34, s12, s34 = (np.array(x) for x in zip(*rows))
    return GammaSurface(coupling, float(omega), theta_grid, g_grid, g12, g34, s12, s34)
