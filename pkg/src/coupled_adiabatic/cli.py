"""Command-line front end.

    coupled-adiabatic spectrum     --config run.cfg --out spectrum.csv
    coupled-adiabatic sweep-gamma  --config sweep.cfg --jobs 4
    coupled-adiabatic evolve       --config run.cfg --out run.csv
    coupled-adiabatic classify     --config run.cfg
    coupled-adiabatic phases       --config run.cfg

Config files are flat ``key = value`` lines with ``#`` comments.  Numeric
values accept ``pi`` and simple arithmetic (``theta = pi/3``).  ``--set
key=value`` overrides single keys.  Exit codes: 0 success, 2 configuration
error, 3 numerical guard tripped.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import logging
import math
import operator
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import evolve_mixed, evolve_pure, project_amplitudes, recommended_n_steps
from .errors import CoupledAdiabaticError, DegenerateGap, InvalidParameter, NonPhysical, StepTooLarge
from .linalg import validate_density, validate_state
from .model import CouplingKind, LoopSpec, ModelSpec
from .phases import phase_report
from .regimes import RegimeThresholds, evaluate_mixed, evaluate_pure
from .schmidt import nontransitional_ratios, reduced_density_eigen, schmidt_series
from .spectra import frames_along, gamma_surface

log = logging.getLogger("coupled_adiabatic")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "inf": math.inf}


def parse_number(text: str) -> float:
    """A float literal or arithmetic over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError, OverflowError):
        raise ValueError(f"not a number: {text!r}") from None


@dataclass
class RunConfig:
    coupling: str = "ising_z"
    g: float = 1.0
    theta: float = math.pi / 3
    omega: float = 10.0
    phi0: float = 0.0
    period: float | None = None
    n_steps: int | None = None
    seed_state: str = "phi1"
    adiabatic_eps: float = 0.1
    nontrans_eps: float = 0.1
    p_drift_eps: float = 1e-3
    output_path: str | None = None
    theta_min: float = 0.0
    theta_max: float = math.pi
    theta_count: int = 101
    g_min: float = 0.0
    g_max: float = 3.0
    g_count: int = 101
    jobs: int | None = None
    explicit: set = field(default_factory=set, repr=False)

    def set(self, key: str, value: str, where: str) -> None:
        names = {f.name for f in fields(self) if f.name != "explicit"}
        if key not in names:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            if key in ("coupling", "seed_state", "output_path"):
                val = value.strip()
                if key == "coupling":
                    CouplingKind.parse(val)
            elif key in ("n_steps", "theta_count", "g_count", "jobs"):
                num = parse_number(value)
                if num != int(num):
                    raise ValueError(f"{key} must be an integer")
                val = int(num)
            else:
                val = parse_number(value)
        except (ValueError, InvalidParameter) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
        setattr(self, key, val)
        self.explicit.add(key)

    @property
    def thresholds(self) -> RegimeThresholds:
        return RegimeThresholds(self.adiabatic_eps, self.nontrans_eps, self.p_drift_eps)

    def model(self) -> ModelSpec:
        return ModelSpec(self.coupling, self.g, self.theta, self.omega, self.phi0)

    def loop(self) -> LoopSpec:
        spec = self.model()
        n = self.n_steps if self.n_steps is not None else recommended_n_steps(spec, self.period)
        return LoopSpec(spec, n, self.period)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        cfg.set(key, value, f"{source}:{lineno}")
    return cfg


def load_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read(), args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    else:
        cfg = RunConfig()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value, "--set")
    if args.n_steps is not None:
        cfg.set("n_steps", str(args.n_steps), "--n-steps")
    if args.out is not None:
        cfg.output_path = args.out
    if args.jobs is not None:
        cfg.set("jobs", str(args.jobs), "--jobs")
    return cfg


# -- seeds ---------------------------------------------------------------------


def _reals(text: str, count: int) -> np.ndarray:
    parts = text.replace(",", " ").split()
    if len(parts) != count:
        raise ConfigError(f"seed_state needs {count} numbers, got {len(parts)}")
    try:
        return np.array([parse_number(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"seed_state: {exc}") from None


def hermitian_from_reals(x: np.ndarray) -> np.ndarray:
    """Upper triangle, row-major: diagonal entries are one real each, off-diagonal ones re, im."""
    rho = np.zeros((4, 4), dtype=complex)
    k = 0
    for i in range(4):
        rho[i, i] = x[k]
        k += 1
        for j in range(i + 1, 4):
            rho[i, j] = x[k] + 1j * x[k + 1]
            rho[j, i] = np.conj(rho[i, j])
            k += 2
    return rho


@dataclass(frozen=True)
class Seed:
    label: int | None = None
    psi: np.ndarray | None = None
    rho: np.ndarray | None = None

    @property
    def is_pure(self) -> bool:
        return self.rho is None


def parse_seed(text: str, spec: ModelSpec) -> Seed:
    """``phi1``..``phi4``, ``ground``, 8 reals (re, im per amplitude) or ``mixed:`` + 16 reals."""
    t = text.strip()
    frame = frames_along(spec, [0.0])[0]
    low = t.lower()
    if low == "ground":
        lab = int(np.argmin(frame.values)) + 1
        return Seed(lab, frame.vector(lab))
    if low in ("phi1", "phi2", "phi3", "phi4"):
        lab = int(low[3])
        return Seed(lab, frame.vector(lab))
    try:
        if low.startswith("mixed:"):
            return Seed(rho=validate_density(hermitian_from_reals(_reals(t[6:], 16))))
        x = _reals(t, 8)
        psi = validate_state(x[0::2] + 1j * x[1::2])
    except (NonPhysical, ValueError) as exc:
        raise ConfigError(f"seed_state: {exc}") from None
    return Seed(psi=psi)


# -- output --------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(header, rows, path: str | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


class Reporter:
    """Human-readable lines: stdout when CSV goes to a file, else stderr; silent with --quiet."""

    def __init__(self, quiet: bool, csv_to_stdout: bool):
        self.quiet = quiet
        self.stream = sys.stderr if csv_to_stdout else sys.stdout

    def __call__(self, line: str) -> None:
        if not self.quiet:
            print(line, file=self.stream)


# -- commands ------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, report: Reporter) -> int:
    loop = cfg.loop()
    frames = frames_along(loop.model, loop.times())
    rows = []
    for f in frames:
        e = f.values
        rows.append([f.t, *e, abs(e[0] - e[1]), abs(e[2] - e[3])])
    write_csv(["t", "E1", "E2", "E3", "E4", "gap12", "gap34"], rows, cfg.output_path)
    report(f"spectrum: {len(rows)} samples")
    return 0


def cmd_sweep_gamma(cfg: RunConfig, report: Reporter) -> int:
    if cfg.theta_count < 2 or cfg.g_count < 2:
        raise ConfigError("theta_count and g_count must be >= 2")
    if not cfg.theta_min < cfg.theta_max or not cfg.g_min < cfg.g_max:
        raise ConfigError("ranges need min < max")
    if cfg.theta_min < 0 or cfg.theta_max > math.pi:
        raise ConfigError("theta range must lie within [0, pi]")
    if not math.isfinite(cfg.omega) or cfg.omega < 0:
        raise ConfigError("omega must be finite and >= 0")
    thetas = np.linspace(cfg.theta_min, cfg.theta_max, cfg.theta_count)
    gs = np.linspace(cfg.g_min, cfg.g_max, cfg.g_count)
    jobs = cfg.jobs if cfg.jobs is not None else (os.cpu_count() or 1)
    surf = gamma_surface(cfg.coupling, cfg.omega, thetas, gs, jobs=jobs)
    rows = []
    for i, th in enumerate(thetas):
        for j, g in enumerate(gs):
            rows.append([th, g, surf.gamma12[i, j], surf.gamma34[i, j],
                         bool(surf.singular12[i, j]), bool(surf.singular34[i, j])])
    write_csv(["theta", "g", "gamma12", "gamma34", "singular12", "singular34"], rows, cfg.output_path)
    report(f"sweep-gamma: {len(rows)} cells, {int(surf.singular12.sum())} singular12, "
           f"{int(surf.singular34.sum())} singular34")
    return 0


def _evaluate(cfg: RunConfig, loop: LoopSpec, seed: Seed):
    if seed.is_pure:
        return evaluate_pure(loop, seed.psi, cfg.thresholds)
    return evaluate_mixed(loop, seed.rho, cfg.thresholds)


def cmd_evolve(cfg: RunConfig, report: Reporter) -> int:
    loop = cfg.loop()
    seed = parse_seed(cfg.seed_state, loop.model)
    ev = _evaluate(cfg, loop, seed)
    frames = frames_along(loop.model, loop.times())
    vecs = np.array([f.vectors for f in frames])
    if seed.is_pure:
        traj = ev.trajectories[0]
        pops = project_amplitudes(traj, frames).populations()
        series = schmidt_series(traj)
        p = series.p
        ratio = nontransitional_ratios(series)
    else:
        traj = ev.trajectories[0]
        rhos = traj.rho_states
        pops = np.real(np.einsum("kal,kab,kbl->kl", vecs.conj(), rhos, vecs))
        p = reduced_density_eigen(traj).values
        ratio = np.max([nontransitional_ratios(schmidt_series(tr)) for tr in ev.trajectories[1:]], axis=0)
    drift = traj.norm_drift()
    rows = [[t, *pops[k], p[k, 0], p[k, 1], ratio[k], drift[k]] for k, t in enumerate(traj.times)]
    write_csv(["t", "pop1", "pop2", "pop3", "pop4", "p1", "p2", "R12", "norm_drift"], rows, cfg.output_path)
    report(f"n_steps = {loop.n_steps}")
    if seed.is_pure:
        for line in phase_report(loop, seed.label, traj=traj, frames=frames).lines():
            report(line)
    report(ev.label.line())
    return 0


def cmd_classify(cfg: RunConfig, report: Reporter) -> int:
    loop = cfg.loop()
    ev = _evaluate(cfg, loop, parse_seed(cfg.seed_state, loop.model))
    line = ev.label.line()
    print(line)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
    return 0


def cmd_phases(cfg: RunConfig, report: Reporter) -> int:
    loop = cfg.loop()
    seed = parse_seed(cfg.seed_state, loop.model)
    if not seed.is_pure:
        raise ConfigError("phases needs a pure seed_state")
    traj = evolve_pure(loop, seed.psi)
    rep = phase_report(loop, seed.label, traj=traj)
    text = "\n".join([f"n_steps = {loop.n_steps}", *rep.lines()]) + "\n"
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        report(text.rstrip("\n"))
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep-gamma": cmd_sweep_gamma,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "phases": cmd_phases,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--n-steps", type=int, help="RK4 steps per loop (default: chosen from |H| and the period)")
    common.add_argument("--jobs", type=int, help="worker threads for sweeps (default: CPU count)")
    common.add_argument("--quiet", action="store_true", help="suppress report lines")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser = argparse.ArgumentParser(prog="coupled-adiabatic",
                                     description="Adiabaticity and subsystem criteria for a driven qubit pair.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        report = Reporter(args.quiet, csv_to_stdout=cfg.output_path is None)
        return COMMANDS[args.command](cfg, report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepTooLarge as exc:
        print(f"numerical guard: {exc} (suggested n_steps = {exc.suggested_n_steps})", file=sys.stderr)
        return EXIT_NUMERIC
    except DegenerateGap as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidParameter, NonPhysical) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoupledAdiabaticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
