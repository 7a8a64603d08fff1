"""Exact linearized quantum fluctuations of the coupled atom-cavity system.

Collective atomic operators are handled through single-atom matrix units
E_ab = |a><b| (levels 1, 2 ground; 3, 4 excited).  The linearized drift
of every operator is obtained from the single-atom Heisenberg generator
evaluated at the mean fields, and the Langevin diffusion from the
Einstein relation

    D_mn = sum_C r_C < [C^dagger, X_m] [X_n, C] >.

Scaled variables are used throughout: atomic fluctuations divided by
sqrt(N) and field fluctuations multiplied by sqrt(T)/2, so the vacuum
input has unit correlation and the output is 2 b - b_in.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import PhysicsError, SystemParams, derive_scales
from .records import ordered_map
from .spectrum import SpectrumResult, default_omega_grid, default_theta_grid, symmetrized_moments
from .steady import Stability, SteadyState, fixed_point_residual

Op = dict  # {(a, b): coefficient} for sum of coefficient * E_ab

LEVELS = (1, 2, 3, 4)
SEED_OPERATORS = [(1, 4), (4, 1), (2, 3), (3, 2), (1, 1), (2, 2), (3, 3), (4, 4)]
FIELD_LABELS = ["b_plus", "b_plus_dag", "b_minus", "b_minus_dag"]
# field operator driving each transition in the Hamiltonian, in field order
FIELD_TRANSITIONS = [(4, 1), (1, 4), (3, 2), (2, 3)]
ELIMINATED = (2, 2)
STATIONARITY_TOL = 1e-9
DIFFUSION_TOL = 1e-10


# ------------------------------------------------------- matrix-unit algebra

def unit(a: int, b: int, coef: complex = 1.0) -> Op:
    return {(a, b): complex(coef)}


def add(*ops: Op) -> Op:
    out: Op = {}
    for op in ops:
        for k, v in op.items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def scale(op: Op, c: complex) -> Op:
    return {k: v * c for k, v in op.items() if v * c != 0}


def mul(x: Op, y: Op) -> Op:
    out: Op = {}
    for (a, b), u in x.items():
        for (c, d), v in y.items():
            if b == c:
                out[(a, d)] = out.get((a, d), 0) + u * v
    return {k: v for k, v in out.items() if v != 0}


def comm(x: Op, y: Op) -> Op:
    return add(mul(x, y), scale(mul(y, x), -1))


def dag(x: Op) -> Op:
    return {(b, a): np.conj(v) for (a, b), v in x.items()}


@dataclass(frozen=True)
class AtomGenerator:
    """Single-atom Hamiltonian and decay channels at fixed mean fields."""

    hamiltonian: Op
    channels: tuple[tuple[Op, float], ...]

    def heisenberg(self, x: Op) -> Op:
        out = scale(comm(self.hamiltonian, x), 1j)
        for c, rate in self.channels:
            cd = dag(c)
            cdc = mul(cd, c)
            out = add(out, scale(add(mul(mul(cd, x), c),
                                     scale(add(mul(cdc, x), mul(x, cdc)), -0.5)), rate))
        return out


def atom_generator(params: SystemParams, a_plus: complex, a_minus: complex) -> AtomGenerator:
    h = add(unit(3, 3, params.delta), unit(4, 4, params.delta),
            unit(4, 1, a_plus), unit(1, 4, np.conj(a_plus)),
            unit(3, 2, a_minus), unit(2, 3, np.conj(a_minus)))
    channels = (
        (unit(1, 3), 2 * params.gamma_perp),
        (unit(2, 3), 2 * params.gamma_par),
        (unit(1, 4), 2 * params.gamma_par),
        (unit(2, 4), 2 * params.gamma_perp),
    )
    return AtomGenerator(h, channels)


def expect(x: Op, rho: np.ndarray) -> complex:
    """Single-atom mean <x> with <E_ab> = rho[b, a]."""
    return sum(v * rho[b - 1, a - 1] for (a, b), v in x.items())


# --------------------------------------------------------------- basis

@dataclass(frozen=True)
class FluctuationBasis:
    atomic: tuple[tuple[int, int], ...]
    dynamic: tuple[tuple[int, int], ...]
    fields: tuple[str, ...]

    @property
    def labels(self) -> list[str]:
        return [f"s{a}{b}" for a, b in self.dynamic] + list(self.fields)

    @property
    def n_atomic(self) -> int:
        return len(self.dynamic)

    def conjugate_index(self) -> list[int]:
        """Index of the conjugate partner of each dynamic variable."""
        pos = {op: i for i, op in enumerate(self.dynamic)}
        n = len(self.dynamic)
        out = [pos[(b, a)] for a, b in self.dynamic]
        out += [n + (i ^ 1) for i in range(len(self.fields))]
        return out


def _generic_generator(params: SystemParams) -> AtomGenerator:
    # irrational-looking amplitudes avoid accidental cancellations
    return atom_generator(params, 0.7310 + 0.4127j, -0.5233 + 0.8861j)


def close_basis(params: SystemParams, generator: AtomGenerator | None = None,
                seed=SEED_OPERATORS) -> FluctuationBasis:
    """Smallest operator set containing ``seed`` and closed under the linearized drift."""
    gen = generator or _generic_generator(params)
    known = list(seed)
    queue = list(seed)
    while queue:
        op = queue.pop(0)
        for key in gen.heisenberg(unit(*op)):
            if key not in known:
                known.append(key)
                queue.append(key)
        if len(known) > 16:
            raise PhysicsError("operator closure exceeded the 16 single-atom matrix units")
    ordered = _pair_conjugates(known)
    dynamic = tuple(op for op in ordered if op != ELIMINATED)
    return FluctuationBasis(tuple(ordered), dynamic, tuple(FIELD_LABELS))


def _pair_conjugates(ops):
    coherences, populations, seen = [], [], set()
    for a, b in ops:
        if a == b:
            populations.append((a, b))
        elif (a, b) not in seen:
            coherences += [(a, b), (b, a)]
            seen.update({(a, b), (b, a)})
    return coherences + sorted(populations)


# ------------------------------------------------------- drift and diffusion

@dataclass(frozen=True)
class DriftDiffusion:
    """Linear system dv/dt = drift v + input_coupling xi with <xi xi^T> = diffusion."""

    drift: np.ndarray
    diffusion: np.ndarray
    input_coupling: np.ndarray
    basis: FluctuationBasis
    rho: np.ndarray
    params: SystemParams
    theta_x: float = 0.0

    @property
    def n_atomic(self) -> int:
        return self.basis.n_atomic

    def output_rows(self, omega: np.ndarray) -> np.ndarray:
        """Transfer from noise sources to (A+out, A+out^dag, A-out, A-out^dag), shape (n_omega, 4, m)."""
        n = self.drift.shape[0]
        na = self.n_atomic
        eye = np.eye(n)
        lhs = -1j * np.asarray(omega)[:, None, None] * eye - self.drift
        resp = np.linalg.solve(lhs, np.broadcast_to(self.input_coupling, lhs.shape))
        rows = 2 * resp[:, na:, :]
        rows[:, :, na:] -= np.eye(4)
        return rows


def density_matrix(steady: SteadyState, params: SystemParams) -> np.ndarray:
    """Per-atom density matrix assembled from the closed-form atomic means."""
    m = steady.atomic_means
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2], rho[3, 3] = (p / params.n_atoms for p in m.populations)
    rho[3, 0] = m.sigma14 / params.n_atoms
    rho[0, 3] = np.conj(rho[3, 0])
    rho[2, 1] = m.sigma23 / params.n_atoms
    rho[1, 2] = np.conj(rho[2, 1])
    return rho


def build_drift_diffusion(steady: SteadyState, params: SystemParams) -> DriftDiffusion:
    if fixed_point_residual(steady, derive_scales(params)) > 1e-8:
        raise PhysicsError("working point does not satisfy the intracavity steady-state equations")
    return build_from_means(density_matrix(steady, params), steady.a_plus, steady.a_minus,
                            params, theta_x=steady.theta_x)


def build_from_means(rho: np.ndarray, a_plus: complex, a_minus: complex,
                     params: SystemParams, theta_x: float = 0.0) -> DriftDiffusion:
    """Assemble drift and diffusion around a per-atom state ``rho`` and mean fields."""
    gen = atom_generator(params, a_plus, a_minus)
    rate_scale = abs(params.delta) + params.gamma + abs(a_plus) + abs(a_minus)
    for a in LEVELS:
        for b in LEVELS:
            if abs(expect(gen.heisenberg(unit(a, b)), rho)) > STATIONARITY_TOL * rate_scale:
                raise PhysicsError("atomic means are not stationary at the given fields")

    basis = close_basis(params, gen)
    ops = basis.dynamic
    na = len(ops)
    n = na + 4
    pos = {op: i for i, op in enumerate(ops)}
    scales = derive_scales(params)
    coupling = np.sqrt(scales.cooperativity * scales.gamma)
    kappa = scales.kappa

    drift = np.zeros((n, n), dtype=complex)
    for i, op in enumerate(ops):
        for key, coef in gen.heisenberg(unit(*op)).items():
            if key == ELIMINATED:
                # population conservation: s22 = -(s11 + s33 + s44)
                for p in basis.atomic:
                    if p[0] == p[1] and p != ELIMINATED:
                        drift[i, pos[p]] -= coef
            else:
                drift[i, pos[key]] += coef
        for f, trans in enumerate(FIELD_TRANSITIONS):
            drift[i, na + f] += 2j * coupling * expect(comm(unit(*trans), unit(*op)), rho)

    detuned = kappa * (1 + 1j * params.delta_c)
    # each cavity field is driven by the collective dipole of its transition
    for f, (dipole, conjugate) in enumerate([((1, 4), False), ((4, 1), True),
                                             ((2, 3), False), ((3, 2), True)]):
        drift[na + f, na + f] = -(np.conj(detuned) if conjugate else detuned)
        drift[na + f, pos[dipole]] = (1j if conjugate else -1j) * kappa * coupling

    diffusion = np.zeros((n, n), dtype=complex)
    for i, x in enumerate(ops):
        for j, y in enumerate(ops):
            total = 0j
            for c, rate in gen.channels:
                total += rate * expect(mul(comm(dag(c), unit(*x)), comm(unit(*y), c)), rho)
            diffusion[i, j] = total
    diffusion[na, na + 1] = 1.0
    diffusion[na + 2, na + 3] = 1.0

    _check_diffusion(diffusion, basis)
    coupling_matrix = np.eye(n, dtype=complex)
    coupling_matrix[na:, na:] *= kappa
    return DriftDiffusion(drift, diffusion, coupling_matrix, basis, rho, params, theta_x)


def _check_diffusion(diffusion: np.ndarray, basis: FluctuationBasis) -> None:
    # <F_m F_n^dagger> must be a positive semi-definite Hermitian matrix
    normal = diffusion[:, basis.conjugate_index()]
    herm = 0.5 * (normal + normal.conj().T)
    lowest = np.linalg.eigvalsh(herm).min()
    if lowest < -DIFFUSION_TOL * max(1.0, np.abs(herm).max()):
        raise PhysicsError(f"diffusion matrix is not positive semi-definite (eigenvalue {lowest:.3e})")


# ----------------------------------------------------------------- stability

def stability_eigen(dd: DriftDiffusion) -> tuple[bool, np.ndarray]:
    eig = np.linalg.eigvals(dd.drift)
    eig = eig[np.lexsort((eig.imag, eig.real))]
    return bool(eig.real.max() < 0), eig


def classify_state(steady: SteadyState, params: SystemParams) -> SteadyState:
    """Return ``steady`` with its stability set from the drift eigenvalues."""
    work = params.with_updates(delta_c=steady.delta_c, s_max=steady.s_max)
    stable, _ = stability_eigen(build_drift_diffusion(steady, work))
    return replace(steady, stability=Stability.STABLE if stable else Stability.UNSTABLE)


# ------------------------------------------------------------------ spectra

_SQRT2 = np.sqrt(2.0)


def _mode_rows(rows: np.ndarray, mode: str) -> np.ndarray:
    plus, plus_d, minus, minus_d = (rows[:, k, :] for k in range(4))
    if mode == "x":
        pair = ((minus - plus) / _SQRT2, (minus_d - plus_d) / _SQRT2)
    elif mode == "y":
        pair = (-1j * (plus + minus) / _SQRT2, 1j * (plus_d + minus_d) / _SQRT2)
    else:
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")
    return np.stack(pair, axis=1)


def output_spectrum(dd: DriftDiffusion, mode: str, omega_grid=None, theta_grid=None,
                    chunk: int = 64) -> SpectrumResult:
    """Output quadrature spectra of polarization mode ``mode`` (vacuum = 1)."""
    stable, eig = stability_eigen(dd)
    if not stable:
        raise PhysicsError(
            f"working point is unstable (max growth rate {eig.real.max():.3e}); check stability_eigen")
    omega = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, dtype=float)
    theta = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)

    def block(sl):
        w = omega[sl]
        h_pos = _mode_rows(dd.output_rows(w), mode)
        h_neg = _mode_rows(dd.output_rows(-w), mode)
        return symmetrized_moments(h_pos, h_neg, dd.diffusion)

    slices = [slice(i, i + chunk) for i in range(0, len(omega), chunk)]
    moments = np.concatenate(ordered_map(block, slices)) if slices else np.zeros((0, 2, 2), complex)
    return SpectrumResult(omega, theta, moments, mode, "full", dd.theta_x, dd.params)
