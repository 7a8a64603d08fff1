"""Analytic fluctuation theory in the large-detuning, weak-saturation limit.

The medium is described per frequency by a 2x2 susceptibility chi and a
noise correlation sigma over (dA, dA^dagger), built from two
ingredients: a Kerr medium (linear dephasing, dispersion/absorption and
the third-order intensity term) and, for the vacuum mode only, the
optical-pumping self-rotation response.  These atomic matrices are
converted to the cavity-normalized form by the factor K = 2i Delta delta0,
chosen so that the linear part of chi reproduces exactly the linear
dephasing i*delta0 and absorption alpha0 of the steady-state equations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import PhysicsError, SystemParams, derive_scales
from .spectrum import SpectrumResult, default_theta_grid, symmetrized_moments
from .steady import Stability, SteadyState, drive_for_intensity, linear_state

REGIMES = ("kerr", "sr", "combined")
_SIGMA_Z = np.diag([1.0, -1.0])
_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
_VACUUM_IN = np.array([[0.0, 1.0], [0.0, 0.0]])


@dataclass(frozen=True)
class LinearResponse:
    chi: np.ndarray
    sigma: np.ndarray
    omega: float
    mode: str
    regime: str

    def __add__(self, other: "LinearResponse") -> "LinearResponse":
        return LinearResponse(self.chi + other.chi, self.sigma + other.sigma,
                              self.omega, self.mode, self.regime)


@dataclass(frozen=True)
class SpinFluctuation:
    """Transfer from the Stokes fluctuation dS_z to the ground-state spin dJ_z.

    ``j_z_response`` is expressed in units of (N/2)/|A_x|^2.
    """

    omega: float
    j_z_response: complex


def _pump_rate(steady: SteadyState, params: SystemParams) -> float:
    return params.gamma_perp * steady.s_x


def _mean_phase(steady: SteadyState) -> complex:
    return np.exp(2j * steady.theta_x)


def _matrix(m00, m01, m10, m11) -> np.ndarray:
    """Stack entries (scalars or arrays over omega) into (..., 2, 2) matrices."""
    m00, m01, m10, m11 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (m00, m01, m10, m11)))
    return np.stack([np.stack([m00, m01], -1), np.stack([m10, m11], -1)], -2)


def linear_response(omega, steady: SteadyState, params: SystemParams, mode: str = "y") -> LinearResponse:
    """Unsaturated medium: linear dephasing plus dispersion and absorption.

    ``omega`` may be a scalar or an array; matrices then carry a leading
    frequency axis.
    """
    d, g = params.delta, params.gamma
    w = np.asarray(omega, dtype=float)
    zero = np.zeros_like(w)
    chi = _matrix(1 / (2 * d) + (1j * g + w) / (2 * d**2), zero,
                  zero, 1 / (2 * d) - (1j * g + w) / (2 * d**2))
    sigma = _matrix(g / d**2 + zero, zero, zero, zero)
    return LinearResponse(chi, sigma, omega, mode, "linear")


def kerr_response(omega, steady: SteadyState, params: SystemParams, mode_sign: int) -> LinearResponse:
    """Kerr-medium susceptibility; mode_sign = +1 for the mean-field mode, -1 for the vacuum mode."""
    if mode_sign not in (1, -1):
        raise ValueError("mode_sign must be +1 or -1")
    d, g = params.delta, params.gamma
    if abs(d) < 5 * g:
        warnings.warn("Kerr matrices assume a detuning much larger than the linewidth", stacklevel=2)
    mode = "x" if mode_sign > 0 else "y"
    base = linear_response(omega, steady, params, mode)
    strength = steady.S * (d**2 + g**2) / (2 * d**3)  # g^2 |A_x|^2 / (2 Delta^3)
    e2 = _mean_phase(steady)
    kerr = strength * _matrix(2, mode_sign * e2, mode_sign * np.conj(e2), 2)
    return LinearResponse(base.chi - kerr, base.sigma, omega, mode, "kerr")


def sr_response(omega, steady: SteadyState, params: SystemParams) -> LinearResponse:
    """Optical-pumping self-rotation matrices of the vacuum mode."""
    gp = _pump_rate(steady, params)
    d = params.delta
    e2 = _mean_phase(steady)
    w = np.asarray(omega, dtype=float)
    if gp == 0:
        zero = _matrix(0 * w, 0, 0, 0)
        return LinearResponse(zero, zero.copy(), omega, "y", "sr")
    filt = gp / (gp - 1j * w)
    chi = -filt[..., None, None] / (2 * d) * _matrix(1, -e2, -np.conj(e2), 1)
    lorentz = gp**2 + w**2
    # the pumping noise is carried by a single quadrature, aligned with the mean field
    pumping = (gp**2 / (4 * params.gamma_perp * lorentz))[..., None, None] * _matrix(1, e2, np.conj(e2), 1)
    correction = (gp / (2 * d * lorentz))[..., None, None] * _matrix(
        -2 * w, (w - 1j * gp) * e2, (w + 1j * gp) * np.conj(e2), 0 * w)
    return LinearResponse(chi, pumping + correction, omega, "y", "sr")


def combined_response(omega, steady: SteadyState, params: SystemParams) -> LinearResponse:
    total = kerr_response(omega, steady, params, -1) + sr_response(omega, steady, params)
    return LinearResponse(total.chi, total.sigma, omega, "y", "combined")


def response(omega, steady: SteadyState, params: SystemParams, mode: str, regime: str) -> LinearResponse:
    if mode not in ("x", "y"):
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    sign = 1 if mode == "x" else -1
    if regime == "kerr" or mode == "x":
        # self-rotation only acts on the vacuum mode
        return kerr_response(omega, steady, params, sign)
    if regime == "combined":
        return combined_response(omega, steady, params)
    total = linear_response(omega, steady, params, "y") + sr_response(omega, steady, params)
    return LinearResponse(total.chi, total.sigma, omega, "y", "sr")


def spin_transfer(omega: float, steady: SteadyState, params: SystemParams) -> SpinFluctuation:
    g = params.gamma
    sx = steady.s_x
    gp = _pump_rate(steady, params)
    lam = (2 * g - 1j * omega) / (2 * (g - 1j * omega))
    beta = 1 - sx / (4 * lam)
    alpha = (1 - 1j * omega / (4 * params.gamma_perp)) * beta / lam
    rate = gp * alpha
    return SpinFluctuation(omega, rate * lam * (1 - sx / 2) / (rate - 1j * omega))


# ------------------------------------------------------------------ spectra

def system_matrix(resp: LinearResponse, params: SystemParams) -> np.ndarray:
    """Cavity-normalized matrix M with M (dA, dA^dagger) = inputs + atomic noise."""
    scales = derive_scales(params)
    k = 2j * params.delta * scales.delta0
    w = np.asarray(resp.omega, dtype=float)[..., None, None]
    return ((1 - 1j * w / scales.kappa) * np.eye(2)
            + 1j * params.delta_c * _SIGMA_Z - k * _SIGMA_Z @ resp.chi)


def noise_matrix(resp: LinearResponse, params: SystemParams) -> np.ndarray:
    """Correlations of (input, input^dag, noise, noise^dag) in cavity units."""
    scales = derive_scales(params)
    q = np.zeros(resp.sigma.shape[:-2] + (4, 4), dtype=complex)
    q[..., :2, :2] = _VACUUM_IN
    q[..., 2:, 2:] = params.delta * scales.delta0 * resp.sigma @ _SWAP
    return q


def _transfer(resp, params):
    m = system_matrix(resp, params)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    norm = np.abs(m).max(axis=(-1, -2)) ** 2
    bad = np.flatnonzero(np.abs(det) <= 1e-13 * norm)
    if bad.size:
        w = np.atleast_1d(resp.omega)[bad[0]]
        raise PhysicsError(f"cavity system matrix is singular at omega = {w!r}")
    inv = np.linalg.inv(m)
    eye = np.broadcast_to(np.eye(2), inv.shape)
    return np.concatenate([2 * inv - eye, 2 * inv], axis=-1)


def analytic_spectrum(steady: SteadyState, params: SystemParams, mode: str = "y",
                      regime: str = "combined", omega_grid=None, theta_grid=None) -> SpectrumResult:
    """Output quadrature spectra from the analytic susceptibility model."""
    omega = default_omega_grid(params) if omega_grid is None else np.asarray(omega_grid, dtype=float)
    theta = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    r_pos = response(omega, steady, params, mode, regime)
    r_neg = response(-omega, steady, params, mode, regime)
    moments = symmetrized_moments(_transfer(r_pos, params), _transfer(r_neg, params),
                                  noise_matrix(r_pos, params), noise_matrix(r_neg, params))
    return SpectrumResult(omega, theta, moments, mode, regime, steady.theta_x, params)


def default_omega_grid(params: SystemParams) -> np.ndarray:
    """Log grid reaching well beyond the cavity bandwidth."""
    top = max(1e2, 20 * params.kappa_over_gamma * params.gamma)
    return np.geomspace(1e-3, top, 400)


# ------------------------------------------------------------ optimization

def near_switching_point(s_max: float, params: SystemParams, target: float = -0.05) -> tuple[float, float]:
    """Linear-branch working point (delta_c, S) with C_PS = target at drive s_max.

    Among admissible solutions the largest cavity dephasing is returned,
    i.e. the point met first when the cavity is scanned from the right.
    """
    scales = derive_scales(params)
    strength = scales.delta0**2 + scales.alpha0**2
    if strength <= 1 + target:
        raise PhysicsError("no switching threshold exists for these parameters")
    s_top = math.sqrt(strength / (1 + target)) - 1

    def dephasing(S):
        return np.sqrt(np.maximum(strength / (1 + S) ** 2 - 1 - target, 0.0))

    def mismatch(S):
        return drive_for_intensity(S, dephasing(S), scales) - s_max

    grid = np.geomspace(1e-9, s_top, 3000)
    values = mismatch(grid)
    roots = [brentq(mismatch, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-13)
             for i in range(len(grid) - 1) if values[i] * values[i + 1] < 0]
    for S in roots:  # smallest S gives the largest dephasing
        dc = float(dephasing(S))
        state = linear_state(S, dc, s_max, params, scales)
        if state.stability is Stability.STABLE:
            return dc, S
    raise PhysicsError(f"no stable working point near switching at s_max = {s_max}")


@dataclass
class SqueezingOptimum:
    s_max: float
    delta_c: float
    S: float
    s_min: float
    omega: float
    table: list[tuple[float, float, float, float, float]] = field(default_factory=list)


def optimize_squeezing(params: SystemParams, kappa_over_gamma: float, s_max_grid,
                       target: float = -0.05, engine: str = "combined",
                       omega_grid=None) -> SqueezingOptimum:
    """Best vacuum-mode squeezing over a drive grid, working near the switching threshold."""
    grid = sorted(float(s) for s in s_max_grid)
    if not grid:
        raise ValueError("s_max grid is empty")
    base = params.with_updates(kappa_over_gamma=kappa_over_gamma)
    omega = default_omega_grid(base) if omega_grid is None else np.asarray(omega_grid, dtype=float)
    table = []
    for s_max in grid:
        try:
            dc, S = near_switching_point(s_max, base, target)
        except PhysicsError:
            continue
        work = base.with_updates(delta_c=dc, s_max=s_max)
        state = linear_state(S, dc, s_max, work)
        if engine == "full":
            from .fluct_full import build_drift_diffusion, output_spectrum
            spec = output_spectrum(build_drift_diffusion(state, work), "y", omega, np.zeros(1))
        else:
            spec = analytic_spectrum(state, work, "y", engine, omega, np.zeros(1))
        value, _, w = spec.global_minimum()
        table.append((s_max, dc, S, value, w))
    if not table:
        raise PhysicsError("no stable working point on the drive grid")
    best = min(table, key=lambda row: row[3])  # first minimum wins: ties go to smaller s_max
    return SqueezingOptimum(*best, table=table)
