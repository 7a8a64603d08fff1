"""Intracavity steady states of the driven four-level medium.

Two families of solutions exist for a linearly polarized drive: the
symmetric (linear polarization) branch with s+ = s-, and pairs of
elliptically polarized states with opposite asymmetry.  All dephasings
and absorptions are normalized to half the mirror transmission and all
intensities are saturation parameters.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .model import DerivedScales, FieldAmplitudePair, PhysicsError, SystemParams, derive_scales, to_linear
from .records import csv_text, json_text

REAL_ROOT_TOL = 1e-9
GRID_PER_DECADE = 400
GRID_FLOOR = 1e-6


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDETERMINED = "undetermined"


class Branch(str, Enum):
    LINEAR = "linear"
    SIGMA_PLUS = "sigma_plus_dominant"
    SIGMA_MINUS = "sigma_minus_dominant"


@dataclass(frozen=True)
class AtomicMeans:
    sigma11: float
    sigma22: float
    sigma33: float
    sigma44: float
    sigma14: complex
    sigma23: complex

    @property
    def populations(self) -> tuple[float, float, float, float]:
        return (self.sigma11, self.sigma22, self.sigma33, self.sigma44)


@dataclass(frozen=True)
class Dephasings:
    delta_l: float
    delta_sr: float
    alpha_l: float
    alpha_sr: float

    @property
    def delta_plus(self) -> float:
        return self.delta_l + self.delta_sr

    @property
    def delta_minus(self) -> float:
        return self.delta_l - self.delta_sr

    @property
    def alpha_plus(self) -> float:
        return self.alpha_l + self.alpha_sr

    @property
    def alpha_minus(self) -> float:
        return self.alpha_l - self.alpha_sr


@dataclass(frozen=True)
class SteadyState:
    """One self-consistent intracavity solution.

    ``a_plus``/``a_minus`` are coupling-scaled amplitudes g<A+->, in rate
    units, so that s+- = 2 |a+-|^2 / (delta^2 + gamma^2).
    """

    s_plus: float
    s_minus: float
    S: float
    x_sr: float
    ellipticity: float
    a_plus: complex
    a_minus: complex
    atomic_means: AtomicMeans
    dephasings: Dephasings
    theta_x: float
    stability: Stability
    branch: Branch
    delta_c: float
    s_max: float

    @property
    def s_x(self) -> float:
        return self.s_plus + self.s_minus

    @property
    def amplitudes(self) -> FieldAmplitudePair:
        return FieldAmplitudePair(self.a_plus, self.a_minus)

    def as_row(self) -> dict:
        return dict(
            s_plus=self.s_plus, s_minus=self.s_minus, S=self.S, x_sr=self.x_sr,
            ellipticity=self.ellipticity, theta_x=self.theta_x,
            stability=self.stability.value, branch=self.branch.value,
            delta_c=self.delta_c, s_max=self.s_max,
        )


# ------------------------------------------------------------------ atoms

def atomic_steady_state(
    s_plus: float,
    s_minus: float,
    params: SystemParams,
    amplitudes: FieldAmplitudePair | None = None,
) -> AtomicMeans:
    """Closed-form atomic means for given circular saturation parameters.

    Without explicit amplitudes the phases of an x-polarized field with a
    real positive x component are assumed.
    """
    if s_plus < 0 or s_minus < 0:
        raise PhysicsError("saturation parameters must be non-negative")
    total = s_plus + s_minus
    if total == 0:
        raise PhysicsError("populations are undefined when both saturation parameters vanish")
    if amplitudes is None:
        amplitudes = _amplitudes(s_plus, s_minus, params, 0.0, 0.0)
    n = params.n_atoms
    S = 2 * s_plus * s_minus / total
    w_minus = s_minus / total
    w_plus = s_plus / total
    denom = complex(params.gamma, params.delta)
    excited = n / 4 * S / (1 + S)
    return AtomicMeans(
        sigma11=n * w_minus * (1 + s_plus / 2) / (1 + S),
        sigma22=n * w_plus * (1 + s_minus / 2) / (1 + S),
        sigma33=excited,
        sigma44=excited,
        sigma14=-1j * n * amplitudes.a_plus / denom * w_minus / (1 + S),
        sigma23=-1j * n * amplitudes.a_minus / denom * w_plus / (1 + S),
    )


def _amplitudes(s_plus, s_minus, params, phase_plus, phase_minus) -> FieldAmplitudePair:
    scale = (params.delta**2 + params.gamma**2) / 2
    return FieldAmplitudePair(
        -math.sqrt(s_plus * scale) * cmath.exp(1j * phase_plus),
        math.sqrt(s_minus * scale) * cmath.exp(1j * phase_minus),
    )


# ------------------------------------------------------------- dephasings

def _dephasings(S: float, x_sr: float, scales: DerivedScales) -> Dephasings:
    delta_l = scales.delta0 / (1 + S)
    alpha_l = scales.alpha0 / (1 + S)
    return Dephasings(delta_l, delta_l * x_sr, alpha_l, alpha_l * x_sr)


def dephasings(state, scales: DerivedScales) -> Dephasings:
    """Linear and self-rotation parts of the dephasing and absorption of ``state``."""
    return _dephasings(state.S, state.x_sr, scales)


def _circular_denominators(S, x, delta_c, scales):
    delta_l = scales.delta0 / (1 + S)
    alpha_l = scales.alpha0 / (1 + S)
    d_plus = (1 + alpha_l * (1 + x)) ** 2 + (delta_l * (1 + x) - delta_c) ** 2
    d_minus = (1 + alpha_l * (1 - x)) ** 2 + (delta_l * (1 - x) - delta_c) ** 2
    return d_plus, d_minus


def fixed_point_residual(state: SteadyState, scales: DerivedScales) -> float:
    """Largest relative residual of the two circular intracavity equations."""
    d_plus, d_minus = _circular_denominators(state.S, state.x_sr, state.delta_c, scales)
    worst = 0.0
    for s, d in ((state.s_plus, d_plus), (state.s_minus, d_minus)):
        target = state.s_max / d
        ref = max(abs(target), abs(s), 1e-300)
        worst = max(worst, abs(s - target) / ref)
    return worst


# --------------------------------------------------------------- criteria

def criterion_ex(S: float, scales: DerivedScales, delta_c: float) -> float:
    return (scales.delta0**2 + scales.alpha0**2) / (1 + S) ** 2 - delta_c**2 - 1


def criterion_ps(S: float, scales: DerivedScales, delta_c: float) -> float:
    """Phase-sensitive gain minus losses for the linear state with s_x/2 = S."""
    return criterion_ex(S, scales, delta_c)


def ps_threshold_intensity(delta_c: float, scales: DerivedScales) -> float | None:
    ratio = (scales.delta0**2 + scales.alpha0**2) / (1 + delta_c**2)
    if ratio <= 1:
        return None
    return math.sqrt(ratio) - 1


# ----------------------------------------------------------- linear branch

def _drive_polynomials(delta_c: float, scales: DerivedScales) -> tuple[Polynomial, Polynomial]:
    """Numerator S*P(S) and denominator (1+S)^2 of the drive needed for intensity S."""
    S = Polynomial([0.0, 1.0])
    one_plus = 1 + S
    numerator = S * ((one_plus + scales.alpha0) ** 2 + (scales.delta0 - delta_c * one_plus) ** 2)
    return numerator, one_plus**2


def drive_for_intensity(S, delta_c: float, scales: DerivedScales):
    """s_max required to sustain the linear state with S = s_x/2."""
    one_plus = 1 + np.asarray(S, dtype=float)
    loss = (one_plus + scales.alpha0) ** 2 + (scales.delta0 - delta_c * one_plus) ** 2
    return (one_plus - 1) * loss / one_plus**2


def drive_slope(S, delta_c: float, scales: DerivedScales):
    """d s_max / dS along the linear branch (analytic)."""
    num, _ = _drive_polynomials(delta_c, scales)
    S = np.asarray(S, dtype=float)
    return (num.deriv()(S) * (1 + S) - 2 * num(S)) / (1 + S) ** 3


def linear_branch_roots(delta_c: float, s_max: float, scales: DerivedScales) -> list[float]:
    """All non-negative intensities S of the linear branch, in increasing order."""
    if s_max < 0:
        raise PhysicsError("s_max must be non-negative")
    if s_max == 0:
        return [0.0]
    num, den = _drive_polynomials(delta_c, scales)
    cubic = num - s_max * den
    coef = cubic.coef
    eig = np.linalg.eigvals(npoly.polycompanion(coef))
    roots = []
    for z in eig:
        if abs(z.imag) >= REAL_ROOT_TOL:
            continue
        S = _polish(cubic, z.real)
        if S >= -REAL_ROOT_TOL:
            roots.append(max(S, 0.0))
    return sorted(roots)


def _polish(poly: Polynomial, x: float, steps: int = 3) -> float:
    dpoly = poly.deriv()
    for _ in range(steps):
        slope = dpoly(x)
        if slope == 0:
            break
        step = poly(x) / slope
        if not math.isfinite(step) or abs(step) > 1e-3 * (1 + abs(x)):
            break
        x -= step
    return x


def linear_state(S: float, delta_c: float, s_max: float, params: SystemParams,
                 scales: DerivedScales | None = None) -> SteadyState:
    scales = scales or derive_scales(params)
    if S <= 0:
        raise PhysicsError("the linear branch needs a non-zero intracavity intensity")
    middle = float(drive_slope(S, delta_c, scales)) < 0
    unstable = criterion_ps(S, scales, delta_c) >= 0 or middle
    return _build_state(S, S, delta_c, s_max, params, scales, Branch.LINEAR,
                        Stability.UNSTABLE if unstable else Stability.STABLE)


def linear_branch_states(delta_c: float, s_max: float, params: SystemParams) -> list[SteadyState]:
    scales = derive_scales(params)
    return [linear_state(S, delta_c, s_max, params, scales)
            for S in linear_branch_roots(delta_c, s_max, scales) if S > 0]


def _build_state(s_plus, s_minus, delta_c, s_max, params, scales, branch, stability) -> SteadyState:
    total = s_plus + s_minus
    S = 2 * s_plus * s_minus / total
    x = (s_minus - s_plus) / total
    deph = _dephasings(S, x, scales)
    # circular components inherit the phase of their own cavity transfer,
    # referenced to the symmetric transfer so the linear branch has theta_x = 0
    ref = cmath.phase(complex(1 + deph.alpha_l, delta_c - deph.delta_l))
    phase_plus = ref - cmath.phase(complex(1 + deph.alpha_plus, delta_c - deph.delta_plus))
    phase_minus = ref - cmath.phase(complex(1 + deph.alpha_minus, delta_c - deph.delta_minus))
    amps = _amplitudes(s_plus, s_minus, params, phase_plus, phase_minus)
    a_x, _ = to_linear(amps)
    return SteadyState(
        s_plus=s_plus, s_minus=s_minus, S=S, x_sr=x,
        ellipticity=-0.5 * math.asin(max(-1.0, min(1.0, x))),
        a_plus=amps.a_plus, a_minus=amps.a_minus,
        atomic_means=atomic_steady_state(s_plus, s_minus, params, amps),
        dephasings=deph,
        theta_x=cmath.phase(a_x) if abs(a_x) > 0 else 0.0,
        stability=stability, branch=branch, delta_c=delta_c, s_max=s_max,
    )


# --------------------------------------------------------- elliptic branch

def _elliptic_residual(S, delta_c, s_max, scales):
    """Sum residual u - (s+ + s-) and x^2 along trial S; NaN where x^2 < 0."""
    S = np.asarray(S, dtype=float)
    delta_l = scales.delta0 / (1 + S)
    alpha_l = scales.alpha0 / (1 + S)
    strength = delta_l**2 + alpha_l**2
    with np.errstate(divide="ignore", invalid="ignore"):
        x2 = (strength - delta_c**2 - 1) / strength
    x2 = np.where(x2 >= 0, x2, np.nan)
    x = np.sqrt(x2)
    u = 2 * S / (1 - x2)
    d_plus, d_minus = _circular_denominators(S, x, delta_c, scales)
    return u - s_max / d_plus - s_max / d_minus, x


def elliptical_branch_solve(delta_c: float, s_max: float, params: SystemParams) -> list[SteadyState]:
    """Elliptically polarized solutions, returned as (sigma+, sigma-) dominant pairs."""
    scales = derive_scales(params)
    if s_max <= 0:
        return []
    s_ps = ps_threshold_intensity(delta_c, scales)
    if s_ps is None or s_ps <= GRID_FLOOR:
        return []
    hi = min(10 * s_max, s_ps)
    if hi <= GRID_FLOOR:
        return []
    decades = math.log10(hi / GRID_FLOOR)
    grid = np.geomspace(GRID_FLOOR, hi, max(2, int(math.ceil(decades * GRID_PER_DECADE)) + 1))
    res, _ = _elliptic_residual(grid, delta_c, s_max, scales)

    def scalar(S):
        return float(_elliptic_residual(S, delta_c, s_max, scales)[0])

    roots = []
    for i in range(len(grid) - 1):
        r0, r1 = res[i], res[i + 1]
        if not (np.isfinite(r0) and np.isfinite(r1)):
            continue
        if r0 == 0:
            roots.append(grid[i])
        elif r0 * r1 < 0:
            roots.append(brentq(scalar, grid[i], grid[i + 1], xtol=1e-300, rtol=1e-10))
    if np.isfinite(res[-1]) and res[-1] == 0:
        roots.append(grid[-1])

    states = []
    for S in roots:
        _, x = _elliptic_residual(S, delta_c, s_max, scales)
        x = float(x)
        if not x > 0:
            continue  # x = 0 is the linear branch itself
        d_plus, d_minus = _circular_denominators(S, x, delta_c, scales)
        for sign, branch in ((-1.0, Branch.SIGMA_PLUS), (1.0, Branch.SIGMA_MINUS)):
            dp, dm = (d_plus, d_minus) if sign > 0 else (d_minus, d_plus)
            states.append(_build_state(s_max / dp, s_max / dm, delta_c, s_max, params, scales,
                                       branch, Stability.UNDETERMINED))
    return states


# ------------------------------------------------------------ branch curves

@dataclass(frozen=True)
class BranchSample:
    param: float
    state: SteadyState
    branch_id: Branch


@dataclass
class BranchCurve:
    swept_param: str
    samples: list[BranchSample]
    turning_points: list[float] = field(default_factory=list)
    ps_threshold: float | None = None
    turning_intensities: list[float] = field(default_factory=list)
    params: SystemParams | None = None

    CSV_HEADER = ["param", "branch_id", "s_plus", "s_minus", "S", "x_sr", "stable"]

    def rows(self):
        for s in self.samples:
            st = s.state
            yield (s.param, s.branch_id.value, st.s_plus, st.s_minus, st.S, st.x_sr,
                   "" if st.stability is Stability.UNDETERMINED else st.stability is Stability.STABLE)

    def to_csv(self) -> str:
        return csv_text(self.CSV_HEADER, self.rows())

    def to_json(self) -> str:
        return json_text(dict(
            swept_param=self.swept_param,
            params=self.params.to_dict() if self.params else None,
            params_hash=self.params.digest() if self.params else None,
            turning_points=self.turning_points,
            turning_intensities=self.turning_intensities,
            ps_threshold=self.ps_threshold,
            samples=[dict(param=s.param, branch_id=s.branch_id.value, **s.state.as_row())
                     for s in self.samples],
        ))


def turning_intensities(delta_c: float, scales: DerivedScales, s_hi: float | None = None) -> list[float]:
    """Interior extrema of the drive curve s_max(S), located from the analytic slope."""
    num, _ = _drive_polynomials(delta_c, scales)
    slope_num = num.deriv() * Polynomial([1.0, 1.0]) - 2 * num
    coef = slope_num.coef
    # Cauchy bound encloses every real root of the slope numerator
    bound = 1 + max(abs(coef[:-1] / coef[-1])) if abs(coef[-1]) > 0 else 1e3
    if s_hi is not None:
        bound = max(bound, s_hi)
    grid = np.concatenate([[0.0], np.geomspace(1e-9, bound, 4000)])
    values = slope_num(grid)
    found = []
    for i in range(len(grid) - 1):
        if values[i] == 0 and grid[i] > 0:
            found.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0:
            found.append(brentq(slope_num, grid[i], grid[i + 1], xtol=1e-300, rtol=1e-13))
    return found


def bistability_curve(delta_c: float, s_max_range: tuple[float, float, int],
                      params: SystemParams) -> BranchCurve:
    """Linear-branch intensity versus drive at fixed cavity dephasing."""
    scales = derive_scales(params)
    lo, hi, n = s_max_range
    samples = []
    for s_max in np.linspace(lo, hi, int(n)):
        for st in linear_branch_states(delta_c, float(s_max), params):
            samples.append(BranchSample(float(s_max), st, Branch.LINEAR))
    turns = turning_intensities(delta_c, scales)
    drives = [float(drive_for_intensity(S, delta_c, scales)) for S in turns]
    s_ps = ps_threshold_intensity(delta_c, scales)
    return BranchCurve(
        swept_param="s_max",
        samples=samples,
        turning_points=drives,
        ps_threshold=None if s_ps is None else float(drive_for_intensity(s_ps, delta_c, scales)),
        turning_intensities=turns,
        params=params.with_updates(delta_c=delta_c),
    )


@dataclass(frozen=True)
class PsMargin:
    delta_c: float
    s_lt: float
    s_ht: float
    s_ps: float | None

    @property
    def margin(self) -> float:
        return -math.inf if self.s_ps is None else self.s_ps - self.s_ht

    @property
    def holds(self) -> bool:
        return self.margin >= 0


def ps_before_ht_scan(scales: DerivedScales, delta_c_grid) -> list[PsMargin]:
    """Compare the switching intensity with the upper turning point wherever the curve is S-shaped."""
    report = []
    for dc in delta_c_grid:
        turns = turning_intensities(float(dc), scales)
        if len(turns) != 2:
            continue
        s_lt, s_ht = sorted(turns)
        report.append(PsMargin(float(dc), s_lt, s_ht, ps_threshold_intensity(float(dc), scales)))
    return report


# ------------------------------------------------------------ resonance scan

@dataclass
class ResonanceScan:
    curves: dict[str, BranchCurve]
    ps_crossings: list[float]
    delta_ps: float | None
    s_ps: float | None
    delta_ex: float | None
    params: SystemParams

    @property
    def window(self) -> tuple[float, float] | None:
        """Tristability range in cavity dephasing, if the two edges are ordered."""
        if self.delta_ps is None or self.delta_ex is None or self.delta_ex <= self.delta_ps:
            return None
        return (self.delta_ps, self.delta_ex)

    def summary(self) -> dict:
        return dict(delta_ps=self.delta_ps, s_ps=self.s_ps, delta_ex=self.delta_ex,
                    ps_crossings=self.ps_crossings, window=self.window)


def ps_crossings(delta_c_lo: float, delta_c_hi: float, s_max: float,
                 scales: DerivedScales, n: int = 4000) -> list[tuple[float, float]]:
    """Cavity dephasings at which a linear-branch state sits exactly at C_PS = 0.

    Returned as (delta_c, S) pairs in increasing delta_c.
    """
    edge = scales.delta0**2 + scales.alpha0**2 - 1
    if edge <= 0 or s_max <= 0:
        return []
    limit = math.sqrt(edge)
    lo, hi = max(delta_c_lo, -limit), min(delta_c_hi, limit)
    if lo >= hi:
        return []

    def mismatch(dc):
        s_ps = ps_threshold_intensity(dc, scales)
        return (drive_for_intensity(s_ps, dc, scales) if s_ps is not None else 0.0) - s_max

    grid = np.linspace(lo, hi, n)
    values = [mismatch(dc) for dc in grid]
    out = []
    for i in range(n - 1):
        if values[i] == 0:
            out.append(grid[i])
        elif values[i] * values[i + 1] < 0:
            out.append(brentq(mismatch, grid[i], grid[i + 1], xtol=1e-13))
    return [(float(dc), ps_threshold_intensity(dc, scales)) for dc in out]


def _has_elliptic(dc, s_max, params):
    return bool(elliptical_branch_solve(dc, s_max, params))


def resonance_scan(delta_c_range, s_max: float, params: SystemParams,
                   elliptic_stability: bool = False) -> ResonanceScan:
    """Sweep the cavity dephasing and collect every steady state.

    ``delta_c_range`` is any iterable of cavity dephasings.  With
    ``elliptic_stability`` the elliptic states are classified by the
    eigenvalues of the full linearized model.
    """
    scales = derive_scales(params)
    grid = np.asarray(list(delta_c_range), dtype=float)
    linear, plus, minus = [], [], []
    classify = None
    if elliptic_stability:
        from .fluct_full import classify_state
        classify = classify_state
    has_ellipse = []
    for dc in grid:
        dc = float(dc)
        for st in linear_branch_states(dc, s_max, params):
            linear.append(BranchSample(dc, st, Branch.LINEAR))
        found = elliptical_branch_solve(dc, s_max, params)
        has_ellipse.append(bool(found))
        for st in found:
            if classify is not None:
                st = classify(st, params)
            (plus if st.branch is Branch.SIGMA_PLUS else minus).append(BranchSample(dc, st, st.branch))

    crossings = ps_crossings(float(grid.min()), float(grid.max()), s_max, scales) if len(grid) else []
    delta_ps, s_ps = (crossings[-1] if crossings else (None, None))

    # upper edge of elliptic existence, refined by bisection on existence
    delta_ex = None
    idx = [i for i, flag in enumerate(has_ellipse) if flag]
    if idx:
        i = idx[-1]
        lo = float(grid[i])
        if i + 1 < len(grid):
            hi = float(grid[i + 1])
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if _has_elliptic(mid, s_max, params):
                    lo = mid
                else:
                    hi = mid
        delta_ex = lo

    base = params.with_updates(s_max=s_max)
    curves = {
        Branch.LINEAR.value: BranchCurve("delta_c", linear, ps_threshold=delta_ps, params=base),
        Branch.SIGMA_PLUS.value: BranchCurve("delta_c", plus, params=base),
        Branch.SIGMA_MINUS.value: BranchCurve("delta_c", minus, params=base),
    }
    return ResonanceScan(curves, [c[0] for c in crossings], delta_ps, s_ps, delta_ex, base)
