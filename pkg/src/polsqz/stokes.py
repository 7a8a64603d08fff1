"""Quantum Stokes parameters of the output beam and polarization squeezing.

For an x-polarized mean field the fluctuations of S_y and S_z are, to
first order, |<A_x>| times two orthogonal quadratures of the vacuum mode
A_y, so their normalized noise densities are read directly off the
A_y spectrum.  Sign convention: S_z = i(A_y^dag A_x - A_x^dag A_y), which
gives S_z = +S_0 for pure sigma+ light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemParams, to_linear
from .records import json_text
from .spectrum import SpectrumResult
from .steady import SteadyState

# densities within round-off of shot noise are not counted as squeezed
SQUEEZING_TOL = 1e-12


@dataclass(frozen=True)
class StokesMeans:
    S0: float
    Sx: float
    Sy: float
    Sz: float
    unit: str


def photon_flux_scale(params: SystemParams | None) -> float | None:
    """Factor converting |g A|^2 (model rate units squared) into photons per second."""
    if params is None or params.g2_hz is None or params.gamma_hz is None:
        return None
    rate = 2 * math.pi * params.gamma_hz / params.gamma  # s^-1 per model rate unit
    return rate**2 / params.g2_hz


def stokes_from_amplitudes(a_x: complex, a_y: complex) -> tuple[float, float, float, float]:
    ix, iy = abs(a_x) ** 2, abs(a_y) ** 2
    cross = np.conj(a_x) * a_y
    return float(ix + iy), float(ix - iy), float(2 * cross.real), float(2 * cross.imag)


def mean_stokes(steady: SteadyState, params: SystemParams | None = None) -> StokesMeans:
    """Mean Stokes vector; in photons/s when absolute coupling constants are known."""
    a_x, a_y = to_linear(steady.amplitudes)
    values = stokes_from_amplitudes(a_x, a_y)
    scale = photon_flux_scale(params)
    if scale is None:
        return StokesMeans(*values, unit="g^2 |A|^2 / gamma^2")
    return StokesMeans(*(v * scale for v in values), unit="photons/s")


def squeezed_decomposition(theta_x: float, theta_sq: float):
    """Coefficients of S_sq and S_antisq on (S_y, S_z)."""
    phi = theta_x - theta_sq
    return (math.cos(phi), math.sin(phi)), (math.sin(phi), -math.cos(phi))


def squeezing_angle(theta_x: float, theta_quadrature: float) -> float:
    """theta_sq for which S_sq follows the A_y quadrature at absolute angle ``theta_quadrature``.

    The combination cos(theta_x - theta_sq) S_y + sin(theta_x - theta_sq) S_z
    is proportional to the quadrature at 2 theta_x - theta_sq.
    """
    return float(np.mod(2 * theta_x - theta_quadrature, np.pi))


@dataclass
class StokesReport:
    mean: StokesMeans
    omega: np.ndarray
    v_normalized: dict[str, np.ndarray]
    theta_sq: float
    squeezed_combo: tuple[float, float]
    antisqueezed_combo: tuple[float, float]
    v_sq: np.ndarray
    v_antisq: np.ndarray
    params_hash: str
    source: str

    @property
    def squeezed(self) -> np.ndarray:
        limit = 1 - SQUEEZING_TOL
        return (self.v_normalized["y"] < limit) | (self.v_normalized["z"] < limit)

    def to_json(self) -> str:
        return json_text(dict(
            mean=dict(S0=self.mean.S0, Sx=self.mean.Sx, Sy=self.mean.Sy, Sz=self.mean.Sz,
                      unit=self.mean.unit),
            omega=self.omega,
            v_normalized=self.v_normalized,
            theta_sq=self.theta_sq,
            squeezed_combo=self.squeezed_combo,
            antisqueezed_combo=self.antisqueezed_combo,
            v_sq=self.v_sq,
            v_antisq=self.v_antisq,
            polarization_squeezed=self.squeezed,
            params_hash=self.params_hash,
            source=self.source,
        ))


def stokes_noise(ay_spectrum: SpectrumResult, steady: SteadyState, params: SystemParams,
                 x_spectrum: SpectrumResult | None = None) -> StokesReport:
    """Normalized Stokes noise densities from the vacuum-mode spectrum."""
    if ay_spectrum.mode != "y":
        raise ValueError("Stokes noise needs the spectrum of the orthogonal mode y")
    for spec in (ay_spectrum, x_spectrum):
        if spec is not None and spec.params is not None and spec.params.digest() != params.digest():
            raise ValueError("spectrum was computed at a different working point")

    theta_x = steady.theta_x
    v = {
        "y": ay_spectrum.at_angle(0.0),
        "z": ay_spectrum.at_angle(math.pi / 2),
    }
    if x_spectrum is not None:
        v["x"] = x_spectrum.at_angle(0.0)

    # best squeezed quadrature over the frequency grid, absolute angle
    _, theta_opt, _ = ay_spectrum.global_minimum()
    theta_sq = squeezing_angle(theta_x, theta_opt + theta_x)
    sq, antisq = squeezed_decomposition(theta_x, theta_sq)
    v_sq = ay_spectrum.at_angle(theta_x - theta_sq)
    v_antisq = ay_spectrum.at_angle(theta_x - theta_sq + math.pi / 2)
    return StokesReport(
        mean=mean_stokes(steady, params),
        omega=ay_spectrum.omega_grid,
        v_normalized=v,
        theta_sq=theta_sq,
        squeezed_combo=sq,
        antisqueezed_combo=antisq,
        v_sq=v_sq,
        v_antisq=v_antisq,
        params_hash=params.digest(),
        source=ay_spectrum.engine,
    )
