"""Quadrature noise spectra of an output field mode.

Both noise engines reduce to a symmetrized 2x2 spectral matrix per
frequency over (dA, dA^dagger).  The quadrature X(theta) = A e^{-i theta}
+ A^dagger e^{i theta} then has density

    S(theta) = e^{-2i theta} M00 + M01 + M10 + e^{2i theta} M11,

normalized so that vacuum gives 1.  Quadrature angles are stored relative
to the phase of the mean x-polarized field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemParams
from .records import csv_text, json_text


def default_omega_grid() -> np.ndarray:
    return np.geomspace(1e-3, 1e2, 400)


def default_theta_grid() -> np.ndarray:
    return np.linspace(0.0, np.pi, 180, endpoint=False)


def symmetrized_moments(h_pos: np.ndarray, h_neg: np.ndarray, noise_pos: np.ndarray,
                        noise_neg: np.ndarray | None = None) -> np.ndarray:
    """Symmetrized spectral matrices from transfer rows at +omega and -omega.

    ``h_pos``/``h_neg`` have shape (n_omega, 2, m); the noise correlation
    matrices have shape (m, m) or (n_omega, m, m).
    """
    if noise_neg is None:
        noise_neg = noise_pos
    t = np.swapaxes
    m_pos = h_pos @ noise_pos @ t(h_neg, -1, -2)
    m_neg = h_neg @ noise_neg @ t(h_pos, -1, -2)
    return 0.5 * (m_pos + m_neg)


def quadrature_power(moments: np.ndarray, theta) -> np.ndarray:
    """Noise density for absolute quadrature angle(s) ``theta``; shape (n_omega, n_theta)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rot = np.exp(-2j * theta)[None, :]
    m00 = moments[:, 0, 0][:, None]
    m11 = moments[:, 1, 1][:, None]
    base = (moments[:, 0, 1] + moments[:, 1, 0])[:, None]
    return (rot * m00 + base + np.conj(rot) * m11).real


@dataclass
class SpectrumResult:
    omega_grid: np.ndarray
    theta_grid: np.ndarray
    moments: np.ndarray
    mode: str
    engine: str
    theta_x: float = 0.0
    params: SystemParams | None = None
    omega_unit: str = "gamma"

    def __post_init__(self):
        self.omega_grid = np.asarray(self.omega_grid, dtype=float)
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        m = self.moments
        # enforce the exact Hermitian structure of the symmetrized matrix
        off = 0.5 * (m[:, 0, 0] + np.conj(m[:, 1, 1]))
        self.moments = np.stack([
            np.stack([off, m[:, 0, 1]], axis=-1),
            np.stack([m[:, 1, 0], np.conj(off)], axis=-1),
        ], axis=-2)

    @property
    def power(self) -> np.ndarray:
        """S_out over (omega, theta), with theta relative to theta_x."""
        return quadrature_power(self.moments, self.theta_grid + self.theta_x)

    def at_angle(self, theta_rel: float) -> np.ndarray:
        """Spectrum of one quadrature, angle relative to theta_x."""
        return quadrature_power(self.moments, theta_rel + self.theta_x)[:, 0]

    @property
    def _base(self) -> np.ndarray:
        return (self.moments[:, 0, 1] + self.moments[:, 1, 0]).real

    @property
    def s_min(self) -> np.ndarray:
        return self._base - 2 * np.abs(self.moments[:, 0, 0])

    @property
    def s_max_trace(self) -> np.ndarray:
        return self._base + 2 * np.abs(self.moments[:, 0, 0])

    @property
    def theta_opt(self) -> np.ndarray:
        """Angle of the least noisy quadrature in [0, pi), relative to theta_x."""
        phase = np.angle(self.moments[:, 0, 0])
        return np.mod((phase - np.pi) / 2 - self.theta_x, np.pi)

    def global_minimum(self) -> tuple[float, float, float]:
        """(minimal density, its theta_opt, its omega)."""
        i = int(np.argmin(self.s_min))
        return float(self.s_min[i]), float(self.theta_opt[i]), float(self.omega_grid[i])

    def global_maximum(self) -> tuple[float, float]:
        i = int(np.argmax(self.s_max_trace))
        return float(self.s_max_trace[i]), float(self.omega_grid[i])

    def to_csv(self) -> str:
        header = ["omega", "theta_opt", "s_min", "s_max_trace"]
        rows = zip(self.omega_grid, self.theta_opt, self.s_min, self.s_max_trace)
        if self.engine != "full":
            header.append("regime")
            rows = ((*r, self.engine) for r in rows)
        return csv_text(header, rows)

    def to_json(self) -> str:
        return json_text(dict(
            mode=self.mode,
            engine=self.engine,
            omega_unit=self.omega_unit,
            theta_x=self.theta_x,
            params=self.params.to_dict() if self.params else None,
            params_hash=self.params.digest() if self.params else None,
            omega=self.omega_grid,
            theta=self.theta_grid,
            power=self.power,
            s_min=self.s_min,
            s_max_trace=self.s_max_trace,
            theta_opt=self.theta_opt,
        ))
