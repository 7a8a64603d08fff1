"""Physical parameters, derived scales and the polarization basis transform.

Rates are expressed in units of the dipole decay rate by default, so a
typical parameter set has ``gamma_perp + gamma_par == 1``.  The squared
coupling ``g2`` is stored in the same rate units; absolute values (in
s^-1 and Hz) are accepted in config files and converted on load.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

SQRT2 = math.sqrt(2.0)


class ConfigError(ValueError):
    """Invalid parameters or malformed configuration input."""


class PhysicsError(RuntimeError):
    """The requested working point has no valid physical solution."""


@dataclass(frozen=True)
class SystemParams:
    gamma_perp: float
    gamma_par: float
    delta: float
    n_atoms: float
    g2: float
    cavity_T: float
    kappa_over_gamma: float
    delta_c: float
    s_max: float
    g2_hz: float | None = None
    gamma_hz: float | None = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None and not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite, got {value!r}")
        if self.gamma_perp < 0 or self.gamma_par < 0:
            raise ConfigError("decay rates must be non-negative")
        if self.gamma <= 0:
            raise ConfigError("gamma_perp + gamma_par must be positive")
        if not 0 < self.cavity_T <= 1:
            raise ConfigError(f"cavity_T must lie in (0, 1], got {self.cavity_T}")
        if self.s_max < 0:
            raise ConfigError("s_max must be non-negative")
        if self.n_atoms <= 0:
            raise ConfigError("n_atoms must be positive")
        if self.g2 < 0:
            raise ConfigError("g2 must be non-negative")
        if self.kappa_over_gamma <= 0:
            raise ConfigError("kappa_over_gamma must be positive")

    @property
    def gamma(self) -> float:
        return self.gamma_perp + self.gamma_par

    def with_updates(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Stable content hash used to tag results with their working point."""
        blob = json.dumps({k: repr(v) for k, v in sorted(self.to_dict().items())})
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DerivedScales:
    delta0: float
    alpha0: float
    kappa: float
    cooperativity: float
    gamma_p_per_sx: float
    delta: float
    gamma: float

    def absorption_from_dephasing(self) -> float:
        """Linear absorption recomputed from the dephasing, alpha0 = delta0 * gamma / delta."""
        if self.delta == 0:
            raise ConfigError("absorption/dephasing ratio is undefined at zero detuning")
        return self.delta0 * self.gamma / self.delta


@dataclass(frozen=True)
class FieldAmplitudePair:
    a_plus: complex
    a_minus: complex

    def __post_init__(self):
        if not (_finite(self.a_plus) and _finite(self.a_minus)):
            raise ConfigError("field amplitudes must be finite")

    @property
    def intensity(self) -> float:
        return abs(self.a_plus) ** 2 + abs(self.a_minus) ** 2


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def derive_scales(params: SystemParams) -> DerivedScales:
    gamma = params.gamma
    # common prefactor N g^2 / (T (delta^2 + gamma^2)) keeps alpha0*delta == delta0*gamma
    pref = params.n_atoms * params.g2 / (params.cavity_T * (params.delta**2 + gamma**2))
    return DerivedScales(
        delta0=pref * params.delta,
        alpha0=pref * gamma,
        kappa=params.kappa_over_gamma * gamma,
        cooperativity=params.g2 * params.n_atoms / (params.cavity_T * gamma),
        gamma_p_per_sx=params.gamma_perp,
        delta=params.delta,
        gamma=gamma,
    )


def to_circular(a_x: complex, a_y: complex) -> FieldAmplitudePair:
    return FieldAmplitudePair(-(a_x - 1j * a_y) / SQRT2, (a_x + 1j * a_y) / SQRT2)


def to_linear(pair: FieldAmplitudePair) -> tuple[complex, complex]:
    a_x = (pair.a_minus - pair.a_plus) / SQRT2
    a_y = -1j * (pair.a_plus + pair.a_minus) / SQRT2
    return a_x, a_y


# ---------------------------------------------------------------- config files

REQUIRED_KEYS = (
    "gamma_perp", "gamma_par", "delta", "n_atoms",
    "cavity_T", "kappa_over_gamma", "delta_c", "s_max",
)
OPTIONAL_KEYS = ("g2_hz", "gamma_hz", "delta0")


def parse_config(text: str, source: str = "<config>") -> SystemParams:
    """Parse flat ``key = value`` text into SystemParams.

    The coupling is given either absolutely (``g2_hz`` with ``gamma_hz``, the
    linewidth divided by 2 pi) or through the dimensionless linear dephasing
    ``delta0``, from which g2 is back-computed.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        has_header = text.lstrip().startswith("[")
        parser.read_string(text if has_header else "[params]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if parser.sections() != ["params"]:
        raise ConfigError(f"{source}: expected a single [params] section, got {parser.sections()}")
    raw = dict(parser["params"])

    unknown = sorted(set(raw) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"{source}: missing keys {missing}")
    try:
        values = {k: float(v) for k, v in raw.items()}
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return params_from_mapping(values, source)


def params_from_mapping(values: dict, source: str = "<mapping>") -> SystemParams:
    values = dict(values)
    delta0 = values.pop("delta0", None)
    g2_hz = values.pop("g2_hz", None)
    gamma_hz = values.pop("gamma_hz", None)
    gamma = values["gamma_perp"] + values["gamma_par"]
    if gamma <= 0:
        raise ConfigError(f"{source}: gamma_perp + gamma_par must be positive")

    if delta0 is not None and g2_hz is not None:
        raise ConfigError(f"{source}: give either delta0 or g2_hz, not both")
    if g2_hz is not None:
        if gamma_hz is None or gamma_hz <= 0:
            raise ConfigError(f"{source}: g2_hz requires a positive gamma_hz")
        g2 = g2_hz / (2 * math.pi * gamma_hz) * gamma
    elif delta0 is not None:
        delta = values["delta"]
        if delta == 0 and delta0 != 0:
            raise ConfigError(f"{source}: a non-zero delta0 needs a non-zero detuning")
        if values["n_atoms"] <= 0:
            raise ConfigError(f"{source}: n_atoms must be positive")
        g2 = 0.0 if delta0 == 0 else (
            delta0 * values["cavity_T"] * (delta**2 + gamma**2) / (values["n_atoms"] * delta)
        )
    else:
        raise ConfigError(f"{source}: coupling missing, give delta0 or g2_hz")
    return SystemParams(g2=g2, g2_hz=g2_hz, gamma_hz=gamma_hz, **values)


def load_config(path: str | Path) -> SystemParams:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def dimensionless_params(
    delta0: float,
    delta: float,
    delta_c: float = 0.0,
    s_max: float = 0.0,
    gamma_perp: float = 1.0 / 3.0,
    kappa_over_gamma: float = 1.0,
    n_atoms: float = 1e6,
    cavity_T: float = 0.1,
) -> SystemParams:
    """Build parameters from the dimensionless dephasing, with gamma = 1."""
    return params_from_mapping(
        dict(
            gamma_perp=gamma_perp, gamma_par=1.0 - gamma_perp, delta=delta,
            n_atoms=n_atoms, cavity_T=cavity_T, kappa_over_gamma=kappa_over_gamma,
            delta_c=delta_c, s_max=s_max, delta0=delta0,
        )
    )
