import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polsqz.figures import builtin_config_text, builtin_params
from polsqz.model import (
    ConfigError, SystemParams, derive_scales, dimensionless_params, parse_config,
    to_circular, to_linear,
)

BASE = """
gamma_perp = 0.3333333333333333
gamma_par = 0.6666666666666667
delta = 20
n_atoms = 1000000
cavity_T = 0.1
kappa_over_gamma = 2
delta_c = 4.6
s_max = 0.1
"""

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
amplitude = st.builds(complex, finite, finite)


def test_absorption_matches_dephasing_ratio_at_fig3():
    scales = derive_scales(dimensionless_params(7.0, 20.0))
    assert scales.delta0 == pytest.approx(7.0, rel=1e-15)
    assert abs(scales.alpha0 - 0.35) <= 4 * np.spacing(0.35)


def test_absorption_vanishes_at_large_detuning():
    values = [derive_scales(dimensionless_params(5.0, d)).alpha0 for d in (20, 200, 2e4, 2e6)]
    assert values == sorted(values, reverse=True)
    assert values[-1] < 1e-5


def test_cesium_cooperativity_baseline():
    params = builtin_params("cesium")
    # C = g^2 N / (T gamma) with gamma = 2 pi * 2.6 MHz
    expected = 4.24 * 7e6 / (0.1 * 2 * math.pi * 2.6e6)
    assert derive_scales(params).cooperativity == pytest.approx(expected, rel=1e-12)
    assert derive_scales(params).cooperativity == pytest.approx(18.168, abs=1e-3)


def test_scales_double_with_atom_number():
    p = builtin_params("cesium")
    a, b = derive_scales(p), derive_scales(p.with_updates(n_atoms=2 * p.n_atoms))
    for name in ("delta0", "alpha0", "cooperativity"):
        assert getattr(b, name) == pytest.approx(2 * getattr(a, name), rel=1e-14)


@given(st.floats(0.1, 50), st.floats(-200, 200).filter(lambda d: abs(d) > 1e-3))
def test_absorption_dephasing_identity(delta0, delta):
    # the dephasing carries the sign of the detuning
    s = derive_scales(dimensionless_params(math.copysign(delta0, delta), delta))
    assert s.alpha0 * s.delta == pytest.approx(s.delta0 * s.gamma, rel=1e-12)


def test_zero_detuning_ratio_is_rejected():
    p = SystemParams(1 / 3, 2 / 3, 0.0, 1e6, 1e-5, 0.1, 1.0, 0.0, 0.1)
    with pytest.raises(ConfigError):
        derive_scales(p).absorption_from_dephasing()


def test_basis_reference_vector():
    pair = to_circular(1, 0)
    assert pair.a_plus == pytest.approx(-1 / math.sqrt(2))
    assert pair.a_minus == pytest.approx(1 / math.sqrt(2))
    zero = to_circular(0, 0)
    assert (zero.a_plus, zero.a_minus) == (0, 0)


@given(amplitude, amplitude)
def test_basis_round_trip_and_intensity(a_x, a_y):
    pair = to_circular(a_x, a_y)
    back = to_linear(pair)
    scale = max(1.0, abs(a_x), abs(a_y))
    assert abs(back[0] - a_x) <= 1e-14 * scale
    assert abs(back[1] - a_y) <= 1e-14 * scale
    assert pair.intensity == pytest.approx(abs(a_x) ** 2 + abs(a_y) ** 2, rel=1e-13, abs=1e-300)


def test_config_round_trip():
    p = parse_config(BASE + "delta0 = 5\n")
    assert derive_scales(p).delta0 == pytest.approx(5.0, rel=1e-14)
    assert p.kappa_over_gamma == 2 and p.delta_c == 4.6


@pytest.mark.parametrize("extra", ["colour = red\n", "delta0 = 5\ng2_hz = 4\ngamma_hz = 1e6\n", ""])
def test_config_rejects_unknown_or_ambiguous(extra):
    with pytest.raises(ConfigError):
        parse_config(BASE + extra)


def test_config_rejects_missing_key():
    text = BASE.replace("s_max = 0.1\n", "") + "delta0 = 5\n"
    with pytest.raises(ConfigError, match="s_max"):
        parse_config(text)


@pytest.mark.parametrize("bad", ["cavity_T = 0\n", "cavity_T = 1.5\n", "n_atoms = 0\n", "s_max = -1\n"])
def test_config_invariants(bad):
    key = bad.split("=")[0].strip()
    lines = [ln for ln in BASE.splitlines() if not ln.startswith(key)]
    with pytest.raises((ConfigError, ValueError)):
        parse_config("\n".join(lines) + "\n" + bad + "delta0 = 5\n")


def test_digest_tracks_working_point():
    p = builtin_params("fig7")
    assert p.digest() == builtin_params("fig8").digest()
    assert p.digest() != p.with_updates(delta_c=5.0).digest()


def test_optional_section_header():
    text = builtin_config_text("fig7")
    assert parse_config("[params]\n" + text) == parse_config(text)
    with pytest.raises(ConfigError):
        parse_config("[other]\n" + text)
