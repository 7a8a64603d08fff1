import numpy as np
import pytest
from scipy.linalg import solve_sylvester

from polsqz.figures import builtin_params
from polsqz.fluct_full import (
    build_drift_diffusion, build_from_means, close_basis, output_spectrum, stability_eigen,
)
from polsqz.model import PhysicsError, dimensionless_params
from polsqz.steady import linear_branch_states

from conftest import stable_linear

# closed single-atom operator set; sigma22 is eliminated by population conservation
CLOSED_BASIS = ((1, 4), (4, 1), (2, 3), (3, 2), (1, 1), (2, 2), (3, 3), (4, 4))


def exact_covariance(ops, rho):
    """<E_ab E_cd> - <E_ab><E_cd> for one atom, with E_ab E_cd = delta_bc E_ad."""
    mean = lambda a, b: rho[b - 1, a - 1]
    return np.array([[(mean(a, d) if b == c else 0) - mean(a, b) * mean(c, d)
                      for (c, d) in ops] for (a, b) in ops])


def test_closure_fixture(fig7_params):
    basis = close_basis(fig7_params)
    assert basis.atomic == CLOSED_BASIS
    assert (2, 2) not in basis.dynamic
    again = close_basis(fig7_params, seed=list(basis.atomic))
    assert again.atomic == basis.atomic


def test_uncoupled_blocks():
    params = dimensionless_params(0.0, 20.0, delta_c=1.5, s_max=0.2, kappa_over_gamma=2)
    state = linear_branch_states(params.delta_c, params.s_max, params)[0]
    dd = build_drift_diffusion(state, params)
    na = dd.n_atomic
    assert np.abs(dd.drift[:na, na:]).max() == 0
    assert np.abs(dd.drift[na:, :na]).max() == 0
    field = np.sort_complex(np.linalg.eigvals(dd.drift[na:, na:]))
    expected = np.sort_complex(np.array([-2 * (1 + 1.5j), -2 * (1 - 1.5j)] * 2))
    assert field == pytest.approx(expected, abs=1e-12)


def test_zero_drive_dipole_rates():
    params = dimensionless_params(5.0, 20.0, kappa_over_gamma=2)
    rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    dd = build_from_means(rho, 0.0, 0.0, params)
    ops = dd.basis.dynamic
    for op, rate in [((1, 4), -(1 + 20j)), ((4, 1), -(1 - 20j)),
                     ((2, 3), -(1 + 20j)), ((3, 2), -(1 - 20j))]:
        i = ops.index(op)
        assert dd.drift[i, i] == pytest.approx(rate, abs=1e-14)
        others = [j for j in range(dd.n_atomic) if j != i]
        assert np.abs(dd.drift[i, others]).max() < 1e-14


def test_non_stationary_means_are_rejected(fig7_params):
    rho = np.diag([0.7, 0.3, 0.0, 0.0]).astype(complex)
    with pytest.raises(PhysicsError):
        build_from_means(rho, 1.0, -1.0, fig7_params)


def test_diffusion_positive_and_conjugation_symmetric(fig7_params, fig7_state):
    dd = build_drift_diffusion(fig7_state, fig7_params)
    pair = dd.basis.conjugate_index()
    assert dd.drift[np.ix_(pair, pair)] == pytest.approx(np.conj(dd.drift), abs=1e-13)
    normal = dd.diffusion[:, pair]
    herm = 0.5 * (normal + normal.conj().T)
    assert np.linalg.eigvalsh(herm).min() > -1e-12


def test_regression_covariance_matches_single_atom(fig7_params, fig7_state):
    # with the fields frozen the atomic block is exactly linear, so its stationary
    # covariance must equal the exact one-atom operator covariance
    dd = build_drift_diffusion(fig7_state, fig7_params)
    na = dd.n_atomic
    a, d = dd.drift[:na, :na], dd.diffusion[:na, :na]
    cov = solve_sylvester(a, a.T, -d)
    ref = exact_covariance(dd.basis.dynamic, dd.rho)
    assert np.abs(cov - ref).max() < 1e-12


def test_ground_spin_noise_strength():
    # effective <F_z F_z> = N gamma_p / 2 in the weak-saturation limit
    base = builtin_params("fig7").with_updates(delta_c=0.0, s_max=1e-3)
    state = linear_branch_states(base.delta_c, base.s_max, base)[0]
    dd = build_drift_diffusion(state, base)
    na, ops = dd.n_atomic, dd.basis.dynamic
    a, d = dd.drift[:na, :na], dd.diffusion[:na, :na]
    cov = solve_sylvester(a, a.T, -d)
    spin = np.zeros(na)
    # J_z = (s11 - s22) / 2 with s22 = -(s11 + s33 + s44)
    spin[ops.index((1, 1))] += 1.0
    for op in ((1, 1), (3, 3), (4, 4)):
        spin[ops.index(op)] += 1.0
    spin /= 2
    variance = (spin @ cov @ spin).real
    eig = np.linalg.eigvals(a)
    slow = -eig[np.argmin(np.abs(eig.real))].real
    gamma_p = base.gamma_perp * state.s_x
    assert 2 * slow * variance == pytest.approx(gamma_p / 2, rel=1e-2)


def test_unstable_point_raises(fig3_params):
    states = linear_branch_states(1.0, fig3_params.s_max, fig3_params)
    state = next(s for s in states if s.stability.value == "unstable")
    dd = build_drift_diffusion(state, fig3_params.with_updates(delta_c=1.0))
    assert not stability_eigen(dd)[0]
    with pytest.raises(PhysicsError, match="stability_eigen"):
        output_spectrum(dd, "y")


def test_eigenvalues_sorted(fig7_params, fig7_state):
    stable, eig = stability_eigen(build_drift_diffusion(fig7_state, fig7_params))
    assert stable
    assert list(eig.real) == sorted(eig.real)


@pytest.mark.parametrize("mode", ["x", "y"])
def test_empty_cavity_is_vacuum(mode):
    params = dimensionless_params(0.0, 20.0, delta_c=0.7, s_max=0.3, kappa_over_gamma=2)
    state = linear_branch_states(params.delta_c, params.s_max, params)[0]
    spec = output_spectrum(build_drift_diffusion(state, params), mode)
    assert np.abs(spec.power - 1).max() < 1e-10


@pytest.mark.parametrize("mode", ["x", "y"])
def test_spectrum_properties(fig7_params, fig7_state, mode):
    dd = build_drift_diffusion(fig7_state, fig7_params)
    spec = output_spectrum(dd, mode)
    power = spec.power
    assert np.all(power > 0)
    assert np.all(spec.s_min[:, None] <= power + 1e-12)
    assert np.all(power <= spec.s_max_trace[:, None] + 1e-12)
    half = power.shape[1] // 2
    assert np.all(power[:, :half] * power[:, half:] >= 1 - 1e-9)
    assert spec.at_angle(np.pi + 0.3) == pytest.approx(spec.at_angle(0.3), rel=1e-12)
    far = output_spectrum(dd, mode, omega_grid=[1e6])
    assert np.abs(far.power - 1).max() < 1e-4


def test_spectrum_csv_layout(fig7_params, fig7_state):
    spec = output_spectrum(build_drift_diffusion(fig7_state, fig7_params), "y", np.linspace(0, 1, 3))
    lines = spec.to_csv().splitlines()
    assert lines[0] == "omega,theta_opt,s_min,s_max_trace"
    assert len(lines) == 4


def test_fig8_squeezing_order():
    base = builtin_params("fig8")
    minima = []
    for dc in (4.6, 5.78, 6.79):
        params = base.with_updates(delta_c=dc)
        dd = build_drift_diffusion(stable_linear(params), params)
        minima.append(output_spectrum(dd, "y").global_minimum()[0])
    assert minima[0] < minima[1] < minima[2]
