import math

import numpy as np
import pytest

from disslab.fields import SpectralConvention
from disslab.fitting import line_fit
from disslab.shear import (
    CtsState,
    ShearFlow,
    advect_exact,
    cts_step,
    energy_identity_defects,
    evolve_cts,
    shear_correlation,
    tau_d_cts,
    transport_gap_cts,
)


@pytest.fixture(scope="module")
def flow():
    return ShearFlow.sinusoidal()


@pytest.fixture(scope="module")
def conv():
    return SpectralConvention(2, "geometric")


def make_state(conv, nu, modes=None, k1_max=8, grid=64):
    modes = modes or {(1, 0): 1.0, (3, 2): 0.3}
    return CtsState.from_modes(modes, k1_max, grid, nu, conv)


def test_grad_norm(flow):
    assert flow.grad_norm == pytest.approx(2 * math.pi, rel=1e-10)


def test_grid_guard(conv):
    wide = ShearFlow(sin_coeffs=tuple([0.0] * 15 + [1.0]))
    state = CtsState.from_modes({(1, 0): 1.0}, 4, 64, 1e-2, conv)
    with pytest.raises(ValueError, match="under-resolves"):
        cts_step(state, wide, 0.01)


def test_zero_band_excluded(conv):
    with pytest.raises(ValueError):
        CtsState.from_modes({(0, 1): 1.0}, 4, 64, 1e-2, conv)
    state = CtsState.from_modes({(0, 1): 1.0}, 4, 64, 1e-2, conv, include_zero_x_band=True)
    assert state.energy() == pytest.approx(1.0)


def test_inviscid_evolution_is_transport(flow, conv):
    state = make_state(conv, 0.0)
    out = evolve_cts(state, flow, 1.3, dt_target=0.01)
    exact = advect_exact(state, flow, 1.3)
    assert np.max(np.abs(out.data - exact.data)) < 1e-12


def test_pure_heat_band_decay(conv):
    still = ShearFlow()
    state = CtsState.from_modes({(1, 0): 1.0}, 4, 64, 1e-2, conv)
    out = evolve_cts(state, still, 2.0, dt_target=0.01)
    lam = conv.eigenvalue((1, 0))
    assert out.energy() == pytest.approx(math.exp(-2 * 1e-2 * lam * 2.0), rel=1e-10)


def test_heat_with_y_mode(conv):
    still = ShearFlow()
    state = CtsState.from_modes({(2, 3): 1.0}, 4, 64, 1e-2, conv)
    out = evolve_cts(state, still, 0.5, dt_target=0.005)
    lam = conv.eigenvalue((2, 3))
    assert out.energy() == pytest.approx(math.exp(-2 * 1e-2 * lam * 0.5), rel=1e-10)


def test_self_convergence_second_order(flow, conv):
    state = make_state(conv, 1e-2)
    ref = evolve_cts(state, flow, 1.0, dt_target=0.0025)
    err_coarse = np.sqrt(np.sum(np.abs(evolve_cts(state, flow, 1.0, dt_target=0.02).data - ref.data) ** 2))
    err_fine = np.sqrt(np.sum(np.abs(evolve_cts(state, flow, 1.0, dt_target=0.01).data - ref.data) ** 2))
    assert err_coarse / err_fine == pytest.approx(4.0, rel=0.4)


def test_energy_identity_defect_order(flow, conv):
    state = make_state(conv, 1e-2)
    d1 = float(np.sum(energy_identity_defects(state, flow, 1.0, 0.02)))
    d2 = float(np.sum(energy_identity_defects(state, flow, 1.0, 0.01)))
    assert 2.5 < d1 / d2 < 6.0


def test_advection_is_isometry(flow, conv):
    state = make_state(conv, 1e-2)
    out = advect_exact(state, flow, 0.37)
    assert out.energy() == pytest.approx(state.energy(), rel=1e-13)


def test_trivial_decay_bound(flow, conv):
    state = make_state(conv, 1e-2)
    lam1 = state.lambda_1()
    out = evolve_cts(state, flow, 2.0, dt_target=0.01)
    assert out.energy() <= state.energy() * math.exp(-2 * 1e-2 * lam1 * 2.0) * (1 + 1e-9)


def test_transport_gap_inequality(flow, conv):
    state = make_state(conv, 1e-3, modes={(1, 0): 1.0})
    res = transport_gap_cts(state, flow, 1e-3, 2.0)
    assert res["gap_sq"] <= res["bound"]
    assert res["gap_sq"] > 0


def test_transport_gap_zero_without_diffusion(flow, conv):
    state = make_state(conv, 0.0)
    res = transport_gap_cts(state, flow, 0.0, 1.0)
    assert res["gap_sq"] < 1e-25


def test_transport_gap_short_time(flow, conv):
    state = make_state(conv, 1e-3)
    r1 = transport_gap_cts(state, flow, 1e-3, 0.01)
    r2 = transport_gap_cts(state, flow, 1e-3, 0.02)
    # gap^2 = O(t^2): quadrupling under doubling; bound stays order one
    assert r2["gap_sq"] / r1["gap_sq"] == pytest.approx(4.0, rel=0.3)
    assert r1["bound"] > 1e-5


def test_tau_d_cts_pure_heat_band(conv, rng):
    still = ShearFlow()
    tau = tau_d_cts(still, 1e-2, conv, k1_max=2, grid_size=32, rng=rng)
    lam1 = conv.eigenvalue((1, 0))
    assert tau == pytest.approx(1.0 / (1e-2 * lam1), rel=0.02)


def test_tau_d_cts_enhanced_by_shear(flow, conv, rng):
    tau_shear = tau_d_cts(flow, 1e-3, conv, k1_max=16, grid_size=64, rng=rng)
    lam1 = conv.eigenvalue((1, 0))
    tau_heat = 1.0 / (1e-3 * lam1)
    assert tau_shear < 0.25 * tau_heat


def test_tau_d_cts_range_guards(flow, conv, rng):
    with pytest.raises(ValueError):
        tau_d_cts(flow, 1e-5, conv, rng=rng)
    with pytest.raises(ValueError):
        tau_d_cts(flow, 1e-2, conv, k1_max=64, rng=rng)


def test_stationary_phase_correlation_decay(flow, conv):
    # |<f o phi_t, f>| for the lowest band is a Bessel-type integral whose
    # peak envelope decays like t^{-1/2} for nondegenerate critical points
    state = CtsState.from_modes({(1, 0): 1.0}, 2, 64, 0.0, conv)
    times = np.linspace(0.25, 24.0, 2000)
    corr = shear_correlation(state, flow, state, times)
    # upper envelope over windows
    peaks_t, peaks_v = [], []
    window = 125
    for i in range(0, len(times) - window, window):
        j = i + int(np.argmax(corr[i : i + window]))
        peaks_t.append(times[j])
        peaks_v.append(corr[j])
    fit = line_fit(np.log(peaks_t), np.log(peaks_v))
    assert 0.35 <= -fit.slope <= 0.65
