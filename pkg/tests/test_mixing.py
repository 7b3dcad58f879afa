import math

import numpy as np
import pytest

from disslab.fields import SpectralField, random_sparse_field, sobolev_norm
from disslab.fitting import line_fit
from disslab.mixing import (
    EnvelopeInfeasible,
    RateFunction,
    fit_rate,
    strong_envelope,
    transfer_exponents,
    transfer_rate,
    weak_cesaro,
    weak_rate_envelope,
)
from disslab.toral import ToralAutomorphism

LOG_LAM = math.log((3 + math.sqrt(5)) / 2)


# ---------------------------------------------------------------------------
# rate functions
# ---------------------------------------------------------------------------

def test_rate_function_kinds():
    h = RateFunction.power(2.0, 1.5)
    assert h(4.0) == pytest.approx(2.0 * 4.0**-1.5)
    assert h.inverse(h(4.0)) == pytest.approx(4.0)
    e = RateFunction.exponential(3.0, 0.5)
    assert e(2.0) == pytest.approx(3.0 * math.exp(-1.0))
    assert e.inverse(e(2.0)) == pytest.approx(2.0)
    t = RateFunction.tabulated([1, 2, 4, 8], [1.0, 0.5, 0.25, 0.125])
    assert t(2.0) == pytest.approx(0.5)
    assert t(3.0) == pytest.approx(1.0 / 3.0, rel=1e-12)  # log-log chord is exact on 1/t
    assert t.inverse(0.25) == pytest.approx(4.0)


def test_rate_function_validation():
    with pytest.raises(ValueError):
        RateFunction.power(1.0, 1.0, alpha=0.0, beta=1.0)  # strong needs alpha > 0
    with pytest.raises(ValueError):
        RateFunction.tabulated([1, 2], [0.5, 0.7])  # increasing
    with pytest.raises(ValueError):
        RateFunction.tabulated([1, 4], [1.0, 0.1], mode="weak", alpha=0.0)  # below 1/sqrt(n)
    RateFunction.tabulated([1, 4], [1.0, 0.5], mode="weak", alpha=0.0)  # exactly the floor


# ---------------------------------------------------------------------------
# strong envelope
# ---------------------------------------------------------------------------

def test_envelope_at_zero(cat):
    env = strong_envelope(cat, 1.0, 1.0, 4)
    assert env.values[0] == pytest.approx(1.0)


def test_envelope_requires_conditions():
    shear_like = ToralAutomorphism(((1, 1), (0, 1)))
    with pytest.raises(ValueError):
        strong_envelope(shear_like, 1.0, 1.0, 4)


def test_envelope_slope_alpha_beta_11(cat):
    env = strong_envelope(cat, 1.0, 1.0, 12)
    fit = env.slope_fit(3, 12)
    assert fit.slope == pytest.approx(-LOG_LAM, rel=0.10)


def test_envelope_slope_alpha_2_beta_1(cat):
    # (d-1) alpha > beta: the decay exponent saturates at beta/(d-1) = 1
    env = strong_envelope(cat, 2.0, 1.0, 12)
    fit = env.slope_fit(3, 12)
    assert fit.slope == pytest.approx(-LOG_LAM, rel=0.10)


def test_envelope_monotone(cat):
    env = strong_envelope(cat, 1.0, 1.0, 12)
    assert np.all(np.diff(env.values[1:]) <= 1e-15)


def test_envelope_strict_epsilon(cat):
    with pytest.raises(EnvelopeInfeasible) as err:
        strong_envelope(cat, 1.0, 1.0, 12, epsilon=1e-3, strict=True)
    assert err.value.epsilon_feasible > 1e-3


def test_envelope_dominates_correlations(cat, lattice2, rng):
    env = strong_envelope(cat, 1.0, 1.0, 8)
    for _ in range(50):
        f = random_sparse_field(lattice2, rng, n_modes=4, kmax=5)
        g = random_sparse_field(lattice2, rng, n_modes=4, kmax=5)
        na, nb = sobolev_norm(f, 1.0), sobolev_norm(g, 1.0)
        current = dict(f.coefficients)
        for n in range(9):
            corr = sum(a * g.coefficients.get(m, 0j).conjugate() for m, a in current.items())
            assert abs(corr) <= env.values[n] * na * nb * (1 + 1e-9)
            current = {cat.push_mode(m): a for m, a in current.items()}


# ---------------------------------------------------------------------------
# weak rates
# ---------------------------------------------------------------------------

def test_cesaro_single_mode_exact(cat, lattice2):
    f = SpectralField(lattice2, {(1, 0): 1.0})
    vals = weak_cesaro(cat, f, f, 200)
    ns = np.arange(1, 201)
    assert np.max(np.abs(vals * np.sqrt(ns) - 1.0)) < 1e-14


def test_cesaro_first_term_is_inner_product(cat, lattice2):
    f = SpectralField(lattice2, {(1, 0): 1.0, (0, 1): 0.5})
    g = SpectralField(lattice2, {(1, 0): 2.0})
    vals = weak_cesaro(cat, f, g, 1)
    assert vals[0] == pytest.approx(2.0)


def test_cesaro_disjoint_orbits(cat, lattice2):
    f = SpectralField(lattice2, {(1, 0): 1.0})
    g = SpectralField(lattice2, {(1, 1): 1.0})  # never hit by the (1,0) orbit
    assert np.max(weak_cesaro(cat, f, g, 60)) == 0.0


def test_cesaro_nonincreasing_and_floored(cat, lattice2, rng):
    f = random_sparse_field(lattice2, rng, n_modes=4, kmax=4)
    vals = weak_cesaro(cat, f, f, 100)
    assert np.all(np.diff(vals) <= 1e-12)
    ns = np.arange(1, 101)
    floor = f.norm_sq() / np.sqrt(ns)
    assert np.all(vals >= floor * (1 - 1e-12))


@pytest.mark.parametrize("beta,target", [(2.0, 0.5), (0.5, 0.25)])
def test_weak_envelope_regimes(beta, target):
    ns = np.unique(np.round(np.logspace(1.5, 5, 25)).astype(int))
    vals = weak_rate_envelope(2, beta, ns)
    fit = line_fit(np.log(ns), np.log(vals))
    assert -fit.slope == pytest.approx(target, rel=0.15)


# ---------------------------------------------------------------------------
# rate transfer
# ---------------------------------------------------------------------------

def test_transfer_identity():
    h = RateFunction.exponential(2.0, 0.7, 1.0, 1.0)
    out = transfer_rate(h, 1.0, 1.0, 1.0)
    assert out.kind == "exponential" and out.params == h.params


def test_transfer_exponent_hand_values():
    assert transfer_exponents(1, 1, 0.5, 0.5) == pytest.approx((0.25, 0.25))
    assert transfer_exponents(1, 2, 2, 1) == pytest.approx((0.75, 0.5))
    assert transfer_exponents(2, 1, 1, 3) == pytest.approx((1.25, 0.5))


def test_transfer_quarter_power():
    h = RateFunction.exponential(1.0, 0.8, 1.0, 1.0)
    out = transfer_rate(h, 0.5, 0.5, 1.0)
    for t in (1.0, 5.0, 10.0):
        assert out(t) == pytest.approx(h(t) ** 0.25, rel=1e-12)


def test_transfer_exponential_decay_constant():
    h = RateFunction.exponential(2.0, 0.7, 1.0, 1.0)
    out = transfer_rate(h, 0.5, 0.5, 2.0)
    ts = [1.0, 5.0, 10.0]
    measured = -(math.log(out(ts[2])) - math.log(out(ts[0]))) / (ts[2] - ts[0])
    assert measured == pytest.approx(0.25 * 0.7, rel=0.01)


def test_transfer_rejects_zero_exponents():
    h = RateFunction.exponential(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        transfer_rate(h, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# model selection
# ---------------------------------------------------------------------------

def test_fit_rate_exponential():
    ns = np.arange(1, 12)
    vals = 4.0 * 2.0 ** (-ns.astype(float))
    fit = fit_rate(ns, vals)
    assert fit.kind == "exponential"
    assert fit.params[1] == pytest.approx(math.log(2), rel=0.01)


def test_fit_rate_power():
    ns = np.arange(1, 12)
    vals = 3.0 / ns.astype(float)
    fit = fit_rate(ns, vals)
    assert fit.kind == "power"
    assert fit.params[1] == pytest.approx(1.0, rel=0.01)


def test_fit_rate_from_envelope(cat):
    env = strong_envelope(cat, 1.0, 1.0, 12)
    fit = fit_rate(env.n_values[1:], env.values[1:])
    assert fit.kind == "exponential"
    assert fit.params[1] == pytest.approx(LOG_LAM, rel=0.1)


def test_fit_rate_rejects_increasing():
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3, 4, 5], [1.0, 0.9, 1.1, 0.7, 0.6])
