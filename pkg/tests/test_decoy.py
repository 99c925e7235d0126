import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prcs_tomo import decoy
from prcs_tomo import quantum_math as qm
from prcs_tomo.errors import AlignmentError, DomainError, IllConditionedError

PAPER_MUS = (0.178, 0.436, 2.20)


def exact_curves(mus, x):
    return qm.prcs_marginal(0.0, x), [qm.prcs_marginal(m, x) for m in mus]


def test_single_mu_weights():
    w = decoy.decoy_weights(decoy.MeanPhotonSet([0.178]))
    assert w.lambdas[0] == pytest.approx(-1 / 0.178, rel=1e-14)
    assert w.lambdas[1] == pytest.approx(math.exp(0.178) / 0.178, rel=1e-14)
    assert w.lambdas[0] == pytest.approx(-5.61798, abs=1e-5)
    assert w.lambdas[1] == pytest.approx(6.71250, abs=1e-5)


@pytest.mark.parametrize("L,trace", [(1, 1.095), (2, 0.985), (3, 1.013)])
def test_weight_sums_match_table_one(L, trace):
    w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS[:L]))
    assert w.trace == pytest.approx(trace, abs=1e-3)


def test_weights_sign_structure():
    for L in (1, 2, 3):
        lam = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS[:L])).lambdas
        assert lam[0] < 0
        signs = np.sign(lam[1:])
        assert signs[0] > 0 and np.all(signs[1:] == -signs[:-1])


@pytest.mark.parametrize("seed", range(20))
def test_single_mu_reduction(seed):
    mu = np.random.default_rng(seed).uniform(0.01, 5.0)
    lam = decoy.decoy_weights(decoy.MeanPhotonSet([mu])).lambdas
    np.testing.assert_allclose(lam, [-1 / mu, math.exp(mu) / mu], rtol=1e-12)


def test_weights_kill_low_photon_numbers():
    # sum_j lambda_j P_mu_j(k) = delta_k1 for k = 0..L
    for L in (1, 2, 3):
        mus = PAPER_MUS[:L]
        w = decoy.decoy_weights(decoy.MeanPhotonSet(mus))
        for k in range(L + 1):
            c = sum(l * qm.poisson_weight(m, k) for l, m in zip(w.lambdas, (0.0,) + mus))
            assert c == pytest.approx(1.0 if k == 1 else 0.0, abs=1e-12)


def test_mean_photon_set_validation():
    with pytest.raises(DomainError):
        decoy.MeanPhotonSet([])
    with pytest.raises(DomainError):
        decoy.MeanPhotonSet([0.4, 0.2])
    with pytest.raises(DomainError):
        decoy.MeanPhotonSet([0.0, 0.2])
    with pytest.raises(IllConditionedError):
        decoy.MeanPhotonSet([0.2, 0.2005])
    with pytest.raises(DomainError):
        decoy.MeanPhotonSet([0.2], [-1.0])
    decoy.MeanPhotonSet([0.2, 0.2005], separation_floor=1e-4)


def test_estimate_examples(x_wide):
    y1 = qm.single_photon_marginal(x_wide)
    w1 = decoy.decoy_weights(decoy.MeanPhotonSet([0.178]))
    est = decoy.estimate_y1(w1, *exact_curves([0.178], x_wide))
    assert np.all(est.values >= y1)
    assert np.sum(est.values) * 0.01 == pytest.approx(w1.trace, abs=1e-6)
    np.testing.assert_array_equal(est.x_grid, x_wide)

    w3 = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS))
    at0 = decoy.estimate_y1(w3, *exact_curves(PAPER_MUS, np.array([0.0, 0.01]))).values[0]
    assert -1e-3 <= at0 <= 0.0 + 1e-2


def test_estimate_rejects_grid_mismatch():
    w = decoy.decoy_weights(decoy.MeanPhotonSet([0.178]))
    x = np.linspace(-3, 3, 61)
    with pytest.raises(AlignmentError):
        decoy.estimate_y1(w, qm.prcs_marginal(0, x), [qm.prcs_marginal(0.178, x + 0.01)])
    with pytest.raises(AlignmentError):
        decoy.estimate_y1(w, qm.prcs_marginal(0, x), [])


@pytest.mark.parametrize("L", [1, 2, 3])
def test_bound_parity(L, x_wide):
    w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS[:L]))
    diff = decoy.estimate_y1(w, *exact_curves(PAPER_MUS[:L], x_wide)).values - qm.single_photon_marginal(x_wide)
    if L % 2:
        assert diff.min() >= -1e-9
    else:
        assert diff.max() <= 1e-9


def test_convergence_with_more_intensities(x_wide):
    y1 = qm.single_photon_marginal(x_wide)
    errs = []
    for L in (1, 3):
        w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS[:L]))
        errs.append(np.abs(decoy.estimate_y1(w, *exact_curves(PAPER_MUS[:L], x_wide)).values - y1).max())
    assert errs[1] < errs[0]


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_scale_covariance(c):
    x = np.linspace(-4, 4, 81)
    w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS))
    vac, curves = exact_curves(PAPER_MUS, x)
    base = decoy.estimate_y1(w, vac, curves).values
    scaled = [qm.MarginalDensity(x, c * m.values) for m in [vac, *curves]]
    np.testing.assert_allclose(decoy.estimate_y1(w, scaled[0], scaled[1:]).values, c * base,
                               rtol=1e-12, atol=1e-15 * c)


# --- error propagation ----------------------------------------------------------

def test_errors_vanish_without_uncertainty(x_wide):
    w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS))
    vac, curves = exact_curves(PAPER_MUS, x_wide)
    sig = decoy.propagate_errors(w, vac, curves, [0, 0, 0], [np.inf] * 4)
    assert np.all(sig == 0)
    sig = decoy.propagate_errors(w, vac, curves, [0, 0, 0], None)
    assert np.all(sig == 0)


def test_errors_largest_at_center(x_wide):
    w = decoy.decoy_weights(decoy.MeanPhotonSet(PAPER_MUS, (0.002, 0.004, 0.01)))
    vac, curves = exact_curves(PAPER_MUS, x_wide)
    sig = decoy.propagate_errors(w, vac, curves, histogram_counts=[1e9] * 4)
    assert sig[600] > sig[800]  # x = 0 vs x = 2


def test_single_mu_sensitivity_matches_analytic_derivative(x_wide):
    mu = 0.436
    vac, (cur,) = exact_curves([mu], x_wide)
    # d/dmu of (X_mu e^mu - X_0) / mu with X held fixed
    analytic = cur.values * math.exp(mu) * (mu - 1) / mu**2 + vac.values / mu**2
    dlam = decoy.lambda_sensitivities([mu])[:, 0]
    numeric = dlam[0] * vac.values + dlam[1] * cur.values
    np.testing.assert_allclose(numeric, analytic, rtol=1e-6, atol=1e-12)
    sig = decoy.propagate_errors(decoy.decoy_weights(decoy.MeanPhotonSet([mu])), vac, [cur], [0.01])
    np.testing.assert_allclose(sig, np.abs(analytic) * 0.01, rtol=1e-6, atol=1e-14)


def test_histogram_term_poisson_form():
    x = np.linspace(-3, 3, 61)
    w = decoy.decoy_weights(decoy.MeanPhotonSet([0.5]))
    vac, curves = exact_curves([0.5], x)
    sig = decoy.propagate_errors(w, vac, curves, [0.0], [1000, 4000])
    dx = 0.1
    ref = np.sqrt(w.lambdas[0] ** 2 * vac.values / (1000 * dx) + w.lambdas[1] ** 2 * curves[0].values / (4000 * dx))
    np.testing.assert_allclose(sig, ref, rtol=1e-12)


def test_toggles_and_zero_counts():
    x = np.linspace(-3, 3, 61)
    w = decoy.decoy_weights(decoy.MeanPhotonSet([0.5], [0.01]))
    vac, curves = exact_curves([0.5], x)
    both = decoy.propagate_errors(w, vac, curves, histogram_counts=[1000, 1000])
    h = decoy.propagate_errors(w, vac, curves, histogram_counts=[1000, 1000], include_mu=False)
    m = decoy.propagate_errors(w, vac, curves, histogram_counts=[1000, 1000], include_histogram=False)
    np.testing.assert_allclose(both**2, h**2 + m**2, rtol=1e-12)
    with pytest.raises(DomainError):
        decoy.propagate_errors(w, vac, curves, histogram_counts=[0, 1000])
