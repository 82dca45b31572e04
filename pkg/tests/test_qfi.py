import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11nco import fock, oracle, qfi
from su11nco.errors import DomainError
from su11nco.model import PA_THEN_PS, PS_THEN_PA, SchemeSpec
from su11nco.qfi import cq_of_lambda, cq_oracle, normalization_B, qfi_ideal, qfi_lossy

PRESETS = (PA_THEN_PS, PS_THEN_PA)


def test_qcrb_examples():
    assert qfi.qcrb(4) == 0.5
    assert qfi.qcrb(1, v=4) == 0.5
    with pytest.raises(DomainError):
        qfi.qcrb(0.0)
    with pytest.raises(DomainError):
        qfi.qcrb(1.0, v=0)


def test_vacuum_has_no_information():
    assert qfi_ideal(PA_THEN_PS, 0.0, 0.0).F == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("scheme", PRESETS)
def test_ideal_matches_oracle(scheme):
    a = qfi_ideal(scheme, 1.0, 1.0).F
    assert a == pytest.approx(qfi_ideal(scheme, 1.0, 1.0, backend="oracle").F, rel=1e-8)


def test_ideal_ordering():
    assert qfi_ideal(PA_THEN_PS, 1.0, 1.0).F >= qfi_ideal(PS_THEN_PA, 1.0, 1.0).F


def test_number_moments_examples():
    assert qfi.n_moments_analytic(0.0, 1.3, 1) == pytest.approx(1.3**2)
    assert qfi.n_moments_analytic(0.0, 1.3, 2) == pytest.approx(1.3**2 + 1.3**4)
    assert qfi.n_moments_analytic(1.0, 0.0, 1) == pytest.approx(math.sinh(1) ** 2)
    psi = oracle.first_opa_state(1.0, 1.0, 1e-16)
    for k in (1, 2, 3, 4):
        assert qfi.n_moments_analytic(1.0, 1.0, k) == pytest.approx(fock.number_moments(psi, 0, k), rel=1e-10)


def test_normalization_B():
    n1, n2 = qfi.n_moments_analytic(0.8, 1.2, 1), qfi.n_moments_analytic(0.8, 1.2, 2)
    assert normalization_B(PA_THEN_PS, 1.0, 0.8, 1.2) == pytest.approx((1 + 2 * n1 + n2) ** -0.5)
    assert normalization_B(PA_THEN_PS, 1.0, 0.0, 1.0) == pytest.approx(5**-0.5)
    for scheme in PRESETS:
        m = oracle.post_nco_moments(scheme, 1.0, 1.0, 0.6)
        assert normalization_B(scheme, 0.6, 1.0, 1.0) == pytest.approx(m.norm_constant, rel=1e-6)


@pytest.mark.parametrize("scheme", PRESETS)
def test_unit_transmission_collapses(scheme):
    ideal = qfi_ideal(scheme, 1.0, 1.0).F
    for lam in (-1.0, -0.5, 0.0, 0.7):
        assert cq_of_lambda(scheme, 1.0, 1.0, 1.0, lam) == pytest.approx(ideal, rel=1e-10)
    r = qfi_lossy(scheme, 1.0, 1.0, 1.0)
    assert r.flag == "flat" and r.lambda_star is None
    assert r.F == pytest.approx(ideal, rel=1e-10)


def test_u_coefficients_at_unit_transmission():
    u = qfi.u_coefficients(1.0, -0.3)
    assert [u[k] for k in range(1, 8)] == pytest.approx([1, 2, 1, 0, 1, 2, 1], abs=1e-14)


@pytest.mark.parametrize("scheme", PRESETS)
def test_total_absorption(scheme):
    assert abs(cq_of_lambda(scheme, 1e-9, 1.0, 1.0, 0.0)) < 1e-6
    assert qfi_lossy(scheme, 1e-9, 1.0, 1.0).F < 1e-6
    # with lambda = -1 the lost photons carry the phase, so the bound stays finite
    assert cq_of_lambda(scheme, 1e-9, 1.0, 1.0, -1.0) > 1


@pytest.mark.parametrize("scheme", PRESETS)
@pytest.mark.parametrize("lam", [0.0, -1.0, -0.5])
def test_closed_form_matches_kraus_purification(scheme, lam):
    a = cq_of_lambda(scheme, 0.6, 1.0, 1.0, lam)
    assert a == pytest.approx(cq_oracle(scheme, 0.6, 1.0, 1.0, lam), rel=1e-6)


def test_oracle_backend_covers_superpositions():
    s = SchemeSpec.superposition(0.5)
    r = qfi_lossy(s, 0.7, 1.0, 1.0, backend="oracle")
    assert r.backend == "oracle" and r.F > 0
    with pytest.raises(DomainError):
        qfi_lossy(s, 0.7, 1.0, 1.0)


def test_kraus_completeness():
    for eta in (0.0, 0.3, 0.9, 1.0):
        assert qfi.kraus_completeness_error(qfi.kraus_operators(eta, 0.4, -0.5, 30)) < 1e-10


def test_crossover():
    diff = lambda eta: qfi_lossy(PS_THEN_PA, eta, 1.0, 1.0).F - qfi_lossy(PA_THEN_PS, eta, 1.0, 1.0).F
    assert diff(0.5) > 0 and diff(0.8) > 0
    assert diff(0.95) < 0


lossy_st = dict(
    eta=st.floats(0.05, 0.99), g=st.floats(0.2, 1.2), alpha=st.floats(0.2, 2.0), scheme=st.sampled_from(PRESETS)
)


@settings(max_examples=30, deadline=None)
@given(**lossy_st, lam=st.floats(-2.0, 1.0))
def test_cq_is_exactly_quadratic(eta, g, alpha, scheme, lam):
    a, b, c = qfi.cq_quadratic(scheme, eta, g, alpha)
    direct = cq_of_lambda(scheme, eta, g, alpha, lam)
    assert direct == pytest.approx(a * lam**2 + b * lam + c, rel=1e-8, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(**lossy_st)
def test_minimum_below_endpoints(eta, g, alpha, scheme):
    r = qfi_lossy(scheme, eta, g, alpha)
    c0, c1 = r.cq_at_endpoints
    assert r.F <= c0 * (1 + 1e-12) and r.F <= c1 * (1 + 1e-12)
    assert r.F >= 0


@settings(max_examples=20, deadline=None)
@given(g=st.floats(0.2, 1.2), alpha=st.floats(0.2, 2.0), scheme=st.sampled_from(PRESETS))
def test_bound_grows_with_transmission(g, alpha, scheme):
    etas = np.linspace(0.1, 1.0, 10)
    F = [qfi_lossy(scheme, float(e), g, alpha).F for e in etas]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(F, F[1:]))
