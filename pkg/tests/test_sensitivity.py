import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11nco import qfi, sensitivity
from su11nco.errors import DegenerateStateError, DivergentSensitivityError, DomainError
from su11nco.model import PA_THEN_PS, PS_THEN_PA, STANDARD, InterferometerParams, SchemeSpec
from su11nco.sensitivity import (
    dmeanX_dphi,
    homodyne_analytic,
    mean_photon_inside,
    optimal_phase,
    phase_sensitivity,
)

BASE = InterferometerParams(g=1.0, alpha=1.0, phi=0.6, T=1.0)

params_st = st.builds(
    InterferometerParams,
    g=st.floats(0.2, 1.2),
    alpha=st.floats(0.3, 2.0),
    phi=st.floats(0.1, 1.4),
    T=st.sampled_from([1.0, 0.7, 0.5]),
)


def test_vacuum_input_has_zero_mean():
    for phi in (0.2, 0.9, 2.0):
        r = homodyne_analytic(PA_THEN_PS, BASE.with_(alpha=0.0, phi=phi))
        assert abs(r.mean_X) < 1e-13


@pytest.mark.parametrize("scheme,T,rtol", [(PS_THEN_PA, 1.0, 1e-8), (PA_THEN_PS, 0.7, 1e-6)])
def test_analytic_matches_oracle(scheme, T, rtol):
    p = BASE.with_(T=T)
    a = phase_sensitivity(scheme, p)
    o = phase_sensitivity(scheme, p, backend="oracle")
    assert a.mean_X == pytest.approx(o.mean_X, rel=rtol)
    assert a.mean_X2 == pytest.approx(o.mean_X2, rel=rtol)
    assert a.delta_phi == pytest.approx(o.delta_phi, rel=rtol)


def test_no_signal_diverges():
    p = InterferometerParams(g=0.0, alpha=0.0, phi=0.6)
    assert dmeanX_dphi(STANDARD, p) == 0
    with pytest.raises(DivergentSensitivityError):
        phase_sensitivity(STANDARD, p)


def test_ordering_at_fig2_point():
    d = [phase_sensitivity(s, BASE).delta_phi for s in (PS_THEN_PA, PA_THEN_PS, STANDARD)]
    assert d[0] < d[1] < d[2]


@pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
def test_superposition_between_boundaries(t):
    lo, hi = sorted(phase_sensitivity(s, BASE).delta_phi for s in (PA_THEN_PS, PS_THEN_PA))
    assert lo <= phase_sensitivity(SchemeSpec.superposition(t), BASE).delta_phi <= hi


def test_photon_number_examples():
    assert mean_photon_inside(PA_THEN_PS, InterferometerParams(g=0.0)).N == pytest.approx(2.0, rel=1e-13)
    # a a^dag |0> = |0>, finite and empty
    assert mean_photon_inside(PA_THEN_PS, InterferometerParams(g=0.0, alpha=0.0)).N == 0.0
    with pytest.raises(DegenerateStateError):
        mean_photon_inside(PS_THEN_PA, InterferometerParams(g=0.0, alpha=0.0))
    for scheme in (PA_THEN_PS, PS_THEN_PA):
        a = mean_photon_inside(scheme, BASE).N
        o = mean_photon_inside(scheme, BASE, backend="oracle").N
        assert a == pytest.approx(o, rel=1e-8)


def test_limits():
    assert sensitivity.sql(4) == 0.5 and sensitivity.hl(4) == 0.25
    assert sensitivity.sql(1) == sensitivity.hl(1) == 1
    with pytest.raises(DomainError):
        sensitivity.sql(0)


def test_qcrb_bounds_homodyne():
    F = qfi.qfi_ideal(PS_THEN_PA, 1.0, 1.0).F
    assert qfi.qcrb(F) < phase_sensitivity(PS_THEN_PA, BASE).delta_phi


def test_optimal_phase_is_a_minimum():
    best = optimal_phase(PS_THEN_PA, BASE.with_(g=0.7))
    for dphi in (-0.02, 0.02):
        assert phase_sensitivity(PS_THEN_PA, BASE.with_(g=0.7, phi=best.phi + dphi)).delta_phi >= best.delta_phi


def test_derivative_matches_finite_difference():
    a = dmeanX_dphi(PS_THEN_PA, BASE)
    h = 1e-5
    f = lambda phi: homodyne_analytic(PS_THEN_PA, BASE.with_(phi=phi)).mean_X
    values = [f(0.6 + k * h) for k in (-2, -1, 1, 2)]
    assert a == pytest.approx(sensitivity.richardson_slope(values, h), rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(p=params_st)
def test_generic_assembler_matches_presets(p):
    for scheme in (PA_THEN_PS, PS_THEN_PA):
        printed = homodyne_analytic(scheme, p, source="printed")
        generic = homodyne_analytic(scheme, p, source="generic")
        assert generic.mean_X == pytest.approx(printed.mean_X, rel=1e-9, abs=1e-12)
        assert generic.mean_X2 == pytest.approx(printed.mean_X2, rel=1e-9)
        assert generic.dmeanX_dphi == pytest.approx(printed.dmeanX_dphi, rel=1e-9, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(p=params_st, t=st.floats(0.05, 0.95), k=st.floats(0.1, 10.0))
def test_scheme_scale_invariance(p, t, k):
    s = SchemeSpec.superposition(t)
    a = phase_sensitivity(s, p).delta_phi
    b = phase_sensitivity(SchemeSpec(k * s.s, k * s.t), p).delta_phi
    assert a == pytest.approx(b, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(p=params_st)
def test_two_pi_periodicity(p):
    for scheme in (PA_THEN_PS, PS_THEN_PA):
        a = dmeanX_dphi(scheme, p)
        b = dmeanX_dphi(scheme, p.with_(phi=p.phi + 2 * math.pi))
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(p=params_st)
def test_variance_nonnegative(p):
    for scheme in (STANDARD, PA_THEN_PS, PS_THEN_PA):
        r = homodyne_analytic(scheme, p)
        assert r.mean_X2 - r.mean_X**2 > 0
