import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11nco import fock
from su11nco.errors import DegenerateStateError, DomainError, NumericError, TruncationError
from su11nco.fock import FockCutoff, MultiModeState
from su11nco.model import PA_THEN_PS, PS_THEN_PA, STANDARD, SchemeSpec


def coherent(alpha, n=30):
    return fock.coherent_state(alpha, FockCutoff(n), tail_tol=1.0)


def test_coherent_vacuum_and_first_coefficient():
    vac = coherent(0.0, 10)
    assert vac.amplitudes[0] == 1 and np.all(vac.amplitudes[1:] == 0)
    assert abs(coherent(1.0, 20).amplitudes[0] - math.exp(-0.5)) < 1e-15


def test_coherent_alpha2_mass():
    st_ = coherent(2.0, 30)
    assert st_.norm() ** 2 >= 1 - 1e-12


def test_coherent_tail_budget_enforced():
    with pytest.raises(TruncationError):
        fock.coherent_state(3.0, FockCutoff(5))


def test_squeeze_zero_gain_is_identity():
    psi = fock.tensor(coherent(0.7, 12), fock.vacuum(1, FockCutoff(12)))
    out = fock.two_mode_squeeze(psi, (0, 1), 0.0)
    assert np.array_equal(out.amplitudes, psi.amplitudes)


def test_tmsv_schmidt_coefficients():
    vac = fock.vacuum(2, FockCutoff(60))
    out = fock.two_mode_squeeze(vac, (0, 1), 1.0, pad=0, leak_budget=1e-6)
    n = np.arange(20)
    expected = (-math.tanh(1.0)) ** n / math.cosh(1.0)
    assert np.allclose(np.diag(out.amplitudes)[:20], expected, atol=1e-12)
    assert abs(out.amplitudes[0, 0] - 0.6481) < 1e-4
    off = out.amplitudes - np.diag(np.diag(out.amplitudes))
    assert np.max(np.abs(off)) < 1e-14


def test_squeeze_then_inverse_is_identity():
    psi = fock.tensor(coherent(1.0, 15), fock.vacuum(1, FockCutoff(15)))
    # pad is working room only; the output box is the input box, so grow it first
    big = fock.resize(psi, (110, 110))
    there = fock.two_mode_squeeze(big, (0, 1), 1.0, 0.0, pad=20, leak_budget=1e-12)
    back = fock.two_mode_squeeze(there, (0, 1), 1.0, math.pi, pad=20, leak_budget=1.0)
    back = fock.resize(back, psi.dims)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-10


def test_phase_shift_examples():
    one = fock.fock_state([1], FockCutoff(3))
    assert np.isclose(fock.phase_shift(one, 0, math.pi).amplitudes[1], -1)
    psi = coherent(1.0, 20)
    assert np.allclose(fock.phase_shift(psi, 0, 2 * math.pi).amplitudes, psi.amplitudes)
    assert np.array_equal(fock.phase_shift(psi, 0, 0.0).amplitudes, psi.amplitudes)


def test_beam_splitter_single_photon():
    st_ = fock.fock_state([1, 0], FockCutoff(2))
    out = fock.beam_splitter(st_, (0, 1), 0.7)
    amp = out.amplitudes
    assert abs(abs(amp[1, 0]) - math.sqrt(0.7)) < 1e-14
    assert abs(abs(amp[0, 1]) - math.sqrt(0.3)) < 1e-14


def test_beam_splitter_attenuates_coherent():
    psi = fock.attach_vacuum_ancilla(coherent(1.0, 25), 26)
    out = fock.beam_splitter(psi, (0, 1), 0.49)
    a, _, n = fock.ladder_expectations(out, 0)
    assert abs(a - 0.7) < 1e-12 and abs(n - 0.49) < 1e-12


def test_nco_constants():
    with pytest.raises(DegenerateStateError):
        fock.apply_nco(fock.vacuum(1, FockCutoff(4)), 0, PS_THEN_PA)
    psi = coherent(1.0, 40)
    out, c = fock.apply_nco(psi, 0, STANDARD)
    assert c == pytest.approx(1 / psi.norm()) and np.allclose(out.amplitudes, psi.amplitudes / psi.norm())
    _, c = fock.apply_nco(psi, 0, PA_THEN_PS)
    assert c == pytest.approx(5**-0.5, rel=1e-12)


def test_quadrature_examples():
    vac = fock.vacuum(1, FockCutoff(3))
    q = fock.expectation_quadrature(vac, 0)
    assert q.mean == 0 and q.mean_sq == pytest.approx(0.5)
    q = fock.expectation_quadrature(coherent(1.0, 40), 0)
    assert q.mean == pytest.approx(math.sqrt(2), rel=1e-12)
    assert q.mean_sq == pytest.approx(2.5, rel=1e-12)


def test_number_moments_after_first_opa():
    psi = fock.resize(fock.tensor(coherent(1.0, 20), fock.vacuum(1, FockCutoff(20))), (130, 130))
    out = fock.two_mode_squeeze(psi, (0, 1), 1.0, pad=20, leak_budget=1e-13)
    c2, s2 = math.cosh(1) ** 2, math.sinh(1) ** 2
    assert fock.number_moments(out, 0, 1) == pytest.approx(c2 + s2, rel=1e-10)
    assert fock.number_moments(out, 0, 2) == pytest.approx(c2 + s2 + c2**2 + 2 * s2**2 + 4 * s2 * c2, rel=1e-10)
    assert fock.number_moments(fock.vacuum(2, FockCutoff(3)), 0, 3) == 0


def test_state_validation():
    with pytest.raises(NumericError):
        MultiModeState(np.array([np.nan, 1.0]))
    with pytest.raises(DomainError):
        FockCutoff(0)


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0.0, 0.8), theta=st.floats(0.0, 2 * math.pi), alpha=st.floats(0.0, 1.5))
def test_squeeze_preserves_norm(g, theta, alpha):
    psi = fock.resize(fock.tensor(coherent(alpha, 14), fock.vacuum(1, FockCutoff(14))), (40, 40))
    out = fock.two_mode_squeeze(psi, (0, 1), g, theta, pad=20, leak_budget=1.0)
    assert out.norm() ** 2 + out.norm_leak == pytest.approx(psi.norm() ** 2 + psi.norm_leak, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(T=st.floats(0.01, 1.0), n=st.integers(0, 6))
def test_beam_splitter_conserves_photons(T, n):
    psi = fock.attach_vacuum_ancilla(fock.fock_state([n], FockCutoff(8)), 9)
    out = fock.beam_splitter(psi, (0, 1), T)
    total = fock.ladder_expectations(out, 0)[2] + fock.ladder_expectations(out, 1)[2]
    assert total == pytest.approx(n, abs=1e-12)
    assert out.norm() == pytest.approx(1.0, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_displacement_group_law(re, im):
    beta = complex(re, im)
    D = fock.displacement_matrix(beta, 80)
    Dm = fock.displacement_matrix(-beta, 80)
    prod = (Dm @ D)[:20, :20]
    assert np.max(np.abs(prod - np.eye(20))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(s=st.floats(-2, 2), t=st.floats(-2, 2), alpha=st.floats(0.3, 2.0))
def test_nco_is_diagonal_and_renormalizes(s, t, alpha):
    if abs(s) < 1e-3 and abs(t) < 1e-3:
        return
    psi = coherent(alpha, 40)
    out, c = fock.apply_nco(psi, 0, SchemeSpec(s, t))
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    # the photon-number support never grows
    assert np.all(np.abs(out.amplitudes[np.abs(psi.amplitudes) == 0]) == 0)
