import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11nco import fock, oracle
from su11nco.errors import CapabilityError, DegenerateStateError, DomainError
from su11nco.model import PA_THEN_PS, PS_THEN_PA
from su11nco.moments import (
    GenFunParams,
    MomentTable,
    TruncatedPolynomial,
    normalization_A,
    p_moment,
    sandwich_normal_order,
    stirling2,
    w4_terms,
)


def test_w4_at_zero_gain_is_linear():
    terms = w4_terms(GenFunParams(0.0, 0.64, 1.5))
    assert set(terms) == {(1, 0, 0, 0), (0, 1, 0, 0)}
    assert terms[1, 0, 0, 0] == pytest.approx(0.8 * 1.5)


def test_w4_without_displacement_is_bilinear():
    terms = w4_terms(GenFunParams(0.9, 0.7, 0.0))
    assert all(sum(k) == 2 for k in terms)


def test_w4_l1l2_coefficient():
    terms = w4_terms(GenFunParams(1.0, 0.8, 1.0))
    assert terms[1, 1, 0, 0] == pytest.approx(0.8 * math.sinh(1) ** 2)
    assert terms[1, 1, 0, 0] == pytest.approx(1.10488, abs=1e-5)


def test_p_moment_examples():
    assert p_moment((0, 0, 0, 0), GenFunParams(1.0)) == 1.0
    assert p_moment((1, 1, 0, 0), GenFunParams(0.0, 0.6, 1.3)) == pytest.approx(0.6 * 1.3**2, rel=1e-14)
    n1 = math.cosh(1) ** 2 + math.sinh(1) ** 2
    assert p_moment((1, 1, 0, 0), GenFunParams(1.0, 1.0, 1.0)) == pytest.approx(n1, rel=1e-13)
    assert n1 == pytest.approx(3.76220, abs=1e-5)


def test_p_moment_matches_oracle_number_moment():
    psi = oracle.first_opa_state(1.0, 1.0, 1e-16)
    assert p_moment((1, 1, 0, 0), GenFunParams(1.0)) == pytest.approx(fock.number_moments(psi, 0, 1), rel=1e-10)


def test_key_validation():
    with pytest.raises(CapabilityError):
        p_moment((7, 0, 0, 0), GenFunParams(1.0))
    with pytest.raises(CapabilityError):
        p_moment((6, 6, 1, 0), GenFunParams(1.0))
    with pytest.raises(DomainError):
        p_moment((-1, 0, 0, 0), GenFunParams(1.0))
    with pytest.raises(DomainError):
        GenFunParams(1.0, T=0.0)


def test_normalization_examples():
    p = GenFunParams(0.0, 1.0, 1.0)
    assert normalization_A(PA_THEN_PS, p) == pytest.approx(5**-0.5, rel=1e-14)
    assert normalization_A(PS_THEN_PA, p) == pytest.approx(2**-0.5, rel=1e-14)
    with pytest.raises(DegenerateStateError):
        normalization_A(PS_THEN_PA, GenFunParams(0.0, 1.0, 0.0))


@pytest.mark.parametrize("scheme", [PA_THEN_PS, PS_THEN_PA])
def test_normalization_matches_oracle(scheme):
    m = oracle.post_nco_moments(scheme, 1.0, 1.0, 0.7)
    assert normalization_A(scheme, GenFunParams(1.0, 0.7, 1.0)) == pytest.approx(m.norm_constant, rel=1e-8)


def test_stirling_numbers():
    assert [stirling2(4, j) for j in range(5)] == [0, 1, 7, 6, 1]


def test_sandwich_identity_for_number_operator():
    # n n = a^dag^2 a^2 + a^dag a
    assert sandwich_normal_order([0.0, 1.0], 0, 0) == pytest.approx({(2, 2): 1.0, (1, 1): 1.0})
    # (n + 1) a^dag a (n + 1) = a^dag (n + 2)(n + 2) a
    out = sandwich_normal_order([1.0, 1.0], 1, 1)
    assert out == pytest.approx({(1, 1): 4.0, (2, 2): 5.0, (3, 3): 1.0})


@settings(max_examples=40, deadline=None)
@given(
    g=st.floats(0.0, 1.2),
    T=st.floats(0.05, 1.0),
    alpha=st.floats(0.0, 2.0),
    x=st.integers(0, 4),
    y=st.integers(0, 4),
)
def test_reflection_symmetry(g, T, alpha, x, y):
    p = GenFunParams(g, T, alpha)
    a, b = p_moment((x, y, 0, 0), p), p_moment((y, x, 0, 0), p)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
    a, b = p_moment((0, 0, x, y), p), p_moment((0, 0, y, x), p)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.0, 1.2), T=st.floats(0.05, 1.0), alpha=st.floats(0.0, 2.0), x=st.integers(0, 4))
def test_loss_scales_mode_a_moments(g, T, alpha, x):
    # loss multiplies a^dag^x a^y by T^((x+y)/2)
    full = p_moment((x, x, 0, 0), GenFunParams(g, 1.0, alpha))
    lossy = p_moment((x, x, 0, 0), GenFunParams(g, T, alpha))
    assert lossy == pytest.approx(T**x * full, rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-1, 1), min_size=4, max_size=4), d=st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_truncated_exp_is_additive(c, d):
    box = (3, 3, 3, 3)
    unit = np.eye(4, dtype=int)
    p = TruncatedPolynomial.from_terms({tuple(unit[i]): c[i] for i in range(4)}, box, 6)
    q = TruncatedPolynomial.from_terms({tuple(unit[i]): d[i] for i in range(4)}, box, 6)
    lhs = (p + q).exp().coeffs
    rhs = (p.exp() * q.exp()).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_table_agrees_with_single_moments():
    p = GenFunParams(0.8, 0.7, 1.2)
    tab = MomentTable(p)
    for key in [(1, 1, 0, 0), (2, 1, 1, 0), (3, 3, 1, 1), (2, 2, 2, 2)]:
        assert tab[key] == pytest.approx(p_moment(key, p), rel=1e-12)
