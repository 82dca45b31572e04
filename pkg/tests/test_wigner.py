import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11nco import fock, wigner
from su11nco.errors import DegenerateStateError, DomainError, GridTooSmallError
from su11nco.fock import FockCutoff
from su11nco.model import PA_THEN_PS, PS_THEN_PA, STANDARD, SchemeSpec
from su11nco.wigner import PhasePoint, QuadratureGrid

COARSE = QuadratureGrid(points_per_axis=24)


def test_vacuum_at_origin():
    vac = fock.vacuum(2, FockCutoff(4))
    assert wigner.wigner_point(vac, PhasePoint(0, 0, 0, 0)) == pytest.approx(4 / math.pi**2, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(x=st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_vacuum_is_gaussian(x):
    vac = fock.vacuum(2, FockCutoff(40))
    expected = 4 / math.pi**2 * math.exp(-sum(v * v for v in x))
    assert wigner.wigner_point(vac, PhasePoint(*x)) == pytest.approx(expected, rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("g,alpha", [(0.5, 0.5), (1.0, 1.0)])
def test_gaussian_states_have_no_negative_volume(g, alpha):
    assert wigner.nco_negative_volume(STANDARD, g, alpha, COARSE).volume < 1e-3
    assert wigner.nco_negative_volume(SchemeSpec(1, -1), g, alpha, COARSE).volume < 1e-3


def test_nco_states_are_nonclassical():
    r = wigner.nco_negative_volume(PS_THEN_PA, 1.0, 1.0, COARSE)
    assert r.report.min_value < 0 and r.volume > 0.01


def test_compact_frame_is_small():
    for scheme in (PA_THEN_PS, PS_THEN_PA):
        st_ = wigner.compact_frame_state(scheme, 1.2, 1.0)
        assert max(st_.dims) <= 3


def test_compact_and_lab_frames_agree():
    c = wigner.nco_negative_volume(PA_THEN_PS, 0.6, 1.0).volume
    lab = wigner.nco_negative_volume(PA_THEN_PS, 0.6, 1.0, QuadratureGrid(6.0, 48), frame="lab").volume
    assert lab == pytest.approx(c, abs=5e-4)


def test_default_grid_is_converged():
    r = wigner.nco_negative_volume(PS_THEN_PA, 1.0, 1.0, check_convergence=True)
    assert abs(r.report.integral - 1) < 1e-6
    # both far below the 0.003 comparison tolerance
    assert abs(r.report.refine_delta) < 1e-4 and abs(r.report.extend_delta) < 1e-3


def test_grid_too_small():
    with pytest.raises(GridTooSmallError):
        wigner.nco_negative_volume(PS_THEN_PA, 1.0, 1.0, QuadratureGrid(0.5, 16))


def test_bad_inputs():
    with pytest.raises(DomainError):
        QuadratureGrid(half_width=-1)
    with pytest.raises(DegenerateStateError):
        wigner.nco_state_ideal(PS_THEN_PA, 0.0, 0.0)


def test_slice_matches_pointwise(tmp_path):
    st_ = wigner.compact_frame_state(PS_THEN_PA, 1.0, 1.0)
    xs = np.array([-1.0, 0.0, 0.5])
    ys = np.array([0.2, -0.7])
    W = wigner.wigner_slice(st_, xs, ys, 0.3, -0.1)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert W[i, j] == pytest.approx(wigner.wigner_point(st_, PhasePoint(x, y, 0.3, -0.1)), abs=1e-13)
    path = tmp_path / "slice.csv"
    wigner.write_slice_csv(path, xs, ys, W)
    assert path.read_text().splitlines()[0] == "x1,y1,W"
    assert len(path.read_text().splitlines()) == 7
