import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ris_locate.geometry import (
    AoaPair,
    RisDescriptor,
    absolute_element_positions,
    element_positions,
    local_aoa,
    nearfield_steering,
    steering_vector,
    wavevector,
    wrap_difference,
)
from ris_locate.fusion import direction_vector

from conftest import LAMBDA

angles = st.tuples(st.floats(0, 2 * np.pi, exclude_max=True), st.floats(0, np.pi))


def test_single_element_at_origin():
    ris = RisDescriptor([1, 2, 3], 0.3, 1, 1, LAMBDA)
    np.testing.assert_array_equal(element_positions(ris), [[0, 0, 0]])


def test_two_by_two_grid_row_major():
    ris = RisDescriptor([0, 0, 0], 0, 2, 2, LAMBDA)
    h = LAMBDA / 2
    expected = [[0, 0, 0], [0, h, 0], [0, 0, h], [0, h, h]]
    np.testing.assert_allclose(element_positions(ris), expected, atol=0)


def test_eight_by_eight_count():
    assert len(element_positions(RisDescriptor([0, 0, 0], 0, 8, 8, LAMBDA))) == 64


def test_grid_entries_are_spacing_multiples():
    ris = RisDescriptor([0, 0, 0], 0, 3, 5, LAMBDA, element_spacing=0.004)
    q = element_positions(ris) / 0.004
    np.testing.assert_allclose(q, np.round(q), atol=1e-12)
    assert np.all(q[:, 0] == 0)


@pytest.mark.parametrize("rows,cols", [(0, 3), (2, 0)])
def test_bad_grid_rejected(rows, cols):
    with pytest.raises(ValueError):
        RisDescriptor([0, 0, 0], 0, rows, cols, LAMBDA)


@pytest.mark.parametrize(
    "phi,theta,unit",
    [(1.234, 0.0, (0, 0, 1)), (0.0, np.pi / 2, (1, 0, 0)), (np.pi / 2, np.pi / 2, (0, 1, 0))],
)
def test_wavevector_examples(phi, theta, unit):
    k = wavevector(AoaPair(phi, theta), LAMBDA)
    np.testing.assert_allclose(k, -(2 * np.pi / LAMBDA) * np.array(unit), atol=1e-9)


@given(angles)
def test_wavevector_norm(ang):
    k = wavevector(AoaPair(*ang), LAMBDA)
    assert math.isclose(np.linalg.norm(k), 2 * np.pi / LAMBDA, rel_tol=1e-12)


def test_steering_origin_and_half_wavelength():
    q = np.array([[0, 0, 0], [0, 0, LAMBDA / 2]])
    a = steering_vector(q, AoaPair(0.7, 0.0), LAMBDA)
    assert a[0] == 1 + 0j
    assert abs(a[1] - (-1)) < 1e-12


@given(angles, st.integers(1, 6), st.integers(1, 6))
def test_steering_unit_modulus(ang, rows, cols):
    ris = RisDescriptor([0, 0, 0], 0, rows, cols, LAMBDA)
    a = steering_vector(element_positions(ris), AoaPair(*ang), LAMBDA)
    np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-12)
    assert a[0] == 1


def test_nearfield_cycle_examples():
    src = np.zeros(3)
    assert abs(nearfield_steering([[LAMBDA, 0, 0]], src, LAMBDA)[0] - 1) < 1e-12
    assert abs(nearfield_steering([[0, LAMBDA / 2, 0]], src, LAMBDA)[0] + 1) < 1e-12


def test_nearfield_coincident_source_errors():
    with pytest.raises(ValueError):
        nearfield_steering([[1, 2, 3]], [1, 2, 3], LAMBDA)


def _phase_mismatch(ris, distance):
    """Per-element phase gap between spherical and plane waves, referenced to element 0,
    evaluated with scalar math independently of the vectorized code."""
    src = ris.position + distance * ris.normal
    errs = []
    r0 = distance
    for q_loc, q_abs in zip(element_positions(ris), absolute_element_positions(ris)):
        r = math.dist(src, q_abs)
        near = -2 * math.pi * (r - r0) / LAMBDA
        # boresight plane wave: k = -(2pi/lambda) x_local, so q.k depends on x only
        far = 2 * math.pi * q_loc[0] / LAMBDA
        errs.append(abs(wrap_difference(near - far)))
    return max(errs)


def test_nearfield_matches_farfield_at_1000_wavelengths():
    ris = RisDescriptor([1.0, 2.0, 3.0], 0.4, 8, 8, LAMBDA)
    src = ris.position + 1000 * LAMBDA * ris.normal
    expected = _phase_mismatch(ris, 1000 * LAMBDA)
    nf = nearfield_steering(absolute_element_positions(ris), src, LAMBDA)
    nf = nf / nf[0]
    ff = steering_vector(element_positions(ris), local_aoa(ris, src), LAMBDA)
    got = np.max(np.abs(np.angle(nf / ff)))
    assert got == pytest.approx(expected, rel=1e-6, abs=1e-12)
    # the residual is the Fresnel term pi d^2 / (lambda r) at the far corner
    d2 = 2 * (7 * LAMBDA / 2) ** 2
    assert got == pytest.approx(np.pi * d2 / (LAMBDA * 1000 * LAMBDA), rel=1e-2)


def test_nearfield_converges_to_farfield():
    ris = RisDescriptor([0, 0, 0], 0, 8, 8, LAMBDA)
    fraunhofer = 2 * (7 * LAMBDA / 2 * math.sqrt(2)) ** 2 / LAMBDA
    dists = fraunhofer * np.array([1, 2, 5, 10, 100, 1000])
    gaps = [_phase_mismatch(ris, d) for d in dists]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    small = RisDescriptor([0, 0, 0], 0, 3, 3, LAMBDA)
    assert _phase_mismatch(small, 1e4 * LAMBDA) < 1e-3


def test_local_aoa_examples():
    ris = RisDescriptor([0, 0, 0], 0, 1, 1, LAMBDA)
    assert local_aoa(ris, [0, 0, 1]).elevation == 0
    a = local_aoa(ris, [1, 0, 0])
    assert a.elevation == pytest.approx(np.pi / 2) and a.azimuth == 0


def test_local_aoa_wall_geometry():
    ris = RisDescriptor([0, 5, 7], 0, 8, 8, LAMBDA)
    a = local_aoa(ris, [4, 8, 2])
    assert a.elevation == pytest.approx(math.acos(-5 / math.sqrt(50)), abs=1e-12)
    assert a.elevation == pytest.approx(2.3562, abs=1e-4)
    assert a.azimuth == pytest.approx(math.atan2(3, 4), abs=1e-12)
    assert a.azimuth == pytest.approx(0.6435, abs=1e-4)


def test_local_aoa_at_reference_errors():
    ris = RisDescriptor([1, 1, 1], 0, 2, 2, LAMBDA)
    with pytest.raises(ValueError):
        local_aoa(ris, [1, 1, 1])


def test_pole_azimuth_is_zero():
    ris = RisDescriptor([1, 1, 1], 0.5, 2, 2, LAMBDA)
    assert local_aoa(ris, [1, 1, 4]).azimuth == 0.0


def test_aoa_pair_wraps_and_clamps():
    a = AoaPair(-np.pi / 2, 4.0)
    assert a.azimuth == pytest.approx(1.5 * np.pi)
    assert a.elevation == np.pi
    assert AoaPair(-1e-18, 0).azimuth < 2 * np.pi


@settings(max_examples=200)
@given(
    st.floats(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3),
    st.floats(1e-3, np.pi - 1e-3),
    st.floats(0.01, 50),
    st.floats(0, 2 * np.pi),
)
def test_local_aoa_round_trip(phi, theta, r, beta):
    ris = RisDescriptor([3.0, -2.0, 1.5], beta, 4, 4, LAMBDA)
    p = ris.position + r * direction_vector(AoaPair(phi, theta), beta)
    back = local_aoa(ris, p)
    assert abs(wrap_difference(back.azimuth - phi)) < 1e-7
    assert back.elevation == pytest.approx(theta, abs=1e-7)


def test_global_frame_orientation():
    ris = RisDescriptor([0, 0, 0], np.pi / 2, 1, 2, LAMBDA)
    # local +y maps to global -x after a quarter turn
    np.testing.assert_allclose(absolute_element_positions(ris)[1], [-LAMBDA / 2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(ris.normal, [0, 1, 0], atol=1e-15)
