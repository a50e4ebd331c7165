import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ris_locate.codebook import Codebook, dft_codebook, directive_subset, quantize, quantize_phase
from ris_locate.geometry import AoaPair, RisDescriptor, element_positions, steering_vector

from conftest import LAMBDA


def brute_force_quantize(phase, bits):
    grid = [2 ** (1 - bits) * math.pi * f for f in range(2**bits)]
    dist = [abs(math.remainder(phase - g, 2 * math.pi)) for g in grid]
    return grid[min(range(len(grid)), key=lambda i: (dist[i], i))]


def test_dft_first_column():
    U = dft_codebook(4, 4).profiles
    np.testing.assert_allclose(U[:, 0], 0.5 * np.ones(4))


def test_dft_unitary():
    U = dft_codebook(4, 4).profiles
    np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-12)
    U = dft_codebook(64).profiles
    np.testing.assert_allclose(U.conj().T @ U, np.eye(64), atol=1e-12)


def test_dft_entry_two_two():
    assert dft_codebook(4, 4).profiles[1, 1] == pytest.approx(-0.5j, abs=1e-15)


@pytest.mark.parametrize("T", [0, 5])
def test_dft_bad_size(T):
    with pytest.raises(ValueError):
        dft_codebook(4, T)


def test_partial_dft_selection():
    cb = dft_codebook(16, 5)
    assert cb.kind == "partial_dft" and cb.num_profiles == 5
    np.testing.assert_allclose(cb.profiles, dft_codebook(16).profiles[:, :5])
    explicit = dft_codebook(16, columns=[1, 7])
    np.testing.assert_allclose(explicit.profiles, dft_codebook(16).profiles[:, [1, 7]])
    r1 = dft_codebook(16, 5, rng=np.random.default_rng(3))
    r2 = dft_codebook(16, 5, rng=np.random.default_rng(3))
    np.testing.assert_array_equal(r1.profiles, r2.profiles)


def test_full_dft_kind():
    assert dft_codebook(9).kind == "full_dft"


def test_quantize_examples():
    assert quantize_phase(0.0, 2) == 0.0
    assert quantize_phase(np.pi / 3, 2) == pytest.approx(np.pi / 2)
    ph = 15 * np.pi / 8 + 0.01
    assert quantize_phase(ph, 3) == pytest.approx(brute_force_quantize(ph, 3))
    # 15pi/8 is not on the 3-bit grid; the nearest point on the circle is 0
    assert quantize_phase(ph, 3) == 0.0
    assert quantize_phase(ph, 4) == pytest.approx(15 * np.pi / 8)


def test_quantize_tie_goes_to_smaller_index():
    assert quantize_phase(np.pi / 4, 2) == 0.0
    # tie between the last grid point and wrap-around zero
    assert quantize_phase(7 * np.pi / 4, 2) == 0.0


@given(st.floats(-20, 20), st.integers(1, 5))
def test_quantize_matches_brute_force(phase, bits):
    got = float(quantize_phase(phase, bits))
    want = brute_force_quantize(phase, bits)
    # both are nearest on the circle; compare distances to allow exact-tie rounding noise
    d_got = abs(math.remainder(phase - got, 2 * math.pi))
    d_want = abs(math.remainder(phase - want, 2 * math.pi))
    assert d_got == pytest.approx(d_want, abs=1e-9)


@given(st.integers(1, 4))
def test_quantize_idempotent_and_on_grid(bits):
    cb = quantize(dft_codebook(16), bits)
    again = quantize(cb, bits)
    np.testing.assert_allclose(again.profiles, cb.profiles, atol=1e-15)
    f = np.mod(np.angle(cb.profiles), 2 * np.pi) / (2 * np.pi / 2**bits)
    np.testing.assert_allclose(f, np.round(f), atol=1e-9)
    np.testing.assert_allclose(np.abs(cb.profiles), 0.25)
    assert cb.bits == bits


def test_quantize_grid_nesting():
    for b in range(1, 5):
        coarse = {round(2 ** (1 - b) * f, 12) for f in range(2**b)}
        fine = {round(2 ** (-b) * f, 12) for f in range(2 ** (b + 1))}
        assert coarse <= fine


def test_directive_count_wall_setup():
    ris = RisDescriptor([0, 0, 0], 0, 8, 8, LAMBDA)
    cb = directive_subset(ris, 64 // 3, AoaPair(0.3, 1.2), np.deg2rad(30), np.random.default_rng(0))
    assert cb.num_profiles == 21 and cb.kind == "directive"


def test_directive_zero_uncertainty_single_argmax():
    ris = RisDescriptor([0, 0, 0], 0, 4, 4, LAMBDA)
    aoa = AoaPair(0.4, 1.1)
    cb = directive_subset(ris, 1, aoa, 0.0)
    U = dft_codebook(16).profiles
    a = steering_vector(element_positions(ris), aoa, LAMBDA)
    best = int(np.argmax([abs(np.vdot(U[:, t], a)) for t in range(16)]))
    np.testing.assert_allclose(cb.profiles[:, 0], U[:, best])


def test_directive_deterministic_under_seed():
    ris = RisDescriptor([0, 0, 0], 0, 5, 5, LAMBDA)
    a = directive_subset(ris, 8, AoaPair(0.1, 1.4), 0.5, np.random.default_rng(9))
    b = directive_subset(ris, 8, AoaPair(0.1, 1.4), 0.5, np.random.default_rng(9))
    np.testing.assert_array_equal(a.profiles, b.profiles)


def test_directive_ranking_scale_invariant():
    U = dft_codebook(16).profiles
    ris = RisDescriptor([0, 0, 0], 0, 4, 4, LAMBDA)
    a = steering_vector(element_positions(ris), AoaPair(0.2, 1.3), LAMBDA)
    r1 = np.argsort(-np.abs(U.T @ a.conj()), kind="stable")[:5]
    r2 = np.argsort(-np.abs(U.T @ (7.5 * a).conj()), kind="stable")[:5]
    np.testing.assert_array_equal(r1, r2)


def test_sensing_rows_equal_energy():
    U = dft_codebook(16).profiles
    psi = U.conj().T @ (U * np.sqrt(16))
    norms = np.linalg.norm(psi, axis=1)
    assert norms.max() - norms.min() < 1e-9


def test_csv_round_trip(tmp_path):
    cb = quantize(dft_codebook(9, 4), 3)
    path = tmp_path / "cb.csv"
    cb.to_csv(path)
    back = Codebook.from_csv(path, bits=3)
    np.testing.assert_allclose(back.profiles, cb.profiles, atol=1e-12)
    assert path.read_text().splitlines()[0] == "column,row,phase"
