import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupanon import (
    SignalError,
    analyze_once,
    apply_matrix,
    build_detail_synthesis_matrix,
    build_reconstruction_matrix,
    db2_filter,
    extend_to_even,
    synth_approx,
    synth_detail,
)
from groupanon.matrices import _single_level

import reference as ref


def test_census_matrix_entries(db2):
    M = build_reconstruction_matrix(db2, 14, 1)
    assert M.entries.shape == (14, 7)
    np.testing.assert_allclose(M.entries, ref.RECONSTRUCTION_MATRIX, atol=5e-5)
    # Wrap entries called out explicitly.
    assert abs(M.entries[0, 6] - (-0.1294)) < 5e-5
    assert abs(M.entries[13, 0] - 0.4830) < 5e-5


def test_columns_are_orthonormal(db2):
    for n, k in [(14, 1), (16, 2), (24, 3), (8, 1)]:
        M = build_reconstruction_matrix(db2, n, k)
        np.testing.assert_allclose(M.entries.T @ M.entries, np.eye(M.m), atol=1e-10)


def test_level2_matrix_is_product_of_level1(db2):
    M = build_reconstruction_matrix(db2, 16, 2)
    product = _single_level(db2.lowpass, 16) @ _single_level(db2.lowpass, 8)
    np.testing.assert_allclose(M.entries, product, atol=1e-14)
    assert M.entries.shape == (16, 4)


def test_row_sparsity_level1(db2):
    M = build_reconstruction_matrix(db2, 14, 1)
    for row in M.entries:
        assert np.count_nonzero(row) == 2


def test_build_rejects_bad_sizes(db2):
    with pytest.raises(SignalError, match="even"):
        build_reconstruction_matrix(db2, 13, 1)
    with pytest.raises(SignalError, match="maximum admissible level for length 14 is 1"):
        build_reconstruction_matrix(db2, 14, 2)


def test_apply_census_approximation(db2, census_ratios):
    extended, _ = extend_to_even(census_ratios, "left")
    approx, _ = analyze_once(extended, db2)
    M = build_reconstruction_matrix(db2, 14, 1)
    np.testing.assert_allclose(apply_matrix(M, approx), ref.APPROXIMATION, atol=ref.DISPLAY_TOL)


def test_apply_zero_vector(db2):
    M = build_reconstruction_matrix(db2, 14, 1)
    np.testing.assert_array_equal(apply_matrix(M, np.zeros(7)), np.zeros(14))


def test_apply_new_coefficients(db2, census_ratios):
    # Replacing coefficients 3-6 reshapes the approximation as printed.
    extended, _ = extend_to_even(census_ratios, "left")
    approx, _ = analyze_once(extended, db2)
    ahat = approx.copy()
    ahat[2:6] = [-2.0, 0.0, 1.0, -5.0]
    M = build_reconstruction_matrix(db2, 14, 1)
    np.testing.assert_allclose(apply_matrix(M, ahat), ref.NEW_APPROXIMATION, atol=ref.DISPLAY_TOL)


def test_apply_dimension_mismatch(db2):
    M = build_reconstruction_matrix(db2, 14, 1)
    with pytest.raises(SignalError, match="expected 7 coefficients"):
        apply_matrix(M, np.zeros(8))


def test_detail_matrix_census(db2, census_ratios):
    extended, _ = extend_to_even(census_ratios, "left")
    _, detail = analyze_once(extended, db2)
    H = build_detail_synthesis_matrix(db2, 14, 1)
    np.testing.assert_allclose(apply_matrix(H, detail), ref.DETAIL_LEVEL1, atol=ref.DISPLAY_TOL)
    np.testing.assert_allclose(H.entries.T @ H.entries, np.eye(7), atol=1e-10)


def test_two_channel_completeness(db2):
    for n in (8, 14, 16, 32):
        L = build_reconstruction_matrix(db2, n, 1).entries
        H = build_detail_synthesis_matrix(db2, n, 1).entries
        np.testing.assert_allclose(L @ L.T + H @ H.T, np.eye(n), atol=1e-10)


def test_detail_matrix_level2_matches_cascade(db2):
    rng = np.random.default_rng(21)
    d = rng.normal(size=4)
    H2 = build_detail_synthesis_matrix(db2, 16, 2)
    np.testing.assert_allclose(apply_matrix(H2, d), synth_detail(d, db2, 2, 16), atol=1e-12)


def test_dump_format(db2):
    M = build_reconstruction_matrix(db2, 4, 1)
    lines = M.dump().splitlines()
    assert len(lines) == 4
    first = lines[0].split()
    assert first == [f"{v:.4f}" for v in M.entries[0]]


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([8, 14, 16, 24, 32, 64]),
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_matrix_equals_filter_cascade(n, k, seed):
    f = db2_filter()
    if n % 2**k != 0:
        k = 1
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n // 2**k)
    M = build_reconstruction_matrix(f, n, k)
    assert np.abs(apply_matrix(M, a) - synth_approx(a, f, k, n)).max() < 1e-9
