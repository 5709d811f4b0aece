import numpy as np
import pytest

from groupanon import (
    InfeasibleTargetsError,
    PlanError,
    RedistributionPlan,
    SignalError,
    analyze,
    apply_matrix,
    build_reconstruction_matrix,
    extend_to_even,
    fixed_border_indices,
    format_plot_data,
    local_extrema,
    make_coefficients,
    redistribute,
    verify_outcome,
)

import reference as ref
from conftest import random_redistribution_case


@pytest.fixture
def census_parts(db2, census_ratios):
    extended, meta = extend_to_even(census_ratios, "left")
    dec = analyze(extended, db2, 1, meta=meta)
    matrix = build_reconstruction_matrix(db2, 14, 1)
    return extended, meta, dec, matrix


# ---------------------------------------------------------------- plans

def test_plan_validation():
    with pytest.raises(PlanError, match="unknown strategy"):
        RedistributionPlan(strategy="swap")
    with pytest.raises(PlanError, match="floor must be positive"):
        RedistributionPlan(floor=0.0)
    with pytest.raises(PlanError, match="free_values, not targets"):
        RedistributionPlan(strategy="manual", targets=((3, 1.0),))
    with pytest.raises(PlanError, match="targets, not free_values"):
        RedistributionPlan(strategy="alleged_extrema", free_values={3: 1.0})


# ---------------------------------------------------------------- fixed set

def test_border_indices_census(census_parts):
    _, meta, _, matrix = census_parts
    assert fixed_border_indices(matrix, meta) == frozenset({1, 2, 7})


def test_border_indices_no_extension(db2):
    from groupanon import ExtensionMeta

    matrix = build_reconstruction_matrix(db2, 14, 1)
    assert fixed_border_indices(matrix, ExtensionMeta("none", 14, 14)) == frozenset()


def test_border_indices_right_extension(db2):
    extended, meta = extend_to_even(np.linspace(0.1, 0.9, 15), "right")
    matrix = build_reconstruction_matrix(db2, 16, 1)
    got = fixed_border_indices(matrix, meta)
    # Brute-force oracle: scan the nonzero pattern of the two bottom rows.
    expected = {
        j + 1
        for j in range(matrix.m)
        if abs(matrix.entries[14, j]) > 0 or abs(matrix.entries[15, j]) > 0
    }
    assert got == frozenset(expected)


# ---------------------------------------------------------------- coefficients

def test_manual_coefficients_census(census_parts):
    _, _, dec, matrix = census_parts
    plan = RedistributionPlan(strategy="manual", free_values=ref.FREE_VALUES)
    ahat = make_coefficients(plan, dec, matrix)
    np.testing.assert_allclose(ahat, ref.NEW_COEFFS, atol=ref.DISPLAY_TOL)
    np.testing.assert_array_equal(ahat[[0, 1, 6]], dec.approx[[0, 1, 6]])


def test_identity_plan_keeps_coefficients(census_parts):
    _, _, dec, matrix = census_parts
    plan = RedistributionPlan(strategy="manual", fixed_indices=frozenset(range(1, 8)))
    np.testing.assert_array_equal(make_coefficients(plan, dec, matrix), dec.approx)


def test_manual_plan_coverage_errors(census_parts):
    _, _, dec, matrix = census_parts
    with pytest.raises(PlanError, match="neither fixed nor assigned"):
        make_coefficients(
            RedistributionPlan(strategy="manual", free_values={3: 1.0}), dec, matrix
        )
    with pytest.raises(PlanError, match="both fixed and free"):
        make_coefficients(
            RedistributionPlan(
                strategy="manual",
                fixed_indices=frozenset({1, 2, 3, 4, 5, 6, 7}),
                free_values={3: 1.0},
            ),
            dec,
            matrix,
        )
    with pytest.raises(PlanError, match="outside 1..7"):
        make_coefficients(
            RedistributionPlan(strategy="manual", free_values={9: 1.0}), dec, matrix
        )


def test_alleged_extrema_creates_maximum(census_parts):
    _, _, dec, matrix = census_parts
    plan = RedistributionPlan(strategy="alleged_extrema", targets=((13, 1.0),))
    ahat = make_coefficients(plan, dec, matrix)
    rebuilt = apply_matrix(matrix, ahat)
    assert abs(rebuilt[12] - 1.0) < 1e-9
    maxima, _ = local_extrema(rebuilt)
    assert 13 in maxima
    np.testing.assert_array_equal(ahat[[0, 1, 6]], dec.approx[[0, 1, 6]])


def test_extremum_transition_flattens(census_parts):
    _, _, dec, matrix = census_parts
    before = apply_matrix(matrix, dec.approx)
    plan = RedistributionPlan(strategy="extremum_transition", targets=((5, 1.0),))
    ahat = make_coefficients(plan, dec, matrix)
    after = apply_matrix(matrix, ahat)
    max_after, min_after = local_extrema(after)
    assert 5 in max_after
    # Original extrema on rows the free coefficients can reach get flattened
    # to the median, so they stop being extreme relative to the new peak.
    assert abs(after[12] - np.median(before)) < 1e-9


def test_infeasible_targets_report_rank(census_parts):
    _, _, dec, matrix = census_parts
    # Rows 1, 2, 14 are spanned by the fixed coefficients alone, so any
    # off-current target there is unreachable.
    plan = RedistributionPlan(strategy="alleged_extrema", targets=((1, 5.0),))
    with pytest.raises(InfeasibleTargetsError, match="rank"):
        make_coefficients(plan, dec, matrix)


def test_duplicate_targets_rejected(census_parts):
    _, _, dec, matrix = census_parts
    plan = RedistributionPlan(strategy="alleged_extrema", targets=((13, 1.0), (13, 2.0)))
    with pytest.raises(PlanError, match="duplicate"):
        make_coefficients(plan, dec, matrix)


# ---------------------------------------------------------------- redistribute

def test_redistribute_census_golden(db2, census_ratios):
    plan = RedistributionPlan(strategy="manual", free_values=ref.FREE_VALUES, floor=ref.FLOOR)
    final, record, report = redistribute(census_ratios, plan, db2, 1, "left")
    assert abs(record.shift - ref.SHIFT) < 1e-3
    assert abs(record.scale - ref.SCALE) < 1e-4
    assert record.informative_range == (2, 14)
    shifted = np.array(report["extended_after"]) / record.scale
    np.testing.assert_allclose(shifted, ref.SHIFTED_SIGNAL, atol=ref.DISPLAY_TOL)
    np.testing.assert_allclose(shifted[:5], [6.3252, 6.3252, 6.3238, 5.3484, 4.6365],
                               atol=ref.DISPLAY_TOL)
    np.testing.assert_allclose(final, ref.FINAL_RATIOS, atol=ref.DISPLAY_TOL)
    checks = report["checks"]
    assert checks["positivity"] and checks["border_equality"]
    assert abs(checks["mean_delta"]) < 1e-9
    assert checks["detail_residual"] < 1e-9


def test_redistribute_identity_plan(db2, census_ratios):
    plan = RedistributionPlan(
        strategy="manual", fixed_indices=frozenset(range(1, 8)), floor=None
    )
    final, record, _ = redistribute(census_ratios, plan, db2, 1, "left")
    assert record.shift == 0.0
    np.testing.assert_allclose(final, census_ratios, atol=1e-15)


def test_redistribute_identity_with_floor_rescales(db2, census_ratios):
    # With the floor active the identity plan shifts and rescales, but the
    # mean and the detail proportions still survive.
    plan = RedistributionPlan(strategy="manual", fixed_indices=frozenset(range(1, 8)))
    final, record, report = redistribute(census_ratios, plan, db2, 1, "left")
    assert record.shift > 0
    assert abs(final.mean() - census_ratios.mean()) < 1e-12
    assert report["checks"]["detail_residual"] < 1e-12


def test_redistribute_rejects_out_of_range_signal(db2):
    plan = RedistributionPlan(strategy="manual", free_values={})
    with pytest.raises(SignalError, match=r"\[0, 1\]"):
        redistribute(np.array([0.5, 1.5, 0.2]), plan, db2, 1)


def test_redistribute_rejects_all_zero_signal(db2):
    plan = RedistributionPlan(
        strategy="manual", fixed_indices=frozenset(range(1, 5)), floor=None
    )
    with pytest.raises(SignalError, match="degenerate"):
        redistribute(np.zeros(7), plan, db2, 1)


def test_redistribute_fixed_coefficients_track_shift_and_scale(db2, census_ratios):
    # New approximation coefficients on the fixed set equal
    # scale * (original + shift * sqrt(2)**k): the shift is a constant
    # signal, and one low-pass analysis step scales constants by sqrt(2).
    plan = RedistributionPlan(strategy="manual", free_values=ref.FREE_VALUES, floor=ref.FLOOR)
    final, record, report = redistribute(census_ratios, plan, db2, 1, "left")
    extended, meta = extend_to_even(final, "left")
    dec = analyze(extended, db2, 1, meta=meta)
    original = np.array(report["coefficients_after"])
    expected = record.scale * (original + record.shift * np.sqrt(2.0))
    np.testing.assert_allclose(dec.approx, expected, atol=1e-9)


def test_redistribute_level2_coefficient_tracking(db2):
    # Same faithfulness relation at level 2: every analysis coefficient of
    # the final signal is scale * (chosen coefficient + shift * 2**(k/2)).
    rng = np.random.default_rng(77)
    c = rng.uniform(0.05, 0.95, 16)
    plan = RedistributionPlan(
        strategy="manual", free_values={i: float(rng.uniform(-2, 2)) for i in range(1, 5)},
        fixed_indices=frozenset(), floor=2.0,
    )
    final, record, report = redistribute(c, plan, db2, 2, "left")
    dec = analyze(final, db2, 2)
    chosen = np.array(report["coefficients_after"])
    expected = record.scale * (chosen + record.shift * 2.0)
    np.testing.assert_allclose(dec.approx, expected, atol=1e-9)


def test_random_redistribution_properties(db2):
    rng = np.random.default_rng(2024)
    for _ in range(100):
        c, plan, k, direction = random_redistribution_case(rng, db2)
        final, record, report = redistribute(c, plan, db2, k, direction)
        assert final.shape == c.shape
        assert abs(final.mean() - c.mean()) < 1e-9
        checks = report["checks"]
        assert checks["detail_residual"] < 1e-9
        assert checks["positivity"]
        assert checks["border_equality"]
        assert abs(checks["detail_scale"] - record.scale) < 1e-9


# ---------------------------------------------------------------- verification

def test_verify_outcome_census(db2, census_ratios):
    plan = RedistributionPlan(strategy="manual", free_values=ref.FREE_VALUES, floor=ref.FLOOR)
    final, _, _ = redistribute(census_ratios, plan, db2, 1, "left")
    _, meta = extend_to_even(census_ratios, "left")
    outcome = verify_outcome(census_ratios, final, db2, 1, meta)
    assert outcome["positivity"] is True
    assert outcome["border_equality"] is True
    assert 13 in outcome["extrema_after"]["maxima"]
    assert abs(outcome["mean_delta"]) < 1e-9
    assert outcome["detail_residual"] < 1e-9


def test_verify_outcome_identical_signals(db2, census_ratios):
    _, meta = extend_to_even(census_ratios, "left")
    outcome = verify_outcome(census_ratios, census_ratios, db2, 1, meta)
    assert outcome["mean_delta"] == 0.0
    assert outcome["detail_residual"] == 0.0
    assert outcome["detail_scale"] == 1.0
    assert outcome["extrema_before"] == outcome["extrema_after"]


def test_verify_outcome_length_checks(db2, census_ratios):
    _, meta = extend_to_even(census_ratios, "left")
    with pytest.raises(SignalError, match="differ in length"):
        verify_outcome(census_ratios, census_ratios[:-1], db2, 1, meta)
    with pytest.raises(SignalError, match="match neither"):
        verify_outcome(np.ones(10) / 2, np.ones(10) / 2, db2, 1, meta)


def test_local_extrema():
    maxima, minima = local_extrema([1.0, 3.0, 2.0, 0.5, 1.5, 1.0])
    assert maxima == [2, 5]
    assert minima == [4]
    # Plateaus are not strict extrema; endpoints never qualify.
    assert local_extrema([2.0, 2.0, 1.0]) == ([], [])


def test_format_plot_data(census_ratios):
    text = format_plot_data(census_ratios, census_ratios * 2.0)
    lines = text.splitlines()
    assert lines[0] == "index\tbefore\tafter"
    assert len(lines) == 14
    first = lines[1].split("\t")
    assert first[0] == "1"
    assert float(first[2]) == pytest.approx(2 * float(first[1]))
