"""Redistribute a concentration signal through its approximation coefficients.

The pipeline: extend the signal to even length, decompose, swap in new
approximation coefficients while keeping the border-coupled ones fixed,
rebuild the low-frequency part, add the original details back, shift the
result up to a positive floor, and rescale so the mean of the informative
samples is unchanged.

Two algebraic facts carry the guarantees.  First, the synthesis columns of
the two channels are mutually orthogonal, so adding the original details to
*any* rebuilt approximation leaves the detail coefficients of the result
exactly equal to the originals.  Second, the high-pass taps sum to zero, so
the positivity shift is invisible to the details and the final rescale by
``scale`` multiplies every detail by exactly ``scale`` - details survive
proportionally, the mean survives exactly.

Coefficient indices and signal positions in plans and reports are 1-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InfeasibleTargetsError, PlanError, SignalError
from .matrices import ReconstructionMatrix, apply_matrix, build_reconstruction_matrix
from .wavelets import (
    DecompositionResult,
    ExtensionMeta,
    WaveletFilterPair,
    analyze,
    as_signal,
    extend_to_even,
    synth_detail,
)

log = logging.getLogger(__name__)

STRATEGIES = ("manual", "alleged_extrema", "extremum_transition")

# Rank decisions in the target solver.
RANK_TOL = 1e-10
# Equality checks on border samples and means.
CHECK_TOL = 1e-9


@dataclass(frozen=True)
class RedistributionPlan:
    """Which coefficients to keep and how to choose the rest.

    ``fixed_indices`` lists the coefficients that keep their original
    values; ``None`` means "derive them from the border rows" (see
    :func:`fixed_border_indices`), which is what keeps a duplicated border
    sample valid.  For the ``manual`` strategy, ``free_values`` must assign
    every non-fixed coefficient.  For the solver strategies, ``targets``
    holds (signal position, wanted approximation value) pairs and the free
    coefficients are solved for by least squares.  ``floor`` is the minimum
    value of the shifted signal; ``None`` disables the shift entirely
    (useful for identity plans on already-positive signals).
    """

    strategy: str = "manual"
    fixed_indices: frozenset[int] | None = None
    free_values: Mapping[int, float] | None = None
    targets: tuple[tuple[int, float], ...] = ()
    floor: float | None = 2.0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise PlanError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.fixed_indices is not None:
            object.__setattr__(self, "fixed_indices", frozenset(int(i) for i in self.fixed_indices))
        if self.free_values is not None:
            object.__setattr__(
                self, "free_values", {int(i): float(v) for i, v in self.free_values.items()}
            )
        object.__setattr__(
            self, "targets", tuple((int(p), float(v)) for p, v in self.targets)
        )
        if self.floor is not None:
            floor = float(self.floor)
            if not floor > 0:
                raise PlanError("floor must be positive (or None to disable the shift)")
            object.__setattr__(self, "floor", floor)
        if self.strategy == "manual" and self.targets:
            raise PlanError("manual plans take free_values, not targets")
        if self.strategy != "manual" and self.free_values:
            raise PlanError(f"{self.strategy} plans take targets, not free_values")


@dataclass(frozen=True)
class ShiftScaleRecord:
    """Shift and rescale applied after rebuilding the signal.

    ``scale`` is (sum of original informative samples) / (sum of shifted
    informative samples); ``informative_range`` is the 1-based inclusive
    interval of extended positions that carry original data.
    """

    shift: float
    scale: float
    informative_range: tuple[int, int]

    def __post_init__(self):
        if not (np.isfinite(self.shift) and self.shift >= 0):
            raise PlanError(f"shift must be finite and >= 0, got {self.shift}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise PlanError(f"scale must be finite and positive, got {self.scale}")


def local_extrema(values) -> tuple[list[int], list[int]]:
    """Strict interior local (maxima, minima) as 1-based positions."""
    v = np.asarray(values, dtype=float)
    maxima = [i + 1 for i in range(1, v.size - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    minima = [i + 1 for i in range(1, v.size - 1) if v[i] < v[i - 1] and v[i] < v[i + 1]]
    return maxima, minima


def fixed_border_indices(M: ReconstructionMatrix, meta: ExtensionMeta) -> frozenset[int]:
    """Coefficients that must stay fixed to keep the duplicated border valid.

    When a border sample was duplicated, the two border samples of the
    rebuilt signal must keep their (zero) difference.  That is guaranteed by
    freezing every coefficient whose column has a nonzero entry in either of
    the two border rows.  Returns an empty set when nothing was duplicated.
    """
    if meta.direction == "none" or meta.extended_length == meta.original_length:
        return frozenset()
    if M.n != meta.extended_length:
        raise PlanError(
            f"matrix synthesizes length {M.n}, extension metadata describes {meta.extended_length}"
        )
    rows = (0, 1) if meta.direction == "left" else (M.n - 2, M.n - 1)
    touched = np.abs(M.entries[list(rows), :]).max(axis=0) > RANK_TOL
    return frozenset(int(j) + 1 for j in np.nonzero(touched)[0])


def _validate_indices(indices, m: int, label: str) -> None:
    bad = [i for i in indices if not 1 <= i <= m]
    if bad:
        raise PlanError(f"{label} indices {sorted(bad)} outside 1..{m}")


def make_coefficients(
    plan: RedistributionPlan, dec: DecompositionResult, M: ReconstructionMatrix
) -> np.ndarray:
    """New approximation coefficients per the plan.

    Fixed coefficients keep the values in ``dec.approx``.  Manual plans copy
    ``free_values`` verbatim.  Solver plans choose the free coefficients by
    least squares so the rebuilt approximation hits the target values at the
    target positions; ``extremum_transition`` additionally flattens the
    original extrema of the rebuilt approximation to its median (skipping
    positions that only fixed coefficients can reach).
    """
    a = dec.approx
    m = a.size
    if M.m != m:
        raise PlanError(f"matrix expects {M.m} coefficients, decomposition has {m}")
    if M.n != dec.extended_length:
        raise PlanError(
            f"matrix synthesizes length {M.n}, decomposition describes {dec.extended_length}"
        )
    fixed = plan.fixed_indices
    if fixed is None:
        fixed = fixed_border_indices(M, dec.meta)
    _validate_indices(fixed, m, "fixed")

    if plan.strategy == "manual":
        free = dict(plan.free_values or {})
        _validate_indices(free, m, "free")
        overlap = fixed & free.keys()
        if overlap:
            raise PlanError(f"coefficients {sorted(overlap)} are both fixed and free")
        missing = set(range(1, m + 1)) - fixed - free.keys()
        if missing:
            raise PlanError(f"coefficients {sorted(missing)} are neither fixed nor assigned")
        ahat = a.copy()
        for idx, val in free.items():
            ahat[idx - 1] = val
        return ahat

    targets = list(plan.targets)
    free_cols = sorted(set(range(m)) - {i - 1 for i in fixed})
    if plan.strategy == "extremum_transition":
        rebuilt = apply_matrix(M, a)
        median = float(np.median(rebuilt))
        requested = {pos for pos, _ in targets}
        maxima, minima = local_extrema(rebuilt)
        for pos in maxima + minima:
            if pos in requested:
                continue
            reach = np.abs(M.entries[pos - 1, free_cols]).max() if free_cols else 0.0
            if reach <= RANK_TOL:
                log.debug("extremum at position %d is pinned by fixed coefficients; left as is", pos)
                continue
            targets.append((pos, median))
    if not targets:
        raise PlanError(f"{plan.strategy} plans need at least one target")
    _validate_indices([pos for pos, _ in targets], M.n, "target")
    if len({pos for pos, _ in targets}) != len(targets):
        raise PlanError("duplicate target positions")

    rows = [pos - 1 for pos, _ in targets]
    wanted = np.array([val for _, val in targets])
    fixed_cols = sorted(i - 1 for i in fixed)
    coef_matrix = M.entries[np.ix_(rows, free_cols)] if free_cols else np.zeros((len(rows), 0))
    rhs = wanted - M.entries[np.ix_(rows, fixed_cols)] @ a[fixed_cols]
    rank = np.linalg.matrix_rank(coef_matrix, tol=RANK_TOL) if free_cols else 0
    rank_aug = np.linalg.matrix_rank(np.column_stack([coef_matrix, rhs]), tol=RANK_TOL)
    if rank_aug > rank:
        raise InfeasibleTargetsError(
            f"{len(targets)} target(s) span rank {rank_aug} but the {len(free_cols)} "
            f"free coefficient(s) only provide rank {rank}"
        )
    ahat = a.copy()
    if free_cols:
        solution, *_ = np.linalg.lstsq(coef_matrix, rhs, rcond=None)
        ahat[free_cols] = solution
    return ahat


def redistribute(
    c,
    plan: RedistributionPlan,
    f: WaveletFilterPair,
    k: int,
    direction: str = "left",
) -> tuple[np.ndarray, ShiftScaleRecord, dict]:
    """Rewrite concentration signal ``c`` per ``plan``; see the module docstring.

    Returns the final signal at the original length, the applied
    shift/scale, and a JSON-ready report with the intermediate arrays and
    all invariant checks.
    """
    original = as_signal(c)
    if np.any(original < 0.0) or np.any(original > 1.0):
        raise SignalError("concentration signal values must lie in [0, 1]")
    extended, meta = extend_to_even(original, direction)
    dec = analyze(extended, f, k, meta=meta)
    M = build_reconstruction_matrix(f, meta.extended_length, k)
    fixed = plan.fixed_indices
    if fixed is None:
        fixed = fixed_border_indices(M, meta)
    resolved = RedistributionPlan(
        strategy=plan.strategy,
        fixed_indices=fixed,
        free_values=plan.free_values,
        targets=plan.targets,
        floor=plan.floor,
    )
    ahat = make_coefficients(resolved, dec, M)
    rebuilt = apply_matrix(M, ahat)
    for u, d in enumerate(dec.details, start=1):
        rebuilt = rebuilt + synth_detail(d, f, u, meta.extended_length)
    if not np.all(np.isfinite(rebuilt)):
        raise SignalError("rebuilt signal is not finite")

    shift = 0.0 if plan.floor is None else max(0.0, plan.floor - float(rebuilt.min()))
    shifted = rebuilt + shift
    info = meta.informative_slice
    original_sum = float(extended[info].sum())
    shifted_sum = float(shifted[info].sum())
    if original_sum <= 0.0:
        raise SignalError("degenerate signal: informative samples sum to zero")
    if abs(shifted_sum) < 1e-300:
        raise SignalError("degenerate shifted signal: informative samples sum to zero")
    scale = original_sum / shifted_sum
    if not (np.isfinite(scale) and scale > 0):
        raise SignalError(f"mean-preserving scale must be positive, got {scale}")
    final_extended = scale * shifted

    record = ShiftScaleRecord(
        shift=shift,
        scale=scale,
        informative_range=(info.start + 1, info.stop),
    )
    checks = verify_outcome(extended, final_extended, f, k, meta)
    report = {
        "strategy": resolved.strategy,
        "level": k,
        "extension": meta.direction,
        "fixed_indices": sorted(fixed),
        "floor": plan.floor,
        "shift": shift,
        "scale": scale,
        "informative_range": list(record.informative_range),
        "coefficients_before": dec.approx.tolist(),
        "coefficients_after": ahat.tolist(),
        "extended_before": extended.tolist(),
        "extended_after": final_extended.tolist(),
        "checks": checks,
    }
    return final_extended[info], record, report


def verify_outcome(c, c_final, f: WaveletFilterPair, k: int, meta: ExtensionMeta) -> dict:
    """Check the redistribution contracts on an original/final signal pair.

    Accepts the signals either at the original length (they are re-extended
    per ``meta``) or already extended.  The detail-proportionality residual
    is measured against the least-squares scale between the two detail
    coefficient sets, so the check needs no knowledge of the shift/scale
    record.
    """
    before = as_signal(c)
    after = as_signal(c_final)
    if before.size != after.size:
        raise SignalError(f"signals differ in length: {before.size} vs {after.size}")
    if before.size == meta.original_length and meta.original_length != meta.extended_length:
        before, _ = extend_to_even(before, meta.direction)
        after, _ = extend_to_even(after, meta.direction)
    elif before.size != meta.extended_length:
        raise SignalError(
            f"signals of length {before.size} match neither the original ({meta.original_length}) "
            f"nor the extended ({meta.extended_length}) length"
        )
    info = meta.informative_slice
    mean_delta = float(after[info].mean() - before[info].mean())

    dec_before = analyze(before, f, k, meta=meta)
    dec_after = analyze(after, f, k, meta=meta)
    flat_before = np.concatenate(dec_before.details)
    flat_after = np.concatenate(dec_after.details)
    energy = float(flat_before @ flat_before)
    detail_scale = float(flat_after @ flat_before) / energy if energy > 0.0 else 1.0
    detail_residual = float(np.abs(flat_after - detail_scale * flat_before).max())

    if meta.direction == "left" and meta.extended_length != meta.original_length:
        border_equal = abs(float(after[0] - after[1])) < CHECK_TOL
    elif meta.direction == "right" and meta.extended_length != meta.original_length:
        border_equal = abs(float(after[-1] - after[-2])) < CHECK_TOL
    else:
        border_equal = True

    max_before, min_before = local_extrema(before)
    max_after, min_after = local_extrema(after)
    return {
        "mean_delta": mean_delta,
        "detail_scale": detail_scale,
        "detail_residual": detail_residual,
        "positivity": bool(after.min() > 0.0),
        "border_equality": border_equal,
        "extrema_before": {"maxima": max_before, "minima": min_before},
        "extrema_after": {"maxima": max_after, "minima": min_after},
    }


def format_plot_data(before, after, delimiter: str = "\t") -> str:
    """Three-column dump (1-based position, original value, final value)."""
    b = as_signal(before)
    a = as_signal(after)
    if b.size != a.size:
        raise SignalError(f"signals differ in length: {b.size} vs {a.size}")
    lines = [delimiter.join(("index", "before", "after"))]
    for pos, (x, y) in enumerate(zip(b, a), start=1):
        lines.append(delimiter.join((str(pos), format(x, ".10g"), format(y, ".10g"))))
    return "\n".join(lines) + "\n"
