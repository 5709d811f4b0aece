"""Dense circulant synthesis operators for the filter bank.

The level-1 low-pass operator for an even length n is the n x (n/2) matrix
whose column j (0-based) carries tap i at row (2j + i - 1) mod n; applying
it reproduces :func:`groupanon.wavelets.synth_approx` at level 1, and its
transpose is the analysis step.  Level-k operators are products of k
single-level operators of halving sizes.  Columns are orthonormal, and the
low-pass and high-pass operators of one size resolve the identity:
``L @ L.T + H @ H.T == I``.

Matrices are materialized dense: redistribution planning inspects rows to
see which coefficients drive which samples, and the signals involved are
short (hundreds of samples, not millions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SignalError
from .wavelets import WaveletFilterPair, max_level


@dataclass(frozen=True)
class ReconstructionMatrix:
    """Synthesis operator mapping level-k coefficients to a length-n signal."""

    entries: np.ndarray
    level: int
    filters: WaveletFilterPair

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def dump(self) -> str:
        """Plain-text rows of 4-decimal fixed-point entries."""
        return "\n".join(
            " ".join(f"{value:8.4f}" for value in row) for row in self.entries
        )


def _single_level(taps: np.ndarray, n: int) -> np.ndarray:
    m = n // 2
    mat = np.zeros((n, m))
    for j in range(m):
        for i in range(taps.size):
            # += so taps folding onto the same row (n < tap count) accumulate
            mat[(2 * j + i - 1) % n, j] += taps[i]
    return mat


def _check_size(n: int, k: int) -> None:
    if n < 2 or n % 2 != 0:
        raise SignalError(f"signal length must be even and >= 2, got {n}")
    admissible = max_level(n)
    if not 1 <= k <= admissible:
        raise SignalError(
            f"level {k} needs length divisible by 2**{k}; "
            f"maximum admissible level for length {n} is {admissible}"
        )


def build_reconstruction_matrix(f: WaveletFilterPair, n: int, k: int) -> ReconstructionMatrix:
    """Level-k approximation synthesis operator (n x n/2**k)."""
    _check_size(n, k)
    mat = _single_level(f.lowpass, n)
    size = n // 2
    for _ in range(k - 1):
        mat = mat @ _single_level(f.lowpass, size)
        size //= 2
    return ReconstructionMatrix(mat, k, f)


def build_detail_synthesis_matrix(f: WaveletFilterPair, n: int, u: int) -> ReconstructionMatrix:
    """Level-u detail synthesis operator: u-1 low-pass stages atop one high-pass stage."""
    _check_size(n, u)
    mat: np.ndarray | None = None
    size = n
    for _ in range(u - 1):
        step = _single_level(f.lowpass, size)
        mat = step if mat is None else mat @ step
        size //= 2
    high = _single_level(f.highpass, size)
    mat = high if mat is None else mat @ high
    return ReconstructionMatrix(mat, u, f)


def apply_matrix(M: ReconstructionMatrix, a) -> np.ndarray:
    """Matrix-vector product mapping coefficients to the synthesized signal."""
    coef = np.asarray(a, dtype=float)
    if coef.shape != (M.m,):
        raise SignalError(f"expected {M.m} coefficients, got shape {coef.shape}")
    return M.entries @ coef
