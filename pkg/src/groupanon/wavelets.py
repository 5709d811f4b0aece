"""Decimated orthogonal wavelet analysis and synthesis with periodic boundaries.

Signals are plain 1-D float arrays.  Analysis splits an even-length signal
into half-length approximation and detail coefficient arrays; synthesis maps
coefficient arrays back to full length.  Both sides use circular indexing
with the tap window for output j anchored at sample 2j - 1 (0-based), which
makes analysis the exact transpose of the circulant synthesis operator
materialized in :mod:`groupanon.matrices`.  Odd-length signals are first made
even by duplicating one border sample (see :func:`extend_to_even`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SignalError

# Tolerance for the structural filter invariants (tap sums, orthogonality).
FILTER_TOL = 1e-10


def as_signal(values) -> np.ndarray:
    """Coerce ``values`` to a valid signal: 1-D, finite, at least 2 samples."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise SignalError(f"signal must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise SignalError(f"signal must have at least 2 samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise SignalError("signal contains non-finite values")
    return arr


@dataclass(frozen=True)
class WaveletFilterPair:
    """Orthogonal low-pass/high-pass filter taps of even length.

    The high-pass taps must be the quadrature mirror of the low-pass taps:
    ``highpass[i] == (-1)**i * lowpass[t - 1 - i]``.  Construction validates
    the tap-sum, unit-energy, mirror, and even-shift-orthogonality
    invariants at tolerance ``FILTER_TOL``.
    """

    lowpass: np.ndarray
    highpass: np.ndarray
    name: str = ""

    def __post_init__(self):
        low = np.asarray(self.lowpass, dtype=float)
        high = np.asarray(self.highpass, dtype=float)
        object.__setattr__(self, "lowpass", low)
        object.__setattr__(self, "highpass", high)
        t = low.size
        if t == 0 or t % 2 != 0 or high.size != t:
            raise SignalError("filters must share an even, positive tap count")
        if abs(low.sum() - math.sqrt(2.0)) > FILTER_TOL:
            raise SignalError("low-pass taps must sum to sqrt(2)")
        if abs(float(low @ low) - 1.0) > FILTER_TOL:
            raise SignalError("low-pass taps must have unit energy")
        mirror = _quadrature_mirror(low)
        if np.abs(high - mirror).max() > FILTER_TOL:
            raise SignalError("high-pass taps are not the quadrature mirror of the low-pass taps")
        for shift in range(2, t, 2):
            if abs(float(low[:-shift] @ low[shift:])) > FILTER_TOL:
                raise SignalError(f"low-pass taps correlate at even shift {shift}")

    @property
    def length(self) -> int:
        return self.lowpass.size

    @classmethod
    def from_lowpass(cls, lowpass, name: str = "") -> "WaveletFilterPair":
        low = np.asarray(lowpass, dtype=float)
        return cls(lowpass=low, highpass=_quadrature_mirror(low), name=name)


def _quadrature_mirror(low: np.ndarray) -> np.ndarray:
    t = low.size
    return np.array([(-1) ** i * low[t - 1 - i] for i in range(t)])


def db2_filter() -> WaveletFilterPair:
    """Length-4 Daubechies pair.

    Low-pass taps ((1+sqrt(3)), (3+sqrt(3)), (3-sqrt(3)), (1-sqrt(3))) / (4*sqrt(2)),
    numerically (0.4830, 0.8365, 0.2241, -0.1294).
    """
    s = math.sqrt(3.0)
    low = np.array([1.0 + s, 3.0 + s, 3.0 - s, 1.0 - s]) / (4.0 * math.sqrt(2.0))
    return WaveletFilterPair.from_lowpass(low, name="db2")


def haar_filter() -> WaveletFilterPair:
    """Length-2 Haar pair, mainly useful for quick sanity checks."""
    low = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return WaveletFilterPair.from_lowpass(low, name="haar")


_FILTERS = {"db2": db2_filter, "haar": haar_filter}


def filter_by_name(name: str) -> WaveletFilterPair:
    try:
        factory = _FILTERS[name]
    except KeyError:
        raise SignalError(f"unknown wavelet {name!r}; available: {sorted(_FILTERS)}") from None
    return factory()


@dataclass(frozen=True)
class ExtensionMeta:
    """How (and whether) a signal was padded to even length.

    ``direction`` is ``"left"``, ``"right"``, or ``"none"``.  The duplicated
    border sample, when present, carries no information of its own; the
    ``informative_slice`` property selects the original samples inside the
    extended signal.
    """

    direction: str
    original_length: int
    extended_length: int

    def __post_init__(self):
        if self.direction not in ("left", "right", "none"):
            raise SignalError(f"unknown extension direction {self.direction!r}")
        if self.extended_length % 2 != 0:
            raise SignalError("extended length must be even")
        pad = self.extended_length - self.original_length
        if pad not in (0, 1):
            raise SignalError("extension may add at most one sample")
        if self.direction == "none" and pad != 0:
            raise SignalError("direction 'none' cannot add a sample")

    @property
    def informative_slice(self) -> slice:
        if self.extended_length == self.original_length:
            return slice(0, self.extended_length)
        if self.direction == "left":
            return slice(1, self.extended_length)
        return slice(0, self.original_length)


def extend_to_even(s, direction: str = "left") -> tuple[np.ndarray, ExtensionMeta]:
    """Duplicate a border sample so the signal length becomes even.

    Even-length input is returned unchanged with ``direction == "none"``.
    ``direction`` picks the side: ``"left"`` prepends a copy of the first
    sample, ``"right"`` appends a copy of the last.
    """
    arr = as_signal(s)
    n = arr.size
    if n % 2 == 0:
        return arr, ExtensionMeta("none", n, n)
    if direction == "left":
        return np.concatenate(([arr[0]], arr)), ExtensionMeta("left", n, n + 1)
    if direction == "right":
        return np.concatenate((arr, [arr[-1]])), ExtensionMeta("right", n, n + 1)
    raise SignalError(f"extension direction must be 'left' or 'right', got {direction!r}")


def max_level(n: int) -> int:
    """Largest decomposition level admissible for an even length ``n``."""
    k = 0
    while n % 2 == 0 and n > 0:
        n //= 2
        k += 1
    return k


def _window_indices(n: int, taps: int) -> np.ndarray:
    # Output j reads samples (2j - 1 .. 2j + taps - 2) mod n.
    j = np.arange(n // 2)[:, None]
    i = np.arange(taps)[None, :]
    return (2 * j + i - 1) % n


def analyze_once(s, f: WaveletFilterPair) -> tuple[np.ndarray, np.ndarray]:
    """One decimated analysis step: half-length (approx, detail) coefficients."""
    arr = as_signal(s)
    if arr.size % 2 != 0:
        raise SignalError("signal must be extended to even length first")
    windows = arr[_window_indices(arr.size, f.length)]
    return windows @ f.lowpass, windows @ f.highpass


@dataclass(frozen=True)
class DecompositionResult:
    """Level-k approximation coefficients plus details for levels 1..k.

    ``details[u - 1]`` holds the level-u detail coefficients (length
    ``extended_length / 2**u``).
    """

    level: int
    approx: np.ndarray
    details: tuple[np.ndarray, ...]
    filters: WaveletFilterPair
    meta: ExtensionMeta

    @property
    def extended_length(self) -> int:
        return self.meta.extended_length


def analyze(s, f: WaveletFilterPair, k: int, meta: ExtensionMeta | None = None) -> DecompositionResult:
    """Cascade ``analyze_once`` k times on the running approximation.

    ``meta`` records how the signal was extended; when omitted the signal is
    taken as-is (no duplicated sample).
    """
    arr = as_signal(s)
    if k < 1:
        raise SignalError(f"decomposition level must be >= 1, got {k}")
    if arr.size % 2 != 0:
        raise SignalError("signal must be extended to even length first")
    admissible = max_level(arr.size)
    if k > admissible:
        raise SignalError(
            f"level {k} needs length divisible by 2**{k}; "
            f"maximum admissible level for length {arr.size} is {admissible}"
        )
    if meta is None:
        meta = ExtensionMeta("none", arr.size, arr.size)
    elif meta.extended_length != arr.size:
        raise SignalError(
            f"extension metadata describes length {meta.extended_length}, signal has {arr.size}"
        )
    approx = arr
    details = []
    for _ in range(k):
        approx, detail = analyze_once(approx, f)
        details.append(detail)
    return DecompositionResult(k, approx, tuple(details), f, meta)


def _synth_once(coef: np.ndarray, taps: np.ndarray, n: int) -> np.ndarray:
    # Adjoint of the analysis step: scatter coef[j] * taps into the output
    # at rows (2j + i - 1) mod n, accumulating where the taps wrap onto
    # the same sample.
    out = np.zeros(n)
    idx = _window_indices(n, taps.size)
    np.add.at(out, idx, coef[:, None] * taps[None, :])
    return out


def synth_approx(a_k, f: WaveletFilterPair, k: int, n: int) -> np.ndarray:
    """Length-n approximation from level-k coefficients (k low-pass stages)."""
    coef = np.asarray(a_k, dtype=float)
    if coef.ndim != 1 or coef.size * 2**k != n:
        raise SignalError(
            f"{coef.size} level-{k} coefficients cannot synthesize a length-{n} signal"
        )
    out = coef
    for level in range(k, 0, -1):
        out = _synth_once(out, f.lowpass, n // 2 ** (level - 1))
    return out


def synth_detail(d_u, f: WaveletFilterPair, u: int, n: int) -> np.ndarray:
    """Length-n detail from level-u coefficients (one high-pass stage, then u-1 low-pass)."""
    coef = np.asarray(d_u, dtype=float)
    if coef.ndim != 1 or coef.size * 2**u != n:
        raise SignalError(
            f"{coef.size} level-{u} coefficients cannot synthesize a length-{n} signal"
        )
    out = _synth_once(coef, f.highpass, n // 2 ** (u - 1))
    for level in range(u - 1, 0, -1):
        out = _synth_once(out, f.lowpass, n // 2 ** (level - 1))
    return out


def reconstruct(dec: DecompositionResult) -> np.ndarray:
    """Extended-length signal: approximation plus all details."""
    n = dec.extended_length
    out = synth_approx(dec.approx, dec.filters, dec.level, n)
    for u, d in enumerate(dec.details, start=1):
        out = out + synth_detail(d, dec.filters, u, n)
    return out
