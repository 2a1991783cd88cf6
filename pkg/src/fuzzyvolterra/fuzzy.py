"""Fuzzy numbers represented by their alpha-level bands.

A fuzzy number with continuous level map is stored as two arrays of
endpoints sampled on the uniform alpha grid ``alpha_i = i / K``; between
grid nodes the endpoints are linear in alpha.  On this class every
supremum over alpha of a difference of endpoints is attained at a node,
so the metric and the embedding below are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_LEVELS = 32
VALIDITY_TOL = 1e-9


class FuzzyError(ValueError):
    pass


class GridMismatchError(FuzzyError):
    pass


class InvalidFuzzyNumberError(FuzzyError):
    pass


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise FuzzyError(f"interval endpoints must be finite: [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise FuzzyError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def alpha_nodes(levels: int) -> np.ndarray:
    if levels < 2:
        raise FuzzyError(f"alpha grid needs at least 2 cells, got {levels}")
    return np.linspace(0.0, 1.0, levels + 1)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FuzzyNumber:
    """Endpoint bands ``lower[i]``, ``upper[i]`` of the level set at ``i / K``.

    Construction only checks shapes; use :func:`validate` (or
    :func:`ensure_valid`) to check the fuzzy-number invariants.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = _frozen(self.lower)
        upper = _frozen(self.upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise FuzzyError(
                f"lower/upper must be 1-d arrays of equal length, got {lower.shape} and {upper.shape}"
            )
        if lower.size < 3:
            raise FuzzyError("a band needs at least 3 alpha nodes (K >= 2)")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def levels(self) -> int:
        return self.lower.size - 1

    @property
    def alphas(self) -> np.ndarray:
        return alpha_nodes(self.levels)

    @property
    def support(self) -> Interval:
        return Interval(self.lower[0], self.upper[0])

    @property
    def core(self) -> Interval:
        return Interval(self.lower[-1], self.upper[-1])

    def resample(self, levels: int) -> "FuzzyNumber":
        """Band on a different alpha grid by linear interpolation in alpha."""
        if levels == self.levels:
            return self
        a = alpha_nodes(levels)
        return FuzzyNumber(np.interp(a, self.alphas, self.lower), np.interp(a, self.alphas, self.upper))

    def __add__(self, other: "FuzzyNumber") -> "FuzzyNumber":
        return add(self, other)

    def __rmul__(self, lam: float) -> "FuzzyNumber":
        return scale(lam, self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FuzzyNumber):
            return NotImplemented
        return (
            self.levels == other.levels
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self) -> str:
        return (
            f"FuzzyNumber(K={self.levels}, support=[{self.lower[0]:.6g}, {self.upper[0]:.6g}], "
            f"core=[{self.lower[-1]:.6g}, {self.upper[-1]:.6g}])"
        )


def triangular(left: float, mode: float, right: float, levels: int = DEFAULT_LEVELS) -> FuzzyNumber:
    if not left <= mode <= right:
        raise FuzzyError(f"triangular needs left <= mode <= right, got ({left}, {mode}, {right})")
    a = alpha_nodes(levels)
    return FuzzyNumber(left + a * (mode - left), right - a * (right - mode))


def crisp(value: float, levels: int = DEFAULT_LEVELS) -> FuzzyNumber:
    band = np.full(levels + 1, float(value))
    return FuzzyNumber(band, band)


def zero(levels: int = DEFAULT_LEVELS) -> FuzzyNumber:
    """The fuzzy null set (indicator of the point 0)."""
    return crisp(0.0, levels)


def _check_grid(u: FuzzyNumber, v: FuzzyNumber) -> None:
    if u.levels != v.levels:
        raise GridMismatchError(f"alpha grids differ: K={u.levels} vs K={v.levels}")


def interval_hausdorff(a: Interval, b: Interval) -> float:
    # For closed intervals the sup-inf definition reduces to the larger endpoint gap.
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi))


def metric_D(u: FuzzyNumber, v: FuzzyNumber) -> float:
    """Supremum over alpha of the Hausdorff distance between level sets."""
    _check_grid(u, v)
    return float(max(np.max(np.abs(u.lower - v.lower)), np.max(np.abs(u.upper - v.upper))))


def norm(u: FuzzyNumber) -> float:
    """``metric_D(u, 0)``."""
    return float(max(np.max(np.abs(u.lower)), np.max(np.abs(u.upper))))


def add(u: FuzzyNumber, v: FuzzyNumber) -> FuzzyNumber:
    _check_grid(u, v)
    return FuzzyNumber(u.lower + v.lower, u.upper + v.upper)


def scale(lam: float, u: FuzzyNumber) -> FuzzyNumber:
    lam = float(lam)
    if lam >= 0:
        return FuzzyNumber(lam * u.lower, lam * u.upper)
    return FuzzyNumber(lam * u.upper, lam * u.lower)


def embed_j(u: FuzzyNumber, alphas: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint functions ``(u^-(alpha), u^+(alpha))``.

    Returned on the number's own grid, or interpolated at ``alphas`` when
    given (any points in [0, 1]).
    """
    if alphas is None:
        return u.lower.copy(), u.upper.copy()
    alphas = np.asarray(alphas, dtype=float)
    if np.any((alphas < 0) | (alphas > 1)):
        raise FuzzyError("alpha samples must lie in [0, 1]")
    return np.interp(alphas, u.alphas, u.lower), np.interp(alphas, u.alphas, u.upper)


def sup_norm_distance(f: tuple[np.ndarray, np.ndarray], g: tuple[np.ndarray, np.ndarray]) -> float:
    """Distance in C([0,1], R^2) with the max-norm on R^2, over the sampled points."""
    return float(np.max(np.maximum(np.abs(f[0] - g[0]), np.abs(f[1] - g[1]))))


def level_at(u: FuzzyNumber, alpha: float) -> Interval:
    if not 0.0 <= alpha <= 1.0:
        raise FuzzyError(f"alpha must lie in [0, 1], got {alpha}")
    a = u.alphas
    return Interval(float(np.interp(alpha, a, u.lower)), float(np.interp(alpha, a, u.upper)))


@dataclass(frozen=True)
class Verdict:
    valid: bool
    index: Optional[int] = None
    kind: Optional[str] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.valid


def validate(u: FuzzyNumber, tol: float = VALIDITY_TOL) -> Verdict:
    """Check the fuzzy-number invariants, scanning alpha nodes upward.

    Kinds reported: ``nonfinite``, ``crossing`` (lower > upper at a node;
    at node K this is an empty core), ``lower_nesting`` (lower decreases),
    ``upper_nesting`` (upper increases).  ``tol`` is relative once the
    endpoints exceed 1 in magnitude, so roundoff in large bands passes.
    """
    lo, hi = u.lower, u.upper
    finite = np.concatenate([lo, hi])
    finite = finite[np.isfinite(finite)]
    tol = tol * max(1.0, float(np.abs(finite).max(initial=0.0)))
    if finite.size == 2 * lo.size and not (
        np.any(lo > hi + tol) or np.any(np.diff(lo) < -tol) or np.any(np.diff(hi) > tol)
    ):
        return Verdict(True)
    # something is wrong: scan in order to name the first violation
    for i in range(lo.size):
        if not (np.isfinite(lo[i]) and np.isfinite(hi[i])):
            return Verdict(False, i, "nonfinite", f"non-finite endpoint at level {i}")
        if lo[i] > hi[i] + tol:
            what = "empty core" if i == lo.size - 1 else "lower > upper"
            return Verdict(False, i, "crossing", f"{what} at level {i}: {float(lo[i])!r} > {float(hi[i])!r}")
        if i > 0:
            if lo[i] < lo[i - 1] - tol:
                return Verdict(False, i, "lower_nesting", f"lower endpoint decreases at level {i}")
            if hi[i] > hi[i - 1] + tol:
                return Verdict(False, i, "upper_nesting", f"upper endpoint increases at level {i}")
    return Verdict(True)


def ensure_valid(u: FuzzyNumber, what: str = "fuzzy number") -> FuzzyNumber:
    verdict = validate(u)
    if not verdict:
        raise InvalidFuzzyNumberError(f"invalid {what}: {verdict.message}")
    return u
