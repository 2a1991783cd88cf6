"""Levelwise fuzzy integration against the Abel kernel ``(t - s)^(q-1)``.

The integrand is replaced by its piecewise-linear interpolant on a time
grid and the kernel is integrated exactly against each hat function
(product trapezoidal rule).  All weights are nonnegative, so applying
them endpoint by endpoint maps fuzzy numbers to fuzzy numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import special

from .fuzzy import (
    FuzzyError,
    FuzzyNumber,
    GridMismatchError,
    InvalidFuzzyNumberError,
    VALIDITY_TOL,
    Verdict,
    metric_D,
    validate,
)

BOUND_TOL = 1e-10


class QuadratureError(ValueError):
    pass


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise QuadratureError(f"gamma_fn needs a positive argument, got {x}")
    return math.gamma(x)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray
    grading: float = 1.0

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise QuadratureError("a time grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise QuadratureError("time grid nodes must be finite")
        if nodes[0] != 0.0:
            raise QuadratureError(f"time grid must start at 0, got {nodes[0]}")
        if np.any(np.diff(nodes) <= 0):
            raise QuadratureError("time grid nodes must be strictly increasing")
        if self.grading < 1:
            raise QuadratureError(f"grading exponent must be >= 1, got {self.grading}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        return cls.graded(horizon, steps, 1.0)

    @classmethod
    def graded(cls, horizon: float, steps: int, grading: float) -> "TimeGrid":
        if steps < 1:
            raise QuadratureError(f"need at least one time step, got {steps}")
        if not horizon > 0:
            raise QuadratureError(f"horizon must be positive, got {horizon}")
        nodes = horizon * (np.arange(steps + 1) / steps) ** grading
        nodes[-1] = horizon
        return cls(nodes, float(grading))

    @property
    def steps(self) -> int:
        return self.nodes.size - 1

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return self.nodes.size


@dataclass(frozen=True, eq=False)
class KernelWeights:
    """Row ``n`` of ``matrix`` integrates ``(t_n - s)^(q-1) g(s)`` from the node values of ``g``.

    With ``singular_power = r > 0`` the rows instead integrate
    ``(t_n - s)^(q-1) s^(-r) g(s)``.
    """

    q: float
    grid: TimeGrid
    matrix: np.ndarray
    singular_power: float = 0.0

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def row_sum_reference(self) -> np.ndarray:
        t = self.grid.nodes
        if self.singular_power == 0:
            return t**self.q / self.q
        r = self.singular_power
        return t ** (self.q - r) * special.beta(self.q, 1 - r)


def _power_gap(a: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    """``(a + h)^p - a^p`` without cancellation for ``h << a``."""
    out = np.empty_like(a)
    pos = a > 0
    out[pos] = a[pos] ** p * np.expm1(p * np.log1p(h[pos] / a[pos]))
    out[~pos] = h[~pos] ** p
    return out


def _cell_weights(q: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left/right hat weights of every cell ``j < n`` for every row ``n``.

    Returns ``(wl, wr, mask)`` of shape ``(n+1, n)``; entries with
    ``j >= n`` are zero.
    """
    n = t.size - 1
    rows = t[:, None]
    mask = np.arange(n)[None, :] < np.arange(n + 1)[:, None]
    h = np.broadcast_to(np.diff(t)[None, :], (n + 1, n))
    a = np.where(mask, rows - t[None, 1:], 0.0)
    b = np.where(mask, rows - t[None, :-1], 1.0)
    hm = np.where(mask, h, 1.0)
    dq = _power_gap(a, hm, q)
    dq1 = _power_gap(a, hm, q + 1)
    wl = (dq1 / (q + 1) - a * dq / q) / hm
    wr = (b * dq / q - dq1 / (q + 1)) / hm
    wl = np.where(mask, wl, 0.0)
    wr = np.where(mask, wr, 0.0)
    return wl, wr, mask


def _check_q(q: float) -> None:
    if not 0 < q < 1:
        raise QuadratureError(f"kernel exponent q must lie in (0, 1), got {q}")


def _assemble(wl: np.ndarray, wr: np.ndarray) -> np.ndarray:
    n = wl.shape[1]
    w = np.zeros((n + 1, n + 1))
    w[:, :n] += wl
    w[:, 1:] += wr
    return w


def product_trapezoid_weights(q: float, grid: TimeGrid) -> KernelWeights:
    _check_q(q)
    wl, wr, _ = _cell_weights(q, grid.nodes)
    w = _assemble(wl, wr)
    if np.any(w < 0):
        raise QuadratureError("negative product-integration weight")
    w.setflags(write=False)
    return KernelWeights(q, grid, w)


def singular_product_weights(q: float, r: float, grid: TimeGrid) -> KernelWeights:
    """Weights for ``int_0^{t_n} (t_n - s)^(q-1) s^(-r) g(s) ds``.

    Away from the first cell ``s^(-r) g(s)`` is interpolated as one
    piecewise-linear function.  On ``[0, t_1]`` only ``g`` is interpolated
    and the two moments of ``(t_n - s)^(q-1) s^(-r)`` are taken in closed
    form from the incomplete beta function.
    """
    _check_q(q)
    if not 0 < r < 1:
        raise QuadratureError(f"singular power r must lie in (0, 1), got {r}")
    t = grid.nodes
    wl, wr, _ = _cell_weights(q, t)
    wl[:, 0] = 0.0
    wr[:, 0] = 0.0
    w = _assemble(wl, wr)
    w[:, 1:] *= t[None, 1:] ** (-r)

    t1 = t[1]
    tn = t[1:]
    x1 = t1 / tn
    m0 = tn ** (q - r) * special.beta(1 - r, q) * special.betainc(1 - r, q, x1)
    m1 = tn ** (q - r + 1) * special.beta(2 - r, q) * special.betainc(2 - r, q, x1)
    w[1:, 0] += m0 - m1 / t1
    w[1:, 1] += m1 / t1
    if np.any(w < 0):
        raise QuadratureError("negative product-integration weight")
    w.setflags(write=False)
    return KernelWeights(q, grid, w, float(r))


@dataclass(frozen=True, eq=False)
class FuzzyTrajectory:
    """Fuzzy numbers at the nodes of a time grid, stored as 2-d endpoint bands.

    ``lower[j, i]`` is the lower endpoint at time node ``j`` and alpha node ``i``.
    """

    grid: TimeGrid
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 2:
            raise FuzzyError("trajectory bands must be equal-shape 2-d arrays")
        if lower.shape[0] != len(self.grid):
            raise GridMismatchError(
                f"trajectory has {lower.shape[0]} values for a grid of {len(self.grid)} nodes"
            )
        if lower.shape[1] < 3:
            raise FuzzyError("a band needs at least 3 alpha nodes (K >= 2)")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def constant(cls, grid: TimeGrid, u: FuzzyNumber) -> "FuzzyTrajectory":
        m = len(grid)
        return cls(grid, np.tile(u.lower, (m, 1)), np.tile(u.upper, (m, 1)))

    @classmethod
    def from_values(cls, grid: TimeGrid, values: Sequence[FuzzyNumber]) -> "FuzzyTrajectory":
        return cls(grid, np.array([v.lower for v in values]), np.array([v.upper for v in values]))

    @property
    def levels(self) -> int:
        return self.lower.shape[1] - 1

    def __len__(self) -> int:
        return self.lower.shape[0]

    def __getitem__(self, j: int) -> FuzzyNumber:
        return FuzzyNumber(self.lower[j], self.upper[j])

    def __iter__(self) -> Iterator[FuzzyNumber]:
        return (self[j] for j in range(len(self)))

    @property
    def values(self) -> list[FuzzyNumber]:
        return list(self)

    def norms(self) -> np.ndarray:
        """``D(u(t_j), 0)`` for every node."""
        return np.maximum(np.abs(self.lower).max(axis=1), np.abs(self.upper).max(axis=1))

    def at(self, t: float) -> FuzzyNumber:
        lo, up = self._interp(np.array([t]))
        return FuzzyNumber(lo[0], up[0])

    def resample(self, grid: TimeGrid) -> "FuzzyTrajectory":
        """Values at the nodes of ``grid`` by linear interpolation in time."""
        lo, up = self._interp(grid.nodes)
        return FuzzyTrajectory(grid, lo, up)

    def _interp(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nodes = self.grid.nodes
        if np.any(times < 0) or np.any(times > nodes[-1] * (1 + 1e-12)):
            raise QuadratureError(f"times outside [0, {nodes[-1]}]")
        j = np.clip(np.searchsorted(nodes, times, side="right") - 1, 0, nodes.size - 2)
        theta = np.clip((times - nodes[j]) / (nodes[j + 1] - nodes[j]), 0.0, 1.0)[:, None]
        lo = (1 - theta) * self.lower[j] + theta * self.lower[j + 1]
        up = (1 - theta) * self.upper[j] + theta * self.upper[j + 1]
        return lo, up


def validate_trajectory(F: FuzzyTrajectory) -> Optional[tuple[int, Verdict]]:
    """First invalid node and its verdict, or ``None`` when every value is valid."""
    lo, up = F.lower, F.upper
    # same per-node tolerance as fuzzy.validate
    both = np.concatenate([lo, up], axis=1)
    mag = np.where(np.isfinite(both), np.abs(both), 0.0).max(axis=1)
    tol = (VALIDITY_TOL * np.maximum(1.0, mag))[:, None]
    bad = (
        ~np.all(np.isfinite(lo) & np.isfinite(up), axis=1)
        | np.any(lo > up + tol, axis=1)
        | np.any(np.diff(lo, axis=1) < -tol, axis=1)
        | np.any(np.diff(up, axis=1) > tol, axis=1)
    )
    if not np.any(bad):
        return None
    j = int(np.argmax(bad))
    return j, validate(F[j])


def _check_weights(F: FuzzyTrajectory, weights: KernelWeights) -> None:
    if weights.grid is not F.grid and not np.array_equal(weights.grid.nodes, F.grid.nodes):
        raise GridMismatchError("kernel weights were built on a different time grid")


def fuzzy_integral(F: FuzzyTrajectory, upto: int, weights: KernelWeights) -> FuzzyNumber:
    """Levelwise kernel integral of ``F`` over ``[0, t_upto]``."""
    _check_weights(F, weights)
    if not 1 <= upto < len(F):
        raise QuadratureError(f"node index must lie in [1, {len(F) - 1}], got {upto}")
    bad = validate_trajectory(F)
    if bad is not None:
        raise InvalidFuzzyNumberError(f"integrand invalid at time node {bad[0]}: {bad[1].message}")
    row = weights.matrix[upto]
    return FuzzyNumber(row @ F.lower, row @ F.upper)


def integral_metric_bound_check(
    F: FuzzyTrajectory, G: FuzzyTrajectory, weights: KernelWeights, n: int
) -> tuple[bool, float]:
    """``D(int F, int G) <= int D(F, G)`` at node ``n``; returns ``(holds, slack)``."""
    _check_weights(G, weights)
    lhs = metric_D(fuzzy_integral(F, n, weights), fuzzy_integral(G, n, weights))
    gaps = np.maximum(np.abs(F.lower - G.lower).max(axis=1), np.abs(F.upper - G.upper).max(axis=1))
    rhs = float(weights.matrix[n] @ gaps)
    return lhs <= rhs + BOUND_TOL, rhs - lhs
