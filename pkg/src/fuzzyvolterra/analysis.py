"""Boundedness and level-equicontinuity diagnostics for sampled families.

A finite family is always relatively compact, so the numbers computed
here are evidence about the parametric family the sample is drawn
from: the uniform bound and the uniform modulus of the level map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fuzzy import FuzzyError, FuzzyNumber, GridMismatchError, validate

DELTA_LADDER = tuple(2.0**-k for k in range(1, 7))
EVIDENCE_NOTE = "sampled-family evidence, not a proof"


class AnalysisError(FuzzyError):
    pass


@dataclass(frozen=True, eq=False)
class FamilySample:
    members: tuple[FuzzyNumber, ...]
    label: str = ""

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise AnalysisError("family sample is empty")
        k = members[0].levels
        for idx, u in enumerate(members):
            if u.levels != k:
                raise GridMismatchError(f"member {idx} has K={u.levels}, expected {k}")
            verdict = validate(u)
            if not verdict:
                raise AnalysisError(f"member {idx} is not a valid fuzzy number: {verdict.message}")
        object.__setattr__(self, "members", members)

    @property
    def levels(self) -> int:
        return self.members[0].levels

    def bands(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([u.lower for u in self.members]), np.array([u.upper for u in self.members]))

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class CompactnessReport:
    label: str
    levels: int
    size: int
    bound: float
    bound_cap: float
    eps: float
    delta: float
    modulus_at_delta: float
    modulus: list[tuple[float, float]]
    bounded_verdict: bool
    equicontinuous_verdict: bool
    verdict: bool
    refinement_delta: float
    note: str = EVIDENCE_NOTE

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "levels": self.levels,
            "members": self.size,
            "bound": self.bound,
            "bound_cap": self.bound_cap,
            "eps": self.eps,
            "delta": self.delta,
            "modulus_at_delta": self.modulus_at_delta,
            "modulus": [{"delta": d, "omega": w} for d, w in self.modulus],
            "bounded_verdict": self.bounded_verdict,
            "equicontinuous_verdict": self.equicontinuous_verdict,
            "verdict": self.verdict,
            "refinement_delta": self.refinement_delta,
            "note": self.note,
        }


def family_bound(family: FamilySample) -> float:
    """``max_u D(u, 0)`` over the members."""
    lower, upper = family.bands()
    return float(max(np.abs(lower).max(), np.abs(upper).max()))


def _max_lag(delta: float, levels: int) -> int:
    # node pairs with |alpha_i - alpha_j| <= delta, allowing for rounding in delta * K
    return min(levels, int(math.floor(delta * levels + 1e-9)))


def equicontinuity_modulus(family: FamilySample, delta: float) -> float:
    """Largest ``d_H([u]^a, [u]^b)`` over members and grid nodes with ``|a - b| <= delta``."""
    if not 0 < delta <= 1:
        raise AnalysisError(f"delta must lie in (0, 1], got {delta}")
    lower, upper = family.bands()
    omega = 0.0
    for lag in range(1, _max_lag(delta, family.levels) + 1):
        gap = max(
            np.abs(lower[:, lag:] - lower[:, :-lag]).max(),
            np.abs(upper[:, lag:] - upper[:, :-lag]).max(),
        )
        omega = max(omega, float(gap))
    return omega


def modulus_table(family: FamilySample, ladder: Sequence[float] = DELTA_LADDER) -> list[tuple[float, float]]:
    return [(float(d), equicontinuity_modulus(family, d)) for d in sorted(ladder, reverse=True)]


def refine(family: FamilySample, factor: int = 2) -> FamilySample:
    return FamilySample([u.resample(u.levels * factor) for u in family.members], family.label)


def compactness_verdict(
    family: FamilySample,
    bound_cap: float,
    eps: float,
    delta: float,
    ladder: Sequence[float] = DELTA_LADDER,
) -> CompactnessReport:
    if not bound_cap > 0:
        raise AnalysisError(f"bound cap must be positive, got {bound_cap}")
    if not eps > 0:
        raise AnalysisError(f"eps must be positive, got {eps}")
    if not 0 < delta <= 1:
        raise AnalysisError(f"delta must lie in (0, 1], got {delta}")
    bound = family_bound(family)
    omega = equicontinuity_modulus(family, delta)
    bounded = bound <= bound_cap
    equicontinuous = omega < eps
    refined = equicontinuity_modulus(refine(family), delta)
    return CompactnessReport(
        label=family.label,
        levels=family.levels,
        size=len(family),
        bound=bound,
        bound_cap=float(bound_cap),
        eps=float(eps),
        delta=float(delta),
        modulus_at_delta=omega,
        modulus=modulus_table(family, ladder),
        bounded_verdict=bounded,
        equicontinuous_verdict=equicontinuous,
        verdict=bounded and equicontinuous,
        refinement_delta=abs(refined - omega),
    )


def greedy_net(family: FamilySample, radius: float, alphas: Optional[np.ndarray] = None) -> list[int]:
    """Indices of centres of a greedy ``radius``-net in the embedded space C([0,1], R^2).

    Members are taken in order; a member becomes a centre when it lies
    farther than ``radius`` (sup metric) from every existing centre.
    """
    lower, upper = family.bands()
    if alphas is not None:
        grid = np.linspace(0.0, 1.0, family.levels + 1)
        lower = np.array([np.interp(alphas, grid, row) for row in lower])
        upper = np.array([np.interp(alphas, grid, row) for row in upper])
    centres: list[int] = []
    for i in range(lower.shape[0]):
        if centres:
            c = np.array(centres)
            dist = np.maximum(np.abs(lower[c] - lower[i]).max(axis=1), np.abs(upper[c] - upper[i]).max(axis=1))
            if dist.min() <= radius:
                continue
        centres.append(i)
    return centres


def power_family(max_power: int, levels: int = 100) -> FamilySample:
    """Members with ``upper(alpha) = (1 - alpha)^n`` and ``lower = 0``, ``n = 1..max_power``.

    Each member is a valid fuzzy number but the family is not
    level-equicontinuous: the drop near ``alpha = 0`` steepens with ``n``.
    """
    a = np.linspace(0.0, 1.0, levels + 1)
    zeros = np.zeros_like(a)
    members = [FuzzyNumber(zeros, (1.0 - a) ** n) for n in range(1, max_power + 1)]
    return FamilySample(members, f"(1-alpha)^n, n<={max_power}")


def triangular_sweep(modes: Sequence[float], levels: int = 64) -> FamilySample:
    """Members ``triangular(0, m, 2m)``."""
    from .fuzzy import triangular

    return FamilySample([triangular(0.0, m, 2 * m, levels) for m in modes], "triangular(0, m, 2m)")
