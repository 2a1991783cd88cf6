"""Independent reference values used to check the numerical machinery.

Nothing here calls the quadrature or solver code paths it is used to
check, except :func:`run_oracle_suite`, which compares the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

ML_MAX_TERMS = 200
ML_TERM_TOL = 1e-16
ML_MAX_ABS_Z = 3.0


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    name: str
    computed: float
    reference: float
    abs_err: float
    rel_err: float
    passed: bool
    tolerance: float

    @classmethod
    def compare(cls, name: str, computed: float, reference: float, tolerance: float) -> "OracleResult":
        abs_err = abs(computed - reference)
        rel_err = abs_err / abs(reference) if reference != 0 else (0.0 if abs_err == 0 else math.inf)
        passed = abs_err <= tolerance or rel_err <= tolerance
        return cls(name, float(computed), float(reference), abs_err, rel_err, passed, tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:<44s} computed={self.computed:.15g} reference={self.reference:.15g} "
            f"abs={self.abs_err:.2e} rel={self.rel_err:.2e} tol={self.tolerance:.0e}"
        )


def mittag_leffler(q: float, z: float) -> float:
    """One-parameter Mittag-Leffler function by its power series.

    Terms are formed through ``lgamma`` so large ``k`` does not overflow.
    Raises :class:`OracleError` if 200 terms do not bring the term size
    below 1e-16 (relative to the partial sum).
    """
    if not 0 < q <= 1:
        raise OracleError(f"q must lie in (0, 1], got {q}")
    if abs(z) > ML_MAX_ABS_Z:
        raise OracleError(f"|z| <= {ML_MAX_ABS_Z} supported, got {z}")
    if z == 0:
        return 1.0
    log_abs_z = math.log(abs(z))
    total = 0.0
    for k in range(ML_MAX_TERMS + 1):
        mag = math.exp(k * log_abs_z - math.lgamma(q * k + 1))
        term = -mag if (z < 0 and k % 2) else mag
        total += term
        if k > 0 and mag < ML_TERM_TOL * max(1.0, abs(total)):
            return total
    raise OracleError(f"series for E_{q}({z}) not converged in {ML_MAX_TERMS} terms")


def mittag_leffler_half(z: float) -> float:
    """``E_{1/2}(z) = exp(z^2) * erfc(-z)``, i.e. ``exp(z^2)(1 + erf z)``."""
    return math.exp(z * z) * math.erfc(-z)


def crisp_linear_solution(q: float, lam: float, c: float, t: float) -> float:
    """Solution ``c E_q(lam t^q)`` of the crisp linear fractional Volterra equation."""
    if lam < 0 or t < 0:
        raise OracleError(f"need lam >= 0 and t >= 0, got lam={lam}, t={t}")
    if lam == 0:
        return float(c)
    return c * mittag_leffler(q, lam * t**q)


def singular_linear_solution(q: float, r: float, lam: float, c: float, t: float) -> float:
    """Crisp solution of ``u = c + lam/Gamma(q) int_0^t (t-s)^(q-1) s^(-r) u(s) ds``.

    Power series ``sum_k c_k t^(k mu)`` with ``mu = q - r`` and
    ``c_(k+1) = lam c_k Gamma(k mu + 1 - r) / Gamma(k mu + 1 - r + q)``.
    """
    if not 0 < r < q < 1:
        raise OracleError(f"need 0 < r < q < 1, got r={r}, q={q}")
    if lam < 0 or t < 0:
        raise OracleError(f"need lam >= 0 and t >= 0, got lam={lam}, t={t}")
    mu = q - r
    x = t**mu
    coef, total = float(c), float(c)
    for k in range(ML_MAX_TERMS):
        coef *= lam * math.exp(math.lgamma(k * mu + 1 - r) - math.lgamma(k * mu + 1 - r + q))
        term = coef * x ** (k + 1)
        total += term
        if abs(term) < ML_TERM_TOL * max(1.0, abs(total)):
            return total
    raise OracleError(f"singular series not converged in {ML_MAX_TERMS} terms")


def brute_hausdorff(a: Sequence[float], b: Sequence[float]) -> float:
    """Literal sup-inf Hausdorff distance between two finite point sets on the line."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise OracleError("empty sample")
    return max(_directed(a, b), _directed(b, a))


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    # b sorted: the nearest point is one of the two neighbours of the insertion slot
    idx = np.searchsorted(b, a)
    left = b[np.clip(idx - 1, 0, b.size - 1)]
    right = b[np.clip(idx, 0, b.size - 1)]
    return float(np.max(np.minimum(np.abs(a - left), np.abs(a - right))))


def interval_sample(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / step)))
    return np.linspace(lo, hi, n + 1)


def kernel_moment(q: float, t: float, p: int) -> float:
    """``int_0^t (t - s)^(q-1) s^p ds = t^(q+p) * p! * Gamma(q) / Gamma(q+p+1)``."""
    return t ** (q + p) * math.exp(math.lgamma(p + 1) + math.lgamma(q) - math.lgamma(q + p + 1))


def run_oracle_suite(gamma: Optional[Callable[[float], float]] = None) -> list[OracleResult]:
    """Compare library routines against the closed forms and series above.

    ``gamma`` replaces the library gamma function for the gamma checks;
    it exists so the failure path can be exercised.
    """
    from . import fuzzy
    from .quadrature import TimeGrid, gamma_fn, product_trapezoid_weights
    from .solver import ProblemSpec, RhsSpec, picard_solve

    g = gamma or gamma_fn
    out: list[OracleResult] = []

    for x, ref in [(0.5, math.sqrt(math.pi)), (1.0, 1.0), (1.5, math.sqrt(math.pi) / 2),
                   (5.0, 24.0), (10.0, 362880.0), (0.1, 9.513507698668731836)]:
        out.append(OracleResult.compare(f"gamma({x})", g(x), ref, 1e-12))

    for z in (-3.0, -1.0, 0.5, 2.0, 3.0):
        out.append(OracleResult.compare(f"E_1({z}) vs exp", mittag_leffler(1.0, z), math.exp(z), 1e-12))
    for z in (0.0, 0.5, 1.0, 1.5):
        out.append(OracleResult.compare(f"E_1/2({z}) series vs erfc identity",
                                        mittag_leffler(0.5, z), mittag_leffler_half(z), 1e-10))

    for q in (0.1, 0.5, 0.9):
        w = product_trapezoid_weights(q, TimeGrid.uniform(0.25, 16))
        out.append(OracleResult.compare(f"row sum q={q} t=0.25", w.row_sums()[-1], 0.25**q / q, 1e-12))
    grid = TimeGrid.uniform(1.0, 64)
    w = product_trapezoid_weights(0.5, grid)
    out.append(OracleResult.compare("int (1-s)^-1/2 s ds", float(w.matrix[-1] @ grid.nodes),
                                    kernel_moment(0.5, 1.0, 1), 1e-12))

    for (a, b, ref) in [((1.0, 3.0), (2.0, 5.0), 2.0), ((-1.0, 4.0), (0.0, 0.0), 4.0)]:
        d = fuzzy.interval_hausdorff(fuzzy.Interval(*a), fuzzy.Interval(*b))
        brute = brute_hausdorff(interval_sample(*a, 1e-3), interval_sample(*b, 1e-3))
        out.append(OracleResult.compare(f"d_H({list(a)}, {list(b)}) vs brute force", d, brute, 2e-3))
        out.append(OracleResult.compare(f"d_H({list(a)}, {list(b)}) closed form", d, ref, 1e-15))

    problem = ProblemSpec(a=0.25, q=0.5, u0=fuzzy.crisp(1.0, 4), rhs=RhsSpec.linear(1.0), R=4.0,
                          levels=4, steps=128)
    report = picard_solve(problem)
    out.append(OracleResult.compare("crisp solve u(0.25), n=128", report.solution.lower[-1, -1],
                                    crisp_linear_solution(0.5, 1.0, 1.0, 0.25), 1e-2))
    return out
