"""Picard solver for the fuzzy fractional integral equation

    u(t) = u0(t) + 1/Gamma(q) * int_0^t (t - s)^(q-1) f(s, u(s)) ds,

together with the a-priori constants (N, M, eta) that guarantee a
solution on [0, eta] and runnable checks of the estimates behind that
guarantee: the self-map bound, the Hoelder bound on the integral
operator, and level-equicontinuity of its image.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import fuzzy
from .analysis import _max_lag
from .fuzzy import FuzzyNumber, InvalidFuzzyNumberError
from .quadrature import (
    FuzzyTrajectory,
    KernelWeights,
    TimeGrid,
    gamma_fn,
    product_trapezoid_weights,
    singular_product_weights,
    validate_trajectory,
)

SELF_MAP_TOL = 1e-8
HOLDER_TOL = 1e-8
IMAGE_TOL = 1e-10


class SolverError(ValueError):
    pass


class PreconditionError(SolverError):
    pass


class OmegaWarning(UserWarning):
    """An iterate left the ball ``D_X(u, 0) <= R``."""


@dataclass(frozen=True, eq=False)
class RhsSpec:
    """Right-hand side ``f(t, u)`` from a small catalogue.

    ``linear``: ``lam * u``; ``affine``: ``c(t) * u + g(t)`` with ``c >= 0``
    tabulated over time; ``singular_linear``: ``lam * t^(-r) * u``.
    """

    kind: str
    lam: float = 0.0
    r: float = 0.0
    c_times: Optional[np.ndarray] = None
    c_values: Optional[np.ndarray] = None
    g: Optional[FuzzyTrajectory] = None

    KINDS = ("linear", "affine", "singular_linear")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise SolverError(f"unknown rhs kind {self.kind!r}; expected one of {self.KINDS}")
        if self.lam < 0:
            raise SolverError(f"rhs coefficient lambda must be >= 0, got {self.lam}")
        if self.kind == "singular_linear" and not 0 < self.r < 1:
            raise SolverError(f"singular power r must lie in (0, 1), got {self.r}")
        if self.kind == "affine":
            if self.c_times is None or self.c_values is None or self.g is None:
                raise SolverError("affine rhs needs a coefficient table c and a forcing g")
            if np.any(np.asarray(self.c_values) < 0):
                raise SolverError("affine coefficient c(t) must be nonnegative")
            bad = validate_trajectory(self.g)
            if bad is not None:
                raise InvalidFuzzyNumberError(f"forcing g invalid at node {bad[0]}: {bad[1].message}")

    @classmethod
    def linear(cls, lam: float) -> "RhsSpec":
        return cls("linear", lam=float(lam))

    @classmethod
    def singular_linear(cls, lam: float, r: float) -> "RhsSpec":
        return cls("singular_linear", lam=float(lam), r=float(r))

    @classmethod
    def affine(
        cls,
        c: Union[float, Sequence[Sequence[float]]],
        g: Union[FuzzyNumber, FuzzyTrajectory],
        horizon: Optional[float] = None,
    ) -> "RhsSpec":
        """``c`` is a constant or rows ``(t, c(t))``; a constant ``g`` needs ``horizon``."""
        if np.ndim(c) == 0:
            times, values = np.array([0.0]), np.array([float(c)])
        else:
            table = np.asarray(c, dtype=float)
            times, values = table[:, 0], table[:, 1]
        if isinstance(g, FuzzyNumber):
            if horizon is None:
                raise SolverError("a constant forcing needs the problem horizon")
            g = FuzzyTrajectory.constant(TimeGrid(np.array([0.0, horizon])), g)
        return cls("affine", c_times=times, c_values=values, g=g)

    def coefficient(self, times: np.ndarray) -> np.ndarray:
        """Scalar multiplying ``u`` at each time (``t^(-r)`` excluded for the singular kind)."""
        times = np.asarray(times, dtype=float)
        if self.kind == "affine":
            return np.interp(times, self.c_times, self.c_values)
        return np.full(times.shape, self.lam)

    def __call__(self, t: float, u: FuzzyNumber) -> FuzzyNumber:
        if self.kind == "linear":
            return fuzzy.scale(self.lam, u)
        if self.kind == "singular_linear":
            if t <= 0:
                raise SolverError("singular rhs is undefined at t = 0")
            return fuzzy.scale(self.lam * t ** (-self.r), u)
        g = self.g.at(t).resample(u.levels)
        return fuzzy.add(fuzzy.scale(float(self.coefficient(t)), u), g)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    a: float
    q: float
    u0: Union[FuzzyNumber, FuzzyTrajectory]
    rhs: RhsSpec
    R: float
    levels: int = fuzzy.DEFAULT_LEVELS
    steps: int = 256
    grading: Optional[float] = None
    tol: float = 1e-12
    max_iter: int = 200
    t_min: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise PreconditionError(f"horizon a must be positive, got {self.a}")
        if not 0 < self.q < 1:
            raise PreconditionError(f"order q must lie in (0, 1), got {self.q}")
        if not self.R > 0:
            raise PreconditionError(f"radius R must be positive, got {self.R}")
        if self.levels < 2:
            raise PreconditionError(f"need at least 2 alpha cells, got {self.levels}")
        if self.steps < 1:
            raise PreconditionError(f"need at least 1 time step, got {self.steps}")
        if self.grading is not None and self.grading < 1:
            raise PreconditionError(f"grading exponent must be >= 1, got {self.grading}")
        if not self.tol > 0 or self.max_iter < 1:
            raise PreconditionError("tol must be positive and max_iter at least 1")
        if self.rhs.kind == "singular_linear" and not self.rhs.r < self.q:
            raise PreconditionError(f"singular power r={self.rhs.r} must be below q={self.q}")
        if self.t_min is not None and not 0 < self.t_min <= self.a:
            raise PreconditionError(f"t_min must lie in (0, a], got {self.t_min}")
        if isinstance(self.u0, FuzzyTrajectory):
            if self.u0.grid.horizon < self.a * (1 - 1e-12):
                raise PreconditionError(f"u0 covers [0, {self.u0.grid.horizon}], shorter than a={self.a}")
            bad = validate_trajectory(self.u0)
            if bad is not None:
                raise InvalidFuzzyNumberError(f"u0 invalid at node {bad[0]}: {bad[1].message}")
        else:
            fuzzy.ensure_valid(self.u0, "u0")

    @property
    def effective_grading(self) -> float:
        if self.grading is not None:
            return float(self.grading)
        if self.rhs.kind == "singular_linear":
            return max(1.0, 2.0 / (1.0 - self.rhs.r))
        return 1.0

    def u0_on(self, grid: TimeGrid) -> FuzzyTrajectory:
        if isinstance(self.u0, FuzzyNumber):
            return FuzzyTrajectory.constant(grid, self.u0.resample(self.levels))
        traj = self.u0.resample(grid)
        if traj.levels == self.levels:
            return traj
        return FuzzyTrajectory.from_values(grid, [v.resample(self.levels) for v in traj])

    def replace(self, **changes) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, **changes)


# -- a-priori constants -------------------------------------------------------


def compute_N(u0: Union[FuzzyNumber, FuzzyTrajectory]) -> float:
    """``sup_t D(u0(t), 0)`` over the nodes carrying ``u0``."""
    if isinstance(u0, FuzzyNumber):
        return fuzzy.norm(u0)
    return float(u0.norms().max())


def default_t_min(problem: ProblemSpec) -> float:
    """First node of the ``steps``-cell mesh on ``[0, a]``."""
    return problem.a * (1.0 / problem.steps) ** problem.effective_grading


def estimate_M(
    rhs: RhsSpec, q: float, a: float, R: float, t_min: Optional[float] = None
) -> tuple[float, str]:
    """Upper bound for ``sup D(f(t, x), 0)`` over ``t in (0, a]``, ``D(x, 0) <= R``.

    Returns ``(M, method)``.  For the singular kind the sup over ``(0, a]``
    is infinite; the value is taken over ``[t_min, a]`` and tagged so.
    """
    if not R > 0:
        raise SolverError(f"R must be positive, got {R}")
    if rhs.kind == "linear":
        return rhs.lam * R, "exact: lambda*R"
    if rhs.kind == "affine":
        c_max = float(np.max(rhs.coefficient(np.concatenate([rhs.c_times, [0.0, a]]))))
        g_max = float(rhs.g.resample(TimeGrid(_span(rhs.g.grid.nodes, a))).norms().max())
        return c_max * R + g_max, "bound: max c * R + max D(g, 0)"
    if t_min is None or not 0 < t_min <= a:
        raise SolverError("singular rhs needs t_min in (0, a]")
    return rhs.lam * t_min ** (-rhs.r) * R, f"sup over (0,a] estimated on [t_min, a], t_min={t_min:.6g}"


def _span(nodes: np.ndarray, a: float) -> np.ndarray:
    inside = nodes[nodes < a]
    return np.concatenate([inside, [a]])


def compute_eta(a: float, q: float, R: float, N: float, M: float) -> float:
    """``min(a, ((R - N) Gamma(q + 1) / M)^(1/q))``; ``a`` when ``M == 0``."""
    if not R > N:
        raise PreconditionError(
            f"the radius R={R:g} must exceed N={N:g}, the largest distance of u0(t) from 0"
        )
    if M < 0:
        raise SolverError(f"M must be nonnegative, got {M}")
    if M == 0:
        return float(a)
    return float(min(a, ((R - N) * gamma_fn(q + 1) / M) ** (1.0 / q)))


# -- operators ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Operator:
    """The integral operator and fixed-point map discretized on one grid."""

    problem: ProblemSpec
    grid: TimeGrid
    weights: KernelWeights
    coeff: np.ndarray
    forcing_lower: Optional[np.ndarray]
    forcing_upper: Optional[np.ndarray]
    u0: FuzzyTrajectory
    inv_gamma: float

    @classmethod
    def build(cls, problem: ProblemSpec, grid: TimeGrid) -> "_Operator":
        rhs = problem.rhs
        if rhs.kind == "singular_linear":
            weights = singular_product_weights(problem.q, rhs.r, grid)
        else:
            weights = product_trapezoid_weights(problem.q, grid)
        fl = fu = None
        if rhs.kind == "affine":
            g = rhs.g.resample(grid)
            if g.levels != problem.levels:
                g = FuzzyTrajectory.from_values(grid, [v.resample(problem.levels) for v in g])
            fl, fu = g.lower, g.upper
        return cls(problem, grid, weights, rhs.coefficient(grid.nodes)[:, None], fl, fu,
                   problem.u0_on(grid), 1.0 / gamma_fn(problem.q))

    def integrand(self, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bands of ``f(t_j, u_j)`` (``s^(-r)`` stays in the weights for the singular kind)."""
        fl, fu = self.coeff * lower, self.coeff * upper
        if self.forcing_lower is not None:
            fl = fl + self.forcing_lower
            fu = fu + self.forcing_upper
        return fl, fu

    def apply_A(self, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        fl, fu = self.integrand(lower, upper)
        w = self.weights.matrix
        return w @ fl, w @ fu

    def apply_T(self, lower: np.ndarray, upper: np.ndarray):
        al, au = self.apply_A(lower, upper)
        return self.u0.lower + self.inv_gamma * al, self.u0.upper + self.inv_gamma * au, al, au


def _sup_dist(l1, u1, l2, u2) -> float:
    return float(max(np.abs(l1 - l2).max(), np.abs(u1 - u2).max()))


def _sup_norm(lower, upper) -> float:
    return float(max(np.abs(lower).max(), np.abs(upper).max()))


def _checked(grid: TimeGrid, lower: np.ndarray, upper: np.ndarray, what: str) -> FuzzyTrajectory:
    traj = FuzzyTrajectory(grid, lower, upper)
    bad = validate_trajectory(traj)
    if bad is not None:
        raise InvalidFuzzyNumberError(f"{what} invalid at time node {bad[0]}: {bad[1].message}")
    return traj


def _ball_warning(u: FuzzyTrajectory, R: float) -> None:
    if u.norms().max() > R * (1 + 1e-12):
        warnings.warn(f"trajectory leaves the ball of radius {R:g}", OmegaWarning, stacklevel=3)


def apply_A(u: FuzzyTrajectory, problem: ProblemSpec) -> FuzzyTrajectory:
    """``t -> int_0^t (t - s)^(q-1) f(s, u(s)) ds`` on the grid of ``u``."""
    _ball_warning(u, problem.R)
    op = _Operator.build(problem, u.grid)
    al, au = op.apply_A(u.lower, u.upper)
    return _checked(u.grid, al, au, "integral image")


def apply_T(u: FuzzyTrajectory, problem: ProblemSpec) -> FuzzyTrajectory:
    """``u0 + A u / Gamma(q)`` on the grid of ``u``."""
    _ball_warning(u, problem.R)
    op = _Operator.build(problem, u.grid)
    tl, tu, _, _ = op.apply_T(u.lower, u.upper)
    return _checked(u.grid, tl, tu, "fixed-point image")


# -- checks of the a-priori estimates -----------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "worst": self.worst, "detail": self.detail}


def holder_all_pairs(
    image: FuzzyTrajectory, M: float, q: float, tol: float = HOLDER_TOL
) -> CheckResult:
    """``D(Au(t1), Au(t2)) <= (2M/q)(t2 - t1)^q`` for every pair of grid nodes.

    ``worst`` is the largest ratio of the two sides (pairs with a
    vanishing right side are judged on the additive tolerance alone).
    """
    t = image.grid.nodes
    lo, up = image.lower, image.upper
    worst = 0.0
    passed = True
    for i in range(len(t) - 1):
        lhs = np.maximum(np.abs(lo[i + 1:] - lo[i]).max(axis=1), np.abs(up[i + 1:] - up[i]).max(axis=1))
        rhs = (2.0 * M / q) * (t[i + 1:] - t[i]) ** q
        if np.any(lhs > rhs + tol):
            passed = False
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > tol, np.inf, 0.0))
        worst = max(worst, float(ratio.max()))
    return CheckResult("holder", passed, worst, f"M={M:.6g}")


def check_holder(problem: ProblemSpec, u: FuzzyTrajectory, t1: float, t2: float,
                 M: Optional[float] = None, tol: float = HOLDER_TOL) -> CheckResult:
    """Hoelder estimate for the integral image of ``u`` at two grid nodes."""
    t = u.grid.nodes
    i1, i2 = (int(np.argmin(np.abs(t - x))) for x in (t1, t2))
    if not (np.isclose(t[i1], t1, rtol=1e-12, atol=0) and np.isclose(t[i2], t2, rtol=1e-12, atol=0)):
        raise SolverError("t1 and t2 must be grid nodes")
    if t1 > t2:
        raise SolverError("need t1 <= t2")
    if M is None:
        M = estimate_M(problem.rhs, problem.q, problem.a, problem.R, _t_min(problem))[0]
    image = apply_A(u, problem)
    lhs = fuzzy.metric_D(image[i1], image[i2])
    rhs = (2.0 * M / problem.q) * (t[i2] - t[i1]) ** problem.q
    ratio = lhs / rhs if rhs > 0 else 0.0
    return CheckResult("holder", lhs <= rhs + tol, ratio, f"lhs={lhs:.6g} rhs={rhs:.6g}")


def _modulus_rows(lower: np.ndarray, upper: np.ndarray, delta: float) -> np.ndarray:
    """Level-map modulus of every row (leading axes kept) at ``delta``."""
    levels = lower.shape[-1] - 1
    out = np.zeros(lower.shape[:-1])
    for lag in range(1, _max_lag(delta, levels) + 1):
        gap = np.maximum(np.abs(lower[..., lag:] - lower[..., :-lag]).max(axis=-1),
                         np.abs(upper[..., lag:] - upper[..., :-lag]).max(axis=-1))
        out = np.maximum(out, gap)
    return out


@dataclass
class ImageEquicontinuity:
    passed: bool
    eps_passed: bool
    f_modulus: float
    image_modulus: np.ndarray
    bound: np.ndarray
    worst_ratio: float

    def to_check(self) -> CheckResult:
        return CheckResult("level_equicontinuity", self.passed, self.worst_ratio,
                           f"f modulus={self.f_modulus:.6g}, eps implication holds={self.eps_passed}")


def check_level_equicontinuity_of_image(
    problem: ProblemSpec, sample: Sequence[FuzzyTrajectory], eps: float, delta: float
) -> ImageEquicontinuity:
    """Modulus of ``{Au(t)}`` against the modulus of ``{f(s, u(s))}`` times the kernel mass.

    For every node ``t``, the modulus of the image family at ``delta`` must
    not exceed ``omega_f * int_0^t (t - s)^(q-1) ds`` (``t^q / q``; for the
    singular kind the ``s^(-r)`` factor is part of the kernel mass).  The
    ``eps`` verdict states the implication: if ``omega_f`` times the largest
    kernel mass is below ``eps`` then every image modulus is below ``eps``.
    """
    if not sample:
        raise SolverError("empty sample")
    grid = sample[0].grid
    op = _Operator.build(problem, grid)
    fls, fus, als, aus = [], [], [], []
    for u in sample:
        if not np.array_equal(u.grid.nodes, grid.nodes):
            raise SolverError("sample trajectories must share one grid")
        fl, fu = op.integrand(u.lower, u.upper)
        al, au = op.apply_A(u.lower, u.upper)
        fls.append(fl), fus.append(fu), als.append(al), aus.append(au)
    f_mod = float(_modulus_rows(np.array(fls), np.array(fus), delta).max())
    image = _modulus_rows(np.array(als), np.array(aus), delta).max(axis=0)
    mass = op.weights.row_sums()
    bound = f_mod * mass
    passed = bool(np.all(image <= bound + IMAGE_TOL))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, image / bound, np.where(image > IMAGE_TOL, np.inf, 0.0))
    # regular kernel: max mass is eta^q / q, so this is omega_f < q eps / eta^q
    eps_passed = True
    if f_mod * mass.max() < eps:
        eps_passed = bool(np.all(image < eps))
    return ImageEquicontinuity(passed, eps_passed, f_mod, image, bound, float(ratio.max()))


# -- Picard iteration ---------------------------------------------------------


@dataclass
class SolveReport:
    N: float
    M: float
    M_method: str
    eta: float
    horizon: float
    iterations: int
    status: str
    residual_trace: list[float]
    final_residual: float
    solution: FuzzyTrajectory
    checks: dict[str, CheckResult]
    R: float
    q: float
    levels: int
    steps: int
    grading: float
    tol: float
    continuation_pieces: int = 1
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def value_at(self, t: float) -> FuzzyNumber:
        return self.solution.at(t)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "N": self.N,
            "M": self.M,
            "M_method": self.M_method,
            "eta": self.eta,
            "horizon": self.horizon,
            "R": self.R,
            "q": self.q,
            "iterations": self.iterations,
            "residual_trace": self.residual_trace,
            "final_residual": self.final_residual,
            "continuation_pieces": self.continuation_pieces,
            "grid": {"levels": self.levels, "steps": self.steps, "grading": self.grading},
            "tol": self.tol,
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "warnings": self.warnings,
        }


def _t_min(problem: ProblemSpec) -> Optional[float]:
    if problem.rhs.kind != "singular_linear":
        return None
    return problem.t_min if problem.t_min is not None else default_t_min(problem)


def _continuation(op: _Operator, lower, upper, pieces: int, tol: float, max_iter: int):
    """Blockwise Picard: earlier blocks are frozen while a later one iterates."""
    n = op.grid.steps
    edges = np.linspace(1, n + 1, pieces + 1).round().astype(int)
    lower, upper = lower.copy(), upper.copy()
    w = op.weights.matrix
    for start, stop in zip(edges[:-1], edges[1:]):
        if stop <= start:
            continue
        rows = slice(start, stop)
        for _ in range(max_iter):
            with np.errstate(over="ignore", invalid="ignore"):
                fl, fu = op.integrand(lower, upper)
                nl = op.u0.lower[rows] + op.inv_gamma * (w[rows, :stop] @ fl[:stop])
                nu = op.u0.upper[rows] + op.inv_gamma * (w[rows, :stop] @ fu[:stop])
                res = _sup_dist(nl, nu, lower[rows], upper[rows])
            if not math.isfinite(res):
                return lower, upper, False
            lower[rows], upper[rows] = nl, nu
            if res < tol:
                break
        else:
            return lower, upper, False
    return lower, upper, True


def picard_solve(
    problem: ProblemSpec,
    horizon: Optional[float] = None,
    continuation: bool = True,
    image_delta: float = 0.125,
    image_eps: float = 0.1,
) -> SolveReport:
    """Iterate ``u <- u0 + A u / Gamma(q)`` from ``u0`` on ``[0, eta]``.

    ``horizon`` replaces ``eta`` as the end of the time grid; a value
    beyond ``eta`` is allowed (the existence guarantee no longer covers
    it) and is recorded in the report's warnings.
    """
    N = compute_N(problem.u0)
    M, method = estimate_M(problem.rhs, problem.q, problem.a, problem.R, _t_min(problem))
    eta = compute_eta(problem.a, problem.q, problem.R, N, M)
    notes: list[str] = []
    T = eta
    if horizon is not None:
        if not 0 < horizon <= problem.a:
            raise PreconditionError(f"horizon must lie in (0, a], got {horizon}")
        if horizon > eta * (1 + 1e-12):
            notes.append(f"horizon {horizon:g} exceeds eta {eta:g}: existence not guaranteed there")
        T = float(horizon)
    grid = TimeGrid.graded(T, problem.steps, problem.effective_grading)
    op = _Operator.build(problem, grid)

    lower, upper = op.u0.lower, op.u0.upper
    trace: list[float] = []
    sample: list[FuzzyTrajectory] = []
    self_map_worst = -math.inf
    holder = CheckResult("holder", True, 0.0)
    left_ball = False
    status = "not_converged"
    for _ in range(problem.max_iter):
        if _sup_norm(lower, upper) > problem.R * (1 + 1e-12):
            left_ball = True
        tl, tu, al, au = op.apply_T(lower, upper)
        self_map_worst = max(self_map_worst, _sup_norm(tl, tu) - problem.R)
        image = _checked(grid, al, au, "integral image")
        h = holder_all_pairs(image, M, problem.q)
        if not h.passed or h.worst > holder.worst:
            holder = CheckResult("holder", holder.passed and h.passed, max(holder.worst, h.worst), h.detail)
        sample.append(FuzzyTrajectory(grid, lower, upper))
        res = _sup_dist(tl, tu, lower, upper)
        trace.append(res)
        if not math.isfinite(res):
            notes.append("iteration diverged to non-finite values")
            break
        lower, upper = tl, tu
        if res < problem.tol:
            status = "converged"
            break

    pieces = 1
    if status != "converged" and continuation:
        for pieces in (2, 4, 8, 16, 32):
            cl, cu, ok = _continuation(op, lower, upper, pieces, problem.tol, problem.max_iter)
            if ok:
                lower, upper = cl, cu
                status = "converged"
                break
        if status == "converged":
            notes.append(f"converged by continuation over {pieces} sub-horizons")

    solution = _checked(grid, lower, upper, "solution")
    tl, tu, al, au = op.apply_T(lower, upper)
    final_residual = _sup_dist(tl, tu, lower, upper)
    if pieces > 1 and status == "converged":
        self_map_worst = max(self_map_worst, _sup_norm(tl, tu) - problem.R)
        h = holder_all_pairs(_checked(grid, al, au, "integral image"), M, problem.q)
        holder = CheckResult("holder", holder.passed and h.passed, max(holder.worst, h.worst), h.detail)
    if status == "converged" and final_residual >= problem.tol:
        # the tolerance was met by the last step, not by a fresh application
        notes.append(f"fresh residual {final_residual:.3g} is not below tol")

    sample.append(solution)
    image_check = check_level_equicontinuity_of_image(problem, sample, image_eps, image_delta)
    if left_ball:
        notes.append(f"an iterate left the ball of radius {problem.R:g}")
    checks = {
        "self_map": CheckResult("self_map", self_map_worst <= SELF_MAP_TOL, self_map_worst,
                                "max over iterates of D_X(Tu, 0) - R"),
        "holder": holder,
        "level_equicontinuity": image_check.to_check(),
    }
    return SolveReport(
        N=N, M=M, M_method=method, eta=eta, horizon=T, iterations=len(trace), status=status,
        residual_trace=trace, final_residual=final_residual, solution=solution, checks=checks,
        R=problem.R, q=problem.q, levels=problem.levels, steps=problem.steps,
        grading=problem.effective_grading, tol=problem.tol, continuation_pieces=pieces, warnings=notes,
    )


def refinement_delta(problem: ProblemSpec) -> tuple[float, float, SolveReport, SolveReport]:
    """Relative change of the solution at the end of the horizon when ``steps`` doubles.

    The fine problem is solved on its own ``[0, eta]``; the coarse one on
    the same horizon.  Returns ``(delta, t, fine, coarse)``; ``delta`` is
    ``D(fine(t), coarse(t)) / D(fine(t), 0)``.
    """
    fine = picard_solve(problem.replace(steps=2 * problem.steps))
    coarse = picard_solve(problem, horizon=fine.horizon)
    t = fine.horizon
    uf, uc = fine.solution[-1], coarse.solution[-1]
    return fuzzy.metric_D(uf, uc) / fuzzy.norm(uf), t, fine, coarse
