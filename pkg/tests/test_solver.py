import math
import warnings

import numpy as np
import pytest

from fuzzyvolterra.fuzzy import InvalidFuzzyNumberError, crisp, metric_D, scale, triangular, validate
from fuzzyvolterra.quadrature import FuzzyTrajectory, TimeGrid
from fuzzyvolterra.solver import (
    OmegaWarning,
    PreconditionError,
    ProblemSpec,
    RhsSpec,
    SolverError,
    apply_A,
    apply_T,
    check_holder,
    check_level_equicontinuity_of_image,
    compute_eta,
    compute_N,
    default_t_min,
    estimate_M,
    picard_solve,
    refinement_delta,
)
from fuzzyvolterra.verification import crisp_linear_solution, mittag_leffler_half, singular_linear_solution

from conftest import random_trajectory


def close(u, v, tol=1e-12):
    return np.allclose(u.lower, v.lower, atol=tol, rtol=0) and np.allclose(u.upper, v.upper, atol=tol, rtol=0)


def linear_problem(u0=None, lam=1.0, **kw):
    args = dict(a=0.25, q=0.5, u0=u0 if u0 is not None else crisp(1.0), rhs=RhsSpec.linear(lam), R=4.0)
    args.update(kw)
    return ProblemSpec(**args)


class TestConstants:
    def test_N_examples(self):
        assert compute_N(crisp(1.0)) == 1.0
        assert compute_N(triangular(0, 1, 2)) == 2.0
        g = TimeGrid.uniform(1.0, 10)
        traj = FuzzyTrajectory.from_values(g, [scale(t, triangular(0, 1, 2)) for t in g.nodes])
        assert compute_N(traj) == pytest.approx(2.0)

    def test_M_examples(self):
        assert estimate_M(RhsSpec.linear(1.0), 0.5, 1.0, 2.0)[0] == 2.0
        assert estimate_M(RhsSpec.linear(0.0), 0.5, 1.0, 2.0)[0] == 0.0
        rhs = RhsSpec.affine(0.5, crisp(1.0), horizon=1.0)
        assert estimate_M(rhs, 0.5, 1.0, 2.0)[0] == pytest.approx(2.0)

    def test_M_affine_table(self):
        rhs = RhsSpec.affine([[0.0, 0.2], [0.5, 1.0], [1.0, 0.4]], triangular(0, 1, 3), horizon=1.0)
        assert estimate_M(rhs, 0.5, 1.0, 2.0)[0] == pytest.approx(1.0 * 2.0 + 3.0)

    def test_M_singular_tagged(self):
        M, method = estimate_M(RhsSpec.singular_linear(1.0, 0.25), 0.5, 1.0, 2.0, t_min=1 / 16)
        assert M == pytest.approx(2.0 * 16**0.25)
        assert "t_min" in method
        with pytest.raises(SolverError):
            estimate_M(RhsSpec.singular_linear(1.0, 0.25), 0.5, 1.0, 2.0)

    def test_eta_pi_over_four(self):
        # ((R - N) Gamma(3/2) / M)^2 = Gamma(3/2)^2 = pi/4
        assert compute_eta(1.0, 0.5, 2.0, 1.0, 1.0) == pytest.approx(math.pi / 4, abs=1e-10)

    def test_eta_capped_by_a(self):
        assert compute_eta(0.1, 0.5, 2.0, 1.0, 1.0) == 0.1

    def test_eta_zero_M(self):
        assert compute_eta(1.0, 0.3, 2.0, 1.0, 0.0) == 1.0

    @pytest.mark.parametrize("R", [1.0, 0.5])
    def test_eta_needs_room(self, R):
        with pytest.raises(PreconditionError, match="must exceed N"):
            compute_eta(1.0, 0.5, R, 1.0, 1.0)

    def test_eta_monotone(self):
        Rs = np.linspace(1.01, 10, 40)
        etas = [compute_eta(100.0, 0.5, R, 1.0, 3.0) for R in Rs]
        assert all(a <= b for a, b in zip(etas, etas[1:]))
        Ms = np.linspace(0.1, 10, 40)
        etas = [compute_eta(100.0, 0.5, 2.0, 1.0, M) for M in Ms]
        assert all(a >= b for a, b in zip(etas, etas[1:]))

    def test_default_t_min(self):
        p = ProblemSpec(1.0, 0.5, crisp(1.0), RhsSpec.singular_linear(1.0, 0.25), 2.0, steps=16, grading=2.0)
        assert default_t_min(p) == pytest.approx(1 / 256)


class TestProblemSpec:
    @pytest.mark.parametrize(
        "kw",
        [dict(a=0), dict(q=1.0), dict(q=0.0), dict(R=0), dict(steps=0), dict(grading=0.5), dict(tol=0)],
    )
    def test_rejects(self, kw):
        with pytest.raises(PreconditionError):
            linear_problem(**kw)

    def test_singular_power_below_q(self):
        with pytest.raises(PreconditionError):
            ProblemSpec(1.0, 0.3, crisp(1.0), RhsSpec.singular_linear(1.0, 0.5), 2.0)

    def test_invalid_u0(self):
        from fuzzyvolterra.fuzzy import FuzzyNumber

        with pytest.raises(InvalidFuzzyNumberError):
            linear_problem(u0=FuzzyNumber([1.0, 0.0, 0.0], [2.0, 2.0, 2.0]))

    def test_rhs_catalogue(self):
        with pytest.raises(SolverError):
            RhsSpec("quadratic")
        with pytest.raises(SolverError):
            RhsSpec.linear(-1.0)
        with pytest.raises(SolverError):
            RhsSpec.affine(-0.5, crisp(1.0), horizon=1.0)

    def test_grading_defaults(self):
        assert linear_problem().effective_grading == 1.0
        p = ProblemSpec(1.0, 0.5, crisp(1.0), RhsSpec.singular_linear(1.0, 0.25), 2.0)
        assert p.effective_grading == pytest.approx(8 / 3)


class TestOperators:
    def test_A_on_crisp_one(self):
        g = TimeGrid.uniform(0.25, 16)
        Au = apply_A(FuzzyTrajectory.constant(g, crisp(1.0)), linear_problem())
        np.testing.assert_allclose(Au.lower[:, 0], 2 * np.sqrt(g.nodes), rtol=1e-13, atol=1e-15)

    def test_T_on_crisp_one(self):
        g = TimeGrid.uniform(0.25, 16)
        Tu = apply_T(FuzzyTrajectory.constant(g, crisp(1.0)), linear_problem())
        np.testing.assert_allclose(Tu.upper[:, 0], 1 + 2 * np.sqrt(g.nodes / math.pi), rtol=1e-13)

    def test_A_on_triangular(self):
        q = 0.3
        g = TimeGrid.uniform(1.0, 8)
        u = triangular(0, 1, 2)
        Au = apply_A(FuzzyTrajectory.constant(g, u), linear_problem(q=q, R=10.0))
        for j, t in enumerate(g.nodes):
            assert close(Au[j], scale(t**q / q, u))

    def test_A_is_linear_in_u_for_linear_rhs(self, rng):
        g = TimeGrid.uniform(0.25, 12)
        p = linear_problem(lam=0.7, R=1e6)
        u = random_trajectory(rng, g, levels=32)
        v = FuzzyTrajectory(g, 3 * u.lower, 3 * u.upper)
        a1, a3 = apply_A(u, p), apply_A(v, p)
        np.testing.assert_allclose(a3.lower, 3 * a1.lower, rtol=1e-12, atol=1e-12)

    def test_omega_warning(self):
        g = TimeGrid.uniform(0.25, 4)
        with pytest.warns(OmegaWarning):
            apply_A(FuzzyTrajectory.constant(g, crisp(10.0)), linear_problem())

    def test_images_are_valid(self, rng):
        g = TimeGrid.uniform(0.25, 12)
        p = linear_problem(R=1e6)
        for _ in range(10):
            u = random_trajectory(rng, g, levels=32)
            Tu = apply_T(u, p)
            assert all(validate(Tu[j]) for j in range(len(g)))


class TestPicard:
    def test_zero_rhs_one_iteration(self):
        u0 = triangular(0.5, 1, 2)
        rep = picard_solve(linear_problem(u0=u0, lam=0.0, steps=32))
        assert rep.converged and rep.iterations == 1
        assert rep.eta == 0.25
        assert all(rep.solution[j] == u0 for j in range(33))

    def test_crisp_mittag_leffler(self):
        rep = picard_solve(linear_problem(steps=512))
        assert rep.converged
        for j in (64, 256, 512):
            t = rep.solution.grid.nodes[j]
            ref = crisp_linear_solution(0.5, 1.0, 1.0, t)
            assert ref == pytest.approx(mittag_leffler_half(math.sqrt(t)), rel=1e-12)
            assert rep.solution[j].lower[0] == pytest.approx(ref, rel=1e-3)
        assert all(c.passed for c in rep.checks.values())

    def test_fuzzy_decoupling(self):
        u0 = triangular(0.9, 1.0, 1.1)
        rep = picard_solve(linear_problem(u0=u0, steps=256))
        E = np.array([mittag_leffler_half(math.sqrt(t)) for t in rep.solution.grid.nodes])
        np.testing.assert_allclose(rep.solution.lower, np.outer(E, u0.lower), rtol=1e-2)
        np.testing.assert_allclose(rep.solution.upper, np.outer(E, u0.upper), rtol=1e-2)

    def test_crisp_reduction(self):
        rep = picard_solve(linear_problem(u0=crisp(1.3), steps=64))
        np.testing.assert_array_equal(rep.solution.lower, rep.solution.upper)

    def test_residuals_decrease(self):
        rep = picard_solve(linear_problem(steps=64))
        trace = rep.residual_trace
        assert all(b < a for a, b in zip(trace, trace[1:]) if a > 1e-14)
        assert rep.final_residual < 1e-12

    def test_checks_present(self):
        rep = picard_solve(linear_problem(steps=64))
        assert set(rep.checks) == {"self_map", "holder", "level_equicontinuity"}
        d = rep.to_dict()
        assert d["status"] == "converged" and d["checks"]["self_map"]["passed"]

    def test_not_converged_without_continuation(self):
        rep = picard_solve(linear_problem(steps=64, max_iter=2), continuation=False)
        assert rep.status == "not_converged" and rep.iterations == 2

    def test_continuation(self):
        rep = picard_solve(linear_problem(steps=64, max_iter=8))
        assert rep.converged and rep.continuation_pieces > 1
        ref = picard_solve(linear_problem(steps=64))
        assert metric_D(rep.solution[-1], ref.solution[-1]) < 1e-10

    def test_affine(self):
        # u = 1 + int (t-s)^(-1/2) (0 u + 1) ds / Gamma(1/2) = 1 + 2 sqrt(t / pi)
        rhs = RhsSpec.affine(0.0, crisp(1.0), horizon=0.25)
        rep = picard_solve(ProblemSpec(0.25, 0.5, crisp(1.0), rhs, R=4.0, steps=32))
        t = rep.solution.grid.nodes
        np.testing.assert_allclose(rep.solution.lower[:, 0], 1 + 2 * np.sqrt(t / math.pi), rtol=1e-12)

    def test_affine_fuzzy_forcing_valid(self):
        rhs = RhsSpec.affine([[0.0, 0.5], [0.25, 1.0]], triangular(-0.1, 0, 0.2), horizon=0.25)
        rep = picard_solve(ProblemSpec(0.25, 0.5, triangular(0.9, 1, 1.1), rhs, R=4.0, steps=64))
        assert rep.converged
        assert all(validate(rep.solution[j]) for j in range(65))

    def test_horizon_beyond_eta_noted(self):
        p = linear_problem(a=2.0, R=2.0, steps=32)
        rep = picard_solve(p, horizon=1.0)
        assert rep.horizon == 1.0 > rep.eta
        assert any("exceeds eta" in w for w in rep.warnings)

    def test_horizon_range(self):
        with pytest.raises(PreconditionError):
            picard_solve(linear_problem(), horizon=1.0)


class TestEstimateChecks:
    def test_holder_pair(self):
        p = linear_problem(steps=64)
        rep = picard_solve(p)
        t = rep.solution.grid.nodes
        res = check_holder(p, rep.solution, t[3], t[40])
        assert res.passed and res.worst < 1

    def test_holder_off_grid(self):
        p = linear_problem(steps=8)
        u = FuzzyTrajectory.constant(TimeGrid.uniform(0.25, 8), crisp(1.0))
        with pytest.raises(SolverError):
            check_holder(p, u, 0.01, 0.25)

    def test_holder_detects_too_small_M(self):
        p = linear_problem(steps=16)
        u = FuzzyTrajectory.constant(TimeGrid.uniform(0.25, 16), crisp(1.0))
        assert not check_holder(p, u, 0.0, 0.25, M=0.1).passed

    def test_image_equicontinuity(self, rng):
        p = linear_problem(R=1e6, levels=32)
        g = TimeGrid.uniform(0.25, 12)
        sample = [random_trajectory(rng, g, levels=32) for _ in range(6)]
        res = check_level_equicontinuity_of_image(p, sample, eps=1.0, delta=0.125)
        assert res.passed and res.worst_ratio <= 1 + 1e-12
        assert res.eps_passed

    def test_image_equicontinuity_bound_tight_for_constant(self):
        p = linear_problem(levels=32)
        g = TimeGrid.uniform(0.25, 8)
        res = check_level_equicontinuity_of_image(p, [FuzzyTrajectory.constant(g, triangular(0, 1, 2))], 1.0, 0.25)
        assert res.worst_ratio == pytest.approx(1.0, rel=1e-12)


class TestSingular:
    def test_small_eta_residual(self):
        p = ProblemSpec(1.0, 0.5, crisp(1.0), RhsSpec.singular_linear(1.0, 0.25), R=2.0, steps=128)
        rep = picard_solve(p)
        assert rep.converged and rep.final_residual < 1e-6
        assert "t_min" in rep.M_method
        t = rep.horizon
        assert rep.solution[-1].lower[0] == pytest.approx(singular_linear_solution(0.5, 0.25, 1.0, 1.0, t), rel=1e-4)

    def test_series_on_unit_interval(self):
        errs = []
        for n in (64, 256):
            p = ProblemSpec(1.0, 0.5, crisp(1.0), RhsSpec.singular_linear(1.0, 0.25), R=20.0, steps=n)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = picard_solve(p, horizon=1.0)
            ref = singular_linear_solution(0.5, 0.25, 1.0, 1.0, 1.0)
            errs.append(abs(rep.solution[-1].lower[0] / ref - 1))
        assert errs[1] < errs[0] and errs[1] < 1e-3

    def test_refinement_delta(self):
        p = ProblemSpec(1.0, 0.5, crisp(1.0), RhsSpec.singular_linear(1.0, 0.25), R=2.0, steps=128)
        delta, t, fine, coarse = refinement_delta(p)
        assert delta < 5e-3
        assert fine.horizon == coarse.horizon == t
