import numpy as np
import pytest

from rapdb import diagnostics, generate
from rapdb.diagnostics import (TerminationCriteria, check_termination,
                               dual_bound, infeasibility, kkt_residual,
                               slater_radius, smoothed_gap)
from rapdb.errors import SlaterViolation
from rapdb.geometry import (Box, NonnegOrthant, ProductCone, SecondOrderCone,
                            project_dual_cone)
from rapdb.problem import Iterate, ProblemInstance

RNG = np.random.default_rng(13)


# -- smoothed gap -----------------------------------------------------------


def test_gap_zero_at_saddle(analytic):
    for a in analytic.values():
        gap, cert = smoothed_gap(a.instance, a.z_star, 0.04,
                                 subsolver_tol=1e-11)
        assert cert.converged
        assert abs(gap) <= 1e-7


def test_gap_positive_off_optimum(analytic):
    a = analytic["ball"]
    z0 = Iterate(np.zeros(2), np.zeros(0), np.zeros(1))
    gap, _ = smoothed_gap(a.instance, z0, 0.04, subsolver_tol=1e-11)
    # independent evaluation: with lam = 0 the primal subproblem is
    # min ||x-c||^2 + 0.04||x||^2 over the box, dual term is the penalized
    # constraint ascent from lam = 0
    assert gap > 1.0


def test_gap_nonnegative_at_random_points(analytic, small_qcqp):
    instances = [a.instance for a in analytic.values()] + [small_qcqp]
    for inst in instances:
        lo = np.maximum(inst.primal_set.lower, -10)
        hi = np.minimum(inst.primal_set.upper, 10)
        for _ in range(100):
            x = RNG.uniform(lo, hi)
            lam = np.abs(RNG.normal(size=inst.m))
            v = RNG.normal(size=inst.p)
            gap, _ = smoothed_gap(inst, Iterate(x, v, lam), 0.04,
                                  subsolver_tol=1e-10)
            assert gap >= -1e-9


def test_gap_monotone_in_xi(analytic):
    inst = analytic["ball"].instance
    for _ in range(20):
        x = RNG.uniform(-2, 2, 2)
        lam = np.abs(RNG.normal(size=1))
        z = Iterate(x, np.zeros(0), lam)
        gaps = [smoothed_gap(inst, z, xi, subsolver_tol=1e-11)[0]
                for xi in (0.01, 0.04, 0.2, 1.0)]
        for g1, g2 in zip(gaps, gaps[1:]):
            assert g2 <= g1 + 1e-8


def test_quadratic_growth_near_solution(analytic):
    # dist^2(z, z*) <= rho * G_xi(z) with one finite rho over sampled ball
    a = analytic["ball"]
    ratios = []
    for _ in range(200):
        dx = RNG.normal(size=2)
        dl = RNG.normal(size=1)
        scale = RNG.uniform(0.001, 0.1)
        step = np.concatenate([dx, dl])
        step = scale * step / np.linalg.norm(step)
        x = np.clip(a.z_star.x + step[:2], -2, 2)
        lam = np.maximum(a.z_star.lam + step[2:], 0.0)
        z = Iterate(x, np.zeros(0), lam)
        d2 = np.sum((x - a.z_star.x) ** 2) + np.sum((lam - a.z_star.lam) ** 2)
        gap, _ = smoothed_gap(a.instance, z, 0.04, subsolver_tol=1e-12)
        if gap > 1e-14:
            ratios.append(d2 / gap)
    assert np.isfinite(max(ratios))
    assert max(ratios) < 1e4


# -- KKT residual -----------------------------------------------------------


def test_kkt_zero_at_analytic_solutions(analytic):
    for a in analytic.values():
        assert kkt_residual(a.instance, a.z_star).kkt_residual <= 1e-9


def test_kkt_interior_point_equals_gradient_norm():
    inst = ProblemInstance(
        n=2, m=0, p=0, Q=[np.eye(2)], q=[np.array([1.0, -2.0])],
        r=np.array([0.0]),
        A=np.zeros((0, 2)), b=np.zeros(0),
        primal_set=Box(np.full(2, -1e8), np.full(2, 1e8)),
        cone=NonnegOrthant(0))
    x = np.array([0.5, 0.5])
    g = x + np.array([1.0, -2.0])
    m = kkt_residual(inst, Iterate(x, np.zeros(0), np.zeros(0)))
    assert abs(m.kkt_residual - np.linalg.norm(g)) <= 1e-9


def test_complementarity_examples():
    from rapdb.diagnostics import _complementarity
    # lam = (1, 0), g = (0, -2): exact complementarity
    assert _complementarity(NonnegOrthant(2), np.array([1.0, 0.0]),
                            np.array([0.0, -2.0])) == 0.0
    assert _complementarity(NonnegOrthant(1), np.array([0.5]),
                            np.array([-1.0])) == 0.5
    # SOC apex: reduces to conic infeasibility of g
    c = SecondOrderCone(3)
    g = np.array([0.0, 2.0, 0.0])
    assert abs(_complementarity(c, np.zeros(3), g)
               - np.linalg.norm(project_dual_cone(c, g))) <= 1e-12


def test_kkt_zero_implies_feasible(analytic, small_qcqp):
    for inst, z in [(a.instance, a.z_star) for a in analytic.values()]:
        m = kkt_residual(inst, z)
        if m.kkt_residual <= 1e-9:
            assert m.infeas <= 1e-8


# -- infeasibility ----------------------------------------------------------


def test_infeasibility_examples(analytic):
    a = analytic["ball"]
    assert infeasibility(a.instance, a.z_star.x) <= 1e-12
    inst = ProblemInstance(
        n=1, m=1, p=0, Q=[np.zeros((1, 1)), np.zeros((1, 1))],
        q=[np.zeros(1), np.zeros(1)], r=np.array([0.0, 0.3]),
        A=np.zeros((0, 1)), b=np.zeros(0),
        primal_set=Box(-np.ones(1), np.ones(1)), cone=NonnegOrthant(1))
    assert abs(infeasibility(inst, np.zeros(1)) - 0.3) <= 1e-15
    soc_inst = ProblemInstance(
        n=1, m=3,
        p=0, Q=[np.zeros((1, 1))] + [np.zeros((1, 1))] * 3,
        q=[np.zeros(1)] * 4, r=np.array([0.0, 0.0, 2.0, 0.0]),
        A=np.zeros((0, 1)), b=np.zeros(0),
        primal_set=Box(-np.ones(1), np.ones(1)), cone=SecondOrderCone(3))
    # g(x) = (0, 2, 0): projection onto the cone is (1, 1, 0), norm sqrt(2)
    assert abs(infeasibility(soc_inst, np.zeros(1)) - np.sqrt(2.0)) <= 1e-12


# -- Slater radius ----------------------------------------------------------


def test_slater_radius_closed_forms():
    assert slater_radius(NonnegOrthant(2), np.array([-1.0, -2.0])) == 1.0
    got = slater_radius(SecondOrderCone(3), np.array([-3.0, 1.0, 0.0]))
    assert abs(got - 2.0 / np.sqrt(2.0)) <= 1e-12
    with pytest.raises(SlaterViolation):
        slater_radius(NonnegOrthant(2), np.array([-1.0, 0.0]))


def _sample_unit_dual(cone, count, rng):
    dim = cone.dim if not isinstance(cone, ProductCone) else None
    w = rng.normal(size=(count, dim))
    if isinstance(cone, NonnegOrthant):
        w = np.abs(w)
    else:
        w = np.array([cone.project(row) for row in w])
    norms = np.linalg.norm(w, axis=1)
    keep = norms > 1e-12
    return w[keep] / norms[keep, None]


@pytest.mark.parametrize("cone,g", [
    (NonnegOrthant(3), np.array([-0.5, -1.0, -2.0])),
    (SecondOrderCone(3), np.array([-3.0, 1.0, 0.5])),
])
def test_slater_radius_brute_force(cone, g):
    rng = np.random.default_rng(0)
    w = _sample_unit_dual(cone, 100_000, rng)
    sampled = float(np.min(w @ (-g)))
    r = slater_radius(cone, g)
    # r* is the exact minimum; sampling can only overestimate
    assert sampled >= r - 1e-12
    assert abs(sampled - r) <= 1e-2


# -- dual bounds ------------------------------------------------------------


def test_dual_bound_ball_instance(analytic):
    a = analytic["ball"]
    B_lam, B_v, B = dual_bound(a.instance, np.zeros(2))
    # f(0) = 4, min over the box of f is 0, r* = 1/2
    assert abs(B_lam - 8.0) <= 1e-6
    assert B_lam >= np.linalg.norm(a.z_star.lam)
    assert B >= B_lam


def test_dual_bound_covers_known_multipliers(analytic):
    for a in analytic.values():
        if a.slater_point is None:
            continue
        B_lam, B_v, B = dual_bound(a.instance, a.slater_point)
        assert B_lam >= np.linalg.norm(a.z_star.lam) - 1e-9
        assert B_v >= np.linalg.norm(a.z_star.v) - 1e-9


def test_dual_bound_equality_instance(analytic):
    a = analytic["eq-qp"]
    x_tilde = np.full(3, 1.0 / 3.0)
    B_lam, B_v, B = dual_bound(a.instance, x_tilde)
    assert B_lam == 0.0
    assert B_v >= abs(a.z_star.v[0])


def test_dual_bound_unconstrained_sentinel():
    inst = ProblemInstance(
        n=2, m=0, p=0, Q=[np.eye(2)], q=[np.zeros(2)], r=np.array([0.0]),
        A=np.zeros((0, 2)), b=np.zeros(0),
        primal_set=Box(-np.ones(2), np.ones(2)), cone=NonnegOrthant(0))
    B_lam, B_v, B = dual_bound(inst, np.zeros(2))
    assert B == np.inf


def test_dual_bound_rejects_infeasible_slater(analytic):
    with pytest.raises(SlaterViolation):
        dual_bound(analytic["ball"].instance, np.array([1.0, 0.0]))  # g = 0


# -- termination ------------------------------------------------------------


def test_check_termination():
    m = diagnostics.Metrics(kkt_residual=0.0, stationarity=0.0, primal_eq=0.0,
                            complementarity=0.0, infeas=0.0, f_value=1.0,
                            mean_pos_violation=0.0)
    assert check_termination(m, TerminationCriteria(eps=1e-7, f_star=1.0))
    m2 = diagnostics.Metrics(kkt_residual=0.0, stationarity=0.0, primal_eq=0.0,
                             complementarity=0.0, infeas=0.0,
                             f_value=1.0 + 2e-6 * 2,
                             mean_pos_violation=0.0)
    assert not check_termination(m2, TerminationCriteria(eps=1e-6, f_star=1.0))
    m3 = diagnostics.Metrics(kkt_residual=1e-9, stationarity=0.0,
                             primal_eq=0.0, complementarity=0.0, infeas=1e-9,
                             f_value=0.0, mean_pos_violation=0.0)
    assert check_termination(m3, TerminationCriteria(
        criterion="conic", eps_kkt=1e-8, eps_feas=1e-8))


def test_termination_matches_offline_recomputation(small_qcqp):
    from tests.conftest import reference_solution
    f_star, _ = reference_solution(small_qcqp)
    from rapdb.engine import SolverConfig, initial_iterate, ApdbEngine
    eng = ApdbEngine(small_qcqp, SolverConfig(mode="yx", nonmonotone=True),
                     initial_iterate(small_qcqp))
    crit = TerminationCriteria(eps=1e-6, f_star=f_star)
    fired_at = None
    for k in range(1, 3000):
        eng.step()
        m = kkt_residual(small_qcqp, eng.last, f_star=f_star)
        if check_termination(m, crit):
            fired_at = k
            break
    assert fired_at is not None
    # offline recomputation of both quantities at the firing point
    x = eng.last.x
    rel = abs(small_qcqp.f_value(x) - f_star) / (1 + abs(f_star))
    viol = np.mean(np.maximum(small_qcqp.g_value(x), 0.0))
    assert max(rel, viol) <= 1e-6
