import numpy as np
import pytest

from rapdb import generate
from rapdb.problem import Iterate, ProblemInstance, _dense


@pytest.fixture(scope="session")
def analytic():
    return {a.name: a for a in generate.analytic_suite()}


def reference_solution(inst: ProblemInstance):
    """Independent oracle: solve the QCQP with cvxpy and return
    (f_star, Iterate with the constraint multipliers)."""
    import cvxpy as cp

    x = cp.Variable(inst.n)
    cons = []
    ps = inst.primal_set
    cons.append(x >= ps.lower)
    cons.append(x <= ps.upper)
    quad_cons = []
    for i in range(inst.m):
        Qi = _dense(inst.Q[i + 1])
        expr = float(inst.r[i + 1]) + inst.q[i + 1] @ x
        if np.any(Qi):
            expr = expr + 0.5 * cp.quad_form(x, cp.psd_wrap(Qi))
        c = expr <= 0
        quad_cons.append(c)
        cons.append(c)
    if inst.p > 0:
        cons.append(np.asarray(inst.A) @ x == inst.b)
    Q0 = _dense(inst.Q[0])
    obj = float(inst.r[0]) + inst.q[0] @ x
    if np.any(Q0):
        obj = obj + 0.5 * cp.quad_form(x, cp.psd_wrap(Q0))
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status in ("optimal", "optimal_inaccurate"), prob.status
    lam = np.array([max(float(np.asarray(c.dual_value).reshape(())), 0.0)
                    for c in quad_cons]) if inst.m else np.zeros(0)
    v = np.zeros(inst.p)
    if inst.p > 0:
        v = np.asarray(cons[-1].dual_value, dtype=float).reshape(inst.p)
    return float(prob.value), Iterate(np.asarray(x.value), v, lam)


@pytest.fixture(scope="session")
def small_qcqp():
    return generate.random_qcqp(20, 3, seed=3)


# one-line verdicts collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    # the tests import this module as "tests.conftest" while pytest loads it
    # as "conftest"; read the lines from whichever instance collected them
    import sys
    lines = list(ACCEPTANCE_LINES)
    twin = sys.modules.get("tests.conftest")
    if twin is not None and twin.ACCEPTANCE_LINES is not ACCEPTANCE_LINES:
        lines += twin.ACCEPTANCE_LINES
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
