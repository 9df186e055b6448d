import numpy as np
import pytest

from rapdb import generate
from rapdb.egm import run_egm, tune_egm
from rapdb.engine import initial_iterate
from rapdb.errors import ConfigurationError
from rapdb.problem import Iterate


def test_zero_stepsize_is_constant(analytic):
    inst = analytic["ball"].instance
    z0 = Iterate(np.array([0.5, -0.5]), np.zeros(0), np.array([1.0]))
    res = run_egm(inst, 0.0, z0, 10)
    np.testing.assert_array_equal(res.last.x, z0.x)
    np.testing.assert_array_equal(res.last.lam, z0.lam)


def test_saddle_is_fixed_point(analytic):
    a = analytic["ball"]
    res = run_egm(a.instance, 0.05, a.z_star, 1)
    assert np.linalg.norm(res.last.x - a.z_star.x) <= 1e-12
    assert np.linalg.norm(res.last.lam - a.z_star.lam) <= 1e-12


def test_converges_on_ball_instance(analytic):
    a = analytic["ball"]
    res = run_egm(a.instance, 0.05, initial_iterate(a.instance), 50_000)
    assert not res.diverged
    assert np.linalg.norm(res.last.x - a.z_star.x) <= 1e-4


def test_eventual_monotone_distance(analytic):
    a = analytic["ball"]
    inst = a.instance
    z = initial_iterate(inst)
    K = 2000
    dists = []
    for _ in range(K):
        z = run_egm(inst, 0.02, z, 1).last
        dists.append(np.sqrt(np.sum((z.x - a.z_star.x) ** 2)
                             + np.sum((z.lam - a.z_star.lam) ** 2)))
    tail = dists[int(0.2 * K):]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))


def test_divergence_guard():
    inst = generate.random_qcqp(10, 2, seed=0)
    res = run_egm(inst, 50.0, initial_iterate(inst), 5000)
    assert res.diverged
    assert res.iterations < 5000


def test_tune_selects_converging_step(analytic):
    a = analytic["ball"]
    def score(z):
        return float(np.linalg.norm(z.x - a.z_star.x))
    s, res = tune_egm(a.instance, initial_iterate(a.instance), 2000, score,
                      grid=(1e-3, 1e-2, 1e-1))
    assert not res.diverged
    assert score(res.last) <= 1e-2


def test_invalid_args(analytic):
    inst = analytic["ball"].instance
    with pytest.raises(ConfigurationError):
        run_egm(inst, -1.0, initial_iterate(inst), 10)
    with pytest.raises(ConfigurationError):
        run_egm(inst, 0.1, initial_iterate(inst), 0)
