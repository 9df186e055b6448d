import json

import numpy as np
import pytest

from rapdb import diagnostics, generate, problem
from rapdb.errors import DataError
from rapdb.problem import _dense
from rapdb.rng import GENERATOR_NAME, CounterRng


def test_rng_named_and_deterministic():
    assert GENERATOR_NAME == "splitmix64-boxmuller/v1"
    a = CounterRng(7, 3)
    b = CounterRng(7, 3)
    np.testing.assert_array_equal(a.uniform(10), b.uniform(10))
    # call granularity does not change the stream
    c = CounterRng(7, 3)
    joined = np.concatenate([c.uniform(4), c.uniform(6)])
    np.testing.assert_array_equal(joined, CounterRng(7, 3).uniform(10))
    # different seeds/streams decorrelate
    assert not np.array_equal(CounterRng(8, 3).uniform(10),
                              CounterRng(7, 3).uniform(10))
    assert not np.array_equal(CounterRng(7, 4).uniform(10),
                              CounterRng(7, 3).uniform(10))


def test_rng_moments():
    z = CounterRng(0, 0).normal(200_000)
    assert abs(np.mean(z)) < 0.01
    assert abs(np.std(z) - 1.0) < 0.01
    u = CounterRng(0, 1).uniform(200_000)
    assert 0.0 <= u.min() and u.max() < 1.0
    assert abs(np.mean(u) - 0.5) < 0.005


def test_random_qcqp_determinism():
    i1 = generate.random_qcqp(5, 2, seed=0)
    i2 = generate.random_qcqp(5, 2, seed=0)
    s1 = json.dumps(problem.to_json_dict(i1), sort_keys=True)
    s2 = json.dumps(problem.to_json_dict(i2), sort_keys=True)
    assert s1 == s2
    i3 = generate.random_qcqp(5, 2, seed=1)
    assert s1 != json.dumps(problem.to_json_dict(i3), sort_keys=True)


def test_random_qcqp_spectra_and_feasibility():
    for seed in range(5):
        inst = generate.random_qcqp(10, 3, seed=seed)
        for M in inst.Q:
            ev = np.linalg.eigvalsh(_dense(M))
            assert ev[0] >= -1e-10          # PSD
            assert abs(ev[0]) <= 1e-10      # one zeroed eigenvalue
            assert ev[-1] <= 100.0 + 1e-8
        # origin is a Slater point: g_i(0) = r_i < 0
        assert np.all(inst.g_value(np.zeros(10)) < 0.0)
        assert inst.r[0] == 0.0


def test_random_qcqp_orthonormal_factors():
    G = CounterRng(0, 0).normal(36).reshape(6, 6)
    L = generate._orthonormalize(G)
    np.testing.assert_allclose(L.T @ L, np.eye(6), atol=1e-12)


def test_kml_toy_kernels():
    X = np.array([[1.0, -1.0]])
    Ks = generate.kernel_matrices(X)
    np.testing.assert_allclose(Ks[2], [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)
    np.testing.assert_allclose(np.diag(Ks[0]), 1.0)
    np.testing.assert_allclose(np.diag(Ks[1]), 1.0)
    inst = generate.kml_instance(X, np.array([1.0, -1.0]))
    # H(K3) = diag(b) K3 diag(b) = all-ones matrix; scaled by 2c/r = 2*6/2
    np.testing.assert_allclose(_dense(inst.Q[3]), 6.0 * np.ones((2, 2)),
                               atol=1e-9)
    assert inst.mu == 2.0
    assert inst.dual_set is not None


def test_kml_kernels_psd_random_data():
    for seed in range(50):
        X, labels = generate.synthetic_kml_data(n_samples=20, n_features=5,
                                                seed=seed)
        for K in generate.kernel_matrices(X):
            assert np.linalg.eigvalsh(K)[0] >= -1e-8


def test_kml_origin_feasible_and_validation():
    X, labels = generate.synthetic_kml_data(n_samples=30, n_features=6, seed=1)
    inst = generate.kml_instance(X, labels)
    from rapdb.geometry import project_set
    np.testing.assert_array_equal(project_set(inst.primal_set,
                                              np.zeros(inst.n)),
                                  np.zeros(inst.n))
    with pytest.raises(DataError):
        generate.kml_instance(X, np.ones(30))   # one class only
    with pytest.raises(DataError):
        generate.kml_instance(X, np.arange(30.0))


def test_standardization():
    X = np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]])
    S = generate.standardize_features(X)
    np.testing.assert_allclose(S.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(S[0].std(), 1.0, atol=1e-12)


def test_csv_ingestion(tmp_path):
    path = tmp_path / "data.csv"
    rows = ["1.0,2.0,1", "0.5,1.0,-1", "2.0,0.0,1", "0.0,3.0,-1"]
    path.write_text("\n".join(rows) + "\n")
    X, labels = generate.load_kml_csv(str(path))
    assert X.shape == (2, 4)
    np.testing.assert_array_equal(labels, [1, -1, 1, -1])
    inst = generate.kml_instance(X, labels)
    assert inst.n == 4


def test_analytic_oracles_pass_kkt(analytic):
    for a in analytic.values():
        m = diagnostics.kkt_residual(a.instance, a.z_star)
        assert m.kkt_residual <= 1e-9
        assert abs(a.instance.f_value(a.z_star.x) - a.f_star) <= 1e-12


def test_analytic_solutions_match_reference(analytic):
    from tests.conftest import reference_solution
    for a in analytic.values():
        f_ref, z_ref = reference_solution(a.instance)
        assert abs(f_ref - a.f_star) <= 1e-6
        np.testing.assert_allclose(z_ref.x, a.z_star.x, atol=1e-5)
