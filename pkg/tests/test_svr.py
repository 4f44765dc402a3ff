import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import ConvergenceWarning

import oracles as O
from pbsiqa import GridSearchSpec, NuSVR, NuSVRCV, UnitScaler, grid_search, rbf_kernel
from pbsiqa.svr import DegenerateFitWarning, dual_objective


def random_problem(rng, n_lo=10, n_hi=50):
    n = int(rng.integers(n_lo, n_hi + 1))
    d = int(rng.integers(1, 4))
    X = rng.uniform(size=(n, d))
    y = np.sin(3 * X.sum(1)) + rng.normal(0, 0.1, n)
    params = {"C": float(2 ** rng.uniform(-2, 5)), "gamma": float(2 ** rng.uniform(-2, 3)),
              "nu": float(rng.uniform(0.1, 0.9))}
    return X, y, params


def sin_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, n)
    return x[:, None], np.sin(2 * np.pi * x) + rng.normal(0, 0.01, n)


# --------------------------------------------------------------------------
# kernel and scaling


def test_rbf_examples(rng):
    x = rng.normal(size=4)
    z = rng.normal(size=4)
    assert rbf_kernel(x, x, 3.0) == 1.0
    assert rbf_kernel((0, 0), (1, 1), 0.5) == pytest.approx(math.exp(-1), abs=1e-15)
    assert rbf_kernel(x, z, 0.7) == rbf_kernel(z, x, 0.7)
    assert 0 < rbf_kernel(x, z, 0.7) <= 1
    with pytest.raises(ValueError, match="dimension"):
        rbf_kernel((0, 0), (1, 1, 1), 1.0)
    for g in (0.0, -1.0):
        with pytest.raises(ValueError, match="gamma"):
            rbf_kernel(x, z, g)


def test_scaling_examples():
    s = UnitScaler().fit([[2.0], [4.0], [6.0]])
    np.testing.assert_array_equal(s.transform([[2.0], [4.0], [6.0]]).ravel(), [0, 0.5, 1])
    assert s.transform([[8.0]])[0, 0] == 1.0
    assert s.transform([[-3.0]])[0, 0] == 0.0
    c = UnitScaler().fit([[5.0], [5.0]])
    np.testing.assert_array_equal(c.transform([[5.0], [5.0], [7.0]]).ravel(), [0.5, 0.5, 0.5])
    with pytest.raises(ValueError, match="empty"):
        UnitScaler().fit(np.zeros((0, 2)))
    with pytest.raises(ValueError, match="features"):
        s.transform([[1.0, 2.0]])


@given(st.integers(0, 2 ** 32 - 1))
def test_scaling_idempotent(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3)) * rng.uniform(0.1, 100, 3)
    X[:, 2] = 4.0
    s = UnitScaler().fit(X)
    Z = s.transform(X)
    assert Z.min() >= 0 and Z.max() <= 1
    again = UnitScaler().fit(Z)
    np.testing.assert_allclose(again.transform(Z), Z, atol=1e-15)


# --------------------------------------------------------------------------
# solver correctness


def test_sin_regression():
    X, y = sin_data()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        m = NuSVR(C=10, nu=0.5, gamma=10).fit(X, y)
    assert math.sqrt(np.mean((m.predict(X) - y) ** 2)) < 0.05
    # the default budget stops near the optimum; a larger one reaches it
    full = NuSVR(C=10, nu=0.5, gamma=10, max_kernel_evals=10 ** 8).fit(X, y)
    assert full.converged_
    assert math.sqrt(np.mean((full.predict(X) - y) ** 2)) < 0.05


def test_sin_non_support_points_inside_tube():
    X, y = sin_data()
    m = NuSVR(C=10, nu=0.5, gamma=10, max_kernel_evals=10 ** 8).fit(X, y)
    inside = (m.alpha_ == 0) & (m.alpha_star_ == 0)
    assert inside.any()
    assert np.all(np.abs(m.predict(X[inside]) - y[inside]) <= m.epsilon_ + m.tol)


def test_dual_objective_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(8):
        X, y, p = random_problem(rng)
        m = NuSVR(**p).fit(X, y)
        K = O.rbf_gram(m.fit_X_, p["gamma"])
        _, ref = O.nu_svr_dual_reference(K, y, p["C"], p["nu"])
        got = dual_objective(K, y, m.alpha_ - m.alpha_star_)
        assert abs(got - ref) <= 1e-4 * abs(ref)


def test_reference_projection():
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.normal(size=15)
        cap, total = rng.uniform(0.1, 1), rng.uniform(0.5, 1.4)
        p = O._project_capped_simplex(v, cap, total)
        assert p.sum() == pytest.approx(total, abs=1e-12)
        assert p.min() >= 0 and p.max() <= cap


def test_kkt_independent_checker():
    rng = np.random.default_rng(1)
    for _ in range(20):
        X, y, p = random_problem(rng)
        m = NuSVR(**p).fit(X, y)
        gap = O.nu_svr_kkt_gap(m.fit_X_, y, m.alpha_, m.alpha_star_, m.box_, p["gamma"])
        assert gap < 1e-3
        assert m.kkt_violation() == pytest.approx(gap, abs=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["libsvm", "normalized"]))
def test_dual_feasibility(seed, box):
    X, y, p = random_problem(np.random.default_rng(seed), 5, 30)
    n = len(y)
    m = NuSVR(box=box, **p).fit(X, y)
    bound = p["C"] if box == "libsvm" else p["C"] / n
    coef = m.alpha_ - m.alpha_star_
    assert abs(coef.sum()) <= 1e-8 * n * p["C"]
    assert np.all(m.alpha_ >= 0) and np.all(m.alpha_star_ >= 0)
    assert np.all(m.alpha_ <= bound) and np.all(m.alpha_star_ <= bound)
    assert (m.alpha_ + m.alpha_star_).sum() == pytest.approx(bound * p["nu"] * n, rel=1e-9)
    assert len(m.dual_coef_) >= p["nu"] * n - 1
    assert m.kkt_violation() < m.tol


def test_duplicates_normalized_box(rng):
    X = rng.uniform(size=(30, 2))
    y = X[:, 0] ** 2 - X[:, 1]
    probe = rng.uniform(size=(50, 2))
    a = NuSVR(C=5.0, gamma=2.0, box="normalized", tol=1e-6).fit(X, y).predict(probe)
    b = (NuSVR(C=5.0, gamma=2.0, box="normalized", tol=1e-6)
         .fit(np.vstack([X, X]), np.r_[y, y]).predict(probe))
    np.testing.assert_allclose(a, b, atol=1e-4)


def test_duplicates_libsvm_box_halves_C(rng):
    # with the per-coefficient bound C, duplicating every row is the same problem at C / 2
    X = rng.uniform(size=(30, 2))
    y = X[:, 0] ** 2 - X[:, 1]
    probe = rng.uniform(size=(50, 2))
    a = NuSVR(C=5.0, gamma=2.0, tol=1e-6).fit(X, y).predict(probe)
    b = NuSVR(C=2.5, gamma=2.0, tol=1e-6).fit(np.vstack([X, X]), np.r_[y, y]).predict(probe)
    np.testing.assert_allclose(a, b, atol=1e-4)


def test_constant_targets(rng):
    X = rng.uniform(size=(25, 3))
    m = NuSVR(C=4, gamma=1).fit(X, np.full(25, 0.7))
    np.testing.assert_allclose(m.predict(rng.uniform(size=(10, 3))), 0.7, atol=m.tol)
    assert m.epsilon_ <= m.tol


def test_identical_rows_fall_back_to_mean():
    X = np.ones((6, 2))
    with pytest.warns(DegenerateFitWarning):
        m = NuSVR().fit(X, [0, 1, 2, 3, 4, 5])
    assert len(m.dual_coef_) == 0
    np.testing.assert_array_equal(m.predict([[1, 1], [3, -2]]), [2.5, 2.5])


def test_iteration_cap_warns(rng):
    X, y = sin_data(80)
    with pytest.warns(ConvergenceWarning):
        m = NuSVR(C=10, gamma=10, max_kernel_evals=3 * 80 * 3).fit(X, y)
    assert not m.converged_ and m.n_iter_ == 3


def test_warm_start_reaches_same_optimum(rng):
    X, y, p = random_problem(rng, 40, 40)
    cold = NuSVR(**p).fit(X, y)
    prev = NuSVR(**{**p, "C": p["C"] / 4}).fit(X, y)
    warm = NuSVR(**p).fit(X, y, init=prev)
    K = O.rbf_gram(cold.fit_X_, p["gamma"])
    a = dual_objective(K, y, cold.alpha_ - cold.alpha_star_)
    b = dual_objective(K, y, warm.alpha_ - warm.alpha_star_)
    assert abs(a - b) <= 1e-4 * abs(a)
    assert warm.kkt_violation() < warm.tol


def test_parameter_validation():
    X, y = sin_data(10)
    for bad in ({"C": 0}, {"nu": 1.0}, {"nu": 0.0}, {"gamma": -1}, {"box": "other"}):
        with pytest.raises(ValueError):
            NuSVR(**bad).fit(X, y)
    with pytest.raises(ValueError, match="2 training rows"):
        NuSVR().fit(X[:1], y[:1])
    with pytest.raises(ValueError, match="features"):
        NuSVR().fit(X, y).predict(np.ones((2, 3)))


def test_deterministic_refit(rng):
    X, y, p = random_problem(rng)
    a = NuSVR(**p).fit(X, y)
    b = clone(a).fit(X, y)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    probe = rng.uniform(size=(5, X.shape[1]))
    assert np.array_equal(a.predict(probe), a.predict(probe))


def test_serialization_round_trip(tmp_path, rng):
    X, y, p = random_problem(rng)
    for box in ("libsvm", "normalized"):
        m = NuSVR(box=box, **p).fit(X, y)
        m.save(tmp_path / "m.json")
        back = NuSVR.load(tmp_path / "m.json")
        probe = rng.uniform(-0.5, 1.5, size=(40, X.shape[1]))
        np.testing.assert_allclose(back.predict(probe), m.predict(probe), rtol=0, atol=1e-15)
        doc = json.loads((tmp_path / "m.json").read_text())
        assert {"version", "kernel", "gamma", "nu", "C", "scaling", "support_vectors", "dual_coef",
                "bias"} <= set(doc)


def test_rejects_foreign_documents():
    with pytest.raises(ValueError):
        NuSVR.from_dict({"format": "other", "kernel": "rbf"})
    with pytest.raises(ValueError, match="version"):
        NuSVR.from_dict({"format": "pbsiqa-nu-svr", "kernel": "rbf", "version": 99})


# --------------------------------------------------------------------------
# grid search


def test_grid_single_cell(rng):
    X, y, _ = random_problem(rng)
    C, g, mse, table = grid_search(X, y, GridSearchSpec((2.0,), (0.5,), 3))
    assert (C, g) == (2.0, 0.5) and len(table) == 1 and table[0][2] == mse


def test_grid_picks_better_cell():
    X, y = sin_data(60)
    spec = GridSearchSpec((8.0,), (0.001, 8.0), 5)
    C, g, mse, table = grid_search(X, y, spec)
    cells = {cell[1]: cell[2] for cell in table}
    assert cells[8.0] < cells[0.001]
    assert g == 8.0 and mse == cells[8.0]


def test_grid_ties_prefer_small_C_then_gamma(rng):
    X = rng.uniform(size=(20, 2))
    spec = GridSearchSpec((4.0, 1.0), (2.0, 0.5), 4)
    C, g, mse, table = grid_search(X, np.full(20, 0.3), spec)
    assert all(cell[2] == mse for cell in table)
    assert (C, g) == (1.0, 0.5)
    assert [cell[:2] for cell in table] == [(1.0, 0.5), (1.0, 2.0), (4.0, 0.5), (4.0, 2.0)]


def test_grid_deterministic_and_seeded(rng):
    X, y, _ = random_problem(rng, 40, 40)
    spec = GridSearchSpec((0.5, 4.0, 32.0), (0.25, 4.0), 5)
    a = grid_search(X, y, spec, seed=3)
    b = grid_search(X, y, spec, seed=3)
    c = grid_search(X, y, spec, seed=4)
    assert a == b
    assert a[3] != c[3]


def test_grid_default_spec():
    spec = GridSearchSpec()
    assert spec.C_grid[0] == 2 ** -5 and spec.C_grid[-1] == 2 ** 15 and len(spec.C_grid) == 11
    assert spec.gamma_grid[0] == 2 ** -15 and spec.gamma_grid[-1] == 2 ** 3 and len(spec.gamma_grid) == 10
    assert spec.folds == 5


def test_grid_errors(rng):
    with pytest.raises(ValueError, match="non-empty"):
        GridSearchSpec((), (1.0,))
    with pytest.raises(ValueError, match="2 folds"):
        GridSearchSpec(folds=1)
    with pytest.raises(ValueError, match="folds"):
        grid_search(np.ones((3, 1)), np.arange(3.0), GridSearchSpec((1.0,), (1.0,), 5))


def test_nusvrcv_refits_best(rng):
    X, y, _ = random_problem(rng, 30, 30)
    spec = GridSearchSpec((1.0, 16.0), (0.5, 4.0), 3)
    cv = NuSVRCV(grid=spec).fit(X, y)
    best = NuSVR(C=cv.best_params_["C"], gamma=cv.best_params_["gamma"]).fit(X, y)
    np.testing.assert_array_equal(cv.predict(X), best.predict(X))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len(cv.cv_results_) == 4
