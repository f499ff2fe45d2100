import numpy as np
import pytest

import fdnn


def test_simulate_shapes_and_determinism():
    x, y, grid = fdnn.simulate(1, 30, seed=4, grid_points=20)
    assert x.shape == (30, 20)
    assert set(y) <= {-1, 1}
    assert grid.size == 20 and grid.dim == 1
    assert np.allclose(sum(grid.weights), 1.0)
    x2, y2, _ = fdnn.simulate(1, 30, seed=4, grid_points=20)
    assert np.array_equal(x, x2) and y == y2


def test_two_dimensional_design_grid():
    x, _, grid = fdnn.simulate(3, 5, seed=1, grid_points=6)
    assert grid.dim == 2 and grid.size == 36
    assert x.shape == (5, 36)
    assert grid.points.shape == (36, 2)


def test_fpca_is_orthonormal_under_the_grid_weights():
    x, y, grid = fdnn.simulate(2, 60, seed=5, grid_points=40)
    values, functions, mean = fdnn.fpca(x, y, grid, max_components=5)
    w = np.asarray(grid.weights)
    gram = functions.T @ (w[:, None] * functions)
    assert np.allclose(gram, np.eye(5), atol=1e-8)
    assert np.all(np.diff(values) <= 0)
    assert mean.shape == (40,)


def test_fit_predict_save_load(tmp_path):
    x, y, grid = fdnn.simulate(1, 150, seed=1, grid_points=25)
    xt, yt, _ = fdnn.simulate(1, 300, seed=2, grid_points=25)
    model = fdnn.FDNNModel.fit(x, y, grid, seed=3, depths=[2], components=[2, 4], widths=[8], bounds=[10.0],
                               updates=600)
    pred = model.predict(xt)
    assert np.mean(np.asarray(pred) == np.asarray(yt)) >= 0.6
    assert model.components in (2, 4)
    assert len(model.selection_report) == 2
    assert model.selected["components"] == model.components

    path = tmp_path / "m.model"
    model.save(str(path))
    back = fdnn.FDNNModel.load(str(path))
    assert back.predict(xt) == pred
    assert back.decision_function(xt) == model.decision_function(xt)


def test_errors_carry_a_kind():
    x, y, grid = fdnn.simulate(1, 20, seed=1, grid_points=10)
    with pytest.raises(fdnn.FdnnError) as info:
        fdnn.FDNNModel.fit(x, [1] * 20, grid)
    assert info.value.kind == "empty class"
    model = fdnn.FDNNModel.fit(x, y, grid, depths=[1], components=[2], widths=[4], bounds=[10.0], epochs=5)
    with pytest.raises(fdnn.FdnnError):
        model.predict(np.zeros((2, 11)))
    with pytest.raises(ValueError):
        fdnn.simulate(9, 10)


def test_csv_round_trip(tmp_path):
    x, y, grid = fdnn.simulate(2, 12, seed=8, grid_points=15)
    path = tmp_path / "d.csv"
    fdnn.write_csv(str(path), x, y, grid)
    x2, y2, g2 = fdnn.read_csv(str(path))
    assert np.array_equal(x, x2) and y == y2 and g2 == grid


def test_bayes_risk_and_benchmark(tmp_path):
    rate, se = fdnn.bayes_risk(1, 20000, seed=1)
    assert 0.05 < rate < 0.2 and se > 0
    cfg = tmp_path / "s.cfg"
    cfg.write_text("[experiment]\ndgp = 1\nsizes = 30\nreplications = 2\ntest_size = 100\ngrid_points = 10\n"
                   "[train]\nupdates = 100\n[hyper]\ndepths = 1\ncomponents = 2\nwidths = 4\nbounds = 10\n")
    rows = fdnn.run_benchmark(str(cfg))
    assert [r["method"] for r in rows] == ["BAYES", "FDNN", "NB", "QD"]
    assert all(0.0 <= r["rate"] <= 1.0 for r in rows)
