import math

import numpy as np
import pytest

import borat


def test_single_row_dual():
    sol = borat.solve_dual(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([0.5, 0.0]), 1.0)
    assert sol["alpha"] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert sol["value"] == pytest.approx(0.125)
    assert sol["support"] == [0, 1]


def test_three_row_dual_matches_reference():
    rows = np.array([[1.0, 0.2], [0.2, 0.5], [0.0, 0.0]])
    sol = borat.solve_dual(rows, np.array([0.8, 0.3, 0.0]), 1.0)
    assert sol["alpha"] == pytest.approx([49 / 73, 24 / 73, 0.0], abs=1e-9)


def test_closed_form_agrees_with_solver():
    rng = np.random.default_rng(0)
    for _ in range(100):
        g = rng.normal(size=4)
        loss = abs(rng.normal())
        eta = math.exp(rng.normal())
        sol = borat.solve_dual(np.vstack([g, np.zeros(4)]), np.array([loss, 0.0]), eta)
        assert sol["alpha"][0] == borat.closed_form_n2(loss, sum(float(x) * float(x) for x in g), eta)


def test_projection():
    assert borat.project(np.array([3.0, -4.0])) == pytest.approx([3.0, -4.0])
    assert borat.project(np.array([2.0, 0.0]), 1.0) == pytest.approx([1.0, 0.0])


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        borat.solve_dual(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([0.5, 0.0]), -1.0)


def test_run_is_deterministic_and_converges():
    a = borat.run("lsq", "borat", n=3, eta=0.3, steps=500, seed=2, log_every=50)
    b = borat.run("lsq", "borat", n=3, eta=0.3, steps=500, seed=2, log_every=50)
    assert a["ok"]
    assert np.array_equal(a["final_params"], b["final_params"])
    first, last = a["records"][0], a["records"][-1]
    assert first["step"] == 0
    assert last["full_obj"] < first["full_obj"]


def test_objective_gradient():
    w = borat.initial_point("lsq", 1)
    loss, grad = borat.objective("lsq", w)
    h = 1e-6
    u = np.zeros_like(w)
    u[0] = 1.0
    fd = (borat.objective("lsq", w + h * u)[0] - borat.objective("lsq", w - h * u)[0]) / (2 * h)
    assert fd == pytest.approx(grad[0], rel=1e-5, abs=1e-8)
    assert loss >= 0.0
