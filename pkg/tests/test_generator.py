import numpy as np
import pytest

from mfg_lpfp import CONTROL, GridError, ModelError, build_grid
from mfg_lpfp.generator import apply_discrete_generator, transition, transition_rows

from conftest import simple_model


def _grid_unit():
    # delta_t = 0.01, delta_x = 0.2
    return build_grid(1.0, 100, 0.0, 1.0, 5)


def test_transition_drift_up():
    triple = transition(_grid_unit(), simple_model(b=1.0, sigma=1.0), 0, 2)
    assert triple.p_down == pytest.approx(0.125, abs=1e-15)
    assert triple.p_stay == pytest.approx(0.700, abs=1e-15)
    assert triple.p_up == pytest.approx(0.175, abs=1e-15)
    assert triple.p_down + triple.p_stay + triple.p_up == pytest.approx(1.0, abs=1e-14)


def test_transition_zero_drift_symmetric():
    triple = transition(_grid_unit(), simple_model(b=0.0, sigma=1.0), 3, 1)
    assert triple.p_down == pytest.approx(0.125, abs=1e-15)
    assert triple.p_stay == pytest.approx(0.750, abs=1e-15)
    assert triple.p_up == triple.p_down


def test_transition_drift_sign_mirror():
    up = transition(_grid_unit(), simple_model(b=1.0, sigma=1.0), 0, 2)
    down = transition(_grid_unit(), simple_model(b=-1.0, sigma=1.0), 0, 2)
    assert down.p_up == up.p_down
    assert down.p_down == up.p_up
    assert down.p_stay == up.p_stay


def test_transition_rejects_boundary_and_bad_indices():
    grid = _grid_unit()
    model = simple_model()
    with pytest.raises(GridError):
        transition(grid, model, 0, 0)
    with pytest.raises(GridError):
        transition(grid, model, 0, grid.n_s)
    with pytest.raises(GridError):
        transition(grid, model, grid.n_t, 1)
    with pytest.raises(ModelError):
        transition(grid, model, 0, 1, k=0)  # stopping model takes no action


def test_transition_controlled_needs_action():
    grid = build_grid(1.0, 50, 0.0, 1.0, 5, [-1.0, 1.0])
    model = simple_model(CONTROL)
    with pytest.raises(ModelError):
        transition(grid, model, 0, 1)
    tr0 = transition(grid, model, 0, 1, k=0)
    tr1 = transition(grid, model, 0, 1, k=1)
    assert tr0.p_down == tr1.p_up  # drift is the action itself, mirrored


def test_generator_constant_function_is_zero():
    grid = _grid_unit()
    model = simple_model(b=1.0, sigma=1.0)
    u = np.full((grid.n_t + 1, grid.n_s + 1), 3.7)
    assert apply_discrete_generator(grid, model, u, 2, 2) == pytest.approx(0.0, abs=1e-13)


def test_generator_linear_function_recovers_drift():
    grid = _grid_unit()
    model = simple_model(b=1.0, sigma=1.0)
    u = np.tile(grid.x_nodes, (grid.n_t + 1, 1))
    assert apply_discrete_generator(grid, model, u, 0, 3) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("b,sigma", [(1.0, 1.0), (-2.0, 0.5), (0.0, 1.5), (0.7, 0.0)])
def test_generator_matches_chain_expectation(b, sigma, rng):
    # L u(t_i, x_j) = (E[u(t_{i+1}, Y) | x_j] - u(t_i, x_j)) / delta_t
    grid = build_grid(1.0, 40, -1.0, 1.0, 8)
    model = simple_model(b=b, sigma=sigma)
    u = rng.normal(size=(grid.n_t + 1, grid.n_s + 1))
    for i in (0, 17, grid.n_t - 1):
        p_down, p_stay, p_up = transition_rows(grid, model, i)
        for j in range(1, grid.n_s):
            expect = p_down[j - 1] * u[i + 1, j - 1] + p_stay[j - 1] * u[i + 1, j] + p_up[j - 1] * u[i + 1, j + 1]
            chain_form = (expect - u[i, j]) / grid.delta_t
            direct = apply_discrete_generator(grid, model, u, i, j)
            assert direct == pytest.approx(chain_form, abs=1e-12 / grid.delta_t)


def test_generator_matches_chain_expectation_controlled(rng):
    grid = build_grid(1.0, 30, -1.0, 1.0, 6, [-1.0, 0.0, 0.8])
    model = simple_model(CONTROL, sigma=0.9)
    u = rng.normal(size=(grid.n_t + 1, grid.n_s + 1))
    for k in range(grid.n_actions):
        p_down, p_stay, p_up = transition_rows(grid, model, 4, k)
        for j in range(1, grid.n_s):
            expect = p_down[j - 1] * u[5, j - 1] + p_stay[j - 1] * u[5, j] + p_up[j - 1] * u[5, j + 1]
            chain_form = (expect - u[4, j]) / grid.delta_t
            assert apply_discrete_generator(grid, model, u, 4, j, k) == pytest.approx(chain_form, abs=1e-10)
