import numpy as np
import pytest

from mfg_lpfp import (
    CONTROL,
    ModelError,
    build_grid,
    build_lp_control,
    build_lp_stopping,
    discrete_reward,
    precompute_reward_tables,
    random_policy_mean_field,
    solve_lp,
)
from mfg_lpfp.dp import (
    best_response,
    best_response_control,
    best_response_stopping,
    chain_tables,
    flow_residuals,
    forward_control,
)
from mfg_lpfp.models import discretize_initial

from conftest import simple_model


def test_single_node_forced_continue():
    # One interior node, one step, f = 1, g = 0, frozen chain (p_stay = 1):
    # the only reward is running, so continue then stop at the horizon.
    grid = build_grid(0.25, 1, 0.0, 1.0, 2)
    model = simple_model(b=0.0, sigma=0.0, f=1.0, g=0.0)
    mf = random_policy_mean_field(grid, model, np.random.default_rng(0))
    br = best_response_stopping(grid, model, mf)
    assert br.value == pytest.approx(grid.delta_t, abs=1e-15)
    assert br.measures.m[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert br.measures.mu[1, 1] == pytest.approx(1.0, abs=1e-15)


def test_constant_terminal_reward_any_policy(rng):
    # g = c and f = 0 make every policy optimal with value c.
    c = -2.25
    grid = build_grid(1.0, 4, -1.0, 1.0, 5)
    model = simple_model(b=0.5, sigma=0.4, f=0.0, g=c)
    mf = random_policy_mean_field(grid, model, rng)
    br = best_response_stopping(grid, model, mf)
    assert br.value == pytest.approx(c, abs=1e-12)
    tables = precompute_reward_tables(model, grid, mf)
    for _ in range(5):
        other = random_policy_mean_field(grid, model, rng)
        assert discrete_reward(grid, tables, other) == pytest.approx(c, abs=1e-12)


def test_value_equals_reward_of_own_measures(os_model, control_model, rng):
    for model, grid in [
        (os_model, build_grid(1.0, 8, -7.0, 7.0, 12)),
        (control_model, build_grid(1.0, 10, -2.0, 2.0, 7, [-1.0, 0.0, 1.0])),
    ]:
        mf = random_policy_mean_field(grid, model, rng)
        tables = precompute_reward_tables(model, grid, mf)
        br = best_response(grid, model, mf, tables)
        assert discrete_reward(grid, tables, br.measures) == pytest.approx(br.value, abs=1e-12)


def test_dp_matches_lp_stopping(os_model, rng):
    grid = build_grid(1.0, 20, -11.0, 11.0, 40)
    for _ in range(3):
        mf = random_policy_mean_field(grid, os_model, rng)
        tables = precompute_reward_tables(os_model, grid, mf)
        br = best_response_stopping(grid, os_model, mf, tables)
        sol = solve_lp(build_lp_stopping(grid, os_model, mf, tables))
        assert sol.status == "optimal"
        assert abs(sol.objective_value - br.value) <= 1e-8 * (1.0 + abs(br.value))


def test_dp_matches_lp_control(control_model, rng):
    grid = build_grid(1.0, 12, -2.0, 2.0, 10, np.linspace(-1, 1, 4))
    for _ in range(3):
        mf = random_policy_mean_field(grid, control_model, rng)
        tables = precompute_reward_tables(control_model, grid, mf)
        br = best_response_control(grid, control_model, mf, tables)
        sol = solve_lp(build_lp_control(grid, control_model, mf, tables))
        assert sol.status == "optimal"
        assert abs(sol.objective_value - br.value) <= 1e-8 * (1.0 + abs(br.value))


def test_control_single_action_reduces_to_fixed_policy(control_model, rng):
    grid = build_grid(1.0, 10, -2.0, 2.0, 6, [0.3])
    mf = random_policy_mean_field(grid, control_model, rng)
    tables = precompute_reward_tables(control_model, grid, mf)
    br = best_response_control(grid, control_model, mf, tables)
    chain = chain_tables(grid, control_model)
    m0 = discretize_initial(control_model, grid)
    fixed = forward_control(grid, chain, m0, np.zeros((grid.n_t, grid.n_s + 1), dtype=np.int64))
    np.testing.assert_array_equal(br.measures.mu, fixed.mu)
    np.testing.assert_array_equal(br.measures.m, fixed.m)
    assert br.value == pytest.approx(discrete_reward(grid, tables, fixed), abs=1e-12)


def test_symmetric_control_problem_has_symmetric_value(rng):
    # b(t,x,a) = a with symmetric action grid, sigma = 1, f = -a^2,
    # g = -|x|, symmetric start: the value table must satisfy V(t,x)=V(t,-x).
    grid = build_grid(1.0, 20, -1.0, 1.0, 8, [-0.8, -0.4, 0.0, 0.4, 0.8])
    model = simple_model(
        CONTROL,
        b=1.0,
        sigma=1.0,
        f=lambda t, x, sl, a: -a * a,
        g=lambda t, x, stat: -abs(x),
    )
    mf = random_policy_mean_field(grid, model, rng)
    # make the frozen mean field symmetric so the coupling cannot break parity
    mf.mu = 0.5 * (mf.mu + mf.mu[:, ::-1])
    mf.m = 0.5 * (mf.m + mf.m[:, ::-1, ::-1])
    br = best_response_control(grid, model, mf)
    np.testing.assert_allclose(br.values, br.values[:, ::-1], atol=1e-12)


def test_forward_measures_satisfy_flow_rows(os_model, control_model, rng):
    for model, grid in [
        (os_model, build_grid(1.0, 7, -6.0, 6.0, 9)),
        (control_model, build_grid(1.0, 9, -2.0, 2.0, 8, [-1.0, 1.0])),
    ]:
        for _ in range(4):
            mf = random_policy_mean_field(grid, model, rng)
            assert np.abs(flow_residuals(grid, model, mf)).max() <= 1e-12
            br = best_response(grid, model, mf)
            assert np.abs(flow_residuals(grid, model, br.measures)).max() <= 1e-12


def test_mass_conservation_every_slice(os_model, rng):
    grid = build_grid(1.0, 9, -8.0, 8.0, 14)
    mf = random_policy_mean_field(grid, os_model, rng)
    br = best_response_stopping(grid, os_model, mf)
    stopped = 0.0
    for i in range(grid.n_t):
        stopped += br.measures.mu[i].sum()
        in_game = br.measures.m[i].sum()
        assert stopped + in_game == pytest.approx(1.0, abs=1e-12)
    assert br.measures.mu.sum() == pytest.approx(1.0, abs=1e-12)


def test_best_response_deterministic(os_model, rng):
    grid = build_grid(1.0, 8, -6.0, 6.0, 10)
    mf = random_policy_mean_field(grid, os_model, rng)
    a = best_response_stopping(grid, os_model, mf)
    b = best_response_stopping(grid, os_model, mf)
    assert a.value == b.value
    assert a.measures.mu.tobytes() == b.measures.mu.tobytes()
    assert np.array_equal(a.policy, b.policy)


def test_kind_mismatch_raises(os_model, control_model):
    grid = build_grid(1.0, 5, -2.0, 2.0, 5, [-1.0, 1.0])
    mf = random_policy_mean_field(grid, control_model, np.random.default_rng(1))
    with pytest.raises(ModelError):
        best_response_stopping(grid, os_model, mf)  # wrong kind pairing
    with pytest.raises(ModelError):
        best_response_control(build_grid(1.0, 5, -2.0, 2.0, 5), control_model, mf)
