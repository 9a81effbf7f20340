import numpy as np
import pytest

import mfg_lpfp.fictitious_play as fp_mod
from mfg_lpfp import (
    CflError,
    CONTROL,
    ModelError,
    SolverError,
    build_grid,
    exploitability,
    extract_markov_control,
    initial_guess,
    loglog_slope,
    lpfp_run,
    random_policy_mean_field,
)
from mfg_lpfp.dp import best_response, chain_tables, flow_residuals, forward_control
from mfg_lpfp.measures import MeanField
from mfg_lpfp.models import discretize_initial

from conftest import simple_model


def test_initial_guess_frozen_chain_rides_to_horizon():
    grid = build_grid(1.0, 4, 0.0, 1.0, 2)
    model = simple_model(b=0.0, sigma=0.0, f=0.0, g=0.0)  # p_stay = 1
    guess = initial_guess(grid, model)
    for i in range(grid.n_t):
        assert guess.m[i].sum() == pytest.approx(1.0, abs=1e-15)
    assert guess.mu[grid.n_t].sum() == pytest.approx(1.0, abs=1e-15)
    assert guess.mu[: grid.n_t].sum() == 0.0


def test_initial_guess_feasible(os_model, control_model):
    for model, grid in [
        (os_model, build_grid(1.0, 8, -7.0, 7.0, 12)),
        (control_model, build_grid(1.0, 10, -2.0, 2.0, 7, [-1.0, 0.0, 1.0])),
    ]:
        guess = initial_guess(grid, model)
        assert np.abs(flow_residuals(grid, model, guess)).max() <= 1e-12
        assert guess.mu.sum() == pytest.approx(1.0, abs=1e-12)


def test_initial_guess_control_is_middle_action_push(control_model):
    grid = build_grid(1.0, 8, -2.0, 2.0, 6, [-1.0, 0.0, 1.0])
    guess = initial_guess(grid, control_model)
    chain = chain_tables(grid, control_model)
    m0 = discretize_initial(control_model, grid)
    fixed = forward_control(grid, chain, m0, np.ones((grid.n_t, grid.n_s + 1), dtype=np.int64))
    np.testing.assert_array_equal(guess.mu, fixed.mu)
    np.testing.assert_array_equal(guess.m, fixed.m)
    # single-action grids collapse to that action's push
    grid1 = build_grid(1.0, 8, -2.0, 2.0, 6, [0.5])
    guess1 = initial_guess(grid1, control_model)
    fixed1 = forward_control(
        chain=chain_tables(grid1, control_model),
        grid=grid1,
        m0=discretize_initial(control_model, grid1),
        action=np.zeros((grid1.n_t, grid1.n_s + 1), dtype=np.int64),
    )
    np.testing.assert_array_equal(guess1.mu, fixed1.mu)


def test_first_iteration_returns_best_response(os_model):
    grid = build_grid(1.0, 8, -7.0, 7.0, 12)
    guess = initial_guess(grid, os_model)
    trace = lpfp_run(grid, os_model, 1, method="dp", guess=guess)
    br = best_response(grid, os_model, guess)
    np.testing.assert_array_equal(trace.final.mu, br.measures.mu)
    np.testing.assert_array_equal(trace.final.m, br.measures.m)
    assert len(trace.rows) == 1 and trace.rows[0].n == 1


def test_averaging_identity_exact(os_model):
    grid = build_grid(1.0, 6, -7.0, 7.0, 10)
    seen = []
    lpfp_run(grid, os_model, 5, method="dp", callback=lambda r, avg, resp: seen.append((avg.copy(), resp.copy())))
    prev = initial_guess(grid, os_model)
    for ell, (avg, resp) in enumerate(seen):
        w_old, w_new = ell / (ell + 1.0), 1.0 / (ell + 1.0)
        np.testing.assert_array_equal(avg.mu, w_old * prev.mu + w_new * resp.mu)
        np.testing.assert_array_equal(avg.m, w_old * prev.m + w_new * resp.m)
        prev = avg


def test_lp_and_dp_methods_agree_quick(os_model):
    grid = build_grid(1.0, 10, -11.0, 11.0, 16)
    t_lp = lpfp_run(grid, os_model, 8, method="lp")
    t_dp = lpfp_run(grid, os_model, 8, method="dp")
    np.testing.assert_allclose(t_lp.eps_raw, t_dp.eps_raw, rtol=0, atol=1e-8)


@pytest.mark.slow
def test_lp_and_dp_methods_agree_spec_scale(os_model):
    grid = build_grid(1.0, 20, -11.0, 11.0, 40)
    t_lp = lpfp_run(grid, os_model, 20, method="lp")
    t_dp = lpfp_run(grid, os_model, 20, method="dp")
    np.testing.assert_allclose(t_lp.eps_raw, t_dp.eps_raw, rtol=0, atol=1e-7)


def test_lp_method_control_run_consistent(control_model):
    # The two best-response oracles give equal values for a common mean
    # field, so the first exploitability matches exactly; afterwards they
    # may average different (equally optimal) maximizers at argmax ties and
    # the sequences legitimately drift apart.  Both runs stay nonnegative.
    grid = build_grid(1.0, 12, -2.0, 2.0, 8, np.linspace(-1, 1, 3))
    t_lp = lpfp_run(grid, control_model, 6, method="lp")
    t_dp = lpfp_run(grid, control_model, 6, method="dp")
    assert t_lp.eps_raw[0] == pytest.approx(t_dp.eps_raw[0], abs=1e-8)
    assert t_lp.eps_raw.min() >= -1e-9
    assert t_dp.eps_raw.min() >= -1e-9


def test_exploitability_of_itself_is_zero(os_model, rng):
    grid = build_grid(1.0, 6, -6.0, 6.0, 9)
    mf = random_policy_mean_field(grid, os_model, rng)
    assert exploitability(grid, os_model, mf, mf) == 0.0


def test_exploitability_zero_at_fixed_point(rng):
    # f = 0, g = const: every feasible pair best-responds to everything,
    # so the best-response gap vanishes identically.
    grid = build_grid(1.0, 5, -1.0, 1.0, 6)
    model = simple_model(b=0.3, sigma=0.5, f=0.0, g=1.5)
    mf = random_policy_mean_field(grid, model, rng)
    resp = best_response(grid, model, mf).measures
    assert abs(exploitability(grid, model, mf, resp)) <= 1e-9


def test_first_exploitability_positive_from_never_stop(os_model):
    grid = build_grid(1.0, 10, -11.0, 11.0, 16)
    guess = initial_guess(grid, os_model)
    resp = best_response(grid, os_model, guess).measures
    assert exploitability(grid, os_model, guess, resp) > 0.0


def test_exploitability_nonnegative_along_run(os_model):
    grid = build_grid(1.0, 12, -11.0, 11.0, 20)
    trace = lpfp_run(grid, os_model, 40, method="dp")
    assert trace.eps_raw.min() >= -1e-9


def test_extract_markov_control_values(control_model):
    grid = build_grid(1.0, 4, -2.0, 2.0, 4, [-1.0, 1.0])
    mf = MeanField.zeros(CONTROL, grid)
    mf.mu[grid.n_t, 2] = 1.0
    mf.m[0, 1, 1] = 0.4  # pure action a = +1
    mf.m[0, 2, 0] = 0.2
    mf.m[0, 2, 1] = 0.2  # uniform over -1 and +1
    alpha = extract_markov_control(grid, mf)
    assert alpha[0, 1] == pytest.approx(1.0)
    assert alpha[0, 2] == pytest.approx(0.0, abs=1e-15)
    assert np.isnan(alpha[0, 3])
    with pytest.raises(ModelError):
        extract_markov_control(grid, MeanField.zeros("stopping", grid))


def test_driver_refuses_cfl_violation(os_model):
    grid = build_grid(1.0, 2, -0.5, 0.5, 8)
    with pytest.raises(CflError):
        lpfp_run(grid, os_model, 2)
    trace = lpfp_run(grid, os_model, 1, cfl_override=True)  # explicit opt-in runs anyway
    assert len(trace.rows) == 1


def test_early_stop_threshold(os_model):
    grid = build_grid(1.0, 10, -11.0, 11.0, 16)
    full = lpfp_run(grid, os_model, 60, method="dp")
    threshold = full.eps_raw[29]
    stopped = lpfp_run(grid, os_model, 60, method="dp", early_stop_eps=float(threshold))
    assert len(stopped.rows) < 60


def test_solver_failure_preserves_partial_trace(os_model, monkeypatch):
    import mfg_lpfp.lp as lp_mod

    real = lp_mod.solve_lp
    calls = {"n": 0}

    def flaky(prog, **kw):
        calls["n"] += 1
        if calls["n"] >= 3:
            raise_sol = real(prog, iter_limit=1)
            return raise_sol  # iteration-limit status -> SolverError upstream
        return real(prog, **kw)

    monkeypatch.setattr(fp_mod.lp, "solve_lp", flaky)
    grid = build_grid(1.0, 6, -7.0, 7.0, 10)
    with pytest.raises(SolverError) as err:
        lpfp_run(grid, os_model, 6, method="lp")
    assert err.value.trace is not None
    assert len(err.value.trace.rows) == 2


def test_successive_average_products_bounded(os_model):
    # The Cesaro products N * d(avg_N, avg_{N+1}) must stay bounded: no
    # growth past the early transient, and globally dominated by the
    # transient peak.  (The products decay because the averaged pair
    # converges; the first few indices are the largest by construction.)
    grid = build_grid(1.0, 16, -11.0, 11.0, 24)
    trace = lpfp_run(grid, os_model, 60, method="dp")
    dm = np.array([r.dm_step for r in trace.rows])
    wtv = np.array([r.wtv_step for r in trace.rows])
    # rows[n-1] holds the distance between averages n-1 and n, so the
    # Cesaro products N * d(avg_N, avg_{N+1}) live at list index N.
    n = np.arange(1, len(trace.rows))
    for q in (n * dm[1:], n * wtv[1:]):
        assert q[4:].max() <= 2.0 * q[4] + 1e-12
        assert q.max() <= q[:5].max() + 1e-12


def test_exploitability_decay_small_run(os_model):
    grid = build_grid(1.0, 30, -11.0, 11.0, 40)
    trace = lpfp_run(grid, os_model, 100, method="dp")
    eps = trace.eps_clamped
    assert eps[99] <= eps[4] / 10.0
    slope = loglog_slope(trace, 10, 100)
    assert -1.4 <= slope <= -0.6


def test_runs_from_different_guesses_converge_together(os_model, rng):
    grid = build_grid(1.0, 16, -11.0, 11.0, 24)
    never = initial_guess(grid, os_model)
    chain = chain_tables(grid, os_model)
    from mfg_lpfp.dp import forward_stopping

    stop_everywhere = forward_stopping(
        grid, chain, discretize_initial(os_model, grid), np.ones((grid.n_t, grid.n_s + 1), dtype=bool)
    )
    t1 = lpfp_run(grid, os_model, 200, method="dp", guess=never)
    t2 = lpfp_run(grid, os_model, 200, method="dp", guess=stop_everywhere)
    from mfg_lpfp.metrics import d_m_metric, w1_exit

    dist = (
        d_m_metric(t1.final.m_x, t2.final.m_x, grid)
        + w1_exit(t1.final.mu, t2.final.mu, grid, max_exact=64).value  # surrogate upper bound is conservative here
    )
    eps_scale = max(t1.rows[-1].eps_clamped, t2.rows[-1].eps_clamped)
    assert dist <= 10.0 * eps_scale


def test_callback_rows_stream_in_order(os_model):
    grid = build_grid(1.0, 6, -7.0, 7.0, 10)
    ns = []
    lpfp_run(grid, os_model, 4, callback=lambda r, avg, resp: ns.append(r.n))
    assert ns == [1, 2, 3, 4]
