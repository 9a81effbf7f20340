import numpy as np
import pytest

from mfg_lpfp import ModelError, build_grid
from mfg_lpfp.metrics import (
    DiscreteSubprob,
    d_m_metric,
    w1_exit,
    w1_exit_bruteforce,
    w1_prime,
    w1_prime_arrays,
    w1_prime_dual_bruteforce,
    weighted_tv,
)


def _random_subprob(rng, max_atoms=6):
    n = int(rng.integers(1, max_atoms + 1))
    xs = rng.uniform(-3.0, 3.0, size=n)
    ws = rng.uniform(0.0, 1.0, size=n)
    ws *= rng.uniform(0.1, 1.0) / max(ws.sum(), 1e-12)
    return DiscreteSubprob(xs, ws)


def _random_quantized_exit(rng, quantum=0.125, max_atoms=5):
    n = int(rng.integers(1, max_atoms + 1))
    ts = rng.uniform(0.0, 1.0, size=n)
    xs = rng.uniform(-2.0, 2.0, size=n)
    counts = rng.multinomial(8, np.full(n, 1.0 / n))
    keep = counts > 0
    return ts[keep], xs[keep], counts[keep] * quantum


def test_w1_prime_identity():
    a = DiscreteSubprob([0.0, 1.0], [0.3, 0.4])
    assert w1_prime(a, a, x0=0.0) == 0.0


def test_w1_prime_equal_mass_translation():
    a = DiscreteSubprob([1.0], [1.0])
    b = DiscreteSubprob([2.0], [1.0])
    assert w1_prime(a, b, x0=0.0) == pytest.approx(1.0, abs=1e-14)


def test_w1_prime_mass_defect_splits_lipschitz_and_mass_parts():
    a = DiscreteSubprob([1.0], [0.5])
    b = DiscreteSubprob([1.0], [1.0])
    assert w1_prime(a, b, x0=0.0) == pytest.approx(1.0, abs=1e-14)


def test_w1_prime_against_dual_bruteforce(rng):
    for _ in range(200):
        a = _random_subprob(rng)
        b = _random_subprob(rng)
        x0 = float(rng.uniform(-3.5, 3.5))
        fast = w1_prime(a, b, x0)
        brute = w1_prime_dual_bruteforce(a, b, x0)
        assert fast == pytest.approx(brute, abs=1e-10)


def test_w1_prime_metric_axioms(rng):
    for _ in range(200):
        a, b, c = (_random_subprob(rng, 4) for _ in range(3))
        x0 = float(rng.uniform(-3.0, 3.0))
        dab = w1_prime(a, b, x0)
        dba = w1_prime(b, a, x0)
        assert dab >= 0.0
        assert dab == pytest.approx(dba, abs=1e-12)
        assert dab <= w1_prime(a, c, x0) + w1_prime(c, b, x0) + 1e-12
    a = _random_subprob(rng)
    assert w1_prime(a, DiscreteSubprob(a.xs.copy(), a.ws.copy()), 0.4) == 0.0


def test_d_m_identity_and_single_slice(os_model):
    grid = build_grid(1.0, 4, 0.0, 2.0, 2)  # nodes 0, 1, 2
    a = np.zeros((4, 3))
    b = np.zeros((4, 3))
    assert d_m_metric(a, b, grid, x0=0.0) == 0.0
    # one slice differing by the half-vs-unit mass example at x = 1
    a[2, 1] = 0.5
    b[2, 1] = 1.0
    assert d_m_metric(a, b, grid, x0=0.0) == pytest.approx(grid.delta_t * 1.0, abs=1e-14)


def test_d_m_triangle_inequality(rng):
    grid = build_grid(1.0, 5, -1.0, 1.0, 6)
    flows = []
    for _ in range(3):
        f = rng.uniform(0.0, 1.0, size=(grid.n_t, grid.n_s + 1))
        f /= np.maximum(f.sum(axis=1, keepdims=True), 1.0)
        flows.append(f)
    a, b, c = flows
    dab = d_m_metric(a, b, grid)
    assert dab == pytest.approx(d_m_metric(b, a, grid), abs=1e-13)
    assert dab <= d_m_metric(a, c, grid) + d_m_metric(c, b, grid) + 1e-12


def test_w1_exit_identity_and_unit_pair():
    one = (np.array([0.0]), np.array([0.0]), np.array([1.0]))
    other = (np.array([0.0]), np.array([1.0]), np.array([1.0]))
    assert w1_exit(one, one).value == 0.0
    res = w1_exit(one, other)
    assert res.exact
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_w1_exit_mass_mismatch_rejected():
    a = (np.array([0.0]), np.array([0.0]), np.array([1.0]))
    b = (np.array([0.0]), np.array([0.0]), np.array([0.5]))
    with pytest.raises(ModelError):
        w1_exit(a, b)


def test_w1_exit_against_enumeration(rng):
    for _ in range(30):
        a = _random_quantized_exit(rng)
        b = _random_quantized_exit(rng)
        res = w1_exit(a, b)
        assert res.exact
        brute = w1_exit_bruteforce(a, b, quantum=0.125)
        assert res.value == pytest.approx(brute, abs=1e-9)


def test_w1_exit_surrogate_upper_bounds_exact(rng):
    for _ in range(20):
        a = _random_quantized_exit(rng)
        b = _random_quantized_exit(rng)
        exact = w1_exit(a, b)
        surro = w1_exit(a, b, max_exact=0)
        assert exact.exact and not surro.exact
        assert surro.value >= exact.value - 1e-12


def test_w1_exit_grid_inputs(os_model):
    grid = build_grid(1.0, 3, -1.0, 1.0, 4)
    mu1 = np.zeros((4, 5))
    mu2 = np.zeros((4, 5))
    mu1[0, 2] = 1.0
    mu2[3, 2] = 1.0  # same state, horizon apart: distance = |dt| = 1
    res = w1_exit(mu1, mu2, grid)
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_weighted_tv_examples():
    xs = np.array([1.0, 2.0])
    assert weighted_tv([0.5, 0.5], [0.5, 0.5], xs, 1.0) == 0.0
    # unit atoms at x=1 vs x=2: (1+1)*1 + (1+2)*1 = 5
    assert weighted_tv([1.0, 0.0], [0.0, 1.0], xs, 1.0) == pytest.approx(5.0, abs=1e-14)
    assert weighted_tv([0.5, 0.0], [0.0, 0.5], xs, 1.0) == pytest.approx(2.5, abs=1e-14)


def test_weighted_tv_axioms(rng):
    xs = rng.uniform(-2, 2, size=8)
    a, b, c = (rng.uniform(0, 0.2, size=8) for _ in range(3))
    assert weighted_tv(a, b, xs, 1.5) == pytest.approx(weighted_tv(b, a, xs, 1.5), abs=1e-14)
    assert weighted_tv(a, b, xs, 1.5) <= weighted_tv(a, c, xs, 1.5) + weighted_tv(c, b, xs, 1.5) + 1e-12
    assert weighted_tv(a, a, xs, 2.0) == 0.0


def test_w1_prime_arrays_matches_atom_form(rng):
    xs = np.sort(rng.uniform(-2, 2, size=7))
    wa = rng.uniform(0, 0.1, size=7)
    wb = rng.uniform(0, 0.1, size=7)
    x0 = 0.3
    via_arrays = w1_prime_arrays(xs, wa, wb, x0)
    via_atoms = w1_prime(DiscreteSubprob(xs, wa), DiscreteSubprob(xs, wb), x0)
    assert via_arrays == pytest.approx(via_atoms, abs=1e-14)
