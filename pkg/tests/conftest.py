import numpy as np
import pytest

from mfg_lpfp import CONTROL, STOPPING, ModelSpec, build_grid, builtin_model


def simple_model(
    kind=STOPPING,
    *,
    b=1.0,
    sigma=1.0,
    f=0.0,
    g=0.0,
    density=None,
    action_bounds=(-1.0, 1.0),
    p=1.0,
):
    """Constant-coefficient synthetic model; f/g may be numbers or callables.

    Goes through the generic (hook-free) reward-table path on purpose.
    """
    if density is None:
        density = lambda x: np.ones_like(np.asarray(x, dtype=float))
    f_fn = f if callable(f) else (lambda t, x, sl, *a, _v=f: _v)
    g_fn = g if callable(g) else (lambda t, x, stat, _v=g: _v)
    if kind == STOPPING:
        drift = lambda t, x: np.broadcast_to(float(b), np.shape(x))
    else:
        drift = lambda t, x, a: np.broadcast_to(float(b) * float(a), np.shape(x))
    return ModelSpec(
        name="synthetic",
        kind=kind,
        drift=drift,
        diffusion=lambda t, x: np.broadcast_to(float(sigma), np.shape(x)),
        running_reward=f_fn,
        terminal_reward=g_fn,
        initial_density=density,
        growth_p=p,
        action_bounds=action_bounds if kind == CONTROL else None,
        default_x_bounds=lambda T: (-1.0, 1.0),
    )


@pytest.fixture(scope="session")
def os_model():
    return builtin_model("os_example")


@pytest.fixture(scope="session")
def control_model():
    return builtin_model("control_example")


@pytest.fixture(scope="session")
def os_grid_small(os_model):
    return build_grid(1.0, 10, -11.0, 11.0, 16)


@pytest.fixture(scope="session")
def control_grid_small():
    # delta = 0.5, CFL bound 0.25/1.5 = 1/6 > 1/12
    return build_grid(1.0, 12, -2.0, 2.0, 8, np.linspace(-1.0, 1.0, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
