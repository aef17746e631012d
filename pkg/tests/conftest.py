import numpy as np
import pytest

from orthantloop.kinematics import KinematicConfig, random_interior_config
from orthantloop.quadrature import QuadratureSettings


@pytest.fixture
def rng():
    return np.random.default_rng(20240614)


@pytest.fixture
def settings():
    return QuadratureSettings()


@pytest.fixture
def fast_settings():
    return QuadratureSettings(rel_tol=1e-6, abs_tol=1e-10)


def config_from(masses, k2, powers=None, n=None) -> KinematicConfig:
    masses = tuple(masses)
    k2 = np.asarray(k2, dtype=float)
    if powers is None:
        powers = (1,) * len(masses)
    if n is None:
        n = len(masses)
    return KinematicConfig(masses=masses, invariants=k2, powers=tuple(powers),
                           dimension=float(n))


def equicorrelated_config(n_legs: int, c: float, mass: float = 1.0,
                          n: float | None = None) -> KinematicConfig:
    k2 = np.full((n_legs, n_legs), 2.0 * mass * mass * (1.0 - c))
    np.fill_diagonal(k2, 0.0)
    return config_from((mass,) * n_legs, k2, n=n if n is not None else n_legs)


def interior(rng, n_legs, n=None, **kw) -> KinematicConfig:
    return random_interior_config(rng, n_legs, n=n, **kw)
