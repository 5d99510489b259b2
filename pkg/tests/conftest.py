import numpy as np
import pytest

import isvp


def near_orthogonal(rng: np.random.Generator, side: int, scale: float = 0.1) -> np.ndarray:
    """Orthogonal matrix plus a small perturbation, the regime the
    correction formulas operate in."""
    Q = np.linalg.qr(rng.standard_normal((side, side)))[0]
    return Q + scale * rng.standard_normal((side, side)) / np.sqrt(side)


def separated_sigma(rng: np.random.Generator, n: int) -> np.ndarray:
    """Strictly decreasing positive targets with O(0.1) gaps."""
    gaps = rng.uniform(0.1, 0.3, n)
    return np.cumsum(gaps[::-1])[::-1] + 0.5


def solved_start(instance, c0, mu=0.0, seed=0):
    """J0 at c0 plus the matching B0, the way the harness initializes."""
    factors = isvp.full_svd(isvp.evaluate_A(instance, c0))
    J0 = isvp.approx_jacobian(factors.U, factors.V, instance)
    return J0, isvp.build_B0(J0, mu, seed)


@pytest.fixture(scope="session")
def small_instance():
    """m=12, n=5 instance with known generator, solvable by everything."""
    instance, c_star = isvp.generate_instance(12, 5, 7)
    return instance, c_star


@pytest.fixture(scope="session")
def medium_instance():
    """m=40, n=20 instance; converges in two outer iterations."""
    instance, c_star = isvp.generate_instance(40, 20, 2)
    return instance, c_star
