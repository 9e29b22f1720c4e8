from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def detailed_balance_populations(gamma_m, gamma_l, epsilon, m, l, nbar, n_max):
    """Stationary populations of the engineered birth-death chain in exact rationals.

    Independent of the closed-form branches: uses only the one-step rates
    ``up(n) = (eps + nbar)(n+1) + gamma_l [n = l]`` and
    ``down(n+1) = (1 + nbar)(n+1) + gamma_m [n = m]``.
    """
    gm, gl = Fraction(gamma_m), Fraction(gamma_l)
    eps, nb = Fraction(epsilon), Fraction(nbar)
    w = [Fraction(1)]
    for n in range(n_max):
        up = (eps + nb) * (n + 1) + (gl if n == l else 0)
        down = (1 + nb) * (n + 1) + (gm if n == m else 0)
        w.append(w[-1] * up / down)
    z = sum(w)
    return np.array([float(x / z) for x in w])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, d, rank=None):
    rank = rank or d
    A = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real
