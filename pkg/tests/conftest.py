import numpy as np
import pytest

from lqgopt.errors import InvalidPlantError
from lqgopt.model import Controller, Plant, TangentDirection, is_admissible


@pytest.fixture
def scalar_plant():
    one = np.eye(1)
    return Plant(A=-one, B=one, C=one, W=one, V=one, Q=one, R=one)


@pytest.fixture
def scalar_controller():
    return Controller(A_K=[[-3.0]], B_K=[[1.0]], C_K=[[-1.0]])


def make_random_plant(rng, n, m, p, density=1.0):
    """Sample (A, B, C) entrywise Gaussian (zeroed with prob 1-density) with
    identity noise/cost weights, retrying until the plant assumptions hold."""
    for _ in range(50):
        def draw(rows, cols):
            vals = rng.standard_normal((rows, cols))
            if density < 1.0:
                vals = np.where(rng.random((rows, cols)) < density, vals, 0.0)
            return vals

        try:
            return Plant(
                A=draw(n, n),
                B=draw(n, m),
                C=draw(p, n),
                W=np.eye(n),
                V=np.eye(p),
                Q=np.eye(n),
                R=np.eye(m),
            )
        except InvalidPlantError:
            continue
    raise RuntimeError("could not sample a valid plant")


def random_tangent(rng, q, m, p, scale=1.0):
    return TangentDirection(
        scale * rng.standard_normal((q, q)),
        scale * rng.standard_normal((q, p)),
        scale * rng.standard_normal((m, q)),
    )


def nearby_admissible_controller(plant, base, rng, scale=0.05):
    """Random admissible controller obtained by jiggling a known-good one.

    The jiggle is relative to the base controller's size and shrinks until
    the result is admissible, so fragile optima still yield samples."""
    step = scale * (1.0 + base.frobenius_norm())
    for _ in range(60):
        V = random_tangent(rng, base.q, plant.m, plant.p, step)
        K = base.retract(V)
        report = is_admissible(plant, K)
        if report.stabilizing and report.minimal:
            return K
        step *= 0.5
    raise RuntimeError("could not sample an admissible controller")


def observer_controller(plant, rng):
    """Admissible controller from random gain/observer pole placement in (-2,-1),
    the same construction the optimizer uses for its starting points."""
    from lqgopt import matlin
    from lqgopt.model import Controller

    for _ in range(20):
        gain_poles = rng.uniform(-2.0, -1.0, plant.n)
        obs_poles = rng.uniform(-2.0, -1.0, plant.n)
        F_g = matlin.place_poles(plant.A, plant.B, gain_poles, rng)
        L = matlin.place_poles(plant.A.T, plant.C.T, obs_poles, rng).T
        K = Controller(plant.A - plant.B @ F_g - L @ plant.C, L, -F_g)
        report = is_admissible(plant, K)
        if report.stabilizing and report.minimal:
            return K
    raise RuntimeError("could not build an observer-based controller")


def well_conditioned_transform(rng, q, cond_cap=1e3):
    while True:
        S = rng.standard_normal((q, q))
        if q == 1:
            S = S if abs(S[0, 0]) > 0.1 else np.array([[1.5]])
        if np.linalg.cond(S) <= cond_cap:
            return S
