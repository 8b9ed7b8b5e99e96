"""
Standard benchmark systems for the controllability radius.

Constructors for the standard test problems (a small descriptor system,
a parametric family, an RLC circuit, a drum brake model) plus a random
generator for timing runs.
"""

import math

import numpy as np

from services.systems import DescriptorSystem, HigherOrderSystem, PerturbationMask


def example_descriptor() -> DescriptorSystem:
    """3-state descriptor system with a singular E."""
    E = [[1.8, 0.0, 0.0],
         [0.0, 0.34, 0.0],
         [0.0, 0.0, 0.0]]
    A = [[2.0, -0.91, -0.088],
         [0.19, 0.25, 0.51],
         [0.64, 0.31, -0.59]]
    B = [[-0.63], [0.53], [-0.58]]
    return DescriptorSystem(np.array(E), np.array(A), np.array(B))


def parametric_family(delta: float) -> DescriptorSystem:
    """Family whose rank[E B] is governed by delta."""
    E = [[0.0, 2.1, 0.0],
         [1.0, 0.0, 0.0],
         [0.0, 0.0, 0.0]]
    A = [[1.0, 3.0, 0.0],
         [2.0, 1.0, 1.0],
         [3.0, 1.0, 5.0]]
    B = [[1.0], [0.0], [delta]]
    return DescriptorSystem(np.array(E), np.array(A), np.array(B))


def rlc_circuit(C1: float, C2: float, L: float, R: float) -> tuple[DescriptorSystem, PerturbationMask]:
    """
    Two-capacitor RLC circuit, state (u_C1, u_C2, I_2, I_1).

    Returns:
        (system, mask freeing only the C1, C2, L and R entries).
    """
    E = np.diag([C1, C2, -L, 0.0])
    A = np.array([[0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, 1.0, 0.0],
                  [-1.0, 1.0, 0.0, 0.0],
                  [1.0, 0.0, 0.0, R]])
    B = np.array([[0.0], [0.0], [0.0], [-1.0]])

    mask_E = np.zeros((4, 4), bool)
    mask_E[0, 0] = mask_E[1, 1] = mask_E[2, 2] = True
    mask_A = np.zeros((4, 4), bool)
    mask_A[3, 3] = True
    mask_B = np.zeros((4, 1), bool)
    return DescriptorSystem(E, A, B), PerturbationMask(mask_E, mask_A, mask_B)


def brake_stiffness(mu: float, k: float = 1.0, gamma: float = math.pi / 100) -> np.ndarray:
    """Stiffness matrix K(mu) of the two-contact drum brake."""
    s, c = math.sin(gamma), math.cos(gamma)
    return k * np.array([
        [(s + mu * c) * s, -mu - (s + mu * c) * c],
        [(mu * s - c) * s, 1.0 + (mu * s + c) * c],
    ])


def brake_model(mu: float, mass: float = 5.0, k: float = 1.0, gamma: float = math.pi / 100) -> HigherOrderSystem:
    """M x'' + K(mu) x = [0 1]^T u with M = mass * I."""
    M = mass * np.eye(2)
    return HigherOrderSystem((M, np.zeros((2, 2)), brake_stiffness(mu, k, gamma)), np.array([[0.0], [1.0]]))


def brake_masks() -> tuple[list[np.ndarray], np.ndarray]:
    """Coefficient masks keeping M and the (zero) damping fixed; K and b free."""
    return [np.zeros((2, 2), bool), np.zeros((2, 2), bool), np.ones((2, 2), bool)], np.ones((2, 1), bool)


def random_descriptor(n: int, m: int, rng: np.random.Generator) -> DescriptorSystem:
    """Standard normal (E, A, B); controllable with probability one."""
    return DescriptorSystem(rng.standard_normal((n, n)), rng.standard_normal((n, n)), rng.standard_normal((n, m)))
