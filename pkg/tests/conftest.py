"""Shared fixtures: benchmark systems, seeded generators and problem-file paths."""

from pathlib import Path

import numpy as np
import pytest

from services.benchmarks import brake_model, example_descriptor, parametric_family, rlc_circuit
from services.systems import DescriptorSystem, HigherOrderSystem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def problems_dir() -> Path:
    return PROBLEMS


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def example1() -> DescriptorSystem:
    return example_descriptor()


@pytest.fixture
def family():
    return parametric_family


@pytest.fixture
def circuit():
    return rlc_circuit(1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def brake() -> HigherOrderSystem:
    return brake_model(0.2)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


def uncontrollable_descriptor(rng: np.random.Generator, n: int = 4, m: int = 1) -> DescriptorSystem:
    """
    Random triple with an uncontrollable mode by construction.

    W^T [sE - A, B] diag(V^T, I) = [[sE1 - A1, 0, B1], [0, sE2 - A2, 0]]
    drops rank at the eigenvalue of the trailing 1x1 block.
    """
    W = random_orthogonal(rng, n)
    V = random_orthogonal(rng, n)
    E = np.zeros((n, n))
    A = np.zeros((n, n))
    E[:n - 1, :n - 1] = rng.standard_normal((n - 1, n - 1))
    A[:n - 1, :n - 1] = rng.standard_normal((n - 1, n - 1))
    E[n - 1, n - 1] = 1.0 + rng.random()
    A[n - 1, n - 1] = rng.standard_normal()
    B = np.zeros((n, m))
    B[:n - 1, :] = rng.standard_normal((n - 1, m))
    return DescriptorSystem(W @ E @ V, W @ A @ V, W @ B)


def uncontrollable_higher_order(rng: np.random.Generator, d: int = 2) -> HigherOrderSystem:
    """N = 2 system whose second row decouples after a fixed rotation Q."""
    Q = random_orthogonal(rng, 2)
    coeffs = []
    for i in range(d + 1):
        upper = rng.standard_normal((2, 2))
        upper[1, 0] = 0.0
        if i == 0:
            upper[1, 1] = 1.0 + rng.random()
        coeffs.append(Q @ upper)
    b = Q @ np.array([[rng.standard_normal() + 2.0], [0.0]])
    return HigherOrderSystem(tuple(coeffs), b)


@pytest.fixture
def make_uncontrollable():
    return uncontrollable_descriptor


@pytest.fixture
def make_uncontrollable_higher_order():
    return uncontrollable_higher_order
