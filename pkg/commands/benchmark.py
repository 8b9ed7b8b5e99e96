"""
Timing run on random descriptor systems with E held fixed.
"""

import logging
import time

import numpy as np

from config.constants import EXIT_NOT_CONVERGED, EXIT_OK
from services.benchmarks import random_descriptor
from services.errors import InputError
from services.radius import compute_radius_descriptor
from services.stln import StlnConfig
from services.systems import PerturbationMask

logger = logging.getLogger(__name__)

# Command configuration for auto-discovery
COMMAND_CONFIG = {
    "name": "benchmark",
    "description": "Mean STLN time and iteration count over random systems",
    "params": {
        "n": {
            "type": "integer",
            "description": "State dimension",
            "required": True
        },
        "m": {
            "type": "integer",
            "description": "Input dimension",
            "required": True
        },
        "trials": {
            "type": "integer",
            "description": "Number of random systems",
            "default": 10
        },
        "seed": {
            "type": "integer",
            "description": "Seed for numpy.random.default_rng",
            "default": 0
        },
        "omega": {
            "type": "float",
            "description": "STLN weight"
        },
        "epsilon": {
            "type": "float",
            "description": "Convergence threshold on the increments"
        }
    }
}


def benchmark(
    n: int,
    m: int,
    trials: int = 10,
    seed: int = 0,
    omega: float | None = None,
    epsilon: float | None = None,
    **kwargs
) -> int:
    """
    Print mean wall time, mean iterations and mean radius.

    Returns:
        EXIT_OK if every trial converged, EXIT_NOT_CONVERGED otherwise.
    """
    if n < 1 or m < 1 or trials < 1:
        raise InputError(f"--n, --m and --trials must be >= 1 (got n={n}, m={m}, trials={trials})")

    cfg = StlnConfig.from_settings(omega=omega, epsilon=epsilon, mode_search=False)
    rng = np.random.default_rng(seed)
    mask = PerturbationMask.fixed_E(n, m)

    times, iterations, radii, converged = [], [], [], 0
    for trial in range(trials):
        sys = random_descriptor(n, m, rng)
        start = time.perf_counter()
        result = compute_radius_descriptor(sys, mask, cfg)
        times.append(time.perf_counter() - start)
        iterations.append(result.iterations)
        radii.append(result.radius_frobenius)
        converged += result.converged
        logger.debug(f"[CLI] trial {trial}: {times[-1]:.3f}s, {result.iterations} iterations")

    print(f"n={n} m={m} trials={trials} seed={seed}")
    print(f"mean_time_s\t{np.mean(times):.6f}")
    print(f"mean_iterations\t{np.mean(iterations):.2f}")
    print(f"mean_radius_frobenius\t{format(float(np.mean(radii)), '.12g')}")
    print(f"converged\t{converged}/{trials}")

    return EXIT_OK if converged == trials else EXIT_NOT_CONVERGED
