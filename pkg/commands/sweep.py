"""
Radius sweep over one or more bound parameters.

Values for several parameters are given as colon-joined tuples:

    sweep circuit.json --param C1,C2,L,R --values 1:1:1:1,2:1.5:3:1

Rows are printed in input order even when evaluated in parallel.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

from config.constants import EXIT_NOT_CONVERGED, EXIT_OK
from config.settings import settings
from services.errors import InputError
from services.radius import RadiusResult
from utils.problem_io import apply_parameters, compute, load_problem, solver_config

logger = logging.getLogger(__name__)

# Command configuration for auto-discovery
COMMAND_CONFIG = {
    "name": "sweep",
    "description": "Radius for each value of a bound parameter",
    "params": {
        "input": {
            "type": "string",
            "description": "Problem file declaring the parameters (JSON)",
            "positional": True
        },
        "param": {
            "type": "string",
            "description": "Parameter name, or comma-separated names swept together",
            "required": True
        },
        "values": {
            "type": "string",
            "description": "Comma-separated values; colon-joined tuples for several names",
            "required": True
        },
        "omega": {
            "type": "float",
            "description": "STLN weight"
        },
        "epsilon": {
            "type": "float",
            "description": "Convergence threshold on the increments"
        },
        "max_iter": {
            "type": "integer",
            "description": "Iteration cap"
        },
        "multistart": {
            "type": "boolean",
            "description": "Try every partition column and keep the best"
        }
    }
}

HEADER = ("radius_frobenius", "radius_spectral", "iterations", "converged")


def parse_values(names: list[str], values: str) -> list[tuple[float, ...]]:
    """Split '1:2,3:4' into [(1.0, 2.0), (3.0, 4.0)] with one slot per name."""
    rows = []
    for item in values.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != len(names):
            raise InputError(f"--values: '{item}' has {len(parts)} components, expected {len(names)} ({','.join(names)})")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            raise InputError(f"--values: '{item}' is not numeric") from None
    if not rows:
        raise InputError("--values: no values given")
    return rows


def _fmt(x: float) -> str:
    return format(x, ".12g")


def format_row(point: tuple[float, ...], result: RadiusResult) -> str:
    cells = [":".join(_fmt(v) for v in point),
             _fmt(result.radius_frobenius),
             _fmt(result.radius_spectral),
             str(result.iterations),
             str(result.converged).lower()]
    return "\t".join(cells)


def sweep(
    input: str,
    param: str,
    values: str,
    omega: float | None = None,
    epsilon: float | None = None,
    max_iter: int | None = None,
    multistart: bool = False,
    **kwargs
) -> int:
    """
    Print one tab-separated row per value.

    Returns:
        EXIT_OK if every point converged, EXIT_NOT_CONVERGED otherwise.
    """
    problem = load_problem(input)
    names = [n.strip() for n in param.split(",") if n.strip()]
    unknown = [n for n in names if n not in problem.parameters]
    if not names or unknown:
        missing = ", ".join(unknown) or param
        raise InputError(f"unknown parameter '{missing}'; available: {sorted(problem.parameters)}")

    points = parse_values(names, values)
    # bind every point up front so input errors surface before any solve
    bound = [apply_parameters(problem, names, p) for p in points]
    configs = [
        solver_config(b, omega=omega, epsilon=epsilon, max_iter=max_iter, multistart=multistart or None)
        for b in bound
    ]

    logger.info(f"[CLI] sweeping {','.join(names)} over {len(points)} points ({settings.stln_workers} workers)")
    if settings.stln_workers > 1:
        with ThreadPoolExecutor(max_workers=settings.stln_workers) as pool:
            results = list(pool.map(compute, bound, configs))
    else:
        results = [compute(b, c) for b, c in zip(bound, configs)]

    print("\t".join((",".join(names),) + HEADER))
    for point, result in zip(points, results):
        print(format_row(point, result))

    if not all(r.converged for r in results):
        logger.warning("[CLI] some sweep points did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK
