"""
Compute the structured real radius of controllability of a problem file.

Writes the JSON report to stdout or --out; exit 2 on non-convergence
with the best iterate still written.
"""

import logging
import sys

from config.constants import EXIT_NOT_CONVERGED, EXIT_OK
from services.errors import InputError
from utils.problem_io import build_report, compute, load_problem, solver_config, write_report

logger = logging.getLogger(__name__)

# Command configuration for auto-discovery
COMMAND_CONFIG = {
    "name": "radius",
    "description": "Compute the structured real radius of controllability",
    "params": {
        "input": {
            "type": "string",
            "description": "Problem file (JSON)",
            "positional": True
        },
        "omega": {
            "type": "float",
            "description": "STLN weight (large values enforce the structure constraint)"
        },
        "epsilon": {
            "type": "float",
            "description": "Convergence threshold on the increments"
        },
        "max_iter": {
            "type": "integer",
            "description": "Iteration cap"
        },
        "partition_col": {
            "type": "string",
            "description": "Partition column J (0-based) or 'last'"
        },
        "multistart": {
            "type": "boolean",
            "description": "Try every partition column and keep the best"
        },
        "out": {
            "type": "string",
            "description": "Write the report here instead of stdout"
        }
    }
}


def parse_partition(value: str | None) -> int | str | None:
    """'last', a non-negative integer, or None."""
    if value is None or value == "last":
        return value
    try:
        return int(value)
    except ValueError:
        raise InputError(f"--partition-col: expected an integer or 'last', found '{value}'") from None


def radius(
    input: str,
    omega: float | None = None,
    epsilon: float | None = None,
    max_iter: int | None = None,
    partition_col: str | None = None,
    multistart: bool = False,
    out: str | None = None,
    **kwargs
) -> int:
    """
    Run the radius pipeline on one problem file.

    Returns:
        EXIT_OK when STLN converged, EXIT_NOT_CONVERGED otherwise.
    """
    problem = load_problem(input)
    cfg = solver_config(
        problem,
        omega=omega,
        epsilon=epsilon,
        max_iter=max_iter,
        partition_col=parse_partition(partition_col),
        multistart=multistart or None,
    )
    result = compute(problem, cfg)

    text = write_report(build_report(problem, result, cfg), out)
    if out is None:
        sys.stdout.write(text)

    if not result.converged:
        logger.warning(f"[CLI] STLN did not converge within {cfg.max_iter} iterations; best iterate reported")
        return EXIT_NOT_CONVERGED
    return EXIT_OK
