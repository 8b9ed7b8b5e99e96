"""
Controllability verdict from the pencil and Toeplitz criteria.

Accepts a problem file or a radius report; for a report the perturbed
system is checked at the report's verification tolerance.
"""

import logging

from config.constants import EXIT_INCONCLUSIVE, EXIT_OK, EXIT_UNCONTROLLABLE
from config.settings import settings
from services.errors import SingularPencilError
from services.systems import is_c_controllable_pencil, is_c_controllable_toeplitz
from utils.problem_io import load_check_target

logger = logging.getLogger(__name__)

# Command configuration for auto-discovery
COMMAND_CONFIG = {
    "name": "check",
    "description": "Check C-controllability with both criteria",
    "params": {
        "input": {
            "type": "string",
            "description": "Problem file or radius report (JSON)",
            "positional": True
        },
        "rank_tol": {
            "type": "float",
            "description": "Relative rank tolerance (default: report echo, then settings)"
        }
    }
}


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def check(input: str, rank_tol: float | None = None, **kwargs) -> int:
    """
    Print the verdict line.

    Returns:
        EXIT_OK controllable, EXIT_UNCONTROLLABLE uncontrollable,
        EXIT_INCONCLUSIVE when the pencil is singular.
    """
    sys, echoed_tol, label = load_check_target(input)
    tol = rank_tol or echoed_tol or settings.rank_rel_tol
    logger.info(f"[CLI] checking {label} (n={sys.n}, m={sys.m}, rel_tol={tol:g})")

    toeplitz_ok = is_c_controllable_toeplitz(sys, tol)

    try:
        pencil = is_c_controllable_pencil(sys, tol)
    except SingularPencilError as e:
        logger.warning(f"[CLI] {e}")
        print(f"inconclusive (pencil singular, toeplitz {_mark(toeplitz_ok)})")
        return EXIT_INCONCLUSIVE

    verdict = "controllable" if toeplitz_ok else "uncontrollable"
    marks = f"pencil {_mark(pencil.controllable)}, toeplitz {_mark(toeplitz_ok)}"
    if pencil.controllable != toeplitz_ok:
        logger.warning(f"[CLI] criteria disagree (pencil failing mode: {pencil.failing_mode}); using the Toeplitz verdict")
        print(f"{verdict} ({marks}; criteria disagree)")
    else:
        detail = ""
        if not pencil.controllable:
            where = f"s={pencil.failing_eigenvalue:.6g}" if pencil.failing_mode == "spectral" else "infinity"
            detail = f", rank drops at {where}"
        print(f"{verdict} ({marks}{detail})")

    return EXIT_OK if toeplitz_ok else EXIT_UNCONTROLLABLE
