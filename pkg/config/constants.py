"""
Shared constants for the command-line surface.

Centralized exit codes used across all commands.
Change them here to update them everywhere.
"""

# Exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_UNCONTROLLABLE = 3
EXIT_INCONCLUSIVE = 4
