"""
Utility modules for the controllability-radius CLI.

Contains the file I/O shared by the commands.
"""

from utils.problem_io import build_report, load_problem, write_report

__all__ = ["build_report", "load_problem", "write_report"]
