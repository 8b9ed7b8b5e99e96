"""
Problem-file loading, sweep parameter binding and report output.

Translates between the JSON schemas in config.schemas and the
numerical types in services.
"""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from config.schemas import (
    DescriptorProblem,
    HigherOrderProblem,
    Perturbations,
    PerturbedHigherOrder,
    ReportFile,
    SolverEcho,
    problem_adapter,
)
from services.errors import InputError
from services.radius import RadiusResult, compute_radius_descriptor, compute_radius_higher_order
from services.stln import StlnConfig
from services.systems import (
    DescriptorSystem,
    HigherOrderSystem,
    PerturbationMask,
    canonical_form,
    coefficient_mask,
)

logger = logging.getLogger(__name__)

Problem = DescriptorProblem | HigherOrderProblem


def format_validation_error(e: ValidationError) -> str:
    """One line per error, naming the offending field."""
    lines = []
    for err in e.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<document>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def load_problem(path: str | Path) -> Problem:
    """
    Read and validate a problem file.

    Raises:
        OSError: file cannot be read.
        ValidationError: malformed document or inconsistent shapes.
    """
    text = Path(path).read_text(encoding="utf-8")
    problem = problem_adapter.validate_json(text)
    logger.info(f"[CLI] loaded {problem.kind} problem '{problem.name or Path(path).stem}'")
    return problem


def load_check_target(path: str | Path) -> tuple[DescriptorSystem, float | None, str]:
    """
    Load a problem or a report for the controllability check.

    Returns:
        (descriptor system, echoed verification tolerance or None, label).
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"<document>: invalid JSON ({e})") from e

    if isinstance(data, dict) and "radius_frobenius" in data:
        report = ReportFile.model_validate(data)
        sys, _ = descriptor_from_problem(report.perturbed_system)
        return sys, report.verification_rel_tol, f"perturbed system of report '{report.name or Path(path).stem}'"

    problem = problem_adapter.validate_python(data)
    if isinstance(problem, HigherOrderProblem):
        sys, _ = canonical_form(higher_order_from_problem(problem)[0])
    else:
        sys, _ = descriptor_from_problem(problem)
    return sys, None, problem.name or Path(path).stem


def descriptor_from_problem(problem: DescriptorProblem) -> tuple[DescriptorSystem, PerturbationMask]:
    """System and mask; absent mask components are all free."""
    sys = DescriptorSystem(np.array(problem.E), np.array(problem.A), np.array(problem.B))
    mask = problem.mask
    n, m = problem.n, problem.m

    def pick(value, shape):
        return np.ones(shape, bool) if value is None else np.array(value, dtype=bool)

    if mask is None:
        return sys, PerturbationMask.full(n, m)
    return sys, PerturbationMask(pick(mask.E, (n, n)), pick(mask.A, (n, n)), pick(mask.B, (n, m)))


def higher_order_from_problem(problem: HigherOrderProblem) -> tuple[HigherOrderSystem, list | None, np.ndarray | None]:
    """System plus optional coefficient masks (P_d first) and b mask."""
    sys = HigherOrderSystem(tuple(np.array(P) for P in problem.P), np.array(problem.b))
    if problem.mask is None:
        return sys, None, None
    coeff_masks = None if problem.mask.P is None else [np.array(mk, dtype=bool) for mk in problem.mask.P]
    b_mask = None if problem.mask.b is None else np.array(problem.mask.b, dtype=bool)
    return sys, coeff_masks, b_mask


def solver_config(problem: Problem, **flags) -> StlnConfig:
    """Precedence: flags > problem solver block > settings."""
    values = {}
    if problem.solver is not None:
        values.update(problem.solver.model_dump(exclude_none=True))
    values.update({k: v for k, v in flags.items() if v is not None})
    return StlnConfig.from_settings(**values)


def compute(problem: Problem, cfg: StlnConfig) -> RadiusResult:
    """Run the radius pipeline appropriate for the problem kind."""
    if isinstance(problem, HigherOrderProblem):
        sys, coeff_masks, b_mask = higher_order_from_problem(problem)
        if coeff_masks is not None or b_mask is not None:
            # validate early so an all-fixed mask reports as an input error
            coefficient_mask(sys, coeff_masks, b_mask)
        return compute_radius_higher_order(sys, coeff_masks, b_mask, cfg)
    sys, mask = descriptor_from_problem(problem)
    return compute_radius_descriptor(sys, mask, cfg)


def _matrix_for(problem: Problem, name: str) -> list[list[float]]:
    if isinstance(problem, HigherOrderProblem) and name.startswith("P") and name[1:].isdigit():
        i = int(name[1:])
        if i > problem.d:
            raise InputError(f"parameter refers to unknown matrix '{name}'")
        return problem.P[problem.d - i]
    if name not in problem.matrix_shapes():
        raise InputError(f"parameter refers to unknown matrix '{name}'; available: {sorted(problem.matrix_shapes())}")
    return getattr(problem, name)


def _set_matrix(data: dict, problem: Problem, name: str, value: list[list[float]]) -> None:
    if isinstance(problem, HigherOrderProblem) and name.startswith("P") and name[1:].isdigit():
        data["P"][problem.d - int(name[1:])] = value
    else:
        data[name] = value


def apply_parameters(problem: Problem, names: list[str], values: tuple[float, ...]) -> Problem:
    """
    Return a copy of the problem with the named parameters set.

    Raises:
        InputError: unknown parameter, unknown matrix, or missing variant.
    """
    available = sorted(problem.parameters)
    data = problem.model_dump()
    for name, value in zip(names, values, strict=True):
        if name not in problem.parameters:
            raise InputError(f"unknown parameter '{name}'; available: {available}")
        binding = problem.parameters[name]

        if binding.entries is not None:
            for ref in binding.entries:
                current = [list(row) for row in _matrix_for(problem, ref.matrix)]
                if ref.row >= len(current) or ref.col >= len(current[0]):
                    raise InputError(f"parameter '{name}': entry ({ref.row}, {ref.col}) outside {ref.matrix}")
                # keep earlier parameter writes to the same matrix
                target = data["P"][problem.d - int(ref.matrix[1:])] if (
                    isinstance(problem, HigherOrderProblem) and ref.matrix.startswith("P")
                ) else data[ref.matrix]
                target[ref.row][ref.col] = value * ref.scale
            continue

        match = [key for key in binding.variants if float(key) == value]
        if not match:
            raise InputError(f"parameter '{name}' has no variant for value {value}; "
                             f"available: {sorted(binding.variants, key=float)}")
        for matrix_name, matrix in binding.variants[match[0]].items():
            _matrix_for(problem, matrix_name)
            _set_matrix(data, problem, matrix_name, matrix)

    return type(problem).model_validate(data)


def _as_lists(arr: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(arr)]


def build_report(problem: Problem, result: RadiusResult, cfg: StlnConfig) -> ReportFile:
    """Assemble the report document; no timestamps, fixed field order."""
    sys = result.perturbed_system
    perturbed_higher = None
    if result.perturbed_higher_order is not None:
        ho = result.perturbed_higher_order
        perturbed_higher = PerturbedHigherOrder(P=[_as_lists(P) for P in ho.coefficients], b=_as_lists(ho.b))

    return ReportFile(
        name=problem.name,
        radius_frobenius=result.radius_frobenius,
        radius_spectral=result.radius_spectral,
        converged=result.converged,
        uncontrollability_verified=result.uncontrollability_verified,
        iterations=result.iterations,
        partition_col_used=result.partition_col_used,
        verification_rel_tol=result.verification_rel_tol,
        perturbations=Perturbations(dE=_as_lists(result.dE), dA=_as_lists(result.dA), dB=_as_lists(result.dB)),
        perturbed_system=DescriptorProblem(
            n=sys.n, m=sys.m, E=_as_lists(sys.E), A=_as_lists(sys.A), B=_as_lists(sys.B)
        ),
        perturbed_higher_order=perturbed_higher,
        solver=SolverEcho(
            omega=cfg.omega,
            epsilon=cfg.epsilon,
            max_iter=cfg.max_iter,
            partition_col=cfg.partition_col,
            multistart=cfg.multistart,
            multistart_columns=cfg.multistart_columns,
            mode_search=cfg.mode_search,
        ),
    )


def write_report(report: ReportFile, out: str | Path | None = None) -> str:
    """Serialize the report; write to out when given. Returns the JSON text."""
    text = report.model_dump_json(indent=2) + "\n"
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"[CLI] report written to {out}")
    return text
