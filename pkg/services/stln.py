"""
Structured Total Least Norm iteration.

Drives a tall structured matrix X = [Y y] (y is the partition column)
towards column-rank deficiency: find the smallest structured
perturbation alpha and a vector z with (Y + E1) z = y + f1, where
[E1 f1] = embed(alpha). Each step solves the linearized, omega-weighted
least-squares problem

    min || [ w(S - P)  w(Y + E1) ] [da]   [ w r  ] ||
        || [    I          0     ] [dz] - [ -alpha ] ||

with S da = dE1 z and P da = df1 built exactly from the basis. The step
is a Gauss-Newton direction for w^2 ||r||^2 + ||alpha||^2 and is halved
while it fails to decrease that merit.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config.settings import settings
from services.errors import DimensionError, InputError, NonFiniteError, PartitionError, StlnSolveError
from services.linalg import least_squares, singular_values, smallest_singular_triplet
from services.toeplitz import ControllabilityToeplitz, StructureBasis, embed

logger = logging.getLogger(__name__)

# A result must lower sigma_min / sigma_max at least this much below the input's
RANK_DROP = 1e-4
MAX_HALVINGS = 8
POLISH_TOL = 1e-12


class StlnConfig(BaseModel):
    """Solver settings; D is fixed to the identity."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(gt=0)
    epsilon: float = Field(gt=0)
    max_iter: int = Field(ge=1)
    partition_col: int | Literal["last"] = "last"
    multistart: bool = False
    multistart_columns: list[int] | None = None
    workers: int = Field(default=1, ge=1)
    polish_iter: int = Field(default=10, ge=0)
    fallback_columns: int = Field(default=3, ge=0)
    mode_search: bool = True

    @field_validator("partition_col")
    @classmethod
    def _non_negative_partition(cls, value):
        if value != "last" and value < 0:
            raise ValueError("partition_col must be >= 0 or 'last'")
        return value

    @field_validator("multistart_columns")
    @classmethod
    def _non_negative_columns(cls, value):
        if value is not None and any(c < 0 for c in value):
            raise ValueError("multistart_columns entries must be >= 0")
        return value

    @classmethod
    def from_settings(cls, **overrides) -> "StlnConfig":
        """Seed from global settings; None-valued overrides are ignored."""
        values = {
            "omega": settings.stln_omega,
            "epsilon": settings.stln_epsilon,
            "max_iter": settings.stln_max_iter,
            "workers": settings.stln_workers,
            "polish_iter": settings.stln_polish_iter,
            "fallback_columns": settings.stln_fallback_columns,
            "mode_search": settings.mode_search,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def verification_rel_tol(self) -> float:
        """Loosest rank tolerance a converged perturbation may be checked at."""
        return min(max(settings.rank_rel_tol, 10.0 / self.omega), 0.5)

    def resolve_partition(self, cols: int) -> int:
        col = cols - 1 if self.partition_col == "last" else self.partition_col
        if not 0 <= col < cols:
            raise PartitionError(f"partition column {col} out of range for {cols} columns")
        return col


@dataclass
class StlnDerived:
    """z-dependent S and the partition-column selector P."""

    S: np.ndarray
    P: np.ndarray


@dataclass
class StlnState:
    """Iterate of the STLN loop."""

    Y: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    z: np.ndarray
    E1: np.ndarray
    f1: np.ndarray
    r: np.ndarray
    partition_col: int
    accept_rel_tol: float = 0.0
    iterations: int = 0
    polish_iterations: int = 0
    converged: bool = False
    rank_deficient: bool = False

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.r))

    @property
    def perturbation_norm(self) -> float:
        return float(np.linalg.norm(self.alpha))


def _as_array(T) -> np.ndarray:
    if isinstance(T, ControllabilityToeplitz):
        return T.matrix
    return np.asarray(T, dtype=float)


def _split(full: np.ndarray, col: int) -> tuple[np.ndarray, np.ndarray]:
    return np.delete(full, col, axis=1), full[:, col].copy()


def rank_ratio(X: np.ndarray) -> float:
    """sigma_min / sigma_max of a tall matrix (0 for the zero matrix)."""
    sv = singular_values(X)
    return 0.0 if sv[0] == 0.0 else float(sv[-1] / sv[0])


def acceptance_rel_tol(X: np.ndarray, cfg: StlnConfig) -> float:
    """
    Rank tolerance a result has to meet for the unperturbed matrix X.

    At most settings.rank_rel_tol and at most RANK_DROP times the
    sigma_min / sigma_max of X itself.
    """
    return min(cfg.verification_rel_tol, settings.rank_rel_tol, RANK_DROP * rank_ratio(X))


def init(
    T_oriented,
    basis: StructureBasis,
    cfg: StlnConfig,
    partition_col: int | None = None,
    alpha0=None
) -> StlnState:
    """
    Starting perturbation and least-squares z for the chosen partition.

    Args:
        T_oriented: Tall matrix X (array or ControllabilityToeplitz).
        basis: Structure basis in the same orientation as X.
        cfg: Solver settings.
        partition_col: Explicit column, overriding cfg.partition_col.
        alpha0: Warm start for alpha (zero when None).

    Returns:
        Initial StlnState.
    """
    X = _as_array(T_oriented)
    rows, cols = X.shape
    if rows < cols:
        raise InputError(f"STLN needs a tall matrix, got {rows}x{cols}")
    if tuple(basis.shape) != (rows, cols):
        raise DimensionError("structure basis", (rows, cols), tuple(basis.shape))

    if partition_col is None:
        col = cfg.resolve_partition(cols)
    elif 0 <= partition_col < cols:
        col = partition_col
    else:
        raise PartitionError(f"partition column {partition_col} out of range for {cols} columns")

    alpha = np.zeros(basis.size) if alpha0 is None else np.asarray(alpha0, dtype=float).reshape(-1)
    if alpha.shape != (basis.size,):
        raise DimensionError("alpha0", (basis.size,), alpha.shape)

    Y, y = _split(X, col)
    E1, f1 = _split(embed(basis, alpha), col)
    z = least_squares(Y + E1, y + f1)
    r = (y + f1) - (Y + E1) @ z

    return StlnState(
        Y=Y,
        y=y,
        alpha=alpha,
        z=z,
        E1=E1,
        f1=f1,
        r=r,
        partition_col=col,
        accept_rel_tol=acceptance_rel_tol(X, cfg),
    )


def build_S(basis: StructureBasis, z: np.ndarray, partition_col: int) -> np.ndarray:
    """Matrix S with S @ da == (Y-part of embed(da)) @ z for every da."""
    rows, cols = basis.shape
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != cols - 1:
        raise DimensionError("z", (cols - 1,), z.shape)

    sel = basis.cols != partition_col
    local = basis.cols[sel] - (basis.cols[sel] > partition_col)
    S = np.zeros((rows, basis.size))
    np.add.at(S, (basis.rows[sel], basis.param_index[sel]), basis.signs[sel] * z[local])
    return S


def build_P(basis: StructureBasis, partition_col: int) -> np.ndarray:
    """Matrix P with P @ da == partition-column part of embed(da)."""
    rows, _ = basis.shape
    sel = basis.cols == partition_col
    P = np.zeros((rows, basis.size))
    np.add.at(P, (basis.rows[sel], basis.param_index[sel]), basis.signs[sel])
    return P


def derive(basis: StructureBasis, z: np.ndarray, partition_col: int) -> StlnDerived:
    return StlnDerived(build_S(basis, z, partition_col), build_P(basis, partition_col))


def step(state: StlnState, derived: StlnDerived, cfg: StlnConfig) -> tuple[np.ndarray, np.ndarray]:
    """
    One linearized weighted least-squares update.

    Returns:
        (d_alpha, d_z).

    Raises:
        StlnSolveError: the stacked system could not be solved.
    """
    w = cfg.omega
    ell = state.alpha.shape[0]
    nz = state.z.shape[0]

    top = np.hstack([w * (derived.S - derived.P), w * (state.Y + state.E1)])
    bottom = np.hstack([np.eye(ell), np.zeros((ell, nz))])
    K = np.vstack([top, bottom])
    rhs = np.concatenate([w * state.r, -state.alpha])

    try:
        x = least_squares(K, rhs)
    except (np.linalg.LinAlgError, NonFiniteError, ValueError) as e:
        raise StlnSolveError(f"stacked least-squares failed ({e}); try a smaller omega") from e
    if not np.all(np.isfinite(x)):
        raise StlnSolveError(f"stacked least-squares returned non-finite values at omega={w:g}; try a smaller omega")

    return x[:ell], x[ell:]


def refresh(state: StlnState, basis: StructureBasis) -> None:
    """Rebuild E1, f1 from alpha and recompute the residual from scratch."""
    state.E1, state.f1 = _split(embed(basis, state.alpha), state.partition_col)
    state.r = (state.y + state.f1) - (state.Y + state.E1) @ state.z


def merit(state: StlnState, cfg: StlnConfig) -> float:
    """Objective the steps descend: omega^2 ||r||^2 + ||alpha||^2."""
    return float((cfg.omega * state.residual_norm) ** 2 + state.perturbation_norm ** 2)


def _advance(state: StlnState, basis: StructureBasis, d_alpha: np.ndarray, d_z: np.ndarray, cfg: StlnConfig) -> float:
    """Apply the step, halving it while the merit goes up; returns the fraction taken."""
    alpha, z = state.alpha, state.z
    before = merit(state, cfg)
    t = 1.0
    for _ in range(MAX_HALVINGS):
        state.alpha, state.z = alpha + t * d_alpha, z + t * d_z
        refresh(state, basis)
        if merit(state, cfg) <= before:
            return t
        t *= 0.5
    # last trial stands; the full-step size still decides convergence
    return t


def _check_rank_deficiency(state: StlnState) -> bool:
    if not np.any(state.alpha):
        return False
    X = np.insert(state.Y + state.E1, state.partition_col, state.y + state.f1, axis=1)
    return rank_ratio(X) <= state.accept_rel_tol


def _polish(state: StlnState, basis: StructureBasis, cfg: StlnConfig) -> None:
    for _ in range(cfg.polish_iter):
        try:
            d_alpha, d_z = step(state, derive(basis, state.z, state.partition_col), cfg)
        except StlnSolveError as e:
            logger.debug(f"[STLN] col={state.partition_col}: polishing stopped ({e})")
            return
        _advance(state, basis, d_alpha, d_z, cfg)
        state.polish_iterations += 1
        if (np.linalg.norm(d_alpha) <= POLISH_TOL * (1.0 + state.perturbation_norm)
                and np.linalg.norm(d_z) <= POLISH_TOL * (1.0 + np.linalg.norm(state.z))):
            return


def run(
    T_oriented,
    basis: StructureBasis,
    cfg: StlnConfig,
    partition_col: int | None = None,
    alpha0=None
) -> StlnState:
    """
    Iterate until both increments fall below epsilon or max_iter is hit.

    A converged iterate is polished for up to cfg.polish_iter further
    steps, which are not counted in state.iterations. Non-convergence is
    reported through state.converged, not raised.
    """
    state = init(T_oriented, basis, cfg, partition_col, alpha0)
    logger.debug(f"[STLN] col={state.partition_col}: start |r|={state.residual_norm:.3e}, ell={basis.size}")

    for _ in range(cfg.max_iter):
        derived = derive(basis, state.z, state.partition_col)
        d_alpha, d_z = step(state, derived, cfg)
        t = _advance(state, basis, d_alpha, d_z, cfg)
        state.iterations += 1

        da, dz = float(np.linalg.norm(d_alpha)), float(np.linalg.norm(d_z))
        logger.debug(
            f"[STLN] col={state.partition_col} it={state.iterations}: |alpha|={state.perturbation_norm:.6e} "
            f"|da|={da:.3e} |dz|={dz:.3e} t={t:g} |r|={state.residual_norm:.3e}"
        )
        if da < cfg.epsilon and dz < cfg.epsilon:
            state.converged = True
            break

    if state.converged:
        _polish(state, basis, cfg)
        state.rank_deficient = _check_rank_deficiency(state)
        logger.debug(
            f"[STLN] col={state.partition_col}: {state.polish_iterations} polishing steps, "
            f"|alpha|={state.perturbation_norm:.6e}, rank_deficient={state.rank_deficient}"
        )
    else:
        logger.warning(f"[STLN] col={state.partition_col}: no convergence after {cfg.max_iter} iterations")
    return state


def candidate_key(state: StlnState) -> tuple:
    """Converged first, then rank-deficient, then smallest ||alpha||, then lowest column."""
    return (not state.converged, not state.rank_deficient, state.perturbation_norm, state.partition_col)


def column_order(X: np.ndarray) -> list[int]:
    """Columns by decreasing weight in the smallest right singular vector of X."""
    _, _, v = smallest_singular_triplet(X)
    return [int(c) for c in np.argsort(-np.abs(v), kind="stable")]


def run_with_fallback(T_oriented, basis: StructureBasis, cfg: StlnConfig) -> StlnState:
    """
    Run the configured partition column; if it stalls, try up to
    cfg.fallback_columns others that carry most of the near null vector.
    """
    X = _as_array(T_oriented)
    state = run(X, basis, cfg)
    if state.converged or cfg.fallback_columns == 0:
        return state

    tried = [state]
    others = [c for c in column_order(X) if c != state.partition_col][:cfg.fallback_columns]
    for col in others:
        logger.info(f"[STLN] col={state.partition_col} did not converge; trying col={col}")
        candidate = run(X, basis, cfg, col)
        tried.append(candidate)
        if candidate.converged:
            break
    return min(tried, key=candidate_key)


def run_seeded(T_oriented, basis: StructureBasis, cfg: StlnConfig, alpha0) -> StlnState:
    """Warm-started run, partitioned at the column the seed makes most dependent."""
    X = _as_array(T_oriented)
    alpha0 = np.asarray(alpha0, dtype=float).reshape(-1)
    col = column_order(X + embed(basis, alpha0))[0]
    return run(X, basis, cfg, col, alpha0=alpha0)


def run_multistart(T_oriented, basis: StructureBasis, cfg: StlnConfig) -> StlnState:
    """
    Run every candidate partition column and keep the best result.

    Candidates are ranked by candidate_key.
    """
    X = _as_array(T_oriented)
    cols = X.shape[1]
    columns = list(range(cols)) if cfg.multistart_columns is None else list(cfg.multistart_columns)
    for col in columns:
        if not 0 <= col < cols:
            raise PartitionError(f"partition column {col} out of range for {cols} columns")

    logger.info(f"[STLN] multistart over {len(columns)} partition columns ({cfg.workers} workers)")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            states = list(pool.map(lambda c: run(X, basis, cfg, c), columns))
    else:
        states = [run(X, basis, cfg, c) for c in columns]

    best = min(states, key=candidate_key)
    logger.info(
        f"[STLN] multistart picked col={best.partition_col}: |alpha|={best.perturbation_norm:.6e}, "
        f"converged={best.converged}"
    )
    return best
