"""
Structured real radius of controllability.

Pipeline: (higher-order system -> canonical form ->) Toeplitz matrix ->
tall orientation -> masked structure basis -> STLN -> nearest
uncontrollable system. STLN runs warm-started from the mode search join
the candidates. Both the Frobenius and the spectral norm of the stacked
perturbation [dE dA dB] are reported.
"""

import logging
from dataclasses import dataclass

import numpy as np

from config.settings import settings
from services.linalg import singular_values
from services.modes import search
from services.stln import StlnConfig, StlnState, candidate_key, run_multistart, run_seeded, run_with_fallback
from services.systems import (
    DescriptorSystem,
    HigherOrderSystem,
    PerturbationMask,
    canonical_form,
    coefficient_mask,
    extract_higher_order_perturbation,
    is_c_controllable_toeplitz,
)
from services.toeplitz import StructureBasis, assemble, build_basis, coordinates, extract, orient_tall

logger = logging.getLogger(__name__)


@dataclass
class RadiusResult:
    """Outcome of a radius computation."""

    radius_frobenius: float
    radius_spectral: float
    dE: np.ndarray
    dA: np.ndarray
    dB: np.ndarray
    perturbed_system: DescriptorSystem
    iterations: int
    converged: bool
    uncontrollability_verified: bool
    partition_col_used: int
    verification_rel_tol: float
    perturbed_higher_order: HigherOrderSystem | None = None


def _norms(dE: np.ndarray, dA: np.ndarray, dB: np.ndarray) -> tuple[float, float]:
    stacked = np.hstack([dE, dA, dB])
    if not np.any(stacked):
        return 0.0, 0.0
    return float(np.linalg.norm(stacked, "fro")), float(np.linalg.norm(stacked, 2))


def _seeded_runs(
    sys: DescriptorSystem,
    mask: PerturbationMask,
    T,
    basis: StructureBasis,
    cfg: StlnConfig
) -> list[StlnState]:
    """STLN warm-started from the cheapest perturbations of the mode search."""
    states = []
    for found in search(sys, mask):
        alpha0 = coordinates(basis, found.dE, found.dA, found.dB)
        if np.any(alpha0):
            states.append(run_seeded(T, basis, cfg, alpha0))
    logger.debug(f"[RADIUS] {len(states)} seeded STLN runs")
    return states


def compute_radius_descriptor(
    sys: DescriptorSystem,
    mask: PerturbationMask | None = None,
    cfg: StlnConfig | None = None
) -> RadiusResult:
    """
    Structured radius of a descriptor system.

    Args:
        sys: Descriptor system (E, A, B).
        mask: Entries free to perturb (all free when None).
        cfg: Solver settings (settings defaults when None).

    Returns:
        RadiusResult; radius 0 with zero perturbations if sys is
        already uncontrollable.
    """
    cfg = cfg or StlnConfig.from_settings()
    mask = mask or PerturbationMask.full(sys.n, sys.m)
    mask.check_against(sys)

    T = orient_tall(assemble(sys))
    basis = build_basis(sys, mask, T.orientation)
    if not is_c_controllable_toeplitz(sys, settings.rank_rel_tol):
        logger.info("[RADIUS] system is already uncontrollable; radius 0")
        zeros = (np.zeros_like(sys.E), np.zeros_like(sys.A), np.zeros_like(sys.B))
        return RadiusResult(
            radius_frobenius=0.0,
            radius_spectral=0.0,
            dE=zeros[0],
            dA=zeros[1],
            dB=zeros[2],
            perturbed_system=sys,
            iterations=0,
            converged=True,
            uncontrollability_verified=True,
            partition_col_used=cfg.resolve_partition(T.shape[1]),
            verification_rel_tol=settings.rank_rel_tol,
        )

    logger.info(
        f"[RADIUS] n={sys.n}, m={sys.m}, Toeplitz {T.shape[0]}x{T.shape[1]} ({T.orientation}), "
        f"{basis.size} free entries, omega={cfg.omega:g}"
    )
    state = run_multistart(T, basis, cfg) if cfg.multistart else run_with_fallback(T, basis, cfg)
    if cfg.mode_search:
        state = min([state, *_seeded_runs(sys, mask, T, basis, cfg)], key=candidate_key)
    tol = state.accept_rel_tol

    dE, dA, dB = extract(basis, state.alpha)
    perturbed = sys.perturbed(dE, dA, dB)
    verified = state.rank_deficient and not is_c_controllable_toeplitz(perturbed, tol)
    fro, two = _norms(dE, dA, dB)

    if state.converged and not verified:
        logger.warning(f"[RADIUS] converged perturbation not verified uncontrollable at rel_tol={tol:g}")
    logger.info(
        f"[RADIUS] radius (fro)={fro:.6f}, (2-norm)={two:.6f}, iterations={state.iterations}, "
        f"converged={state.converged}, verified={verified}"
    )

    return RadiusResult(
        radius_frobenius=fro,
        radius_spectral=two,
        dE=dE,
        dA=dA,
        dB=dB,
        perturbed_system=perturbed,
        iterations=state.iterations,
        converged=state.converged,
        uncontrollability_verified=verified,
        partition_col_used=state.partition_col,
        verification_rel_tol=tol,
    )


def compute_radius_higher_order(
    sys: HigherOrderSystem,
    coeff_masks: list | None = None,
    b_mask=None,
    cfg: StlnConfig | None = None
) -> RadiusResult:
    """
    Structured radius of an order-d system through its canonical form.

    Args:
        sys: Higher-order system.
        coeff_masks: Optional boolean masks for (P_d, ..., P_0).
        b_mask: Optional boolean mask for b.
        cfg: Solver settings.

    Returns:
        RadiusResult with perturbed_higher_order populated.
    """
    canon, _ = canonical_form(sys)
    mask = coefficient_mask(sys, coeff_masks, b_mask)
    result = compute_radius_descriptor(canon, mask, cfg)
    result.perturbed_higher_order = extract_higher_order_perturbation(sys, result.dE, result.dA, result.dB)
    return result


def oracle_r2_unstructured(sys: DescriptorSystem) -> float:
    """sigma_min([E B]): distance to the nearest system with rank[E B] < n."""
    return float(singular_values(np.hstack([sys.E, sys.B]))[sys.n - 1])
