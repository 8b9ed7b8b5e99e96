"""
Search over candidate uncontrollable modes.

A system loses controllability exactly when some left vector w
annihilates [sE - A, B] at a finite mode s, or [E, B] at infinity.
With (s, w) fixed that condition is linear in the free entries, so the
smallest masked perturbation that meets it is available in closed form,
one pencil column at a time. Minimizing its size over (s, w) yields
starting perturbations for STLN that do not depend on a partition
column, including ones built around complex modes.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from config.settings import settings
from services.errors import SingularPencilError
from services.linalg import generalized_eigenvalues, smallest_singular_triplet
from services.systems import DescriptorSystem, PerturbationMask

logger = logging.getLogger(__name__)

# Weight on the part of the annihilation condition the mask cannot reach
INFEASIBLE_PENALTY = 1e6
GRAM_RCOND = 1e-12
NM_ROUNDS = 2


@dataclass(frozen=True)
class Mode:
    """Candidate mode and left vector; s is None at infinity."""

    s: complex | None
    w: np.ndarray


@dataclass
class ModePerturbation:
    """Smallest masked perturbation making w^T [sE - A, B] vanish."""

    mode: Mode
    dE: np.ndarray
    dA: np.ndarray
    dB: np.ndarray
    infeasibility: float

    @property
    def size(self) -> float:
        return float(np.sqrt(np.sum(self.dE ** 2) + np.sum(self.dA ** 2) + np.sum(self.dB ** 2)))

    @property
    def cost(self) -> float:
        return self.size ** 2 + INFEASIBLE_PENALTY * self.infeasibility


def _scatter(coeff: np.ndarray, y: np.ndarray) -> np.ndarray:
    return coeff.real * y[:, 0] + coeff.imag * y[:, 1]


def mode_perturbation(sys: DescriptorSystem, mask: PerturbationMask, mode: Mode) -> ModePerturbation:
    """
    Closed-form least-norm perturbation for a fixed mode.

    Column j of the pencil gives two real equations (real and imaginary
    part of w^T column_j = 0) in the free entries of that column; they
    are solved in the minimum-norm least-squares sense through the 2x2
    Gram matrix of their coefficients.

    Args:
        sys: Descriptor system.
        mask: Free entries.
        mode: Mode s (None for infinity) and left vector w (any scale).

    Returns:
        ModePerturbation with the residual of unreachable columns.
    """
    n = sys.n
    w = np.asarray(mode.w, dtype=complex).reshape(-1)
    w = w / np.linalg.norm(w)
    if mode.s is None:
        sigma, tau = 1.0, 0.0
    else:
        sigma, tau = complex(mode.s), 1.0

    pencil = np.hstack([sigma * sys.E - tau * sys.A, sys.B])
    g = w @ pencil
    target = -np.stack([g.real, g.imag], axis=1)

    c_E = (sigma * w)[:, None] * mask.mask_E
    c_A = (-tau * w)[:, None] * mask.mask_A
    c_B = w[:, None] * mask.mask_B

    gram = np.zeros((pencil.shape[1], 2, 2))
    for coeff, cols in ((c_E, slice(0, n)), (c_A, slice(0, n)), (c_B, slice(n, None))):
        gram[cols, 0, 0] += np.sum(coeff.real ** 2, axis=0)
        gram[cols, 0, 1] += np.sum(coeff.real * coeff.imag, axis=0)
        gram[cols, 1, 1] += np.sum(coeff.imag ** 2, axis=0)
    gram[:, 1, 0] = gram[:, 0, 1]

    y = np.einsum("jab,jb->ja", np.linalg.pinv(gram, rcond=GRAM_RCOND), target)
    miss = target - np.einsum("jab,jb->ja", gram, y)

    return ModePerturbation(
        mode=Mode(mode.s, w),
        dE=_scatter(c_E, y[:n]),
        dA=_scatter(c_A, y[:n]),
        dB=_scatter(c_B, y[n:]),
        infeasibility=float(np.sum(miss ** 2)),
    )


def _pack(mode: Mode) -> np.ndarray:
    w = np.asarray(mode.w, dtype=complex)
    if mode.s is None:
        return w.real.copy()
    return np.concatenate([[mode.s.real, mode.s.imag], w.real, w.imag])


def _unpack(p: np.ndarray, n: int, finite: bool) -> Mode:
    if not finite:
        return Mode(None, p.astype(complex))
    return Mode(complex(p[0], p[1]), p[2:2 + n] + 1j * p[2 + n:])


def refine(sys: DescriptorSystem, mask: PerturbationMask, mode: Mode) -> ModePerturbation:
    """Minimize the perturbation cost over (s, w) starting from mode, with Nelder-Mead."""
    n = sys.n
    finite = mode.s is not None

    def objective(p: np.ndarray) -> float:
        candidate = _unpack(p, n, finite)
        if not np.any(candidate.w):
            return np.inf
        return mode_perturbation(sys, mask, candidate).cost

    x = _pack(mode)
    for _ in range(NM_ROUNDS):
        res = minimize(objective, x, method="Nelder-Mead",
                       options={"maxiter": 100 * x.size, "xatol": 1e-10, "fatol": 1e-16})
        x = res.x
    return mode_perturbation(sys, mask, _unpack(x, n, finite))


def initial_modes(sys: DescriptorSystem, rng: np.random.Generator, restarts: int) -> list[Mode]:
    """
    Starting points: finite pencil eigenvalues, infinity and random modes.

    Each finite eigenvalue (one of every conjugate pair) is paired with
    the left singular vector of [sE - A, B] for its smallest singular
    value. Infinity is tried with that of [E, B] and with every unit
    vector, which reaches perturbations confined to a single row.
    """
    n = sys.n
    modes: list[Mode] = []
    try:
        eigs = generalized_eigenvalues(sys.E, sys.A)
    except SingularPencilError:
        eigs = np.array([], dtype=complex)
    for s in eigs:
        if s.imag < 0:
            continue
        _, u, _ = smallest_singular_triplet(np.hstack([s * sys.E - sys.A, sys.B]))
        modes.append(Mode(complex(s), u.conj()))

    _, u, _ = smallest_singular_triplet(np.hstack([sys.E, sys.B]))
    modes.append(Mode(None, u.real.astype(complex)))
    modes.extend(Mode(None, np.eye(n, dtype=complex)[i]) for i in range(n))

    scale = max(1.0, float(np.max(np.abs(eigs)))) if eigs.size else 1.0
    for _ in range(restarts):
        s = scale * complex(rng.standard_normal(), abs(rng.standard_normal()))
        modes.append(Mode(s, rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    return modes


def search(
    sys: DescriptorSystem,
    mask: PerturbationMask,
    keep: int | None = None,
    restarts: int | None = None,
    seed: int | None = None
) -> list[ModePerturbation]:
    """
    Refine every starting mode and return the cheapest perturbations.

    Args:
        sys: Descriptor system.
        mask: Free entries.
        keep: Number of results (settings.mode_polish when None).
        restarts: Random starting modes (settings.mode_restarts when None).
        seed: Seed for the random modes (settings.mode_seed when None).

    Returns:
        Up to keep ModePerturbations, cheapest first.
    """
    mask.check_against(sys)
    keep = settings.mode_polish if keep is None else keep
    restarts = settings.mode_restarts if restarts is None else restarts
    rng = np.random.default_rng(settings.mode_seed if seed is None else seed)

    found = sorted((refine(sys, mask, m) for m in initial_modes(sys, rng, restarts)), key=lambda p: p.cost)
    if found:
        best = found[0]
        where = "inf" if best.mode.s is None else f"{best.mode.s:.4g}"
        logger.debug(
            f"[MODES] {len(found)} modes refined; best s={where}, size={best.size:.6e}, "
            f"infeasibility={best.infeasibility:.2e}"
        )
    return found[:keep]
