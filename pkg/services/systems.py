"""
System models and controllability predicates.

Holds the higher-order and descriptor models, the reduction of an
order-d system to its first-order descriptor canonical form, and the
pencil, Toeplitz and polynomial controllability tests.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from services.errors import DimensionError, EmptyMaskError, InputError, StructureViolationError
from services.linalg import as_matrix, generalized_eigenvalues, numerical_rank
from services.toeplitz import assemble

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HigherOrderSystem:
    """
    Order-d model P_d x^(d) + ... + P_1 x' + P_0 x = b u.

    Attributes:
        coefficients: (P_d, ..., P_0), each N x N, leading coefficient first.
        b: N x M input matrix.
    """

    coefficients: tuple[np.ndarray, ...]
    b: np.ndarray

    def __post_init__(self):
        coeffs = tuple(as_matrix(P, f"P{len(self.coefficients) - 1 - i}")
                       for i, P in enumerate(self.coefficients))
        if len(coeffs) < 2:
            raise InputError(f"need at least two coefficient matrices (degree >= 1), got {len(coeffs)}")
        N = coeffs[0].shape[0]
        for i, P in enumerate(coeffs):
            if P.shape != (N, N):
                raise DimensionError(f"P{len(coeffs) - 1 - i}", (N, N), P.shape)
        b = as_matrix(self.b, "b")
        if b.shape[0] != N or b.shape[1] < 1:
            raise DimensionError("b", (N, "M>=1"), b.shape)
        if all(not np.any(P) for P in coeffs):
            raise InputError("all coefficient matrices are zero")

        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "b", b)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def N(self) -> int:
        return self.coefficients[0].shape[0]

    @property
    def M(self) -> int:
        return self.b.shape[1]

    def coefficient(self, i: int) -> np.ndarray:
        """Return P_i (i = 0 is the constant term)."""
        return self.coefficients[self.degree - i]


@dataclass(frozen=True)
class DescriptorSystem:
    """Descriptor model E z' = A z + B u."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        E = as_matrix(self.E, "E")
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        n = E.shape[0]
        if n < 1 or E.shape != (n, n):
            raise DimensionError("E", (n, n), E.shape)
        if A.shape != (n, n):
            raise DimensionError("A", (n, n), A.shape)
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionError("B", (n, "m>=1"), B.shape)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def scaled(self, c: float) -> "DescriptorSystem":
        return DescriptorSystem(c * self.E, c * self.A, c * self.B)

    def perturbed(self, dE: np.ndarray, dA: np.ndarray, dB: np.ndarray) -> "DescriptorSystem":
        return DescriptorSystem(self.E + dE, self.A + dA, self.B + dB)


@dataclass(frozen=True)
class PerturbationMask:
    """Entry-wise freedom pattern; True marks an entry free to perturb."""

    mask_E: np.ndarray
    mask_A: np.ndarray
    mask_B: np.ndarray

    def __post_init__(self):
        for name in ("mask_E", "mask_A", "mask_B"):
            arr = np.asarray(getattr(self, name), dtype=bool)
            if arr.ndim != 2:
                raise DimensionError(name, ("rows", "cols"), arr.shape)
            object.__setattr__(self, name, arr)
        if not (self.mask_E.any() or self.mask_A.any() or self.mask_B.any()):
            raise EmptyMaskError()

    @classmethod
    def full(cls, n: int, m: int) -> "PerturbationMask":
        return cls(np.ones((n, n), bool), np.ones((n, n), bool), np.ones((n, m), bool))

    @classmethod
    def fixed_E(cls, n: int, m: int) -> "PerturbationMask":
        """All of A and B free, E untouched."""
        return cls(np.zeros((n, n), bool), np.ones((n, n), bool), np.ones((n, m), bool))

    def check_against(self, sys: DescriptorSystem) -> None:
        """Raise DimensionError unless the mask shapes match the system."""
        for name, arr, ref in (("mask_E", self.mask_E, sys.E),
                               ("mask_A", self.mask_A, sys.A),
                               ("mask_B", self.mask_B, sys.B)):
            if arr.shape != ref.shape:
                raise DimensionError(name, ref.shape, arr.shape)

    def intersect(self, other: "PerturbationMask") -> "PerturbationMask":
        return PerturbationMask(self.mask_E & other.mask_E,
                                self.mask_A & other.mask_A,
                                self.mask_B & other.mask_B)

    @property
    def free_count(self) -> int:
        return int(self.mask_E.sum() + self.mask_A.sum() + self.mask_B.sum())


@dataclass
class ControllabilityReport:
    """
    Verdict of a rank-based controllability test.

    failing_mode is "spectral" (with failing_eigenvalue set), "infinity"
    (rank of the leading block pair drops) or "none".
    """

    controllable: bool
    failing_mode: str = "none"
    failing_eigenvalue: complex | None = None
    tested_eigenvalues: list[complex] = field(default_factory=list)


def canonical_form(sys: HigherOrderSystem) -> tuple[DescriptorSystem, PerturbationMask]:
    """
    Reduce an order-d system to its first-order descriptor form.

    E = blockdiag(P_d, I, ..., I), A = block companion with
    -P_{d-1} ... -P_0 in the first block row and identities on the
    block subdiagonal, B = [b; 0; ...; 0].

    Args:
        sys: Higher-order system.

    Returns:
        (descriptor triple, mask freeing exactly the P_i and b entries).
    """
    d, N, M = sys.degree, sys.N, sys.M
    n = N * d

    E = np.eye(n)
    E[:N, :N] = sys.coefficients[0]

    A = np.zeros((n, n))
    for k in range(d):
        # block column k carries P_{d-1-k}
        A[:N, k * N:(k + 1) * N] = -sys.coefficients[k + 1]
    for k in range(1, d):
        A[k * N:(k + 1) * N, (k - 1) * N:k * N] = np.eye(N)

    B = np.zeros((n, M))
    B[:N, :] = sys.b

    mask_E = np.zeros((n, n), bool)
    mask_E[:N, :N] = True
    mask_A = np.zeros((n, n), bool)
    mask_A[:N, :] = True
    mask_B = np.zeros((n, M), bool)
    mask_B[:N, :] = True

    logger.debug(f"[SYSTEMS] canonical form: d={d}, N={N}, M={M} -> n={n}")
    return DescriptorSystem(E, A, B), PerturbationMask(mask_E, mask_A, mask_B)


def coefficient_mask(sys: HigherOrderSystem, coeff_masks: list | None, b_mask=None) -> PerturbationMask:
    """
    Canonical filler mask intersected with per-coefficient user masks.

    Args:
        sys: Higher-order system.
        coeff_masks: Boolean N x N masks for (P_d, ..., P_0), or None for all free.
        b_mask: Boolean N x M mask for b, or None for all free.

    Returns:
        Mask over the canonical descriptor triple.
    """
    _, canonical = canonical_form(sys)
    if coeff_masks is None and b_mask is None:
        return canonical

    d, N, M = sys.degree, sys.N, sys.M
    n = N * d
    if coeff_masks is None:
        coeff_masks = [np.ones((N, N), bool)] * (d + 1)
    if len(coeff_masks) != d + 1:
        raise InputError(f"expected {d + 1} coefficient masks, got {len(coeff_masks)}")
    coeff_masks = [np.asarray(mk, dtype=bool) for mk in coeff_masks]
    for i, mk in enumerate(coeff_masks):
        if mk.shape != (N, N):
            raise DimensionError(f"mask P{d - i}", (N, N), mk.shape)
    b_mask = np.ones((N, M), bool) if b_mask is None else np.asarray(b_mask, dtype=bool)
    if b_mask.shape != (N, M):
        raise DimensionError("mask b", (N, M), b_mask.shape)

    user_E = np.zeros((n, n), bool)
    user_E[:N, :N] = coeff_masks[0]
    user_A = np.zeros((n, n), bool)
    for k in range(d):
        user_A[:N, k * N:(k + 1) * N] = coeff_masks[k + 1]
    user_B = np.zeros((n, M), bool)
    user_B[:N, :] = b_mask

    return canonical.intersect(PerturbationMask(user_E, user_A, user_B))


def extract_higher_order_perturbation(
    sys: HigherOrderSystem,
    dE: np.ndarray,
    dA: np.ndarray,
    dB: np.ndarray
) -> HigherOrderSystem:
    """
    Read the perturbed coefficients back out of a perturbed canonical triple.

    Args:
        sys: Original higher-order system.
        dE, dA, dB: Perturbations of the canonical E, A, B.

    Returns:
        Higher-order system (P~_d, ..., P~_0, b~).

    Raises:
        StructureViolationError: a perturbation touches a filler entry.
    """
    canon, mask = canonical_form(sys)
    for name, delta, mk, ref in (("dE", dE, mask.mask_E, canon.E),
                                 ("dA", dA, mask.mask_A, canon.A),
                                 ("dB", dB, mask.mask_B, canon.B)):
        delta = np.asarray(delta, dtype=float)
        if delta.shape != ref.shape:
            raise DimensionError(name, ref.shape, delta.shape)
        outside = delta[~mk]
        if np.any(outside != 0.0):
            raise StructureViolationError(f"{name} perturbs {int(np.count_nonzero(outside))} fixed filler entries")

    d, N = sys.degree, sys.N
    E_t = canon.E + dE
    A_t = canon.A + dA
    B_t = canon.B + dB

    coeffs = [E_t[:N, :N]]
    for k in range(d):
        coeffs.append(-A_t[:N, k * N:(k + 1) * N])
    return HigherOrderSystem(tuple(coeffs), B_t[:N, :])


def polynomial_matrix(sys: HigherOrderSystem, s: complex) -> np.ndarray:
    """Evaluate P(s) = sum_i P_i s^i (Horner)."""
    result = np.zeros((sys.N, sys.N), dtype=complex)
    for P in sys.coefficients:
        result = result * s + P
    return result


def _norm2(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def is_c_controllable_pencil(sys: DescriptorSystem, rel_tol: float | None = None) -> ControllabilityReport:
    """
    Pencil criterion: rank[sE - A, B] = n at every finite eigenvalue and rank[E, B] = n.

    Ranks are measured against the size of the pencil data, |s| ||E|| + ||A||
    and ||B||, not against the evaluated block, which at an uncontrollable
    mode can be all roundoff.

    Args:
        sys: Descriptor system with a regular pencil.
        rel_tol: Relative rank tolerance (settings default when None).

    Returns:
        ControllabilityReport naming the first failure found.

    Raises:
        SingularPencilError: pencil is singular, test inconclusive.
    """
    eigs = list(generalized_eigenvalues(sys.E, sys.A))
    n = sys.n
    norm_E, norm_A, norm_B = _norm2(sys.E), _norm2(sys.A), _norm2(sys.B)

    for s in eigs:
        pencil = np.hstack([s * sys.E - sys.A, sys.B.astype(complex)])
        scale = max(abs(s) * norm_E + norm_A, norm_B)
        if numerical_rank(pencil, rel_tol, scale) < n:
            logger.debug(f"[SYSTEMS] rank[sE-A, B] drops at s={s}")
            return ControllabilityReport(False, "spectral", complex(s), eigs)

    if numerical_rank(np.hstack([sys.E, sys.B]), rel_tol, max(norm_E, norm_B)) < n:
        logger.debug("[SYSTEMS] rank[E, B] drops")
        return ControllabilityReport(False, "infinity", None, eigs)

    return ControllabilityReport(True, "none", None, eigs)


def is_c_controllable_toeplitz(sys: DescriptorSystem, rel_tol: float | None = None) -> bool:
    """True iff the controllability Toeplitz matrix has full row rank n^2."""
    T = assemble(sys)
    return numerical_rank(T.matrix, rel_tol) == sys.n ** 2


def is_cd_controllable(sys: HigherOrderSystem, rel_tol: float | None = None) -> bool:
    """C^d-controllability via the Toeplitz test on the canonical form."""
    canon, _ = canonical_form(sys)
    return is_c_controllable_toeplitz(canon, rel_tol)


def is_cd_controllable_polynomial(sys: HigherOrderSystem, rel_tol: float | None = None) -> ControllabilityReport:
    """
    Direct rank test on [P(s), b] at the finite roots of det P(s) and on [P_d, b].

    The roots come from the canonical linearization, whose finite
    spectrum equals the finite roots of det P(s). Ranks are measured
    against sum_i |s|^i ||P_i|| and ||b||.

    Raises:
        SingularPencilError: det P(s) vanishes identically.
    """
    canon, _ = canonical_form(sys)
    roots = list(generalized_eigenvalues(canon.E, canon.A))
    N = sys.N
    norms = [_norm2(sys.coefficient(i)) for i in range(sys.degree + 1)]
    norm_b = _norm2(sys.b)

    for s in roots:
        block = np.hstack([polynomial_matrix(sys, s), sys.b.astype(complex)])
        scale = max(sum(nrm * abs(s) ** i for i, nrm in enumerate(norms)), norm_b)
        if numerical_rank(block, rel_tol, scale) < N:
            return ControllabilityReport(False, "spectral", complex(s), roots)

    if numerical_rank(np.hstack([sys.coefficients[0], sys.b]), rel_tol, max(norms[-1], norm_b)) < N:
        return ControllabilityReport(False, "infinity", None, roots)

    return ControllabilityReport(True, "none", None, roots)
