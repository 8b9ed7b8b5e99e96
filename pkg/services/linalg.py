"""
Dense numerical kernels.

Matrices are plain numpy arrays validated on entry. Every other
service module goes through these helpers for ranks, least squares
and pencil spectra so that tolerances are applied consistently.
"""

import logging

import numpy as np
import scipy.linalg as spla

from config.settings import settings
from services.errors import DimensionError, NonFiniteError, SingularPencilError

logger = logging.getLogger(__name__)


def as_matrix(data, name: str = "matrix", allow_complex: bool = False) -> np.ndarray:
    """
    Convert input to a finite 2-D float array.

    Args:
        data: Nested sequence or array.
        name: Label used in error messages.
        allow_complex: Keep complex dtype instead of forcing float.

    Returns:
        Validated 2-D array (a copy when conversion was needed).
    """
    dtype = complex if allow_complex and np.iscomplexobj(data) else float
    arr = np.asarray(data, dtype=dtype)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(name, ("rows", "cols"), arr.shape)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return arr


def least_squares(M, rhs) -> np.ndarray:
    """
    Solve min ||M x - rhs||_2 by QR with column pivoting.

    Returns the minimum-norm solution when M is column-rank-deficient.

    Args:
        M: Coefficient matrix.
        rhs: Right-hand side vector (length M.rows).

    Returns:
        Solution vector x (1-D).
    """
    M = as_matrix(M, "least_squares matrix")
    rhs_arr = np.asarray(rhs, dtype=float).reshape(-1)
    if not np.all(np.isfinite(rhs_arr)):
        raise NonFiniteError("least_squares right-hand side contains NaN or Inf entries")
    if rhs_arr.shape[0] != M.shape[0]:
        raise DimensionError("least_squares rhs", (M.shape[0],), rhs_arr.shape)
    if M.shape[1] == 0:
        return np.zeros(0)

    x, _, _, _ = spla.lstsq(M, rhs_arr, lapack_driver="gelsy")
    return x


def singular_values(M) -> np.ndarray:
    """Singular values in nonincreasing order."""
    M = as_matrix(M, "singular_values matrix", allow_complex=True)
    if M.size == 0:
        raise DimensionError("singular_values matrix", ("rows>0", "cols>0"), M.shape)
    return spla.svdvals(M)


def smallest_singular_triplet(M) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Smallest of the min(rows, cols) singular values with its vectors.

    Returns:
        (sigma, u, v) with M @ v = sigma * u.
    """
    M = as_matrix(M, "smallest_singular_triplet matrix", allow_complex=True)
    if M.size == 0:
        raise DimensionError("smallest_singular_triplet matrix", ("rows>0", "cols>0"), M.shape)
    U, sv, Vh = spla.svd(M)
    k = min(M.shape) - 1
    return float(sv[k]), U[:, k], Vh[k].conj()


def numerical_rank(M, rel_tol: float | None = None, scale: float | None = None) -> int:
    """
    Count singular values above rel_tol * scale.

    Args:
        M: Real or complex matrix.
        rel_tol: Relative threshold in (0, 1); defaults to settings.rank_rel_tol.
        scale: Reference magnitude, sigma_max of M when None. Pass the size
            of the data M was evaluated from when M itself can be pure roundoff.

    Returns:
        Numerical rank (0 for the zero matrix).
    """
    if rel_tol is None:
        rel_tol = settings.rank_rel_tol
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")

    M = as_matrix(M, "numerical_rank matrix", allow_complex=True)
    if M.size == 0:
        return 0
    sv = spla.svdvals(M)
    reference = sv[0] if scale is None else float(scale)
    if reference == 0.0:
        return 0
    return int(np.count_nonzero(sv > rel_tol * reference))


def generalized_eigenvalues(E, A) -> np.ndarray:
    """
    Finite generalized eigenvalues of the pencil sE - A.

    Uses the QZ algorithm in homogeneous form (alpha, beta) so that
    infinite eigenvalues (beta ~ 0) can be dropped and singular pencils
    (alpha ~ 0 and beta ~ 0 together) detected.

    Args:
        E: Square matrix multiplying s.
        A: Square matrix of the same size.

    Returns:
        Complex array of finite eigenvalues, with multiplicity.

    Raises:
        SingularPencilError: det(sE - A) vanishes identically.
    """
    E = as_matrix(E, "E")
    A = as_matrix(A, "A")
    n = E.shape[0]
    if E.shape != (n, n):
        raise DimensionError("E", (n, n), E.shape)
    if A.shape != (n, n):
        raise DimensionError("A", (n, n), A.shape)

    tol = settings.pencil_tol_factor * max(n, 1) * np.finfo(float).eps
    norm_e = np.linalg.norm(E)
    norm_a = np.linalg.norm(A)
    if norm_a == 0.0 and norm_e == 0.0:
        raise SingularPencilError("pencil sE - A is identically zero")

    # eig(A, E) solves A v = lambda E v, i.e. det(lambda E - A) = 0
    alpha, beta = spla.eig(A, E, right=False, homogeneous_eigvals=True)
    pencil_scale = max(norm_a, norm_e)

    singular = (np.abs(alpha) <= tol * pencil_scale) & (np.abs(beta) <= tol * pencil_scale)
    if np.any(singular):
        logger.debug(f"[LINALG] singular pencil detected: alpha={alpha}, beta={beta}")
        raise SingularPencilError("pencil sE - A is singular (det vanishes identically)")

    # Decide finiteness on each homogeneous pair separately
    pair_scale = np.hypot(np.abs(alpha), np.abs(beta))
    finite = np.abs(beta) > tol * pair_scale
    return (alpha[finite] / beta[finite]).astype(complex)
