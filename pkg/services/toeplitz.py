"""
Controllability Toeplitz matrix and its perturbation structure.

The block matrix C(E, A, B) has n block rows of height n, n - 1 column
units of width n + m and a trailing block of width m:

    [ -A  B                      ]
    [  E  0  -A  B               ]
    [        E   0   ...         ]
    [                 -A  B      ]
    [                  E  0   B  ]

A StructureBasis maps each free system entry (one coordinate of alpha)
to every position it occupies in that matrix, with the sign it carries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from services.errors import DimensionError, EmptyMaskError

if TYPE_CHECKING:
    from services.systems import DescriptorSystem, PerturbationMask

logger = logging.getLogger(__name__)

AS_BUILT = "as-built"
TRANSPOSED = "transposed"


@dataclass(frozen=True)
class ControllabilityToeplitz:
    """Assembled C(E, A, B) in a given orientation."""

    matrix: np.ndarray
    n: int
    m: int
    orientation: str = AS_BUILT

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class StructureBasis:
    """
    Free-parameter basis of the Toeplitz perturbation space.

    Placements are stored flat: placement j belongs to parameter
    param_index[j] and sits at (rows[j], cols[j]) with signs[j].
    """

    parameters: tuple[tuple[str, int, int], ...]
    param_index: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    signs: np.ndarray
    shape: tuple[int, int]
    n: int
    m: int
    orientation: str = AS_BUILT

    @property
    def size(self) -> int:
        """Number of free parameters (ell)."""
        return len(self.parameters)

    def placements(self, k: int) -> list[tuple[int, int, int]]:
        """(row, col, sign) positions of parameter k."""
        sel = self.param_index == k
        return [(int(r), int(c), int(s)) for r, c, s in zip(self.rows[sel], self.cols[sel], self.signs[sel])]

    def oriented(self, orientation: str) -> StructureBasis:
        """Re-index placements for the requested orientation."""
        if orientation == self.orientation:
            return self
        return StructureBasis(
            parameters=self.parameters,
            param_index=self.param_index,
            rows=self.cols,
            cols=self.rows,
            signs=self.signs,
            shape=(self.shape[1], self.shape[0]),
            n=self.n,
            m=self.m,
            orientation=orientation,
        )


def toeplitz_shape(n: int, m: int) -> tuple[int, int]:
    return n * n, n * (n + m - 1)


def assemble(sys: DescriptorSystem) -> ControllabilityToeplitz:
    """
    Build C(E, A, B) of size n^2 x n(n + m - 1).

    Args:
        sys: Descriptor system.

    Returns:
        Toeplitz matrix in as-built orientation.
    """
    n, m = sys.n, sys.m
    width = n + m
    T = np.zeros(toeplitz_shape(n, m))

    for i in range(n - 1):
        r0, c0 = i * n, i * width
        T[r0:r0 + n, c0:c0 + n] = -sys.A
        T[r0:r0 + n, c0 + n:c0 + width] = sys.B
    for i in range(1, n):
        r0, c0 = i * n, (i - 1) * width
        T[r0:r0 + n, c0:c0 + n] = sys.E
    T[(n - 1) * n:, (n - 1) * width:] = sys.B

    return ControllabilityToeplitz(T, n, m, AS_BUILT)


def orient_tall(T: ControllabilityToeplitz) -> ControllabilityToeplitz:
    """Transpose a wide matrix so that rows >= cols; tall input is returned as is."""
    rows, cols = T.shape
    if cols <= rows:
        return T
    flipped = TRANSPOSED if T.orientation == AS_BUILT else AS_BUILT
    logger.debug(f"[TOEPLITZ] orienting {rows}x{cols} matrix as {flipped}")
    return ControllabilityToeplitz(T.matrix.T.copy(), T.n, T.m, flipped)


def _entry_placements(source: str, r: int, c: int, n: int, m: int) -> list[tuple[int, int, int]]:
    width = n + m
    if source == "E":
        return [(i * n + r, (i - 1) * width + c, 1) for i in range(1, n)]
    if source == "A":
        return [(i * n + r, i * width + c, -1) for i in range(n - 1)]
    # B: one copy per block row
    out = [(i * n + r, i * width + n + c, 1) for i in range(n - 1)]
    out.append(((n - 1) * n + r, (n - 1) * width + c, 1))
    return out


def build_basis(sys: DescriptorSystem, mask: PerturbationMask, orientation: str = AS_BUILT) -> StructureBasis:
    """
    Enumerate free entries (E row-major, then A, then B) and their Toeplitz placements.

    Args:
        sys: Descriptor system the mask refers to.
        mask: Entry freedom pattern.
        orientation: Coordinates to express placements in.

    Returns:
        StructureBasis with one parameter per free entry.
    """
    mask.check_against(sys)
    n, m = sys.n, sys.m

    parameters: list[tuple[str, int, int]] = []
    param_index, rows, cols, signs = [], [], [], []
    for source, mk in (("E", mask.mask_E), ("A", mask.mask_A), ("B", mask.mask_B)):
        for r, c in zip(*np.nonzero(mk)):
            k = len(parameters)
            parameters.append((source, int(r), int(c)))
            for row, col, sign in _entry_placements(source, int(r), int(c), n, m):
                param_index.append(k)
                rows.append(row)
                cols.append(col)
                signs.append(sign)

    if not parameters:
        raise EmptyMaskError()

    basis = StructureBasis(
        parameters=tuple(parameters),
        param_index=np.asarray(param_index, dtype=int),
        rows=np.asarray(rows, dtype=int),
        cols=np.asarray(cols, dtype=int),
        signs=np.asarray(signs, dtype=float),
        shape=toeplitz_shape(n, m),
        n=n,
        m=m,
        orientation=AS_BUILT,
    )
    logger.debug(f"[TOEPLITZ] basis: {basis.size} parameters, {len(rows)} placements")
    return basis.oriented(orientation)


def _check_alpha(basis: StructureBasis, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape[0] != basis.size:
        raise DimensionError("alpha", (basis.size,), alpha.shape)
    return alpha


def embed(basis: StructureBasis, alpha, shape: tuple[int, int] | None = None) -> np.ndarray:
    """
    Dense sum_k alpha_k Phi_k in the basis orientation.

    Args:
        basis: Structure basis.
        alpha: Parameter vector of length ell.
        shape: Expected matrix shape (defaults to the basis shape).

    Returns:
        Perturbation of the Toeplitz matrix.
    """
    alpha = _check_alpha(basis, alpha)
    if shape is not None and tuple(shape) != tuple(basis.shape):
        raise DimensionError("embed shape", basis.shape, tuple(shape))
    out = np.zeros(basis.shape)
    np.add.at(out, (basis.rows, basis.cols), basis.signs * alpha[basis.param_index])
    return out


def extract(basis: StructureBasis, alpha) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Scatter alpha back into system-shaped (dE, dA, dB).

    Each free entry is counted once, so ||alpha||_2 = ||[dE dA dB]||_F.
    """
    alpha = _check_alpha(basis, alpha)
    n, m = basis.n, basis.m
    deltas = {"E": np.zeros((n, n)), "A": np.zeros((n, n)), "B": np.zeros((n, m))}
    for value, (source, r, c) in zip(alpha, basis.parameters):
        deltas[source][r, c] = value
    return deltas["E"], deltas["A"], deltas["B"]


def coordinates(basis: StructureBasis, dE: np.ndarray, dA: np.ndarray, dB: np.ndarray) -> np.ndarray:
    """Read alpha off system-shaped perturbations; entries outside the basis are ignored."""
    deltas = {"E": np.asarray(dE, dtype=float), "A": np.asarray(dA, dtype=float), "B": np.asarray(dB, dtype=float)}
    return np.array([deltas[source][r, c] for source, r, c in basis.parameters], dtype=float)


def assemble_perturbed(sys: DescriptorSystem, basis: StructureBasis, alpha) -> np.ndarray:
    """Toeplitz matrix of the perturbed system, in the basis orientation."""
    T = assemble(sys).matrix
    if basis.orientation == TRANSPOSED:
        T = T.T
    return T + embed(basis, alpha)
