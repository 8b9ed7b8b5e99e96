"""Toeplitz assembly, orientation and the structure basis."""

import numpy as np
import pytest

from services.benchmarks import random_descriptor
from services.errors import DimensionError, EmptyMaskError
from services.systems import DescriptorSystem, PerturbationMask
from services.toeplitz import (
    AS_BUILT,
    TRANSPOSED,
    assemble,
    assemble_perturbed,
    build_basis,
    coordinates,
    embed,
    extract,
    orient_tall,
    toeplitz_shape,
)


class TestAssemble:

    def test_example_shape(self, example1):
        assert assemble(example1).shape == (9, 9)

    def test_circuit_shape(self, circuit):
        sys, _ = circuit
        assert assemble(sys).shape == (16, 16)

    def test_scalar_system_is_b(self):
        sys = DescriptorSystem(np.array([[2.0]]), np.array([[3.0]]), np.array([[4.0, 5.0]]))
        np.testing.assert_array_equal(assemble(sys).matrix, [[4.0, 5.0]])

    def test_block_layout(self):
        E = np.array([[1.0, 2.0], [3.0, 4.0]])
        A = np.array([[5.0, 6.0], [7.0, 8.0]])
        B = np.array([[9.0], [10.0]])
        T = assemble(DescriptorSystem(E, A, B)).matrix
        expected = np.array([
            [-5.0, -6.0, 9.0, 0.0],
            [-7.0, -8.0, 10.0, 0.0],
            [1.0, 2.0, 0.0, 9.0],
            [3.0, 4.0, 0.0, 10.0],
        ])
        np.testing.assert_array_equal(T, expected)

    def test_shape_formula(self):
        for n, m in ((1, 1), (2, 3), (5, 2)):
            assert toeplitz_shape(n, m) == (n * n, n * (n + m - 1))


class TestOrientTall:

    def test_square_unchanged(self, example1):
        T = orient_tall(assemble(example1))
        assert T.orientation == AS_BUILT

    def test_wide_transposed(self, rng):
        T = orient_tall(assemble(random_descriptor(3, 2, rng)))
        assert T.orientation == TRANSPOSED
        assert T.shape == (12, 9)


class TestStructureBasis:

    def test_full_mask_count(self, example1):
        assert build_basis(example1, PerturbationMask.full(3, 1)).size == 21

    def test_fixed_e_count(self, example1):
        assert build_basis(example1, PerturbationMask.fixed_E(3, 1)).size == 12

    def test_placement_counts(self, example1):
        basis = build_basis(example1, PerturbationMask.full(3, 1))
        for k, (source, _, _) in enumerate(basis.parameters):
            expected = 3 if source == "B" else 2
            assert len(basis.placements(k)) == expected

    def test_signs(self, example1):
        basis = build_basis(example1, PerturbationMask.full(3, 1))
        for k, (source, _, _) in enumerate(basis.parameters):
            signs = {s for _, _, s in basis.placements(k)}
            assert signs == ({-1} if source == "A" else {1})

    def test_empty_mask(self):
        with pytest.raises(EmptyMaskError):
            PerturbationMask(np.zeros((2, 2), bool), np.zeros((2, 2), bool), np.zeros((2, 1), bool))

    def test_mask_shape_mismatch(self, example1):
        with pytest.raises(DimensionError):
            build_basis(example1, PerturbationMask.full(2, 1))

    def test_transposed_coordinates(self, rng):
        sys = random_descriptor(3, 2, rng)
        as_built = build_basis(sys, PerturbationMask.full(3, 2))
        flipped = build_basis(sys, PerturbationMask.full(3, 2), TRANSPOSED)
        alpha = rng.standard_normal(as_built.size)
        np.testing.assert_array_equal(embed(flipped, alpha), embed(as_built, alpha).T)


class TestEmbedExtract:

    @pytest.mark.parametrize("m", [1, 2])
    def test_linear_in_system(self, rng, m):
        """T(sys + extract(alpha)) == T(sys) + embed(alpha) in either orientation."""
        for _ in range(100):
            sys = random_descriptor(3, m, rng)
            T = orient_tall(assemble(sys))
            basis = build_basis(sys, PerturbationMask.full(3, m), T.orientation)
            alpha = rng.standard_normal(basis.size)
            perturbed = orient_tall(assemble(sys.perturbed(*extract(basis, alpha)))).matrix
            np.testing.assert_allclose(perturbed, T.matrix + embed(basis, alpha), atol=1e-12)
            np.testing.assert_allclose(assemble_perturbed(sys, basis, alpha), perturbed, atol=1e-12)

    def test_norm_preserved(self, rng, example1):
        basis = build_basis(example1, PerturbationMask.fixed_E(3, 1))
        alpha = rng.standard_normal(basis.size)
        dE, dA, dB = extract(basis, alpha)
        assert not np.any(dE)
        np.testing.assert_allclose(np.linalg.norm(np.hstack([dE, dA, dB])), np.linalg.norm(alpha))

    def test_alpha_length_checked(self, example1):
        basis = build_basis(example1, PerturbationMask.full(3, 1))
        with pytest.raises(DimensionError):
            embed(basis, np.zeros(basis.size + 1))

    def test_coordinates_read_back_alpha(self, rng, example1):
        basis = build_basis(example1, PerturbationMask.fixed_E(3, 1))
        alpha = rng.standard_normal(basis.size)
        np.testing.assert_array_equal(coordinates(basis, *extract(basis, alpha)), alpha)

    def test_coordinates_drop_fixed_entries(self, example1):
        basis = build_basis(example1, PerturbationMask.fixed_E(3, 1))
        dE = np.ones((3, 3))
        alpha = coordinates(basis, dE, np.zeros((3, 3)), np.zeros((3, 1)))
        assert not np.any(alpha)
