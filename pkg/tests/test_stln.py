"""STLN configuration, derived matrices and the iteration."""

import numpy as np
import pytest
from pydantic import ValidationError

from config.settings import settings
from services.benchmarks import random_descriptor, rlc_circuit
from services.errors import DimensionError, PartitionError
from services.modes import search
from services.stln import (
    StlnConfig,
    _check_rank_deficiency,
    acceptance_rel_tol,
    build_P,
    build_S,
    column_order,
    derive,
    init,
    merit,
    rank_ratio,
    run,
    run_multistart,
    run_seeded,
    run_with_fallback,
    step,
)
from services.systems import PerturbationMask
from services.toeplitz import assemble, build_basis, coordinates, embed, orient_tall


def _setup(sys, mask=None):
    mask = mask or PerturbationMask.full(sys.n, sys.m)
    T = orient_tall(assemble(sys))
    return T, build_basis(sys, mask, T.orientation)


class TestStlnConfig:

    def test_from_settings_ignores_none(self):
        cfg = StlnConfig.from_settings(omega=None, epsilon=1e-5)
        assert cfg.epsilon == 1e-5
        assert cfg.omega > 0

    @pytest.mark.parametrize("kwargs", [
        {"omega": 0.0},
        {"epsilon": -1.0},
        {"max_iter": 0},
        {"partition_col": -1},
        {"multistart_columns": [0, -2]},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            StlnConfig.from_settings(**kwargs)

    def test_verification_tolerance(self):
        assert StlnConfig.from_settings(omega=1e8).verification_rel_tol == pytest.approx(1e-7)
        assert StlnConfig.from_settings(omega=1e13).verification_rel_tol == pytest.approx(1e-8)
        assert StlnConfig.from_settings(omega=1.0).verification_rel_tol == 0.5

    def test_resolve_partition(self):
        assert StlnConfig.from_settings().resolve_partition(9) == 8
        assert StlnConfig.from_settings(partition_col=3).resolve_partition(9) == 3
        with pytest.raises(PartitionError):
            StlnConfig.from_settings(partition_col=9).resolve_partition(9)


class TestDerivedMatrices:

    @pytest.mark.parametrize("col", [0, 4, 8])
    def test_s_identity(self, rng, example1, col):
        T, basis = _setup(example1)
        z = rng.standard_normal(T.shape[1] - 1)
        S = build_S(basis, z, col)
        for _ in range(100):
            da = rng.standard_normal(basis.size)
            dE1 = np.delete(embed(basis, da), col, axis=1)
            np.testing.assert_allclose(S @ da, dE1 @ z, atol=1e-12)

    @pytest.mark.parametrize("col", [0, 4, 8])
    def test_p_identity(self, rng, example1, col):
        _, basis = _setup(example1)
        P = build_P(basis, col)
        for _ in range(100):
            da = rng.standard_normal(basis.size)
            np.testing.assert_allclose(P @ da, embed(basis, da)[:, col], atol=1e-12)

    def test_transposed_identity(self, rng):
        sys = random_descriptor(3, 2, rng)
        T, basis = _setup(sys)
        col = T.shape[1] - 1
        z = rng.standard_normal(T.shape[1] - 1)
        da = rng.standard_normal(basis.size)
        full = embed(basis, da)
        np.testing.assert_allclose(build_S(basis, z, col) @ da, np.delete(full, col, axis=1) @ z, atol=1e-12)


class TestInit:

    def test_example_residual(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        state = init(T, basis, StlnConfig.from_settings())
        assert state.residual_norm > 0
        assert not np.any(state.alpha)
        assert state.z.shape == (8,)
        assert state.partition_col == 8

    def test_explicit_partition_out_of_range(self, example1):
        T, basis = _setup(example1)
        with pytest.raises(PartitionError):
            init(T, basis, StlnConfig.from_settings(), partition_col=9)


class TestStep:

    def test_first_step_shapes(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings(omega=1e4)
        state = init(T, basis, cfg)
        d_alpha, d_z = step(state, derive(basis, state.z, state.partition_col), cfg)
        assert d_alpha.shape == (basis.size,)
        assert d_z.shape == state.z.shape
        assert np.all(np.isfinite(d_alpha))


class TestRun:

    def test_residual_consistent_after_run(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        state = run(T, basis, StlnConfig.from_settings(max_iter=5, epsilon=1e-300))
        full = T.matrix + embed(basis, state.alpha)
        Y = np.delete(full, state.partition_col, axis=1)
        y = full[:, state.partition_col]
        np.testing.assert_allclose(state.r, y - Y @ state.z, atol=1e-10)
        assert state.iterations == 5
        assert not state.converged

    def test_scale_covariance(self, example1):
        cfg = StlnConfig.from_settings(omega=1e6, max_iter=5, epsilon=1e-300)
        mask = PerturbationMask.fixed_E(3, 1)
        base = run(*_setup(example1, mask), cfg)
        scaled = run(*_setup(example1.scaled(2.0), mask), cfg)
        np.testing.assert_allclose(scaled.alpha, 2.0 * base.alpha, rtol=1e-6, atol=1e-12)
        np.testing.assert_allclose(scaled.z, base.z, rtol=1e-6, atol=1e-12)

    def test_multistart_picks_best_candidate(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings(multistart_columns=[0, 4, 8])
        best = run_multistart(T, basis, cfg)
        singles = [run(T, basis, cfg, c) for c in (0, 4, 8)]
        expected = min(singles, key=lambda s: (not s.converged, not s.rank_deficient, s.perturbation_norm, s.partition_col))
        assert best.partition_col == expected.partition_col
        np.testing.assert_allclose(best.alpha, expected.alpha)

    def test_multistart_parallel_matches_serial(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        serial = run_multistart(T, basis, StlnConfig.from_settings(multistart_columns=[0, 8]))
        parallel = run_multistart(T, basis, StlnConfig.from_settings(multistart_columns=[0, 8], workers=2))
        assert serial.partition_col == parallel.partition_col
        np.testing.assert_allclose(serial.alpha, parallel.alpha)

    def test_multistart_column_out_of_range(self, example1):
        T, basis = _setup(example1)
        with pytest.raises(PartitionError):
            run_multistart(T, basis, StlnConfig.from_settings(multistart_columns=[20]))


class TestNormalEquations:

    @pytest.mark.parametrize("col", [0, 8])
    def test_step_solves_weighted_problem(self, rng, example1, col):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings(omega=10.0)
        state = init(T, basis, cfg, partition_col=col, alpha0=0.1 * rng.standard_normal(basis.size))

        # S and P column by column from unit perturbations
        units = [embed(basis, np.eye(basis.size)[k]) for k in range(basis.size)]
        S = np.column_stack([np.delete(U, col, axis=1) @ state.z for U in units])
        P = np.column_stack([U[:, col] for U in units])
        w = cfg.omega
        K = np.block([
            [w * (S - P), w * (state.Y + state.E1)],
            [np.eye(basis.size), np.zeros((basis.size, state.z.size))],
        ])
        rhs = np.concatenate([w * state.r, -state.alpha])
        expected = np.linalg.solve(K.T @ K, K.T @ rhs)

        d_alpha, d_z = step(state, derive(basis, state.z, col), cfg)
        np.testing.assert_allclose(np.concatenate([d_alpha, d_z]), expected, rtol=1e-6, atol=1e-9)


class TestWarmStart:

    def test_alpha0_used(self, rng, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        alpha0 = rng.standard_normal(basis.size)
        state = init(T, basis, StlnConfig.from_settings(), alpha0=alpha0)
        np.testing.assert_array_equal(state.alpha, alpha0)
        full = T.matrix + embed(basis, alpha0)
        np.testing.assert_allclose(state.r, full[:, -1] - np.delete(full, -1, axis=1) @ state.z, atol=1e-10)

    def test_alpha0_length_checked(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        with pytest.raises(DimensionError):
            init(T, basis, StlnConfig.from_settings(), alpha0=np.zeros(basis.size + 1))

    def test_seeded_run_partitions_at_dependent_column(self, example1):
        mask = PerturbationMask.fixed_E(3, 1)
        T, basis = _setup(example1, mask)
        found = search(example1, mask, keep=1)[0]
        alpha0 = coordinates(basis, found.dE, found.dA, found.dB)
        state = run_seeded(T, basis, StlnConfig.from_settings(), alpha0)
        assert state.partition_col == column_order(T.matrix + embed(basis, alpha0))[0]
        assert state.converged


class TestDamping:

    def test_merit_never_increases(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        merits = []
        for k in range(1, 7):
            cfg = StlnConfig.from_settings(omega=1e4, max_iter=k, epsilon=1e-300)
            merits.append(merit(run(T, basis, cfg), cfg))
        for before, after in zip(merits, merits[1:]):
            assert after <= before * (1 + 1e-9)

    def test_polishing_not_counted(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        plain = run(T, basis, StlnConfig.from_settings(polish_iter=0))
        polished = run(T, basis, StlnConfig.from_settings(polish_iter=5))
        assert plain.converged and polished.converged
        assert plain.polish_iterations == 0
        assert 1 <= polished.polish_iterations <= 5
        assert polished.iterations == plain.iterations


class TestAcceptance:

    def test_tolerance_below_input_ratio(self):
        sys, mask = rlc_circuit(8.0, 0.01, 0.1, 4.0)
        T, _ = _setup(sys, mask)
        cfg = StlnConfig.from_settings()
        tol = acceptance_rel_tol(T.matrix, cfg)
        assert 0 < tol <= 1e-4 * rank_ratio(T.matrix)
        assert tol <= settings.rank_rel_tol

    def test_no_vanishing_perturbation_accepted(self):
        # partition column 15 of this circuit used to stop at alpha = 0
        sys, mask = rlc_circuit(8.0, 0.01, 0.1, 4.0)
        T, basis = _setup(sys, mask)
        state = run(T, basis, StlnConfig.from_settings(), partition_col=15)
        if state.rank_deficient:
            assert state.perturbation_norm >= 0.01 - 1e-6

    def test_zero_alpha_not_rank_deficient(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        state = init(T, basis, StlnConfig.from_settings())
        state.accept_rel_tol = 1.0
        assert not _check_rank_deficiency(state)


class TestFallback:

    def test_converged_default_is_kept(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings()
        direct = run(T, basis, cfg)
        assert direct.converged
        chosen = run_with_fallback(T, basis, cfg)
        assert chosen.partition_col == direct.partition_col
        np.testing.assert_allclose(chosen.alpha, direct.alpha)

    def test_stalled_default_tries_other_columns(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings(max_iter=1, epsilon=1e-300, fallback_columns=2)
        chosen = run_with_fallback(T, basis, cfg)
        others = [c for c in column_order(T.matrix) if c != 8][:2]
        assert chosen.partition_col in [8, *others]
        assert not chosen.converged

    def test_fallback_disabled(self, example1):
        T, basis = _setup(example1, PerturbationMask.fixed_E(3, 1))
        cfg = StlnConfig.from_settings(max_iter=1, epsilon=1e-300, fallback_columns=0)
        assert run_with_fallback(T, basis, cfg).partition_col == 8

    def test_column_order_is_permutation(self, example1):
        T, _ = _setup(example1)
        assert sorted(column_order(T.matrix)) == list(range(T.shape[1]))
