import logging
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from specflow.exceptions import (InputError, PerturbationTooLarge,
                                 ShiftOnSpectrum)
from specflow.flow import OperatorPath
from specflow.fredholm import (RESOLVED, DiscretePath,
                               assemble_adjoint_augmented, assemble_augmented,
                               assemble_concatenation_family,
                               cokernel_vs_adjoint_kernel,
                               constant_path_solve, energy_bound_holds,
                               estimate_sample, ev_pair_section, ev_section,
                               evaluation_map, evaluation_pair,
                               neumann_invert, numeric_index, resolve_index,
                               residual_in_system)
from specflow.generators import random_isometric_operator, rng_for
from specflow.hessian import PairOperator, spectral_projection
from specflow.path_drivers.closed_form_driver import ArctanDriver
from specflow.path_drivers.composite_driver import ConstantDriver
from specflow.path_drivers.keyframe_driver import KeyframeDriver
from specflow.scale import GrowthFunction


class FredholmTest(unittest.TestCase):
    """ Paths shared by the discretization tests.

        ``keyframes`` has spectral flow 2, ``flipped`` has flow -1 and a one
        dimensional cokernel, ``constant`` is a constant Floer type path.
    """
    def setUp(self):
        # Disable logging when running tests
        logging.disable(logging.CRITICAL)
        self.normalization = OperatorPath(ArctanDriver([0.0]), kind='line',
                                          T=10.0)
        self.keyframes = OperatorPath(KeyframeDriver(
            [-1.0, 0.0, 1.0],
            [np.diag([-1.0, -2.0, -3.0]),
             [[0.0, 0.5, 0.0], [0.5, -0.5, 0.0], [0.0, 0.0, -3.0]],
             np.diag([1.0, 2.0, -3.0])]), window=(-1.0, 1.0))
        self.flipped = OperatorPath(KeyframeDriver([-1.0, 1.0],
                                                   [[[1.0]], [[-1.0]]]),
                                    window=(-1.0, 1.0))
        self.constant = OperatorPath(ConstantDriver(
            np.diag([1.0, -1.0, 2.0, -2.0])), window=(-1.0, 1.0))

    def index_of(self, path, grid_n=24, shifts=None):
        return numeric_index(assemble_augmented(path, grid_n, shifts))


class DiscretePathTest(FredholmTest):
    def test_grid_properties(self):
        xi = DiscretePath.from_function(lambda s: [s, 2 * s], 0.0, 2.0, 4)
        self.assertEqual((xi.N, xi.n), (2, 4))
        self.assertAlmostEqual(xi.h, 0.5)
        assert_allclose(xi.differences(), np.tile([1.0, 2.0], (4, 1)))
        assert_allclose(xi.midpoints()[0], [0.25, 0.5])

    def test_norms_of_constant_path(self):
        xi = DiscretePath(np.linspace(0.0, 2.0, 11), np.ones((11, 1)))
        self.assertAlmostEqual(xi.p0_norm(), math.sqrt(2.0))
        self.assertAlmostEqual(xi.p1_norm(), math.sqrt(2.0))
        self.assertAlmostEqual(xi.path_norm(), 2.0)

    def test_rejects_bad_grids(self):
        self.assertRaises(InputError, DiscretePath, [0.0, 1.0, 3.0],
                          np.zeros((3, 1)))
        self.assertRaises(InputError, DiscretePath, [0.0, 1.0],
                          np.zeros((3, 1)))
        self.assertRaises(InputError, DiscretePath, [0.0, 1.0],
                          np.zeros((2, 2)), gf=GrowthFunction.poly(1.0, 3))


class AssemblyTest(FredholmTest):
    def test_normalization_shape(self):
        system = assemble_augmented(self.normalization, 40)
        self.assertEqual(system.shape, (40, 41))
        self.assertEqual(system.k_b, 0)
        self.assertEqual(system.shape_index, 1)
        self.assertEqual(system.grid_n, 40)

    def test_boundary_rows(self):
        system = assemble_augmented(self.keyframes, 10)
        self.assertEqual((system.k_start, system.k_end), (0, 1))
        self.assertEqual(system.row_labels.count('residual'), 30)
        self.assertEqual(system.row_labels[-1], 'end')

    def test_drop_boundary(self):
        system = assemble_augmented(self.constant, 10)
        self.assertEqual(system.shape_index, 0)
        self.assertEqual(system.drop_boundary('start').shape_index, 2)
        self.assertEqual(system.drop_boundary('end').shape_index, 2)
        self.assertRaises(InputError, system.drop_boundary, 'middle')

    def test_dropped_rows_raise_index(self):
        for path in (self.keyframes, self.constant):
            system = assemble_augmented(path, 16)
            index = numeric_index(system).index
            for side, k in (('start', system.k_start),
                            ('end', system.k_end)):
                dropped = numeric_index(system.drop_boundary(side))
                self.assertEqual(dropped.index, index + k)

    def test_kernel_grows_without_negative_rows(self):
        for N in (2, 4, 6):
            signs = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
            path = OperatorPath(ConstantDriver(np.diag(
                signs * np.arange(1.0, N + 1))), window=(-1.0, 1.0))
            system = assemble_augmented(path, 16)
            self.assertEqual(numeric_index(system).dim_ker, 0)
            report = numeric_index(system.drop_boundary('end'))
            self.assertEqual((report.dim_ker, report.dim_coker, report.index),
                             (N // 2, 0, N // 2))

    def test_grid_too_coarse(self):
        self.assertRaises(InputError, assemble_augmented, self.keyframes, 4)

    def test_shift_on_spectrum(self):
        self.assertRaises(ShiftOnSpectrum, assemble_augmented,
                          self.keyframes, 10, (-1.0, 0.0))


class NumericIndexTest(FredholmTest):
    def test_normalization(self):
        report = self.index_of(self.normalization, 40)
        self.assertEqual((report.index, report.dim_ker, report.dim_coker),
                         (1, 1, 0))
        self.assertTrue(report.resolved)

    def test_keyframes(self):
        report = self.index_of(self.keyframes)
        self.assertEqual(report.index, 2)
        self.assertEqual(report.status, RESOLVED)

    def test_constant_is_bijective(self):
        report = self.index_of(self.constant)
        self.assertEqual((report.dim_ker, report.dim_coker), (0, 0))

    def test_shifted_boundary(self):
        report = self.index_of(self.keyframes, shifts=(0.5, 1.5))
        self.assertEqual(report.index, 1)

    def test_adjoint(self):
        report = numeric_index(assemble_adjoint_augmented(self.keyframes, 24))
        self.assertEqual(report.index, -2)

    def test_resolve_index(self):
        report = resolve_index(self.keyframes, 16)
        self.assertEqual(report.index, 2)
        self.assertEqual(report.grid_n, 16)
        self.assertEqual(resolve_index(self.keyframes, 16, adjoint=True).index,
                         -2)

    def test_report_info(self):
        info = self.index_of(self.flipped).get_info()
        self.assertEqual(info['index'], -1)
        self.assertEqual(info['dim_coker'], 1)
        self.assertEqual(sorted(info), ['dim_coker', 'dim_ker', 'grid_n',
                                        'index', 'status', 'sv_gap', 'tol'])


class CokernelTest(FredholmTest):
    def test_flipped_path(self):
        comparison = cokernel_vs_adjoint_kernel(self.flipped, 40)
        self.assertEqual(comparison.dim_coker, 1)
        self.assertEqual(comparison.dim_adjoint_kernel, 1)
        self.assertLessEqual(comparison.max_angle, comparison.bound)
        self.assertTrue(comparison.passed)

    def test_surjective_path(self):
        comparison = cokernel_vs_adjoint_kernel(self.keyframes, 24)
        self.assertEqual(comparison.dim_coker, 0)
        self.assertTrue(comparison.passed)


class ConcatenationFamilyTest(FredholmTest):
    def test_index_constant_in_r(self):
        indices = [numeric_index(assemble_concatenation_family(
            self.keyframes, r, 16)).index for r in (0.0, 0.25, 0.5, 1.0)]
        self.assertEqual(indices, [2, 2, 2, 2])

    def test_arguments(self):
        self.assertRaises(InputError, assemble_concatenation_family,
                          self.keyframes, 1.5, 16)
        self.assertRaises(InputError, assemble_concatenation_family,
                          self.keyframes, 0.5, 16, 2.0)


class ConstantSolverTest(FredholmTest):
    def setUp(self):
        super(ConstantSolverTest, self).setUp()
        self.A = PairOperator(np.diag([1.0, -2.0]))
        self.x = np.array([0.7, 0.3])
        self.y = np.array([-0.2, 0.9])

    def source(self, s):
        return [math.cos(s), s]

    def solve(self, grid_n):
        eta = DiscretePath.from_function(self.source, -1.0, 1.0, grid_n)
        return eta, constant_path_solve(self.A, 1.0, eta, self.x, self.y)

    def test_boundary_values(self):
        eta, xi = self.solve(32)
        plus = spectral_projection(self.A, '+').matrix
        minus = spectral_projection(self.A, '-').matrix
        assert_allclose(plus @ xi.values[0], plus @ self.x, atol=1e-12)
        assert_allclose(minus @ xi.values[-1], minus @ self.y, atol=1e-12)

    def test_second_order_residual(self):
        coarse = residual_in_system(self.A, *reversed(self.solve(32)))
        fine = residual_in_system(self.A, *reversed(self.solve(64)))
        self.assertTrue(3.0 <= coarse / fine <= 5.0)

    def test_energy_bound(self):
        eta, xi = self.solve(32)
        holds, lhs, rhs = energy_bound_holds(self.A, xi, eta, self.x, self.y)
        self.assertTrue(holds)
        self.assertLessEqual(lhs, rhs)

    def test_wrong_window(self):
        eta = DiscretePath.from_function(self.source, 0.0, 1.0, 8)
        self.assertRaises(InputError, constant_path_solve, self.A, 1.0, eta)


class NeumannTest(FredholmTest):
    def test_bound_holds(self):
        Tm = np.diag([2.0, 4.0])
        Pm = np.array([[0.0, 0.5], [0.5, 0.0]])
        certificate = neumann_invert(Tm, Pm)
        assert_allclose(certificate.inverse @ (Tm + Pm), np.eye(2),
                        atol=1e-12)
        self.assertAlmostEqual(certificate.product, 0.25)
        self.assertAlmostEqual(certificate.bound, 0.5 / 0.75)
        self.assertTrue(certificate.holds)

    def test_perturbation_too_large(self):
        self.assertRaises(PerturbationTooLarge, neumann_invert, np.eye(2),
                          2.0 * np.eye(2))

    def test_shapes(self):
        self.assertRaises(InputError, neumann_invert, np.eye(2), np.eye(3))


class EvaluationTest(FredholmTest):
    def setUp(self):
        super(EvaluationTest, self).setUp()
        self.gf = GrowthFunction.poly(1.0, 6)
        self.x0 = np.array([1.0, -2.0, 0.5, 0.0, 3.0, 1.0])
        self.x1 = np.array([0.0, 1.0, 1.0, -1.0, 2.0, 0.5])

    def test_section_starts_at_x0(self):
        section = ev_section(self.x0, self.gf, 64)
        assert_allclose(section.values[0], self.x0)
        evaluation = evaluation_map(section)
        self.assertTrue(evaluation.within_bound)
        self.assertLessEqual(evaluation.ratio, math.sqrt(2.0))

    def test_pair_section_exact(self):
        section = ev_pair_section(self.x0, self.x1, self.gf, 64)
        self.assertTrue(np.array_equal(section.values[0], self.x0))
        self.assertTrue(np.array_equal(section.values[-1], self.x1))
        first, last = evaluation_pair(section)
        assert_allclose(first.endpoint.coeffs, self.x0)
        assert_allclose(last.endpoint.coeffs, self.x1)

    def test_estimate_sample(self):
        first = estimate_sample(self.keyframes, 5, 16, seed=7)
        self.assertTrue(0.0 < first < float('inf'))
        self.assertEqual(first, estimate_sample(self.keyframes, 5, 16,
                                                seed=7))

    def isometric_path(self):
        gf = GrowthFunction.poly(1.0, 4)
        op = random_isometric_operator(rng_for(11), gf)
        return OperatorPath(ConstantDriver(op.entries), window=(-1.0, 1.0),
                            gf=gf)

    def test_estimate_on_isometric_path(self):
        estimate = estimate_sample(self.isometric_path(), 20, 32, seed=3)
        self.assertLessEqual(estimate, 1.1)
        self.assertGreaterEqual(estimate, 1.0 / 3.0)

    def test_estimate_stable_under_refinement(self):
        path = self.isometric_path()
        coarse = estimate_sample(path, 20, 32, seed=3)
        fine = estimate_sample(path, 20, 64, seed=3)
        self.assertLessEqual(max(coarse, fine) / min(coarse, fine), 1.5)
