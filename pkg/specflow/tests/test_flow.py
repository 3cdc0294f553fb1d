import logging
import math
import unittest

import numpy as np
from hypothesis import given, seed, settings as hypothesis_settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from specflow import generators
from specflow.exceptions import (EndpointNotInvertible, InputError,
                                 MismatchAtJunction, TailNotSettled,
                                 ValidationError)
from specflow.flow import (OperatorPath, branch_trace, concatenate,
                           direct_sum, linear_homotopy, spectral_flow)
from specflow.path_drivers import DRIVERS, driver_from_json
from specflow.path_drivers.closed_form_driver import (AffineDriver,
                                                      ArctanDriver,
                                                      CallableDriver,
                                                      PolynomialDriver)
from specflow.path_drivers.composite_driver import (ConstantDriver,
                                                    SymmetrizedDriver)
from specflow.path_drivers.keyframe_driver import (KeyframeDriver,
                                                   parse_matrix)


KEYFRAMES_3 = {
    'kind': 'finite', 'T': 1.0, 'family': 'keyframes',
    'times': [-1.0, 0.0, 1.0],
    'matrices': [np.diag([-1.0, -2.0, -3.0]).tolist(),
                 [[0.0, 0.5, 0.0], [0.5, -0.5, 0.0], [0.0, 0.0, -3.0]],
                 np.diag([1.0, 2.0, -3.0]).tolist()],
}


def keyframe_path(start, end, window=(-1.0, 1.0)):
    driver = KeyframeDriver(window, [np.atleast_2d(start),
                                     np.atleast_2d(end)])
    return OperatorPath(driver, window=window)


class FlowTest(unittest.TestCase):
    def setUp(self):
        # Disable logging when running tests
        logging.disable(logging.CRITICAL)
        self.path = OperatorPath.from_json(KEYFRAMES_3)


class PathDriverTest(FlowTest):
    def test_keyframe_interpolation(self):
        driver = self.path.driver
        assert_allclose(driver.matrix_at(-0.5),
                        0.5 * (driver.matrices[0] + driver.matrices[1]))
        assert_allclose(driver.matrix_at(-7.0), driver.matrices[0])
        assert_allclose(driver.matrix_at(7.0), driver.matrices[-1])
        self.assertEqual(driver.tail_deviation(1.0, 1), 0.0)

    def test_keyframe_times_increasing(self):
        self.assertRaises(ValidationError, KeyframeDriver, [0.0, 0.0],
                          [np.eye(1), np.eye(1)])

    def test_parse_matrix(self):
        assert_allclose(parse_matrix([1, 0, 0, 2], 'm'), np.diag([1, 2]))
        with self.assertRaises(ValidationError) as ctx:
            parse_matrix([[1, 2], [0, 1]], 'path.matrices[1]')
        self.assertEqual(ctx.exception.field, 'path.matrices[1]')
        self.assertRaises(ValidationError, parse_matrix, [1, 2, 3], 'm')
        self.assertRaises(ValidationError, parse_matrix, np.eye(2), 'm', 3)

    def test_arctan(self):
        driver = ArctanDriver([0.0, 1.0])
        assert_allclose(driver.matrix_at(1.0),
                        np.diag([math.atan(1.0), 0.0]))
        assert_allclose(driver.asymptote(-1), -0.5 * math.pi * np.eye(2))
        self.assertAlmostEqual(driver.tail_deviation(10.0, 1),
                               0.5 * math.pi - math.atan(9.0))

    def test_affine_and_polynomial(self):
        A0, A1 = np.diag([1.0, -1.0]), np.eye(2)
        affine = AffineDriver(A0, A1)
        assert_allclose(affine.matrix_at(2.0), np.diag([3.0, 1.0]))
        self.assertIsNone(affine.asymptote(1))
        self.assertEqual(affine.tail_deviation(1.0, 1), float('inf'))
        poly = PolynomialDriver([A0, np.zeros((2, 2)), A1])
        assert_allclose(poly.matrix_at(2.0), np.diag([5.0, 3.0]))
        constant = AffineDriver(A0, np.zeros((2, 2)))
        assert_allclose(constant.asymptote(-1), A0)

    def test_callable_default_tail(self):
        driver = CallableDriver(lambda s: [[math.tanh(s)]], 1,
                                asymptotes={1: [[1.0]], -1: [[-1.0]]})
        assert_allclose(driver.matrix_at(0.5), [[math.tanh(0.5)]])
        self.assertAlmostEqual(driver.tail_deviation(3.0, 1),
                               1.0 - math.tanh(3.0))
        path = OperatorPath(driver, kind='line', T=3.0)
        self.assertEqual(spectral_flow(path), 1)

    def test_driver_from_json(self):
        self.assertEqual(sorted(DRIVERS),
                         ['affine', 'arctan', 'custom-poly', 'keyframes'])
        with self.assertRaises(ValidationError) as ctx:
            driver_from_json({'family': 'spline'})
        self.assertEqual(ctx.exception.field, 'path.family')

    def test_get_info_round_trip(self):
        info = self.path.get_info()
        rebuilt = OperatorPath.from_json(info)
        assert_allclose(rebuilt.matrix_at(0.3), self.path.matrix_at(0.3))
        self.assertEqual((rebuilt.start, rebuilt.end), (-1.0, 1.0))

    def test_constant_replays_as_affine(self):
        driver = ConstantDriver(np.diag([2.0, -1.0]))
        rebuilt = driver_from_json(driver.get_info())
        self.assertIsInstance(rebuilt, AffineDriver)
        assert_allclose(rebuilt.matrix_at(7.0), driver.matrix_at(7.0))


class OperatorPathTest(FlowTest):
    def test_from_json_kinds(self):
        path = OperatorPath.from_json({'kind': 'forward', 'T': 5.0,
                                       'family': 'arctan', 'shifts': [1.0]})
        self.assertEqual((path.start, path.end), (0.0, 5.0))
        path = OperatorPath.from_json({'kind': 'backward', 'T': 5.0,
                                       'family': 'arctan', 'shifts': [1.0]})
        self.assertEqual((path.start, path.end), (-5.0, 0.0))

    def test_from_json_errors(self):
        with self.assertRaises(ValidationError) as ctx:
            OperatorPath.from_json({'kind': 'circle', 'family': 'arctan'})
        self.assertEqual(ctx.exception.field, 'path.kind')
        with self.assertRaises(ValidationError) as ctx:
            OperatorPath.from_json({'T': -1, 'family': 'arctan'})
        self.assertEqual(ctx.exception.field, 'path.T')
        with self.assertRaises(ValidationError) as ctx:
            OperatorPath.from_json(dict(KEYFRAMES_3,
                                        metric=[[1.0, 2.0, 0.0],
                                                [2.0, 1.0, 0.0],
                                                [0.0, 0.0, 1.0]]))
        self.assertEqual(ctx.exception.field, 'path.metric')

    def test_declared_endpoints(self):
        first = KEYFRAMES_3['matrices'][0]
        data = dict(KEYFRAMES_3, endpoints={'start': first})
        OperatorPath.from_json(data)
        data = dict(KEYFRAMES_3, endpoints={'end': first})
        with self.assertRaises(ValidationError) as ctx:
            OperatorPath.from_json(data)
        self.assertEqual(ctx.exception.field, 'path.end')

    def test_metric_wraps_driver(self):
        metric = [[2.0, 0.5], [0.5, 1.0]]
        path = OperatorPath.from_json({
            'family': 'keyframes', 'times': [-1.0, 1.0],
            'matrices': [[[-1.0, 0.0], [0.0, -1.0]],
                         [[1.0, 0.0], [0.0, -1.0]]],
            'metric': metric})
        self.assertIsInstance(path.driver, SymmetrizedDriver)
        G = np.array(metric)
        assert_allclose(G @ path.matrix_at(1.0), np.diag([1.0, -1.0]),
                        atol=1e-12)
        self.assertEqual(spectral_flow(path), 1)

    def test_singular_endpoint(self):
        path = keyframe_path([[0.0]], [[1.0]])
        self.assertRaises(EndpointNotInvertible, path.validate)
        self.assertRaises(EndpointNotInvertible, spectral_flow, path)

    def test_tail_not_settled(self):
        path = OperatorPath(ArctanDriver([0.0]), kind='line', T=0.5)
        self.assertRaises(TailNotSettled, path.validate)
        path = OperatorPath(AffineDriver(np.eye(1), np.eye(1)),
                            kind='forward', T=1.0)
        self.assertRaises(TailNotSettled, path.validate)

    def test_window_rules(self):
        self.assertRaises(InputError, OperatorPath, ArctanDriver(),
                          kind='line', window=(0.0, 1.0))
        self.assertRaises(InputError, OperatorPath, ArctanDriver(),
                          window=(1.0, 1.0))
        self.assertRaises(InputError, OperatorPath, ArctanDriver(), T=0.0)

    def test_restrict_and_reflect(self):
        left = self.path.restrict(-1.0, 0.0)
        self.assertEqual((left.kind, left.start, left.end),
                         ('finite', -1.0, 0.0))
        reflected = self.path.reflected()
        assert_allclose(reflected.matrix_at(0.25), -self.path.matrix_at(-0.25))
        self.assertEqual(spectral_flow(reflected), spectral_flow(self.path))


class SpectralFlowTest(FlowTest):
    def test_keyframes(self):
        self.assertEqual(spectral_flow(self.path), 2)

    def test_normalization(self):
        path = OperatorPath(ArctanDriver([0.0]), kind='line', T=10.0)
        self.assertEqual(spectral_flow(path), 1)

    def test_forward_uses_asymptote(self):
        path = OperatorPath(ArctanDriver([1.0]), kind='forward', T=10.0)
        self.assertEqual(spectral_flow(path), 1)

    def test_backward(self):
        path = OperatorPath(ArctanDriver([-1.0]), kind='backward', T=10.0)
        self.assertEqual(spectral_flow(path), 1)

    def test_negative_adjoint(self):
        self.assertEqual(spectral_flow(self.path.negative_adjoint()), -2)

    def test_constant(self):
        path = OperatorPath(ConstantDriver(np.diag([1.0, -1.0, 2.0])))
        self.assertEqual(spectral_flow(path), 0)

    def test_direct_sum(self):
        other = OperatorPath(ArctanDriver([0.2, -0.3]))
        summed = direct_sum(self.path, other)
        self.assertEqual(summed.N, 5)
        self.assertEqual(spectral_flow(summed),
                         spectral_flow(self.path) + spectral_flow(other))

    def test_direct_sum_window_mismatch(self):
        other = OperatorPath(ArctanDriver([0.0]), kind='line', T=10.0)
        self.assertRaises(InputError, direct_sum, self.path, other)

    def test_concatenate(self):
        left = self.path.restrict(-1.0, 0.0)
        right = self.path.restrict(0.0, 1.0)
        glued = concatenate(left, right)
        assert_allclose(glued.matrix_at(0.5), self.path.matrix_at(0.5))
        self.assertEqual(spectral_flow(glued),
                         spectral_flow(left) + spectral_flow(right))

    def test_concatenate_mismatch(self):
        left = keyframe_path([[-1.0]], [[1.0]], window=(-1.0, 0.0))
        right = keyframe_path([[2.0]], [[3.0]], window=(0.0, 1.0))
        self.assertRaises(MismatchAtJunction, concatenate, left, right)

    def test_homotopy(self):
        straight = keyframe_path(self.path.matrix_at(-1.0),
                                 self.path.matrix_at(1.0))
        for r in np.linspace(0.0, 1.0, 5):
            member = linear_homotopy(self.path, straight, r)
            self.assertEqual(spectral_flow(member), 2)
        halfway = linear_homotopy(self.path, straight, 0.5)
        assert_allclose(halfway.matrix_at(0.0),
                        0.5 * (self.path.matrix_at(0.0)
                               + straight.matrix_at(0.0)))


class BranchTraceTest(FlowTest):
    def test_net_crossings_match_flow(self):
        trace = branch_trace(self.path, 42)
        self.assertEqual(trace.net_crossings, 2)
        self.assertFalse(trace.ambiguous)
        self.assertEqual(trace.labels, (-3, -2, -1, 0))
        self.assertEqual(trace.branch_values.shape, (42, 4))

    def test_crossing_direction(self):
        path = OperatorPath(ArctanDriver([0.3]), kind='line', T=5.0)
        trace = branch_trace(path, 100)
        self.assertEqual(len(trace.crossings), 1)
        crossing = trace.crossings[0]
        self.assertEqual(crossing.direction, 1)
        self.assertAlmostEqual(crossing.time, 0.3, places=2)

    def test_rows(self):
        trace = branch_trace(self.path, 5)
        rows = list(trace.rows())
        self.assertEqual(len(rows), 5 * 4)
        self.assertEqual(rows[0][0], -1.0)

    def test_too_few_points(self):
        self.assertRaises(InputError, branch_trace, self.path, 1)

    def test_tangential_crossings_cancel(self):
        # a(s) = s^2 - 1/4 dips below zero on (-1/2, 1/2)
        driver = PolynomialDriver([[[-0.25]], [[0.0]], [[1.0]]])
        path = OperatorPath(driver, window=(-1.0, 1.0))
        trace = branch_trace(path, 42)
        self.assertEqual([c.direction for c in trace.crossings], [-1, 1])
        self.assertAlmostEqual(trace.crossings[0].time, -0.5, places=2)
        self.assertAlmostEqual(trace.crossings[1].time, 0.5, places=2)
        self.assertEqual(trace.net_crossings, 0)
        self.assertEqual(spectral_flow(path), 0)

    @seed(9)
    @hypothesis_settings(max_examples=20, deadline=None)
    @given(value=st.integers(min_value=0, max_value=2 ** 32))
    def test_branches_are_spectrum_with_zero(self, value):
        path = generators.random_path(generators.rng_for(value), 3)
        trace = branch_trace(path, 9)
        for j, t in enumerate(trace.grid):
            expected = np.sort(np.append(np.linalg.eigvalsh(
                path.matrix_at(t)), 0.0))
            assert_allclose(trace.branch_values[j], expected, atol=1e-10)
