import logging
import math
import unittest

import numpy as np
from hypothesis import given, seed, settings as hypothesis_settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from specflow.exceptions import InputError, ValidationError
from specflow.scale import (GrowthFunction, ScaleVector, as_coeffs,
                            dual_norm, flat_apply, r_inner, r_norm,
                            shift_isometry)


N = 5
coefficients = arrays(np.float64, (N,),
                      elements=st.floats(min_value=-100.0, max_value=100.0))
levels = st.floats(min_value=-2.0, max_value=2.0)


class ScaleTest(unittest.TestCase):
    def setUp(self):
        # Disable logging when running tests
        logging.disable(logging.CRITICAL)
        self.gf = GrowthFunction.poly(1.0, N)


class GrowthFunctionTest(ScaleTest):
    def test_poly_values(self):
        assert_allclose(GrowthFunction.poly(2.0, 4).values, [1, 4, 9, 16])

    def test_geom_values(self):
        gf = GrowthFunction.geom(2.0, 3)
        assert_allclose(gf.values, [2, 4, 8])
        assert_allclose(gf.kappa, [0.5, 0.25, 0.125])

    def test_geom_base_below_one(self):
        self.assertRaises(InputError, GrowthFunction.geom, 0.5, 3)

    def test_rejects_decreasing_values(self):
        self.assertRaises(InputError, GrowthFunction, [1.0, 3.0, 2.0])

    def test_rejects_nonpositive_values(self):
        self.assertRaises(InputError, GrowthFunction, [0.0, 1.0])

    def test_from_json(self):
        gf = GrowthFunction.from_json({'kind': 'poly', 'param': 1.0, 'N': 3})
        self.assertEqual(gf, GrowthFunction.poly(1.0, 3))
        gf = GrowthFunction.from_json({'kind': 'explicit',
                                       'values': [1, 2, 2]})
        assert_allclose(gf.values, [1, 2, 2])

    def test_from_json_reports_field(self):
        with self.assertRaises(ValidationError) as ctx:
            GrowthFunction.from_json({'kind': 'poly'}, 'growth')
        self.assertEqual(ctx.exception.field, 'growth.N')
        with self.assertRaises(ValidationError) as ctx:
            GrowthFunction.from_json({'kind': 'cubic', 'N': 2})
        self.assertEqual(ctx.exception.field, 'growth.kind')
        with self.assertRaises(ValidationError) as ctx:
            GrowthFunction.from_json({'kind': 'explicit', 'values': [2, 1]})
        self.assertEqual(ctx.exception.field, 'growth')

    def test_get_info_round_trip(self):
        gf = GrowthFunction.geom(3.0, 4)
        self.assertEqual(GrowthFunction.from_json(gf.get_info()), gf)


class NormTest(ScaleTest):
    def test_r_norm_weights(self):
        u = ScaleVector([1.0, 1.0, 0.0, 0.0, 2.0])
        self.assertAlmostEqual(r_norm(u, 0.0, self.gf), math.sqrt(6.0))
        self.assertAlmostEqual(r_norm(u, 1.0, self.gf), math.sqrt(23.0))

    def test_dimension_mismatch(self):
        self.assertRaises(InputError, r_norm, [1.0, 2.0], 0.0, self.gf)
        self.assertRaises(InputError, flat_apply, [1.0], [1.0, 2.0])

    def test_as_coeffs(self):
        assert_allclose(as_coeffs(ScaleVector([1, 2])), [1.0, 2.0])
        assert_allclose(as_coeffs([[1], [2]]), [1.0, 2.0])

    @seed(1)
    @hypothesis_settings(max_examples=50, deadline=None)
    @given(u=coefficients, r=levels, s=levels)
    def test_shift_isometry_preserves_norm(self, u, r, s):
        shifted = shift_isometry(u, r, s, self.gf)
        assert_allclose(r_norm(shifted, s, self.gf), r_norm(u, r, self.gf),
                        rtol=1e-9, atol=1e-9)
        back = shift_isometry(shifted, s, r, self.gf)
        assert_allclose(back.coeffs, u, rtol=1e-9, atol=1e-9)

    @seed(2)
    @hypothesis_settings(max_examples=50, deadline=None)
    @given(u=coefficients, r=levels)
    def test_dual_norm_is_negative_level(self, u, r):
        assert_allclose(dual_norm(u, r, self.gf), r_norm(u, -r, self.gf),
                        rtol=1e-9, atol=1e-9)

    @seed(3)
    @hypothesis_settings(max_examples=50, deadline=None)
    @given(u=coefficients, v=coefficients)
    def test_inner_product_symmetric(self, u, v):
        self.assertAlmostEqual(r_inner(u, v, 0.5, self.gf),
                               r_inner(v, u, 0.5, self.gf))

    def test_inclusions_are_monotone(self):
        u = np.arange(1.0, N + 1)
        norms = [r_norm(u, r, self.gf) for r in (0.0, 0.5, 1.0)]
        self.assertEqual(norms, sorted(norms))

    @seed(4)
    @hypothesis_settings(max_examples=50, deadline=None)
    @given(u=coefficients, v=coefficients, r=levels)
    def test_flat_factors_through_level_zero(self, u, v, r):
        lowered = shift_isometry(u, -r, 0.0, self.gf)
        raised = shift_isometry(v, r, 0.0, self.gf)
        assert_allclose(r_inner(lowered, raised, 0.0, self.gf),
                        flat_apply(u, v), rtol=1e-9, atol=1e-6)
