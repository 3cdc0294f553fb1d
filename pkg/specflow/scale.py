""" Truncated model Hilbert scale.

    A growth function h(1) <= ... <= h(N) defines the weighted sequence
    spaces l2_{h^r}. Vectors are kept as coefficients in the scale basis, so
    the inclusions between levels are the identity on coefficients and
    every operation below is a diagonal formula.
"""
import logging
import math

import numpy as np

from specflow.exceptions import InputError, ValidationError


logger = logging.getLogger(__name__)


class GrowthFunction(object):
    """ Monotone positive weights h(1..N) of a truncated scale. """

    def __init__(self, values, kind='explicit', param=None):
        values = np.array(values, dtype=float).ravel()
        if values.size < 1:
            raise InputError('A growth function needs at least one value')
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise InputError('Growth function values must be positive: %s'
                             % values.tolist())
        if np.any(np.diff(values) < 0):
            raise InputError('Growth function values must be nondecreasing: '
                             '%s' % values.tolist())
        values.flags.writeable = False
        self.values = values
        self.kind = kind
        self.param = param

    @classmethod
    def poly(cls, p, N):
        """ h(nu) = nu^p """
        nu = np.arange(1, int(N) + 1, dtype=float)
        return cls(nu ** p, kind='poly', param=float(p))

    @classmethod
    def geom(cls, base, N):
        """ h(nu) = base^nu """
        if base < 1:
            raise InputError('Geometric growth needs base >= 1, got %s' % base)
        nu = np.arange(1, int(N) + 1, dtype=float)
        return cls(float(base) ** nu, kind='geom', param=float(base))

    @classmethod
    def from_json(cls, data, field='growth'):
        """ Builds a growth function from its scenario form.

            :param data: dict with ``kind`` and either ``param`` and ``N``
            or ``values``.
            :param field: dotted prefix used in validation errors.
        """
        if not isinstance(data, dict):
            raise ValidationError(field, 'expected an object')
        kind = data.get('kind', 'poly')
        try:
            if kind == 'explicit':
                if 'values' not in data:
                    raise ValidationError(field + '.values', 'required')
                return cls(data['values'])
            if 'N' not in data:
                raise ValidationError(field + '.N', 'required')
            N = int(data['N'])
            if N < 1:
                raise ValidationError(field + '.N', 'must be at least 1')
            if kind == 'poly':
                return cls.poly(float(data.get('param', 1.0)), N)
            if kind == 'geom':
                return cls.geom(float(data.get('param', 2.0)), N)
        except InputError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(field, '%s' % e)
        raise ValidationError(field + '.kind', 'unknown kind %r' % kind)

    @property
    def N(self):
        return self.values.size

    @property
    def kappa(self):
        """ Eigenvalues 1/h(nu) of the growth operator. """
        return 1.0 / self.values

    @property
    def largest(self):
        return float(self.values[-1])

    def weights(self, r):
        return self.values ** r

    def get_info(self):
        info = {'kind': self.kind, 'N': self.N}
        if self.kind == 'explicit':
            info['values'] = self.values.tolist()
        else:
            info['param'] = self.param
        return info

    def __eq__(self, other):
        return (isinstance(other, GrowthFunction)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return 'GrowthFunction(%s, N=%d)' % (self.kind, self.N)


class ScaleVector(object):
    """ Coordinates of a vector in the scale basis. """

    def __init__(self, coeffs):
        coeffs = np.array(coeffs, dtype=float).ravel()
        coeffs.flags.writeable = False
        self.coeffs = coeffs

    @property
    def N(self):
        return self.coeffs.size

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return 'ScaleVector(%s)' % self.coeffs.tolist()


def as_coeffs(u):
    if isinstance(u, ScaleVector):
        return u.coeffs
    return np.asarray(u, dtype=float).ravel()


def _check_dims(gf, *vectors):
    n = vectors[0].size
    for v in vectors[1:]:
        if v.size != n:
            raise InputError('Dimension mismatch: %d != %d' % (n, v.size))
    if gf is not None and gf.N != n:
        raise InputError('Dimension mismatch: vector has %d coefficients, '
                         'growth function has %d' % (n, gf.N))


def r_inner(u, v, r, gf):
    """ Pair r-inner product sum_nu h(nu)^r u_nu v_nu. """
    u, v = as_coeffs(u), as_coeffs(v)
    _check_dims(gf, u, v)
    return math.fsum(gf.weights(r) * u * v)


def r_norm(u, r, gf):
    return math.sqrt(max(r_inner(u, u, r, gf), 0.0))


def shift_isometry(u, r, s, gf):
    """ Maps level r isometrically onto level s.

        Component nu is multiplied by h(nu)^((r - s) / 2); the inverse map is
        ``shift_isometry(., s, r, gf)``.
    """
    u = as_coeffs(u)
    _check_dims(gf, u)
    return ScaleVector(u * gf.weights((r - s) / 2.0))


def flat_apply(u, v):
    """ The pairing (flat u)(v) given by the 0-inner product. """
    u, v = as_coeffs(u), as_coeffs(v)
    _check_dims(None, u, v)
    return math.fsum(u * v)


def dual_norm(u, r, gf):
    """ sup |flat_apply(u, v)| over the unit sphere of level r.

        The supremum is attained at v proportional to h^-r u, which makes
        the value equal to the (-r)-norm of u.
    """
    u = as_coeffs(u)
    _check_dims(gf, u)
    v = gf.weights(-r) * u
    norm = r_norm(v, r, gf)
    if norm == 0.0:
        return 0.0
    return abs(flat_apply(u, v / norm))
