import logging
import math

import numpy as np

from specflow import settings
from specflow.exceptions import ValidationError
from specflow.path_drivers.base import BasePathDriver


logger = logging.getLogger(__name__)


def parse_matrix(value, field, N=None):
    """ Reads a dense row-major matrix from scenario data.

        Accepts nested lists or a flat list of N*N numbers. The matrix must
        be square and symmetric.
    """
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(field, 'not a numeric array')
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim == 1:
        n = int(round(math.sqrt(matrix.size)))
        if n * n != matrix.size:
            raise ValidationError(field, 'flat array of length %d is not '
                                  'square' % matrix.size)
        matrix = matrix.reshape(n, n)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(field, 'matrix must be square, got shape %s'
                              % (matrix.shape,))
    if N is not None and matrix.shape[0] != N:
        raise ValidationError(field, 'expected %dx%d, got %dx%d'
                              % (N, N, matrix.shape[0], matrix.shape[1]))
    scale = max(np.max(np.abs(matrix)), np.finfo(float).tiny)
    if np.max(np.abs(matrix - matrix.T)) > settings.SYMMETRY_TOL * scale:
        raise ValidationError(field, 'matrix is not symmetric')
    return matrix


class KeyframeDriver(BasePathDriver):
    """ Piecewise linear interpolation of symmetric keyframes.

        Outside the keyframe times the path is constant, so the first and
        last keyframes are the asymptotic operators.
    """
    family_id = 'keyframes'

    def __init__(self, times, matrices, *args, **kwargs):
        super(KeyframeDriver, self).__init__(*args, **kwargs)
        times = np.array(times, dtype=float)
        matrices = np.array([np.asarray(m, dtype=float) for m in matrices])
        if times.ndim != 1 or times.size < 1:
            raise ValidationError('path.times', 'needs at least one time')
        if np.any(np.diff(times) <= 0):
            raise ValidationError('path.times', 'must be strictly increasing')
        if matrices.shape[0] != times.size:
            raise ValidationError('path.matrices', 'expected %d matrices, got '
                                  '%d' % (times.size, matrices.shape[0]))
        times.flags.writeable = False
        matrices.flags.writeable = False
        self.times = times
        self.matrices = matrices

    @classmethod
    def from_json(cls, data, field='path'):
        if 'times' not in data:
            raise ValidationError(field + '.times', 'required')
        if 'matrices' not in data:
            raise ValidationError(field + '.matrices', 'required')
        raw = data['matrices']
        if not isinstance(raw, list) or not raw:
            raise ValidationError(field + '.matrices', 'expected a list')
        first = parse_matrix(raw[0], field + '.matrices[0]')
        matrices = [first] + [
            parse_matrix(m, '%s.matrices[%d]' % (field, k), first.shape[0])
            for k, m in enumerate(raw[1:], 1)]
        return cls(data['times'], matrices)

    @property
    def N(self):
        return self.matrices.shape[1]

    def matrix_at(self, s):
        times = self.times
        if s <= times[0]:
            return self.matrices[0].copy()
        if s >= times[-1]:
            return self.matrices[-1].copy()
        k = int(np.searchsorted(times, s, side='right')) - 1
        w = (s - times[k]) / (times[k + 1] - times[k])
        return (1.0 - w) * self.matrices[k] + w * self.matrices[k + 1]

    def asymptote(self, sign):
        return self.matrices[-1 if sign > 0 else 0].copy()

    def tail_deviation(self, T, sign):
        # Along each linear segment the deviation is convex, so its supremum
        # over the tail sits at T or at a keyframe.
        limit = self.asymptote(sign)
        points = [sign * T] + [t for t in self.times if sign * t >= T]
        return max(np.linalg.norm(self.matrix_at(t) - limit, 2)
                   for t in points)

    def get_info(self):
        return {'family': self.family_id,
                'times': self.times.tolist(),
                'matrices': self.matrices.tolist()}
