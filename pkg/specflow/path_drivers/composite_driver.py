""" Drivers built out of other drivers: direct sums, concatenations,
    reflections, adjoints and linear homotopies.
"""
import numpy as np
from scipy import linalg

from specflow.exceptions import InputError
from specflow.path_drivers.base import BasePathDriver


class DirectSumDriver(BasePathDriver):
    family_id = 'direct-sum'

    def __init__(self, first, second, *args, **kwargs):
        super(DirectSumDriver, self).__init__(*args, **kwargs)
        self.parts = (first, second)

    @property
    def N(self):
        return self.parts[0].N + self.parts[1].N

    def matrix_at(self, s):
        return linalg.block_diag(*[p.matrix_at(s) for p in self.parts])

    def asymptote(self, sign):
        limits = [p.asymptote(sign) for p in self.parts]
        if any(limit is None for limit in limits):
            return None
        return linalg.block_diag(*limits)

    def tail_deviation(self, T, sign):
        return max(p.tail_deviation(T, sign) for p in self.parts)

    def get_info(self):
        return {'family': self.family_id,
                'parts': [p.get_info() for p in self.parts]}


class ConcatenatedDriver(BasePathDriver):
    """ Left driver for s < junction, right driver from the junction on. """
    family_id = 'concatenation'

    def __init__(self, left, right, junction=0.0, *args, **kwargs):
        super(ConcatenatedDriver, self).__init__(*args, **kwargs)
        if left.N != right.N:
            raise InputError('Cannot concatenate N=%d with N=%d'
                             % (left.N, right.N))
        self.left = left
        self.right = right
        self.junction = float(junction)

    @property
    def N(self):
        return self.left.N

    def matrix_at(self, s):
        if s < self.junction:
            return self.left.matrix_at(s)
        return self.right.matrix_at(s)

    def asymptote(self, sign):
        return (self.right if sign > 0 else self.left).asymptote(sign)

    def tail_deviation(self, T, sign):
        if sign * self.junction > T:
            return BasePathDriver.tail_deviation(self, T, sign)
        return (self.right if sign > 0 else self.left).tail_deviation(T, sign)

    def get_info(self):
        return {'family': self.family_id, 'junction': self.junction,
                'left': self.left.get_info(), 'right': self.right.get_info()}


class ReflectedDriver(BasePathDriver):
    """ s -> -A(-s), the forward path attached to a backward one. """
    family_id = 'reflection'

    def __init__(self, base, *args, **kwargs):
        super(ReflectedDriver, self).__init__(*args, **kwargs)
        self.base = base

    @property
    def N(self):
        return self.base.N

    def matrix_at(self, s):
        return -self.base.matrix_at(-s)

    def asymptote(self, sign):
        limit = self.base.asymptote(-sign)
        return None if limit is None else -limit

    def tail_deviation(self, T, sign):
        return self.base.tail_deviation(T, -sign)

    def get_info(self):
        return {'family': self.family_id, 'base': self.base.get_info()}


class AdjointDriver(BasePathDriver):
    """ s -> -A(s)^*, with the adjoint taken in the H_0 metric. """
    family_id = 'negative-adjoint'

    def __init__(self, base, metric=None, *args, **kwargs):
        super(AdjointDriver, self).__init__(*args, **kwargs)
        self.base = base
        self.metric = metric

    @property
    def N(self):
        return self.base.N

    def _adjoint(self, matrix):
        if self.metric is None:
            return -matrix.T
        return -linalg.solve(self.metric, matrix.T @ self.metric)

    def matrix_at(self, s):
        return self._adjoint(self.base.matrix_at(s))

    def asymptote(self, sign):
        limit = self.base.asymptote(sign)
        return None if limit is None else self._adjoint(limit)

    def tail_deviation(self, T, sign):
        return self.base.tail_deviation(T, sign)

    def get_info(self):
        return {'family': self.family_id, 'base': self.base.get_info()}


class HomotopyDriver(BasePathDriver):
    """ (1 - r) A_0(s) + r A_1(s) """
    family_id = 'homotopy'

    def __init__(self, start, end, r, *args, **kwargs):
        super(HomotopyDriver, self).__init__(*args, **kwargs)
        if start.N != end.N:
            raise InputError('Cannot interpolate N=%d with N=%d'
                             % (start.N, end.N))
        self.start = start
        self.end = end
        self.r = float(r)

    @property
    def N(self):
        return self.start.N

    def matrix_at(self, s):
        return ((1.0 - self.r) * self.start.matrix_at(s)
                + self.r * self.end.matrix_at(s))

    def asymptote(self, sign):
        a, b = self.start.asymptote(sign), self.end.asymptote(sign)
        if a is None or b is None:
            return None
        return (1.0 - self.r) * a + self.r * b

    def tail_deviation(self, T, sign):
        return ((1.0 - self.r) * self.start.tail_deviation(T, sign)
                + self.r * self.end.tail_deviation(T, sign))

    def get_info(self):
        return {'family': self.family_id, 'r': self.r,
                'start': self.start.get_info(), 'end': self.end.get_info()}


class ConstantDriver(BasePathDriver):
    """ s -> A for a fixed matrix A.

        Serializes as an affine path with A1 = 0 so scenarios built from it
        can be read back and replayed.
    """
    family_id = 'constant'

    def __init__(self, matrix, *args, **kwargs):
        super(ConstantDriver, self).__init__(*args, **kwargs)
        matrix = np.array(matrix, dtype=float)
        matrix.flags.writeable = False
        self.matrix = matrix

    @property
    def N(self):
        return self.matrix.shape[0]

    def matrix_at(self, s):
        return self.matrix.copy()

    def asymptote(self, sign):
        return self.matrix.copy()

    def tail_deviation(self, T, sign):
        return 0.0

    def get_info(self):
        return {'family': 'affine', 'A0': self.matrix.tolist(),
                'A1': np.zeros_like(self.matrix).tolist()}


class SymmetrizedDriver(BasePathDriver):
    """ s -> G^-1 S(s) for a symmetric family S and an SPD metric G.

        The result is symmetric in the H_0 metric G, which makes this the
        scenario form of a symmetrizable path.
    """

    def __init__(self, base, metric, *args, **kwargs):
        super(SymmetrizedDriver, self).__init__(*args, **kwargs)
        metric = np.array(metric, dtype=float)
        if metric.shape != (base.N, base.N):
            raise InputError('Metric shape %s does not match N=%d'
                             % (metric.shape, base.N))
        metric.flags.writeable = False
        self.base = base
        self.metric = metric
        self._factor = linalg.cho_factor(metric)

    @property
    def family_id(self):
        return self.base.family_id

    @property
    def N(self):
        return self.base.N

    def matrix_at(self, s):
        return linalg.cho_solve(self._factor, self.base.matrix_at(s))

    def asymptote(self, sign):
        limit = self.base.asymptote(sign)
        return None if limit is None else linalg.cho_solve(self._factor, limit)

    def tail_deviation(self, T, sign):
        scale = np.linalg.norm(linalg.cho_solve(self._factor,
                                                np.eye(self.N)), 2)
        return scale * self.base.tail_deviation(T, sign)

    def get_info(self):
        info = self.base.get_info()
        info['metric'] = self.metric.tolist()
        return info
