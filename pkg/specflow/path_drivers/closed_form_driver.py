import math

import numpy as np

from specflow.exceptions import ValidationError
from specflow.path_drivers.base import BasePathDriver
from specflow.path_drivers.keyframe_driver import parse_matrix


class ArctanDriver(BasePathDriver):
    """ A(s) = diag(arctan(s - c_1), ..., arctan(s - c_N)).

        Every diagonal entry crosses zero once, upwards, at its shift c_nu.
        With the single shift 0 this is the normalization path.
    """
    family_id = 'arctan'

    def __init__(self, shifts=(0.0,), *args, **kwargs):
        super(ArctanDriver, self).__init__(*args, **kwargs)
        shifts = np.array(shifts, dtype=float).ravel()
        if shifts.size < 1:
            raise ValidationError('path.shifts', 'needs at least one shift')
        shifts.flags.writeable = False
        self.shifts = shifts

    @classmethod
    def from_json(cls, data, field='path'):
        try:
            return cls(data.get('shifts', [0.0]))
        except (TypeError, ValueError):
            raise ValidationError(field + '.shifts', 'not a list of numbers')

    @property
    def N(self):
        return self.shifts.size

    def matrix_at(self, s):
        return np.diag(np.arctan(s - self.shifts))

    def asymptote(self, sign):
        return np.eye(self.N) * (math.pi / 2.0) * sign

    def tail_deviation(self, T, sign):
        # Each entry approaches its limit monotonically.
        return float(np.max(math.pi / 2.0
                            - sign * np.arctan(sign * T - self.shifts)))

    def get_info(self):
        return {'family': self.family_id, 'shifts': self.shifts.tolist()}


class PolynomialDriver(BasePathDriver):
    """ A(s) = sum_k s^k C_k with symmetric coefficient matrices. """
    family_id = 'custom-poly'

    def __init__(self, coeffs, *args, **kwargs):
        super(PolynomialDriver, self).__init__(*args, **kwargs)
        coeffs = np.array([np.asarray(c, dtype=float) for c in coeffs])
        if coeffs.ndim != 3 or coeffs.shape[0] < 1:
            raise ValidationError('path.coeffs', 'expected a list of matrices')
        coeffs.flags.writeable = False
        self.coeffs = coeffs

    @classmethod
    def from_json(cls, data, field='path'):
        raw = data.get('coeffs')
        if not isinstance(raw, list) or not raw:
            raise ValidationError(field + '.coeffs', 'expected a list')
        first = parse_matrix(raw[0], field + '.coeffs[0]')
        return cls([first] + [
            parse_matrix(c, '%s.coeffs[%d]' % (field, k), first.shape[0])
            for k, c in enumerate(raw[1:], 1)])

    @property
    def N(self):
        return self.coeffs.shape[1]

    def matrix_at(self, s):
        result = np.zeros((self.N, self.N))
        for C in self.coeffs[::-1]:
            result = result * s + C
        return result

    @property
    def is_constant(self):
        return not np.any(self.coeffs[1:])

    def asymptote(self, sign):
        if self.is_constant:
            return self.coeffs[0].copy()
        return None

    def tail_deviation(self, T, sign):
        return 0.0 if self.is_constant else float('inf')

    def get_info(self):
        return {'family': self.family_id, 'coeffs': self.coeffs.tolist()}


class AffineDriver(PolynomialDriver):
    """ A(s) = A0 + s A1 """
    family_id = 'affine'

    def __init__(self, A0, A1, *args, **kwargs):
        super(AffineDriver, self).__init__([A0, A1], *args, **kwargs)

    @classmethod
    def from_json(cls, data, field='path'):
        if 'A0' not in data:
            raise ValidationError(field + '.A0', 'required')
        A0 = parse_matrix(data['A0'], field + '.A0')
        A1 = parse_matrix(data.get('A1', np.zeros_like(A0)), field + '.A1',
                          A0.shape[0])
        return cls(A0, A1)

    def get_info(self):
        return {'family': self.family_id, 'A0': self.coeffs[0].tolist(),
                'A1': self.coeffs[1].tolist()}


class CallableDriver(BasePathDriver):
    """ In-code family given by a function of s.

        Continuity is the caller's responsibility. Asymptotes are optional
        and are used as given.
    """
    family_id = 'callable'

    def __init__(self, func, N, asymptotes=None, *args, **kwargs):
        super(CallableDriver, self).__init__(*args, **kwargs)
        self.func = func
        self._N = int(N)
        self.asymptotes = dict(asymptotes or {})

    @property
    def N(self):
        return self._N

    def matrix_at(self, s):
        return np.array(self.func(s), dtype=float).reshape(self._N, self._N)

    def asymptote(self, sign):
        limit = self.asymptotes.get(1 if sign > 0 else -1)
        return None if limit is None else np.array(limit, dtype=float)
