""" Operator paths and their spectral flow.

    The spectral flow is evaluated as the difference of negative eigenvalue
    counts at the two ends of the path. At finite N the continuous sorted
    eigenvalue branches with an inserted zero branch give the same integer,
    and the count does not care how (or how often) an eigenvalue touches
    zero in between. Branch traces are kept as a diagnostic.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from specflow import settings
from specflow.exceptions import (EndpointNotInvertible, InputError,
                                 JunctionNotInvertible, MismatchAtJunction,
                                 TailNotSettled, ValidationError)
from specflow.hessian import PairOperator
from specflow.path_drivers import driver_from_json
from specflow.path_drivers.composite_driver import (AdjointDriver,
                                                    ConcatenatedDriver,
                                                    DirectSumDriver,
                                                    HomotopyDriver,
                                                    ReflectedDriver,
                                                    SymmetrizedDriver)
from specflow.path_drivers.keyframe_driver import parse_matrix
from specflow.scale import GrowthFunction


logger = logging.getLogger(__name__)

KINDS = ('finite', 'forward', 'backward', 'line')

# Sides of the window on which the path must have settled onto its
# asymptotic operator.
TAIL_SIDES = {'finite': (), 'forward': (1,), 'backward': (-1,),
              'line': (-1, 1)}


class OperatorPath(object):
    """ A continuous path s -> A(s) over one of the four interval kinds.

        Infinite kinds are handled on a window whose tail radius is ``T``:
        forward paths live on [0, T], backward paths on [-T, 0] and line
        paths on [-T, T]; beyond the window the path must stay within
        ``tail_epsilon`` of its asymptotic operator.
    """

    def __init__(self, driver, kind='finite', T=1.0, window=None, gf=None,
                 metric=None, declared=None):
        if kind not in KINDS:
            raise InputError('Unknown interval kind %r' % kind)
        T = float(T)
        if not T > 0:
            raise InputError('Horizon T must be positive, got %s' % T)
        if kind == 'finite':
            start, end = window if window is not None else (-T, T)
        elif window is not None:
            raise InputError('Only finite paths take an explicit window')
        else:
            start, end = {'forward': (0.0, T), 'backward': (-T, 0.0),
                          'line': (-T, T)}[kind]
        if not float(start) < float(end):
            raise InputError('Empty window [%s, %s]' % (start, end))
        if gf is None:
            gf = GrowthFunction.poly(1.0, driver.N)
        elif gf.N != driver.N:
            raise InputError('Growth function has N=%d, path has N=%d'
                             % (gf.N, driver.N))
        self.driver = driver
        self.kind = kind
        self.T = T
        self.start = float(start)
        self.end = float(end)
        self.gf = gf
        self.metric = metric
        if declared:
            self._check_declared(declared)

    @classmethod
    def from_json(cls, data, gf=None, field='path'):
        """ Builds a path from its scenario form.

            Keys: ``kind``, ``T``, optional ``start``/``end`` for finite
            paths, the family data read by the path driver, and optional
            declared ``endpoints`` / ``asymptotes`` matrices.
        """
        if not isinstance(data, dict):
            raise ValidationError(field, 'expected an object')
        kind = data.get('kind', 'finite')
        if kind not in KINDS:
            raise ValidationError(field + '.kind', 'unknown kind %r' % kind)
        try:
            T = float(data.get('T', 1.0))
        except (TypeError, ValueError):
            raise ValidationError(field + '.T', 'not a number')
        if not T > 0:
            raise ValidationError(field + '.T', 'must be positive')
        window = None
        if kind == 'finite' and ('start' in data or 'end' in data):
            window = (float(data.get('start', -T)), float(data.get('end', T)))
            if not window[0] < window[1]:
                raise ValidationError(field + '.end', 'must exceed start')
        driver = driver_from_json(data, field)
        metric = None
        if data.get('metric') is not None:
            metric = parse_matrix(data['metric'], field + '.metric', driver.N)
            try:
                driver = SymmetrizedDriver(driver, metric)
            except linalg.LinAlgError:
                raise ValidationError(field + '.metric',
                                      'matrix is not positive definite')
        if gf is not None and gf.N != driver.N:
            raise ValidationError(field, 'family has N=%d but growth has N=%d'
                                  % (driver.N, gf.N))
        declared = {}
        for group in ('endpoints', 'asymptotes'):
            for key, value in (data.get(group) or {}).items():
                declared[key] = parse_matrix(value, '%s.%s.%s'
                                             % (field, group, key), driver.N)
        return cls(driver, kind=kind, T=T, window=window, gf=gf,
                   metric=metric, declared=declared)

    def _check_declared(self, declared):
        for key, matrix in declared.items():
            if key == 'start':
                sampled = self.matrix_at(self.start)
            elif key == 'end':
                sampled = self.matrix_at(self.end)
            elif key in ('+', '-'):
                sampled = self.driver.asymptote(1 if key == '+' else -1)
            else:
                raise ValidationError('path.' + key,
                                      'unknown declared operator')
            if sampled is None or np.max(np.abs(sampled - matrix)) > \
                    settings.JUNCTION_TOL:
                raise ValidationError('path.' + key, 'declared operator does '
                                      'not match the sampler')

    @property
    def N(self):
        return self.driver.N

    @property
    def length(self):
        return self.end - self.start

    def matrix_at(self, s):
        return self.driver.matrix_at(s)

    def at(self, s):
        return PairOperator(self.driver.matrix_at(s), gf=self.gf,
                            metric=self.metric)

    @cached_property
    def start_operator(self):
        return self.at(self.start)

    @cached_property
    def end_operator(self):
        return self.at(self.end)

    def asymptotic_operator(self, sign):
        limit = self.driver.asymptote(sign)
        if limit is None:
            return None
        return PairOperator(limit, gf=self.gf, metric=self.metric)

    def tail_epsilon(self, sign):
        return self.driver.tail_deviation(self.T, sign)

    def validate(self):
        """ Checks the defining conditions of the path class.

            Raises EndpointNotInvertible or TailNotSettled.
        """
        for s, op in ((self.start, self.start_operator),
                      (self.end, self.end_operator)):
            if not op.invertible:
                raise EndpointNotInvertible(
                    'Operator at s=%s is not invertible (margin %.3e)'
                    % (s, op.inv_margin))
        for sign in TAIL_SIDES[self.kind]:
            limit = self.asymptotic_operator(sign)
            if limit is None:
                raise TailNotSettled('Path has no asymptotic operator at '
                                     '%sinfinity' % ('+' if sign > 0 else '-'))
            if not limit.invertible:
                raise EndpointNotInvertible('Asymptotic operator at '
                                            '%sinfinity is not invertible'
                                            % ('+' if sign > 0 else '-'))
            epsilon = self.tail_epsilon(sign)
            if not epsilon < limit.inv_margin / 2.0:
                raise TailNotSettled(
                    'Tail deviation %.3e at T=%s is not below half the '
                    'asymptotic margin %.3e' % (epsilon, self.T,
                                                limit.inv_margin))

    def restrict(self, start, end):
        """ The finite path obtained by restricting to [start, end]. """
        return OperatorPath(self.driver, kind='finite', T=self.T,
                            window=(start, end), gf=self.gf,
                            metric=self.metric)

    def with_horizon(self, T):
        window = None
        if self.kind == 'finite':
            window = (-float(T), float(T))
        return OperatorPath(self.driver, kind=self.kind, T=T, window=window,
                            gf=self.gf, metric=self.metric)

    def reflected(self):
        """ The path s -> -A(-s) over the mirrored interval. """
        kind = {'forward': 'backward', 'backward': 'forward'}.get(self.kind,
                                                                  self.kind)
        window = (-self.end, -self.start) if kind == 'finite' else None
        return OperatorPath(ReflectedDriver(self.driver), kind=kind, T=self.T,
                            window=window, gf=self.gf, metric=self.metric)

    def negative_adjoint(self):
        """ The path s -> -A(s)^* over the same window. """
        window = (self.start, self.end) if self.kind == 'finite' else None
        return OperatorPath(AdjointDriver(self.driver, self.metric),
                            kind=self.kind, T=self.T, window=window,
                            gf=self.gf, metric=self.metric)

    def get_info(self):
        info = {'kind': self.kind, 'T': self.T}
        if self.kind == 'finite':
            info['start'] = self.start
            info['end'] = self.end
        info.update(self.driver.get_info())
        return info

    def __repr__(self):
        return 'OperatorPath(%s, [%s, %s], N=%d)' % (
            self.kind, self.start, self.end, self.N)


def spectral_flow(path):
    """ Net number of eigenvalues moving from negative to positive.

        Finite and line paths count on their window; forward paths use A(0)
        and the asymptotic operator at +infinity; backward paths are
        evaluated as the forward path s -> -A(-s).
    """
    path.validate()
    if path.kind == 'backward':
        return spectral_flow(path.reflected())
    if path.kind == 'forward':
        end = path.asymptotic_operator(1)
    else:
        end = path.end_operator
    return path.start_operator.n_negative - end.n_negative


@dataclass(frozen=True)
class Crossing:
    time: float
    direction: int
    eigen_index: int
    ambiguous: bool


@dataclass(frozen=True)
class BranchTrace:
    """ Sampled eigenvalue branches of a path.

        ``eigenvalues`` holds the sorted spectrum at each grid time;
        ``branch_values[:, k]`` is the branch labelled ``labels[k]`` of the
        spectrum with zero inserted, label 0 being the inserted zero at the
        start of the path.
    """
    grid: np.ndarray
    eigenvalues: np.ndarray
    labels: tuple
    branch_values: np.ndarray
    crossings: tuple = field(default=())

    @property
    def branches(self):
        return dict((label, self.branch_values[:, k])
                    for k, label in enumerate(self.labels))

    @property
    def net_crossings(self):
        return sum(c.direction for c in self.crossings)

    @property
    def ambiguous(self):
        return any(c.ambiguous for c in self.crossings)

    def rows(self):
        for j, t in enumerate(self.grid):
            for k, label in enumerate(self.labels):
                yield t, label, self.branch_values[j, k]


def branch_trace(path, grid_n):
    """ Samples the eigenvalue branches of a path on grid_n points.

        Crossings are recorded where a sorted eigenvalue changes sign between
        neighbouring samples; samples within DELTA_CROSS of zero mark the
        crossing as ambiguous.
    """
    grid_n = int(grid_n)
    if grid_n < 2:
        raise InputError('A branch trace needs at least 2 grid points')
    grid = np.linspace(path.start, path.end, grid_n)
    eigenvalues = np.array([path.at(t).eigenvalues for t in grid])
    N = path.N
    p = int(np.sum(eigenvalues[0] < 0))
    with_zero = np.sort(np.hstack([eigenvalues, np.zeros((grid_n, 1))]),
                        axis=1)
    labels = tuple(range(-p, N - p + 1))

    crossings = []
    delta = settings.DELTA_CROSS
    for k in range(N):
        values = eigenvalues[:, k]
        for j in range(grid_n - 1):
            a, b = values[j], values[j + 1]
            if (a < 0) == (b < 0):
                continue
            time = grid[j] + (grid[j + 1] - grid[j]) * a / (a - b)
            crossings.append(Crossing(time=float(time),
                                      direction=1 if a < 0 else -1,
                                      eigen_index=k,
                                      ambiguous=bool(min(abs(a), abs(b))
                                                     < delta)))
    crossings.sort(key=lambda c: (c.time, c.eigen_index))
    trace = BranchTrace(grid=grid, eigenvalues=eigenvalues, labels=labels,
                        branch_values=with_zero, crossings=tuple(crossings))
    logger.debug('branch trace of %r: %d crossings, net %d', path,
                 len(crossings), trace.net_crossings)
    return trace


def _same_window(p1, p2, what):
    if p1.kind != p2.kind or p1.start != p2.start or p1.end != p2.end:
        raise InputError('Cannot form %s of %r and %r' % (what, p1, p2))


def _merged_metric(p1, p2):
    if p1.metric is None and p2.metric is None:
        return None
    return linalg.block_diag(
        np.eye(p1.N) if p1.metric is None else p1.metric,
        np.eye(p2.N) if p2.metric is None else p2.metric)


def direct_sum(p1, p2):
    """ Block diagonal path A_1 + A_2 over a shared window. """
    _same_window(p1, p2, 'a direct sum')
    values = np.sort(np.concatenate([p1.gf.values, p2.gf.values]))
    window = (p1.start, p1.end) if p1.kind == 'finite' else None
    return OperatorPath(DirectSumDriver(p1.driver, p2.driver), kind=p1.kind,
                        T=p1.T, window=window, gf=GrowthFunction(values),
                        metric=_merged_metric(p1, p2))


def concatenate(p_left, p_right):
    """ Glues a path ending at s0 to a path starting at s0. """
    if p_left.kind != 'finite' or p_right.kind != 'finite':
        raise InputError('Only finite paths can be concatenated')
    if p_left.end != p_right.start:
        raise InputError('Left path ends at %s but right path starts at %s'
                         % (p_left.end, p_right.start))
    junction = p_left.end
    left, right = p_left.matrix_at(junction), p_right.matrix_at(junction)
    mismatch = np.max(np.abs(left - right))
    if mismatch > settings.JUNCTION_TOL:
        raise MismatchAtJunction('Paths differ by %.3e at s=%s'
                                 % (mismatch, junction))
    if not p_left.end_operator.invertible:
        raise JunctionNotInvertible('Operator at the junction s=%s is not '
                                    'invertible' % junction)
    return OperatorPath(ConcatenatedDriver(p_left.driver, p_right.driver,
                                           junction),
                        kind='finite', T=max(abs(p_left.start),
                                             abs(p_right.end)),
                        window=(p_left.start, p_right.end), gf=p_left.gf,
                        metric=p_left.metric)


def linear_homotopy(p0, p1, r):
    """ The member r of the straight-line homotopy from p0 to p1. """
    _same_window(p0, p1, 'a homotopy')
    window = (p0.start, p0.end) if p0.kind == 'finite' else None
    return OperatorPath(HomotopyDriver(p0.driver, p1.driver, r), kind=p0.kind,
                        T=p0.T, window=window, gf=p0.gf, metric=p0.metric)
