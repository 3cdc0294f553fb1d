""" Self-adjoint pair operators in scale coordinates.

    A PairOperator is a real N x N matrix which is symmetric with respect to
    the H_0 inner product. That inner product is the plain dot product by
    default; symmetrizable operators carry an SPD metric G and must satisfy
    G A = (G A)^T. Eigenvectors are G-orthonormal in either case.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from specflow import settings
from specflow.exceptions import (InputError, NotInvertible, ShiftOnSpectrum,
                                 WindowTooTight)
from specflow.scale import GrowthFunction, as_coeffs


logger = logging.getLogger(__name__)


class PairOperator(object):
    """ A self-adjoint operator H_1 -> H_0 truncated to N scale coordinates.

        The eigendecomposition is computed on first use and cached; the
        instance is otherwise immutable.
    """

    def __init__(self, entries, gf=None, metric=None):
        entries = np.array(entries, dtype=float)
        if entries.ndim == 0:
            entries = entries.reshape(1, 1)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError('Operator entries must be a square matrix, got '
                             'shape %s' % (entries.shape,))
        N = entries.shape[0]
        if metric is not None:
            metric = np.array(metric, dtype=float)
            if metric.shape != (N, N):
                raise InputError('Metric shape %s does not match N=%d'
                                 % (metric.shape, N))
            try:
                linalg.cholesky(metric, lower=True)
            except linalg.LinAlgError:
                raise InputError('Metric is not positive definite')
            metric.flags.writeable = False
        symmetric = entries if metric is None else metric @ entries
        scale = max(np.max(np.abs(symmetric)), np.finfo(float).tiny)
        defect = np.max(np.abs(symmetric - symmetric.T))
        if defect > settings.SYMMETRY_TOL * scale:
            raise InputError('Operator is not H_0-symmetric (defect %.3e)'
                             % defect)
        if gf is None:
            gf = GrowthFunction.poly(1.0, N)
        elif gf.N != N:
            raise InputError('Growth function has N=%d, operator has N=%d'
                             % (gf.N, N))
        entries.flags.writeable = False
        self.entries = entries
        self.metric = metric
        self.gf = gf

    @classmethod
    def from_symmetrizable(cls, entries, metric, gf=None):
        """ An operator that is symmetric once H_0 carries ``metric``. """
        return cls(entries, gf=gf, metric=metric)

    @property
    def N(self):
        return self.entries.shape[0]

    @property
    def metric_matrix(self):
        if self.metric is None:
            return np.eye(self.N)
        return self.metric

    @cached_property
    def _eig(self):
        A = self.entries
        if self.metric is None:
            a, V = linalg.eigh(0.5 * (A + A.T))
        else:
            L = linalg.cholesky(self.metric, lower=True)
            S = L.T @ linalg.solve_triangular(L, A.T, lower=True).T
            a, W = linalg.eigh(0.5 * (S + S.T))
            V = linalg.solve_triangular(L.T, W, lower=False)
        a.flags.writeable = False
        V.flags.writeable = False
        return a, V

    @property
    def eigenvalues(self):
        return self._eig[0]

    @property
    def eigenvectors(self):
        return self._eig[1]

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def inv_margin(self):
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def delta_inv(self):
        return 1e-8 * max(1.0, self.spectral_radius)

    @property
    def invertible(self):
        return self.inv_margin > self.delta_inv

    def count_below(self, lam):
        return int(np.sum(self.eigenvalues < lam))

    @property
    def n_negative(self):
        return self.count_below(0.0)

    @property
    def n_positive(self):
        return int(np.sum(self.eigenvalues > 0.0))

    def coefficients(self, xi):
        """ Eigenbasis coefficients <v_l, xi>_0 of a vector (or of the
            columns of a matrix).
        """
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 1 and xi.size != self.N:
            raise InputError('Dimension mismatch: %d != %d'
                             % (xi.size, self.N))
        if self.metric is None:
            return self.eigenvectors.T @ xi
        return self.eigenvectors.T @ (self.metric @ xi)

    def apply(self, xi):
        return self.entries @ as_coeffs(xi)

    def shifted(self, mu):
        """ A - mu * iota """
        return PairOperator(self.entries - mu * np.eye(self.N), gf=self.gf,
                            metric=self.metric)

    def negated(self):
        return PairOperator(-self.entries, gf=self.gf, metric=self.metric)

    def direct_sum(self, other):
        """ Block diagonal sum. The summands' growth weights are merged into
            a single sorted weight list.
        """
        metric = None
        if self.metric is not None or other.metric is not None:
            metric = linalg.block_diag(self.metric_matrix, other.metric_matrix)
        values = np.sort(np.concatenate([self.gf.values, other.gf.values]))
        return PairOperator(linalg.block_diag(self.entries, other.entries),
                            gf=GrowthFunction(values), metric=metric)

    def require_invertible(self, what='Operator'):
        if not self.invertible:
            raise NotInvertible('%s is not invertible (margin %.3e <= %.3e)'
                                % (what, self.inv_margin, self.delta_inv))

    def __repr__(self):
        return 'PairOperator(N=%d, spectrum=%s)' % (
            self.N, np.array2string(self.eigenvalues, precision=4))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    labels: tuple
    morse_index: int
    comorse_index: int
    kernel_dim: int
    type: str

    def get_info(self):
        return {'eigenvalues': self.eigenvalues.tolist(),
                'labels': list(self.labels),
                'morse_index': self.morse_index,
                'comorse_index': self.comorse_index,
                'kernel_dim': self.kernel_dim,
                'type': self.type}


def spectrum(A):
    """ Ascending eigenvalues with their index labels.

        Negative eigenvalues are labelled -1, -2, ... going away from zero,
        positive ones 1, 2, ..., and eigenvalues within delta_inv of zero
        get the label 0.
    """
    a = A.eigenvalues
    delta = A.delta_inv
    negative = a < -delta
    positive = a > delta
    n_neg = int(np.sum(negative))
    n_pos = int(np.sum(positive))
    labels = []
    for i, value in enumerate(a):
        if negative[i]:
            labels.append(i - n_neg)
        elif positive[i]:
            labels.append(i - (A.N - n_pos) + 1)
        else:
            labels.append(0)

    # Only a diagnostic at finite N: "infinitely many" is read as "at least
    # a quarter of the coordinates".
    if min(n_neg, n_pos) * 4 >= A.N and min(n_neg, n_pos) > 0:
        kind = 'floer'
    elif n_neg <= n_pos:
        kind = 'morse'
    else:
        kind = 'co-morse'
    return Spectrum(eigenvalues=a, labels=tuple(labels), morse_index=n_neg,
                    comorse_index=n_pos, kernel_dim=A.N - n_neg - n_pos,
                    type=kind)


class AdaptedMetric(object):
    """ Inner products adapted to an invertible operator.

        <xi, eta>_{r'} = sum_l |a_l|^{2r} c_l(xi) c_l(eta) with c_l the
        eigenbasis coefficients; r = 1 is the pull back <A xi, A eta>_0 and
        r = 1/2 gives the H_{1/2} lengths |a_l|^{1/2}.
    """

    def __init__(self, A):
        A.require_invertible()
        self.operator = A
        self.abs_eigenvalues = np.abs(A.eigenvalues)

    def inner(self, u, v, r=1.0):
        cu = self.operator.coefficients(as_coeffs(u))
        cv = self.operator.coefficients(as_coeffs(v))
        return math.fsum(self.abs_eigenvalues ** (2.0 * r) * cu * cv)

    def norm(self, u, r=1.0):
        return math.sqrt(max(self.inner(u, u, r), 0.0))

    def pullback_inner(self, u, v):
        """ <A u, A v>_0 computed directly from the matrix. """
        G = self.operator.metric_matrix
        Au, Av = self.operator.apply(u), self.operator.apply(v)
        return float(Au @ G @ Av)

    def decompose(self, xi):
        """ Splits xi into its H_{1/2}^+ and H_{1/2}^- parts. """
        xi = as_coeffs(xi)
        plus = spectral_projection(self.operator, '+').matrix @ xi
        return plus, xi - plus

    def length_defects(self):
        """ Largest deviation of the eigenvector lengths from |a_l| (1') and
            |a_l|^(1/2) (1/2').
        """
        V = self.operator.eigenvectors
        one = max(abs(self.norm(V[:, k], 1.0) - self.abs_eigenvalues[k])
                  for k in range(V.shape[1]))
        half = max(abs(self.norm(V[:, k], 0.5)
                       - math.sqrt(self.abs_eigenvalues[k]))
                   for k in range(V.shape[1]))
        return one, half


def adapted_inner(A):
    return AdaptedMetric(A)


@dataclass(frozen=True)
class SpectralProjection:
    sign: str
    basis_columns: np.ndarray
    matrix: np.ndarray

    @property
    def rank(self):
        return self.basis_columns.shape[1]


def spectral_projection(A, sign):
    """ Projection onto the positive ('+') or negative ('-') eigenspace
        along the complementary one.
    """
    if sign not in ('+', '-'):
        raise InputError('Projection sign must be "+" or "-", got %r' % sign)
    A.require_invertible()
    a, V = A.eigenvalues, A.eigenvectors
    V_plus = V[:, a > 0]
    plus = V_plus @ V_plus.T @ A.metric_matrix
    if sign == '+':
        return SpectralProjection(sign, V_plus, plus)
    return SpectralProjection(sign, V[:, a < 0], np.eye(A.N) - plus)


def spectral_distance(A, mu):
    return float(np.min(np.abs(A.eigenvalues - mu)))


def spectral_content(A, lam, mu):
    """ Signed count of eigenvalues strictly between lam and mu. """
    for value in (lam, mu):
        if spectral_distance(A, value) <= A.delta_inv:
            raise ShiftOnSpectrum('%s lies on the spectrum of %r'
                                  % (value, A))
    if lam == mu:
        return 0
    lo, hi = min(lam, mu), max(lam, mu)
    a = A.eigenvalues
    count = int(np.sum((a > lo) & (a < hi)))
    return count if lam < mu else -count


def resolvent_shift(A, window):
    """ Point of ``window`` farthest from the spectrum of A.

        Candidates are the window edges and the midpoints of the spectral
        gaps clipped to the window. Ties go to gap midpoints first and then
        to the smallest point.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo <= hi:
        raise InputError('Empty window [%s, %s]' % (lo, hi))
    a = A.eigenvalues
    candidates = [(lo, 1), (hi, 1)]
    for left, right in zip(a[:-1], a[1:]):
        mid = 0.5 * (left + right)
        if lo <= mid <= hi:
            candidates.append((mid, 0))
        else:
            candidates.append((min(max(mid, lo), hi), 1))
    best = None
    for point, edge in candidates:
        key = (-round(spectral_distance(A, point), 12), edge, point)
        if best is None or key < best:
            best = key
    margin, point = -best[0], best[2]
    if margin < A.delta_inv:
        raise WindowTooTight('No point of [%s, %s] is %.3e away from the '
                             'spectrum' % (lo, hi, A.delta_inv))
    logger.debug('resolvent shift %s with margin %s', point, margin)
    return point


def adjoint_view(A):
    """ Coordinate representation G^-1 A^T G of the adjoint. """
    if A.metric is None:
        return PairOperator(A.entries.T.copy(), gf=A.gf)
    G = A.metric
    return PairOperator(linalg.solve(G, A.entries.T @ G), gf=A.gf, metric=G)
