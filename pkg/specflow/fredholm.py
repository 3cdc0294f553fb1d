""" Discretized augmented operators and their numerical Fredholm data.

    A path xi on the grid t_0 < ... < t_n is stored node-major: column
    j * N + i of an assembled system is coordinate i at node j. The
    residual rows use the implicit midpoint rule and are scaled by sqrt(h_t)
    so that the Euclidean norm of M xi approximates the P_0 norm of D_A xi.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.integrate import trapezoid

from specflow import settings
from specflow.exceptions import (InputError, JunctionNotInvertible,
                                 NotInvertible, PerturbationTooLarge,
                                 ShiftOnSpectrum)
from specflow.generators import smoothed_values
from specflow.hessian import AdaptedMetric, spectral_projection
from specflow.scale import GrowthFunction, ScaleVector, as_coeffs, r_norm


logger = logging.getLogger(__name__)

RESOLVED = 'RESOLVED'
UNRESOLVED = 'UNRESOLVED'


class DiscretePath(object):
    """ Node values of a path on a uniform grid. """

    def __init__(self, grid, values, gf=None):
        grid = np.array(grid, dtype=float).ravel()
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if grid.size < 2:
            raise InputError('A discrete path needs at least 2 nodes')
        if values.shape[0] != grid.size:
            raise InputError('Expected %d node values, got %d'
                             % (grid.size, values.shape[0]))
        steps = np.diff(grid)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0]):
            raise InputError('Grid must be uniform and increasing')
        if gf is None:
            gf = GrowthFunction.poly(1.0, values.shape[1])
        elif gf.N != values.shape[1]:
            raise InputError('Growth function has N=%d, path has N=%d'
                             % (gf.N, values.shape[1]))
        grid.flags.writeable = False
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.gf = gf

    @classmethod
    def from_function(cls, func, start, end, grid_n, gf=None):
        grid = np.linspace(start, end, int(grid_n) + 1)
        return cls(grid, [as_coeffs(func(t)) for t in grid], gf=gf)

    @property
    def N(self):
        return self.values.shape[1]

    @property
    def n(self):
        return self.grid.size - 1

    @property
    def h(self):
        return (self.grid[-1] - self.grid[0]) / self.n

    def node(self, j):
        return ScaleVector(self.values[j])

    def midpoints(self):
        return 0.5 * (self.values[:-1] + self.values[1:])

    def differences(self):
        return np.diff(self.values, axis=0) / self.h

    def flatten(self):
        return self.values.ravel()

    def _squared(self, values, r, adapted):
        if adapted is None:
            return values ** 2 @ self.gf.weights(r)
        c = adapted.operator.coefficients(values.T)
        return adapted.abs_eigenvalues ** (2.0 * r) @ c ** 2

    def p0_norm(self, adapted=None):
        """ Trapezoid quadrature of |xi(s)|_0^2, square rooted. """
        return math.sqrt(trapezoid(self._squared(self.values, 0.0, adapted),
                                   self.grid))

    def p1_norm(self, adapted=None):
        """ Forward difference |xi'|_0^2 plus trapezoid |xi|_1^2.

            With ``adapted`` the levels are the 0' and 1' levels of that
            operator's adapted metric.
        """
        derivative = self._squared(self.differences(), 0.0, adapted)
        level_one = self._squared(self.values, 1.0, adapted)
        return math.sqrt(math.fsum(derivative * self.h)
                         + trapezoid(level_one, self.grid))

    def path_norm(self):
        """ Norm of L^2(H_1) intersected with W^{1,2}(H_0). """
        return math.sqrt(
            trapezoid(self._squared(self.values, 1.0, None), self.grid)
            + trapezoid(self._squared(self.values, 0.0, None), self.grid)
            + math.fsum(self._squared(self.differences(), 0.0, None) * self.h))

    def __repr__(self):
        return 'DiscretePath([%s, %s], n=%d, N=%d)' % (
            self.grid[0], self.grid[-1], self.n, self.N)


@dataclass(frozen=True)
class AugmentedSystem:
    """ Residual rows of D_A followed by the boundary rows.

        ``k_start`` rows after the residual block carry the start projection,
        the last ``k_end`` rows the end projection. ``domain`` is set when
        the system acts on a constrained subspace; its columns are then
        coordinates in that subspace.
    """
    matrix: np.ndarray
    grid: np.ndarray
    h: float
    N: int
    k_start: int
    k_end: int
    kind: str = 'finite'
    domain: np.ndarray = field(default=None, repr=False)

    @property
    def k_b(self):
        return self.k_start + self.k_end

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def residual_rows(self):
        return self.matrix.shape[0] - self.k_b

    @property
    def grid_n(self):
        return self.residual_rows // self.N

    @property
    def shape_index(self):
        rows, cols = self.matrix.shape
        return cols - rows

    @property
    def row_labels(self):
        return (['residual'] * self.residual_rows + ['start'] * self.k_start
                + ['end'] * self.k_end)

    def drop_boundary(self, side):
        """ The system without the boundary rows of one side. """
        first = self.residual_rows
        if side == 'start':
            keep = np.r_[0:first, first + self.k_start:self.matrix.shape[0]]
            return replace(self, matrix=self.matrix[keep], k_start=0)
        if side == 'end':
            return replace(self, matrix=self.matrix[:first + self.k_start],
                           k_end=0)
        raise InputError('Boundary side must be "start" or "end", got %r'
                         % side)


@dataclass(frozen=True)
class IndexReport:
    dim_ker: int
    dim_coker: int
    index: int
    sv_gap: float
    grid_n: int
    tol: float
    status: str
    singular_values: np.ndarray = field(default=None, repr=False,
                                        compare=False)
    kernel: np.ndarray = field(default=None, repr=False, compare=False)
    cokernel: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def resolved(self):
        return self.status == RESOLVED

    def get_info(self):
        return {'dim_ker': self.dim_ker,
                'dim_coker': self.dim_coker,
                'index': self.index,
                'sv_gap': self.sv_gap if math.isfinite(self.sv_gap) else None,
                'grid_n': self.grid_n,
                'tol': self.tol,
                'status': self.status}


def _residual_block(path, grid):
    n = grid.size - 1
    N = path.N
    h = grid[1] - grid[0]
    root = math.sqrt(h)
    eye = np.eye(N)
    weight = None
    if path.metric is not None:
        weight = linalg.cholesky(path.metric, lower=True).T
    M = np.zeros((n * N, (n + 1) * N))
    for j in range(n):
        A = path.matrix_at(0.5 * (grid[j] + grid[j + 1]))
        left = root * (0.5 * A - eye / h)
        right = root * (0.5 * A + eye / h)
        if weight is not None:
            left, right = weight @ left, weight @ right
        rows = slice(j * N, (j + 1) * N)
        M[rows, j * N:(j + 1) * N] = left
        M[rows, (j + 1) * N:(j + 2) * N] = right
    return M


def _boundary_rows(op, positive):
    """ Rows |a_l|^(1/4) (G v_l)^T for the eigenvectors of one sign. """
    a, V = op.eigenvalues, op.eigenvectors
    select = a > 0 if positive else a < 0
    rows = (op.metric_matrix @ V[:, select]).T
    return np.abs(a[select])[:, None] ** 0.25 * rows


def _endpoint_operator(op, shift, what):
    if not shift:
        return op
    shifted = op.shifted(shift)
    if not shifted.invertible:
        raise ShiftOnSpectrum('Shift %s lies on the spectrum of the %s '
                              'operator' % (shift, what))
    return shifted


def _check_grid_n(grid_n):
    grid_n = settings.DEFAULT_GRID_N if grid_n is None else int(grid_n)
    if grid_n < settings.MIN_GRID_N:
        raise InputError('grid_n must be at least %d, got %d'
                         % (settings.MIN_GRID_N, grid_n))
    return grid_n


def assemble_augmented(path, grid_n=None, shifts=None):
    """ Assembles the augmented operator of a path.

        :param path: a valid OperatorPath of any kind; infinite kinds are
            assembled on their tail window.
        :param grid_n: number of grid intervals.
        :param shifts: optional (lambda_start, lambda_end); boundary rows
            then use the projections of A(start) - lambda_start and
            A(end) - lambda_end.
        :returns: AugmentedSystem
    """
    grid_n = _check_grid_n(grid_n)
    path.validate()
    lam_start, lam_end = shifts if shifts is not None else (0.0, 0.0)
    start = _endpoint_operator(path.start_operator, lam_start, 'start')
    end = _endpoint_operator(path.end_operator, lam_end, 'end')

    grid = np.linspace(path.start, path.end, grid_n + 1)
    N = path.N
    residual = _residual_block(path, grid)
    upper = _boundary_rows(start, positive=True)
    lower = _boundary_rows(end, positive=False)
    cols = residual.shape[1]
    start_block = np.zeros((upper.shape[0], cols))
    start_block[:, :N] = upper
    end_block = np.zeros((lower.shape[0], cols))
    end_block[:, cols - N:] = lower
    matrix = np.vstack([residual, start_block, end_block])
    logger.debug('assembled %r on %d intervals: shape %s, k_b=%d', path,
                 grid_n, matrix.shape, upper.shape[0] + lower.shape[0])
    return AugmentedSystem(matrix=matrix, grid=grid, h=grid[1] - grid[0], N=N,
                           k_start=upper.shape[0], k_end=lower.shape[0],
                           kind=path.kind)


def assemble_adjoint_augmented(path, grid_n=None):
    """ The augmented system of the path s -> -A(s)^*. """
    return assemble_augmented(path.negative_adjoint(), grid_n)


def numeric_index(system, tol=None, with_bases=False):
    """ Kernel and cokernel dimensions from the singular values.

        Singular values above tol * sigma_max count towards the rank. The
        gap is the last counted singular value over the first uncounted
        one, or over the threshold itself when every singular value counts.
        A gap below SV_GAP_MIN marks the report UNRESOLVED.
    """
    tol = settings.RANK_TOL if tol is None else float(tol)
    M = system.matrix
    rows, cols = M.shape
    if with_bases:
        U, s, Vt = linalg.svd(M, full_matrices=True)
    else:
        s = linalg.svdvals(M)
    s_max = s[0] if s.size else 0.0
    threshold = tol * s_max
    rank = int(np.sum(s > threshold))
    if rank == 0:
        sv_gap = float('inf')
    elif rank < s.size:
        sv_gap = float(s[rank - 1] / s[rank]) if s[rank] > 0 \
            else float('inf')
    else:
        sv_gap = float(s[rank - 1] / threshold)
    status = RESOLVED if sv_gap >= settings.SV_GAP_MIN else UNRESOLVED
    dim_ker, dim_coker = cols - rank, rows - rank
    report = IndexReport(
        dim_ker=dim_ker, dim_coker=dim_coker, index=dim_ker - dim_coker,
        sv_gap=sv_gap, grid_n=system.grid_n, tol=tol, status=status,
        singular_values=s,
        kernel=Vt[rank:].T if with_bases else None,
        cokernel=U[:, rank:] if with_bases else None)
    if not report.resolved:
        logger.info('index of %s system unresolved: sv_gap %.3e at grid %d',
                    system.kind, sv_gap, system.grid_n)
    return report


def resolve_index(path, grid_n=None, tol=None, shifts=None, adjoint=False):
    """ numeric_index on a doubling sequence of grids.

        Stops at the first resolved report or once the next grid would
        exceed GRID_CAP, in which case the last UNRESOLVED report is
        returned.
    """
    grid_n = _check_grid_n(grid_n)
    target = path.negative_adjoint() if adjoint else path
    while True:
        report = numeric_index(assemble_augmented(target, grid_n, shifts), tol)
        if report.resolved:
            return report
        if grid_n * 2 > settings.GRID_CAP:
            logger.warning('index of %r still unresolved at grid %d', target,
                           grid_n)
            return report
        grid_n *= 2
        logger.info('refining grid of %r to %d intervals', target, grid_n)


@dataclass(frozen=True)
class CokernelComparison:
    dim_coker: int
    dim_adjoint_kernel: int
    max_angle: float
    bound: float
    status: str

    @property
    def passed(self):
        if self.dim_coker != self.dim_adjoint_kernel:
            return False
        return self.dim_coker == 0 or self.max_angle <= self.bound

    def get_info(self):
        return {'dim_coker': self.dim_coker,
                'dim_adjoint_kernel': self.dim_adjoint_kernel,
                'max_angle': self.max_angle,
                'bound': self.bound,
                'status': self.status}


def cokernel_vs_adjoint_kernel(path, grid_n=None, tol=None):
    """ Compares the cokernel of D_A with the kernel of D_{-A*}.

        The residual block of each left singular vector is a midpoint
        sampling of a cokernel element; the adjoint kernel is interpolated
        to the same midpoints before the principal angles are taken.
    """
    system = assemble_augmented(path, grid_n)
    adjoint = assemble_adjoint_augmented(path, grid_n)
    report = numeric_index(system, tol, with_bases=True)
    adjoint_report = numeric_index(adjoint, tol, with_bases=True)
    status = RESOLVED if report.resolved and adjoint_report.resolved \
        else UNRESOLVED
    bound = 5.0 * system.h
    dims = (report.dim_coker, adjoint_report.dim_ker)
    if dims[0] != dims[1] or dims[0] == 0:
        return CokernelComparison(dims[0], dims[1], 0.0, bound, status)

    N, n = system.N, system.grid_n
    cokernel = report.cokernel[:system.residual_rows]
    kernel = adjoint_report.kernel.reshape(n + 1, N, -1)
    kernel = 0.5 * (kernel[:-1] + kernel[1:])
    if path.metric is not None:
        weight = linalg.cholesky(path.metric, lower=True).T
        kernel = np.einsum('ab,jbk->jak', weight, kernel)
    kernel = kernel.reshape(n * N, -1)
    angle = float(np.max(linalg.subspace_angles(cokernel, kernel)))
    logger.debug('cokernel angle %.3e against bound %.3e', angle, bound)
    return CokernelComparison(dims[0], dims[1], angle, bound, status)


def assemble_concatenation_family(path, r, grid_n=None, split=0.0):
    """ Augmented system on the glued domain with parameter r.

        The unknowns are xi on [start, split] and eta on [split, end], each
        on grid_n intervals, subject to
        pi_-(xi(split) - r eta(split)) = 0 and pi_+(r xi(split) - eta(split))
        = 0 for the projections of A(split). r = 1 is continuity at the
        junction, r = 0 the split problem.
    """
    grid_n = _check_grid_n(grid_n)
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise InputError('Family parameter r must lie in [0, 1], got %s' % r)
    if not path.start < split < path.end:
        raise InputError('Split %s is not inside [%s, %s]'
                         % (split, path.start, path.end))
    path.validate()
    left = path.restrict(path.start, split)
    right = path.restrict(split, path.end)
    junction = left.end_operator
    if not junction.invertible:
        raise JunctionNotInvertible('Operator at the split s=%s is not '
                                    'invertible' % split)
    plus = spectral_projection(junction, '+').matrix
    minus = spectral_projection(junction, '-').matrix

    N = path.N
    left_grid = np.linspace(left.start, left.end, grid_n + 1)
    right_grid = np.linspace(right.start, right.end, grid_n + 1)
    upper = _boundary_rows(left.start_operator, positive=True)
    lower = _boundary_rows(right.end_operator, positive=False)
    half = (grid_n + 1) * N
    residual = linalg.block_diag(_residual_block(left, left_grid),
                                 _residual_block(right, right_grid))
    start_block = np.zeros((upper.shape[0], 2 * half))
    start_block[:, :N] = upper
    end_block = np.zeros((lower.shape[0], 2 * half))
    end_block[:, 2 * half - N:] = lower
    full = np.vstack([residual, start_block, end_block])

    constraint = np.block([[minus, -r * minus], [r * plus, -plus]])
    glue = linalg.null_space(constraint)
    domain = linalg.block_diag(np.eye(half - N), glue, np.eye(half - N))
    return AugmentedSystem(matrix=full @ domain,
                           grid=np.concatenate([left_grid, right_grid]),
                           h=min(left_grid[1] - left_grid[0],
                                 right_grid[1] - right_grid[0]),
                           N=N, k_start=upper.shape[0], k_end=lower.shape[0],
                           kind='family', domain=domain)


def _modes(A, data):
    return A.coefficients(as_coeffs(data))


def constant_path_solve(A, T, eta, x=None, y=None):
    """ Solves xi' + A xi = eta on [-T, T] with pi_+ xi(-T) = x and
        pi_- xi(T) = y, mode by mode.

        Positive modes integrate forward from -T, negative modes backward
        from T; the convolution integrals use the trapezoid rule on eta's
        grid, updated recursively.
    """
    if not A.invertible:
        raise NotInvertible('Constant operator is not invertible')
    T = float(T)
    if eta.N != A.N:
        raise InputError('eta has N=%d, operator has N=%d' % (eta.N, A.N))
    if not (np.isclose(eta.grid[0], -T) and np.isclose(eta.grid[-1], T)):
        raise InputError('eta must be sampled on [-%s, %s]' % (T, T))
    zero = np.zeros(A.N)
    cx = _modes(A, zero if x is None else x)
    cy = _modes(A, zero if y is None else y)
    c_eta = A.coefficients(eta.values.T)
    grid, h = eta.grid, eta.h
    n = eta.n
    modes = np.zeros((A.N, n + 1))
    for k, a in enumerate(A.eigenvalues):
        decay = math.exp(-abs(a) * h)
        f = c_eta[k]
        integral = np.zeros(n + 1)
        if a > 0:
            for j in range(n):
                integral[j + 1] = (decay * integral[j]
                                   + 0.5 * h * (f[j] * decay + f[j + 1]))
            modes[k] = cx[k] * np.exp(-a * (T + grid)) + integral
        else:
            for j in range(n - 1, -1, -1):
                integral[j] = (decay * integral[j + 1]
                               + 0.5 * h * (f[j] + f[j + 1] * decay))
            modes[k] = cy[k] * np.exp(a * (T - grid)) - integral
    return DiscretePath(grid, (A.eigenvectors @ modes).T, gf=eta.gf)


def residual_in_system(A, xi, eta):
    """ Norm of the assembled residual rows of xi against the source eta. """
    h = xi.h
    residual = (xi.differences() + xi.midpoints() @ A.entries.T
                - eta.midpoints())
    squared = np.einsum('ja,ab,jb->j', residual, A.metric_matrix, residual)
    return math.sqrt(h * math.fsum(squared))


def energy_bound_holds(A, xi, eta, x=None, y=None):
    """ Checks |xi|_{P_1'}^2 <= 10 |eta|_{P_0}^2 + 4 |y|_{1/2'}^2
        + 4 |x|_{1/2'}^2.

        :returns: (holds, lhs, rhs)
    """
    adapted = AdaptedMetric(A)
    plus = spectral_projection(A, '+').matrix
    minus = np.eye(A.N) - plus
    zero = np.zeros(A.N)
    x = plus @ (zero if x is None else as_coeffs(x))
    y = minus @ (zero if y is None else as_coeffs(y))
    lhs = xi.p1_norm(adapted) ** 2
    rhs = (10.0 * eta.p0_norm(adapted) ** 2 + 4.0 * adapted.norm(y, 0.5) ** 2
           + 4.0 * adapted.norm(x, 0.5) ** 2)
    return lhs <= rhs * (1.0 + 1e-12), lhs, rhs


def estimate_sample(path, trials, grid_n=None, seed=0):
    """ Largest observed ratio |xi|_{P_1} / (|xi|_{P_0} + |D_A xi|_{P_0}
        + |pi_+ xi(start)|_{1/2'} + |pi_- xi(end)|_{1/2'}).
    """
    grid_n = _check_grid_n(grid_n)
    path.validate()
    grid = np.linspace(path.start, path.end, grid_n + 1)
    residual = _residual_block(path, grid)
    start, end = path.start_operator, path.end_operator
    start_metric, end_metric = AdaptedMetric(start), AdaptedMetric(end)
    plus = spectral_projection(start, '+').matrix
    minus = spectral_projection(end, '-').matrix
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(trials)):
        values = smoothed_values(rng, (grid_n + 1, path.N))
        xi = DiscretePath(grid, values, gf=path.gf)
        denominator = (xi.p0_norm()
                       + float(np.linalg.norm(residual @ xi.flatten()))
                       + start_metric.norm(plus @ values[0], 0.5)
                       + end_metric.norm(minus @ values[-1], 0.5))
        worst = max(worst, xi.p1_norm() / denominator)
    logger.debug('semi-Fredholm sample of %r: %.4f over %d trials', path,
                 worst, trials)
    return worst


@dataclass(frozen=True)
class NeumannCertificate:
    inverse: np.ndarray = field(repr=False)
    product: float
    bound: float
    measured: float

    @property
    def holds(self):
        return self.measured <= self.bound * (1.0 + 1e-10)


def neumann_invert(Tm, Pm):
    """ Inverts T + P for a small perturbation P of an invertible T.

        :returns: NeumannCertificate with the measured norm of the inverse
            and the bound |T^-1| / (1 - |T^-1| |P|).
        :raises PerturbationTooLarge: when |T^-1| |P| >= 1.
    """
    Tm = np.asarray(Tm, dtype=float)
    Pm = np.asarray(Pm, dtype=float)
    if Tm.ndim != 2 or Tm.shape[0] != Tm.shape[1] or Pm.shape != Tm.shape:
        raise InputError('Expected two square matrices of equal shape, got '
                         '%s and %s' % (Tm.shape, Pm.shape))
    try:
        T_inv = linalg.inv(Tm)
    except linalg.LinAlgError:
        raise NotInvertible('T is singular')
    t_norm = np.linalg.norm(T_inv, 2)
    product = t_norm * np.linalg.norm(Pm, 2)
    if product >= 1.0:
        raise PerturbationTooLarge('|T^-1| |P| = %.6f is not below 1'
                                   % product)
    inverse = linalg.solve(Tm + Pm, np.eye(Tm.shape[0]))
    return NeumannCertificate(inverse=inverse, product=float(product),
                              bound=float(t_norm / (1.0 - product)),
                              measured=float(np.linalg.norm(inverse, 2)))


@dataclass(frozen=True)
class Evaluation:
    endpoint: ScaleVector
    half_norm: float
    path_norm: float
    ratio: float
    bound: float

    @property
    def within_bound(self):
        return self.ratio <= self.bound


def _evaluate(xi, j, gf):
    gf = xi.gf if gf is None else gf
    endpoint = ScaleVector(xi.values[j])
    half = r_norm(endpoint, 0.5, gf)
    norm = xi.path_norm()
    ratio = half / norm if norm > 0 else 0.0
    bound = math.sqrt(2.0) + 10.0 * xi.h * max(1.0, math.sqrt(gf.largest))
    return Evaluation(endpoint, half, norm, ratio, bound)


def evaluation_map(xi, gf=None):
    """ x(0) with its H_{1/2} norm and the ratio against the path norm. """
    return _evaluate(xi, 0, gf)


def evaluation_pair(xi, gf=None):
    """ Evaluations at both ends of the grid. """
    return _evaluate(xi, 0, gf), _evaluate(xi, -1, gf)


def ev_section(x0, gf, grid_n=None):
    """ x_nu(s) = exp(-sqrt(h(nu)) s) x0_nu on [0, 1]. """
    grid_n = settings.DEFAULT_GRID_N if grid_n is None else int(grid_n)
    x0 = as_coeffs(x0)
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    rates = np.sqrt(gf.values)
    return DiscretePath(grid, np.exp(-np.outer(grid, rates)) * x0, gf=gf)


def ev_pair_section(x0, x1, gf, grid_n=None):
    """ A path on [0, 1] with x(0) = x0 and x(1) = x1.

        Each end carries an exponential section cut off by
        (1 + cos(pi s)) / 2, which vanishes at the opposite end.
    """
    grid_n = settings.DEFAULT_GRID_N if grid_n is None else int(grid_n)
    x0, x1 = as_coeffs(x0), as_coeffs(x1)
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    rates = np.sqrt(gf.values)
    cutoff = 0.5 * (1.0 + np.cos(math.pi * grid))
    values = (cutoff[:, None] * np.exp(-np.outer(grid, rates)) * x0
              + cutoff[::-1, None] * np.exp(-np.outer(grid[::-1], rates)) * x1)
    return DiscretePath(grid, values, gf=gf)
