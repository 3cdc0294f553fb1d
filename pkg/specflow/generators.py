""" Seeded random families for the verification campaigns.

    Every function takes a numpy Generator; campaigns derive one generator
    per draw from a SeedSequence so a draw does not depend on how many
    draws came before it in another family.
"""
import logging

import numpy as np

from specflow import settings
from specflow.flow import OperatorPath
from specflow.hessian import PairOperator
from specflow.path_drivers.composite_driver import SymmetrizedDriver
from specflow.path_drivers.keyframe_driver import KeyframeDriver


logger = logging.getLogger(__name__)

ENTRY_RANGE = 2.0
MAX_REDRAWS = 1000

# Endpoint perturbations stay below this share of the inverse margin.
PERTURBATION_FRACTION = 0.4


def spawn_seeds(seed, count):
    """ ``count`` independent 64-bit seeds derived from ``seed``. """
    children = np.random.SeedSequence(int(seed)).spawn(int(count))
    return [int(child.generate_state(1, np.uint64)[0]) for child in children]


def rng_for(seed):
    return np.random.default_rng(int(seed))


def random_symmetric(rng, N, scale=ENTRY_RANGE):
    upper = np.triu(rng.uniform(-scale, scale, size=(N, N)))
    return upper + np.triu(upper, 1).T


def random_metric(rng, N):
    B = rng.uniform(-1.0, 1.0, size=(N, N))
    return B @ B.T + np.eye(N)


def _margin(S, metric):
    if metric is None:
        return PairOperator(S).inv_margin
    return PairOperator(np.linalg.solve(metric, S), metric=metric).inv_margin


def random_endpoint(rng, N, metric=None, margin=None):
    """ A symmetric matrix whose operator has inv_margin above ``margin``. """
    margin = settings.RANDOM_MARGIN if margin is None else margin
    for _ in range(MAX_REDRAWS):
        S = random_symmetric(rng, N)
        if _margin(S, metric) > margin:
            return S
    raise RuntimeError('No endpoint with margin %s after %d draws'
                       % (margin, MAX_REDRAWS))


def random_keyframes(rng, N, start, end, metric=None, first=None, last=None):
    """ 2 to 5 evenly spaced symmetric keyframes on [start, end].

        The end keyframes are invertible with the random margin; ``first``
        and ``last`` pin them to given matrices.
    """
    k = int(rng.integers(2, 6))
    times = np.linspace(start, end, k)
    matrices = [random_symmetric(rng, N) for _ in range(k)]
    matrices[0] = random_endpoint(rng, N, metric) if first is None else first
    matrices[-1] = random_endpoint(rng, N, metric) if last is None else last
    return KeyframeDriver(times, matrices)


def _window(kind, T):
    return {'finite': (-T, T), 'line': (-T, T), 'forward': (0.0, T),
            'backward': (-T, 0.0)}[kind]


def random_path(rng, N, kind='finite', T=1.0, gf=None, metric=None):
    """ A random keyframe path; infinite kinds are constant beyond their
        window, so their tails are settled exactly.
    """
    start, end = _window(kind, T)
    driver = random_keyframes(rng, N, start, end, metric)
    if metric is not None:
        driver = SymmetrizedDriver(driver, metric)
    window = (start, end) if kind == 'finite' else None
    return OperatorPath(driver, kind=kind, T=T, window=window, gf=gf,
                        metric=metric)


def random_symmetrizable_path(rng, N, T=1.0):
    return random_path(rng, N, T=T, metric=random_metric(rng, N))


def random_glued_path(rng, N, T=1.0):
    """ Two random keyframe paths on [-T, 0] and [0, T] sharing an
        invertible operator at 0, merged into one keyframe path.
    """
    junction = random_endpoint(rng, N)
    left = random_keyframes(rng, N, -T, 0.0, last=junction)
    right = random_keyframes(rng, N, 0.0, T, first=junction)
    times = np.concatenate([left.times, right.times[1:]])
    matrices = np.concatenate([left.matrices, right.matrices[1:]])
    return OperatorPath(KeyframeDriver(times, matrices), window=(-T, T))


def random_constant_operator(rng, N, gf=None):
    return PairOperator(random_endpoint(rng, N), gf=gf)


def random_perturbation(rng, op, fraction=PERTURBATION_FRACTION):
    """ An H_0-symmetric P with norm fraction * inv_margin of op.

        For fraction < 1/2 every op + tP, t in [0, 1], keeps more than half
        the margin of op and the same Morse index.
    """
    Q = random_symmetric(rng, op.N)
    P = Q if op.metric is None else np.linalg.solve(op.metric, Q)
    norm = PairOperator(P, metric=op.metric).spectral_radius
    if norm == 0.0:
        return P
    return P * (fraction * op.inv_margin / norm)


def perturbed_endpoint_path(rng, path):
    """ The straight path between the endpoints of a finite ``path``, each
        moved by a random_perturbation.
    """
    start = path.matrix_at(path.start) + random_perturbation(
        rng, path.start_operator)
    end = path.matrix_at(path.end) + random_perturbation(rng,
                                                         path.end_operator)
    return OperatorPath(KeyframeDriver([path.start, path.end], [start, end]),
                        window=(path.start, path.end), gf=path.gf,
                        metric=path.metric)


def random_isometric_operator(rng, gf):
    """ diag(+-sqrt(h)) with random signs, so |A xi|_0 = |xi|_1. """
    signs = rng.choice([-1.0, 1.0], size=gf.N)
    return PairOperator(np.diag(signs * np.sqrt(gf.values)), gf=gf)


def random_shift(rng, op, low=-3.0, high=3.0):
    """ A point of [low, high] at least RANDOM_MARGIN away from the
        spectrum of op.
    """
    for _ in range(MAX_REDRAWS):
        value = float(rng.uniform(low, high))
        if np.min(np.abs(op.eigenvalues - value)) > settings.RANDOM_MARGIN:
            return value
    raise RuntimeError('No admissible shift found in [%s, %s]' % (low, high))


def random_neumann_pair(rng, N, max_product=0.9):
    """ (T, P) with |T^-1| |P| uniform in [0, max_product]. """
    for _ in range(MAX_REDRAWS):
        Tm = rng.standard_normal((N, N)) + 2.0 * np.eye(N)
        if np.linalg.cond(Tm) < 1e6:
            break
    t_norm = np.linalg.norm(np.linalg.inv(Tm), 2)
    Pm = rng.standard_normal((N, N))
    product = float(rng.uniform(0.0, max_product))
    Pm *= product / (t_norm * np.linalg.norm(Pm, 2))
    return Tm, Pm


def smoothed_values(rng, shape):
    """ Standard normal node values with one (1/4, 1/2, 1/4) pass over the
        interior nodes.
    """
    z = rng.standard_normal(shape)
    smooth = z.copy()
    smooth[1:-1] = 0.25 * z[:-2] + 0.5 * z[1:-1] + 0.25 * z[2:]
    return smooth


def random_dimension(rng, max_n, min_n=2):
    return int(rng.integers(min_n, max_n + 1))
