""" Verification checks and campaigns.

    Each check compares a measured quantity against the value an identity
    predicts and returns CheckVerdicts. A check whose numerics do not
    resolve reports UNRESOLVED rather than FAIL.
"""
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from specflow import generators, settings
from specflow.exceptions import JunctionNotInvertible, SpecflowError
from specflow.flow import (OperatorPath, branch_trace, concatenate,
                           direct_sum, linear_homotopy, spectral_flow)
from specflow.fredholm import (DiscretePath, assemble_augmented,
                               assemble_concatenation_family,
                               cokernel_vs_adjoint_kernel,
                               constant_path_solve, energy_bound_holds,
                               ev_pair_section, ev_section, evaluation_map,
                               neumann_invert, numeric_index, resolve_index,
                               residual_in_system)
from specflow.hessian import spectral_content
from specflow.models import (CHECKS, FAIL, PASS, UNRESOLVED, CampaignReport,
                             CheckVerdict, Scenario)
from specflow.path_drivers.closed_form_driver import ArctanDriver
from specflow.path_drivers.composite_driver import ConstantDriver
from specflow.scale import GrowthFunction, r_norm


logger = logging.getLogger(__name__)

# Labels of the identities that expected values come from. Every verdict
# cites one of them as "label: statement".
THEOREMS = {
    'index-theorem': 'index equals spectral flow',
    'axiom-homotopy': 'spectral flow is constant along homotopies',
    'axiom-constant': 'a constant path has spectral flow 0',
    'axiom-direct-sum': 'spectral flow is additive under direct sums',
    'axiom-normalization': 'the arctan path has spectral flow 1',
    'axiom-catenation': 'spectral flow is additive under catenation',
    'concatenation': 'index additive under concatenation',
    'adjoint-index': 'adjoint index is the negative index',
    'shift-lemma': 'index shift equals spectral content',
    'index-homotopy': 'index constant along homotopies',
    'cokernel-duality': 'cokernel matches adjoint kernel',
    'trace-bound': 'trace bound sqrt(2)',
    'quantitative-invertibility': 'perturbed inverse bound',
    'constant-path-solution': 'constant path solution is second order',
}

PROVENANCE = {
    'index_theorem': 'index-theorem',
    'axiom_homotopy': 'axiom-homotopy',
    'axiom_constant': 'axiom-constant',
    'axiom_direct_sum': 'axiom-direct-sum',
    'axiom_normalization': 'axiom-normalization',
    'axiom_catenation': 'axiom-catenation',
    'concatenation': 'concatenation',
    'adjoint': 'adjoint-index',
    'shift_lemma': 'shift-lemma',
    'homotopy': 'index-homotopy',
    'cokernel': 'cokernel-duality',
    'trace_bounds': 'trace-bound',
    'neumann': 'quantitative-invertibility',
    'constant_solver': 'constant-path-solution',
}


def provenance(name):
    label = PROVENANCE.get(name)
    if label is None:
        return None
    return '%s: %s' % (label, THEOREMS[label])


FAMILY_R = (0.0, 0.25, 0.5, 0.75, 1.0)
HOMOTOPY_SAMPLES = 11
RESIDUAL_RATIO = (3.0, 5.0)


def _status(ok, resolved=True):
    if not resolved:
        return UNRESOLVED
    return PASS if ok else FAIL


def _index(path, grid_n, tol, shifts=None):
    """ Numeric index together with the dimension count N - k_b.

        An unresolved first attempt falls back to grid doubling.
    """
    system = assemble_augmented(path, grid_n, shifts)
    report = numeric_index(system, tol)
    if not report.resolved and grid_n * 2 <= settings.GRID_CAP:
        report = resolve_index(path, grid_n * 2, tol, shifts)
    return report, system.shape_index


def check_index_theorem(scenario, rng):
    path = scenario.path
    flow = spectral_flow(path)
    report, shape_index = _index(path, scenario.grid_n, scenario.tol)
    measured = dict(report.get_info(), shape_index=shape_index)
    ok = report.index == flow and shape_index == flow
    resolved = report.resolved
    if path.kind != 'finite':
        doubled, _ = _index(path.with_horizon(2.0 * path.T), scenario.grid_n,
                            scenario.tol)
        measured['doubled_horizon_index'] = doubled.index
        ok = ok and doubled.index == flow
        resolved = resolved and doubled.resolved
    return [('index_theorem', _status(ok, resolved), measured,
             {'index': flow, 'shape_index': flow})]


def _split_point(path):
    """ An interior time with an invertible operator, preferring the
        middle of the window.
    """
    middle = 0.5 * (path.start + path.end)
    candidates = sorted(np.linspace(path.start, path.end, 11)[1:-1],
                        key=lambda s: (abs(s - middle), s))
    if path.start < 0.0 < path.end:
        candidates.insert(0, 0.0)
    for s in candidates:
        if path.at(s).inv_margin > settings.RANDOM_MARGIN:
            return float(s)
    best = max(candidates, key=lambda s: path.at(s).inv_margin)
    if not path.at(best).invertible:
        raise JunctionNotInvertible('No invertible split point in [%s, %s]'
                                    % (path.start, path.end))
    return float(best)


def check_concatenation(scenario, rng):
    path = scenario.path
    if path.kind != 'finite':
        path = path.restrict(path.start, path.end)
    split = _split_point(path)
    left = path.restrict(path.start, split)
    right = path.restrict(split, path.end)
    glued = concatenate(left, right)
    grid_n, tol = scenario.grid_n, scenario.tol
    half = max(settings.MIN_GRID_N, grid_n // 2)

    full, _ = _index(glued, grid_n, tol)
    first, _ = _index(left, half, tol)
    second, _ = _index(right, half, tol)
    family = [numeric_index(assemble_concatenation_family(path, r, half,
                                                          split), tol)
              for r in FAMILY_R]
    flows = (spectral_flow(glued), spectral_flow(left), spectral_flow(right))
    measured = {'split': split,
                'index': full.index,
                'left_index': first.index,
                'right_index': second.index,
                'family_indices': [report.index for report in family],
                'spectral_flows': list(flows)}
    ok = (full.index == first.index + second.index
          and flows[0] == flows[1] + flows[2]
          and all(report.index == full.index for report in family))
    resolved = all(report.resolved for report in [full, first, second]
                   + family)
    return [('concatenation', _status(ok, resolved), measured,
             {'index': first.index + second.index,
              'family_index': full.index})]


def check_adjoint(scenario, rng):
    path = scenario.path
    report, _ = _index(path, scenario.grid_n, scenario.tol)
    adjoint, _ = _index(path.negative_adjoint(), scenario.grid_n,
                        scenario.tol)
    return [('adjoint',
             _status(report.index == -adjoint.index,
                     report.resolved and adjoint.resolved),
             {'index': report.index, 'adjoint_index': adjoint.index},
             {'adjoint_index': -report.index})]


def check_shift_lemma(scenario, rng):
    path = scenario.path
    start, end = path.start_operator, path.end_operator
    lam = (generators.random_shift(rng, start),
           generators.random_shift(rng, end))
    mu = (generators.random_shift(rng, start),
          generators.random_shift(rng, end))
    lower, _ = _index(path, scenario.grid_n, scenario.tol, shifts=lam)
    upper, _ = _index(path, scenario.grid_n, scenario.tol, shifts=mu)
    expected = (spectral_content(start, lam[0], mu[0])
                - spectral_content(end, lam[1], mu[1]))
    measured = upper.index - lower.index
    return [('shift_lemma',
             _status(measured == expected, lower.resolved and upper.resolved),
             {'index_difference': measured, 'lambda': list(lam),
              'mu': list(mu)},
             {'index_difference': expected})]


def check_homotopy(scenario, rng):
    """ Index and flow along the straight-line homotopy to a path whose
        endpoint operators are moved by less than half their inverse
        margin, so the boundary projections vary with r while every member
        keeps invertible endpoints.
    """
    path = scenario.path
    if path.kind != 'finite':
        path = path.restrict(path.start, path.end)
    target = generators.perturbed_endpoint_path(rng, path)
    members = [linear_homotopy(path, target, r)
               for r in np.linspace(0.0, 1.0, HOMOTOPY_SAMPLES)]
    margins = [min(member.start_operator.inv_margin,
                   member.end_operator.inv_margin) for member in members]
    drift = max(
        float(np.max(np.abs(target.matrix_at(s) - path.matrix_at(s))))
        for s in (path.start, path.end))
    measured = {'min_endpoint_margin': min(margins), 'endpoint_drift': drift}
    if not all(member.start_operator.invertible
               and member.end_operator.invertible for member in members):
        return [('homotopy', FAIL, measured, {'endpoints': 'invertible'})]
    reports = [_index(member, scenario.grid_n, scenario.tol)[0]
               for member in members]
    measured['indices'] = [report.index for report in reports]
    measured['flows'] = [spectral_flow(member) for member in members]
    constant = (len(set(measured['indices'])) == 1
                and len(set(measured['flows'])) == 1)
    return [('homotopy',
             _status(constant, all(report.resolved for report in reports)),
             measured,
             {'index': measured['indices'][0],
              'flow': measured['flows'][0]})]


def check_cokernel(scenario, rng):
    comparison = cokernel_vs_adjoint_kernel(scenario.path, scenario.grid_n,
                                            scenario.tol)
    return [('cokernel',
             _status(comparison.passed, comparison.status != UNRESOLVED),
             comparison.get_info(),
             {'dim_adjoint_kernel': comparison.dim_coker,
              'max_angle_at_most': comparison.bound})]


def _trace_sample(rng, gf, grid_n, trial):
    """ Rotates through smoothed noise, paths constant in s and scaled
        exponential sections.
    """
    N = gf.N
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    kind = trial % 3
    if kind == 0:
        return DiscretePath(grid, generators.smoothed_values(
            rng, (grid_n + 1, N)), gf=gf)
    if kind == 1:
        return DiscretePath(grid, np.tile(rng.standard_normal(N),
                                          (grid_n + 1, 1)), gf=gf)
    rates = np.sqrt(gf.values) * rng.uniform(0.5, 2.0)
    return DiscretePath(grid, np.exp(-np.outer(grid, rates))
                        * rng.standard_normal(N), gf=gf)


def check_trace_bounds(scenario, rng):
    gf = scenario.path.gf
    grid_n = scenario.grid_n
    worst, bound = 0.0, None
    for trial in range(scenario.trials):
        evaluation = evaluation_map(_trace_sample(rng, gf, grid_n, trial), gf)
        worst = max(worst, evaluation.ratio)
        bound = evaluation.bound

    exact, energy = True, 0.0
    for _ in range(max(1, scenario.trials // 10)):
        x0, x1 = rng.standard_normal(gf.N), rng.standard_normal(gf.N)
        section = ev_section(x0, gf, grid_n)
        pair = ev_pair_section(x0, x1, gf, grid_n)
        exact = exact and np.array_equal(section.values[0], x0) \
            and np.array_equal(pair.values[0], x0) \
            and np.array_equal(pair.values[-1], x1)
        energy = max(energy, section.path_norm() ** 2
                     / r_norm(x0, 0.5, gf) ** 2)
    ok = worst <= bound and exact and energy <= 2.0
    return [('trace_bounds', _status(ok),
             {'max_ratio': worst, 'sections_exact': exact,
              'max_section_energy': energy},
             {'max_ratio_at_most': bound, 'sections_exact': True,
              'max_section_energy_at_most': 2.0})]


def check_neumann(scenario, rng):
    violations, worst = 0, 0.0
    for _ in range(scenario.trials):
        N = generators.random_dimension(rng, max(2, scenario.path.N))
        certificate = neumann_invert(*generators.random_neumann_pair(rng, N))
        worst = max(worst, certificate.measured / certificate.bound)
        if not certificate.holds:
            violations += 1
    return [('neumann', _status(violations == 0),
             {'violations': violations, 'max_measured_over_bound': worst},
             {'violations': 0})]


def check_constant_solver(scenario, rng):
    """ Solves with the start operator held constant on a window of the
        same length, and checks bijectivity, second order residuals and
        the energy bound.
    """
    path = scenario.path
    path.validate()
    A = path.start_operator
    T = 0.5 * (path.end - path.start)
    N = A.N
    x, y = rng.standard_normal(N), rng.standard_normal(N)
    u, w = rng.standard_normal(N), rng.standard_normal(N)

    def source(s):
        return math.cos(s) * u + s * w

    residuals = []
    for grid_n in (scenario.grid_n, 2 * scenario.grid_n):
        eta = DiscretePath.from_function(source, -T, T, grid_n, gf=A.gf)
        xi = constant_path_solve(A, T, eta, x, y)
        residuals.append(residual_in_system(A, xi, eta))
        if grid_n == scenario.grid_n:
            holds, lhs, rhs = energy_bound_holds(A, xi, eta, x, y)
    ratio = residuals[0] / residuals[1] if residuals[1] > 0 else float('inf')

    constant = OperatorPath(ConstantDriver(A.entries), window=(-T, T),
                            gf=A.gf, metric=A.metric)
    report, _ = _index(constant, scenario.grid_n, scenario.tol)
    ok = (report.dim_ker == 0 and report.dim_coker == 0 and holds
          and RESIDUAL_RATIO[0] <= ratio <= RESIDUAL_RATIO[1])
    return [('constant_solver', _status(ok, report.resolved),
             {'dim_ker': report.dim_ker, 'dim_coker': report.dim_coker,
              'residual_ratio': ratio, 'energy': lhs, 'energy_bound': rhs},
             {'dim_ker': 0, 'dim_coker': 0,
              'residual_ratio_in': list(RESIDUAL_RATIO)})]


def _axiom(name, values):
    """ values: list of (measured, expected) integer pairs. """
    mismatches = sum(1 for measured, expected in values
                     if measured != expected)
    return ('axiom_' + name, _status(mismatches == 0),
            {'draws': len(values), 'mismatches': mismatches,
             'values': [measured for measured, _ in values]},
            {'values': [expected for _, expected in values]})


def axiom_verdicts(rng, family_size, max_n):
    """ The five spectral flow axioms on freshly drawn families. """
    homotopy, constant, summed, normalization, catenation = [], [], [], [], []
    for _ in range(family_size):
        N = generators.random_dimension(rng, max_n)
        first = generators.random_path(rng, N)
        # A second path whose endpoints sit within half the margin of the
        # first one; the homotopy between them keeps invertible endpoints.
        start = first.matrix_at(first.start) + generators.random_perturbation(
            rng, first.start_operator)
        end = first.matrix_at(first.end) + generators.random_perturbation(
            rng, first.end_operator)
        second = OperatorPath(
            generators.random_keyframes(rng, N, first.start, first.end,
                                        first=start, last=end),
            window=(first.start, first.end))
        expected = spectral_flow(first)
        homotopy.extend(
            (spectral_flow(linear_homotopy(first, second, r)), expected)
            for r in np.linspace(0.0, 1.0, HOMOTOPY_SAMPLES))

        fixed = OperatorPath(ConstantDriver(generators.random_endpoint(rng,
                                                                       N)))
        constant.append((spectral_flow(fixed), 0))

        third = generators.random_path(rng, generators.random_dimension(
            rng, max_n))
        summed.append((spectral_flow(direct_sum(first, third)),
                       spectral_flow(first) + spectral_flow(third)))

        shift = float(rng.uniform(-0.5, 0.5))
        line = OperatorPath(ArctanDriver([shift]), kind='line', T=10.0)
        normalization.append((spectral_flow(line), 1))

        glued = generators.random_glued_path(rng, N)
        left = glued.restrict(glued.start, 0.0)
        right = glued.restrict(0.0, glued.end)
        catenation.append((spectral_flow(concatenate(left, right)),
                           spectral_flow(left) + spectral_flow(right)))
    return [_axiom('homotopy', homotopy), _axiom('constant', constant),
            _axiom('direct_sum', summed),
            _axiom('normalization', normalization),
            _axiom('catenation', catenation)]


def check_axioms(scenario, rng):
    return axiom_verdicts(rng, scenario.trials, max(2, scenario.path.N))


CHECK_FUNCTIONS = {
    'index_theorem': check_index_theorem,
    'axioms': check_axioms,
    'concatenation': check_concatenation,
    'adjoint': check_adjoint,
    'shift_lemma': check_shift_lemma,
    'homotopy': check_homotopy,
    'cokernel': check_cokernel,
    'trace_bounds': check_trace_bounds,
    'neumann': check_neumann,
    'constant_solver': check_constant_solver,
}


def run_scenario(scenario):
    """ Runs the scenario's checks and returns their verdicts.

        Each check draws from its own generator seeded from the scenario
        seed, so the outcome of a check does not depend on which other
        checks were requested.
    """
    seeds = dict(zip(CHECKS, generators.spawn_seeds(scenario.seed,
                                                    len(CHECKS))))
    verdicts = []
    for check in scenario.checks:
        started = time.perf_counter()
        rng = generators.rng_for(seeds[check])
        try:
            outcomes = CHECK_FUNCTIONS[check](scenario, rng)
        except SpecflowError as e:
            logger.warning('check %s on %s failed: %s', check, scenario.id, e)
            outcomes = [(check, FAIL, {'error': '%s' % e}, None)]
        except Exception as e:
            logger.exception(e)
            outcomes = [(check, FAIL, {'error': '%s' % e}, None)]
        elapsed = time.perf_counter() - started
        for name, status, measured, expected in outcomes:
            logger.debug('%s %s: %s', scenario.id, name, status)
            verdicts.append(CheckVerdict(
                scenario.id, name, status, measured, expected,
                provenance(name),
                inputs=scenario.get_info(), wall_time=elapsed))
    return verdicts


def run_axiom_suite(seed, family_size=None, max_n=None):
    sizes = settings.CAMPAIGN_SIZES['axioms']
    family_size = sizes['axiom_family'] if family_size is None else family_size
    max_n = sizes['max_n'] if max_n is None else max_n
    started = time.perf_counter()
    scenario = _axiom_scenario('axioms', seed, family_size, max_n)
    return CampaignReport(run_scenario(scenario), suite='axioms', seed=seed,
                          wall_time=time.perf_counter() - started)


def run_campaign(scenarios, threads=None, suite=None, seed=None):
    """ Runs scenarios on a thread pool; verdicts come back sorted by
        (scenario id, check) whatever the completion order.
    """
    threads = settings.THREADS if threads is None else threads
    started = time.perf_counter()
    scenarios = list(scenarios)
    workers = max(1, min(threads, len(scenarios)))
    verdicts = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(run_scenario, scenarios):
            verdicts.extend(result)
    report = CampaignReport(verdicts, suite=suite, seed=seed,
                            wall_time=time.perf_counter() - started)
    logger.info('campaign finished: %s', report.summary)
    return report


def emit_trace(path, grid_n, out):
    """ Writes the branch trace of a path as CSV.

        ``out`` receives rows (time, branch_label, value); the crossings go
        to a sidecar file next to it, ``trace.csv`` giving
        ``trace.crossings.csv``.

        :returns: (BranchTrace, sidecar file name)
    """
    trace = branch_trace(path, grid_n)
    root, ext = os.path.splitext(out)
    sidecar = root + '.crossings' + (ext or '.csv')
    with open(out, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['time', 'branch_label', 'value'])
        for t, label, value in trace.rows():
            writer.writerow([repr(float(t)), label, repr(float(value))])
    with open(sidecar, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['time', 'direction', 'eigen_index', 'ambiguous'])
        for crossing in trace.crossings:
            writer.writerow([repr(crossing.time), crossing.direction,
                             crossing.eigen_index, int(crossing.ambiguous)])
    return trace, sidecar


def emit_singular_values(report, out):
    """ Singular values of an IndexReport as CSV (k, value). """
    with open(out, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['k', 'value'])
        for k, value in enumerate(report.singular_values):
            writer.writerow([k, repr(float(value))])


def load_builtin_scenarios():
    filename = os.path.join(os.path.dirname(__file__), 'fixtures',
                            'builtin_scenarios.json')
    with open(filename) as handle:
        data = json.load(handle)
    return [Scenario.from_json(item) for item in data['scenarios']]


def _constant_identity(N):
    return OperatorPath(ConstantDriver(np.eye(N)), window=(-1.0, 1.0))


def _axiom_scenario(scenario_id, seed, family_size, max_n):
    return Scenario.from_path(scenario_id, _constant_identity(max_n),
                              ['axioms'], seed, trials=family_size)


def _fuzz(prefix, count, seed, build, checks, **kwargs):
    scenarios = []
    for k, draw_seed in enumerate(generators.spawn_seeds(seed, count)):
        path = build(generators.rng_for(draw_seed), k)
        scenarios.append(Scenario.from_path('%s-%03d' % (prefix, k), path,
                                            checks, draw_seed, **kwargs))
    return scenarios


def full_suite_scenarios(seed, sizes=None):
    """ The scenarios of ``specflow verify --suite full``. """
    sizes = settings.CAMPAIGN_SIZES['full'] if sizes is None else sizes
    max_n = sizes['max_n']
    family_seeds = generators.spawn_seeds(seed, 12)

    def random_finite(rng, k):
        return generators.random_path(
            rng, generators.random_dimension(rng, max_n))

    def random_adjoint(rng, k):
        N = generators.random_dimension(rng, max_n)
        if k % 5 == 4:
            return generators.random_symmetrizable_path(rng, N)
        return generators.random_path(rng, N)

    def random_glued(rng, k):
        return generators.random_glued_path(
            rng, generators.random_dimension(rng, max_n))

    def random_infinite(rng, k):
        kind = ('forward', 'backward', 'line')[k % 3]
        return generators.random_path(
            rng, generators.random_dimension(rng, max_n), kind=kind)

    def random_constant(rng, k):
        op = generators.random_constant_operator(
            rng, generators.random_dimension(rng, max_n))
        return OperatorPath(ConstantDriver(op.entries), window=(-1.0, 1.0))

    scenarios = list(load_builtin_scenarios())
    scenarios += _fuzz('fuzz-index', sizes['index_paths'], family_seeds[0],
                       random_finite, ['index_theorem'])
    scenarios += _fuzz('glued', sizes['glued_paths'], family_seeds[1],
                       random_glued, ['concatenation'])
    scenarios += _fuzz('adjoint', sizes['adjoint_paths'], family_seeds[2],
                       random_adjoint, ['adjoint'])
    scenarios += _fuzz('shift', sizes['shift_triples'], family_seeds[3],
                       random_finite, ['shift_lemma'])
    scenarios += _fuzz('cokernel', sizes['cokernel_paths'], family_seeds[4],
                       random_finite, ['cokernel'])
    scenarios += _fuzz('infinite', sizes['infinite_paths'], family_seeds[5],
                       random_infinite, ['index_theorem'])
    scenarios += _fuzz('constant', sizes['constant_operators'],
                       family_seeds[6], random_constant,
                       ['index_theorem', 'constant_solver'])
    scenarios += _fuzz('homotopy', sizes['axiom_family'], family_seeds[7],
                       random_finite, ['homotopy'])

    trace_path = OperatorPath(ConstantDriver(np.eye(16)), window=(0.0, 1.0),
                              gf=GrowthFunction.poly(1.0, 16))
    scenarios.append(Scenario.from_path('trace-bound', trace_path,
                                        ['trace_bounds'], family_seeds[8],
                                        trials=sizes['trace_trials']))
    scenarios.append(Scenario.from_path('neumann', _constant_identity(max_n),
                                        ['neumann'], family_seeds[9],
                                        trials=sizes['neumann_pairs']))
    scenarios.append(_axiom_scenario('axioms', family_seeds[10],
                                     sizes['axiom_family'], max_n))
    return scenarios


def verify(suite='full', seed=0, threads=None):
    """ Runs one of the named verification suites. """
    if suite not in settings.CAMPAIGN_SIZES:
        raise ValueError('Unknown suite %r' % suite)
    if suite == 'axioms':
        sizes = settings.CAMPAIGN_SIZES['axioms']
        scenarios = [_axiom_scenario('axioms', generators.spawn_seeds(
            seed, 1)[0], sizes['axiom_family'], sizes['max_n'])]
    else:
        scenarios = full_suite_scenarios(seed)
    logger.info('verify %s with seed %s: %d scenarios', suite, seed,
                len(scenarios))
    return run_campaign(scenarios, threads=threads, suite=suite, seed=seed)
