import json
import logging

from specflow import settings
from specflow.exceptions import InputError, ValidationError
from specflow.flow import OperatorPath
from specflow.scale import GrowthFunction


logger = logging.getLogger(__name__)

CHECKS = ('index_theorem', 'axioms', 'concatenation', 'adjoint',
          'shift_lemma', 'homotopy', 'cokernel', 'trace_bounds', 'neumann',
          'constant_solver')

PASS = 'PASS'
FAIL = 'FAIL'
UNRESOLVED = 'UNRESOLVED'
STATUSES = (PASS, FAIL, UNRESOLVED)

DEFAULT_TRIALS = 100
MAX_SEED = 2 ** 64


class Scenario(object):
    """ A path together with the checks to run on it.

        ``data`` keeps the scenario form the object was built from, which
        is what a report hands back for replays.
    """

    def __init__(self, scenario_id, path, checks, grid_n=None, tol=None,
                 seed=0, trials=DEFAULT_TRIALS, data=None):
        if not checks:
            raise InputError('A scenario needs at least one check')
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise InputError('Unknown checks: %s' % ', '.join(unknown))
        self.id = scenario_id
        self.path = path
        self.checks = tuple(checks)
        self.grid_n = settings.DEFAULT_GRID_N if grid_n is None else grid_n
        self.tol = settings.RANK_TOL if tol is None else tol
        self.seed = int(seed)
        self.trials = int(trials)
        self.data = data

    @classmethod
    def from_json(cls, data):
        """ Validates and builds a scenario.

            Raises ValidationError naming the offending field.
        """
        if not isinstance(data, dict):
            raise ValidationError('scenario', 'expected an object')
        schema = data.get('schema', settings.SCENARIO_SCHEMA)
        if schema != settings.SCENARIO_SCHEMA:
            raise ValidationError('schema', 'unsupported schema %r' % schema)
        scenario_id = data.get('id')
        if not isinstance(scenario_id, str) or not scenario_id:
            raise ValidationError('id', 'expected a non-empty string')

        gf = None
        if data.get('growth') is not None:
            gf = GrowthFunction.from_json(data['growth'], 'growth')
        if 'path' not in data:
            raise ValidationError('path', 'required')
        path = OperatorPath.from_json(data['path'], gf=gf, field='path')

        grid_n = _integer(data, 'grid_n', settings.DEFAULT_GRID_N)
        if grid_n < settings.MIN_GRID_N:
            raise ValidationError('grid_n', 'must be at least %d'
                                  % settings.MIN_GRID_N)
        try:
            tol = float(data.get('tol', settings.RANK_TOL))
        except (TypeError, ValueError):
            raise ValidationError('tol', 'not a number')
        if not 0 < tol < 1:
            raise ValidationError('tol', 'must lie in (0, 1)')

        checks = data.get('checks')
        if not isinstance(checks, list) or not checks:
            raise ValidationError('checks', 'expected a non-empty list')
        for k, check in enumerate(checks):
            if check not in CHECKS:
                raise ValidationError('checks[%d]' % k,
                                      'unknown check %r' % check)
        seed = _integer(data, 'seed', 0)
        if not 0 <= seed < MAX_SEED:
            raise ValidationError('seed', 'must be a 64-bit unsigned integer')
        trials = _integer(data, 'trials', DEFAULT_TRIALS)
        if trials < 1:
            raise ValidationError('trials', 'must be positive')
        return cls(scenario_id, path, checks, grid_n=grid_n, tol=tol,
                   seed=seed, trials=trials, data=data)

    @classmethod
    def from_path(cls, scenario_id, path, checks, seed, **kwargs):
        """ Wraps a generated path; the scenario form is rebuilt from it. """
        scenario = cls(scenario_id, path, checks, seed=seed, **kwargs)
        scenario.data = scenario.get_info()
        return scenario

    def get_info(self):
        if self.data is not None:
            return self.data
        return {'schema': settings.SCENARIO_SCHEMA,
                'id': self.id,
                'growth': self.path.gf.get_info(),
                'path': self.path.get_info(),
                'grid_n': self.grid_n,
                'tol': self.tol,
                'checks': list(self.checks),
                'seed': self.seed,
                'trials': self.trials}

    def __repr__(self):
        return 'Scenario(%r, checks=%s)' % (self.id, ','.join(self.checks))


def _integer(data, key, default):
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(key, 'expected an integer')
    return value


class CheckVerdict(object):
    """ Outcome of one check on one scenario. """

    def __init__(self, scenario_id, check, status, measured, expected,
                 provenance, inputs=None, wall_time=0.0):
        if status not in STATUSES:
            raise InputError('Unknown status %r' % status)
        self.scenario_id = scenario_id
        self.check = check
        self.status = status
        self.measured = measured
        self.expected = expected
        self.provenance = provenance
        self.inputs = inputs
        self.wall_time = wall_time

    @property
    def passed(self):
        return self.status == PASS

    def sort_key(self):
        return (self.scenario_id, self.check)

    def get_info(self, include_timing=True):
        info = {'scenario': self.scenario_id,
                'check': self.check,
                'status': self.status,
                'measured': self.measured,
                'expected': self.expected,
                'provenance': self.provenance}
        # Replay inputs are only kept for verdicts that did not pass.
        if self.status != PASS and self.inputs is not None:
            info['inputs'] = self.inputs
        if include_timing:
            info['wall_time'] = self.wall_time
        return info

    def __repr__(self):
        return 'CheckVerdict(%s, %s, %s)' % (self.scenario_id, self.check,
                                             self.status)


class CampaignReport(object):
    def __init__(self, verdicts, suite=None, seed=None, wall_time=0.0):
        self.verdicts = sorted(verdicts, key=lambda v: v.sort_key())
        self.suite = suite
        self.seed = seed
        self.wall_time = wall_time

    @property
    def summary(self):
        counts = dict((status, 0) for status in STATUSES)
        for verdict in self.verdicts:
            counts[verdict.status] += 1
        return counts

    @property
    def exit_status(self):
        """ 0 when every check passed, 1 on any failure and 2 when the worst
            outcome is UNRESOLVED.
        """
        summary = self.summary
        if summary[FAIL]:
            return 1
        if summary[UNRESOLVED]:
            return 2
        return 0

    def failures(self):
        return [v for v in self.verdicts if v.status == FAIL]

    def get_info(self, include_timing=True):
        info = {'schema': settings.REPORT_SCHEMA,
                'suite': self.suite,
                'seed': self.seed,
                'summary': self.summary,
                'exit_status': self.exit_status,
                'verdicts': [v.get_info(include_timing)
                             for v in self.verdicts]}
        if include_timing:
            info['wall_time'] = self.wall_time
        return info

    def to_json(self, include_timing=True):
        return json.dumps(self.get_info(include_timing), sort_keys=True,
                          indent=2)
