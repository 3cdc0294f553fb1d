# specflow settings.
#
# Module level constants. Library code reads them at call time through
# ``from specflow import settings`` so tests can patch individual values.

import logging
import os


logger = logging.getLogger(__name__)


# Truncation dimension used when a scenario does not name one.
DEFAULT_N = 8

# Dimension of randomly generated keyframe paths.
FUZZ_N = 6

# Number of time grid intervals for assembled systems.
DEFAULT_GRID_N = 200
MIN_GRID_N = 8

# Grid doubling stops here; the report is UNRESOLVED beyond it.
GRID_CAP = 2048

# Singular values below RANK_TOL * sigma_max count as zero, and a report is
# only accepted with a gap of at least SV_GAP_MIN around that threshold.
RANK_TOL = 1e-8
SV_GAP_MIN = 1e3

# Eigenvalue samples closer to zero than this flag a crossing as ambiguous.
DELTA_CROSS = 1e-6

SYMMETRY_TOL = 1e-10
JUNCTION_TOL = 1e-9

# Random endpoint operators are redrawn until their margin exceeds this.
RANDOM_MARGIN = 0.1

SCENARIO_SCHEMA = 'specflow.scenario/1'
REPORT_SCHEMA = 'specflow.report/1'


def _read_threads(default):
    value = os.environ.get('SPECFLOW_THREADS')
    if value is None:
        return default
    try:
        threads = int(value)
    except ValueError:
        logger.warning('Ignoring SPECFLOW_THREADS=%r, not an integer', value)
        return default
    return max(1, threads)


THREADS = _read_threads(os.cpu_count() or 1)

# Draw counts for ``specflow verify``. The full suite is the acceptance
# campaign; the axioms suite only runs the five axiom families.
CAMPAIGN_SIZES = {
    'full': {
        'index_paths': 200,
        'glued_paths': 50,
        'adjoint_paths': 50,
        'shift_triples': 50,
        'cokernel_paths': 20,
        'infinite_paths': 30,
        'constant_operators': 20,
        'trace_trials': 1000,
        'neumann_pairs': 200,
        'axiom_family': 10,
        'max_n': 8,
    },
    'axioms': {
        'axiom_family': 10,
        'max_n': 6,
    },
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'specflow': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': True,
        },
    },
}
