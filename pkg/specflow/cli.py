""" The ``specflow`` console script.

    Parses argv into a connector request, runs it and prints the JSON
    response; the process exit status is the connector's status.
"""
import argparse
import json
import logging
import logging.config
import sys

from specflow import settings
from specflow.connector import SpecflowConnector


logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='specflow',
        description='Spectral flow and Fredholm index verification.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log at DEBUG level')
    commands = parser.add_subparsers(dest='cmd', metavar='command')

    flow = commands.add_parser('flow', help='spectral flow of a scenario')
    flow.add_argument('scenario')

    index = commands.add_parser('index', help='numerical Fredholm index')
    index.add_argument('scenario')
    index.add_argument('--grid-n', dest='grid_n', type=int)
    index.add_argument('--csv', help='write the singular values here')

    run = commands.add_parser('run', help='run the checks of a scenario')
    run.add_argument('scenario')
    run.add_argument('--out', help='write the report here')
    run.add_argument('--no-timing', dest='timing', action='store_false',
                     help='leave wall times out of the report')

    verify = commands.add_parser('verify', help='run a verification suite')
    verify.add_argument('--suite', choices=sorted(settings.CAMPAIGN_SIZES),
                        default='full')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--out', help='write the report here')
    verify.add_argument('--no-timing', dest='timing', action='store_false',
                        help='leave wall times out of the report')

    trace = commands.add_parser('trace', help='eigenvalue branches as CSV')
    trace.add_argument('scenario')
    trace.add_argument('--csv', required=True)
    trace.add_argument('--grid-n', dest='grid_n', type=int)
    return parser


def configure_logging(verbose=False):
    logging.config.dictConfig(settings.LOGGING)
    if verbose:
        logging.getLogger('specflow').setLevel(logging.DEBUG)


def main(argv=None, stdout=None):
    stdout = sys.stdout if stdout is None else stdout
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    request = dict((key, value) for key, value in vars(args).items()
                   if key != 'verbose' and value is not None)
    status, response = SpecflowConnector().run(request)
    if 'error' in response:
        logger.error('%s failed: %s', args.cmd, response['error'])
    # Reports written to --out are not repeated on stdout.
    if 'out' in response:
        response = dict((key, value) for key, value in response.items()
                        if key != 'report')
        response['exit_status'] = status
    stdout.write(json.dumps(response, sort_keys=True, indent=2) + '\n')
    return status


if __name__ == '__main__':
    sys.exit(main())
