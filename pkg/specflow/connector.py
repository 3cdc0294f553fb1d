import json
import logging

from specflow import checks, settings
from specflow.flow import branch_trace, spectral_flow
from specflow.fredholm import (assemble_augmented, numeric_index,
                               resolve_index)
from specflow.models import Scenario


""" Command dispatcher behind the ``specflow`` command line.

    A request is a dict of parameters (what the CLI parsed from argv). The
    connector validates the parameters of the requested command, runs it
    and collects a JSON-serializable response together with the exit
    status for the process.
"""


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_UNRESOLVED = 2


class SpecflowConnector(object):
    _version = '1.0'

    def __init__(self):
        self.status = EXIT_OK
        self.data = {}
        self.response = {}

    def get_commands(self):
        """ Returns a dict which maps command names to functions.

            The value is a tuple of the name of a method on this class and a
            dict saying which request parameters must be set (True) or must
            be absent (False). check_command_variables uses it so the
            command methods can assume their parameters exist.
        """
        return {'flow': ('__flow', {'scenario': True}),
                'index': ('__index', {'scenario': True}),
                'run': ('__run', {'scenario': True}),
                'verify': ('__verify', {'scenario': False}),
                'trace': ('__trace', {'scenario': True, 'csv': True}),
                }

    def get_allowed_params(self):
        return ['cmd', 'scenario', 'csv', 'suite', 'seed', 'out', 'grid_n',
                'timing']

    def check_command_variables(self, command_variables):
        for field in command_variables:
            if command_variables[field] and self.data.get(field) is None:
                return False
            elif not command_variables[field] and \
                    self.data.get(field) is not None:
                return False
        return True

    def run_command(self, func_name, command_variables):
        """ Runs one command, turning any failure into response['error']. """
        if not self.check_command_variables(command_variables):
            self.fail('Invalid arguments')
            return

        func = getattr(self, '_' + self.__class__.__name__ + func_name, None)
        if not callable(func):
            self.fail('Command failed')
            return

        try:
            func()
        except Exception as e:
            self.fail('%s' % e)
            logger.exception(e)

    def fail(self, message):
        self.response['error'] = message
        self.status = EXIT_FAILURE

    def run(self, request):
        """ Main entry point. Copies the allowed parameters from the request
            and dispatches on request['cmd'].

            :returns: (exit status, response dict)
        """
        for field in self.get_allowed_params():
            if field in request:
                self.data[field] = request[field]

        commands = self.get_commands()
        if 'cmd' in self.data:
            if self.data['cmd'] in commands:
                cmd = commands[self.data['cmd']]
                self.run_command(cmd[0], cmd[1])
            else:
                self.fail('Unknown command')
        else:
            self.fail('No command specified')

        return self.status, self.response

    def get_scenario(self):
        """ The scenario of the request, given as a dict or a file name. """
        source = self.data['scenario']
        if isinstance(source, dict):
            return Scenario.from_json(source)
        with open(source) as handle:
            try:
                data = json.load(handle)
            except ValueError as e:
                raise ValueError('Invalid scenario file %s: %s' % (source, e))
        return Scenario.from_json(data)

    def get_seed(self, default=0):
        seed = self.data.get('seed')
        return default if seed is None else int(seed)

    def get_grid_n(self, scenario):
        grid_n = self.data.get('grid_n')
        return scenario.grid_n if grid_n is None else int(grid_n)

    def set_report(self, report):
        timing = self.data.get('timing', True)
        self.response['report'] = report.get_info(include_timing=timing)
        self.status = report.exit_status
        if self.data.get('out'):
            with open(self.data['out'], 'w') as handle:
                handle.write(report.to_json(include_timing=timing))
            self.response['out'] = self.data['out']

    def __flow(self):
        """ Spectral flow of the scenario path, with the net number of
            sampled zero crossings as a diagnostic.
        """
        scenario = self.get_scenario()
        path = scenario.path
        self.response['scenario'] = scenario.id
        self.response['flow'] = spectral_flow(path)
        trace = branch_trace(path, scenario.grid_n + 1)
        self.response['net_crossings'] = trace.net_crossings
        self.response['ambiguous'] = trace.ambiguous

    def __index(self):
        """ Numerical index of the scenario's augmented operator.

            The singular values go to the ``csv`` file when one is named.
        """
        scenario = self.get_scenario()
        grid_n = self.get_grid_n(scenario)
        system = assemble_augmented(scenario.path, grid_n)
        report = numeric_index(system, scenario.tol)
        if not report.resolved:
            report = resolve_index(scenario.path, grid_n, scenario.tol)
        self.response['scenario'] = scenario.id
        self.response['index'] = report.get_info()
        self.response['shape_index'] = system.shape_index
        self.response['flow'] = spectral_flow(scenario.path)
        if self.data.get('csv'):
            checks.emit_singular_values(report, self.data['csv'])
            self.response['csv'] = self.data['csv']
        if not report.resolved:
            self.status = EXIT_UNRESOLVED

    def __run(self):
        scenario = self.get_scenario()
        self.set_report(checks.run_campaign([scenario], seed=scenario.seed))

    def __verify(self):
        suite = self.data.get('suite') or 'full'
        if suite not in settings.CAMPAIGN_SIZES:
            raise ValueError('Unknown suite %s' % suite)
        self.set_report(checks.verify(suite, self.get_seed()))

    def __trace(self):
        """ Writes the branch trace and its crossings sidecar. """
        scenario = self.get_scenario()
        grid_n = self.get_grid_n(scenario)
        trace, sidecar = checks.emit_trace(scenario.path, grid_n + 1,
                                           self.data['csv'])
        self.response['scenario'] = scenario.id
        self.response['csv'] = self.data['csv']
        self.response['crossings'] = sidecar
        self.response['net_crossings'] = trace.net_crossings
        self.response['flow'] = spectral_flow(scenario.path)
