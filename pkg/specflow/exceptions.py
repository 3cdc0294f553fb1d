""" Exceptions raised by specflow.

    The connector reports any of these to the caller as
    ``response['error']``, so messages are written for the end user.
"""


class SpecflowError(Exception):
    pass


class InputError(SpecflowError, ValueError):
    """ Dimension mismatches and malformed arguments. """


class ValidationError(InputError):
    """ A scenario field failed validation.

        ``field`` holds the dotted path of the offending field, for example
        ``path.matrices[2]``.
    """
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super(ValidationError, self).__init__('%s: %s' % (field, message))


class NotInvertible(SpecflowError):
    pass


class EndpointNotInvertible(NotInvertible):
    pass


class JunctionNotInvertible(NotInvertible):
    pass


class ShiftOnSpectrum(SpecflowError):
    pass


class WindowTooTight(SpecflowError):
    pass


class TailNotSettled(SpecflowError):
    pass


class MismatchAtJunction(SpecflowError):
    pass


class PerturbationTooLarge(SpecflowError):
    pass
