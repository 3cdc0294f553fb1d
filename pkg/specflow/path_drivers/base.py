import numpy as np


class BasePathDriver(object):
    """ Sampler s -> A(s) behind an OperatorPath.

        Drivers return raw symmetric matrices; OperatorPath wraps them in
        PairOperators. Subclasses must be immutable once constructed.
    """
    family_id = None

    def __init__(self, *args, **kwargs):
        pass

    @property
    def N(self):
        """ Truncation dimension of every sampled matrix. """
        raise NotImplementedError

    def matrix_at(self, s):
        """ Returns the operator matrix at time s.

            :param s: A real time, possibly outside any window the path
            declares.
            :returns: ndarray -- an N x N symmetric matrix.
        """
        raise NotImplementedError

    def asymptote(self, sign):
        """ Limit of A(s) as s -> sign * infinity.

            :param sign: +1 or -1.
            :returns: ndarray or None -- None when the family has no limit.
        """
        return None

    def tail_deviation(self, T, sign):
        """ sup over sign * s >= T of ||A(s) - A(sign * infinity)||.

            The default samples a geometric ladder of times, which is exact
            for families whose deviation is monotone in |s|. Families with a
            closed form override it.

            :param T: tail radius, T > 0.
            :param sign: +1 (forward tail) or -1 (backward tail).
            :returns: float -- the deviation in the operator 2-norm, or inf
            when there is no asymptote.
        """
        limit = self.asymptote(sign)
        if limit is None:
            return float('inf')
        ladder = T * 2.0 ** np.arange(0, 16)
        return max(np.linalg.norm(self.matrix_at(sign * s) - limit, 2)
                   for s in ladder)

    def get_info(self):
        """ Scenario form of the family (the ``family`` key and its data).

            :returns: dict -- JSON-serializable description, or a dict with
            only ``family`` for drivers that cannot be serialized.
        """
        return {'family': self.family_id}
