"""Exception hierarchy shared by all credalnet modules."""


class CredalNetError(Exception):
    """Base class for every error raised by credalnet."""


class InvalidNetworkError(CredalNetError, ValueError):
    """A network or its credal sets violate a structural invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ZeroProbabilityEvidenceError(CredalNetError, ValueError):
    """The evidence has zero probability, so the posterior is undefined."""


class ZeroLikelihoodError(CredalNetError, ValueError):
    """p(query, evidence) is zero: the log posterior likelihood is -inf."""


class CapExceededError(CredalNetError, ValueError):
    """A size cap guarding an exponential computation was exceeded."""


class InfeasibleCredalSetError(CredalNetError, ValueError):
    """A constraint set describes an empty set of distributions."""


class IterationLimitError(CredalNetError, RuntimeError):
    """An iterative procedure hit its iteration cap without converging."""
