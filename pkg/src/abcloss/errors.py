"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A distribution parameter lies outside the family's domain."""


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""


class DataSchemaError(ValueError):
    """An observed-data file violates the expected schema."""


class StallError(RuntimeError):
    """The sampler exhausted its proposal budget without an acceptance.

    Carries the partial traces accumulated before the stall so a run can
    be diagnosed from its output directory.
    """

    def __init__(self, message, generation, eps_trace, ess_trace, acceptance_trace):
        super().__init__(message)
        self.generation = generation
        self.eps_trace = list(eps_trace)
        self.ess_trace = list(ess_trace)
        self.acceptance_trace = list(acceptance_trace)
