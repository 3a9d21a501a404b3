class SolverFailure(RuntimeError):
    """A forward solve broke down; estimators score the candidate as +inf."""


class SingularSystem(SolverFailure):
    """The discrete Helmholtz operator is (near-)singular for the given wavenumber."""


class ConfigError(ValueError):
    pass
