class HierCacheError(Exception):
    pass


class ConfigurationError(HierCacheError, ValueError):
    """Invalid instance parameters (K1, K2, N, prime) or mixed field contexts."""


class InputError(HierCacheError, ValueError):
    """Malformed raw input, e.g. a file of the wrong length."""


class DemandError(HierCacheError, ValueError):
    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class IntegrityError(HierCacheError, RuntimeError):
    """Cache contents and received transmissions disagree. Always a bug."""


class BudgetExceeded(HierCacheError):
    pass
