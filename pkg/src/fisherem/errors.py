"""Exception types raised by the fitting pipeline."""

import numpy as np


class FisherEMError(Exception):
    """Base class for all package errors."""


class DegenerateGroupError(FisherEMError, ValueError):
    """A soft group has (numerically) no mass.

    Restartable: the caller may retry from a different initialization.
    ``trace`` holds the log-likelihood values recorded before the failure.
    """

    def __init__(self, group, n_k, trace=None):
        self.group = int(group)
        self.n_k = float(n_k)
        self.trace = [] if trace is None else list(trace)
        super().__init__(f"group {self.group} is degenerate (soft count {self.n_k:.3g})")


class SingularCovarianceError(FisherEMError, np.linalg.LinAlgError):
    """The latent covariance of a group is not positive definite."""

    def __init__(self, group, detail=""):
        self.group = int(group)
        msg = f"latent covariance of group {self.group} is singular"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class FitError(FisherEMError, RuntimeError):
    """A fit aborted; ``trace`` carries the partial log-likelihood trace."""

    def __init__(self, message, trace=None):
        self.trace = [] if trace is None else list(trace)
        super().__init__(message)


class SubspaceRankWarning(UserWarning):
    """More discriminative axes were requested than the between matrix supports."""
