class ValidationError(ValueError):
    """Input violates a parameter invariant or a documented precondition."""


class PoleProximityError(ValidationError):
    """A rational coefficient is evaluated too close to a pole."""


class NoContactSolutionError(ValidationError):
    """The exact force-indentation relations have no root on the physical branch."""


class InfeasibleExtractionError(ValidationError):
    """Fitted anomaly cannot be explained by any admissible inclusion."""


class AsymptoticValidityWarning(UserWarning):
    """A smallness assumption of the first-order model is not well satisfied."""


class FiniteDifferenceWarning(UserWarning):
    """Richardson check of a finite-difference derivative disagrees."""


class NoAnomalyWarning(UserWarning):
    """Stiffness map shows no anomaly above the noise floor."""
