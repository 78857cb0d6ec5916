"""
Exception hierarchy of the lab
"""


class RigModError(ValueError):
    """Base class for every error raised by rigmod"""


class InvalidParameters(RigModError):
    """Model or operation parameters outside their admissible range"""


class EmptyGraph(RigModError):
    """Modularity is undefined for a graph without edges"""

    def __init__(self, message: str = "modularity is undefined for a graph with no edges"):
        super().__init__(message)


class TooLarge(RigModError):
    """Exhaustive search requested beyond its vertex limit"""


class EdgesOnlyIncidence(RigModError):
    """Exclusive-attribute statistics requested from an incidence that dropped V_i <= 1 attributes"""

    def __init__(self, operation: str):
        super().__init__(
            f"{operation} needs every attribute, but the incidence was sampled with edges_only=True"
        )


class BudgetExceeded(RigModError):
    """Expected memberships exceed the configured memory cap"""


class RegimeInvalid(RigModError):
    """Parameters outside the validity range of a theorem regime"""


class EmptyInput(RigModError):
    """Aggregation over no rows"""


class FormatError(RigModError):
    """Malformed edge-list, incidence or partition text"""
