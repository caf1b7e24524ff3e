"""Exception types shared across the package."""


class GraphCorrError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(GraphCorrError):
    """Factorization failed even at the maximum ridge of the policy."""


class ZeroVarianceColumn(GraphCorrError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero empirical variance")


class TooFewRows(GraphCorrError):
    """Fewer than two rows remain after pruning."""


class EmptyTrace(GraphCorrError):
    """Operation requires at least one post-burn-in iteration."""


class LengthMismatch(GraphCorrError):
    """Post-burn-in series lengths differ in strict mode."""


class DegenerateUncertainty(GraphCorrError):
    """A chain's scaled posterior band has zero width."""


class ConstantRanks(GraphCorrError):
    """A rank vector has zero variance; rank correlation undefined."""


class DegenerateVariance(GraphCorrError):
    """Edge-strength variance rho*(1-rho) vanishes at rho in {0, 1}."""


class DegenerateClass(GraphCorrError):
    """Class-wise summary needs >= 2 classes with >= 2 members each."""


class ChainDiverged(GraphCorrError):
    """Correlation block accepted nothing over a long post-burn-in window."""


class BadInput(GraphCorrError):
    """Malformed input file or configuration."""
