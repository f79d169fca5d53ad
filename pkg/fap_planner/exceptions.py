from __future__ import annotations


class FapPlannerError(Exception):
    """Root of every error the planner raises on purpose."""


class ScenarioError(FapPlannerError, ValueError):
    """A scenario file or object violates the schema or one of its invariants.

    ``field_path`` is the dotted location of the offending value, for example
    ``venue.buildings.3`` or ``ues.0.mcs_i``.
    """

    def __init__(self, message: str, field_path: str = "") -> None:
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


class InfeasibleScenarioError(FapPlannerError):
    """The feasible positioning subspace has no lattice point."""


class OffLatticeError(FapPlannerError, ValueError):
    """A position is not a lattice point of the positioning zone."""


class CertificationError(FapPlannerError):
    """Too few seeds reached the exhaustive-search optimum."""
