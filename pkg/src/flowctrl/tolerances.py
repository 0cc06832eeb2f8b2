"""Central numeric tolerance configuration.

Every module reads its tolerances from one record so that feasibility,
region-membership, and oracle-comparison thresholds stay consistent across
the solver stack and its tests.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Shared numeric thresholds.

    feasibility: constraint satisfaction required of solver output.
    optimality: reduced-cost threshold for simplex termination.
    region: polyhedron membership / region de-duplication.
    oracle: comparison against independent oracles (pointwise LP checks).
    pivot: smallest acceptable simplex pivot magnitude.
    """

    feasibility: float = 1e-8
    optimality: float = 1e-9
    region: float = 1e-9
    oracle: float = 1e-6
    pivot: float = 1e-9


DEFAULT_TOL = Tolerances()
