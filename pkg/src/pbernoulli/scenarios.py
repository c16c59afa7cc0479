"""Named example problems shipped with the package and their cached minimizers."""

from __future__ import annotations

import math
from functools import lru_cache

from .energy import Datum, ProblemSpec
from .minimize import MinimizeConfig, MinimizeResult, minimize

SCENARIOS = {
    # unit square, linear datum from -1 to +1 across x, free top and bottom edges
    "strip": lambda p: ProblemSpec.from_Lambda(p, 3.0, datum=Datum("strip", {"a": 1.0, "b": 1.0}),
                                               center=(0.5, 0.5), half_side=0.5),
    # quarter-plane positive cone centered on the upward axis
    "wedge": lambda p: ProblemSpec.from_Lambda(
        p, 1.0, datum=Datum("cone_trace", {"omega": math.pi / 2, "start": math.pi / 4})),
    "two_plane": lambda p: ProblemSpec.from_Lambda(
        p, 3.0, datum=Datum("two_plane", {"alpha": 1.0, "beta": 1.0})),
}


def scenario_spec(name: str, p: float = 2.0) -> ProblemSpec:
    try:
        return SCENARIOS[name](p)
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


@lru_cache(maxsize=16)
def scenario_minimizer(name: str, p: float = 2.0, n: int = 256) -> MinimizeResult:
    return minimize(scenario_spec(name, p), MinimizeConfig(n=n, momentum=0.5))
