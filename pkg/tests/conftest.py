from __future__ import annotations

import functools

import pytest

from cmcshoot.dynamics import Params
from cmcshoot.geometry import Family, FamilyKind
from cmcshoot.shooting import solve_s2n, solve_s3n


@functools.lru_cache(maxsize=None)
def solved(kind: str, n: int, lam: float):
    """Converged (r0*, shot) for one parameter set, shared across test modules."""
    params = Params(Family(FamilyKind(kind), n), lam)
    solver = solve_s2n if params.family.is_s2n else solve_s3n
    return solver(params)


@pytest.fixture(scope="session")
def solve_cache():
    return solved
