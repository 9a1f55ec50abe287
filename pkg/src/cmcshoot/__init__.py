"""Shooting solver for compact CMC generating curves in orbit spaces of spheres."""

from .assembly import GeneratingCurve, assemble, assemble_s2n, assemble_s3n, certify
from .dynamics import Params, ShootingState
from .geometry import Family, FamilyKind
from .ode import IntegratorConfig
from .shooting import ExitClass, ShotResult, shoot, solve_s2n, solve_s3n

__all__ = [
    "ExitClass",
    "Family",
    "FamilyKind",
    "GeneratingCurve",
    "IntegratorConfig",
    "Params",
    "ShootingState",
    "ShotResult",
    "assemble",
    "assemble_s2n",
    "assemble_s3n",
    "certify",
    "shoot",
    "solve_s2n",
    "solve_s3n",
]
