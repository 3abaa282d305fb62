"""Broad-phase collision prediction with a dynamic 4D (space + time) AABB tree."""

from .dynamics import KeplerDynamics, LinearDynamics, OrbitalElements, elements_to_eci, eci_bounds, nu_dot, occ_int
from .engine import (CollisionWitness, FourDEngine, InvariantViolation, ProblemInstance, WorldObject, detect_4d,
                     detect_basic_aabb, detect_brute)
from .geometry import AabbTree4d, Box3, Box4
from .interval import Interval
from .partition import UncoveredEdge, build_bands, detect_partitioned, partition_edge_cover_check

__all__ = [
    "AabbTree4d", "Box3", "Box4", "CollisionWitness", "FourDEngine", "Interval", "InvariantViolation",
    "KeplerDynamics", "LinearDynamics", "OrbitalElements", "ProblemInstance", "UncoveredEdge", "WorldObject",
    "build_bands", "detect_4d", "detect_basic_aabb", "detect_brute", "detect_partitioned", "eci_bounds",
    "elements_to_eci", "nu_dot", "occ_int", "partition_edge_cover_check",
]
