"""Shadow constructions: disjoint convex bodies that block every line, ray,
hyperplane or complex line through a point, with certified coverage checks."""

from ._backend import get_backend, set_backend
from .constructions import (construct_remark1, construct_remark3, construct_remark4_escape, construct_theorem1,
                            construct_theorem2, construct_theorem3, construct_theorem4, min_pairwise_gap)
from .coverage import (Covered, CoverageProblem, Inconclusive, SearchBudget, Uncovered, cover_certify,
                       cover_circle_exact, falsify)
from .errors import (ConstructionError, EscapeNotFoundError, InconclusiveDistanceError, InputError,
                     ResourceError, SearchFailedError, ShadowLabError)
from .geometry import Ball, Body, Ellipsoid, HPolytope, Transform
from .scene import Scene, load_scene, parse_scene, save_scene
from .search import ConfigSearchParams, search_config

__version__ = "0.1.0"

__all__ = [
    "Ball", "Body", "ConfigSearchParams", "ConstructionError", "CoverageProblem", "Covered", "Ellipsoid",
    "EscapeNotFoundError", "HPolytope", "Inconclusive", "InconclusiveDistanceError", "InputError",
    "ResourceError", "Scene", "SearchBudget", "SearchFailedError", "ShadowLabError", "Transform", "Uncovered",
    "construct_remark1", "construct_remark3", "construct_remark4_escape", "construct_theorem1",
    "construct_theorem2", "construct_theorem3", "construct_theorem4", "cover_certify", "cover_circle_exact",
    "falsify", "get_backend", "load_scene", "min_pairwise_gap", "parse_scene", "save_scene", "search_config",
    "set_backend",
]
