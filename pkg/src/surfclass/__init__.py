"""Classify surfaces sampled as point clouds.

The pipeline estimates tangent frames, grows an embedded graph whose edges
carry relative-orientation signs, turns it into a rotation system, contracts
a spanning tree and reads off orientability and Euler characteristic.
"""

from .complex_builder import BuildParams, EmbeddedGraph, build_complex, export_complex
from .geometry_io import PointCloud, SurfaceKind, k_nearest, load_cloud, sample_surface, save_cloud
from .pipeline import StageError, TrialTally, classify_cloud, run_trials
from .rotation_system import (
    OneVertexRotation,
    RotationSystem,
    contract_to_one_vertex,
    local_sign_switch,
    rotations_from_graph,
)
from .surface_classifier import SurfaceClass, brute_force_classify, classify, classify_rotation, trace_faces
from .tangent_space import TangentFrame, estimate_frame, scaling_exponents

__version__ = "0.1.0"

__all__ = [
    "BuildParams",
    "EmbeddedGraph",
    "build_complex",
    "export_complex",
    "PointCloud",
    "SurfaceKind",
    "k_nearest",
    "load_cloud",
    "sample_surface",
    "save_cloud",
    "StageError",
    "TrialTally",
    "classify_cloud",
    "run_trials",
    "OneVertexRotation",
    "RotationSystem",
    "contract_to_one_vertex",
    "local_sign_switch",
    "rotations_from_graph",
    "SurfaceClass",
    "brute_force_classify",
    "classify",
    "classify_rotation",
    "trace_faces",
    "TangentFrame",
    "estimate_frame",
    "scaling_exponents",
]
