"""End-to-end classification of a point cloud."""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, field, replace

from .complex_builder import BuildParams, EmbeddedGraph, build_complex
from .geometry_io import PointCloud, SurfaceKind, sample_surface
from .rotation_system import (
    ConnectivityError,
    OneVertexRotation,
    RotationSystem,
    contract_to_one_vertex,
    rotations_from_graph,
)
from .surface_classifier import SurfaceClass, classify_rotation
from .tangent_space import DegenerateFrameError

__all__ = [
    "StageError",
    "PipelineResult",
    "classify_cloud",
    "MAX_DISCARD",
    "DEFAULT_POINTS",
    "default_noise",
    "TrialTally",
    "run_trials",
]

MAX_DISCARD = 0.01

# Cloud sizes for batch trials. Thin or strongly curved surfaces need more
# points before every k-neighbourhood looks like a flat disc.
DEFAULT_POINTS = {
    SurfaceKind.SPHERE: 5000,
    SurfaceKind.TORUS: 12000,
    SurfaceKind.MOBIUS: 4000,
    SurfaceKind.RP2: 15000,
    SurfaceKind.KLEIN: 12000,
    SurfaceKind.GENUS2: 20000,
}


def default_noise(kind) -> float:
    return 0.01 * SurfaceKind.parse(kind).characteristic_radius


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    surface: SurfaceClass
    graph: EmbeddedGraph
    rotation: RotationSystem
    contracted: OneVertexRotation
    face_count: int
    discarded_vertices: int = 0

    def report(self, params: BuildParams, extra: dict | None = None) -> dict:
        out = self.surface.to_dict()
        out["counts"] = {
            "V": self.rotation.vertex_count,
            "E": self.rotation.edge_count,
            "F": self.face_count,
            "contracted_E": self.contracted.edge_count,
            "contracted_F": self.face_count,
            "graph_V": self.graph.vertex_count,
            "graph_E": self.graph.edge_count,
            "discarded_vertices": self.discarded_vertices,
        }
        out["params"] = {**asdict(params), **(extra or {})}
        return out


def classify_cloud(
    cloud: PointCloud, params: BuildParams = BuildParams(), max_discard: float = MAX_DISCARD
) -> PipelineResult:
    """Build the complex, contract a spanning tree and classify the result.

    The largest connected component is classified. Stray components the
    builder could not attach are tolerated while they hold at most
    ``max_discard`` of all vertices; beyond that the rotation-system stage
    fails.
    """
    try:
        graph = build_complex(cloud, params)
    except (IndexError, DegenerateFrameError) as exc:
        raise StageError("tangent estimation", exc) from exc
    except ValueError as exc:
        raise StageError("complex construction", exc) from exc
    comps = sorted(graph.components(), key=len, reverse=True)
    discarded = graph.vertex_count - len(comps[0]) if comps else 0
    try:
        if discarded > max_discard * graph.vertex_count:
            raise ConnectivityError([len(c) for c in comps])
        rs = rotations_from_graph(graph, comps[0] if comps else [])
        word = contract_to_one_vertex(rs)
    except ValueError as exc:
        raise StageError("rotation system", exc) from exc
    try:
        surface, trace = classify_rotation(word)
    except ValueError as exc:
        raise StageError("classification", exc) from exc
    return PipelineResult(surface, graph, rs, word, trace.face_count, discarded)


@dataclass
class TrialTally:
    """Orientability counts and an Euler-characteristic histogram over trials."""

    surface: str
    trials: int
    orientable: int = 0
    non_orientable: int = 0
    failures: int = 0
    chi: Counter = field(default_factory=Counter)
    records: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def add(self, record: dict, seconds: float = 0.0):
        self.records.append(record)
        self.seconds.append(seconds)
        if "error" in record:
            self.failures += 1
            return
        if record["orientable"]:
            self.orientable += 1
        else:
            self.non_orientable += 1
        self.chi[record["euler_characteristic"]] += 1

    def chi_mode(self):
        """The most frequent chi; None when no trial succeeded or the top count is shared."""
        top = self.chi.most_common()
        if not top or (len(top) > 1 and top[0][1] == top[1][1]):
            return None
        return top[0][0]

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "trials": self.trials,
            "orientable": self.orientable,
            "non_orientable": self.non_orientable,
            "failures": self.failures,
            "chi_histogram": {str(k): v for k, v in sorted(self.chi.items(), reverse=True)},
            "records": self.records,
        }


def _one_trial(job):
    kind, n_points, noise, seed, params = job
    start = time.perf_counter()
    cloud = sample_surface(kind, n_points, noise, seed)
    record = {"seed": seed}
    try:
        result = classify_cloud(cloud, replace(params, seed=seed))
    except StageError as exc:
        record["error"] = str(exc)
    else:
        rep = result.report(params)
        record.update({k: rep[k] for k in ("orientable", "euler_characteristic", "name")})
        record["counts"] = rep["counts"]
    return record, time.perf_counter() - start


def run_trials(
    kind,
    trials: int,
    seed: int = 0,
    n_points: int | None = None,
    noise: float | None = None,
    params: BuildParams = BuildParams(),
    jobs: int = 1,
) -> TrialTally:
    """Sample and classify ``trials`` clouds; trial i uses seed + i throughout.

    Stage failures are recorded in the tally rather than raised. Records are
    ordered by trial index whatever the completion order.
    """
    kind = SurfaceKind.parse(kind)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_points = DEFAULT_POINTS[kind] if n_points is None else n_points
    noise = default_noise(kind) if noise is None else noise
    work = [(kind, n_points, noise, seed + i, params) for i in range(trials)]
    tally = TrialTally(kind.value, trials)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_one_trial, work))
    else:
        results = map(_one_trial, work)
    for record, secs in results:
        tally.add(record, secs)
    return tally
