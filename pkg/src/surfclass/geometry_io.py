"""Point clouds: CSV ingestion, synthetic surface samplers and k-NN queries.

Sampler embeddings
------------------
sphere   unit sphere in R^3 (Gaussian samples divided by their 2-norm)
torus    ring radius 2, tube radius 1, in R^3
mobius   half-twisted strip of centre radius 2 and half-width 0.8, in R^3
rp2      2 * (x^2 - y^2, xy, xz, yz) over the unit sphere, an embedding in R^4
klein    ((2 + cos v) cos u, (2 + cos v) sin u, sin v cos(u/2), sin v sin(u/2)) in R^4
genus2   smooth union (soft-min, k=0.25) of two R=2, r=1 tori centred at x = -2.2, 2.2

Parametrised surfaces are sampled uniformly in area by rejection against the
area element; the genus-2 surface is sampled from a thin shell around its
implicit level set and projected onto it with Newton steps.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "CloudError",
    "CloudFormatError",
    "CloudParseError",
    "CloudDimensionError",
    "PointCloud",
    "SurfaceKind",
    "load_cloud",
    "save_cloud",
    "sample_surface",
    "surface_residual",
    "k_nearest",
]


class CloudError(ValueError):
    """Base class for point-cloud input problems."""


class CloudFormatError(CloudError):
    pass


class CloudParseError(CloudError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class CloudDimensionError(CloudError):
    pass


@dataclass(frozen=True)
class PointCloud:
    """N points in R^n, stored as a read-only (N, n) float array."""

    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2:
            raise CloudDimensionError(f"expected a 2-d array of points, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise CloudFormatError("a point cloud needs at least one point")
        if pts.shape[1] < 3:
            raise CloudDimensionError(f"ambient dimension must be >= 3, got {pts.shape[1]}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.count


class SurfaceKind(str, enum.Enum):
    SPHERE = "sphere"
    TORUS = "torus"
    MOBIUS = "mobius"
    RP2 = "rp2"
    KLEIN = "klein"
    GENUS2 = "genus2"

    @property
    def ambient_dim(self) -> int:
        return 4 if self in (SurfaceKind.RP2, SurfaceKind.KLEIN) else 3

    @property
    def characteristic_radius(self) -> float:
        return 1.0

    @classmethod
    def parse(cls, name: "str | SurfaceKind") -> "SurfaceKind":
        if isinstance(name, SurfaceKind):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown surface kind {name!r} (known: {known})") from None


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def load_cloud(path, format: str = "csv") -> PointCloud:
    """Read a headerless CSV file with one point per row."""
    if format != "csv":
        raise CloudFormatError(f"unsupported cloud format {format!r}")
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or all(not tok.strip() for tok in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CloudFormatError(
                    f"row {lineno} has {len(row)} columns, expected {width}"
                )
            try:
                rows.append([float(tok) for tok in row])
            except ValueError:
                raise CloudParseError(f"non-numeric token in row {lineno}", row=lineno) from None
    if not rows:
        raise CloudParseError(f"{path}: no points found")
    if width < 3:
        raise CloudDimensionError(f"{path}: points have {width} coordinates, need >= 3")
    return PointCloud(np.asarray(rows, dtype=float), source=str(path))


def save_cloud(cloud: PointCloud, path) -> None:
    np.savetxt(Path(path), cloud.points, delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# Surface samplers
# ---------------------------------------------------------------------------

TORUS_R, TORUS_r = 2.0, 1.0
MOBIUS_R, MOBIUS_HALF_WIDTH = 2.0, 0.8
RP2_SCALE = 2.0
KLEIN_R, KLEIN_r = 2.0, 1.0
GENUS2_CENTERS = (-2.2, 2.2)
GENUS2_BLEND = 0.25


def _torus_map(u, v):
    rho = TORUS_R + TORUS_r * np.cos(v)
    return np.stack([rho * np.cos(u), rho * np.sin(u), TORUS_r * np.sin(v)], axis=-1)


def _torus_area(u, v):
    return TORUS_r * (TORUS_R + TORUS_r * np.cos(v))


def _mobius_map(u, s):
    rho = MOBIUS_R + s * np.cos(u / 2)
    return np.stack([rho * np.cos(u), rho * np.sin(u), s * np.sin(u / 2)], axis=-1)


def _mobius_area(u, s):
    # |d/du x d/ds| for the ruled strip above
    rho = MOBIUS_R + s * np.cos(u / 2)
    return np.sqrt(rho**2 + s**2 / 4.0)


def _klein_map(u, v):
    rho = KLEIN_R + KLEIN_r * np.cos(v)
    tube = KLEIN_r * np.sin(v)
    return np.stack(
        [rho * np.cos(u), rho * np.sin(u), tube * np.cos(u / 2), tube * np.sin(u / 2)], axis=-1
    )


def _klein_area(u, v):
    # the two coordinate directions are orthogonal
    rho = KLEIN_R + KLEIN_r * np.cos(v)
    return KLEIN_r * np.sqrt(rho**2 + (KLEIN_r * np.sin(v)) ** 2 / 4.0)


_PARAMETRIC = {
    SurfaceKind.TORUS: (_torus_map, _torus_area, (0, 2 * np.pi), (0, 2 * np.pi)),
    SurfaceKind.MOBIUS: (_mobius_map, _mobius_area, (0, 2 * np.pi), (-MOBIUS_HALF_WIDTH, MOBIUS_HALF_WIDTH)),
    SurfaceKind.KLEIN: (_klein_map, _klein_area, (0, 2 * np.pi), (0, 2 * np.pi)),
}


def _sample_parametric(kind, n, rng):
    fmap, area, (u0, u1), (v0, v1) = _PARAMETRIC[kind]
    gu, gv = np.meshgrid(np.linspace(u0, u1, 257), np.linspace(v0, v1, 257))
    bound = 1.05 * area(gu, gv).max()
    out = []
    have = 0
    while have < n:
        m = max(2 * (n - have), 64)
        u = rng.uniform(u0, u1, m)
        v = rng.uniform(v0, v1, m)
        keep = rng.uniform(0, bound, m) < area(u, v)
        out.append(fmap(u[keep], v[keep]))
        have += int(keep.sum())
    return np.concatenate(out)[:n]


def _unit_sphere(n, rng):
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _rp2_map(s):
    x, y, z = s[:, 0], s[:, 1], s[:, 2]
    return RP2_SCALE * np.stack([x * x - y * y, x * y, x * z, y * z], axis=-1)


def _rp2_area(s):
    x, y, z = s[:, 0], s[:, 1], s[:, 2]
    zero = np.zeros_like(x)
    jac = np.stack(
        [
            np.stack([2 * x, -2 * y, zero], -1),
            np.stack([y, x, zero], -1),
            np.stack([z, zero, x], -1),
            np.stack([zero, z, y], -1),
        ],
        axis=1,
    )  # (m, 4, 3)
    # orthonormal tangent basis of the sphere at s
    helper = np.where(np.abs(x)[:, None] < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e1 = np.cross(s, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(s, e1)
    j = np.stack([np.einsum("mij,mj->mi", jac, e1), np.einsum("mij,mj->mi", jac, e2)], axis=-1)
    gram = np.einsum("mia,mib->mab", j, j)
    return np.sqrt(np.maximum(np.linalg.det(gram), 0.0))


def _sample_rp2(n, rng):
    bound = 1.05 * _rp2_area(_unit_sphere(20000, np.random.default_rng(0))).max()
    out = []
    have = 0
    while have < n:
        m = max(4 * (n - have), 64)
        s = _unit_sphere(m, rng)
        keep = rng.uniform(0, bound, m) < _rp2_area(s)
        out.append(_rp2_map(s[keep]))
        have += int(keep.sum())
    return np.concatenate(out)[:n]


def _genus2_field(p):
    """Implicit function (zero on the surface) and its gradient."""
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    dists, grads = [], []
    for c in GENUS2_CENTERS:
        dx = x - c
        rho = np.maximum(np.hypot(dx, y), 1e-300)
        d = np.maximum(np.hypot(rho - TORUS_R, z), 1e-300)
        g = np.stack([(rho - TORUS_R) / d * dx / rho, (rho - TORUS_R) / d * y / rho, z / d], -1)
        dists.append(d)
        grads.append(g)
    d = np.stack(dists, -1)
    dmin = d.min(axis=1, keepdims=True)
    w = np.exp(-(d - dmin) / GENUS2_BLEND)
    smin = dmin[:, 0] - GENUS2_BLEND * np.log(w.sum(axis=1))
    w /= w.sum(axis=1, keepdims=True)
    grad = w[:, 0:1] * grads[0] + w[:, 1:2] * grads[1]
    return smin - TORUS_r, grad


def _newton_project(p, field, iters=60):
    p = p.copy()
    for _ in range(iters):
        f, g = field(p)
        if np.all(np.abs(f) < 1e-13):
            break
        p -= (f / np.einsum("ij,ij->i", g, g))[:, None] * g
    return p


def _sample_genus2(n, rng, shell=0.05):
    lo = np.array([GENUS2_CENTERS[0] - TORUS_R - TORUS_r - 0.2, -TORUS_R - TORUS_r - 0.2, -TORUS_r - 0.2])
    hi = -lo
    out = []
    have = 0
    while have < n:
        m = max(20 * (n - have), 256)
        p = rng.uniform(lo, hi, (m, 3))
        f, g = _genus2_field(p)
        keep = np.abs(f) / np.linalg.norm(g, axis=1) < shell
        q = _newton_project(p[keep], _genus2_field)
        out.append(q)
        have += len(q)
    return np.concatenate(out)[:n]


def sample_surface(kind, n_points: int, noise_sd: float = 0.0, seed: int = 0) -> PointCloud:
    """Sample ``n_points`` from the named surface with isotropic Gaussian noise.

    The result depends only on the arguments: the same call always returns a
    bitwise-identical cloud.
    """
    kind = SurfaceKind.parse(kind)
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    if kind is SurfaceKind.SPHERE:
        pts = _unit_sphere(n_points, rng)
    elif kind is SurfaceKind.RP2:
        pts = _sample_rp2(n_points, rng)
    elif kind is SurfaceKind.GENUS2:
        pts = _sample_genus2(n_points, rng)
    else:
        pts = _sample_parametric(kind, n_points, rng)
    if noise_sd > 0:
        pts = pts + rng.normal(scale=noise_sd, size=pts.shape)
    return PointCloud(pts, source=f"{kind.value}:n={n_points}:noise={noise_sd}:seed={seed}")


def surface_residual(kind, points) -> np.ndarray:
    """Per-point violation of the named surface's defining equations.

    Zero (up to rounding) for noiseless samples.
    """
    kind = SurfaceKind.parse(kind)
    p = np.asarray(points, dtype=float)
    if kind is SurfaceKind.SPHERE:
        return np.abs(np.linalg.norm(p, axis=1) - 1.0)
    if kind is SurfaceKind.TORUS:
        rho = np.hypot(p[:, 0], p[:, 1])
        return np.abs((rho - TORUS_R) ** 2 + p[:, 2] ** 2 - TORUS_r**2)
    if kind is SurfaceKind.KLEIN:
        rho = np.hypot(p[:, 0], p[:, 1])
        half = np.arctan2(p[:, 1], p[:, 0]) / 2
        on_tube = np.abs((rho - KLEIN_R) ** 2 + p[:, 2] ** 2 + p[:, 3] ** 2 - KLEIN_r**2)
        # (z, w) must lie on the line at angle u/2
        twist = np.abs(p[:, 2] * np.sin(half) - p[:, 3] * np.cos(half))
        return on_tube + twist
    if kind is SurfaceKind.MOBIUS:
        u = np.arctan2(p[:, 1], p[:, 0])
        rho = np.hypot(p[:, 0], p[:, 1])
        # recover s along the ruling, then compare with the parametrisation
        s = (rho - MOBIUS_R) * np.cos(u / 2) + p[:, 2] * np.sin(u / 2)
        return np.linalg.norm(p - _mobius_map(u, s), axis=1) + np.maximum(np.abs(s) - MOBIUS_HALF_WIDTH, 0)
    if kind is SurfaceKind.RP2:
        a, b, c, d = (p / RP2_SCALE).T
        x2 = (a + np.sqrt(a * a + 4 * b * b)) / 2
        y2 = x2 - a
        z2 = 1.0 - x2 - y2
        return np.abs(c * c - x2 * z2) + np.abs(d * d - y2 * z2)
    return np.abs(_genus2_field(p)[0])


# ---------------------------------------------------------------------------
# Nearest neighbours
# ---------------------------------------------------------------------------

def k_nearest(cloud: PointCloud, query, k: int) -> list[tuple[int, float]]:
    """The ``k`` nearest cloud points to ``query`` as (index, distance) pairs.

    Sorted by distance, ties broken by ascending index. Exhaustive scan.
    """
    q = np.asarray(query, dtype=float)
    if q.shape != (cloud.dim,):
        raise ValueError(f"query has shape {q.shape}, cloud dimension is {cloud.dim}")
    if not 1 <= k <= cloud.count:
        raise IndexError(f"k={k} outside 1..{cloud.count}")
    dist = np.linalg.norm(cloud.points - q, axis=1)
    order = np.lexsort((np.arange(cloud.count), dist))[:k]
    return [(int(i), float(dist[i])) for i in order]
