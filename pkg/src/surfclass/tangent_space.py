"""Tangent-plane estimation from Gaussian-weighted displacement vectors.

For a base point x and locality parameter eps, every displacement x_i - x is
weighted by exp(-|x_i - x|^2 / (4 eps)) and divided by sqrt(D), where
D = sum_i exp(-|x_i - x|^2 / (2 eps)). Singular values of the resulting n x N
matrix grow like sqrt(eps) along tangent directions and like eps along normal
directions; the top two left singular vectors span the tangent plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry_io import PointCloud, k_nearest

__all__ = [
    "DegenerateFrameError",
    "TangentFrame",
    "ScalingReport",
    "weighted_matrix",
    "weighted_gram",
    "scaling_exponents",
    "default_eps_grid",
    "estimate_frame",
    "DEGENERACY_TOL",
]

DEGENERACY_TOL = 1e-8


class DegenerateFrameError(ValueError):
    def __init__(self, base_index, message=None):
        super().__init__(message or f"degenerate neighbourhood at point {base_index}")
        self.base_index = base_index


@dataclass(frozen=True)
class TangentFrame:
    base_index: int
    t1: np.ndarray
    t2: np.ndarray
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def basis(self) -> np.ndarray:
        """The frame as a 2 x n matrix with rows t1, t2."""
        return np.vstack([self.t1, self.t2])

    def swapped(self) -> "TangentFrame":
        return TangentFrame(self.base_index, self.t2, self.t1, self.epsilon)


@dataclass(frozen=True)
class ScalingReport:
    epsilons: np.ndarray
    singular_values: np.ndarray  # (len(eps), n), descending per row
    exponents: np.ndarray  # (len(eps), n); nan where sigma vanishes

    def rows(self):
        for e, s, a in zip(self.epsilons, self.singular_values, self.exponents):
            yield [float(e), *map(float, s), *map(float, a)]


def _as_point(cloud: PointCloud, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (cloud.dim,):
        raise ValueError(f"point has shape {x.shape}, cloud dimension is {cloud.dim}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(cloud.points)):
        raise ValueError("non-finite coordinates")
    return x


def weighted_matrix(cloud: PointCloud, x, epsilon: float) -> np.ndarray:
    """The n x N matrix of normalised, Gaussian-weighted displacements."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x = _as_point(cloud, x)
    diff = cloud.points - x
    sq = np.einsum("ij,ij->i", diff, diff)
    # shifting by the smallest distance cancels in w / sqrt(D) and keeps D > 0
    sq = sq - sq.min()
    w = np.exp(-sq / (4.0 * epsilon))
    d = np.sum(np.exp(-sq / (2.0 * epsilon)))
    return (diff * (w / np.sqrt(d))[:, None]).T


def weighted_gram(cloud: PointCloud, x, epsilon: float, sq_dist=None) -> np.ndarray:
    """X X^T for the weighted matrix, without materialising X."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x = _as_point(cloud, x)
    diff = cloud.points - x
    if sq_dist is None:
        sq_dist = np.einsum("ij,ij->i", diff, diff)
    w2 = np.exp(-(sq_dist - sq_dist.min()) / (2.0 * epsilon))
    g = (diff * w2[:, None]).T @ diff / w2.sum()
    return (g + g.T) / 2


def _descending_eigh(gram):
    vals, vecs = np.linalg.eigh(gram)
    return vals[::-1], vecs[:, ::-1]


def default_eps_grid(cloud: PointCloud, x, size: int = 32) -> np.ndarray:
    """Log-spaced grid between the squared 4th- and 200th-nearest-neighbour distances.

    eps enters the weights in squared-distance units, so squaring keeps the
    Gaussian width between those two neighbour distances.
    """
    x = _as_point(cloud, x)
    dist = np.sort(np.linalg.norm(cloud.points - x, axis=1))
    lo = dist[min(4, cloud.count - 1)]
    hi = dist[min(200, cloud.count - 1)]
    if lo <= 0:
        lo = dist[dist > 0][0] if np.any(dist > 0) else 1.0
    if hi <= lo:
        hi = 2 * lo
    return np.geomspace(lo * lo, hi * hi, size)


def scaling_exponents(cloud: PointCloud, x, eps_grid) -> ScalingReport:
    """Singular values of the weighted matrix and their log-log slopes over a grid."""
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or len(eps) < 2:
        raise ValueError("eps_grid needs at least two entries")
    if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ValueError("eps_grid must be positive and strictly ascending")
    sigma = np.array([np.linalg.svd(weighted_matrix(cloud, x, e), compute_uv=False) for e in eps])
    if sigma.shape[1] < cloud.dim:
        sigma = np.pad(sigma, ((0, 0), (0, cloud.dim - sigma.shape[1])))
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(sigma > 0, np.log(sigma), np.nan)
        alpha = _log_slopes(logs, np.log(eps))
    return ScalingReport(eps, sigma, alpha)


def _log_slopes(logs, logeps):
    # centred differences inside, one-sided at the two ends
    alpha = np.empty_like(logs)
    alpha[1:-1] = (logs[2:] - logs[:-2]) / (logeps[2:] - logeps[:-2])[:, None]
    alpha[0] = (logs[1] - logs[0]) / (logeps[1] - logeps[0])
    alpha[-1] = (logs[-1] - logs[-2]) / (logeps[-1] - logeps[-2])
    return alpha


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def frame_from_gram(gram: np.ndarray, base_index: int, epsilon: float) -> TangentFrame:
    vals, vecs = _descending_eigh(gram)
    s1, s2 = np.sqrt(np.maximum(vals[:2], 0.0))
    if not s1 > 0 or s2 <= DEGENERACY_TOL * s1:
        raise DegenerateFrameError(base_index)
    t1 = _canonical_sign(vecs[:, 0])
    t2 = vecs[:, 1] - (vecs[:, 1] @ t1) * t1
    t2 = _canonical_sign(t2 / np.linalg.norm(t2))
    return TangentFrame(int(base_index), t1, t2, float(epsilon))


def estimate_frame(cloud: PointCloud, base_index: int, k: int = 20) -> TangentFrame:
    """Tangent frame at a cloud point, with eps the distance to its k-th neighbour."""
    if not 0 <= base_index < cloud.count:
        raise IndexError(f"base index {base_index} outside cloud of {cloud.count} points")
    if k > cloud.count - 1:
        raise IndexError(f"k exceeds N-1 (k={k}, N={cloud.count})")
    x = cloud.points[base_index]
    # the first neighbour is the point itself
    eps = k_nearest(cloud, x, k + 1)[-1][1]
    if not eps > 0:
        raise DegenerateFrameError(base_index, f"point {base_index} has {k} coincident neighbours")
    return frame_from_gram(weighted_gram(cloud, x, eps), base_index, eps)
