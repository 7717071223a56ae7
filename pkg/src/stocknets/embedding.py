"""Low-dimensional coordinates from a distance matrix via classical scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .netmetrics import DistanceMatrix
from .panels import Variable


@dataclass(frozen=True)
class Embedding:
    """Coordinates for each variable, centered at the origin, plus fit quality.

    `truncated_count` and `truncated_mass` report how much negative
    eigenvalue weight the input distances carried; both are zero for
    Euclidean-compatible input.
    """

    variables: tuple[Variable, ...]
    coords: np.ndarray
    stress: float
    m: int
    truncated_count: int = 0
    truncated_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (len(self.variables), self.m):
            raise ValueError(f"coords shape {coords.shape} does not match (n, m)")
        if not np.isfinite(self.stress):
            raise NumericError("stress must be finite")
        scale = np.abs(coords).max(initial=0.0)
        if coords.size and np.abs(coords.mean(axis=0)).max() > 1e-9 * max(scale, 1.0):
            raise ValueError("coordinate centroid must be at the origin")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)


def classical_mds(dist: DistanceMatrix, m: int) -> Embedding:
    """Embed a distance matrix in m dimensions by double-centering.

    The Gram matrix -D^2/2, double-centered, is diagonalized; the top-m
    eigenpairs give coordinates scaled by sqrt(eigenvalue). Negative
    eigenvalues are truncated to zero and reported. Orientation is
    pinned by flipping each axis so its largest-magnitude entry is
    positive; distances reproduce exactly when the input is Euclidean
    of dimension <= m.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    n = dist.n
    if n < m + 1:
        raise ValueError(f"need at least m + 1 = {m + 1} points, got {n}")
    d2 = dist.values ** 2
    centerer = np.eye(n) - np.full((n, n), 1.0 / n)
    gram = -0.5 * centerer @ d2 @ centerer
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    negative = eigenvalues[eigenvalues < 0.0]
    coords = eigenvectors[:, :m] * np.sqrt(np.clip(eigenvalues[:m], 0.0, None))
    coords = coords - coords.mean(axis=0)
    for axis in range(m):
        column = coords[:, axis]
        if column.any() and column[np.argmax(np.abs(column))] < 0.0:
            coords[:, axis] = -column
    embedded = _pairwise_distances(coords)
    stress_value = _stress_from_distances(dist.values, embedded)
    return Embedding(
        dist.variables,
        coords,
        stress_value,
        m,
        truncated_count=int(negative.size),
        truncated_mass=float(-negative.sum()),
    )


def stress(dist: DistanceMatrix, emb: Embedding) -> float:
    """Normalized residual between target and embedded distances.

    sqrt of (sum of squared distance errors over pairs) divided by
    (sum of squared target distances); 0 for an exact embedding, 1 when
    all points collapse to the origin against nonzero targets.
    """
    if emb.variables != dist.variables:
        raise ValueError("embedding and distance matrix cover different variables")
    return _stress_from_distances(dist.values, _pairwise_distances(emb.coords))


def _pairwise_distances(coords: np.ndarray) -> np.ndarray:
    deltas = coords[:, np.newaxis, :] - coords[np.newaxis, :, :]
    return np.sqrt((deltas ** 2).sum(axis=-1))


def _stress_from_distances(target: np.ndarray, embedded: np.ndarray) -> float:
    iu = np.triu_indices(target.shape[0], k=1)
    numerator = float(((target[iu] - embedded[iu]) ** 2).sum())
    denominator = float((target[iu] ** 2).sum())
    if denominator == 0.0:
        if numerator == 0.0:
            return 0.0
        raise NumericError("stress undefined: zero target distances but nonzero embedding")
    return float(np.sqrt(numerator / denominator))
