"""Shared numeric primitives.

Finite-checked vectors and matrices, the Euclidean action set with its
projection, fixed-capacity sliding windows with zero padding, and
deterministic seeded random streams. All numerics are float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


def as_vector(v, dim: int | None = None) -> Array:
    """Coerce to a finite float64 vector, optionally checking its length.

    Scalars become length-1 vectors. Non-finite entries or a length
    mismatch raise ValueError.
    """
    a = np.asarray(v, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise ValueError(f"expected a vector, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected vector of dim {dim}, got {a.shape[0]}")
    return a


def as_matrix(m, rows: int | None = None, cols: int | None = None) -> Array:
    """Coerce to a finite float64 matrix, optionally checking its shape."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"expected {cols} cols, got {a.shape[1]}")
    return a


@dataclass(frozen=True)
class BallSet:
    """Euclidean ball of the given radius: the action set."""

    radius: float
    dim: int

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ValueError(f"ball dim must be positive, got {self.dim}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


def project_to_ball(v, ball: BallSet) -> Array:
    """Euclidean projection onto the ball: identity inside, radial rescale outside."""
    a = as_vector(v, ball.dim)
    n = float(np.linalg.norm(a))
    if n <= ball.radius:
        return a
    return a * (ball.radius / n)


def projection_jacobian(v, ball: BallSet) -> Array:
    """Jacobian of project_to_ball at v (identity on and inside the boundary)."""
    a = as_vector(v, ball.dim)
    n = float(np.linalg.norm(a))
    if n <= ball.radius:
        return np.eye(ball.dim)
    unit = a / n
    return (ball.radius / n) * (np.eye(ball.dim) - np.outer(unit, unit))


def clip_componentwise(v, lo: float, hi: float) -> Array:
    if not lo < hi:
        raise ValueError(f"clip bounds must satisfy lo < hi, got [{lo}, {hi}]")
    return np.clip(as_vector(v), lo, hi)


class Window:
    """Fixed-capacity sliding window of vectors, oldest first.

    Slots that have not been written yet read as zero vectors, which gives
    well-defined behaviour in the zero-padded early rounds of a control run.
    Pushing beyond capacity evicts the oldest entry.
    """

    def __init__(self, capacity: int, dim: int):
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        if dim < 1:
            raise ValueError(f"window dim must be >= 1, got {dim}")
        self.capacity = capacity
        self.dim = dim
        self.fill = 0
        self._buf = np.zeros((capacity, dim))

    def push(self, v) -> None:
        a = as_vector(v, self.dim)
        self._buf[:-1] = self._buf[1:]
        self._buf[-1] = a
        self.fill = min(self.fill + 1, self.capacity)

    def view(self) -> Array:
        """(capacity, dim) copy, oldest first, zero-padded at the front."""
        return self._buf.copy()

    def newest_first(self) -> Array:
        return self._buf[::-1].copy()

    def __getitem__(self, j: int) -> Array:
        return self._buf[j].copy()

    def __len__(self) -> int:
        return self.capacity


class RngStream:
    """Deterministic random stream with derivable independent substreams.

    Backed by numpy's PCG64 generator keyed by (seed, derivation path), so
    the same seed replays the same draws across runs and platforms, and
    streams derived with distinct child indices never share state. Normal
    draws use numpy's standard_normal (ziggurat); this choice is fixed so
    that seeds reproduce.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Independent substream identified by (seed, path + (index,))."""
        return RngStream(self.seed, self._path + (int(index),))

    def standard_normal(self, shape) -> Array:
        return self._gen.standard_normal(shape)

    def integers(self, low: int, high: int) -> int:
        return int(self._gen.integers(low, high))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self._path})"


def gaussian(rng: RngStream, mean, std: float) -> Array:
    """mean + std * z with z i.i.d. standard normal draws from rng.

    std == 0 returns the mean exactly (degenerate case); std < 0 is an error.
    """
    m = as_vector(mean)
    if std < 0:
        raise ValueError(f"std must be nonnegative, got {std}")
    if std == 0:
        return m.copy()
    return m + std * rng.standard_normal(m.shape[0])
