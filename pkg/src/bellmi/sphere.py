"""Bloch-sphere vectors and seeded, splittable randomness.

Vectors are plain numpy arrays: shape (3,) for a single direction, (n, 3)
for batches.  Sphere sampling uses the (z, phi) method: z uniform on
[-1, 1], azimuth uniform on [0, 2pi), which is rotation-invariant in
distribution and needs no rejection loop.

The sign convention sgn(0) := +1 is fixed here and used by every model.

:class:`RandomSource` wraps numpy's SeedSequence/PCG64.  ``split(n)``
derives n disjoint child streams purely from (entropy, spawn_key), so the
same source splits to the same children no matter how often it is asked;
that is what makes chunked Monte Carlo totals reproducible regardless of
thread count.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Optional, Union

import numpy as np

from .errors import ValidationError

UNIT_ATOL = 1e-12


class RandomSource:
    """Seeded random stream with pure, repeatable splitting.

    A source owns one numpy Generator (created lazily); parallel work must
    use ``split(n)`` children instead of sharing the parent stream.
    """

    def __init__(self, seed: Union[int, np.random.SeedSequence]):
        if isinstance(seed, np.random.SeedSequence):
            self._ss = seed
        else:
            self._ss = np.random.SeedSequence(int(seed))
        self._gen: Optional[np.random.Generator] = None

    @property
    def seed_sequence(self) -> np.random.SeedSequence:
        return self._ss

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.default_rng(self._ss)
        return self._gen

    def split(self, n: int) -> list["RandomSource"]:
        """n disjoint child sources; deterministic in (seed, child index)."""
        key = tuple(self._ss.spawn_key)
        return [
            RandomSource(np.random.SeedSequence(entropy=self._ss.entropy, spawn_key=key + (i,)))
            for i in range(n)
        ]

    def __repr__(self):
        return f"RandomSource(entropy={self._ss.entropy}, spawn_key={self._ss.spawn_key})"


def sample_uniform_sphere(gen: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """Uniform points on the unit sphere; (3,) if n is None, else (n, 3)."""
    size = 1 if n is None else n
    z = gen.uniform(-1.0, 1.0, size)
    phi = gen.uniform(0.0, 2.0 * np.pi, size)
    s = np.sqrt(1.0 - z * z)
    out = np.empty((size, 3), dtype=np.float64)
    out[:, 0] = s * np.cos(phi)
    out[:, 1] = s * np.sin(phi)
    out[:, 2] = z
    return out[0] if n is None else out


def require_unit(v, atol: float = UNIT_ATOL) -> np.ndarray:
    """Validate unit norm (within atol); returns the array as float64."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValidationError(f"expected 3-vectors, got shape {arr.shape}")
    norms2 = (arr * arr).sum(axis=-1)
    if np.any(np.abs(norms2 - 1.0) > 3.0 * atol):
        worst = float(np.max(np.abs(np.sqrt(norms2) - 1.0)))
        raise ValidationError(f"vector not on the unit sphere (|norm - 1| = {worst:.3e})")
    return arr


def sgn_dot(v, w) -> int:
    """Sign of v.w with the tie at exactly 0 broken to +1."""
    d = float(np.dot(np.asarray(v, dtype=np.float64), np.asarray(w, dtype=np.float64)))
    return 1 if d >= 0.0 else -1


def angle_between(v, w) -> float:
    """Angle in [0, pi] between two unit vectors (dot clamped into [-1, 1])."""
    d = float(np.dot(np.asarray(v, dtype=np.float64), np.asarray(w, dtype=np.float64)))
    return float(np.arccos(min(1.0, max(-1.0, d))))


def vec_polar(theta: float, phi: float = 0.0) -> np.ndarray:
    """Unit vector at polar angle theta from +z, azimuth phi."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis (test helper)."""
    k = require_unit(axis)
    kx = np.array(
        [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]
    )
    return np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n roughly evenly spread points on the sphere (golden-angle spiral)."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def random_setting_pairs(gen: np.random.Generator, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """n independent uniform (x, y) setting pairs."""
    xs = sample_uniform_sphere(gen, n)
    ys = sample_uniform_sphere(gen, n)
    return [(xs[i], ys[i]) for i in range(n)]
