"""Seeded randomness, sphere sampling, and the small geometry helpers."""

import math

import numpy as np
import pytest

from bellmi.errors import ValidationError
from bellmi.sphere import (
    RandomSource,
    angle_between,
    fibonacci_sphere,
    random_setting_pairs,
    require_unit,
    rotation_matrix,
    sample_uniform_sphere,
    sgn_dot,
    vec_polar,
)


def test_random_source_is_reproducible():
    a = RandomSource(42).generator().random(16)
    b = RandomSource(42).generator().random(16)
    np.testing.assert_array_equal(a, b)


def test_split_is_pure_and_stable():
    src = RandomSource(7)
    first = [c.generator().random(8) for c in src.split(3)]
    second = [c.generator().random(8) for c in src.split(3)]
    for x, y in zip(first, second):
        np.testing.assert_array_equal(x, y)
    # children do not collide with each other or the parent
    streams = [src.generator().random(8)] + first
    for i in range(len(streams)):
        for j in range(i + 1, len(streams)):
            assert not np.array_equal(streams[i], streams[j])


def test_split_prefix_consistency():
    # the first k children of split(n) match split(k)
    src = RandomSource(99)
    wide = src.split(5)
    narrow = src.split(2)
    for w, n in zip(wide, narrow):
        np.testing.assert_array_equal(
            w.generator().random(4), n.generator().random(4)
        )


def test_sample_uniform_sphere_statistics():
    gen = RandomSource(3).generator()
    pts = sample_uniform_sphere(gen, 200_000)
    assert pts.shape == (200_000, 3)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # each coordinate has mean 0 (se ~ 0.0013) and variance 1/3
    assert np.all(np.abs(pts.mean(axis=0)) < 0.006)
    np.testing.assert_allclose(pts.var(axis=0), 1 / 3, atol=0.005)
    # z is uniform on [-1, 1]: check second and fourth moments
    z = pts[:, 2]
    assert np.mean(z**2) == pytest.approx(1 / 3, abs=0.005)
    assert np.mean(z**4) == pytest.approx(1 / 5, abs=0.005)


def test_sample_uniform_sphere_single():
    v = sample_uniform_sphere(RandomSource(1).generator())
    assert v.shape == (3,)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_require_unit_rejects_non_unit():
    require_unit(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValidationError):
        require_unit(np.array([0.0, 0.0, 1.1]))


def test_sgn_dot_tie_breaks_positive():
    x = np.array([1.0, 0.0, 0.0])
    z = np.array([0.0, 0.0, 1.0])
    assert sgn_dot(x, z) == 1
    assert sgn_dot(x, x) == 1
    assert sgn_dot(x, -x) == -1


def test_angle_between_is_clamped():
    v = sample_uniform_sphere(RandomSource(5).generator())
    assert angle_between(v, v) == 0.0
    assert angle_between(v, -v) == pytest.approx(math.pi, abs=1e-12)
    w = vec_polar(1.0, 0.3)
    u = vec_polar(1.4, 0.3)
    assert angle_between(w, u) == pytest.approx(0.4, abs=1e-12)


def test_vec_polar_and_rotation_matrix():
    assert np.allclose(vec_polar(0.0), [0.0, 0.0, 1.0])
    assert np.allclose(vec_polar(math.pi / 2), [1.0, 0.0, 0.0], atol=1e-15)
    r = rotation_matrix(np.array([0.0, 0.0, 1.0]), math.pi / 2)
    assert np.allclose(r @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-15)


def test_fibonacci_sphere_spread():
    pts = fibonacci_sphere(100)
    assert pts.shape == (100, 3)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # spread points average close to the centroid of the sphere
    assert np.all(np.abs(pts.mean(axis=0)) < 0.02)


def test_random_setting_pairs():
    pairs = random_setting_pairs(RandomSource(8).generator(), 12)
    assert len(pairs) == 12
    for x, y in pairs:
        assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-12)
