"""Shared fixtures and random-object factories for the test suite."""

import numpy as np
import pytest

from gradtest import (
    DiscreteMeasure,
    PiecewiseUniformMeasure,
    ProductSample,
    ProductTangent,
    center,
    sample,
)


def make_discrete(rng, max_atoms=5, low=-2.0, high=2.0):
    """Random discrete measure with 2..max_atoms distinct atoms."""
    m = int(rng.integers(2, max_atoms + 1))
    locs = np.sort(rng.uniform(low, high, size=m))
    while np.any(np.diff(locs) < 1e-6):
        locs = np.sort(rng.uniform(low, high, size=m))
    w = rng.uniform(0.1, 1.0, size=m)
    w /= w.sum()
    return DiscreteMeasure(locs, w)


def make_tangent(rng, base, scale=1.0):
    """Random centered tangent on a measure, values of order `scale`."""
    if isinstance(base, DiscreteMeasure):
        raw = rng.normal(0.0, scale, size=base.locations.size)
    else:
        raw = rng.normal(0.0, scale, size=base.breakpoints.size - 1)
    return center(base, raw)


def make_product_tangent(rng, p0, q0, scale=1.0):
    return ProductTangent(make_tangent(rng, p0, scale), make_tangent(rng, q0, scale))


def draw_sample(p0, q0, n1, n2, seed=0):
    gen = np.random.Generator(np.random.Philox(key=seed))
    return ProductSample(sample(p0, gen, n1), sample(q0, gen, n2))


@pytest.fixture
def five_atom_pair():
    """The canonical nondegenerate discrete footpoint pair used throughout."""
    p0 = DiscreteMeasure([-1.5, -0.5, 0.0, 1.0, 2.0],
                         [0.15, 0.25, 0.2, 0.3, 0.1])
    q0 = DiscreteMeasure([-1.0, 0.5, 1.5, 2.5],
                         [0.3, 0.3, 0.2, 0.2])
    return p0, q0


@pytest.fixture
def unit_interval_pair():
    """Continuous footpoint pair on overlapping intervals."""
    p0 = PiecewiseUniformMeasure.uniform(0.0, 1.0)
    q0 = PiecewiseUniformMeasure([0.0, 0.5, 1.0], [0.4, 0.6])
    return p0, q0
