"""Seeded random streams.

Every random draw in the package goes through :func:`substream`, a Philox
counter-based generator keyed by ``(seed, index)``.  Independent work items
(slices, trials, pool states) get their own index so that results do not depend
on the order, or the process, in which they are evaluated.

Complex Gaussians are produced by the Box-Muller transform applied to the
stream's uniforms, so the variates are fixed by the key alone and not by the
numpy version's choice of normal sampler.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Index namespaces for streams that are not per-slice.
POOL_STREAM = 1 << 62
TRIAL_STREAM = 1 << 61
CHANNEL_STREAM = 1 << 60


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for work item ``index`` under ``seed``."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussians (real and imaginary parts N(0, 1/2)) via Box-Muller."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    size = int(np.prod(shape, dtype=np.int64))
    u = rng.random(2 * size)
    radius = np.sqrt(-np.log1p(-u[:size]))  # 1 - u lies in (0, 1]
    z = radius * np.exp(2j * np.pi * u[size:])
    return z.reshape(shape)


def haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniformly distributed unit vector in C^dim."""
    g = complex_normal(rng, dim)
    return g / np.linalg.norm(g)


def haar_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    g = complex_normal(rng, (count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Induced-measure random mixed state of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = complex_normal(rng, (dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real
