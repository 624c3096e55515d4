"""Small manifold test sets."""

from __future__ import annotations

import numpy as np

from .errors import UnknownGenerator

MAX_POINTS = 64


def swiss_roll(n, noise=0.0, rng=None, height=10.0):
    """Points ``(t cos t, h, t sin t)`` with ``t`` in ``[1.5π, 3π]``."""
    t = 1.5 * np.pi * (1 + rng.random(n))
    h = height * rng.random(n)
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)])


def s_curve(n, noise=0.0, rng=None, height=2.0):
    t = 3 * np.pi * (rng.random(n) - 0.5)
    h = height * rng.random(n)
    return np.column_stack([np.sin(t), h, np.sign(t) * (np.cos(t) - 1)])


def circle(n, noise=0.0, rng=None):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def blob(n, noise=0.0, rng=None, dim=3):
    return rng.normal(size=(n, dim))


GENERATORS = {"swiss_roll": swiss_roll, "s_curve": s_curve, "circle": circle, "blob": blob}


def generate_dataset(name: str, n: int, noise: float = 0.0, seed: int = 0) -> np.ndarray:
    """Deterministic ``n x D`` point set for a named generator."""
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise UnknownGenerator(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    if not 1 <= n <= MAX_POINTS:
        raise ValueError(f"n must be in 1..{MAX_POINTS}")
    rng = np.random.default_rng(seed)
    pts = gen(n, noise, rng)
    if noise > 0:
        pts = pts + noise * rng.normal(size=pts.shape)
    return pts
