"""Laplace noise by inverse CDF on a seeded generator."""

from __future__ import annotations

import hashlib
import math

import numpy as np

from dpsql.errors import InvalidScale


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def _check(scale: float) -> float:
    try:
        scale = float(scale)
    except (TypeError, ValueError):
        raise InvalidScale(f"scale {scale!r} is not a number") from None
    if not (math.isfinite(scale) and scale > 0):
        raise InvalidScale(f"Laplace scale must be positive and finite, got {scale!r}")
    return scale


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One draw from Laplace(0, scale)."""
    scale = _check(scale)
    u = rng.random()
    while u == 0.0:  # keeps the log finite
        u = rng.random()
    u -= 0.5
    return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def laplace_samples(scale: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws; identical to calling laplace_sample ``n`` times (barring u == 0)."""
    scale = _check(scale)
    u = rng.random(n)
    u[u == 0.0] = 0.5  # zero draw; vanishing probability, mapped to no noise
    u -= 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
