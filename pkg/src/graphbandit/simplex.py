"""Probability-simplex helpers and the negative-entropy mirror-descent step.

Distributions are plain 1-d float arrays. :func:`check_simplex` is the only
validator; the other functions assume their inputs already passed it.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

__all__ = [
    "SIMPLEX_TOL",
    "check_simplex",
    "dominating_mix",
    "entropy_omd_step",
    "sample",
    "uniform",
    "uniform_mix",
]

SIMPLEX_TOL = 1e-9
_FLOOR = 1e-300


def check_simplex(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Return ``p`` as a float array, raising ``ValueError`` unless it lies on the simplex."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"distribution must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("distribution entries must be finite and nonnegative")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"distribution sums to {total!r}, not 1")
    return arr


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def entropy_omd_step(p: np.ndarray, loss: np.ndarray, eta: float) -> np.ndarray:
    """One mirror-descent step with regulariser ``(1/eta) sum q log q``.

    Closed form ``p'_i ∝ p_i exp(-eta loss_i)``, evaluated in log space with
    a max shift so no exponent is positive. Adding a constant to every loss
    leaves the result unchanged.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    loss = np.asarray(loss, dtype=float)
    if loss.shape != p.shape:
        raise ValueError(f"loss shape {loss.shape} does not match distribution {p.shape}")
    if not math.isfinite(loss.sum()):
        raise ValueError("loss vector must be finite")
    if p.min() > 0:
        logits = np.log(p)
        logits -= eta * loss
    else:
        support = p > 0
        logits = np.full(p.shape, -np.inf)
        logits[support] = np.log(p[support]) - eta * loss[support]
    logits -= logits.max()
    out = np.exp(logits)
    out /= out.sum()
    if out.min() < _FLOOR:
        out[out < _FLOOR] = 0.0
        out /= out.sum()
    return out


def uniform_mix(p: np.ndarray, eta: float) -> np.ndarray:
    """``(1 - eta) p + eta / K``: every entry ends up at least ``eta / K``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {eta}")
    return (1.0 - eta) * p + eta / p.size


def dominating_mix(p: np.ndarray, eps: float, dom_set: Iterable[int]) -> np.ndarray:
    """``(1 - eps |D|) p + eps 1_D``."""
    dom = sorted(set(dom_set))
    if not dom:
        return p.copy()
    if eps < 0 or eps * len(dom) > 1.0:
        raise ValueError(f"eps={eps} with |D|={len(dom)} leaves the simplex")
    out = (1.0 - eps * len(dom)) * p
    out[dom] += eps
    return out


def sample(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from ``p`` using exactly one uniform from ``rng``."""
    u = rng.random()
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if i >= p.size:
        # u * total rounded onto the last breakpoint: take the last supported index
        i = int(np.flatnonzero(p)[-1])
    return i
