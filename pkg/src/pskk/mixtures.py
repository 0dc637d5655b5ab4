"""Isotropic Gaussian mixtures used as test densities.

Four named examples are provided:

``gm2d``
    Nine equally weighted components with means on ``{-2, 0, 2}^2`` and
    variance ``1/4`` per coordinate.
``gm4d``, ``gm5d``, ``gm6d``
    Nine equally weighted components with standard deviation ``0.7``; the
    ``k``-th mean (``k = 0..8``) has coordinates ``{c_i k / 9} - 4/9`` with
    ``c = (1, 2, 4, 8)``, ``(1, 2, 4, 6, 8)`` and ``(1, 2, 4, 6, 7, 8)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

_MULTIPLIERS = {
    "gm4d": (1, 2, 4, 8),
    "gm5d": (1, 2, 4, 6, 8),
    "gm6d": (1, 2, 4, 6, 7, 8),
}

EXAMPLES = ("gm2d", "gm4d", "gm5d", "gm6d")


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Mixture of isotropic normals ``N(means[i], sigma2 I)`` with a shared variance.

    Parameters
    ----------
    weights : array_like, shape (K,)
        Non-negative, summing to one within 1e-12.
    means : array_like, shape (K, d)
    sigma2 : float
        Common per-coordinate variance.
    """

    weights: np.ndarray
    means: np.ndarray
    sigma2: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        mu = np.array(self.means, dtype=float, ndmin=2)
        if w.shape != (mu.shape[0],):
            raise ValidationError("weights and means disagree on the number of components")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be non-negative and sum to 1")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValidationError(f"sigma2 must be positive, got {self.sigma2!r}")
        w.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def pdf(self, x):
        return mixture_pdf(self, x)

    def sample(self, M: int, rng) -> np.ndarray:
        return mixture_sample(self, M, rng)

    def l2_norm_sq(self) -> float:
        """``int f^2`` over R^d in closed form (pairwise Gaussian overlaps)."""
        dist2 = np.sum((self.means[:, None, :] - self.means[None, :, :]) ** 2, axis=-1)
        var = 2.0 * self.sigma2
        overlap = np.exp(-0.5 * dist2 / var) / (2 * np.pi * var) ** (self.d / 2)
        return float(self.weights @ overlap @ self.weights)


def mixture_pdf(gm: GaussianMixture, x):
    """Density at ``x``: a point of shape ``(d,)`` or points of shape ``(n, d)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != gm.d:
        raise ValidationError(f"points have d={x.shape[1]}, mixture has d={gm.d}")
    norm = (2 * np.pi * gm.sigma2) ** (-gm.d / 2)
    out = np.zeros(x.shape[0])
    for w, mu in zip(gm.weights, gm.means):
        r2 = np.sum((x - mu) ** 2, axis=1)
        out += w * norm * np.exp(-0.5 * r2 / gm.sigma2)
    return float(out[0]) if single else out


def mixture_sample(gm: GaussianMixture, M: int, rng) -> np.ndarray:
    """Draw ``M`` samples: component labels first, then the Gaussian noise."""
    rng = np.random.default_rng(rng)
    labels = rng.choice(gm.n_components, size=int(M), p=gm.weights)
    noise = rng.standard_normal((int(M), gm.d))
    return gm.means[labels] + np.sqrt(gm.sigma2) * noise


def _lattice_means(mult) -> np.ndarray:
    rows = []
    for k in range(9):
        rows.append([float(Fraction(c * k, 9) % 1 - Fraction(4, 9)) for c in mult])
    return np.array(rows)


def example_mixture(name: str) -> GaussianMixture:
    """One of the named test densities ``gm2d``, ``gm4d``, ``gm5d``, ``gm6d``."""
    if name == "gm2d":
        grid = np.array([-2.0, 0.0, 2.0])
        means = np.array([[u, v] for u in grid for v in grid])
        return GaussianMixture(np.full(9, 1 / 9), means, 0.25)
    if name in _MULTIPLIERS:
        return GaussianMixture(np.full(9, 1 / 9), _lattice_means(_MULTIPLIERS[name]), 0.49)
    raise ValidationError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
