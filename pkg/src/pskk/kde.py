"""Gaussian product-kernel density estimation with Scott's rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .errors import DegenerateDataError, InvalidSampleError, ValidationError
from .estimator import _as_query

_CHUNK_ENTRIES = 1 << 21


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Samples and per-dimension bandwidths ``h_j``."""

    samples: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self):
        Y = np.array(self.samples, dtype=float, ndmin=2)
        h = np.array(self.bandwidths, dtype=float, ndmin=1)
        if h.shape != (Y.shape[1],) or np.any(h <= 0):
            raise ValidationError("need one positive bandwidth per dimension")
        Y.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "samples", Y)
        object.__setattr__(self, "bandwidths", h)

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def evaluate(self, x, workers=None):
        return kde_evaluate(self, x, workers=workers)


def scott_bandwidths(samples) -> np.ndarray:
    """``h_j = sigma_j M^(-1/(d+4))`` with the unbiased standard deviation."""
    Y = np.asarray(samples, dtype=float)
    M, d = Y.shape
    return Y.std(axis=0, ddof=1) * M ** (-1.0 / (d + 4))


def kde_fit(samples) -> KdeModel:
    """Fit a KDE with Scott's rule bandwidths.

    Parameters
    ----------
    samples : array_like, shape (M, d)
        At least two samples.

    Raises
    ------
    DegenerateDataError
        If some coordinate has zero sample variance.
    """
    Y = np.array(samples, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise InvalidSampleError("KDE needs samples of shape (M, d) with M >= 2")
    if not np.all(np.isfinite(Y)):
        raise InvalidSampleError("samples contain non-finite values")
    h = scott_bandwidths(Y)
    if np.any(h <= 0):
        raise DegenerateDataError(f"zero sample variance in dimension(s) {np.flatnonzero(h <= 0).tolist()}")
    return KdeModel(Y, h)


def _block(Ys, norm, q):
    # Squared scaled distances through one matrix product; inputs are centred
    # and scaled beforehand, which keeps the expansion well conditioned.
    d2 = (q * q).sum(axis=1)[:, None] + (Ys * Ys).sum(axis=1)[None, :] - 2.0 * q @ Ys.T
    np.maximum(d2, 0.0, out=d2)
    return norm * np.exp(-0.5 * d2).mean(axis=1)


def kde_evaluate(model: KdeModel, x, workers=None):
    """``(1/M) sum_m prod_j N(x_j; Y_mj, h_j^2)`` at one point or an ``(n, d)`` array."""
    q, single = _as_query(np.asarray(x, dtype=float), model.d)
    centre = model.samples.mean(axis=0)
    Ys = (model.samples - centre) / model.bandwidths
    qs = (q - centre) / model.bandwidths
    norm = float(np.prod((2 * np.pi * model.bandwidths**2) ** -0.5))
    step = max(1, _CHUNK_ENTRIES // model.M)
    chunks = [qs[i : i + step] for i in range(0, qs.shape[0], step)]
    parts = ordered_map(lambda c: _block(Ys, norm, c), chunks, workers)
    out = np.concatenate(parts) if parts else np.empty(0)
    return float(out[0]) if single else out
