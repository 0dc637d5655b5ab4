"""Unscrambled Sobol' points in Gray-code order.

Direction numbers for dimensions 2..16 are the Joe-Kuo ``new-joe-kuo-6.21201``
values, embedded below as ``dimension s a m_1 .. m_s`` rows; dimension 1 is the
van der Corput sequence. The table is verified against a SHA-256 checksum at
import time. Points are 32-bit, the first point is the origin, and the
``n``-th point is the XOR of the direction numbers selected by the bits of
the Gray code ``n ^ (n >> 1)``, so the sequence agrees with the classical
Antonov-Saleev ordering (and with ``scipy.stats.qmc.Sobol(scramble=False)``).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_TABLE = """\
2 1 0 1
3 2 1 1 3
4 3 1 1 3 1
5 3 2 1 1 1
6 4 1 1 1 3 3
7 4 4 1 3 5 13
8 5 2 1 1 5 5 17
9 5 4 1 1 5 5 5
10 5 7 1 1 7 11 19
11 5 11 1 1 5 1 1
12 5 13 1 1 1 3 11
13 5 14 1 3 5 5 31
14 6 1 1 3 3 9 7 49
15 6 13 1 1 1 15 21 21
16 6 16 1 3 1 13 27 49
"""
_TABLE_SHA256 = "81529570e9dd5933a7b2238427f6ee11751b7e9e33671bc9707977eaddb378e6"

MAX_DIM = 16
MAX_LOG2 = 20
_BITS = 32


def _verify_table() -> None:
    digest = hashlib.sha256(_TABLE.encode("ascii")).hexdigest()
    if digest != _TABLE_SHA256:
        raise RuntimeError("embedded Sobol' direction table failed its checksum")


def _direction_numbers(dim: int) -> np.ndarray:
    """``V[j, k]`` for coordinate ``j`` and bit ``k`` (``k = 0`` is the most significant)."""
    V = np.zeros((dim, _BITS), dtype=np.uint64)
    V[0] = [1 << (_BITS - 1 - k) for k in range(_BITS)]
    rows = [list(map(int, ln.split())) for ln in _TABLE.splitlines()]
    for j in range(1, dim):
        _, s, a, *m = rows[j - 1]
        v = [m[k] << (_BITS - 1 - k) for k in range(s)]
        for k in range(s, _BITS):
            new = v[k - s] ^ (v[k - s] >> s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= v[k - i]
            v.append(new)
        V[j] = v
    return V


_verify_table()
_V = _direction_numbers(MAX_DIM)


@dataclass(frozen=True, eq=False)
class SobolGrid:
    """The first ``2^t`` Sobol' points in ``[0, 1)^d``."""

    d: int
    t: int
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sobol_points(d: int, t: int) -> SobolGrid:
    """First ``2^t`` points of the ``d``-dimensional sequence, origin first.

    Raises
    ------
    ValidationError
        Unless ``1 <= d <= 16`` and ``0 <= t <= 20``.
    """
    if not (isinstance(d, (int, np.integer)) and 1 <= d <= MAX_DIM):
        raise ValidationError(f"Sobol' dimension must be in 1..{MAX_DIM}, got {d!r}")
    if not (isinstance(t, (int, np.integer)) and 0 <= t <= MAX_LOG2):
        raise ValidationError(f"log2 point count must be in 0..{MAX_LOG2}, got {t!r}")
    n = np.arange(1 << int(t), dtype=np.uint64)
    gray = n ^ (n >> np.uint64(1))
    x = np.zeros((n.shape[0], int(d)), dtype=np.uint64)
    for k in range(int(t)):
        bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        x[bit] ^= _V[: int(d), k]
    pts = x.astype(float) / float(1 << _BITS)
    pts.setflags(write=False)
    return SobolGrid(int(d), int(t), pts)
