"""Rank-1 lattices: CBC construction, point generation and box scaling.

The CBC search minimises the squared worst-case integration error

    e^2(z) = -1 + (1/N) sum_{k=0}^{N-1} prod_i omega({k z_i / N}),
    omega(t) = 1 + (2a)^(2 alpha) (-1)^(alpha+1) B_{2 alpha}(t) / (2 alpha)!,

one coordinate at a time with ``z_1 = 1``; ties go to the smallest candidate.
``omega`` is the one-dimensional kernel of the scaled Korobov space on
``[-a, a]``, pulled back to ``[0, 1)`` and normalised to a unit constant term.
With the default ``a = 1/2`` it is the plain unit-cube Korobov kernel of
smoothness ``alpha``. Larger boxes put more weight on the non-constant terms;
for density estimation on ``[-a, a]^d`` the lattice should be built with the
same ``a`` as the kernel, which gives far better approximation than the
unit-cube criterion once ``d > 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, gcd
from pathlib import Path

import numpy as np

from .bernoulli import bernoulli_poly
from .errors import InvalidLatticeError, UnsupportedOrderError, ValidationError
from .kernel import MAX_ALPHA

# Candidates whose scores agree to this relative tolerance count as tied.
TIE_RTOL = 1e-8
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for all ``n < 3.3e24``."""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for b in _MR_BASES:
        x = pow(b, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(x: float) -> int:
    """Smallest prime ``>= x``."""
    n = max(2, int(np.ceil(x)))
    while not is_prime(n):
        n += 1
    return n


def prev_prime(x: float) -> int | None:
    """Largest prime ``<= x``, or None below 2."""
    n = int(np.floor(x))
    while n >= 2 and not is_prime(n):
        n -= 1
    return n if n >= 2 else None


def nearest_prime(x: float) -> int:
    """Prime closest to ``x``; an exact tie resolves to the larger prime."""
    up = next_prime(x)
    down = prev_prime(x)
    if down is None or (up - x) <= (x - down):
        return up
    return down


@dataclass(frozen=True)
class Lattice:
    """Rank-1 lattice ``{k z / N mod 1 : k = 1..N}`` with prime ``N``."""

    z: tuple[int, ...]
    N: int

    def __post_init__(self):
        N = int(self.N)
        if not is_prime(N):
            raise InvalidLatticeError(f"N={self.N} is not prime")
        z = tuple(int(v) for v in np.atleast_1d(self.z))
        if not z:
            raise InvalidLatticeError("generating vector must have at least one component")
        for v in z:
            if not (1 <= v <= N - 1):
                raise InvalidLatticeError(f"component {v} outside 1..{N - 1}")
            if gcd(v, N) != 1:
                raise InvalidLatticeError(f"component {v} shares a factor with N={N}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "N", N)

    @property
    def d(self) -> int:
        return len(self.z)


def _excess_table(N: int, alpha: int, a: float = 0.5) -> np.ndarray:
    # omega(r/N) - 1 for r = 0..N-1 in long double, mirrored so that
    # x[r] == x[N-r] bitwise; this makes the criterion exactly symmetric under
    # z_j -> N - z_j. Working with omega - 1 keeps relative precision when the
    # criterion itself is far below machine epsilon, and the extra bits of
    # long double separate genuine differences from rounding.
    LD = np.longdouble
    t = np.arange(N // 2 + 1, dtype=LD) / LD(N)
    coeffs = [LD(c.numerator) / LD(c.denominator) for c in bernoulli_poly(2 * alpha).coefficients]
    acc = np.full(t.shape, coeffs[0], dtype=LD)
    for c in coeffs[1:]:
        acc = acc * t + c
    sign = 1 if alpha % 2 == 1 else -1
    vals = sign * (LD(2) * LD(a)) ** (2 * alpha) / LD(factorial(2 * alpha)) * acc
    r = np.arange(N)
    return vals[np.minimum(r, N - r)]


def _check_cbc_args(N, alpha, a=0.5):
    if not is_prime(N):
        raise InvalidLatticeError(f"N={N} is not prime")
    if not isinstance(alpha, (int, np.integer)) or not (1 <= alpha <= MAX_ALPHA):
        raise UnsupportedOrderError(f"alpha must be an integer in 1..{MAX_ALPHA}, got {alpha!r}")
    if not (np.isfinite(a) and a > 0):
        raise ValidationError(f"half-width a must be positive, got {a!r}")


def cbc_criterion(z, N: int, alpha: int, a: float = 0.5) -> float:
    """Squared worst-case integration error ``e^2_N(z)`` of the lattice rule."""
    N = int(N)
    _check_cbc_args(N, alpha, a)
    x = _excess_table(N, int(alpha), float(a))
    k = np.arange(N, dtype=np.int64)
    log_prod = np.zeros(N, dtype=np.longdouble)
    for zj in np.atleast_1d(z):
        log_prod += np.log1p(x[(k * int(zj)) % N])
    return float(np.mean(np.expm1(log_prod)))


def _candidate_increments(prod: np.ndarray, x: np.ndarray, N: int, chunk: int = 256) -> np.ndarray:
    # Adding coordinate c changes e^2 by (1/N) sum_k prod[k] x[c k mod N].
    k = np.arange(N, dtype=np.int64)
    out = np.empty(N - 1, dtype=np.longdouble)
    for start in range(1, N, chunk):
        c = np.arange(start, min(start + chunk, N), dtype=np.int64)
        idx = (c[:, None] * k[None, :]) % N
        out[start - 1 : start - 1 + len(c)] = x[idx] @ prod
    return out / N


def cbc_construct(d: int, N: int, alpha: int, a: float = 0.5) -> Lattice:
    """Build a generating vector coordinate by coordinate.

    Parameters
    ----------
    d : int
        Dimension.
    N : int
        Prime number of points.
    alpha : int
        Smoothness of the Korobov space the criterion is measured in.
    a : float, default 0.5
        Half-width of the box whose scaled Korobov space defines the
        criterion; ``0.5`` is the unit-cube space.

    Returns
    -------
    Lattice
        Deterministic for fixed ``(d, N, alpha, a)``.
    """
    if int(d) < 1:
        raise ValidationError("d must be >= 1")
    _check_cbc_args(int(N), alpha, a)
    return _cbc(int(d), int(N), int(alpha), float(a))


@lru_cache(maxsize=64)
def _cbc(d: int, N: int, alpha: int, a: float) -> Lattice:
    x = _excess_table(N, alpha, a)
    k = np.arange(N)
    z = [1]
    prod = 1.0 + x
    for _ in range(1, d):
        inc = _candidate_increments(prod, x, N)
        # Equivalent lattices tie in exact arithmetic but differ in the last
        # bits; resolve near-ties to the smallest candidate.
        lo = inc.min()
        best = int(np.flatnonzero(inc <= lo + TIE_RTOL * abs(lo))[0]) + 1
        z.append(best)
        prod *= 1.0 + x[(k * best) % N]
    return Lattice(tuple(z), N)


def lattice_points(lat: Lattice) -> np.ndarray:
    """Points ``{k z / N}`` for ``k = 1..N``, shape ``(N, d)``; row ``N-1`` is the origin."""
    k = np.arange(1, lat.N + 1, dtype=np.int64)
    z = np.asarray(lat.z, dtype=np.int64)
    return ((k[:, None] * z[None, :]) % lat.N) / lat.N


@dataclass(frozen=True, eq=False)
class ScaledNodeSet:
    """Nodes in ``[-a, a]^d``; ``source`` is the lattice they were scaled from, if any."""

    points: np.ndarray
    a: float
    source: Lattice | None = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "a", float(self.a))

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.N


def scale_to_box(points, a: float, source: Lattice | None = None) -> ScaledNodeSet:
    """Map points of ``[0, 1)^d`` to ``[-a, a)^d`` via ``y -> 2a y - a``."""
    if not a > 0:
        raise ValidationError("a must be positive")
    y = np.asarray(points, dtype=float)
    return ScaledNodeSet(2.0 * a * y - a, a, source)


def unscale_from_box(x, a: float) -> np.ndarray:
    """Inverse of the box scaling."""
    return (np.asarray(x, dtype=float) + a) / (2.0 * a)


def lattice_nodes(lat: Lattice, a: float) -> ScaledNodeSet:
    return scale_to_box(lattice_points(lat), a, source=lat)


# Text format: first line "N d alpha", second line the components of z.

def format_lattice(lat: Lattice, alpha: int) -> str:
    return f"{lat.N} {lat.d} {int(alpha)}\n" + " ".join(str(v) for v in lat.z) + "\n"


def parse_lattice(text: str) -> tuple[Lattice, int]:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 2 or len(lines[0]) != 3:
        raise InvalidLatticeError("expected 'N d alpha' followed by one line of z components")
    try:
        N, d, alpha = (int(v) for v in lines[0])
        z = tuple(int(v) for v in lines[1])
    except ValueError as exc:
        raise InvalidLatticeError(f"malformed lattice file: {exc}") from None
    if len(z) != d:
        raise InvalidLatticeError(f"header says d={d} but {len(z)} components given")
    return Lattice(z, N), alpha


def save_lattice(lat: Lattice, alpha: int, path) -> None:
    Path(path).write_text(format_lattice(lat, alpha))


def load_lattice(path) -> tuple[Lattice, int]:
    return parse_lattice(Path(path).read_text())
