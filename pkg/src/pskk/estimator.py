"""Periodic scaled Korobov kernel density estimator.

Pipeline: wrap samples into ``[-a, a)^d``, place nodes on a scaled rank-1
lattice, assemble the circulant system ``A c = b`` with

    A[j, k] = <K(x_j, .), K(x_k, .)>_L2 + lam * K(x_j, x_k),
    b[j]    = mean_m K(x_j, wrapped_m),

solve it with the FFT, and evaluate the clipped expansion
``max(sum_k c_k K(x_k, x), 0)`` inside the box (zero outside).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log

import numpy as np

from ._parallel import ordered_map, pairwise_sum
from .errors import (
    ConfigurationError,
    DomainError,
    IllConditionedSystemError,
    InvalidSampleError,
    ScheduleUnderflowError,
    StructureError,
    ValidationError,
)
from .kernel import (
    KernelParams,
    kernel_factor,
    kernel_factor_t,
    kernel_matrix,
    l2_factor_t,
    l2_inner_matrix,
)
from .lattice import Lattice, ScaledNodeSet, cbc_construct, lattice_nodes, nearest_prime, next_prime, prev_prime

# Number of matrix entries processed per chunk in the node-by-sample loops.
_CHUNK_ENTRIES = 1 << 21

RESIDUAL_RTOL = 1e-10
# Circulant solves run in long double; an eigenvalue below 100 ulps of the
# largest is indistinguishable from rounding. Where long double is plain
# double this is about 2e-14.
SYMBOL_RTOL = 100 * float(np.finfo(np.longdouble).eps)


@dataclass(frozen=True, eq=False)
class WrappedSamples:
    data: np.ndarray
    a: float

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def _as_samples(samples) -> np.ndarray:
    y = np.array(samples, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] < 1:
        raise InvalidSampleError(f"samples must have shape (M, d) with M >= 1, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidSampleError("samples contain non-finite values")
    return y


def wrap_samples(samples, a: float) -> WrappedSamples:
    """Reduce samples modulo ``2a`` into ``[-a, a)^d``.

    Each coordinate maps to ``((y + a) mod 2a) - a``; coordinates already in
    ``[-a, a)`` are returned unchanged (bitwise).
    """
    if not a > 0:
        raise ValidationError("a must be positive")
    y = _as_samples(samples)
    inside = (y >= -a) & (y < a)
    w = np.mod(y + a, 2.0 * a) - a
    # Rounding in the mod can land exactly on +a; fold it to the left endpoint.
    w[w >= a] = -a
    w = np.where(inside, y, w)
    return WrappedSamples(w, float(a))


def _require_lattice(nodes: ScaledNodeSet) -> Lattice:
    if nodes.source is None:
        raise StructureError(
            "circulant assembly needs lattice-sourced nodes; use gram_matrix for arbitrary node sets"
        )
    return nodes.source


def gram_first_row(kp: KernelParams, nodes: ScaledNodeSet, lam: float) -> np.ndarray:
    """First row of the circulant system matrix, in extended precision.

    ``A[j, k] = row[(k - j) mod N]`` for lattice-ordered nodes. The offset
    between the first node and node ``k`` is ``(k - 1) z mod N`` on the integer
    lattice; reducing it to ``min(r, N - r) / N`` (the kernel is periodic and
    symmetric) makes ``row[m] == row[N - m]`` hold bitwise.
    """
    lat = _require_lattice(nodes)
    _check_nodes(kp, nodes)
    m = np.arange(lat.N, dtype=np.int64)
    z = np.asarray(lat.z, dtype=np.int64)
    r = (m[:, None] * z[None, :]) % lat.N
    t = np.minimum(r, lat.N - r).astype(np.longdouble) / np.longdouble(lat.N)
    l2 = np.prod(l2_factor_t(kp, t), axis=1)
    kv = np.prod(kernel_factor_t(kp, t), axis=1)
    return l2 + np.longdouble(lam) * kv


def gram_matrix(kp: KernelParams, nodes: ScaledNodeSet, lam: float) -> np.ndarray:
    """Dense system matrix for an arbitrary node set."""
    _check_nodes(kp, nodes)
    x = nodes.points
    return l2_inner_matrix(kp, x, x) + lam * kernel_matrix(kp, x, x)


def _check_nodes(kp, nodes):
    if nodes.d != kp.d:
        raise ConfigurationError(f"nodes have d={nodes.d}, kernel has d={kp.d}")
    if nodes.a != kp.a:
        raise ConfigurationError(f"nodes scaled to a={nodes.a}, kernel has a={kp.a}")


def _kernel_block(kp: KernelParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = kernel_factor(kp, x[:, 0, None] - y[None, :, 0])
    for j in range(1, kp.d):
        out *= kernel_factor(kp, x[:, j, None] - y[None, :, j])
    return out


def empirical_vector(kp: KernelParams, nodes: ScaledNodeSet, ws: WrappedSamples, workers=None) -> np.ndarray:
    """``b[j] = mean_m K(x_j, wrapped_m)``.

    Samples are processed in chunks whose partial sums are combined by a
    fixed-order pairwise reduction, so threading does not change the result.
    """
    if ws.a != nodes.a:
        raise ConfigurationError(f"samples wrapped with a={ws.a}, nodes use a={nodes.a}")
    _check_nodes(kp, nodes)
    if ws.d != kp.d:
        raise ConfigurationError(f"samples have d={ws.d}, kernel has d={kp.d}")
    x = nodes.points
    step = max(1, _CHUNK_ENTRIES // max(1, x.shape[0]))
    chunks = [ws.data[i : i + step] for i in range(0, ws.M, step)]
    parts = ordered_map(lambda y: _kernel_block(kp, x, y).sum(axis=1), chunks, workers)
    return pairwise_sum(parts) / ws.M


def _row_to_column(row: np.ndarray) -> np.ndarray:
    return np.roll(row[::-1], 1)


def _symbol(row: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.longdouble)
    symbol = np.fft.fft(_row_to_column(row))
    # A symmetric circulant has real eigenvalues with lam[k] == lam[N - k].
    # Enforcing both keeps rounding noise from being amplified by the small
    # eigenvalues into an imaginary part of the solution.
    if np.array_equal(row[1:], row[:0:-1]):
        re = symbol.real
        return 0.5 * (re + np.roll(re[::-1], 1))
    return symbol


def circulant_matvec(row, c) -> np.ndarray:
    """``A @ c`` for the circulant ``A`` with first row ``row``, in long double."""
    symbol = _symbol(row)
    c = np.asarray(c, dtype=np.longdouble)
    if np.isrealobj(symbol):
        return np.fft.irfft(np.fft.rfft(c) * symbol[: c.shape[0] // 2 + 1], n=c.shape[0])
    return np.fft.ifft(symbol * np.fft.fft(c)).real


def circulant_from_row(row) -> np.ndarray:
    """Dense circulant matrix with ``A[j, k] = row[(k - j) mod N]``."""
    row = np.asarray(row)
    N = row.shape[0]
    idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
    return row[idx]


def solve_circulant(row, b) -> np.ndarray:
    """Solve ``A c = b`` for the circulant ``A`` with first row ``row`` via the FFT.

    Computation is carried out, and the solution returned, in long double;
    rounding the solution to float64 alone can raise the relative residual
    to about 1e-10 for the ill-conditioned systems met in practice. A
    symmetric row gives a real symbol and is solved with real transforms;
    otherwise the imaginary part of the result is checked to be negligible.

    Raises
    ------
    IllConditionedSystemError
        If the smallest eigenvalue modulus is below ``SYMBOL_RTOL`` times the
        largest; ``min_modulus`` carries the offending value.
    """
    row = np.asarray(row)
    b = np.asarray(b)
    if row.shape != b.shape or row.ndim != 1:
        raise ValueError("row and b must be 1-D arrays of equal length")
    symbol = _symbol(row)
    mod = np.abs(symbol)
    if mod.max() == 0 or mod.min() < SYMBOL_RTOL * mod.max():
        raise IllConditionedSystemError(
            f"circulant symbol nearly singular: min modulus {float(mod.min()):.3e}, "
            f"max {float(mod.max()):.3e}",
            min_modulus=float(mod.min()),
        )
    bl = b.astype(np.longdouble)
    if np.isrealobj(symbol):
        # Real even symbol: the solution is real by construction, so use the
        # real-input transform pair. Any imaginary part a complex transform
        # produced would be rounding amplified by the small eigenvalues.
        N = row.shape[0]
        return np.fft.irfft(np.fft.rfft(bl) / symbol[: N // 2 + 1], n=N)
    c = np.fft.ifft(np.fft.fft(bl) / symbol)
    scale = max(float(np.max(np.abs(c.real))), np.finfo(float).tiny)
    if float(np.max(np.abs(c.imag))) > 1e-10 * scale:
        raise IllConditionedSystemError("FFT solve left a non-negligible imaginary part")
    return c.real


@dataclass(frozen=True, eq=False)
class PskkModel:
    """Fitted estimator: expansion ``sum_k coeffs[k] K(nodes[k], .)``.

    ``coeffs`` keeps the solver's long double solution, so the system
    residual holds for the stored vector; evaluation uses its float64
    rounding.
    """

    kp: KernelParams
    nodes: ScaledNodeSet
    coeffs: np.ndarray
    lam: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.longdouble)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        cf = c.astype(float)
        cf.setflags(write=False)
        object.__setattr__(self, "_coeffs_f", cf)
        if c.shape != (self.nodes.N,):
            raise ConfigurationError(f"{c.shape[0]} coefficients for {self.nodes.N} nodes")

    @property
    def N(self) -> int:
        return self.nodes.N

    @property
    def a(self) -> float:
        return self.kp.a

    @property
    def d(self) -> int:
        return self.kp.d

    @property
    def lattice(self) -> Lattice | None:
        return self.nodes.source

    support_halfwidth = a

    def evaluate(self, x, workers=None):
        return evaluate(self, x, workers=workers)

    def expansion(self, x, workers=None) -> np.ndarray:
        """Unclipped ``sum_k c_k K(x_k, x)`` at points inside the box, shape ``(n,)``."""
        pts, _ = _as_query(np.asarray(x, dtype=float), self.d)
        if np.any(np.abs(pts) > self.a):
            raise DomainError(f"expansion is only defined on [-{self.a}, {self.a}]^{self.d}")
        return _expansion(self, pts, workers)

    def mass(self) -> float:
        """Integral of the unclipped expansion over the box.

        Every kernel section integrates to ``(2a)^-d``; the value is a
        diagnostic and is not forced to 1.
        """
        return float(self._coeffs_f.sum() * self.kp.period ** -self.d)

    def residual(self, b) -> float:
        """``max|A c - b|`` for this model's system."""
        if self.lattice is not None:
            Ac = circulant_matvec(gram_first_row(self.kp, self.nodes, self.lam), self.coeffs)
        else:
            Ac = gram_matrix(self.kp, self.nodes, self.lam) @ self._coeffs_f
        return float(np.max(np.abs(Ac - b)))


def _expansion(model: PskkModel, x: np.ndarray, workers=None) -> np.ndarray:
    nodes = model.nodes.points
    step = max(1, _CHUNK_ENTRIES // max(1, model.N))
    chunks = [x[i : i + step] for i in range(0, x.shape[0], step)]
    parts = ordered_map(lambda q: model._coeffs_f @ _kernel_block(model.kp, nodes, q), chunks, workers)
    return np.concatenate(parts) if parts else np.empty(0)


def _as_query(xa: np.ndarray, d: int) -> tuple[np.ndarray, bool]:
    # A single point is a scalar (d = 1) or a length-d vector; a 1-D array
    # of any other length is a batch of points only when d = 1.
    if xa.ndim == 0 and d == 1:
        return xa.reshape(1, 1), True
    if xa.ndim == 1 and xa.shape[0] == d:
        return xa.reshape(1, d), True
    if xa.ndim == 1 and d == 1:
        return xa[:, None], False
    if xa.ndim == 2 and xa.shape[1] == d:
        return xa, False
    raise ConfigurationError(f"query points of shape {xa.shape} do not match dimension d={d}")


def evaluate(model: PskkModel, x, workers=None):
    """Clipped density estimate; zero outside ``[-a, a]^d``.

    ``x`` is a single point of shape ``(d,)`` or an array of shape ``(n, d)``.
    """
    xa = np.asarray(x, dtype=float)
    pts, single = _as_query(xa, model.d)
    inside = np.all(np.abs(pts) <= model.a, axis=1)
    out = np.zeros(pts.shape[0])
    if inside.any():
        out[inside] = np.maximum(_expansion(model, pts[inside], workers), 0.0)
    if single:
        return float(out[0])
    return out


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise ValidationError(f"regularisation lambda must be positive, got {lam!r}")


def fit_on_nodes(samples, kp: KernelParams, nodes: ScaledNodeSet, lam: float, workers=None) -> PskkModel:
    """Fit on a given node set: FFT solve for lattice nodes, dense solve otherwise."""
    _check_lambda(lam)
    ws = wrap_samples(samples, kp.a)
    if ws.d != kp.d:
        raise ConfigurationError(f"samples have d={ws.d}, kernel has d={kp.d}")
    b = empirical_vector(kp, nodes, ws, workers=workers)
    if nodes.source is not None:
        row = gram_first_row(kp, nodes, lam)
        c = solve_circulant(row, b)
        Ac = circulant_matvec(row, c)
    else:
        A = gram_matrix(kp, nodes, lam)
        c = np.linalg.solve(A, b)
        Ac = A @ c
    res = float(np.max(np.abs(Ac - b)))
    if res > RESIDUAL_RTOL * np.max(np.abs(b)):
        raise IllConditionedSystemError(
            f"residual {res:.3e} exceeds {RESIDUAL_RTOL:g} * |b|_inf = {RESIDUAL_RTOL * np.max(np.abs(b)):.3e}"
        )
    return PskkModel(kp, nodes, c, float(lam))


def fit(samples, kp: KernelParams, N: int, lam: float, lattice: Lattice | None = None, workers=None) -> PskkModel:
    """Fit the estimator on a CBC lattice with ``N`` points.

    Parameters
    ----------
    samples : array_like, shape (M, d)
        Raw samples in R^d; they are wrapped into the box internally.
    kp : KernelParams
        Kernel smoothness, half-width and dimension.
    N : int
        Prime number of lattice nodes.
    lam : float
        Regularisation parameter, strictly positive.
    lattice : Lattice, optional
        Generating vector to use. When omitted it is built by CBC in the
        scaled Korobov space of ``kp`` (same ``alpha`` and ``a``).
    """
    _check_lambda(lam)
    if lattice is None:
        lattice = cbc_construct(kp.d, int(N), kp.alpha, kp.a)
    elif lattice.N != int(N) or lattice.d != kp.d:
        raise ConfigurationError(f"lattice has (N={lattice.N}, d={lattice.d}), expected (N={N}, d={kp.d})")
    return fit_on_nodes(samples, kp, lattice_nodes(lattice, kp.a), lam, workers=workers)


@dataclass(frozen=True)
class Schedule:
    a: float
    N: int
    lam: float


def default_params(M, alpha, beta, q, epsilon, eta, n_max=4001, prime_rounding="nearest") -> Schedule:
    """Theoretical parameter schedule for ``M`` samples.

    ``a = ((ln M + ln eta) / (2 beta))^(1/q)``,
    ``lam = 0.1 M^(-1 / (1 + 1/(2 alpha) + epsilon/2))`` and ``N`` a prime near
    ``3 M^(1 / (alpha - epsilon))``, capped at ``n_max``.

    ``prime_rounding="nearest"`` picks the closest prime (ties upward), which
    reproduces the published 11, 31, 97, 307, 947, 3001 sequence for
    ``alpha = 2`` and ``epsilon = 0``; ``"up"`` picks the next prime at or above.
    ``epsilon = 0`` is accepted as the limit used in experiments.

    Raises
    ------
    ScheduleUnderflowError
        If the resulting ``a`` does not exceed ``max(beta^(-1/q), 1/2)``.
    """
    if M < 2:
        raise ValidationError("M must be >= 2")
    if not (0 <= epsilon < 2 - 1 / alpha):
        raise ValidationError(f"epsilon must lie in [0, {2 - 1 / alpha}), got {epsilon}")
    if not (beta > 0 and q >= 1 and eta > 0):
        raise ValidationError("need beta > 0, q >= 1 and eta > 0")
    bound = max(beta ** (-1.0 / q), 0.5)
    base = (log(M) + log(eta)) / (2.0 * beta)
    a = base ** (1.0 / q) if base > 0 else 0.0
    if a <= bound:
        raise ScheduleUnderflowError(
            f"schedule gives a={a:.4g} <= max(beta^(-1/q), 1/2)={bound:.4g}; "
            f"M={M} is below the admissible range of the decay-based schedule"
        )
    lam = 0.1 * M ** (-1.0 / (1.0 + 1.0 / (2 * alpha) + epsilon / 2.0))
    target = 3.0 * M ** (1.0 / (alpha - epsilon))
    if prime_rounding == "nearest":
        N = nearest_prime(target)
    elif prime_rounding == "up":
        N = next_prime(target)
    else:
        raise ValidationError(f"unknown prime_rounding {prime_rounding!r}")
    if N > n_max:
        N = prev_prime(n_max)
        if N is None:
            raise ValidationError(f"n_max={n_max} admits no prime")
    return Schedule(float(a), int(N), float(lam))
