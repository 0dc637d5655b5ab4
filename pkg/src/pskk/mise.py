"""Monte Carlo / quasi-Monte Carlo estimation of the mean integrated squared error.

For each replication ``s = 0..S-1`` a sample of size ``M`` is drawn from the
true mixture with the generator ``default_rng([seed, M, s])``; every method run
with the same ``seed`` therefore sees the same samples. The integrated squared
error of replication ``s`` is approximated on ``2^t`` Sobol' points mapped to
a box ``[-L, L]^d``:

    ISE_s ~= (2L)^d * mean_k |fhat_s(p_k) - f(p_k)|^2,  p_k = 2L w_k - L.

Each replication applies its own uniform random shift modulo 1 to the
Sobol' points (drawn from ``default_rng([seed, M, s, 1])``, so every method
sees the same shift). An unshifted grid has a point exactly at the centre of
the box, which is where the test densities peak; on the wide KDE box that one
point carries enough volume to bias the estimate by tens of percent. The
shifted rule is unbiased for every replication. ``shift=False`` restores the
fixed grid.

Methods with compact support on ``[-a, a]^d`` (the PSKK estimator) use
``L = a`` and add the exterior term ``int_{outside} f^2``, estimated as
``E_f[f(X) 1{X outside}]`` from ``n_trunc`` draws of ``f``. Other methods use
``L = l``. The MISE is the mean of ``ISE_s`` and the standard error is the
replication standard deviation over ``sqrt(S)``.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import ValidationError
from .estimator import default_params, evaluate, fit
from .kde import kde_evaluate, kde_fit
from .kernel import KernelParams
from .lattice import cbc_construct
from .mixtures import GaussianMixture, example_mixture
from .sobol import sobol_points

REPORT_COLUMNS = (
    "method", "M", "d", "alpha", "a", "N", "lambda_or_bandwidth", "mise", "stderr", "runtime_seconds",
)
# Draws used for the exterior term; the term is tiny for the half-widths used here.
DEFAULT_N_TRUNC = 10**6


@dataclass
class MiseReport:
    method: str
    M: int
    d: int
    mise: float
    stderr: float
    params: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0
    truncation: float = 0.0
    ise: np.ndarray | None = field(default=None, repr=False)

    def row(self, timing: bool = True) -> dict:
        p = self.params
        return {
            "method": self.method,
            "M": self.M,
            "d": self.d,
            "alpha": p.get("alpha", ""),
            "a": _fmt(p.get("a", "")),
            "N": p.get("N", ""),
            "lambda_or_bandwidth": _fmt(p.get("lambda", p.get("bandwidth", ""))),
            "mise": _fmt(self.mise),
            "stderr": _fmt(self.stderr),
            "runtime_seconds": f"{self.runtime_seconds:.3f}" if timing else "",
        }


def _fmt(v):
    return format(v, ".10g") if isinstance(v, (float, np.floating)) else v


@dataclass
class Fitted:
    """What a method returns for one replication."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    params: dict
    halfwidth: float | None = None


class PskkMethod:
    """PSKK with fixed ``(a, N, lam)`` or, for any of them left as None, the default schedule.

    Parameters
    ----------
    alpha : int
    a, N, lam : optional
        Fixed values; ``None`` resolves through :func:`default_params`.
    beta, q, epsilon, eta, n_max, prime_rounding
        Schedule inputs, used only when something is left to resolve.
    """

    name = "pskk"

    def __init__(self, alpha=2, a=None, N=None, lam=None, beta=1.0, q=2.0, epsilon=0.0,
                 eta=float(np.exp(-1.0)), n_max=4001, prime_rounding="nearest", workers=None):
        self.alpha = int(alpha)
        self.a, self.N, self.lam = a, N, lam
        self.schedule_args = dict(beta=beta, q=q, epsilon=epsilon, eta=eta, n_max=n_max,
                                  prime_rounding=prime_rounding)
        self.workers = workers

    def resolve(self, M: int) -> tuple[float, int, float]:
        a, N, lam = self.a, self.N, self.lam
        if a is None or N is None or lam is None:
            sched = default_params(M, self.alpha, **self.schedule_args)
            a = sched.a if a is None else a
            N = sched.N if N is None else N
            lam = sched.lam if lam is None else lam
        return float(a), int(N), float(lam)

    def fit(self, samples: np.ndarray) -> Fitted:
        M, d = samples.shape
        a, N, lam = self.resolve(M)
        kp = KernelParams(self.alpha, a, d)
        model = fit(samples, kp, N, lam, lattice=cbc_construct(d, N, self.alpha, a), workers=self.workers)
        params = {"alpha": self.alpha, "a": a, "N": N, "lambda": lam, "mass": model.mass()}
        return Fitted(lambda x: evaluate(model, x, workers=self.workers), params, halfwidth=a)


class KdeMethod:
    """Gaussian KDE with Scott's rule."""

    name = "kde"

    def __init__(self, workers=None):
        self.workers = workers

    def fit(self, samples: np.ndarray) -> Fitted:
        model = kde_fit(samples)
        params = {"bandwidth": float(np.mean(model.bandwidths))}
        return Fitted(lambda x: kde_evaluate(model, x, workers=self.workers), params)


class FunctionMethod:
    """A fixed function posing as an estimator (ignores the samples); for checks."""

    def __init__(self, fn, name="function", halfwidth=None):
        self.fn, self.name, self.halfwidth = fn, name, halfwidth

    def fit(self, samples) -> Fitted:
        return Fitted(self.fn, {}, halfwidth=self.halfwidth)


def exterior_mass_sq(truth: GaussianMixture, a: float, n: int = DEFAULT_N_TRUNC, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of ``int_{R^d minus [-a,a]^d} f^2`` and its standard error."""
    rng = np.random.default_rng([int(seed), 0x7FFFFFFF])
    total = np.zeros(2)
    step = 1 << 18
    for start in range(0, n, step):
        X = truth.sample(min(step, n - start), rng)
        v = truth.pdf(X) * np.any(np.abs(X) > a, axis=1)
        total += (v.sum(), (v * v).sum())
    mean = total[0] / n
    var = max(total[1] / n - mean**2, 0.0)
    return float(mean), float(np.sqrt(var / n))


def replication_samples(truth: GaussianMixture, M: int, s: int, seed: int) -> np.ndarray:
    return truth.sample(M, np.random.default_rng([int(seed), int(M), int(s)]))


def replication_shift(d: int, M: int, s: int, seed: int) -> np.ndarray:
    return np.random.default_rng([int(seed), int(M), int(s), 1]).random(d)


def estimate_mise(method, truth: GaussianMixture, M: int, S: int = 20, l: float = 6.0, t: int = 16,
                  seed: int = 0, n_trunc: int = DEFAULT_N_TRUNC, shift: bool = True,
                  workers=None) -> MiseReport:
    """Replicated MISE estimate for one method at sample size ``M``.

    Parameters
    ----------
    method
        Object with ``name`` and ``fit(samples) -> Fitted``.
    truth : GaussianMixture
    M, S : int
        Sample size and number of replications (``S >= 2``).
    l : float
        Integration half-width for methods without compact support.
    t : int
        ``2^t`` Sobol' points per replication.
    seed : int
        Root seed; replication ``s`` uses ``default_rng([seed, M, s])``.
    n_trunc : int
        Draws for the exterior term of compactly supported methods.
    shift : bool
        Randomly shift the Sobol' points in each replication.
    workers : int, optional
        Replications run on this many threads; results do not depend on it.
    """
    if S < 2:
        raise ValidationError("need S >= 2 replications for a standard error")
    d = truth.d
    w = sobol_points(d, t).points
    start = time.perf_counter()

    def one(s):
        Y = replication_samples(truth, M, s, seed)
        fitted = method.fit(Y)
        L = l if fitted.halfwidth is None else fitted.halfwidth
        u = (w + replication_shift(d, M, s, seed)) % 1.0 if shift else w
        p = 2.0 * L * u - L
        err = fitted.evaluate(p) - truth.pdf(p)
        return (2.0 * L) ** d * float(np.mean(err * err)), fitted

    results = ordered_map(one, range(S), workers)
    runtime = time.perf_counter() - start
    ise = np.array([r[0] for r in results])
    fitted = [r[1] for r in results]
    trunc = 0.0
    halfwidths = {f.halfwidth for f in fitted}
    if halfwidths != {None}:
        if len(halfwidths) != 1:
            raise ValidationError("half-width changed between replications")
        trunc, _ = exterior_mass_sq(truth, halfwidths.pop(), n_trunc, seed)
        ise = ise + trunc
    params = dict(fitted[0].params)
    for key in ("bandwidth", "mass"):
        if key in params:
            params[key] = float(np.mean([f.params[key] for f in fitted]))
    return MiseReport(
        method=getattr(method, "name", "method"),
        M=int(M),
        d=d,
        mise=float(ise.mean()),
        stderr=float(ise.std(ddof=1) / np.sqrt(S)),
        params=params,
        runtime_seconds=runtime,
        truncation=trunc,
        ise=ise,
    )


@dataclass
class StudyConfig:
    """A sweep over sample sizes for one or more methods on a named example."""

    example: str
    Ms: Sequence[int]
    methods: Sequence = ("pskk", "kde")
    S: int = 20
    t: int = 16
    l: float = 6.0
    seed: int = 0
    n_trunc: int = DEFAULT_N_TRUNC
    shift: bool = True
    pskk: dict = field(default_factory=dict)
    workers: int | None = None


def make_method(name: str, pskk_args: dict | None = None, workers=None):
    if name == "pskk":
        return PskkMethod(**(pskk_args or {}), workers=workers)
    if name == "kde":
        return KdeMethod(workers=workers)
    raise ValidationError(f"unknown method {name!r}; choose pskk or kde")


def convergence_study(config: StudyConfig, csv_path=None, plot_path=None) -> list[MiseReport]:
    """Run every ``(method, M)`` pair, optionally writing the CSV report and a log-log plot."""
    truth = example_mixture(config.example)
    methods = [make_method(m, config.pskk, config.workers) if isinstance(m, str) else m
               for m in config.methods]
    reports = []
    for method in methods:
        for M in config.Ms:
            reports.append(estimate_mise(method, truth, int(M), config.S, config.l, config.t,
                                         config.seed, config.n_trunc, config.shift,
                                         workers=config.workers))
    if csv_path is not None:
        write_report_csv(reports, csv_path)
    if plot_path is not None:
        plot_convergence(reports, plot_path)
    return reports


def fit_loglog_slope(Ms, mises, m_min: float = 1e2) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log10 mise`` against ``log10 M``.

    Points with ``M < m_min`` are treated as pre-asymptotic and left out.
    """
    Ms = np.asarray(Ms, dtype=float)
    mises = np.asarray(mises, dtype=float)
    keep = Ms >= m_min
    if keep.sum() < 2:
        raise ValidationError("need at least two points with M >= m_min to fit a slope")
    slope, intercept = np.polyfit(np.log10(Ms[keep]), np.log10(mises[keep]), 1)
    return float(slope), float(intercept)


def write_report_csv(reports: Sequence[MiseReport], target, timing: bool = True) -> None:
    """Write the report table to a path or an open text stream.

    With ``timing=False`` the runtime column is left empty, which makes the
    file a pure function of the inputs and the seed.
    """
    if hasattr(target, "write"):
        _write_rows(reports, target, timing)
        return
    with open(target, "w", newline="") as fh:
        _write_rows(reports, fh, timing)


def _write_rows(reports, fh, timing):
    w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row(timing))


def plot_convergence(reports: Sequence[MiseReport], path, m_min: float = 1e2) -> None:
    """Log-log MISE against M, one series per method, fitted slope in the legend."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name in dict.fromkeys(r.method for r in reports):
        rs = sorted((r for r in reports if r.method == name), key=lambda r: r.M)
        Ms = [r.M for r in rs]
        label = name
        try:
            slope, _ = fit_loglog_slope(Ms, [r.mise for r in rs], m_min)
            label += f" (slope {slope:.2f})"
        except ValidationError:
            pass
        ax.errorbar(Ms, [r.mise for r in rs], yerr=[2 * r.stderr for r in rs], marker="o",
                    capsize=3, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("M")
    ax.set_ylabel("MISE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
