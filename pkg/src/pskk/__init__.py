"""Periodic scaled Korobov kernel (PSKK) density estimation.

Samples in R^d are wrapped onto the box ``[-a, a)^d``, a regularised least
squares problem is solved in the span of scaled Korobov kernels centred on a
rank-1 lattice, and the clipped expansion is the density estimate. A Gaussian
KDE baseline and a MISE benchmark harness are included.
"""

__version__ = "0.1.0"

from .bernoulli import BernoulliPoly, bernoulli_poly, bernoulli_polynomial
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    DomainError,
    IllConditionedSystemError,
    InvalidLatticeError,
    InvalidSampleError,
    PskkError,
    ScheduleUnderflowError,
    StructureError,
    UnsupportedOrderError,
    ValidationError,
)
from .estimator import (
    PskkModel,
    Schedule,
    WrappedSamples,
    default_params,
    empirical_vector,
    evaluate,
    fit,
    fit_on_nodes,
    gram_first_row,
    gram_matrix,
    solve_circulant,
    wrap_samples,
)
from .io import load_model, read_samples_csv, save_model
from .kde import KdeModel, kde_evaluate, kde_fit
from .kernel import (
    KernelParams,
    fourier_weight,
    kernel_eval,
    kernel_l2_inner,
    kernel_matrix,
    kernel_series_oracle,
    l2_inner_matrix,
)
from .lattice import (
    Lattice,
    ScaledNodeSet,
    cbc_construct,
    cbc_criterion,
    is_prime,
    lattice_nodes,
    lattice_points,
    scale_to_box,
    unscale_from_box,
)
from .mise import KdeMethod, MiseReport, PskkMethod, StudyConfig, convergence_study, estimate_mise, fit_loglog_slope
from .mixtures import GaussianMixture, example_mixture, mixture_pdf, mixture_sample
from .sobol import SobolGrid, sobol_points
