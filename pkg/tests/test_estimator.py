import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pskk.errors import (
    ConfigurationError,
    DomainError,
    IllConditionedSystemError,
    InvalidSampleError,
    ScheduleUnderflowError,
    StructureError,
    ValidationError,
)
from pskk.estimator import (
    PskkModel,
    circulant_from_row,
    circulant_matvec,
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
from pskk.kernel import KernelParams, kernel_eval, kernel_l2_inner, kernel_matrix
from pskk.lattice import Lattice, ScaledNodeSet, cbc_construct, lattice_nodes
from pskk.sobol import sobol_points


# -- wrapping ---------------------------------------------------------------

@pytest.mark.parametrize("y, a, expected", [(3.5, 1.0, -0.5), (-0.3, 1.0, -0.3), (1.0, 1.0, -1.0),
                                            (2.5, 2.5, -2.5), (-1.0, 1.0, -1.0), (-3.0, 1.0, -1.0)])
def test_wrap_examples(y, a, expected):
    assert wrap_samples([[y]], a).data[0, 0] == pytest.approx(expected, abs=1e-15)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(float, (7, 2), elements=finite), st.sampled_from([0.5, 1.0, 2.5, 6.0]))
def test_wrap_idempotent_and_in_box(y, a):
    w = wrap_samples(y, a).data
    assert np.all(w >= -a) and np.all(w < a)
    assert np.array_equal(wrap_samples(w, a).data, w)


@given(arrays(float, (5, 3), elements=st.floats(-0.999, 0.999)))
def test_wrap_fixes_box_points(y):
    assert np.array_equal(wrap_samples(y, 1.0).data, y)


@given(arrays(float, (5, 2), elements=st.floats(-50, 50, allow_nan=False)))
def test_wrap_differs_by_period_multiples(y):
    a = 1.5
    k = (y - wrap_samples(y, a).data) / (2 * a)
    assert np.allclose(k, np.round(k), atol=1e-9)


def test_wrap_rejects_non_finite():
    with pytest.raises(InvalidSampleError):
        wrap_samples([[0.0], [np.nan]], 1.0)
    with pytest.raises(ValidationError):
        wrap_samples([[0.0]], 0.0)


# -- Gram row ---------------------------------------------------------------

def _nodes(d, N, alpha, a):
    return lattice_nodes(cbc_construct(d, N, alpha), a)


@pytest.mark.parametrize("d, N, alpha, a", [(1, 11, 1, 0.5), (2, 31, 2, 1.0), (3, 31, 3, 2.5), (2, 13, 2, 6.0)])
def test_gram_row_matches_dense_assembly(d, N, alpha, a):
    kp = KernelParams(alpha, a, d)
    nodes = _nodes(d, N, alpha, a)
    lam = 1e-3
    row = gram_first_row(kp, nodes, lam)
    dense = gram_matrix(kp, nodes, lam)
    assert np.allclose(circulant_from_row(row.astype(float)), dense, rtol=1e-12, atol=1e-14 * np.abs(dense).max())
    rng = np.random.default_rng(3)
    for j, k in rng.integers(0, N, size=(20, 2)):
        assert float(row[(k - j) % N]) == pytest.approx(dense[j, k], rel=1e-12)


def test_gram_row_entries():
    kp = KernelParams(1, 0.5, 1)
    nodes = _nodes(1, 7, 1, 0.5)
    row = gram_first_row(kp, nodes, 0.0)
    assert float(row[0]) == pytest.approx(721 / 720, rel=1e-15)
    x = nodes.points
    for k in range(7):
        assert float(row[k]) == pytest.approx(kernel_l2_inner(kp, x[0], x[k]), rel=1e-13)


def test_gram_row_single_node():
    kp = KernelParams(2, 1.0, 2)
    nodes = lattice_nodes(Lattice((1, 1), 2), 1.0)
    lat1 = ScaledNodeSet(nodes.points[:1], 1.0, source=None)
    lam = 0.3
    x = lat1.points[0]
    expected = kernel_l2_inner(kp, x, x) + lam * kernel_eval(kp, x, x)
    assert gram_matrix(kp, lat1, lam)[0, 0] == pytest.approx(expected, rel=1e-15)


def test_gram_row_is_symmetric_bitwise():
    kp = KernelParams(2, 2.5, 4)
    row = gram_first_row(kp, _nodes(4, 101, 2, 2.5), 1e-6)
    assert np.array_equal(row[1:], row[:0:-1])


def test_gram_row_needs_lattice_nodes():
    kp = KernelParams(2, 1.0, 1)
    nodes = ScaledNodeSet(np.linspace(-0.9, 0.9, 5)[:, None], 1.0)
    with pytest.raises(StructureError):
        gram_first_row(kp, nodes, 1e-3)


def test_gram_row_config_mismatch():
    with pytest.raises(ConfigurationError):
        gram_first_row(KernelParams(2, 1.0, 2), _nodes(2, 11, 2, 2.0), 1e-3)
    with pytest.raises(ConfigurationError):
        gram_first_row(KernelParams(2, 1.0, 3), _nodes(2, 11, 2, 1.0), 1e-3)


# -- empirical vector -------------------------------------------------------

def test_empirical_vector_single_sample_on_node():
    kp = KernelParams(2, 1.0, 2)
    nodes = _nodes(2, 13, 2, 1.0)
    ws = wrap_samples(nodes.points[4:5], 1.0)
    b = empirical_vector(kp, nodes, ws)
    assert b[4] == pytest.approx(kernel_eval(kp, nodes.points[4], nodes.points[4]), rel=1e-14)
    assert np.allclose(b, kernel_matrix(kp, nodes.points, ws.data)[:, 0], rtol=1e-14)


def test_empirical_vector_repeated_sample():
    kp = KernelParams(2, 1.0, 2)
    nodes = _nodes(2, 13, 2, 1.0)
    y = np.array([[0.3, -0.7]])
    b1 = empirical_vector(kp, nodes, wrap_samples(y, 1.0))
    b5 = empirical_vector(kp, nodes, wrap_samples(np.repeat(y, 5, axis=0), 1.0))
    assert np.allclose(b1, b5, rtol=1e-15)


def test_empirical_vector_chunking_and_threads(monkeypatch, rng):
    import pskk.estimator as est

    kp = KernelParams(2, 2.0, 3)
    nodes = _nodes(3, 31, 2, 2.0)
    ws = wrap_samples(rng.normal(size=(5000, 3)), 2.0)
    sequential = kernel_matrix(kp, nodes.points, ws.data).sum(axis=1) / ws.M
    monkeypatch.setattr(est, "_CHUNK_ENTRIES", 31 * 97)
    one = empirical_vector(kp, nodes, ws, workers=1)
    four = empirical_vector(kp, nodes, ws, workers=4)
    assert np.array_equal(one, four)
    assert np.allclose(one, sequential, rtol=1e-12, atol=0)


def test_empirical_vector_halfwidth_mismatch():
    kp = KernelParams(2, 1.0, 2)
    with pytest.raises(ConfigurationError):
        empirical_vector(kp, _nodes(2, 11, 2, 1.0), wrap_samples(np.zeros((3, 2)), 2.0))


# -- circulant solve --------------------------------------------------------

def test_solve_scaled_identity():
    b = np.array([1.0, -2.0, 3.5, 0.25, 7.0])
    row = np.array([4.0, 0, 0, 0, 0])
    assert np.allclose(solve_circulant(row, b), b / 4.0, rtol=1e-15)
    assert solve_circulant(np.array([2.0]), np.array([3.0]))[0] == 1.5


@pytest.mark.parametrize("N", [11, 31])
def test_solve_random_spd_circulant_matches_dense(N):
    rng = np.random.default_rng(N)
    half = rng.random(N // 2 + 1)
    row = np.concatenate([half, half[1 : (N + 1) // 2][::-1]])
    row[0] += N  # diagonally dominant, so SPD
    b = rng.normal(size=N)
    A = circulant_from_row(row)
    assert np.allclose(A, A.T)
    dense = np.linalg.solve(A, b)
    fast = solve_circulant(row, b)
    assert np.max(np.abs(fast - dense)) <= 1e-10 * np.max(np.abs(dense))


def test_solve_general_circulant_matches_dense(rng):
    row = rng.normal(size=17)
    row[0] += 10
    b = rng.normal(size=17)
    dense = np.linalg.solve(circulant_from_row(row), b)
    assert np.allclose(solve_circulant(row, b), dense, rtol=1e-12, atol=1e-14)


def test_matvec_matches_dense(rng):
    row = rng.normal(size=13)
    c = rng.normal(size=13)
    assert np.allclose(circulant_matvec(row, c), circulant_from_row(row) @ c, rtol=1e-13, atol=1e-14)


def test_solve_singular_symbol_reports_modulus():
    row = np.ones(7)  # rank one: all eigenvalues but one vanish
    with pytest.raises(IllConditionedSystemError) as info:
        solve_circulant(row, np.arange(7.0))
    assert info.value.min_modulus is not None and info.value.min_modulus < 1e-12


def test_solve_shape_mismatch():
    with pytest.raises(ValueError):
        solve_circulant(np.ones(3), np.ones(4))


# -- fit and evaluate -------------------------------------------------------

def test_fit_single_node_closed_form():
    kp = KernelParams(2, 1.0, 1)
    lat = Lattice((1,), 2)
    nodes = lattice_nodes(lat, 1.0)
    y = np.array([[0.2], [-0.4], [0.9]])
    model = fit_on_nodes(y, kp, ScaledNodeSet(nodes.points[:1], 1.0), 1e-2)
    x = nodes.points[0]
    A = kernel_l2_inner(kp, x, x) + 1e-2 * kernel_eval(kp, x, x)
    b = np.mean([kernel_eval(kp, x, yy) for yy in y])
    assert model.coeffs[0] == pytest.approx(b / A, rel=1e-14)


def test_fit_lattice_matches_dense_path(rng):
    kp = KernelParams(2, 1.5, 2)
    lat = cbc_construct(2, 31, 2)
    y = rng.normal(size=(400, 2))
    fast = fit(y, kp, 31, 1e-4, lattice=lat)
    nodes = lattice_nodes(lat, 1.5)
    dense = fit_on_nodes(y, kp, ScaledNodeSet(nodes.points, 1.5), 1e-4)
    assert np.allclose(fast.coeffs, dense.coeffs, rtol=1e-8, atol=1e-10 * np.abs(dense.coeffs).max())


def test_fit_residual_and_determinism(rng):
    kp = KernelParams(2, 2.5, 4)
    y = rng.normal(scale=0.7, size=(2000, 4))
    m1 = fit(y, kp, 101, 1e-6)
    m2 = fit(y, kp, 101, 1e-6)
    assert np.array_equal(m1.coeffs, m2.coeffs)
    b = empirical_vector(kp, m1.nodes, wrap_samples(y, kp.a))
    assert m1.residual(b) <= 1e-10 * np.abs(b).max()


@pytest.mark.parametrize("M", [10, 100, 1000])
def test_fit_residual_small_samples_ill_conditioned(M):
    # Few samples excite the smallest eigenvalues; the stored coefficients
    # must still satisfy the residual bound.
    from pskk.mixtures import example_mixture

    kp = KernelParams(2, 6.0, 2)
    for s in range(3):
        y = example_mixture("gm2d").sample(M, np.random.default_rng([M, s]))
        model = fit(y, kp, 1009, 1e-6)
        b = empirical_vector(kp, model.nodes, wrap_samples(y, kp.a))
        assert model.residual(b) <= 1e-10 * np.abs(b).max()


def test_fit_uses_scaled_space_cbc_by_default(rng):
    kp = KernelParams(2, 2.5, 3)
    model = fit(rng.normal(size=(50, 3)), kp, 31, 1e-3)
    assert model.lattice == cbc_construct(3, 31, 2, 2.5)


@pytest.mark.parametrize("lam", [0.0, -1e-3, np.inf, np.nan])
def test_fit_rejects_bad_lambda(lam):
    with pytest.raises(ValidationError):
        fit(np.zeros((3, 1)), KernelParams(2, 1.0, 1), 11, lam)


def test_fit_lattice_mismatch():
    with pytest.raises(ConfigurationError):
        fit(np.zeros((3, 2)), KernelParams(2, 1.0, 2), 11, 1e-3, lattice=Lattice((1, 3), 13))
    with pytest.raises(ConfigurationError):
        fit(np.zeros((3, 3)), KernelParams(2, 1.0, 2), 11, 1e-3)


def test_fit_uniform_density_is_flat():
    # Wrapped uniform samples on the box have exactly constant density.
    a, d = 1.0, 2
    kp = KernelParams(2, a, d)
    y = np.random.default_rng(11).uniform(-a, a, size=(100_000, d))
    model = fit(y, kp, 1009, 1e-6)
    p = 2 * a * sobol_points(d, 10).points - a
    vals = evaluate(model, p)
    assert np.max(np.abs(vals - (2 * a) ** -d)) <= 0.1 * (2 * a) ** -d
    assert model.mass() == pytest.approx(1.0, abs=1e-3)


def test_evaluate_support_and_clipping(rng):
    kp = KernelParams(2, 1.0, 2)
    model = fit(rng.normal(scale=0.3, size=(300, 2)), kp, 31, 1e-4)
    outside = np.array([[1.1, 0.0], [0.0, -1.0001], [5.0, 5.0]])
    assert np.all(evaluate(model, outside) == 0.0)
    x = rng.uniform(-1, 1, size=(2000, 2))
    vals = evaluate(model, x)
    assert np.all(vals >= 0)
    raw = model.expansion(x)
    assert np.array_equal(vals, np.maximum(raw, 0.0))
    assert evaluate(model, [1.1, 0.0]) == 0.0


def test_evaluate_single_term_expansion():
    kp = KernelParams(2, 1.0, 2)
    nodes = _nodes(2, 11, 2, 1.0)
    c = np.zeros(11)
    c[0] = 1.0
    model = PskkModel(kp, nodes, c, 1e-3)
    x = np.array([0.3, -0.2])
    assert evaluate(model, x) == pytest.approx(max(kernel_eval(kp, nodes.points[0], x), 0.0), rel=1e-14)
    model_neg = PskkModel(kp, nodes, -c, 1e-3)
    assert evaluate(model_neg, x) == 0.0


def test_evaluate_threads_are_bitwise_identical(rng):
    kp = KernelParams(2, 1.0, 2)
    model = fit(rng.normal(scale=0.3, size=(300, 2)), kp, 97, 1e-4)
    x = rng.uniform(-1.2, 1.2, size=(5000, 2))
    assert np.array_equal(evaluate(model, x, workers=1), evaluate(model, x, workers=3))


def test_evaluate_dimension_mismatch():
    kp = KernelParams(2, 1.0, 2)
    model = PskkModel(kp, _nodes(2, 11, 2, 1.0), np.ones(11), 1e-3)
    with pytest.raises(ConfigurationError):
        evaluate(model, np.zeros((4, 3)))
    with pytest.raises(DomainError):
        model.expansion([[2.0, 0.0]])


def test_model_coefficient_count_checked():
    with pytest.raises(ConfigurationError):
        PskkModel(KernelParams(2, 1.0, 2), _nodes(2, 11, 2, 1.0), np.ones(10), 1e-3)


# -- parameter schedule -----------------------------------------------------

def test_schedule_published_values():
    s = default_params(10**6, 2, beta=1.0, q=2.0, epsilon=0.0, eta=np.exp(-1.0))
    assert s.a == pytest.approx(np.sqrt((np.log(1e6) - 1) / 2), rel=1e-12)
    assert s.a == pytest.approx(2.531, abs=1e-3)
    assert s.lam == pytest.approx(0.1 * 10**-4.8, rel=1e-12)
    assert s.N == 3001


def test_schedule_prime_sequence():
    Ns = [default_params(10**k, 2, 1.0, 2.0, 0.0, np.exp(-1.0)).N for k in range(2, 7)]
    assert Ns == [31, 97, 307, 947, 3001]
    # M = 10 underflows the decay prior above; N does not depend on it.
    assert default_params(10, 2, 2.0, 2.0, 0.0, 1.0).N == 11
    up = [default_params(10**k, 2, 1.0, 2.0, 0.0, np.exp(-1.0), prime_rounding="up").N for k in range(2, 6)]
    assert up == [31, 97, 307, 953]


def test_schedule_with_slack():
    s = default_params(1000, 2, beta=1.0, q=2.0, epsilon=0.1, eta=1.0)
    assert s.N == 113
    assert s.lam == pytest.approx(0.1 * 1000 ** (-1 / (1 + 0.25 + 0.05)), rel=1e-12)
    assert s.a == pytest.approx(np.sqrt(np.log(1000) / 2), rel=1e-12)


def test_schedule_cap():
    assert default_params(10**8, 2, 1.0, 2.0, 0.0, 1.0).N == 4001
    assert default_params(10**8, 2, 1.0, 2.0, 0.0, 1.0, n_max=1000).N == 997


def test_schedule_underflow():
    with pytest.raises(ScheduleUnderflowError):
        default_params(2, 2, beta=1.0, q=2.0, epsilon=0.0, eta=np.exp(-1.0))


@pytest.mark.parametrize("kwargs", [dict(M=1), dict(epsilon=1.5), dict(epsilon=-0.1), dict(beta=0.0),
                                    dict(q=0.5), dict(eta=0.0), dict(prime_rounding="down")])
def test_schedule_rejects_bad_inputs(kwargs):
    args = dict(M=1000, alpha=2, beta=1.0, q=2.0, epsilon=0.1, eta=1.0)
    args.update(kwargs)
    with pytest.raises(ValidationError):
        default_params(**args)
