import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frl.factorized import Factorization, product
from frl.objectives import make_matrix_regression
from frl.optim import OptimizerConfig, run_training
from frl.oracles import (
    adamw_l2_equivalent,
    fit_exponential_rate,
    single_matrix_equilibrium,
    svt_minimizer,
    two_layer_equilibrium,
)
from frl.spectra import nuclear_norm, pseudo_rank, singular_values


def grid_minimize_2x2_diag(d, lam, scale, lo=-0.5, hi=1.5, n=401):
    """Brute-force search over diagonal W; for diagonal D the minimizer is diagonal."""
    xs = np.linspace(lo, hi, n)
    best = None
    for x in xs:
        vals = scale * ((x - d[0]) ** 2 + (xs - d[1]) ** 2) + lam * (abs(x) + np.abs(xs))
        j = int(np.argmin(vals))
        if best is None or vals[j] < best[0]:
            best = (vals[j], x, xs[j])
    return np.array([best[1], best[2]])


@pytest.mark.parametrize("d", [(1.0, 0.3), (0.8, 0.05), (0.2, 0.6)])
@pytest.mark.parametrize("lam", [0.0, 0.1, 0.3, 0.7])
@pytest.mark.parametrize("scale", [0.5, 1.0])
def test_svt_matches_grid_search_on_2x2_diagonal(d, lam, scale):
    grid = grid_minimize_2x2_diag(d, lam, scale)
    w = svt_minimizer(np.diag(d), lam, scale)
    np.testing.assert_allclose(np.diag(w), grid, atol=5e-3)
    assert abs(w[0, 1]) < 1e-12 and abs(w[1, 0]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.0, 2.0), st.integers(0, 2**31))
def test_svt_is_stationary_and_beats_perturbations(m, n, lam, seed):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((m, n))
    w = svt_minimizer(d, lam)

    def obj(x):
        return 0.5 * np.sum((x - d) ** 2) + lam * nuclear_norm(x)

    base = obj(w)
    for _ in range(5):
        assert obj(w + 1e-3 * rng.standard_normal((m, n))) >= base - 1e-12


def test_two_layer_equilibrium():
    eq = two_layer_equilibrium([1.0, 0.6, 0.2], 0.4)
    np.testing.assert_allclose(eq.output_singular_values, [0.6, 0.2, 0.0])
    np.testing.assert_allclose(single_matrix_equilibrium([1.0, 0.5], 1.0), [0.5, 0.25])


@pytest.mark.parametrize("s,lam", [([1.0, 1.0], 0.1), ([1.0, 0.0], 0.1), ([1.0], 0.0), ([1.0, -1.0], 0.1)])
def test_two_layer_equilibrium_assumptions(s, lam):
    with pytest.raises(ValueError, match="assumption violated"):
        two_layer_equilibrium(s, lam)


def test_adamw_l2_equivalent():
    assert adamw_l2_equivalent(0.1, 1e-2) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        adamw_l2_equivalent(-1, 1e-2)


def test_fit_exponential_rate():
    t = np.arange(100)
    y = 3.0 * np.exp(-0.02 * t)
    assert fit_exponential_rate(y) == pytest.approx(0.02)
    assert fit_exponential_rate((t * 10.0, y), (100, 800)) == pytest.approx(0.002)
    assert fit_exponential_rate(y, (10, 20)) == pytest.approx(0.02)
    with pytest.raises(ValueError, match="cannot fit log"):
        fit_exponential_rate(np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError, match="at least 3"):
        fit_exponential_rate(np.array([1.0, 0.5]))


def test_two_layer_examples():
    s = [1.0, 0.8, 0.6, 0.4, 0.2]
    np.testing.assert_allclose(two_layer_equilibrium(s, 0.4).output_singular_values, [0.6, 0.4, 0.2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(two_layer_equilibrium(s, 1e-12).output_singular_values, s, atol=1e-11)
    assert np.all(two_layer_equilibrium(s, 1.0).output_singular_values == 0)


def test_single_matrix_keeps_rank():
    s = np.array([1.0, 0.3, 0.0, 0.05])
    np.testing.assert_array_equal(single_matrix_equilibrium(s, 0.0), s)
    for lam in (0.1, 1.0, 10.0):
        assert np.count_nonzero(single_matrix_equilibrium(s, lam)) == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 3.0), min_size=1, max_size=6, unique=True), st.floats(0.001, 2.0), st.floats(0.001, 2.0))
def test_two_layer_monotone_in_lambda(s, l1, l2):
    lo, hi = sorted((l1, l2))
    a = two_layer_equilibrium(s, lo).output_singular_values
    b = two_layer_equilibrium(s, hi).output_singular_values
    assert np.all(b <= a)
    if np.any(b > 0):
        assert pseudo_rank(np.sort(b)[::-1], 0.95) <= pseudo_rank(np.sort(a)[::-1], 0.95)


def test_svt_examples():
    rng = np.random.default_rng(0)
    d = rng.standard_normal((3, 4))
    np.testing.assert_allclose(svt_minimizer(d, 0.0), d, atol=1e-12)
    np.testing.assert_allclose(svt_minimizer(np.diag([1.0, 0.5]), 0.6, 0.5), np.diag([0.4, 0.0]), atol=1e-14)
    s = [1.0, 0.7, 0.4, 0.15]
    out = singular_values(svt_minimizer(np.diag(s), 0.3, 0.5), clamp=False)
    np.testing.assert_allclose(out, two_layer_equilibrium(s, 0.3).output_singular_values, atol=1e-14)


def test_adamw_l2_examples():
    assert adamw_l2_equivalent(0.1, 1e-8) == pytest.approx(1e-9, rel=1e-15)
    assert adamw_l2_equivalent(0.0, 1e-3) == 0.0


def test_fit_rate_examples():
    k = np.arange(50)
    assert abs(fit_exponential_rate(np.exp(-0.2 * k)) - 0.2) < 1e-10
    assert abs(fit_exponential_rate(np.full(10, 3.0))) < 1e-12


def test_fit_rate_on_gd_balance_trace():
    rng = np.random.default_rng(3)
    f = Factorization(rng.normal(0, 0.1, (5, 5)), rng.normal(0, 0.1, (5, 5)))
    eta, lam = 1e-3, 0.4
    tr = run_training(f, make_matrix_regression(np.diag([0.2, 0.4, 0.6, 0.8, 1.0])), lam, OptimizerConfig("gd", eta), 500, 1)
    assert fit_exponential_rate(tr.column("balance_gap_fro")) == pytest.approx(-np.log(1 - 2 * eta * lam), rel=0.05)


D4 = np.diag([1.0, 0.7, 0.4, 0.15])


@pytest.fixture(scope="module", params=[0.1, 0.3])
def converged_runs(request):
    lam = request.param
    loss = make_matrix_regression(D4)
    runs = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        f = Factorization(rng.normal(0, 0.1, (4, 4)), rng.normal(0, 0.1, (4, 4)))
        runs.append(run_training(f, loss, lam, OptimizerConfig("gd", 1e-2), 20_000, 20_000, stop_tol=1e-10))
    return lam, loss, runs


def test_gd_reaches_the_convex_minimum(converged_runs):
    lam, loss, runs = converged_runs
    target = svt_minimizer(D4, lam, 0.5)
    best = loss.value(target) + lam * nuclear_norm(target)
    for tr in runs:
        w = product(tr.final_model)
        np.testing.assert_allclose(singular_values(w, clamp=False), singular_values(target, clamp=False), atol=1e-3)
        assert loss.value(w) + lam * nuclear_norm(w) <= best + 1e-6


def test_stationarity_residual_at_convergence(converged_runs):
    lam, loss, runs = converged_runs
    for tr in runs:
        m = tr.final_model
        g = loss.gradient(product(m))
        tol = 1e-6 * (1 + np.linalg.norm(m.a))
        assert np.linalg.norm(lam * m.a + g @ m.b) <= tol
        assert np.linalg.norm(lam * m.b + g.T @ m.a) <= tol


def test_tiny_init_escapes_the_zero_solution():
    loss = make_matrix_regression(D4)
    rng = np.random.default_rng(11)
    f = Factorization(rng.normal(0, 1e-6, (4, 4)), rng.normal(0, 1e-6, (4, 4)))
    tr = run_training(f, loss, 0.3, OptimizerConfig("gd", 1e-2), 20_000, 20_000, stop_tol=1e-10)
    np.testing.assert_allclose(
        singular_values(product(tr.final_model), clamp=False), [0.7, 0.4, 0.1, 0.0], atol=1e-3
    )
