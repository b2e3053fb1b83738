import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import quad, quad_grad, sampled, shifted_quadratic, shifted_quadratic_conj, shifted_quadratic_grad
from convexpolar.errors import MissingGradients, NoConvergence, OutOfGrid, OutOfRange
from convexpolar.legendre import (
    SampledFunction,
    auto_eta_grid,
    biconjugate,
    conjugate_bruteforce,
    conjugate_fast_1d,
    conjugate_smooth,
    epigraph_body,
    legendre_envelope,
    lower_hull,
    verify_legendre_polarity,
)


@st.composite
def convex_samples(draw, min_size=3, max_size=60):
    """Convex data on a random increasing grid: cumulative sums of sorted slopes."""
    m = draw(st.integers(min_size, max_size))
    steps = draw(st.lists(st.floats(0.01, 2.0), min_size=m - 1, max_size=m - 1))
    slopes = sorted(draw(st.lists(st.floats(-5, 5), min_size=m - 1, max_size=m - 1)))
    x0 = draw(st.floats(-5, 5))
    y0 = draw(st.floats(-5, 5))
    x = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    y = y0 + np.concatenate([[0.0], np.cumsum(np.array(slopes) * steps)])
    return SampledFunction(x, y)


@st.composite
def any_samples(draw):
    m = draw(st.integers(3, 40))
    steps = draw(st.lists(st.floats(0.01, 2.0), min_size=m - 1, max_size=m - 1))
    y = draw(st.lists(st.floats(-10, 10), min_size=m, max_size=m))
    return SampledFunction(np.concatenate([[0.0], np.cumsum(steps)]), y)


# SampledFunction

def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        SampledFunction([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        SampledFunction([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        SampledFunction([[0.0, 0.0], [0.0, 0.0]], [1.0, 2.0])
    with pytest.raises(ValueError):
        SampledFunction([0.0, 1.0], [1.0, 2.0], gradients=[1.0, 2.0, 3.0])


def test_infinite_nodes_are_excluded_from_suprema():
    f = SampledFunction([-1.0, 0.0, 1.0], [np.inf, 0.0, 0.5])
    assert list(f.infinite) == [True, False, False]
    star = conjugate_bruteforce(f, [-5.0])
    assert star.values[0] == pytest.approx(0.0)
    assert star.argopt[0] == 1


def test_gradient_fallback_finite_differences():
    f = SampledFunction(np.linspace(-1, 1, 11), np.linspace(-1, 1, 11) ** 2)
    np.testing.assert_allclose(f.gradient_estimate()[1:-1, 0], 2 * f.grid[1:-1, 0], atol=1e-12)
    with pytest.raises(MissingGradients):
        SampledFunction([0.0, 1.0], [0.0, 1.0]).gradient_estimate()


def test_interpolation_and_out_of_grid():
    f = SampledFunction([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])
    np.testing.assert_allclose(f.interpolate([[0.5], [1.5]]), [0.5, 2.5])
    with pytest.raises(OutOfGrid):
        f.interpolate([[2.5]])


def test_auto_eta_grid_spans_slopes_with_same_cardinality():
    f = sampled(quad, -2.0, 2.0, 51)
    points, (eta,) = auto_eta_grid(f)
    np.testing.assert_array_equal(points[:, 0], eta)
    assert eta.size == 51
    slopes = np.diff(f.values) / np.diff(f.grid[:, 0])
    assert eta.min() == pytest.approx(slopes.min()) and eta.max() == pytest.approx(slopes.max())


# brute force conjugation

def test_bruteforce_quadratic_is_self_conjugate():
    f = sampled(quad, -3.0, 3.0, 6001)
    star = conjugate_bruteforce(f, [1.0])
    assert star.values[0] == pytest.approx(0.5, abs=1e-6)


def test_bruteforce_shifted_quadratic_at_one():
    # frozen from an independent 10^6-point sup over [-10, 10]: -3.0
    f = sampled(shifted_quadratic, -10.0, 10.0, 200_001)
    star = conjugate_bruteforce(f, [1.0])
    assert star.values[0] == pytest.approx(-3.0, abs=1e-8)
    assert f.grid[star.argopt[0], 0] == pytest.approx(0.0, abs=1e-12)


def test_bruteforce_affine_ties_go_to_first_node():
    c = 1.5
    f = sampled(lambda t: c * t, -1.0, 1.0, 11)
    star = conjugate_bruteforce(f, [c])
    assert star.values[0] == pytest.approx(0.0, abs=1e-15)
    assert star.argopt[0] == 0


def test_bruteforce_two_dimensional_quadratic():
    ax = np.linspace(-2, 2, 41)
    f = SampledFunction.from_callable(quad, [ax, ax])
    eta = np.array([[0.5, -1.0], [0.0, 0.0], [1.0, 1.0]])
    star = conjugate_bruteforce(f, eta)
    np.testing.assert_allclose(star.values, 0.5 * np.sum(eta**2, axis=1), atol=1e-12)


# fast conjugation

@pytest.mark.parametrize(
    "F, lo, hi, eta",
    [(quad, -3.0, 3.0, [-1.0, 0.0, 1.0]), (shifted_quadratic, -3.0, 3.0, [-2.0, 1.0, 3.0]), (lambda t: 1.5 * t, -1.0, 1.0, [1.5])],
)
def test_fast_reproduces_bruteforce_examples(F, lo, hi, eta):
    f = sampled(F, lo, hi, 1001)
    np.testing.assert_allclose(conjugate_fast_1d(f, eta).values, conjugate_bruteforce(f, eta).values, atol=1e-12, rtol=0)


def test_affine_hull_collapses_to_endpoints():
    x = np.linspace(0, 1, 7)
    np.testing.assert_array_equal(lower_hull(x, 3 * x - 1), [0, 6])


@given(convex_samples(), st.lists(st.floats(-8, 8), min_size=1, max_size=30))
def test_fast_equals_bruteforce(f, eta):
    eta = np.sort(eta)
    fast = conjugate_fast_1d(f, eta).values
    brute = conjugate_bruteforce(f, eta).values
    assert np.max(np.abs(fast - brute)) <= 1e-12 * max(1.0, np.max(np.abs(brute)))


@given(any_samples())
def test_fast_equals_bruteforce_on_nonconvex_data(f):
    eta = np.linspace(-30, 30, 61)
    fast = conjugate_fast_1d(f, eta).values
    brute = conjugate_bruteforce(f, eta).values
    assert np.max(np.abs(fast - brute)) <= 1e-12 * max(1.0, np.max(np.abs(brute)))


# smooth conjugation

def test_smooth_shifted_quadratic():
    theta, value = conjugate_smooth(shifted_quadratic, shifted_quadratic_grad, 1.0)
    assert theta == pytest.approx(0.0, abs=1e-12)
    assert value == pytest.approx(-3.0, abs=1e-12)


@pytest.mark.parametrize("eta", [-2.0, 0.3, 4.5])
def test_smooth_quadratic_scalar(eta):
    theta, value = conjugate_smooth(lambda t: 0.5 * t * t, lambda t: t, eta)
    assert theta == pytest.approx(eta, abs=1e-10)
    assert value == pytest.approx(0.5 * eta * eta, abs=1e-10)


def test_smooth_quadratic_vector():
    eta = np.array([0.4, -1.2, 2.0])
    theta, value = conjugate_smooth(quad, quad_grad, eta, theta0=np.zeros(3))
    np.testing.assert_allclose(theta, eta, atol=1e-10)
    assert value == pytest.approx(0.5 * eta @ eta, abs=1e-10)


def test_smooth_shifted_center_at_zero_slope():
    c = np.array([1.0, -2.0])
    theta, value = conjugate_smooth(lambda t: 0.5 * np.sum((t - c) ** 2), lambda t: t - c, np.zeros(2))
    np.testing.assert_allclose(theta, c, atol=1e-10)
    assert value == pytest.approx(0.0, abs=1e-10)


def test_smooth_out_of_range():
    # exp' = exp never reaches a negative slope
    with pytest.raises(OutOfRange):
        conjugate_smooth(np.exp, np.exp, -1.0)


def test_smooth_no_convergence():
    # |t|^1.5 has a degenerate Hessian at 0; one Newton step is not enough
    F = lambda t: np.sum(np.abs(t) ** 1.5)  # noqa: E731
    g = lambda t: 1.5 * np.sign(t) * np.abs(t) ** 0.5  # noqa: E731
    with pytest.raises(NoConvergence):
        conjugate_smooth(F, g, np.array([1.0, 1.0]), theta0=np.array([50.0, 50.0]), max_iter=1)


@pytest.mark.parametrize("eta", [-2, -1, 0, 1, 2, 3])
def test_smooth_matches_corrected_closed_form(eta):
    _, value = conjugate_smooth(shifted_quadratic, shifted_quadratic_grad, float(eta))
    assert value == pytest.approx(shifted_quadratic_conj(eta), abs=1e-12)


# biconjugation

def test_biconjugate_convex_quadratic():
    f = sampled(quad, -2.0, 2.0, 401)
    back = biconjugate(f)
    assert np.max(np.abs(back.values[1:-1] - f.values[1:-1])) <= 1e-9


def test_biconjugate_double_well_is_convex_hull():
    f = sampled(lambda t: (t * t - 1) ** 2, -2.0, 2.0, 401)
    back = biconjugate(f)
    x = f.grid[:, 0]
    inside = np.abs(x) <= 1.0
    assert np.max(np.abs(back.values[inside])) <= 1e-12
    np.testing.assert_allclose(back.values[~inside], f.values[~inside], atol=1e-12)


def test_auto_grid_of_affine_data_is_one_node():
    f = SampledFunction([0.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    star = conjugate_bruteforce(f)
    np.testing.assert_array_equal(star.grid[:, 0], [0.0])
    assert star.values[0] == -1.0
    np.testing.assert_array_equal(biconjugate(f).values, f.values)


def test_biconjugate_affine_exact():
    f = sampled(lambda t: 2.0 * t - 1.0, -1.0, 1.0, 21)
    np.testing.assert_allclose(biconjugate(f).values, f.values, atol=1e-14)


@given(any_samples())
def test_biconjugate_is_below_and_idempotent(f):
    once = biconjugate(f)
    assert np.all(once.values <= f.values + 1e-9)
    twice = biconjugate(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-9


# invariants

@given(convex_samples())
def test_fenchel_young_inequality(f):
    star = conjugate_bruteforce(f)
    gap = f.values[:, None] + star.values[None, :] - f.grid @ star.grid.T
    assert gap.min() >= -1e-9


@given(convex_samples(), st.lists(st.floats(0, 3), min_size=60, max_size=60))
def test_order_reversal(f, bumps):
    g = SampledFunction(f.grid, f.values + np.asarray(bumps[: len(f)]))
    eta = np.linspace(-6, 6, 50)
    assert np.all(conjugate_bruteforce(g, eta).values <= conjugate_bruteforce(f, eta).values + 1e-9)


@given(any_samples())
def test_conjugate_is_convex_along_grid(f):
    eta = np.linspace(-10, 10, 101)
    v = conjugate_bruteforce(f, eta).values
    assert np.min(np.diff(v, 2)) >= -1e-9 * max(1.0, np.max(np.abs(v)))


# epigraph bridge

def test_epigraph_sample_and_tangent_of_quadratic():
    f = SampledFunction([0.0, 1.0, 2.0], [0.0, 0.5, 2.0], gradients=[0.0, 1.0, 2.0])
    body = epigraph_body(f)
    np.testing.assert_array_equal(body.samples[1], [1.0, 0.5, 1.0])
    np.testing.assert_array_equal(body.tangents[1, :, 0], [1.0, 1.0, 0.0])
    np.testing.assert_array_equal(body.tangents[0, :, 0], [1.0, 0.0, 0.0])


def test_epigraph_tangents_of_two_dimensional_paraboloid():
    f = SampledFunction.from_callable(quad, [np.array([0.0, 1.0]), np.array([0.0, 2.0])], grad=quad_grad)
    body = epigraph_body(f)
    i = int(np.flatnonzero(np.all(f.grid == [1.0, 2.0], axis=1))[0])
    np.testing.assert_array_equal(body.tangents[i].T, [[1, 0, 1, 0], [0, 1, 2, 0]])


def test_epigraph_needs_gradients():
    with pytest.raises(MissingGradients):
        epigraph_body(SampledFunction([0.0, 1.0], [0.0, 1.0]))


def test_legendre_polarity_quadratic(q_samples):
    assert verify_legendre_polarity(q_samples, lambda t: 0.5 * t * t, lambda t: t) <= 1e-9
    assert verify_legendre_polarity(q_samples) <= 1e-9


def test_legendre_polarity_shifted_quadratic(shifted_samples):
    assert verify_legendre_polarity(shifted_samples, shifted_quadratic, shifted_quadratic_grad) <= 1e-9
    f = SampledFunction([0.0, 1.0, 2.0], [3.0, 5.0, 9.0], gradients=[1.0, 3.0, 5.0])
    pts, env = legendre_envelope(f)
    np.testing.assert_allclose(pts[1], [3.0, -2.0], atol=1e-14)


def test_legendre_polarity_affine_is_degenerate():
    f = sampled(lambda t: 0.5 * t + 2.0, -1.0, 1.0, 15, grad=lambda t: 0.5)
    pts, env = legendre_envelope(f)
    assert np.all(env.degenerate)
    np.testing.assert_allclose(pts, np.tile([0.5, -2.0], (15, 1)), atol=1e-12)
