import numpy as np
import pytest
from conftest import random_g
from rose import block_rng

from pathhjb.coefficients import load_family
from pathhjb.errors import PathDomainError
from pathhjb.hamiltonian import (
    BUILTIN_TEST_FUNCTIONS,
    anchor_product,
    check_partials,
    evaluate_G,
    generator,
    heat_solution,
    horizontal_derivative,
    horizontal_difference_quotient,
    ppde_residual,
    richardson,
    terminal_square,
    terminal_state,
    time_only,
    time_state_product,
    vertical_bump_hessian,
    vertical_bump_quotient,
    vertical_gradient,
    vertical_hessian,
)
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.sampling import sample_paths


@pytest.fixture
def wave():
    grid = np.linspace(0.0, 1.0, 11)
    return SampledPath(grid, np.sin(3.0 * grid))


def bang_bang(p, q, b=(-1.0, 2.0), a=(1.0, 3.0)):
    return max(p * b[0], p * b[1]) + 0.5 * max(q * a[0], q * a[1])


@pytest.mark.parametrize("p, q", [(1.5, -0.4), (-2.0, 0.7), (0.3, 1.0), (-0.5, -1.5)])
def test_G_matches_the_bang_bang_closed_form(wave, p, q):
    c = random_g(b=(-1.0, 2.0), a=(1.0, 3.0))
    result = evaluate_G(c, TimedPath(0.4, wave), p, q)
    assert result.value == pytest.approx(bang_bang(p, q), abs=1e-12)
    assert result.gap_certificate == pytest.approx(0.0, abs=1e-12)


def test_G_picks_the_extreme_actions(wave):
    c = random_g(b=(-1.0, 2.0), a=(1.0, 3.0))
    result = evaluate_G(c, TimedPath(0.4, wave), 1.5, -0.4, grid_res=3)
    assert result.argmax_control.index == (2, 0)
    assert result.to_json()["argmax_control"]["coords"] == [1.0, 0.0]


def test_G_ties_go_to_the_first_grid_point(wave):
    c = random_g(b=(-1.0, 2.0), a=(1.0, 3.0))
    result = evaluate_G(c, TimedPath(0.4, wave), 0.0, 0.0)
    assert result.value == 0.0
    assert result.argmax_control.index == (0, 0)


def test_G_over_random_intervals(wave):
    rng = block_rng(0, 42)
    at = TimedPath(0.4, wave)
    for _ in range(1000):
        b = np.sort(rng.uniform(-3.0, 3.0, size=2))
        a = np.sort(rng.uniform(0.1, 4.0, size=2))
        p, q = rng.uniform(-3.0, 3.0, size=2)
        c = random_g(b=tuple(b), a=tuple(a))
        assert evaluate_G(c, at, p, q, grid_res=2).value == pytest.approx(bang_bang(p, q, b, a), abs=1e-12)


def test_G_attains_its_value_at_the_argmax(wave):
    c = load_family({"family": "builtin:running_max", "params": {"c1": 0.5}})
    for t, p, q in ((0.2, 1.0, 0.5), (0.6, -0.7, 2.0), (0.9, 0.3, -1.0)):
        result = evaluate_G(c, TimedPath(t, wave), p, q)
        f = np.asarray(result.argmax_control.coords)
        attained = generator(c, f, t, wave, np.array([p]), np.array([[q]]))
        assert result.value == pytest.approx(attained, abs=1e-14)


@pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
def test_G_is_positively_homogeneous(wave, scale):
    c = random_g(b=(-1.0, 2.0), a=(1.0, 3.0))
    at = TimedPath(0.4, wave)
    for p, q in ((1.5, -0.4), (-2.0, 0.7), (0.0, 1.3)):
        scaled = evaluate_G(c, at, scale * p, scale * q).value
        assert scaled == pytest.approx(scale * evaluate_G(c, at, p, q).value, rel=1e-12, abs=1e-12)


def test_G_grows_under_grid_refinement(wave):
    # 2, 3, 5, 9 points per axis are nested grids on [0, 1]
    c = load_family({"family": "builtin:running_max", "params": {"c1": 0.5}})
    rng = block_rng(1, 42)
    for _ in range(20):
        t = rng.uniform(0.0, 1.0)
        p, q = rng.uniform(-2.0, 2.0, size=2)
        values = [evaluate_G(c, TimedPath(t, wave), p, q, grid_res=res).value for res in (2, 3, 5, 9)]
        assert all(fine >= coarse for coarse, fine in zip(values, values[1:]))


def test_G_rejects_bad_shapes(wave):
    c = random_g()
    at = TimedPath(0.4, wave)
    with pytest.raises(PathDomainError):
        evaluate_G(c, at, [1.0, 2.0], 1.0)
    with pytest.raises(PathDomainError):
        evaluate_G(c, at, 1.0, 1.0, grid_res=1)


def test_vertical_derivatives_only_see_active_anchors(wave):
    phi = anchor_product(0.3, 0.7)
    late = TimedPath(0.5, wave)
    assert vertical_gradient(phi, late)[0] == pytest.approx(wave.at(0.3)[0])
    assert vertical_hessian(phi, late)[0, 0] == pytest.approx(0.0)
    early = TimedPath(0.2, wave)
    assert vertical_gradient(phi, early)[0] == pytest.approx(2.0 * wave.at(0.2)[0])
    assert vertical_hessian(phi, early)[0, 0] == pytest.approx(2.0)


@pytest.mark.parametrize("t", [0.1, 0.3, 0.5, 0.9])
def test_vertical_derivatives_match_bump_quotients(wave, t):
    at = TimedPath(t, wave)
    for phi in (anchor_product(0.3, 0.7), terminal_square(1.0), heat_solution(2.0, 1.0)):
        assert vertical_gradient(phi, at)[0] == pytest.approx(
            vertical_bump_quotient(phi, at, 0), rel=1e-6, abs=1e-8
        )
        np.testing.assert_allclose(
            vertical_hessian(phi, at), vertical_bump_hessian(phi, at), rtol=1e-5, atol=1e-6
        )


def test_builtin_derivatives_on_random_paths():
    rng = block_rng(2, 42)
    paths = sample_paths(rng, 50, 1.0, 2.0)
    functions = (
        time_only(1.0),
        terminal_state(1.0),
        terminal_square(1.0),
        heat_solution(1.5, 1.0),
        anchor_product(0.3, 0.7),
        time_state_product(1.0),
    )
    hs = (1e-3, 1e-4, 1e-5)
    for k in range(1000):
        phi = functions[k % len(functions)]
        at = TimedPath(rng.uniform(0.0, 1.0), paths[k % len(paths)])
        quotients = horizontal_difference_quotient(phi, at, hs)
        assert richardson(hs, quotients) == pytest.approx(horizontal_derivative(phi, at), rel=1e-6, abs=1e-8)
        assert vertical_gradient(phi, at)[0] == pytest.approx(
            vertical_bump_quotient(phi, at, 0), rel=1e-6, abs=1e-8
        )
        np.testing.assert_allclose(
            vertical_hessian(phi, at), vertical_bump_hessian(phi, at), rtol=1e-5, atol=1e-6
        )


def test_horizontal_derivative_matches_difference_quotients(wave):
    phi = time_state_product(1.0)
    at = TimedPath(0.5, wave)
    hs = (1e-3, 1e-4, 1e-5)
    quotients = horizontal_difference_quotient(phi, at, hs)
    assert horizontal_derivative(phi, at) == pytest.approx(wave.at(0.5)[0])
    assert richardson(hs, quotients) == pytest.approx(horizontal_derivative(phi, at), rel=1e-6)


def test_horizontal_quotient_is_backward_at_the_horizon(wave):
    phi = heat_solution(1.0, 1.0)
    quotients = horizontal_difference_quotient(phi, TimedPath(1.0, wave), (1e-3,))
    assert quotients[0] == pytest.approx(-1.0)


def test_builtin_partials_agree_with_central_differences(wave):
    probes = [TimedPath(t, wave) for t in (0.1, 0.45, 0.8)]
    args = {"anchor_product": (0.3, 0.7), "heat_solution": (1.5, 1.0)}
    for name, make in BUILTIN_TEST_FUNCTIONS.items():
        phi = make(*args.get(name, (1.0,)))
        assert check_partials(phi, probes) < 1e-6, name


def test_heat_solution_has_zero_residual(wave):
    c = random_g(a=(2.0, 2.0))
    phi = heat_solution(2.0, 1.0)
    for t in (0.0, 0.3, 0.6, 0.9):
        assert ppde_residual(c, phi, TimedPath(t, wave)) == pytest.approx(0.0, abs=1e-12)


def test_residual_sign_of_a_subsolution(wave):
    c = random_g(a=(1.0, 3.0))
    assert ppde_residual(c, terminal_square(1.0), TimedPath(0.5, wave)) == pytest.approx(3.0)
    with pytest.raises(PathDomainError):
        ppde_residual(c, terminal_square(1.0), TimedPath(1.0, wave))
