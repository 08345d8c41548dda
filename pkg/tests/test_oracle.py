import numpy as np
import pytest
import sympy as sp

from radcomp.constants import ComparisonConstants
from radcomp.errors import ComparisonFailure, InvalidInputError, NotAdmissibleError
from radcomp.model import DriftB, NonlinearityF, ProblemParams, RadialGrid, Trace
from radcomp.oracle import (admissible_pair_from_profile, find_alpha_star, manufacture,
                            profile_values, radial_divergence, verify_comparison)
from radcomp.picard import solve_comparison_function
from radcomp.quadrature import lower_bound_integral

from conftest import uniform


def _symbolic_divergence(expr, r, p, n):
    du = sp.diff(expr, r)
    return sp.simplify(r ** (1 - n) * sp.diff(r ** (n - 1) * du ** (p - 1), r))


def test_divergence_of_constant_is_zero(params3):
    grid = uniform(params3, 20)
    assert np.all(radial_divergence(Trace.of(grid, np.full(20, 3.0), "u"), params3).values == 0.0)


def test_divergence_laplacian_identity(params3):
    grid = uniform(params3, 50)
    G = radial_divergence(Trace.of(grid, grid.nodes ** 2 / 2, "u"), params3).values
    np.testing.assert_allclose(G, 3.0, rtol=1e-12)


def test_divergence_p3_matches_symbolic():
    params = ProblemParams(p=3, a=1.5, k=1, sigma=4, n=2, R0=0.5, Rmax=2.0)
    r = sp.symbols("r", positive=True)
    expected = sp.lambdify(r, _symbolic_divergence(r ** 2 / 2, r, 3, 2))
    inner, ends = [], []
    for n in (101, 201):
        grid = uniform(params, n)
        G = radial_divergence(Trace.of(grid, grid.nodes ** 2 / 2, "u"), params).values
        err = np.abs(G - expected(grid.nodes))
        inner.append(err[1:-1].max())
        ends.append(max(err[0], err[-1]))
    np.testing.assert_allclose(expected(np.array([1.0, 2.0])), [3.0, 6.0])
    # interior cells are second order; the half cells at the ends are first order
    assert inner[1] < 1e-4 and inner[0] / inner[1] > 3.5
    assert ends[1] < 2e-2 and ends[0] / ends[1] > 1.8


def test_divergence_needs_four_nodes(params3):
    grid = RadialGrid.build([0.0, 0.5, 1.0])
    with pytest.raises(InvalidInputError):
        radial_divergence(Trace.of(grid, [1.0, 1.0, 1.0], "u"), params3)


def test_flux_reintegration_recovers_slope(params3):
    for n in (201, 401):
        grid = uniform(params3, n)
        r = grid.nodes
        u = np.exp(r ** 2)
        G = radial_divergence(Trace.of(grid, u, "u"), params3).values
        # r^{n-1} u' = int_0^r s^{n-1} G(s) ds for p = 2
        flux = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(r) * (r[:-1] ** 2 * G[:-1]
                                                                    + r[1:] ** 2 * G[1:]))))
        slope = flux[1:] / r[1:] ** 2
        err = np.max(np.abs(slope[r[1:] > 0.1] - 2 * r[1:][r[1:] > 0.1] * u[1:][r[1:] > 0.1]))
        if n == 201:
            first = err
    assert err < 1e-3 and first / err > 3.0


def test_quadratic_profile_pair(params3):
    sc = manufacture("quadratic", params3, 101)
    np.testing.assert_allclose(sc.f(sc.grid.nodes, 5.0), 6.0, rtol=1e-12)
    np.testing.assert_array_equal(sc.M.values, 1 + sc.grid.nodes ** 2)
    assert np.all(sc.b(sc.grid.nodes) == 0.0)


def test_constant_profile_pair(params3):
    grid = uniform(params3, 30)
    f, b, M = admissible_pair_from_profile(Trace.of(grid, np.ones(30), "u"), params3)
    assert np.all(f(grid.nodes, 1.0) == 0.0) and np.all(M.values == 1.0)


def test_narrow_shell_recovers_divergence():
    grid_params = ProblemParams(p=2, a=1, k=1, sigma=1.0001, n=3, R0=0.5, Rmax=1.5)
    grid = uniform(grid_params, 201)
    u = Trace.of(grid, np.exp(grid.nodes ** 2), "u")
    f, _, _ = admissible_pair_from_profile(u, grid_params)
    G = radial_divergence(u, grid_params).values
    np.testing.assert_allclose(f(grid.nodes, 1.0), G, rtol=1e-12)


def test_concave_profile_is_rejected(params3):
    grid = uniform(params3, 50)
    with pytest.raises(NotAdmissibleError, match="more convex"):
        u = Trace.of(grid, 1 + grid.nodes - 0.45 * grid.nodes ** 2, "u")
        admissible_pair_from_profile(u, params3)


def test_profiles():
    r = np.array([0.0, 0.5, 1.0])
    np.testing.assert_allclose(profile_values("power:3", r), 1 + r ** 3)
    np.testing.assert_allclose(profile_values("exp", r), np.exp(r ** 2))
    for bad in ("power:1", "power:x", "cubic"):
        with pytest.raises(InvalidInputError):
            profile_values(bad, r)


def test_zero_source_comparison(params3, unit_consts, zero_f):
    grid = uniform(params3, 41)
    M = Trace.of(grid, 1 + grid.nodes, "M")
    rep = verify_comparison(M, zero_f, DriftB.zero(), params3, unit_consts)
    assert rep.passed
    np.testing.assert_allclose(rep.margin_m, M.values - 1.0)


def test_quadratic_passes_with_formula_alpha(params3):
    sc = manufacture("quadratic", params3, 513)
    consts = ComparisonConstants.from_params(params3)
    rep = verify_comparison(sc.M, sc.f, sc.b, params3, consts)
    assert rep.passed
    assert rep.worst_m[0] >= 0 and rep.worst_bound[0] >= -1e-9


def test_scaling_profile_increases_margins(params3):
    consts = ComparisonConstants.from_params(params3, alpha=0.5)
    base = manufacture("quadratic", params3, 257)
    scaled = Trace.of(base.grid, 2.0 * base.M.values, "M")
    r1 = verify_comparison(base.M, base.f, base.b, params3, consts)
    r2 = verify_comparison(scaled, base.f, base.b, params3, consts)
    # t-independent f: m only shifts by the change in M0
    np.testing.assert_allclose(r2.result.m.values - r1.result.m.values, 1.0, rtol=1e-12)
    assert np.all(r2.margin_m >= r1.margin_m)


def test_bound_from_M_dominates_bound_from_m(params3):
    consts = ComparisonConstants(alpha=0.3, beta=0.5)
    grid = uniform(params3, 257)
    f = NonlinearityF.power(1.0, 1.0)
    M = Trace.of(grid, np.exp(grid.nodes ** 2), "M")
    rep = verify_comparison(M, f, DriftB.zero(), params3, consts)
    assert rep.passed
    from_m = lower_bound_integral(rep.result.m, f, params3, consts).values
    assert np.all(rep.bound.values >= from_m)


def test_blowup_with_finite_M_is_a_comparison_failure():
    params = ProblemParams(p=2, a=1, k=1, sigma=4, n=3, Rmax=2.5, blowup_cap=1e6)
    grid = uniform(params, 257)
    M = Trace.of(grid, 3 + grid.nodes, "M")
    with pytest.raises(ComparisonFailure, match="too large"):
        verify_comparison(M, NonlinearityF.power(1.0, 2.0), DriftB.zero(), params,
                          ComparisonConstants(alpha=4.0, beta=0.5))


def test_mismatched_drift_is_rejected(params3, unit_consts, zero_f):
    grid = uniform(params3, 20)
    with pytest.raises(InvalidInputError, match="drift"):
        verify_comparison(Trace.of(grid, np.ones(20), "M"), zero_f, DriftB.constant(1.0),
                          params3, unit_consts)


@pytest.mark.parametrize("profile", ["quadratic", "power:3", "exp"])
@pytest.mark.parametrize("drift", [None, DriftB.constant(1.0)])
def test_alpha_star_exists(profile, drift, params3):
    sc = manufacture(profile, params3, 257, drift)
    consts = ComparisonConstants.from_params(params3)
    search = find_alpha_star(sc.M, sc.f, sc.b, params3, consts)
    assert search.alpha_star > 0 and search.bisection_steps <= 40
    assert search.report.passed
    assert not verify_comparison(sc.M, sc.f, sc.b, params3,
                                 consts.replace(alpha=search.alpha_star * 1.01)).passed


def test_drift_scenarios_keep_the_same_source(params3):
    plain = manufacture("exp", params3, 101)
    drifted = manufacture("exp", params3, 101, DriftB.constant(1.0))
    assert drifted.name == "exp+drift"
    np.testing.assert_array_equal(plain.f(plain.grid.nodes, 1.0), drifted.f(drifted.grid.nodes, 1.0))
    assert np.all(drifted.grid.b == 1.0)


def test_m_depends_only_on_f_and_M0(params3, unit_consts):
    grid = uniform(params3, 65)
    f = NonlinearityF.constant(2.0)
    a = solve_comparison_function(f, params3, unit_consts, 1.0, grid).m.values
    b = solve_comparison_function(f, params3, unit_consts, 4.0, grid).m.values
    np.testing.assert_allclose(b - a, 3.0, rtol=1e-13)
