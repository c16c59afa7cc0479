import numpy as np
import pytest

from oracles import STRIP_BREAKPOINT, strip_breakpoint
from pbernoulli.acceptance import strip_front
from pbernoulli.energy import Datum, ProblemSpec
from pbernoulli.freeboundary import extract_free_boundary
from pbernoulli.grid import ScalarField2D
from pbernoulli.minimize import (MinimizeConfig, minimize, p_harmonic_fill, p_harmonic_residual,
                                 solve_1d_oracle)
from pbernoulli.scenarios import scenario_minimizer, scenario_spec


def test_frozen_breakpoints_match_fresh_root_solve():
    for (p, lam), s in STRIP_BREAKPOINT.items():
        assert strip_breakpoint(p, 1.0, 1.0, lam) == pytest.approx(s, abs=1e-12)


@pytest.mark.parametrize("p,lam", [(2.0, 3.0), (3.0, 1.0), (2.2, 3.0), (2.5, 3.0)])
def test_1d_oracle_balance(p, lam):
    sol = solve_1d_oracle(p, 1.0, 1.0, lam)
    assert sol.s == pytest.approx(STRIP_BREAKPOINT[(p, lam)], abs=1e-6)
    assert abs(sol.balance(p) / lam - 1) <= 1e-4


def test_1d_oracle_examples():
    sol = solve_1d_oracle(2.0, 1.0, 1.0, 3.0)
    assert abs(sol.s - 0.588) < 1e-3 and abs(sol.alpha ** 2 - sol.beta ** 2 - 3) <= 1e-3
    assert abs(solve_1d_oracle(2.0, 1.0, 1.0, 1e-9).s - 0.5) < 1e-4
    s3 = solve_1d_oracle(3.0, 1.0, 1.0, 1.0)
    assert s3.s > 0.5 and abs(2 * (s3.alpha ** 3 - s3.beta ** 3) - 1) <= 1e-3
    with pytest.raises(ValueError):
        solve_1d_oracle(2.0, -1.0, 1.0, 1.0)


@pytest.mark.parametrize("p", [2.0, 2.2, 2.5])
def test_strip_front_within_two_cells(p):
    res = scenario_minimizer("strip", p, 256)
    assert res.converged
    assert abs(strip_front(res.u) - STRIP_BREAKPOINT[(p, 3.0)]) <= 2 * res.u.h


def test_strip_is_invariant_along_x2():
    u = scenario_minimizer("strip", 2.0, 256).u.values
    assert np.max(np.abs(u - u[:, [u.shape[1] // 2]])) <= 1e-3


def test_boundary_datum_is_exact():
    spec = scenario_spec("two_plane", 2.0)
    res = scenario_minimizer("two_plane", 2.0, 128)
    g = spec.grid(128).values
    U = res.u.values
    for sl in (np.s_[0, :], np.s_[-1, :], np.s_[:, 0], np.s_[:, -1]):
        assert np.array_equal(U[sl], g[sl])


def test_energy_history_monotone_per_stage():
    res = scenario_minimizer("wedge", 2.0, 128)
    for hist in res.history:
        assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_affine_datum_gives_affine_minimizer():
    # g = x1 + 2 stays positive, so the phase term is inert and u is the harmonic fill
    spec = ProblemSpec(2.0, 1.0 + 1e-6, 1.0, datum=Datum("affine", {"c0": 2.0, "c1": 1.0}))
    res = minimize(spec, MinimizeConfig(n=256))
    X, _ = res.u.nodes()
    exact = X + 2.0
    assert np.max(np.abs(res.u.values - exact)) <= 0.02 * np.max(np.abs(exact))


def test_two_plane_front_moves_into_positive_phase():
    res = scenario_minimizer("two_plane", 2.0, 128)
    xs = extract_free_boundary(res.u).vertices[:, 0]
    assert np.median(xs) > 2 * res.u.h
    row = res.u.values[:, res.u.ny // 2]
    i0 = np.flatnonzero(row > 0)[0]
    alpha = (row[-1] - row[i0]) / (res.u.x[-1] - res.u.x[i0])
    beta = -(row[i0 - 1] - row[0]) / (res.u.x[i0 - 1] - res.u.x[0])
    assert alpha > beta


def test_raising_datum_never_lowers_minimizer():
    cfg = MinimizeConfig(n=64)
    low = ProblemSpec.from_Lambda(2.0, 3.0, datum=Datum("expression", {"expr": "x + 0.1*y"}))
    high = ProblemSpec.from_Lambda(2.0, 3.0, datum=Datum("expression", {"expr": "x + 0.1*y + 0.2"}))
    u_low = minimize(low, cfg).u.values
    u_high = minimize(high, cfg).u.values
    assert np.min(u_high - u_low) >= -1e-6


def test_fill_of_linear_datum_is_linear():
    spec = ProblemSpec(2.5, 2.0, 1.0, datum=Datum("affine", {"c0": 0.3, "c1": 1.0, "c2": -0.5}))
    u = p_harmonic_fill(spec, 64)
    X, Y = u.nodes()
    assert np.max(np.abs(u.values - (X - 0.5 * Y + 0.3))) <= 1e-6


def test_residual_examples():
    u = ScalarField2D.on_square(lambda x, y: x, n=64)
    assert p_harmonic_residual(u, np.ones(u.shape, bool), 2.5) <= 1e-10
    tp = ScalarField2D.on_square(lambda x, y: 2 * np.maximum(x, 0) - np.maximum(-x, 0), n=64)
    X, _ = tp.nodes()
    assert p_harmonic_residual(tp, X > 2 * tp.h, 3.0) <= 1e-10
    with pytest.raises(ValueError):
        p_harmonic_residual(u, np.zeros(u.shape, bool), 2.0)


def test_strip_minimizer_residual_away_from_front():
    res = scenario_minimizer("strip", 2.0, 256)
    u = res.u
    X, Y = u.nodes()
    s = strip_front(u)
    mask = (np.abs(X - s) > 3 * u.h) & (Y > u.y[2]) & (Y < u.y[-3])
    assert p_harmonic_residual(u, mask, 2.0) <= 10 * MinimizeConfig().grad_tol


def test_config_validation():
    with pytest.raises(ValueError):
        MinimizeConfig(grad_tol=0.0)
    with pytest.raises(ValueError):
        MinimizeConfig(eps_start=1e-8, eps_end=1e-6)
    with pytest.raises(ValueError):
        MinimizeConfig(momentum=1.0)
    sched = MinimizeConfig().schedule(0.01)
    assert all(a[0] > b[0] and a[1] > b[1] for a, b in zip(sched, sched[1:]))
    assert sched[-1][1] == pytest.approx(0.01)
