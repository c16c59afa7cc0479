import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbernoulli.energy import (Datum, ProblemSpec, SmoothingConfig, energy_exact, energy_one_phase,
                               energy_smoothed, energy_smoothed_gradient, heaviside_prime)
from pbernoulli.grid import ScalarField2D

UNIT = dict(center=(0.5, 0.5), half_side=0.5)


def unit_field(f, n=128):
    return ScalarField2D.on_square(f, (0.5, 0.5), 0.5, n)


def test_constant_negative_field():
    spec = ProblemSpec(2.0, 2.0, 1.0, **UNIT)
    u = unit_field(lambda x, y: -1 + 0 * x)
    assert energy_exact(u, spec) == pytest.approx(1.0)
    assert energy_one_phase(u, spec) == pytest.approx(0.0)


def test_constant_positive_field():
    spec = ProblemSpec(2.0, 2.0, 1.0, **UNIT)
    assert energy_exact(unit_field(lambda x, y: 1 + 0 * x), spec) == pytest.approx(4.0)


def test_linear_field_energy():
    spec = ProblemSpec(2.0, 1.0 + 1e-9, 1.0, **UNIT)
    u = unit_field(lambda x, y: x - 0.5, n=256)
    assert abs(energy_exact(u, spec) - 2.0) <= 0.02
    spec3 = ProblemSpec.from_Lambda(2.0, 3.0, **UNIT)
    assert abs(energy_one_phase(unit_field(lambda x, y: x - 0.5, n=256), spec3) - 2.5) <= 0.025


def test_one_phase_decomposition():
    rng = np.random.default_rng(1)
    spec = ProblemSpec(2.5, 1.7, 1.3, **UNIT)
    for _ in range(5):
        u = unit_field(lambda x, y: 0 * x, n=32).with_values(rng.normal(size=(33, 33)))
        assert energy_exact(u, spec) - energy_one_phase(u, spec) == pytest.approx(
            spec.lambda_minus ** spec.p * spec.area, abs=1e-10)
        assert energy_exact(u, spec) >= spec.lambda_minus ** spec.p * spec.area


def test_smoothed_limit():
    spec = ProblemSpec.from_Lambda(2.0, 3.0, **UNIT)
    u = unit_field(lambda x, y: x - 0.5 + 1e-3, n=128)   # no node exactly on zero
    cfg = SmoothingConfig(eps_reg=0.0, delta_h=1e-4)
    assert abs(energy_smoothed(u, spec, cfg) - energy_one_phase(u, spec)) <= 1e-3


def test_heaviside_gradient_sign_at_zero():
    spec = ProblemSpec.from_Lambda(2.0, 3.0, **UNIT)
    u = unit_field(lambda x, y: 0 * x, n=16)
    G = energy_smoothed_gradient(u, spec, SmoothingConfig(0.0, 0.1)).values
    expected = spec.Lambda * heaviside_prime(0.0, 0.1) * u.h ** 2
    assert np.allclose(G[1:-1, 1:-1], expected)
    assert np.all(G[1:-1, 1:-1] > 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(1.2, 3.9), eps=st.sampled_from([0.0, 1e-3, 0.1]),
       delta=st.floats(0.05, 1.0))
def test_gradient_matches_finite_differences(seed, p, eps, delta):
    rng = np.random.default_rng(seed)
    spec = ProblemSpec.from_Lambda(p, 2.0, **UNIT)
    u = unit_field(lambda x, y: 0 * x, n=8).with_values(rng.normal(size=(9, 9)))
    cfg = SmoothingConfig(eps, delta)
    G = energy_smoothed_gradient(u, spec, cfg).values
    D = rng.normal(size=G.shape)
    t = 1e-6
    fd = (energy_smoothed(u.with_values(u.values + t * D), spec, cfg)
          - energy_smoothed(u.with_values(u.values - t * D), spec, cfg)) / (2 * t)
    an = float(np.sum(G * D))
    assert abs(fd - an) <= 1e-5 * max(abs(an), 1e-8)


def test_translation_invariance():
    cfg = SmoothingConfig(1e-3, 0.05)
    f = lambda x, y: np.sin(2 * x) - y ** 2 + 0.1
    a = ProblemSpec.from_Lambda(2.3, 1.5, center=(0.0, 0.0), half_side=0.5)
    b = ProblemSpec.from_Lambda(2.3, 1.5, center=(0.75, -0.25), half_side=0.5)
    ua = ScalarField2D.on_square(f, a.center, 0.5, 32)
    ub = ScalarField2D.on_square(lambda x, y: f(x - 0.75, y + 0.25), b.center, 0.5, 32)
    assert energy_smoothed(ua, a, cfg) == pytest.approx(energy_smoothed(ub, b, cfg), rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(2.0, 1.0, 1.0)          # Lambda = 0
    with pytest.raises(ValueError):
        ProblemSpec(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        SmoothingConfig(-1.0, 0.1)
    with pytest.raises(ValueError):
        SmoothingConfig(0.0, 0.0)
    with pytest.raises(ValueError):
        Datum("unknown")


def test_from_Lambda():
    spec = ProblemSpec.from_Lambda(2.5, 3.0, lambda_minus=1.2)
    assert spec.Lambda == pytest.approx(3.0)


def test_datum_families(tmp_path):
    dom = (-1.0, 1.0, -1.0, 1.0)
    two = Datum("two_plane", {"alpha": 2, "beta": 1}).evaluator(2.0, dom)
    assert two(np.array(0.5), np.array(0.0)) == pytest.approx(1.0)
    assert two(np.array(-0.5), np.array(0.0)) == pytest.approx(-0.5)
    strip = Datum("strip", {"a": 1, "b": 1}).evaluator(2.0, dom)
    assert strip(np.array(-1.0), np.array(0.3)) == pytest.approx(-1.0)
    expr = Datum("expression", {"expr": "x**2 - y**2"}).evaluator(2.0, dom)
    assert expr(np.array(2.0), np.array(1.0)) == pytest.approx(3.0)
    f = ScalarField2D.on_square(lambda x, y: x + 2 * y, n=8)
    path, _ = f.to_csv(tmp_path / "g.csv")
    tab = Datum("table", {"path": str(path)}).evaluator(2.0, dom)
    assert tab(np.array(0.3), np.array(-0.2)) == pytest.approx(-0.1)
    cone = Datum("cone_trace", {"omega": math.pi / 2}).evaluator(2.0, dom)
    assert cone(np.array(0.5), np.array(0.5)) > 0 and cone(np.array(-0.5), np.array(0.1)) < 0
