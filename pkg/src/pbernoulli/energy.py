"""The two-phase Bernoulli functional and its smoothed surrogate.

    J(u) = int |grad u|^p + lambda_+^p chi{u > 0} + lambda_-^p chi{u <= 0}

Since ``lambda_-^p |Omega|`` is a constant, minimizers of ``J`` are the
minimizers of the one-phase form ``int |grad u|^p + Lambda chi{u > 0}`` with
``Lambda = lambda_+^p - lambda_-^p``.  Descent works on

    E(u) = int (|grad u|^2 + eps^2)^(p/2) + Lambda H_delta(u),
    H_delta(u) = (1 + tanh(u/delta)) / 2,

whose nodal gradient is the exact derivative of the discrete energy.
The phase indicator and ``H_delta`` are evaluated at cell centers, the same
cells on which the gradient quadrature lives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .grid import ScalarField2D, cell_average, gradient_field

DATUM_FAMILIES = ("two_plane", "cone_trace", "strip", "affine", "expression", "table")


@dataclass(frozen=True)
class Datum:
    """Boundary datum ``g`` described by a named family and its parameters.

    Families
      two_plane   alpha * (x.e)^+ - beta * (x.e)^-  with e = (cos angle, sin angle)
      cone_trace  homogeneous two-phase cone pair of opening ``omega`` (positive
                  arc starting at ``start``), negative phase scaled by ``beta``
      strip       -b at the left edge, +a at the right edge, linear in between;
                  the top and bottom edges carry the natural (free) condition
      affine      c0 + c1 x + c2 y
      expression  numpy expression in x, y (e.g. ``"x**2 - y**2"``)
      table       bilinear interpolation of a field CSV (``path``)
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in DATUM_FAMILIES:
            raise ValueError(f"unknown datum family {self.family!r}; choose from {DATUM_FAMILIES}")

    @property
    def natural_lateral(self) -> bool:
        """True when the edges parallel to x carry no Dirichlet condition."""
        return self.family == "strip"

    def evaluator(self, p: float, domain: tuple[float, float, float, float]) -> Callable:
        fam, prm = self.family, self.params
        if fam == "two_plane":
            alpha = float(prm.get("alpha", 1.0))
            beta = float(prm.get("beta", 1.0))
            ang = float(prm.get("angle", 0.0))
            x0 = float(prm.get("x0", 0.0))
            y0 = float(prm.get("y0", 0.0))
            c, s = math.cos(ang), math.sin(ang)

            def g(x, y):
                t = (x - x0) * c + (y - y0) * s
                return alpha * np.maximum(t, 0.0) - beta * np.maximum(-t, 0.0)
            return g
        if fam == "cone_trace":
            from .eigen import cone_pair
            omega = float(prm.get("omega", math.pi / 2))
            start = float(prm.get("start", 0.0))
            plus, minus = cone_pair(omega, p, scale_minus=float(prm.get("beta", 1.0)))
            scale = float(prm.get("alpha", 1.0))

            def g(x, y):
                c, s = math.cos(start), math.sin(start)
                xr = c * x + s * y
                yr = -s * x + c * y
                return scale * plus(xr, yr) + minus(xr, yr)
            return g
        if fam == "strip":
            a = float(prm.get("a", 1.0))
            b = float(prm.get("b", 1.0))
            xmin, xmax = domain[0], domain[1]

            def g(x, y):
                t = (np.asarray(x) - xmin) / (xmax - xmin)
                return -b + (a + b) * t + 0.0 * np.asarray(y)
            return g
        if fam == "affine":
            c0, c1, c2 = (float(prm.get(k, 0.0)) for k in ("c0", "c1", "c2"))
            return lambda x, y: c0 + c1 * np.asarray(x) + c2 * np.asarray(y)
        if fam == "expression":
            expr = str(prm["expr"])
            names = {k: getattr(np, k) for k in ("sin", "cos", "tan", "exp", "log", "sqrt",
                                                  "abs", "maximum", "minimum", "hypot",
                                                  "arctan2", "pi", "tanh", "sinh", "cosh")}
            code = compile(expr, "<datum>", "eval")

            def g(x, y):
                return eval(code, {"__builtins__": {}}, {**names, "x": x, "y": y}) + 0.0 * x
            return g
        if fam == "table":
            table = ScalarField2D.from_csv(prm["path"])
            return lambda x, y: table.interpolate(x, y, clamp=True)
        raise AssertionError(fam)


@dataclass(frozen=True)
class ProblemSpec:
    p: float
    lambda_plus: float
    lambda_minus: float
    datum: Datum = field(default_factory=lambda: Datum("two_plane"))
    center: tuple[float, float] = (0.0, 0.0)
    half_side: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not (self.lambda_plus > 0 and self.lambda_minus > 0):
            raise ValueError("phase constants must be positive")
        if not self.Lambda > 0:
            raise ValueError("need lambda_plus**p - lambda_minus**p > 0")
        if not self.half_side > 0:
            raise ValueError("domain half-side must be positive")

    @classmethod
    def from_Lambda(cls, p: float, Lambda: float, lambda_minus: float = 1.0, **kw) -> "ProblemSpec":
        """Spec with ``lambda_plus`` chosen so that ``lambda_+^p - lambda_-^p = Lambda``."""
        lp = (Lambda + lambda_minus ** p) ** (1.0 / p)
        return cls(p=p, lambda_plus=lp, lambda_minus=lambda_minus, **kw)

    @property
    def Lambda(self) -> float:
        return self.lambda_plus ** self.p - self.lambda_minus ** self.p

    @property
    def domain(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        L = self.half_side
        return cx - L, cx + L, cy - L, cy + L

    @property
    def area(self) -> float:
        return 4.0 * self.half_side ** 2

    @cached_property
    def boundary_function(self) -> Callable:
        return self.datum.evaluator(self.p, self.domain)

    def grid(self, n: int, values=None) -> ScalarField2D:
        """Field on the problem domain with ``n`` cells per side (datum values by default)."""
        xmin, _, ymin, _ = self.domain
        h = 2.0 * self.half_side / n
        if values is None:
            return ScalarField2D.from_function(self.boundary_function, (xmin, ymin), h, (n + 1, n + 1))
        return ScalarField2D((xmin, ymin), h, values)

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda_plus": self.lambda_plus, "lambda_minus": self.lambda_minus,
                "Lambda": self.Lambda, "center": list(self.center), "half_side": self.half_side,
                "datum": {"family": self.datum.family, **self.datum.params}}


@dataclass(frozen=True)
class SmoothingConfig:
    eps_reg: float = 0.0
    delta_h: float = 1e-2

    def __post_init__(self):
        if self.eps_reg < 0:
            raise ValueError("eps_reg must be >= 0")
        if not self.delta_h > 0:
            raise ValueError("delta_h must be > 0")


def _dirichlet_term(u: ScalarField2D, p: float) -> float:
    gx, gy = gradient_field(u)
    return float(np.sum((gx * gx + gy * gy) ** (0.5 * p)) * u.h ** 2)


def positive_area(u: ScalarField2D) -> float:
    """Area of the cells whose center value is positive."""
    return float(np.count_nonzero(cell_average(u.values) > 0.0)) * u.h ** 2


def energy_exact(u: ScalarField2D, spec: ProblemSpec) -> float:
    """``J(u)`` with the phase indicators taken from cell-center signs."""
    total = (u.nx - 1) * (u.ny - 1) * u.h ** 2
    pos = positive_area(u)
    return (_dirichlet_term(u, spec.p) + spec.lambda_plus ** spec.p * pos
            + spec.lambda_minus ** spec.p * (total - pos))


def energy_one_phase(u: ScalarField2D, spec: ProblemSpec) -> float:
    return _dirichlet_term(u, spec.p) + spec.Lambda * positive_area(u)


def heaviside(u, delta: float):
    return 0.5 * (1.0 + np.tanh(u / delta))


def heaviside_prime(u, delta: float):
    th = np.tanh(u / delta)
    return 0.5 * (1.0 - th * th) / delta


def smoothed_energy_and_gradient(U: np.ndarray, h: float, p: float, Lambda: float,
                                 eps: float, delta: float, with_grad: bool = True):
    """Smoothed discrete energy of nodal values ``U`` and its exact nodal gradient."""
    a, b = U[:-1, :-1], U[1:, :-1]
    c, d = U[:-1, 1:], U[1:, 1:]
    gx = (b + d - a - c) / (2.0 * h)
    gy = (c + d - a - b) / (2.0 * h)
    w = gx * gx + gy * gy + eps * eps
    m = 0.25 * (a + b + c + d)
    h2 = h * h
    wp = w ** (0.5 * p)
    energy = float(np.sum(wp) * h2 + Lambda * np.sum(heaviside(m, delta)) * h2)
    if not with_grad:
        return energy, None
    # d/dg of w^(p/2) h^2 = p w^(p/2-1) g h^2; chain through the corner stencil
    coef = np.zeros_like(w)
    pos = w > 0
    coef[pos] = p * wp[pos] / w[pos]
    fx = coef * gx * (h2 / (2.0 * h))
    fy = coef * gy * (h2 / (2.0 * h))
    hm = Lambda * heaviside_prime(m, delta) * (0.25 * h2)
    G = np.zeros_like(U)
    G[:-1, :-1] += -fx - fy + hm
    G[1:, :-1] += fx - fy + hm
    G[:-1, 1:] += -fx + fy + hm
    G[1:, 1:] += fx + fy + hm
    return energy, G


def energy_smoothed(u: ScalarField2D, spec: ProblemSpec, cfg: SmoothingConfig) -> float:
    return smoothed_energy_and_gradient(u.values, u.h, spec.p, spec.Lambda,
                                        cfg.eps_reg, cfg.delta_h, with_grad=False)[0]


def energy_smoothed_gradient(u: ScalarField2D, spec: ProblemSpec, cfg: SmoothingConfig) -> ScalarField2D:
    """Exact derivative of :func:`energy_smoothed` with respect to every node value."""
    _, G = smoothed_energy_and_gradient(u.values, u.h, spec.p, spec.Lambda, cfg.eps_reg, cfg.delta_h)
    return u.with_values(G)
