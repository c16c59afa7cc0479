"""Monotonicity functional and the local probes built around it.

    phi_p(r, u, x0) = r**-4 * int_{B_r} |grad u+|^p * int_{B_r} |grad u-|^p

In the plane the weight ``|x - x0|**(N-2)`` of the general functional is
identically one, so the expression above covers both forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .freeboundary import EmptyIntersection, FreeBoundary, extract_free_boundary, flatness
from .grid import (Region, RegionOutsideGrid, ScalarField2D, cell_average, gradient_field,
                   region_integral, sphere_average)

TRIPLING_SLACK = 0.02


def _phase_energy(u: ScalarField2D, region: Region, p: float) -> float:
    gx, gy = gradient_field(u)
    return region_integral((gx * gx + gy * gy) ** (0.5 * p), u, region)


def phase_energies(u: ScalarField2D, x0, r: float, p: float) -> tuple[float, float]:
    """``(int_{B_r}|grad u+|^p, int_{B_r}|grad u-|^p)``."""
    ball = Region.ball(x0, r)
    return _phase_energy(u.positive_part(), ball, p), _phase_energy(u.negative_part(), ball, p)


def phi_p(u: ScalarField2D, x0, r: float, p: float) -> float:
    jp, jm = phase_energies(u, x0, r, p)
    return jp * jm / r ** 4


@dataclass(frozen=True)
class TriplingVerdict:
    r: float
    phi_r: float
    phi_3r: float
    holds: bool

    @property
    def excess(self) -> float:
        """Relative amount by which ``phi(r)`` exceeds ``phi(3r)`` (<= 0 when monotone)."""
        if self.phi_3r == 0:
            return 0.0 if self.phi_r == 0 else math.inf
        return self.phi_r / self.phi_3r - 1.0


def tripling_check(u: ScalarField2D, x0, r: float, p: float, slack: float = TRIPLING_SLACK) -> TriplingVerdict:
    """``phi_p(r) <= phi_p(3r)`` up to a relative quadrature slack."""
    big = phi_p(u, x0, 3.0 * r, p)
    small = phi_p(u, x0, r, p)
    return TriplingVerdict(r=r, phi_r=small, phi_3r=big, holds=bool(small <= big * (1.0 + slack)))


def confirmed_violation(fields: Sequence[ScalarField2D], x0, r: float, p: float,
                        slack: float = TRIPLING_SLACK) -> bool:
    """True only if the tripling inequality fails beyond slack on two consecutive refinements."""
    fails = [not tripling_check(u, x0, r, p, slack).holds for u in fields]
    return any(a and b for a, b in zip(fails, fails[1:]))


@dataclass
class MonotonicityReport:
    x0: tuple[float, float]
    p: float
    radii: list[float]
    phi: list[float]
    verdicts: list[TriplingVerdict]
    flatness: list[float | None]         # h(x0, r) / r, None where Gamma misses B_r

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def log_derivative(self) -> list[float]:
        """Finite-difference ``d log phi / d log r`` between consecutive radii (nan where phi = 0)."""
        out = []
        for (r0, f0), (r1, f1) in zip(zip(self.radii, self.phi), zip(self.radii[1:], self.phi[1:])):
            out.append(math.log(f1 / f0) / math.log(r1 / r0) if f0 > 0 and f1 > 0 else math.nan)
        return out

    def to_dict(self) -> dict:
        return {
            "x0": list(self.x0), "p": self.p, "all_hold": self.all_hold,
            "profile": [{"r": r, "phi": f, "phi_3r": v.phi_3r, "tripling_holds": v.holds,
                         "h_over_r": hr} for r, f, v, hr in zip(self.radii, self.phi, self.verdicts,
                                                                 self.flatness)],
            "log_derivative": [None if math.isnan(d) else d for d in self.log_derivative()],
        }

    def to_csv_rows(self) -> list[tuple]:
        return [(r, f, v.phi_3r, int(v.holds), math.nan if hr is None else hr)
                for r, f, v, hr in zip(self.radii, self.phi, self.verdicts, self.flatness)]


def phi_profile(u: ScalarField2D, x0, radii, p: float, gamma: FreeBoundary | None = None,
                slack: float = TRIPLING_SLACK) -> MonotonicityReport:
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or not radii or radii[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    gamma = extract_free_boundary(u) if gamma is None else gamma
    verdicts = [tripling_check(u, x0, r, p, slack) for r in radii]
    flat = []
    for r in radii:
        try:
            flat.append(flatness(gamma, x0, r).h / r)
        except EmptyIntersection:
            flat.append(None)
    return MonotonicityReport(x0=(float(x0[0]), float(x0[1])), p=p, radii=radii,
                              phi=[v.phi_r for v in verdicts], verdicts=verdicts, flatness=flat)


# -- coherence and growth ----------------------------------------------------

@dataclass
class CoherenceTable:
    x0: tuple[float, float]
    radii: list[float]
    ratios: list[float]
    bound: float
    bounded: bool


def dyadic_radii(r_max: float, levels: int = 4) -> list[float]:
    return [r_max * 2.0 ** -k for k in range(levels)]


def coherence_table(u: ScalarField2D, x0, radii=None, gamma: FreeBoundary | None = None,
                    snap: bool = True, levels: int = 4, r_max: float = 0.2) -> CoherenceTable:
    """``|mean of u over the circle of radius r| / r`` at ``x0`` snapped onto Gamma.

    Since ``u(x0) = 0`` on Gamma the ratio never exceeds the local Lipschitz
    constant; ``bounded`` is False when some ratio exceeds twice the largest
    cell gradient inside the biggest ball, which signals blow-up.
    """
    if snap:
        gamma = extract_free_boundary(u) if gamma is None else gamma
        x0 = gamma.nearest_vertex(x0)
    x0 = (float(x0[0]), float(x0[1]))
    radii = dyadic_radii(r_max, levels) if radii is None else [float(r) for r in radii]
    ratios = [abs(sphere_average(u, x0, r)) / r for r in radii]
    rb = max(radii)
    frac = _node_ball(u, x0, rb + u.h)
    gn = np.hypot(*gradient_field(u))
    cells = (frac[:-1, :-1] | frac[1:, :-1] | frac[:-1, 1:] | frac[1:, 1:])
    bound = 2.0 * float(gn[cells].max()) if cells.any() else 0.0
    return CoherenceTable(x0=x0, radii=radii, ratios=ratios, bound=bound,
                          bounded=bool(all(q <= bound for q in ratios)))


def _node_ball(u: ScalarField2D, x0, r: float) -> np.ndarray:
    X, Y = u.nodes()
    return (X - x0[0]) ** 2 + (Y - x0[1]) ** 2 <= r * r


def growth_ratio(u: ScalarField2D, x0, radii, phase: str = "both") -> list[float]:
    """``sup_{B_r} |u| / r`` over grid nodes (``phase`` selects u+, u- or |u|)."""
    vals = {"both": np.abs(u.values), "plus": np.maximum(u.values, 0.0),
            "minus": np.maximum(-u.values, 0.0)}[phase]
    out = []
    for r in radii:
        mask = _node_ball(u, x0, r)
        if not mask.any():
            raise RegionOutsideGrid(f"no grid node within B_{r}({tuple(x0)})")
        out.append(float(vals[mask].max()) / r)
    return out


# -- rescaling ---------------------------------------------------------------

@dataclass(frozen=True)
class RescaledPair:
    """``u_j^{+-}(x) = u^{+-}(x_j + r_j x) / (r_j S^{+-})`` on a grid covering ``B_3``."""

    plus: ScalarField2D
    minus: ScalarField2D
    S_plus: float
    S_minus: float
    x_j: tuple[float, float]
    r_j: float
    p_j: float

    def field(self) -> ScalarField2D:
        return self.plus.with_values(self.plus.values - self.minus.values)

    def norms(self, radius: float = 3.0) -> tuple[float, float]:
        """``||grad u_j^{+-}||_{L^p(B_radius)}``."""
        ball = Region.ball((0.0, 0.0), radius)
        p = self.p_j
        return (_phase_energy(self.plus, ball, p) ** (1 / p),
                _phase_energy(self.minus, ball, p) ** (1 / p))


def rescale(u: ScalarField2D, x_j, r_j: float, p_j: float, n: int = 256) -> RescaledPair:
    """Blow up ``u`` at ``x_j`` by ``r_j`` with both phases normalized on ``B_3``.

    ``S^p`` is ``int_{B_{3 r_j}} |grad u^{+-}|^p / (3 r_j)^2``, which makes
    ``int_{B_3} |grad u_j^{+-}|^p = 9``.
    """
    if not r_j > 0:
        raise ValueError("r_j must be positive")
    big = Region.ball(x_j, 3.0 * r_j)
    S = []
    for part in (u.positive_part(), u.negative_part()):
        e = _phase_energy(part, big, p_j)
        if not e > 0:
            raise ValueError("one phase is empty in B_{3r}: normalization constant vanishes")
        S.append((e / (3.0 * r_j) ** 2) ** (1.0 / p_j))
    X, Y = ScalarField2D.on_square(lambda x, y: x, (0.0, 0.0), 3.0, n).nodes()
    vals = u.interpolate(x_j[0] + r_j * X, x_j[1] + r_j * Y, clamp=True)
    plus = ScalarField2D.on_square(lambda x, y: 0 * x, (0.0, 0.0), 3.0, n)
    return RescaledPair(plus=plus.with_values(np.maximum(vals, 0.0) / (r_j * S[0])),
                        minus=plus.with_values(np.maximum(-vals, 0.0) / (r_j * S[1])),
                        S_plus=S[0], S_minus=S[1], x_j=(float(x_j[0]), float(x_j[1])),
                        r_j=float(r_j), p_j=float(p_j))


def _power_integral(u: ScalarField2D, radius: float, p: float) -> float:
    return region_integral(cell_average(np.abs(u.values) ** p), u, Region.ball((0.0, 0.0), radius))


def nondegeneracy_product(pair: RescaledPair) -> float:
    """``int_{B_2} |u_j+|^p * int_{B_2} |u_j-|^p``."""
    return _power_integral(pair.plus, 2.0, pair.p_j) * _power_integral(pair.minus, 2.0, pair.p_j)


def caccioppoli_ratio(pair: RescaledPair, p: float | None = None) -> float:
    """``int_{B_1} |grad u_j+|^p / int_{B_2} |u_j+|^p``."""
    p = pair.p_j if p is None else p
    den = _power_integral(pair.plus, 2.0, p)
    if not den > 0:
        raise ValueError("positive phase vanishes on B_2")
    return _phase_energy(pair.plus, Region.ball((0.0, 0.0), 1.0), p) / den


def reverse_holder_ratio(u: ScalarField2D, square: Region, ell: float) -> float:
    """``(avg_{Q_R} |grad u|^2)^(1/2) / (avg_{Q_2R} |grad u|^ell)^(1/ell)``."""
    if square.kind != "square":
        raise ValueError("reverse Hoelder probe needs a square region")
    if not 1 < ell < 2:
        raise ValueError("ell must lie in (1, 2)")
    outer = Region.square(square.center, 2.0 * square.size)
    gx, gy = gradient_field(u)
    g2 = gx * gx + gy * gy
    ones = np.ones_like(g2)
    # averages use the quadrature's own measure so constants average exactly
    lhs = (region_integral(g2, u, square) / region_integral(ones, u, square)) ** 0.5
    rhs = (region_integral(g2 ** (0.5 * ell), u, outer)
           / region_integral(ones, u, outer)) ** (1.0 / ell)
    if not rhs > 0:
        raise ValueError("gradient vanishes on the doubled square")
    return lhs / rhs
