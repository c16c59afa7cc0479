"""Local minimizers of the two-phase functional on a grid.

The nonsmooth functional is approached through a continuation in
``(eps, delta)`` of the smoothed surrogate; each stage runs preconditioned
steepest descent with Armijo backtracking (optionally with heavy-ball
momentum) and warm-starts the next.  The preconditioner is the exact p = 2
Hessian of the discrete Dirichlet term, diagonalized by sine (and, for free
lateral edges, cosine) transforms.

Also here: the 1D breakpoint oracle for the strip problem and the discrete
weak p-Laplace residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.optimize import minimize_scalar

from .energy import ProblemSpec, smoothed_energy_and_gradient
from .grid import ScalarField2D

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class MinimizeConfig:
    n: int = 256
    stages: int = 5
    eps_start: float = 1e-2
    eps_end: float = 1e-6
    delta_start: float = 0.1
    delta_end: float | None = None      # None -> grid spacing
    max_iter: int = 400
    grad_tol: float = 1e-3
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    momentum: float = 0.0
    fill_iter: int = 200

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 cells per side")
        if self.stages < 1 or self.max_iter < 1:
            raise ValueError("stages and max_iter must be positive")
        if not (self.grad_tol > 0 and self.eps_end > 0 and self.delta_start > 0):
            raise ValueError("tolerances and smoothing widths must be positive")
        if self.eps_end > self.eps_start:
            raise ValueError("eps schedule must decrease")
        if not 0 < self.armijo_c < 1 or not 0 < self.armijo_shrink < 1:
            raise ValueError("Armijo parameters must lie in (0, 1)")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")

    def schedule(self, h: float) -> list[tuple[float, float]]:
        """Continuation pairs ``(eps, delta)``, geometric in both, ending at ``delta = h``."""
        d_end = h if self.delta_end is None else self.delta_end
        d_start = max(self.delta_start, d_end)
        if self.stages == 1:
            return [(self.eps_end, d_end)]
        k = np.arange(self.stages) / (self.stages - 1)
        eps = self.eps_start * (self.eps_end / self.eps_start) ** k
        delta = d_start * (d_end / d_start) ** k
        return list(zip(eps.tolist(), delta.tolist()))


@dataclass
class MinimizeResult:
    u: ScalarField2D
    history: list[list[float]]
    grad_norm: float
    converged: bool
    schedule: list[tuple[float, float]] = field(default_factory=list)
    iterations: int = 0

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "stages": [{"eps": e, "delta": d, "iterations": len(hst) - 1,
                        "energy_start": hst[0], "energy_end": hst[-1]}
                       for (e, d), hst in zip(self.schedule, self.history)],
        }


class _Preconditioner:
    """Inverse of ``4 - 4 cos(a) cos(b)`` on sine/cosine modes of the free nodes."""

    def __init__(self, nx: int, ny: int, natural_y: bool):
        self.natural_y = natural_y
        kx = np.arange(1, nx - 1)
        ax = np.pi * kx / (nx - 1)
        if natural_y:
            ay = np.pi * np.arange(ny) / (ny - 1)
        else:
            ay = np.pi * np.arange(1, ny - 1) / (ny - 1)
        self.eig = 4.0 - 4.0 * np.outer(np.cos(ax), np.cos(ay))

    def free(self, U):
        return U[1:-1, :] if self.natural_y else U[1:-1, 1:-1]

    def apply(self, g: np.ndarray) -> np.ndarray:
        if self.natural_y:
            # edge rows carry half the cells; the even extension doubles them
            g = g.copy()
            g[:, 0] *= 2.0
            g[:, -1] *= 2.0
            t = fft.dct(fft.dst(g, type=1, axis=0), type=1, axis=1)
            t /= self.eig
            return fft.idct(fft.idst(t, type=1, axis=0), type=1, axis=1)
        return fft.idstn(fft.dstn(g, type=1) / self.eig, type=1)


def _residual_norm(G_free: np.ndarray, h: float, natural_y: bool = False) -> float:
    """Largest nodal energy derivative per unit dual-cell area."""
    if not G_free.size:
        return 0.0
    r = np.abs(G_free)
    if natural_y:
        r = r.copy()
        r[:, 0] *= 2.0
        r[:, -1] *= 2.0
    return float(np.max(r)) / (h * h)


def descend(U0: np.ndarray, h: float, p: float, Lambda: float, eps: float, delta: float,
            natural_y: bool, max_iter: int, grad_tol: float, armijo_c: float = 1e-4,
            shrink: float = 0.5, momentum: float = 0.0):
    """Preconditioned Armijo descent on the smoothed energy with the boundary rows fixed.

    Returns ``(U, energies, grad_norm, converged)``; energies are the accepted
    iterates, so they never increase.
    """
    U = U0.copy()
    pre = _Preconditioner(*U.shape, natural_y)
    free = pre.free
    E, G = smoothed_energy_and_gradient(U, h, p, Lambda, eps, delta)
    energies = [E]
    gnorm = _residual_norm(free(G), h, natural_y)
    step = 1.0
    d_prev = None
    for _ in range(max_iter):
        if gnorm <= grad_tol:
            return U, energies, gnorm, True
        g = free(G)
        d = -pre.apply(g)
        if momentum > 0 and d_prev is not None:
            dm = d + momentum * d_prev
            if np.sum(g * dm) < 0:
                d = dm
        slope = float(np.sum(g * d))
        if slope >= 0:
            d = -pre.apply(g)
            slope = float(np.sum(g * d))
        t = min(1.0, 2.0 * step)
        trial = U.copy()
        while True:
            free(trial)[...] = free(U) + t * d
            E_new, _ = smoothed_energy_and_gradient(trial, h, p, Lambda, eps, delta, with_grad=False)
            if E_new <= E + armijo_c * t * slope:
                break
            t *= shrink
            if t < 1e-14:
                log.debug("line search stalled at |g|=%.3e", gnorm)
                return U, energies, gnorm, False
        step = t
        d_prev = t * d
        U = trial
        E, G = smoothed_energy_and_gradient(U, h, p, Lambda, eps, delta)
        energies.append(E)
        gnorm = _residual_norm(free(G), h, natural_y)
    return U, energies, gnorm, gnorm <= grad_tol


def boundary_field(spec: ProblemSpec, n: int) -> ScalarField2D:
    """Datum on the boundary rows, harmonic-free zero interior (used as fill seed)."""
    g = spec.grid(n)
    V = np.zeros(g.shape)
    V[0, :], V[-1, :] = g.values[0, :], g.values[-1, :]
    if spec.datum.natural_lateral:
        # nothing fixed on the lateral rows; seed with the datum
        V = g.values.copy()
    else:
        V[:, 0], V[:, -1] = g.values[:, 0], g.values[:, -1]
    return g.with_values(V)


def p_harmonic_fill(spec: ProblemSpec, n: int, p: float | None = None, max_iter: int = 200,
                    tol: float = 1e-8) -> ScalarField2D:
    """Discrete p-harmonic extension of the datum (phase term switched off)."""
    p = spec.p if p is None else p
    seed = boundary_field(spec, n)
    natural = spec.datum.natural_lateral
    # exact for p = 2: one preconditioned Newton step on the quadratic energy
    U, *_ = descend(seed.values, seed.h, 2.0, 0.0, 0.0, 1.0, natural, 3, 1e-12)
    if p != 2.0:
        U, *_ = descend(U, seed.h, p, 0.0, 1e-6, 1.0, natural, max_iter, tol)
    return seed.with_values(U)


def minimize(spec: ProblemSpec, cfg: MinimizeConfig | None = None) -> MinimizeResult:
    """Local minimizer of the two-phase functional with Dirichlet datum ``spec.datum``."""
    cfg = cfg or MinimizeConfig()
    u0 = p_harmonic_fill(spec, cfg.n, max_iter=cfg.fill_iter)
    h = u0.h
    schedule = cfg.schedule(h)
    U = u0.values
    history = []
    gnorm = math.inf
    ok = False
    iters = 0
    for k, (eps, delta) in enumerate(schedule):
        last = k == len(schedule) - 1
        U, energies, gnorm, ok = descend(
            U, h, spec.p, spec.Lambda, eps, delta, spec.datum.natural_lateral,
            cfg.max_iter if not last else 4 * cfg.max_iter,
            cfg.grad_tol, cfg.armijo_c, cfg.armijo_shrink, cfg.momentum)
        iters += len(energies) - 1
        history.append(energies)
        log.info("stage %d eps=%.1e delta=%.2e: %d its, E=%.8f, |g|=%.3e",
                 k, eps, delta, len(energies) - 1, energies[-1], gnorm)
    return MinimizeResult(u=u0.with_values(U), history=history, grad_norm=gnorm,
                          converged=bool(ok), schedule=schedule, iterations=iters)


# -- 1D strip oracle ---------------------------------------------------------

@dataclass(frozen=True)
class StripSolution:
    s: float
    alpha: float
    beta: float
    energy: float

    def balance(self, p: float) -> float:
        """``(p-1)(alpha^p - beta^p)``; equals ``Lambda`` at an interior minimizer."""
        return (p - 1.0) * (self.alpha ** p - self.beta ** p)


def strip_energy(s, p: float, a: float, b: float, Lambda: float):
    """Energy of the broken-line profile with breakpoint ``s`` (negative on ``(0, s)``)."""
    s = np.asarray(s, dtype=float)
    return b ** p * s ** (1.0 - p) + a ** p * (1.0 - s) ** (1.0 - p) + Lambda * (1.0 - s)


def solve_1d_oracle(p: float, a: float, b: float, Lambda: float, n_grid: int = 2001) -> StripSolution:
    """Brute-force breakpoint on an ``s``-grid, refined by golden section."""
    if not (a > 0 and b > 0 and Lambda > 0 and p > 1):
        raise ValueError("need a, b, Lambda > 0 and p > 1")
    s_grid = np.linspace(0.0, 1.0, n_grid + 2)[1:-1]
    k = int(np.argmin(strip_energy(s_grid, p, a, b, Lambda)))
    lo = s_grid[max(k - 1, 0)]
    hi = s_grid[min(k + 1, len(s_grid) - 1)]
    res = minimize_scalar(lambda s: float(strip_energy(s, p, a, b, Lambda)),
                          bracket=(lo, s_grid[k], hi), method="golden", tol=1e-12)
    s = float(res.x)
    return StripSolution(s=s, alpha=a / (1.0 - s), beta=b / s,
                         energy=float(strip_energy(s, p, a, b, Lambda)))


# -- weak p-Laplace residual -------------------------------------------------

def p_harmonic_residual(u: ScalarField2D, mask: np.ndarray, p: float, eps: float = 0.0) -> float:
    """Max over interior nodes in ``mask`` of the weak p-Laplace residual per cell area.

    For node k with hat function ``psi_k`` this is
    ``|sum_cells (|grad u|^2 + eps^2)^((p-2)/2) grad u . grad psi_k| h^2 / h^2``.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != u.shape:
        raise ValueError("mask must have the field's node shape")
    inner = np.zeros_like(mask)
    inner[1:-1, 1:-1] = mask[1:-1, 1:-1]
    if not inner.any():
        raise ValueError("empty residual mask")
    _, G = smoothed_energy_and_gradient(u.values, u.h, p, 0.0, eps, 1.0)
    return float(np.max(np.abs(G[inner]))) / (p * u.h ** 2)
