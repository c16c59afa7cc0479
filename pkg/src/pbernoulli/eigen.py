"""Eigenvalues of the p-Laplace-Beltrami operator on circular arcs.

For an arc of length ``omega`` the positive homogeneous p-harmonic function
``u = r**lam * phi(theta)`` vanishing on the two bounding rays solves

    -(W**((p-2)/2) phi')' = lam*(lam*(p-1) + 2 - p) * W**((p-2)/2) phi,
    W = lam**2 phi**2 + phi'**2,   phi(0) = phi(omega) = 0.

Two independent routes are provided: the explicit formula for ``lam`` in
terms of ``rho = (omega/pi - 1)**2 - 1`` and ``s``, and a shooting method
that integrates the flux form of the ODE with classical RK4 and bisects on
``lam``.  On top of these sit the complementary-arc quantities
(characteristic numbers and their sum) and the homogeneous cone functions
used to build two-phase test fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.integrate import trapezoid

TWO_PI = 2.0 * math.pi
RADICAND_CLAMP = -1e-14
SCAN_UPPER = 8.0
SCAN_NODES = 400
SCAN_STEPS = 1_000
RK_STEPS = 10_000


class EigenError(ValueError):
    """Raised for arcs or exponents outside the admissible range."""


def _check(omega: float, p: float, allow_full: bool = True):
    upper_ok = omega <= TWO_PI if allow_full else omega < TWO_PI
    if not (0.0 < omega and upper_ok):
        raise EigenError(f"arc length must lie in (0, 2pi{']' if allow_full else ')'}, got {omega}")
    if not p > 1.0:
        raise EigenError(f"exponent p must exceed 1, got {p}")


def rho_of(omega: float) -> float:
    """``(omega/pi - 1)**2 - 1``, evaluated as ``x (x - 2)`` to avoid cancellation."""
    x = omega / math.pi
    return x * (x - 2.0)


def s_of(rho: float, p: float) -> float:
    return (p - 2.0) / (2.0 * (p - 1.0)) + p / (2.0 * (p - 1.0)) * (-1.0 / rho)


def lower_bound(p: float) -> float:
    """Strict lower bound ``max{0, (p-2)/(p-1)}`` on every arc eigenvalue."""
    return max(0.0, (p - 2.0) / (p - 1.0))


def closed_form_lambda(omega: float, p: float) -> float:
    """Explicit first eigenvalue on an arc of length ``omega``."""
    _check(omega, p)
    if omega == TWO_PI:
        return (p - 1.0) / p
    rho = rho_of(omega)
    big, small = _branches(rho, p, omega)
    return big if omega <= math.pi else small


def _branches(rho: float, p: float, omega: float) -> tuple[float, float]:
    """The two roots ``s +- sqrt(s^2 - t)``; the smaller one in cancellation-free form."""
    t = -1.0 / rho
    s = s_of(rho, p)
    rad = s * s - t
    if rad < 0.0:
        if rad < RADICAND_CLAMP * max(1.0, s * s):
            raise EigenError(f"negative radicand {rad} at omega={omega}, p={p}")
        rad = 0.0
    big = s + math.sqrt(rad)
    return big, t / big


def characteristic_number(lam: float, p: float) -> float:
    return math.sqrt(lam * (lam * (p - 1.0) + 2.0 - p))


@dataclass(frozen=True)
class ConeSpectrum:
    omega: float
    p: float
    rho: float
    s: float
    t: float
    lambda1: float
    lambda2: float
    char1: float
    char2: float
    identity_residual: float

    @property
    def sum(self) -> float:
        return self.char1 + self.char2


def cone_spectrum(omega: float, p: float) -> ConeSpectrum:
    """Eigen data for the arc ``(0, omega)`` and its complement.

    Also checks the algebraic identity ``I + 2 sqrt(II) = 4t + p^2 t(t-1)/(p-1)``
    where ``I`` is the sum and ``II`` the product of the squared
    characteristic numbers.
    """
    _check(omega, p, allow_full=False)
    rho = rho_of(omega)
    t = -1.0 / rho
    s = s_of(rho, p)
    # complementary arcs share rho, hence both roots of the same quadratic
    big, small = _branches(rho, p, omega)
    lam1, lam2 = (big, small) if omega <= math.pi else (small, big)
    m1 = lam1 * (lam1 * (p - 1.0) + 2.0 - p)
    m2 = lam2 * (lam2 * (p - 1.0) + 2.0 - p)
    lhs = (m1 + m2) + 2.0 * math.sqrt(m1 * m2)
    rhs = 4.0 * t + p * p * t * (t - 1.0) / (p - 1.0)
    return ConeSpectrum(
        omega=omega, p=p, rho=rho, s=s, t=t, lambda1=lam1, lambda2=lam2,
        char1=math.sqrt(m1), char2=math.sqrt(m2), identity_residual=lhs - rhs,
    )


# -- shooting ----------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _invert_flux(q, a2, p, guess):
    """Solve (a2 + v^2)^((p-2)/2) v = q for v; the left side is increasing in v."""
    if q == 0.0:
        return 0.0
    sgn = 1.0 if q > 0.0 else -1.0
    aq = abs(q)
    e = 0.5 * (p - 2.0)
    v = abs(guess)
    if v == 0.0:
        v = aq ** (1.0 / (p - 1.0)) if a2 == 0.0 else aq / a2 ** e
    # bracket [lo, hi] around the root
    lo = 0.0
    hi = v
    while (a2 + hi * hi) ** e * hi < aq:
        lo = hi
        hi *= 2.0
    v = min(max(v, lo), hi)
    for _ in range(100):
        w = a2 + v * v
        g = w ** e * v - aq
        if abs(g) <= 1e-15 * aq:
            break
        if g > 0.0:
            hi = v
        else:
            lo = v
        dg = w ** (e - 1.0) * (a2 + (p - 1.0) * v * v)
        vn = v - g / dg if dg > 0.0 else 0.5 * (lo + hi)
        if not (lo < vn < hi):
            vn = 0.5 * (lo + hi)
        if abs(vn - v) <= 1e-15 * max(vn, 1e-300):
            v = vn
            break
        v = vn
    return sgn * v


@numba.njit(cache=True, nogil=True)
def _rhs(phi, q, lam, mu, p, vguess):
    v = _invert_flux(q, lam * lam * phi * phi, p, vguess)
    if v != 0.0:
        wfac = q / v
    else:
        w = lam * lam * phi * phi
        wfac = w ** (0.5 * (p - 2.0)) if w > 0.0 else 0.0
    return v, -mu * wfac * phi


@numba.njit(cache=True, nogil=True)
def _integrate(lam, p, omega, n, q0, store, phis, qs, vs):
    """RK4 in the flux variables (phi, q).

    Returns (phi(omega), index of the first interior node with phi <= 0 or -1).
    With ``store`` the trajectory is written into ``phis, qs, vs`` and the
    integration always runs to ``omega``.
    """
    mu = lam * (lam * (p - 1.0) + 2.0 - p)
    dt = omega / n
    phi = 0.0
    q = q0
    v = _invert_flux(q, 0.0, p, 0.0)
    first_cross = -1
    if store:
        phis[0] = phi
        qs[0] = q
        vs[0] = v
    for k in range(n):
        k1p, k1q = _rhs(phi, q, lam, mu, p, v)
        k2p, k2q = _rhs(phi + 0.5 * dt * k1p, q + 0.5 * dt * k1q, lam, mu, p, k1p)
        k3p, k3q = _rhs(phi + 0.5 * dt * k2p, q + 0.5 * dt * k2q, lam, mu, p, k2p)
        k4p, k4q = _rhs(phi + dt * k3p, q + dt * k3q, lam, mu, p, k3p)
        phi += dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        q += dt * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        v = _invert_flux(q, lam * lam * phi * phi, p, k4p)
        if store:
            phis[k + 1] = phi
            qs[k + 1] = q
            vs[k + 1] = v
        if phi <= 0.0 and k + 1 < n and first_cross < 0:
            first_cross = k + 1
            if not store:
                return phi, first_cross
    return phi, first_cross


_EMPTY = np.zeros(1)


def _terminal(lam, p, omega, n, q0=1.0):
    return _integrate(lam, p, omega, n, q0, False, _EMPTY, _EMPTY, _EMPTY)


def _crossed(lam, p, omega, n):
    phi_end, cross = _terminal(lam, p, omega, n)
    return cross >= 0 or phi_end <= 0.0, phi_end


@dataclass(frozen=True)
class ShootingResult:
    omega: float
    p: float
    lam: float
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    steps: int

    def summary(self) -> dict:
        return {
            "omega": self.omega, "p": self.p, "lambda": self.lam,
            "residual": self.residual, "iterations": self.iterations, "steps": self.steps,
            "phi_max": float(self.phi.max()),
        }


def shoot_eigen(omega: float, p: float, tol: float = 1e-10, n_steps: int = RK_STEPS,
                q0: float = 1.0) -> ShootingResult:
    """First eigenvalue on ``(0, omega)`` by shooting from ``phi(0)=0, q(0)=q0``.

    The scan runs over ``(lower_bound(p) + 1e-6, 8]``; the first node whose
    trajectory reaches zero before or at ``omega`` brackets the eigenvalue,
    which is then bisected on the sign of ``phi(omega)`` down to ``tol``.
    """
    _check(omega, p)
    if p >= 4.0:
        raise EigenError("shooting is validated for p in (1, 4)")
    lo_bound = lower_bound(p) + 1e-6
    grid = np.linspace(lo_bound, SCAN_UPPER, SCAN_NODES)
    if _crossed(grid[0], p, omega, n_steps)[0]:
        raise EigenError(f"eigenvalue below scan window for omega={omega}, p={p}")
    # coarse-step scan, then confirm the bracket at full resolution
    scan_steps = min(n_steps, SCAN_STEPS)
    k = 1
    while k < len(grid) and not _crossed(grid[k], p, omega, scan_steps)[0]:
        k += 1
    if k == len(grid):
        k -= 1
    while k < len(grid) - 1 and not _crossed(grid[k], p, omega, n_steps)[0]:
        k += 1
    while k > 1 and _crossed(grid[k - 1], p, omega, n_steps)[0]:
        k -= 1
    lo, hi = grid[k - 1], grid[k]
    if not _crossed(hi, p, omega, n_steps)[0]:
        raise EigenError(f"no sign change of phi(omega) in scan window for omega={omega}, p={p}")
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        phi_end, _ = _terminal(mid, p, omega, n_steps)
        if phi_end > 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    lam = 0.5 * (lo + hi)
    phis = np.empty(n_steps + 1)
    qs = np.empty(n_steps + 1)
    vs = np.empty(n_steps + 1)
    _integrate(lam, p, omega, n_steps, q0, True, phis, qs, vs)
    theta = np.linspace(0.0, omega, n_steps + 1)
    residual = float(phis[-1] / np.max(np.abs(phis)))
    return ShootingResult(omega=omega, p=p, lam=lam, theta=theta, phi=phis, q=qs, dphi=vs,
                          residual=residual, iterations=iterations, steps=n_steps)


def eigenfunction_H(res: ShootingResult) -> float:
    """Square root of the weighted Rayleigh quotient of the shooting eigenfunction.

    ``H = [int W^((p-2)/2) phi_theta^2 / int W^((p-2)/2) phi^2]^(1/2)`` with
    ``W = lam^2 phi^2 + phi_theta^2`` (trapezoid rule on the shooting nodes).
    """
    p, lam = res.p, res.lam
    w = lam ** 2 * res.phi ** 2 + res.dphi ** 2
    wf = np.zeros_like(w)
    pos = w > 0
    wf[pos] = w[pos] ** (0.5 * (p - 2.0))
    num = trapezoid(wf * res.dphi ** 2, res.theta)
    den = trapezoid(wf * res.phi ** 2, res.theta)
    if not den > 0:
        raise EigenError("degenerate eigenfunction (phi vanishes identically)")
    return float(np.sqrt(num / den))


# -- homogeneous cone functions ----------------------------------------------

@dataclass(frozen=True)
class ConeFunction:
    """``sign * scale * r**lam * phi(theta - start)`` on the arc ``(start, start + omega)``."""

    omega: float
    p: float
    lam: float
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    start: float = 0.0
    scale: float = 1.0
    sign: float = 1.0

    def _local_angle(self, x, y):
        ang = np.mod(np.arctan2(y, x) - self.start, TWO_PI)
        return ang

    def profile(self, ang):
        """Eigenfunction on the arc, zero outside it."""
        inside = (ang > 0.0) & (ang < self.omega)
        vals = np.interp(np.where(inside, ang, 0.0), self.theta, self.phi)
        return np.where(inside, vals, 0.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        return self.sign * self.scale * r ** self.lam * self.profile(self._local_angle(x, y))

    def angular_energy(self) -> float:
        """``int_S (lam^2 phi^2 + phi_theta^2)^(p/2) dtheta`` times ``scale**p``."""
        w = self.lam ** 2 * self.phi ** 2 + self.dphi ** 2
        return float(self.scale ** self.p * trapezoid(w ** (0.5 * self.p), self.theta))


def cone_function(omega: float, p: float, start: float = 0.0, scale: float = 1.0,
                  sign: float = 1.0, n_steps: int = RK_STEPS) -> ConeFunction:
    """Cone function for the arc ``(start, start + omega)``.

    For ``p == 2`` the eigenpair is analytic (``lam = pi/omega``,
    ``phi = sin(lam*theta)``); otherwise it comes from :func:`shoot_eigen`,
    rescaled so that ``max phi = 1``.
    """
    _check(omega, p)
    theta = np.linspace(0.0, omega, n_steps + 1)
    if p == 2.0:
        lam = math.pi / omega
        phi = np.sin(lam * theta)
        dphi = lam * np.cos(lam * theta)
    else:
        res = shoot_eigen(omega, p, n_steps=n_steps)
        lam = res.lam
        m = res.phi.max()
        phi = np.maximum(res.phi, 0.0) / m
        dphi = res.dphi / m
    return ConeFunction(omega=omega, p=p, lam=lam, theta=theta, phi=phi, dphi=dphi,
                        start=start, scale=scale, sign=sign)


def cone_pair(omega: float, p: float, scale_minus: float = 1.0) -> tuple[ConeFunction, ConeFunction]:
    """Positive cone function on ``(0, omega)`` and negative one on the complement."""
    _check(omega, p, allow_full=False)
    plus = cone_function(omega, p)
    minus = cone_function(TWO_PI - omega, p, start=omega, scale=scale_minus, sign=-1.0)
    return plus, minus


def cone_J(cf: ConeFunction, R: float) -> float:
    """``int_{B_R} |grad u|^p`` for a cone function, in closed polar form."""
    expo = cf.p * cf.lam - cf.p + 2.0
    if not expo > 0:
        raise EigenError("radial exponent p*lam - p + 2 must be positive")
    return R ** expo / expo * cf.angular_energy()


def cone_phi_p(cf1: ConeFunction, cf2: ConeFunction, R: float, p: float | None = None) -> float:
    if p is not None and not (p == cf1.p == cf2.p):
        raise EigenError("cone functions were built for a different exponent")
    return cone_J(cf1, R) * cone_J(cf2, R) / R ** 4


def cone_log_derivative(cf1: ConeFunction, cf2: ConeFunction) -> float:
    """``J1'/J1 + J2'/J2 - 4/R`` at ``R = 1``, i.e. ``p*(lam1 + lam2 - 2)``."""
    p = cf1.p
    return (p * cf1.lam - p + 2.0) + (p * cf2.lam - p + 2.0) - 4.0
