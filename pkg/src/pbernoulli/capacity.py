"""Condenser ell-capacity of planar sets and the probes that use it.

    cap_ell(E, Q) = inf { int_Q |grad v|^ell : v = 1 on E, v = 0 on dQ }

The minimization runs on the same bilinear-cell discretization as the
rest of the package.  For ``ell <= 2`` the map ``|g|^2 -> (|g|^2 + eps^2)^(ell/2)``
is concave, so freezing the cell weights at the current iterate gives a
quadratic majorant of the energy; minimizing it (one sparse solve) is a
descent step, and iterating converges monotonically.  Values are clamped to
``[0, 1]`` after every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .grid import Region, ScalarField2D, cell_average, gradient_field, region_integral

log = logging.getLogger(__name__)


class CapacityNonConvergence(RuntimeError):
    pass


@dataclass
class CapacityEstimate:
    E: np.ndarray = field(repr=False)          # cell mask
    Q: str                                     # "square" or "disk"
    ell: float
    value: float
    potential: ScalarField2D = field(repr=False)
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {"Q": self.Q, "ell": self.ell, "value": self.value, "iterations": self.iterations,
                "converged": self.converged, "E_cells": int(self.E.sum()),
                "h": self.potential.h, "n": int(self.E.shape[0])}


def disk_mask(n: int, r0: float, center=(0.0, 0.0), half_side: float = 1.0) -> np.ndarray:
    """Cells of the ``n x n`` grid on ``[-half_side, half_side]^2`` whose centers lie in the disk."""
    h = 2.0 * half_side / n
    c = -half_side + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(c, c, indexing="ij")
    return (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= r0 * r0


def _ell_energy(V: np.ndarray, h: float, ell: float, eps: float = 0.0) -> float:
    a, b = V[:-1, :-1], V[1:, :-1]
    c, d = V[:-1, 1:], V[1:, 1:]
    g2 = ((d - a) ** 2 + (c - b) ** 2) / (2.0 * h * h)
    return float(np.sum((g2 + eps * eps) ** (0.5 * ell)) * h * h)


def _diag_laplacian(weights: np.ndarray) -> sparse.csr_matrix:
    """Matrix of ``sum_cells w_c ((d-a)^2 + (c-b)^2) / 2`` on all nodes."""
    nxc, nyc = weights.shape
    nx, ny = nxc + 1, nyc + 1
    idx = np.arange(nx * ny).reshape(nx, ny)
    w = weights.ravel()
    rows, cols, vals = [], [], []
    for p_, q_ in ((idx[:-1, :-1], idx[1:, 1:]), (idx[1:, :-1], idx[:-1, 1:])):
        p_, q_ = p_.ravel(), q_.ravel()
        rows += [p_, q_, p_, q_]
        cols += [p_, q_, q_, p_]
        vals += [w, w, -w, -w]
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(nx * ny, nx * ny))


def variational_capacity(E: np.ndarray, h: float, ell: float = 1.5, Q: str = "square",
                         tol: float = 1e-8, max_iter: int = 200, eps: float | None = None,
                         origin=None) -> CapacityEstimate:
    """Condenser capacity of the cell set ``E`` in the grid square (or its inscribed disk).

    ``E`` is a boolean ``(n, n)`` cell mask; the potential is fixed to 1 on
    every corner of an ``E`` cell and to 0 on the boundary of ``Q``.
    """
    E = np.asarray(E, dtype=bool)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise ValueError("E must be a square boolean cell mask")
    if not 1 < ell <= 2:
        raise ValueError("ell must lie in (1, 2]")
    if Q not in ("square", "disk"):
        raise ValueError("Q must be 'square' or 'disk'")
    if not E.any():
        raise ValueError("E is empty")
    n = E.shape[0]
    L = 0.5 * n * h
    origin = (-L, -L) if origin is None else origin
    one = np.zeros((n + 1, n + 1), dtype=bool)
    one[:-1, :-1] |= E
    one[1:, :-1] |= E
    one[:-1, 1:] |= E
    one[1:, 1:] |= E
    zero = np.zeros_like(one)
    zero[0, :] = zero[-1, :] = zero[:, 0] = zero[:, -1] = True
    if Q == "disk":
        x = origin[0] + h * np.arange(n + 1)
        y = origin[1] + h * np.arange(n + 1)
        X, Y = np.meshgrid(x, y, indexing="ij")
        cx, cy = origin[0] + L, origin[1] + L
        zero |= (X - cx) ** 2 + (Y - cy) ** 2 >= L * L
    if np.any(one & zero):
        raise ValueError("E touches the boundary of Q")
    fixed = one | zero
    free = ~fixed
    V = one.astype(float)
    eps = (1e-3 if ell < 2 else 0.0) if eps is None else eps
    energy = _ell_energy(V, h, ell, eps)
    it = 0
    converged = False
    fi = np.flatnonzero(free.ravel())
    fx = np.flatnonzero(fixed.ravel())
    for it in range(1, max_iter + 1):
        a, b = V[:-1, :-1], V[1:, :-1]
        c, d = V[:-1, 1:], V[1:, 1:]
        g2 = ((d - a) ** 2 + (c - b) ** 2) / (2.0 * h * h)
        # majorant weight: d/d(g2) of (g2 + eps^2)^(ell/2), times h^2 / (2 h^2)
        w = 0.5 * ell * (g2 + eps * eps) ** (0.5 * ell - 1.0)
        A = _diag_laplacian(w)
        Aff = A[fi][:, fi]
        rhs = -A[fi][:, fx] @ V.ravel()[fx]
        Vn = V.copy().ravel()
        Vn[fi] = spsolve(Aff.tocsc(), rhs)
        Vn = np.clip(Vn, 0.0, 1.0).reshape(V.shape)
        e_new = _ell_energy(Vn, h, ell, eps)
        change = energy - e_new
        V, energy = Vn, min(e_new, energy)
        if ell == 2 or abs(change) <= tol * max(energy, 1e-300):
            converged = True
            break
    value = _ell_energy(V, h, ell, 0.0)
    pot = ScalarField2D(origin, h, V)
    if not converged:
        log.warning("capacity iteration stopped at %d iterations", it)
    return CapacityEstimate(E=E, Q=Q, ell=ell, value=value, potential=pot, iterations=it,
                            converged=converged)


def _upscale(mask: np.ndarray, s: int) -> np.ndarray:
    return np.kron(mask, np.ones((s, s), dtype=bool)).astype(bool)


def capacity_scaling_check(E: np.ndarray, h: float, ell: float, s: int, Q: str = "square",
                           **kw) -> float:
    """``cap(sE, sQ) / (s^(2-ell) cap(E, Q))`` with both sets resolved at the same spacing."""
    if int(s) != s or s < 1:
        raise ValueError("scale factor must be a positive integer")
    s = int(s)
    base = variational_capacity(E, h, ell, Q, **kw).value
    if s == 1:
        return 1.0
    big = variational_capacity(_upscale(E, s), h, ell, Q, **kw).value
    return big / (s ** (2.0 - ell) * base)


def lebesgue_lower_bound_ratio(E: np.ndarray, h: float, ell: float, Q: str = "square", **kw) -> float:
    """``cap_ell(E, Q) / |E|^(1 - ell/2)``."""
    cap = variational_capacity(E, h, ell, Q, **kw).value
    area = float(np.count_nonzero(E)) * h * h
    return cap / area ** (1.0 - 0.5 * ell)


def projection_length_lower_bound(polylines, xi1, xi2) -> float:
    """Length of the projection of the polyline(s) onto the line through ``xi1`` and ``xi2``."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    d = xi2 - xi1
    nd = float(np.hypot(*d))
    if nd == 0:
        raise ValueError("anchor points coincide")
    e = d / nd
    if isinstance(polylines, np.ndarray) and polylines.ndim == 2:
        polylines = [polylines]
    intervals = []
    for pl in polylines:
        t = (np.asarray(pl, dtype=float) - xi1) @ e
        intervals.append((float(t.min()), float(t.max())))
    intervals.sort()
    total, cur_lo, cur_hi = 0.0, *intervals[0]
    for lo, hi in intervals[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    return total + cur_hi - cur_lo


def zero_cells(v: ScalarField2D, atol: float = 0.0) -> np.ndarray:
    """Cells on whose four corners ``|v| <= atol``."""
    z = np.abs(v.values) <= atol
    return z[:-1, :-1] & z[1:, :-1] & z[:-1, 1:] & z[1:, 1:]


def poincare_ratio(v: ScalarField2D, D: Region, ell: float, atol: float = 0.0, **kw) -> float:
    """``int_D |v|^ell * cap_ell({v = 0} n D, 2D) / int_D |grad v|^ell``.

    The capacity is taken in the concentric doubled square (or disk), since
    the zero set may reach the boundary of ``D`` itself.
    """
    if D.kind not in ("square", "ball"):
        raise ValueError("D must be a square or a disk")
    gx, gy = gradient_field(v)
    grad_int = region_integral((gx * gx + gy * gy) ** (0.5 * ell), v, D)
    if not grad_int > 0:
        raise ValueError("gradient integral vanishes on D")
    val_int = region_integral(cell_average(np.abs(v.values) ** ell), v, D)
    Z = zero_cells(v, atol)
    X, Y = v.cell_centers()
    Z &= D.contains(X, Y)
    if not Z.any():
        raise ValueError("{v = 0} has no cells in D")
    h = v.h
    # doubled domain on the same lattice, centered on D
    m = int(math.ceil(2.0 * D.size / h))
    n2 = 2 * m
    cx, cy = D.center
    o2 = (cx - m * h, cy - m * h)
    ii, jj = np.nonzero(Z)
    xi = np.rint((X[ii, jj] - 0.5 * h - o2[0]) / h).astype(int)
    yj = np.rint((Y[ii, jj] - 0.5 * h - o2[1]) / h).astype(int)
    ok = (xi >= 0) & (xi < n2) & (yj >= 0) & (yj < n2)
    E2 = np.zeros((n2, n2), dtype=bool)
    E2[xi[ok], yj[ok]] = True
    cap = variational_capacity(E2, h, ell, "square" if D.kind == "square" else "disk",
                               origin=o2, **kw).value
    return val_int * cap / grad_int
