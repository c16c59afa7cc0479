"""Free boundary extraction, slab flatness and the flux-balance residual.

The free boundary is the part of the zero contour of ``u`` that bounds
``{u > 0}``: marching squares places a vertex on every cell edge whose end
nodes lie on opposite sides (``u > 0`` versus ``u <= 0``), and ambiguous
saddle cells are resolved with the cell-center average.

Slab height is the half-width of the thinnest slab through ``x0`` with
normal ``nu`` that contains ``Gamma`` inside ``B_r(x0)``; flatness minimizes
it over directions.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .energy import ProblemSpec
from .grid import ScalarField2D


class EmptyIntersection(ValueError):
    """Gamma does not meet the requested ball."""


class InsufficientRoom(ValueError):
    """No free-boundary point has room for the one-sided flux stencils."""


# -- extraction --------------------------------------------------------------

@dataclass(frozen=True)
class FreeBoundary:
    """Zero contour bounding ``{u > 0}`` as a list of polylines (k x 2 arrays)."""

    polylines: list[np.ndarray] = field(default_factory=list)
    closed: list[bool] = field(default_factory=list)
    h: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.polylines

    @property
    def vertices(self) -> np.ndarray:
        if self.empty:
            return np.zeros((0, 2))
        return np.vstack([pl[:-1] if c else pl for pl, c in zip(self.polylines, self.closed)])

    @property
    def segments(self) -> np.ndarray:
        """All segments as an ``(m, 2, 2)`` array of endpoint pairs."""
        segs = [np.stack([pl[:-1], pl[1:]], axis=1) for pl in self.polylines if len(pl) > 1]
        return np.concatenate(segs) if segs else np.zeros((0, 2, 2))

    def length(self) -> float:
        s = self.segments
        return float(np.sum(np.linalg.norm(s[:, 1] - s[:, 0], axis=1)))

    def nearest_vertex(self, x0) -> np.ndarray:
        v = self.vertices
        if not len(v):
            raise EmptyIntersection("free boundary is empty")
        k = int(np.argmin(np.sum((v - np.asarray(x0, dtype=float)) ** 2, axis=1)))
        return v[k].copy()

    def to_csv(self, path) -> Path:
        path = Path(path)
        rows = [(k, x, y) for k, pl in enumerate(self.polylines) for x, y in pl]
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        np.savetxt(path, arr, delimiter=",", header="polyline,x,y", comments="",
                   fmt=("%d", "%.17g", "%.17g"))
        return path

    @classmethod
    def from_segments(cls, segments, h: float = 0.0) -> "FreeBoundary":
        """Open polylines straight from vertex lists (used for synthetic geometry)."""
        pls = [np.asarray(s, dtype=float) for s in segments]
        closed = [bool(len(p) > 2 and np.allclose(p[0], p[-1])) for p in pls]
        return cls(pls, closed, h)


# corner order in a cell: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
# edge k joins corners k and (k+1) % 4
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


def _edge_key(i: int, j: int, k: int) -> tuple:
    # horizontal edges ('x', i, j) join (i,j)-(i+1,j); vertical ('y', i, j) join (i,j)-(i,j+1)
    if k == 0:
        return ("x", i, j)
    if k == 1:
        return ("y", i + 1, j)
    if k == 2:
        return ("x", i, j + 1)
    return ("y", i, j)


def _cell_pairs(pos: list[bool], center_pos: bool) -> list[tuple[int, int]]:
    """Edge pairs joined inside one cell, given corner phases."""
    cut = [k for k in range(4) if pos[_EDGE_CORNERS[k][0]] != pos[_EDGE_CORNERS[k][1]]]
    if len(cut) == 2:
        return [(cut[0], cut[1])]
    if len(cut) == 4:
        # saddle: connect around the corners whose phase differs from the center
        if pos[0] == center_pos:
            return [(0, 1), (2, 3)]      # cut off corners 1 and 3
        return [(3, 0), (1, 2)]          # cut off corners 0 and 2
    return []


def extract_free_boundary(u: ScalarField2D) -> FreeBoundary:
    """Marching-squares contour of ``u = 0`` between ``{u > 0}`` and ``{u <= 0}``."""
    v = u.values
    P = v > 0.0
    n_pos = P[:-1, :-1].astype(int) + P[1:, :-1] + P[1:, 1:] + P[:-1, 1:]
    mixed = np.argwhere((n_pos > 0) & (n_pos < 4))
    if not len(mixed):
        return FreeBoundary([], [], u.h)
    x0, y0 = u.origin
    h = u.h
    points: dict[tuple, tuple[float, float]] = {}
    adj: dict[tuple, list[tuple]] = {}

    def point(key):
        if key not in points:
            d, i, j = key
            i2, j2 = (i + 1, j) if d == "x" else (i, j + 1)
            a, b = v[i, j], v[i2, j2]
            t = a / (a - b)          # a and b differ in phase, so a != b
            points[key] = (x0 + h * (i + t * (i2 - i)), y0 + h * (j + t * (j2 - j)))
        return key

    for i, j in mixed:
        i = int(i)
        j = int(j)
        corners = [P[i, j], P[i + 1, j], P[i + 1, j + 1], P[i, j + 1]]
        center = 0.25 * (v[i, j] + v[i + 1, j] + v[i + 1, j + 1] + v[i, j + 1]) > 0.0
        for ka, kb in _cell_pairs(corners, center):
            a = point(_edge_key(i, j, ka))
            b = point(_edge_key(i, j, kb))
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)

    polylines, closed = [], []
    seen: set = set()

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adj[cur] if k != prev and k not in seen]
            if not nxt:
                if len(chain) > 2 and start in adj[cur] and prev is not None:
                    chain.append(start)
                return chain
            prev, cur = cur, nxt[0]
            seen.add(cur)
            chain.append(cur)

    # open chains start at degree-one vertices (domain boundary)
    for key in sorted(k for k, nb in adj.items() if len(nb) == 1):
        if key not in seen:
            chain = walk(key)
            polylines.append(np.array([points[k] for k in chain]))
            closed.append(False)
    for key in sorted(adj):
        if key not in seen:
            chain = walk(key)
            polylines.append(np.array([points[k] for k in chain]))
            closed.append(chain[0] == chain[-1] and len(chain) > 2)
    return FreeBoundary(polylines, closed, u.h)


# -- slab geometry -----------------------------------------------------------

def _clipped_points(gamma: FreeBoundary, x0, r: float) -> np.ndarray:
    """Endpoints (relative to ``x0``) of the pieces of Gamma inside the closed ball."""
    if not r > 0:
        raise ValueError("radius must be positive")
    segs = gamma.segments - np.asarray(x0, dtype=float)
    if not len(segs):
        raise EmptyIntersection("free boundary is empty")
    a = segs[:, 0]
    d = segs[:, 1] - a
    A = np.sum(d * d, axis=1)
    B = 2.0 * np.sum(a * d, axis=1)
    C = np.sum(a * a, axis=1) - r * r
    disc = B * B - 4.0 * A * C
    ok = (disc >= 0) & (A > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    Asafe = np.where(A > 0, A, 1.0)
    t0 = np.clip((-B - sq) / (2 * Asafe), 0.0, 1.0)
    t1 = np.clip((-B + sq) / (2 * Asafe), 0.0, 1.0)
    ok &= t1 > t0
    # degenerate (zero-length) segments count if their point is inside
    pts_deg = a[(A == 0) & (C <= 0)]
    pts = np.concatenate([a[ok] + t0[ok, None] * d[ok], a[ok] + t1[ok, None] * d[ok], pts_deg])
    if not len(pts):
        raise EmptyIntersection(f"free boundary misses B_r({tuple(np.asarray(x0).tolist())}), r={r}")
    return pts


def _support(pts: np.ndarray, theta) -> np.ndarray:
    theta = np.atleast_1d(theta)
    return np.max(np.abs(pts[:, 0, None] * np.cos(theta) + pts[:, 1, None] * np.sin(theta)), axis=0)


def slab_height(gamma: FreeBoundary, x0, r: float, nu) -> float:
    """``sup |(x - x0) . nu|`` over ``Gamma`` inside ``B_r(x0)`` (exact for polylines)."""
    nu = np.asarray(nu, dtype=float)
    if abs(np.hypot(*nu) - 1.0) > 1e-9:
        raise ValueError("nu must be a unit vector")
    pts = _clipped_points(gamma, x0, r)
    return float(np.max(np.abs(pts @ nu)))


@dataclass(frozen=True)
class SlabFlatness:
    x0: tuple[float, float]
    r: float
    h: float
    nu: tuple[float, float]
    table: np.ndarray = field(repr=False)    # columns: angle, h_min

    def to_dict(self, h0: float | None = None) -> dict:
        out = {"x0": list(self.x0), "r": self.r, "h": self.h, "h_over_r": self.h / self.r,
               "nu": list(self.nu)}
        if h0 is not None:
            out["h0"] = h0
            out["verdict"] = classify_flatness(self, h0).value
        return out


def flatness(gamma: FreeBoundary, x0, r: float, n_dirs: int = 64, n_polish: int = 4) -> SlabFlatness:
    """``h(x0, r) = inf_nu h_min``: direction sweep, then bounded polish of the best seeds."""
    if n_dirs < 64:
        raise ValueError("flatness needs at least 64 directions")
    pts = _clipped_points(gamma, x0, r)
    # nu and -nu give the same slab: half circle suffices
    theta = np.pi * np.arange(n_dirs) / n_dirs
    hs = _support(pts, theta)
    step = np.pi / n_dirs
    best_t, best_h = float(theta[np.argmin(hs)]), float(hs.min())
    for k in np.argsort(hs)[:n_polish]:
        res = minimize_scalar(lambda t: float(_support(pts, t)[0]),
                              bounds=(theta[k] - step, theta[k] + step), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, r)})
        if res.fun < best_h:
            best_t, best_h = float(res.x), float(res.fun)
    table = np.column_stack([theta, hs])
    x0 = (float(x0[0]), float(x0[1]))
    return SlabFlatness(x0=x0, r=float(r), h=min(best_h, float(r)),
                        nu=(math.cos(best_t), math.sin(best_t)), table=table)


class PointClass(enum.Enum):
    FLAT = "Flat"
    NONFLAT = "NonFlat"


def classify_flatness(sf: SlabFlatness, h0: float) -> PointClass:
    return PointClass.NONFLAT if sf.h >= h0 * sf.r else PointClass.FLAT


def classify_point(gamma: FreeBoundary, x0, r: float, h0: float, n_dirs: int = 64) -> PointClass:
    """NonFlat iff ``h(x0, r) >= h0 * r``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if not 0 < h0 < 1:
        raise ValueError("h0 must lie in (0, 1)")
    return classify_flatness(flatness(gamma, x0, r, n_dirs), h0)


# -- flux balance ------------------------------------------------------------

FLUX_OFFSETS = (2.0, 3.0, 4.0)


@dataclass
class FluxBalance:
    points: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    slope_plus: np.ndarray = field(repr=False)
    slope_minus: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    target: float = 0.0          # Lambda / (p - 1)
    skipped_corner: int = 0
    skipped_room: int = 0
    skipped_phase: int = 0

    def quantiles(self) -> dict:
        g = self.G
        a = np.abs(g)
        return {"n": int(g.size), "median": float(np.median(g)), "q10": float(np.quantile(g, 0.1)),
                "q90": float(np.quantile(g, 0.9)), "median_abs": float(np.median(a)),
                "max_abs": float(a.max()), "relative_median_abs": float(np.median(a) / self.target),
                "skipped": {"corner": self.skipped_corner, "room": self.skipped_room,
                            "phase": self.skipped_phase}}


def _tangents(pl: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        core = pl[:-1]
        t = np.roll(core, -1, axis=0) - np.roll(core, 1, axis=0)
        return np.vstack([t, t[:1]])
    t = np.empty_like(pl)
    t[1:-1] = pl[2:] - pl[:-2]
    t[0] = pl[1] - pl[0]
    t[-1] = pl[-1] - pl[-2]
    return t


def flux_balance(u: ScalarField2D, gamma: FreeBoundary, spec: ProblemSpec, stride: int = 1,
                 corner_tol: float = 0.2) -> FluxBalance:
    """Residual ``G = (u+_nu)^p - (u-_nu)^p - Lambda/(p-1)`` at free-boundary vertices.

    One-sided normal slopes are least-squares slopes through samples of
    ``u`` at offsets ``2h, 3h, 4h`` along ``+nu`` (into ``{u > 0}``) and of
    ``-u`` along ``-nu``.  Vertices where Gamma bends (local flatness at
    radius ``4h`` above ``corner_tol``) and vertices without room for the
    stencil are skipped.
    """
    p = spec.p
    h = u.h
    offs = np.asarray(FLUX_OFFSETS) * h
    dc = offs - offs.mean()
    w = dc / np.sum(dc * dc)         # least-squares slope weights
    pts, nrm, sp, sm = [], [], [], []
    n_corner = n_room = n_phase = 0
    reach = offs[-1]
    for pl, closed in zip(gamma.polylines, gamma.closed):
        if len(pl) < 3:
            continue
        tang = _tangents(pl, closed)
        idx = range(0, len(pl) - 1 if closed else len(pl), stride)
        for k in idx:
            x = pl[k]
            t = tang[k]
            tn = math.hypot(*t)
            if tn == 0:
                n_corner += 1
                continue
            nu = np.array([-t[1], t[0]]) / tn
            if not u.contains([x[0] - reach, x[0] + reach], [x[1] - reach, x[1] + reach]):
                n_room += 1
                continue
            try:
                if flatness(gamma, x, reach).h > corner_tol * reach:
                    n_corner += 1
                    continue
            except EmptyIntersection:
                n_corner += 1
                continue
            fwd = u.interpolate(x[0] + offs * nu[0], x[1] + offs * nu[1])
            if fwd[0] <= 0:
                nu = -nu
                fwd = u.interpolate(x[0] + offs * nu[0], x[1] + offs * nu[1])
            bwd = -u.interpolate(x[0] - offs * nu[0], x[1] - offs * nu[1])
            if np.any(fwd <= 0) or np.any(bwd < 0):
                n_phase += 1
                continue
            pts.append(x)
            nrm.append(nu)
            sp.append(float(w @ fwd))
            sm.append(float(w @ bwd))
    if not pts:
        raise InsufficientRoom("no free-boundary vertex admits one-sided stencils")
    sp = np.maximum(np.array(sp), 0.0)
    sm = np.maximum(np.array(sm), 0.0)
    target = spec.Lambda / (p - 1.0)
    G = sp ** p - sm ** p - target
    return FluxBalance(points=np.array(pts), normals=np.array(nrm), slope_plus=sp, slope_minus=sm,
                       G=G, target=target, skipped_corner=n_corner, skipped_room=n_room,
                       skipped_phase=n_phase)


def flatness_report(gamma: FreeBoundary, x0, radii, h0: float | None = None, n_dirs: int = 64) -> list[dict]:
    return [flatness(gamma, x0, r, n_dirs).to_dict(h0) for r in radii]


def write_report(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path
