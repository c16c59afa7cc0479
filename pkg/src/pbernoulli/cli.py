"""Command-line front end.

Exit codes: 0 success, 1 a reported check failed, 2 bad configuration or
arguments, 3 numerical failure (non-convergence, failed root search).
Every command writes ``summary.json`` into its output directory.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .acf import phi_p, phi_profile, tripling_check
from .capacity import CapacityNonConvergence, variational_capacity
from .eigen import EigenError, closed_form_lambda, cone_pair, cone_phi_p, cone_spectrum, shoot_eigen
from .energy import DATUM_FAMILIES, Datum, ProblemSpec, energy_exact
from .freeboundary import (EmptyIntersection, FreeBoundary, InsufficientRoom, extract_free_boundary,
                           flatness)
from .grid import RegionOutsideGrid, ScalarField2D
from .minimize import MinimizeConfig, NonConvergence, minimize

log = logging.getLogger("pbernoulli")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
WORKERS_ENV = "PBERNOULLI_MAX_WORKERS"


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class ExperimentManifest:
    command: str
    config: str | None
    out: str
    seed: int = 0
    resolution: int | None = None
    grids: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.resolution
        if n is not None and not (64 <= n <= 1024 and n & (n - 1) == 0):
            raise ConfigError(f"resolution must be a power of two in [64, 1024], got {n}")

    def config_hash(self, extra: dict | None = None) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in ("out", "config")}
        if self.config:
            payload["config_text"] = Path(self.config).read_text()
        payload.update(extra or {})
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


# -- config ------------------------------------------------------------------

_MIN_KEYS = {f for f in MinimizeConfig.__dataclass_fields__}
_SPEC_KEYS = {"p", "lambda_plus", "lambda_minus", "Lambda", "half_side", "center", "datum"}


def _float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def load_config(path) -> tuple[ProblemSpec, MinimizeConfig]:
    """Parse a ``key = value`` file (``#`` comments, ``datum.<param>`` for datum parameters)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    kv = {k.strip(): v.strip() for k, v in parser["run"].items()}
    datum_params = {}
    spec_kw, min_kw = {}, {}
    for key, val in kv.items():
        if key.startswith("datum."):
            name = key[len("datum."):]
            datum_params[name] = val if name in ("expr", "path") else _float(key, val)
        elif key in _SPEC_KEYS:
            spec_kw[key] = val
        elif key in _MIN_KEYS:
            if key == "delta_end" and val.lower() in ("none", "h"):
                min_kw[key] = None
            elif key in ("n", "stages", "max_iter", "fill_iter"):
                min_kw[key] = int(_float(key, val))
            else:
                min_kw[key] = _float(key, val)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "p" not in spec_kw:
        raise ConfigError("config must set p")
    family = spec_kw.get("datum", "two_plane")
    if family not in DATUM_FAMILIES:
        raise ConfigError(f"unknown datum family {family!r}")
    if family == "table" and "path" in datum_params:
        datum_params["path"] = str((path.parent / datum_params["path"]).resolve())
    common = {"datum": Datum(family, datum_params),
              "half_side": _float("half_side", spec_kw.get("half_side", "1.0"))}
    if "center" in spec_kw:
        parts = [s for s in spec_kw["center"].replace(",", " ").split() if s]
        if len(parts) != 2:
            raise ConfigError("center must have two coordinates")
        common["center"] = (_float("center", parts[0]), _float("center", parts[1]))
    p = _float("p", spec_kw["p"])
    try:
        if "Lambda" in spec_kw:
            spec = ProblemSpec.from_Lambda(p, _float("Lambda", spec_kw["Lambda"]),
                                           _float("lambda_minus", spec_kw.get("lambda_minus", "1.0")),
                                           **common)
        else:
            if "lambda_plus" not in spec_kw or "lambda_minus" not in spec_kw:
                raise ConfigError("set lambda_plus and lambda_minus, or Lambda")
            spec = ProblemSpec(p, _float("lambda_plus", spec_kw["lambda_plus"]),
                               _float("lambda_minus", spec_kw["lambda_minus"]), **common)
        cfg = MinimizeConfig(**min_kw)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return spec, cfg


# -- helpers -----------------------------------------------------------------

def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{what}: empty list")
    return vals


def _point(text: str) -> tuple[float, float]:
    vals = _floats(text, "point")
    if len(vals) != 2:
        raise ConfigError(f"point needs two coordinates, got {text!r}")
    return vals[0], vals[1]


def _load_field(path) -> ScalarField2D:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"field file not found: {path}")
    try:
        return ScalarField2D.from_csv(path)
    except (ValueError, OSError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _finish(man: ExperimentManifest, result: dict, checks: list[dict], artifacts: list[Path],
            failure: str | None = None, extra_hash: dict | None = None) -> int:
    out = Path(man.out)
    if failure:
        status = "numerical_failure"
    elif all(c["passed"] for c in checks):
        status = "ok"
    else:
        status = "check_failed"
    summary = {"command": man.command, "version": __version__,
               "config_hash": man.config_hash(extra_hash), "seed": man.seed, "status": status,
               "checks": checks, "result": result,
               "artifacts": sorted(p.name for p in artifacts)}
    if failure:
        summary["error"] = failure
    (out / "summary.json").write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
    for c in checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
    return {"ok": EXIT_OK, "check_failed": EXIT_CHECK, "numerical_failure": EXIT_NUMERIC}[status]


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory not writable: {out}")
    return out


def max_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    cap = os.cpu_count() or 1
    if env is None:
        return cap
    try:
        return max(1, min(cap, int(env)))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


def _fan_out(fn, items: list) -> list:
    """Map ``fn`` over ``items``; results come back in input order."""
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- commands ----------------------------------------------------------------

def cmd_minimize(a) -> int:
    if a.config is None or not Path(a.config).is_file():
        raise ConfigError(f"config file not found: {a.config}")
    spec, cfg = load_config(a.config)
    if a.n is not None:
        cfg = MinimizeConfig(**{**asdict(cfg), "n": a.n})
    man = ExperimentManifest("minimize", a.config, a.out, a.seed, cfg.n)
    out = _outdir(a.out)
    res = minimize(spec, cfg)
    field_csv, header = res.u.to_csv(out / "field.csv")
    hist = []
    for k, ((eps, delta), energies) in enumerate(zip(res.schedule, res.history)):
        hist += [(k, i, eps, delta, e) for i, e in enumerate(energies)]
    hist_csv = _write_csv(out / "history.csv", ("stage", "iteration", "eps", "delta", "energy"), hist)
    gamma = extract_free_boundary(res.u)
    fb_csv = gamma.to_csv(out / "free_boundary.csv")
    monotone = all(all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(h, h[1:]))
                   for h in res.history)
    result = {"spec": spec.to_dict(), **res.summary(), "energy_exact": energy_exact(res.u, spec),
              "free_boundary_polylines": len(gamma.polylines)}
    checks = [{"name": "energy non-increasing per stage", "passed": monotone},
              {"name": "final-stage gradient tolerance", "passed": res.converged}]
    failure = None if res.converged else f"descent stopped with |g| = {res.grad_norm:.3e}"
    return _finish(man, result, checks, [field_csv, header, hist_csv, fb_csv], failure)


def cmd_probe_acf(a) -> int:
    u = _load_field(a.field)
    radii = _floats(a.radii, "radii")
    man = ExperimentManifest("probe acf", None, a.out, a.seed,
                             grids={"field": Path(a.field).read_text(), "radii": radii, "p": a.p,
                                    "x0": a.x0})
    out = _outdir(a.out)
    gamma = extract_free_boundary(u)
    if a.x0 == "auto":
        xmin, xmax, ymin, ymax = u.bounds
        target = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax))
    else:
        target = _point(a.x0)
    x0 = tuple(gamma.nearest_vertex(target)) if not gamma.empty else target
    try:
        rep = phi_profile(u, x0, radii, a.p, gamma)
    except RegionOutsideGrid as exc:
        raise ConfigError(str(exc)) from None
    prof = _write_csv(out / "profile.csv", ("r", "phi", "phi_3r", "tripling_holds", "h_over_r"),
                      rep.to_csv_rows())
    checks = [{"name": f"tripling r={v.r:g}", "passed": v.holds} for v in rep.verdicts]
    return _finish(man, rep.to_dict(), checks, [prof])


def _load_polyline(path) -> FreeBoundary:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"polyline file not found: {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ConfigError("polyline CSV needs columns polyline,x,y")
    ids = data[:, 0].astype(int)
    return FreeBoundary.from_segments([data[ids == k, 1:] for k in np.unique(ids)])


def cmd_probe_flatness(a) -> int:
    if (a.field is None) == (a.polyline is None):
        raise ConfigError("give exactly one of --field or --polyline")
    if a.field is not None:
        gamma = extract_free_boundary(_load_field(a.field))
        src = Path(a.field).read_text()
    else:
        gamma = _load_polyline(a.polyline)
        src = Path(a.polyline).read_text()
    radii = _floats(a.radii, "radii")
    if a.h0 is not None and not 0 < a.h0 < 1:
        raise ConfigError("h0 must lie in (0, 1)")
    if a.n_dirs < 64:
        raise ConfigError("n-dirs must be at least 64")
    man = ExperimentManifest("probe flatness", None, a.out, a.seed,
                             grids={"source": src, "radii": radii, "h0": a.h0, "x0": a.x0,
                                    "n_dirs": a.n_dirs})
    out = _outdir(a.out)
    x0 = gamma.nearest_vertex(_point(a.x0)) if a.x0 != "none" else None
    if x0 is None:
        raise ConfigError("x0 required")
    try:
        entries = [flatness(gamma, x0, r, a.n_dirs) for r in sorted(radii)]
    except EmptyIntersection as exc:
        raise ConfigError(str(exc)) from None
    rows = [(e.r, e.h, e.h / e.r, e.nu[0], e.nu[1]) for e in entries]
    table = _write_csv(out / "flatness.csv", ("r", "h", "h_over_r", "nu_x", "nu_y"), rows)
    hs = [e.h for e in entries]
    checks = [{"name": "h <= r", "passed": all(e.h <= e.r for e in entries)},
              {"name": "h non-decreasing in r",
               "passed": all(b >= a_ - 1e-9 for a_, b in zip(hs, hs[1:]))}]
    result = {"entries": [e.to_dict(a.h0) for e in entries]}
    return _finish(man, result, checks, [table])


def _check_omega_p(omega: float, p: float, full: bool = True):
    upper = 2 * math.pi
    if not (0 < omega < upper or (full and omega == upper)):
        raise ConfigError(f"omega must lie in (0, 2pi{']' if full else ')'}, got {omega}")
    if not 1 < p < 4:
        raise ConfigError(f"p must lie in (1, 4), got {p}")


def _omega_grid(text: str) -> list[float]:
    if "," not in text:
        try:
            n = int(text)
        except ValueError:
            raise ConfigError(f"omega grid: expected a count or a list, got {text!r}") from None
        if n < 1:
            raise ConfigError("omega grid count must be positive")
        return [2 * math.pi * k / (n + 1) for k in range(1, n + 1)]
    return _floats(text, "omega grid")


def _shoot_lambda(args) -> float:
    omega, p = args
    return shoot_eigen(omega, p).lam


def cmd_eigen_table(a) -> int:
    omegas = _omega_grid(a.omega_grid)
    ps = _floats(a.p_grid if a.p_grid is not None else str(a.p), "p grid")
    for w in omegas:
        for p in ps:
            _check_omega_p(w, p, full=False)
    man = ExperimentManifest("eigen table", None, a.out, a.seed,
                             grids={"omega": omegas, "p": ps, "shoot": a.shoot})
    out = _outdir(a.out)
    rows, worst_id, min_sum = [], 0.0, math.inf
    pairs = [(w, p) for p in ps for w in omegas]
    shot = _fan_out(_shoot_lambda, pairs) if a.shoot else [None] * len(pairs)
    for (w, p), lam_s in zip(pairs, shot):
        cs = cone_spectrum(w, p)
        worst_id = max(worst_id, abs(cs.identity_residual))
        min_sum = min(min_sum, cs.sum)
        row = [w, p, cs.rho, cs.s, cs.t, cs.lambda1, cs.lambda2, cs.sum, cs.identity_residual]
        if a.shoot:
            row.append(lam_s)
        rows.append(row)
    header = ["omega", "p", "rho", "s", "t", "lambda1", "lambda2", "char_sum", "identity_residual"]
    if a.shoot:
        header.append("lambda1_shoot")
    table = _write_csv(out / "eigen_table.csv", header, rows)
    checks = [{"name": "characteristic sum >= 2", "passed": min_sum >= 2 - 1e-12},
              {"name": "identity residual <= 1e-10", "passed": worst_id <= 1e-10}]
    if a.shoot:
        err = max(abs(r[-1] - r[5]) for r in rows)
        checks.append({"name": "shooting matches closed form", "passed": err <= 1e-6})
    return _finish(man, {"rows": len(rows), "min_char_sum": min_sum,
                         "max_identity_residual": worst_id}, checks, [table])


def cmd_eigen_shoot(a) -> int:
    _check_omega_p(a.omega, a.p)
    if not a.tol > 0:
        raise ConfigError("tol must be positive")
    man = ExperimentManifest("eigen shoot", None, a.out, a.seed,
                             grids={"omega": a.omega, "p": a.p, "tol": a.tol, "steps": a.steps})
    out = _outdir(a.out)
    res = shoot_eigen(a.omega, a.p, tol=a.tol, n_steps=a.steps)
    closed = closed_form_lambda(a.omega, a.p)
    samples = _write_csv(out / "eigenfunction.csv", ("theta", "phi", "dphi", "q"),
                         zip(res.theta, res.phi, res.dphi, res.q))
    result = {**res.summary(), "lambda_closed_form": closed}
    interior = res.phi[1:-1]
    checks = [{"name": "matches closed form within 1e-6", "passed": abs(res.lam - closed) <= 1e-6},
              {"name": "phi positive inside the arc", "passed": bool(np.all(interior > 0))}]
    return _finish(man, result, checks, [samples])


def cmd_cone_phi(a) -> int:
    _check_omega_p(a.omega, a.p, full=False)
    radii = sorted(_floats(a.radii, "radii"))
    man = ExperimentManifest("cone phi", None, a.out, a.seed, a.n,
                             grids={"omega": a.omega, "p": a.p, "radii": radii})
    if 3 * radii[-1] > 1.0 + 1e-12:
        raise ConfigError("largest radius must satisfy 3R <= 1 (grid is [-1, 1]^2)")
    out = _outdir(a.out)
    plus, minus = cone_pair(a.omega, a.p)
    u = ScalarField2D.on_square(lambda x, y: plus(x, y) + minus(x, y), n=a.n)
    rows, checks = [], []
    for R in radii:
        g = phi_p(u, (0.0, 0.0), R, a.p)
        c = cone_phi_p(plus, minus, R)
        v = tripling_check(u, (0.0, 0.0), R, a.p)
        rows.append((R, g, c, g / c, int(v.holds)))
        checks.append({"name": f"tripling R={R:g}", "passed": v.holds})
    expo = a.p * (plus.lam + minus.lam - 2.0)
    if len(radii) > 1:
        fit = float(np.polyfit(np.log(radii), np.log([r[1] for r in rows]), 1)[0])
    else:
        fit = math.nan
    table = _write_csv(out / "cone_phi.csv", ("R", "phi_grid", "phi_closed", "ratio", "tripling"), rows)
    checks.append({"name": "grid matches closed form within 3%",
                   "passed": all(abs(r[3] - 1) <= 0.03 for r in rows)})
    return _finish(man, {"lambda1": plus.lam, "lambda2": minus.lam, "exponent": expo,
                         "fitted_exponent": fit}, checks, [table])


def cmd_capacity(a) -> int:
    mask_field = _load_field(a.mask)
    if mask_field.nx != mask_field.ny:
        raise ConfigError("mask grid must be square")
    if not 1 < a.ell <= 2:
        raise ConfigError("ell must lie in (1, 2]")
    node = mask_field.values > 0.5
    E = node[:-1, :-1] & node[1:, :-1] & node[:-1, 1:] & node[1:, 1:]
    if not E.any():
        raise ConfigError("mask selects no cell")
    man = ExperimentManifest("capacity", None, a.out, a.seed,
                             grids={"mask": Path(a.mask).read_text(), "ell": a.ell, "Q": a.Q,
                                    "tol": a.tol})
    out = _outdir(a.out)
    try:
        est = variational_capacity(E, mask_field.h, a.ell, a.Q, tol=a.tol, origin=mask_field.origin)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    pot, hdr = est.potential.to_csv(out / "potential.csv")
    v = est.potential.values
    checks = [{"name": "potential within [0, 1]", "passed": bool(v.min() >= -1e-6 and v.max() <= 1 + 1e-6)},
              {"name": "converged", "passed": est.converged}]
    failure = None if est.converged else "capacity iteration did not converge"
    return _finish(man, est.to_dict(), checks, [pot, hdr], failure)


def cmd_verify(a) -> int:
    from .acceptance import run_all
    only = [int(s) for s in a.only.split(",")] if a.only else None
    man = ExperimentManifest("verify", None, a.out, a.seed, grids={"only": only})
    out = _outdir(a.out)
    results = run_all(seed=a.seed, only=only)
    payload = [c.to_dict() for c in results]
    report = out / "acceptance.json"
    report.write_text(json.dumps(_clean(payload), indent=2) + "\n")
    checks = [{"name": f"{c.id}: {c.name}", "passed": c.passed} for c in results]
    return _finish(man, {"criteria": len(results), "passed": sum(c.passed for c in results)},
                   checks, [report])


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbernoulli", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default="out", help="output directory")
        return p

    p = add("minimize", cmd_minimize, help="minimize the two-phase functional")
    p.add_argument("--config", help="key = value problem file")
    p.add_argument("--n", type=int, help="override cells per side")

    probe = sub.add_parser("probe", help="monotonicity and flatness probes")
    psub = probe.add_subparsers(dest="probe", required=True)
    q = psub.add_parser("acf", help="phi_p profile with tripling verdicts")
    q.set_defaults(fn=cmd_probe_acf)
    q.add_argument("--out", default="out")
    q.add_argument("--field", required=True)
    q.add_argument("--x0", default="auto")
    q.add_argument("--radii", required=True)
    q.add_argument("--p", type=float, required=True)
    q = psub.add_parser("flatness", help="slab flatness h(x0, r)")
    q.set_defaults(fn=cmd_probe_flatness)
    q.add_argument("--out", default="out")
    q.add_argument("--field")
    q.add_argument("--polyline")
    q.add_argument("--x0", default="0,0")
    q.add_argument("--radii", required=True)
    q.add_argument("--h0", type=float)
    q.add_argument("--n-dirs", type=int, default=64)

    eig = sub.add_parser("eigen", help="arc eigenvalues")
    esub = eig.add_subparsers(dest="eigen", required=True)
    q = esub.add_parser("table", help="closed-form spectrum over a grid")
    q.set_defaults(fn=cmd_eigen_table)
    q.add_argument("--out", default="out")
    q.add_argument("--omega-grid", required=True, help="count of interior nodes or a list")
    q.add_argument("--p", type=float, default=2.0)
    q.add_argument("--p-grid")
    q.add_argument("--shoot", action="store_true", help="add shooting eigenvalues")
    q = esub.add_parser("shoot", help="shooting eigenvalue and eigenfunction")
    q.set_defaults(fn=cmd_eigen_shoot)
    q.add_argument("--out", default="out")
    q.add_argument("--omega", type=float, required=True)
    q.add_argument("--p", type=float, required=True)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--steps", type=int, default=10_000)

    cone = sub.add_parser("cone", help="homogeneous cone pairs")
    csub = cone.add_subparsers(dest="cone", required=True)
    q = csub.add_parser("phi", help="grid versus closed-form phi_p for a cone pair")
    q.set_defaults(fn=cmd_cone_phi)
    q.add_argument("--out", default="out")
    q.add_argument("--omega", type=float, required=True)
    q.add_argument("--p", type=float, default=2.0)
    q.add_argument("--radii", default="0.1,0.2,0.3")
    q.add_argument("--n", type=int, default=512)

    p = add("capacity", cmd_capacity, help="condenser capacity of a mask")
    p.add_argument("--mask", required=True, help="field CSV; nodes with value > 0.5 form E")
    p.add_argument("--ell", type=float, default=1.5)
    p.add_argument("--Q", choices=("square", "disk"), default="square")
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("verify", cmd_verify, help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion ids")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenError, NonConvergence, CapacityNonConvergence, InsufficientRoom,
            NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
