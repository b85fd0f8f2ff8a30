"""Config-driven experiment runner.

``epigraph-lab run config.json`` validates the config strictly (unknown keys
are hard errors), executes one experiment, and writes deterministic artifacts
(CSV tables without timestamps, a summary, a run record with a config hash
and file manifest, optionally an SVG plot). Exit status is 0 only when every
asserted check passed; validation problems exit 2, numerical failures exit 3.
"""

import argparse
import csv as _csv
import hashlib
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import closed_forms
from .comparison import threshold_scan, uniqueness_test, symmetry_test
from .discretization import build_grid, stencil_residual
from .errors import LabError, ValidationError, NumericalError
from .estimates import brandt_check, oscillation_fit
from .geometry import EPIGRAPH_KINDS, OPEN_SET_KINDS, make_epigraph, \
    strip_set, winged_strip_set, under_parabola_set, orthant_set, \
    revolution_set, section_measure
from .nonlinearity import NONLINEARITY_KINDS, make_nonlinearity, eval_f, \
    is_unbounded
from .reporting import write_csv, write_json, read_json, config_hash, \
    svg_line_plot, format_float
from .solver import SolvePolicy, SolutionField, solve_semilinear, \
    principal_eigenpair
from .discretization import assemble_laplacian
from .moving_plane import cap_sweep, hopf_slope_check

CLOSED_FORM_PROFILES = ("saturating_front", "double_front", "tanh_front")

# frozen h^2 residual/error constants for the closed-form suite
_RESIDUAL_C = {"saturating_front": 2.5, "double_front": 600.0}
_TANH_SOLVE_C = 0.1


# ---------------------------------------------------------------------------
# strict config plumbing
# ---------------------------------------------------------------------------

def _check_keys(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ValidationError(f"{where} must be a JSON object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown key {unknown[0]!r} in {where}")


def _as_float(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where} must be a number")
    return float(v)


def _as_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{where} must be an integer")
    return v


def _as_str(v, where: str) -> str:
    if not isinstance(v, str):
        raise ValidationError(f"{where} must be a string")
    return v


def _load_two_columns(path: str, where: str):
    """Read a two-column CSV (header row skipped) into float arrays."""
    try:
        with open(path, newline="") as fh:
            rows = list(_csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"{where}: cannot read {path}: {exc}")
    if len(rows) < 3:
        raise ValidationError(f"{where}: {path} needs a header and >= 2 rows")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: {path} must hold two numeric columns")
    return data[:, 0], data[:, 1]


def _build_domain(cfg: dict):
    _check_keys(cfg, ("kind", "profile", "dimension", "normalize", "params",
                      "a", "b", "csv"), "domain")
    kind = _as_str(cfg.get("kind", ""), "domain.kind")
    dim = _as_int(cfg.get("dimension", 2), "domain.dimension")
    if kind == "epigraph":
        profile = _as_str(cfg.get("profile", "half_space"), "domain.profile")
        if profile not in EPIGRAPH_KINDS:
            raise ValidationError(f"unknown epigraph profile {profile!r}")
        params = dict(cfg.get("params", {}))
        if profile == "custom_sampled":
            if "csv" not in cfg:
                raise ValidationError("custom_sampled domain needs 'csv'")
            if dim != 2:
                raise ValidationError("sampled profiles load from CSV only in"
                                      " dimension 2")
            xs, gs = _load_two_columns(cfg["csv"], "domain.csv")
            params = {"axes": (xs,), "values": gs}
        normalize = bool(cfg.get("normalize", True))
        return make_epigraph(profile, dimension=dim, normalize=normalize,
                             **params)
    if kind == "strip":
        return strip_set(_as_float(cfg.get("a", 0.0), "domain.a"),
                         _as_float(cfg.get("b", 1.0), "domain.b"),
                         dimension=dim)
    if kind == "winged_strip":
        return winged_strip_set()
    if kind == "under_parabola":
        return under_parabola_set()
    if kind == "orthant":
        return orthant_set(dimension=dim)
    if kind == "revolution":
        profile = _as_str(cfg.get("profile", "constant"), "domain.profile")
        params = dict(cfg.get("params", {}))
        if profile == "samples":
            if "csv" not in cfg:
                raise ValidationError("sampled revolution profile needs 'csv'")
            xs, phis = _load_two_columns(cfg["csv"], "domain.csv")
            params = {"xs": xs, "phis": phis}
        return revolution_set(profile=profile, dimension=dim, **params)
    raise ValidationError(f"unknown domain kind {kind!r}")


def _build_nonlinearity(cfg: dict):
    _check_keys(cfg, ("kind", "value", "slope", "exponent", "csv"),
                "nonlinearity")
    kind = _as_str(cfg.get("kind", ""), "nonlinearity.kind")
    if kind not in NONLINEARITY_KINDS:
        raise ValidationError(f"unknown nonlinearity kind {kind!r}")
    params = {}
    if kind == "constant" and "value" in cfg:
        params["value"] = _as_float(cfg["value"], "nonlinearity.value")
    if kind == "linear" and "slope" in cfg:
        params["slope"] = _as_float(cfg["slope"], "nonlinearity.slope")
    if kind == "power" and "exponent" in cfg:
        params["exponent"] = _as_float(cfg["exponent"],
                                       "nonlinearity.exponent")
    if kind == "custom_table":
        if "csv" not in cfg:
            raise ValidationError("custom_table nonlinearity needs 'csv'")
        ts, fs = _load_two_columns(cfg["csv"], "nonlinearity.csv")
        params = {"ts": ts, "fs": fs}
    return make_nonlinearity(kind, **params)


def _build_grid(domain, cfg: dict):
    _check_keys(cfg, ("box", "h", "face_policy"), "grid")
    if "box" not in cfg or "h" not in cfg:
        raise ValidationError("grid needs 'box' and 'h'")
    box = cfg["box"]
    if not isinstance(box, list) or \
            any(not isinstance(p, list) or len(p) != 2 for p in box):
        raise ValidationError("grid.box must be a list of [lo, hi] pairs")
    h = _as_float(cfg["h"], "grid.h")
    if h <= 0:
        raise ValidationError("grid.h must be positive")
    return build_grid(domain, box, h, face_policy=cfg.get("face_policy"))


def _tolerances(cfg: dict) -> dict:
    _check_keys(cfg, ("solve", "check", "eig"), "tolerances")
    tols = {"solve": 1e-10, "check": 1e-8, "eig": 1e-10}
    for k in cfg:
        tols[k] = _as_float(cfg[k], f"tolerances.{k}")
        if tols[k] <= 0:
            raise ValidationError(f"tolerances.{k} must be positive")
    return tols


def _policy_from_params(params: dict, tol: float) -> SolvePolicy:
    return SolvePolicy(
        method=_as_str(params.get("method", "auto"), "params.method"),
        init=params.get("init", "torsion_lift"),
        tol=tol,
        max_iter=_as_int(params.get("max_iter", 80), "params.max_iter"))


def _trace_from_params(params: dict) -> float:
    return _as_float(params.get("trace", 0.0), "params.trace")


def _forbid(cfg: dict, experiment: str, *keys):
    for k in keys:
        if k in cfg:
            raise ValidationError(
                f"section {k!r} is not used by experiment {experiment!r}")


def _require(cfg: dict, experiment: str, *keys):
    for k in keys:
        if k not in cfg:
            raise ValidationError(
                f"experiment {experiment!r} needs a {k!r} section")


# ---------------------------------------------------------------------------
# experiments: each returns (summary, checks, rows_by_csv, svg_payload)
# ---------------------------------------------------------------------------

def _solution_rows(sol: SolutionField):
    header = [f"x{i + 1}" for i in range(sol.grid.points.shape[1])] + ["u"]
    rows = [list(p) + [v] for p, v in zip(sol.grid.points, sol.values)]
    return header, rows


def _midline_series(sol: SolutionField):
    """Profile of u along the last axis at the lateral lattice midline."""
    pts = sol.grid.points
    if pts.shape[1] == 1:
        order = np.argsort(pts[:, 0])
        return pts[order, 0], sol.values[order]
    mask = np.ones(len(pts), dtype=bool)
    for ax in range(pts.shape[1] - 1):
        axis = sol.grid.axes[ax]
        mid = axis[len(axis) // 2]
        mask &= pts[:, ax] == mid
    if not mask.any():
        return None
    order = np.argsort(pts[mask, -1])
    return pts[mask, -1][order], sol.values[mask][order]


def _run_solve(cfg, tols, params, rng):
    _require(cfg, "solve", "domain", "nonlinearity", "grid")
    _check_keys(params, ("trace", "method", "init", "max_iter"),
                "params")
    domain = _build_domain(cfg["domain"])
    f = _build_nonlinearity(cfg["nonlinearity"])
    grid = _build_grid(domain, cfg["grid"])
    sol = solve_semilinear(grid, f, trace=_trace_from_params(params),
                           policy=_policy_from_params(params, tols["solve"]))
    header, rows = _solution_rows(sol)
    summary = {
        "observations": {
            "max_norm": sol.max_norm,
            "residual_norm": sol.residual_norm,
            "iterations": sol.iterations,
            "method": sol.method,
            "n_interior": int(grid.n_interior),
            "h": float(grid.h),
        },
        "solver_meta": {k: v for k, v in sol.meta.items()
                        if isinstance(v, (str, int, float, bool))},
    }
    checks = {
        "converged": True,
        "residual_small": sol.residual_norm <= max(tols["solve"] * 1e3, 1e-7),
    }
    svg = None
    series = _midline_series(sol)
    if series is not None:
        svg = {"series": [("u midline", series[0], series[1])],
               "title": "solution profile", "xlabel": "last axis",
               "ylabel": "u"}
    return summary, checks, {"solution.csv": (header, rows)}, svg


def _profile_field(profile: str, params: dict):
    """Closed-form front on a narrow vertical window, constant laterally."""
    # default windows reach past the fronts so half-window sweeps see the
    # flat region
    ymax = {"saturating_front": 3.0, "double_front": 6.0,
            "tanh_front": 12.0}[profile]
    ymax = _as_float(params.get("ymax", ymax), "params.ymax")
    h = _as_float(params.get("h", 1.0 / 32.0), "params.h")
    fn = {"saturating_front": closed_forms.saturating_front,
          "double_front": closed_forms.double_front_profile,
          "tanh_front": closed_forms.tanh_front}[profile]
    spec = make_epigraph("half_space", dimension=2)
    grid = build_grid(spec, [[0.0, 8 * h], [0.0, ymax]], h)
    values = fn(grid.points[:, 1])

    def trace(pts):
        return fn(np.atleast_2d(pts)[:, 1])

    sol = SolutionField(grid=grid, values=values, trace=trace,
                        residual_norm=0.0, method="closed_form",
                        meta={"profile": profile})
    return sol, spec


def _run_moving_plane(cfg, tols, params, rng):
    _check_keys(params, ("profile", "ymax", "h", "lambda_max", "tol",
                         "hopf_lambdas", "expect", "buffer", "trace",
                         "method", "init", "max_iter"), "params")
    expect = _as_str(params.get("expect", "monotone"), "params.expect")
    if expect not in ("monotone", "sign_change"):
        raise ValidationError("params.expect must be 'monotone' or"
                              " 'sign_change'")
    buffer = _as_int(params.get("buffer", 3), "params.buffer")
    if "profile" in params:
        _forbid(cfg, "moving_plane", "domain", "nonlinearity", "grid")
        profile = _as_str(params["profile"], "params.profile")
        if profile not in CLOSED_FORM_PROFILES:
            raise ValidationError(f"unknown profile {profile!r}")
        sol, spec = _profile_field(profile, params)
    else:
        _require(cfg, "moving_plane", "domain", "nonlinearity", "grid")
        spec = _build_domain(cfg["domain"])
        if not hasattr(spec, "g"):
            raise ValidationError("moving_plane needs an epigraph domain")
        f = _build_nonlinearity(cfg["nonlinearity"])
        grid = _build_grid(spec, cfg["grid"])
        sol = solve_semilinear(grid, f, trace=_trace_from_params(params),
                               policy=_policy_from_params(params,
                                                          tols["solve"]))
    lambda_grid = None
    if "lambda_max" in params:
        lam_max = _as_float(params["lambda_max"], "params.lambda_max")
        lo = sol.grid.box[-1][0]
        h = sol.grid.h
        lambda_grid = np.arange(lo + 2 * h, lam_max + h / 2, h)
    tol = _as_float(params.get("tol", tols["check"]), "params.tol")
    rep = cap_sweep(sol, spec, lambda_grid=lambda_grid, tol=tol,
                    buffer=buffer)
    hopf = []
    for lam in params.get("hopf_lambdas", []):
        hrep = hopf_slope_check(sol, _as_float(lam, "params.hopf_lambdas"),
                                buffer=buffer)
        hopf.append({"lambda": hrep.lam, "defect": hrep.defect,
                     "dn_min": hrep.dn_min, "dn_max": hrep.dn_max})
    bounds = rep.meta.get("interp_bounds", np.zeros_like(rep.lambda_grid))
    rows = [[lam, diff, b] for lam, diff, b in
            zip(rep.lambda_grid, rep.cap_min_diff, bounds)]
    summary = {
        "observations": {
            "monotone_up_to": rep.monotone_up_to,
            "dn_u_min": rep.dn_u_min,
            "n_sign_change_cells": len(rep.sign_change_cells),
            "lambda_count": int(len(rep.lambda_grid)),
            "worst_cap_min": float(np.nanmin(rep.cap_min_diff))
            if len(rep.cap_min_diff) else math.nan,
        },
        "hopf": hopf,
    }
    if expect == "monotone":
        finite = rep.cap_min_diff[~np.isnan(rep.cap_min_diff)]
        checks = {
            "cap_ordering": bool((finite >= -1e-10).all()),
            "derivative_nonnegative": rep.dn_u_min >= -tol,
            "no_sign_changes": len(rep.sign_change_cells) == 0,
        }
    else:
        checks = {"sign_changes_found": len(rep.sign_change_cells) > 0}
    for entry in hopf:
        lam = entry["lambda"]
        bound = 5.0 * sol.grid.h ** 2
        checks[f"hopf_defect_at_{format_float(lam)}"] = \
            entry["defect"] <= bound
    svg = {"series": [("cap min diff", rep.lambda_grid, rep.cap_min_diff)],
           "title": "cap sweep", "xlabel": "plane height",
           "ylabel": "min(u_reflected - u)"}
    return summary, checks, \
        {"cap_sweep.csv": (["lambda", "cap_min_diff", "interp_bound"], rows)}, \
        svg


def _run_threshold_scan(cfg, tols, params, rng):
    _forbid(cfg, "threshold_scan", "domain", "nonlinearity", "grid")
    _check_keys(params, ("L", "widths", "cells"), "params")
    if "L" not in params:
        raise ValidationError("threshold_scan needs params.L")
    L = _as_float(params["L"], "params.L")
    widths = params.get("widths", {"start": 0.5, "stop": 4.0, "count": 36})
    if isinstance(widths, dict):
        _check_keys(widths, ("start", "stop", "count"), "params.widths")
        start = _as_float(widths.get("start", 0.5), "params.widths.start")
        stop = _as_float(widths.get("stop", 4.0), "params.widths.stop")
        count = _as_int(widths.get("count", 36), "params.widths.count")
        if count < 2 or stop <= start:
            raise ValidationError("params.widths range must be increasing"
                                  " with count >= 2")
        widths = list(np.linspace(start, stop, count))
    elif not isinstance(widths, list):
        raise ValidationError("params.widths must be a list or a range spec")
    cells = _as_int(params.get("cells", 128), "params.cells")
    rep = threshold_scan(L, widths, cells=cells, eig_tol=tols["eig"])
    eps = rep.epsilon_sufficient
    target = math.pi / math.sqrt(L)
    step = max(b - a for a, b in zip(widths, widths[1:]))
    summary = {
        "observations": {
            "L": L,
            "epsilon_sufficient": "UNBOUNDED" if is_unbounded(eps)
            else float(eps),
            "failure_width": rep.failure_width,
            "predicted_failure_width": target,
            "scan_step": step,
            "cells": cells,
        },
    }
    checks = {}
    if "sufficiency_gap_ok" in rep.meta:
        checks["sufficiency_gap"] = rep.meta["sufficiency_gap_ok"]
    if rep.failure_width is not None:
        checks["crossing_near_prediction"] = \
            abs(rep.failure_width - target) <= max(0.02 * target, step)
    rows = [[S, lam] for S, lam in rep.table]
    markers = []
    if not is_unbounded(eps):
        markers.append(("sufficient width", float(eps)))
    if rep.failure_width is not None:
        markers.append(("failure width", rep.failure_width))
    svg = {"series": [("lambda1", np.array([r[0] for r in rows]),
                       np.array([r[1] for r in rows]))],
           "title": "principal eigenvalue vs width", "xlabel": "width",
           "ylabel": "lambda1", "markers": markers}
    return summary, checks, {"scan.csv": (["S", "lambda1"], rows)}, svg


def _run_uniqueness(cfg, tols, params, rng):
    _require(cfg, "uniqueness", "domain", "nonlinearity", "grid")
    _check_keys(params, ("n_restarts", "amplitude"), "params")
    domain = _build_domain(cfg["domain"])
    f = _build_nonlinearity(cfg["nonlinearity"])
    grid = _build_grid(domain, cfg["grid"])
    rep = uniqueness_test(
        grid, f,
        n_restarts=_as_int(params.get("n_restarts", 20), "params.n_restarts"),
        tol=tols["check"], seed=rng,
        amplitude=_as_float(params.get("amplitude", 1.0), "params.amplitude"))
    restarts = rep.meta["restarts"]
    rows = [[r["restart"],
             math.nan if r["norm"] is None else r["norm"],
             r.get("iterations", -1), r["outcome"]] for r in restarts]
    eps = rep.epsilon_sufficient
    summary = {
        "observations": {
            "lambda1": rep.lambda1,
            "lipschitz_bound": "UNBOUNDED" if is_unbounded(rep.L)
            else float(rep.L),
            "epsilon_sufficient": "UNBOUNDED" if is_unbounded(eps)
            else float(eps),
            "n_restarts": len(restarts),
            "max_restart_norm": max((r["norm"] for r in restarts
                                     if r["norm"] is not None),
                                    default=math.nan),
        },
        "status": rep.meta.get("status", "hypothesis satisfied"),
    }
    checks = {}
    if "status" not in rep.meta:
        checks["all_restarts_zero"] = rep.comparison_holds
    return summary, checks, \
        {"restarts.csv": (["restart", "norm", "iterations", "outcome"],
                          rows)}, None


def _run_symmetry(cfg, tols, params, rng):
    _forbid(cfg, "symmetry", "domain", "grid")
    _check_keys(params, ("case", "cells", "half_width", "length", "base",
                         "amp", "freq"), "params")
    case = _as_str(params.get("case", ""), "params.case")
    if case == "torsion_strip":
        R = _as_float(params.get("half_width", 1.0), "params.half_width")
        length = _as_float(params.get("length", 2.0), "params.length")
        cells = _as_int(params.get("cells", 16), "params.cells")
        h = R / cells
        if abs(length / h - round(length / h)) > 1e-9:
            raise ValidationError("params.length must be a multiple of"
                                  " half_width/cells")
        domain = strip_set(-R, R, dimension=2)
        grid = build_grid(domain, [[0.0, length], [-R, R]], h)
        f = make_nonlinearity("constant", value=1.0)
        sol = solve_semilinear(grid, f, policy=SolvePolicy(tol=tols["solve"]))
        exact = (R * R - grid.points[:, 1] ** 2) / 2.0
        torsion_err = float(np.abs(sol.values - exact).max())
        rep = symmetry_test(grid, f, lambda p: p * np.array([1.0, -1.0]),
                            tol=tols["check"], solution=sol)
        summary = {"observations": {
            "torsion_error": torsion_err,
            "reflection_defect": rep.meta["defect"],
            "matched_nodes": rep.meta["n_matched"],
        }}
        checks = {
            "torsion_exact": torsion_err <= 1e-12,
            "reflection_symmetric": rep.comparison_holds,
        }
        header, rows = _solution_rows(sol)
        return summary, checks, {"solution.csv": (header, rows)}, None
    if case == "revolution":
        base = _as_float(params.get("base", 1.0), "params.base")
        amp = _as_float(params.get("amp", 0.2), "params.amp")
        freq = _as_float(params.get("freq", 1.0), "params.freq")
        cells = _as_int(params.get("cells", 64), "params.cells")
        if amp < 0 or base <= amp:
            raise ValidationError("need 0 <= amp < base")
        period = 2.0 * math.pi / freq
        h = period / cells
        k = int(math.ceil((base + amp) / h - 1e-9)) + 1
        domain = revolution_set(profile="cosine", dimension=2, base=base,
                                amp=amp, freq=freq)
        grid = build_grid(domain, [[-period, period], [-k * h, k * h]], h)
        f = _build_nonlinearity(cfg["nonlinearity"]) \
            if "nonlinearity" in cfg else make_nonlinearity("constant")
        sol = solve_semilinear(grid, f, policy=SolvePolicy(tol=tols["solve"]))
        mirror = symmetry_test(grid, f, lambda p: p * np.array([1.0, -1.0]),
                               tol=tols["check"], solution=sol)
        shift = symmetry_test(grid, f,
                              lambda p: p + np.array([period, 0.0]),
                              tol=1e-6, solution=sol)
        summary = {"observations": {
            "reflection_defect": mirror.meta["defect"],
            "periodicity_defect": shift.meta["defect"],
            "periodicity_overlap_nodes": shift.meta["n_matched"],
        }}
        checks = {
            "reflection_symmetric": mirror.meta["defect"] <= tols["check"],
            "periodic": shift.meta["defect"] <= 1e-6,
        }
        header, rows = _solution_rows(sol)
        return summary, checks, {"solution.csv": (header, rows)}, None
    raise ValidationError("params.case must be 'torsion_strip' or"
                          " 'revolution'")


def _run_section(cfg, tols, params, rng):
    _require(cfg, "section", "domain")
    _forbid(cfg, "section", "nonlinearity", "grid")
    _check_keys(params, ("direction", "probes", "line_resolution", "window",
                         "expect_unbounded"), "params")
    domain = _build_domain(cfg["domain"])
    if "direction" not in params:
        raise ValidationError("section needs params.direction")
    nu = params["direction"]
    if not isinstance(nu, list) or not nu:
        raise ValidationError("params.direction must be a nonempty list")
    probes = params.get("probes", {"lo": -10.0, "hi": 10.0, "count": 201})
    if isinstance(probes, dict):
        _check_keys(probes, ("lo", "hi", "count"), "params.probes")
        lo = _as_float(probes.get("lo", -10.0), "params.probes.lo")
        hi = _as_float(probes.get("hi", 10.0), "params.probes.hi")
        count = _as_int(probes.get("count", 201), "params.probes.count")
        axes = [np.linspace(lo, hi, count)] * (len(nu) - 1)
        mesh = np.meshgrid(*axes, indexing="ij") if axes else []
        probe_grid = np.stack([m.ravel() for m in mesh], axis=1) \
            if axes else np.zeros((1, 0))
    else:
        probe_grid = np.asarray(probes, dtype=float)
    rep = section_measure(
        domain, np.asarray(nu, dtype=float), probe_grid,
        _as_float(params.get("line_resolution", 1e-3),
                  "params.line_resolution"),
        window=_as_float(params.get("window", 100.0), "params.window"))
    rows = [list(p) + [m] for p, m in rep.per_line]
    header = [f"p{i + 1}" for i in range(probe_grid.shape[1])] + ["measure"]
    summary = {"observations": {
        "section_value": rep.value,
        "unbounded_suspected": rep.unbounded_suspected,
        "n_lines": len(rep.per_line),
        "window": rep.window,
    }}
    checks = {}
    if "expect_unbounded" in params:
        checks["unbounded_flag_matches"] = \
            rep.unbounded_suspected == bool(params["expect_unbounded"])
    svg = None
    if probe_grid.shape[1] == 1:
        xs = np.array([p[0] for p, _ in rep.per_line])
        ms = np.array([m for _, m in rep.per_line])
        svg = {"series": [("per-line measure", xs, ms)],
               "title": "directional section", "xlabel": "probe",
               "ylabel": "line measure"}
    return summary, checks, {"per_line.csv": (header, rows)}, svg


def _run_estimates(cfg, tols, params, rng):
    _require(cfg, "estimates", "domain", "nonlinearity", "grid")
    _check_keys(params, ("trace", "method", "init", "max_iter", "brandt",
                         "oscillation"), "params")
    if "brandt" not in params and "oscillation" not in params:
        raise ValidationError("estimates needs params.brandt and/or"
                              " params.oscillation")
    domain = _build_domain(cfg["domain"])
    f = _build_nonlinearity(cfg["nonlinearity"])
    grid = _build_grid(domain, cfg["grid"])
    sol = solve_semilinear(grid, f, trace=_trace_from_params(params),
                           policy=_policy_from_params(params, tols["solve"]))
    f_values = eval_f(f, sol.values)
    csvs = {}
    summary = {"observations": {"max_norm": sol.max_norm,
                                "h": float(grid.h)}}
    checks = {}
    if "brandt" in params:
        bcfg = params["brandt"]
        _check_keys(bcfg, ("n_probes", "delta"), "params.brandt")
        if "delta" not in bcfg:
            raise ValidationError("params.brandt needs 'delta'")
        n_probes = _as_int(bcfg.get("n_probes", 100), "params.brandt.n_probes")
        delta = _as_float(bcfg["delta"], "params.brandt.delta")
        gen = np.random.default_rng(rng)
        reports, attempts = [], 0
        while len(reports) < n_probes and attempts < 200 * n_probes:
            attempts += 1
            idx = int(gen.integers(grid.n_interior))
            try:
                reports.append(brandt_check(sol, f_values, grid.points[idx],
                                            delta))
            except ValidationError:
                continue
        if len(reports) < n_probes:
            raise ValidationError("could not place the requested probe balls"
                                  " inside the domain")
        rows = [list(r.center) + [r.delta, max(r.lhs), r.rhs, r.slack,
                                  int(r.holds)] for r in reports]
        header = [f"x{i + 1}" for i in range(grid.points.shape[1])] + \
            ["delta", "lhs_max", "rhs", "slack", "holds"]
        csvs["brandt.csv"] = (header, rows)
        summary["observations"]["brandt_probes"] = len(reports)
        summary["observations"]["brandt_min_slack"] = \
            min(r.slack for r in reports)
        checks["brandt_all_hold"] = all(r.holds for r in reports)
    if "oscillation" in params:
        ocfg = params["oscillation"]
        _check_keys(ocfg, ("centers", "radii"), "params.oscillation")
        if "centers" not in ocfg or "radii" not in ocfg:
            raise ValidationError("params.oscillation needs 'centers' and"
                                  " 'radii'")
        fits, rows = [], []
        for center in ocfg["centers"]:
            fit = oscillation_fit(sol, np.asarray(center, dtype=float),
                                  [float(r) for r in ocfg["radii"]])
            fits.append(fit)
            for r, osc in zip(fit.radii, fit.osc_values):
                rows.append(list(fit.center) + [r, osc])
        header = [f"x{i + 1}" for i in range(grid.points.shape[1])] + \
            ["radius", "oscillation"]
        csvs["oscillation.csv"] = (header, rows)
        summary["oscillation_fits"] = [
            {"center": list(f_.center), "alpha": f_.alpha_fit,
             "C": f_.C_fit, "radii_used": len(f_.radii)} for f_ in fits]
        checks["oscillation_alpha_positive"] = \
            all(f_.alpha_fit > 0 for f_ in fits)
    return summary, checks, csvs, None


def _quartic_residual_rows(profile: str, fn, fkind: str, ymax: float):
    """Stencil residual of a closed-form front on 1-D grids, three h."""
    f = make_nonlinearity(fkind)
    rows, resids = [], []
    for h in (1 / 32, 1 / 64, 1 / 128):
        grid = build_grid(strip_set(0.0, ymax, dimension=1),
                          [[0.0, ymax]], h)
        u = fn(grid.points[:, 0])

        def trace(p):
            return fn(np.atleast_2d(p)[:, 0])

        r = stencil_residual(grid, u, trace) - eval_f(f, u)
        rmax = float(np.abs(r).max())
        resids.append((h, rmax))
        rows.append([profile, h, rmax, _RESIDUAL_C[profile] * h * h])
    orders = [math.log(a[1] / b[1], 2)
              for a, b in zip(resids, resids[1:])]
    ok = all(r <= _RESIDUAL_C[profile] * h * h for h, r in resids) and \
        min(orders) >= 1.8
    return rows, min(orders), ok


def _tanh_solve_errors():
    """Allen-Cahn solve vs the hyperbolic-tangent front, two h."""
    rows, errs = [], []
    for h in (1 / 32, 1 / 64):
        spec = make_epigraph("half_space", dimension=2)
        grid = build_grid(spec, [[0.0, 0.25], [0.0, 12.0]], h)

        def trace(p):
            return closed_forms.tanh_front(np.atleast_2d(p)[:, 1])

        sol = solve_semilinear(grid, make_nonlinearity("allen_cahn"),
                               trace=trace,
                               policy=SolvePolicy(init="front_lift",
                                                  tol=1e-11))
        err = float(np.abs(sol.values -
                           closed_forms.tanh_front(grid.points[:, 1])).max())
        errs.append((h, err))
        rows.append(["tanh_front", h, err, _TANH_SOLVE_C * h * h])
    order = math.log(errs[0][1] / errs[1][1], 2)
    ok = all(e <= _TANH_SOLVE_C * h * h for h, e in errs) and order >= 1.8
    return rows, order, ok


def _run_verify_examples(cfg, tols, params, rng):
    _forbid(cfg, "verify_examples", "domain", "nonlinearity", "grid")
    _check_keys(params, (), "params")
    rows, checks, orders = [], {}, {}
    for profile, fn, fkind, ymax in (
            ("saturating_front", closed_forms.saturating_front,
             "sqrt_saturation", 2.0),
            ("double_front", closed_forms.double_front_profile,
             "double_front_source", 6.0)):
        prows, order, ok = _quartic_residual_rows(profile, fn, fkind, ymax)
        rows.extend(prows)
        orders[profile] = order
        checks[f"{profile}_residual_order"] = ok
    trows, torder, tok = _tanh_solve_errors()
    rows.extend(trows)
    orders["tanh_front"] = torder
    checks["tanh_front_solve_order"] = tok

    sat, spec = _profile_field("saturating_front", {})
    rep = cap_sweep(sat, spec, tol=tols["check"])
    finite = rep.cap_min_diff[~np.isnan(rep.cap_min_diff)]
    checks["saturating_front_cap_ordering"] = bool((finite >= -1e-10).all())
    checks["saturating_front_flat_detected"] = \
        bool((finite == 0.0).any()) and rep.dn_u_min == 0.0
    checks["saturating_front_no_sign_changes"] = \
        len(rep.sign_change_cells) == 0

    dbl, spec = _profile_field("double_front", {})
    rep2 = cap_sweep(dbl, spec, tol=tols["check"])
    checks["double_front_sign_changes_found"] = \
        len(rep2.sign_change_cells) > 0

    summary = {"observations": {"orders": orders,
                                "double_front_sign_cells":
                                len(rep2.sign_change_cells)}}
    return summary, checks, \
        {"examples.csv": (["example", "h", "observed", "bound"], rows)}, None


_EXPERIMENTS = {
    "solve": _run_solve,
    "moving_plane": _run_moving_plane,
    "threshold_scan": _run_threshold_scan,
    "uniqueness": _run_uniqueness,
    "symmetry": _run_symmetry,
    "section": _run_section,
    "estimates": _run_estimates,
    "verify_examples": _run_verify_examples,
}

_TOP_KEYS = ("experiment", "output_dir", "seed", "svg", "domain",
             "nonlinearity", "grid", "tolerances", "params")


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _cmd_run(args) -> int:
    config = read_json(args.config)
    _check_keys(config, _TOP_KEYS, "config")
    if "experiment" not in config or "output_dir" not in config:
        raise ValidationError("config needs 'experiment' and 'output_dir'")
    experiment = _as_str(config["experiment"], "experiment")
    if experiment not in _EXPERIMENTS:
        raise ValidationError(f"unknown experiment {experiment!r}")
    outdir = _as_str(config["output_dir"], "output_dir")
    seed = _as_int(config.get("seed", 0), "seed")
    want_svg = bool(config.get("svg", False))
    tols = _tolerances(config.get("tolerances", {}))
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("params must be a JSON object")

    started = datetime.now(timezone.utc).isoformat()
    os.makedirs(outdir, exist_ok=True)
    chash = config_hash(config)
    outcome, error_text = "success", None
    summary, checks, csvs, svg = {}, {}, {}, None
    try:
        summary, checks, csvs, svg = _EXPERIMENTS[experiment](
            config, tols, params, seed)
    except ValidationError:
        raise
    except LabError as exc:
        outcome = "error"
        error_text = f"{type(exc).__name__}: {exc}"
    if outcome == "success" and not all(checks.values()):
        outcome = "check_failed"

    files = []
    for name, (header, rows) in sorted(csvs.items()):
        write_csv(os.path.join(outdir, name), header, rows)
        files.append(name)
    if want_svg and svg is not None:
        svg_line_plot(os.path.join(outdir, "plot.svg"), svg["series"],
                      title=svg.get("title", ""),
                      xlabel=svg.get("xlabel", ""),
                      ylabel=svg.get("ylabel", ""),
                      markers=svg.get("markers"))
        files.append("plot.svg")
    summary_doc = {
        "experiment": experiment,
        "config_hash": chash,
        "checks": checks,
        "outcome": outcome,
    }
    if error_text is not None:
        summary_doc["error"] = error_text
    summary_doc.update(summary)
    write_json(os.path.join(outdir, "summary.json"), summary_doc)
    files.append("summary.json")

    manifest = {}
    for name in files:
        path = os.path.join(outdir, name)
        manifest[name] = {"bytes": os.path.getsize(path),
                          "sha256": _sha256_file(path)}
    record = {
        "config_hash": chash,
        "experiment": experiment,
        "seed": seed,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "outcome": outcome,
        "files": manifest,
    }
    write_json(os.path.join(outdir, "run_record.json"), record)

    for name, ok in checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    if error_text is not None:
        print(f"error: {error_text}", file=sys.stderr)
    print(f"outcome: {outcome} ({os.path.join(outdir, 'summary.json')})")
    if outcome != "success":
        raise NumericalError(f"run outcome: {outcome}")
    return 0


def _cmd_report(args) -> int:
    record = read_json(os.path.join(args.run_dir, "run_record.json"))
    summary = read_json(os.path.join(args.run_dir, "summary.json"))
    print(f"experiment: {record.get('experiment')}")
    print(f"outcome: {record.get('outcome')}")
    print(f"config hash: {record.get('config_hash')}")
    print(f"version: {record.get('version')}")
    checks = summary.get("checks", {})
    if checks:
        print("checks:")
        for name in sorted(checks):
            print(f"  [{'PASS' if checks[name] else 'FAIL'}] {name}")
    obs = summary.get("observations", {})
    if obs:
        print("observations:")
        for name in sorted(obs):
            print(f"  {name} = {obs[name]}")
    if "error" in summary:
        print(f"error: {summary['error']}")
    print("files:")
    for name in sorted(record.get("files", {})):
        info = record["files"][name]
        print(f"  {name} ({info['bytes']} bytes)")
    return 0


def _cmd_list_catalog(args) -> int:
    print("epigraph profiles:")
    for kind in EPIGRAPH_KINDS:
        print(f"  {kind}")
    print("open sets:")
    for kind in OPEN_SET_KINDS:
        print(f"  {kind}")
    print("nonlinearities:")
    for kind in NONLINEARITY_KINDS:
        print(f"  {kind}")
    print("closed-form profiles:")
    for kind in CLOSED_FORM_PROFILES:
        print(f"  {kind}")
    print("experiments:")
    for kind in sorted(_EXPERIMENTS):
        print(f"  {kind}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="epigraph-lab",
        description="Elliptic boundary-value experiments on epigraph and"
                    " strip domains.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a JSON config")
    p_run.set_defaults(func=_cmd_run)
    p_rep = sub.add_parser("report", help="render a finished run directory")
    p_rep.add_argument("run_dir", help="directory holding run_record.json")
    p_rep.set_defaults(func=_cmd_report)
    p_cat = sub.add_parser("list-catalog", help="list built-in catalog tags")
    p_cat.set_defaults(func=_cmd_list_catalog)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except LabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main(argv=sys.argv[1:]))
