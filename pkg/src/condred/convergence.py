"""Error curves between the model hierarchy members, and their rates.

Five standing comparisons, tagged ``eq17`` .. ``eq21`` in every report
(the tags are stable identifiers used in the CSV/JSON/SVG outputs):

========  ==================  ================  ========  ==============
tag       reference           reduced           swept     expected slope
========  ==================  ================  ========  ==============
eq17      env_full            env_averaged      eps       2 (averaging)
eq18      env_oscillatory     env_limit         eps       2 (averaging)
eq19      env_full            env_oscillatory   alpha     1 (dispersion)
eq20      env_averaged        env_limit         alpha     1 (dispersion)
eq21      env_full            env_limit         eps,      2 (combined,
                                                alpha =      both sources
                                                eps^2        together)
========  ==================  ================  ========  ==============

Both members of a pair run with the same step size (the smaller of the
two caps) and the same record schedule, so snapshots compare at
identical times and the measured gap is the modelling error, not a
scheme mismatch.  Cells are independent jobs executed by a bounded
thread pool and assembled by key, so reruns of the same configuration
reproduce the same report bit for bit (wall-clock ``seconds`` aside).
"""

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace

import numpy as np

from .config import (
    make_amplitude,
    make_basis,
    make_grid,
    make_phase,
    validate_config,
)
from .dynamics import (
    DEFAULT_RECORDS,
    SolverParams,
    _estimate_max_grad,
    dt_cap,
    from_envelope,
    solve_envelope,
    solve_gpe,
    to_envelope,
)
from .eikonal import PhaseProvider
from .errors import ConfigError
from .fields import GridSpec, bm_error, bm_norm, refined, sample_initial
from .nonlinearity import averaged_cubic_resonance_coeffs

# errors are measured two regularity orders below the working space
BM_ERROR_ORDER = 2

SVG_COLORS = {
    "eq17": "#1f77b4",
    "eq18": "#ff7f0e",
    "eq19": "#2ca02c",
    "eq20": "#d62728",
    "eq21": "#9467bd",
}


@dataclass(frozen=True)
class PairRole:
    """One comparison: a reference equation against its reduction."""

    tag: str
    reference: str
    reduced: str
    sweep: str           # "eps" | "alpha" | "diagonal"
    expected_slope: float


PAIR_ROLES = {
    "eq17": PairRole("eq17", "env_full", "env_averaged", "eps", 2.0),
    "eq18": PairRole("eq18", "env_oscillatory", "env_limit", "eps", 2.0),
    "eq19": PairRole("eq19", "env_full", "env_oscillatory", "alpha", 1.0),
    "eq20": PairRole("eq20", "env_averaged", "env_limit", "alpha", 1.0),
    "eq21": PairRole("eq21", "env_full", "env_limit", "diagonal", 2.0),
}

# identical solvers on both sides; errors must come out exactly zero
DEBUG_ROLE = PairRole("debug", "env_limit", "env_limit", "eps", 0.0)


@dataclass(frozen=True)
class CellResult:
    pair: str
    eps: float
    alpha: float
    error: float
    seconds: float


@dataclass(frozen=True)
class SlopeFit:
    value: float
    stderr: float


@dataclass
class ConvergenceReport:
    scenario: str
    grid: GridSpec
    cells: list
    slopes: dict         # tag -> SlopeFit, only for sweeps with >= 3 points


@dataclass
class StudySetup:
    """Shared immutable inputs for every cell of one study."""

    grid: GridSpec
    basis: object
    phase: object
    amplitude: object
    initial: object
    t_final: float = 0.5
    dt_safety: float = 1.0
    eps_fixed: float = 0.35
    alpha_fixed: float = 0.2


def setup_from_config(cfg):
    validate_config(cfg)
    grid = make_grid(cfg)
    basis = make_basis(cfg)
    amplitude = make_amplitude(cfg)
    setup = StudySetup(
        grid=grid, basis=basis, phase=make_phase(cfg), amplitude=amplitude,
        initial=sample_initial(amplitude, grid, basis),
        t_final=cfg.t_final, dt_safety=cfg.dt_safety,
        eps_fixed=cfg.eps_fixed, alpha_fixed=cfg.alpha_fixed)
    # touch the resonance tables once, before any worker threads exist
    averaged_cubic_resonance_coeffs(
        np.zeros((1, basis.total_modes), dtype=complex), basis)
    return setup


def refine_setup(setup, factor=2):
    """Same study on a spatially refined grid (fresh initial sample)."""
    grid = refined(setup.grid, factor)
    return replace(setup, grid=grid,
                   initial=sample_initial(setup.amplitude, grid, setup.basis))


def _resolve_role(role):
    if isinstance(role, str):
        if role == "debug":
            return DEBUG_ROLE
        if role not in PAIR_ROLES:
            raise ConfigError(
                f"unknown pair tag {role!r}; choose from {sorted(PAIR_ROLES)}")
        return PAIR_ROLES[role]
    return role


def _cell_regime(role, value, setup):
    """(eps, alpha_reference, alpha_reduced) for one sweep value."""
    if role.tag == "eq17":
        return value, setup.alpha_fixed, setup.alpha_fixed
    if role.tag in ("eq18", "debug"):
        return value, 0.0, 0.0
    if role.tag in ("eq19", "eq20"):
        return setup.eps_fixed, value, 0.0
    if role.tag == "eq21":
        return value, value ** 2, 0.0
    raise ConfigError(f"no sweep regime defined for pair {role.tag!r}")


def matched_step(p_a, p_b, grid, provider, t_final, dt_safety):
    """One (dt, record_every, steps) both runs of a pair can share."""
    max_grad = _estimate_max_grad(provider, t_final)
    cap = min(dt_cap(p_a, grid, max_grad), dt_cap(p_b, grid, max_grad))
    steps = max(1, math.ceil(t_final / (cap * dt_safety) - 1e-9))
    every = max(1, round(steps / DEFAULT_RECORDS))
    return t_final / steps, every, steps


def pair_error(role, value, setup, dt=None, record_every=None):
    """Run both members of a pair on one sweep value; max-in-time error."""
    role = _resolve_role(role)
    start = time.perf_counter()
    eps, alpha_ref, alpha_red = _cell_regime(role, value, setup)
    provider = PhaseProvider(setup.grid, setup.phase)
    p_ref = SolverParams(equation=role.reference, epsilon=eps,
                         alpha=alpha_ref, t_final=setup.t_final)
    p_red = SolverParams(equation=role.reduced, epsilon=eps,
                         alpha=alpha_red, t_final=setup.t_final)
    if dt is None:
        dt, record_every, _ = matched_step(
            p_ref, p_red, setup.grid, provider, setup.t_final,
            setup.dt_safety)
    ref = solve_envelope(setup.initial, replace(p_ref, dt=dt,
                                                record_every=record_every),
                         provider, setup.basis)
    red = solve_envelope(setup.initial, replace(p_red, dt=dt,
                                                record_every=record_every),
                         provider, setup.basis)
    err = max(bm_error(fr, fd, BM_ERROR_ORDER, setup.basis)
              for fr, fd in zip(ref.fields, red.fields))
    return CellResult(pair=role.tag, eps=float(eps), alpha=float(alpha_ref),
                      error=float(err),
                      seconds=time.perf_counter() - start)


def error_curve(role, sweep_values, setup):
    """Errors along one sweep; returns (values, errors) as arrays."""
    role = _resolve_role(role)
    cells = [pair_error(role, v, setup) for v in sweep_values]
    return (np.asarray(sweep_values, dtype=float),
            np.array([c.error for c in cells]))


def fit_rate(xs, ys):
    """OLS slope of log y against log x, with its standard error."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
        raise ConfigError(
            f"fit_rate needs two matched 1-d sequences of >= 2 points, "
            f"got shapes {xs.shape} and {ys.shape}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ConfigError("fit_rate needs strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ConfigError("fit_rate needs at least two distinct x values")
    slope = float(dx @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * dx
    n = len(xs)
    if n == 2:
        stderr = 0.0
    else:
        stderr = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    return SlopeFit(value=slope, stderr=stderr)


def _worker_count(requested, n_jobs):
    workers = requested if requested else min(4, os.cpu_count() or 1)
    env = os.environ.get("CONDRED_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(
                f"CONDRED_THREADS must be an integer, got {env!r}") from None
        workers = min(workers, max(1, cap))
    return max(1, min(workers, n_jobs))


def sweep_values_for(role, cfg):
    return cfg.eps_values if role.sweep in ("eps", "diagonal") \
        else cfg.alpha_values


def run_study(cfg, pairs=None, max_workers=None):
    """All requested error curves plus fitted slopes, as one report."""
    setup = setup_from_config(cfg)
    tags = tuple(pairs) if pairs is not None else tuple(PAIR_ROLES)
    for tag in tags:
        if tag not in PAIR_ROLES:
            raise ConfigError(
                f"unknown pair tag {tag!r}; choose from {sorted(PAIR_ROLES)}")

    jobs = []
    for tag in tags:
        for idx, value in enumerate(sweep_values_for(PAIR_ROLES[tag], cfg)):
            jobs.append((tag, idx, value))

    results = {}
    workers = _worker_count(max_workers, len(jobs))
    if workers == 1:
        for tag, idx, value in jobs:
            results[(tag, idx)] = pair_error(PAIR_ROLES[tag], value, setup)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(pair_error, PAIR_ROLES[tag], value, setup):
                (tag, idx) for tag, idx, value in jobs}
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()

    cells = [results[(tag, idx)] for tag, idx, _ in jobs]
    slopes = {}
    for tag in tags:
        values = sweep_values_for(PAIR_ROLES[tag], cfg)
        if len(values) < 3:
            continue
        errors = [results[(tag, idx)].error for idx in range(len(values))]
        slopes[tag] = fit_rate(values, errors)
    return ConvergenceReport(scenario=cfg.scenario, grid=setup.grid,
                             cells=cells, slopes=slopes)


@dataclass(frozen=True)
class GuardResult:
    """Scheme-error check: same cell at doubled nx and halved dt."""

    coarse_error: float
    refined_error: float
    relative_change: float


def discretization_guard(cfg, tag="eq17"):
    """Rerun the smallest-eps cell refined; the error should barely move."""
    setup = setup_from_config(cfg)
    role = PAIR_ROLES[tag]
    value = min(sweep_values_for(role, cfg))
    eps, alpha_ref, alpha_red = _cell_regime(role, value, setup)
    provider = PhaseProvider(setup.grid, setup.phase)
    p_ref = SolverParams(equation=role.reference, epsilon=eps,
                         alpha=alpha_ref, t_final=setup.t_final)
    p_red = SolverParams(equation=role.reduced, epsilon=eps,
                         alpha=alpha_red, t_final=setup.t_final)
    dt, every, _ = matched_step(p_ref, p_red, setup.grid, provider,
                                setup.t_final, setup.dt_safety)
    coarse = pair_error(role, value, setup, dt=dt, record_every=every)
    fine = pair_error(role, value, refine_setup(setup),
                      dt=dt / 2, record_every=2 * every)
    change = abs(fine.error - coarse.error) / coarse.error
    return GuardResult(coarse_error=coarse.error, refined_error=fine.error,
                       relative_change=change)


def equivalence_gap(eps, alpha, setup, refine=False):
    """Relative distance between the full model (through the frame change)
    and the full envelope solver, at the pair's shared default step.

    With refine=True the grid doubles and the step is exactly half the
    coarse matched step, whatever cap produced it.

    Returns (relative_error, dt_used).
    """
    provider = PhaseProvider(setup.grid, setup.phase)
    p_env = SolverParams(equation="env_full", epsilon=eps, alpha=alpha,
                         t_final=setup.t_final)
    p_gpe = SolverParams(equation="gpe_full", epsilon=eps, alpha=alpha,
                         t_final=setup.t_final)
    dt, every, _ = matched_step(p_env, p_gpe, setup.grid, provider,
                                setup.t_final, setup.dt_safety)
    if refine:
        setup = refine_setup(setup)
        provider = PhaseProvider(setup.grid, setup.phase)
        dt, every = dt / 2, 2 * every
    grid, basis = setup.grid, setup.basis
    psi0 = from_envelope(setup.initial, 0.0, provider(0.0), eps, alpha, basis)
    gpe = solve_gpe(psi0, replace(p_gpe, dt=dt, record_every=every), basis)
    env = solve_envelope(setup.initial,
                         replace(p_env, dt=dt, record_every=every),
                         provider, basis)
    ph = provider(setup.t_final)
    a_back = to_envelope(gpe.final, setup.t_final, ph, eps, alpha, basis)
    rel = (bm_error(a_back, env.final, BM_ERROR_ORDER, basis)
           / bm_norm(env.final, BM_ERROR_ORDER, basis))
    return rel, dt


# ---------------------------------------------------------------------------
# report emission


def _sweep_coordinate(cell):
    role = PAIR_ROLES.get(cell.pair, DEBUG_ROLE)
    return cell.alpha if role.sweep == "alpha" else cell.eps


def report_to_csv(report):
    lines = ["pair,eps,alpha,error_bm2,seconds"]
    for c in report.cells:
        lines.append(
            f"{c.pair},{c.eps!r},{c.alpha!r},{c.error!r},{c.seconds!r}")
    return "\n".join(lines) + "\n"


def report_to_json(report):
    payload = {
        "scenario": report.scenario,
        "grid": dataclasses.asdict(report.grid),
        "cells": [dataclasses.asdict(c) for c in report.cells],
        "slopes": {tag: {"value": s.value, "stderr": s.stderr}
                   for tag, s in report.slopes.items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report is not valid JSON: {exc}") from None
    try:
        grid = GridSpec(**doc["grid"])
        cells = [CellResult(**c) for c in doc["cells"]]
        slopes = {tag: SlopeFit(**s) for tag, s in doc["slopes"].items()}
        return ConvergenceReport(scenario=doc["scenario"], grid=grid,
                                 cells=cells, slopes=slopes)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"report JSON is missing fields: {exc}") from None


def report_to_svg(report):
    """Standalone log-log error plot: one polyline per pair, slope guides."""
    width, height = 800, 600
    left, right, top, bottom = 70, 590, 60, 520

    by_pair = {}
    for c in report.cells:
        by_pair.setdefault(c.pair, []).append(
            (math.log10(_sweep_coordinate(c)), math.log10(max(c.error,
                                                              1e-300))))
    points = [p for pts in by_pair.values() for p in pts]
    if not points:
        raise ConfigError("report has no cells to plot")
    lx = [p[0] for p in points]
    ly = [p[1] for p in points]
    x_lo, x_hi = min(lx), max(lx)
    y_lo, y_hi = min(ly), max(ly)

    # slope guides anchored at the plot centre; include them in the bounds
    xc, yc = 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)
    half = max(0.5 * (x_hi - x_lo), 1e-6)
    guides = [(s, (xc - half, yc - s * half), (xc + half, yc + s * half))
              for s in (1.0, 2.0)]
    for _, (gx0, gy0), (gx1, gy1) in guides:
        y_lo, y_hi = min(y_lo, gy0, gy1), max(y_hi, gy0, gy1)

    def pad(lo, hi):
        span = max(hi - lo, 1e-6)
        return lo - 0.06 * span, hi + 0.06 * span

    x_lo, x_hi = pad(x_lo, x_hi)
    y_lo, y_hi = pad(y_lo, y_hi)

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo) * (right - left)

    def py(v):
        return bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect x="0" y="0" width="800" height="600" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{right - left}" '
        f'height="{bottom - top}" fill="none" stroke="#333"/>',
        f'<text x="{(left + right) / 2:.1f}" y="{height - 14}" '
        'text-anchor="middle" font-size="15">'
        'sweep parameter, log10</text>',
        f'<text x="20" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
        f'font-size="15" transform="rotate(-90 20 {(top + bottom) / 2:.1f})">'
        'max-in-time error (order-2 norm), log10</text>',
        f'<text x="{(left + right) / 2:.1f}" y="34" text-anchor="middle" '
        f'font-size="17">{report.scenario}</text>',
    ]
    for v, anchor, xpos in ((x_lo, "start", left), (x_hi, "end", right)):
        parts.append(f'<text x="{xpos}" y="{bottom + 20}" '
                     f'text-anchor="{anchor}" font-size="12">{v:.2f}</text>')
    for v, ypos in ((y_lo, bottom), (y_hi, top + 4)):
        parts.append(f'<text x="{left - 6}" y="{ypos}" text-anchor="end" '
                     f'font-size="12">{v:.2f}</text>')

    for s, (gx0, gy0), (gx1, gy1) in guides:
        parts.append(
            f'<line id="guide-slope-{s:.0f}" class="guide" '
            f'x1="{px(gx0):.2f}" y1="{py(gy0):.2f}" x2="{px(gx1):.2f}" '
            f'y2="{py(gy1):.2f}" stroke="#999" stroke-dasharray="6 4"/>')
        parts.append(
            f'<text x="{px(gx1) + 4:.2f}" y="{py(gy1):.2f}" font-size="12" '
            f'fill="#777">slope {s:.0f}</text>')

    legend_y = top + 10
    for tag in sorted(by_pair):
        pts = by_pair[tag]
        color = SVG_COLORS.get(tag, "#444")
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline id="pair-{tag}" class="curve" '
                     f'points="{coords}" fill="none" stroke="{color}" '
                     'stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
                         f'fill="{color}"/>')
        parts.append(f'<line x1="{right + 14}" y1="{legend_y}" '
                     f'x2="{right + 44}" y2="{legend_y}" stroke="{color}" '
                     'stroke-width="2"/>')
        parts.append(f'<text x="{right + 50}" y="{legend_y + 4}" '
                     f'font-size="13">{tag}</text>')
        legend_y += 22
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_WRITERS = {"csv": report_to_csv, "json": report_to_json,
            "svg": report_to_svg}


def emit(report, fmt, path):
    """Render the report in one format and write it to path."""
    if fmt not in _WRITERS:
        raise ConfigError(
            f"unknown report format {fmt!r}; choose from {sorted(_WRITERS)}")
    text = _WRITERS[fmt](report)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
