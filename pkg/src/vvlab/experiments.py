"""Experiment drivers: initial data, runs, reports, fits and sweeps."""
from __future__ import annotations

import math
import platform
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy
from scipy.optimize import minimize_scalar, nnls

from . import __version__, kernels
from .config import ExperimentConfig
from .cutoffs import CutoffParams
from .decomposition import (
    LAMBDA_NAMES,
    decompose_field,
    diagonal_residuals,
    effective_fluxes,
    lambda_terms,
)
from .errors import (
    ConfigError,
    GapViolated,
    GridTooCoarse,
    HypothesisFailed,
    InsufficientWindow,
    NoConnection,
    NoFlux,
    VVLabError,
)
from .functionals import (
    area_dissipation_check,
    area_functional,
    energy_functionals,
    length_functional,
    transversal_dissipation_check,
    transversal_q,
    tv,
)
from .io import config_hash, read_manifest, read_snapshot, write_csv, write_manifest, write_snapshot
from .solver import GridField, SolverConfig, compute_ut, derivative_array, l1_norm, simulate
from .spectral import eigensystem
from .systems import SystemModel, check_hypotheses, scaled_viscosity
from .travelling import oleinik_admissible, profile_conservative

RAMP_CELLS = 4.0
GATE_SAMPLES = 20
SCALAR_BV_GUARD = 1.05
SYSTEM_BV_GUARD = 2.0
WINDOW_TRIM = 0.1
MIN_WINDOW_POINTS = 5
MIN_WINDOW_RATIO = 3.0
MIN_CONTINUITY_PAIRS = 6
RAREFACTION_WINDOW = 0.9


# -- initial data -------------------------------------------------------------


@dataclass(frozen=True)
class InitialData:
    kind: str
    args: tuple

    def riemann_states(self, n: int):
        if self.kind != "riemann":
            return None
        return _vector(self.args[0], n), _vector(self.args[1], n)


_IC_PATTERN = re.compile(r"^\s*([a-z-]+)\s*\((.*)\)\s*$")


def parse_ic(spec: str) -> InitialData:
    """Parse ``name(arg;arg;...)``; vector arguments use commas."""
    m = _IC_PATTERN.match(spec)
    if m is None:
        raise ConfigError(f"cannot parse initial condition {spec!r}")
    kind, body = m.group(1), m.group(2)
    args = tuple(a.strip() for a in body.split(";")) if body.strip() else ()
    arity = {"riemann": (2, 3), "gaussian-bump": (2, 3), "random-smooth": (1, 2), "constant": (1, 1),
             "profile": (1, 1)}
    if kind not in arity:
        raise ConfigError(f"unknown initial condition {kind!r}")
    lo, hi = arity[kind]
    if not lo <= len(args) <= hi:
        raise ConfigError(f"{kind} takes {lo} to {hi} arguments")
    return InitialData(kind, args)


def _vector(text: str, n: int) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad number in {text!r}") from exc
    if vals.size == 1:
        return np.full(n, vals[0])
    if vals.size != n:
        raise ConfigError(f"expected {n} components in {text!r}")
    return vals


def initial_values(spec: str, x: np.ndarray, n: int, seed: int = 0) -> np.ndarray:
    """Evaluate an initial-condition spec on cell centres ``x``.

    ``riemann(uL;uR[;cells])``
        ``uL`` to ``uR`` across ``x = 0`` with a tanh ramp ``cells`` grid cells wide (default 4).
    ``gaussian-bump(amp;width[;centre])``
        ``amp * exp(-((x - centre)/width)^2)``.
    ``random-smooth(amp[;modes])``
        Seeded random Fourier series, scaled so each component peaks at ``amp``.
    ``constant(u)``
        Uniform state.
    ``profile(path)``
        Interpolated from a CSV with columns ``xi,u1..un``.
    """
    ic = parse_ic(spec)
    x = np.asarray(x, dtype=float)
    h = float(x[1] - x[0])
    if ic.kind == "riemann":
        ul, ur = ic.riemann_states(n)
        cells = float(ic.args[2]) if len(ic.args) > 2 else RAMP_CELLS
        weight = 0.5 * (1.0 + np.tanh(x / (cells * h)))
        return ul + (ur - ul) * weight[:, None]
    if ic.kind == "gaussian-bump":
        amp = _vector(ic.args[0], n)
        width = float(ic.args[1])
        centre = float(ic.args[2]) if len(ic.args) > 2 else 0.0
        return amp * np.exp(-(((x - centre) / width) ** 2))[:, None]
    if ic.kind == "constant":
        return np.broadcast_to(_vector(ic.args[0], n), (len(x), n)).copy()
    if ic.kind == "random-smooth":
        amp = _vector(ic.args[0], n)
        modes = int(ic.args[1]) if len(ic.args) > 1 else 6
        rng = np.random.default_rng(seed)
        length = x[-1] - x[0] + h
        phase = 2.0 * np.pi * (x - x[0]) / length
        out = np.zeros((len(x), n))
        for i in range(n):
            coef = rng.normal(size=modes) / np.arange(1, modes + 1)
            shift = rng.uniform(0.0, 2.0 * np.pi, size=modes)
            series = sum(c * np.sin((k + 1) * phase + s) for k, (c, s) in enumerate(zip(coef, shift)))
            out[:, i] = amp[i] * series / np.abs(series).max()
        return out
    xi, U = read_snapshot(ic.args[0])
    if U.shape[1] < n:
        raise ConfigError(f"profile file has {U.shape[1]} components, need {n}")
    return np.stack([np.interp(x, xi, U[:, i]) for i in range(n)], axis=-1)


def initial_field(config: ExperimentConfig, model: SystemModel) -> GridField:
    return GridField.from_function(
        lambda x: initial_values(config.ic, x, model.n, config.seed),
        config.xmin, config.xmax, config.M, config.boundary,
    )


# -- preflight ----------------------------------------------------------------


@dataclass
class GateReport:
    passed: bool
    reasons: list
    lines: list


def hypothesis_gate(model: SystemModel, field: Optional[GridField] = None, tv_guard: float = 0.5,
                    samples_per_axis: int = GATE_SAMPLES, force: bool = False) -> GateReport:
    """Preflight: structural hypotheses, spectrum at the data and the data-size guard.

    The total-variation guard applies to systems with a finite claimed gap;
    scalar models have no gap to protect.

    Raises
    ------
    HypothesisFailed
        If any check fails and ``force`` is false.
    """
    reasons, lines = [], []
    try:
        report = check_hypotheses(model, samples_per_axis)
        lines.extend(report.lines())
        reasons.extend(report.failures)
    except VVLabError as exc:
        reasons.append(f"{type(exc).__name__}: {exc}")
    if field is not None:
        states = np.stack([field.values[0], field.values[-1]])
        if not model.contains(field.values):
            reasons.append("initial data outside the state box")
        else:
            try:
                eigensystem(model, states)
            except VVLabError as exc:
                reasons.append(f"{type(exc).__name__}: {exc}")
        total = tv(field.values)[1]
        lines.append(f"TV(u0)            {total:.6g} (guard {tv_guard:.6g})")
        if math.isfinite(model.c0_claimed) and total > tv_guard:
            reasons.append(f"TV(u0)={total:.4g} exceeds tv_guard={tv_guard:.4g}")
    else:
        try:
            eigensystem(model, model.u_star)
        except VVLabError as exc:
            reasons.append(f"{type(exc).__name__}: {exc}")
    gate = GateReport(not reasons, reasons, lines)
    if reasons and not force:
        raise HypothesisFailed("; ".join(reasons))
    return gate


# -- runs ---------------------------------------------------------------------


def simulate_member(model: SystemModel, config: ExperimentConfig, epsilon: float,
                    field: Optional[GridField] = None, snapshot_times=None) -> list[GridField]:
    """Run one viscosity member of a configuration and return its snapshots."""
    if field is None:
        field = initial_field(config, model)
    solver = SolverConfig(config.cfl_advective, config.cfl_parabolic, epsilon, config.t_end,
                          1, config.conservative)
    times = config.snapshot_times if snapshot_times is None else snapshot_times
    return simulate(model, field, solver, snapshot_times=times)


def versions() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "vvlab": __version__,
        "backend": kernels.BACKEND,
    }


def member_dir(index: int) -> str:
    return f"eps_{index:02d}"


def run_simulation(config: ExperimentConfig, out_dir=None, report: bool = True) -> Path:
    """Simulate every viscosity of ``config`` and persist snapshots and reports.

    Layout: ``manifest.json`` plus one ``eps_NN/`` directory per viscosity with
    ``snap_KKKK.csv`` files and ``report.csv``.
    """
    out = Path(out_dir if out_dir is not None else config.out)
    model = config.model()
    field0 = initial_field(config, model)
    gate = hypothesis_gate(model, field0, config.tv_guard, force=config.force)
    members = []
    for m, eps in enumerate(config.eps):
        snaps = simulate_member(model, config, eps, field0)
        sub = out / member_dir(m)
        entries = []
        for k, snap in enumerate(snaps):
            name = f"snap_{k:04d}.csv"
            write_snapshot(sub / name, snap.x, snap.values)
            entries.append({"file": name, "time": snap.time})
        member = {"epsilon": eps, "dir": member_dir(m), "snapshots": entries}
        if report:
            header, rows = functional_report(model, snaps, eps, config.cutoffs, config.mode, config.conservative)
            write_csv(sub / "report.csv", header, rows.T)
            member["report"] = "report.csv"
        members.append(member)
    manifest = {
        "config": config.to_dict(),
        "config_hash": config_hash(config.to_dict()),
        "versions": versions(),
        "gate": {"passed": gate.passed, "reasons": gate.reasons},
        "members": members,
    }
    write_manifest(out / "manifest.json", manifest)
    return out


@dataclass
class LoadedRun:
    config: ExperimentConfig
    model: SystemModel
    members: list  # (epsilon, [GridField])
    manifest: dict


def load_run(run_dir) -> LoadedRun:
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir / "manifest.json")
    config = ExperimentConfig.from_dict(manifest["config"])
    model = config.model()
    members = []
    for member in manifest["members"]:
        snaps = []
        for entry in member["snapshots"]:
            x, values = read_snapshot(run_dir / member["dir"] / entry["file"])
            h = float(x[1] - x[0])
            snaps.append(GridField(float(x[0] - 0.5 * h), h, values, config.boundary, float(entry["time"])))
        members.append((float(member["epsilon"]), snaps))
    return LoadedRun(config, model, members, manifest)


# -- functional report --------------------------------------------------------


def report_header(n: int) -> list[str]:
    cols = ["t", "tv_total"] + [f"tv_{i + 1}" for i in range(n)]
    cols += [f"Q_{i + 1}{j + 1}" for i in range(n) for j in range(i + 1, n)]
    for prefix in ("A", "L", "Ev", "Ew"):
        cols += [f"{prefix}_{i + 1}" for i in range(n)]
    for name in LAMBDA_NAMES:
        cols += [f"{name}_{i + 1}" for i in range(n)]
    return cols + ["diss_Q_pass", "diss_A_pass"]


def decompose_snapshots(model: SystemModel, snaps: Sequence[GridField], epsilon: float,
                        params: CutoffParams = CutoffParams(), mode: str = "eigenbasis",
                        conservative: bool = False, u_star=None):
    """Decompose every snapshot at unit viscosity of the rescaled model."""
    scaled = scaled_viscosity(model, epsilon)
    if u_star is None:
        u_star = snaps[0].values[0]
    comps = []
    for snap in snaps:
        ut = compute_ut(model, snap, epsilon, conservative)
        comp = decompose_field(scaled, snap, ut, params, mode, u_star, check_size=False)
        effective_fluxes(comp, params)
        comps.append(comp)
    return comps


def functional_report(model: SystemModel, snaps: Sequence[GridField], epsilon: float,
                      params: CutoffParams = CutoffParams(), mode: str = "eigenbasis",
                      conservative: bool = False):
    """Per-snapshot functionals and dissipation flags.

    Returns ``(header, rows)`` with ``rows`` of shape ``(K, columns)``.  Wave
    variations are ``tv_i = int |v_i|``.  The pass flag in row ``k`` refers to
    the step from ``t_{k-1}`` to ``t_k``; row 0 is vacuously 1.
    """
    comps = decompose_snapshots(model, snaps, epsilon, params, mode, conservative)
    n, K = model.n, len(comps)
    h = comps[0].h
    c1 = max(float(c.mus.max()) for c in comps)
    rows = []
    for comp in comps:
        waves = h * np.abs(comp.v).sum(axis=0)
        row = [comp.time, float(waves.sum()), *waves]
        for i in range(n):
            for j in range(i + 1, n):
                row.append(transversal_q(comp.z[:, i], comp.z[:, j], model.c0_claimed, c1, h))
        row += [area_functional(comp.v[:, i], comp.w[:, i], h) for i in range(n)]
        row += [length_functional(comp.v[:, i], comp.w[:, i], h) for i in range(n)]
        energies = energy_functionals(comp, params)
        row += list(energies["Ev"]) + list(energies["Ew"])
        _, norms = lambda_terms(comp, params)
        for name in LAMBDA_NAMES:
            row += list(norms[name])
        rows.append(row)
    q_pass = np.ones(K)
    a_pass = np.ones(K)
    if K >= 2:
        res = diagonal_residuals(comps, params)
        times = res.times
        stack = lambda name: np.stack([getattr(c, name) for c in comps])
        Z, V, W, LT, MU = stack("z"), stack("v"), stack("w"), stack("lambda_tilde"), stack("mus")
        for i in range(n):
            series = area_dissipation_check(times, V[..., i], W[..., i], MU[..., i], res.phi[..., i],
                                            res.psi[..., i], h, comps[0].boundary)
            a_pass[1:] = np.minimum(a_pass[1:], series.passed)
            for j in range(i + 1, n):
                try:
                    series = transversal_dissipation_check(
                        times, Z[..., i], Z[..., j], LT[..., i], LT[..., j], MU[..., i], MU[..., j],
                        res.Phi[..., i], res.Phi[..., j], h, c=model.c0_claimed, c1=c1)
                    q_pass[1:] = np.minimum(q_pass[1:], series.passed)
                except GapViolated:
                    q_pass[1:] = 0.0
    rows = np.array(rows, dtype=float)
    rows = np.column_stack([rows, q_pass, a_pass])
    return report_header(n), rows


def diagnose_run(run_dir) -> list[Path]:
    """Recompute ``report.csv`` for every member of a stored run."""
    run = load_run(run_dir)
    written = []
    for m, (eps, snaps) in enumerate(run.members):
        header, rows = functional_report(run.model, snaps, eps, run.config.cutoffs, run.config.mode,
                                         run.config.conservative)
        written.append(write_csv(Path(run_dir) / member_dir(m) / "report.csv", header, rows.T))
    return written


# -- fits and bounds ----------------------------------------------------------


@dataclass
class BVResult:
    times: np.ndarray
    tv: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    guard: float

    @property
    def flagged(self) -> bool:
        return self.max_ratio > self.guard


def bv_check(snaps: Sequence[GridField], guard: Optional[float] = None) -> BVResult:
    """Series ``TV(u(t)) / TV(u(0))``; a constant initial state has ratio 1."""
    totals = np.array([tv(s.values)[1] for s in snaps])
    if totals[0] > 0:
        ratios = totals / totals[0]
    else:
        ratios = np.where(totals > 0, np.inf, 1.0)
    if guard is None:
        guard = SCALAR_BV_GUARD if snaps[0].n == 1 else SYSTEM_BV_GUARD
    times = np.array([s.time for s in snaps])
    return BVResult(times, totals, ratios, float(ratios.max()), guard)


@dataclass
class SmoothingFit:
    k: int
    slope: float
    intercept: float
    times: np.ndarray
    norms: np.ndarray

    @property
    def expected(self) -> float:
        return -0.5 * self.k

    @property
    def deviation(self) -> float:
        return self.slope - self.expected


def derivative_norm(snap: GridField, k: int) -> float:
    """``|d^k/dx^k u_x|_1`` summed over components, for ``k = 1, 2, 3``."""
    if k == 1:
        d = derivative_array(snap.values, snap.h, 2, snap.boundary)
    elif k == 2:
        d = derivative_array(snap.values, snap.h, 3, snap.boundary)
    elif k == 3:
        inner = derivative_array(snap.values, snap.h, 2, snap.boundary)
        d = derivative_array(inner, snap.h, 2, snap.boundary)
    else:
        raise ValueError("k must be 1, 2 or 3")
    return l1_norm(d, snap.h)[1]


def smoothing_check(snaps: Sequence[GridField], k: int, t_a: Optional[float] = None,
                    t_b: Optional[float] = None) -> SmoothingFit:
    """Least-squares slope of ``log |d^k u_x|_1`` against ``log t`` on ``[t_a, t_b]``.

    The default window drops the first and last tenth of the time range.

    Raises
    ------
    InsufficientWindow
        Fewer than five snapshots in the window or ``t_b / t_a < 3``.
    """
    times = np.array([s.time for s in snaps])
    t0, t1 = times.min(), times.max()
    if t_a is None:
        t_a = t0 + WINDOW_TRIM * (t1 - t0)
    if t_b is None:
        t_b = t1 - WINDOW_TRIM * (t1 - t0)
    tol = 1e-12 * max(1.0, t1)
    inside = (times >= t_a - tol) & (times <= t_b + tol) & (times > 0)
    if inside.sum() < MIN_WINDOW_POINTS or t_a <= 0 or t_b / t_a < MIN_WINDOW_RATIO:
        raise InsufficientWindow(
            f"window [{t_a:.4g}, {t_b:.4g}] holds {int(inside.sum())} snapshots; "
            f"need {MIN_WINDOW_POINTS} and t_b/t_a >= {MIN_WINDOW_RATIO}"
        )
    sel = [s for s, keep in zip(snaps, inside) if keep]
    norms = np.array([derivative_norm(s, k) for s in sel])
    if np.any(norms <= 0):
        raise InsufficientWindow("derivative norm vanishes inside the window")
    slope, intercept = np.polyfit(np.log(times[inside]), np.log(norms), 1)
    return SmoothingFit(k, float(slope), float(intercept), times[inside], norms)


@dataclass
class ContinuityFit:
    L2a: float
    L2b: float
    pairs: int
    inflation: float


def l1_continuity_fit(snaps: Sequence[GridField], epsilon: float) -> ContinuityFit:
    """Fit ``|u(t)-u(s)|_1 <= L2a |t-s| + L2b sqrt(eps) |sqrt t - sqrt s|``.

    Nonnegative least squares over all snapshot pairs, then a uniform
    inflation of both constants so that no pair violates the bound.
    """
    K = len(snaps)
    if K * (K - 1) // 2 < MIN_CONTINUITY_PAIRS:
        raise InsufficientWindow(f"need at least {MIN_CONTINUITY_PAIRS} snapshot pairs")
    rows, dist = [], []
    for a in range(K):
        for b in range(a + 1, K):
            s, t = snaps[a].time, snaps[b].time
            rows.append([abs(t - s), math.sqrt(epsilon) * abs(math.sqrt(t) - math.sqrt(s))])
            dist.append(l1_norm(snaps[b].values - snaps[a].values, snaps[a].h)[1])
    design = np.array(rows)
    dist = np.array(dist)
    coef, _ = nnls(design, dist)
    pred = design @ coef
    if np.any((pred <= 0) & (dist > 0)):
        coef = np.array([float(np.max(dist / np.maximum(design[:, 0], 1e-300))), 0.0])
        pred = design @ coef
    positive = pred > 0
    factor = float(np.max(dist[positive] / pred[positive])) if positive.any() else 1.0
    factor = max(factor, 1.0)
    coef = coef * factor
    return ContinuityFit(float(coef[0]), float(coef[1]), len(dist), factor)


# -- viscosity sweep ----------------------------------------------------------


@dataclass
class SweepResult:
    eps: tuple
    distances: np.ndarray
    ratios: np.ndarray
    finals: list
    profile_distance: Optional[float] = None
    profile_shift: Optional[float] = None
    rarefaction_sup: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def rows(self):
        """``(eps_m, eps_{m+1}, d_m, r_m)`` with ``r_0`` undefined (nan)."""
        out = []
        for m, d in enumerate(self.distances):
            r = self.ratios[m - 1] if m >= 1 else math.nan
            out.append((self.eps[m], self.eps[m + 1], d, r))
        return out


def _profile_on_grid(profile, x, epsilon, centre):
    xi = (x - centre) / epsilon
    return np.stack([np.interp(xi, profile.xi, profile.U[:, i]) for i in range(profile.U.shape[1])], axis=-1)


def compare_with_profile(model: SystemModel, snap: GridField, u_minus, u_plus, epsilon: float):
    """L1 distance to the viscous profile translated to the best-fitting position.

    The profile is centred at ``sigma t + shift`` where ``shift`` minimises the
    distance; returns ``(distance, shift, profile)``.
    """
    profile = profile_conservative(model, u_minus, u_plus)
    x = snap.x
    base = profile.sigma * snap.time

    def dist(shift):
        diff = snap.values - _profile_on_grid(profile, x, epsilon, base + shift)
        return l1_norm(diff, snap.h)[1]

    bound = 10.0 * epsilon + 4.0 * snap.h
    res = minimize_scalar(dist, bounds=(-bound, bound), method="bounded", options={"xatol": 1e-10})
    return float(res.fun), float(res.x), profile


def rarefaction_fan(model: SystemModel, u_minus: float, u_plus: float, x, t: float, samples: int = 20001):
    """Entropy fan ``(f')^{-1}(x/t)`` for a scalar convex-on-the-range flux."""
    u_grid = np.linspace(u_minus, u_plus, samples)
    speeds = model.A(u_grid[:, None])[:, 0, 0]
    if np.any(np.diff(speeds) <= 0):
        raise ValueError("characteristic speeds must increase across a rarefaction")
    return np.interp(np.asarray(x) / t, speeds, u_grid)


def rarefaction_distance(model: SystemModel, snap: GridField, u_minus: float, u_plus: float,
                         window: float = RAREFACTION_WINDOW) -> float:
    """Sup distance to the fan on the part of the fan with ``|x/t|`` below ``window`` times its edge."""
    speeds = model.A(np.array([[u_minus], [u_plus]]))[:, 0, 0]
    lo, hi = speeds
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    ray = snap.x / snap.time
    mask = np.abs(ray - centre) <= window * half
    fan = rarefaction_fan(model, u_minus, u_plus, snap.x[mask], snap.time)
    return float(np.abs(snap.values[mask, 0] - fan).max())


def eps_sweep(config: ExperimentConfig, model: Optional[SystemModel] = None) -> SweepResult:
    """L1 distances between successive viscosities at ``t_end``.

    Raises
    ------
    GridTooCoarse
        If ``h > min(eps) / 8``.
    NoFlux
        If the system is not conservative.
    """
    model = config.model() if model is None else model
    if not model.conservative:
        raise NoFlux(f"{model.name} has no flux; the sweep needs a conservative system")
    if len(config.eps) < 3:
        raise ConfigError("the sweep needs at least three viscosities")
    h = (config.xmax - config.xmin) / config.M
    if h > min(config.eps) / 8.0:
        raise GridTooCoarse(f"h={h:.4g} exceeds min(eps)/8={min(config.eps) / 8:.4g}")
    field0 = initial_field(config, model)
    hypothesis_gate(model, field0, config.tv_guard, force=config.force)
    cons = replace_conservative(config)
    finals = [simulate_member(model, cons, eps, field0, snapshot_times=[config.t_end])[-1]
              for eps in config.eps]
    distances = np.array([l1_norm(a.values - b.values, h)[1] for a, b in zip(finals, finals[1:])])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(distances[:-1] > 0, distances[1:] / distances[:-1], 0.0)
    result = SweepResult(tuple(config.eps), distances, ratios, finals)
    states = parse_ic(config.ic).riemann_states(model.n)
    if states is not None and not np.allclose(states[0], states[1]):
        um, up = states
        last = finals[-1]
        admissible = model.n == 1 and oleinik_admissible(scalar_flux(model), float(um[0]), float(up[0]))
        if model.n == 1 and not admissible:
            if config.t_end > 0:
                result.rarefaction_sup = rarefaction_distance(model, last, float(um[0]), float(up[0]))
        else:
            try:
                dist, shift, _ = compare_with_profile(model, last, um, up, config.eps[-1])
                result.profile_distance, result.profile_shift = dist, shift
            except NoConnection as exc:
                result.extras["profile_error"] = str(exc)
    return result


def scalar_flux(model: SystemModel):
    """Flux of a scalar model as a function of plain numbers or arrays."""
    return lambda u: model.flux(np.asarray(u, dtype=float)[..., None])[..., 0]


def replace_conservative(config: ExperimentConfig) -> ExperimentConfig:
    return config.updated(conservative=True)
