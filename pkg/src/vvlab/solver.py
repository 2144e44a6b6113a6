"""Explicit finite-difference solver for ``u_t + A(u) u_x = eps (B(u) u_x)_x``.

Cells are centred: ``x_j = x0 + (j + 1/2) h`` for ``j = 0..M-1``.  Two ghost
cells per side are filled by constant extrapolation or periodic wrap.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

import numpy as np

from . import kernels
from .errors import NonFiniteState, StateLeftBox
from .spectral import eigensystem
from .systems import SystemModel

BOUNDARIES = ("extrapolate", "periodic")
BOX_INFLATION = 0.1
GHOSTS = 2


@dataclass(frozen=True, eq=False)
class GridField:
    """States on a uniform cell-centred grid.

    Attributes
    ----------
    x0 : float
        Left edge of the first cell.
    h : float
        Cell width.
    values : ndarray, shape (M, n)
    boundary : {"extrapolate", "periodic"}
    time : float
    """

    x0: float
    h: float
    values: np.ndarray
    boundary: str = "extrapolate"
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        object.__setattr__(self, "values", vals)
        if not self.h > 0:
            raise ValueError("h must be positive")
        if vals.shape[0] < 8:
            raise ValueError("a grid needs at least 8 cells")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.time < 0:
            raise ValueError("time must be non-negative")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + (np.arange(self.M) + 0.5) * self.h

    @property
    def xmax(self) -> float:
        return self.x0 + self.M * self.h

    def with_values(self, values, time: Optional[float] = None) -> "GridField":
        return replace(self, values=values, time=self.time if time is None else time)

    @classmethod
    def from_function(cls, func, xmin, xmax, M, boundary="extrapolate", time=0.0):
        """Sample ``func(x) -> (M, n)`` or ``(M,)`` at the cell centres of ``[xmin, xmax]``."""
        h = (xmax - xmin) / M
        x = xmin + (np.arange(M) + 0.5) * h
        return cls(xmin, h, np.asarray(func(x), dtype=float), boundary, time)


@dataclass(frozen=True)
class SolverConfig:
    cfl_advective: float = 0.4
    cfl_parabolic: float = 0.4
    epsilon: float = 1.0
    t_end: float = 1.0
    snapshot_stride: int = 1
    conservative: bool = False

    def __post_init__(self):
        if not 0 < self.cfl_advective <= 1:
            raise ValueError("cfl_advective must lie in (0, 1]")
        if not 0 < self.cfl_parabolic <= 0.5:
            raise ValueError("cfl_parabolic must lie in (0, 0.5]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be positive")


def pad(values: np.ndarray, boundary: str, width: int = GHOSTS) -> np.ndarray:
    """Append ``width`` ghost cells on each side."""
    if boundary == "periodic":
        left, right = values[-width:], values[:width]
    else:
        left = np.repeat(values[:1], width, axis=0)
        right = np.repeat(values[-1:], width, axis=0)
    return np.concatenate([left, values, right], axis=0)


def dt_stable(model: SystemModel, field: GridField, config: SolverConfig) -> float:
    """Largest step allowed by the advective and parabolic CFL limits."""
    spec = eigensystem(model, field.values)
    lam_max = float(np.abs(spec.lambdas).max())
    mu_max = float(spec.mus.max())
    dt = config.cfl_parabolic * field.h**2 / (config.epsilon * mu_max)
    if lam_max > 0:
        dt = min(dt, config.cfl_advective * field.h / lam_max)
    return dt


def rhs(model: SystemModel, values: np.ndarray, h: float, epsilon: float, boundary: str,
        conservative: bool = False, backend=None) -> np.ndarray:
    """Semidiscrete right-hand side, shape ``(M, n)``."""
    impl = backend or kernels
    ue = np.ascontiguousarray(pad(values, boundary))
    mids = 0.5 * (ue[1:-2] + ue[2:-1])
    bmid = np.ascontiguousarray(model.B(mids))
    if conservative:
        fe = np.ascontiguousarray(model.flux(ue))
        a = np.zeros((values.shape[0], 1, 1))
    else:
        fe = np.empty((0, 0))
        a = np.ascontiguousarray(model.A(values))
    return impl.stencil_rhs(ue, a, bmid, fe, float(h), float(epsilon), bool(conservative))


def compute_ut(model: SystemModel, field: GridField, epsilon: float = 1.0, conservative: bool = False) -> np.ndarray:
    """Time derivative ``eps (B u_x)_x - A u_x`` with the stepping stencils."""
    return rhs(model, field.values, field.h, epsilon, field.boundary, conservative)


def _check_state(model: SystemModel, values: np.ndarray):
    if not np.all(np.isfinite(values)):
        raise NonFiniteState("non-finite value in the solution")
    if not model.contains(values, inflate=BOX_INFLATION):
        raise StateLeftBox(
            f"state range [{values.min(axis=0)}, {values.max(axis=0)}] left the inflated box"
        )


def step(model: SystemModel, field: GridField, config: SolverConfig, dt: float) -> GridField:
    """One Heun (two-stage SSP Runge-Kutta) step."""
    u0 = field.values
    args = (field.h, config.epsilon, field.boundary, config.conservative)
    k1 = rhs(model, u0, *args)
    u1 = u0 + dt * k1
    if not np.all(np.isfinite(u1)):
        raise NonFiniteState("non-finite value in the predictor stage")
    k2 = rhs(model, u1, *args)
    u2 = 0.5 * (u0 + u1 + dt * k2)
    _check_state(model, u2)
    return field.with_values(u2, field.time + dt)


def derivative_array(values: np.ndarray, h: float, k: int, boundary: str = "extrapolate") -> np.ndarray:
    """k-th derivative (k = 1, 2, 3) with central stencils along axis 0."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2 * k + 2:
        raise ValueError(f"need at least {2 * k + 2} cells for order {k}")
    ue = pad(values, boundary)
    if k == 1:
        return (ue[3:-1] - ue[1:-3]) / (2.0 * h)
    if k == 2:
        return (ue[3:-1] - 2.0 * ue[2:-2] + ue[1:-3]) / h**2
    if k == 3:
        return (-ue[:-4] + 2.0 * ue[1:-3] - 2.0 * ue[3:-1] + ue[4:]) / (2.0 * h**3)
    raise ValueError("derivative order must be 1, 2 or 3")


def derivative(field: GridField, k: int) -> np.ndarray:
    """k-th x-derivative of a field, shape ``(M, n)``."""
    return derivative_array(field.values, field.h, k, field.boundary)


def l1_norm(values, h: float):
    """Per-component and total ``h * sum |.|``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    per = h * np.abs(values).sum(axis=0)
    return per, float(per.sum())


def simulate(
    model: SystemModel,
    field: GridField,
    config: SolverConfig,
    snapshot_times: Optional[Iterable[float]] = None,
    on_step: Optional[Callable[[GridField, float], None]] = None,
    dt_fixed: Optional[float] = None,
) -> list[GridField]:
    """Advance to ``config.t_end`` and return the requested snapshots.

    Without ``snapshot_times`` every ``snapshot_stride``-th accepted step is
    recorded (the initial field is always included).  Steps are shortened to
    land exactly on each snapshot time.  The time step is recomputed from
    ``dt_stable`` every step unless ``dt_fixed`` is given.
    """
    snaps = [field]
    targets = sorted(set(float(t) for t in snapshot_times)) if snapshot_times is not None else None
    if targets is not None:
        targets = [t for t in targets if field.time < t <= config.t_end + 1e-14]
    t_end = config.t_end
    steps = 0
    current = field
    while current.time < t_end - 1e-14 * max(1.0, t_end):
        dt = dt_fixed if dt_fixed is not None else dt_stable(model, current, config)
        stop = t_end
        if targets:
            stop = min(stop, targets[0])
        hit = current.time + dt >= stop - 1e-14 * max(1.0, stop)
        if hit:
            dt = stop - current.time
        new = step(model, current, config, dt)
        if hit:
            new = new.with_values(new.values, stop)
        steps += 1
        if on_step is not None:
            on_step(new, dt)
        if targets is not None:
            if targets and hit and stop == targets[0]:
                snaps.append(new)
                targets.pop(0)
        elif steps % config.snapshot_stride == 0 or new.time >= t_end - 1e-14 * max(1.0, t_end):
            snaps.append(new)
        current = new
    return snaps
