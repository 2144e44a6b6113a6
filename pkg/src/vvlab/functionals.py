"""Analysis functionals and their discrete dissipation checks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator

from . import kernels
from .cutoffs import CutoffParams, eta_bar, eta_tilde, safe_ratio
from .errors import GapViolated, GridTooLarge, ViscosityFloorViolated
from .solver import derivative_array

MAX_PAIR_GRID = 4096
SMOOTHING_B = {1: 4, 2: 6, 3: 10, 4: 10}
TOL_DISS_FRACTION = 1e-3


def tv(values):
    """Per-component and total variation ``sum_j |u_{j+1} - u_j|``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] < 2:
        raise ValueError("total variation needs at least two cells")
    per = np.abs(np.diff(values, axis=0)).sum(axis=0)
    return per, float(per.sum())


def kernel_value(s, c, c1):
    """Transversal kernel: ``1/c`` for ``s >= 0``, ``exp(c s / (2 c1)) / c`` for ``s < 0``."""
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0.0, 1.0 / c, np.exp(np.minimum(s, 0.0) * c / (2.0 * c1)) / c)


def _check_size(m):
    if m > MAX_PAIR_GRID:
        raise GridTooLarge(f"pair functionals are limited to M <= {MAX_PAIR_GRID} (got {m})")


def transversal_q(z, z_sharp, c: float, c1: float, h: float, x=None, backend=None) -> float:
    """``h^2 sum_{j,k} K(x_j - x_k) |z_j| |z#_k|`` by direct double sum.

    ``x`` defaults to ``h * arange(M)``; only differences of positions matter.
    """
    z = np.ascontiguousarray(np.abs(np.asarray(z, dtype=float)))
    zs = np.ascontiguousarray(np.abs(np.asarray(z_sharp, dtype=float)))
    if z.shape != zs.shape or z.ndim != 1:
        raise ValueError("z and z_sharp must be 1-D arrays on the same grid")
    if not (c > 0 and c1 > 0):
        raise ValueError("c and c1 must be positive")
    _check_size(len(z))
    if x is None:
        x = h * np.arange(len(z), dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    impl = backend or kernels
    return h * h * impl.q_sum(x, z, zs, float(c), float(c1))


def area_functional(zeta1, zeta2, h: float, backend=None) -> float:
    """``1/2 h^2 sum_{j<k} |zeta1_j zeta2_k - zeta1_k zeta2_j|``."""
    z1 = np.ascontiguousarray(zeta1, dtype=float)
    z2 = np.ascontiguousarray(zeta2, dtype=float)
    if z1.shape != z2.shape or z1.ndim != 1:
        raise ValueError("zeta1 and zeta2 must be 1-D arrays on the same grid")
    _check_size(len(z1))
    impl = backend or kernels
    return 0.5 * h * h * impl.area_sum(z1, z2)


def length_functional(v, w, h: float) -> float:
    """``h sum sqrt(v^2 + w^2)``."""
    return float(h * np.sqrt(np.asarray(v) ** 2 + np.asarray(w) ** 2).sum())


def _l1(f, h):
    return float(h * np.abs(f).sum())


@dataclass
class DissipationSeries:
    """Per-step residuals ``D_k`` of a dissipation inequality.

    ``passed[k]`` is ``D_k <= tol_k`` with ``tol_k`` a fraction of the
    running maximum of the functional.
    """

    times: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    tolerances: np.ndarray
    extras: dict

    @property
    def passed(self) -> np.ndarray:
        return self.residuals <= self.tolerances

    @property
    def pass_fraction(self) -> float:
        return float(self.passed.mean()) if len(self.residuals) else 1.0


def _running_tolerance(values, fraction):
    return fraction * np.maximum.accumulate(np.abs(values))[:-1]


def kernel_constants(lam, lam_sharp, mu, mu_sharp, h):
    """Kernel constants ``(c, c1)`` from the sampled speeds and viscosities.

    ``c`` is the gap between the two speed ranges minus twice the largest
    viscosity slope; ``c1`` is the largest viscosity.
    """
    lam = np.asarray(lam)
    lam_sharp = np.asarray(lam_sharp)
    gap = float(lam_sharp.min() - lam.max())
    slope = 0.0
    for m in (mu, mu_sharp):
        m = np.asarray(m, dtype=float)
        if m.ndim == 1:
            m = m[None, :]
        slope = max(slope, float(np.abs(np.diff(m, axis=-1)).max() / h) if m.shape[-1] > 1 else 0.0)
    c = gap - 2.0 * slope
    if gap <= 0 or c <= 0:
        raise GapViolated(f"speed gap {gap:.4g} with viscosity slope {slope:.4g} leaves no room")
    c1 = float(max(np.max(mu), np.max(mu_sharp)))
    return c, c1


def transversal_dissipation_check(times, z, z_sharp, lam, lam_sharp, mu, mu_sharp, phi, phi_sharp, h,
                                  c=None, c1=None, tol_fraction: float = TOL_DISS_FRACTION) -> DissipationSeries:
    """Discrete check of ``dQ/dt + int |z z#| <= (|z| |phi#| + |z#| |phi|) / c``.

    All field arguments are arrays ``(K, M)`` over ``K`` snapshot times.
    ``D_k`` uses the forward difference of ``Q`` and the right-hand side at
    ``t_k``.  Also reports the time-integrated interaction ``int int |z z#|``
    and the source budgets ``E = |z(0)| + int |phi| dt`` for each family.
    """
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    z, zs = np.asarray(z), np.asarray(z_sharp)
    if c is None or c1 is None:
        c_m, c1_m = kernel_constants(lam, lam_sharp, mu, mu_sharp, h)
        c = c_m if c is None else c
        c1 = c1_m if c1 is None else c1
    else:
        gap = float(np.min(lam_sharp) - np.max(lam))
        if gap < c:
            raise GapViolated(f"measured speed gap {gap:.4g} below c={c:.4g}")
    Q = np.array([transversal_q(z[k], zs[k], c, c1, h) for k in range(len(t))])
    inter = np.array([_l1(z[k] * zs[k], h) for k in range(len(t))])
    zn = np.array([_l1(z[k], h) for k in range(len(t))])
    zsn = np.array([_l1(zs[k], h) for k in range(len(t))])
    pn = np.array([_l1(phi[k], h) for k in range(len(t))])
    psn = np.array([_l1(phi_sharp[k], h) for k in range(len(t))])
    dt = np.diff(t)
    source = (zn * psn + zsn * pn) / c
    D = np.diff(Q) / dt + inter[:-1] - source[:-1]
    tol = _running_tolerance(Q, tol_fraction)
    total_interaction = float(trapezoid(inter, t))
    E1 = zn[0] + float(np.sum(0.5 * (pn[1:] + pn[:-1]) * dt))
    E2 = zsn[0] + float(np.sum(0.5 * (psn[1:] + psn[:-1]) * dt))
    extras = dict(c=c, c1=c1, interaction=total_interaction, E1=E1, E2=E2, bound=E1 * E2 / c)
    return DissipationSeries(t, Q, D, tol, extras)


def area_dissipation_check(times, v, w, mu, phi, psi, h, boundary="extrapolate",
                           tol_fraction: float = TOL_DISS_FRACTION) -> DissipationSeries:
    """Discrete check of ``dA/dt <= -int mu |v_x w - v w_x| + |v| |psi| + |w| |phi|``.

    Field arguments are arrays ``(K, M)`` for a single family.
    """
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    K = len(t)
    A = np.array([area_functional(v[k], w[k], h) for k in range(K)])
    rhs = np.empty(K)
    for k in range(K):
        vx = derivative_array(v[k], h, 1, boundary)
        wx = derivative_array(w[k], h, 1, boundary)
        rhs[k] = (
            -_l1(mu[k] * np.abs(vx * w[k] - v[k] * wx), h)
            + _l1(v[k], h) * _l1(psi[k], h)
            + _l1(w[k], h) * _l1(phi[k], h)
        )
    D = np.diff(A) / np.diff(t) - rhs[:-1]
    tol = _running_tolerance(A, tol_fraction)
    return DissipationSeries(t, A, D, tol, {})


def energy_functionals(comp, params: CutoffParams = CutoffParams()):
    """Cutoff energies per family.

    Returns a dict of ``(n,)`` arrays:

    ``Ev``, ``Ew``
        ``int 1{|w/v| >= delta1/2} v_x^2`` and the same with ``w_x^2``.
    ``curvature``
        ``int 1{|w/v| <= 3 delta1, v^{2N} >= eps} |v| |(w/v)_x|^2``.
    ``Ev_smooth``, ``Ew_smooth``
        The same energies weighted by ``eta_tilde(w/v)`` and ``eta_bar(w/v)``.
    """
    v, w, h = comp.v, comp.w, comp.h
    d = params.delta1
    vx = comp.dx(v)
    wx = comp.dx(w)
    ratio = safe_ratio(w, v, params.v_floor)
    far = np.abs(ratio) >= 0.5 * d
    tiny = np.abs(v) < params.v_floor
    ratio_x = np.where(tiny, 0.0, (wx * v - w * vx) / np.where(tiny, 1.0, v) ** 2)
    zone = (np.abs(ratio) <= 3.0 * d) & (v ** (2 * params.N) >= params.epsilon_cut)
    return {
        "Ev": h * np.where(far, vx**2, 0.0).sum(axis=0),
        "Ew": h * np.where(far, wx**2, 0.0).sum(axis=0),
        "curvature": h * np.where(zone, np.abs(v) * ratio_x**2, 0.0).sum(axis=0),
        "Ev_smooth": h * (eta_tilde(ratio, d) * vx**2).sum(axis=0),
        "Ew_smooth": h * (eta_bar(ratio, d) * wx**2).sum(axis=0),
    }


@dataclass
class CoordinateMap:
    """Change of variable ``X(x) = int_0^x d^{-1/2}`` on a grid.

    ``forward(f)`` returns ``f(X(x_j))`` and ``inverse(g)`` returns
    ``g(X^{-1}(x_j))``, both by monotone cubic interpolation with zero fill
    outside the grid.
    """

    x: np.ndarray
    X: np.ndarray
    d_max: float

    def _interp(self, nodes, values, at):
        interp = PchipInterpolator(nodes, values, extrapolate=False)
        out = interp(at)
        return np.nan_to_num(out, nan=0.0)

    def forward(self, f):
        return self._interp(self.x, np.asarray(f, dtype=float), self.X)

    def inverse(self, g):
        x_of_X = PchipInterpolator(self.X, self.x, extrapolate=True)
        return self._interp(self.x, np.asarray(g, dtype=float), x_of_X(self.x))

    def norm_bound(self, f, h):
        """``(|T f|_1, sqrt(m) |f|_1)``."""
        return _l1(self.forward(f), h), np.sqrt(self.d_max) * _l1(f, h)


def rescale_coordinates(x, d, c1: float) -> CoordinateMap:
    """Build the coordinate map for the viscosity profile ``d`` sampled at ``x``.

    Raises
    ------
    ViscosityFloorViolated
        If ``d`` drops below ``c1`` anywhere on the grid.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d < c1):
        raise ViscosityFloorViolated(f"viscosity {d.min():.4g} below floor {c1:.4g}")
    X = cumulative_trapezoid(1.0 / np.sqrt(d), x, initial=0.0)
    origin = np.interp(0.0, x, X) if x[0] <= 0.0 <= x[-1] else 0.0
    return CoordinateMap(x, X - origin, float(d.max()))


def smoothing_exponents(k: int):
    """Exponents ``(a_k, b_k)`` of the smoothing bound for ``k = 1..4``.

    ``a_k = a_{k-1} + 1 + floor(k/2)`` with ``a_0 = 0``; ``b = 4, 6, 10, 10``.
    """
    if k not in SMOOTHING_B:
        raise ValueError("smoothing exponents are defined for k = 1..4")
    a = 0
    for j in range(1, k + 1):
        a += 1 + j // 2
    return a, SMOOTHING_B[k]


def smoothing_bound(k: int, kappa: float, delta0: float, t):
    """``2^{a_k} kappa^{b_k} delta0 / t^{k/2}``."""
    a, b = smoothing_exponents(k)
    return 2.0**a * kappa**b * delta0 / np.asarray(t, dtype=float) ** (0.5 * k)
