"""Viscous travelling-wave profiles ``u(t, x) = U(x - sigma t)``.

For conservative systems the profile equation integrates once to
``B(U) U' = f(U) - f(u-) - sigma (U - u-)``, which is solved forwards and
backwards from the mid-chord state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoConnection, NoFlux
from .spectral import deflated_speed, eigensystem
from .systems import SystemModel

RH_TOL = 1e-10
ENDPOINT_REL_TOL = 1e-6
IDENTITY_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class TravellingWaveProfile:
    sigma: float
    u_minus: np.ndarray
    u_plus: np.ndarray
    xi: np.ndarray
    U: np.ndarray
    Uprime: np.ndarray

    @property
    def M(self) -> int:
        return len(self.xi)


def _require_flux(model: SystemModel):
    if model.eval_flux is None:
        raise NoFlux(f"system {model.name!r} has no conservative flux")


def rh_speed(model: SystemModel, u_minus, u_plus) -> float:
    """Shock speed from the Rankine-Hugoniot relation.

    Scalar systems use the chord slope; for ``n > 1`` the least-squares
    speed is returned (see :func:`rh_residual` for the mismatch).
    """
    _require_flux(model)
    um = np.atleast_1d(np.asarray(u_minus, dtype=float))
    up = np.atleast_1d(np.asarray(u_plus, dtype=float))
    du = up - um
    if not np.any(du != 0):
        raise ValueError("u_minus and u_plus coincide")
    df = model.flux(up) - model.flux(um)
    return float(np.dot(df, du) / np.dot(du, du))


def rh_residual(model: SystemModel, u_minus, u_plus, sigma: float) -> float:
    """``|f(u+) - f(u-) - sigma (u+ - u-)|``."""
    _require_flux(model)
    um = np.atleast_1d(np.asarray(u_minus, dtype=float))
    up = np.atleast_1d(np.asarray(u_plus, dtype=float))
    return float(np.linalg.norm(model.flux(up) - model.flux(um) - sigma * (up - um)))


def profile_ode_rhs(model: SystemModel, u, v, sigma):
    """Right-hand side of the second-order profile equation as a first-order system.

    Returns ``(u', v', sigma')`` with ``u' = v``,
    ``v' = B^{-1} (A - sigma) v - B^{-1} (v . DB) v`` and ``sigma' = 0``.
    Batched over leading axes.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    A = model.A(u)
    B = model.B(u)
    dB = model.dB(u, v)
    drift = np.einsum("...jk,...k->...j", A, v) - sigma[..., None] * v
    bend = np.einsum("...jk,...k->...j", dB, v)
    vdot = np.linalg.solve(B, (drift - bend)[..., None])[..., 0]
    return v.copy(), vdot, np.zeros_like(sigma)


def default_xi_span(model: SystemModel, u_minus, u_plus, sigma: float):
    """Window ``[-L, L]`` with ``L = max(40 / min mu, 20 / rate)``.

    ``rate`` is the slowest exponential rate ``|eig(B^{-1}(A - sigma))|`` at the
    end states, so weak shocks (wide profiles) still reach their end states.
    """
    ends = np.stack([u_minus, u_plus])
    spec = eigensystem(model, ends)
    mu_min = float(spec.mus.min())
    rates = np.abs(np.linalg.eigvals(np.linalg.solve(model.B(ends), model.A(ends) - sigma * np.eye(model.n))))
    rates = rates[rates > 1e-12]
    length = 40.0 / mu_min
    if rates.size:
        length = max(length, 20.0 / float(rates.min()))
    return (-length, length)


def profile_conservative(model: SystemModel, u_minus, u_plus, sigma: Optional[float] = None,
                         xi_span=None, M: int = 4001, rtol: float = 1e-12, atol: float = 1e-14
                         ) -> TravellingWaveProfile:
    """Heteroclinic orbit of ``B(U) U' = f(U) - f(u-) - sigma (U - u-)``.

    Parameters
    ----------
    u_minus, u_plus : array_like
        End states at ``xi -> -inf`` and ``xi -> +inf``.
    sigma : float, optional
        Speed; defaults to the Rankine-Hugoniot speed.
    xi_span : (float, float), optional
        Sampling window, default from :func:`default_xi_span`.
    M : int
        Number of samples.

    Raises
    ------
    NoConnection
        If the orbit through the mid-chord state misses an end state.
    """
    _require_flux(model)
    um = np.atleast_1d(np.asarray(u_minus, dtype=float))
    up = np.atleast_1d(np.asarray(u_plus, dtype=float))
    jump = float(np.linalg.norm(up - um))
    if jump == 0.0:
        sig = float(eigensystem(model, um).lambdas[0]) if sigma is None else float(sigma)
        span = xi_span if xi_span is not None else (-40.0, 40.0)
        xi = np.linspace(span[0], span[1], M)
        U = np.broadcast_to(um, (M, model.n)).copy()
        return TravellingWaveProfile(sig, um, up, xi, U, np.zeros_like(U))
    sig = rh_speed(model, um, up) if sigma is None else float(sigma)
    if xi_span is None:
        xi_span = default_xi_span(model, um, up, sig)
    xi = np.linspace(xi_span[0], xi_span[1], M)
    scale = 1.0 + float(np.linalg.norm(model.flux(um)))
    if rh_residual(model, um, up, sig) > RH_TOL * scale:
        raise NoConnection(f"end states violate the Rankine-Hugoniot relation at sigma={sig}")
    f_minus = model.flux(um)

    def field(_, U):
        g = model.flux(U) - f_minus - sig * (U - um)
        return np.linalg.solve(model.B(U), g)

    width = model.state_box[:, 1] - model.state_box[:, 0]
    lo = model.state_box[:, 0] - width
    hi = model.state_box[:, 1] + width

    def leave_box(_, U):
        return float(min((U - lo).min(), (hi - U).min()))

    leave_box.terminal = True
    mid = 0.5 * (um + up)
    pieces = []
    for end in (xi_span[0], xi_span[1]):
        sol = solve_ivp(field, (0.0, end), mid, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=leave_box)
        if sol.status != 0:
            raise NoConnection("profile orbit left the admissible region")
        pieces.append(sol)
    left = xi <= 0.0
    U = np.empty((M, model.n))
    U[left] = pieces[0].sol(xi[left]).T
    U[~left] = pieces[1].sol(xi[~left]).T
    tol = ENDPOINT_REL_TOL * jump
    miss_left = float(np.linalg.norm(U[0] - um))
    miss_right = float(np.linalg.norm(U[-1] - up))
    if miss_left > tol or miss_right > tol:
        raise NoConnection(
            f"orbit misses the end states (left {miss_left:.3e}, right {miss_right:.3e}, tol {tol:.3e})"
        )
    g = model.flux(U) - f_minus - sig * (U - um)
    Uprime = np.linalg.solve(model.B(U), g[..., None])[..., 0]
    return TravellingWaveProfile(sig, um, up, xi, U, Uprime)


def burgers_profile(xi, u_minus: float = 1.0, u_plus: float = -1.0):
    """Closed-form viscous Burgers shock for unit viscosity."""
    amp = 0.5 * (u_minus - u_plus)
    mean = 0.5 * (u_minus + u_plus)
    return mean - amp * np.tanh(0.5 * amp * np.asarray(xi, dtype=float))


@dataclass
class ProfileReport:
    ode_residual: float
    endpoint_residual: tuple
    identity_residual: float
    family: int

    def lines(self):
        return [
            f"ode residual       {self.ode_residual:.3e}",
            f"endpoint residuals {self.endpoint_residual[0]:.3e} {self.endpoint_residual[1]:.3e}",
            f"speed identity     {self.identity_residual:.3e} (family {self.family + 1})",
        ]


def _xi_derivative(values, xi):
    return np.gradient(values, xi, axis=0, edge_order=2)


def verify_profile(model: SystemModel, profile: TravellingWaveProfile, family: Optional[int] = None) -> ProfileReport:
    """Residuals of a sampled profile.

    The ODE residual ``(A - sigma) U' - (B U')'`` and the speed identity
    ``v_xi - mu^{-1} (lambda~ - sigma) v`` (on ``|v| > 1e-6``) are evaluated
    at interior samples with centred differences in ``xi``; ``v`` is the
    eigenbasis amplitude of ``U'`` in the dominant (or given) family.
    """
    xi, U, Up = profile.xi, profile.U, profile.Uprime
    sig = profile.sigma
    flux = np.einsum("pjk,pk->pj", model.B(U), Up)
    drift = np.einsum("pjk,pk->pj", model.A(U), Up) - sig * Up
    ode = np.abs(drift - _xi_derivative(flux, xi))[1:-1]
    ode_res = float(ode.max()) if ode.size else 0.0
    spec = eigensystem(model, U)
    v = np.einsum("pik,pk->pi", spec.P, Up)
    if family is None:
        family = int(np.argmax(np.abs(v).sum(axis=0)))
    vi = v[:, family]
    lam_t = deflated_speed(model, U, family, vi, spec=spec)
    ident = np.abs(_xi_derivative(vi, xi) - (lam_t - sig) * vi / spec.mus[:, family])
    mask = np.abs(vi) > IDENTITY_FLOOR
    mask[[0, -1]] = False
    ident_res = float(ident[mask].max()) if np.any(mask) else 0.0
    ends = (float(np.linalg.norm(U[0] - profile.u_minus)), float(np.linalg.norm(U[-1] - profile.u_plus)))
    return ProfileReport(ode_res, ends, ident_res, family)


def oleinik_admissible(flux, u_minus: float, u_plus: float, samples: int = 200) -> bool:
    """Chord condition for a scalar shock from ``u_minus`` to ``u_plus``.

    True when ``(f(u) - f(u-)) / (u - u-) >= sigma >= (f(u) - f(u+)) / (u - u+)``
    at ``samples`` interior points between the end states.
    """
    um, up = float(u_minus), float(u_plus)
    if um == up:
        return True
    f_m, f_p = float(flux(np.float64(um))), float(flux(np.float64(up)))
    sigma = (f_m - f_p) / (um - up)
    u = um + (up - um) * (np.arange(1, samples + 1) / (samples + 1))
    fu = np.asarray(flux(u), dtype=float)
    left = (fu - f_m) / (u - um)
    right = (fu - f_p) / (u - up)
    slack = 1e-12 * (1.0 + abs(sigma))
    return bool(np.all(left >= sigma - slack) and np.all(right <= sigma + slack))


def estimate_shift(reference: np.ndarray, current: np.ndarray, h: float) -> float:
    """Translation of ``current`` relative to ``reference`` from the gradient cross-correlation.

    The integer lag maximizing the correlation of the discrete gradients is
    refined by a parabola through its neighbours.
    """
    g0 = np.diff(np.asarray(reference, dtype=float).reshape(len(reference), -1), axis=0)
    g1 = np.diff(np.asarray(current, dtype=float).reshape(len(current), -1), axis=0)
    corr = sum(np.correlate(g1[:, k], g0[:, k], mode="full") for k in range(g0.shape[1]))
    lags = np.arange(-len(g0) + 1, len(g0))
    k = int(np.argmax(corr))
    offset = 0.0
    if 0 < k < len(corr) - 1:
        a, b, c = corr[k - 1], corr[k], corr[k + 1]
        denom = a - 2.0 * b + c
        if denom != 0:
            offset = 0.5 * (a - c) / denom
    return (lags[k] + offset) * h
