"""Gradient decomposition along (approximate) travelling-wave directions.

Given a snapshot ``u`` and its time derivative ``u_t`` we solve, pointwise,

    u_x = sum_i v_i r~_i,        u_t = sum_i (w_i - lambda_i* v_i) r~_i,

where ``r~_i`` is either the eigenvector ``r_i(u)`` ("eigenbasis") or its
first-order travelling-wave correction ``r_i + s_i sum_j c_ij(u, sigma_i) r_j``
with ``s_i = xi(w_i/v_i) vbar_i`` ("travelling1").  Speeds are
``sigma_i = lambda_i* - theta(w_i / v_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .cutoffs import CutoffParams, chi, eta, safe_ratio, theta, xi, xi_prime
from .errors import DataTooLarge, NewtonDivergence, ResonantDenominator
from .solver import GridField, derivative_array, pad, rhs
from .spectral import SpectralData, _correction_numerators, deflated_speed, eigensystem
from .systems import SystemModel

MODES = ("eigenbasis", "travelling1")
NEWTON_MAX_ITER = 50


@dataclass
class WaveComponents:
    """Per-point decomposition of one snapshot.

    Arrays indexed ``[point, family]`` unless noted.  ``basis[p, i]`` is the
    vector ``r~_i`` at point ``p``.
    """

    mode: str
    x: np.ndarray
    h: float
    boundary: str
    time: float
    u_star: np.ndarray
    lambda_star: np.ndarray
    v: np.ndarray
    w: np.ndarray
    sigma: np.ndarray
    ratio: np.ndarray
    vbar: np.ndarray
    amplitude: np.ndarray
    lambdas: np.ndarray
    mus: np.ndarray
    lambda_tilde: np.ndarray
    basis: np.ndarray
    recon_residual: np.ndarray
    recon_residual_t: np.ndarray
    coeffs: Optional[np.ndarray] = None
    coeffs_sigma: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    zhat: Optional[np.ndarray] = None
    iterations: int = 0
    extras: dict = dc_field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.v.shape[0]

    @property
    def n(self) -> int:
        return self.v.shape[1]

    def dx(self, values, k: int = 1) -> np.ndarray:
        """Component derivative with the solver stencils."""
        return derivative_array(values, self.h, k, self.boundary)


def amplitude_cutoff(v: np.ndarray, params: CutoffParams) -> np.ndarray:
    """``vbar_i = v_i chi(v_i^{2N}/eps) prod_{j != i} eta(|v_j^2 / v_i|)``."""
    n = v.shape[-1]
    out = v * chi(v ** (2 * params.N) / params.epsilon_cut)
    tiny = np.abs(v) < params.v_floor
    safe_v = np.where(tiny, 1.0, v)
    for i in range(n):
        for j in range(n):
            if j != i:
                out[..., i] = out[..., i] * eta(np.abs(v[..., j] ** 2 / safe_v[..., i]))
    return np.where(tiny, 0.0, out)


class _TravellingBasis:
    """Corrected basis ``r~_i(u, s_i, sigma_i)`` at fixed states."""

    def __init__(self, model: SystemModel, u: np.ndarray, spec: SpectralData, lambda_star, params):
        self.model = model
        self.spec = spec
        self.lambda_star = lambda_star
        self.params = params
        n = model.n
        self.num = np.zeros(u.shape[:-1] + (n, n))
        if n > 1:
            for i in range(n):
                self.num[..., i, :] = _correction_numerators(model, u, spec, i)
        self.eye = np.eye(n, dtype=bool)

    def coefficients(self, sigma):
        """``c[p, i, j]`` and ``d c / d sigma`` for the speeds ``sigma[p, i]``."""
        lam = self.spec.lambdas[..., None, :]
        mu = self.spec.mus[..., None, :]
        lam_i = self.spec.lambdas[..., :, None]
        mu_i = self.spec.mus[..., :, None]
        sig = sigma[..., :, None]
        den = (lam - sig) - 2.0 * mu / mu_i * (lam_i - sig)
        off = ~self.eye
        if self.model.n > 1 and np.any(np.abs(den[..., off]) < self.model.c0_claimed / 4.0):
            raise ResonantDenominator("travelling-wave correction denominator below c0/4")
        den = np.where(off, den, 1.0)
        c = np.where(off, self.num / den, 0.0)
        dc = np.where(off, c * (1.0 - 2.0 * mu / mu_i) / den, 0.0)
        return c, dc

    def evaluate(self, v, w):
        p = self.params
        ratio = safe_ratio(w, v, p.v_floor)
        sigma = self.lambda_star - theta(ratio, p.delta1)
        vbar = amplitude_cutoff(v, p)
        s = xi(ratio, p.delta1) * vbar
        c, dc = self.coefficients(sigma)
        R = self.spec.P_inv
        basis = np.swapaxes(R, -1, -2) + s[..., None] * np.einsum("...ij,...kj->...ik", c, R)
        return basis, ratio, sigma, vbar, s, c, dc


def _residuals(basis, v, w, lambda_star, ux, ut):
    r1 = np.einsum("...i,...ik->...k", v, basis) - ux
    r2 = np.einsum("...i,...ik->...k", w - lambda_star * v, basis) - ut
    return np.concatenate([r1, r2], axis=-1)


def _newton(tb: _TravellingBasis, v0, w0, ux, ut, tol):
    n = v0.shape[-1]
    X = np.concatenate([v0, w0], axis=-1)
    ls = tb.lambda_star

    def F(Xc):
        basis = tb.evaluate(Xc[..., :n], Xc[..., n:])[0]
        return _residuals(basis, Xc[..., :n], Xc[..., n:], ls, ux, ut)

    scale = 1.0 + np.abs(ux).max(axis=-1) + np.abs(ut).max(axis=-1)
    res = F(X)
    norm = np.abs(res).max(axis=-1)
    for it in range(NEWTON_MAX_ITER + 1):
        active = norm > tol * scale
        if not np.any(active):
            return X, it
        if it == NEWTON_MAX_ITER:
            break
        idx = np.nonzero(active)[0]
        Xa = X[idx]
        sub = _Subset(tb, idx)
        J = np.empty(Xa.shape + (2 * n,))
        for k in range(2 * n):
            step = 1e-7 * (1.0 + np.abs(Xa[:, k]))
            Xp = Xa.copy()
            Xm = Xa.copy()
            Xp[:, k] += step
            Xm[:, k] -= step
            J[:, :, k] = (sub.F(Xp, ux[idx], ut[idx]) - sub.F(Xm, ux[idx], ut[idx])) / (2.0 * step[:, None])
        try:
            delta = np.linalg.solve(J, -res[idx][..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence("singular Jacobian in the decomposition") from exc
        lam = np.ones(len(idx))
        for _ in range(30):
            trial = Xa + lam[:, None] * delta
            r_trial = sub.F(trial, ux[idx], ut[idx])
            n_trial = np.abs(r_trial).max(axis=-1)
            worse = n_trial >= norm[idx]
            if not np.any(worse):
                break
            lam = np.where(worse, 0.5 * lam, lam)
        X[idx] = trial
        res[idx] = r_trial
        norm[idx] = n_trial
    raise NewtonDivergence(
        f"decomposition did not converge in {NEWTON_MAX_ITER} iterations "
        f"(worst residual {norm.max():.3e})"
    )


class _Subset:
    """Restriction of a travelling basis to a subset of grid points."""

    def __init__(self, tb: _TravellingBasis, idx):
        self.tb = _TravellingBasis.__new__(_TravellingBasis)
        self.tb.model = tb.model
        self.tb.params = tb.params
        self.tb.lambda_star = tb.lambda_star
        self.tb.eye = tb.eye
        self.tb.num = tb.num[idx]
        spec = tb.spec
        self.tb.spec = SpectralData(spec.lambdas[idx], spec.mus[idx], spec.P[idx], spec.P_inv[idx])

    def F(self, X, ux, ut):
        n = X.shape[-1] // 2
        basis = self.tb.evaluate(X[..., :n], X[..., n:])[0]
        return _residuals(basis, X[..., :n], X[..., n:], self.tb.lambda_star, ux, ut)


def decompose_field(
    model: SystemModel,
    field: GridField,
    ut,
    params: CutoffParams = CutoffParams(),
    mode: str = "eigenbasis",
    u_star=None,
    check_size: bool = True,
) -> WaveComponents:
    """Decompose ``u_x`` and ``u_t`` of one snapshot into wave amplitudes.

    Parameters
    ----------
    model : SystemModel
    field : GridField
    ut : ndarray, shape (M, n)
        Time derivative, typically :func:`vvlab.solver.compute_ut`.
    params : CutoffParams
    mode : {"eigenbasis", "travelling1"}
    u_star : array_like, optional
        Reference state; defaults to the left far-field value ``field.values[0]``.
    check_size : bool
        Enforce the small-data guard on ``u_x`` and ``u_xx``.

    Raises
    ------
    DataTooLarge
        If ``max |u_x|`` or ``max |u_xx|`` exceeds the guard.
    NewtonDivergence
        If the travelling-basis solve does not converge.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    u = field.values
    ut = np.asarray(ut, dtype=float).reshape(u.shape)
    ux = derivative_array(u, field.h, 1, field.boundary)
    if check_size:
        threshold = params.data_threshold
        if threshold is None:
            threshold = 0.5 * model.c0_claimed
        uxx = derivative_array(u, field.h, 2, field.boundary)
        size = max(np.abs(ux).max(), np.abs(uxx).max())
        if size > threshold:
            raise DataTooLarge(f"derivative size {size:.3e} exceeds guard {threshold:.3e}")
    u_star = u[0] if u_star is None else np.asarray(u_star, dtype=float)
    lambda_star = eigensystem(model, u_star).lambdas
    spec = eigensystem(model, u)

    v = np.einsum("...ik,...k->...i", spec.P, ux)
    w = np.einsum("...ik,...k->...i", spec.P, ut) + lambda_star * v
    iterations = 0
    coeffs = coeffs_sigma = None
    if mode == "travelling1" and model.n > 1:
        tb = _TravellingBasis(model, u, spec, lambda_star, params)
        X, iterations = _newton(tb, v, w, ux, ut, params.newton_tol)
        v, w = X[..., : model.n], X[..., model.n :]
        basis, ratio, sigma, vbar, amp, coeffs, coeffs_sigma = tb.evaluate(v, w)
    else:
        ratio = safe_ratio(w, v, params.v_floor)
        sigma = lambda_star - theta(ratio, params.delta1)
        vbar = amplitude_cutoff(v, params)
        amp = xi(ratio, params.delta1) * vbar
        if mode == "eigenbasis":
            amp = np.zeros_like(v)
        basis = spec.right_vecs.copy()

    lam_tilde = np.empty_like(v)
    for i in range(model.n):
        if mode == "travelling1" and model.n > 1:
            lam_tilde[:, i] = deflated_speed(model, u, i, v[:, i], amp[:, i], sigma[:, i], spec)
        else:
            lam_tilde[:, i] = deflated_speed(model, u, i, v[:, i], spec=spec)

    recon = np.einsum("...i,...ik->...k", v, basis) - ux
    recon_t = np.einsum("...i,...ik->...k", w - lambda_star * v, basis) - ut
    return WaveComponents(
        mode=mode,
        x=field.x,
        h=field.h,
        boundary=field.boundary,
        time=field.time,
        u_star=u_star,
        lambda_star=lambda_star,
        v=v,
        w=w,
        sigma=sigma,
        ratio=ratio,
        vbar=vbar,
        amplitude=amp,
        lambdas=spec.lambdas,
        mus=spec.mus,
        lambda_tilde=lam_tilde,
        basis=basis,
        recon_residual=np.abs(recon).max(axis=-1),
        recon_residual_t=np.abs(recon_t).max(axis=-1),
        coeffs=coeffs,
        coeffs_sigma=coeffs_sigma,
        iterations=iterations,
    )


# -- effective fluxes ----------------------------------------------------------


def interaction_coefficients(comp: WaveComponents, params: CutoffParams):
    """Coupling matrices ``a[p, i, j]`` and ``a_hat[p, i, j]`` (zero diagonal)."""
    M, n = comp.v.shape
    a = np.zeros((M, n, n))
    a_hat = np.zeros((M, n, n))
    if comp.coeffs is None or n == 1:
        return a, a_hat
    d = params.delta1
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            # psi_ji = s_j c_i(u, sigma_j): the correction of family j along r_i
            psi_v = comp.coeffs[:, j, i]
            psi_sigma = comp.amplitude[:, j] * comp.coeffs_sigma[:, j, i]
            psi = comp.amplitude[:, j] * comp.coeffs[:, j, i]
            b = xi_prime(comp.ratio[:, j], d) * comp.vbar[:, j] * psi_v - psi_sigma
            b_hat = psi + ((comp.lambda_star[i] - comp.lambda_star[j]) + comp.ratio[:, j]) * b
            a[:, i, j] = comp.mus[:, i] * b
            a_hat[:, i, j] = comp.mus[:, i] * b_hat
    return a, a_hat


def effective_fluxes(comp: WaveComponents, params: CutoffParams = CutoffParams()):
    """Fluxes ``z_i`` and ``zhat_i``; also stored on ``comp``.

    ``z_i = mu_i v_{i,x} - (lambda~_i - lambda_i*) v_i + sum_j a_ij (w_{j,x} - (w_j/v_j) v_{j,x})``
    and the same with ``w_i`` and ``a_hat`` for ``zhat_i``.
    """
    vx = comp.dx(comp.v)
    wx = comp.dx(comp.w)
    shift = comp.lambda_tilde - comp.lambda_star
    z = comp.mus * vx - shift * comp.v
    zhat = comp.mus * wx - shift * comp.w
    if comp.coeffs is not None and comp.n > 1:
        a, a_hat = interaction_coefficients(comp, params)
        cross = wx - comp.ratio * vx
        z = z + np.einsum("pij,pj->pi", a, cross)
        zhat = zhat + np.einsum("pij,pj->pi", a_hat, cross)
    comp.z = z
    comp.zhat = zhat
    return z, zhat


# -- source terms ----------------------------------------------------------------

LAMBDA_NAMES = ("Lam1", "Lam2", "Lam3", "Lam4", "Lam5", "Lam6", "Lam61", "Lam7", "Lam8")


def lambda_terms(comp: WaveComponents, params: CutoffParams = CutoffParams()):
    """Pointwise interaction/curvature source terms and their L1 norms.

    Returns
    -------
    fields : dict
        Name -> array ``(M, n)``.
    norms : dict
        Name -> array ``(n,)`` of ``h * sum |.|``.
    """
    if comp.z is None:
        effective_fluxes(comp, params)
    v, w, z, zh = comp.v, comp.w, comp.z, comp.zhat
    vx, vxx, vxxx = (comp.dx(v, k) for k in (1, 2, 3))
    wx, wxx, wxxx = (comp.dx(w, k) for k in (1, 2, 3))
    zx, zhx = comp.dx(z), comp.dx(zh)
    av, aw = np.abs(v), np.abs(w)
    M, n = v.shape
    d = params.delta1
    ratio = comp.ratio

    other = np.ones((n, n)) - np.eye(n)

    def cross_sum(weights_j):
        # sum over j != i of weights_j[:, j]
        return weights_j @ other

    own1 = av + np.abs(vx) + np.abs(vxx) + aw + np.abs(wx) + np.abs(wxx)
    other1 = av + np.abs(vx) + aw + np.abs(wx) + np.abs(vxx) + np.abs(wxx)
    lam1 = own1 * cross_sum(other1)
    lam2 = av * cross_sum((np.abs(vxxx) + np.abs(wxxx)) * (aw + av))

    tiny = av < params.v_floor
    safe_v = np.where(tiny, 1.0, v)
    ratio_x = np.where(tiny, 0.0, (wx * v - w * vx) / safe_v**2)
    curvature_zone = (np.abs(ratio) <= 3.0 * d) & (v ** (2 * params.N) >= params.epsilon_cut)
    lam3 = np.where(curvature_zone, av * ratio_x**2, 0.0)
    lam4 = np.abs(wx * v - w * vx)
    lam5 = np.abs(wxx * v - w * vxx)
    far = np.abs(ratio) >= 0.5 * d
    lam6 = np.where(far, vx**2, 0.0)
    lam61 = np.where(far, wx**2, 0.0)

    az, azh = np.abs(z), np.abs(zh)
    lam7 = (az + azh) * cross_sum(av + aw + np.abs(vx) + np.abs(wx) + az + azh) + (
        np.abs(zx) + np.abs(zhx)
    ) * cross_sum(av + aw + az + azh)
    lam8 = (
        np.abs(z * wx - w * zx)
        + np.abs(z * vx - v * zx)
        + np.abs(zh * wx - w * zhx)
        + np.abs(zh * vx - v * zhx)
    )
    fields = dict(zip(LAMBDA_NAMES, (lam1, lam2, lam3, lam4, lam5, lam6, lam61, lam7, lam8)))
    norms = {k: comp.h * val.sum(axis=0) for k, val in fields.items()}
    return fields, norms


# -- residuals of the diagonal equations -------------------------------------------


def _transport_operator(q, speed, mu, h, boundary):
    """``(speed q)_x - (mu q_x)_x`` with the solver's diffusion stencil."""
    adv = derivative_array(speed * q, h, 1, boundary)
    qe = pad(q, boundary)
    me = pad(mu, boundary)
    mu_face = 0.5 * (me[1:-2] + me[2:-1])
    flux = mu_face * (qe[2:-1] - qe[1:-2])
    return adv - (flux[1:] - flux[:-1]) / h**2


def _time_derivative(values: Sequence[np.ndarray], times: Sequence[float]):
    """Centred differences in time (one-sided at the ends)."""
    t = np.asarray(times, dtype=float)
    arr = np.stack(values)
    return np.gradient(arr, t, axis=0)


@dataclass
class DiagonalResiduals:
    times: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    h: float
    ratio: np.ndarray

    def norms(self):
        return {k: self.h * np.abs(getattr(self, k)).sum(axis=1) for k in ("phi", "psi", "Phi", "Psi")}


def diagonal_residuals(trajectory: Sequence[WaveComponents], params: CutoffParams = CutoffParams(),
                       delta0: float = 1.0) -> DiagonalResiduals:
    """Residuals of the transport equations for ``v, w, z, zhat`` along a trajectory.

    The time derivative uses the snapshot times (centred where possible).  The
    diagnostic ratio divides ``int |phi_i|`` by the summed L1 norms of the
    source terms ``Lam1 + delta0^2 Lam3 + Lam4 + Lam5 + Lam6 + Lam61``.
    """
    if len(trajectory) < 2:
        raise ValueError("need at least two snapshots")
    for comp in trajectory:
        if comp.z is None:
            effective_fluxes(comp, params)
    times = [c.time for c in trajectory]
    out = {}
    for name in ("v", "w", "z", "zhat"):
        dt_vals = _time_derivative([getattr(c, name) for c in trajectory], times)
        res = []
        for k, c in enumerate(trajectory):
            q = getattr(c, name)
            res.append(dt_vals[k] + _transport_operator(q, c.lambda_tilde, c.mus, c.h, c.boundary))
        out[name] = np.stack(res)
    ratios = []
    for k, c in enumerate(trajectory):
        _, norms = lambda_terms(c, params)
        total = sum(
            norms[key].sum() * (delta0**2 if key == "Lam3" else 1.0)
            for key in ("Lam1", "Lam3", "Lam4", "Lam5", "Lam6", "Lam61")
        )
        phi_l1 = c.h * np.abs(out["v"][k]).sum(axis=0)
        ratios.append(phi_l1 / total if total > 0 else np.full(c.n, np.nan))
    h = trajectory[0].h
    return DiagonalResiduals(np.asarray(times), out["v"], out["w"], out["z"], out["zhat"], h, np.asarray(ratios))


def virtual_trajectory(model: SystemModel, field: GridField, epsilon: float = 1.0, params: CutoffParams = CutoffParams(),
                       mode: str = "eigenbasis", u_star=None, conservative: bool = False, step: float = None):
    """Decompose ``u - eta u_t``, ``u``, ``u + eta u_t`` for a snapshot-local time derivative.

    The centred difference over the three decompositions equals the exact time
    derivative of the components up to ``O(eta^2)``, independently of the
    solver's step size.
    """
    if u_star is None:
        u_star = field.values[0]
    scaled_model_rhs = lambda vals: rhs(model, vals, field.h, epsilon, field.boundary, conservative)
    ut = scaled_model_rhs(field.values)
    if step is None:
        step = 1e-3 * field.h**2 / epsilon
    from .systems import scaled_viscosity

    dmodel = scaled_viscosity(model, epsilon)
    # at t = 0 the labels shift forward by one step; only their spacing matters
    base = max(field.time, step)
    comps = []
    for sgn in (-1.0, 0.0, 1.0):
        vals = field.values + sgn * step * ut
        f = field.with_values(vals, base + sgn * step)
        comps.append(decompose_field(dmodel, f, scaled_model_rhs(vals), params, mode, u_star, check_size=False))
    return comps
