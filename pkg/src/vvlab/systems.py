"""Hyperbolic systems with commuting viscosity and the built-in test catalogue.

A :class:`SystemModel` bundles the drift matrix ``A(u)``, the viscosity matrix
``B(u)``, an optional conservative flux ``f`` with ``Df = A`` and the box of
admissible states.  All callbacks are *batched*: they receive an array of
shape ``(..., n)`` and return ``(..., n, n)`` matrices (or ``(..., n)`` flux
vectors), so a whole grid can be evaluated in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import EvaluationOutsideBox, NonRealSpectrum, UnknownSystem

FD_REL_STEP = 1e-5
COMMUTATION_TOL = 1e-10
JACOBIAN_STEP = 1e-5
JACOBIAN_TOL = 1e-5

MatrixField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SystemModel:
    """The pair ``(A, B)`` on an admissible box.

    Parameters
    ----------
    name : str
        Identifier used by the CLI and in manifests.
    n : int
        Number of equations.
    eval_A, eval_B : callable
        Batched matrix fields ``(..., n) -> (..., n, n)``.
    state_box : array_like, shape (n, 2)
        Closed interval per component.
    c0_claimed : float
        Claimed pointwise spectral gap (``inf`` for scalar systems).
    c1_claimed : float
        Claimed lower bound of the viscosity eigenvalues.
    u_star : array_like, shape (n,)
        Reference state; anchors the eigenvector orientation.
    eval_flux : callable, optional
        Batched flux ``(..., n) -> (..., n)`` with ``Df = A``.
    eval_dB : callable, optional
        Analytic directional derivative ``(u, d) -> d . DB(u)``.  When absent
        central differences are used.
    """

    name: str
    n: int
    eval_A: MatrixField
    eval_B: MatrixField
    state_box: np.ndarray
    c0_claimed: float
    c1_claimed: float
    u_star: np.ndarray
    eval_flux: Optional[Callable[[np.ndarray], np.ndarray]] = None
    eval_dB: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    description: str = ""

    def __post_init__(self):
        box = np.asarray(self.state_box, dtype=float).reshape(self.n, 2)
        ustar = np.asarray(self.u_star, dtype=float).reshape(self.n)
        object.__setattr__(self, "state_box", box)
        object.__setattr__(self, "u_star", ustar)
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if np.any(box[:, 0] > box[:, 1]):
            raise ValueError("state_box is empty")
        if not self.contains(ustar):
            raise ValueError("u_star must lie inside state_box")
        if not (self.c1_claimed > 0 and self.c0_claimed > 0):
            raise ValueError("claimed constants must be positive")

    @property
    def conservative(self) -> bool:
        return self.eval_flux is not None

    def _states(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.n:
            raise ValueError(f"expected states with last axis {self.n}, got {u.shape}")
        return u

    def A(self, u) -> np.ndarray:
        return np.asarray(self.eval_A(self._states(u)), dtype=float)

    def B(self, u) -> np.ndarray:
        return np.asarray(self.eval_B(self._states(u)), dtype=float)

    def flux(self, u) -> np.ndarray:
        if self.eval_flux is None:
            raise AttributeError(f"system {self.name!r} has no flux")
        return np.asarray(self.eval_flux(self._states(u)), dtype=float)

    def dB(self, u, d) -> np.ndarray:
        """Directional derivative ``d . DB(u)``, batched over leading axes."""
        u = self._states(u)
        d = np.broadcast_to(np.asarray(d, dtype=float), u.shape)
        if self.eval_dB is not None:
            return np.asarray(self.eval_dB(u, d), dtype=float)
        return directional_fd(self.B, u, d)

    def dA(self, u, d) -> np.ndarray:
        u = self._states(u)
        d = np.broadcast_to(np.asarray(d, dtype=float), u.shape)
        return directional_fd(self.A, u, d)

    def contains(self, u, inflate: float = 0.0) -> bool:
        """True when every state lies in the box inflated by ``inflate`` times its width."""
        u = np.asarray(u, dtype=float).reshape(-1, self.n)
        width = self.state_box[:, 1] - self.state_box[:, 0]
        lo = self.state_box[:, 0] - inflate * width
        hi = self.state_box[:, 1] + inflate * width
        return bool(np.all((u >= lo) & (u <= hi)))


def fd_step(u: np.ndarray) -> np.ndarray:
    """Step ``1e-5 * (1 + |u|)`` used for every central difference in state space."""
    return FD_REL_STEP * (1.0 + np.linalg.norm(u, axis=-1))


def directional_fd(func, u, d):
    """Central difference of a batched matrix field along ``d``."""
    h = fd_step(u)[..., None]
    plus = func(u + h * d)
    minus = func(u - h * d)
    scale = (2.0 * h)[..., None] if plus.ndim == u.ndim + 1 else 2.0 * h
    return (plus - minus) / scale


# -- hypothesis checks -----------------------------------------------------


@dataclass
class HypothesisReport:
    system: str
    samples: int
    min_gap: float
    min_mu: float
    max_commutator: float
    max_commutator_rel: float
    max_jacobian_mismatch: Optional[float]
    c0_claimed: float
    c1_claimed: float
    worst_gap_state: Optional[np.ndarray] = None
    worst_mu_state: Optional[np.ndarray] = None
    failures: list = field(default_factory=list)

    @property
    def gap_ok(self) -> bool:
        return self.min_gap >= self.c0_claimed

    @property
    def mu_ok(self) -> bool:
        return self.min_mu >= self.c1_claimed

    @property
    def commutation_ok(self) -> bool:
        return self.max_commutator_rel <= COMMUTATION_TOL

    @property
    def jacobian_ok(self) -> bool:
        return self.max_jacobian_mismatch is None or self.max_jacobian_mismatch <= JACOBIAN_TOL

    @property
    def passed(self) -> bool:
        return self.gap_ok and self.mu_ok and self.commutation_ok and self.jacobian_ok

    def lines(self) -> list[str]:
        jac = "n/a" if self.max_jacobian_mismatch is None else f"{self.max_jacobian_mismatch:.3e}"
        return [
            f"system            {self.system} ({self.samples} samples)",
            f"min gap           {self.min_gap:.6g} (claimed {self.c0_claimed:.6g}) {'ok' if self.gap_ok else 'FAIL'}",
            f"min mu            {self.min_mu:.6g} (claimed {self.c1_claimed:.6g}) {'ok' if self.mu_ok else 'FAIL'}",
            f"max |AB-BA|_F     {self.max_commutator:.3e} (rel {self.max_commutator_rel:.3e}) "
            f"{'ok' if self.commutation_ok else 'FAIL'}",
            f"jacobian mismatch {jac} {'ok' if self.jacobian_ok else 'FAIL'}",
        ]


def box_samples(model: SystemModel, samples_per_axis: int) -> np.ndarray:
    """Tensor grid of ``samples_per_axis**n`` states covering the box."""
    axes = [np.linspace(lo, hi, samples_per_axis) for lo, hi in model.state_box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def fd_jacobian(flux, u: np.ndarray, h: float = JACOBIAN_STEP) -> np.ndarray:
    """Central-difference Jacobian of a batched flux, shape ``(..., n, n)``."""
    n = u.shape[-1]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((flux(u + e) - flux(u - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def check_hypotheses(model: SystemModel, samples_per_axis: int) -> HypothesisReport:
    """Sample the box and measure gap, viscosity floor, commutator and Jacobian."""
    if samples_per_axis < 2:
        raise ValueError("samples_per_axis must be at least 2")
    u = box_samples(model, samples_per_axis)
    try:
        A = model.A(u)
        B = model.B(u)
    except (ValueError, FloatingPointError) as exc:
        raise EvaluationOutsideBox(str(exc)) from exc

    lam = np.linalg.eigvals(A)
    mu = np.linalg.eigvals(B)
    scale_a = 1.0 + np.abs(lam).max(axis=-1)
    scale_b = 1.0 + np.abs(mu).max(axis=-1)
    bad = (np.abs(lam.imag).max(axis=-1) > 1e-10 * scale_a) | (
        np.abs(mu.imag).max(axis=-1) > 1e-10 * scale_b
    )
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NonRealSpectrum(f"non-real eigenvalues at u={u[k]}")
    lam = np.sort(lam.real, axis=-1)
    mu = mu.real

    if model.n > 1:
        gaps = np.diff(lam, axis=-1).min(axis=-1)
        kg = int(np.argmin(gaps))
        min_gap = float(gaps[kg])
        worst_gap_state = u[kg]
    else:
        min_gap = math.inf
        worst_gap_state = None
    mu_floor = mu.min(axis=-1)
    km = int(np.argmin(mu_floor))

    comm = A @ B - B @ A
    comm_norm = np.linalg.norm(comm, axis=(-2, -1))
    scale = 1.0 + np.linalg.norm(A, axis=(-2, -1)) * np.linalg.norm(B, axis=(-2, -1))

    jac = None
    if model.eval_flux is not None:
        J = fd_jacobian(model.flux, u)
        mismatch = np.linalg.norm(J - A, axis=(-2, -1)) / (1.0 + np.linalg.norm(A, axis=(-2, -1)))
        jac = float(mismatch.max())

    report = HypothesisReport(
        system=model.name,
        samples=len(u),
        min_gap=min_gap,
        min_mu=float(mu_floor[km]),
        max_commutator=float(comm_norm.max()),
        max_commutator_rel=float((comm_norm / scale).max()),
        max_jacobian_mismatch=jac,
        c0_claimed=model.c0_claimed,
        c1_claimed=model.c1_claimed,
        worst_gap_state=worst_gap_state,
        worst_mu_state=u[km],
    )
    if not report.gap_ok:
        report.failures.append("gap")
    if not report.mu_ok:
        report.failures.append("viscosity floor")
    if not report.commutation_ok:
        report.failures.append("commutation")
    if not report.jacobian_ok:
        report.failures.append("jacobian")
    return report


# -- constructors ------------------------------------------------------------


def _poly_eval(coeffs: Sequence[Sequence[float]], u: np.ndarray) -> np.ndarray:
    return np.stack([npoly.polyval(u[..., i], c) for i, c in enumerate(coeffs)], axis=-1)


def _poly_deriv(coeffs: Sequence[Sequence[float]], u: np.ndarray) -> np.ndarray:
    return np.stack(
        [npoly.polyval(u[..., i], npoly.polyder(c)) if len(c) > 1 else np.zeros_like(u[..., i])
         for i, c in enumerate(coeffs)],
        axis=-1,
    )


def shared_frame_system(
    name: str,
    frame,
    lambda_coeffs: Sequence[Sequence[float]],
    mu_coeffs: Sequence[Sequence[float]],
    state_box,
    c0_claimed: float,
    c1_claimed: float,
    u_star=None,
    eval_flux=None,
    description: str = "",
) -> SystemModel:
    """System ``A = R diag(p_i(u_i)) R^-1``, ``B = R diag(q_i(u_i)) R^-1``.

    ``R`` is a fixed invertible frame, so ``AB = BA`` holds exactly.  The
    eigenvalue of family ``i`` is a polynomial in the state component ``u_i``
    with coefficients listed from low to high degree.
    """
    R = np.asarray(frame, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n):
        raise ValueError("frame must be square")
    if len(lambda_coeffs) != n or len(mu_coeffs) != n:
        raise ValueError("need one eigenvalue polynomial per family")
    Rinv = np.linalg.inv(R)
    lam_c = [np.atleast_1d(np.asarray(c, dtype=float)) for c in lambda_coeffs]
    mu_c = [np.atleast_1d(np.asarray(c, dtype=float)) for c in mu_coeffs]

    def conj(diag):
        return np.einsum("ij,...j,jk->...ik", R, diag, Rinv)

    def eval_A(u):
        return conj(_poly_eval(lam_c, u))

    def eval_B(u):
        return conj(_poly_eval(mu_c, u))

    def eval_dB(u, d):
        return conj(_poly_deriv(mu_c, u) * d)

    if u_star is None:
        u_star = np.zeros(n)
    return SystemModel(
        name=name,
        n=n,
        eval_A=eval_A,
        eval_B=eval_B,
        state_box=state_box,
        c0_claimed=c0_claimed,
        c1_claimed=c1_claimed,
        u_star=u_star,
        eval_flux=eval_flux,
        eval_dB=eval_dB,
        description=description,
    )


def _burgers() -> SystemModel:
    return SystemModel(
        name="burgers",
        n=1,
        eval_A=lambda u: u[..., None],
        eval_B=lambda u: np.ones(u.shape + (1,)),
        state_box=[[-2.0, 2.0]],
        c0_claimed=math.inf,
        c1_claimed=1.0,
        u_star=[0.0],
        eval_flux=lambda u: 0.5 * u**2,
        eval_dB=lambda u, d: np.zeros(u.shape + (1,)),
        description="u_t + u u_x = u_xx",
    )


def _heat() -> SystemModel:
    return SystemModel(
        name="heat",
        n=1,
        eval_A=lambda u: np.zeros(u.shape + (1,)),
        eval_B=lambda u: np.ones(u.shape + (1,)),
        state_box=[[-2.0, 2.0]],
        c0_claimed=math.inf,
        c1_claimed=1.0,
        u_star=[0.0],
        eval_flux=lambda u: np.zeros_like(u),
        eval_dB=lambda u, d: np.zeros(u.shape + (1,)),
        description="u_t = u_xx",
    )


def _decoupled2() -> SystemModel:
    def flux(u):
        return np.stack([0.5 * u[..., 0] ** 2, u[..., 1] + 0.5 * u[..., 1] ** 2], axis=-1)

    return shared_frame_system(
        "decoupled2",
        np.eye(2),
        [[0.0, 1.0], [1.0, 1.0]],
        [[1.0], [2.0]],
        state_box=[[-0.25, 0.25], [-0.25, 0.25]],
        c0_claimed=0.5,
        c1_claimed=1.0,
        eval_flux=flux,
        description="two independent viscous Burgers-type equations",
    )


def _shared_frame2() -> SystemModel:
    return shared_frame_system(
        "shared_frame2",
        [[1.0, 1.0], [0.0, 1.0]],
        [[0.0, 1.0], [2.0, 1.0]],
        [[1.0, 0.0, 1.0], [2.0]],
        state_box=[[-0.2, 0.2], [-0.2, 0.2]],
        c0_claimed=1.6,
        c1_claimed=1.0,
        description="A = R diag(u1, 2+u2) R^-1, B = R diag(1+u1^2, 2) R^-1",
    )


def _shared_frame3() -> SystemModel:
    return shared_frame_system(
        "shared_frame3",
        [[1.0, 0.5, 0.0], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]],
        [[-1.0, 1.0], [0.0, 0.5], [1.0, 1.0]],
        [[1.0, 0.0, 1.0], [1.5, 0.5], [2.0, 0.0, 0.0, 1.0]],
        state_box=[[-0.2, 0.2]] * 3,
        c0_claimed=0.7,
        c1_claimed=1.0,
        description="three families on a fixed non-orthogonal frame",
    )


ROTATION_RATE = 0.4


def _rotating2() -> SystemModel:
    """Commuting pair on a state-dependent orthonormal frame.

    The frame angle is ``0.4 (u1 + u2)``, so eigenvectors vary with the state
    and the travelling-wave correction of the eigenbasis is non-trivial.
    """

    def frame(u):
        phi = ROTATION_RATE * (u[..., 0] + u[..., 1])
        c, s = np.cos(phi), np.sin(phi)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)

    def dframe(u, d):
        phi = ROTATION_RATE * (u[..., 0] + u[..., 1])
        dphi = ROTATION_RATE * (d[..., 0] + d[..., 1])
        c, s = np.cos(phi), np.sin(phi)
        rot = np.stack([np.stack([-s, -c], -1), np.stack([c, -s], -1)], -2)
        return rot * dphi[..., None, None]

    def lam(u):
        return np.stack([u[..., 0], 2.0 + u[..., 1]], -1)

    def mu(u):
        return np.stack([1.0 + 0.5 * u[..., 0], 2.0 + 0.3 * u[..., 1]], -1)

    def dmu(u, d):
        return np.stack([0.5 * d[..., 0], 0.3 * d[..., 1]], -1)

    def conj(Rm, diag):
        return np.einsum("...ij,...j,...kj->...ik", Rm, diag, Rm)

    def eval_dB(u, d):
        Rm = frame(u)
        dR = dframe(u, d)
        D = mu(u)
        return (
            np.einsum("...ij,...j,...kj->...ik", dR, D, Rm)
            + conj(Rm, dmu(u, d))
            + np.einsum("...ij,...j,...kj->...ik", Rm, D, dR)
        )

    return SystemModel(
        name="rotating2",
        n=2,
        eval_A=lambda u: conj(frame(u), lam(u)),
        eval_B=lambda u: conj(frame(u), mu(u)),
        state_box=[[-0.2, 0.2], [-0.2, 0.2]],
        c0_claimed=1.5,
        c1_claimed=0.85,
        u_star=[0.0, 0.0],
        eval_dB=eval_dB,
        description="eigenframe rotating with the state; lambda=(u1, 2+u2), mu=(1+u1/2, 2+0.3u2)",
    )


_BUILTINS = {
    "burgers": _burgers,
    "heat": _heat,
    "decoupled2": _decoupled2,
    "shared_frame2": _shared_frame2,
    "shared_frame3": _shared_frame3,
    "rotating2": _rotating2,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_system(name: str) -> SystemModel:
    """Return one of the catalogued systems by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownSystem(f"unknown system {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    return factory()


def constant_system(name: str, A, B, state_box=None, c0_claimed=None, c1_claimed=None) -> SystemModel:
    """Constant-coefficient system; handy for tests and gate checks."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if state_box is None:
        state_box = [[-1.0, 1.0]] * n
    lam = np.sort(np.linalg.eigvals(A).real)
    if c0_claimed is None:
        c0_claimed = float(np.diff(lam).min()) if n > 1 else math.inf
        c0_claimed = c0_claimed if c0_claimed > 0 else 1.0
    if c1_claimed is None:
        c1_claimed = float(np.linalg.eigvals(B).real.min())
    return SystemModel(
        name=name,
        n=n,
        eval_A=lambda u: np.broadcast_to(A, u.shape[:-1] + (n, n)).copy(),
        eval_B=lambda u: np.broadcast_to(B, u.shape[:-1] + (n, n)).copy(),
        state_box=state_box,
        c0_claimed=c0_claimed,
        c1_claimed=c1_claimed,
        u_star=np.zeros(n),
        eval_flux=lambda u: np.einsum("ij,...j->...i", A, u),
        eval_dB=lambda u, d: np.zeros(u.shape[:-1] + (n, n)),
    )


def scaled_viscosity(model: SystemModel, epsilon: float) -> SystemModel:
    """Same system with ``B`` replaced by ``epsilon * B``.

    Diagnostics written for unit viscosity apply to ``eps``-scaled runs through
    this model.
    """
    if epsilon == 1.0:
        return model
    eval_B = model.eval_B
    eval_dB = model.eval_dB
    return SystemModel(
        name=model.name,
        n=model.n,
        eval_A=model.eval_A,
        eval_B=lambda u: epsilon * np.asarray(eval_B(u), dtype=float),
        state_box=model.state_box,
        c0_claimed=model.c0_claimed,
        c1_claimed=epsilon * model.c1_claimed,
        u_star=model.u_star,
        eval_flux=model.eval_flux,
        eval_dB=None if eval_dB is None else (lambda u, d: epsilon * np.asarray(eval_dB(u, d), dtype=float)),
        description=model.description,
    )


def scalar_system(name: str, flux, flux_prime, state_box=(-2.0, 2.0), viscosity: float = 1.0) -> SystemModel:
    """Scalar conservation law ``u_t + f(u)_x = viscosity * u_xx``.

    ``flux`` and ``flux_prime`` act elementwise on arrays.
    """
    return SystemModel(
        name=name,
        n=1,
        eval_A=lambda u: np.asarray(flux_prime(u), dtype=float)[..., None],
        eval_B=lambda u: np.full(u.shape + (1,), float(viscosity)),
        state_box=[list(state_box)],
        c0_claimed=math.inf,
        c1_claimed=float(viscosity),
        u_star=[0.5 * (state_box[0] + state_box[1])],
        eval_flux=lambda u: np.asarray(flux(u), dtype=float),
        eval_dB=lambda u, d: np.zeros(u.shape + (1,)),
    )
