"""Joint eigenstructure of the commuting pair ``(A(u), B(u))``.

Every routine accepts a batch of states with shape ``(..., n)``.  The right
eigenvectors are the columns of ``P_inv`` (unit Euclidean norm); the left
eigenvectors are the rows of ``P = P_inv^-1`` so that ``<l_i, r_j> = delta_ij``.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .errors import ComplexEigenvalues, DegenerateSpectrum, ResonantDenominator
from .systems import SystemModel, fd_step

DEGENERACY_TOL = 1e-8
IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-data at one state or a batch of states.

    Attributes
    ----------
    lambdas, mus : ndarray, shape (..., n)
        Eigenvalues of ``A`` (ascending) and of ``B`` on the same eigenvectors.
    P : ndarray, shape (..., n, n)
        Rows are the left eigenvectors ``l_i``.
    P_inv : ndarray, shape (..., n, n)
        Columns are the right eigenvectors ``r_i``.
    """

    lambdas: np.ndarray
    mus: np.ndarray
    P: np.ndarray
    P_inv: np.ndarray

    @property
    def n(self) -> int:
        return self.lambdas.shape[-1]

    @property
    def right_vecs(self) -> np.ndarray:
        """``right_vecs[..., i, :]`` is ``r_i``."""
        return np.swapaxes(self.P_inv, -1, -2)

    @property
    def left_vecs(self) -> np.ndarray:
        """``left_vecs[..., i, :]`` is ``l_i``."""
        return self.P

    def r(self, i: int) -> np.ndarray:
        return self.P_inv[..., :, i]

    def l(self, i: int) -> np.ndarray:
        return self.P[..., i, :]


def _eig_2x2(A: np.ndarray):
    a, b = A[..., 0, 0], A[..., 0, 1]
    c, d = A[..., 1, 0], A[..., 1, 1]
    half_tr = 0.5 * (a + d)
    disc = (0.5 * (a - d)) ** 2 + b * c
    scale = 1.0 + np.abs(A).max(axis=(-2, -1))
    if np.any(disc < -(IMAG_TOL * scale) ** 2):
        raise ComplexEigenvalues("complex eigenvalue pair")
    root = np.sqrt(np.maximum(disc, 0.0))
    lam = np.stack([half_tr - root, half_tr + root], axis=-1)
    vecs = []
    for k in range(2):
        lk = lam[..., k]
        first = np.stack([b, lk - a], axis=-1)
        second = np.stack([lk - d, c], axis=-1)
        use_first = np.linalg.norm(first, axis=-1) >= np.linalg.norm(second, axis=-1)
        vecs.append(np.where(use_first[..., None], first, second))
    R = np.stack(vecs, axis=-1)
    return lam, R


def _raw_eigensystem(A: np.ndarray):
    """Sorted eigenvalues and unnormalized right eigenvectors (columns)."""
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, :].copy(), np.ones(A.shape)
    if n == 2:
        lam, R = _eig_2x2(A)
    else:
        w, V = np.linalg.eig(A)
        scale = 1.0 + np.abs(w).max(axis=-1)
        if np.any(np.abs(w.imag) > IMAG_TOL * scale[..., None]):
            raise ComplexEigenvalues("complex eigenvalues")
        order = np.argsort(w.real, axis=-1)
        lam = np.take_along_axis(w.real, order, axis=-1)
        R = np.take_along_axis(V.real, order[..., None, :], axis=-1)
    gaps = np.diff(lam, axis=-1)
    if np.any(gaps < DEGENERACY_TOL):
        raise DegenerateSpectrum(f"eigenvalue gap {gaps.min():.3e} below {DEGENERACY_TOL}")
    norms = np.linalg.norm(R, axis=-2, keepdims=True)
    if np.any(norms == 0.0):
        raise DegenerateSpectrum("vanishing eigenvector")
    return lam, R / norms


def _canonical_signs(R: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(R), axis=-2)
    pivot = np.take_along_axis(R, idx[..., None, :], axis=-2)
    return R * np.where(pivot < 0, -1.0, 1.0)


_REFERENCE_FRAMES: "weakref.WeakKeyDictionary[SystemModel, np.ndarray]" = weakref.WeakKeyDictionary()


def reference_frame(model: SystemModel) -> np.ndarray:
    """Right eigenvectors at ``u*`` in canonical orientation (cached)."""
    try:
        return _REFERENCE_FRAMES[model]
    except KeyError:
        _, R = _raw_eigensystem(model.A(model.u_star[None, :]))
        frame = _canonical_signs(R)[0]
        _REFERENCE_FRAMES[model] = frame
        return frame


def _orient(R: np.ndarray, ref: np.ndarray) -> np.ndarray:
    dots = np.einsum("...ki,...ki->...i", R, np.broadcast_to(ref, R.shape))
    return R * np.where(dots < 0, -1.0, 1.0)[..., None, :]


def _inverse(R: np.ndarray) -> np.ndarray:
    if R.shape[-1] != 2:
        return np.linalg.inv(R)
    a, b = R[..., 0, 0], R[..., 0, 1]
    c, d = R[..., 1, 0], R[..., 1, 1]
    det = a * d - b * c
    inv = np.stack([np.stack([d, -b], -1), np.stack([-c, a], -1)], -2)
    return inv / det[..., None, None]


def eigensystem(model: SystemModel, u, orientation_ref=None) -> SpectralData:
    """Batched joint eigen-decomposition.

    Parameters
    ----------
    model : SystemModel
    u : array_like, shape (..., n)
    orientation_ref : SpectralData or ndarray, optional
        Reference right eigenvectors (columns); each ``r_i`` is flipped to have
        positive inner product with the reference.  Defaults to the frame at
        ``u*``.
    """
    u = np.asarray(u, dtype=float)
    A = model.A(u)
    if model.n == 1:
        ones = np.ones(A.shape)
        return SpectralData(lambdas=A[..., 0].copy(), mus=model.B(u)[..., 0].copy(), P=ones, P_inv=ones.copy())
    lam, R = _raw_eigensystem(A)
    if orientation_ref is None:
        ref = reference_frame(model)
    elif isinstance(orientation_ref, SpectralData):
        ref = orientation_ref.P_inv
    else:
        ref = np.asarray(orientation_ref, dtype=float)
    R = _orient(R, ref)
    P = _inverse(R)
    B = model.B(u)
    mus = np.einsum("...ik,...kl,...li->...i", P, B, R)
    return SpectralData(lambdas=lam, mus=mus, P=P, P_inv=R)


def decompose(model: SystemModel, u, orientation_ref: SpectralData | None = None) -> SpectralData:
    """Eigen-data at a single state ``u`` (shape ``(n,)``)."""
    u = np.asarray(u, dtype=float).reshape(model.n)
    return eigensystem(model, u, orientation_ref)


def eigenvector_derivative(model: SystemModel, u, i: int, direction) -> np.ndarray:
    """Directional derivative ``direction . D r_i(u)`` by central differences.

    Batched over leading axes of ``u`` and ``direction``.
    """
    u = np.asarray(u, dtype=float)
    if model.n == 1:
        return np.zeros(np.broadcast_shapes(u.shape, np.shape(direction)))
    d = np.broadcast_to(np.asarray(direction, dtype=float), u.shape)
    size = np.linalg.norm(d, axis=-1)
    unit = np.divide(d, size[..., None], out=np.zeros_like(d), where=size[..., None] > 0)
    h = fd_step(u)[..., None]
    centre = eigensystem(model, u).P_inv
    plus = eigensystem(model, u + h * unit, centre).r(i)
    minus = eigensystem(model, u - h * unit, centre).r(i)
    return (plus - minus) / (2.0 * h) * size[..., None]


def _correction_numerators(model: SystemModel, u: np.ndarray, spec: SpectralData, i: int) -> np.ndarray:
    """``<l_j, B r_{i,u} r_i + (r_i . DB) r_i>`` for every j, shape (..., n)."""
    r_i = spec.r(i)
    dr = eigenvector_derivative(model, u, i, r_i)
    B = model.B(u)
    dB = model.dB(u, r_i)
    vec = np.einsum("...jk,...k->...j", B, dr) + np.einsum("...jk,...k->...j", dB, r_i)
    return np.einsum("...jk,...k->...j", spec.P, vec)


def correction_coefficients(model: SystemModel, u, i: int, sigma, spec: SpectralData | None = None,
                            return_sigma_derivative: bool = False):
    """Batched first-order travelling-wave coefficients.

    Returns an array ``c`` of shape ``(..., n)`` with ``c[..., i] = 0`` so that
    ``r_tilde_i = r_i + s * sum_j c_j r_j + O(s^2)``.  With
    ``return_sigma_derivative`` the exact derivative of ``c`` in ``sigma`` is
    returned as well.
    """
    u = np.asarray(u, dtype=float)
    if spec is None:
        spec = eigensystem(model, u)
    n = model.n
    zeros = np.zeros(u.shape)
    if n == 1:
        return (zeros, zeros.copy()) if return_sigma_derivative else zeros
    sigma = np.asarray(sigma, dtype=float)[..., None]
    lam, mu = spec.lambdas, spec.mus
    lam_i = lam[..., i : i + 1]
    mu_i = mu[..., i : i + 1]
    den = (lam - sigma) - 2.0 * mu / mu_i * (lam_i - sigma)
    others = np.arange(n) != i
    if np.any(np.abs(den[..., others]) < model.c0_claimed / 4.0):
        raise ResonantDenominator("travelling-wave correction denominator below c0/4")
    num = _correction_numerators(model, u, spec, i)
    den = np.where(others, den, 1.0)
    c = np.where(others, num / den, 0.0)
    if not return_sigma_derivative:
        return c
    dc = np.where(others, c * (1.0 - 2.0 * mu / mu_i) / den, 0.0)
    return c, dc


def first_order_tw_correction(model: SystemModel, u, i: int, sigma: float) -> dict:
    """Coefficients ``c_j`` (``j != i``) of the first-order basis correction.

    Returns a dict keyed by family index; empty for scalar systems.
    """
    u = np.asarray(u, dtype=float).reshape(model.n)
    c = correction_coefficients(model, u, i, sigma)
    return {j: float(c[j]) for j in range(model.n) if j != i}


def corrected_basis(model: SystemModel, u, i: int, amplitude, sigma, spec: SpectralData | None = None):
    """``r_tilde_i(u, s, sigma) = r_i + s * sum_{j != i} c_j(u, sigma) r_j``."""
    u = np.asarray(u, dtype=float)
    if spec is None:
        spec = eigensystem(model, u)
    c = correction_coefficients(model, u, i, sigma, spec)
    s = np.asarray(amplitude, dtype=float)[..., None]
    return spec.r(i) + s * np.einsum("...kj,...j->...k", spec.P_inv, c)


def deflated_speed(model: SystemModel, u, i: int, v, amplitude=None, sigma=None,
                   spec: SpectralData | None = None) -> np.ndarray:
    """Speed ``lambda_i - v <B r~_{i,u} r~_i + (r~_i . DB) r~_i, l_i>``.

    With ``amplitude`` omitted the plain eigenvector ``r_i`` plays the role of
    ``r~_i``; otherwise the corrected basis at ``(amplitude, sigma)`` is
    differentiated numerically in ``u``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec is None:
        spec = eigensystem(model, u)
    if amplitude is None:
        rt = spec.r(i)
        drt = eigenvector_derivative(model, u, i, rt)
    else:
        rt = corrected_basis(model, u, i, amplitude, sigma, spec)
        h = fd_step(u)[..., None]
        size = np.linalg.norm(rt, axis=-1, keepdims=True)
        unit = rt / size
        centre = spec.P_inv
        plus = _corrected_at(model, u + h * unit, i, amplitude, sigma, centre)
        minus = _corrected_at(model, u - h * unit, i, amplitude, sigma, centre)
        drt = (plus - minus) / (2.0 * h) * size
    B = model.B(u)
    dB = model.dB(u, rt)
    vec = np.einsum("...jk,...k->...j", B, drt) + np.einsum("...jk,...k->...j", dB, rt)
    return spec.lambdas[..., i] - v * np.einsum("...k,...k->...", vec, spec.l(i))


def _corrected_at(model, u, i, amplitude, sigma, centre):
    spec = eigensystem(model, u, centre)
    return corrected_basis(model, u, i, amplitude, sigma, spec)
