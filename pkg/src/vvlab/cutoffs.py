"""Cutoff functions used by the gradient decomposition.

All cutoffs are vectorized over ``s``.  The monotone bridges of ``eta``,
``xi``, ``chi`` and the energy weights use the degree-7 smoothstep, which is
C^3 with vanishing derivatives up to order three at both ends.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import PPoly
from scipy.optimize import brentq


def smoothstep7(x):
    """``35x^4 - 84x^5 + 70x^6 - 20x^7`` clamped to ``[0, 1]``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))


def smoothstep7_prime(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 140.0 * xc**3 * (1.0 - xc) ** 3, 0.0)


def _band(s, lo, hi):
    """0 below ``lo``, 1 above ``hi``, smoothstep in between (argument ``|s|``)."""
    return smoothstep7((np.abs(s) - lo) / (hi - lo))


def eta(s):
    """1 on ``|s| <= 3/4``, 0 on ``|s| >= 4/5``."""
    return 1.0 - _band(s, 0.75, 0.8)


def xi(s, delta1):
    """1 on ``|s| <= delta1/2``, 0 on ``|s| >= delta1``; even in ``s``."""
    return 1.0 - _band(s, 0.5 * delta1, delta1)


def xi_prime(s, delta1):
    s = np.asarray(s, dtype=float)
    width = 0.5 * delta1
    return -np.sign(s) * smoothstep7_prime((np.abs(s) - width) / width) / width


def chi(s):
    """0 on ``[-1, 1]``, 1 on ``|s| >= 2``."""
    return _band(s, 1.0, 2.0)


def eta_tilde(s, delta1):
    """Energy weight: 0 on ``|s| <= delta1/3``, 1 on ``|s| >= 3 delta1/8``."""
    return _band(s, 3.0 * delta1 / 9.0, 3.0 * delta1 / 8.0)


def eta_bar(s, delta1):
    """Shifted weight ``eta_tilde(|s| - delta1/24)``."""
    return eta_tilde(np.abs(np.asarray(s, dtype=float)) - delta1 / 24.0, delta1)


# -- theta --------------------------------------------------------------------
#
# On the bridge |s| in [d, 3d] write tau = (|s| - d) / (2d) and theta = d p(tau).
# q = p' must go from 2 to 0 with q'(0) = q'(1) = 0, integral -1 and |q| <= 2.
# q' is piecewise linear: a trapezoidal dip of height BRIDGE_SLOPE takes q from
# 2 down to a plateau -a, a trapezoidal bump brings it back to 0.  Then
# |theta'| = |q|/2 <= 1 and |theta''| = |q'|/(4d) <= BRIDGE_SLOPE/(4d).

BRIDGE_SLOPE = 14.0
BRIDGE_RAMP = 0.02


def _bridge_knots(a):
    m, r = BRIDGE_SLOPE, BRIDGE_RAMP
    drop = (2.0 + a) / m + r
    rise = a / m + r
    t1 = drop
    t2 = 1.0 - rise
    knots = [0.0, r, drop - r, t1, t2, t2 + r, 1.0 - r, 1.0]
    slopes = [0.0, -m, -m, 0.0, 0.0, m, m, 0.0]
    return np.array(knots), np.array(slopes)


def _bridge_poly(a):
    knots, vals = _bridge_knots(a)
    dx = np.diff(knots)
    keep = dx > 0
    slope = np.diff(vals)[keep] / dx[keep]
    qprime = PPoly(np.vstack([slope, vals[:-1][keep]]), np.append(knots[:-1][keep], knots[-1]))
    q = _antiderivative_from(qprime, 2.0)
    p = _antiderivative_from(q, 1.0)
    return p, q, qprime


def _antiderivative_from(deriv: PPoly, value: float) -> PPoly:
    """Antiderivative taking ``value`` at the left end."""
    anti = deriv.antiderivative()
    c = anti.c.copy()
    c[-1] += value
    return PPoly(c, anti.x)


@lru_cache(maxsize=1)
def _theta_bridge():
    a = brentq(lambda a: float(_bridge_poly(a)[0](1.0)), 1.0, 2.0, xtol=1e-15)
    return _bridge_poly(a)


def theta(s, delta1):
    """Odd C^2 cutoff: ``s`` on ``|s| <= delta1``, 0 on ``|s| >= 3 delta1``.

    Satisfies ``|theta'| <= 1`` and ``|theta''| <= 3.5/delta1``.
    """
    s = np.asarray(s, dtype=float)
    p, _, _ = _theta_bridge()
    a = np.abs(s)
    tau = np.clip((a - delta1) / (2.0 * delta1), 0.0, 1.0)
    bridge = delta1 * p(tau)
    out = np.where(a <= delta1, a, np.where(a >= 3.0 * delta1, 0.0, bridge))
    return np.sign(s) * out


def theta_prime(s, delta1):
    s = np.asarray(s, dtype=float)
    _, q, _ = _theta_bridge()
    a = np.abs(s)
    tau = np.clip((a - delta1) / (2.0 * delta1), 0.0, 1.0)
    return np.where(a <= delta1, 1.0, np.where(a >= 3.0 * delta1, 0.0, 0.5 * q(tau)))


def theta_second(s, delta1):
    s = np.asarray(s, dtype=float)
    _, _, qp = _theta_bridge()
    a = np.abs(s)
    tau = np.clip((a - delta1) / (2.0 * delta1), 0.0, 1.0)
    inside = (a > delta1) & (a < 3.0 * delta1)
    return np.sign(s) * np.where(inside, qp(tau) / (4.0 * delta1), 0.0)


def safe_ratio(w, v, v_floor):
    """``w / v`` with the convention ``0`` wherever ``|v| < v_floor``."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    small = np.abs(v) < v_floor
    return np.where(small, 0.0, w / np.where(small, 1.0, v))


@dataclass(frozen=True)
class CutoffParams:
    """Thresholds of the decomposition.

    Attributes
    ----------
    delta1 : float
        Width of the identity region of ``theta`` and the support of ``xi``.
    N : int
        Exponent in ``chi(v^{2N} / epsilon_cut)``.
    epsilon_cut : float
        Scale below which amplitudes count as numerical zeros.
    v_floor : float
        Denominator floor for ``w / v``.
    newton_tol : float
        Residual target of the nonlinear decomposition.
    data_threshold : float, optional
        Sup-norm guard on ``u_x`` and ``u_xx``; defaults to ``c0 / 2``.
    """

    delta1: float = 0.05
    N: int = 2
    epsilon_cut: float = 1e-12
    v_floor: float = 1e-12
    newton_tol: float = 1e-10
    data_threshold: Optional[float] = None

    def __post_init__(self):
        if not self.delta1 > 0:
            raise ValueError("delta1 must be positive")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not (self.epsilon_cut > 0 and self.v_floor > 0 and self.newton_tol > 0):
            raise ValueError("tolerances must be positive")
