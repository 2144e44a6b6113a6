"""Numpy versions of the compiled kernels (same signatures and semantics)."""
import math

import numpy as np


def q_sum(x, az, azs, c, c1):
    x = np.asarray(x, dtype=float)
    s = x[:, None] - x[None, :]
    weight = np.where(s >= 0.0, 1.0 / c, np.exp(np.minimum(s, 0.0) * (c / (2.0 * c1))) / c)
    terms = weight * np.asarray(az)[:, None] * np.asarray(azs)[None, :]
    return math.fsum(terms.ravel())


def area_sum(z1, z2):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    cross = np.abs(z1[:, None] * z2[None, :] - z1[None, :] * z2[:, None])
    return math.fsum(cross[np.triu_indices(len(z1), k=1)])


def stencil_rhs(ue, a, bmid, fe, h, eps, conservative):
    if conservative:
        adv = (fe[3:-1] - fe[1:-3]) / (2.0 * h)
    else:
        adv = np.einsum("jpq,jq->jp", a, (ue[3:-1] - ue[1:-3]) / (2.0 * h))
    flux = np.einsum("jpq,jq->jp", bmid, ue[2:-1] - ue[1:-2])
    return -adv + eps * (flux[1:] - flux[:-1]) / (h * h)
