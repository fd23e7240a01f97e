"""Free-space dyadic Green's tensor and circular-polarization couplings.

Units: lambda_0 = 1, Gamma_0 = 1, k0 = 2*pi.  The tensor for a separation
r (|r| > 0) is

    G(r) = e^{i k0 r} / (4 pi r) * [ (1 + i/(k0 r) - 1/(k0 r)^2) * 1
                                     - (1 + 3i/(k0 r) - 3/(k0 r)^2) * rhat rhat ]

with the normalization fixed by Im[G_aa](r -> 0) = k0 / (6 pi), so that the
single-emitter decay rate comes out exactly Gamma_0 under the coupling
prefactor below.

Couplings between circular dipoles eps_up = (x + i y)/sqrt(2) and
eps_down = (x - i y)/sqrt(2):

    J^{ss'}     = -(3/2) lambda_0 Gamma_0 * eps_s^dag . Re[G] . eps_s'
    Gamma^{ss'} =     3  lambda_0 Gamma_0 * eps_s^dag . Im[G] . eps_s'

i.e. the real/imaginary split is applied to the *tensor*, which keeps the
assembled J and Gamma matrices Hermitian while J^{ud} stays genuinely
complex (it carries the azimuthal phase e^{-2i delta} under rigid rotation
about z).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

LAMBDA0 = 1.0
GAMMA0 = 1.0
K0 = 2.0 * np.pi / LAMBDA0

# circular polarization unit vectors (spin up / down), orthonormal under
# the Hermitian inner product
EPS_UP = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)
EPS_DOWN = np.array([1.0, -1.0j, 0.0]) / np.sqrt(2.0)
POLARIZATION = (EPS_UP, EPS_DOWN)


def green_tensor(r, k0: float = K0) -> np.ndarray:
    """Dyadic Green's tensor for separation(s) r.

    r may be a single 3-vector or an array of shape (..., 3); the result has
    shape (..., 3, 3).  Zero-length separations are rejected (the self term
    is handled analytically by the Hamiltonian assembly).
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    if single:
        r = r[None, :]
    d = np.linalg.norm(r, axis=-1)
    if np.any(d == 0.0):
        raise ValueError("green_tensor: zero-length separation (self term excluded)")
    u = k0 * d
    rhat = r / d[..., None]
    outer = rhat[..., :, None] * rhat[..., None, :]
    pref = np.exp(1j * u) / (4.0 * np.pi * d)
    a = 1.0 + 1j / u - 1.0 / u**2
    b = 1.0 + 3j / u - 3.0 / u**2
    g = pref[..., None, None] * (
        a[..., None, None] * np.eye(3) - b[..., None, None] * outer
    )
    return g[0] if single else g


class PairCoupling(NamedTuple):
    """2x2 spin blocks (up=0, down=1) of the coherent and dissipative rates."""

    j: np.ndarray
    gamma: np.ndarray


def coupling_blocks(sep) -> tuple[np.ndarray, np.ndarray]:
    """J and Gamma 2x2 spin blocks for separation(s) of shape (..., 3).

    Returns (j, gamma), each of shape (..., 2, 2), in units of Gamma_0.
    """
    g = green_tensor(sep)
    re, im = g.real, g.imag
    shape = np.shape(sep)[:-1] + (2, 2)
    j = np.empty(shape, dtype=complex)
    gamma = np.empty(shape, dtype=complex)
    for s, es in enumerate(POLARIZATION):
        for t, et in enumerate(POLARIZATION):
            j[..., s, t] = -1.5 * LAMBDA0 * GAMMA0 * np.einsum(
                "a,...ab,b->...", es.conj(), re, et)
            gamma[..., s, t] = 3.0 * LAMBDA0 * GAMMA0 * np.einsum(
                "a,...ab,b->...", es.conj(), im, et)
    return j, gamma


def pair_coupling(r_i, r_j) -> PairCoupling:
    """Couplings between emitters at r_i and r_j (must not coincide)."""
    sep = np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float)
    if np.linalg.norm(sep) == 0.0:
        raise ValueError("pair_coupling: coincident emitter positions")
    j, gamma = coupling_blocks(sep)
    return PairCoupling(j, gamma)
