"""Momentum-space Hamiltonian of the infinite helix and band structures.

The unit cell is one full 2*pi turn: n_per_turn sublattice sites, lattice
period a along z.  With c(m) the 2N_t x 2N_t coupling block (N_t sites per
turn) between cell 0 and cell m, the Bloch Hamiltonian in the cell-index
Fourier convention is

    H(k) = sum_{m=-M_cut}^{+M_cut} e^{-i k m a} c(m),

which is exactly periodic, H(k + 2*pi/a) = H(k), so Brillouin-zone loops
close with the identity.  The lattice sum is truncated symmetrically; the
1/r-oscillatory tail makes modes near the light cone |k| = k0 converge
slowest (error roughly ~ 1/M_cut there), and a Cauchy convergence estimate
(max-norm difference between the M_cut and M_cut/2 sums) is always
reported.

Band quantities per mode: energy = Re(eigenvalue), decay Gamma = -2 Im
(eigenvalue), spin texture <S_z> from right eigenvectors, group velocity by
finite differences, and a light-cone flag |k| < k0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import HelixParams, build_helix
from .greens import GAMMA0, K0, coupling_blocks
from .hamiltonian import spin_z_diagonal

_CHUNK_CELLS = 4000        # cells per chunk when building/summing c(m)
_OVERLAP_AMBIGUOUS = 0.5   # squared-overlap floor below which continuation is ambiguous


@dataclass(frozen=True)
class BlochHamiltonian:
    k: float
    matrix: np.ndarray
    m_cut: int
    hermitian_only: bool
    convergence: float          # max-norm difference between M_cut and M_cut/2 sums


@dataclass
class BandStructure:
    k: np.ndarray                     # (n_k,)
    energies: np.ndarray              # (n_k, 2*N_t), continuation-ordered
    gammas: np.ndarray                # (n_k, 2*N_t)
    sz: np.ndarray                    # (n_k, 2*N_t)
    velocities: np.ndarray            # (n_k, 2*N_t), d(energy)/dk
    in_light_cone: np.ndarray         # (n_k,) bool, |k| <= k0 (edge is radiative)
    vectors: np.ndarray               # (n_k, 2*N_t, 2*N_t), column n = band n
    continuation_ambiguous: np.ndarray  # (n_k,) bool
    m_cut: int
    hermitian_only: bool
    convergence: float

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]


def cell_couplings(params: HelixParams, m_cut: int,
                   hermitian_only: bool = False) -> np.ndarray:
    """Coupling blocks c(m) for m = -m_cut..m_cut, shape (2*m_cut+1, 2N_t, 2N_t).

    c(m) couples sublattice site mu in cell 0 to site nu in cell m; the
    single self term (mu = nu, m = 0) contributes 0 to J and Gamma_0 to the
    dissipative diagonal.
    """
    if m_cut < 1:
        raise ValueError("m_cut must be >= 1")
    nt = params.sites_per_turn
    cell = build_helix(HelixParams(params.radius, params.pitch, nt, 1,
                                   params.handedness))
    rho = cell.positions
    a_vec = np.array([0.0, 0.0, params.pitch])
    ms = np.arange(-m_cut, m_cut + 1)
    c = np.empty((len(ms), 2 * nt, 2 * nt), dtype=complex)
    for lo in range(0, len(ms), _CHUNK_CELLS):
        hi = min(lo + _CHUNK_CELLS, len(ms))
        mm = ms[lo:hi]
        sep = (rho[:, None, None, :] - rho[None, :, None, :]
               - mm[None, None, :, None] * a_vec)
        dist = np.linalg.norm(sep, axis=-1)
        off = dist > 1e-12
        j = np.zeros((nt, nt, len(mm), 2, 2), dtype=complex)
        g = np.zeros_like(j)
        jb, gb = coupling_blocks(sep[off])
        j[off] = jb
        g[off] = gb
        if lo <= m_cut < hi:
            for mu in range(nt):
                g[mu, mu, m_cut - lo] = GAMMA0 * np.eye(2)
        blk = j if hermitian_only else j - 0.5j * g
        c[lo:hi] = blk.transpose(2, 0, 3, 1, 4).reshape(hi - lo, 2 * nt, 2 * nt)
    return c


def _fourier_sum(c: np.ndarray, k_grid: np.ndarray, pitch: float) -> np.ndarray:
    """H(k) for all k in k_grid; chunked over cells to bound memory."""
    m_cut = (len(c) - 1) // 2
    ms = np.arange(-m_cut, m_cut + 1)
    dim = c.shape[1]
    h = np.zeros((len(k_grid), dim, dim), dtype=complex)
    for lo in range(0, len(ms), _CHUNK_CELLS):
        hi = min(lo + _CHUNK_CELLS, len(ms))
        phases = np.exp(-1j * np.outer(k_grid, ms[lo:hi] * pitch))
        h += np.tensordot(phases, c[lo:hi], axes=(1, 0))
    return h


def _convergence_estimate(c: np.ndarray, k_grid: np.ndarray, pitch: float) -> float:
    """Max-norm Cauchy difference between the full and half-window sums."""
    m_cut = (len(c) - 1) // 2
    half = m_cut // 2
    if half < 1:
        return np.inf
    sl = slice(m_cut - half, m_cut + half + 1)
    h_full = _fourier_sum(c, k_grid, pitch)
    h_half = _fourier_sum(c[sl], k_grid, pitch)
    return float(np.abs(h_full - h_half).max())


def bloch_hamiltonian(params: HelixParams, k: float, m_cut: int,
                      hermitian_only: bool = False) -> BlochHamiltonian:
    """H(k) at a single quasimomentum, with its convergence estimate."""
    c = cell_couplings(params, m_cut, hermitian_only)
    kk = np.array([k], dtype=float)
    h = _fourier_sum(c, kk, params.pitch)[0]
    conv = _convergence_estimate(c, kk, params.pitch)
    return BlochHamiltonian(float(k), h, m_cut, hermitian_only, conv)


def brillouin_grid(pitch: float, n_k: int = 401, include_edges: bool = True) -> np.ndarray:
    """Symmetric BZ grid.  include_edges=False gives a half-step-offset grid
    that avoids the exactly degenerate zone-edge/zone-center points."""
    edge = np.pi / pitch
    if include_edges:
        return np.linspace(-edge, edge, n_k)
    step = 2 * edge / n_k
    return -edge + (np.arange(n_k) + 0.5) * step


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    piv = vectors[idx, np.arange(vectors.shape[1])]
    phase = piv / np.where(np.abs(piv) > 0, np.abs(piv), 1.0)
    return vectors / phase[None, :]


def band_structure(params: HelixParams, k_grid, m_cut: int = 2000,
                   hermitian_only: bool = False) -> BandStructure:
    """Diagonalize H(k) over the grid and connect bands by maximal overlap.

    Bands are energy-ordered at each k, then reordered along the grid by
    maximal eigenvector overlap with the previous point; k points where the
    best overlap is ambiguous (squared overlap < 0.5, e.g. at exact
    degeneracies) keep the energy ordering and are flagged.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    c = cell_couplings(params, m_cut, hermitian_only)
    h_all = _fourier_sum(c, k_grid, params.pitch)
    conv = _convergence_estimate(c, k_grid, params.pitch)

    n_k = len(k_grid)
    dim = h_all.shape[1]
    evals = np.empty((n_k, dim), dtype=complex)
    vecs = np.empty((n_k, dim, dim), dtype=complex)
    flags = np.zeros(n_k, dtype=bool)
    for i in range(n_k):
        if hermitian_only:
            w, v = np.linalg.eigh(h_all[i])
        else:
            w, v = np.linalg.eig(h_all[i])
            order = np.argsort(w.real)
            w, v = w[order], v[:, order]
        if i > 0:
            overlap = np.abs(vecs[i - 1].conj().T @ v) ** 2
            rows, cols = linear_sum_assignment(-overlap)
            if overlap[rows, cols].min() < _OVERLAP_AMBIGUOUS:
                flags[i] = True  # keep energy ordering
            else:
                w, v = w[cols], v[:, cols]
        evals[i] = w
        vecs[i] = _phase_fix(v)

    sz_diag = spin_z_diagonal(dim // 2)
    weight = np.abs(vecs) ** 2
    sz = np.einsum("kan,a->kn", weight, sz_diag) / weight.sum(axis=1)
    energies = evals.real
    gammas = np.zeros_like(energies) if hermitian_only else -2.0 * evals.imag
    velocities = (np.gradient(energies, k_grid, axis=0) if n_k > 1
                  else np.zeros_like(energies))
    return BandStructure(
        k=k_grid,
        energies=energies,
        gammas=gammas,
        sz=sz,
        velocities=velocities,
        in_light_cone=np.abs(k_grid) <= K0,
        vectors=vecs,
        continuation_ambiguous=flags,
        m_cut=m_cut,
        hermitian_only=hermitian_only,
        convergence=conv,
    )
