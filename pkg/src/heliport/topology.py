"""Wilson-loop Zak phases over band groups and spectral-gap detection.

The Zak phase of a band subset is computed from the discrete Wilson loop

    phi = -Im log det [ M^(0) M^(1) ... M^(n_k-1) ],
    M^(i)_{mn} = <u_m(k_i) | u_n(k_{i+1})>,

with k_i traversing the Brillouin zone once on an open uniform grid and the
loop closed back to k_0 (the cell-index Fourier convention makes H exactly
periodic, so the boundary operator is the identity).  The determinant makes
the result invariant under any per-k rephasing or unitary remixing inside
the subset.  A nearly singular overlap (|det M| < 1e-6) signals that the
subset is not isolated at some k and the result is flagged ill-defined.

Gap detection scans all energy-ordered band splits for the widest window
free of states across the whole grid; groups below/above that window are
the natural Wilson-loop subsets.  When no split exceeds the threshold the
spectrum is reported gapless and the only isolated subset is the full band
space (whose loop is trivially 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bloch import BandStructure, _fourier_sum, cell_couplings
from .geometry import HelixParams

GAP_THRESHOLD = 1e-3        # minimum indirect gap width (units Gamma_0)
DET_ILL_DEFINED = 1e-6      # |det M| below this marks a non-isolated subset


@dataclass(frozen=True)
class GapInfo:
    width: float
    e_lo: float
    e_hi: float
    lower_bands: tuple[int, ...]
    upper_bands: Optional[tuple[int, ...]]

    @property
    def gapped(self) -> bool:
        return self.upper_bands is not None


@dataclass(frozen=True)
class ZakResult:
    band_subset: tuple[int, ...]
    n_k: int
    phase: float                # in (-pi, pi]
    residual: float             # distance to the nearest of {0, pi}
    min_overlap_det: float
    ill_defined: bool
    hermitian_only: bool
    biorthogonal: bool


def detect_gap(bands: BandStructure, threshold: float = GAP_THRESHOLD) -> GapInfo:
    """Widest indirect energy gap over the grid, or a gapless descriptor."""
    e_sorted = np.sort(bands.energies, axis=1)
    n_bands = e_sorted.shape[1]
    best = (0.0, None)
    for split in range(1, n_bands):
        lo = e_sorted[:, :split].max()
        hi = e_sorted[:, split:].min()
        if hi - lo > best[0]:
            best = (hi - lo, split)
    width, split = best
    if split is None or width < threshold:
        return GapInfo(0.0, np.nan, np.nan, tuple(range(n_bands)), None)
    return GapInfo(float(width),
                   float(e_sorted[:, :split].max()),
                   float(e_sorted[:, split:].min()),
                   tuple(range(split)),
                   tuple(range(split, n_bands)))


def wilson_loop(frames) -> tuple[float, float]:
    """Phase and minimum |det| of the overlap-product loop over frames.

    frames: sequence of (dim, n_subset) eigenvector column blocks on an open
    k grid; the loop closes from the last frame back to the first.
    """
    n = len(frames)
    det = 1.0 + 0.0j
    min_det = np.inf
    for i in range(n):
        m = frames[i].conj().T @ frames[(i + 1) % n]
        d = np.linalg.det(m)
        min_det = min(min_det, abs(d))
        det *= d
    return float(-np.angle(det)), float(min_det)


def _biorthogonal_loop(rights, lefts) -> tuple[float, float]:
    """Wilson loop with left/right frames: M^(i) = L_i^dag R_{i+1}."""
    n = len(rights)
    det = 1.0 + 0.0j
    min_det = np.inf
    for i in range(n):
        m = lefts[i].conj().T @ rights[(i + 1) % n]
        d = np.linalg.det(m)
        min_det = min(min_det, abs(d))
        det *= d
    return float(-np.angle(det)), float(min_det)


def zak_phase(params: HelixParams, band_subset, n_k: int = 400,
              m_cut: int = 2000, hermitian_only: bool = True,
              biorthogonal: bool = False) -> ZakResult:
    """Wilson-loop Zak phase of the energy-ordered band subset.

    Default is the Hermitian coherent Hamiltonian (orthonormal Bloch
    frames).  biorthogonal=True evaluates the full non-Hermitian problem
    with left/right eigenvector overlaps instead; no quantization claim is
    attached to that variant.
    """
    if n_k < 50:
        raise ValueError("n_k must be >= 50 for a usable Wilson loop")
    subset = tuple(int(b) for b in band_subset)
    if biorthogonal:
        hermitian_only = False
    c = cell_couplings(params, m_cut, hermitian_only)
    edge = np.pi / params.pitch
    ks = -edge + np.arange(n_k) * (2 * edge / n_k)  # open grid, closes by periodicity
    h_all = _fourier_sum(c, ks, params.pitch)
    if any(b < 0 or b >= h_all.shape[1] for b in subset):
        raise ValueError(f"band subset {subset} out of range for {h_all.shape[1]} bands")

    rights, lefts = [], []
    for h in h_all:
        if hermitian_only:
            w, v = np.linalg.eigh(h)
            rights.append(v[:, subset])
        else:
            w, v = np.linalg.eig(h)
            order = np.argsort(w.real)
            v = v[:, order]
            rights.append(v[:, subset])
            if biorthogonal:
                # rows of V^-1 are the dual (left) frame: <l_m | r_n> = delta
                lefts.append(np.linalg.inv(v).conj().T[:, subset])
    if biorthogonal:
        phase, min_det = _biorthogonal_loop(rights, lefts)
    else:
        phase, min_det = wilson_loop(rights)
    residual = float(min(abs(phase), np.pi - abs(phase)))
    return ZakResult(
        band_subset=subset,
        n_k=n_k,
        phase=phase,
        residual=residual,
        min_overlap_det=min_det,
        ill_defined=bool(min_det < DET_ILL_DEFINED),
        hermitian_only=hermitian_only,
        biorthogonal=biorthogonal,
    )
