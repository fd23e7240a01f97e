"""No-jump time evolution of single-excitation states and transport observables.

A mixed initial state is stored as weighted pure-state branches; each branch
amplitude vector a (length 2N) evolves as a(t) = exp(-i H_eff t) a(0), which
is equivalent to the no-jump master equation
rho_dot = -i (H_eff rho - rho H_eff^dag).  The propagator uses a spectral
decomposition of H_eff (exact in t); if the eigenvector matrix is too ill
conditioned it falls back to fixed-step 4th-order Runge-Kutta integration.

Observables follow the transport picture: per-spin populations P_up/P_down,
per-site populations, <S_z> = P_up - P_down, the surviving-excitation center
of mass <z> (normalized by the instantaneous norm), and the helicity
eta = sign(<S_z> * v) with v the discrete d<z>/dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import EmitterGeometry
from .hamiltonian import CouplingTensor, EffectiveHamiltonian, effective

COND_LIMIT = 1e8       # eigenvector-matrix condition number triggering the fallback
RK4_STEP = 1e-3        # fixed step (units 1/Gamma_0) of the fallback integrator
HELICITY_DEADBAND = 1e-6


@dataclass(frozen=True)
class ExcitationState:
    """Weighted pure-state branches (w_b, a_b) with sum_b w_b ||a_b||^2 = 1 at t=0."""

    weights: tuple[float, ...]
    amplitudes: tuple[np.ndarray, ...]
    time: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.amplitudes[0]) // 2

    def norm(self) -> float:
        return float(sum(w * np.vdot(a, a).real for w, a in zip(self.weights, self.amplitudes)))


def initial_state(n_sites: int, site: int, p_up: float) -> ExcitationState:
    """Statistical mixture of |up_site> and |down_site> with weights p_up, 1-p_up.

    Zero-weight branches are dropped, so p_up = 1 (or 0) gives a single pure
    branch.
    """
    if not 0 <= site < n_sites:
        raise ValueError(f"site index {site} out of range for {n_sites} emitters")
    if not 0.0 <= p_up <= 1.0:
        raise ValueError(f"p_up must lie in [0, 1], got {p_up}")
    weights, amps = [], []
    for spin, w in ((0, p_up), (1, 1.0 - p_up)):
        if w > 0.0:
            a = np.zeros(2 * n_sites, dtype=complex)
            a[2 * site + spin] = 1.0
            weights.append(float(w))
            amps.append(a)
    return ExcitationState(tuple(weights), tuple(amps))


class Propagator:
    """Exact-in-time propagation a(t) = exp(-i H t) a(0) via diagonalization."""

    def __init__(self, h_eff: EffectiveHamiltonian, cond_limit: float = COND_LIMIT):
        self.h = h_eff.matrix
        self.hermitian = h_eff.hermitian_only
        self.use_stepper = False
        if self.hermitian:
            self.evals, self.vecs = np.linalg.eigh(self.h)
            self.vecs_inv = self.vecs.conj().T
        else:
            self.evals, self.vecs = np.linalg.eig(self.h)
            cond = np.linalg.cond(self.vecs)
            if cond > cond_limit:
                # near-defective spectrum: spectral reconstruction unreliable
                self.use_stepper = True
            else:
                self.vecs_inv = np.linalg.inv(self.vecs)

    def propagate(self, a0: np.ndarray, times) -> np.ndarray:
        """Amplitudes at the requested times, shape (len(times), 2N)."""
        times = np.asarray(times, dtype=float)
        if self.use_stepper:
            return self._propagate_rk4(a0, times)
        coef = self.vecs_inv @ a0
        phases = np.exp(-1j * np.outer(times, self.evals))
        return phases * coef @ self.vecs.T

    def _propagate_rk4(self, a0: np.ndarray, times: np.ndarray) -> np.ndarray:
        out = np.empty((len(times), len(a0)), dtype=complex)
        a = a0.astype(complex).copy()
        t_cur = 0.0
        h_mat = -1j * self.h
        for idx in np.argsort(times):
            t_target = times[idx]
            span = t_target - t_cur
            if span > 0:
                n_steps = max(1, int(np.ceil(span / RK4_STEP)))
                dt = span / n_steps
                for _ in range(n_steps):
                    k1 = h_mat @ a
                    k2 = h_mat @ (a + 0.5 * dt * k1)
                    k3 = h_mat @ (a + 0.5 * dt * k2)
                    k4 = h_mat @ (a + dt * k3)
                    a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t_cur = t_target
            out[idx] = a
        return out


@dataclass
class ObservableSeries:
    """Transport observables on the output time grid."""

    times: np.ndarray
    trace: np.ndarray            # total surviving population Tr rho(t)
    p_up: np.ndarray
    p_down: np.ndarray
    sz: np.ndarray               # P_up - P_down
    z_com: np.ndarray            # norm-conditioned center of mass
    eta: np.ndarray              # helicity in {+1, -1, nan (undefined)}
    per_site: np.ndarray         # (T, N, 2) site- and spin-resolved populations
    branch_weights: tuple[float, ...] = field(default=())
    branch_amplitudes: tuple[np.ndarray, ...] = field(default=())  # each (T, 2N)


def helicity(sz: np.ndarray, z_com: np.ndarray, times: np.ndarray,
             deadband: float = HELICITY_DEADBAND) -> np.ndarray:
    """eta(t) = sign(<S_z> * v); undefined (nan) inside the dead-band."""
    if len(times) < 2:
        raise ValueError("helicity needs at least two time points")
    v = np.gradient(z_com, times)
    prod = sz * v
    eta = np.where(prod > 0, 1.0, -1.0)
    eta[~(np.abs(prod) > deadband)] = np.nan  # also catches nan z_com
    return eta


def evolve(state: ExcitationState, h_eff: EffectiveHamiltonian,
           geom: EmitterGeometry, times,
           deadband: float = HELICITY_DEADBAND) -> ObservableSeries:
    """Propagate all branches and assemble the observable series."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("output times must be sorted and non-negative")
    prop = Propagator(h_eff)
    n = state.n_sites
    per_site = np.zeros((len(times), n, 2))
    branch_amps = []
    for w, a0 in zip(state.weights, state.amplitudes):
        amps = prop.propagate(a0, times)
        branch_amps.append(amps)
        per_site += w * np.abs(amps.reshape(len(times), n, 2)) ** 2
    p_spin = per_site.sum(axis=1)
    trace = p_spin.sum(axis=1)
    p_site = per_site.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        z_com = (p_site @ geom.z) / trace
    eta = helicity(p_spin[:, 0] - p_spin[:, 1], z_com, times, deadband)
    return ObservableSeries(
        times=times,
        trace=trace,
        p_up=p_spin[:, 0],
        p_down=p_spin[:, 1],
        sz=p_spin[:, 0] - p_spin[:, 1],
        z_com=z_com,
        eta=eta,
        per_site=per_site,
        branch_weights=state.weights,
        branch_amplitudes=tuple(branch_amps),
    )


def arrival_time(series: ObservableSeries, geom: EmitterGeometry):
    """First local maximum of the far-end site population (diagnostic).

    The far end is the site with the largest |z - z_launch| deduced from the
    series' t=0 center of mass.  Returns None if the population is still
    rising at the end of the series.
    """
    far = int(np.argmax(np.abs(geom.z - series.z_com[0])))
    p = series.per_site[:, far, :].sum(axis=1)
    rising = False
    for i in range(1, len(p)):
        if p[i] > p[i - 1]:
            rising = True
        elif rising and p[i] < p[i - 1]:
            return float(series.times[i - 1])
    return None


def master_equation_check(state: ExcitationState, coupling: CouplingTensor,
                          t_final: float, hermitian_only: bool = False,
                          n_eval: int = 50) -> float:
    """Max observable deviation between branch propagation and direct
    integration of rho_dot = -i (H_eff rho - rho H_eff^dag).

    Dense density-matrix integration scales as (2N)^2, so this oracle is
    restricted to N <= 8.
    """
    n = state.n_sites
    if n > 8:
        raise ValueError("master_equation_check is limited to N <= 8 emitters")
    h_eff = effective(coupling, hermitian_only)
    h = h_eff.matrix
    dim = 2 * n
    rho0 = np.zeros((dim, dim), dtype=complex)
    for w, a in zip(state.weights, state.amplitudes):
        rho0 += w * np.outer(a, a.conj())

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (h @ rho - rho @ h.conj().T)
        return drho.ravel()

    times = np.linspace(0.0, t_final, n_eval + 1)
    sol = solve_ivp(rhs, (0.0, t_final), rho0.ravel(), t_eval=times,
                    method="RK45", rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"density-matrix integration failed: {sol.message}")

    # geometry is only needed for z_com; a placeholder z = site index works
    # for the comparison since both sides use the same values
    z = np.arange(n, dtype=float)
    fake_geom = EmitterGeometry(np.column_stack([np.zeros(n), np.zeros(n), z]),
                                label="index line")
    series = evolve(state, h_eff, fake_geom, times)

    dev = 0.0
    for i, _t in enumerate(times):
        rho = sol.y[:, i].reshape(dim, dim)
        pops = np.diag(rho).real.reshape(n, 2)
        tr = pops.sum()
        dev = max(dev, np.abs(pops - series.per_site[i]).max())
        dev = max(dev, abs(tr - series.trace[i]))
        dev = max(dev, abs(pops[:, 0].sum() - series.p_up[i]))
        dev = max(dev, abs(pops[:, 1].sum() - series.p_down[i]))
        z_com = pops.sum(axis=1) @ z / tr
        dev = max(dev, abs(z_com - series.z_com[i]))
    return float(dev)
