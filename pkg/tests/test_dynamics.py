import numpy as np
import pytest

from heliport.dynamics import (Propagator, arrival_time, evolve, helicity,
                               initial_state, master_equation_check)
from heliport.geometry import (EmitterGeometry, HelixParams, build_helix,
                               mirror_xz)
from heliport.greens import GAMMA0
from heliport.hamiltonian import assemble, effective


def test_initial_state_branches():
    st = initial_state(4, 1, 0.5)
    assert st.weights == (0.5, 0.5)
    assert np.argmax(np.abs(st.amplitudes[0])) == 2  # site 1, spin up
    assert np.argmax(np.abs(st.amplitudes[1])) == 3  # site 1, spin down
    assert abs(st.norm() - 1.0) < 1e-15

    pure = initial_state(4, 0, 1.0)
    assert pure.weights == (1.0,)

    with pytest.raises(ValueError):
        initial_state(4, 4, 0.5)
    with pytest.raises(ValueError):
        initial_state(4, 0, 1.5)


def test_single_emitter_decays_exponentially():
    geom = EmitterGeometry(np.zeros((1, 3)))
    h = effective(assemble(geom))
    times = np.linspace(0.0, 8.0, 60)
    ser = evolve(initial_state(1, 0, 0.5), h, geom, times)
    assert np.abs(ser.trace - np.exp(-GAMMA0 * times)).max() < 1e-12


def test_norm_monotone_and_split(small_helix):
    h = effective(assemble(small_helix))
    times = np.linspace(0.0, 20.0, 150)
    ser = evolve(initial_state(small_helix.n_sites, 0, 0.5), h, small_helix, times)
    assert np.diff(ser.trace).max() <= 1e-10
    assert np.abs(ser.p_up + ser.p_down - ser.trace).max() < 1e-12
    assert np.abs(ser.per_site.sum(axis=(1, 2)) - ser.trace).max() < 1e-12


def test_hermitian_norm_conserved(small_helix):
    h = effective(assemble(small_helix), hermitian_only=True)
    times = np.linspace(0.0, 20.0, 80)
    ser = evolve(initial_state(small_helix.n_sites, 0, 0.5), h, small_helix, times)
    assert np.abs(ser.trace - 1.0).max() < 1e-8


def test_mirror_swaps_populations(small_helix):
    mirrored = mirror_xz(small_helix)
    times = np.linspace(0.0, 6.0, 50)
    st = initial_state(small_helix.n_sites, 0, 0.5)
    a = evolve(st, effective(assemble(small_helix)), small_helix, times)
    b = evolve(st, effective(assemble(mirrored)), mirrored, times)
    assert np.abs(a.p_up - b.p_down).max() < 1e-13
    assert np.abs(a.p_down - b.p_up).max() < 1e-13
    assert np.abs(a.trace - b.trace).max() < 1e-13
    assert np.abs(a.per_site - b.per_site[:, :, ::-1]).max() < 1e-13


def test_branch_mixture_is_linear(small_helix):
    h = effective(assemble(small_helix))
    times = np.linspace(0.0, 4.0, 30)
    n = small_helix.n_sites
    mix = evolve(initial_state(n, 0, 0.3), h, small_helix, times)
    up = evolve(initial_state(n, 0, 1.0), h, small_helix, times)
    dn = evolve(initial_state(n, 0, 0.0), h, small_helix, times)
    assert np.abs(mix.per_site - 0.3 * up.per_site - 0.7 * dn.per_site).max() < 1e-14


def test_helicity_signs_and_deadband():
    times = np.linspace(0.0, 1.0, 5)
    z_com = np.linspace(0.0, 1.0, 5)          # moving up
    sz = np.array([-0.2, -0.2, 0.2, 1e-9, np.nan])
    eta = helicity(sz, z_com, times, deadband=1e-6)
    assert eta[0] == -1.0 and eta[1] == -1.0  # S_z < 0 while moving up
    assert eta[2] == 1.0
    assert np.isnan(eta[3])                   # inside the dead-band
    assert np.isnan(eta[4])                   # undefined input stays undefined


def test_evolve_rejects_unsorted_times(small_helix):
    h = effective(assemble(small_helix))
    with pytest.raises(ValueError):
        evolve(initial_state(small_helix.n_sites, 0, 0.5), h, small_helix,
               np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        evolve(initial_state(small_helix.n_sites, 0, 0.5), h, small_helix,
               np.array([-1.0, 0.5]))


def test_rk4_fallback_matches_spectral(small_helix):
    h = effective(assemble(small_helix))
    spectral = Propagator(h)
    assert not spectral.use_stepper
    stepped = Propagator(h, cond_limit=0.0)   # force the fixed-step path
    assert stepped.use_stepper
    a0 = initial_state(small_helix.n_sites, 0, 1.0).amplitudes[0]
    times = np.array([0.0, 0.7, 1.9])
    assert np.abs(spectral.propagate(a0, times)
                  - stepped.propagate(a0, times)).max() < 1e-8


def test_arrival_time_of_transport_pulse():
    geom = build_helix(HelixParams(0.05, 0.175, 3, 10, 1))
    h = effective(assemble(geom))
    times = np.linspace(0.0, 8.0, 160)
    ser = evolve(initial_state(geom.n_sites, 0, 0.5), h, geom, times)
    t_arr = arrival_time(ser, geom)
    assert t_arr is not None
    assert 0.5 < t_arr < 8.0


def test_master_equation_agreement(small_helix):
    st = initial_state(small_helix.n_sites, 0, 0.5)
    coup = assemble(small_helix)
    assert master_equation_check(st, coup, 5.0) < 1e-6
    assert master_equation_check(st, coup, 3.0, hermitian_only=True) < 1e-6


def test_master_equation_single_emitter():
    geom = EmitterGeometry(np.zeros((1, 3)))
    st = initial_state(1, 0, 1.0)
    assert master_equation_check(st, assemble(geom), 4.0) < 1e-8


def test_master_equation_size_guard(reference_helix):
    st = initial_state(reference_helix.n_sites, 0, 0.5)
    with pytest.raises(ValueError):
        master_equation_check(st, assemble(reference_helix), 1.0)
