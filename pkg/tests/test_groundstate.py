import math

import numpy as np
import pytest

from rdmft_qfi.groundstate import ground_state, verify_stationarity, verify_variational_principle


def test_n2_ground_energy_by_hand():
    for t, u in ((1.0, 1.0), (1.0, 0.2), (0.5, -1.0)):
        gs = ground_state(2, t, u)
        assert gs.energy == pytest.approx(u - math.sqrt(u * u + 4 * t * t), abs=1e-13)
        assert gs.residual < 1e-12


def test_ground_state_is_symmetric_and_along_x():
    gs = ground_state(6, 1.0, 0.5)
    assert gs.rdm.gamma_x > 0
    assert abs(gs.rdm.gamma_z) < 1e-12
    a = gs.state.amplitudes
    assert np.allclose(a, a[::-1])


def test_noninteracting_is_coherent():
    gs = ground_state(5, 1.0, 0.0)
    assert gs.energy == pytest.approx(-5.0)
    assert gs.rdm.gamma_x == pytest.approx(2.5)


def test_degenerate_without_hopping():
    gs = ground_state(2, 0.0, 1.0)
    assert gs.energy == pytest.approx(0.0, abs=1e-15)
    assert not gs.degenerate
    gs = ground_state(3, 0.0, 1.0)  # |2,1> and |1,2>
    assert gs.degenerate


def test_ground_state_input_validation():
    with pytest.raises(ValueError):
        ground_state(-1, 1.0, 1.0)


@pytest.mark.parametrize("n,t,u", [(2, 1.0, 1.0), (5, 1.0, 5.0)])
def test_variational_principle(n, t, u):
    chk = verify_variational_principle(n, t, u)
    assert chk.deviation <= 1e-6


def test_stationarity_and_skip():
    rep = verify_stationarity(3, 1.0, 1.0)
    assert not rep.skipped
    assert rep.max_residual <= 1e-4
    skipped = verify_stationarity(3, 0.0, 1.0)
    assert skipped.skipped and "degenerate" in skipped.reason


def test_attractive_without_hopping_is_degenerate_noon_pair():
    gs = ground_state(2, 0.0, -1.0)
    assert gs.energy == pytest.approx(-2.0)
    assert gs.gap == pytest.approx(0.0, abs=1e-14) and gs.degenerate
    a = gs.state.amplitudes
    assert abs(a[1]) < 1e-14


def test_repulsive_without_hopping_is_fock_11():
    gs = ground_state(2, 0.0, 1.0)
    assert abs(abs(gs.state.amplitudes[1]) - 1) < 1e-14
    assert np.allclose(gs.rdm.vector, 0, atol=1e-14)


@pytest.mark.parametrize("n", [1, 17, 200])
def test_noninteracting_exact_energy(n):
    assert ground_state(n, 1.3, 0.0).energy == pytest.approx(-1.3 * n, abs=1e-10)


@pytest.mark.parametrize("n,t,u", [(3, 1.0, 0.5), (8, 0.4, -0.3), (12, 1.0, 4.0)])
def test_rayleigh_bound_symmetry_and_residual(n, t, u):
    from rdmft_qfi.fock import FockBasis, op_hamiltonian

    h = op_hamiltonian(FockBasis(n), t, u).entries
    gs = ground_state(n, t, u)
    rng = np.random.default_rng(n)
    for _ in range(100):
        v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        v /= np.linalg.norm(v)
        assert gs.energy <= float(np.vdot(v, h @ v).real) + 1e-12
    assert abs(gs.rdm.gamma_y) < 1e-12 and abs(gs.rdm.gamma_z) < 1e-10
    assert gs.residual <= 1e-10 * np.linalg.norm(h, 2)


def test_variational_minimum_without_interaction_on_surface():
    chk = verify_variational_principle(4, 1.0, 0.0)
    assert chk.deviation <= 1e-6
    assert chk.gamma_min[0] == pytest.approx(2.0, abs=1e-6)


def test_variational_principle_n10():
    assert verify_variational_principle(10, 1.0, 0.5).deviation <= 1e-6


def test_stationarity_z_component_vanishes():
    rep = verify_stationarity(2, 1.0, 1.0)
    assert abs(rep.gradient[0] - 2.0) <= 1e-4
    assert abs(rep.gradient[1]) <= 1e-6
