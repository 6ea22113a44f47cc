import math

import numpy as np
import pytest

from rdmft_qfi.fock import (
    AXES,
    CouplingSet,
    FockBasis,
    HermitianOperator,
    angular_operators,
    op_general_coupling,
    op_onsite_interaction,
)
from rdmft_qfi.rdm import OneBodyRDM, RepresentabilityError, gamma_from_state
from rdmft_qfi.search import (
    SearchOptions,
    closed_form_n2,
    constrained_search,
    disk_grid,
    functional_surface,
    numeric_search_direct,
    numeric_search_dual,
    onsite_strength,
)
from rdmft_qfi.fock import StateVector


def legendre_oracle(w, field):
    """Ground state of W + field.J: its 1-RDM is v-representable and F there equals <W>."""
    ops = angular_operators(w.basis)
    h = w.entries + sum(f * op.entries for f, op in zip(field, ops))
    vals, vecs = np.linalg.eigh(h)
    psi = vecs[:, 0]
    state = StateVector(w.basis, psi / np.linalg.norm(psi))
    return gamma_from_state(state), float(np.vdot(psi, w.entries @ psi).real)


# closed form, N = 2 --------------------------------------------------------


def test_closed_form_hand_values():
    # repulsive: coherent state along x has <sum n(n-1)> = 1, |2,0> has 2, |1,1> has 0
    assert closed_form_n2(1.0, 0.0, 1).f_value == pytest.approx(1.0)
    assert closed_form_n2(0.0, 1.0, 1).f_value == pytest.approx(2.0)
    assert closed_form_n2(0.0, 0.0, 1).f_value == pytest.approx(0.0)
    # attractive: NOON at the center maximizes <sum n(n-1)> = 2
    assert closed_form_n2(0.0, 0.0, -1).f_value == pytest.approx(-2.0)


@pytest.mark.parametrize("sign", [1, -1])
def test_closed_form_reproduces_target(sign):
    rng = np.random.default_rng(4)
    for _ in range(20):
        r, th = math.sqrt(rng.uniform()), rng.uniform(0, math.pi)
        res = closed_form_n2(r * math.sin(th), r * math.cos(th), sign)
        assert res.constraint_residual < 1e-14
        w = op_onsite_interaction(FockBasis(2), sign)
        a = res.minimizer.amplitudes
        assert float(np.vdot(a, w.entries @ a).real) == pytest.approx(res.f_value, abs=1e-14)


def test_closed_form_origin_direction_dependence():
    vals = [closed_form_n2(0.0, 0.0, 1, theta=t).f_value for t in (0.0, math.pi / 4, math.pi / 2)]
    assert vals[0] == pytest.approx(2.0) and vals[2] == pytest.approx(0.0)
    assert vals[0] > vals[1] > vals[2]


def test_closed_form_rejects_outside_disk():
    with pytest.raises(RepresentabilityError):
        closed_form_n2(1.0, 0.5, 1)
    with pytest.raises(ValueError):
        closed_form_n2(0.0, 0.0, 2)


# numeric searches -----------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("u", [1.0, -1.0])
def test_direct_search_matches_legendre_oracle(n, u):
    w = op_onsite_interaction(FockBasis(n), u)
    gamma, f = legendre_oracle(w, (-0.8, 0.0, 0.5))
    res = numeric_search_direct(n, gamma, w)
    assert res.converged
    assert res.f_value == pytest.approx(f, abs=1e-8)


def test_dual_search_matches_legendre_oracle_with_multipliers():
    w = op_onsite_interaction(FockBasis(5), 1.0)
    field = np.array([-2.0, 0.0, 0.7])
    gamma, f = legendre_oracle(w, field)
    res = numeric_search_dual(5, gamma, w)
    assert res.converged and res.status == "ok"
    assert res.f_value == pytest.approx(f, abs=1e-9)
    assert np.allclose(res.multipliers, field, atol=1e-6)


def test_direct_search_with_offdiagonal_coupling():
    # W = J_z^2 + 0.5 {J_x, J_z} does not commute with J_z, so the complex path is used
    w = op_general_coupling(FockBasis(3), CouplingSet({("z", "z"): 1.0, ("x", "z"): 0.5}))
    gamma, f = legendre_oracle(w, (-1.0, 0.3, 0.2))
    res = constrained_search(gamma, w, strategy="direct_penalty")
    assert res.converged
    assert res.f_value == pytest.approx(f, abs=1e-8)
    assert np.allclose(gamma_from_state(res.minimizer).vector, gamma.vector, atol=1e-9)


def test_azimuthal_target_is_rotated_back():
    w = op_onsite_interaction(FockBasis(3), 1.0)
    g = OneBodyRDM.from_spherical(3, 0.9, 1.0, 2.0)
    res = constrained_search(g, w)
    assert res.converged
    assert np.allclose(res.rdm.vector, g.vector, atol=1e-9)
    flat = constrained_search(OneBodyRDM.from_spherical(3, 0.9, 1.0, 0.0), w)
    assert res.f_value == pytest.approx(flat.f_value, abs=1e-9)


@pytest.mark.parametrize("sign", [1, -1])
def test_numeric_matches_closed_form_n2(sign):
    w = op_onsite_interaction(FockBasis(2), sign)
    rng = np.random.default_rng(9)
    for _ in range(6):
        r, th = 0.95 * math.sqrt(rng.uniform()), rng.uniform(0, math.pi)
        x, z = r * math.sin(th), r * math.cos(th)
        got = constrained_search(OneBodyRDM(2, x, 0.0, z), w)
        assert got.f_value == pytest.approx(closed_form_n2(x, z, sign).f_value, abs=1e-9)


def test_surface_target_uses_coherent_state():
    w = op_onsite_interaction(FockBasis(4), 1.0)
    res = constrained_search(OneBodyRDM.from_spherical(4, 2.0, 0.6, 0.0), w)
    assert res.status == "surface"
    assert res.constraint_residual < 1e-12


def test_dual_flags_unreachable_target():
    # the repulsive N = 2 functional is concave in gamma_rho on the interior, so no field reaches it
    w = op_onsite_interaction(FockBasis(2), 1.0)
    res = numeric_search_dual(2, OneBodyRDM(2, 0.3, 0.0, 0.2), w)
    assert not res.converged
    assert res.status == "not_v_representable"
    fallback = constrained_search(OneBodyRDM(2, 0.3, 0.0, 0.2), w)
    assert fallback.converged and fallback.strategy == "direct_penalty"


def test_closed_form_strategy_dispatch():
    w = op_onsite_interaction(FockBasis(2), -3.0)
    res = constrained_search(OneBodyRDM(2, 0.4, 0.0, -0.3), w, strategy="closed_form")
    assert res.f_value == pytest.approx(3.0 * closed_form_n2(0.4, -0.3, -1).f_value)
    with pytest.raises(ValueError):
        constrained_search(OneBodyRDM(3, 0, 0, 0), op_onsite_interaction(FockBasis(3), 1.0), strategy="closed_form")
    with pytest.raises(ValueError):
        constrained_search(OneBodyRDM(2, 0, 0, 0), w, strategy="bogus")


def test_mismatched_particle_number():
    w = op_onsite_interaction(FockBasis(3), 1.0)
    with pytest.raises(ValueError):
        constrained_search(OneBodyRDM(2, 0, 0, 0), w)
    with pytest.raises(ValueError):
        numeric_search_direct(4, OneBodyRDM(3, 0, 0, 0), w)


def test_onsite_strength_detection():
    assert onsite_strength(op_onsite_interaction(FockBasis(3), 2.5)) == pytest.approx(2.5)
    w = op_general_coupling(FockBasis(3), CouplingSet({("x", "x"): 1.0}))
    assert onsite_strength(w) is None


def test_search_options_validation():
    with pytest.raises(ValueError):
        SearchOptions(constraint_tolerance=0)
    with pytest.raises(ValueError):
        SearchOptions(seed=-1)
    with pytest.raises(ValueError):
        SearchOptions(penalty_growth=1.0)


# surfaces -------------------------------------------------------------------


def test_disk_grid_masks_to_disk():
    gx, gz = disk_grid(2, 5)
    assert np.all(gx**2 + gz**2 <= 1 + 1e-12)
    assert gx.size == 13
    with pytest.raises(ValueError):
        disk_grid(2, 1)


def test_surface_independent_of_workers_and_strategy_batches():
    a = functional_surface(2, 1, 8, "direct_penalty")
    b = functional_surface(2, 1, 8, "auto", workers=1)
    c = functional_surface(2, 1, 8, "auto", workers=4)
    assert np.array_equal(b.f_value, c.f_value)
    assert np.allclose(a.f_value, b.f_value, atol=1e-9)
    assert a.converged.all() and b.converged.all()


def test_surface_rejects_zero_interaction():
    with pytest.raises(ValueError):
        functional_surface(2, 0.0, 4)


def test_closed_form_amplitudes_hand_values():
    a = closed_form_n2(1.0, 0.0, 1).minimizer.amplitudes
    assert np.allclose(np.abs(a) ** 2, [0.25, 0.5, 0.25])
    a = closed_form_n2(0.0, 1.0, 1).minimizer.amplitudes
    assert np.allclose(np.abs(a), [0, 0, 1])


def test_surface_target_n3_is_fock_state():
    res = constrained_search(OneBodyRDM(3, 0.0, 0.0, 1.5), op_onsite_interaction(FockBasis(3), 1.0))
    assert res.f_value == pytest.approx(6.0)
    assert abs(abs(res.minimizer.amplitudes[3]) - 1) < 1e-12


def test_near_surface_and_near_centre_against_closed_form():
    w = op_onsite_interaction(FockBasis(2), 1.0)
    got = constrained_search(OneBodyRDM(2, 1 - 1e-3, 0.0, 0.0), w).f_value
    assert got == pytest.approx(closed_form_n2(1 - 1e-3, 0.0, 1).f_value, abs=1e-8)
    wa = op_onsite_interaction(FockBasis(2), -1.0)
    got = constrained_search(OneBodyRDM(2, 1e-6, 0.0, 0.0), wa).f_value
    assert got == pytest.approx(closed_form_n2(0.0, 0.0, -1).f_value, abs=1e-5)


def test_ground_state_target_recovers_hopping_field():
    from rdmft_qfi.groundstate import ground_state

    gs = ground_state(10, 1.0, 1.0)
    w = op_onsite_interaction(FockBasis(10), 1.0)
    res = numeric_search_dual(10, gs.rdm, w)
    assert res.converged and res.constraint_residual <= 1e-9
    assert np.allclose(res.multipliers, [-2.0, 0.0, 0.0], atol=1e-6)
    a = gs.state.amplitudes
    assert res.f_value == pytest.approx(float(np.vdot(a, w.entries @ a).real), abs=1e-9)


def test_centre_repulsive_direct_and_flagged_dual_agree_on_f():
    w = op_onsite_interaction(FockBasis(2), 1.0)
    target = OneBodyRDM(2, 0.0, 0.0, 0.0)
    dual = numeric_search_dual(2, target, w)
    direct = numeric_search_direct(2, target, w)
    assert direct.f_value == pytest.approx(0.0, abs=1e-9)
    assert dual.status == "not_v_representable" or dual.f_value == pytest.approx(direct.f_value, abs=1e-9)


def test_strategies_agree_at_interior_point():
    w = op_onsite_interaction(FockBasis(2), 1.0)
    target = OneBodyRDM(2, 0.5, 0.0, 0.5)
    direct = constrained_search(target, w, strategy="direct_penalty").f_value
    assert direct == pytest.approx(constrained_search(target, w).f_value, abs=1e-6)
    assert direct == pytest.approx(closed_form_n2(0.5, 0.5, 1).f_value, abs=1e-6)
    dual = numeric_search_dual(2, target, w)
    if dual.converged:
        assert dual.f_value == pytest.approx(direct, abs=1e-6)


def test_boundary_point_is_coherent_state():
    table = functional_surface(2, 1, 3, "direct_penalty")
    i = int(np.flatnonzero((table.gamma_x == 1.0) & (table.gamma_z == 0.0))[0])
    assert table.results[i].status == "surface"
    assert table.f_value[i] == pytest.approx(1.0)
