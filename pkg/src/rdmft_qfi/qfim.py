"""Quantum Fisher information matrices of pure states and their 1-RDM functionals.

For a pure state and the collective generators ``J_a`` the QFIM is the
symmetrized covariance ``M_ab = 2 <{J_a, J_b}> - 4 <J_a><J_b>``.  Evaluated on
the constrained-search minimizer it becomes a functional of the 1-RDM, and it
can be recovered from derivatives of the interaction functional with respect
to the coupling strengths at fixed 1-RDM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fock import (
    AXES,
    AXIS_INDEX,
    CouplingSet,
    FockBasis,
    HermitianOperator,
    StateVector,
    apply_angular,
    op_general_coupling,
    pair_multiplicity,
)
from .rdm import OneBodyRDM, spin_vector
from .search import SearchOptions, SearchResult, _n2_amplitudes, _plane_angle, constrained_search


@dataclass(frozen=True, eq=False)
class QfimMatrix:
    entries: np.ndarray
    n_particles: int

    def __post_init__(self):
        m = np.array(self.entries, dtype=float).reshape(3, 3)
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > 1e-12 * scale:
            raise ValueError("QFIM must be symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m)[0] < -1e-10 * scale:
            raise ValueError("QFIM must be positive semidefinite")
        N = self.n_particles
        if np.any(np.diag(m) > N * N + 1e-9 * scale):
            raise ValueError(f"diagonal QFIM entry exceeds the Heisenberg bound N^2 = {N * N}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def get(self, a: str, b: str) -> float:
        return float(self.entries[AXIS_INDEX[a], AXIS_INDEX[b]])

    def __getitem__(self, pair) -> float:
        if isinstance(pair, str):
            pair = tuple(pair)
        return self.get(*pair)

    @property
    def zz(self) -> float:
        return self.get("z", "z")

    def quadratic_form(self, direction) -> float:
        n = np.asarray(direction, dtype=float)
        return float(n @ self.entries @ n)


def qfim_from_state(state: StateVector) -> QfimMatrix:
    """Covariance-form QFIM ``4 Re<J_a psi|J_b psi> - 4 <J_a><J_b>``."""
    psi = state.amplitudes
    v = np.stack([apply_angular(psi, a) for a in AXES])
    gram = (v.conj() @ v.T).real
    g = np.array([np.vdot(psi, v[i]).real for i in range(3)])
    m = 4.0 * gram - 4.0 * np.outer(g, g)
    return QfimMatrix(0.5 * (m + m.T), state.basis.n_particles)


def qfim_functional(
    target: OneBodyRDM,
    w: HermitianOperator,
    opts: SearchOptions = SearchOptions(),
    strategy: str = "auto",
) -> QfimMatrix:
    """QFIM of the constrained-search minimizer for ``target``."""
    return qfim_functional_with_result(target, w, opts, strategy)[0]


def qfim_functional_with_result(
    target: OneBodyRDM,
    w: HermitianOperator,
    opts: SearchOptions = SearchOptions(),
    strategy: str = "auto",
) -> tuple[QfimMatrix, SearchResult]:
    res = constrained_search(target, w, opts, strategy)
    return qfim_from_state(res.minimizer), res


def closed_form_qfim_n2(gamma_x: float, gamma_z: float, sign_u: int, theta: float | None = None) -> QfimMatrix:
    """Analytic N = 2 QFIM from the closed-form amplitudes of the on-site model.

    Expressed through the amplitudes ``a0`` of ``|2,0>``, ``b`` of ``|1,1>`` and
    ``a2`` of ``|0,2>``.  ``theta`` selects the approach direction at the origin.
    """
    if sign_u not in (1, -1):
        raise ValueError("sign_u must be +1 or -1")
    rho = min(math.hypot(gamma_x, gamma_z), 1.0)
    th = _plane_angle(gamma_x, gamma_z, theta, sign_u)
    a0, b, a2 = _n2_amplitudes(rho, th, sign_u)
    gx, gz = rho * math.sin(th), rho * math.cos(th)
    b2 = b * b
    mzz = 4.0 * (1.0 - b2) - 4.0 * gz * gz
    myy = 2.0 * (1.0 + b2) - 4.0 * a0 * a2
    mxx = 2.0 * (1.0 + b2) + 4.0 * a0 * a2 - 4.0 * gx * gx
    mxz = 2.0 * math.sqrt(2.0) * b * (a0 - a2) - 4.0 * gx * gz
    m = np.array([[mxx, 0.0, mxz], [0.0, myy, 0.0], [mxz, 0.0, mzz]])
    return QfimMatrix(m, 2)


# ---------------------------------------------------------------------------
# single on-site coupling


def mzz_single_coupling(target: OneBodyRDM, f_value: float, u: float) -> float:
    """``M_zz`` from the on-site functional: ``2 F/u - 4 gamma_z^2 - N^2 + 2N``.

    Follows from ``sum_j n_j(n_j-1) = 2 J_z^2 + N^2/2 - N`` and Hellmann-Feynman
    with ``F`` linear in ``u`` along a fixed minimizer.
    """
    if u == 0:
        raise ValueError("the on-site coupling must be nonzero")
    N = target.n_particles
    return 2.0 * f_value / u - 4.0 * target.gamma_z**2 - N * N + 2.0 * N


def mzz_single_coupling_unit_prefactor(target: OneBodyRDM, f_value: float, u: float) -> float:
    """Variant with prefactor 4 on ``F/u``: ``4 (F/u - gamma_z^2) - N^2 + 2N``.

    Off by ``2 F/u`` from the covariance QFIM; kept as the known-wrong
    alternative for the regression check and the CLI fault injection.
    """
    if u == 0:
        raise ValueError("the on-site coupling must be nonzero")
    N = target.n_particles
    return 4.0 * (f_value / u - target.gamma_z**2) - N * N + 2.0 * N


# ---------------------------------------------------------------------------
# general couplings


def _pair_entry(pair) -> tuple[str, str]:
    a, b = sorted(pair, key=AXES.index)
    return a, b


def qfim_from_coupling_gradient(target: OneBodyRDM, pair, derivative: float) -> float:
    """``M_ab`` from ``dF/du_ab`` at fixed 1-RDM, for W = sum_ab u_ab (1/2){J_a, J_b}."""
    if pair == "onsite":
        N = target.n_particles
        return 2.0 * derivative - N * N + 2.0 * N - 4.0 * target.gamma_z**2
    a, b = _pair_entry(pair)
    g = target.vector
    return 4.0 * (derivative / pair_multiplicity((a, b)) - g[AXIS_INDEX[a]] * g[AXIS_INDEX[b]])


class CouplingDerivative(NamedTuple):
    qfim_entry: float  # generated M_ab from the Richardson-extrapolated derivative
    derivative: float  # Richardson-extrapolated dF/du
    coarse: float  # central difference at fd_step
    fine: float  # central difference at fd_step / 2
    consistent: bool  # the two differences agree as second-order central differences should


def coupling_derivative(
    target: OneBodyRDM,
    couplings: CouplingSet,
    pair,
    fd_step: float | None = None,
    opts: SearchOptions = SearchOptions(),
    strategy: str = "auto",
) -> CouplingDerivative:
    """Central differences of F in one coupling at fixed 1-RDM, with a Richardson gate.

    ``pair`` is ``(a, b)`` for ``u_ab`` or ``'onsite'`` for the single on-site strength.
    """
    u0 = couplings.get(pair) if pair != "onsite" else (couplings.single_u or 0.0)
    if fd_step is None:
        fd_step = 1e-4 * max(1.0, abs(u0))
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    basis = FockBasis(target.n_particles)

    def F(u):
        w = op_general_coupling(basis, couplings.with_value(pair, u))
        return constrained_search(target, w, opts, strategy).f_value

    fp, fm = F(u0 + fd_step), F(u0 - fd_step)
    fp2, fm2 = F(u0 + fd_step / 2), F(u0 - fd_step / 2)
    coarse = (fp - fm) / (2 * fd_step)
    fine = (fp2 - fm2) / fd_step
    rich = (4.0 * fine - coarse) / 3.0
    # second-order truncation: coarse - fine ~ (3/4) c h^2, fine - rich ~ (1/4) c h^2;
    # rounding noise of the searches enters at ~ eps_F / h
    noise = 1e-12 * max(1.0, abs(fp), abs(fm)) / fd_step
    consistent = abs(fine - rich) <= max(abs(coarse - fine), noise) + 1e-14
    consistent = consistent and abs(coarse - fine) <= 1e-2 * max(1.0, abs(fine))
    return CouplingDerivative(float(qfim_from_coupling_gradient(target, pair, rich)), rich, coarse, fine, bool(consistent))


def generate_via_coupling_derivative(
    target: OneBodyRDM,
    couplings: CouplingSet,
    pair,
    fd_step: float | None = None,
    opts: SearchOptions = SearchOptions(),
    strategy: str = "auto",
) -> float:
    """QFIM entry ``M_ab`` generated from ``dF/du_ab`` at fixed 1-RDM.

    Raises ``ArithmeticError`` when the Richardson gate finds the two step sizes
    inconsistent (noise-dominated step or a minimizer crossing).
    """
    d = coupling_derivative(target, couplings, pair, fd_step, opts, strategy)
    if not d.consistent:
        raise ArithmeticError(
            f"finite differences inconsistent: {d.coarse!r} at h, {d.fine!r} at h/2"
        )
    return d.qfim_entry


def reconstruct_f(target: OneBodyRDM, qfim: QfimMatrix, couplings: CouplingSet) -> float:
    """Interaction functional rebuilt from the QFIM and the 1-RDM.

    ``<{J_a, J_b}>/2 = M_ab/4 + gamma_a gamma_b``, summed with the same pair
    weights as :func:`op_general_coupling`; the on-site strength enters through
    ``sum_j n_j(n_j-1) = 2 J_z^2 + N^2/2 - N``.
    """
    g = target.vector
    total = 0.0
    for (a, b), u in couplings.entries.items():
        i, j = AXIS_INDEX[a], AXIS_INDEX[b]
        total += pair_multiplicity((a, b)) * u * (0.25 * qfim.entries[i, j] + g[i] * g[j])
    if couplings.single_u:
        N = target.n_particles
        jz2 = 0.25 * qfim.zz + g[2] ** 2
        total += couplings.single_u * (2.0 * jz2 + N * N / 2.0 - N)
    return float(total)


# ---------------------------------------------------------------------------
# entanglement witness


@dataclass(frozen=True)
class WitnessVerdict:
    direction: tuple
    qfi_value: float
    depth_lower_bound: int
    bound_used: float

    def __post_init__(self):
        n = np.asarray(self.direction, dtype=float)
        if abs(float(n @ n) - 1.0) > 1e-12:
            raise ValueError("witness direction must be a unit vector")


def depth_bound(n_particles: int, m: int) -> float:
    """Largest QFI reachable by states with at most m-particle entanglement."""
    s = n_particles // m
    return float(s * m * m + (n_particles - s * m) ** 2)


def witness_depth(qfim: QfimMatrix, direction, n_particles: int) -> WitnessVerdict:
    """Lower bound on the entanglement depth certified by the QFI along ``direction``.

    The depth is ``m + 1`` for the largest ``m`` whose bound the QFI strictly
    exceeds, and 1 when even the separable bound ``N`` is not exceeded.
    """
    n = np.asarray(direction, dtype=float).reshape(3)
    if abs(float(n @ n) - 1.0) > 1e-12:
        raise ValueError("witness direction must be a unit vector")
    q = qfim.quadratic_form(n)
    N = n_particles
    # a state saturating a bound exactly must not certify through rounding
    slack = 1e-10 * max(1.0, float(N * N))
    depth, used = 1, depth_bound(N, 1) if N >= 1 else 0.0
    for m in range(1, N + 1):
        b = depth_bound(N, m)
        if q > b + slack:
            depth, used = m + 1, b
    return WitnessVerdict(tuple(float(x) for x in n), q, min(depth, max(N, 1)), used)
