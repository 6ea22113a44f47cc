"""Fixed-N two-mode bosonic Fock space and the operators living on it.

Basis index ``n`` labels the state ``|n, N-n>`` with ``n`` bosons in the left
mode, in ascending order ``n = 0 .. N``.  Collective spin operators follow the
Schwinger representation ``J_a = 1/2 (b_l^+, b_r^+) sigma_a (b_l, b_r)^T`` so
that ``J_z = (n_l - n_r) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

AXES = ("x", "y", "z")
AXIS_INDEX = {a: i for i, a in enumerate(AXES)}


@dataclass(frozen=True)
class FockBasis:
    """Basis of the N-particle sector of two bosonic modes."""

    n_particles: int

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 0:
            raise ValueError(f"particle number must be a non-negative integer, got {self.n_particles!r}")
        object.__setattr__(self, "n_particles", int(self.n_particles))

    @property
    def dim(self) -> int:
        return self.n_particles + 1

    @property
    def left_occupations(self) -> np.ndarray:
        return np.arange(self.dim)

    @property
    def right_occupations(self) -> np.ndarray:
        return self.n_particles - np.arange(self.dim)

    def index(self, n_left: int) -> int:
        if not 0 <= n_left <= self.n_particles:
            raise IndexError(f"left occupation {n_left} outside 0..{self.n_particles}")
        return n_left

    def fock_state(self, n_left: int) -> "StateVector":
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index(n_left)] = 1.0
        return StateVector(self, amps)


def build_basis(n_particles: int) -> FockBasis:
    return FockBasis(n_particles)


def _is_real_tridiagonal(m: np.ndarray) -> bool:
    if np.any(m.imag != 0):
        return False
    d = m.shape[0]
    if d < 3:
        return True
    band = np.abs(np.subtract.outer(np.arange(d), np.arange(d))) > 1
    return not np.any(m[band] != 0)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix on a :class:`FockBasis`.

    ``real_tridiagonal`` is detected from the entries when not given; when set,
    the operator can be handed to the tridiagonal eigensolver.
    """

    basis: FockBasis
    entries: np.ndarray
    real_tridiagonal: bool | None = None

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        d = self.basis.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(m).max(initial=0.0))):
            raise ValueError("operator is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.real_tridiagonal is None:
            object.__setattr__(self, "real_tridiagonal", _is_real_tridiagonal(m))
        elif self.real_tridiagonal and not _is_real_tridiagonal(m):
            raise ValueError("real_tridiagonal hint set on a matrix that is not real tridiagonal")

    @property
    def is_real(self) -> bool:
        return not np.any(self.entries.imag != 0)

    def tridiagonal_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(diagonal, off-diagonal)`` as real arrays."""
        if not self.real_tridiagonal:
            raise ValueError("operator is not real symmetric tridiagonal")
        m = self.entries.real
        return np.diag(m).copy(), np.diag(m, 1).copy()

    def norm(self) -> float:
        """Spectral-norm bound (max absolute row sum)."""
        return float(np.abs(self.entries).sum(axis=1).max(initial=0.0))

    def commutes_with(self, other: "HermitianOperator", atol: float = 1e-12) -> bool:
        a, b = self.entries, other.entries
        c = a @ b - b @ a
        scale = max(1.0, self.norm() * other.norm())
        return float(np.abs(c).max(initial=0.0)) <= atol * scale

    def _check(self, other: "HermitianOperator"):
        if other.basis != self.basis:
            raise ValueError("operators act on different bases")

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check(other)
        return HermitianOperator(self.basis, self.entries + other.entries)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check(other)
        return HermitianOperator(self.basis, self.entries - other.entries)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise TypeError("only real scalars preserve Hermiticity")
        return HermitianOperator(self.basis, float(np.real(scalar)) * self.entries)

    __rmul__ = __mul__

    def anticommutator(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check(other)
        a, b = self.entries, other.entries
        return HermitianOperator(self.basis, a @ b + b @ a)


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray

    NORM_TOL = 1e-12

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got {a.shape[0]}")
        norm2 = float(np.vdot(a, a).real)
        if abs(norm2 - 1.0) > self.NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_amplitudes(cls, basis: FockBasis, amplitudes: Iterable[complex], canonical_phase: bool = False):
        a = np.array(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValueError("zero vector cannot be normalized")
        a = a / norm
        if canonical_phase:
            a = canonicalize_phase(a)
        return cls(basis, a)

    def is_real(self, atol: float = 1e-14) -> bool:
        return bool(np.all(np.abs(self.amplitudes.imag) <= atol))


def canonicalize_phase(amplitudes: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Fix the global phase so the first non-negligible amplitude is real positive."""
    a = np.asarray(amplitudes, dtype=complex)
    big = np.flatnonzero(np.abs(a) > atol * max(1.0, np.abs(a).max(initial=0.0)))
    if big.size == 0:
        return a.copy()
    lead = a[big[0]]
    return a * (abs(lead) / lead)


def _pair_key(pair) -> tuple[str, str]:
    if isinstance(pair, str):
        pair = tuple(pair)
    a, b = pair
    if a not in AXIS_INDEX or b not in AXIS_INDEX:
        raise ValueError(f"unknown axis pair {pair!r}")
    return tuple(sorted((a, b), key=AXIS_INDEX.__getitem__))


def pair_multiplicity(pair) -> int:
    """Number of ordered pairs an unordered coupling stands for (1 or 2)."""
    a, b = _pair_key(pair)
    return 1 if a == b else 2


@dataclass(frozen=True)
class CouplingSet:
    """Symmetric two-body couplings ``u_ab`` plus an optional on-site ``u``.

    The represented interaction is

        W = sum_{a,b ordered} u_ab * 1/2 {J_a, J_b}  +  single_u * sum_j n_j (n_j - 1)

    i.e. ``u_aa J_a^2`` for diagonal pairs and ``u_ab {J_a, J_b}`` for each
    unordered off-diagonal pair.
    """

    entries: Mapping = field(default_factory=dict)
    single_u: float | None = None

    def __post_init__(self):
        norm = {}
        for pair, value in dict(self.entries).items():
            key = _pair_key(pair)
            if key in norm:
                raise ValueError(f"coupling {key} given twice")
            norm[key] = float(value)
        object.__setattr__(self, "entries", dict(sorted(norm.items(), key=lambda kv: kv[0])))
        if self.single_u is not None:
            object.__setattr__(self, "single_u", float(self.single_u))

    def get(self, pair) -> float:
        return self.entries.get(_pair_key(pair), 0.0)

    def with_value(self, pair, value: float) -> "CouplingSet":
        if pair == "onsite":
            return CouplingSet(self.entries, value)
        e = dict(self.entries)
        e[_pair_key(pair)] = value
        return CouplingSet(e, self.single_u)

    @property
    def is_empty(self) -> bool:
        return not self.entries and not self.single_u

    def has_azimuthal_symmetry(self) -> bool:
        """True when W commutes with J_z for every particle number."""
        xy = {("x", "z"), ("y", "z"), ("x", "y")}
        if any(self.entries.get(p, 0.0) != 0.0 for p in xy):
            return False
        return self.entries.get(("x", "x"), 0.0) == self.entries.get(("y", "y"), 0.0)


def op_angular(basis: FockBasis, axis: str) -> HermitianOperator:
    n = np.arange(basis.dim)
    N = basis.n_particles
    if axis == "z":
        return HermitianOperator(basis, np.diag((2 * n - N) / 2.0), real_tridiagonal=True)
    # <n+1| b_l^+ b_r |n> = sqrt((n+1)(N-n))
    hop = hopping_band(N)
    if axis == "x":
        m = np.diag(hop, -1) + np.diag(hop, 1)
        return HermitianOperator(basis, m.astype(complex), real_tridiagonal=True)
    if axis == "y":
        m = -1j * np.diag(hop, -1) + 1j * np.diag(hop, 1)
        return HermitianOperator(basis, m, real_tridiagonal=False)
    raise ValueError(f"unknown axis {axis!r}")


def hopping_band(n_particles: int) -> np.ndarray:
    """Off-diagonal ``<n+1|J_x|n>`` of the collective spin, length N."""
    n = np.arange(n_particles)
    return np.sqrt((n + 1) * (n_particles - n)) / 2.0


def apply_angular(amplitudes: np.ndarray, axis: str) -> np.ndarray:
    """``J_axis @ psi`` in O(N) without forming the matrix."""
    psi = np.asarray(amplitudes)
    N = psi.shape[-1] - 1
    if axis == "z":
        return (np.arange(N + 1) - N / 2.0) * psi
    hop = hopping_band(N)
    out = np.zeros_like(psi, dtype=complex if axis == "y" else np.result_type(psi, float))
    if axis == "x":
        out[..., 1:] += hop * psi[..., :-1]
        out[..., :-1] += hop * psi[..., 1:]
    elif axis == "y":
        out[..., 1:] += -1j * hop * psi[..., :-1]
        out[..., :-1] += 1j * hop * psi[..., 1:]
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return out


def angular_operators(basis: FockBasis) -> tuple[HermitianOperator, HermitianOperator, HermitianOperator]:
    return tuple(op_angular(basis, a) for a in AXES)


def onsite_pair_counts(basis: FockBasis) -> np.ndarray:
    """Diagonal of ``sum_j n_j (n_j - 1)``."""
    nl = basis.left_occupations
    nr = basis.right_occupations
    return (nl * (nl - 1) + nr * (nr - 1)).astype(float)


def op_onsite_interaction(basis: FockBasis, u: float) -> HermitianOperator:
    return HermitianOperator(basis, np.diag(u * onsite_pair_counts(basis)), real_tridiagonal=True)


def op_general_coupling(basis: FockBasis, couplings: CouplingSet) -> HermitianOperator:
    J = angular_operators(basis)
    m = np.zeros((basis.dim, basis.dim), dtype=complex)
    for (a, b), u in couplings.entries.items():
        if u == 0.0:
            continue
        ja, jb = J[AXIS_INDEX[a]].entries, J[AXIS_INDEX[b]].entries
        if a == b:
            m += u * (ja @ ja)
        else:
            m += u * (ja @ jb + jb @ ja)
    if couplings.single_u:
        m += np.diag(couplings.single_u * onsite_pair_counts(basis))
    # products of Hermitian matrices pick up roundoff asymmetry
    m = 0.5 * (m + m.conj().T)
    return HermitianOperator(basis, m)


def coupling_derivative_operator(basis: FockBasis, pair) -> HermitianOperator:
    """dW/du for one coupling of a :class:`CouplingSet` (``pair='onsite'`` for single_u)."""
    if pair == "onsite":
        return op_onsite_interaction(basis, 1.0)
    return op_general_coupling(basis, CouplingSet({pair: 1.0}))


def op_hamiltonian(basis: FockBasis, t: float, u: float) -> HermitianOperator:
    """Two-site Bose-Hubbard Hamiltonian ``-t (b_l^+ b_r + h.c.) + u sum_j n_j(n_j-1)``."""
    jx = op_angular(basis, "x").entries.real
    m = -2.0 * t * jx + np.diag(u * onsite_pair_counts(basis))
    return HermitianOperator(basis, m.astype(complex), real_tridiagonal=True)


def expectation(state: StateVector, op: HermitianOperator) -> float:
    if state.basis != op.basis:
        raise ValueError("state and operator live on different bases")
    psi = state.amplitudes
    val = np.vdot(psi, op.entries @ psi)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real), op.norm()):
        raise AssertionError(f"expectation of a Hermitian operator has imaginary part {val.imag!r}")
    return float(val.real)


def onsite_identity_residual(basis: FockBasis) -> float:
    """Max entrywise deviation between ``sum_j n_j(n_j-1)`` and ``2 J_z^2 + N^2/2 - N``."""
    N = basis.n_particles
    lhs = np.diag(onsite_pair_counts(basis))
    jz = op_angular(basis, "z").entries.real
    rhs = 2.0 * jz @ jz + (N * N / 2.0 - N) * np.eye(basis.dim)
    return float(np.abs(lhs - rhs).max())


def rotated_mode_coefficients(theta: float, phi: float) -> np.ndarray:
    """Rows give the rotated creation operators in terms of ``(b_l^+, b_r^+)``.

    Row 0 is the condensate mode pointing along ``(theta, phi)`` on the Bloch
    sphere, row 1 the orthogonal mode.  The phases are chosen so that a
    condensate in row 0 has ``<J> = N/2 (sin th cos ph, sin th sin ph, cos th)``.
    """
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array(
        [
            [c, np.exp(1j * phi) * s],
            [-np.exp(-1j * phi) * s, c],
        ]
    )


def rotated_fock_state(basis: FockBasis, n_excited: int, theta: float, phi: float) -> StateVector:
    """``(a_0^+)^{N-n} (a_1^+)^n |0> / sqrt((N-n)! n!)`` for the rotated modes above.

    Expanded term by term in log-magnitude form, so large ``N`` with small ``n``
    stays finite.  Cost is O(N * n).
    """
    N = basis.n_particles
    n = int(n_excited)
    if not 0 <= n <= N:
        raise ValueError(f"excitation number {n} outside 0..{N}")
    (c0, c1), (d0, d1) = rotated_mode_coefficients(theta, phi)
    lg = math.lgamma

    def log_abs(z):
        return math.log(abs(z)) if z != 0 else -math.inf

    lc0, lc1, ld0, ld1 = (log_abs(z) for z in (c0, c1, d0, d1))
    ph = [z / abs(z) if z != 0 else 1.0 for z in (c0, c1, d0, d1)]
    norm_log = -0.5 * (lg(N - n + 1) + lg(n + 1))
    amps = np.zeros(N + 1, dtype=complex)
    for k in range(N + 1):  # k bosons in the left mode
        total = 0j
        # j left bosons from the condensate factor, k - j from the excited factor
        for j in range(max(0, k - n), min(k, N - n) + 1):
            i = k - j
            e = (j, N - n - j, i, n - i)
            logs = (lc0, lc1, ld0, ld1)
            if any(p > 0 and l == -math.inf for p, l in zip(e, logs)):
                continue
            logmag = (
                lg(N - n + 1) - lg(j + 1) - lg(N - n - j + 1)
                + lg(n + 1) - lg(i + 1) - lg(n - i + 1)
                + sum(p * l for p, l in zip(e, logs) if p > 0)
                + 0.5 * (lg(k + 1) + lg(N - k + 1))
                + norm_log
            )
            phase = ph[0] ** e[0] * ph[1] ** e[1] * ph[2] ** e[2] * ph[3] ** e[3]
            total += phase * math.exp(logmag)
        amps[k] = total
    amps /= np.linalg.norm(amps)
    return StateVector(basis, amps)


def spin_coherent_state(basis: FockBasis, theta: float, phi: float) -> StateVector:
    """All N bosons in the mode pointing along ``(theta, phi)``."""
    return rotated_fock_state(basis, 0, theta, phi)
