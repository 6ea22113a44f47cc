"""Constrained search for the universal functional F[gamma] = min_{psi -> gamma} <psi|W|psi>.

Three routes are provided:

* ``closed_form`` -- the analytic N = 2 on-site solution (real amplitudes).
* ``dual_legendre`` -- maximize ``E(h) - h.gamma`` over one-body fields ``h``;
  the ground state of ``W + h.J`` is then a certified global minimizer.  Only
  reaches v-representable targets.
* ``direct_penalty`` -- augmented-Lagrangian minimization over amplitude
  vectors with multistart and a final Newton polish of the KKT system.  Works
  everywhere, including non-v-representable targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .eigensolver import lowest_eigenpairs, lowest_eigenpairs_dense
from .fock import (
    AXES,
    FockBasis,
    HermitianOperator,
    StateVector,
    angular_operators,
    canonicalize_phase,
    hopping_band,
    onsite_pair_counts,
    spin_coherent_state,
)
from .rdm import OneBodyRDM, RepresentabilityError, _repr_tol, spin_vector

STRATEGIES = ("closed_form", "dual_legendre", "direct_penalty", "auto")


@dataclass(frozen=True)
class SearchOptions:
    constraint_tolerance: float = 1e-9
    max_iterations: int = 10000
    multistart_count: int = 8
    seed: int = 0
    penalty_growth: float = 10.0

    def __post_init__(self):
        if self.constraint_tolerance <= 0 or self.max_iterations <= 0:
            raise ValueError("tolerance and iteration budget must be positive")
        if self.multistart_count <= 0 or self.penalty_growth <= 1.0:
            raise ValueError("multistart_count must be positive and penalty_growth > 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class SearchResult:
    f_value: float
    minimizer: StateVector
    constraint_residual: float
    norm_residual: float
    iterations: int
    strategy: str
    converged: bool
    status: str = "ok"
    multipliers: np.ndarray | None = None
    residual_history: tuple = field(default=())

    @property
    def rdm(self) -> OneBodyRDM:
        return OneBodyRDM.from_vector(self.minimizer.basis.n_particles, spin_vector(self.minimizer.amplitudes))


# ---------------------------------------------------------------------------
# closed form, N = 2


def _n2_amplitudes(gamma_rho: float, theta: float, sign_u: int) -> tuple[float, float, float]:
    """(alpha_0, beta_u, alpha_2) for |2,0>, |1,1>, |0,2> at gamma = gamma_rho (sin th, 0, cos th)."""
    c = math.sqrt(max(0.0, 1.0 - gamma_rho * gamma_rho))
    plus = math.sqrt(1.0 + sign_u * c)
    minus = math.sqrt(1.0 - sign_u * c)  # equals gamma_rho / plus, finite at the origin
    a0 = 0.5 * (minus + math.cos(theta) * plus)
    a2 = 0.5 * (minus - math.cos(theta) * plus)
    beta = math.sin(theta) * plus / math.sqrt(2.0)
    return a0, beta, a2


def _plane_angle(gamma_x: float, gamma_z: float, theta: float | None, sign_u: int) -> float:
    if gamma_x == 0.0 and gamma_z == 0.0:
        if theta is not None:
            return theta
        # repulsive: the limit is direction dependent, the minimum sits on the equator
        return math.pi / 2 if sign_u > 0 else 0.0
    return math.atan2(gamma_x, gamma_z)


def closed_form_n2(gamma_x: float, gamma_z: float, sign_u: int, theta: float | None = None) -> SearchResult:
    """Analytic constrained minimum for N = 2 and ``W = u sum_j n_j(n_j-1)``.

    ``f_value`` is ``F / |u|``.  At the origin the repulsive functional depends on the
    direction of approach; pass ``theta`` (angle from +z towards +x) to select it.
    """
    if sign_u not in (1, -1):
        raise ValueError("sign_u must be +1 or -1")
    rho = math.hypot(gamma_x, gamma_z)
    if rho > 1.0 + 1e-12:
        raise RepresentabilityError(f"gamma_rho = {rho!r} exceeds N/2 = 1")
    rho = min(rho, 1.0)
    th = _plane_angle(gamma_x, gamma_z, theta, sign_u)
    c = math.sqrt(max(0.0, 1.0 - rho * rho))
    f_over_u = 2.0 - (1.0 + sign_u * c) * math.sin(th) ** 2
    a0, beta, a2 = _n2_amplitudes(rho, th, sign_u)
    basis = FockBasis(2)
    amps = canonicalize_phase(np.array([a2, beta, a0], dtype=complex))
    state = StateVector.from_amplitudes(basis, amps)
    got = spin_vector(state.amplitudes)
    resid = float(np.max(np.abs(got - np.array([gamma_x, 0.0, gamma_z]))))
    if rho == 0.0:
        resid = float(np.max(np.abs(got)))
    return SearchResult(
        f_value=sign_u * f_over_u,
        minimizer=state,
        constraint_residual=resid,
        norm_residual=abs(float(np.vdot(amps, amps).real) - 1.0),
        iterations=0,
        strategy="closed_form",
        converged=True,
    )


# ---------------------------------------------------------------------------
# shared helpers


def onsite_strength(w: HermitianOperator) -> float | None:
    """``u`` if ``w == u sum_j n_j(n_j-1)``, else None."""
    m = w.entries
    if np.any(m - np.diag(np.diag(m)) != 0) or np.any(m.imag != 0):
        return None
    counts = onsite_pair_counts(w.basis)
    diag = np.diag(m).real
    if not np.any(counts):
        return 0.0 if not np.any(diag) else None
    i = int(np.argmax(counts))
    u = diag[i] / counts[i]
    if np.allclose(diag, u * counts, rtol=1e-13, atol=1e-13 * max(1.0, abs(u))):
        return float(u)
    return None


def _azimuthal_rotation(amplitudes: np.ndarray, phi: float) -> np.ndarray:
    """Apply exp(-i phi J_z), which rotates <J> by +phi about z."""
    N = amplitudes.shape[-1] - 1
    m = np.arange(N + 1) - N / 2.0
    return amplitudes * np.exp(-1j * phi * m)


def _symmetric_under_jz(w: HermitianOperator) -> bool:
    jz = angular_operators(w.basis)[2]
    return w.commutes_with(jz)


@dataclass
class _Reduction:
    """Target after the optional azimuthal rotation into the phi = 0 half-plane."""

    target: np.ndarray  # (gx, gy, gz) actually solved for
    phi: float
    axes: tuple[str, ...]  # constrained spin components
    real: bool  # real amplitudes suffice


def _reduce(target: OneBodyRDM, w: HermitianOperator) -> _Reduction:
    g = target.vector
    if _symmetric_under_jz(w) and w.is_real:
        perp = math.hypot(g[0], g[1])
        phi = math.atan2(g[1], g[0]) if perp > 0 else 0.0
        return _Reduction(np.array([perp, 0.0, g[2]]), phi, ("x", "z"), True)
    if w.is_real and g[1] == 0.0:
        # real W, real target plane: real ground states; complex minima are checked by the direct route
        return _Reduction(g.copy(), 0.0, ("x", "z"), False)
    return _Reduction(g.copy(), 0.0, AXES, False)


def _check_target(target: OneBodyRDM, w: HermitianOperator, n_particles: int | None = None):
    if n_particles is not None and n_particles != target.n_particles:
        raise ValueError(f"N = {n_particles} does not match the target's N = {target.n_particles}")
    if target.n_particles != w.basis.n_particles:
        raise ValueError(
            f"target has N = {target.n_particles} but the operator acts on N = {w.basis.n_particles}"
        )


def _surface_result(target: OneBodyRDM, w: HermitianOperator, strategy: str) -> SearchResult | None:
    """On the sphere surface the fiber is a single spin-coherent state, so no search is needed."""
    if target.n_particles == 0 or target.depletion > _repr_tol(target.n_particles):
        return None
    state = spin_coherent_state(w.basis, target.theta, target.phi)
    a = state.amplitudes
    resid = float(np.max(np.abs(spin_vector(a) - target.vector)))
    f = float(np.vdot(a, w.entries @ a).real)
    return SearchResult(f, state, resid, abs(float(np.vdot(a, a).real) - 1.0), 0, strategy, True, "surface")


def _finish(
    basis: FockBasis,
    amplitudes: np.ndarray,
    red: _Reduction,
    target: OneBodyRDM,
    w: HermitianOperator,
) -> tuple[StateVector, float, float, float]:
    a = np.asarray(amplitudes, dtype=complex)
    norm_res = abs(float(np.vdot(a, a).real) - 1.0)
    a = a / np.linalg.norm(a)
    if red.phi != 0.0:
        a = _azimuthal_rotation(a, red.phi)
    a = canonicalize_phase(a)
    state = StateVector(basis, a)
    got = spin_vector(a)
    resid = float(np.max(np.abs(got - target.vector)))
    f = float(np.vdot(a, w.entries @ a).real)
    return state, f, resid, norm_res


# ---------------------------------------------------------------------------
# dual (Legendre) route


class _FieldProblem:
    """Ground states of ``W + sum_a h_a J_a`` for the constrained axes."""

    def __init__(self, w: HermitianOperator, axes: Sequence[str]):
        self.w = w
        self.axes = tuple(axes)
        self.N = w.basis.n_particles
        self.tridiagonal = w.real_tridiagonal and "y" not in self.axes
        if self.tridiagonal:
            self.wd, self.we = w.tridiagonal_bands()
            self.hop = hopping_band(self.N)
            self.jz = np.arange(self.N + 1) - self.N / 2.0
        else:
            self.jops = {a: op.entries for a, op in zip(AXES, angular_operators(w.basis))}
            self.real = w.is_real and "y" not in self.axes
        self.scale = max(1.0, w.norm())

    def solve(self, h: np.ndarray, k: int = 2):
        """Return (E0, gamma over all three axes, psi, gap)."""
        hd = dict(zip(self.axes, h))
        if self.tridiagonal:
            diag = self.wd + hd.get("z", 0.0) * self.jz
            off = self.we + hd.get("x", 0.0) * self.hop
            pairs = lowest_eigenpairs(diag, off, min(k, self.N + 1))
        else:
            m = self.w.entries.copy()
            for a, v in hd.items():
                m = m + v * self.jops[a]
            if self.real:
                m = m.real
            pairs = lowest_eigenpairs_dense(m, min(k, self.N + 1))
        psi = pairs.vectors[:, 0]
        gap = float(pairs.values[1] - pairs.values[0]) if pairs.values.size > 1 else math.inf
        return float(pairs.values[0]), spin_vector(psi), psi, gap


def _dual_solve(prob: _FieldProblem, target3: np.ndarray, tol: float, max_iter: int = 200):
    idx = [AXES.index(a) for a in prob.axes]
    gt = target3[idx]
    N = prob.N
    hscale = prob.scale / max(1.0, N)

    def G(h):
        e0, g, psi, gap = prob.solve(h)
        return e0 - float(np.dot(h, gt)), g[idx] - gt, psi, gap

    # radial bracket along -target to get a sensible starting magnitude
    rho = float(np.linalg.norm(gt))
    evals = 0
    if rho > 0:
        direction = -gt / rho
        lo, hi = -8.0, 10.0
        for _ in range(24):
            mid = 0.5 * (lo + hi)
            _, g, _, _ = prob.solve(direction * hscale * 10.0**mid, k=1)
            evals += 1
            if float(np.dot(-direction, g[idx])) < rho:
                lo = mid
            else:
                hi = mid
            if hi - lo < 0.05:
                break
        h = direction * hscale * 10.0 ** (0.5 * (lo + hi))
    else:
        h = np.full(len(idx), 1e-6 * hscale)
        h[0] = 1.3e-6 * hscale

    val, grad, psi, gap = G(h)
    history = [float(np.max(np.abs(grad)))]
    it = 0
    for it in range(1, max_iter + 1):
        if history[-1] <= tol:
            break
        step = 1e-5 * max(float(np.max(np.abs(h))), hscale)
        hess = np.empty((len(idx), len(idx)))
        for j in range(len(idx)):
            dh = np.zeros(len(idx))
            dh[j] = step
            gp = G(h + dh)[1]
            gm = G(h - dh)[1]
            hess[:, j] = (gp - gm) / (2 * step)
        hess = 0.5 * (hess + hess.T)
        ev, V = np.linalg.eigh(hess)
        # G is concave: force a negative-definite model
        floor = 1e-12 * max(1.0, float(np.max(np.abs(ev))))
        ev = np.minimum(ev, -floor)
        delta = -(V @ ((V.T @ grad) / ev))
        alpha = 1.0
        accepted = False
        for _ in range(40):
            cand = h + alpha * delta
            cval, cgrad, cpsi, cgap = G(cand)
            if cval >= val - 1e-15 * max(1.0, abs(val)) or np.max(np.abs(cgrad)) < history[-1]:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        h, val, grad, psi, gap = cand, cval, cgrad, cpsi, cgap
        history.append(float(np.max(np.abs(grad))))
        # Newton converges fast on v-representable targets; a plateau means the
        # supremum is approached only as |h| grows without bound
        if len(history) > 6 and history[-1] > 0.5 * history[-5]:
            break
    return h, psi, gap, history, it + evals


def numeric_search_dual(
    n_particles: int, target: OneBodyRDM, w: HermitianOperator, opts: SearchOptions = SearchOptions()
) -> SearchResult:
    """Constrained minimum via the ground state of ``W + h.J`` with ``h`` tuned to hit ``target``.

    A result with ``status == "not_v_representable"`` means no field was found
    whose ground state reproduces the target.
    """
    _check_target(target, w, n_particles)
    surface = _surface_result(target, w, "dual_legendre")
    if surface is not None:
        return surface
    red = _reduce(target, w)
    prob = _FieldProblem(w, red.axes)
    tol = min(opts.constraint_tolerance, 1e-12 * max(1.0, target.n_particles / 2.0))
    h, psi, gap, history, iters = _dual_solve(prob, red.target, tol)
    state, f, resid, norm_res = _finish(w.basis, psi, red, target, w)
    converged = resid <= opts.constraint_tolerance and norm_res <= 1e-10
    status = "ok" if converged else "not_v_representable"
    mult = np.zeros(3)
    for a, v in zip(red.axes, h):
        mult[AXES.index(a)] = v
    if red.phi != 0.0:
        c, s = math.cos(red.phi), math.sin(red.phi)
        mult = np.array([c * mult[0] - s * mult[1], s * mult[0] + c * mult[1], mult[2]])
    return SearchResult(
        f_value=f,
        minimizer=state,
        constraint_residual=resid,
        norm_residual=norm_res,
        iterations=iters,
        strategy="dual_legendre",
        converged=converged,
        status=status,
        multipliers=mult,
        residual_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# direct augmented-Lagrangian route (batched over targets x starts)


def _real_embedding(m: np.ndarray) -> np.ndarray:
    """Real symmetric form of a Hermitian matrix acting on (Re psi, Im psi)."""
    r, i = m.real, m.imag
    return np.block([[r, -i], [i, r]])


@dataclass
class _DirectProblem:
    W: np.ndarray  # (n, n) real symmetric
    A: np.ndarray  # (m, n, n) constraint forms, A[0] = identity
    real: bool
    dim: int  # Fock dimension

    def to_complex(self, a: np.ndarray) -> np.ndarray:
        if self.real:
            return a.astype(complex)
        return a[..., : self.dim] + 1j * a[..., self.dim :]


def _direct_problem(w: HermitianOperator, red: _Reduction) -> _DirectProblem:
    J = {a: op.entries for a, op in zip(AXES, angular_operators(w.basis))}
    d = w.basis.dim
    if red.real:
        mats = [np.eye(d)] + [J[a].real for a in red.axes]
        return _DirectProblem(w.entries.real.copy(), np.stack(mats), True, d)
    axes = AXES  # complex amplitudes: all three components are constrained
    mats = [np.eye(2 * d)] + [_real_embedding(J[a]) for a in axes]
    return _DirectProblem(_real_embedding(w.entries), np.stack(mats), False, d)


def _targets_for(red: _Reduction, prob: _DirectProblem) -> np.ndarray:
    idx = [AXES.index(a) for a in red.axes] if prob.real else [0, 1, 2]
    return np.concatenate([[1.0], red.target[idx]])


def _structured_starts(w: HermitianOperator, red: _Reduction, prob: _DirectProblem, count: int) -> np.ndarray:
    """Ground states of W - s n.J for a ladder of field strengths s along the target direction."""
    if count <= 0:
        return np.zeros((0, prob.W.shape[0]))
    g = red.target
    rho = float(np.linalg.norm(g))
    n_hat = g / rho if rho > 0 else np.array([1.0, 0.0, 0.0])
    J = [op.entries for op in angular_operators(w.basis)]
    scale = max(1.0, w.norm()) / max(1, w.basis.n_particles)
    out = []
    for s in np.geomspace(0.1, 10.0, count):
        m = w.entries - s * scale * sum(n_hat[k] * J[k] for k in range(3))
        vals, vecs = np.linalg.eigh(m)
        v = canonicalize_phase(vecs[:, 0])
        out.append(v.real if prob.real else np.concatenate([v.real, v.imag]))
    return np.array(out)


def _starts(w, red, prob, opts: SearchOptions, seed_key) -> np.ndarray:
    n_struct = min(3, opts.multistart_count // 2)
    structured = _structured_starts(w, red, prob, n_struct)
    rng = np.random.default_rng(seed_key)
    rand = rng.normal(size=(opts.multistart_count - n_struct, prob.W.shape[0]))
    starts = np.vstack([structured, rand])
    return starts / np.linalg.norm(starts, axis=1, keepdims=True)


def _auglag_batch(
    W: np.ndarray,
    A: np.ndarray,
    targets: np.ndarray,
    starts: np.ndarray,
    opts: SearchOptions,
    n_particles: int,
):
    """Augmented-Lagrangian minimization of a.W.a subject to a.A_k.a = t_k for a batch.

    ``W`` and ``A`` may carry a leading batch axis; ``targets`` is (B, m).
    Returns amplitudes (B, n), objective (B,), residual (B,), iterations (B,)
    and per-element histories of accepted outer residuals.
    """
    B, n = starts.shape
    m = A.shape[-3]
    Wb = np.broadcast_to(W, (B, n, n))
    Ab = np.broadcast_to(A, (B, m, n, n))
    wscale = max(1.0, float(np.max(np.abs(W).sum(axis=-1))))
    mu0 = wscale / max(1.0, n_particles * n_particles / 4.0)
    switch_tol = max(1e-7, 10 * opts.constraint_tolerance)
    gtol = 1e-11 * wscale

    def cons(a, Ab, t):
        return np.einsum("bi,bkij,bj->bk", a, Ab, a) - t

    def lag(a, Wb, Ab, t, lam, mu):
        c = cons(a, Ab, t)
        return np.einsum("bi,bij,bj->b", a, Wb, a) + (lam * c).sum(1) + 0.5 * mu * (c * c).sum(1)

    a = starts.copy()
    lam = np.zeros((B, m))
    mu = np.full(B, mu0)
    r_prev = np.abs(cons(a, Ab, targets)).max(1)
    history = [[float(r)] for r in r_prev]
    iters = np.zeros(B, dtype=int)
    done = r_prev <= switch_tol
    max_outer = 60
    for _outer in range(max_outer):
        act = np.flatnonzero(~done & (iters < opts.max_iterations))
        if act.size == 0:
            break
        aa, Wa, Aa_, ta = a[act], Wb[act], Ab[act], targets[act]
        la, ma = lam[act], mu[act]
        tau = np.full(act.size, 1e-6 * wscale)
        live = np.ones(act.size, dtype=bool)
        for _inner in range(200):
            li = np.flatnonzero(live)
            if li.size == 0:
                break
            x, Wl, Al, tl = aa[li], Wa[li], Aa_[li], ta[li]
            c = cons(x, Al, tl)
            Ax = np.einsum("bkij,bj->bki", Al, x)
            wgt = la[li] + ma[li, None] * c
            g = 2 * np.einsum("bij,bj->bi", Wl, x) + 2 * np.einsum("bk,bki->bi", wgt, Ax)
            gn = np.abs(g).max(1)
            conv = gn <= gtol
            H = 2 * Wl + 2 * np.einsum("bk,bkij->bij", wgt, Al) + 4 * ma[li, None, None] * np.einsum(
                "bki,bkj->bij", Ax, Ax
            )
            ev, V = np.linalg.eigh(H)
            tau_eff = np.maximum(tau[li], 1e-13 * np.abs(ev).max(1))
            shift = np.maximum(tau_eff, -ev[:, 0] + tau_eff)
            p = -np.einsum("bij,bj->bi", V, np.einsum("bji,bj->bi", V, g) / (ev + shift[:, None]))
            L0 = lag(x, Wl, Al, tl, la[li], ma[li])
            xn = x + p
            L1 = lag(xn, Wl, Al, tl, la[li], ma[li])
            ok = (L1 <= L0) & ~conv
            aa[li[ok]] = xn[ok]
            tau[li] = np.where(ok, np.maximum(tau[li] * 0.3, 1e-14 * wscale), tau[li] * 10.0)
            iters[act[li]] += 1
            stuck = tau[li] > 1e12 * wscale
            live[li[conv | stuck]] = False
        c = cons(aa, Aa_, ta)
        r = np.abs(c).max(1)
        rp = r_prev[act]
        accept = r <= rp
        # accepted: first-order multiplier update, grow penalty on slow progress
        grow = ~accept | (r > 0.25 * rp)
        la = np.where(accept[:, None], la + ma[:, None] * c, la)
        a[act] = np.where(accept[:, None], aa, a[act])
        mu[act] = np.where(grow, ma * opts.penalty_growth, ma)
        lam[act] = la
        r_prev[act] = np.where(accept, r, rp)
        for j, b in enumerate(act):
            if accept[j]:
                history[b].append(float(r[j]))
        done[act] = r_prev[act] <= switch_tol

    # Newton on the KKT system: 2 (W + sum lam_k A_k) a = 0, c(a) = 0
    # (the augmented-Lagrangian multipliers carry the sign convention L = f + lam.c)
    def kkt_residual(a, lam):
        M = Wb + np.einsum("bk,bkij->bij", lam, Ab)
        r1 = 2 * np.einsum("bij,bj->bi", M, a)
        r2 = cons(a, Ab, targets)
        return np.concatenate([r1 / wscale, r2], 1), M

    res, M = kkt_residual(a, lam)
    best = np.abs(res).max(1)
    for _ in range(12):
        Ax = np.einsum("bkij,bj->bki", Ab, a)
        K = np.zeros((B, n + m, n + m))
        K[:, :n, :n] = 2 * M
        K[:, :n, n:] = 2 * Ax.transpose(0, 2, 1)
        K[:, n:, :n] = 2 * Ax
        rhs = -np.concatenate([res[:, :n] * wscale, res[:, n:]], 1)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(K, rcond=1e-13), rhs)
        an, ln = a + step[:, :n], lam + step[:, n:]
        resn, Mn = kkt_residual(an, ln)
        bn = np.abs(resn).max(1)
        better = bn < best
        if not np.any(better):
            break
        a = np.where(better[:, None], an, a)
        lam = np.where(better[:, None], ln, lam)
        best = np.where(better, bn, best)
        res, M = kkt_residual(a, lam)
    f = np.einsum("bi,bij,bj->b", a, Wb, a)
    resid = np.abs(cons(a, Ab, targets)).max(1)
    return a, f, resid, iters, history


def numeric_search_direct_many(
    targets: Sequence[OneBodyRDM],
    w: HermitianOperator,
    opts: SearchOptions = SearchOptions(),
    seed_keys: Sequence | None = None,
) -> list[SearchResult]:
    """Direct constrained search for several targets sharing one interaction, solved as one batch."""
    if not targets:
        return []
    for t in targets:
        _check_target(t, w)
    if seed_keys is None:
        seed_keys = [(opts.seed, i) for i in range(len(targets))]
    surfaces = [_surface_result(t, w, "direct_penalty") for t in targets]
    if any(r is not None for r in surfaces):
        inner = [i for i, r in enumerate(surfaces) if r is None]
        solved = numeric_search_direct_many([targets[i] for i in inner], w, opts, [seed_keys[i] for i in inner])
        for i, r in zip(inner, solved):
            surfaces[i] = r
        return surfaces
    reds = [_reduce(t, w) for t in targets]
    # all targets share W, so they share the reduction type
    if len({(r.axes, r.real) for r in reds}) != 1:
        return [r for t, k in zip(targets, seed_keys) for r in numeric_search_direct_many([t], w, opts, [k])]
    prob = _direct_problem(w, reds[0])
    S = opts.multistart_count
    starts = np.vstack([_starts(w, red, prob, opts, key) for red, key in zip(reds, seed_keys)])
    tvec = np.repeat(np.array([_targets_for(red, prob) for red in reds]), S, axis=0)
    a, f, resid, iters, hist = _auglag_batch(prob.W, prob.A, tvec, starts, opts, w.basis.n_particles)
    out = []
    for i, (target, red) in enumerate(zip(targets, reds)):
        sl = slice(i * S, (i + 1) * S)
        ok = resid[sl] <= opts.constraint_tolerance
        fi = np.where(ok, f[sl], np.inf)
        j = int(np.argmin(fi)) if np.any(ok) else int(np.argmin(resid[sl]))
        amps = prob.to_complex(a[sl][j])
        state, fv, res_c, norm_res = _finish(w.basis, amps, red, target, w)
        converged = bool(res_c <= opts.constraint_tolerance and norm_res <= 1e-10)
        out.append(
            SearchResult(
                f_value=fv,
                minimizer=state,
                constraint_residual=res_c,
                norm_residual=norm_res,
                iterations=int(iters[sl].sum()),
                strategy="direct_penalty",
                converged=converged,
                status="ok" if converged else "not_converged",
                residual_history=tuple(hist[i * S + j]),
            )
        )
    return out


def numeric_search_direct(
    n_particles: int, target: OneBodyRDM, w: HermitianOperator, opts: SearchOptions = SearchOptions()
) -> SearchResult:
    """Constrained minimum by augmented-Lagrangian multistart over amplitude vectors."""
    _check_target(target, w, n_particles)
    return numeric_search_direct_many([target], w, opts, [(opts.seed,)])[0]


# ---------------------------------------------------------------------------
# dispatch


def constrained_search(
    target: OneBodyRDM,
    w: HermitianOperator,
    opts: SearchOptions = SearchOptions(),
    strategy: str = "auto",
) -> SearchResult:
    """F[gamma] and its minimizer with the requested strategy.

    ``auto`` tries the dual route first (its result is a certified global
    minimum) and falls back to the direct search for targets it cannot reach.
    """
    _check_target(target, w)
    if strategy == "closed_form":
        u = onsite_strength(w)
        if u is None or target.n_particles != 2 or u == 0:
            raise ValueError("closed form needs N = 2 and a nonzero on-site interaction")
        red = _reduce(target, w)
        res = closed_form_n2(red.target[0], red.target[2], 1 if u > 0 else -1)
        state, f, resid, norm_res = _finish(w.basis, res.minimizer.amplitudes, red, target, w)
        return SearchResult(f, state, resid, norm_res, 0, "closed_form", True)
    N = target.n_particles
    if strategy == "dual_legendre":
        return numeric_search_dual(N, target, w, opts)
    if strategy == "direct_penalty":
        return numeric_search_direct(N, target, w, opts)
    if strategy != "auto":
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    dual = numeric_search_dual(N, target, w, opts)
    if dual.converged:
        return dual
    return numeric_search_direct(N, target, w, opts)


# ---------------------------------------------------------------------------
# surfaces over the (gamma_x, gamma_z) disk


def disk_grid(n_particles: int, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid over the bounding square of the disk, masked to ``gamma_rho <= N/2``."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    half = n_particles / 2.0
    axis = np.linspace(-half, half, resolution)
    gz, gx = np.meshgrid(axis, axis, indexing="ij")
    mask = gx**2 + gz**2 <= half * half + 1e-12
    return gx[mask], gz[mask]


@dataclass(frozen=True, eq=False)
class SurfaceTable:
    n_particles: int
    sign_u: float
    gamma_x: np.ndarray
    gamma_z: np.ndarray
    f_value: np.ndarray
    converged: np.ndarray
    results: tuple

    def __len__(self):
        return self.gamma_x.size


def functional_surface(
    n_particles: int,
    sign_u: int,
    grid_resolution: int,
    strategy: str = "auto",
    opts: SearchOptions = SearchOptions(),
    workers: int | None = None,
) -> SurfaceTable:
    """Evaluate F on the disk grid for ``W = sign_u * sum_j n_j(n_j-1)``.

    ``sign_u`` is normally +1 or -1; any nonzero strength is accepted and
    simply rescales F.  Every grid point draws its random starts from
    ``(opts.seed, index)``, so the table is independent of batching and
    worker count.
    """
    if not (math.isfinite(sign_u) and sign_u != 0):
        raise ValueError("the interaction strength must be finite and nonzero")
    from .fock import op_onsite_interaction

    gx, gz = disk_grid(n_particles, grid_resolution)
    w = op_onsite_interaction(FockBasis(n_particles), float(sign_u))
    targets = []
    for x, z in zip(gx, gz):
        scale = min(1.0, (n_particles / 2.0) / max(math.hypot(x, z), 1e-300))
        targets.append(OneBodyRDM(n_particles, x * scale, 0.0, z * scale))
    keys = [(opts.seed, i) for i in range(len(targets))]
    if strategy == "direct_penalty":
        results = numeric_search_direct_many(targets, w, opts, keys)
    elif strategy == "auto":
        # certified dual results where available, the rest in one batched direct search
        dual = _map_ordered(lambda i: numeric_search_dual(n_particles, targets[i], w, opts), range(len(targets)), workers)
        todo = [i for i, r in enumerate(dual) if not r.converged]
        direct = numeric_search_direct_many([targets[i] for i in todo], w, opts, [keys[i] for i in todo])
        results = list(dual)
        for i, r in zip(todo, direct):
            results[i] = r
    elif strategy == "closed_form":
        results = [constrained_search(t, w, opts, "closed_form") for t in targets]
    else:
        def one(i):
            t = targets[i]
            o = SearchOptions(opts.constraint_tolerance, opts.max_iterations, opts.multistart_count,
                              _seed_from_key(keys[i]), opts.penalty_growth)
            return constrained_search(t, w, o, strategy)

        results = _map_ordered(one, range(len(targets)), workers)
    f = np.array([r.f_value for r in results])
    conv = np.array([r.converged for r in results])
    return SurfaceTable(n_particles, sign_u, gx, gz, f, conv, tuple(results))


def _seed_from_key(key) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, dtype=np.uint64)[0])


def _map_ordered(fn, items, workers: int | None):
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
