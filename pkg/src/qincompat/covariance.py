"""Discrete Weyl symmetry machinery and covariant-device parametrizations.

Everything here runs over the cyclic outcome group Z_d: index sums and
differences are mod d.  Phase convention: <j|k> = exp(2 pi i j k / d); the
Fourier operator acts as F e_j = d^{-1/2} sum_i conj(<i|j>) e_i and the
second basis of the mutually unbiased pair is psi_k = F* e_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .devices import (
    ChannelChoi,
    Instrument,
    Povm,
    identity_channel,
    ket,
    max_mixed,
    omega,
    proj,
    require_distribution,
)
from .errors import ConstraintViolationError, DimensionError
from .linalg import simplex_project
from .robustness import Membership

# ---------------------------------------------------------------------------
# Weyl representation


def fourier_matrix(d: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(-2j * np.pi * i * j / d) / np.sqrt(d)


@dataclass(frozen=True)
class WeylRep:
    """Shift/phase unitaries U_q, V_p and the grid W[q, p] = U_q V_p."""

    d: int
    u: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    w: np.ndarray  # shape (d, d, d, d); w[q, p] is the d x d unitary U_q V_p


def weyl_rep(d: int) -> WeylRep:
    if d < 2:
        raise DimensionError("Weyl representation needs d >= 2")
    shift = np.zeros((d, d), dtype=np.complex128)
    for n in range(d):
        shift[(n + 1) % d, n] = 1.0
    us = [np.linalg.matrix_power(shift, q) for q in range(d)]
    phases = np.exp(2j * np.pi * np.arange(d) / d)
    vs = [np.diag(phases**p) for p in range(d)]
    w = np.empty((d, d, d, d), dtype=np.complex128)
    for q in range(d):
        for p in range(d):
            w[q, p] = us[q] @ vs[p]
    return WeylRep(d, tuple(us), tuple(vs), w)


def sharp_weyl_pair(d: int) -> tuple[Povm, Povm]:
    """The mutually unbiased pair (Q, P): Q_j = |phi_j><phi_j|, P_k = |psi_k><psi_k|."""
    f = fourier_matrix(d)
    q = Povm(d, tuple(proj(ket(j, d)) for j in range(d)))
    p = Povm(d, tuple(proj(f.conj().T @ ket(k, d)) for k in range(d)))
    return q, p


# ---------------------------------------------------------------------------
# covariantization


def covariantize_obs_pair(m: Povm, n: Povm, rep: WeylRep) -> tuple[Povm, Povm]:
    """Group-average a POVM pair into the Weyl-covariant pair (M^{W,1}, N^{W,2})."""
    d = rep.d
    if m.dim != d or n.dim != d or m.n_outcomes != d or n.n_outcomes != d:
        raise DimensionError("covariantization needs d-outcome POVMs on dimension d")
    m_stack = np.stack(m.effects)
    n_stack = np.stack(n.effects)
    out_m = np.zeros_like(m_stack)
    out_n = np.zeros_like(n_stack)
    for q in range(d):
        for p in range(d):
            wqp = rep.w[q, p]
            for j in range(d):
                out_m[j] += wqp.conj().T @ m_stack[(j + q) % d] @ wqp
                out_n[j] += wqp.conj().T @ n_stack[(j + p) % d] @ wqp
    out_m /= d * d
    out_n /= d * d
    return Povm(d, tuple(out_m)), Povm(d, tuple(out_n))


def covariantize_grid(grid: np.ndarray, rep: WeylRep) -> np.ndarray:
    """Average a joint-observable grid: G^W[j,k] = mean_qp W* G[j+q, k+p] W."""
    d = rep.d
    out = np.zeros_like(grid)
    for q in range(d):
        for p in range(d):
            wqp = rep.w[q, p]
            for j in range(d):
                for k in range(d):
                    out[j, k] += wqp.conj().T @ grid[(j + q) % d, (k + p) % d] @ wqp
    return out / (d * d)


@dataclass(frozen=True)
class CovariantObsPair:
    """Weyl-covariant pair encoded by convolution weights: (mu * Q, nu * P)."""

    d: int
    mu: np.ndarray
    nu: np.ndarray

    def to_povms(self) -> tuple[Povm, Povm]:
        q, p = sharp_weyl_pair(self.d)
        qs, ps = np.stack(q.effects), np.stack(p.effects)
        d = self.d
        m = tuple(sum(self.mu[(j - qq) % d] * qs[qq] for qq in range(d)) for j in range(d))
        n = tuple(sum(self.nu[(k - pp) % d] * ps[pp] for pp in range(d)) for k in range(d))
        return Povm(d, m), Povm(d, n)


def covariant_pair_jm_oracle(
    mu,
    nu,
    d: int,
    max_iters: int = 5000,
    feas_tol: float = 1e-9,
    infeas_threshold: float = 1e-6,
) -> Membership:
    """Joint measurability of (mu*Q, nu*P) via the state-existence criterion.

    The pair is jointly measurable iff some state rho has diagonal
    mu_{-m} in the first basis and nu_{-k} in the Fourier basis; decided
    by cyclic projections between the two diagonal constraints and the
    PSD trace-1 spectrahedron, independently of the generic grid solver.
    """
    mu = require_distribution(mu)
    nu = require_distribution(nu)
    if len(mu) != d or len(nu) != d:
        raise DimensionError("distributions must have length d")
    mu_t = np.array([mu[(-m) % d] for m in range(d)])
    nu_t = np.array([nu[(-k) % d] for k in range(d)])
    psi = fourier_matrix(d).conj().T  # columns are psi_k

    def set_diag(rho, target):
        out = rho.copy()
        out[np.diag_indices(d)] = target
        return out

    rho = np.diag(mu_t).astype(np.complex128)
    last_res = np.inf
    res = np.inf
    for it in range(1, max_iters + 1):
        rho = set_diag(rho, mu_t)
        rho = psi @ set_diag(psi.conj().T @ rho @ psi, nu_t) @ psi.conj().T
        w, v = linalg.hermitian_eig(linalg.hermitize(rho))
        rho = (v * simplex_project(w)) @ v.conj().T
        res = max(
            float(np.max(np.abs(np.diagonal(rho).real - mu_t))),
            float(np.max(np.abs(np.diagonal(psi.conj().T @ rho @ psi).real - nu_t))),
        )
        if res < feas_tol:
            return Membership.INSIDE
        if it % 25 == 0:
            if it >= 100 and res >= infeas_threshold and abs(last_res - res) <= 1e-9 * max(res, 1e-30):
                return Membership.OUTSIDE
            last_res = res
    return Membership.UNDECIDED if res < infeas_threshold else Membership.OUTSIDE


# ---------------------------------------------------------------------------
# Haar twirl of channels


def choi_entangled_overlap(e: ChannelChoi) -> float:
    """<omega| choi |omega> with the normalized maximally entangled vector."""
    d = e.din
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return float(np.real(v.conj() @ e.choi @ v))


def unitary_twirl_channel(e: ChannelChoi) -> ChannelChoi:
    """Haar average U* E(U . U*) U, computed exactly.

    The twirl of any channel is the depolarizing mixture lam*T + (1-lam)*id
    matching the entanglement-fidelity invariant <omega|choi|omega>.
    """
    if e.din != e.dout:
        raise DimensionError("twirl needs equal input and output dimensions")
    d = e.din
    s = choi_entangled_overlap(e)
    p = (d * s - 1.0) / (d * d - 1.0)
    lam = 1.0 - p
    choi = lam * np.kron(max_mixed(d), np.eye(d)) + p * omega(d)
    return ChannelChoi(d, d, choi)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def haar_twirl_channel_mc(e: ChannelChoi, samples: int, seed: int) -> ChannelChoi:
    """Monte Carlo twirl; test oracle for :func:`unitary_twirl_channel`."""
    if e.din != e.dout:
        raise DimensionError("twirl needs equal input and output dimensions")
    d = e.din
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(e.choi)
    for _ in range(samples):
        u = haar_unitary(d, rng)
        # choi of rho -> U* E(U rho U*) U; the output factor rotates by U*,
        # the input factor of the Choi by U^T
        k = np.kron(u.conj().T, u.T)
        acc += k @ e.choi @ k.conj().T
    return ChannelChoi(d, d, acc / samples)


# ---------------------------------------------------------------------------
# Eggeling-Werner commutant basis


_PERMS = {
    "e": (0, 1, 2),
    "(12)": (1, 0, 2),
    "(13)": (2, 1, 0),
    "(23)": (0, 2, 1),
    # cycle labels fixed so that S1 S2 = i S3 cyclically
    "(123)": (2, 0, 1),
    "(132)": (1, 2, 0),
}


def permutation_operator(d: int, pi: tuple[int, int, int]) -> np.ndarray:
    """V_pi on H^{(x)3}: e_{i1}(x)e_{i2}(x)e_{i3} -> e_{i_{pi^{-1}(1)}}(x)..."""
    inv = [0, 0, 0]
    for a in range(3):
        inv[pi[a]] = a
    n = d**3
    v = np.zeros((n, n), dtype=np.complex128)
    for idx in np.ndindex(d, d, d):
        col = (idx[0] * d + idx[1]) * d + idx[2]
        tgt = (idx[inv[0]], idx[inv[1]], idx[inv[2]])
        row = (tgt[0] * d + tgt[1]) * d + tgt[2]
        v[row, col] = 1.0
    return v


@dataclass(frozen=True)
class EwBasis:
    """The six-operator basis of the commutant of {U (x) Ubar (x) Ubar}."""

    d: int
    s_plus: np.ndarray
    s_minus: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    v_gamma: tuple[np.ndarray, ...]  # the six V_pi^Gamma spanning the algebra


def ew_basis(d: int) -> EwBasis:
    """Partial-transposed permutation operators combined per Eggeling-Werner."""
    if d < 2:
        raise DimensionError("need d >= 2")
    dims = [d, d, d]
    vg = {
        name: linalg.partial_transpose(permutation_operator(d, pi), dims, {1, 2})
        for name, pi in _PERMS.items()
    }
    ident = vg["e"]
    s_plus = 0.5 * (
        ident
        + vg["(23)"]
        - (vg["(12)"] + vg["(13)"] + vg["(123)"] + vg["(132)"]) / (d + 1)
    )
    s_minus = 0.5 * (
        ident
        - vg["(23)"]
        - (vg["(12)"] + vg["(13)"] - vg["(123)"] - vg["(132)"]) / (d - 1)
    )
    s0 = (d * (vg["(12)"] + vg["(13)"]) - (vg["(123)"] + vg["(132)"])) / (d * d - 1)
    s1 = (d * (vg["(123)"] + vg["(132)"]) - (vg["(12)"] + vg["(13)"])) / (d * d - 1)
    s2 = (vg["(12)"] - vg["(13)"]) / np.sqrt(d * d - 1)
    s3 = 1j * (vg["(123)"] - vg["(132)"]) / np.sqrt(d * d - 1)
    order = ("e", "(12)", "(13)", "(23)", "(123)", "(132)")
    return EwBasis(d, s_plus, s_minus, s0, s1, s2, s3, tuple(vg[k] for k in order))


def ew_span_project(m: np.ndarray, basis: EwBasis) -> np.ndarray:
    """HS-orthogonal projection onto span{V_pi^Gamma}; equals the exact
    U (x) Ubar (x) Ubar twirl of Eq.-style Haar averaging."""
    ops = basis.v_gamma
    gram = np.array([[np.vdot(a, b) for b in ops] for a in ops])
    rhs = np.array([np.vdot(a, m) for a in ops])
    coef, *_ = np.linalg.lstsq(gram, rhs, rcond=1e-12)
    out = np.zeros_like(m, dtype=np.complex128)
    for c, op in zip(coef, ops):
        out += c * op
    return out


def haar_mav_mc(m: np.ndarray, d: int, samples: int, seed: int) -> np.ndarray:
    """Monte Carlo U (x) Ubar (x) Ubar average; test oracle only."""
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(m, dtype=np.complex128)
    for _ in range(samples):
        u = haar_unitary(d, rng)
        big = linalg.kron_all([u, u.conj(), u.conj()])
        acc += big @ m @ big.conj().T
    return acc / samples


def ew_tetrahedron_point(t_plus: float, t_minus: float, t0: float, t1: float, d: int, basis: EwBasis | None = None) -> np.ndarray:
    """Choi operator (literature convention, input factor first) of a fully
    covariant symmetric joint channel: the tetrahedron M(t+, t-, t0, t1)."""
    if min(t_plus, t_minus, t0) < -1e-12 or abs(t_plus + t_minus + t0 - 1.0) > 1e-12:
        raise ConstraintViolationError("weights must be nonnegative and sum to 1")
    if abs(t1) > t0 + 1e-12:
        raise ConstraintViolationError("|t1| must not exceed t0")
    if d == 2 and t_minus > 1e-12:
        raise ConstraintViolationError("at d=2 the S_- sector vanishes; t_minus must be 0")
    basis = basis or ew_basis(d)
    m = (2.0 / ((d - 1) * (d + 2))) * t_plus * basis.s_plus + 0.5 * (
        t0 * basis.s0 + t1 * basis.s1
    )
    if d > 2:
        m = m + (2.0 / ((d + 1) * (d - 2))) * t_minus * basis.s_minus
    return m


def self_compatible_covariant_interval(d: int) -> tuple[float, float]:
    """Mixtures lam*T + (1-lam)*id self-compatible iff lam in this interval."""
    if d < 2:
        raise DimensionError("need d >= 2")
    return d / (2.0 * (d + 1)), d * d / (d * d - 1.0)


# ---------------------------------------------------------------------------
# covariant device constructors (Z_d x Z_d symmetry)


def covariant_obs_from_c(c, rep: WeylRep) -> Povm:
    """Effects M_j = U_j C U_j* from a V-commuting positive normalized C."""
    c = linalg.as_operator(c)
    d = rep.d
    if c.shape[0] != d:
        raise DimensionError("operator dimension does not match the representation")
    if linalg.min_eigenvalue(linalg.hermitize(c)) < -1e-10:
        raise ConstraintViolationError("C must be PSD")
    for vp in rep.v:
        if np.max(np.abs(vp @ c - c @ vp)) > 1e-10:
            raise ConstraintViolationError("C must commute with the phase unitaries")
    total = sum(u @ c @ u.conj().T for u in rep.u)
    if np.max(np.abs(total - np.eye(d))) > 1e-10:
        raise ConstraintViolationError("sum_j U_j C U_j* must be the identity")
    return Povm(d, tuple(u @ c @ u.conj().T for u in rep.u))


@dataclass(frozen=True)
class CovariantChannelKernel:
    """Kernel Phi with E*(W_qp) = Phi_qp W_qp characterizing a covariant channel."""

    d: int
    phi: np.ndarray

    def validate(self) -> "CovariantChannelKernel":
        phi = np.asarray(self.phi)
        if phi.shape != (self.d, self.d):
            raise DimensionError("kernel must be d x d")
        if abs(phi[0, 0] - 1.0) > 1e-10:
            raise ConstraintViolationError("Phi[0,0] must be 1 (trace preservation)")
        ok, _, mn = kernel_fourier_positivity(phi)
        if not ok:
            raise ConstraintViolationError(f"kernel Fourier transform has min {mn:.3e} < 0")
        return self


def kernel_fourier_positivity(phi) -> tuple[bool, np.ndarray, float]:
    """Compute Phi_hat[j,k] = d^-1 sum_qp conj(<q|k>) <j|p> Phi[q,p]; positivity check."""
    phi = np.asarray(phi, dtype=np.complex128)
    d = phi.shape[0]
    q = np.arange(d)
    minus = np.exp(-2j * np.pi * np.outer(q, q) / d)  # conj(<q|k>)
    plus = np.exp(2j * np.pi * np.outer(q, q) / d)  # <j|p>
    hat = np.einsum("qk,jp,qp->jk", minus, plus, phi) / d
    min_real = float(np.min(hat.real))
    max_imag = float(np.max(np.abs(hat.imag)))
    ok = min_real >= -1e-10 and max_imag <= 1e-10
    return ok, hat, min_real if max_imag <= 1e-10 else -max_imag


def channel_kernel(e: ChannelChoi, rep: WeylRep) -> np.ndarray:
    """Extract Phi[q,p] = tr(W_qp* E*(W_qp)) / d from a covariant channel."""
    from .devices import dual_apply

    d = rep.d
    phi = np.empty((d, d), dtype=np.complex128)
    for q in range(d):
        for p in range(d):
            wqp = rep.w[q, p]
            phi[q, p] = np.trace(wqp.conj().T @ dual_apply(e, wqp)) / d
    return phi


def covariant_channel_from_kernel(kernel: CovariantChannelKernel) -> ChannelChoi:
    """E(rho) = d^-1 sum_jk Phi_hat[j,k] W_jk rho W_jk*."""
    kernel.validate()
    d = kernel.d
    rep = weyl_rep(d)
    _, hat, _ = kernel_fourier_positivity(kernel.phi)
    om = omega(d)
    choi = np.zeros((d * d, d * d), dtype=np.complex128)
    for j in range(d):
        for k in range(d):
            weight = max(hat[j, k].real, 0.0) / d
            if weight == 0.0:
                continue
            wi = np.kron(rep.w[j, k], np.eye(d))
            choi += weight * (wi @ om @ wi.conj().T)
    return ChannelChoi(d, d, choi)


# ---------------------------------------------------------------------------
# covariant instruments via the alpha parametrization


@dataclass(frozen=True)
class AlphaInstrument:
    """Blocks alpha[n] (each PSD, total diagonal mass 1) parametrizing a
    phase-covariant operation and hence a Weyl-covariant instrument."""

    d: int
    alpha: np.ndarray  # shape (d, d, d); alpha[n, r, s]

    def validate(self) -> "AlphaInstrument":
        a = np.asarray(self.alpha)
        if a.shape != (self.d, self.d, self.d):
            raise DimensionError("alpha must have shape (d, d, d)")
        for n in range(self.d):
            if not linalg.is_hermitian(a[n], 1e-10):
                raise ConstraintViolationError(f"alpha block {n} is not Hermitian")
            if linalg.min_eigenvalue(linalg.hermitize(a[n])) < -1e-10:
                raise ConstraintViolationError(f"alpha block {n} is not PSD")
        total = sum(np.trace(a[n]).real for n in range(self.d))
        if abs(total - 1.0) > 1e-10:
            raise ConstraintViolationError(f"total diagonal mass {total} != 1")
        return self


def instrument_from_alpha(a: AlphaInstrument) -> Instrument:
    """Gamma_j(rho) = U_j D(U_j* rho U_j) U_j* with D built from the alpha blocks."""
    a.validate()
    d = a.d
    alpha = np.asarray(a.alpha, dtype=np.complex128)
    blocks = []
    for j in range(d):
        choi = np.zeros((d * d, d * d), dtype=np.complex128)
        c4 = choi.reshape(d, d, d, d)
        for n in range(d):
            for x in range(d):
                for y in range(d):
                    c4[x, (x + n) % d, y, (y + n) % d] = alpha[n, (x - j) % d, (y - j) % d]
        blocks.append(choi)
    return Instrument(d, d, tuple(blocks))


def alpha_from_instrument_marginals(ins: Instrument, rep: WeylRep) -> tuple[np.ndarray, np.ndarray]:
    """Recover (C, Phi) of a covariant instrument's marginals: C from the
    zeroth effect, Phi from the channel marginal kernel."""
    from .devices import instrument_marginals

    obs, chan = instrument_marginals(ins)
    c = obs.effects[0]
    phi = channel_kernel(chan, rep)
    return c, phi


def w1_w2(a: AlphaInstrument) -> tuple[float, float]:
    """The two admissible-weight functionals for decomposing around (A, id):
    w1 = sum_n alpha[n, -n, -n], w2 = d^-1 sum_rs alpha[0, r, s]."""
    alpha = np.asarray(a.alpha)
    d = a.d
    w1 = float(sum(alpha[n, (-n) % d, (-n) % d].real for n in range(d)))
    w2 = float(np.sum(alpha[0]).real / d)
    return w1, w2


def alpha_normal_form(a: AlphaInstrument) -> AlphaInstrument:
    """Concentrate mass into the n = 0 block without decreasing w1 or w2.

    First zero every entry of the n != 0 blocks except their (-n, -n)
    diagonal and renormalize; then move the surviving off-zero mass into
    alpha[0, 0, 0].
    """
    alpha = np.array(a.alpha, dtype=np.complex128)
    d = a.d
    pruned = np.zeros_like(alpha)
    pruned[0] = alpha[0]
    for n in range(1, d):
        r = (-n) % d
        pruned[n, r, r] = alpha[n, r, r]
    total = sum(np.trace(pruned[n]).real for n in range(d))
    if total <= 0:
        raise ConstraintViolationError("normal form removed all diagonal mass")
    pruned /= total
    moved = sum(pruned[n, (-n) % d, (-n) % d].real for n in range(1, d))
    out = np.zeros_like(pruned)
    out[0] = pruned[0]
    out[0, 0, 0] += moved
    return AlphaInstrument(d, out)


# ---------------------------------------------------------------------------
# Fourier-invariant reduction of the (A, id) optimization


def fourier_eigenprojections(d: int) -> list[np.ndarray]:
    """P_k = (1/4)(I + (-i)^k F + (-1)^k F^2 + i^k F^3) for k = 1..4."""
    f = fourier_matrix(d)
    f2 = f @ f
    f3 = f2 @ f
    eye = np.eye(d)
    out = []
    for k in range(1, 5):
        out.append(0.25 * (eye + (-1j) ** k * f + (-1.0) ** k * f2 + 1j**k * f3))
    return out


def fourier_symmetrize(a: np.ndarray) -> np.ndarray:
    """A -> (1/4) sum_{k=1..4} F^k A F^{*k}; fixed points commute with F."""
    a = linalg.as_operator(a)
    f = fourier_matrix(a.shape[0])
    out = np.zeros_like(a)
    fk = np.eye(a.shape[0], dtype=np.complex128)
    for _ in range(4):
        fk = fk @ f
        out += fk @ a @ fk.conj().T
    return out / 4.0


def fourier_invariant_optimum(d: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Optimal Fourier-invariant rank-1 operators A_+/- and the value w0(A_+).

    v_pm = sqrt(sqrt(d) / (2(sqrt(d) pm 1))) (e_0 pm f_0) with f_0 = F e_0;
    returns (1/2)(1 + 1/sqrt(d)) together with both candidates.
    """
    f = fourier_matrix(d)
    e0 = ket(0, d)
    f0 = f @ e0
    rd = np.sqrt(d)
    v_plus = np.sqrt(rd / (2.0 * (rd + 1.0))) * (e0 + f0)
    v_minus = np.sqrt(rd / (2.0 * (rd - 1.0))) * (e0 - f0)
    a_plus = proj(v_plus)
    a_minus = proj(v_minus)

    def w0(a):
        return min(float(np.real(e0 @ a @ e0)), float(np.real(f0.conj() @ a @ f0)))

    value = w0(a_plus)
    if not w0(a_minus) < value:
        raise ConstraintViolationError("A_- unexpectedly outperforms A_+")
    return value, a_plus, a_minus
