"""Convex feasibility deciders for the three compatibility notions.

Each decider searches for a joint device (joint observable grid, joint
channel Choi, joint instrument) via Dykstra alternating projections
between the PSD cone (blockwise eigenvalue clipping) and the affine
subspace of marginal constraints, for which exact closed-form projections
are derived below.

Infeasibility is heuristic: when the Dykstra gap (distance between the
cone and affine iterates) stalls above ``infeas_threshold`` the pair is
reported incompatible.  Near-boundary inputs may legitimately come back
``UNDECIDED``; callers doing bisection should count that as infeasible to
keep estimates conservative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import backend, linalg
from .devices import (
    ChannelChoi,
    Instrument,
    JointObservable,
    Povm,
    require_distribution,
    require_state,
    tensor_attach,
)
from .errors import DimensionError

# Gap-stall detection: declare infeasibility when the Dykstra gap stops
# improving (relative change below _STALL_RTOL across a _CHECK_EVERY window)
# while sitting above the configured threshold.  A feasible-but-slow run has
# gap ~ C/k, whose relative improvement per window is ~ _CHECK_EVERY/k and
# stays above _STALL_RTOL for every reachable iteration count, so slow
# feasible problems degrade to UNDECIDED rather than to a false INFEASIBLE.
_CHECK_EVERY = 50
_MIN_ITERS = 300
_STALL_RTOL = 1e-3


class Verdict(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-7
    infeas_threshold: float = 1e-4
    max_iters: int = 20000

    def __post_init__(self):
        if not 0 < self.feas_tol < self.infeas_threshold:
            raise ValueError("need 0 < feas_tol < infeas_threshold")


@dataclass(frozen=True)
class FeasibilityReport:
    verdict: Verdict
    witness: object | None
    residual: float
    iterations: int
    gap: float


def _dykstra(x0, proj_affine, proj_cone, residual, cfg: SolverConfig):
    """Two-set Dykstra loop; the correction is carried for the cone only."""
    x = proj_affine(x0)
    p = np.zeros_like(x)
    last_gap = np.inf
    res = np.inf
    gap = np.inf
    for it in range(1, cfg.max_iters + 1):
        y = proj_affine(x)
        z = proj_cone(y + p)
        p = y + p - z
        x = z
        res = residual(z)
        if res < cfg.feas_tol:
            return Verdict.FEASIBLE, z, res, it, float(np.linalg.norm(y - z))
        if it % _CHECK_EVERY == 0:
            gap = float(np.linalg.norm(y - z))
            if (
                it >= _MIN_ITERS
                and gap >= cfg.infeas_threshold
                and abs(last_gap - gap) <= _STALL_RTOL * gap
            ):
                return Verdict.INFEASIBLE, z, res, it, gap
            last_gap = gap
    return Verdict.UNDECIDED, x, res, cfg.max_iters, gap


# ---------------------------------------------------------------------------
# joint measurability of two POVMs


def _jm_affine(a_stack, b_stack):
    n, np_ = a_stack.shape[0], b_stack.shape[0]

    def project(g):
        r = a_stack - g.sum(axis=1)
        c = b_stack - g.sum(axis=0)
        total = r.sum(axis=0)
        return g + r[:, None] / np_ + c[None, :] / n - total[None, None] / (n * np_)

    return project


def _jm_residual(a_stack, b_stack):
    def residual(g):
        dr = g.sum(axis=1) - a_stack
        dc = g.sum(axis=0) - b_stack
        return max(
            float(np.max(np.linalg.norm(dr, axis=(1, 2)))),
            float(np.max(np.linalg.norm(dc, axis=(1, 2)))),
        )

    return residual


def jm_feasible(a: Povm, b: Povm, cfg: SolverConfig | None = None, initial=None) -> FeasibilityReport:
    """Decide joint measurability; on success the witness is a JointObservable."""
    cfg = cfg or SolverConfig()
    if a.dim != b.dim:
        raise DimensionError(f"observable dims differ: {a.dim} != {b.dim}")
    d, n, np_ = a.dim, a.n_outcomes, b.n_outcomes
    a_stack = np.stack(a.effects)
    b_stack = np.stack(b.effects)
    if initial is None:
        g0 = 0.5 * (
            np.einsum("jab,kbc->jkac", a_stack, b_stack)
            + np.einsum("kab,jbc->jkac", b_stack, a_stack)
        )
    elif isinstance(initial, JointObservable):
        g0 = np.array(initial.grid, dtype=np.complex128)
    else:
        g0 = np.array(initial, dtype=np.complex128)
    if g0.shape != (n, np_, d, d):
        raise DimensionError(f"initial grid shape {g0.shape} != {(n, np_, d, d)}")

    def cone(g):
        return backend.psd_clip_batch(g.reshape(n * np_, d, d)).reshape(n, np_, d, d)

    verdict, g, res, iters, gap = _dykstra(
        g0, _jm_affine(a_stack, b_stack), cone, _jm_residual(a_stack, b_stack), cfg
    )
    witness = JointObservable(d, g) if verdict == Verdict.FEASIBLE else None
    return FeasibilityReport(verdict, witness, res, iters, gap)


def joint_observable_residual(g: JointObservable, a: Povm, b: Povm) -> float:
    """Independent witness check: marginal deviation plus PSD defect."""
    grid = np.asarray(g.grid)
    marg = _jm_residual(np.stack(a.effects), np.stack(b.effects))(grid)
    neg = 0.0
    for block in grid.reshape(-1, a.dim, a.dim):
        neg = max(neg, -min(0.0, linalg.min_eigenvalue(linalg.hermitize(block), tol=np.inf)))
    return max(marg, neg)


def naimark_self_witness(m: Povm) -> JointObservable:
    """The diagonal grid G[j,k] = delta_jk M_j joining any observable with itself."""
    n, d = m.n_outcomes, m.dim
    grid = np.zeros((n, n, d, d), dtype=np.complex128)
    for j in range(n):
        grid[j, j] = m.effects[j]
    return JointObservable(d, grid)


# ---------------------------------------------------------------------------
# channel-channel compatibility


def _chan_affine(e4, f4, k1, k2, din):
    i1 = np.eye(k1)
    i2 = np.eye(k2)

    def project(m6):
        r1 = e4 - np.einsum("acibcj->aibj", m6)
        r2 = f4 - np.einsum("aciadj->cidj", m6)
        z = np.einsum("aiaj->ij", r1)
        x4 = r1 - np.einsum("ab,ij->aibj", i1, z) / k1
        y4 = r2 - np.einsum("cd,ij->cidj", i2, z) / k2
        delta = (
            np.einsum("aibj,cd->acibdj", x4, i2) / k2
            + np.einsum("cidj,ab->acibdj", y4, i1) / k1
            + np.einsum("ij,ab,cd->acibdj", z, i1, i2) / (k1 * k2)
        )
        return m6 + delta

    return project


def _chan_residual(e4, f4):
    def residual(m6):
        d1 = np.einsum("acibcj->aibj", m6) - e4
        d2 = np.einsum("aciadj->cidj", m6) - f4
        return max(float(np.linalg.norm(d1)), float(np.linalg.norm(d2)))

    return residual


def channel_compat_feasible(
    e: ChannelChoi, f: ChannelChoi, cfg: SolverConfig | None = None, initial=None
) -> FeasibilityReport:
    """Decide channel compatibility; the witness is the joint channel's Choi."""
    cfg = cfg or SolverConfig()
    if e.din != f.din:
        raise DimensionError(f"input dims differ: {e.din} != {f.din}")
    k1, k2, din = e.dout, f.dout, e.din
    dim = k1 * k2 * din
    e4 = e.choi.reshape(k1, din, k1, din)
    f4 = f.choi.reshape(k2, din, k2, din)
    if initial is None:
        m0 = np.eye(dim, dtype=np.complex128) / (k1 * k2)
    elif isinstance(initial, ChannelChoi):
        m0 = np.array(initial.choi, dtype=np.complex128)
    else:
        m0 = np.array(initial, dtype=np.complex128)
    shape6 = (k1, k2, din, k1, k2, din)

    proj_a = _chan_affine(e4, f4, k1, k2, din)
    resid = _chan_residual(e4, f4)

    def affine(m):
        return proj_a(m.reshape(shape6)).reshape(dim, dim)

    def cone(m):
        return backend.psd_clip(m)

    verdict, m, res, iters, gap = _dykstra(
        m0, affine, cone, lambda m: resid(m.reshape(shape6)), cfg
    )
    witness = ChannelChoi(din, k1 * k2, m) if verdict == Verdict.FEASIBLE else None
    return FeasibilityReport(verdict, witness, res, iters, gap)


def joint_channel_residual(joint: ChannelChoi, e: ChannelChoi, f: ChannelChoi) -> float:
    k1, k2, din = e.dout, f.dout, e.din
    m6 = joint.choi.reshape(k1, k2, din, k1, k2, din)
    marg = _chan_residual(
        e.choi.reshape(k1, din, k1, din), f.choi.reshape(k2, din, k2, din)
    )(m6)
    neg = -min(0.0, linalg.min_eigenvalue(linalg.hermitize(joint.choi), tol=np.inf))
    return max(marg, neg)


# ---------------------------------------------------------------------------
# observable-channel compatibility


def _obschan_affine(mt_stack, c4, dout, n):
    i_out = np.eye(dout)

    def project(blocks4):
        r = mt_stack - np.einsum("naiaj->nij", blocks4)
        s4 = c4 - blocks4.sum(axis=0)
        rsum = r.sum(axis=0)
        common = (s4 - np.einsum("ab,ij->aibj", i_out, rsum) / dout) / n
        delta = np.einsum("ab,nij->naibj", i_out, r) / dout + common[None]
        return blocks4 + delta

    return project


def _obschan_residual(mt_stack, c4):
    def residual(blocks4):
        dr = np.einsum("naiaj->nij", blocks4) - mt_stack
        ds = blocks4.sum(axis=0) - c4
        return max(float(np.max(np.linalg.norm(dr, axis=(1, 2)))), float(np.linalg.norm(ds)))

    return residual


def obs_channel_feasible(
    m: Povm, e: ChannelChoi, cfg: SolverConfig | None = None, initial=None
) -> FeasibilityReport:
    """Decide observable-channel compatibility; the witness is an Instrument."""
    cfg = cfg or SolverConfig()
    if m.dim != e.din:
        raise DimensionError(f"observable dim {m.dim} != channel input {e.din}")
    n, din, dout = m.n_outcomes, e.din, e.dout
    dd = dout * din
    mt_stack = np.stack([mj.T for mj in m.effects])
    c4 = e.choi.reshape(dout, din, dout, din)
    if initial is None:
        # product guess: split the channel according to the outcome weights
        weights = np.array([max(np.trace(mj).real, 1e-12) / din for mj in m.effects])
        weights /= weights.sum()
        blocks0 = np.stack([w * e.choi for w in weights])
    elif isinstance(initial, Instrument):
        blocks0 = np.stack([np.asarray(b, dtype=np.complex128) for b in initial.blocks])
    else:
        blocks0 = np.array(initial, dtype=np.complex128)
    shape5 = (n, dout, din, dout, din)

    proj_a = _obschan_affine(mt_stack, c4, dout, n)
    resid = _obschan_residual(mt_stack, c4)

    def affine(b):
        return proj_a(b.reshape(shape5)).reshape(n, dd, dd)

    def cone(b):
        return backend.psd_clip_batch(b)

    verdict, b, res, iters, gap = _dykstra(
        blocks0, affine, cone, lambda b: resid(b.reshape(shape5)), cfg
    )
    witness = Instrument(din, dout, tuple(b)) if verdict == Verdict.FEASIBLE else None
    return FeasibilityReport(verdict, witness, res, iters, gap)


def joint_instrument_residual(ins: Instrument, m: Povm, e: ChannelChoi) -> float:
    blocks4 = np.stack(ins.blocks).reshape(len(ins.blocks), e.dout, e.din, e.dout, e.din)
    marg = _obschan_residual(
        np.stack([mj.T for mj in m.effects]), e.choi.reshape(e.dout, e.din, e.dout, e.din)
    )(blocks4)
    neg = 0.0
    for b in ins.blocks:
        neg = max(neg, -min(0.0, linalg.min_eigenvalue(linalg.hermitize(b), tol=np.inf)))
    return max(marg, neg)


# ---------------------------------------------------------------------------
# constructive witnesses


def remark_half_witness(m: Povm, e: ChannelChoi, p, sigma, t: float) -> Instrument:
    """The instrument G_X(rho) = t tr[rho M(X)] sigma + (1-t) p(X) E(rho).

    Its marginals are (t M + (1-t) T_p, t T_sigma + (1-t) E); at t = 1/2 this
    certifies the global 1/2 floor for observable-channel pairs.
    """
    if m.dim != e.din:
        raise DimensionError(f"observable dim {m.dim} != channel input {e.din}")
    p = require_distribution(p)
    if len(p) != m.n_outcomes:
        raise DimensionError("distribution length != outcome count")
    sigma = require_state(sigma)
    if sigma.shape[0] != e.dout:
        raise DimensionError("state dim != channel output dim")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DimensionError(f"weight {t} outside [0, 1]")
    blocks = tuple(
        t * np.kron(sigma, mj.T) + (1 - t) * pj * e.choi
        for mj, pj in zip(m.effects, p)
    )
    return Instrument(e.din, e.dout, blocks)


def half_mixture_jm_witness(a: Povm, b: Povm, s, t) -> JointObservable:
    """Joint observable for (A/2 + T_s/2, B/2 + T_t/2): G[j,k] = (t_k A_j + s_j B_k)/2."""
    if a.dim != b.dim:
        raise DimensionError("observable dims differ")
    s = require_distribution(s)
    t = require_distribution(t)
    if len(s) != a.n_outcomes or len(t) != b.n_outcomes:
        raise DimensionError("distribution lengths do not match outcome counts")
    grid = 0.5 * (
        np.einsum("k,jab->jkab", t, np.stack(a.effects))
        + np.einsum("j,kab->jkab", s, np.stack(b.effects))
    )
    return JointObservable(a.dim, grid)


def half_mixture_channel_witness(e: ChannelChoi, f: ChannelChoi, sigma1, sigma2) -> ChannelChoi:
    """Joint channel for (E/2 + T_sigma1/2, F/2 + T_sigma2/2)."""
    if e.din != f.din:
        raise DimensionError("input dims differ")
    left = tensor_attach(e, sigma2, side="right")
    right = tensor_attach(f, sigma1, side="left")
    return ChannelChoi(e.din, e.dout * f.dout, 0.5 * (left.choi + right.choi))


# ---------------------------------------------------------------------------
# membership adapters for the robustness engine


def _to_membership(verdict: Verdict):
    from .robustness import Membership

    return {
        Verdict.FEASIBLE: Membership.INSIDE,
        Verdict.INFEASIBLE: Membership.OUTSIDE,
        Verdict.UNDECIDED: Membership.UNDECIDED,
    }[verdict]


def jm_classifier(cfg: SolverConfig | None = None):
    """Membership oracle over (Povm, Povm) pairs."""

    def classify(pair):
        return _to_membership(jm_feasible(pair[0], pair[1], cfg).verdict)

    return classify


def channel_classifier(cfg: SolverConfig | None = None):
    """Membership oracle over (ChannelChoi, ChannelChoi) pairs."""

    def classify(pair):
        return _to_membership(channel_compat_feasible(pair[0], pair[1], cfg).verdict)

    return classify


def obs_channel_classifier(cfg: SolverConfig | None = None):
    """Membership oracle over (Povm, ChannelChoi) pairs."""

    def classify(pair):
        return _to_membership(obs_channel_feasible(pair[0], pair[1], cfg).verdict)

    return classify
