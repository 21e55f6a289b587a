import numpy as np
import pytest

from qincompat import devices
from qincompat.compat import (
    SolverConfig,
    Verdict,
    channel_compat_feasible,
    half_mixture_channel_witness,
    half_mixture_jm_witness,
    jm_feasible,
    joint_channel_residual,
    joint_instrument_residual,
    joint_observable_residual,
    naimark_self_witness,
    obs_channel_feasible,
    remark_half_witness,
)
from qincompat.covariance import covariant_pair_jm_oracle, sharp_weyl_pair
from qincompat.devices import (
    Instrument,
    JointObservable,
    computational_observable,
    depolarizing_target,
    dual_apply,
    identity_channel,
    instrument_marginals,
    mix,
    trivial_observable,
)
from qincompat.errors import DimensionError
from qincompat.robustness import Membership
from qincompat.theorems import decodable_noise_channel, optimal_cloner, vn_optimal_instrument


class TestJointMeasurability:
    def test_sharp_self_compatible(self):
        _, p = sharp_weyl_pair(3)
        rep = jm_feasible(p, p)
        assert rep.verdict == Verdict.FEASIBLE
        # the diagonal construction is an exact witness
        wit = naimark_self_witness(p)
        assert joint_observable_residual(wit, p, p) < 1e-12

    def test_weyl_pair_incompatible(self):
        q, p = sharp_weyl_pair(2)
        rep = jm_feasible(q, p)
        assert rep.verdict == Verdict.INFEASIBLE
        assert rep.gap >= SolverConfig().infeas_threshold

    def test_boundary_mixture_feasible(self):
        # t = (1 + 1/sqrt(d))/2 against the proof's optimal noise
        from qincompat.theorems import weyl_optimal_noise

        d = 2
        q, p = sharp_weyl_pair(d)
        noise = weyl_optimal_noise(d)
        t = 0.5 * (1 + 1 / np.sqrt(d))
        rep = jm_feasible(mix(q, noise[0], t), mix(p, noise[1], t))
        assert rep.verdict == Verdict.FEASIBLE
        assert rep.residual < 1e-7

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            jm_feasible(computational_observable(2), computational_observable(3))


class TestChannelCompat:
    def test_constant_self_compatible(self):
        d = 2
        t = depolarizing_target(d)
        rep = channel_compat_feasible(t, t)
        assert rep.verdict == Verdict.FEASIBLE
        # product-of-constants witness
        joint = devices.constant_channel(np.eye(d * d) / (d * d), d)
        assert joint_channel_residual(joint, t, t) < 1e-12

    def test_no_cloning(self):
        ident = identity_channel(2)
        rep = channel_compat_feasible(ident, ident)
        assert rep.verdict == Verdict.INFEASIBLE

    def test_optimal_mixture_self_compatible(self):
        d = 2
        mixture = mix(identity_channel(d), depolarizing_target(d), (d + 2) / (2 * (d + 1)))
        rep = channel_compat_feasible(mixture, mixture)
        assert rep.verdict == Verdict.FEASIBLE
        # cross-check the found witness against the optimal cloner: both join the pair
        assert joint_channel_residual(rep.witness, mixture, mixture) < 1e-6
        assert joint_channel_residual(optimal_cloner(d), mixture, mixture) < 1e-12


class TestObsChannelCompat:
    def test_trivial_with_any_channel(self):
        rng = np.random.default_rng(0)
        d = 2
        p = np.array([0.3, 0.7])
        t = trivial_observable(p, d)
        e = devices.random_channel(d, d, rng)
        rep = obs_channel_feasible(t, e)
        assert rep.verdict == Verdict.FEASIBLE
        # explicit product witness
        wit = Instrument(d, d, tuple(pj * e.choi for pj in p))
        assert joint_instrument_residual(wit, t, e) < 1e-12

    def test_vn_with_identity_incompatible(self):
        d = 2
        rep = obs_channel_feasible(computational_observable(d), identity_channel(d))
        assert rep.verdict == Verdict.INFEASIBLE

    def test_optimal_marginals_feasible(self):
        d = 2
        obs, chan = instrument_marginals(vn_optimal_instrument(d))
        rep = obs_channel_feasible(obs, chan)
        assert rep.verdict == Verdict.FEASIBLE


class TestRemarkWitness:
    def test_extremes(self):
        rng = np.random.default_rng(1)
        d = 2
        m = devices.random_povm(d, d, rng)
        e = devices.random_channel(d, d, rng)
        p = np.ones(d) / d
        sigma = devices.random_state(d, rng)
        at0 = remark_half_witness(m, e, p, sigma, 0.0)
        for j in range(d):
            assert np.abs(at0.blocks[j] - p[j] * e.choi).max() < 1e-12
        at1 = remark_half_witness(m, e, p, sigma, 1.0)
        for j in range(d):
            assert np.abs(at1.blocks[j] - np.kron(sigma, m.effects[j].T)).max() < 1e-12

    def test_half_mixture_marginals(self):
        d = 2
        m = computational_observable(d)
        e = identity_channel(d)
        p = np.ones(d) / d
        sigma = np.eye(d) / d
        gam = remark_half_witness(m, e, p, sigma, 0.5)
        gam.validate()
        obs, chan = instrument_marginals(gam)
        t_obs = mix(m, trivial_observable(p, d), 0.5)
        t_chan = mix(devices.constant_channel(sigma, d), e, 0.5)
        assert max(np.abs(a - b).max() for a, b in zip(obs.effects, t_obs.effects)) < 1e-12
        assert np.abs(chan.choi - t_chan.choi).max() < 1e-12


class TestSoundness:
    """Every FEASIBLE witness independently re-validates."""

    def test_jm_witness_revalidates(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            a = devices.random_povm(2, 2, rng)
            b = devices.random_povm(2, 3, rng)
            rep = jm_feasible(mix(a, trivial_observable(np.ones(2) / 2, 2), 0.4),
                              mix(b, trivial_observable(np.ones(3) / 3, 2), 0.4))
            if rep.verdict == Verdict.FEASIBLE:
                assert joint_observable_residual(rep.witness, *_margins_of(rep)) < 1e-6

    def test_obschan_witness_revalidates(self):
        rng = np.random.default_rng(3)
        d = 2
        for _ in range(5):
            m = devices.random_povm(d, d, rng)
            e = devices.random_channel(d, d, rng)
            mm = mix(m, trivial_observable(np.ones(d) / d, d), 0.5)
            ee = mix(e, depolarizing_target(d), 0.5)
            rep = obs_channel_feasible(mm, ee)
            assert rep.verdict == Verdict.FEASIBLE
            assert joint_instrument_residual(rep.witness, mm, ee) < 1e-6


def _margins_of(rep):
    return rep.witness.margins()


class TestConvexity:
    def test_mixture_of_feasible_pairs_feasible(self):
        rng = np.random.default_rng(4)
        d = 2
        triv = trivial_observable(np.ones(d) / d, d)
        a1 = mix(devices.random_povm(d, d, rng), triv, 0.4)
        b1 = mix(devices.random_povm(d, d, rng), triv, 0.4)
        a2 = mix(devices.random_povm(d, d, rng), triv, 0.3)
        b2 = mix(devices.random_povm(d, d, rng), triv, 0.3)
        assert jm_feasible(a1, b1).verdict == Verdict.FEASIBLE
        assert jm_feasible(a2, b2).verdict == Verdict.FEASIBLE
        for t in (0.25, 0.5, 0.75):
            rep = jm_feasible(mix(a1, a2, t), mix(b1, b2, t))
            assert rep.verdict == Verdict.FEASIBLE, t


class TestProcessingPreservation:
    """Transport witnesses through processings instead of re-solving."""

    def test_pre_processing_preserves_jm(self):
        rng = np.random.default_rng(5)
        d = 2
        for _ in range(5):
            a = mix(devices.random_povm(d, d, rng), trivial_observable(np.ones(d) / d, d), 0.45)
            b = mix(devices.random_povm(d, d, rng), trivial_observable(np.ones(d) / d, d), 0.45)
            rep = jm_feasible(a, b)
            assert rep.verdict == Verdict.FEASIBLE
            g = devices.random_channel(d, d, rng)
            grid = np.stack([
                np.stack([dual_apply(g, rep.witness.grid[j, k]) for k in range(b.n_outcomes)])
                for j in range(a.n_outcomes)
            ])
            processed = JointObservable(g.din, grid)
            pa = devices.pre_process_observable(a, g)
            pb = devices.pre_process_observable(b, g)
            assert joint_observable_residual(processed, pa, pb) < 1e-6

    def test_post_processing_preserves_jm(self):
        rng = np.random.default_rng(6)
        d = 2
        a = mix(devices.random_povm(d, d, rng), trivial_observable(np.ones(d) / d, d), 0.45)
        b = mix(devices.random_povm(d, d, rng), trivial_observable(np.ones(d) / d, d), 0.45)
        rep = jm_feasible(a, b)
        beta = devices.random_kernel(3, d, rng).matrix
        gamma = devices.random_kernel(2, d, rng).matrix
        grid = np.einsum("yj,zk,jkab->yzab", beta, gamma, rep.witness.grid)
        pa = devices.post_process_observable(a, devices.MarkovKernel(beta))
        pb = devices.post_process_observable(b, devices.MarkovKernel(gamma))
        assert joint_observable_residual(JointObservable(d, grid), pa, pb) < 1e-6


class TestAnalyticAgreement:
    def test_uniform_noise_sweep_matches_state_oracle(self):
        """Solver and state-existence oracle flip at the same t (d = 2)."""
        d = 2
        q, p = sharp_weyl_pair(d)
        triv = trivial_observable(np.ones(d) / d, d)
        delta = np.zeros(d)
        delta[0] = 1.0
        uniform = np.ones(d) / d

        def solver_inside(t):
            return jm_feasible(mix(q, triv, t), mix(p, triv, t)).verdict == Verdict.FEASIBLE

        def oracle_inside(t):
            m = t * delta + (1 - t) * uniform
            return covariant_pair_jm_oracle(m, m, d) == Membership.INSIDE

        def flip(fn):
            lo, hi = 0.5, 1.0
            while hi - lo > 1e-4:
                mid = 0.5 * (lo + hi)
                if fn(mid):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        t_solver = flip(solver_inside)
        t_oracle = flip(oracle_inside)
        assert abs(t_solver - t_oracle) < 2e-3
        assert abs(t_solver - 1 / np.sqrt(2)) < 2e-3


class TestHalfMixtureWitnesses:
    def test_jm_half_witness(self):
        rng = np.random.default_rng(7)
        d = 2
        a = devices.random_povm(d, 3, rng)
        b = devices.random_povm(d, 2, rng)
        s = np.array([0.6, 0.1, 0.3])
        t = np.array([0.5, 0.5])
        wit = half_mixture_jm_witness(a, b, s, t)
        ta = mix(a, trivial_observable(s, d), 0.5)
        tb = mix(b, trivial_observable(t, d), 0.5)
        assert joint_observable_residual(wit, ta, tb) < 1e-12

    def test_channel_half_witness(self):
        rng = np.random.default_rng(8)
        d = 2
        e = devices.random_channel(d, d, rng)
        f = devices.random_channel(d, 3, rng)
        s1 = devices.random_state(d, rng)
        s2 = devices.random_state(3, rng)
        wit = half_mixture_channel_witness(e, f, s1, s2)
        te = mix(e, devices.constant_channel(s1, d), 0.5)
        tf = mix(f, devices.constant_channel(s2, d), 0.5)
        assert joint_channel_residual(wit, te, tf) < 1e-12


class TestAffineProjections:
    """The closed-form marginal projections match a least-squares oracle."""

    @staticmethod
    def _lstsq_project(x0, constraint_rows, targets):
        a = np.stack(constraint_rows)
        b = np.asarray(targets) - a @ x0
        correction, *_ = np.linalg.lstsq(a, b, rcond=None)
        return x0 + correction

    def test_jm_affine_projection(self):
        from qincompat.compat import _jm_affine

        rng = np.random.default_rng(9)
        d, n, np_ = 2, 2, 3
        a_stack = np.stack(devices.random_povm(d, n, rng).effects)
        b_stack = np.stack(devices.random_povm(d, np_, rng).effects)
        g = rng.normal(size=(n, np_, d, d)) + 1j * rng.normal(size=(n, np_, d, d))
        g = 0.5 * (g + g.conj().transpose(0, 1, 3, 2))
        proj = _jm_affine(a_stack, b_stack)(g)
        # oracle: vectorized real least-squares onto the constraint manifold
        dim = g.size
        rows, targets = [], []
        for j in range(n):
            for r in range(d):
                for c in range(d):
                    row = np.zeros((n, np_, d, d), dtype=complex)
                    row[j, :, r, c] = 1.0
                    rows.append(row.reshape(dim))
                    targets.append(a_stack[j, r, c])
        for k in range(np_):
            for r in range(d):
                for c in range(d):
                    row = np.zeros((n, np_, d, d), dtype=complex)
                    row[:, k, r, c] = 1.0
                    rows.append(row.reshape(dim))
                    targets.append(b_stack[k, r, c])
        # split into real/imag parts for a real least-squares problem
        a_mat = np.stack(rows)
        x0 = g.reshape(dim)
        b_vec = np.asarray(targets) - a_mat @ x0
        a_real = np.block([[a_mat.real, -a_mat.imag], [a_mat.imag, a_mat.real]])
        b_real = np.concatenate([b_vec.real, b_vec.imag])
        corr, *_ = np.linalg.lstsq(a_real, b_real, rcond=None)
        oracle = x0 + corr[:dim] + 1j * corr[dim:]
        assert np.abs(proj.reshape(dim) - oracle).max() < 1e-9

    def test_channel_affine_projection_constraints(self):
        from qincompat.compat import _chan_affine

        rng = np.random.default_rng(10)
        k1, k2, din = 2, 3, 2
        e = devices.random_channel(din, k1, rng)
        f = devices.random_channel(din, k2, rng)
        e4 = e.choi.reshape(k1, din, k1, din)
        f4 = f.choi.reshape(k2, din, k2, din)
        m = rng.normal(size=(k1 * k2 * din,) * 2) + 1j * rng.normal(size=(k1 * k2 * din,) * 2)
        m = 0.5 * (m + m.conj().T)
        m6 = m.reshape(k1, k2, din, k1, k2, din)
        out = _chan_affine(e4, f4, k1, k2, din)(m6)
        # constraints hold exactly
        assert np.abs(np.einsum("acibcj->aibj", out) - e4).max() < 1e-10
        assert np.abs(np.einsum("aciadj->cidj", out) - f4).max() < 1e-10
        # projection is idempotent and orthogonal (moving along constraint normals only)
        again = _chan_affine(e4, f4, k1, k2, din)(out)
        assert np.abs(again - out).max() < 1e-12
        # Frobenius optimality: any other feasible point is farther from m
        delta = out - m6
        for _ in range(5):
            z = rng.normal(size=m6.shape) + 1j * rng.normal(size=m6.shape)
            # project z onto the nullspace of the constraints: subtract its correction
            z_fixed = _chan_affine(np.zeros_like(e4), np.zeros_like(f4), k1, k2, din)(z)
            z_null = z - (z - z_fixed)  # z_fixed has zero margins; z_null = z_fixed
            inner = np.vdot(z_null, delta)
            assert abs(inner) < 1e-9

    def test_obschan_affine_projection_constraints(self):
        from qincompat.compat import _obschan_affine

        rng = np.random.default_rng(11)
        d, n = 2, 3
        m = devices.random_povm(d, n, rng)
        e = devices.random_channel(d, d, rng)
        mt = np.stack([mj.T for mj in m.effects])
        c4 = e.choi.reshape(d, d, d, d)
        blocks = rng.normal(size=(n, d, d, d, d)) + 1j * rng.normal(size=(n, d, d, d, d))
        out = _obschan_affine(mt, c4, d, n)(blocks)
        assert np.abs(np.einsum("naiaj->nij", out) - mt).max() < 1e-10
        assert np.abs(out.sum(axis=0) - c4).max() < 1e-10
        again = _obschan_affine(mt, c4, d, n)(out)
        assert np.abs(again - out).max() < 1e-12
