import json
import math

import numpy as np
import pytest

from qincompat import devices
from qincompat.compat import Verdict, jm_feasible, joint_channel_residual
from qincompat.devices import channel_marginals, identity_channel, mix
from qincompat.robustness import heinosaari_lower_bound
from qincompat.theorems import (
    TheoremReport,
    brute_span_optimum,
    decodable_channels_theorem,
    decodable_noise_channel,
    monotonicity_suite,
    optimal_cloner,
    reports_to_json,
    run_theorem_table,
    vn_obs_decodable_theorem,
    weyl_optimal_noise,
    weyl_pair_theorem,
    weyl_witness_state,
)


class TestWeylTheorem:
    def test_d2_report(self):
        r = weyl_pair_theorem(2)
        assert r.closed_form == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-15)
        assert abs(r.numeric_estimate - r.closed_form) <= 2e-3
        assert r.witnesses_validated

    def test_closed_forms(self):
        assert weyl_pair_theorem(2).closed_form == pytest.approx(0.853553, abs=1e-6)
        # d=3, d=4 values checked in the acceptance suite to bound runtime here

    def test_optimal_noise_is_normalized(self):
        for d in (2, 3, 5):
            m, n = weyl_optimal_noise(d)
            m.validate()
            n.validate()
            # zero weight on the aligned outcome
            assert abs(m.effects[0][0, 0]) < 1e-14

    def test_witness_state_is_pure_unit(self):
        for d in (2, 3):
            rho = weyl_witness_state(d)
            assert abs(np.trace(rho).real - 1) < 1e-12
            assert np.abs(rho @ rho - rho).max() < 1e-12

    def test_out_of_range_dimension(self):
        with pytest.raises(ValueError):
            weyl_pair_theorem(6)


class TestDecodableTheorem:
    def test_d2_report(self):
        r = decodable_channels_theorem(2)
        assert r.closed_form == pytest.approx(0.75)
        assert abs(r.numeric_estimate - r.closed_form) <= 2e-3
        assert r.witnesses_validated

    def test_noise_channel_structure(self):
        for d in (2, 3):
            noise = decodable_noise_channel(d)
            noise.validate()
            # E = -id/(d^2-1) + d^2 T/(d^2-1) reconstructs the optimal mixture
            ident = identity_channel(d)
            t = 0.5 * (1 + 1 / d)
            mixture = t * ident.choi + (1 - t) * noise.choi
            target = mix(ident, devices.depolarizing_target(d), (d + 2) / (2 * (d + 1)))
            assert np.abs(mixture - target.choi).max() < 1e-12

    def test_cloner_is_valid_joint(self):
        for d in (2, 3):
            cloner = optimal_cloner(d)
            cloner.validate(1e-10)
            target = mix(identity_channel(d), devices.depolarizing_target(d), (d + 2) / (2 * (d + 1)))
            assert joint_channel_residual(cloner, target, target) < 1e-10
            m1, m2 = channel_marginals(cloner, (d, d))
            assert np.abs(m1.choi - m2.choi).max() < 1e-12


class TestVnTheorem:
    def test_d2_report(self):
        r = vn_obs_decodable_theorem(2)
        assert r.closed_form == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)))
        assert abs(r.numeric_estimate - r.closed_form) <= 2e-3
        assert r.witnesses_validated

    def test_equality_with_weyl_value(self):
        # both theorems display the same closed form (1 + 1/sqrt(d))/2
        rw = weyl_pair_theorem(2)
        rv = vn_obs_decodable_theorem(2)
        assert rw.closed_form == rv.closed_form

    def test_brute_oracle(self):
        for d in (2, 3, 5):
            assert brute_span_optimum(d) == pytest.approx(0.5 * (1 + 1 / math.sqrt(d)), abs=1e-9)


class TestFloors:
    def test_closed_forms_respect_dimensional_floor(self):
        for d in (2, 3, 4):
            weyl = 0.5 * (1 + 1 / math.sqrt(d))
            dec = 0.5 * (1 + 1 / d)
            floor = heinosaari_lower_bound(d)
            assert weyl > floor
            assert dec >= floor - 1e-12


class TestMonotonicity:
    def test_transported_witnesses(self):
        res = monotonicity_suite(d=2, n_processings=20, seed=0)
        assert res["passed"] == 0.0
        assert res["worst"] < 1e-8

    def test_unitary_preprocessing_keeps_value(self):
        # pre-processing equivalence: a unitary channel leaves the flip point unchanged
        from qincompat.covariance import sharp_weyl_pair, weyl_rep

        d = 2
        q, p = sharp_weyl_pair(d)
        noise = weyl_optimal_noise(d)
        tstar = 0.5 * (1 + 1 / math.sqrt(d))
        u = weyl_rep(d).w[1, 1]
        g = devices.unitary_channel(u)
        above = mix((q, p), noise, min(1.0, tstar + 5e-3))
        pa = devices.pre_process_observable(above[0], g)
        pb = devices.pre_process_observable(above[1], g)
        assert jm_feasible(pa, pb).verdict == Verdict.INFEASIBLE


class TestReportSerialization:
    def test_json_schema(self):
        r = weyl_pair_theorem(2)
        payload = r.to_json()
        assert set(payload) == {"name", "d", "closed_form", "numeric_estimate", "witnesses_validated", "residuals"}
        text = reports_to_json([r])
        parsed = json.loads(text)
        assert parsed[0]["name"] == "weyl_pair"

    def test_table_driver_skips_out_of_range(self):
        reports = run_theorem_table([5])
        names = {r.name for r in reports}
        assert names == {"weyl_pair", "vn_obs_decodable"}  # decodable capped at d=4

    def test_assemble_gate(self):
        r = TheoremReport.assemble("x", 2, 0.5, 0.5, {"ok": 0.0, "bad": 1.0})
        assert not r.witnesses_validated
        r2 = TheoremReport.assemble("x", 2, 0.5, 0.5, {"ok": 0.0})
        assert r2.witnesses_validated
