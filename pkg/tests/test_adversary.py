"""Adversary construction tests.

The fractal expectations are checked two independent ways: the exact
distributional sweep inside the library, and a literal enumeration of all
2^(h-1) root-leaf paths driven off the audited label table.  The frozen
constants below were produced by a standalone exact-arithmetic script
before the library existed.
"""

import math
import statistics

import pytest

from balancer.adversary import (AdversaryState, FractalInstance,
                                FractalReport, adversary_run,
                                certify_uncorrelated, fractal_ratio,
                                lower_bound_experiment,
                                orthogonal_adversary_next, sphere_growth,
                                sphere_stress)
from balancer.core import DistributionSpec, SparseUpdate, sample
from balancer.errors import (InvalidInstanceError, InvariantViolationError,
                             MemoryGuardError)
from balancer.rng import SeededRng
from balancer.signer import CoshSigner, SignerConfig


def random_state(rng, n, scale=5.0):
    return AdversaryState(d=[scale * (2.0 * rng.uniform() - 1.0)
                             for _ in range(n)])


class TestOrthogonalAdversary:
    def test_hand_case(self):
        state = AdversaryState(d=[1.0, 0.0, 0.0])
        v = orthogonal_adversary_next(state)
        assert v.dense() == [0.0, 1.0, 1.0]

    def test_zero_state_gives_all_ones(self):
        v = orthogonal_adversary_next(AdversaryState.zero(4))
        assert v.dense() == [1.0, 1.0, 1.0, 1.0]

    def test_needs_two_dims(self):
        with pytest.raises(ValueError):
            AdversaryState.zero(1)

    @pytest.mark.parametrize("n", [2, 3, 8, 33])
    def test_orthogonal_with_pm_bulk(self, n):
        rng = SeededRng(17).derive(f"state-{n}")
        for _ in range(50):
            state = random_state(rng, n)
            v = orthogonal_adversary_next(state)
            dense = v.dense()
            norm = math.sqrt(math.fsum(x * x for x in state.d))
            dot = math.fsum(a * b for a, b in zip(state.d, dense))
            assert abs(dot) <= 1e-9 * max(1.0, norm)
            pm = sum(1 for x in dense if abs(x) == 1.0)
            assert pm >= n - 1
            assert all(abs(x) <= 1.0 for x in dense)
            assert math.fsum(x * x for x in dense) >= n - 1

    def test_reserved_coordinate_is_largest(self):
        state = AdversaryState(d=[0.5, -3.0, 1.0, 2.0])
        v = orthogonal_adversary_next(state)
        dense = v.dense()
        # coordinate 1 holds the fractional residual, everything else is +-1
        assert all(abs(dense[c]) == 1.0 for c in (0, 2, 3))
        assert abs(dense[1]) <= 1.0

    @pytest.mark.parametrize("n", [4, 16])
    @pytest.mark.parametrize("algorithm", ["cosh", "random"])
    def test_norm_growth_floor(self, n, algorithm):
        # the run itself raises if ||d_t||^2 ever drops below (n-1) t
        res = adversary_run(n, 512, algorithm=algorithm, rng=SeededRng(5))
        assert res.extra["final_norm_sq"] >= (n - 1) * 512 * (1 - 1e-9)
        assert res.steps == 512

    def test_deterministic(self):
        a = adversary_run(6, 128, rng=SeededRng(9))
        b = adversary_run(6, 128, rng=SeededRng(9))
        assert a.trace == b.trace
        assert a.extra["final_norm_sq"] == b.extra["final_norm_sq"]

    def test_rejects_unknown_algorithm(self):
        with pytest.raises(ValueError):
            adversary_run(4, 8, algorithm="median")


class TestLowerBoundExperiment:
    def test_certify_hadamard(self):
        assert certify_uncorrelated(DistributionSpec.hadamard_rows(16)) == 4.0

    def test_certify_rejects_correlated(self):
        up = SparseUpdate(((0, 1.0), (1, 1.0)), 2)
        spec = DistributionSpec.finite_support([(up, 0.5), (up.negate(), 0.5)])
        with pytest.raises(InvalidInstanceError, match="correlate"):
            certify_uncorrelated(spec)

    def test_certify_rejects_varying_norms(self):
        a = SparseUpdate(((0, 1.0),), 2)
        b = SparseUpdate(((0, 1.0), (1, 1.0)), 2)
        spec = DistributionSpec.finite_support([(a, 0.5), (b, 0.5)])
        with pytest.raises(InvalidInstanceError, match="norms vary"):
            certify_uncorrelated(spec)

    def test_certify_needs_finite_support(self):
        with pytest.raises(InvalidInstanceError, match="finite support"):
            certify_uncorrelated(DistributionSpec.unit_sphere(4))

    @pytest.mark.parametrize("algorithm", ["cosh", "random"])
    def test_threshold_frequency(self, algorithm):
        spec = DistributionSpec.hadamard_rows(16)
        rep = lower_bound_experiment(spec, 100, rng=SeededRng(7),
                                     algorithm=algorithm)
        assert rep.k == 4.0
        assert rep.threshold == 1.0
        assert rep.frequency >= 0.7

    def test_report_is_deterministic(self):
        spec = DistributionSpec.hadamard_rows(8)
        a = lower_bound_experiment(spec, 40, rng=SeededRng(3))
        b = lower_bound_experiment(spec, 40, rng=SeededRng(3))
        assert a == b

    def test_drift_floor_at_small_states(self):
        # whenever ||d||_inf <= k/4, one fresh step moves the quadratic
        # potential up by at least k^2/2 in expectation, no matter the sign
        spec = DistributionSpec.hadamard_rows(16)
        k = 4.0
        probe_rng = SeededRng(99).derive("probe")
        probed = 0
        for seed in range(6):
            rng = SeededRng(seed)
            stream = rng.derive("stream")
            eng = CoshSigner(SignerConfig(n=16, s=16))
            for _ in range(64):
                if max(map(abs, eng.d)) <= k / 4:
                    drifts = []
                    for _ in range(300):
                        w = sample(spec, probe_rng)
                        dv = math.fsum(eng.d[c] * x for c, x in w.entries)
                        drifts.append(k * k - 2.0 * abs(dv))
                    mean = statistics.fmean(drifts)
                    sem = statistics.stdev(drifts) / math.sqrt(len(drifts))
                    assert mean >= k * k / 2.0 - 3.0 * sem
                    probed += 1
                v = sample(spec, stream)
                coords, vals = v.scaled_nonzeros()
                eng.step(coords, vals, None)
        assert probed >= 6


class TestSphereStress:
    def test_growth_identity_holds(self):
        # sphere_stress re-derives ||d_t||^2 from the step identity and
        # raises if the recomputed value drifts; completing is the assertion
        res = sphere_stress(8, 512, rng=SeededRng(1))
        assert res.extra["max_l2"] >= 1.0 - 1e-12
        assert res.extra["argmax_t_l2"] >= 1
        assert res.extra["l2_trace"][-1][0] == 512

    def test_linf_below_l2(self):
        res = sphere_stress(4, 256, rng=SeededRng(2))
        assert res.max_linf <= res.extra["max_l2"] + 1e-12

    def test_median_growth_monotone(self):
        meds = sphere_growth(6, [64, 128, 256], seeds=5)
        values = [m for _, m in meds]
        assert values == sorted(values)

    def test_random_baseline_supported(self):
        res = sphere_stress(4, 64, rng=SeededRng(3), algorithm="random")
        assert res.algorithm == "random"

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            sphere_stress(1, 8)
        with pytest.raises(ValueError):
            sphere_stress(4, 8, algorithm="coin")


# frozen by an exact-arithmetic enumeration script, d = 8
FRACTAL_D8 = {
    1: (1490.4788257895502, 1490.4788257895502),
    4: (1355.9495778008165, 1728.569284248204),
    8: (785.3756523032544, 2299.1432097457664),
    12: (464.4278192108757, 2620.091042838145),
    16: (283.8946630964126, 2800.624198952608),
    20: (182.34476278202717, 2902.1740992669934),
    24: (125.22294385518538, 2959.295918193836),
}


def beta_from_label_table(h, d):
    """Literal path enumeration over the audited label table."""
    table = FractalInstance(h, d).label_table()
    value = {"d": math.sinh(d), "2d/3": math.sinh(2.0 * d / 3.0),
             "-d": -math.sinh(d), "0": 0.0}
    paths = 1 << (h - 1)
    tot_signed = 0.0
    tot_abs = 0.0
    for bits in range(paths):
        signed = 0.0
        mag = 0.0
        idx = 0
        for level in range(h):
            if level > 0:
                idx = (idx << 1) | ((bits >> (level - 1)) & 1)
            x = value[table[(level, idx)][1]]
            signed += x
            mag += abs(x)
        tot_signed += abs(signed)
        tot_abs += mag
    return tot_signed / paths, tot_abs / paths


class TestFractal:
    @pytest.mark.parametrize("h", sorted(FRACTAL_D8))
    def test_frozen_values(self, h):
        lhs, rhs = FRACTAL_D8[h]
        rep = fractal_ratio(h, 8.0)
        assert rep.lhs == pytest.approx(lhs, rel=1e-9)
        assert rep.rhs == pytest.approx(rhs, rel=1e-9)
        assert rep.beta == pytest.approx(rhs / lhs, rel=1e-9)

    def test_height_one_is_tight(self):
        rep = fractal_ratio(1, 3.0)
        assert rep.lhs == rep.rhs == math.sinh(3.0)
        assert rep.beta == 1.0
        assert rep.p_hit == 0.0 and rep.p_passed == 0.0

    @pytest.mark.parametrize("d", [1.0, 8.0])
    @pytest.mark.parametrize("h", range(2, 11))
    def test_matches_path_enumeration(self, h, d):
        lhs, rhs = beta_from_label_table(h, d)
        rep = fractal_ratio(h, d)
        assert rep.lhs == pytest.approx(lhs, rel=1e-12)
        assert rep.rhs == pytest.approx(rhs, rel=1e-12)

    def test_marginals(self):
        prev = 0.0
        for h in range(2, 22):
            rep = fractal_ratio(h, 8.0)
            assert rep.p_passed == 0.5
            assert rep.p_hit >= prev
            prev = rep.p_hit

    def test_rhs_at_least_sinh_d(self):
        for h in (1, 4, 8, 16):
            assert fractal_ratio(h, 8.0).rhs >= math.sinh(8.0) - 1e-9

    def test_lhs_kill_bound(self):
        # surviving mass decays with height: the sinh(d) part of the LHS
        # shrinks geometrically while the sinh(2d/3) part stays bounded
        for h in (8, 12, 16, 20):
            a = fractal_ratio(h, 8.0)
            b = fractal_ratio(h + 4, 8.0)
            assert (1.0 - b.p_hit) <= 0.75 * (1.0 - a.p_hit)
            assert a.lhs <= h * math.sinh(16.0 / 3.0) \
                + (1.0 - a.p_hit) * math.sinh(8.0) + 1e-9

    def test_scaled_mode_matches_direct(self):
        # d = 351 crosses the rescale threshold but sinh is still finite,
        # so both routes are computable and must agree
        rep = fractal_ratio(8, 351.0)
        assert rep.scale_log == 351.0
        sd = math.sinh(351.0)
        s23 = math.sinh(2.0 * 351.0 / 3.0)
        law_scale = math.exp(351.0)
        assert rep.lhs * law_scale == pytest.approx(
            (1.0 - rep.p_hit) * sd + rep.p_passed * s23, rel=1e-9)
        assert rep.rhs * law_scale == pytest.approx(
            (1.0 + rep.p_hit) * sd + rep.p_passed * s23, rel=1e-9)

    def test_huge_magnitude_stays_finite(self):
        rep = fractal_ratio(12, 5000.0)
        assert math.isfinite(rep.beta)
        assert rep.beta == pytest.approx(
            (1.0 + rep.p_hit) / (1.0 - rep.p_hit), rel=1e-6)
        assert rep.log_beta > 0.0

    def test_label_table_small(self):
        table = FractalInstance(3, 8.0).label_table()
        assert table[(0, 0)] == ("root", "d")
        assert table[(1, 1)] == ("r23", "2d/3")
        assert table[(1, 0)] == ("g0", "0")
        assert {table[(2, i)][0] for i in range(4)} == {"g1L", "g1R", "g0"}
        assert all(lab in ("d", "2d/3", "-d", "0")
                   for _, lab in table.values())

    def test_label_table_guard(self):
        with pytest.raises(MemoryGuardError):
            FractalInstance(17, 8.0).label_table()

    def test_instance_report_roundtrip(self):
        inst = FractalInstance(6, 2.0)
        assert inst.report() == fractal_ratio(6, 2.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            fractal_ratio(0, 1.0)
        with pytest.raises(ValueError):
            fractal_ratio(4, 0.0)
        with pytest.raises(ValueError):
            FractalInstance(4, -1.0)
