"""Release gate: ten criteria, one test each, one pass/fail line under -v.

Each test pins its own tolerances and runtime budget.  Nothing here is
statistical beyond what the criterion itself allows; exact claims are
asserted with == or explicit 1e-12 style bounds, never approx-by-default.
"""

import math
import time
from fractions import Fraction

import pytest

from balancer.adversary import (AdversaryState, fractal_ratio,
                                lower_bound_experiment,
                                orthogonal_adversary_next)
from balancer.anticonc import (certify, hadamard_instance,
                               pairwise_counterexample,
                               random_pairwise_instance,
                               random_uncorrelated_instance, verify_pairwise,
                               verify_uncorrelated)
from balancer.core import DistributionSpec
from balancer.haar import (DyadicBox, DyadicInterval, HaarIndex,
                           TensorHaarIndex, box_coefficients,
                           inner_product, interval_coefficients,
                           tensor_inner_product, wavelets_up_to)
from balancer.harness import (check_regression, compare,
                              compute_regression_metrics, fit_growth,
                              load_regression_table)
from balancer.problems import (PointStream, dyadic_box_discrepancy,
                               dyadic_interval_discrepancy, interval_signer,
                               max_dyadic_discrepancy,
                               max_interval_discrepancy, tusnady_signer)
from balancer.rng import SeededRng
from balancer.signer import CoshSigner, SignerConfig, random_sign, run_stream

EXACT = 1e-12


def test_criterion_01_haar_l1_masses():
    """Interval coefficient l1 mass is 1, split across scales as 2^-(l+1-j)."""
    t0 = time.time()
    for level in range(11):
        for m in range(1 << level):
            coeffs = interval_coefficients(DyadicInterval(level, m))
            total = math.fsum(abs(c) for c in coeffs.values())
            assert total == 1.0
            by_scale: dict[int, float] = {}
            for h, c in coeffs.items():
                by_scale[h.j] = by_scale.get(h.j, 0.0) + abs(c)
            assert by_scale[0] == 2.0 ** -level
            for j in range(1, level + 1):
                assert by_scale[j] == 2.0 ** -(level + 1 - j)

    # tensor version: every level combo, full shift coverage when small
    rng = SeededRng(20260819)
    for d in (2, 3):
        for combo_id in range(6 ** d):
            levels = [(combo_id // 6 ** i) % 6 for i in range(d)]
            cells = 1 << sum(levels)
            if cells <= 256:
                shift_tuples = [
                    tuple((box_id >> sum(levels[:i])) % (1 << levels[i])
                          for i in range(d))
                    for box_id in range(cells)]
            else:
                shift_tuples = [tuple(rng.randint(1 << l) for l in levels)
                                for _ in range(16)]
            for ms in shift_tuples:
                box = DyadicBox(tuple(DyadicInterval(l, m)
                                      for l, m in zip(levels, ms)))
                coeffs = box_coefficients(box)
                assert math.fsum(abs(c) for c in coeffs.values()) == 1.0
                # marginal mass on one axis' scale matches the 1-D split
                axis_mass: dict[int, float] = {}
                for th, c in coeffs.items():
                    j = th.parts[0].j
                    axis_mass[j] = axis_mass.get(j, 0.0) + abs(c)
                assert axis_mass[0] == pytest.approx(2.0 ** -levels[0],
                                                     abs=EXACT)
                for j in range(1, levels[0] + 1):
                    assert axis_mass[j] == pytest.approx(
                        2.0 ** -(levels[0] + 1 - j), abs=EXACT)
    elapsed = time.time() - t0
    assert elapsed < 10.0, f"budget exceeded: {elapsed:.1f}s"


def test_criterion_02_orthogonality():
    """Distinct wavelets integrate to exactly zero, 1-D and tensor."""
    ws = wavelets_up_to(8)
    for i in range(len(ws)):
        for j in range(i + 1, len(ws)):
            assert inner_product(ws[i], ws[j]) == Fraction(0)
    ws4 = wavelets_up_to(4)
    tens = [TensorHaarIndex((a, b)) for a in ws4 for b in ws4]
    for i in range(len(tens)):
        for j in range(i + 1, len(tens)):
            assert tensor_inner_product(tens[i], tens[j]) == Fraction(0)


def test_criterion_03_anticoncentration():
    """Exact verification on 500 certified instances per class, plus the
    tight Hadamard family and the pairwise counterexample closed forms."""
    for i in range(500):
        n = 1 + i % 6
        inst = random_uncorrelated_instance(n, SeededRng(1000 + i))
        assert certify(inst).certified_uncorrelated
        res = verify_uncorrelated(inst)
        assert res.holds
        assert len(res.per_k) == n
        for term in res.per_k:
            assert term.lhs >= term.rhs - EXACT

        inst = random_pairwise_instance(n, SeededRng(2000 + i))
        assert certify(inst).certified_pairwise
        res = verify_pairwise(inst)
        assert res.holds
        for term in res.per_k:
            assert term.lhs >= term.rhs - EXACT

    for n in (2, 4, 8):
        u = verify_uncorrelated(hadamard_instance(n))
        p = verify_pairwise(hadamard_instance(n))
        assert u.lhs == 1.0 and u.rhs == 1.0
        assert p.lhs == 1.0 and p.rhs == 1.0

    for delta in (0.5, 0.1, 0.01):
        rep = pairwise_counterexample(delta)
        assert abs(rep.lhs - 2 * delta / (1 + delta ** 2)) <= EXACT
        assert abs(rep.rhs - (2 + 2 * delta) / (1 + delta ** 2)) <= EXACT


def test_criterion_04_oracle_equivalence():
    """Haar reconstruction equals direct counting on random probes; the
    interval maximum matches quadratic brute force on small instances."""
    rng = SeededRng(4)
    pts = PointStream.uniform(1, 1 << 14, rng.derive("points"))
    geo = interval_signer(pts, rng=rng)
    probe = rng.derive("probes")
    J = geo.max_scale
    for _ in range(500):
        level = probe.randint(J + 1)
        iv = DyadicInterval(level, probe.randint(1 << level))
        dyadic_interval_discrepancy(geo.signs, pts, iv, 0, pts.T)

    rng = SeededRng(5)
    pts2 = PointStream.uniform(2, 1 << 10, rng.derive("points"))
    geo2 = tusnady_signer(pts2, rng=rng)
    probe = rng.derive("probes")
    J2 = geo2.max_scale
    for _ in range(500):
        axes = []
        for _ in range(2):
            level = probe.randint(J2 + 1)
            axes.append(DyadicInterval(level, probe.randint(1 << level)))
        dyadic_box_discrepancy(geo2.signs, pts2, DyadicBox(tuple(axes)),
                               pts2.T)

    for i in range(200):
        r = SeededRng(6000 + i)
        T = 1 + r.randint(64)
        pts = PointStream.uniform(1, T, r.derive("pts"))
        signs = [r.sign() for _ in range(T)]
        best, witness = max_interval_discrepancy(signs, pts, 0, T)
        order = sorted(range(T), key=lambda l: pts.points[l][0])
        prefix = [0]
        for l in order:
            prefix.append(prefix[-1] + signs[l])
        brute = max(abs(prefix[b] - prefix[a])
                    for a in range(T + 1) for b in range(a, T + 1))
        assert best == brute
        from balancer.problems import count_interval
        assert abs(count_interval(signs, pts, witness, T)) == best


def test_criterion_05_adaptive_adversary():
    """Squared drift grows at least (n-1) per step against any signer."""
    for n in (4, 16):
        for algorithm in ("cosh", "random"):
            state = AdversaryState.zero(n)
            engine = CoshSigner(SignerConfig(n=n, s=n))
            coins = SeededRng(0).derive("algo")
            for t in range(1, 513):
                upd = orthogonal_adversary_next(state)
                coords = [c for c, _ in upd.entries]
                vals = [v for _, v in upd.entries]
                if algorithm == "cosh":
                    sign, _ = engine.step(coords, vals)
                else:
                    sign = random_sign(coins)
                state.apply(sign, upd)
                assert state.norm_sq() >= (n - 1) * t, \
                    f"n={n} {algorithm} t={t}: {state.norm_sq()}"


def test_criterion_06_lower_bound_frequency():
    """Scaled Hadamard rows push past k/4 in at least 70% of short runs."""
    t0 = time.time()
    spec = DistributionSpec.hadamard_rows(16)
    for algorithm in ("cosh", "random"):
        rep = lower_bound_experiment(spec, 200, rng=SeededRng(6),
                                     algorithm=algorithm)
        assert rep.k == 4.0
        assert rep.threshold == 1.0
        assert rep.trials == 200
        assert rep.frequency >= 0.7, \
            f"{algorithm}: frequency {rep.frequency}"
    elapsed = time.time() - t0
    assert elapsed < 30.0, f"budget exceeded: {elapsed:.1f}s"


def _interval_max_dyadic(T: int, seed: int, algorithm: str) -> float:
    rng = SeededRng(seed)
    pts = PointStream.uniform(1, T, rng.derive("points"))
    geo = interval_signer(pts, algorithm=algorithm, rng=rng)
    return float(max_dyadic_discrepancy(geo.signs, pts,
                                        max_scale=geo.max_scale)[0])


def test_criterion_07_growth_separation():
    """Random signs grow like sqrt(T); the signer's exponent stays small,
    and it wins the paired comparison on at least 90% of seeds."""
    t0 = time.time()
    grid = [1 << k for k in range(10, 17)]
    exponents = {}
    for algorithm in ("random", "cosh"):
        medians = []
        for T in grid:
            vals = sorted(_interval_max_dyadic(T, seed, algorithm)
                          for seed in range(20))
            medians.append((T, (vals[9] + vals[10]) / 2.0))
        exponents[algorithm] = fit_growth(medians).exponent
    assert 0.4 <= exponents["random"] <= 0.6, exponents
    assert exponents["cosh"] <= 0.2, exponents

    table = compare("interval", ("cosh", "random"), list(range(20)), 1 << 14)
    wins = table.wins("cosh", "random")
    assert wins >= 18, f"signer won only {wins}/20 paired seeds"
    elapsed = time.time() - t0
    assert elapsed < 300.0, f"budget exceeded: {elapsed:.1f}s"


def test_criterion_08_scaling_regressions():
    """Fresh metrics sit within 20% of the frozen constants."""
    table = load_regression_table()
    fresh = compute_regression_metrics()
    assert sorted(fresh) == sorted(table["entries"])
    for key, value in fresh.items():
        ok, expected = check_regression(key, value, table)
        assert ok, f"{key}: fresh {value} vs frozen {expected}"


def test_criterion_09_fractal_gap():
    """Gap factor doubles every 4 levels and the growth side dominates."""
    d = 8.0
    reports = {h: fractal_ratio(h, d) for h in (8, 12, 16, 20, 24)}
    for rep in reports.values():
        assert rep.rhs >= math.sinh(d) - EXACT
    ratios = {h: reports[h + 4].beta / reports[h].beta
              for h in (8, 12, 16, 20)}
    assert all(r >= 2.0 for r in ratios.values()), \
        (f"beta(h+4)/beta(h) below 2: "
         + ", ".join(f"h={h}: {r:.4f}" for h, r in ratios.items()))


def test_criterion_10_potential_tail():
    """The potential stays under n*T^4 in at least 95% of seeded runs."""
    spec = DistributionSpec.hadamard_rows(8).as_finite_support()
    T = 1 << 12
    cap = 8 * float(T) ** 4
    exceed = 0
    for seed in range(100):
        res = run_stream(spec, T, rng=SeededRng(seed), stride=1)
        if max(phi for _, _, phi in res.trace) > cap:
            exceed += 1
    assert exceed / 100 <= 0.05, f"{exceed}/100 runs exceeded the cap"
